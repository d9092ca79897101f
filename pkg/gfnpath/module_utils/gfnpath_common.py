# -*- coding: utf-8 -*-

#
# Copyright (c) 2024-2026, The gfnpath developers. All rights reserved.
#
# License: Apache 2.0
#

# Standard library imports
from argparse import ArgumentParser, ArgumentTypeError
import csv
import logging
import math
import os
import shlex
import sys

from gfnpath.module_utils import configuration as cfg
from gfnpath.module_utils.exception import BadFlag, Io, RC_GENERIC

try:
    import yaml
except ImportError:
    yaml = None


class ModuleDocFragment(object):
    """Documentation fragments for the options shared by subcommands.

    Attributes:
        LOGGING_DOCUMENTATION: The logging-related options.
        RUN_DOCUMENTATION: Seeding and worker options.
        CANYON_DOCUMENTATION: Street canyon generator options.
        MODEL_DOCUMENTATION: Flow model size options.
    """

    LOGGING_DOCUMENTATION = '''
options:
  logdir:
    description:
      - The path to a directory, on the local machine, where the log file
        will be written. The file is named C(<logdir>/<subcommand>.log).
      - This option is mutually exclusive with the I(logfile) option.
    type: path
  logfile:
    description:
      - The path to a file, on the local machine, where logging information
        will be appended.
      - This option is mutually exclusive with the I(logdir) option.
    type: path
  level:
    description:
      - The level of information to be logged when no -v flag is given.
    type: str
    choices: [INFO, DEBUG, WARNING, ERROR, CRITICAL]
  verbosity:
    description:
      - Increase logging, INFO with -v and DEBUG with -vv.
    type: count
'''

    RUN_DOCUMENTATION = '''
options:
  seed:
    description:
      - Seed of every random stream of the run.
    type: int
    default: 0
  threads:
    description:
      - Maximum number of worker threads.
    type: int
    default: 1
'''

    CANYON_DOCUMENTATION = '''
options:
  buildings_per_side:
    description:
      - Number of building slots on each side of the street.
    type: int
    default: 5
  street_width:
    description:
      - Width of the street in meters.
    type: float
    default: 20.0
  footprint_min:
    description:
      - Smallest building side in meters.
    type: float
    default: 10.0
  footprint_max:
    description:
      - Largest building side in meters.
    type: float
    default: 20.0
  gap_min:
    description:
      - Smallest gap between neighbouring buildings in meters.
    type: float
    default: 2.0
  gap_max:
    description:
      - Largest gap between neighbouring buildings in meters.
    type: float
    default: 8.0
  height_min:
    description:
      - Lowest building height in meters.
    type: float
    default: 10.0
  height_max:
    description:
      - Highest building height in meters.
    type: float
    default: 40.0
  keep_min:
    description:
      - Lower bound of the per-scene probability of keeping a building.
    type: float
    default: 0.5
  keep_max:
    description:
      - Upper bound of the per-scene probability of keeping a building.
    type: float
    default: 1.0
  ground:
    description:
      - Whether the ground plane is part of the scene.
    type: str
    choices: [always, random, never]
    default: always
  region:
    description:
      - Region where TX and RX are placed.
    type: str
    choices: [canyon, whole]
    default: canyon
  tx_height_min:
    description:
      - Lowest TX height in meters.
    type: float
    default: 2.0
  tx_height_max:
    description:
      - Highest TX height in meters.
    type: float
    default: 50.0
  rx_height_min:
    description:
      - Lowest RX height in meters.
    type: float
    default: 1.0
  rx_height_max:
    description:
      - Highest RX height in meters.
    type: float
    default: 2.0
'''

    MODEL_DOCUMENTATION = '''
options:
  d:
    description:
      - Embedding size of the flow model.
    type: int
    default: 128
  k:
    description:
      - Interaction order K.
    type: int
    default: 1
'''


# Shared argument specs, merged by GfnPathModule.
logging_spec = dict(
    logfile=dict(type='path', required=False, default=None),
    logdir=dict(type='path', required=False, default=None),
    level=dict(choices=[None, 'INFO', 'DEBUG', 'WARNING', 'ERROR',
                        'CRITICAL'],
               required=False,
               default=None),
    verbosity=dict(type='count', required=False, default=0, aliases=['v']),
)

logging_mutually_exclusive = [['logfile', 'logdir']]

run_spec = dict(
    seed=dict(type='int', required=False, default=0),
    threads=dict(type='int', required=False, default=1),
)

canyon_spec = dict(
    buildings_per_side=dict(type='int', required=False, default=5),
    street_width=dict(type='float', required=False, default=20.0),
    footprint_min=dict(type='float', required=False, default=10.0),
    footprint_max=dict(type='float', required=False, default=20.0),
    gap_min=dict(type='float', required=False, default=2.0),
    gap_max=dict(type='float', required=False, default=8.0),
    height_min=dict(type='float', required=False, default=10.0),
    height_max=dict(type='float', required=False, default=40.0),
    keep_min=dict(type='float', required=False, default=0.5),
    keep_max=dict(type='float', required=False, default=1.0),
    ground=dict(type='str', required=False, default='always',
                choices=['always', 'random', 'never']),
    region=dict(type='str', required=False, default='canyon',
                choices=['canyon', 'whole']),
    tx_height_min=dict(type='float', required=False, default=2.0),
    tx_height_max=dict(type='float', required=False, default=50.0),
    rx_height_min=dict(type='float', required=False, default=1.0),
    rx_height_max=dict(type='float', required=False, default=2.0),
)

model_spec = dict(
    d=dict(type='int', required=False, default=128),
    k=dict(type='int', required=False, default=1),
)

# Library loggers that share the subcommand's level and file handler.
additional_logger_names = ['gfnpath.module_utils']

# FileHandlers attached by previous GfnPathModule instances in this process.
_file_handlers = []


def _int_value(value):
    """int() that also accepts integral scientific notation such as 1e6."""
    try:
        return int(value)
    except ValueError:
        pass
    try:
        number = float(value)
    except ValueError:
        raise ArgumentTypeError("invalid int value: %r" % value)
    if not number.is_integer():
        raise ArgumentTypeError("invalid int value: %r" % value)
    return int(number)


def _float_value(value):
    try:
        number = float(value)
    except ValueError:
        raise ArgumentTypeError("invalid float value: %r" % value)
    if not math.isfinite(number):
        raise ArgumentTypeError("non-finite float value: %r" % value)
    return number


_TYPE_CONVERTERS = {
    'int': _int_value,
    'float': _float_value,
    'str': str,
    'path': os.path.expanduser,
}


def format_cell(value):
    """CSV text of one value; None and NaN become 'undef'."""
    if value is None:
        return 'undef'
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        if math.isnan(value):
            return 'undef'
        return repr(value)
    if hasattr(value, 'item'):
        return format_cell(value.item())
    return str(value)


def write_csv(path, header, rows, cmdline=None, mode='w'):
    """Write rows to path, preceded by '# cmdline:' and the header line.

    Raises:
        Io: path cannot be written.
    """
    try:
        with open(path, mode, newline='') as fp:
            if cmdline is not None:
                fp.write('# cmdline: %s\n' % cmdline)
            writer = csv.writer(fp, lineterminator='\n')
            if header is not None:
                writer.writerow(header)
            for row in rows:
                writer.writerow([format_cell(value) for value in row])
    except (IOError, OSError) as ex:
        raise Io("Unable to write %s. %s" % (path, str(ex)))


def append_csv(path, rows):
    write_csv(path, None, rows, mode='a')


def read_csv(path):
    """Read a CSV written by write_csv().

    Returns:
        (header, rows) with every cell as a string. Comment lines are skipped.
    """
    try:
        with open(path, 'r', newline='') as fp:
            lines = [line for line in fp if not line.startswith('#')]
    except (IOError, OSError) as ex:
        raise Io("Unable to read %s. %s" % (path, str(ex)))
    records = list(csv.reader(lines))
    if not records:
        raise Io("%s holds no header line." % path)
    return records[0], records[1:]


class GfnPathModule(object):
    """Base of every subcommand.

    Merges the subcommand's argument_spec with the shared specs, parses the
    command line, checks third party libraries and sets up logging.

    Attributes:
        name: The subcommand name.
        params: Parsed option values keyed by option name.
        cmdline: The command line, recorded verbatim in output CSVs.
        logger: A LoggerAdapter prefixing messages with [<name>].

    Public Methods:
        exit_json: Print the results and exit 0.
        fail_json: Print the failure and exit with its return code.
        bad_flag: Raise BadFlag unless a condition holds.
    """

    def __init__(self,
                 name,
                 argument_spec=None,
                 mutually_exclusive=None,
                 documentation=None,
                 argv=None,
                 min_numpy_version=cfg.MIN_NUMPY_VERSION,
                 min_yaml_version=cfg.MIN_YAML_VERSION):
        """Initialize a new GfnPathModule instance.

        Args:
            name: Subcommand name, used for the logger and --logdir files.
            argument_spec: Subcommand options in addition to logging_spec
                           and run_spec.
            mutually_exclusive: Lists of options that exclude each other.
            documentation: The subcommand's DOCUMENTATION YAML string.
            argv: Arguments after the subcommand name (default sys.argv).
            min_numpy_version: Minimum numpy version required.
            min_yaml_version: Minimum PyYAML version required.
        """
        self.name = name
        self.logger = None
        argument_spec = dict(argument_spec or {})
        argument_spec.update(logging_spec)
        argument_spec.update(run_spec)
        mutually_exclusive = list(mutually_exclusive or [])
        mutually_exclusive += logging_mutually_exclusive
        self.argument_spec = argument_spec

        # check software compatibility for the 3rd party libraries used
        ret_output = cfg.check_sw_compatibility(min_numpy_version,
                                                min_yaml_version)
        if ret_output != 'success':
            self.fail_json(msg="%s" % ret_output)

        if argv is None:
            argv = sys.argv[2:]
        argv = list(argv)
        self.cmdline = ' '.join(['gfnpath', name] +
                                [shlex.quote(arg) for arg in argv])
        self.option_docs = self._option_docs(documentation)
        parser = self._build_parser(argument_spec, mutually_exclusive)
        self.params = vars(parser.parse_args(argv))

        # Setup logging.
        self.logger = self._setup_logging()
        self.logger.debug("Command line: %s", self.cmdline)

    def _option_docs(self, documentation):
        """Merge the option descriptions of the module and the fragments."""
        docs = {}
        for text in (ModuleDocFragment.LOGGING_DOCUMENTATION,
                     ModuleDocFragment.RUN_DOCUMENTATION,
                     ModuleDocFragment.CANYON_DOCUMENTATION,
                     ModuleDocFragment.MODEL_DOCUMENTATION,
                     documentation):
            if not text:
                continue
            parsed = yaml.safe_load(text) or {}
            docs.update(parsed.get('options') or {})
            if text is documentation:
                self.short_description = parsed.get('short_description')
        return docs

    def _help(self, option):
        description = self.option_docs.get(option, {}).get('description')
        if isinstance(description, list):
            description = ' '.join(description)
        if description:
            description = description.replace('%', '%%')
        return description

    def _build_parser(self, argument_spec, mutually_exclusive):
        parser = ArgumentParser(prog='gfnpath %s' % self.name,
                                description=getattr(self,
                                                    'short_description',
                                                    None))
        exclusive = dict()
        for group in mutually_exclusive:
            mutex = parser.add_mutually_exclusive_group()
            for option in group:
                exclusive[option] = mutex
        for option, spec in sorted(argument_spec.items()):
            target = exclusive.get(option, parser)
            flags = ['--' + option.replace('_', '-')]
            for alias in spec.get('aliases', []):
                flags.append('-' + alias if len(alias) == 1 else
                             '--' + alias.replace('_', '-'))
            kwargs = dict(dest=option, help=self._help(option))
            opt_type = spec.get('type', 'str')
            default = spec.get('default')
            if opt_type == 'count':
                kwargs.update(action='count', default=default or 0)
            elif opt_type == 'bool':
                if default:
                    flags = ['--no-' + option.replace('_', '-')]
                    kwargs.update(action='store_false', default=True)
                else:
                    kwargs.update(action='store_true', default=False)
            else:
                elements = spec.get('elements', 'str') \
                    if opt_type == 'list' else opt_type
                kwargs.update(type=_TYPE_CONVERTERS[elements],
                              default=default)
                if opt_type == 'list':
                    kwargs['nargs'] = '+'
                choices = [choice for choice in spec.get('choices') or []
                           if choice is not None]
                if choices:
                    kwargs['choices'] = choices
                if spec.get('required'):
                    kwargs['required'] = True
            target.add_argument(*flags, **kwargs)
        return parser

    def bad_flag(self, condition, msg):
        """Raise BadFlag with msg unless condition is true."""
        if not condition:
            raise BadFlag(msg)

    def exit_json(self, **kwargs):
        """Print the results as YAML on stdout and exit 0."""
        kwargs.setdefault('changed', False)
        kwargs.setdefault('failed', False)
        if self.logger is not None:
            self.logger.debug("Exit JSON: %s", kwargs)
        sys.stdout.write(yaml.safe_dump(kwargs, default_flow_style=False,
                                        sort_keys=True))
        sys.stdout.flush()
        sys.exit(0)

    def fail_json(self, **kwargs):
        """Print the failure as YAML on stderr and exit with rc.

        Args:
            msg: The failure message.
            rc: The exit code, RC_GENERIC by default.
        """
        kwargs['failed'] = True
        rc = kwargs.setdefault('rc', RC_GENERIC)
        if self.logger is not None:
            self.logger.debug("Fail JSON: %s", kwargs)
        if yaml is not None:
            text = yaml.safe_dump(kwargs, default_flow_style=False,
                                  sort_keys=True)
        else:
            text = "failed: true\nmsg: %s\nrc: %d\n" % (kwargs.get('msg'), rc)
        sys.stderr.write(text)
        sys.stderr.flush()
        sys.exit(rc)

    def _setup_logging(self):
        """Setup logging for the subcommand.

        Performs several tasks to setup logging for the subcommand:
        1) Creating a Logger instance object for the name
           gfnpath.module.<name>.
        2) Sets the level for the Logger object depending on -v[v] and
           --level.
        3) Sets the same level for the names in additional_logger_names.
        4) If the logfile or logdir option is specified, attach a FileHandler
           instance which logs messages from gfnpath.module.<name> or any of
           the names in additional_logger_names.

        Returns:
            LoggerAdapter for the name gfnpath.module.<name>.
        """

        class CustomAdapter(logging.LoggerAdapter):
            """
            Prepend the subcommand name, in brackets, to the log message.
            """

            def process(self, msg, kwargs):
                return '[%s] %s' % (self.extra['subcommand'], msg), kwargs

        # Default level to log.
        level = logging.WARNING
        verbosity = self.params.get('verbosity') or 0
        if verbosity == 1:
            level = logging.INFO
        elif verbosity > 1:
            level = logging.DEBUG
        elif self.params.get('level') is not None:
            level = getattr(logging, self.params.get('level'))
        logger = logging.getLogger('gfnpath.module.' + self.name)
        # Attach the NullHandler to avoid any errors if no logging is needed.
        if not any(isinstance(h, logging.NullHandler)
                   for h in logger.handlers):
            logger.addHandler(logging.NullHandler())
        logger.setLevel(level)
        for name in additional_logger_names:
            logging.getLogger(name).setLevel(level)

        # Handlers of an earlier subcommand in the same process.
        while _file_handlers:
            handler = _file_handlers.pop()
            for name in ['gfnpath.module.' + self.name] + \
                    additional_logger_names:
                logging.getLogger(name).removeHandler(handler)
            handler.close()

        # Get the name of the logfile based on logfile or logdir options.
        logfile = None
        if self.params.get('logfile') is not None:
            logfile = self.params.get('logfile')
        elif self.params.get('logdir') is not None:
            logfile = os.path.normpath(os.path.join(self.params.get('logdir'),
                                                    self.name + '.log'))
        if logfile is not None:
            try:
                handler = logging.FileHandler(logfile, mode='a')
                handler.setLevel(level)
                formatter = logging.Formatter(
                    '%(asctime)s - %(name)s - %(levelname)s - %(message)s')
                handler.setFormatter(formatter)
                logger.addHandler(handler)
                for name in additional_logger_names:
                    logging.getLogger(name).addHandler(handler)
                _file_handlers.append(handler)
            except IOError as ex:
                self.fail_json(msg="Unable to open the log file %s. %s" %
                                   (logfile, str(ex)), rc=Io.rc)
        return CustomAdapter(logger, {'subcommand': self.name})


def canyon_params(params):
    """CanyonParams from parsed canyon_spec options.

    Raises:
        BadFlag: The values are inconsistent (inverted ranges, ...).
    """
    from gfnpath.module_utils.scenes import CanyonParams
    try:
        return CanyonParams(
            n_buildings_per_side=params['buildings_per_side'],
            street_width=params['street_width'],
            footprint_min=params['footprint_min'],
            footprint_max=params['footprint_max'],
            gap_min=params['gap_min'],
            gap_max=params['gap_max'],
            height_min=params['height_min'],
            height_max=params['height_max'],
            keep_min=params['keep_min'],
            keep_max=params['keep_max'],
            include_ground=params['ground'],
            sampling_region=params['region'],
            tx_height_min=params['tx_height_min'],
            tx_height_max=params['tx_height_max'],
            rx_height_min=params['rx_height_min'],
            rx_height_max=params['rx_height_max'])
    except ValueError as ex:
        raise BadFlag(str(ex))
