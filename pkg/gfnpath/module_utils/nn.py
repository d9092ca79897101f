# -*- coding: utf-8 -*-

#
# Copyright (c) 2024-2026, The gfnpath developers. All rights reserved.
#
# License: Apache 2.0
#

"""Dense network kernel of the flow model.

Tensors are float64 numpy arrays. Every sub-network is an MLP stored in a
flat, ordered parameter dict (``<net>.<layer>.weight`` with shape
(out, in) and ``<net>.<layer>.bias``). Gradients are computed by hand in
reverse mode and follow the same naming.

The model is made of:
    object_encoder  9 -> 2d -> 2d -> d, ReLU
    state_encoder   K d -> K d, linear
    scene_encoder   d -> 2d -> 2d -> d, ReLU, applied to the mean embedding
    flow_head       D -> 2D -> 2D -> 1, LeakyReLU, D = d + K d + d,
                    shared by every object, exponential output
"""

import logging
import struct
from collections import OrderedDict, namedtuple
from dataclasses import dataclass

import numpy as np

from gfnpath.module_utils.exception import (BadMagic, CorruptTensor,
                                            EmptyScene, IncompleteTrajectory,
                                            IndexOutOfRange, Io,
                                            ShapeMismatch, VersionMismatch)

logger = logging.getLogger(__name__)

LEAKY_SLOPE = 0.01
OBJECT_FEATURES = 9

CHECKPOINT_MAGIC = b"GFNPATH1"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class MlpSpec:
    """Layer sizes and one activation per layer of an MLP."""

    name: str
    sizes: tuple
    activations: tuple
    negative_slope: float = LEAKY_SLOPE

    def __post_init__(self):
        if len(self.activations) != len(self.sizes) - 1:
            raise ValueError("%s: %d activations for %d layers" %
                             (self.name, len(self.activations),
                              len(self.sizes) - 1))

    @property
    def n_layers(self):
        return len(self.sizes) - 1

    def weight_name(self, layer):
        return "%s.%d.weight" % (self.name, layer)

    def bias_name(self, layer):
        return "%s.%d.bias" % (self.name, layer)

    def parameter_shapes(self):
        shapes = []
        for layer in range(self.n_layers):
            fan_in, fan_out = self.sizes[layer], self.sizes[layer + 1]
            shapes.append((self.weight_name(layer), (fan_out, fan_in)))
            shapes.append((self.bias_name(layer), (fan_out,)))
        return shapes


MlpCache = namedtuple('MlpCache', ['spec', 'inputs', 'pre', 'squeeze'])


def _activate(spec, name, z):
    if name == 'relu':
        return np.maximum(z, 0.0)
    if name == 'leaky_relu':
        return np.where(z > 0.0, z, spec.negative_slope * z)
    if name == 'identity':
        return z
    raise ValueError("Unknown activation %s" % name)


def _activation_grad(spec, name, z):
    if name == 'relu':
        return (z > 0.0).astype(np.float64)
    if name == 'leaky_relu':
        return np.where(z > 0.0, 1.0, spec.negative_slope)
    if name == 'identity':
        return np.ones_like(z)
    raise ValueError("Unknown activation %s" % name)


def mlp_forward(params, spec, inputs):
    """Run an MLP on a batch of rows (or a single vector).

    Returns:
        (output, cache). The cache keeps each layer input and
        pre-activation for mlp_backward().

    Raises:
        ShapeMismatch: The input width does not match the first layer.
    """
    x = np.asarray(inputs, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != spec.sizes[0]:
        raise ShapeMismatch("%s expects inputs of width %d, got shape %s" %
                            (spec.name, spec.sizes[0], np.shape(inputs)))
    layer_inputs = []
    pre = []
    for layer in range(spec.n_layers):
        weight = params[spec.weight_name(layer)]
        bias = params[spec.bias_name(layer)]
        z = x @ weight.T + bias
        layer_inputs.append(x)
        pre.append(z)
        x = _activate(spec, spec.activations[layer], z)
    out = x[0] if squeeze else x
    return out, MlpCache(spec, layer_inputs, pre, squeeze)


def mlp_backward(params, cache, grad_out):
    """Reverse-mode gradients of an MLP.

    Returns:
        (grad_params, grad_in) where grad_params is keyed like params.
    """
    spec = cache.spec
    g = np.asarray(grad_out, dtype=np.float64)
    if cache.squeeze and g.ndim == 1:
        g = g[None, :]
    if g.shape != cache.pre[-1].shape:
        raise ShapeMismatch("%s: gradient of shape %s for output %s" %
                            (spec.name, np.shape(grad_out),
                             cache.pre[-1].shape))
    grads = {}
    for layer in range(spec.n_layers - 1, -1, -1):
        dz = g * _activation_grad(spec, spec.activations[layer],
                                  cache.pre[layer])
        grads[spec.weight_name(layer)] = dz.T @ cache.inputs[layer]
        grads[spec.bias_name(layer)] = dz.sum(axis=0)
        g = dz @ params[spec.weight_name(layer)]
    grad_in = g[0] if cache.squeeze else g
    return grads, grad_in


@dataclass(frozen=True)
class ModelConfig:
    """Embedding size d and interaction order K of a flow model."""

    d: int = 128
    k: int = 1
    negative_slope: float = LEAKY_SLOPE

    def __post_init__(self):
        if self.d < 1 or self.k < 1:
            raise ValueError("d and k must be >= 1, got d=%d k=%d" %
                             (self.d, self.k))

    @property
    def state_size(self):
        return self.k * self.d

    @property
    def head_size(self):
        return self.d + self.state_size + self.d


def model_specs(config):
    """The four sub-network specs of a config, in parameter order."""
    d = config.d
    head = config.head_size
    slope = config.negative_slope
    return OrderedDict([
        ('object_encoder', MlpSpec('object_encoder',
                                   (OBJECT_FEATURES, 2 * d, 2 * d, d),
                                   ('relu', 'relu', 'identity'), slope)),
        ('state_encoder', MlpSpec('state_encoder',
                                  (config.state_size, config.state_size),
                                  ('identity',), slope)),
        ('scene_encoder', MlpSpec('scene_encoder', (d, 2 * d, 2 * d, d),
                                  ('relu', 'relu', 'identity'), slope)),
        ('flow_head', MlpSpec('flow_head', (head, 2 * head, 2 * head, 1),
                              ('leaky_relu', 'leaky_relu', 'identity'),
                              slope)),
    ])


class FlowModel(object):
    """All learnable parameters of the sampler.

    Attributes:
        config: The ModelConfig.
        specs: Sub-network specs keyed by name.
        params: OrderedDict of float64 arrays.
    """

    def __init__(self, config, params=None):
        self.config = config
        self.specs = model_specs(config)
        if params is None:
            params = OrderedDict(
                (name, np.zeros(shape)) for name, shape in
                self.parameter_shapes())
        self.params = params

    def parameter_shapes(self):
        shapes = []
        for spec in self.specs.values():
            shapes.extend(spec.parameter_shapes())
        return shapes

    @property
    def parameter_count(self):
        return int(sum(np.prod(shape) for _, shape in self.parameter_shapes()))

    @classmethod
    def initialize(cls, config, rng):
        """He-style uniform fan-in initialization.

        Biases start at zero and the last flow-head layer is zero, so every
        initial flow equals exp(0) = 1.
        """
        params = OrderedDict()
        for spec in model_specs(config).values():
            for layer in range(spec.n_layers):
                fan_in, fan_out = spec.sizes[layer], spec.sizes[layer + 1]
                last_head_layer = (spec.name == 'flow_head' and
                                   layer == spec.n_layers - 1)
                if last_head_layer:
                    weight = np.zeros((fan_out, fan_in))
                else:
                    limit = np.sqrt(6.0 / fan_in)
                    weight = rng.uniform(-limit, limit, size=(fan_out, fan_in))
                params[spec.weight_name(layer)] = weight
                params[spec.bias_name(layer)] = np.zeros(fan_out)
        return cls(config, params)

    def copy(self):
        return FlowModel(self.config, OrderedDict(
            (name, value.copy()) for name, value in self.params.items()))

    def zero_grads(self):
        return OrderedDict((name, np.zeros_like(value))
                           for name, value in self.params.items())


def accumulate(total, grads, scale=1.0):
    """total[name] += scale * grads[name] for every name in grads."""
    for name, value in grads.items():
        total[name] += scale * value
    return total


SceneEncoding = namedtuple('SceneEncoding',
                           ['object_embeddings', 'scene_embedding', 'cache'])


def encode_scene(model, canonical_vertices):
    """Encode every object and the whole scene.

    Args:
        model: The FlowModel.
        canonical_vertices: (N, 9) canonical vertex rows.

    Returns:
        SceneEncoding(object_embeddings (N, d), scene_embedding (d,), cache).

    Raises:
        EmptyScene: N == 0.
    """
    inputs = np.asarray(canonical_vertices, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[1] != OBJECT_FEATURES:
        raise ShapeMismatch("Expected (N, 9) canonical vertices, got %s" %
                            (inputs.shape,))
    if len(inputs) == 0:
        raise EmptyScene("Cannot encode a scene without objects.")
    specs = model.specs
    embeddings, object_cache = mlp_forward(model.params,
                                           specs['object_encoder'], inputs)
    pooled = embeddings.mean(axis=0)
    scene_embedding, scene_cache = mlp_forward(model.params,
                                               specs['scene_encoder'], pooled)
    return SceneEncoding(embeddings, scene_embedding,
                         (object_cache, scene_cache))


def _state_input(config, partial, object_embeddings):
    partial = tuple(int(index) for index in partial)
    if len(partial) != config.k:
        raise ShapeMismatch("Partial candidate %s does not have K=%d slots" %
                            (partial, config.k))
    state = np.zeros(config.state_size)
    ended = False
    for slot, index in enumerate(partial):
        if index == -1:
            ended = True
            continue
        if ended:
            raise IncompleteTrajectory("Candidate %s is not prefix-complete."
                                       % (partial,))
        if not 0 <= index < len(object_embeddings):
            raise IndexOutOfRange("Object %d does not exist (N=%d)." %
                                  (index, len(object_embeddings)))
        state[slot * config.d:(slot + 1) * config.d] = object_embeddings[index]
    return state


def encode_state(model, partial, object_embeddings):
    """Embed a partial candidate: selected embeddings in slot order, zeros
    for the unchosen slots, through the linear state encoder."""
    state = _state_input(model.config, partial, object_embeddings)
    out, _ = mlp_forward(model.params, model.specs['state_encoder'], state)
    return out


def _head_inputs(object_embeddings, state_embeddings, scene_embedding):
    """Rows [emb_i | state_k | scene] for every state k and object i."""
    n_objects = len(object_embeddings)
    n_states = len(state_embeddings)
    return np.concatenate([
        np.tile(object_embeddings, (n_states, 1)),
        np.repeat(state_embeddings, n_objects, axis=0),
        np.tile(scene_embedding, (n_states * n_objects, 1)),
    ], axis=1)


def compute_flows(model, object_embeddings, state_embedding, scene_embedding):
    """Positive flow of every object from one state (shared head)."""
    object_embeddings = np.asarray(object_embeddings, dtype=np.float64)
    state_embedding = np.asarray(state_embedding, dtype=np.float64)
    scene_embedding = np.asarray(scene_embedding, dtype=np.float64)
    config = model.config
    if (object_embeddings.ndim != 2 or
            object_embeddings.shape[1] != config.d or
            state_embedding.shape != (config.state_size,) or
            scene_embedding.shape != (config.d,)):
        raise ShapeMismatch("Inconsistent embeddings %s, %s, %s" %
                            (object_embeddings.shape, state_embedding.shape,
                             scene_embedding.shape))
    rows = _head_inputs(object_embeddings, state_embedding[None, :],
                        scene_embedding)
    logits, _ = mlp_forward(model.params, model.specs['flow_head'], rows)
    return np.exp(logits[:, 0])


TrajectoryCache = namedtuple('TrajectoryCache',
                             ['candidate', 'flows', 'state_cache',
                              'head_cache'])


def trajectory_forward(model, encoding, candidate):
    """Flows of the K states visited by a complete candidate.

    State k holds the first k chosen objects.

    Returns:
        (flows (K, N), cache for trajectory_backward()).
    """
    config = model.config
    candidate = tuple(int(index) for index in candidate)
    embeddings = encoding.object_embeddings
    states = np.vstack([
        _state_input(config, candidate[:k] + (-1,) * (config.k - k),
                     embeddings)
        for k in range(config.k)])
    state_embeddings, state_cache = mlp_forward(
        model.params, model.specs['state_encoder'], states)
    rows = _head_inputs(embeddings, state_embeddings,
                        encoding.scene_embedding)
    logits, head_cache = mlp_forward(model.params, model.specs['flow_head'],
                                     rows)
    flows = np.exp(logits[:, 0]).reshape(config.k, len(embeddings))
    return flows, TrajectoryCache(candidate, flows, state_cache, head_cache)


def trajectory_backward(model, encoding, cache, grad_flows):
    """Back-propagate dL/dflows of one trajectory.

    Returns:
        (grads of state_encoder and flow_head, dL/dobject_embeddings,
         dL/dscene_embedding)
    """
    config = model.config
    d = config.d
    n_objects = len(encoding.object_embeddings)
    grad_flows = np.asarray(grad_flows, dtype=np.float64)
    if grad_flows.shape != cache.flows.shape:
        raise ShapeMismatch("Flow gradient of shape %s for flows %s" %
                            (grad_flows.shape, cache.flows.shape))
    grad_logits = (grad_flows * cache.flows).reshape(-1, 1)
    grads, grad_rows = mlp_backward(model.params, cache.head_cache,
                                    grad_logits)
    grad_rows = grad_rows.reshape(config.k, n_objects, config.head_size)
    grad_embeddings = grad_rows[:, :, :d].sum(axis=0)
    grad_states = grad_rows[:, :, d:d + config.state_size].sum(axis=1)
    grad_scene = grad_rows[:, :, d + config.state_size:].sum(axis=(0, 1))

    state_grads, grad_state_inputs = mlp_backward(model.params,
                                                  cache.state_cache,
                                                  grad_states)
    grads.update(state_grads)
    for k in range(config.k):
        for slot in range(k):
            grad_embeddings[cache.candidate[slot]] += \
                grad_state_inputs[k, slot * d:(slot + 1) * d]
    return grads, grad_embeddings, grad_scene


def scene_backward(model, encoding, grad_embeddings, grad_scene):
    """Back-propagate into the scene and object encoders."""
    object_cache, scene_cache = encoding.cache
    grads, grad_pooled = mlp_backward(model.params, scene_cache, grad_scene)
    n_objects = len(encoding.object_embeddings)
    grad_embeddings = grad_embeddings + grad_pooled[None, :] / n_objects
    object_grads, _ = mlp_backward(model.params, object_cache,
                                   grad_embeddings)
    grads.update(object_grads)
    return grads


# Optimizers

class AdamState(object):
    """First and second moments plus the step counter."""

    def __init__(self, m=None, v=None, step=0):
        self.m = m if m is not None else OrderedDict()
        self.v = v if v is not None else OrderedDict()
        self.step = step


def optimizer_step(params, grads, opt_state, lr, beta1=0.9, beta2=0.999,
                   eps=1e-8):
    """One bias-corrected Adam step.

    Returns:
        (new params, new AdamState). The inputs are left untouched.
    """
    step = opt_state.step + 1
    new_params = OrderedDict()
    new_m = OrderedDict()
    new_v = OrderedDict()
    for name, value in params.items():
        grad = grads.get(name)
        if grad is None:
            grad = np.zeros_like(value)
        if grad.shape != value.shape:
            raise ShapeMismatch("Gradient %s has shape %s, parameter %s" %
                                (name, grad.shape, value.shape))
        m = opt_state.m.get(name, np.zeros_like(value))
        v = opt_state.v.get(name, np.zeros_like(value))
        m = beta1 * m + (1.0 - beta1) * grad
        v = beta2 * v + (1.0 - beta2) * grad * grad
        m_hat = m / (1.0 - beta1 ** step)
        v_hat = v / (1.0 - beta2 ** step)
        new_params[name] = value - lr * m_hat / (np.sqrt(v_hat) + eps)
        new_m[name] = m
        new_v[name] = v
    return new_params, AdamState(new_m, new_v, step)


class Adam(object):
    """Adam behind the optimizer interface (step(model, grads))."""

    name = 'adam'

    def __init__(self, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8,
                 state=None):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state = state if state is not None else AdamState()

    def step(self, model, grads):
        model.params, self.state = optimizer_step(
            model.params, grads, self.state, self.lr, self.beta1,
            self.beta2, self.eps)


class Sgd(object):
    """Plain gradient descent, stateless."""

    name = 'sgd'
    state = None

    def __init__(self, lr=1e-4):
        self.lr = lr

    def step(self, model, grads):
        model.params = OrderedDict(
            (name, value - self.lr * grads.get(name, 0.0))
            for name, value in model.params.items())


OPTIMIZERS = {'adam': Adam, 'sgd': Sgd}


# Checkpoints

def _pack_tensor(name, value):
    encoded = name.encode('utf-8')
    value = np.ascontiguousarray(value, dtype='<f8')
    return b"".join([
        struct.pack('<I', len(encoded)), encoded,
        struct.pack('<I', value.ndim),
        struct.pack('<%dQ' % value.ndim, *value.shape),
        value.tobytes(order='C'),
    ])


def save_checkpoint(model, opt_state, path):
    """Write model parameters (and Adam moments if given) to path.

    Layout: magic, u32 version, u32 K, u32 d, u32 tensor count, tensors,
    then optionally one "opt.m.*" and one "opt.v.*" tensor per parameter
    and the u64 step.
    """
    chunks = [CHECKPOINT_MAGIC,
              struct.pack('<IIII', CHECKPOINT_VERSION, model.config.k,
                          model.config.d, len(model.params))]
    for name, value in model.params.items():
        chunks.append(_pack_tensor(name, value))
    if opt_state is not None:
        opt_tensors = []
        for name in model.params:
            opt_tensors.append(_pack_tensor('opt.m.' + name,
                                            opt_state.m.get(
                                                name,
                                                np.zeros_like(
                                                    model.params[name]))))
        for name in model.params:
            opt_tensors.append(_pack_tensor('opt.v.' + name,
                                            opt_state.v.get(
                                                name,
                                                np.zeros_like(
                                                    model.params[name]))))
        chunks.extend(opt_tensors)
        chunks.append(struct.pack('<Q', opt_state.step))
    try:
        with open(path, 'wb') as fp:
            fp.write(b"".join(chunks))
    except (IOError, OSError) as ex:
        raise Io("Unable to write checkpoint %s. %s" % (path, str(ex)))
    logger.debug("Checkpoint written to %s.", path)


class _Reader(object):

    def __init__(self, data):
        self.data = data
        self.offset = 0

    def at_end(self):
        return self.offset == len(self.data)

    def take(self, size):
        if self.offset + size > len(self.data):
            raise CorruptTensor("Checkpoint truncated at byte %d (wanted %d "
                                "more bytes)." % (self.offset, size))
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def tensor(self):
        (name_len,) = self.unpack('<I')
        try:
            name = self.take(name_len).decode('utf-8')
        except UnicodeDecodeError:
            raise CorruptTensor("Tensor name is not valid UTF-8.")
        (ndim,) = self.unpack('<I')
        dims = self.unpack('<%dQ' % ndim)
        count = int(np.prod(dims)) if ndim else 1
        data = np.frombuffer(self.take(8 * count), dtype='<f8')
        return name, data.astype(np.float64).reshape(dims)


def load_checkpoint(path):
    """Read a checkpoint written by save_checkpoint().

    Returns:
        (FlowModel, AdamState or None)
    """
    try:
        with open(path, 'rb') as fp:
            data = fp.read()
    except (IOError, OSError) as ex:
        raise Io("Unable to read checkpoint %s. %s" % (path, str(ex)))
    reader = _Reader(data)
    if len(data) < len(CHECKPOINT_MAGIC) or \
            reader.take(len(CHECKPOINT_MAGIC)) != CHECKPOINT_MAGIC:
        raise BadMagic("%s is not a gfnpath checkpoint." % path)
    version, k, d, count = reader.unpack('<IIII')
    if version != CHECKPOINT_VERSION:
        raise VersionMismatch("Checkpoint version %d, expected %d." %
                              (version, CHECKPOINT_VERSION))
    try:
        model = FlowModel(ModelConfig(d=d, k=k))
    except ValueError as ex:
        raise CorruptTensor(str(ex))
    expected = OrderedDict(model.parameter_shapes())
    params = OrderedDict()
    for _ in range(count):
        name, value = reader.tensor()
        if expected.get(name) != value.shape:
            raise CorruptTensor("Unexpected tensor %s with shape %s." %
                                (name, value.shape))
        params[name] = value
    if list(params) != list(expected):
        raise CorruptTensor("Checkpoint tensors do not match the model "
                            "(K=%d, d=%d)." % (k, d))
    model.params = params

    opt_state = None
    if not reader.at_end():
        opt_state = AdamState()
        for _ in range(2 * count):
            name, value = reader.tensor()
            if name.startswith('opt.m.'):
                target, key = opt_state.m, name[len('opt.m.'):]
            elif name.startswith('opt.v.'):
                target, key = opt_state.v, name[len('opt.v.'):]
            else:
                raise CorruptTensor("Unexpected optimizer tensor %s." % name)
            if expected.get(key) != value.shape:
                raise CorruptTensor("Optimizer tensor %s has shape %s." %
                                    (name, value.shape))
            target[key] = value
        (opt_state.step,) = reader.unpack('<Q')
        if not reader.at_end():
            raise CorruptTensor("Trailing bytes after the optimizer section.")
    logger.debug("Checkpoint %s loaded (K=%d, d=%d).", path, k, d)
    return model, opt_state
