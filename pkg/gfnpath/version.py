VERSION = "v0.3.0"
DATE = "2026-Oct-16"
