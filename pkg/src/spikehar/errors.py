"""Exception types shared across the pipeline stages."""


class SpikeHarError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SpikeHarError):
    """Invalid configuration value or missing required setting."""


class SchemaError(SpikeHarError):
    """Input file does not match the expected column schema."""


class ParseError(SpikeHarError):
    """Malformed cell or row in an input file."""


class InsufficientDataError(SpikeHarError):
    """Input too short for the requested operation."""


class ModelError(SpikeHarError):
    """Network model fails structural validation."""


class SaturationError(SpikeHarError):
    """Neuron state exceeded the 24-bit signed integer range."""

    def __init__(self, layer: int, neuron: int, value: int):
        self.layer = layer
        self.neuron = neuron
        self.value = value
        super().__init__(
            f"state overflow in layer {layer}, neuron {neuron}: "
            f"{value} outside signed 24-bit range"
        )


class TrainingDivergedError(SpikeHarError):
    """Loss became non-finite during training."""


class StageError(SpikeHarError):
    """Wraps a failure inside a named pipeline stage."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
