"""Exception types raised across the package."""


class GrainTouchError(Exception):
    """Base class for all errors raised by graintouch."""


class GrainValidationError(GrainTouchError, ValueError):
    """A grain or schedule field violates its invariant.

    ``field`` names the offending attribute.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class DurationOutOfRange(GrainValidationError):
    pass


class NegativeAmplitude(GrainValidationError):
    pass


class NonPositiveFrequency(GrainValidationError):
    pass


class OverlapError(GrainValidationError):
    pass


class ScheduleError(GrainValidationError):
    pass


class CycleFitError(GrainTouchError, ValueError):
    pass


class UnderSampledCarrier(GrainTouchError, ValueError):
    pass


class RenderError(GrainTouchError):
    """Wraps a per-grain failure with the index of the grain that caused it."""

    def __init__(self, grain_index, cause):
        super().__init__(f"grain {grain_index}: {cause}")
        self.grain_index = grain_index
        self.cause = cause


class NegativeEmissionTime(GrainTouchError, ValueError):
    pass


class SilentTrack(GrainTouchError, ValueError):
    pass


class UnstableIntegration(GrainTouchError, ArithmeticError):
    pass


class ExcludedCondition(GrainTouchError, ValueError):
    pass


class FrameError(GrainTouchError, ValueError):
    pass


class BadMagic(FrameError):
    pass


class TruncatedFrame(FrameError):
    pass


class NonFiniteSample(FrameError):
    pass


class SinkClosed(GrainTouchError):
    """The sink stopped accepting bytes mid-stream.

    ``last_seq`` maps each channel to the last sequence number the sink
    accepted (``None`` if nothing on that channel got through).
    """

    def __init__(self, last_seq, frames_sent):
        super().__init__(f"sink closed; last accepted seq per channel: {last_seq}")
        self.last_seq = last_seq
        self.frames_sent = frames_sent


class ConfigError(GrainTouchError, ValueError):
    pass


class TrackFormatError(GrainTouchError, ValueError):
    pass
