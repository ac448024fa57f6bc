from typing import Optional


class HybridFlightException(Exception):
    """Base exception for hybrid flight errors."""


class ImproperlyConfigured(HybridFlightException):
    """Exception raised when a framework setting is invalid."""


class BadConfig(HybridFlightException):
    """Exception raised when a mission config cannot be parsed or validated."""


# Core model


class NonFinite(HybridFlightException, ValueError):
    """Exception raised when a value that must be finite is NaN or infinite."""


class NonUnitQuaternion(HybridFlightException, ValueError):
    """Exception raised when a quaternion's norm deviates from 1 beyond tolerance."""


class UnknownMode(HybridFlightException, ValueError):
    """Exception raised when a flight mode name is not recognised."""


class InvalidCommand(HybridFlightException, ValueError):
    """Exception raised when a command's arguments do not match its opcode."""


# Bridge


class FrameError(HybridFlightException):
    """Base exception for bridge frame encoding and decoding errors."""


class PayloadTooLarge(FrameError):
    """Exception raised when a payload does not fit the 16-bit length field."""


class BadMagic(FrameError):
    """Exception raised when a frame does not start with the bridge magic."""


class BadVersion(FrameError):
    """Exception raised when a frame carries an unsupported version."""


class TruncatedFrame(FrameError):
    """Exception raised when a datagram is shorter than the frame it declares."""


class LengthMismatch(FrameError):
    """Exception raised when a datagram is longer than the frame it declares."""


class CrcMismatch(FrameError):
    """Exception raised when the stored CRC does not match the frame contents."""


class UnknownMsgType(FrameError):
    """Exception raised when a frame's message type is not defined."""


class TransportUnavailable(HybridFlightException):
    """Exception raised when a transport endpoint cannot be opened."""


# Flight core


class NonMonotonicClock(HybridFlightException):
    """Exception raised when the scheduler is ticked without time advancing."""


class DuplicateCommandId(HybridFlightException):
    """Exception raised when a command id has already been dispatched."""


class UnknownOpcode(HybridFlightException):
    """Exception raised when a command carries an undefined opcode."""


class UnknownChannel(HybridFlightException):
    """Exception raised when writing or reading an unregistered telemetry
    channel."""


# Perception and autopilot


class OutOfRange(HybridFlightException, ValueError):
    """Exception raised when a trajectory is evaluated outside its time span."""


class NegativeDt(HybridFlightException, ValueError):
    """Exception raised when dynamics are stepped with a negative time step."""


# Analysis


class AnalysisError(HybridFlightException):
    """Base exception for log loading and analysis errors."""


class _LineError(AnalysisError):
    """An analysis error tied to a line of an input file."""

    def __init__(self, line: int, reason: str = "", source: Optional[str] = None):
        self.line = line
        self.reason = reason
        self.source = source
        where = f"{source}:" if source else ""
        message = f"{where}line {line}: {self.describe()}"
        if reason:
            message += f" ({reason})"
        super().__init__(message)

    def describe(self) -> str:
        return "error"


class MalformedRow(_LineError):
    """Exception raised when a CSV row cannot be parsed."""

    def describe(self) -> str:
        return "malformed row"


class DuplicateTimestamp(_LineError):
    """Exception raised when two vision samples share a timestamp."""

    def describe(self) -> str:
        return "duplicate timestamp"


class EmptyLog(AnalysisError):
    """Exception raised when a log holds no usable rows."""


class TooFewSamples(AnalysisError):
    """Exception raised when a computation needs more samples than provided."""


class EmptyWindow(AnalysisError):
    """Exception raised when the active window contains no time or samples."""
