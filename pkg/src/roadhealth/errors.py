"""Domain errors raised across the pipeline and service layers."""


class RoadHealthError(Exception):
    """Base class for all domain errors."""


# --- timestamp normalization ---

class MalformedTimestamp(RoadHealthError):
    """Text does not match DD-MM-YYYY HH:MM:SS after repair."""


class InvalidDate(RoadHealthError):
    """Pattern matched but the calendar fields are out of range."""


# --- GPS log ingest ---

class GpsLogError(RoadHealthError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class MalformedRow(GpsLogError):
    pass


class OutOfRangeCoordinate(GpsLogError):
    pass


class NonMonotonicTime(GpsLogError):
    pass


class EmptyTrack(RoadHealthError):
    pass


# --- locate ---

class OutsideTrackSpan(RoadHealthError):
    pass


class GapTooLarge(RoadHealthError):
    def __init__(self, gap_seconds: float):
        super().__init__(f"bracketing GPS gap of {gap_seconds:.1f}s exceeds the allowed maximum")
        self.gap_seconds = gap_seconds


# --- detection ---

class DegenerateBox(RoadHealthError):
    """Bounding box with zero area cannot be graded."""


class MalformedDetectionLine(RoadHealthError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


# --- segments / routing ---

class ProviderUnreachable(RoadHealthError):
    pass


class NoRoute(RoadHealthError):
    pass


class InvalidContract(RoadHealthError):
    pass


class ZeroLengthSegment(RoadHealthError):
    pass


# --- store ---

class NotFound(RoadHealthError):
    pass


class ConflictingWrite(RoadHealthError):
    """Optimistic-concurrency version mismatch."""


class MalformedBBox(RoadHealthError):
    pass


class DuplicateUsername(RoadHealthError):
    pass


# --- notifications ---

class SinkUnreachable(RoadHealthError):
    pass
