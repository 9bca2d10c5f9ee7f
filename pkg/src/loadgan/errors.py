"""Exception types shared across the package."""


class LoadGanError(Exception):
    """Base class for all loadgan errors."""

    #: short machine-parsable code, printed by the CLI as "<code>: <message>"
    @property
    def code(self) -> str:
        return type(self).__name__


# corpus construction
class DegenerateWeek(LoadGanError):
    """Weekly window with non-finite values or non-positive mean."""


class DegenerateRange(LoadGanError):
    """Min-max scaling attempted on a constant matrix."""


class TooShort(LoadGanError):
    """Hourly series shorter than one aligned week."""


class EmptyInput(LoadGanError):
    """Operation received no data to work on."""


class ClusteringDegenerate(LoadGanError):
    """Load features carry no spread, clusters are meaningless."""


class BadConfig(LoadGanError):
    """Configuration value outside its allowed range."""


class IngestError(LoadGanError):
    """Raw-series CSV violates the ingestion contract."""


# nn engine
class ShapeMismatch(LoadGanError):
    """Operand shapes incompatible with the requested operation."""


class NumericError(LoadGanError):
    """NaN or Inf produced by a numeric operation."""


class CheckpointError(LoadGanError):
    """Checkpoint file is malformed, truncated or of the wrong kind."""


# grid mapping
class ParseError(LoadGanError):
    """Malformed grid-case text."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", col {col}" if col is not None else "") + ")"
        super().__init__(message + where)


class MissingSection(LoadGanError):
    """Required matrix block absent from the grid-case text."""


class TopologyError(LoadGanError):
    """Parsed grid case violates a structural invariant."""


class UnassignedLoad(LoadGanError):
    """A nonzero PQ load bus has no profile assigned."""


class DegenerateProfile(LoadGanError):
    """Profile with zero peak cannot be peak-matched."""


class SingularJacobian(LoadGanError):
    """Newton step could not be solved."""


class Diverged(LoadGanError):
    """Power flow did not converge (informational; solvers usually return a flagged solution instead)."""


# cli
class UnknownLabel(LoadGanError):
    """Label string outside the canonical season/type vocabulary."""
