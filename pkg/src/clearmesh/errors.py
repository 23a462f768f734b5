"""Exception types shared across the package.

Exit-code mapping used by the CLI: InputError -> 1, InfeasibleQueryError -> 2,
InternalInvariantError -> 3.
"""


class ClearmeshError(Exception):
    """Base class for all package errors."""


class InputError(ClearmeshError):
    """Invalid obstacle input: crossing segments, duplicate points, open region,
    bad indices, malformed scenario text."""


class InfeasibleQueryError(ClearmeshError):
    """A query that cannot be satisfied: endpoint outside the region, endpoint
    too close to an obstacle, or no channel at the requested clearance."""


class InternalInvariantError(ClearmeshError):
    """A structural invariant of the mesh or an algorithm was violated.

    Raised instead of silently producing wrong output; indicates a bug or an
    input that slipped past validation.
    """
