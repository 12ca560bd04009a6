"""Exception types raised across the library."""


class FaeryError(Exception):
    """Base class for all library errors."""


class DimensionMismatchError(FaeryError, ValueError):
    """A vector had a different length than the consumer expected."""

    def __init__(self, what, expected, actual):
        self.what = what
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what}: expected length {expected}, got {actual}")


class EmptyPopulationError(FaeryError, ValueError):
    def __init__(self, msg="population must not be empty"):
        super().__init__(msg)


class UnknownNodeError(FaeryError, KeyError):
    """A lineage node id was not found in the forest."""

    def __init__(self, node_id):
        self.node_id = node_id
        super().__init__(f"unknown forest node id {node_id}")


class RootIndexError(FaeryError, ValueError):
    """A forest root carried a prior index outside the candidate range."""

    def __init__(self, root_index, candidate_count):
        self.root_index = root_index
        self.candidate_count = candidate_count
        super().__init__(
            f"root index {root_index} outside candidate range [0, {candidate_count})"
        )


class TaskEvaluationError(FaeryError, RuntimeError):
    """An episode failed; carries the forest node id being evaluated."""

    def __init__(self, node_id, cause):
        self.node_id = node_id
        super().__init__(f"evaluation of node {node_id} failed: {cause}")


class DatasetError(FaeryError, ValueError):
    """Dataset generation or parsing failed (e.g. not enough distinct mazes)."""


class ConfigError(FaeryError, ValueError):
    """Invalid experiment configuration; collects per-field messages."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class CheckpointError(FaeryError, ValueError):
    """A checkpoint file is malformed or incompatible."""
