"""Exception types raised across the package."""


class SnfError(Exception):
    """Base class for all package errors."""


class GraphError(SnfError, ValueError):
    pass


class SelfLoop(GraphError):
    def __init__(self, node):
        super().__init__(f"self-loop on node {node}")
        self.node = node


class NodeOutOfRange(GraphError):
    def __init__(self, node, n):
        super().__init__(f"node {node} outside [0, {n})")
        self.node = node


class DuplicateEdge(GraphError):
    def __init__(self, i, j):
        super().__init__(f"duplicate edge ({i}, {j})")
        self.edge = (i, j)


class SpaceTooLarge(SnfError, ValueError):
    def __init__(self, n, limit=6):
        super().__init__(
            f"graph space on n={n} nodes has 2^{n * (n - 1) // 2} members; "
            f"exhaustive enumeration is limited to n <= {limit}"
        )
        self.n = n


class InvalidSpec(SnfError, ValueError):
    pass


class InvalidConfig(SnfError, ValueError):
    pass


class OutOfRange(SnfError, ValueError):
    pass


class ParseError(SnfError, ValueError):
    def __init__(self, message, line=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)
        self.line = line
        self.field = field


class SchemaMismatch(SnfError, ValueError):
    pass


class SizeMismatch(SnfError, ValueError):
    def __init__(self, n_a, n_b):
        super().__init__(f"graphs have different node counts: {n_a} vs {n_b}")


class FingerprintMismatch(SnfError, ValueError):
    pass


class TooShort(SnfError, ValueError):
    pass


class RepeatedNode(SnfError, ValueError):
    pass


class BudgetExceeded(SnfError, RuntimeError):
    """Cycle enumeration ran past its cycle-count or wall-clock budget.

    ``found_so_far`` is the number of cycles emitted before the abort and
    ``index`` optionally identifies the offending graph in a batch.
    """

    def __init__(self, found_so_far, reason="cycles", index=None):
        msg = f"cycle budget exceeded ({reason}) after {found_so_far} cycles"
        if index is not None:
            msg += f" on graph {index}"
        super().__init__(msg)
        self.found_so_far = found_so_far
        self.reason = reason
        self.index = index


class EmptySample(SnfError, ValueError):
    pass


class EmptyTrace(SnfError, ValueError):
    pass


class NotSymmetric(SnfError, ValueError):
    pass


class LabelMismatch(SnfError, ValueError):
    pass


class DegenerateDataWarning(UserWarning):
    pass
