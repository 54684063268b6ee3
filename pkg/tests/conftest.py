"""Shared independent oracles for the test suite."""

from itertools import combinations, permutations

import numpy as np
import pytest

from snfcycles.graphs import make_graph


def brute_force_cycles(g):
    """Every simple cycle, found by trying all vertex orderings."""
    found = set()
    for k in range(3, g.n + 1):
        for subset in combinations(range(g.n), k):
            first = subset[0]
            for perm in permutations(subset[1:]):
                seq = (first,) + perm
                if seq[1] > seq[-1]:
                    continue
                if all(g.has_edge(seq[i], seq[(i + 1) % k]) for i in range(k)):
                    found.add(seq)
    return found


def oracle_tree(X, r, depth, min_leaf):
    """Recursive exact greedy regression tree (reference implementation)."""

    def build(idx, d):
        val = r[idx].mean()
        if d == depth or len(idx) < 2 * min_leaf:
            return ("leaf", val)
        best = (1e-12, None)
        tot, n = r[idx].sum(), len(idx)
        for f in range(X.shape[1]):
            vals = sorted(set(X[idx, f]))
            for a, b in zip(vals[:-1], vals[1:]):
                thr = (a + b) / 2
                thr = thr if thr < b else a
                L, R = idx[X[idx, f] <= thr], idx[X[idx, f] > thr]
                if len(L) < min_leaf or len(R) < min_leaf:
                    continue
                gain = r[L].sum() ** 2 / len(L) + r[R].sum() ** 2 / len(R) - tot ** 2 / n
                if gain > best[0] + 1e-12:
                    best = (gain, (f, thr, L, R))
        if best[1] is None:
            return ("leaf", val)
        f, thr, L, R = best[1]
        return ("split", f, thr, build(L, d + 1), build(R, d + 1))

    return build(np.arange(len(X)), 0)


def oracle_apply(tree, x):
    while tree[0] == "split":
        tree = tree[3] if x[tree[1]] <= tree[2] else tree[4]
    return tree[1]


def random_graph(n, p, rng):
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    return make_graph(n, [e for e in pairs if rng.random() < p])


@pytest.fixture
def figure1():
    # cycles 1-2-6-1 and 1-3-5-4-1 in 1-based labels
    return make_graph(6, [(0, 1), (1, 5), (0, 5), (0, 2), (2, 4), (3, 4), (0, 3)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


@pytest.fixture
def acceptance():
    def record(number, title, ok, detail):
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
