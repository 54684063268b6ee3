"""Simple-cycle enumeration, canonical cycle form and cycle-set distances."""

from __future__ import annotations

import csv
import threading
import time
from collections import OrderedDict
from dataclasses import dataclass

from .errors import BudgetExceeded, FingerprintMismatch, InvalidConfig, RepeatedNode, TooShort

DEFAULT_MAX_CYCLES = 500_000
DEFAULT_MAX_MILLIS = 10_000


@dataclass(frozen=True)
class CycleBudget:
    max_cycles: int = DEFAULT_MAX_CYCLES
    max_millis: int = DEFAULT_MAX_MILLIS

    def __post_init__(self):
        if self.max_cycles <= 0 or self.max_millis <= 0:
            raise InvalidConfig("cycle budget limits must be positive")


DEFAULT_BUDGET = CycleBudget()


def canonicalize(nodes):
    """Rotate a cycle so its minimum comes first and orient it so the
    second node is smaller than the last one."""
    seq = [int(v) for v in nodes]
    if len(seq) < 3:
        raise TooShort(f"a cycle needs at least 3 nodes, got {len(seq)}")
    if len(set(seq)) != len(seq):
        raise RepeatedNode(f"cycle {seq} repeats a node")
    k = seq.index(min(seq))
    seq = seq[k:] + seq[:k]
    if seq[1] > seq[-1]:
        seq = [seq[0]] + seq[:0:-1]
    return tuple(seq)


def format_cycle(cycle, one_based=True):
    """``(0, 1, 5)`` -> ``"1-2-6-1"``."""
    off = 1 if one_based else 0
    nodes = [str(v + off) for v in cycle]
    return "-".join(nodes + nodes[:1])


def _two_core(nbr, mask):
    """Largest vertex subset of ``mask`` where every vertex has >= 2
    neighbours inside the subset."""
    changed = True
    while changed:
        changed = False
        m = mask
        while m:
            low = m & -m
            m ^= low
            v = low.bit_length() - 1
            if (nbr[v] & mask).bit_count() < 2:
                mask &= ~low
                changed = True
    return mask


def _enumerate(nbr, n, max_cycles, deadline):
    out = []
    core = _two_core(nbr, (1 << n) - 1)
    steps = 0
    for r in range(n):
        if not (core >> r) & 1:
            continue
        sub = _two_core(nbr, (core >> r) << r)
        if not (sub >> r) & 1:
            continue
        rn = nbr[r] & sub
        firsts = rn
        while firsts:
            low1 = firsts & -firsts
            firsts ^= low1
            p1 = low1.bit_length() - 1
            closers = rn & ~((low1 << 1) - 1)
            if not closers:
                break
            visited = (1 << r) | low1
            path = [r, p1]
            stack = [nbr[p1] & sub & ~visited]
            while stack:
                cand = stack[-1]
                if not cand or not (closers & ~visited):
                    stack.pop()
                    v = path.pop()
                    visited &= ~(1 << v)
                    continue
                low = cand & -cand
                stack[-1] = cand ^ low
                w = low.bit_length() - 1
                path.append(w)
                visited |= low
                if (closers >> w) & 1:
                    out.append(tuple(path))
                    if len(out) > max_cycles:
                        raise BudgetExceeded(len(out) - 1, "max_cycles")
                stack.append(nbr[w] & sub & ~visited)
                steps += 1
                if not steps & 2047 and time.perf_counter() > deadline:
                    raise BudgetExceeded(len(out), "max_millis")
    return out


class CycleSet:
    """Canonical simple cycles of one graph, tagged with its fingerprint."""

    __slots__ = ("cycles", "fingerprint")

    def __init__(self, cycles, fingerprint):
        self.cycles = frozenset(cycles)
        self.fingerprint = fingerprint

    def __len__(self):
        return len(self.cycles)

    def __iter__(self):
        return iter(sorted(self.cycles, key=lambda c: (len(c), c)))

    def __contains__(self, cycle):
        return cycle in self.cycles

    def __eq__(self, other):
        if not isinstance(other, CycleSet):
            return NotImplemented
        return self.cycles == other.cycles

    def __hash__(self):
        return hash(self.cycles)

    def __repr__(self):
        return f"CycleSet({len(self)} cycles)"

    def matches(self, graph):
        return self.fingerprint == graph.fingerprint

    def check(self, graph):
        if not self.matches(graph):
            raise FingerprintMismatch("cycle set was computed for a different graph")


def enumerate_cycles(g, budget=None):
    """All simple cycles of ``g``, each once and in canonical form.

    Raises :class:`BudgetExceeded` when the cycle count or the wall-clock
    limit is passed.
    """
    budget = budget or DEFAULT_BUDGET
    deadline = time.perf_counter() + budget.max_millis / 1000.0
    cycles = _enumerate(g.neighbor_masks, g.n, budget.max_cycles, deadline)
    return CycleSet(cycles, g.fingerprint)


def symmetric_difference(a, b):
    """Number of cycles present in exactly one of the two sets."""
    ca, cb = a.cycles, b.cycles
    if len(ca) > len(cb):
        ca, cb = cb, ca
    shared = sum(1 for c in ca if c in cb)
    return len(ca) + len(cb) - 2 * shared


class CycleCache:
    """Fingerprint-keyed LRU store of cycle sets, safe for concurrent use.

    ``enumerations`` counts actual enumerations; ``hits`` counts lookups that
    were served from memory.
    """

    def __init__(self, maxsize=20_000, budget=None):
        self.maxsize = maxsize
        self.budget = budget or DEFAULT_BUDGET
        self._store = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.enumerations = 0

    def __len__(self):
        return len(self._store)

    def __contains__(self, g):
        return g.fingerprint in self._store

    def get(self, g):
        key = g.fingerprint
        with self._lock:
            cs = self._store.get(key)
            if cs is not None:
                self._store.move_to_end(key)
                self.hits += 1
                return cs
        cs = enumerate_cycles(g, self.budget)
        with self._lock:
            self.enumerations += 1
            prior = self._store.get(key)
            if prior is not None:
                return prior
            self._store[key] = cs
            if self.maxsize is not None and len(self._store) > self.maxsize:
                self._store.popitem(last=False)
        return cs

    def pin(self, cs):
        """Insert a precomputed set (e.g. from a training pool)."""
        with self._lock:
            self._store[cs.fingerprint] = cs

    def clear(self):
        with self._lock:
            self._store.clear()
            self.hits = 0
            self.enumerations = 0


def write_cycle_report(cycle_set, path, one_based=True):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["cycle", "length"])
        for c in cycle_set:
            w.writerow([format_cycle(c, one_based), len(c)])
