"""Lovasz local lemma bounds and exact enumeration oracles.

The bound engines never raise when the lemma's hypothesis fails; they return
an :class:`LllBound` whose ``status`` is ``"condition-violation"`` so callers
can chain attempts. The oracles enumerate a finite outcome space exactly.
"""

import math
from dataclasses import dataclass, field

import numpy as np

E = math.e
MAX_LOPSIDED_EVENTS = 20
BISECTION_TOL = 1e-14
BISECTION_MAX_ITER = 200


@dataclass(frozen=True)
class Event:
    name: str
    outcomes: frozenset

    def __post_init__(self):
        object.__setattr__(self, "outcomes", frozenset(int(o) for o in self.outcomes))


@dataclass
class JointDistribution:
    probs: np.ndarray
    events: list = field(default_factory=list)

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float).ravel()
        if self.probs.size == 0:
            raise ValueError("distribution needs at least one outcome")
        if np.any(self.probs < 0):
            raise ValueError("probabilities must be non-negative")
        if abs(self.probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {self.probs.sum():.15g}, not 1")
        for ev in self.events:
            if any(o < 0 or o >= self.outcome_count for o in ev.outcomes):
                raise ValueError(f"event {ev.name!r} refers to outcomes outside the space")

    @property
    def outcome_count(self):
        return self.probs.size

    def indicator(self, i):
        mask = np.zeros(self.outcome_count, dtype=bool)
        mask[list(self.events[i].outcomes)] = True
        return mask

    def probability(self, i):
        return float(self.probs[self.indicator(i)].sum())


@dataclass(frozen=True)
class DependencyGraph:
    gamma: tuple

    def __post_init__(self):
        gamma = tuple(frozenset(int(j) for j in g) for g in self.gamma)
        n = len(gamma)
        for i, g in enumerate(gamma):
            if i in g:
                raise ValueError(f"event {i} listed in its own neighborhood")
            if any(j < 0 or j >= n for j in g):
                raise ValueError(f"neighborhood of {i} refers to unknown events")
        object.__setattr__(self, "gamma", gamma)

    @property
    def n(self):
        return len(self.gamma)

    @classmethod
    def empty(cls, n):
        return cls(tuple(frozenset() for _ in range(n)))

    def is_symmetric(self):
        return all(i in self.gamma[j] for i, g in enumerate(self.gamma) for j in g)

    def max_degree(self):
        return max((len(g) for g in self.gamma), default=0)


@dataclass(frozen=True)
class LllAssignment:
    c: float
    x: tuple

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        if self.c < 1:
            raise ValueError("c must be at least 1")
        if any(v < 0 or v >= 1.0 / self.c for v in self.x):
            raise ValueError("every x_i must lie in [0, 1/c)")


@dataclass
class LllBound:
    status: str
    value: float = None
    failing_index: int = None
    detail: str = ""

    @property
    def ok(self):
        return self.status == "ok"

    def as_dict(self):
        return {"status": self.status, "value": self.value,
                "failing_index": self.failing_index, "detail": self.detail}


def symmetric_bound(p, d, n, c=1.0):
    """``(1 - c e p)^n`` when ``c e (d+1) p <= 1``, else a condition violation."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if c < 1:
        raise ValueError("c must be at least 1")
    if d < 0 or n < 1:
        raise ValueError("need d >= 0 and n >= 1")
    lhs = c * E * (d + 1) * p
    if lhs > 1.0:
        return LllBound("condition-violation",
                        detail=f"c*e*(d+1)*p = {lhs:.6g} exceeds 1")
    return LllBound("ok", (1.0 - c * E * p) ** n)


def glll_bound(probs, graph, assign):
    """Generalized lopsided bound ``prod_i (1 - c x_i)``.

    Checks ``P(A_i) <= x_i prod_{j in Gamma(i)} (1 - c x_j)`` for every ``i``;
    the first failing index is reported otherwise. The lopsided conditioning
    hypothesis is the caller's job (see :func:`verify_lopsided_condition`).
    """
    probs = np.asarray(probs, dtype=float).ravel()
    if not (probs.size == graph.n == len(assign.x)):
        raise ValueError(f"dimension mismatch: {probs.size} probabilities, "
                         f"{graph.n} graph nodes, {len(assign.x)} assignments")
    c, x = assign.c, assign.x
    for i, pi in enumerate(probs):
        rhs = x[i] * math.prod(1.0 - c * x[j] for j in graph.gamma[i])
        if pi > rhs:
            return LllBound("condition-violation", failing_index=i,
                            detail=f"P(A_{i}) = {pi:.6g} > {rhs:.6g}")
    return LllBound("ok", math.prod(1.0 - c * xi for xi in x))


def _check_indices(dist, event_indices):
    idx = [int(i) for i in event_indices]
    for i in idx:
        if i < 0 or i >= len(dist.events):
            raise IndexError(f"no event with index {i}")
    return idx


def exact_none_probability(dist, event_indices=None):
    """``P(no listed event occurs)`` by summing over outcomes."""
    idx = range(len(dist.events)) if event_indices is None else _check_indices(dist, event_indices)
    alive = np.ones(dist.outcome_count, dtype=bool)
    for i in idx:
        alive &= ~dist.indicator(i)
    return float(dist.probs[alive].sum())


def _subset_sums(h, bits):
    """``g[S] = sum_{T subset of S} h[T]`` over ``bits``-bit masks."""
    g = h.copy()
    for b in range(bits):
        g = g.reshape(-1, 2, 2 ** b)
        g[:, 1, :] += g[:, 0, :]
        g = g.reshape(-1)
    return g


@dataclass
class LopsidedReport:
    max_ratio: float
    c: float
    passes: bool
    worst_event: int = None
    worst_set: tuple = ()
    degenerate_sets: list = field(default_factory=list)

    def as_dict(self):
        return {"max_ratio": self.max_ratio, "c": self.c, "passes": self.passes,
                "worst_event": self.worst_event, "worst_set": list(self.worst_set),
                "degenerate_sets": [[i, list(s)] for i, s in self.degenerate_sets]}


def verify_lopsided_condition(dist, event_indices, graph, c=1.0, rtol=1e-12):
    """Largest ``P(A_i | no A_j for j in S) / P(A_i)`` over all allowed ``S``.

    ``S`` ranges over subsets of the events outside ``Gamma(i) + {i}``. The
    conditioning probabilities for all subsets are obtained at once by a
    subset-sum transform over the outcome masks. Sets with zero conditioning
    probability are skipped and listed in ``degenerate_sets``.
    """
    idx = _check_indices(dist, event_indices)
    n = len(idx)
    if n > MAX_LOPSIDED_EVENTS:
        raise ValueError(f"{n} events exceed the enumeration limit of {MAX_LOPSIDED_EVENTS}")
    if graph.n != n:
        raise ValueError("dependency graph size does not match the event list")
    ind = np.stack([dist.indicator(i) for i in idx]) if n else np.zeros((0, dist.outcome_count), bool)
    report = LopsidedReport(max_ratio=0.0, c=c, passes=True)

    for i in range(n):
        pa = float(dist.probs[ind[i]].sum())
        others = [j for j in range(n) if j != i and j not in graph.gamma[i]]
        a = len(others)
        # code[o]: which of `others` occur at outcome o, as a bitmask
        code = np.zeros(dist.outcome_count, dtype=np.int64)
        for b, j in enumerate(others):
            code |= ind[j].astype(np.int64) << b
        full = 2 ** a - 1
        # none of S occurs  <=>  occurring set is a subset of the complement of S
        h_all = np.bincount(code, weights=dist.probs, minlength=2 ** a)
        h_and = np.bincount(code[ind[i]], weights=dist.probs[ind[i]], minlength=2 ** a)
        g_all = _subset_sums(h_all, a)
        g_and = _subset_sums(h_and, a)
        masks = np.arange(2 ** a)
        comp = full ^ masks
        denom = g_all[comp]
        numer = g_and[comp]
        zero = denom <= 0
        for s in masks[zero]:
            report.degenerate_sets.append((idx[i], tuple(idx[others[b]] for b in range(a) if s >> b & 1)))
        if pa == 0.0:
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(zero, 0.0, numer / np.where(zero, 1.0, denom)) / pa
        k = int(np.argmax(ratio))
        if ratio[k] > report.max_ratio:
            report.max_ratio = float(ratio[k])
            report.worst_event = idx[i]
            report.worst_set = tuple(idx[others[b]] for b in range(a) if k >> b & 1)
    report.passes = report.max_ratio <= c * (1.0 + rtol)
    return report


def _x0_objective(x, c, d):
    return x * (1.0 - c * x) ** d


def solve_x0(p, c=1.0, d=0):
    """Root of ``x (1 - c x)^d = p`` on ``(0, 1/(c(d+1))]`` by bisection.

    The upper end of the final bracket is returned, so the objective at the
    result is never below ``p``.
    """
    if c < 1 or d < 0:
        raise ValueError("need c >= 1 and d >= 0")
    hi = 1.0 / (c * (d + 1))
    fmax = _x0_objective(hi, c, d)
    if not 0.0 < p <= fmax:
        raise ValueError(f"p = {p} outside the solvable range (0, {fmax:.6g}]")
    if d == 0:
        return float(p)
    top, lo = hi, 0.0
    for _ in range(BISECTION_MAX_ITER):
        # the endpoint itself is only kept when no interior point reaches p
        if (hi < top and _x0_objective(hi, c, d) - p <= BISECTION_TOL) or hi - lo <= 1e-17:
            break
        x = 0.5 * (lo + hi)
        if _x0_objective(x, c, d) < p:
            lo = x
        else:
            hi = x
    return hi


def symmetric_assignment(probs, graph, c=1.0):
    """The uniform ``x_i = x0`` assignment used to derive the symmetric bound."""
    p = float(np.max(probs)) if len(probs) else 0.0
    d = graph.max_degree()
    if p == 0.0:
        return LllAssignment(c, tuple(0.0 for _ in probs))
    x0 = solve_x0(p, c, d)
    if x0 >= 1.0 / c:
        raise ValueError(f"p = {p} needs x0 = 1/c; no admissible assignment")
    return LllAssignment(c, tuple(x0 for _ in probs))


@dataclass
class BitInstance:
    """Events defined as predicates over independent biased bits."""

    dist: JointDistribution
    graph: DependencyGraph
    bit_probs: np.ndarray
    event_bits: list


def random_bit_instance(rng, n_bits, n_events, max_arity=3, bias=(0.05, 0.5)):
    """Random events over ``n_bits`` independent bits.

    Each event is a random truth table over a random subset of at most
    ``max_arity`` bits. Events sharing no bits are independent of every
    collection of such events, so ``Gamma(i)`` is the set of events sharing
    a bit with event ``i``.
    """
    bit_probs = rng.uniform(*bias, size=n_bits)
    outcomes = np.arange(2 ** n_bits)
    bits = (outcomes[:, None] >> (n_bits - 1 - np.arange(n_bits))) & 1
    probs = np.prod(np.where(bits == 1, bit_probs, 1.0 - bit_probs), axis=1)
    probs = probs / probs.sum()
    events, event_bits = [], []
    for e in range(n_events):
        arity = int(rng.integers(1, max_arity + 1))
        support = sorted(rng.choice(n_bits, size=arity, replace=False).tolist())
        table = rng.random(2 ** arity) < 0.35
        if not table.any():
            table[int(rng.integers(2 ** arity))] = True
        local = np.zeros(len(outcomes), dtype=np.int64)
        for b in support:
            local = (local << 1) | bits[:, b]
        events.append(Event(f"A{e}", np.flatnonzero(table[local])))
        event_bits.append(set(support))
    gamma = tuple(frozenset(j for j in range(n_events) if j != i and event_bits[i] & event_bits[j])
                  for i in range(n_events))
    return BitInstance(JointDistribution(probs, events), DependencyGraph(gamma), bit_probs, event_bits)
