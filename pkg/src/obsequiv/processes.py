"""Finite-alphabet stochastic processes: Bernoulli and Markov samplers,
transition estimation, and structural analysis of Markov chains.
"""

from __future__ import annotations

import logging
import math
import warnings
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import stats
from .errors import BadDistribution, DegenerateSequenceWarning, NoReturn, TooShort
from .rng import make_rng

log = logging.getLogger(__name__)

PROB_TOL = 1e-9
POWER_MAX_ITER = 100_000
POWER_TOL = 1e-12


@dataclass(frozen=True)
class SymbolSequence:
    """A finite window ``Z_0 ... Z_{n-1}`` of a realisation over symbols ``0..n_symbols-1``."""

    n_symbols: int
    data: np.ndarray
    origin: str = "sampled"

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.int64)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        if self.n_symbols < 1:
            raise ValueError("alphabet must have at least one symbol")
        if data.ndim != 1:
            raise ValueError("symbol data must be one-dimensional")
        if data.size and (data.min() < 0 or data.max() >= self.n_symbols):
            raise ValueError(f"symbols must lie in 0..{self.n_symbols - 1}")

    def __len__(self) -> int:
        return int(self.data.size)

    def counts(self) -> np.ndarray:
        return np.bincount(self.data, minlength=self.n_symbols)

    def frequencies(self) -> np.ndarray:
        return self.counts() / len(self)

    def bigram_counts(self) -> np.ndarray:
        n = self.n_symbols
        flat = self.data[:-1] * n + self.data[1:]
        return np.bincount(flat, minlength=n * n).reshape(n, n)


def _check_probs(probs) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise BadDistribution("probability vector must be a non-empty 1-D array")
    if (p < 0).any() or not np.isfinite(p).all():
        raise BadDistribution(f"negative or non-finite probability in {p.tolist()}")
    if abs(p.sum() - 1.0) > PROB_TOL:
        raise BadDistribution(f"probabilities sum to {p.sum()!r}, not 1")
    return p / p.sum()


@dataclass(frozen=True)
class MarkovModel:
    """Row-stochastic transition matrix over ``n`` symbols with a stationary vector.

    ``observed`` flags the rows backed by data; estimated matrices leave
    unvisited rows at zero instead of inventing a distribution for them.
    """

    transition: np.ndarray
    stationary: np.ndarray | None = None
    observed: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        P = np.array(self.transition, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
            raise BadDistribution("transition matrix must be square and non-empty")
        if (P < 0).any() or not np.isfinite(P).all():
            raise BadDistribution("transition matrix has negative or non-finite entries")
        sums = P.sum(axis=1)
        observed = np.ones(len(P), dtype=bool) if self.observed is None else np.asarray(self.observed, dtype=bool)
        if observed.shape != (len(P),):
            raise ValueError("observed mask must have one flag per row")
        if (np.abs(sums[observed] - 1.0) > PROB_TOL).any():
            raise BadDistribution(f"transition rows sum to {sums[observed].tolist()}")
        if (P[~observed] != 0).any():
            raise ValueError("unobserved rows must be zero")
        P[observed] /= sums[observed][:, None]
        P.setflags(write=False)
        observed.setflags(write=False)
        object.__setattr__(self, "transition", P)
        object.__setattr__(self, "observed", observed)
        pi = self.stationary
        if pi is None:
            pi = stationary_distribution(P, observed)
        else:
            pi = np.asarray(pi, dtype=float)
            if pi.shape != (len(P),):
                raise ValueError("stationary vector has the wrong length")
        pi = np.array(pi)
        pi.setflags(write=False)
        object.__setattr__(self, "stationary", pi)

    @property
    def n_symbols(self) -> int:
        return len(self.transition)

    @property
    def fully_observed(self) -> bool:
        return bool(self.observed.all())

    def support(self) -> np.ndarray:
        """Boolean adjacency of the transition digraph (probability > 0 exactly)."""
        return self.transition > 0

    def stationarity_error(self) -> float:
        return float(np.abs(self.stationary @ self.transition - self.stationary).sum())

    def to_json(self) -> dict:
        return {
            "transition": self.transition.tolist(),
            "stationary": self.stationary.tolist(),
            "observed": self.observed.tolist(),
        }

    @classmethod
    def from_json(cls, data) -> "MarkovModel":
        if isinstance(data, list):
            return cls(data)
        return cls(data["transition"], observed=data.get("observed"))


def stationary_distribution(P: np.ndarray, observed: np.ndarray | None = None) -> np.ndarray:
    """Stationary vector by power iteration from the uniform vector.

    Rows flagged unobserved are left out and the remaining rows are
    renormalised over the observed states. If the iteration does not
    settle (a periodic chain), the average of the last ``d`` iterates,
    ``d`` the period, is returned instead.
    """
    P = np.asarray(P, dtype=float)
    n = len(P)
    keep = np.ones(n, dtype=bool) if observed is None else np.asarray(observed, dtype=bool)
    if not keep.any():
        return np.full(n, 1.0 / n)
    Q = P[np.ix_(keep, keep)]
    mass = Q.sum(axis=1)
    Q = np.where(mass[:, None] > 0, Q / np.where(mass > 0, mass, 1.0)[:, None], 0.0)
    v = np.full(len(Q), 1.0 / len(Q))
    converged = False
    for _ in range(POWER_MAX_ITER):
        w = _normalised(v @ Q)
        if np.abs(w - v).sum() < POWER_TOL:
            v = w
            converged = True
            break
        v = w
    if not converged:
        log.warning("power iteration did not converge in %d steps; averaging over one period", POWER_MAX_ITER)
        d = _chain_period(Q > 0)
        cycle = []
        for _ in range(d):
            v = _normalised(v @ Q)
            cycle.append(v)
        v = _normalised(np.mean(cycle, axis=0))
    out = np.zeros(n)
    out[keep] = v
    return out


def _normalised(w: np.ndarray) -> np.ndarray:
    s = w.sum()
    return w / s if s > 0 else np.full(len(w), 1.0 / len(w))


def _chain_period(adj: np.ndarray) -> int:
    periods = []
    for i in range(len(adj)):
        try:
            periods.append(_period(adj, i))
        except NoReturn:
            pass
    return math.lcm(*periods) if periods else 1


def bernoulli_sample(probs, length: int, seed: int) -> SymbolSequence:
    """I.i.d. draws with ``P{Z_t = k} = probs[k]``."""
    p = _check_probs(probs)
    if length < 1:
        raise ValueError("length must be at least 1")
    rng = make_rng(seed)
    cdf = np.cumsum(p)
    cdf[-1] = 1.0
    u = rng.random(length)
    data = np.searchsorted(cdf, u, side="right")
    return SymbolSequence(len(p), np.minimum(data, len(p) - 1), origin="sampled")


def markov_sample(model: MarkovModel, length: int, seed: int) -> SymbolSequence:
    """Stationary Markov sample: ``Z_0`` from the stationary vector, then transition rows."""
    if not model.fully_observed:
        raise BadDistribution("cannot sample from a model with unobserved rows")
    pi = _check_probs(model.stationary)
    if length < 1:
        raise ValueError("length must be at least 1")
    n = model.n_symbols
    rng = make_rng(seed)
    cdf = np.cumsum(model.transition, axis=1)
    cdf[:, -1] = 1.0
    u = rng.random(length)
    first = int(np.searchsorted(np.cumsum(pi), u[0], side="right"))
    # Successor of every state for every step; the chain then only indexes.
    nxt = np.empty((n, length), dtype=np.int64)
    for s in range(n):
        nxt[s] = np.minimum(np.searchsorted(cdf[s], u, side="right"), n - 1)
    rows = [row.tolist() for row in nxt]
    out = [0] * length
    state = min(first, n - 1)
    out[0] = state
    for t in range(1, length):
        state = rows[state][t]
        out[t] = state
    return SymbolSequence(n, np.asarray(out), origin="sampled")


@dataclass(frozen=True)
class TransitionEstimate:
    model: MarkovModel
    counts: np.ndarray
    observed: np.ndarray
    degenerate: bool

    @property
    def transition(self) -> np.ndarray:
        return self.model.transition


def empirical_transition_matrix(seq: SymbolSequence) -> TransitionEstimate:
    """Row-normalised transition counts of ``seq``.

    Rows of symbols never followed by another symbol are flagged
    unobserved and left at zero. Warns with
    :class:`DegenerateSequenceWarning` if fewer than two symbols occur.
    """
    if len(seq) < 2:
        raise TooShort("need at least two symbols to count transitions")
    counts = seq.bigram_counts()
    observed = counts.sum(axis=1) > 0
    P = np.zeros(counts.shape)
    P[observed] = counts[observed] / counts[observed].sum(axis=1, keepdims=True)
    degenerate = int((seq.counts() > 0).sum()) < 2
    if degenerate:
        warnings.warn("fewer than two distinct symbols in sequence", DegenerateSequenceWarning, stacklevel=2)
    model = MarkovModel(P, observed=observed)
    return TransitionEstimate(model, counts, observed, degenerate)


def merge_counts(*count_tables: np.ndarray) -> np.ndarray:
    """Combine bigram counts from shards of one sequence (order-independent)."""
    return np.sum(count_tables, axis=0)


def _reachable(adj: np.ndarray, start: int) -> np.ndarray:
    seen = np.zeros(len(adj), dtype=bool)
    seen[start] = True
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(adj[u]):
            if not seen[v]:
                seen[v] = True
                queue.append(v)
    return seen


def is_irreducible(model: MarkovModel) -> bool:
    """True iff every state reaches every other through positive-probability steps."""
    adj = model.support()
    return bool(_reachable(adj, 0).all() and _reachable(adj.T, 0).all())


def _period(adj: np.ndarray, i: int) -> int:
    # gcd of level[u] + 1 - level[v] over edges inside i's strongly connected component.
    fwd = _reachable(adj, i)
    back = _reachable(adj.T, i)
    comp = fwd & back
    if not adj[np.ix_(comp, comp)].any():
        raise NoReturn(f"state {i} never returns to itself")
    level = np.full(len(adj), -1)
    level[i] = 0
    queue = deque([i])
    g = 0
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(adj[u] & comp):
            if level[v] < 0:
                level[v] = level[u] + 1
                queue.append(v)
            else:
                g = math.gcd(g, int(level[u] + 1 - level[v]))
    return g


def period_of(model: MarkovModel, i: int) -> int:
    """``gcd{n >= 1 : P^n(i, i) > 0}``; raises :class:`NoReturn` if ``i`` is never revisited."""
    if not 0 <= i < model.n_symbols:
        raise IndexError(f"state {i} out of range")
    return _period(model.support(), i)


def periods(model: MarkovModel) -> list[int | None]:
    """Period of every state, ``None`` for states that never return."""
    adj = model.support()
    if is_irreducible(model):
        d = _period(adj, 0)
        return [d] * model.n_symbols
    out = []
    for i in range(model.n_symbols):
        try:
            out.append(_period(adj, i))
        except NoReturn:
            out.append(None)
    return out


def is_aperiodic(model: MarkovModel) -> bool:
    """True iff every state has period 1 (a state that never returns does not)."""
    return all(d == 1 for d in periods(model))


@dataclass(frozen=True)
class StationarityVerdict:
    passed: bool
    symbol_test: stats.ChiSquare
    bigram_test: stats.ChiSquare
    block_frequencies: np.ndarray
    significance: float


def stationarity_check(seq: SymbolSequence, blocks: int, significance: float = stats.SIGNIFICANCE) -> StationarityVerdict:
    """Chi-square homogeneity of symbol and bigram frequencies across equal blocks.

    Each of the two tests runs at ``significance / 2`` so the combined
    verdict has family-wise level ``significance``.
    """
    if blocks < 2:
        raise ValueError("need at least two blocks")
    if len(seq) < blocks * 100:
        raise TooShort(f"{len(seq)} symbols is fewer than 100 per block for {blocks} blocks")
    size = len(seq) // blocks
    n = seq.n_symbols
    sym = np.zeros((blocks, n))
    big = np.zeros((blocks, n * n))
    for b in range(blocks):
        chunk = seq.data[b * size:(b + 1) * size]
        sym[b] = np.bincount(chunk, minlength=n)
        big[b] = np.bincount(chunk[:-1] * n + chunk[1:], minlength=n * n)
    t1 = stats.homogeneity(sym)
    t2 = stats.homogeneity(big)
    level = significance / 2
    passed = not (t1.rejects(level) or t2.rejects(level))
    return StationarityVerdict(passed, t1, t2, sym / size, significance)
