"""Checks linking coarse-grained deterministic systems to stochastic processes.

* nontriviality of the coarse process (some row of its transition matrix
  has no entry equal to 1),
* correlation decay ``mu(T^n A & B) - mu(A) mu(B)``, estimated by Monte Carlo
  and computed exactly for dyadic baker boxes and rotation arcs,
* the distance bound between a point and the representative of its dyadic
  cell,
* chi-square tests of the Markov property and of independence, and the
  certificate that a fine dyadic coarse-graining of the baker's map is an
  irreducible, aperiodic Markov chain.

Independence rejection at one partition is a necessary-condition witness
only: it shows this coarse process is not Bernoulli, not that no
Bernoulli process approximates the system at some other resolution.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import stats
from .dynamics import System, baker_pairs, sample_invariant
from .errors import ResourceLimit, TooShort
from .partitions import Box, Partition, _grid_corners, coarse_grain, dyadic_offset, dyadic_partition
from .processes import (
    MarkovModel,
    SymbolSequence,
    empirical_transition_matrix,
    is_aperiodic,
    is_irreducible,
    periods,
)
from .rng import make_rng, substream

SIGNIFICANCE = stats.SIGNIFICANCE
MIN_BIGRAM = 50


@dataclass(frozen=True)
class Nontriviality:
    passed: bool
    witness_row: int | None
    row_max: float | None


def nontriviality_verdict(model: MarkovModel | np.ndarray) -> Nontriviality:
    """Is there an observed row whose largest transition probability is below 1?"""
    if not isinstance(model, MarkovModel):
        model = MarkovModel(model)
    rows = np.flatnonzero(model.observed)
    if rows.size == 0:
        raise ValueError("model has no observed row")
    for i in rows:
        m = float(model.transition[i].max())
        if m < 1.0:
            return Nontriviality(True, int(i), m)
    return Nontriviality(False, None, None)


# -- correlations -------------------------------------------------------------

def mixing_correlation(sys: System, a: Box, b: Box, n: int, samples: int, seed: int) -> float:
    """Monte Carlo estimate of ``mu(A & T^-n B) - mu(A) mu(B)``.

    Draws ``samples`` uniform points ``p`` and counts ``p in A`` and
    ``T^n(p) in B``. Baker orbits are read from random exact digit strings
    so that large ``n`` does not exhaust float precision.
    """
    return mixing_estimate(sys, a, b, n, samples, seed)[0]


def mixing_estimate(sys: System, a: Box, b: Box, n: int, samples: int, seed: int) -> tuple[float, float]:
    """``(estimate, binomial standard error)`` of the correlation at lag ``n``."""
    if n < 0:
        raise ValueError("lag must be non-negative")
    if samples < 1:
        raise ValueError("samples must be at least 1")
    if a.dimension != sys.dimension or b.dimension != sys.dimension:
        raise ValueError("boxes and system dimensions differ")
    rng = make_rng(seed)
    if sys.kind == "baker":
        p, q = baker_pairs(n, samples, rng)
    else:
        p = rng.random((samples, 1))
        q = np.mod(p + math.fmod(n * sys.alpha, 1.0), 1.0)
    hits = np.count_nonzero(a.contains_array(p) & b.contains_array(q))
    frac = hits / samples
    se = math.sqrt(max(frac * (1 - frac), 1e-300) / samples)
    return frac - a.measure * b.measure, se


def _dyadic_resolution(box: Box, max_k: int = 30) -> int:
    for k in range(max_k + 1):
        scale = 2**k
        if all(float(v * scale).is_integer() for v in box.lo + box.hi):
            return k
    raise ValueError(f"{box} is not a dyadic box of resolution <= {max_k}")


def _digit_constraint(box: Box, k: int) -> tuple[set[int], set[int]]:
    s = 2**k
    xs = set(range(int(box.lo[0] * s), int(box.hi[0] * s)))
    ys = set(range(int(box.lo[1] * s), int(box.hi[1] * s)))
    return xs, ys


def baker_correlation_exact(a: Box, b: Box, n: int) -> Fraction:
    """Exact ``mu(A & T^-n B) - mu(A) mu(B)`` for dyadic boxes under the baker map.

    Membership in a box of resolution ``k`` depends on digits
    ``w[-k] .. w[k-1]``; membership of ``T^n(p)`` on ``w[n-k] .. w[n+k-1]``.
    Digits are i.i.d. fair bits, so disjoint windows give exactly zero and
    overlapping windows are enumerated.
    """
    k = max(_dyadic_resolution(a), _dyadic_resolution(b), 1)
    ax, ay = _digit_constraint(a, k)
    bx, by = _digit_constraint(b, k)
    mu_a = Fraction(len(ax) * len(ay), 4**k)
    mu_b = Fraction(len(bx) * len(by), 4**k)
    if n >= 2 * k:
        return mu_a * mu_b - mu_a * mu_b
    span = n + 2 * k
    if span > 22:
        raise ResourceLimit("overlapping digit windows too wide to enumerate")
    # Digit w[i] sits at column i + k.
    bits = np.array(list(itertools.product((0, 1), repeat=span)), dtype=np.int64)

    def value(cols):
        out = np.zeros(len(bits), dtype=np.int64)
        for c in cols:
            out = out * 2 + bits[:, c]
        return out

    x_a = value(range(k, 2 * k))
    y_a = value(range(k - 1, -1, -1))
    x_b = value(range(n + k, n + 2 * k))
    y_b = value(range(n + k - 1, n - 1, -1))
    in_a = np.isin(x_a, list(ax)) & np.isin(y_a, list(ay))
    in_b = np.isin(x_b, list(bx)) & np.isin(y_b, list(by))
    joint = Fraction(int(np.count_nonzero(in_a & in_b)), 2**span)
    return joint - mu_a * mu_b


def _arc_overlap(a0: float, a1: float, b0: float, b1: float) -> float:
    total = 0.0
    for shift in (-1.0, 0.0, 1.0):
        total += max(0.0, min(a1 + shift, b1) - max(a0 + shift, b0))
    return total


def rotation_correlation_exact(alpha: float, a: Box, b: Box, n: int) -> float:
    """``mu((A + n alpha) & B) - mu(A) mu(B)`` for arcs, in closed form."""
    s = math.fmod(n * alpha, 1.0)
    a0, a1 = a.lo[0] + s, a.hi[0] + s
    if a0 >= 1.0:
        a0, a1 = a0 - 1.0, a1 - 1.0
    return _arc_overlap(a0, a1, b.lo[0], b.hi[0]) - a.measure * b.measure


def cesaro_average(values) -> float:
    v = np.asarray(list(values), dtype=float)
    return float(v.mean())


# -- epsilon-congruence distance bound ---------------------------------------

@dataclass(frozen=True)
class BoundCheck:
    n: int
    passed: bool
    max_distance: float
    bound: float
    cells: int


def _corners(part: Partition, upper: int) -> np.ndarray:
    if part.grid is not None:
        return _grid_corners([e[1:] if upper else e[:-1] for e in part.grid])
    return np.array([c.hi if upper else c.lo for c in part.cells])


def epsilon_congruence_bound_check(n: int, part: Partition | None = None) -> BoundCheck:
    """Exact check that every point is within ``sqrt(2)/2**n`` of its cell's representative.

    Distance to a fixed point is convex, so its supremum over a box sits at
    a corner. Coordinates are scaled by ``2**(n+1)``: corners become even
    integers and each representative ``c + sqrt(2)`` with ``c`` an integer,
    so every comparison is decided in integers.
    """
    part = dyadic_partition(n) if part is None else part
    scale = 2 ** (n + 1)
    off = dyadic_offset(n)
    lo = _corners(part, 0) * scale
    hi = _corners(part, 1) * scale
    reps = np.array(part.reps)
    rep_int = np.rint((reps - off) * scale)
    if np.abs((reps - off) * scale - rep_int).max() > 1e-6:
        raise ValueError("representatives do not follow the sqrt(2)/2**(n+1) offset pattern")
    if not (np.array_equal(lo, np.rint(lo)) and np.array_equal(hi, np.rint(hi))):
        raise ValueError("cell corners are not dyadic at this level")
    lo, hi, rep_int = lo.astype(np.int64), hi.astype(np.int64), rep_int.astype(np.int64)
    passed = True
    worst = 0.0
    root2 = math.sqrt(2.0)
    for cx in (lo[:, 0], hi[:, 0]):
        for cy in (lo[:, 1], hi[:, 1]):
            a = cx - rep_int[:, 0]
            b = cy - rep_int[:, 1]
            # |(a - r2, b - r2)|^2 = a^2 + b^2 + 4 - 2 r2 (a + b) <= 8  <=>  P <= Q r2
            P = a * a + b * b - 4
            Q = 2 * (a + b)
            ok = np.where(
                Q >= 0,
                (P <= 0) | (P * P <= 2 * Q * Q),
                (P <= 0) & (P * P >= 2 * Q * Q),
            )
            passed = passed and bool(ok.all())
            d = np.sqrt((a - root2) ** 2 + (b - root2) ** 2) / scale
            worst = max(worst, float(d.max()))
    return BoundCheck(n, passed, worst, root2 / 2**n, len(part))


def level_for_epsilon(eps: float) -> int:
    """Smallest ``n`` with ``sqrt(2)/2**n < eps``."""
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    n = 1
    while math.sqrt(2.0) / 2**n >= eps:
        n += 1
    return n


# -- chi-square verdicts ------------------------------------------------------

@dataclass(frozen=True)
class MarkovPropertyVerdict:
    passed: bool
    test: stats.ChiSquare
    significance: float


def markov_property_test(seq: SymbolSequence, significance: float = SIGNIFICANCE) -> MarkovPropertyVerdict:
    """Is ``P(next | current, previous)`` the same for every previous symbol?

    For each current symbol the (previous x next) count table is tested for
    homogeneity; statistics and degrees of freedom are summed over current
    symbols. Passing means the sequence is consistent with order 1.
    """
    if len(seq) < 3:
        raise TooShort("need at least three symbols")
    big = seq.bigram_counts()
    observed = big[big > 0]
    if observed.size == 0 or observed.min() < MIN_BIGRAM:
        raise TooShort(f"every observed bigram needs at least {MIN_BIGRAM} occurrences")
    n = seq.n_symbols
    d = seq.data
    tri = np.bincount((d[:-2] * n + d[1:-1]) * n + d[2:], minlength=n**3).reshape(n, n, n)
    tests = [stats.homogeneity(tri[:, b, :]) for b in range(n)]
    combined = stats.combine(tests)
    return MarkovPropertyVerdict(not combined.rejects(significance), combined, significance)


@dataclass(frozen=True)
class BernoulliWitness:
    rejected: bool
    test: stats.ChiSquare
    witness: tuple[int, int]
    conditional: float
    marginal: float
    significance: float


def bernoulli_rejection_witness(seq: SymbolSequence, significance: float = SIGNIFICANCE) -> BernoulliWitness:
    """Chi-square test of independence between consecutive symbols.

    Rejection shows that this coarse-grained process is not Bernoulli. The
    witness is the pair ``(i, j)`` occurring less often than independence
    predicts with the largest standardised residual (a forbidden transition
    when there is one), reported with ``P(j | i)`` and ``P(j)``.
    """
    if len(seq) < 2:
        raise TooShort("need at least two symbols")
    big = seq.bigram_counts().astype(float)
    if big.sum() < 5 * seq.n_symbols**2:
        raise TooShort("too few transitions for an independence test")
    test = stats.homogeneity(big)
    rows, cols = big.sum(axis=1), big.sum(axis=0)
    expected = np.outer(rows, cols) / big.sum()
    with np.errstate(divide="ignore", invalid="ignore"):
        resid = np.where(expected > 0, (expected - big) / np.sqrt(expected), 0.0)
    if resid.max() <= 0:
        resid = np.abs(resid)
    i, j = np.unravel_index(int(resid.argmax()), resid.shape)
    cond = float(big[i, j] / rows[i]) if rows[i] else float("nan")
    marg = float(cols[j] / big.sum())
    return BernoulliWitness(test.rejects(significance), test, (int(i), int(j)), cond, marg, significance)


# -- Markov replacement certificate ------------------------------------------

@dataclass(frozen=True)
class Certificate:
    n: int
    length: int
    seed: int
    significance: float
    stationary_tol: float
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks.values())


def baker_dyadic_sequence(n: int, length: int, seed: int) -> SymbolSequence:
    """Coarse-grain an exact baker orbit of ``length`` steps by the ``4**n``-cell dyadic partition."""
    part = dyadic_partition(n)
    p0 = sample_invariant(System.baker(), 1, seed, exact=True, width=length + 64)[0]
    return coarse_grain(System.baker(), p0, length, part)


def markov_replacement_certificate(
    n: int,
    length: int,
    seed: int,
    significance: float = SIGNIFICANCE,
    stationary_tol: float = 0.01,
) -> Certificate:
    """Certify that the level-``n`` dyadic coarse-graining of the baker map is an
    irreducible aperiodic Markov chain whose cells meet the distance bound.

    Five checks: Markov property, irreducibility, aperiodicity of the
    estimated chain, the exact distance bound, and a uniform stationary
    vector within ``stationary_tol``.
    """
    part = dyadic_partition(n)
    if length < 100 * len(part):
        raise TooShort(f"need at least {100 * len(part)} steps for {len(part)} cells")
    seq = baker_dyadic_sequence(n, length, seed)
    mp = markov_property_test(seq, significance)
    est = empirical_transition_matrix(seq)
    model = est.model
    irreducible = is_irreducible(model)
    aperiodic = is_aperiodic(model)
    bound = epsilon_congruence_bound_check(n, part)
    dev = float(np.abs(model.stationary - 1.0 / len(part)).max())
    checks = {
        "markov_property": {
            "passed": mp.passed,
            "statistic": mp.test.statistic,
            "dof": mp.test.dof,
            "pvalue": mp.test.pvalue,
            "significance": significance,
        },
        "irreducible": {"passed": irreducible},
        "aperiodic": {"passed": aperiodic, "periods": periods(model)},
        "distance_bound": {
            "passed": bound.passed,
            "max_distance": bound.max_distance,
            "bound": bound.bound,
        },
        "uniform_stationary": {
            "passed": dev <= stationary_tol,
            "max_deviation": dev,
            "tolerance": stationary_tol,
            "stationary": model.stationary.tolist(),
        },
    }
    return Certificate(n, length, seed, significance, stationary_tol, checks)


def baker_dyadic_chain(n: int) -> MarkovModel:
    """Analytic chain of the level-``n`` dyadic coarse-graining.

    A cell is the digit block ``w[-n] .. w[n-1]``; one step appends a fresh
    fair digit and drops the oldest, so each cell has two successors of
    probability 1/2.
    """
    side = 2**n
    k = side * side
    P = np.zeros((k, k))
    for ix in range(side):
        for iy in range(side):
            # x digits w0..w(n-1) -> ix ; y digits w-1..w-n -> iy
            top = ix >> (n - 1)
            new_iy = (top << (n - 1)) | (iy >> 1)
            for fresh in (0, 1):
                new_ix = ((ix << 1) & (side - 1)) | fresh
                P[ix * side + iy, new_ix * side + new_iy] += 0.5
    return MarkovModel(P, stationary=np.full(k, 1.0 / k))


def coding_conjugacy_sample(points: int, steps: int, seed: int, width: int = 64) -> dict:
    """Run the coding conjugacy check on random exact points."""
    from .shiftspace import conjugacy_check

    pts = sample_invariant(System.baker(), points, seed, exact=True, width=width)
    failures = sum(not conjugacy_check(p, steps) for p in pts)
    return {"passed": failures == 0, "points": points, "steps": steps, "width": width, "failures": failures}


def seeds_for(seed: int, count: int) -> list[int]:
    """Independent integer seeds for ``count`` sub-runs of a root seed."""
    return [int(substream(seed, i).integers(0, 2**63 - 1)) for i in range(count)]
