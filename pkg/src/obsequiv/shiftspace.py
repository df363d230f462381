"""Shift spaces: cylinder sets and their measures, finite windows of
bi-infinite sequences, and the binary-expansion coding of the baker's map.

The coding sends ``(x, y)`` to ``... w[-2] w[-1] w[0] w[1] ...`` with
``x = 0.w0 w1 w2 ...`` and ``y = 0.w-1 w-2 ...`` in binary. Under it one baker
step becomes one left shift.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .dynamics import PhasePoint, _baker_exact
from .errors import ExcludedSet, NotStationary, TooShort, WidthExceeded, WindowExhausted
from .processes import MarkovModel, SymbolSequence


@dataclass(frozen=True)
class CylinderSpec:
    """Sequences whose coordinate ``t`` lies in ``allowed`` for every constraint ``(t, allowed)``."""

    n_symbols: int
    constraints: tuple[tuple[int, frozenset[int]], ...] = ()

    def __post_init__(self):
        cons = tuple((int(t), frozenset(int(s) for s in allowed)) for t, allowed in self.constraints)
        object.__setattr__(self, "constraints", cons)
        times = [t for t, _ in cons]
        if any(a >= b for a, b in zip(times, times[1:])):
            raise ValueError("constraint indices must be strictly increasing")
        for t, allowed in cons:
            if not allowed:
                raise ValueError(f"empty symbol set at index {t}")
            if min(allowed) < 0 or max(allowed) >= self.n_symbols:
                raise ValueError(f"symbol outside alphabet at index {t}")

    @classmethod
    def word(cls, n_symbols: int, symbols: Sequence[int], start: int = 0) -> "CylinderSpec":
        """Cylinder fixing coordinates ``start, start+1, ...`` to ``symbols``."""
        return cls(n_symbols, tuple((start + k, {s}) for k, s in enumerate(symbols)))

    def shifted(self, h: int) -> "CylinderSpec":
        return CylinderSpec(self.n_symbols, tuple((t + h, a) for t, a in self.constraints))

    def refinements(self, t: int) -> list["CylinderSpec"]:
        """Split the cylinder by the symbol at coordinate ``t``."""
        cons = dict(self.constraints)
        allowed = cons.get(t, frozenset(range(self.n_symbols)))
        out = []
        for s in sorted(allowed):
            c = dict(cons)
            c[t] = frozenset({s})
            out.append(CylinderSpec(self.n_symbols, tuple(sorted(c.items()))))
        return out

    def to_json(self) -> dict:
        return {
            "alphabet": self.n_symbols,
            "constraints": [{"t": t, "allowed": sorted(a)} for t, a in self.constraints],
        }

    @classmethod
    def from_json(cls, data: dict | str) -> "CylinderSpec":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(data["alphabet"], tuple((c["t"], c["allowed"]) for c in data["constraints"]))


def cylinder_measure_bernoulli(c: CylinderSpec, probs: Sequence) -> object:
    """Product over constraints of the total probability of each allowed set.

    Arithmetic follows the type of ``probs``: pass ``Fraction`` values for
    exact results.
    """
    if len(probs) != c.n_symbols:
        raise ValueError("probability vector does not match the alphabet")
    out = 1
    for _, allowed in c.constraints:
        out = out * sum(probs[s] for s in allowed)
    return out


def cylinder_measure_markov(c: CylinderSpec, model: MarkovModel | tuple) -> object:
    """Stationary Markov measure of a cylinder.

    Sums ``pi(first) * prod P(a, b)`` over all assignments consistent with
    the constraints; gaps between constrained indices are bridged by
    matrix powers. ``model`` may also be a pair ``(transition, stationary)``
    of nested sequences, e.g. of ``Fraction``, for exact arithmetic.
    """
    if isinstance(model, MarkovModel):
        P, pi = model.transition.tolist(), model.stationary
        if pi is None or not model.fully_observed or model.stationarity_error() > 1e-9:
            raise NotStationary("model has no valid stationary vector")
        pi = pi.tolist()
    else:
        P, pi = [list(r) for r in model[0]], list(model[1])
        if pi is None:
            raise NotStationary("no stationary vector supplied")
    n = len(P)
    if n != c.n_symbols:
        raise ValueError("model does not match the alphabet")
    if not c.constraints:
        return sum(pi)
    t0, first = c.constraints[0]
    v = [pi[s] if s in first else 0 * pi[s] for s in range(n)]
    prev = t0
    for t, allowed in c.constraints[1:]:
        for _ in range(t - prev):
            v = [sum(v[a] * P[a][b] for a in range(n)) for b in range(n)]
        v = [v[s] if s in allowed else 0 * v[s] for s in range(n)]
        prev = t
    return sum(v)


_ALPHABETS = [bytes(range(n)) for n in range(257)]


@dataclass(frozen=True)
class ShiftWindow:
    """Coordinates ``w[-L] ... w[R]`` of a bi-infinite sequence.

    ``symbols[origin]`` is ``w[0]``; ``L = origin`` and
    ``R = len(symbols) - 1 - origin``.
    """

    symbols: bytes
    origin: int
    n_symbols: int = 2

    def __post_init__(self):
        object.__setattr__(self, "symbols", bytes(self.symbols))
        if not 0 <= self.origin < len(self.symbols):
            raise ValueError("origin must index a stored coordinate")
        if self.symbols.translate(None, _ALPHABETS[self.n_symbols]):
            raise ValueError("symbol outside alphabet")

    @classmethod
    def from_coords(cls, coords: dict[int, int] | Sequence[int], origin: int = 0, n_symbols: int = 2) -> "ShiftWindow":
        if isinstance(coords, dict):
            lo, hi = min(coords), max(coords)
            if sorted(coords) != list(range(lo, hi + 1)) or lo > 0 or hi < 0:
                raise ValueError("coordinates must be contiguous and include 0")
            return cls(bytes(coords[i] for i in range(lo, hi + 1)), -lo, n_symbols)
        return cls(bytes(coords), origin, n_symbols)

    @property
    def left(self) -> int:
        return self.origin

    @property
    def right(self) -> int:
        return len(self.symbols) - 1 - self.origin

    def __getitem__(self, i: int) -> int:
        if not -self.left <= i <= self.right:
            raise IndexError(f"coordinate {i} outside window [-{self.left}, {self.right}]")
        return self.symbols[self.origin + i]

    def _moved(self, origin: int) -> "ShiftWindow":
        obj = object.__new__(ShiftWindow)
        object.__setattr__(obj, "__dict__", {"symbols": self.symbols, "origin": origin, "n_symbols": self.n_symbols})
        return obj

    def coordinate_range(self) -> range:
        return range(-self.left, self.right + 1)

    def observe(self) -> int:
        """The zeroth coordinate, i.e. the observation of the shift's state."""
        return self[0]


def shift_left(w: ShiftWindow, k: int = 1) -> ShiftWindow:
    """Re-index so that old coordinate ``k`` becomes coordinate 0."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if w.right < k:
        raise WindowExhausted(f"window reaches only coordinate {w.right}, cannot shift by {k}")
    return w._moved(w.origin + k)


_BITS = bytes.maketrans(b"01", b"\x00\x01")


def _bits_bytes(value: int, width: int, count: int) -> bytes:
    if count == 0:
        return b""
    return format(value >> (width - count), f"0{count}b").encode().translate(_BITS)


def _coding(f, left: int, right: int) -> bytes:
    return _bits_bytes(f.y, f.y_width, left)[::-1] + _bits_bytes(f.x, f.x_width, right)


def baker_to_shift(p: PhasePoint, left: int, right: int) -> ShiftWindow:
    """Window ``w[-left] ... w[right-1]``: first ``right`` digits of x, first ``left`` of y."""
    f = p.exact
    if f is None:
        raise ValueError("the binary coding needs an exact point")
    if f.on_excluded_set:
        raise ExcludedSet("point has a terminating binary expansion")
    if right < 1:
        raise ValueError("right must be at least 1 so the window contains w[0]")
    if left < 0:
        raise ValueError("left must be non-negative")
    if right > f.x_width or left > f.y_width:
        raise WidthExceeded(f"window ({left}, {right}) exceeds known digits ({f.y_width}, {f.x_width})")
    return ShiftWindow(_coding(f, left, right), left, 2)


def shift_to_baker(w: ShiftWindow) -> PhasePoint:
    """Sum the binary expansions back: x from ``w[0], w[1], ...``, y from ``w[-1], w[-2], ...``."""
    if w.left < 1:
        raise ValueError("window needs at least one coordinate left of the origin")
    if w.n_symbols != 2:
        raise ValueError("binary coding needs a two-symbol alphabet")
    xs = w.symbols[w.origin:]
    ys = w.symbols[:w.origin][::-1]
    return PhasePoint.from_bits(list(xs), list(ys))


def ks_entropy_bernoulli(probs: Sequence[float]) -> float:
    """``sum -p log2 p`` in bits, zero-probability entries contributing nothing."""
    p = np.asarray(probs, dtype=float)
    if (p < 0).any() or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("not a probability vector")
    nz = p[p > 0]
    return float(-math.fsum(nz * np.log2(nz))) + 0.0


def block_entropy(seq: SymbolSequence, k: int) -> float:
    """Shannon entropy (bits) of the empirical distribution of length-``k`` words."""
    if k == 0:
        return 0.0
    counts = word_counts(seq, k)
    nz = counts[counts > 0] / counts.sum()
    return float(-(nz * np.log2(nz)).sum())


def entropy_rate_estimate(seq: SymbolSequence, k: int = 3) -> float:
    """Conditional block entropy ``H_k - H_{k-1}`` in bits per symbol."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if len(seq) < 100 * seq.n_symbols**k:
        raise TooShort("sequence too short for the requested block length")
    return block_entropy(seq, k) - block_entropy(seq, k - 1)


def word_counts(seq: SymbolSequence, k: int) -> np.ndarray:
    """Counts of overlapping length-``k`` words, indexed by their base-N value (first symbol most significant)."""
    n = seq.n_symbols
    m = len(seq) - k + 1
    if m < 1:
        raise TooShort("sequence shorter than the word length")
    code = np.zeros(m, dtype=np.int64)
    for j in range(k):
        code = code * n + seq.data[j:j + m]
    return np.bincount(code, minlength=n**k)


def word_frequencies(seq: SymbolSequence, k: int) -> np.ndarray:
    counts = word_counts(seq, k)
    return counts / counts.sum()


def _digit_str(value: int, width: int) -> str:
    return format(value, f"0{width}b") if width else ""


def conjugacy_check(p: PhasePoint, steps: int) -> bool:
    """Check that coding commutes with the dynamics for ``k = 0..steps``.

    Compares the coding of ``T^k p`` with the coding of ``p`` shifted left
    ``k`` times, on every coordinate both windows contain.
    """
    f = p.exact
    if f is None:
        raise ValueError("conjugacy is checked on exact points")
    if f.on_excluded_set:
        raise ExcludedSet("point has a terminating binary expansion")
    if steps < 0 or steps >= f.x_width:
        raise WidthExceeded(f"{steps} steps need more than {f.x_width} known digits of x")
    w0 = baker_to_shift(p, f.y_width, f.x_width)
    shift_left(w0, steps)  # the whole shift must fit the window
    # shift_left(w0, k) only moves the origin by k, so its coordinates are
    # read straight from w0's digit string.
    ref = "".join("01"[b] for b in w0.symbols)
    g = f
    for k in range(steps + 1):
        if k:
            g = _baker_exact(g)
        yw, xw = g.y_width, g.x_width
        coded = _digit_str(g.y, yw)[::-1] + _digit_str(g.x, xw)
        origin = w0.origin + k
        lo = min(yw, origin)
        hi = min(xw - 1, len(ref) - 1 - origin)
        if coded[yw - lo:yw + hi + 1] != ref[origin - lo:origin + hi + 1]:
            return False
    return True


@dataclass(frozen=True)
class WindowEquivalence:
    passed: bool
    max_deviation: float
    worst_word: tuple[int, ...]
    window: int
    tolerance: float
    freq_a: np.ndarray
    freq_b: np.ndarray
    stderr: np.ndarray


def finite_window_equivalence(seq_a: SymbolSequence, seq_b: SymbolSequence, window: int, tol: float) -> WindowEquivalence:
    """L-infinity distance between the length-``window`` word frequencies of two sequences."""
    if seq_a.n_symbols != seq_b.n_symbols:
        raise ValueError("sequences use different alphabets")
    n = seq_a.n_symbols
    need = 100 * n**window
    if min(len(seq_a), len(seq_b)) < need:
        raise TooShort(f"need at least {need} symbols per sequence for window {window}")
    fa = word_frequencies(seq_a, window)
    fb = word_frequencies(seq_b, window)
    diff = np.abs(fa - fb)
    k = int(diff.argmax())
    worst = tuple(int(d) for d in np.unravel_index(k, (n,) * window))
    na, nb = len(seq_a) - window + 1, len(seq_b) - window + 1
    se = np.sqrt(fa * (1 - fa) / na + fb * (1 - fb) / nb)
    dev = float(diff[k])
    return WindowEquivalence(dev <= tol, dev, worst, window, tol, fa, fb, se)


def all_words(n_symbols: int, k: int) -> Iterable[tuple[int, ...]]:
    return itertools.product(range(n_symbols), repeat=k)
