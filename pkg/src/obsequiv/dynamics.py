"""Measure-preserving maps: the baker's map on the unit square and rotations of the circle.

Points carry float coordinates and, for the baker's map, an optional exact
form: the known binary digits of each coordinate held as Python integers.
In exact mode one baker step moves the leading digit of ``x`` to the front
of ``y``, which is the binary-expansion shift that makes the baker's map a
fair-coin Bernoulli shift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ExcludedSet, WidthExceeded
from .rng import make_rng, random_int_bits

GOLDEN_ALPHA = (math.sqrt(5.0) - 1.0) / 2.0
DEFAULT_WIDTH = 64

_BELOW_ONE = math.nextafter(1.0, 0.0)


def _clip_unit(v: float) -> float:
    # Rounding in (y + 1) / 2 and m + alpha can land on 1.0 exactly.
    return _BELOW_ONE if v >= 1.0 else v


def _is_dyadic(q: Fraction) -> bool:
    d = q.denominator
    return d & (d - 1) == 0


def _expand(value, width: int) -> tuple[int, bool]:
    q = Fraction(value)
    if not 0 <= q < 1:
        raise ValueError(f"coordinate {value!r} outside [0, 1)")
    digits = (q.numerator << width) // q.denominator
    return digits, _is_dyadic(q)


@dataclass(frozen=True)
class ExactForm:
    """Known leading binary digits of both baker coordinates.

    ``x`` holds ``x_width`` digits of the x coordinate, most significant first,
    so the coordinate lies in ``[x / 2**x_width, (x + 1) / 2**x_width)``; the
    same for ``y``. ``x_dyadic``/``y_dyadic`` mark coordinates known to be
    dyadic rationals (finite expansion), i.e. points of the excluded set.
    """

    x: int
    x_width: int
    y: int
    y_width: int
    x_dyadic: bool = False
    y_dyadic: bool = False

    def __post_init__(self):
        if self.x_width < 0 or self.y_width < 0:
            raise ValueError("digit widths must be non-negative")
        if self.x < 0 or self.y < 0 or self.x.bit_length() > self.x_width or self.y.bit_length() > self.y_width:
            raise ValueError("digits do not fit their widths")

    @classmethod
    def _trusted(cls, x: int, x_width: int, y: int, y_width: int) -> "ExactForm":
        # Skips validation for digits produced by the map itself.
        obj = object.__new__(cls)
        object.__setattr__(obj, "__dict__", {
            "x": x, "x_width": x_width, "y": y, "y_width": y_width, "x_dyadic": False, "y_dyadic": False,
        })
        return obj

    @property
    def on_excluded_set(self) -> bool:
        return self.x_dyadic or self.y_dyadic

    def x_bits(self, count: int | None = None) -> list[int]:
        """Leading digits of x, ``x_bits()[0]`` being the 1/2 digit."""
        return _leading_bits(self.x, self.x_width, count)

    def y_bits(self, count: int | None = None) -> list[int]:
        return _leading_bits(self.y, self.y_width, count)

    def coords(self) -> tuple[float, float]:
        return _digits_to_float(self.x, self.x_width), _digits_to_float(self.y, self.y_width)


def _leading_bits(value: int, width: int, count: int | None) -> list[int]:
    count = width if count is None else count
    if count > width:
        raise WidthExceeded(f"{count} digits requested, {width} known")
    if count == 0:
        return []
    return [int(c) for c in format(value >> (width - count), f"0{count}b")]


def _digits_to_float(value: int, width: int) -> float:
    # int / int true division rounds correctly for any width.
    v = value / (1 << width)
    return _BELOW_ONE if v >= 1.0 else v


@dataclass(frozen=True)
class PhasePoint:
    """A state of a system: 1 or 2 coordinates in ``[0, 1)``."""

    coords: tuple[float, ...]
    exact: ExactForm | None = None

    def __post_init__(self):
        coords = tuple(float(c) for c in self.coords)
        object.__setattr__(self, "coords", coords)
        if len(coords) not in (1, 2):
            raise ValueError("a phase point has one or two coordinates")
        for c in coords:
            if not 0.0 <= c < 1.0:
                raise ValueError(f"coordinate {c!r} outside [0, 1)")
        if self.exact is not None and len(coords) != 2:
            raise ValueError("exact form is only defined for points of the square")

    @classmethod
    def from_exact(cls, form: ExactForm) -> "PhasePoint":
        obj = object.__new__(cls)
        object.__setattr__(obj, "__dict__", {"coords": form.coords(), "exact": form})
        return obj

    @classmethod
    def exact_point(cls, x, y, width: int = DEFAULT_WIDTH) -> "PhasePoint":
        """Exact point from rationals (``Fraction``, int ratios or strings like ``"1/3"``).

        Floats are accepted but are dyadic rationals, hence land on the
        excluded set; pass fractions for generic points.
        """
        xd, x_dy = _expand(Fraction(x), width)
        yd, y_dy = _expand(Fraction(y), width)
        return cls.from_exact(ExactForm(xd, width, yd, width, x_dy, y_dy))

    @classmethod
    def from_bits(cls, x_bits: Sequence[int], y_bits: Sequence[int]) -> "PhasePoint":
        """Exact point with the given leading digits and an unspecified (generic) tail."""
        x = int("".join(map(str, x_bits)) or "0", 2)
        y = int("".join(map(str, y_bits)) or "0", 2)
        return cls.from_exact(ExactForm(x, len(x_bits), y, len(y_bits)))

    @property
    def is_exact(self) -> bool:
        return self.exact is not None

    def __len__(self) -> int:
        return len(self.coords)


@dataclass(frozen=True)
class System:
    """A measure-preserving map with Lebesgue measure as invariant measure.

    ``kind`` is ``"baker"`` (unit square, Euclidean metric) or ``"rotation"``
    (circle ``[0, 1)`` with arc distance, rotation number ``alpha``).
    """

    kind: str
    alpha: float | None = None

    def __post_init__(self):
        if self.kind == "baker":
            if self.alpha is not None:
                raise ValueError("the baker's map takes no rotation number")
        elif self.kind == "rotation":
            alpha = GOLDEN_ALPHA if self.alpha is None else float(self.alpha)
            if not 0.0 < alpha < 1.0:
                raise ValueError("rotation number must lie in (0, 1)")
            object.__setattr__(self, "alpha", alpha)
        else:
            raise ValueError(f"unknown system kind {self.kind!r}")

    @classmethod
    def baker(cls) -> "System":
        return cls("baker")

    @classmethod
    def rotation(cls, alpha: float = GOLDEN_ALPHA) -> "System":
        return cls("rotation", alpha)

    @property
    def dimension(self) -> int:
        return 2 if self.kind == "baker" else 1

    @property
    def metric(self) -> str:
        return "euclidean" if self.kind == "baker" else "circle"

    measure = "lebesgue"

    def step(self, p: PhasePoint) -> PhasePoint:
        if self.kind == "baker":
            return baker_step(p)
        return rotation_step(p, self.alpha)

    def inverse(self, p: PhasePoint) -> PhasePoint:
        if self.kind == "baker":
            return baker_step_inverse(p)
        return rotation_step(p, 1.0 - self.alpha)

    def distance(self, p: PhasePoint, q: PhasePoint) -> float:
        if self.kind == "baker":
            return math.dist(p.coords, q.coords)
        return circle_distance(p.coords[0], q.coords[0])

    def step_array(self, pts: np.ndarray) -> np.ndarray:
        """One step applied to an ``(n, d)`` float array of points."""
        if self.kind == "baker":
            return baker_step_array(pts)
        return rotation_step_array(pts, self.alpha)

    def power_array(self, pts: np.ndarray, n: int) -> np.ndarray:
        out = np.asarray(pts, dtype=float)
        for _ in range(n):
            out = self.step_array(out)
        return out


def circle_distance(a: float, b: float) -> float:
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


def baker_step(p: PhasePoint) -> PhasePoint:
    """(2x, y/2) on the left half of the square, (2x - 1, (y + 1)/2) on the right half."""
    if len(p) != 2:
        raise ValueError("the baker's map acts on the unit square")
    if p.exact is not None:
        return PhasePoint.from_exact(_baker_exact(p.exact))
    x, y = p.coords
    if x < 0.5:
        return PhasePoint((2.0 * x, y / 2.0))
    return PhasePoint((2.0 * x - 1.0, _clip_unit((y + 1.0) / 2.0)))


def baker_step_inverse(p: PhasePoint) -> PhasePoint:
    if len(p) != 2:
        raise ValueError("the baker's map acts on the unit square")
    if p.exact is not None:
        return PhasePoint.from_exact(_baker_exact_inverse(p.exact))
    x, y = p.coords
    if y < 0.5:
        return PhasePoint((x / 2.0, 2.0 * y))
    return PhasePoint((_clip_unit((x + 1.0) / 2.0), 2.0 * y - 1.0))


def _baker_exact(f: ExactForm) -> ExactForm:
    if f.on_excluded_set:
        raise ExcludedSet("point has a terminating binary expansion")
    if f.x_width == 0:
        raise WidthExceeded("no known digit of x left to shift out")
    top = f.x >> (f.x_width - 1)
    x = f.x & ((1 << (f.x_width - 1)) - 1)
    y = (top << f.y_width) | f.y
    return ExactForm._trusted(x, f.x_width - 1, y, f.y_width + 1)


def _baker_exact_inverse(f: ExactForm) -> ExactForm:
    if f.on_excluded_set:
        raise ExcludedSet("point has a terminating binary expansion")
    if f.y_width == 0:
        raise WidthExceeded("no known digit of y left to shift out")
    top = f.y >> (f.y_width - 1)
    y = f.y & ((1 << (f.y_width - 1)) - 1)
    x = (top << f.x_width) | f.x
    return ExactForm._trusted(x, f.x_width + 1, y, f.y_width - 1)


def baker_step_array(pts: np.ndarray) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    right = x >= 0.5
    out = np.empty_like(pts)
    out[:, 0] = np.where(right, 2.0 * x - 1.0, 2.0 * x)
    out[:, 1] = np.where(right, (y + 1.0) / 2.0, y / 2.0)
    np.minimum(out, _BELOW_ONE, out=out)
    return out


def rotation_step(m: PhasePoint | float, alpha: float):
    """``m + alpha (mod 1)``; accepts a bare float or a 1-D PhasePoint."""
    if isinstance(m, PhasePoint):
        if len(m) != 1:
            raise ValueError("the rotation acts on the circle [0, 1)")
        return PhasePoint((rotation_step(m.coords[0], alpha),))
    return _clip_unit((m + alpha) % 1.0)


def rotation_step_array(pts: np.ndarray, alpha: float) -> np.ndarray:
    out = np.mod(np.asarray(pts, dtype=float) + alpha, 1.0)
    np.minimum(out, _BELOW_ONE, out=out)
    return out


def orbit(sys: System, p0: PhasePoint, steps: int) -> list[PhasePoint]:
    """``[p0, T(p0), ..., T^(steps-1)(p0)]``.

    Float baker orbits lose one binary digit per step and reach the fixed
    point (0, 0) after about 55 steps; use an exact point, or
    :func:`baker_tape_coords`, for long baker orbits.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if len(p0) != sys.dimension:
        raise ValueError(f"{sys.kind} points have {sys.dimension} coordinate(s)")
    out = [p0]
    p = p0
    for _ in range(steps - 1):
        p = sys.step(p)
        out.append(p)
    return out


def orbit_array(sys: System, p0: PhasePoint, steps: int) -> np.ndarray:
    """Orbit coordinates as a ``(steps, d)`` float array."""
    if p0.exact is not None and sys.kind == "baker":
        tape, origin = baker_tape(p0)
        return baker_tape_coords(tape, origin, steps)
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if sys.kind == "rotation":
        m, a = p0.coords[0], sys.alpha
        out = np.empty(steps)
        for t in range(steps):
            out[t] = m
            m = (m + a) % 1.0
            if m >= 1.0:
                m = _BELOW_ONE
        return out[:, None]
    return np.array([p.coords for p in orbit(sys, p0, steps)])


def sample_invariant(
    sys: System,
    n: int,
    seed: int,
    exact: bool = False,
    width: int = DEFAULT_WIDTH,
    y_width: int | None = None,
) -> list[PhasePoint]:
    """``n`` points drawn i.i.d. from Lebesgue measure, reproducible from ``seed``.

    With ``exact=True`` (baker only) each point carries ``width`` random
    digits of x and ``y_width`` (default ``width``) of y; the unseen tail is
    generic, so such points are off the excluded set.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = make_rng(seed)
    if exact:
        if sys.kind != "baker":
            raise ValueError("exact sampling is only defined for the baker's map")
        yw = width if y_width is None else y_width
        pts = []
        for _ in range(n):
            x = random_int_bits(rng, width)
            y = random_int_bits(rng, yw)
            pts.append(PhasePoint.from_exact(ExactForm(x, width, y, yw)))
        return pts
    arr = rng.random((n, sys.dimension))
    return [PhasePoint(tuple(row)) for row in arr]


def sample_invariant_array(sys: System, n: int, seed: int) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be at least 1")
    return make_rng(seed).random((n, sys.dimension))


# -- long exact baker orbits ------------------------------------------------
#
# A point with exact form is the digit string ... w[-2] w[-1] . w[0] w[1] ...
# with x = 0.w0 w1 ... and y = 0.w-1 w-2 ...; the t-th orbit point reads the
# same string with the binary point moved t places to the right. Storing the
# string once lets a 10**6-step orbit be read off in vectorised form.

_PRECISION = 53


def baker_tape(p: PhasePoint) -> tuple[np.ndarray, int]:
    """Digit string of an exact point and the index of digit ``w[0]``."""
    f = p.exact
    if f is None:
        raise ValueError("a digit tape needs an exact point")
    if f.on_excluded_set:
        raise ExcludedSet("point has a terminating binary expansion")
    xb = _int_to_bits(f.x, f.x_width)
    yb = _int_to_bits(f.y, f.y_width)
    return np.concatenate([yb[::-1], xb]), f.y_width


def _int_to_bits(value: int, width: int) -> np.ndarray:
    if width == 0:
        return np.zeros(0, dtype=np.uint8)
    nbytes = (width + 7) // 8
    raw = (value << (8 * nbytes - width)).to_bytes(nbytes, "big")
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8))[:width]


def baker_tape_coords(tape: np.ndarray, origin: int, steps: int, precision: int = _PRECISION) -> np.ndarray:
    """Float coordinates of ``T^t(p)`` for ``t < steps`` read from a digit tape.

    Each coordinate uses its first ``precision`` known digits (truncation,
    matching :meth:`ExactForm.coords`). Requires ``steps`` known digits of x.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    tape = np.asarray(tape, dtype=np.uint8)
    x_width = tape.size - origin
    if x_width < steps:
        raise WidthExceeded(f"orbit of {steps} steps needs {steps} digits of x, point has {x_width}")
    if not 1 <= precision <= 60:
        raise ValueError("precision must be in 1..60")
    pad = np.zeros(precision, dtype=np.uint8)
    padded = np.concatenate([pad, tape, pad])
    base = precision + origin
    weights = np.left_shift(np.uint64(1), np.arange(precision - 1, -1, -1, dtype=np.uint64))
    scale = 2.0 ** -precision
    out = np.empty((steps, 2))
    chunk = 1 << 16
    for start in range(0, steps, chunk):
        stop = min(steps, start + chunk)
        idx = np.arange(start, stop)
        xw = padded[(base + idx)[:, None] + np.arange(precision)]
        yw = padded[(base + idx - 1)[:, None] - np.arange(precision)]
        out[start:stop, 0] = (xw.astype(np.uint64) @ weights).astype(float) * scale
        out[start:stop, 1] = (yw.astype(np.uint64) @ weights).astype(float) * scale
    return out


def baker_pairs(n: int, samples: int, rng: np.random.Generator, precision: int = _PRECISION) -> tuple[np.ndarray, np.ndarray]:
    """Uniform points ``p`` together with ``T^n(p)``, both read from random exact digit tapes."""
    if n < 0:
        raise ValueError("n must be non-negative")
    length = n + 2 * precision
    weights = np.left_shift(np.uint64(1), np.arange(precision - 1, -1, -1, dtype=np.uint64))
    scale = 2.0 ** -precision
    p = np.empty((samples, 2))
    q = np.empty((samples, 2))
    chunk = max(1, (1 << 24) // length)
    cols = np.arange(precision)
    for start in range(0, samples, chunk):
        m = min(samples, start + chunk) - start
        tape = np.unpackbits(np.frombuffer(rng.bytes(m * length), dtype=np.uint8)).reshape(m, 8 * length)[:, :length]
        for out, origin in ((p, precision), (q, precision + n)):
            xw = tape[:, origin + cols].astype(np.uint64)
            yw = tape[:, origin - 1 - cols].astype(np.uint64)
            out[start:start + m, 0] = (xw @ weights).astype(float) * scale
            out[start:start + m, 1] = (yw @ weights).astype(float) * scale
    return p, q
