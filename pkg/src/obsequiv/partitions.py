"""Finite-valued observation functions built from rectangle partitions.

A :class:`Partition` is a list of half-open boxes ``[lo, hi)`` covering the
phase space, one representative output value per cell, and symbol labels.
Observing a point returns the index of the cell containing it; the
representative is the value the observation function reports.
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .dynamics import PhasePoint, System, baker_tape, baker_tape_coords, orbit_array
from .errors import NoCell, ResourceLimit
from .processes import SymbolSequence

DYADIC_CAP = 8


@dataclass(frozen=True)
class Box:
    """Half-open axis-aligned box ``[lo, hi)`` in ``[0, 1)^d``."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi) or not lo:
            raise ValueError("box corners must have the same positive dimension")
        for a, b in zip(lo, hi):
            if not 0.0 <= a < b <= 1.0:
                raise ValueError(f"degenerate or out-of-range box side [{a}, {b})")

    @classmethod
    def _trusted(cls, lo: tuple[float, ...], hi: tuple[float, ...]) -> "Box":
        # Skips validation for sides taken from checked grid edges.
        obj = object.__new__(cls)
        object.__setattr__(obj, "__dict__", {"lo": lo, "hi": hi})
        return obj

    @property
    def dimension(self) -> int:
        return len(self.lo)

    @property
    def measure(self) -> float:
        return math.prod(b - a for a, b in zip(self.lo, self.hi))

    def contains(self, coords: Sequence[float]) -> bool:
        return all(a <= c < b for a, c, b in zip(self.lo, coords, self.hi))

    def contains_array(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(len(pts), -1)
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        return np.all((pts >= lo) & (pts < hi), axis=1)

    def intersection(self, other: "Box") -> "Box | None":
        lo = tuple(max(a, b) for a, b in zip(self.lo, other.lo))
        hi = tuple(min(a, b) for a, b in zip(self.hi, other.hi))
        if any(a >= b for a, b in zip(lo, hi)):
            return None
        return Box(lo, hi)

    def to_json(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi)}


@dataclass(frozen=True)
class Partition:
    """Cells, one representative per cell, and labels.

    ``grid`` optionally records that the cells form a product grid: one
    array of edges per axis, with cells enumerated with the first axis
    slowest. Grid partitions observe by binary search instead of a scan.
    """

    cells: tuple[Box, ...]
    reps: tuple[tuple[float, ...], ...]
    labels: tuple[str, ...]
    grid: tuple[tuple[float, ...], ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        cells = tuple(self.cells)
        reps = tuple(map(tuple, np.asarray(self.reps, dtype=float).reshape(len(cells), -1).tolist()))
        labels = tuple(str(s) for s in self.labels)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "reps", reps)
        object.__setattr__(self, "labels", labels)
        if not cells:
            raise ValueError("a partition needs at least one cell")
        if not len(cells) == len(reps) == len(labels):
            raise ValueError("cells, representatives and labels must have equal length")
        dim = cells[0].dimension
        if self.grid is not None:
            mixed = len(self.grid) != dim or np.asarray(reps).shape != (len(cells), dim)
        else:
            mixed = any(c.dimension != dim for c in cells) or any(len(r) != dim for r in reps)
        if mixed:
            raise ValueError("cells and representatives must share one dimension")
        if len(set(reps)) != len(reps):
            raise ValueError("representatives must be pairwise distinct")
        if len(set(labels)) != len(labels):
            raise ValueError("labels must be pairwise distinct")
        if self.grid is not None:
            r = np.asarray(reps)
            lo = _grid_corners([e[:-1] for e in self.grid])
            hi = _grid_corners([e[1:] for e in self.grid])
            if len(lo) != len(cells):
                raise ValueError("grid edges do not match the number of cells")
            outside = np.flatnonzero(~np.all((r >= lo) & (r < hi), axis=1))
            if outside.size:
                i = int(outside[0])
                raise ValueError(f"representative {reps[i]} lies outside cell {i}")
        else:
            for i, (c, r) in enumerate(zip(cells, reps)):
                if not c.contains(r):
                    raise ValueError(f"representative {r} lies outside cell {i}")
            for a, b in itertools.combinations(cells, 2):
                if a.intersection(b) is not None:
                    raise ValueError(f"cells {a} and {b} overlap")
        if self.grid is not None:
            total = math.prod(math.fsum(np.diff(e)) for e in self.grid)
        else:
            total = math.fsum(c.measure for c in cells)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"cells cover measure {total}, not 1")

    def __len__(self) -> int:
        return len(self.cells)

    @property
    def dimension(self) -> int:
        return self.cells[0].dimension

    def observe(self, p: PhasePoint | Sequence[float]) -> int:
        """Index of the cell containing ``p``."""
        coords = p.coords if isinstance(p, PhasePoint) else tuple(p)
        if len(coords) != self.dimension:
            raise ValueError("point and partition dimensions differ")
        if self.grid is not None:
            idx = self.observe_array(np.asarray([coords], dtype=float))
            return int(idx[0])
        for i, c in enumerate(self.cells):
            if c.contains(coords):
                return i
        raise NoCell(f"{coords} lies in no cell")

    def observe_array(self, pts: np.ndarray) -> np.ndarray:
        """Cell indices for an ``(n, d)`` array of points."""
        pts = np.asarray(pts, dtype=float).reshape(len(pts), -1)
        if pts.shape[1] != self.dimension:
            raise ValueError("point and partition dimensions differ")
        if self.grid is not None:
            idx = np.zeros(len(pts), dtype=np.int64)
            bad = np.zeros(len(pts), dtype=bool)
            for axis, edges in enumerate(self.grid):
                e = np.asarray(edges)
                k = np.searchsorted(e, pts[:, axis], side="right") - 1
                bad |= (k < 0) | (k >= len(e) - 1)
                idx = idx * (len(e) - 1) + np.clip(k, 0, len(e) - 2)
            if bad.any():
                raise NoCell(f"{int(bad.sum())} point(s) outside the grid")
            return idx
        idx = np.full(len(pts), -1, dtype=np.int64)
        for i, c in enumerate(self.cells):
            idx[c.contains_array(pts)] = i
        if (idx < 0).any():
            raise NoCell(f"{int((idx < 0).sum())} point(s) lie in no cell")
        return idx

    def cell_measure(self, i: int) -> float:
        return self.cells[i].measure

    def representative(self, i: int) -> tuple[float, ...]:
        return self.reps[i]

    def to_json(self) -> dict:
        return {
            "cells": [c.to_json() for c in self.cells],
            "reps": [list(r) for r in self.reps],
            "labels": list(self.labels),
        }

    @classmethod
    def from_json(cls, data: dict | str) -> "Partition":
        if isinstance(data, str):
            data = json.loads(data)
        cells = [Box(c["lo"], c["hi"]) for c in data["cells"]]
        labels = data.get("labels") or [f"s{i + 1}" for i in range(len(cells))]
        return cls(cells, data["reps"], labels)


def _grid_corners(axes) -> np.ndarray:
    mesh = np.meshgrid(*[np.asarray(a, dtype=float) for a in axes], indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def cell_measure(part: Partition, i: int) -> float:
    return part.cell_measure(i)


def observe(p: PhasePoint, part: Partition) -> int:
    return part.observe(p)


def grid_partition(edges: Sequence[Sequence[float]], reps=None, labels=None) -> Partition:
    """Product partition from per-axis edges (each running from 0 to 1).

    Cells are enumerated with the first axis slowest. Default
    representatives are cell centres.
    """
    edges = [tuple(float(v) for v in e) for e in edges]
    for e in edges:
        if len(e) < 2 or e[0] != 0.0 or e[-1] != 1.0 or any(a >= b for a, b in zip(e, e[1:])):
            raise ValueError("edges must increase strictly from 0 to 1")
    los = itertools.product(*[e[:-1] for e in edges])
    his = itertools.product(*[e[1:] for e in edges])
    cells = [Box._trusted(lo, hi) for lo, hi in zip(los, his)]
    if reps is None:
        reps = [tuple((a + b) / 2 for a, b in zip(c.lo, c.hi)) for c in cells]
    labels = [f"s{i + 1}" for i in range(len(cells))] if labels is None else labels
    return Partition(cells, reps, labels, grid=tuple(edges))


def left_right_partition() -> Partition:
    """Left and right halves of the square, split at x = 1/2, labelled s1 and s2."""
    return grid_partition([(0.0, 0.5, 1.0), (0.0, 1.0)], reps=[(0.25, 0.5), (0.75, 0.5)], labels=["s1", "s2"])


def halves_partition() -> Partition:
    """Circle split into ``[0, 1/2)`` (L) and ``[1/2, 1)`` (R)."""
    return grid_partition([(0.0, 0.5, 1.0)], reps=[(0.25,), (0.75,)], labels=["L", "R"])


def dyadic_offset(n: int) -> float:
    """Offset sqrt(2)/2**(n+1) of each representative from its cell's lower-left corner."""
    return math.sqrt(2.0) / 2 ** (n + 1)


def dyadic_partition(n: int, cap: int = DYADIC_CAP) -> Partition:
    """The ``2**(2n)``-cell grid of side ``2**-n`` over the square.

    Cell ``k = ix * 2**n + iy`` is ``[ix, ix+1) x [iy, iy+1)`` scaled by
    ``2**-n``, so ``ix`` is read from the first ``n`` binary digits of x and
    ``iy`` from those of y. Its representative sits at offset
    ``sqrt(2)/2**(n+1)`` from the lower-left corner in both coordinates.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > cap:
        raise ResourceLimit(f"dyadic partition with 4**{n} cells exceeds cap n <= {cap}")
    side = 2**n
    edges = tuple(k / side for k in range(side + 1))
    off = dyadic_offset(n)
    reps = [(ix / side + off, iy / side + off) for ix in range(side) for iy in range(side)]
    labels = [f"c{ix}_{iy}" for ix in range(side) for iy in range(side)]
    return grid_partition([edges, edges], reps=reps, labels=labels)


def parse_partition(spec: str) -> Partition:
    """``leftright`` | ``halves`` | ``dyadic:N`` | path to a partition JSON file."""
    if spec in ("leftright", "left-right", "lr"):
        return left_right_partition()
    if spec == "halves":
        return halves_partition()
    if spec.startswith("dyadic:"):
        return dyadic_partition(int(spec.split(":", 1)[1]))
    with open(spec) as fh:
        return Partition.from_json(json.load(fh))


def coarse_grain(sys: System, p0: PhasePoint, steps: int, part: Partition) -> SymbolSequence:
    """Symbols ``observe(T^t(p0))`` for ``t < steps``."""
    if part.dimension != sys.dimension:
        raise ValueError("partition and system dimensions differ")
    if sys.kind == "baker" and p0.exact is None and steps > 50:
        warnings.warn(
            "float baker orbits collapse onto (0, 0) after about 55 steps; use an exact initial point",
            RuntimeWarning,
            stacklevel=2,
        )
    if sys.kind == "baker" and p0.exact is not None:
        tape, origin = baker_tape(p0)
        pts = baker_tape_coords(tape, origin, steps)
    else:
        pts = orbit_array(sys, p0, steps)
    return SymbolSequence(len(part), part.observe_array(pts), origin="coarse-grained")


def baker_image_matrix(part: Partition) -> np.ndarray:
    """Exact one-step transition probabilities of the coarse-grained baker process.

    Entry ``(i, j)`` is ``mu(T(cell_i) & cell_j) / mu(cell_i)``. The baker
    map sends the left half affinely onto the bottom half and the right
    half onto the top half, so images of boxes are boxes.
    """
    if part.dimension != 2:
        raise ValueError("baker partitions are two-dimensional")
    k = len(part)
    out = np.zeros((k, k))
    halves = [
        (Box((0.0, 0.0), (0.5, 1.0)), lambda b: Box((2 * b.lo[0], b.lo[1] / 2), (2 * b.hi[0], b.hi[1] / 2))),
        (Box((0.5, 0.0), (1.0, 1.0)), lambda b: Box((2 * b.lo[0] - 1, (b.lo[1] + 1) / 2), (2 * b.hi[0] - 1, (b.hi[1] + 1) / 2))),
    ]
    images = [[] for _ in range(k)]
    for i, cell in enumerate(part.cells):
        for half, affine in halves:
            piece = cell.intersection(half)
            if piece is not None:
                images[i].append(affine(piece))
    for i, cell in enumerate(part.cells):
        row = []
        for j, target in enumerate(part.cells):
            area = Fraction(0)
            for img in images[i]:
                hit = img.intersection(target)
                if hit is not None:
                    area += _box_fraction(hit)
            row.append(area)
        denom = _box_fraction(cell)
        out[i] = [float(a / denom) for a in row]
    return out


def _box_fraction(b: Box) -> Fraction:
    out = Fraction(1)
    for a, c in zip(b.lo, b.hi):
        out *= Fraction(c) - Fraction(a)
    return out


def rotation_image_matrix(part: Partition, alpha: float) -> np.ndarray:
    """Exact one-step transition probabilities of a coarse-grained rotation.

    Cells are arcs ``[a, b)``; the image of an arc is the arc shifted by
    ``alpha``, split at 0 when it wraps.
    """
    if part.dimension != 1:
        raise ValueError("rotation partitions are one-dimensional")
    k = len(part)
    out = np.zeros((k, k))
    for i, cell in enumerate(part.cells):
        a, b = cell.lo[0] + alpha, cell.hi[0] + alpha
        pieces = _wrap_arc(a, b)
        for j, target in enumerate(part.cells):
            c, d = target.lo[0], target.hi[0]
            out[i, j] = sum(max(0.0, min(hi, d) - max(lo, c)) for lo, hi in pieces) / cell.measure
    return out


def _wrap_arc(a: float, b: float) -> list[tuple[float, float]]:
    shift = math.floor(a)
    a, b = a - shift, b - shift
    if b <= 1.0:
        return [(a, b)]
    return [(a, 1.0), (0.0, b - 1.0)]
