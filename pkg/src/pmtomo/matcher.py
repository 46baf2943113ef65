"""Similarity-coefficient search: localize known numbers of atoms per species.

The hot kernel (an exhaustive L1 scan over 3D template shifts) is compiled
from _scan.pyx; when the extension is unavailable a bit-compatible numpy
fallback is used.  `active_backend()` reports which one is live.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _scan_np
from .errors import ExhaustionError
from .model import CONTRAST, INTENSITY

try:
    from . import _scan as _scan_ext
except ImportError:  # extension not built; numpy fallback
    _scan_ext = None

SENTINEL = -1.0

INTENSITY_MODE = "intensity"
CONTRAST_ABS_MODE = "contrast-abs"

_KIND_FOR_MODE = {INTENSITY_MODE: INTENSITY, CONTRAST_ABS_MODE: CONTRAST}


def active_backend():
    """'compiled' when the Cython extension is importable, else 'numpy'."""
    return "compiled" if _scan_ext is not None else "numpy"


def _resolve_threads(threads):
    if threads and threads > 0:
        return int(threads)
    return os.cpu_count() or 1


@dataclass(frozen=True)
class MatchResult:
    """One localized atom: species, position in A, similarity, source series."""

    species_index: int
    position: tuple
    similarity: float
    orientation_id: int = 0
    refined: bool = False

    def __post_init__(self):
        if not -1e-12 <= self.similarity <= 1.0 + 1e-12:
            raise ValueError(f"similarity {self.similarity} outside [0, 1]")
        object.__setattr__(self, "position",
                           tuple(float(v) for v in self.position))


@dataclass(frozen=True)
class SearchPlan:
    """Counts per species (table order), exclusion radius and comparison mode."""

    counts: tuple
    exclusion_radius: float = 1.0
    comparison_kind: str = CONTRAST_ABS_MODE
    refine: bool = False

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if any(c < 0 for c in counts):
            raise ValueError("per-species counts must be >= 0")
        if self.exclusion_radius <= 0:
            raise ValueError("exclusion radius must be positive")
        if self.comparison_kind not in _KIND_FOR_MODE:
            raise ValueError(f"unknown comparison kind {self.comparison_kind!r}")
        object.__setattr__(self, "counts", counts)


def _mode_id(comparison_kind):
    return 0 if comparison_kind == INTENSITY_MODE else 1


def similarity(test, template, shift):
    """Similarity coefficient of one template shift (scalar reference).

    C = 1 - sum|A_test - A_tmpl| / sum(B_test + B_tmpl) over the template
    support, accumulated in C order (k innermost) exactly like the scan
    kernels; a 0/0 denominator counts as a perfect match (C = 1).
    """
    mode = 1 if test.kind == CONTRAST else 0
    values = test.values
    block = template.block
    cx, cy, cz = template.center
    wx, wy, wz = block.shape
    i0, j0, k0 = shift[0] - cx, shift[1] - cy, shift[2] - cz
    if (i0 < 0 or j0 < 0 or k0 < 0 or i0 + wx > values.shape[0]
            or j0 + wy > values.shape[1] or k0 + wz > values.shape[2]):
        raise ValueError(f"shift {tuple(shift)} places the template outside "
                         f"the test grid")
    num = 0.0
    den = 0.0
    for a in range(wx):
        for b in range(wy):
            for c in range(wz):
                t = float(values[i0 + a, j0 + b, k0 + c])
                p = float(block[a, b, c])
                num += abs(t - p)
                den += (t + p) if mode == 0 else (abs(t) + abs(p))
    if den == 0.0:
        return 1.0
    return 1.0 - num / den


def similarity_map(test, template, exclusion=None, threads=0, backend=None):
    """Similarity at every admissible, non-excluded shift; SENTINEL elsewhere.

    Border shifts where the template would overhang the test grid are never
    evaluated.  `exclusion` is an optional boolean mask over test voxels.
    """
    values = np.ascontiguousarray(test.values)
    block = np.ascontiguousarray(template.block)
    if exclusion is None:
        skip = np.zeros(values.shape, dtype=np.uint8)
    else:
        if exclusion.shape != values.shape:
            raise ValueError("exclusion mask shape must match the test grid")
        skip = np.ascontiguousarray(exclusion, dtype=np.uint8)
    out = np.full(values.shape, SENTINEL)
    mode = 1 if test.kind == CONTRAST else 0
    cx, cy, cz = template.center
    if backend is None:
        backend = active_backend()
    if backend == "compiled":
        if _scan_ext is None:
            raise RuntimeError("compiled scan backend is not available")
        _scan_ext.scan(values, block, skip, cx, cy, cz, mode, out,
                       _resolve_threads(threads))
    elif backend == "numpy":
        _scan_np.scan(values, block, skip, cx, cy, cz, mode, out, 0)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return out


def _argmax_lexicographic(cmap):
    """Argmax; ties broken by smallest (k, j, i)."""
    flat = np.argmax(cmap.transpose(2, 1, 0))
    k, j, i = np.unravel_index(flat, (cmap.shape[2], cmap.shape[1], cmap.shape[0]))
    return int(i), int(j), int(k)


def refine_subvoxel(cmap, peak):
    """Separable 3-point parabolic peak interpolation, clamped to +-0.5 voxel.

    Returns (offsets, refined) where offsets are per-axis voxel fractions.
    A peak on the map boundary, or one with an excluded neighbor, is
    returned unrefined.
    """
    i, j, k = peak
    offsets = [0.0, 0.0, 0.0]
    shape = cmap.shape
    if not all(0 < p < s - 1 for p, s in zip(peak, shape)):
        return (0.0, 0.0, 0.0), False
    for axis in range(3):
        lo = list(peak)
        hi = list(peak)
        lo[axis] -= 1
        hi[axis] += 1
        a = cmap[tuple(lo)]
        b = cmap[peak]
        c = cmap[tuple(hi)]
        if a < 0.0 or c < 0.0:
            return (0.0, 0.0, 0.0), False
        denom = a - 2.0 * b + c
        if denom == 0.0:
            offsets[axis] = 0.0
        else:
            offsets[axis] = float(np.clip((a - c) / (2.0 * denom), -0.5, 0.5))
    return tuple(offsets), True


def _exclusion_ball(grid, position, radius):
    xs = grid.x_coords()
    ys = grid.y_coords()
    zs = grid.z_coords()
    d2 = ((xs[:, None, None] - position[0]) ** 2
          + (ys[None, :, None] - position[1]) ** 2
          + (zs[None, None, :] - position[2]) ** 2)
    return d2 <= radius**2


def find_atoms(test, templates, table, plan, threads=0):
    """Greedy exclusion-aware search for plan.counts[n] atoms per species.

    Species are processed in table order; each found maximum adds a
    spherical exclusion around it that applies to every later step.  The
    test series kind must match the plan's comparison mode.  Raises
    ExhaustionError when a species runs out of admissible candidates.
    """
    expected_kind = _KIND_FOR_MODE[plan.comparison_kind]
    if test.kind != expected_kind:
        raise ValueError(
            f"test series kind {test.kind!r} does not match comparison mode "
            f"{plan.comparison_kind!r}; convert the series first")
    if len(plan.counts) != len(templates):
        raise ValueError("plan counts and templates length mismatch")
    grid = test.grid
    excluded = np.zeros(grid.shape, dtype=bool)
    results = []
    for species_index, (template, count) in enumerate(zip(templates, plan.counts)):
        if count == 0:
            continue
        if template.kind != test.kind:
            raise ValueError(
                f"template kind {template.kind!r} does not match test series")
        cmap = similarity_map(test, template, exclusion=excluded, threads=threads)
        found = []
        for m in range(count):
            peak = _argmax_lexicographic(cmap)
            best = cmap[peak]
            if best < 0.0:
                raise ExhaustionError(table[species_index].symbol, m, count)
            position = grid.coordinate(*peak)
            refined = False
            if plan.refine:
                offsets, refined = refine_subvoxel(cmap, peak)
                if refined:
                    dz = grid.uniform_z_step() or 0.0
                    position = (position[0] + offsets[0] * grid.x_step,
                                position[1] + offsets[1] * grid.y_step,
                                position[2] + offsets[2] * dz)
            found.append(MatchResult(species_index=species_index,
                                     position=position,
                                     similarity=float(best),
                                     orientation_id=test.orientation_id,
                                     refined=refined))
            ball = _exclusion_ball(grid, grid.coordinate(*peak),
                                   plan.exclusion_radius)
            excluded |= ball
            cmap[ball] = SENTINEL
        found.sort(key=lambda r: (-r.similarity, r.position[2], r.position[1],
                                  r.position[0]))
        results.extend(found)
    return results
