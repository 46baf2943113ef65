"""Single-atom template patterns: generation and truncation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TruncationError
from .forward import simulate_series
from .model import Structure

# Extra planes kept beyond the first axial extrema.
_AXIAL_PAD_PLANES = 1


@dataclass(frozen=True, eq=False)
class Template:
    """Truncated single-atom series block with a designated center voxel.

    The center voxel marks the atom position (the contrast-reversal point);
    extents are the block shape in voxels.  Axial elongation holds in
    physical units: wz * z_step >= wx * x_step.
    """

    species_index: int
    block: np.ndarray
    center: tuple
    kind: str
    x_step: float
    y_step: float
    z_step: float

    def __post_init__(self):
        block = np.asarray(self.block, dtype=float)
        if block.ndim != 3:
            raise ValueError("template block must be 3D")
        if not np.all(np.isfinite(block)):
            raise ValueError("template block contains non-finite values")
        cx, cy, cz = self.center
        wx, wy, wz = block.shape
        if not (0 <= cx < wx and 0 <= cy < wy and 0 <= cz < wz):
            raise ValueError(f"center {self.center} outside block {block.shape}")
        object.__setattr__(self, "block", block)
        object.__setattr__(self, "center", (int(cx), int(cy), int(cz)))

    @property
    def extents(self):
        return self.block.shape


def generate_template(species_index, table, config, grid, orientation_id=0):
    """Noiseless defocus series of one atom at the grid center.

    The atom sits at the transverse center of the grid footprint and on the
    middle defocus plane; aperture and thermal settings follow the config,
    shot noise is always off.
    """
    from dataclasses import replace
    cfg = replace(config, dose=None)
    nx, ny = grid.nx, grid.ny
    x_c = grid.x_min + grid.x_step * ((nx - 1) // 2)
    y_c = grid.y_min + grid.y_step * ((ny - 1) // 2)
    z_c = grid.z_planes[(grid.nz - 1) // 2]
    structure = Structure(species_indices=np.array([species_index]),
                          positions=np.array([[x_c, y_c, z_c]]),
                          cube_side=None)
    if cfg.forward_method == "multislice":
        # the one-atom cube spans the z range of the grid
        side = grid.z_planes[-1] - grid.z_planes[0]
        structure = Structure(species_indices=structure.species_indices,
                              positions=structure.positions, cube_side=side)
    return simulate_series(structure, table, cfg, grid,
                           orientation_id=orientation_id)


def _first_extremum_below(profile, center):
    for k in range(center - 1, 0, -1):
        if (profile[k] - profile[k - 1]) * (profile[k + 1] - profile[k]) < 0:
            return k
    return None


def _first_extremum_above(profile, center):
    for k in range(center + 1, len(profile) - 1):
        if (profile[k] - profile[k - 1]) * (profile[k + 1] - profile[k]) < 0:
            return k
    return None


def auto_truncate(series, center_voxel, transverse_halfwidth,
                  species_index=0, axial_halfwidth=None):
    """Crop a single-atom series to the matching template block.

    The axial window runs from the first local extremum of the on-axis
    z-profile below the atom plane to the first above it, padded by one
    plane on each side; the transverse window is +-transverse_halfwidth
    rounded up to whole voxels.  When axial_halfwidth (A) is given, the
    window is additionally capped at +-axial_halfwidth, and that cap is
    used directly if no extremum lies within the series; without the cap a
    missing extremum raises TruncationError.
    """
    grid = series.grid
    ci, cj, ck = center_voxel
    profile = series.values[ci, cj, :]
    k_lo = _first_extremum_below(profile, ck)
    k_hi = _first_extremum_above(profile, ck)
    if k_lo is not None:
        k_lo = max(0, k_lo - _AXIAL_PAD_PLANES)
    if k_hi is not None:
        k_hi = min(grid.nz - 1, k_hi + _AXIAL_PAD_PLANES)

    if axial_halfwidth is not None:
        dz = grid.uniform_z_step()
        if dz is None:
            raise TruncationError("axial cap needs uniformly spaced planes")
        cap = int(round(axial_halfwidth / dz))
        cap_lo = max(0, ck - cap)
        cap_hi = min(grid.nz - 1, ck + cap)
        k_lo = cap_lo if k_lo is None else max(k_lo, cap_lo)
        k_hi = cap_hi if k_hi is None else min(k_hi, cap_hi)
    elif k_lo is None or k_hi is None:
        raise TruncationError(
            "no on-axis extremum inside the series on "
            + ("both sides" if k_lo is None and k_hi is None
               else ("the low-z side" if k_lo is None else "the high-z side"))
            + "; extend the defocus range")

    if not (k_lo < ck < k_hi):
        raise TruncationError("axial window does not bracket the atom plane")

    hx = int(np.ceil(transverse_halfwidth / grid.x_step))
    hy = int(np.ceil(transverse_halfwidth / grid.y_step))
    i0, i1 = ci - hx, ci + hx + 1
    j0, j1 = cj - hy, cj + hy + 1
    if i0 < 0 or j0 < 0 or i1 > grid.nx or j1 > grid.ny:
        raise TruncationError("transverse window exceeds the series grid")
    block = series.values[i0:i1, j0:j1, k_lo:k_hi + 1].copy()
    return Template(species_index=species_index, block=block,
                    center=(ci - i0, cj - j0, ck - k_lo), kind=series.kind,
                    x_step=grid.x_step, y_step=grid.y_step,
                    z_step=grid.uniform_z_step() or 0.0)


def make_template(species_index, table, config, grid, transverse_halfwidth,
                  axial_halfwidth=None, kind=None):
    """Generate and truncate a template for one species in the default layout."""
    from .model import convert_kind
    series = generate_template(species_index, table, config, grid)
    if kind is not None:
        series = convert_kind(series, kind)
    center = ((grid.nx - 1) // 2, (grid.ny - 1) // 2, (grid.nz - 1) // 2)
    return auto_truncate(series, center, transverse_halfwidth,
                         species_index=species_index,
                         axial_halfwidth=axial_halfwidth)
