"""Atomic structure file parsing, cube centering and rigid rotations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import CapacityError, ParseError
from .model import Structure


@dataclass(frozen=True)
class Orientation:
    """Axis-angle rotation tag for one defocus series.

    Positive angles rotate counterclockwise when looking down the axis
    toward the origin (right-hand rule).
    """

    axis: tuple
    angle_deg: float
    id: int = 0

    def __post_init__(self):
        ax = np.asarray(self.axis, dtype=float)
        if ax.shape != (3,):
            raise ValueError("axis must be a 3-vector")
        norm = float(np.linalg.norm(ax))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"axis must be a unit vector, |axis| = {norm}")
        object.__setattr__(self, "axis", tuple(ax))

    def matrix(self):
        rotvec = np.asarray(self.axis) * np.deg2rad(self.angle_deg)
        return Rotation.from_rotvec(rotvec).as_matrix()

    def inverse(self):
        return Orientation(axis=self.axis, angle_deg=-self.angle_deg, id=self.id)


def parse_xyz(text, table):
    """Parse XYZ-format text into a Structure (cube side not yet assigned).

    Line 1 is the atom count, line 2 a comment, then `Symbol x y z` per atom
    with coordinates in A.  Unknown symbols and count mismatches are rejected
    with the offending line number.
    """
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError("line 1: missing atom count")
    try:
        count = int(lines[0].strip())
    except ValueError:
        raise ParseError(f"line 1: atom count is not an integer: {lines[0]!r}")
    if count < 0:
        raise ParseError("line 1: atom count must be >= 0")
    species = []
    positions = []
    lineno = 2
    for lineno, raw in enumerate(lines[2:], start=3):
        if not raw.strip():
            continue
        if len(positions) == count:
            raise ParseError(f"line {lineno}: more atom lines than the "
                             f"declared count {count}")
        parts = raw.split()
        if len(parts) != 4:
            raise ParseError(f"line {lineno}: expected 'Symbol x y z', got {raw!r}")
        try:
            idx = table.index_of(parts[0])
        except KeyError:
            raise ParseError(f"line {lineno}: unknown element symbol {parts[0]!r}")
        try:
            xyz = [float(v) for v in parts[1:]]
        except ValueError:
            raise ParseError(f"line {lineno}: malformed coordinate in {raw!r}")
        species.append(idx)
        positions.append(xyz)
    if len(positions) != count:
        raise ParseError(f"line {lineno + 1}: declared {count} atoms but "
                         f"found {len(positions)}")
    return Structure(species_indices=np.asarray(species, dtype=np.intp),
                     positions=np.asarray(positions, dtype=float).reshape(-1, 3))


def write_xyz(structure, table, comment=""):
    """Render a Structure as XYZ text (6-decimal fixed-point coordinates)."""
    lines = [str(len(structure)), comment]
    for idx, pos in zip(structure.species_indices, structure.positions):
        sym = table[int(idx)].symbol
        lines.append(f"{sym} {pos[0]:.6f} {pos[1]:.6f} {pos[2]:.6f}")
    return "\n".join(lines) + "\n"


def center_in_cube(structure, side):
    """Translate so the bounding-box center sits at the cube center.

    Raises CapacityError when the bounding box does not fit in the cube.
    """
    if len(structure) == 0:
        raise ValueError("cannot center an empty structure")
    if side <= 0:
        raise ValueError("cube side must be positive")
    lo = structure.positions.min(axis=0)
    hi = structure.positions.max(axis=0)
    extent = hi - lo
    if np.any(extent > side):
        raise CapacityError(
            f"structure extent {extent.max():.3f} A exceeds cube side {side} A")
    shift = 0.5 * side - 0.5 * (lo + hi)
    return Structure(species_indices=structure.species_indices,
                     positions=structure.positions + shift,
                     cube_side=float(side))


def rotate(structure, orientation):
    """Rigid rotation about the cube center; the structure must stay inside."""
    if structure.cube_side is None:
        raise ValueError("structure must be centered in a cube before rotation")
    center = np.full(3, 0.5 * structure.cube_side)
    rot = orientation.matrix()
    positions = (structure.positions - center) @ rot.T + center
    eps = 1e-9
    if np.any(positions < -eps) or np.any(positions > structure.cube_side + eps):
        raise CapacityError(
            f"rotation by {orientation.angle_deg} deg moves atoms outside the "
            f"{structure.cube_side} A cube; use a larger cube")
    return Structure(species_indices=structure.species_indices,
                     positions=positions, cube_side=structure.cube_side)


def rotate_points(points, orientation, cube_side):
    """Rotate bare points about the cube center (no containment check)."""
    center = np.full(3, 0.5 * cube_side)
    rot = orientation.matrix()
    return (np.atleast_2d(points) - center) @ rot.T + center
