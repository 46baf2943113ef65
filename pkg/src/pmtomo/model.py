"""Shared data model: grids, species, structures, imaging configuration and
defocus-series containers, plus the physical-constant derivations used
everywhere else."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np
import scipy.constants as sc

INTENSITY = "intensity"
CONTRAST = "contrast"

FORWARD_METHODS = ("analytic", "fourier", "multislice")

# (lambda/2)^2 * q_perp_max^2 must stay below this for the linearized
# (analytic / fourier) forward paths to be trustworthy.
PARAXIAL_LIMIT = 2.0e-4


def derive_wavelength(energy_kev):
    """Relativistic electron de Broglie wavelength in A for a beam energy in keV.

    lambda = h / sqrt(2 m_e e U (1 + e U / (2 m_e c^2))) with U = 1000*energy_kev.
    """
    if energy_kev <= 0:
        raise ValueError(f"energy must be positive, got {energy_kev} keV")
    u = 1000.0 * energy_kev
    p = 2.0 * sc.m_e * sc.e * u * (1.0 + sc.e * u / (2.0 * sc.m_e * sc.c**2))
    return sc.h / math.sqrt(p) * 1e10


@dataclass(frozen=True)
class Grid3:
    """Regular transverse grid times an explicit list of defocus planes.

    Index convention: i <-> x, j <-> y, k <-> z with x = x_min + i*x_step,
    y = y_min + j*y_step, z = z_planes[k].
    """

    nx: int
    ny: int
    x_step: float
    y_step: float
    z_planes: tuple
    x_min: float = 0.0
    y_min: float = 0.0

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("voxel counts must be positive")
        if self.x_step <= 0 or self.y_step <= 0:
            raise ValueError("transverse steps must be positive")
        zp = tuple(float(z) for z in self.z_planes)
        if len(zp) < 1:
            raise ValueError("need at least one defocus plane")
        if any(b <= a for a, b in zip(zp, zp[1:])):
            raise ValueError("z_planes must be strictly increasing")
        object.__setattr__(self, "z_planes", zp)

    @property
    def nz(self):
        return len(self.z_planes)

    @property
    def shape(self):
        return (self.nx, self.ny, self.nz)

    def x_coords(self):
        return self.x_min + self.x_step * np.arange(self.nx)

    def y_coords(self):
        return self.y_min + self.y_step * np.arange(self.ny)

    def z_coords(self):
        return np.asarray(self.z_planes)

    def coordinate(self, i, j, k):
        """(x, y, z) in A of voxel (i, j, k)."""
        return (
            self.x_min + i * self.x_step,
            self.y_min + j * self.y_step,
            self.z_planes[k],
        )

    def nearest_index(self, x, y, z):
        """Voxel (i, j, k) nearest to a point; clipped to the grid."""
        i = int(np.clip(round((x - self.x_min) / self.x_step), 0, self.nx - 1))
        j = int(np.clip(round((y - self.y_min) / self.y_step), 0, self.ny - 1))
        zp = np.asarray(self.z_planes)
        k = int(np.argmin(np.abs(zp - z)))
        return i, j, k

    def uniform_z_step(self):
        """Plane spacing if uniform, else None."""
        if self.nz < 2:
            return None
        steps = np.diff(self.z_planes)
        if np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
            return float(steps[0])
        return None


def make_grid(cube_side, transverse_step, z_planes):
    """Grid covering [0, cube_side]^2 transversally (endpoints included)."""
    n = int(round(cube_side / transverse_step)) + 1
    return Grid3(nx=n, ny=n, x_step=transverse_step, y_step=transverse_step,
                 z_planes=tuple(z_planes))


@dataclass(frozen=True)
class AtomSpecies:
    """One element's Gaussian-potential parameters.

    c is the integral potential coefficient in A^3 (2E*c equals the integrated
    single-atom potential at the 200 kV reference energy), sigma the Gaussian
    width in A.
    """

    symbol: str
    z_number: int
    c: float
    sigma: float

    def __post_init__(self):
        if not self.symbol:
            raise ValueError("species symbol must be nonempty")
        if self.z_number <= 0:
            raise ValueError(f"{self.symbol}: atomic number must be positive")
        if self.c <= 0:
            raise ValueError(f"{self.symbol}: c must be positive")
        if self.sigma <= 0:
            raise ValueError(f"{self.symbol}: sigma must be positive")


@dataclass(frozen=True)
class SpeciesTable:
    """Ordered species list; the order is the matcher's search order."""

    species: tuple

    def __post_init__(self):
        sp = tuple(self.species)
        if not sp:
            raise ValueError("species table is empty")
        symbols = [s.symbol for s in sp]
        if len(set(symbols)) != len(symbols):
            raise ValueError("duplicate symbols in species table")
        object.__setattr__(self, "species", sp)

    def __len__(self):
        return len(self.species)

    def __iter__(self):
        return iter(self.species)

    def __getitem__(self, idx):
        return self.species[idx]

    def index_of(self, symbol):
        for i, s in enumerate(self.species):
            if s.symbol == symbol:
                return i
        raise KeyError(f"unknown species symbol {symbol!r}")

    def get(self, symbol):
        return self.species[self.index_of(symbol)]

    @property
    def symbols(self):
        return tuple(s.symbol for s in self.species)

    @classmethod
    def from_text(cls, text):
        """Parse the plain-text table: `symbol z_number c_A3 sigma_A` per line,
        '#' starts a comment."""
        species = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(
                    f"species table line {lineno}: expected "
                    f"'symbol z_number c sigma', got {raw!r}")
            try:
                species.append(AtomSpecies(parts[0], int(parts[1]),
                                           float(parts[2]), float(parts[3])))
            except ValueError as exc:
                raise ValueError(f"species table line {lineno}: {exc}") from exc
        return cls(tuple(species))

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def to_text(self):
        lines = ["# symbol z_number c_A3 sigma_A"]
        for s in self.species:
            lines.append(f"{s.symbol} {s.z_number} {s.c:.8e} {s.sigma:.6f}")
        return "\n".join(lines) + "\n"

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())

    @classmethod
    def default(cls):
        """The shipped table (S, O, N, C, H; heavy to light search order)."""
        text = resources.files("pmtomo.data").joinpath(
            "species_default.txt").read_text(encoding="utf-8")
        return cls.from_text(text)


@dataclass(frozen=True, eq=False)
class Structure:
    """Atoms inside a simulation cube.

    positions is an (M, 3) array in A; species_indices indexes a SpeciesTable.
    cube_side is None until the structure has been centered in a cube.
    """

    species_indices: np.ndarray
    positions: np.ndarray
    cube_side: float | None = None

    def __post_init__(self):
        si = np.asarray(self.species_indices, dtype=np.intp)
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if pos.size == 0:
            pos = pos.reshape(0, 3)
        if pos.shape[1] != 3 or si.shape[0] != pos.shape[0]:
            raise ValueError("positions must be (M, 3) matching species_indices")
        object.__setattr__(self, "species_indices", si)
        object.__setattr__(self, "positions", pos)

    def __len__(self):
        return self.positions.shape[0]

    def counts(self, table):
        out = {}
        for idx in self.species_indices:
            sym = table[int(idx)].symbol
            out[sym] = out.get(sym, 0) + 1
        return out


@dataclass(frozen=True)
class ImagingConfig:
    """Beam, optics and detector settings for one simulated series.

    energy_kev is the accelerating voltage; aperture_mrad None means an
    unlimited objective aperture; dose None means a noiseless detector;
    dose otherwise is the mean count per voxel on unit background.
    """

    energy_kev: float
    incident_intensity: float = 1.0
    aperture_mrad: float | None = None
    thermal_rms: float = 0.0
    dose: float | None = None
    forward_method: str = "analytic"
    slice_thickness: float = 0.5
    rng_seed: int = 0
    resolution_target: float = 1.0

    def __post_init__(self):
        if self.energy_kev <= 0:
            raise ValueError("energy must be positive")
        if self.incident_intensity <= 0:
            raise ValueError("incident intensity must be positive")
        if self.aperture_mrad is not None and self.aperture_mrad <= 0:
            raise ValueError("aperture semi-angle must be positive or None")
        if self.thermal_rms < 0:
            raise ValueError("thermal rms displacement must be >= 0")
        if self.dose is not None and self.dose <= 0:
            raise ValueError("dose must be positive or None")
        if self.forward_method not in FORWARD_METHODS:
            raise ValueError(f"unknown forward method {self.forward_method!r}")
        if self.slice_thickness <= 0:
            raise ValueError("slice thickness must be positive")
        if self.resolution_target <= 0:
            raise ValueError("resolution target must be positive")
        if self.forward_method in ("analytic", "fourier"):
            p = paraxial_parameter(self)
            if p >= PARAXIAL_LIMIT:
                raise ValueError(
                    f"paraxial smallness parameter {p:.2e} exceeds "
                    f"{PARAXIAL_LIMIT:.0e}; the linearized forward paths are "
                    f"not valid at this energy/resolution")

    @property
    def wavelength(self):
        return derive_wavelength(self.energy_kev)

    @property
    def energy_volts(self):
        return 1000.0 * self.energy_kev


def paraxial_parameter(config):
    """(lambda/2)^2 * (q_x,max^2 + q_y,max^2) at the configured resolution target.

    q_max per axis is the Nyquist frequency of the target resolution,
    further limited by the objective aperture when one is present.
    """
    lam = config.wavelength
    q_axis = 1.0 / (2.0 * config.resolution_target)
    qa = aperture_cutoff(config)
    if qa is not None:
        q_axis = min(q_axis, qa)
    return (lam / 2.0) ** 2 * 2.0 * q_axis**2


def aperture_cutoff(config):
    """Objective-aperture spatial-frequency cutoff theta/lambda in 1/A.

    Returns None for an unlimited aperture.
    """
    if config.aperture_mrad is None:
        return None
    return (config.aperture_mrad * 1e-3) / config.wavelength


@dataclass(frozen=True, eq=False)
class DefocusSeries:
    """A 3D scalar field (intensity or contrast) on a Grid3."""

    grid: Grid3
    values: np.ndarray
    kind: str
    config: ImagingConfig
    orientation_id: int = 0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise ValueError(
                f"values shape {vals.shape} does not match grid {self.grid.shape}")
        if self.kind not in (INTENSITY, CONTRAST):
            raise ValueError(f"unknown series kind {self.kind!r}")
        object.__setattr__(self, "values", vals)

    def with_values(self, values, kind=None):
        return DefocusSeries(grid=self.grid, values=values,
                             kind=self.kind if kind is None else kind,
                             config=self.config,
                             orientation_id=self.orientation_id)


def convert_kind(series, target):
    """Convert between intensity and contrast via K = 1 - I/I_in."""
    if target not in (INTENSITY, CONTRAST):
        raise ValueError(f"unknown series kind {target!r}")
    if series.kind == target:
        return series
    i_in = series.config.incident_intensity
    if target == CONTRAST:
        values = 1.0 - series.values / i_in
    else:
        values = i_in * (1.0 - series.values)
    return series.with_values(values, kind=target)
