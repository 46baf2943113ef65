"""Defocus-series forward models for sparse Gaussian-atom structures.

Three interchangeable paths produce a series from a Structure:

* ``contrast_analytic`` evaluates the closed-form contrast of each atom, a
  paraxially propagated Gaussian beam around the atom plane.
* ``contrast_fourier`` builds the same linearized model per plane in
  reciprocal space and inverse-transforms on a padded grid.
* ``multislice_series`` propagates the full wave through the potential
  (phase transmission per slice, Fresnel propagation between slices) and
  backpropagates the exit wave to every requested plane.

The free-space Fresnel propagator multiplies the forward-propagating
spectrum by exp(-i pi lambda z q_perp^2); with transmission t = exp(i phi),
phi = pi/(lambda E) * projected potential, the linearized multislice
intensity carries the 2 sin(pi lambda (z - z') q^2) kernel of the
first-Born defocused image, so all three paths agree to first order
(see docs/conventions.md).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import ConfigurationError
from .model import (CONTRAST, INTENSITY, DefocusSeries, SpeciesTable,
                    aperture_cutoff, convert_kind)

# Per-atom transverse evaluation window: exp(-u^2/w^2) below ~4e-19 is dropped.
_WINDOW_SIGMAS = 6.5


@dataclass(frozen=True)
class GaussianBeamState:
    """Reduced defocus and beam width of one atom's contrast at one plane."""

    delta_z_tilde: float
    w_sq: float


def beam_state(sigma, wavelength, z, z_atom):
    dzt = wavelength * (z - z_atom) / (2.0 * np.pi * sigma**2)
    return GaussianBeamState(delta_z_tilde=dzt,
                             w_sq=2.0 * sigma**2 * (1.0 + dzt**2))


def apply_thermal(table, thermal_rms):
    """Fold isotropic thermal smearing into the species widths (quadrature)."""
    if thermal_rms < 0:
        raise ValueError("thermal rms must be >= 0")
    if thermal_rms == 0:
        return table
    from dataclasses import replace
    return SpeciesTable(tuple(
        replace(s, sigma=math.hypot(s.sigma, thermal_rms)) for s in table))


def contrast_point(c, sigma, wavelength, u_sq, z, z_atom):
    """Scalar/broadcast closed-form contrast of one Gaussian atom.

    u_sq is the squared transverse distance to the atom axis in A^2.
    The amplitude decays as w0/w(z), the width and phase follow Gaussian-beam
    propagation, and the sign change at z = z_atom comes from the odd sine
    and arctan factors.
    """
    st = beam_state(sigma, wavelength, z, z_atom)
    dzt, w_sq = st.delta_z_tilde, st.w_sq
    amp = 2.0 * c / (wavelength * sigma**2 * np.sqrt(1.0 + dzt**2))
    return amp * np.exp(-u_sq / w_sq) * np.sin(dzt * u_sq / w_sq - np.arctan(dzt))


def delta_atom_contrast(c, wavelength, u, dz):
    """Point-atom contrast -(4 pi / lambda^2) c cos(pi u^2/(lambda dz)) / dz.

    Diagnostic scalar only: it is singular at dz = 0 and is the sigma -> 0
    limit of contrast_point.  Never evaluated on grids.
    """
    if dz == 0:
        raise ValueError("point-atom contrast is singular in the atom plane")
    return -(4.0 * np.pi / wavelength**2) * c * np.cos(
        np.pi * u**2 / (wavelength * dz)) / dz


def contrast_analytic(structure, table, config, grid, orientation_id=0):
    """Closed-form contrast series of a structure (kind = contrast).

    Thermal smearing is folded into the species widths.  Each atom is
    evaluated on a transverse window where its Gaussian envelope is above
    ~1e-18 of the peak; outside the window its contribution is exactly zero.
    """
    eff = apply_thermal(table, config.thermal_rms)
    lam = config.wavelength
    values = np.zeros(grid.shape)
    xs = grid.x_coords()
    ys = grid.y_coords()
    for sp_idx, pos in zip(structure.species_indices, structure.positions):
        s = eff[int(sp_idx)]
        ax, ay, az = pos
        for k, z in enumerate(grid.z_planes):
            st = beam_state(s.sigma, lam, z, az)
            r_cut = _WINDOW_SIGMAS * math.sqrt(st.w_sq)
            i0 = max(0, int(math.ceil((ax - r_cut - grid.x_min) / grid.x_step)))
            i1 = min(grid.nx, int(math.floor((ax + r_cut - grid.x_min) / grid.x_step)) + 1)
            j0 = max(0, int(math.ceil((ay - r_cut - grid.y_min) / grid.y_step)))
            j1 = min(grid.ny, int(math.floor((ay + r_cut - grid.y_min) / grid.y_step)) + 1)
            if i0 >= i1 or j0 >= j1:
                continue
            u_sq = ((xs[i0:i1, None] - ax) ** 2 + (ys[None, j0:j1] - ay) ** 2)
            values[i0:i1, j0:j1, k] += contrast_point(s.c, s.sigma, lam, u_sq, z, az)
    return DefocusSeries(grid=grid, values=values, kind=CONTRAST, config=config,
                         orientation_id=orientation_id)


def _padded_q_grids(grid):
    npx, npy = 2 * grid.nx, 2 * grid.ny
    qx = np.fft.fftfreq(npx, grid.x_step)
    qy = np.fft.fftfreq(npy, grid.y_step)
    return npx, npy, qx, qy


def contrast_fourier(structure, table, config, grid, orientation_id=0):
    """Linearized per-plane reciprocal-space contrast (kind = contrast).

    Each atom contributes (4 pi / lambda) c exp(-2 pi^2 sigma^2 q^2)
    sin(pi lambda (z_atom - z) q^2) exp(-i 2 pi q . r_atom) to the plane
    spectrum; the z extent of the atom enters with unit projected weight.
    The transform runs on a 2x padded grid to suppress cyclic wrap-around.
    """
    eff = apply_thermal(table, config.thermal_rms)
    lam = config.wavelength
    npx, npy, qx, qy = _padded_q_grids(grid)
    q2 = qx[:, None] ** 2 + qy[None, :] ** 2
    values = np.empty(grid.shape)
    # separable transverse phase factors per atom
    atoms = []
    for sp_idx, pos in zip(structure.species_indices, structure.positions):
        s = eff[int(sp_idx)]
        px = np.exp(-2j * np.pi * qx * (pos[0] - grid.x_min))
        py = np.exp(-2j * np.pi * qy * (pos[1] - grid.y_min))
        env = np.exp(-2.0 * np.pi**2 * s.sigma**2 * q2)
        atoms.append((s, pos[2], px[:, None] * py[None, :], env))
    norm = 1.0 / (grid.x_step * grid.y_step)
    for k, z in enumerate(grid.z_planes):
        spec = np.zeros((npx, npy), dtype=complex)
        for s, az, phase, env in atoms:
            spec += ((4.0 * np.pi / lam) * s.c
                     * np.sin(np.pi * lam * (az - z) * q2) * env) * phase
        plane = np.fft.ifft2(spec).real * norm
        values[:, :, k] = plane[:grid.nx, :grid.ny]
    return DefocusSeries(grid=grid, values=values, kind=CONTRAST, config=config,
                         orientation_id=orientation_id)


def multislice_series(structure, table, config, grid, orientation_id=0):
    """Wave-optical series: split-step multislice plus backpropagation.

    A unit-intensity plane wave traverses the cube in slices of
    config.slice_thickness (which must divide the cube side); each slice
    transmits the phase of its projected potential at the slice center, the
    per-atom slice weight being the z-Gaussian cumulative mass.  The
    objective aperture, when limited, is applied once to the exit-wave
    spectrum; defocused intensities are recorded by Fresnel backpropagation
    to every grid plane.  Returns kind = intensity.
    """
    if structure.cube_side is None:
        raise ConfigurationError("multislice needs a structure centered in a cube")
    side = structure.cube_side
    dz_s = config.slice_thickness
    n_slices = side / dz_s
    if abs(n_slices - round(n_slices)) > 1e-9:
        raise ConfigurationError(
            f"slice thickness {dz_s} A does not divide the cube side {side} A")
    n_slices = int(round(n_slices))
    eff = apply_thermal(table, config.thermal_rms)
    lam = config.wavelength
    e_volts = config.energy_volts

    npx, npy, qx, qy = _padded_q_grids(grid)
    q2 = qx[:, None] ** 2 + qy[None, :] ** 2
    prop_half = np.exp(-1j * np.pi * lam * (dz_s / 2.0) * q2)
    prop_full = np.exp(-1j * np.pi * lam * dz_s * q2)

    xs = grid.x_min + grid.x_step * np.arange(npx)
    ys = grid.y_min + grid.y_step * np.arange(npy)

    # per-atom separable transverse Gaussians, windowed
    atom_profiles = []
    for sp_idx, pos in zip(structure.species_indices, structure.positions):
        s = eff[int(sp_idx)]
        r_cut = _WINDOW_SIGMAS * s.sigma
        ax, ay, az = pos
        i0 = max(0, int(np.searchsorted(xs, ax - r_cut)))
        i1 = min(npx, int(np.searchsorted(xs, ax + r_cut)) + 1)
        j0 = max(0, int(np.searchsorted(ys, ay - r_cut)))
        j1 = min(npy, int(np.searchsorted(ys, ay + r_cut)) + 1)
        gx = np.exp(-((xs[i0:i1] - ax) ** 2) / (2 * s.sigma**2))
        gy = np.exp(-((ys[j0:j1] - ay) ** 2) / (2 * s.sigma**2))
        weight = 2.0 * e_volts * s.c / (2.0 * np.pi * s.sigma**2)
        atom_profiles.append((s.sigma, az, i0, i1, j0, j1,
                              weight * gx[:, None] * gy[None, :]))

    psi = np.full((npx, npy), math.sqrt(config.incident_intensity), dtype=complex)
    psi = np.fft.ifft2(np.fft.fft2(psi) * prop_half)
    for sl in range(n_slices):
        z0, z1 = sl * dz_s, (sl + 1) * dz_s
        v_bar = np.zeros((npx, npy))
        for sigma, az, i0, i1, j0, j1, prof in atom_profiles:
            mass = ndtr((z1 - az) / sigma) - ndtr((z0 - az) / sigma)
            if mass > 1e-12:
                v_bar[i0:i1, j0:j1] += mass * prof
        psi = psi * np.exp(1j * (np.pi / (lam * e_volts)) * v_bar)
        psi = np.fft.ifft2(np.fft.fft2(psi) *
                           (prop_half if sl == n_slices - 1 else prop_full))

    exit_spec = np.fft.fft2(psi)
    q_max = aperture_cutoff(config)
    if q_max is not None:
        exit_spec = exit_spec * (q2 <= q_max**2)

    values = np.empty(grid.shape)
    for k, z in enumerate(grid.z_planes):
        wave = np.fft.ifft2(exit_spec * np.exp(-1j * np.pi * lam * (z - side) * q2))
        values[:, :, k] = np.abs(wave[:grid.nx, :grid.ny]) ** 2
    return DefocusSeries(grid=grid, values=values, kind=INTENSITY, config=config,
                         orientation_id=orientation_id)


def apply_aperture(series, q_max):
    """Zero spatial frequencies above q_max (1/A) in every plane.

    The low-pass acts on the contrast content of the plane, so intensity
    planes are filtered around the incident level and a vanishing cutoff
    collapses each plane to its mean.  q_max = None is the identity.
    """
    if q_max is None:
        return series
    if q_max < 0:
        raise ValueError("aperture cutoff must be >= 0 or None")
    grid = series.grid
    qx = np.fft.fftfreq(grid.nx, grid.x_step)
    qy = np.fft.fftfreq(grid.ny, grid.y_step)
    mask = (qx[:, None] ** 2 + qy[None, :] ** 2) <= q_max**2
    ref = series.config.incident_intensity if series.kind == INTENSITY else 0.0
    values = np.empty_like(series.values)
    for k in range(grid.nz):
        fluct = series.values[:, :, k] - ref
        values[:, :, k] = ref + np.fft.ifft2(np.fft.fft2(fluct) * mask).real
    return series.with_values(values)


def apply_poisson(series, dose, seed):
    """Replace each voxel by Poisson(dose * I)/dose with a seeded generator."""
    if series.kind != INTENSITY:
        raise ValueError("shot noise applies to intensity series")
    if dose <= 0:
        raise ValueError("dose must be positive")
    if np.any(series.values < 0):
        raise ValueError("negative intensity values")
    rng = np.random.default_rng(seed)
    values = rng.poisson(dose * series.values).astype(float) / dose
    return series.with_values(values)


@dataclass(frozen=True)
class ParaboloidSupport:
    """Fraction of 3D spectral energy on the defocus paraboloids."""

    mass_fraction: float
    band_bins: int
    total_bins: int
    empty: bool = False

    @property
    def bin_fraction(self):
        """Expected mass fraction of a white-noise field (band volume share)."""
        return self.band_bins / self.total_bins


def spectral_paraboloid_check(series):
    """Spectral energy fraction within +-1 q_z bin of q_z = +-(lambda/2) q_perp^2.

    Needs a contrast series with at least 8 uniformly spaced planes.  The
    3D DFT of a single-orientation series concentrates on these paraboloid
    surfaces; white noise spreads uniformly instead.
    """
    if series.kind != CONTRAST:
        raise ValueError("paraboloid support is defined for contrast series")
    grid = series.grid
    if grid.nz < 8:
        raise ConfigurationError("need at least 8 defocus planes")
    dz = grid.uniform_z_step()
    if dz is None:
        raise ConfigurationError("defocus planes must be uniformly spaced")
    lam = series.config.wavelength
    nz = grid.nz
    qx = np.fft.fftfreq(grid.nx, grid.x_step)
    qy = np.fft.fftfreq(grid.ny, grid.y_step)
    q2 = qx[:, None] ** 2 + qy[None, :] ** 2
    dqz = 1.0 / (nz * dz)
    target_bins = np.rint((lam / 2.0) * q2 / dqz)  # paraboloid in qz-bin units

    k_idx = np.arange(nz)[None, None, :]
    d_plus = (k_idx - target_bins[:, :, None]) % nz
    d_minus = (k_idx + target_bins[:, :, None]) % nz
    mask = ((d_plus <= 1) | (d_plus >= nz - 1) |
            (d_minus <= 1) | (d_minus >= nz - 1))

    power = np.abs(np.fft.fftn(series.values)) ** 2
    total = float(power.sum())
    band_bins = int(mask.sum())
    if total == 0.0:
        return ParaboloidSupport(mass_fraction=0.0, band_bins=band_bins,
                                 total_bins=mask.size, empty=True)
    return ParaboloidSupport(mass_fraction=float(power[mask].sum() / total),
                             band_bins=band_bins, total_bins=mask.size)


def simulate_series(structure, table, config, grid, orientation_id=0):
    """Full forward pipeline to a measured intensity series.

    Linear paths: contrast -> aperture low-pass -> intensity; multislice
    applies the aperture to the exit wave internally.  Poisson noise is
    added when the config carries a dose.
    """
    if config.forward_method == "multislice":
        series = multislice_series(structure, table, config, grid, orientation_id)
    else:
        fwd = (contrast_analytic if config.forward_method == "analytic"
               else contrast_fourier)
        series = fwd(structure, table, config, grid, orientation_id)
        series = apply_aperture(series, aperture_cutoff(config))
        series = convert_kind(series, INTENSITY)
    if config.dose is not None:
        series = apply_poisson(series, config.dose, config.rng_seed)
    return series
