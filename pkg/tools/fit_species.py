#!/usr/bin/env python3
"""Regenerate the shipped species table by brute-force Gaussian fits.

For each element, a single isotropic 3D Gaussian A*exp(-r^2/(2 sigma^2)) is
least-squares fitted (volume-weighted, r^2 dr) to the Kirkland-parametrized
electrostatic potential over r <= 2 A.  The integral coefficient c is chosen
so that 2*E*c equals the fitted integrated potential at the 200 kV reference
energy.

Usage: python tools/fit_species.py > src/pmtomo/data/species_default.txt
"""

import numpy as np
import scipy.constants as sc

# h^2 / (2 pi m_e e) in V*A^2: converts scattering-factor terms to potential.
CE = sc.h**2 / (2 * np.pi * sc.m_e * sc.e) * 1e20

E_REF_VOLTS = 2.0e5
FIT_RADIUS = 2.0

# Kirkland scattering-factor parametrization, chi-squared fits to relativistic
# Hartree-Fock calculations: f_e(q) = sum_i a_i/(q^2+b_i) + sum_i c_i exp(-d_i q^2)
# with q in 1/A.  Rows: a1 b1 a2 b2 a3 b3 c1 d1 c2 d2 c3 d3.
KIRKLAND_PARAMS = {
    "H": (4.20298324e-3, 2.25350888e-1, 6.27762505e-2, 2.25366950e-1,
          3.00907347e-2, 2.25331756e-1, 6.77756695e-2, 4.38854001e0,
          3.56609237e-3, 4.03884823e-1, 2.76135815e-2, 1.44490166e0),
    "C": (2.12080767e-1, 2.08605417e-1, 1.99811865e-1, 2.08610186e-1,
          1.68254385e-1, 5.57870773e0, 1.42048360e-1, 1.33311887e0,
          3.63830672e-1, 3.80800263e0, 8.35012044e-4, 4.03982620e-2),
    "N": (5.33015554e-1, 2.90952515e-1, 5.29008883e-2, 1.03547896e1,
          9.24159648e-2, 1.03540028e1, 2.61799101e-1, 2.76252723e0,
          8.80262108e-4, 3.47681236e-2, 1.10166555e-1, 9.93421736e-1),
    "O": (3.39969204e-1, 3.81570280e-1, 3.07570172e-1, 3.81571436e-1,
          1.30369072e-1, 1.91919745e1, 8.83326058e-2, 7.60635525e-1,
          1.96586700e-1, 2.07401094e0, 9.96220028e-4, 3.03266869e-2),
    "S": (1.01646916e0, 1.66663300e0, 4.41766748e-1, 1.66828297e-1,
          1.21503863e-1, 1.67046624e1, 8.27966670e-1, 2.99896720e0,
          2.33022533e-2, 5.45209816e-2, 1.53325226e-1, 9.72310688e-1),
}

Z_NUMBERS = {"H": 1, "C": 6, "N": 7, "O": 8, "S": 16}

# Heavy-to-light search order for the shipped table.
TABLE_ORDER = ("S", "O", "N", "C", "H")


def potential(symbol, r):
    """Electrostatic potential in volts at radius r (A)."""
    p = KIRKLAND_PARAMS[symbol]
    a, b = p[0:6:2], p[1:6:2]
    c, d = p[6:12:2], p[7:12:2]
    v = np.zeros_like(r)
    for ai, bi in zip(a, b):
        v += ai * np.pi * np.exp(-2 * np.pi * np.sqrt(bi) * r) / r
    for ci, di in zip(c, d):
        v += ci * (np.pi / di) ** 1.5 * np.exp(-np.pi**2 * r**2 / di)
    return CE * v


def fit_gaussian(symbol, n_r=4001, sigma_grid=None):
    """Brute-force (A, sigma) minimizing int r^2 [V - A exp(-r^2/2sigma^2)]^2 dr."""
    if sigma_grid is None:
        sigma_grid = np.arange(0.02, 1.2001, 1e-4)
    r = np.linspace(1e-4, FIT_RADIUS, n_r)
    w = r**2
    v = potential(symbol, r)
    best = None
    for sigma in sigma_grid:
        g = np.exp(-(r**2) / (2 * sigma**2))
        amp = np.trapezoid(w * v * g, r) / np.trapezoid(w * g * g, r)
        err = np.trapezoid(w * (v - amp * g) ** 2, r)
        if best is None or err < best[0]:
            best = (err, sigma, amp)
    _, sigma, amp = best
    c = amp * (2 * np.pi * sigma**2) ** 1.5 / (2 * E_REF_VOLTS)
    return c, sigma


def main():
    print("# Default species table: single-Gaussian potentials fitted to the")
    print("# Kirkland parametrization over r <= 2 A (volume-weighted least")
    print("# squares); 2E*c equals the fitted integrated potential at the")
    print("# 200 kV reference energy.  Regenerate with tools/fit_species.py.")
    print("# symbol z_number c_A3 sigma_A")
    for symbol in TABLE_ORDER:
        c, sigma = fit_gaussian(symbol)
        print(f"{symbol} {Z_NUMBERS[symbol]} {c:.8e} {sigma:.6f}")


if __name__ == "__main__":
    main()
