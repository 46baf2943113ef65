#!/usr/bin/env python3
"""Build the 50-atom synthetic fixture for the multi-orientation experiment.

S/O/N/C mix with at least 2.5 A pairwise spacing, drawn inside a radius-11.5
ball centered in a 30 A cube so that rotations about the cube center keep
every atom inside.

Usage: python tools/make_synthetic.py > fixtures/synthetic50.xyz
"""
import numpy as np

COUNTS = (("S", 4), ("O", 12), ("N", 10), ("C", 24))
CUBE = 30.0
BALL = 11.5
MIN_SPACING = 2.5
SEED = 20240817


def main():
    rng = np.random.default_rng(SEED)
    center = np.full(3, CUBE / 2)
    placed = []
    symbols = [s for s, n in COUNTS for _ in range(n)]
    while len(placed) < len(symbols):
        p = rng.uniform(-BALL, BALL, size=3)
        if np.linalg.norm(p) > BALL:
            continue
        p = center + p
        if placed and np.min(np.linalg.norm(np.array(placed) - p, axis=1)) < MIN_SPACING:
            continue
        placed.append(p)
    print(len(symbols))
    print(f"synthetic 50-atom S/O/N/C structure, {MIN_SPACING} A minimum spacing")
    for sym, p in zip(symbols, placed):
        print(f"{sym} {p[0]:.6f} {p[1]:.6f} {p[2]:.6f}")


if __name__ == "__main__":
    main()
