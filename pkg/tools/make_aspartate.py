#!/usr/bin/env python3
"""Build the aspartate fixture: 9 heavy atoms at their reference positions in
the 10 A cube plus 7 hydrogens placed 0.97-1.09 A from their host atoms,
pointing away from the host's bonded neighbors.

Usage: python tools/make_aspartate.py > fixtures/aspartate.xyz
"""
import numpy as np

HEAVY = [
    ("O", (2.33, 3.41, 4.31)),
    ("O", (7.70, 3.84, 5.51)),
    ("O", (4.39, 6.36, 5.03)),
    ("O", (2.17, 5.09, 5.75)),
    ("N", (5.24, 4.09, 5.38)),
    ("C", (4.23, 4.96, 4.62)),
    ("C", (6.81, 5.35, 4.16)),
    ("C", (6.64, 4.48, 4.97)),
    ("C", (2.84, 4.49, 4.94)),
]

# (host index, bond length, count)
H_PLAN = [(0, 0.97, 1), (1, 0.97, 1), (4, 1.01, 2), (5, 1.09, 1), (7, 1.09, 2)]


def away_direction(idx):
    pos = np.array(HEAVY[idx][1])
    vecs = []
    for j, (_, other) in enumerate(HEAVY):
        if j == idx:
            continue
        v = np.array(other) - pos
        d = np.linalg.norm(v)
        if d < 1.8:
            vecs.append(v / d)
    if not vecs:
        return np.array([0.0, 0.0, 1.0])
    u = -np.sum(vecs, axis=0)
    n = np.linalg.norm(u)
    return u / n if n > 1e-9 else np.array([0.0, 0.0, 1.0])


def spread(u, count):
    if count == 1:
        return [u]
    ref = np.array([0.0, 0.0, 1.0])
    if abs(np.dot(ref, u)) > 0.9:
        ref = np.array([1.0, 0.0, 0.0])
    perp = np.cross(u, ref)
    perp /= np.linalg.norm(perp)
    out = []
    for sign in (1.0, -1.0):
        v = np.cos(np.deg2rad(55.0)) * u + sign * np.sin(np.deg2rad(55.0)) * perp
        out.append(v / np.linalg.norm(v))
    return out


def main():
    atoms = list(HEAVY)
    for idx, bond, count in H_PLAN:
        host = np.array(HEAVY[idx][1])
        for u in spread(away_direction(idx), count):
            atoms.append(("H", tuple(host + bond * u)))
    print(len(atoms))
    print("aspartate (C4H7NO4) centered in a 10 A cube")
    for sym, (x, y, z) in atoms:
        print(f"{sym} {x:.6f} {y:.6f} {z:.6f}")


if __name__ == "__main__":
    main()
