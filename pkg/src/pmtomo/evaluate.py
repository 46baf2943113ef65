"""Scoring reconstructed atom sets against ground truth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import CONTRAST


@dataclass(frozen=True)
class AtomPair:
    truth_index: int
    truth_symbol: str
    result: object
    result_symbol: str
    distance: float


@dataclass(frozen=True, eq=False)
class EvaluationReport:
    """Pairing of results to truth atoms with distance and type statistics."""

    pairs: tuple
    unmatched_truth: tuple
    unmatched_results: tuple
    mean_distance: float
    std_distance: float
    type_correct: int
    type_mismatched: int
    recall: float

    def summary(self):
        lines = [
            f"paired atoms:    {len(self.pairs)}",
            f"mean distance:   {self.mean_distance:.4f} A",
            f"std distance:    {self.std_distance:.4f} A",
            f"type correct:    {self.type_correct}",
            f"type mismatched: {self.type_mismatched}",
            f"recall:          {self.recall:.4f}",
            f"unmatched truth atoms:   {len(self.unmatched_truth)}",
            f"unmatched result atoms:  {len(self.unmatched_results)}",
        ]
        return "\n".join(lines)


def assign(truth, results, table, max_distance=1.0, ignore_species=()):
    """Greedy pairing of results to truth atoms (descending similarity).

    Each result pairs with the nearest still-unpaired truth atom within
    max_distance; species labels never influence the pairing, only the
    type-agreement counts.  Truth atoms of ignored species are excluded
    from the recall denominator.
    """
    if max_distance <= 0:
        raise ValueError("max pairing distance must be positive")
    truth_pos = truth.positions
    truth_syms = [table[int(i)].symbol for i in truth.species_indices]
    taken = np.zeros(len(truth), dtype=bool)
    ordered = sorted(results, key=lambda r: (-r.similarity, r.position))
    pairs = []
    unmatched_results = []
    for r in ordered:
        if len(truth) == 0:
            unmatched_results.append(r)
            continue
        d = np.linalg.norm(truth_pos - np.asarray(r.position), axis=1)
        d[taken] = np.inf
        j = int(np.argmin(d))
        if d[j] <= max_distance:
            taken[j] = True
            pairs.append(AtomPair(truth_index=j, truth_symbol=truth_syms[j],
                                  result=r,
                                  result_symbol=table[r.species_index].symbol,
                                  distance=float(d[j])))
        else:
            unmatched_results.append(r)
    unmatched_truth = tuple(i for i in range(len(truth)) if not taken[i])
    distances = np.array([p.distance for p in pairs])
    denom = sum(1 for s in truth_syms if s not in ignore_species)
    type_correct = sum(1 for p in pairs if p.truth_symbol == p.result_symbol)
    return EvaluationReport(
        pairs=tuple(pairs),
        unmatched_truth=unmatched_truth,
        unmatched_results=tuple(unmatched_results),
        mean_distance=float(distances.mean()) if len(pairs) else 0.0,
        std_distance=float(distances.std()) if len(pairs) else 0.0,
        type_correct=type_correct,
        type_mismatched=len(pairs) - type_correct,
        recall=(len(pairs) / denom) if denom else 0.0,
    )


def estimate_strength(series, position, epsilon):
    """Contrast change across the atom plane, a proxy for the atom weight.

    Returns K(x, y, z + eps) - K(x, y, z - eps) with linear interpolation
    between planes; the transverse position snaps to the nearest voxel.
    Diagnostic only; it is not used for species assignment.
    """
    if series.kind != CONTRAST:
        raise ValueError("strength estimation needs a contrast series")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    grid = series.grid
    x, y, z = position
    if not (grid.x_min - 1e-9 <= x <= grid.x_min + (grid.nx - 1) * grid.x_step + 1e-9
            and grid.y_min - 1e-9 <= y <= grid.y_min + (grid.ny - 1) * grid.y_step + 1e-9):
        raise ValueError(f"position {position} outside the series grid")
    zp = np.asarray(grid.z_planes)
    if z - epsilon < zp[0] - 1e-9 or z + epsilon > zp[-1] + 1e-9:
        raise ValueError("z +- epsilon leaves the defocus range")
    i = int(np.clip(round((x - grid.x_min) / grid.x_step), 0, grid.nx - 1))
    j = int(np.clip(round((y - grid.y_min) / grid.y_step), 0, grid.ny - 1))
    profile = series.values[i, j, :]

    def interp(zq):
        return float(np.interp(zq, zp, profile))

    return interp(z + epsilon) - interp(z - epsilon)
