"""Combining match results from several angular orientations."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .structure import rotate_points


def _sort_key(result):
    return (-result.similarity, result.orientation_id, result.species_index,
            result.position)


def truncate_by_similarity(results, cutoff):
    """Keep results with similarity >= cutoff; order preserved."""
    if not 0.0 <= cutoff <= 1.0:
        raise ValueError("cutoff must lie in [0, 1]")
    return [r for r in results if r.similarity >= cutoff]


def filter_duplicates(results, radius):
    """Greedy multiplet filter: highest similarity first, any species.

    A result survives iff no already-kept result lies closer than radius.
    """
    if radius <= 0:
        raise ValueError("duplicate radius must be positive")
    kept = []
    kept_pos = np.empty((0, 3))
    for r in sorted(results, key=_sort_key):
        pos = np.asarray(r.position)
        if kept_pos.size and np.any(
                np.linalg.norm(kept_pos - pos, axis=1) < radius):
            continue
        kept.append(r)
        kept_pos = np.vstack([kept_pos, pos])
    return kept


def rotate_back(results, orientation, cube_side):
    """Undo the acquisition rotation: inverse rotation about the cube center."""
    inv = orientation.inverse()
    out = []
    for r in results:
        pos = rotate_points(np.asarray(r.position), inv, cube_side)[0]
        out.append(replace(r, position=tuple(pos)))
    return out


def merge_orientations(result_sets, radius, cutoff):
    """Merge back-rotated per-orientation result sets into one.

    Each set is similarity-truncated and duplicate-filtered on its own,
    the union is filtered again (the best-scoring member of each multiplet
    survives), and the output is sorted by descending similarity.
    """
    merged = []
    for results in result_sets:
        merged.extend(filter_duplicates(truncate_by_similarity(results, cutoff),
                                        radius))
    return sorted(filter_duplicates(merged, radius), key=_sort_key)
