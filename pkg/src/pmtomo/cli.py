"""Command-line front end: simulate | template | reconstruct | merge |
evaluate | pipeline.

Exit codes: 0 success, 2 input/configuration error, 3 search exhaustion.
All run parameters live in one JSON configuration document; --seed and
--threads override it from the command line.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import fileio
from .errors import ExhaustionError, PmtomoError
from .evaluate import assign
from .forward import simulate_series
from .matcher import SearchPlan, find_atoms
from .merge import merge_orientations, rotate_back
from .model import (CONTRAST, ImagingConfig, SpeciesTable, convert_kind,
                    make_grid)
from .structure import Orientation, center_in_cube, parse_xyz, rotate
from .template import make_template

_CONFIG_DEFAULTS = {
    "cube_side": 10.0,
    "transverse_step": 0.1,
    "z_planes": {"start": 0.0, "stop": 10.0, "count": 11},
    "species_table": None,
    "structure": None,
    "imaging": {
        "energy_kev": 200.0,
        "incident_intensity": 1.0,
        "aperture_mrad": 30.0,
        "thermal_rms": 0.1,
        "dose": 1.0e4,
        "forward_method": "multislice",
        "slice_thickness": 0.5,
        "rng_seed": 0,
    },
    "template": {
        "transverse_halfwidth": 0.5,
        "axial_halfwidth": 4.0,
        "grid_side": 6.0,
    },
    "search": {
        "counts": {"O": 4, "N": 1, "C": 4},
        "exclusion_radius": 1.2,
        "comparison_kind": "contrast-abs",
        "refine": False,
    },
    "orientations": [{"id": 0, "axis": [0.0, 1.0, 0.0], "angle_deg": 0.0}],
    "merge": {"radius": 1.0, "cutoff": 0.5},
    "evaluate": {"max_distance": 1.0, "ignore_species": ["H"]},
}


class RunSetup:
    """Configuration document resolved into model objects."""

    def __init__(self, doc, config_dir="."):
        merged = {}
        for key, default in _CONFIG_DEFAULTS.items():
            value = doc.get(key, default)
            if isinstance(default, dict) and isinstance(value, dict):
                value = {**default, **value}
            merged[key] = value
        unknown = set(doc) - set(_CONFIG_DEFAULTS)
        if unknown:
            raise ValueError(f"unknown configuration keys: {sorted(unknown)}")
        self.doc = merged
        self.config_dir = config_dir
        if merged["species_table"] is None:
            self.table = SpeciesTable.default()
        else:
            self.table = SpeciesTable.load(self._path(merged["species_table"]))
        img = merged["imaging"]
        self.imaging = ImagingConfig(
            energy_kev=float(img["energy_kev"]),
            incident_intensity=float(img["incident_intensity"]),
            aperture_mrad=(None if img["aperture_mrad"] is None
                           else float(img["aperture_mrad"])),
            thermal_rms=float(img["thermal_rms"]),
            dose=None if img["dose"] is None else float(img["dose"]),
            forward_method=img["forward_method"],
            slice_thickness=float(img["slice_thickness"]),
            rng_seed=int(img["rng_seed"]))
        self.cube_side = float(merged["cube_side"])
        zp = merged["z_planes"]
        if isinstance(zp, dict):
            planes = np.linspace(float(zp["start"]), float(zp["stop"]),
                                 int(zp["count"]))
        else:
            planes = [float(v) for v in zp]
        self.grid = make_grid(self.cube_side, float(merged["transverse_step"]),
                              planes)
        self.template_grid = make_grid(float(merged["template"]["grid_side"]),
                                       float(merged["transverse_step"]), planes)
        self.orientations = [
            Orientation(axis=tuple(o["axis"]), angle_deg=float(o["angle_deg"]),
                        id=int(o.get("id", i)))
            for i, o in enumerate(merged["orientations"])]
        self.counts = {str(k): int(v)
                       for k, v in merged["search"]["counts"].items()}
        unknown_species = set(self.counts) - set(self.table.symbols)
        if unknown_species:
            raise ValueError(f"search counts name unknown species "
                             f"{sorted(unknown_species)}")

    def _path(self, p):
        return p if os.path.isabs(p) else os.path.join(self.config_dir, p)

    def structure_path(self):
        if self.doc["structure"] is None:
            raise ValueError("configuration has no 'structure' entry")
        return self._path(self.doc["structure"])

    def orientation_by_id(self, oid):
        for o in self.orientations:
            if o.id == oid:
                return o
        raise ValueError(f"no orientation with id {oid} in the configuration")

    def plan(self):
        s = self.doc["search"]
        return SearchPlan(
            counts=tuple(self.counts.get(sym, 0) for sym in self.table.symbols),
            exclusion_radius=float(s["exclusion_radius"]),
            comparison_kind=s["comparison_kind"],
            refine=bool(s["refine"]))

    def build_template(self, species_index):
        t = self.doc["template"]
        return make_template(
            species_index, self.table, self.imaging, self.template_grid,
            transverse_halfwidth=float(t["transverse_halfwidth"]),
            axial_halfwidth=(None if t["axial_halfwidth"] is None
                             else float(t["axial_halfwidth"])),
            kind=CONTRAST if self.plan().comparison_kind == "contrast-abs"
            else "intensity")


def load_setup(args):
    if not args.config:
        raise ValueError("--config is required for this command")
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ValueError(f"configuration file not found: {args.config}")
    except json.JSONDecodeError as exc:
        raise ValueError(f"{args.config}: invalid JSON ({exc})")
    setup = RunSetup(doc, config_dir=os.path.dirname(os.path.abspath(args.config)))
    if args.seed is not None:
        setup.imaging = replace(setup.imaging, rng_seed=args.seed)
    return setup


def _load_structure(setup, path=None):
    path = path or setup.structure_path()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except FileNotFoundError:
        raise ValueError(f"structure file not found: {path}")
    return center_in_cube(parse_xyz(text, setup.table), setup.cube_side)


def _dump_slices(series, stem):
    mid_k = (series.grid.nz - 1) // 2
    mid_j = (series.grid.ny - 1) // 2
    fileio.write_pgm_xy(series, mid_k, f"{stem}_xy.pgm")
    fileio.write_pgm_xz(series, mid_j, f"{stem}_xz.pgm")


def cmd_simulate(args):
    setup = load_setup(args)
    structure = _load_structure(setup, args.structure)
    orientation = setup.orientation_by_id(args.orientation)
    if orientation.angle_deg != 0.0:
        structure = rotate(structure, orientation)
    series = simulate_series(structure, setup.table, setup.imaging, setup.grid,
                             orientation_id=orientation.id)
    fileio.write_dsf(series, args.out)
    if args.dump_slices:
        _dump_slices(series, os.path.splitext(args.out)[0])
    print(f"wrote {args.out}: {series.grid.nx}x{series.grid.ny}x"
          f"{series.grid.nz} {series.kind} series")
    return 0


def cmd_template(args):
    setup = load_setup(args)
    try:
        idx = setup.table.index_of(args.symbol)
    except KeyError:
        raise ValueError(f"unknown species symbol {args.symbol!r}")
    template = setup.build_template(idx)
    fileio.write_template(template, args.out)
    wx, wy, wz = template.extents
    print(f"wrote {args.out}: extents {wx}x{wy}x{wz} voxels "
          f"({wx * template.x_step:.2f} x {wy * template.y_step:.2f} x "
          f"{wz * template.z_step:.2f} A), center {template.center}")
    dose = setup.imaging.dose
    if dose is not None:
        floor = 1.0 / np.sqrt(dose)
        peak = float(np.abs(template.block).max())
        if peak < floor:
            print(f"warning: {args.symbol} peak contrast {peak:.4f} is below "
                  f"the shot-noise floor {floor:.4f}; matches will be "
                  f"unreliable", file=sys.stderr)
    return 0


def _parse_counts(text, table):
    counts = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise ValueError(f"bad counts item {item!r}; expected SYMBOL=N")
        sym, _, num = item.partition("=")
        table.index_of(sym.strip())  # raises on unknown symbols
        counts[sym.strip()] = int(num)
    if not counts:
        raise ValueError("no counts given")
    return counts


def cmd_reconstruct(args):
    setup = load_setup(args)
    table = setup.table
    series = fileio.read_dsf(args.series)
    if args.counts:
        counts = _parse_counts(args.counts, table)
    else:
        counts = setup.counts
    plan = replace(setup.plan(),
                   counts=tuple(counts.get(s, 0) for s in table.symbols))
    templates = [None] * len(table)
    for path in args.template or []:
        t = fileio.read_template(path)
        templates[t.species_index] = t
    for i, (count, t) in enumerate(zip(plan.counts, templates)):
        if count > 0 and t is None:
            templates[i] = setup.build_template(i)
    target = CONTRAST if plan.comparison_kind == "contrast-abs" else "intensity"
    series = convert_kind(series, target)
    results = find_atoms(series, templates, table, plan, threads=args.threads)
    fileio.write_matches(results, table, args.out)
    print(f"wrote {args.out}: {len(results)} matches")
    return 0


def cmd_merge(args):
    setup = load_setup(args)
    radius = args.radius if args.radius is not None else \
        float(setup.doc["merge"]["radius"])
    cutoff = args.cutoff if args.cutoff is not None else \
        float(setup.doc["merge"]["cutoff"])
    if radius <= 0:
        raise ValueError("merge radius must be positive")
    if not 0.0 <= cutoff <= 1.0:
        raise ValueError("similarity cutoff must lie in [0, 1]")
    sets = []
    for path in args.csv:
        results = fileio.read_matches(path, setup.table)
        if results:
            oid = results[0].orientation_id
            if any(r.orientation_id != oid for r in results):
                raise ValueError(f"{path}: mixed orientation ids in one CSV")
            results = rotate_back(results, setup.orientation_by_id(oid),
                                  setup.cube_side)
        sets.append(results)
    merged = merge_orientations(sets, radius=radius, cutoff=cutoff)
    fileio.write_matches(merged, setup.table, args.out, source_orientation=True)
    print(f"wrote {args.out}: {len(merged)} merged matches from "
          f"{len(sets)} orientations")
    return 0


def _print_report(report, out=sys.stdout):
    print("type_truth type_found x y z C distance", file=out)
    for p in report.pairs:
        r = p.result
        print(f"{p.truth_symbol} {p.result_symbol} {r.position[0]:.4f} "
              f"{r.position[1]:.4f} {r.position[2]:.4f} {r.similarity:.4f} "
              f"{p.distance:.4f}", file=out)
    print(report.summary(), file=out)


def cmd_evaluate(args):
    setup = load_setup(args)
    structure = _load_structure(setup, args.truth)
    results = fileio.read_matches(args.results, setup.table)
    ev = setup.doc["evaluate"]
    ignore = (tuple(args.ignore_species.split(","))
              if args.ignore_species is not None
              else tuple(ev["ignore_species"]))
    report = assign(structure, results, setup.table,
                    max_distance=float(ev["max_distance"]),
                    ignore_species=ignore)
    _print_report(report)
    if args.out:
        rows = ["truth_symbol,found_symbol,x,y,z,similarity,distance"]
        for p in report.pairs:
            r = p.result
            rows.append(f"{p.truth_symbol},{p.result_symbol},"
                        f"{r.position[0]:.4f},{r.position[1]:.4f},"
                        f"{r.position[2]:.4f},{r.similarity:.4f},"
                        f"{p.distance:.4f}")
        fileio.atomic_write_text(args.out, "\n".join(rows) + "\n")
    return 0


def cmd_pipeline(args):
    setup = load_setup(args)
    out_dir = args.out_dir or "pmtomo_run"
    os.makedirs(out_dir, exist_ok=True)
    table = setup.table
    structure = _load_structure(setup)
    plan = setup.plan()

    templates = [None] * len(table)
    for i, count in enumerate(plan.counts):
        if count > 0:
            templates[i] = setup.build_template(i)
            path = os.path.join(out_dir, f"template_{table[i].symbol}.tpl")
            fileio.write_template(templates[i], path)

    per_orientation = []
    target = CONTRAST if plan.comparison_kind == "contrast-abs" else "intensity"
    for n, orientation in enumerate(setup.orientations):
        oriented = (rotate(structure, orientation)
                    if orientation.angle_deg != 0.0 else structure)
        cfg = replace(setup.imaging, rng_seed=setup.imaging.rng_seed + n)
        series = simulate_series(oriented, table, cfg, setup.grid,
                                 orientation_id=orientation.id)
        stem = os.path.join(out_dir, f"series_{orientation.id}")
        fileio.write_dsf(series, stem + ".dsf")
        if args.dump_slices:
            _dump_slices(series, stem)
        results = find_atoms(convert_kind(series, target), templates, table,
                             plan, threads=args.threads)
        fileio.write_matches(results, table,
                             os.path.join(out_dir,
                                          f"matches_{orientation.id}.csv"))
        per_orientation.append(rotate_back(results, orientation,
                                           setup.cube_side))
        print(f"orientation {orientation.id}: {len(results)} matches")

    mg = setup.doc["merge"]
    if len(per_orientation) > 1:
        final = merge_orientations(per_orientation, radius=float(mg["radius"]),
                                   cutoff=float(mg["cutoff"]))
        fileio.write_matches(final, table, os.path.join(out_dir, "merged.csv"),
                             source_orientation=True)
        print(f"merged: {len(final)} matches")
    else:
        final = per_orientation[0]

    ev = setup.doc["evaluate"]
    report = assign(structure, final, table,
                    max_distance=float(ev["max_distance"]),
                    ignore_species=tuple(ev["ignore_species"]))
    with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8") as fh:
        _print_report(report, out=fh)
    _print_report(report)
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration document")
    common.add_argument("--seed", type=int, default=None,
                        help="override the configured RNG seed")
    common.add_argument("--threads", type=int, default=0,
                        help="scan worker threads (0 = all cores)")
    common.add_argument("--dump-slices", action="store_true",
                        help="export PGM slices of simulated series")
    common.add_argument("--out-dir", default=None,
                        help="output directory (pipeline)")

    parser = argparse.ArgumentParser(
        prog="pmtomo",
        description="Simulate defocus series of sparse atomic structures and "
                    "reconstruct atom positions by 3D template matching.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common],
                       help="simulate a defocus series from a structure")
    p.add_argument("structure", nargs="?", default=None,
                   help="XYZ structure (default: config 'structure')")
    p.add_argument("out", help="output .dsf path")
    p.add_argument("--orientation", type=int, default=0,
                   help="orientation id from the configuration")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("template", parents=[common],
                       help="generate a truncated single-atom template")
    p.add_argument("symbol", help="species symbol (e.g. O)")
    p.add_argument("out", help="output template path")
    p.set_defaults(func=cmd_template)

    p = sub.add_parser("reconstruct", parents=[common],
                       help="locate atoms in a series by template matching")
    p.add_argument("series", help="input .dsf series")
    p.add_argument("out", help="output match CSV")
    p.add_argument("--template", action="append",
                   help="template file (repeatable); missing ones are generated")
    p.add_argument("--counts", default=None,
                   help="per-species atom counts, e.g. O=4,N=1,C=4")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("merge", parents=[common],
                       help="merge per-orientation match CSVs")
    p.add_argument("out", help="output merged CSV")
    p.add_argument("csv", nargs="+", help="per-orientation match CSVs")
    p.add_argument("--radius", type=float, default=None,
                   help="duplicate radius in A")
    p.add_argument("--cutoff", type=float, default=None,
                   help="similarity cutoff")
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("evaluate", parents=[common],
                       help="score matches against a ground-truth structure")
    p.add_argument("truth", help="ground-truth XYZ file")
    p.add_argument("results", help="match CSV")
    p.add_argument("--out", default=None, help="optional per-pair CSV")
    p.add_argument("--ignore-species", default=None,
                   help="comma-separated symbols excluded from recall")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", parents=[common],
                       help="run simulate/template/reconstruct/merge/evaluate")
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ExhaustionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (PmtomoError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
