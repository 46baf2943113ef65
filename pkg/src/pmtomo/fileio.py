"""On-disk formats: .dsf series container, template sidecars, match CSV, PGM.

All writers go through a temp-file-plus-rename so interrupted runs never
leave truncated artifacts behind.
"""

from __future__ import annotations

import csv
import io
import os

import numpy as np

from .errors import ParseError
from .matcher import MatchResult
from .model import DefocusSeries, Grid3, ImagingConfig
from .template import Template

_HEADER_KEYS = ("nx", "ny", "nz", "x_step", "y_step", "x_min", "y_min",
                "z_planes", "kind", "energy_keV", "aperture_mrad",
                "thermal_rms", "dose", "seed", "orientation_id")


def atomic_write_bytes(path, data):
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def atomic_write_text(path, text):
    atomic_write_bytes(path, text.encode("utf-8"))


def write_dsf(series, path):
    """Write a defocus series: key=value text header, blank line, then
    little-endian float32 values ordered k-outermost, j, i-innermost."""
    grid = series.grid
    cfg = series.config
    header = [
        f"nx={grid.nx}",
        f"ny={grid.ny}",
        f"nz={grid.nz}",
        f"x_step={grid.x_step!r}",
        f"y_step={grid.y_step!r}",
        f"x_min={grid.x_min!r}",
        f"y_min={grid.y_min!r}",
        "z_planes=" + ",".join(repr(z) for z in grid.z_planes),
        f"kind={series.kind}",
        f"energy_keV={cfg.energy_kev!r}",
        "aperture_mrad=" + ("unlimited" if cfg.aperture_mrad is None
                            else repr(cfg.aperture_mrad)),
        f"thermal_rms={cfg.thermal_rms!r}",
        "dose=" + ("noiseless" if cfg.dose is None else repr(cfg.dose)),
        f"seed={cfg.rng_seed}",
        f"orientation_id={series.orientation_id}",
    ]
    payload = series.values.transpose(2, 1, 0).astype("<f4").tobytes()
    atomic_write_bytes(path, ("\n".join(header) + "\n\n").encode("ascii") + payload)


def read_dsf(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    sep = blob.find(b"\n\n")
    if sep < 0:
        raise ParseError(f"{path}: missing blank line after the header")
    fields = {}
    for lineno, line in enumerate(blob[:sep].decode("ascii").splitlines(), 1):
        if "=" not in line:
            raise ParseError(f"{path}: header line {lineno} is not key=value")
        key, value = line.split("=", 1)
        fields[key.strip()] = value.strip()
    missing = [k for k in _HEADER_KEYS if k not in fields]
    if missing:
        raise ParseError(f"{path}: header misses keys {missing}")
    try:
        nx, ny, nz = (int(fields[k]) for k in ("nx", "ny", "nz"))
        grid = Grid3(nx=nx, ny=ny,
                     x_step=float(fields["x_step"]),
                     y_step=float(fields["y_step"]),
                     x_min=float(fields["x_min"]),
                     y_min=float(fields["y_min"]),
                     z_planes=tuple(float(v) for v in
                                    fields["z_planes"].split(",")))
        aperture = (None if fields["aperture_mrad"] == "unlimited"
                    else float(fields["aperture_mrad"]))
        dose = None if fields["dose"] == "noiseless" else float(fields["dose"])
        config = ImagingConfig(energy_kev=float(fields["energy_keV"]),
                               aperture_mrad=aperture,
                               thermal_rms=float(fields["thermal_rms"]),
                               dose=dose,
                               rng_seed=int(fields["seed"]))
    except ValueError as exc:
        raise ParseError(f"{path}: bad header value ({exc})") from exc
    if nz != grid.nz:
        raise ParseError(f"{path}: nz={nz} but {grid.nz} z_planes listed")
    raw = blob[sep + 2:]
    expected = nx * ny * nz * 4
    if len(raw) != expected:
        raise ParseError(f"{path}: payload is {len(raw)} bytes, "
                         f"expected {expected}")
    values = np.frombuffer(raw, dtype="<f4").reshape(nz, ny, nx)
    return DefocusSeries(grid=grid, values=values.transpose(2, 1, 0).astype(float),
                         kind=fields["kind"], config=config,
                         orientation_id=int(fields["orientation_id"]))


def write_template(template, path):
    """Template block as .dsf-style payload plus a sidecar text header."""
    wx, wy, wz = template.extents
    header = [
        f"species_index={template.species_index}",
        f"center={template.center[0]},{template.center[1]},{template.center[2]}",
        f"extents={wx},{wy},{wz}",
        f"kind={template.kind}",
        f"x_step={template.x_step!r}",
        f"y_step={template.y_step!r}",
        f"z_step={template.z_step!r}",
    ]
    payload = template.block.transpose(2, 1, 0).astype("<f4").tobytes()
    atomic_write_bytes(path, ("\n".join(header) + "\n\n").encode("ascii") + payload)


def read_template(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    sep = blob.find(b"\n\n")
    if sep < 0:
        raise ParseError(f"{path}: missing blank line after the header")
    fields = dict(line.split("=", 1)
                  for line in blob[:sep].decode("ascii").splitlines())
    try:
        wx, wy, wz = (int(v) for v in fields["extents"].split(","))
        center = tuple(int(v) for v in fields["center"].split(","))
        block = np.frombuffer(blob[sep + 2:], dtype="<f4").reshape(wz, wy, wx)
        return Template(species_index=int(fields["species_index"]),
                        block=block.transpose(2, 1, 0).astype(float),
                        center=center, kind=fields["kind"],
                        x_step=float(fields["x_step"]),
                        y_step=float(fields["y_step"]),
                        z_step=float(fields["z_step"]))
    except (KeyError, ValueError) as exc:
        raise ParseError(f"{path}: bad template header ({exc})") from exc


MATCH_CSV_HEADER = ("species", "x", "y", "z", "similarity", "orientation_id")


def matches_to_csv(results, table, source_orientation=False):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = list(MATCH_CSV_HEADER)
    if source_orientation:
        header.append("source_orientation")
    writer.writerow(header)
    for r in results:
        row = [table[r.species_index].symbol,
               f"{r.position[0]:.4f}", f"{r.position[1]:.4f}",
               f"{r.position[2]:.4f}", f"{r.similarity:.4f}",
               str(r.orientation_id)]
        if source_orientation:
            row.append(str(r.orientation_id))
        writer.writerow(row)
    return buf.getvalue()


def write_matches(results, table, path, source_orientation=False):
    atomic_write_text(path, matches_to_csv(results, table,
                                           source_orientation=source_orientation))


def read_matches(path, table):
    results = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty match CSV")
        if tuple(header[:6]) != MATCH_CSV_HEADER:
            raise ParseError(f"{path}: unexpected CSV header {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                results.append(MatchResult(
                    species_index=table.index_of(row[0]),
                    position=(float(row[1]), float(row[2]), float(row[3])),
                    similarity=float(row[4]),
                    orientation_id=int(row[5])))
            except (KeyError, ValueError) as exc:
                raise ParseError(f"{path}: line {lineno}: {exc}") from exc
    return results


def plane_to_pgm(values):
    """8-bit binary PGM of a 2D slice, min-max normalized."""
    arr = np.asarray(values, dtype=float)
    lo, hi = float(arr.min()), float(arr.max())
    if hi > lo:
        scaled = np.round((arr - lo) / (hi - lo) * 255.0)
    else:
        scaled = np.zeros_like(arr)
    img = scaled.astype(np.uint8)
    header = f"P5\n{img.shape[0]} {img.shape[1]}\n255\n".encode("ascii")
    return header + img.T.tobytes()


def write_pgm_xy(series, k, path):
    """(x, y) slice at plane index k."""
    atomic_write_bytes(path, plane_to_pgm(series.values[:, :, k]))


def write_pgm_xz(series, j, path):
    """(x, z) slice at transverse row j."""
    atomic_write_bytes(path, plane_to_pgm(series.values[:, j, :]))
