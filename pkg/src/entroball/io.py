"""Run configuration, point ingestion and raster / JSON writers."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .domain import BoxDomain, EmpiricalMeasure, Metric, PriorModel, make_truncated_gaussian_prior, make_uniform_prior


class InputError(ValueError):
    """Malformed configuration or data file."""


def load_points_csv(path, domain: BoxDomain | None = None) -> EmpiricalMeasure:
    """Read one point per row; a non-numeric first row is treated as a header.

    Row numbers in error messages count data rows from 1.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read points file {path}: {exc}") from exc
    rows = []
    data_row = 0
    for lineno, rec in enumerate(csv.reader(text.splitlines()), start=1):
        if not rec or all(not f.strip() for f in rec):
            continue
        try:
            values = [float(f) for f in rec]
        except ValueError:
            if lineno == 1:
                continue
            raise InputError(f"{path}: line {lineno}: non-numeric field in {rec!r}") from None
        data_row += 1
        if rows and len(values) != len(rows[0]):
            raise InputError(f"{path}: line {lineno}: expected {len(rows[0])} columns, got {len(values)}")
        if domain is not None:
            if len(values) != domain.dim:
                raise InputError(f"{path}: line {lineno}: expected {domain.dim} columns, got {len(values)}")
            if not domain.contains(np.array(values)):
                raise InputError(f"{path}: row {data_row} (line {lineno}) = {values} lies outside the domain")
        rows.append(values)
    if not rows:
        raise InputError(f"{path}: no points found")
    return EmpiricalMeasure(np.array(rows), domain)


def write_points_csv(path, points) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in np.asarray(points):
            writer.writerow([repr(float(v)) for v in row])


@dataclass(frozen=True)
class Tolerances:
    grad_tol: float | None = None
    max_ascent_iter: int = 10_000
    dual_tol: float | None = None
    radius_tol: float | None = None
    cut_tol: float | None = None
    max_cuts: int = 200

    def __post_init__(self):
        for name in ("grad_tol", "dual_tol", "radius_tol", "cut_tol"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise InputError(f"tolerance {name} must be positive")
        if self.max_ascent_iter < 1 or self.max_cuts < 1:
            raise InputError("iteration caps must be positive")


@dataclass(frozen=True)
class RunConfig:
    domain: BoxDomain
    metric: Metric
    prior_spec: dict
    points_file: Path
    delta: float | None = None
    delta_list: tuple = ()
    M: int = 50_000
    seed: int = 0
    resolution: int = 256
    tolerances: Tolerances = field(default_factory=Tolerances)
    output_dir: Path = Path("out")

    @classmethod
    def from_dict(cls, raw: dict, base_dir=".") -> "RunConfig":
        base_dir = Path(base_dir)
        try:
            dom = raw["domain"]
            domain = BoxDomain(dom["lo"], dom["hi"])
            metric = Metric.from_name(raw.get("metric", "euclidean"))
            prior_spec = dict(raw.get("prior", {"kind": "uniform"}))
            points_file = base_dir / raw["points_file"]
            delta = raw.get("delta")
            delta_list = tuple(float(d) for d in raw.get("delta_list", ()))
            tol = Tolerances(**raw.get("tolerances", {}))
            out = Path(raw.get("output_dir", "out"))
            cfg = cls(
                domain=domain,
                metric=metric,
                prior_spec=prior_spec,
                points_file=points_file,
                delta=None if delta is None else float(delta),
                delta_list=delta_list,
                M=int(raw.get("M", 50_000)),
                seed=int(raw.get("seed", 0)),
                resolution=int(raw.get("resolution", 256)),
                tolerances=tol,
                output_dir=out if out.is_absolute() else base_dir / out,
            )
        except KeyError as exc:
            raise InputError(f"config is missing required field {exc}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"invalid config: {exc}") from None
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except OSError as exc:
            raise InputError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON: {exc}") from exc
        return cls.from_dict(raw, base_dir=path.parent)

    def validate(self):
        if self.M < 100:
            raise InputError("M must be at least 100")
        if self.resolution < 2:
            raise InputError("resolution must be at least 2")
        if self.delta is not None and not self.delta > 0:
            raise InputError("delta must be positive")
        if any(not d > 0 for d in self.delta_list):
            raise InputError("every delta must be positive")
        if any(a <= b for a, b in zip(self.delta_list, self.delta_list[1:])):
            raise InputError("delta_list must be strictly decreasing")

    def prior(self) -> PriorModel:
        kind = self.prior_spec.get("kind", "uniform")
        if kind == "uniform":
            return make_uniform_prior(self.domain)
        if kind in ("truncated_gaussian", "gaussian"):
            try:
                return make_truncated_gaussian_prior(
                    self.domain, self.prior_spec["mean"], float(self.prior_spec["sigma"])
                )
            except KeyError as exc:
                raise InputError(f"gaussian prior needs field {exc}") from None
        raise InputError(f"unknown prior kind {kind!r}")

    def measure(self) -> EmpiricalMeasure:
        return load_points_csv(self.points_file, self.domain)


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_jsonl(path, records) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def write_pgm_ascii(path, grid, maxval: int | None = None) -> None:
    """Plain (P2) PGM of a nonnegative integer grid."""
    grid = np.asarray(grid, dtype=np.int64)
    maxval = int(grid.max()) if maxval is None else maxval
    maxval = max(maxval, 1)
    h, w = grid.shape
    lines = ["P2", f"{w} {h}", str(maxval)]
    lines += [" ".join(str(int(v)) for v in row) for row in grid]
    Path(path).write_text("\n".join(lines) + "\n")


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic == b"P2":
        tokens = data.split()
        w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
        vals = np.array([int(t) for t in tokens[4:4 + w * h]], dtype=np.int64)
        return vals.reshape(h, w)
    if magic == b"P5":
        header = data.split(maxsplit=4)
        w, h, maxval = int(header[1]), int(header[2]), int(header[3])
        body = data[len(data) - w * h * (2 if maxval > 255 else 1):]
        dtype = ">u2" if maxval > 255 else "u1"
        return np.frombuffer(body, dtype=dtype).reshape(h, w).astype(np.int64)
    raise InputError(f"{path}: not a PGM file")


def region_gray_levels(regions: np.ndarray, N: int) -> np.ndarray:
    """Spread region indices ``0..N-1`` over gray levels ``0..255``."""
    if N <= 1:
        return np.zeros_like(regions)
    return np.rint(regions * (255.0 / (N - 1))).astype(np.int64)


def write_region_csv(path, regions) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in np.asarray(regions):
            writer.writerow([int(v) for v in row])


def density_levels16(values: np.ndarray) -> np.ndarray:
    top = float(values.max())
    if not top > 0:
        return np.zeros(values.shape, dtype=np.int64)
    return np.rint(values / top * 65535.0).astype(np.int64)


def write_pgm16(path, levels: np.ndarray) -> None:
    """Binary (P5) 16-bit PGM."""
    h, w = levels.shape
    header = f"P5\n{w} {h}\n65535\n".encode()
    Path(path).write_bytes(header + np.asarray(levels, dtype=">u2").tobytes())


def _palette(N: int) -> np.ndarray:
    import colorsys

    golden = (math.sqrt(5) - 1) / 2
    return np.array(
        [[round(255 * c) for c in colorsys.hsv_to_rgb((i * golden) % 1.0, 0.55, 0.95)] for i in range(N)],
        dtype=np.uint8,
    )


def write_region_png(path, regions: np.ndarray, N: int, atoms_px=None) -> None:
    from PIL import Image

    rgb = _palette(max(N, 1))[regions]
    if atoms_px is not None:
        h, w = regions.shape
        for r, c in atoms_px:
            rgb[max(r - 1, 0):min(r + 2, h), max(c - 1, 0):min(c + 2, w)] = 0
    Image.fromarray(rgb).save(path)


def write_density_png(path, values: np.ndarray) -> None:
    from PIL import Image

    top = float(values.max())
    gray = np.zeros(values.shape, dtype=np.uint8) if not top > 0 else np.rint(values / top * 255).astype(np.uint8)
    Image.fromarray(gray).save(path)


def atoms_to_pixels(points: np.ndarray, domain: BoxDomain, resolution: int):
    """Raster (row, col) of each 2-D atom, matching the grid layout used for rasters."""
    frac = (points - domain.lo) / (domain.hi - domain.lo)
    cols = np.clip((frac[:, 0] * resolution).astype(int), 0, resolution - 1)
    rows = np.clip(((1.0 - frac[:, 1]) * resolution).astype(int), 0, resolution - 1)
    return list(zip(rows.tolist(), cols.tolist()))
