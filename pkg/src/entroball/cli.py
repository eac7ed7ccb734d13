"""Command-line entry point: ``entroball transport|mincross|sweep --config FILE``.

Exit codes: 0 on success, 1 on input errors, 2 when a solver did not converge
(outputs are still written).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from .cutting_plane import CutOptions, InfeasiblePolytope, solve_min_cross_entropy
from .domain import EmpiricalMeasure, Metric, PriorModel, SampleBatch, draw_batch
from .entropy import EntropySolution
from .io import (
    InputError,
    RunConfig,
    atoms_to_pixels,
    density_levels16,
    region_gray_levels,
    write_density_png,
    write_json,
    write_jsonl,
    write_pgm16,
    write_pgm_ascii,
    write_region_csv,
    write_region_png,
)
from .transport import StopRule, TransportSolution, maximize_psi
from .voronoi import grid_centers, phi_lambda, rasterize_regions, region_masses

log = logging.getLogger("entroball")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NONCONVERGED = 2


def heatmap_values(lam, u: float, v: float, prior: PriorModel, mu: EmpiricalMeasure,
                   metric: Metric, resolution: int) -> np.ndarray:
    """``p(x) * exp(-1 - v*phi_lambda(x) - u)`` at the raster cell centers."""
    centers = grid_centers(prior.domain, resolution)
    phi = phi_lambda(centers, np.asarray(lam, dtype=float), mu, metric)
    return prior.density(centers) * np.exp(-1.0 - v * phi - u)


def _stop_rule(cfg: RunConfig) -> StopRule:
    return StopRule(cfg.tolerances.grad_tol, cfg.tolerances.max_ascent_iter)


def _cut_options(cfg: RunConfig) -> CutOptions:
    t = cfg.tolerances
    return CutOptions(max_iter=t.max_cuts, radius_tol=t.radius_tol, cut_tol=t.cut_tol,
                      dual_tol=t.dual_tol, transport_stop=_stop_rule(cfg))


def _setup(cfg: RunConfig, seed: int | None, out: str | None):
    if seed is not None:
        cfg = dataclasses.replace(cfg, seed=seed)
    if out is not None:
        cfg = dataclasses.replace(cfg, output_dir=Path(out))
    prior = cfg.prior()
    mu = cfg.measure()
    batch = draw_batch(prior, cfg.M, cfg.seed)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    return cfg, prior, mu, batch


def _write_regions(stem: Path, regions, mu: EmpiricalMeasure, cfg: RunConfig):
    write_pgm_ascii(stem.with_suffix(".pgm"), region_gray_levels(regions, mu.N), maxval=255)
    write_region_csv(stem.with_suffix(".csv"), regions)
    write_region_png(stem.with_suffix(".png"), regions, mu.N,
                     atoms_to_pixels(mu.points, cfg.domain, cfg.resolution))


def run_transport(cfg: RunConfig, prior, mu, batch) -> TransportSolution:
    sol = maximize_psi(batch, None, mu, cfg.metric, stop=_stop_rule(cfg))
    out = cfg.output_dir
    unweighted = region_masses(batch, None, np.zeros(mu.N), mu, cfg.metric)
    doc = sol.to_dict()
    doc["unweighted_masses"] = unweighted.masses.tolist()
    write_json(out / "transport.json", doc)
    if cfg.domain.dim == 2:
        lam = sol.lambda_star.values
        _write_regions(out / "regions_weighted",
                       rasterize_regions(lam, mu, cfg.metric, cfg.resolution, cfg.domain), mu, cfg)
        _write_regions(out / "regions_unweighted",
                       rasterize_regions(np.zeros(mu.N), mu, cfg.metric, cfg.resolution, cfg.domain),
                       mu, cfg)
    else:
        log.info("skipping rasters: domain is %d-dimensional", cfg.domain.dim)
    return sol


def _write_heatmap(stem: Path, sol: EntropySolution, prior, mu, cfg: RunConfig) -> np.ndarray:
    values = heatmap_values(sol.lambda_star.values, sol.dual.u, sol.dual.v, prior, mu,
                            cfg.metric, cfg.resolution)
    write_pgm16(stem.with_suffix(".pgm"), density_levels16(values))
    write_density_png(stem.with_suffix(".png"), values)
    return values


def run_mincross(cfg: RunConfig, prior, mu, batch, delta: float, stem: str = "",
                 prior_transport: TransportSolution | None = None):
    sol, trace = solve_min_cross_entropy(mu, prior, cfg.metric, delta, batch, _cut_options(cfg),
                                         prior_transport=prior_transport)
    out = cfg.output_dir
    write_json(out / f"entropy{stem}.json", sol.to_dict())
    write_jsonl(out / f"trace{stem}.jsonl", [rec.to_dict() for rec in trace])
    if cfg.domain.dim == 2:
        _write_heatmap(out / f"density{stem}", sol, prior, mu, cfg)
    return sol, trace


def cmd_transport(cfg: RunConfig, seed=None, out=None) -> int:
    cfg, prior, mu, batch = _setup(cfg, seed, out)
    sol = run_transport(cfg, prior, mu, batch)
    print(f"W = {sol.wasserstein:.6f}  iterations = {sol.iterations}  converged = {sol.converged}")
    return EXIT_OK if sol.converged else EXIT_NONCONVERGED


def cmd_mincross(cfg: RunConfig, seed=None, out=None) -> int:
    if cfg.delta is None:
        if len(cfg.delta_list) == 1:
            cfg = dataclasses.replace(cfg, delta=cfg.delta_list[0])
        else:
            raise InputError("mincross needs a single 'delta'")
    cfg, prior, mu, batch = _setup(cfg, seed, out)
    sol, trace = run_mincross(cfg, prior, mu, batch, cfg.delta)
    print(f"H = {sol.cross_entropy:.6f}  u = {sol.dual.u:.6f}  v = {sol.dual.v:.6f}  "
          f"cuts = {len(trace)}  converged = {sol.converged}")
    return EXIT_OK if sol.converged else EXIT_NONCONVERGED


SWEEP_COLUMNS = ("delta", "cross_entropy", "wasserstein_check", "v", "u", "iterations", "converged")


def delta_tag(delta: float) -> str:
    return f"{delta:g}".replace(".", "p")


def run_sweep(cfg: RunConfig, prior, mu, batch: SampleBatch):
    deltas = cfg.delta_list or ((cfg.delta,) if cfg.delta is not None else ())
    if not deltas:
        raise InputError("sweep needs 'delta_list'")
    prior_transport = maximize_psi(batch, None, mu, cfg.metric, stop=_stop_rule(cfg))
    rows = []
    for delta in deltas:
        try:
            sol, trace = run_mincross(cfg, prior, mu, batch, delta, stem=f"_{delta_tag(delta)}",
                                      prior_transport=prior_transport)
        except InfeasiblePolytope as exc:
            log.error("delta=%g failed: %s %s", delta, exc, exc.diagnostics)
            rows.append((delta, float("nan"), float("nan"), float("nan"), float("nan"), 0, False))
            continue
        check = maximize_psi(batch, sol.ratio(mu, cfg.metric), mu, cfg.metric, stop=_stop_rule(cfg))
        rows.append((delta, sol.cross_entropy, check.wasserstein, sol.dual.v, sol.dual.u,
                     len(trace), sol.converged and check.converged))
    with open(cfg.output_dir / "sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow([repr(float(x)) if isinstance(x, float) else str(x) for x in row])
    return rows


def cmd_sweep(cfg: RunConfig, seed=None, out=None) -> int:
    cfg, prior, mu, batch = _setup(cfg, seed, out)
    rows = run_sweep(cfg, prior, mu, batch)
    for row in rows:
        print("delta = {:<8g} H = {:.6f}  W(q*) = {:.6f}  converged = {}".format(row[0], row[1], row[2], row[6]))
    return EXIT_OK if all(r[-1] for r in rows) else EXIT_NONCONVERGED


COMMANDS = {"transport": cmd_transport, "mincross": cmd_mincross, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="entroball", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="run configuration (JSON)")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default=None, help="override the output directory")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.load(args.config)
        return COMMANDS[args.command](cfg, seed=args.seed, out=args.out)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InfeasiblePolytope as exc:
        print(f"solver error: {exc} {exc.diagnostics}", file=sys.stderr)
        return EXIT_NONCONVERGED


if __name__ == "__main__":
    sys.exit(main())
