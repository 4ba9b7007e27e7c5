"""Command-line interface: benchmark drivers and diagnostics.

Every subcommand writes its delimited outputs plus a JSON manifest into a
timestamped run directory and prints a one-line summary.  Flags mirror the
mathematical symbols: --sigma, --d, --n, --dt, --nu.
"""

from __future__ import annotations

import json
import math
import os
import sys

import click
import numpy as np

from . import __version__
from .bench import io as bench_io
from .bench.advection import run_advection_convergence, run_disc_demo, run_zalesak
from .bench.ns import run_abc, run_ns2d
from .errors import SplinepicError
from .grid import CartesianGrid
from .particles import ParticleLayout, init_particles
from .projection import (
    CgConfig,
    assemble_sampled,
    blob_function,
    decay_profile,
    moment_defect,
    project_particles,
)
from .splines import SplineSpace

EXIT_FAILURE = 1

_WORKER_LIMIT = None  # threadpoolctl controller kept alive for the process


def _run_dir(out, name):
    if out:
        os.makedirs(out, exist_ok=True)
        return out
    return bench_io.make_run_dir(name=name)


def _finish(run_dir, manifest, summary):
    if _WORKER_LIMIT is not None:
        manifest = manifest | {"workers": _WORKER_LIMIT}
    bench_io.write_manifest(manifest, os.path.join(run_dir, "manifest.json"))
    click.echo(f"{summary}  [{run_dir}]")


@click.group()
@click.version_option(version=__version__)
@click.option("--workers", default=None, type=int,
              help="Cap the BLAS/OpenMP thread pool (default: library choice).")
def main(workers):
    """Particle regularisation benchmarks and diagnostics."""
    if workers is not None:
        from threadpoolctl import threadpool_limits

        global _WORKER_LIMIT, _WORKER_CONTROLLER
        _WORKER_LIMIT = workers
        _WORKER_CONTROLLER = threadpool_limits(limits=workers)


def _common(f):
    f = click.option("--out", default=None, help="Output directory (default: timestamped).")(f)
    f = click.option("--seed", default=0, show_default=True, help="Random seed.")(f)
    return f


@main.command("advect-eoc")
@click.option("--n", "order", default=4, show_default=True, help="Spline order n.")
@click.option("--d", default=0.5, show_default=True, help="Particle spacing ratio h/sigma.")
@click.option("--sigma-ladder", default=4, show_default=True, help="Number of halvings from sigma=1/8.")
@click.option("--T", "--t", "t_final", default=1.0, show_default=True, help="Final time (revolutions).")
@click.option("--placement", default="cell_center", show_default=True,
              type=click.Choice(["cell_center", "random_in_cell"]))
@_common
def advect_eoc(order, d, sigma_ladder, t_final, placement, out, seed):
    """Rotating-bump advection convergence study."""
    sigmas = [1 / 8 / 2**k for k in range(sigma_ladder)]
    res = run_advection_convergence(sigmas=sigmas, order=order, d=d, t_final=t_final,
                                    placement=placement, seed=seed)
    run_dir = _run_dir(out, "advect-eoc")
    bench_io.write_eoc_table(res["sigmas"], res["errors"], res["errors"],
                             os.path.join(run_dir, "eoc.csv"),
                             os.path.join(run_dir, "eoc.txt"), label="sigma")
    final_eoc = res["eocs"][-1]
    _finish(run_dir, {"command": "advect-eoc", "order": order, "d": d, "sigmas": sigmas,
                      "t_final": t_final, "placement": placement, "seed": seed,
                      "errors": res["errors"], "eocs": res["eocs"]},
            f"advect-eoc n={order}: final error {res['errors'][-1]:.3e}, EOC {final_eoc:.2f}")
    if final_eoc is None or math.isnan(final_eoc):
        raise SystemExit(EXIT_FAILURE)


@main.command("disc-demo")
@click.option("--sigma", default=0.1, show_default=True)
@click.option("--d", default=0.5, show_default=True)
@click.option("--n", "order", default=2, show_default=True)
@click.option("--T", "--t", "t_final", default=0.15, show_default=True)
@click.option("--dt", default=0.005, show_default=True)
@click.option("--full", is_flag=True, help="Paper-scale parameters (sigma=0.01).")
@_common
def disc_demo(sigma, d, order, t_final, dt, full, out, seed):
    """Cone vortex: sampled-mass versus exact-mass reconstruction."""
    if full:
        sigma = 0.01
    res = run_disc_demo(sigma=sigma, d=d, order=order, t_final=t_final, dt=dt,
                        snapshot_cells=100)
    run_dir = _run_dir(out, "disc-demo")
    with open(os.path.join(run_dir, "deviation.csv"), "w") as fh:
        fh.write("time,deviation_sampled,deviation_exact_mass\n")
        for t, a, b in zip(res["times"], res["deviation_sampled"], res["deviation_exact_mass"]):
            fh.write(f"{t:.17g},{a:.17g},{b:.17g}\n")
    for snap in res["snapshots"]:
        for key in ("sampled", "exact_mass"):
            bench_io.write_field_snapshot(
                os.path.join(run_dir, f"snapshot-{key}-t{snap['time']:g}.csv"),
                snap["xs"], snap["ys"], snap[key],
                {"time": snap["time"], "kind": key, "sigma": sigma, "order": order},
            )
    _finish(run_dir, {"command": "disc-demo", "sigma": sigma, "d": d, "order": order,
                      "t_final": t_final, "dt": dt, "seed": seed},
            f"disc-demo: sampled dev {res['deviation_sampled'][-1]:.3e}, "
            f"exact-mass dev {res['deviation_exact_mass'][-1]:.3e} at t={t_final}")


@main.command("zalesak")
@click.option("--sigma", default=0.02, show_default=True)
@click.option("--d", default=0.5, show_default=True)
@click.option("--n", "order", default=2, show_default=True)
@click.option("--dt", default=1.0, show_default=True)
@click.option("--T", "--t", "t_final", default=628.0, show_default=True)
@click.option("--full", is_flag=True, help="Paper-scale parameters (sigma=0.01).")
@_common
def zalesak(sigma, d, order, dt, t_final, full, out, seed):
    """Slitted-disk rotation with level-set snapshots."""
    if full:
        sigma = 0.01
    res = run_zalesak(sigma=sigma, d=d, order=order, dt=dt, t_final=t_final)
    run_dir = _run_dir(out, "zalesak")
    for snap in res["snapshots"]:
        bench_io.write_field_snapshot(
            os.path.join(run_dir, f"snapshot-t{snap['time']:g}.csv"),
            snap["xs"], snap["ys"], snap["values"],
            {"time": snap["time"], "sigma": sigma, "order": order,
             "area": snap["area"], "slit_crossings": snap["slit_crossings"]},
        )
    ok = res["values_bitwise_invariant"] and res["area_drift"] < 0.01
    _finish(run_dir, {"command": "zalesak", "sigma": sigma, "d": d, "order": order,
                      "dt": dt, "t_final": t_final, "seed": seed,
                      "area_drift": res["area_drift"],
                      "values_bitwise_invariant": res["values_bitwise_invariant"],
                      "slit_crossings": [s["slit_crossings"] for s in res["snapshots"]]},
            f"zalesak: bitwise={res['values_bitwise_invariant']} "
            f"area drift {res['area_drift']:.2e} "
            f"slit crossings {res['snapshots'][-1]['slit_crossings']}")
    if not ok:
        raise SystemExit(EXIT_FAILURE)


@main.command("ns2d")
@click.option("--sigma", default=1 / 13, show_default=True)
@click.option("--d", default=0.5, show_default=True)
@click.option("--n", "order", default=4, show_default=True)
@click.option("--dt", default=1 / 32, show_default=True)
@click.option("--T", "--t", "t_final", default=26.0, show_default=True)
@click.option("--nu", default=1e-5, show_default=True)
@click.option("--scheme", default="rk4", show_default=True)
@click.option("--placement", default="random_in_cell", show_default=True,
              type=click.Choice(["cell_center", "random_in_cell"]))
@click.option("--projection-mode", default="per_stage", show_default=True,
              type=click.Choice(["per_stage", "per_step"]))
@click.option("--full", is_flag=True, help="Paper-scale parameters (sigma=1/30, order-10 integrator).")
@_common
def ns2d(sigma, d, order, dt, t_final, nu, scheme, placement, projection_mode, full, out, seed):
    """Long-term 2D Navier-Stokes benchmark (vorticity form)."""
    if full:
        sigma, scheme = 1 / 30, "midpoint10"
    res = run_ns2d(sigma=sigma, order=order, d=d, dt=dt, t_final=t_final, nu=nu,
                   seed=seed, scheme=scheme, placement=placement,
                   projection_mode=projection_mode)
    run_dir = _run_dir(out, "ns2d")
    bench_io.write_error_series(res["series"], os.path.join(run_dir, "errors.csv"))
    _finish(run_dir, {k: v for k, v in res.items() if k != "series"} | {"command": "ns2d"},
            f"ns2d sigma={sigma:.4g} n={order}: final l2 {res['series'].l2[-1]:.3e} "
            f"stable={res['stable']}")
    if not res["stable"]:
        raise SystemExit(EXIT_FAILURE)


@main.command("abc")
@click.option("--n", "order", default=4, show_default=True)
@click.option("--d", default=0.5, show_default=True)
@click.option("--dt", default=1 / 25, show_default=True)
@click.option("--T", "--t", "t_final", default=10.0, show_default=True)
@click.option("--nu", default=1e-3, show_default=True)
@click.option("--sigma-ladder", default=2, show_default=True,
              help="Number of rungs from the {2pi/10, 2pi/14, 2pi/20, ...} ladder.")
@click.option("--scheme", default="midpoint10", show_default=True)
@click.option("--projection-mode", default="per_stage", show_default=True,
              type=click.Choice(["per_stage", "per_step"]))
@_common
def abc(order, d, dt, t_final, nu, sigma_ladder, scheme, projection_mode, out, seed):
    """3D ABC-flow convergence benchmark."""
    denominators = [10, 14, 20, 28, 40][:sigma_ladder]
    sigmas = [2 * math.pi / m for m in denominators]
    res = run_abc(sigmas=sigmas, order=order, d=d, dt=dt, t_final=t_final, nu=nu,
                  seed=seed, scheme=scheme, projection_mode=projection_mode)
    run_dir = _run_dir(out, "abc")
    for r in res["runs"]:
        tag = f"sigma-2pi-{round(2 * math.pi / r['sigma'])}"
        bench_io.write_error_series(r["series"], os.path.join(run_dir, f"errors-{tag}.csv"))
    bench_io.write_eoc_table(
        sigmas, [r["final_l2"] for r in res["runs"]], [r["final_h1"] for r in res["runs"]],
        os.path.join(run_dir, "eoc.csv"), os.path.join(run_dir, "eoc.txt"), label="sigma",
    )
    eoc = res.get("l2_eocs", [None, None])[-1]
    _finish(run_dir, {k: v for k, v in res.items() if k != "runs"}
            | {"command": "abc", "sigmas": sigmas,
               "final_l2": [r["final_l2"] for r in res["runs"]],
               "final_h1": [r["final_h1"] for r in res["runs"]]},
            f"abc n={order}: final l2 {res['runs'][-1]['final_l2']:.3e}"
            + (f", EOC {eoc:.2f}" if eoc else ""))
    if not all(r["stable"] for r in res["runs"]):
        raise SystemExit(EXIT_FAILURE)


@main.command("diag-moments")
@click.option("--n", "order", default=4, show_default=True)
@click.option("--sigma", default=0.125, show_default=True)
@click.option("--d", default=0.5, show_default=True)
@click.option("--trials", default=10, show_default=True)
@_common
def diag_moments(order, sigma, d, trials, out, seed):
    """Discrete moment conditions of the blob function."""
    grid = CartesianGrid((0.0, 0.0), (1.0, 1.0), (round(1 / sigma),) * 2)
    space = SplineSpace(grid, order)
    field = init_particles(grid, d * sigma, ParticleLayout(d=d),
                           lambda p: np.ones(p.shape[0]))
    op = assemble_sampled(space, field)
    rng = np.random.default_rng(seed)
    cfg = CgConfig(rel_tolerance=1e-12, max_iterations=3000)
    worst = 0.0
    for _ in range(trials):
        y = rng.uniform(2 * sigma, 1 - 2 * sigma, size=2)
        blob, _ = blob_function(space, field, y, cfg, operator=op)
        worst = max(worst, float(np.abs(moment_defect(space, field, blob, y)).max()))
    click.echo(f"diag-moments n={order} sigma={sigma}: max defect {worst:.3e}")
    if worst >= 1e-6:
        raise SystemExit(EXIT_FAILURE)


@main.command("diag-decay")
@click.option("--n", "order", default=2, show_default=True)
@click.option("--sigma", default=1 / 16, show_default=True)
@click.option("--d", default=0.5, show_default=True)
@_common
def diag_decay(order, sigma, d, out, seed):
    """Exponential decay of the discrete inverse applied to a cell load."""
    cells = round(1 / sigma)
    grid = CartesianGrid((0.0, 0.0), (1.0, 1.0), (cells,) * 2)
    space = SplineSpace(grid, order)
    field = init_particles(grid, d * sigma, ParticleLayout(d=d),
                           lambda p: np.ones(p.shape[0]))
    _, norms, rho = decay_profile(space, field, (cells // 2, cells // 2),
                                  CgConfig(rel_tolerance=1e-12, max_iterations=3000))
    click.echo(f"diag-decay n={order} sigma={sigma}: rho {rho:.3f}")
    if not rho < 0.9:
        raise SystemExit(EXIT_FAILURE)


@main.command("diag-stability")
@click.option("--n", "order", default=4, show_default=True)
@_common
def diag_stability(order, out, seed):
    """Iteration counts at d=1/2 versus the d=0.95 probe."""
    from .errors import ConvergenceFailure, StabilityViolation

    grid = CartesianGrid((0.0, 0.0), (1.0, 1.0), (19, 19), (True, True))
    space = SplineSpace(grid, order)
    y = np.array([0.41, 0.53])
    field_half = init_particles(grid, 1 / 38, ParticleLayout(d=0.5),
                                lambda p: np.ones(p.shape[0]))
    _, rep = blob_function(space, field_half, y)
    base = rep["iterations"]
    field_probe = init_particles(grid, 1 / 20, ParticleLayout("random_in_cell", seed=seed, d=0.95),
                                 lambda p: np.ones(p.shape[0]))
    try:
        _, rep = blob_function(space, field_probe, y,
                               CgConfig(rel_tolerance=1e-10, max_iterations=50000))
        probe = rep["iterations"]
        outcome = f"{probe} iterations ({probe / base:.1f}x the d=1/2 count {base})"
        degraded = probe > 5 * base
    except (ConvergenceFailure, StabilityViolation) as exc:
        outcome = type(exc).__name__
        degraded = True
    click.echo(f"diag-stability n={order}: d=0.95 probe -> {outcome}")
    if not degraded:
        raise SystemExit(EXIT_FAILURE)


def run():
    try:
        main(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except SplinepicError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_FAILURE)


if __name__ == "__main__":
    run()
