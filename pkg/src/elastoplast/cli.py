"""Command line drivers for the benchmark problems.

Usage::

    elastoplast elasticity --dim 3 --elem Q1 --level 1
    elastoplast plasticity-vm --dim 2 --elem Q2 --level 2
    elastoplast plasticity-dp --dim 2 --elem P2

Outputs go to ``--output``, else to ``$ELASTOPLAST_OUTPUT_DIR``, else to
``./results``.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import solver
from .exceptions import ConfigurationError, NewtonConvergenceError, SolverFailure
from .output import RunConfig, write_csv_records, write_summary, write_vtk
from .reference_elements import ElementType, Family

OUTPUT_ENV = "ELASTOPLAST_OUTPUT_DIR"
DEFAULT_LEVEL = {"elasticity": 1, "plasticity-vm": 1, "plasticity-dp": 0}

log = logging.getLogger("elastoplast")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="elastoplast", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in DEFAULT_LEVEL:
        p = sub.add_parser(name)
        p.add_argument("--dim", type=int, choices=(2, 3), default=2)
        p.add_argument("--elem", choices=[f.value for f in Family], default="P1")
        p.add_argument("--level", type=int, default=None)
        p.add_argument("--output", default=None)
        p.add_argument("--eps-newton", type=float, default=1e-10)
        p.add_argument("--max-iters", type=int, default=25)
        p.add_argument("--solver", dest="linear_solver", choices=("direct", "cg"), default="direct")
        p.add_argument("--deformed", action="store_true",
                       help="write node positions of the deformed body")
        if name == "plasticity-vm":
            p.add_argument("--n-steps", type=int, default=40)
        if name == "plasticity-dp":
            p.add_argument("--du0", type=float, default=1e-3)
            p.add_argument("--u-max", type=float, default=1.0)
            p.add_argument("--theta", type=float, default=1e-3)
    return parser


def parse_config(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    kw = {k: v for k, v in vars(ns).items() if v is not None}
    kw.setdefault("level", DEFAULT_LEVEL[ns.command])
    kw.setdefault("output", os.environ.get(OUTPUT_ENV, "results"))
    if kw["level"] < 0:
        raise ConfigurationError("level must be nonnegative")
    return RunConfig(**kw)


def _element_average(result, values: np.ndarray) -> np.ndarray:
    return values.reshape(result.mesh.n_e, -1).mean(axis=1)


def run(cfg: RunConfig) -> dict:
    out = Path(cfg.output)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigurationError(f"output directory {out} is not writable: {exc}") from exc

    elem_type = ElementType(Family(cfg.elem), cfg.dim)
    settings = solver.NewtonSettings(cfg.eps_newton, cfg.max_iters, linear_solver=cfg.linear_solver)
    if cfg.command == "elasticity":
        res = solver.run_elastic(elem_type, cfg.level, settings=settings)
    elif cfg.command == "plasticity-vm":
        settings.on_failure = "halve_step"  # coarse cycles can make Newton oscillate
        res = solver.run_vm_cyclic(elem_type, cfg.level, n_steps=cfg.n_steps, settings=settings)
        write_csv_records(res.records, out / "hysteresis.csv")
        for k, hard in res.snapshots.items():
            write_vtk(res.mesh, out / f"hardening_{k:03d}.vtk",
                      cell_fields={"hardening_norm": _element_average(res, hard)})
    elif cfg.command == "plasticity-dp":
        settings.on_failure = "halve_step"
        res = solver.run_dp_footing(elem_type, cfg.level, du0=cfg.du0, u_max=cfg.u_max,
                                    theta=cfg.theta, settings=settings)
        write_csv_records(res.records, out / "loadpath.csv")
    else:
        raise ConfigurationError(f"unknown command {cfg.command!r}")

    disp = res.point_fields["displacement"]
    write_vtk(res.mesh, out / "displacement.vtk", res.point_fields,
              displacement=disp if cfg.deformed else None)
    summary = {"command": cfg.command, "dim": cfg.dim, "elem": cfg.elem, "level": cfg.level,
               **res.summary}
    write_summary(summary, out / "summary.txt")
    (out / "config.json").write_text(cfg.to_json() + "\n")
    return summary


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
        summary = run(cfg)
    except SystemExit as exc:  # argparse errors
        return int(exc.code or 0)
    except (ConfigurationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NewtonConvergenceError, SolverFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    log.info("wrote results to %s", cfg.output)
    for k, v in summary.items():
        log.info("%s=%s", k, v)
    return 0


if __name__ == "__main__":
    sys.exit(main())
