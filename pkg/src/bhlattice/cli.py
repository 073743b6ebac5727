"""Command-line interface for simulations, attractor studies, and the
verification suite.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from .attractor import AttractorConfig, cloud_norm, cloud_to_json
from .errors import (BhLatticeError, ConfigError, DissipativityViolation,
                     NoConvergence, NonFinite, NotStabilized)
from .experiments import (ExperimentConfig, GridConfig, ReferenceConfig,
                          ResultTable, _provenance, default_config,
                          default_params, implicit_attractor, run_bounds,
                          run_dim_convergence, run_eps_convergence,
                          run_error_order, run_noise_convergence, verify,
                          write_table)
from .lattice import LatticeWindow, Params
from .stepping import StepConfig, run_trajectory
from .stochastic import NoiseConfig, ou_path, ou_path_to_json


def load_config(path: str | None, seed: int | None = None) -> ExperimentConfig:
    if path is None:
        cfg = default_config()
    else:
        try:
            with open(path) as fh:
                if path.endswith((".yml", ".yaml")):
                    import yaml

                    doc = yaml.safe_load(fh)
                else:
                    doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}")
        cfg = _config_from_dict(doc or {})
    if seed is not None:
        cfg.master_seed = seed
    return cfg


def _config_from_dict(doc: dict) -> ExperimentConfig:
    try:
        pdoc = dict(doc.get("params", {}))
        if "f" in pdoc:
            fdoc = pdoc.pop("f")
            f = LatticeWindow(int(fdoc.get("offset", 0)),
                             np.array(fdoc.get("values", []), dtype=float))
        else:
            f = default_params().f
        params = Params(
            nu=float(pdoc.get("nu", 1.0)),
            alpha=float(pdoc.get("alpha", 1.0)),
            beta=float(pdoc.get("beta", 1.0)),
            gamma=float(pdoc.get("gamma", 0.5)),
            lam=float(pdoc.get("lam", 8.0)),
            f=f,
            laplacian_sign=pdoc.get("laplacian_sign", "paper"),
        )
        cfg = ExperimentConfig(
            params=params,
            grids=GridConfig(**{k: tuple(v) for k, v in
                                doc.get("grids", {}).items()}),
            attractor=AttractorConfig(**doc.get("attractor", {})),
            noise=NoiseConfig(**doc.get("noise", {})),
            reference=ReferenceConfig(**doc.get("reference", {})),
        )
        for key in ("window_half_width", "noise_m", "pullback_points",
                    "output_dir", "master_seed"):
            if key in doc:
                setattr(cfg, key, doc[key])
        return cfg
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid configuration: {exc}")


def _emit(table: ResultTable, out_dir: str, fmt: str):
    paths = write_table(table, out_dir, fmt)
    for p in paths:
        print(p)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bhlattice",
        description="Implicit-Euler Burgers-Huxley lattice simulator and "
                    "attractor verification harness.")
    parser.add_argument("--config", help="config file (YAML or JSON)")
    parser.add_argument("--seed", type=int, help="override the master seed")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads (accepted; runs are already "
                             "vectorized)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="run an implicit-Euler trajectory")
    sp.add_argument("--eps", type=float, default=0.005)
    sp.add_argument("--steps", type=int, default=200)
    sp.add_argument("--amplitude", type=float, default=0.5,
                    help="initial state amplitude at site 0")

    sp = sub.add_parser("attractor", help="approximate one attractor cloud")
    sp.add_argument("--eps", type=float, default=0.005)

    sub.add_parser("converge-eps", help="time-step convergence study")
    sub.add_parser("converge-dim", help="truncation-dimension study")
    sub.add_parser("converge-noise", help="noise-intensity pullback study")
    sub.add_parser("error-order", help="discretization error orders")
    sub.add_parser("bounds", help="attractor norm bound sweep")

    sp = sub.add_parser("ou-path", help="sample one noise path")
    sp.add_argument("--horizon", type=float, default=100.0)
    sp.add_argument("--h", type=float, default=0.01)

    sub.add_parser("verify", help="run the full invariant suite")

    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args.seed)
        if args.out:
            cfg.output_dir = args.out
        return _dispatch(args, cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (NoConvergence, NonFinite, NotStabilized, DissipativityViolation) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except BhLatticeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def _dispatch(args, cfg: ExperimentConfig) -> int:
    cmd = args.command
    if cmd == "simulate":
        step_cfg = StepConfig(eps=args.eps, enforce_eps_star=False)
        u0 = LatticeWindow.basis(0, args.amplitude)
        traj = run_trajectory(cfg.params, step_cfg, u0, args.steps,
                              cfg.window_half_width)
        table = ResultTable(
            "simulate",
            {"step": list(range(len(traj.states))),
             "norm": [u.norm() for u in traj.states]},
            _provenance(cfg))
        _emit(table, cfg.output_dir, args.format)
        return 0
    if cmd == "attractor":
        cloud = implicit_attractor(cfg.params, args.eps, cfg.attractor,
                                   cfg.window_half_width)
        os.makedirs(cfg.output_dir, exist_ok=True)
        tag = f"eps{args.eps:g}"
        path = os.path.join(cfg.output_dir, f"cloud_{tag}.json")
        with open(path, "w") as fh:
            fh.write(cloud_to_json(cloud))
        print(path)
        print(f"cloud norm: {cloud_norm(cloud):.6e}")
        return 0
    if cmd == "converge-eps":
        _emit(run_eps_convergence(cfg), cfg.output_dir, args.format)
        return 0
    if cmd == "converge-dim":
        _emit(run_dim_convergence(cfg), cfg.output_dir, args.format)
        return 0
    if cmd == "converge-noise":
        _emit(run_noise_convergence(cfg), cfg.output_dir, args.format)
        return 0
    if cmd == "error-order":
        _emit(run_error_order(cfg), cfg.output_dir, args.format)
        return 0
    if cmd == "bounds":
        _emit(run_bounds(cfg), cfg.output_dir, args.format)
        return 0
    if cmd == "ou-path":
        path = ou_path(cfg.master_seed, -args.horizon, 0.0, args.h)
        os.makedirs(cfg.output_dir, exist_ok=True)
        out = os.path.join(cfg.output_dir, "ou_path.json")
        with open(out, "w") as fh:
            fh.write(ou_path_to_json(path))
        print(out)
        return 0
    if cmd == "verify":
        ok, report = verify(cfg)
        os.makedirs(cfg.output_dir, exist_ok=True)
        out = os.path.join(cfg.output_dir, "verify_report.json")
        with open(out, "w") as fh:
            fh.write(json.dumps(report, indent=2))
        for check in report["checks"]:
            print(f"{check['status']:4s}  {check['check']}")
        print(out)
        return 0 if ok else 1
    raise ConfigError(f"unknown command {cmd!r}")


if __name__ == "__main__":
    sys.exit(main())
