"""Batch command-line front end: file-based, reproducible pipeline runs.

Every command is a pure function of (inputs, flags, seed); a RunManifest
JSON with input/output digests is written next to each output so runs can
be audited and replayed.  Numeric output carries 17 significant digits.

Exit codes: 0 success, 2 usage, 3 convergence, 4 degeneracy, 5 resource.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import time
from typing import Optional

import numpy as np

from . import __version__
from .errors import PolypushError, UsageError
from .gauge import AlignmentConfig, gauge_distance
from .lowerbound import build_networks, pair_to_json, search_matched_pair
from .lowrank import (
    LRConfig,
    exact_lowrank_pair_moments,
    factorize,
    verify_assumption_lr,
)
from .moments import (
    estimate_pair_moments,
    estimate_quadratic_moments,
    exact_quadratic_moments,
    table_from_json,
    table_to_json,
)
from .networks import (
    PolyNetwork,
    SeedDistribution,
    SmoothingParams,
    network_from_json,
    network_to_json,
    sample,
    smooth_componentwise,
    smooth_quadratic,
    w1_upper_bound,
)
from .tensor_ring import TRConfig, decompose, verify_assumption_tr
from .relaxation import SolverConfig


def _fmt(x) -> float:
    """Round-trip through 17 significant digits for stable text output."""
    return float(f"{float(x):.17g}")


def _digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise UsageError(f"input file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc


def _manifest(args, inputs: list[str], outputs: list[str]) -> None:
    flags = {
        k: v for k, v in vars(args).items() if k not in ("func",) and v is not None
    }
    man = {
        "command": args.command,
        "flags": {k: (v if not isinstance(v, float) else _fmt(v)) for k, v in flags.items()},
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "inputs": {p: _digest(p) for p in inputs},
        "outputs": {p: _digest(p) for p in outputs},
    }
    target = outputs[0] if outputs else f"{args.command}"
    _write_json(target + ".manifest.json", man)


def _seed_dist(name: str) -> SeedDistribution:
    if name == "gaussian":
        return SeedDistribution(kind="gaussian")
    if name == "identity":
        # identity-Sigma mode is a moment-table convention, not a seed law;
        # sampling still uses the Gaussian seed
        return SeedDistribution(kind="gaussian")
    raise UsageError(f"unknown --sigma {name!r}")


def cmd_generate(args) -> int:
    if args.r < 1 or args.d < 1:
        raise UsageError("--r and --d must be at least 1")
    if args.kind == "quadratic":
        if args.base:
            base = network_from_json(_read_json(args.base))
        else:
            base = PolyNetwork(
                kind="quadratic", r=args.r, d=args.d,
                Q=np.zeros((args.d, args.r, args.r)),
            )
        net = smooth_quadratic(SmoothingParams(rho=args.rho, base=base, rng_seed=args.seed))
    else:
        if args.base:
            base = network_from_json(_read_json(args.base))
        else:
            base = PolyNetwork(
                kind="lowrank", r=args.r, d=args.d, omega=args.omega,
                ell=args.ell, components=np.zeros((args.d, args.ell, args.r)),
            )
        net = smooth_componentwise(
            SmoothingParams(rho=args.rho, base=base, rng_seed=args.seed)
        )
    _write_json(args.out, network_to_json(net))
    _manifest(args, [args.base] if args.base else [], [args.out])
    return 0


def cmd_sample(args) -> int:
    net = network_from_json(_read_json(args.network))
    z = sample(net, _seed_dist(args.sigma), args.n, rng_seed=args.seed)
    _write_json(args.out, {"n": args.n, "d": net.d, "z": [[_fmt(v) for v in row] for row in z]})
    _manifest(args, [args.network], [args.out])
    return 0


def cmd_moments(args) -> int:
    if args.samples:
        obj = _read_json(args.samples)
        z = np.asarray(obj["z"], dtype=float)
        if args.kind == "quadratic":
            table = estimate_quadratic_moments(z)
        else:
            table = estimate_pair_moments(z)
    else:
        net = network_from_json(_read_json(args.network))
        if net.kind == "quadratic":
            table = exact_quadratic_moments(net)
        else:
            table = exact_lowrank_pair_moments(net)
    _write_json(args.out, table_to_json(table))
    _manifest(args, [args.samples or args.network], [args.out])
    return 0


def cmd_solve_tr(args) -> int:
    table = table_from_json(_read_json(args.table))
    cfg = TRConfig(
        r=args.r, backend=args.backend, degree=args.degree,
        restarts=args.restarts, tol=args.tol, rng_seed=args.seed,
        eta=args.eta, solver=SolverConfig(tol=min(args.tol * 10, 1e-7)),
    )
    truth = network_from_json(_read_json(args.truth)) if args.truth else None
    report = decompose(table.S, table.T, cfg, truth=truth)
    _write_json(args.out, network_to_json(report.network))
    summary = {
        "residual_S": _fmt(report.residual_S),
        "residual_T": _fmt(report.residual_T),
        "gauge_dist": None if report.gauge_dist is None else _fmt(report.gauge_dist),
    }
    print(json.dumps(summary))
    _manifest(args, [p for p in (args.table, args.truth) if p], [args.out])
    return 0


def cmd_solve_lr(args) -> int:
    table = table_from_json(_read_json(args.table))
    cfg = LRConfig(
        r=args.r, omega=args.omega, ell=args.ell, backend=args.backend,
        degree=args.degree, restarts=args.restarts, tol=args.tol,
        rng_seed=args.seed,
        sigma_mode="identity" if args.sigma == "identity" else "gaussian",
        eta=args.eta,
    )
    truth = network_from_json(_read_json(args.truth)) if args.truth else None
    report = factorize(table.S, cfg, truth=truth)
    _write_json(args.out, network_to_json(report.network))
    summary = {
        "residual_S": _fmt(report.residual_S),
        "gauge_dist": None if report.gauge_dist is None else _fmt(report.gauge_dist),
    }
    print(json.dumps(summary))
    _manifest(args, [p for p in (args.table, args.truth) if p], [args.out])
    return 0


def cmd_eval(args) -> int:
    net_a = network_from_json(_read_json(args.network))
    net_b = network_from_json(_read_json(args.reference))
    dist, _ = gauge_distance(net_a, net_b, AlignmentConfig(rng_seed=args.seed))
    w1 = w1_upper_bound(dist, net_a.r, net_a.d, net_a.omega, _seed_dist(args.sigma))
    out = {"gauge_dist": _fmt(dist), "w1_upper_bound": _fmt(w1)}
    print(json.dumps(out))
    if args.out:
        _write_json(args.out, out)
        _manifest(args, [args.network, args.reference], [args.out])
    return 0


def cmd_verify(args) -> int:
    net = network_from_json(_read_json(args.network))
    if net.kind == "quadratic":
        rep = verify_assumption_tr(net)
        out = {
            "kind": "quadratic",
            "radius": _fmt(rep.radius),
            "sigma_m": _fmt(rep.sigma_m),
            "m": rep.m,
            "d": rep.d,
            "predicted_kappa": None if rep.predicted_kappa is None else _fmt(rep.predicted_kappa),
            "flag": rep.flag,
            "warning": rep.warning,
        }
    else:
        rep = verify_assumption_lr(net)
        out = {
            "kind": "lowrank",
            "radius": _fmt(rep.radius),
            "sigma_min_M": _fmt(rep.sigma_min_M),
            "sigma_min_H": _fmt(rep.sigma_min_H),
            "sigma_min_K": None if rep.sigma_min_K is None else _fmt(rep.sigma_min_K),
            "k_skipped": rep.k_skipped,
            "flag_psi": rep.flag_psi,
            "flag_kappa": rep.flag_kappa,
        }
    print(json.dumps(out))
    if args.out:
        _write_json(args.out, out)
        _manifest(args, [args.network], [args.out])
    return 0


def cmd_lowerbound(args) -> int:
    pair = search_matched_pair(args.r, restarts=args.restarts, tol=args.tol, rng_seed=args.seed)
    inst = build_networks(pair)
    text = pair_to_json(inst)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        _manifest(args, [], [args.out])
    else:
        print(text)
    return 0


def cmd_bench(args) -> int:
    rows = []
    seeds = range(args.seed, args.seed + args.reps)
    etas = [float(e) for e in args.eta_list.split(",")]
    for eta in etas:
        for s in seeds:
            base = PolyNetwork(
                kind="quadratic", r=args.r, d=args.d,
                Q=np.zeros((args.d, args.r, args.r)),
            )
            truth = smooth_quadratic(SmoothingParams(rho=args.rho, base=base, rng_seed=s))
            table = exact_quadratic_moments(truth)
            rng = np.random.Generator(np.random.Philox(key=(s, 99)))
            S = table.S + eta * rng.uniform(-1, 1, size=table.S.shape)
            T = table.T + eta * rng.uniform(-1, 1, size=table.T.shape)
            S = 0.5 * (S + S.T)
            t0 = time.perf_counter()
            cfg = TRConfig(
                r=args.r, backend=args.backend, restarts=args.restarts,
                tol=args.tol, rng_seed=s, eta=eta,
            )
            try:
                report = decompose(S, T, cfg, truth=truth)
                gd, resid = report.gauge_dist, report.residual
            except PolypushError:
                gd, resid = float("nan"), float("nan")
            wall_ms = 1000.0 * (time.perf_counter() - t0)
            rows.append(
                [args.r, args.d, 2, 0, args.rho, eta, 0, args.backend, s,
                 _fmt(gd), _fmt(resid), _fmt(wall_ms)]
            )
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(
        ["r", "d", "omega", "ell", "rho", "eta", "n", "backend", "seed",
         "gauge_dist", "residual", "wall_ms"]
    )
    writer.writerows(rows)
    with open(args.out, "w") as fh:
        fh.write(buf.getvalue())
    _manifest(args, [], [args.out])
    return 0


def _common_solver_flags(p):
    p.add_argument("--backend", choices=("sos", "local", "hybrid"), default="local")
    p.add_argument("--degree", type=int, default=None)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--eta", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="polypush",
        description="learn polynomial transformations of Gaussian seeds from moments",
    )
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a smoothed network JSON")
    p.add_argument("--kind", choices=("quadratic", "lowrank"), default="quadratic")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--omega", type=int, default=3)
    p.add_argument("--ell", type=int, default=1)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--base", default=None, help="base network JSON (default zeros)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("sample", help="draw pushforward samples")
    p.add_argument("--network", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--sigma", choices=("gaussian", "identity"), default="gaussian")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("moments", help="exact or estimated moment tables")
    p.add_argument("--network", default=None)
    p.add_argument("--samples", default=None)
    p.add_argument("--kind", choices=("quadratic", "pair"), default="quadratic")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("solve_tr", help="tensor-ring decomposition from a moment table")
    p.add_argument("--table", required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--truth", default=None, help="reference network for gauge distance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _common_solver_flags(p)
    p.set_defaults(func=cmd_solve_tr)

    p = sub.add_parser("solve_lr", help="low-rank factorization from a pair-moment table")
    p.add_argument("--table", required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--omega", type=int, default=3)
    p.add_argument("--ell", type=int, default=1)
    p.add_argument("--sigma", choices=("gaussian", "identity"), default="gaussian")
    p.add_argument("--truth", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _common_solver_flags(p)
    p.set_defaults(func=cmd_solve_lr)

    p = sub.add_parser("eval", help="gauge distance and Wasserstein bound")
    p.add_argument("--network", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--sigma", choices=("gaussian", "identity"), default="gaussian")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("verify", help="non-degeneracy diagnostics")
    p.add_argument("--network", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("lowerbound", help="matched-pair hard instance")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_lowerbound)

    p = sub.add_parser("bench", help="sweep decomposition accuracy and runtime to CSV")
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--eta-list", default="0.0,1e-4,1e-3")
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _common_solver_flags(p)
    p.set_defaults(func=cmd_bench)

    return ap


def main(argv: Optional[list[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        return args.func(args)
    except PolypushError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except SystemExit as exc:
        # argparse uses 2 for usage errors already
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
