"""Batch command-line front end.

Every command loads a JSON config, runs one experiment and writes a tidy
table (CSV or JSON) that plotting tools can read directly::

    wpcn forward     --config cfg.json --trials 1000 --out rates.csv
    wpcn optimize    --oracle --format json
    wpcn sweep-m     --m-list 8,16,32,64,128,256,512,1024
    wpcn surface     --grid 60x60
    wpcn asymptotics --m-list 16,256,2048
    wpcn oracle      --grid 200x200

Exit codes: 0 success, 2 configuration/usage error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .montecarlo import run_forward_experiment, reference_scenarios
from .optimizer import (
    SingularMixingError,
    asymptotics,
    default_grid,
    grid_oracle,
    run_algorithm1,
)
from .rates import ConvergenceError, DecisionVariables, FeedbackApproximationError
from .system import ConfigError, config_to_dict, default_config, load_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

MBPS = 1e-6


@dataclass
class RunManifest:
    command: str
    config_path: str | None
    seed: int
    trials: int
    output_path: str | None
    format: str
    flags: dict = field(default_factory=dict)


@dataclass
class Table:
    columns: list
    rows: list
    metadata: dict


def _mbps(x):
    return float(x) * MBPS


def _parse_grid(text):
    try:
        a, b = text.lower().split("x")
        na, nb = int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 60x60, got {text!r}")
    if na < 1 or nb < 1:
        raise argparse.ArgumentTypeError("grid sizes must be positive")
    return na, nb


def _parse_int_list(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (defaults: reference network)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--trials", type=int, default=1000)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    parser = argparse.ArgumentParser(prog="wpcn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("forward", parents=[common], help="simulated vs analytic WIT rates")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--beta", type=float, default=0.1)

    p = sub.add_parser("optimize", parents=[common], help="max-min optimum")
    p.add_argument("--oracle", action="store_true", help="also run the grid search")
    p.add_argument("--asymptotic-init", action="store_true")
    p.add_argument("--grid", type=_parse_grid, default=(200, 200))

    p = sub.add_parser("sweep-m", parents=[common], help="optimum versus antenna count")
    p.add_argument("--m-list", type=_parse_int_list,
                   default=[8, 16, 32, 64, 128, 256, 512, 1024])
    p.add_argument("--asymptotic-init", action="store_true")

    p = sub.add_parser("surface", parents=[common], help="WIT rate over an (alpha, beta) grid")
    p.add_argument("--grid", type=_parse_grid, default=(50, 50))
    p.add_argument("--wds", type=_parse_int_list, default=None,
                   help="1-based WD indices (default: all)")

    p = sub.add_parser("asymptotics", parents=[common], help="large-M closed forms")
    p.add_argument("--m-list", type=_parse_int_list, default=None)

    p = sub.add_parser("oracle", parents=[common], help="grid-search optimum")
    p.add_argument("--grid", type=_parse_grid, default=(200, 200))
    return parser


def _metadata(manifest: RunManifest, config) -> dict:
    return {
        "command": manifest.command,
        "version": __version__,
        "seed": manifest.seed,
        "trials": manifest.trials,
        "config": config_to_dict(config),
        "flags": manifest.flags,
    }


def cmd_forward(config, manifest: RunManifest) -> Table:
    K = config.K
    cols = ["scenario", "method", "alpha", "beta", "trials", "discarded"]
    cols += [f"r_w_{k + 1}_mbps" for k in range(K)]
    cols += [f"se_{k + 1}_mbps" for k in range(K)]
    rows = []
    alpha, beta = manifest.flags["alpha"], manifest.flags["beta"]
    scenarios = reference_scenarios(K, alpha, beta)
    errs = scenarios[-1].check(config)
    if errs:
        raise ConfigError(errs)
    for s, scen in enumerate(scenarios, start=1):
        exp = run_forward_experiment(config, scen, manifest.trials, manifest.seed)
        sim = {"scenario": s, "method": "simulation", "alpha": alpha, "beta": beta,
               "trials": exp.simulated.trials, "discarded": exp.discarded}
        ana = {"scenario": s, "method": "analytic", "alpha": alpha, "beta": beta,
               "trials": 0, "discarded": 0}
        for k in range(K):
            sim[f"r_w_{k + 1}_mbps"] = _mbps(exp.simulated.mean[k])
            sim[f"se_{k + 1}_mbps"] = _mbps(exp.simulated.std_err[k])
            ana[f"r_w_{k + 1}_mbps"] = _mbps(exp.analytic.r_w[k])
            ana[f"se_{k + 1}_mbps"] = 0.0
        rows += [sim, ana]
    return Table(cols, rows, {})


def _per_wd_rows(config, res, extra):
    rows = []
    fair = set(res.partition.fair_set)
    for k in range(config.K):
        row = dict(extra)
        row.update({
            "wd": k + 1,
            "distance_m": config.d[k],
            "region": "fair" if k in fair else "unfair",
            "xi": float(res.vars.xi[k]),
            "sigma2_uf": float(res.report.sigma2_uf[k]),
            "feedback_bits": float(res.report.n_bits[k]),
            "r_w_mbps": _mbps(res.report.r_w[k]),
            "r_f_mbps": _mbps(res.report.r_f[k]),
        })
        rows.append(row)
    return rows


def cmd_optimize(config, manifest: RunManifest) -> Table:
    res = run_algorithm1(config, asymptotic_init=manifest.flags.get("asymptotic_init", False))
    extra = {
        "alpha": res.vars.alpha,
        "beta": res.vars.beta,
        "fairness_radius_m": res.partition.fairness_radius,
        "common_rate_mbps": _mbps(res.partition.common_rate),
        "iterations": res.iterations,
        "converged": res.converged,
    }
    cols = list(extra) + ["wd", "distance_m", "region", "xi", "sigma2_uf",
                          "feedback_bits", "r_w_mbps", "r_f_mbps"]
    if manifest.flags.get("oracle"):
        na, nb = manifest.flags["grid"]
        g = grid_oracle(config, na, nb)
        extra.update({"oracle_alpha": g.alpha, "oracle_beta": g.beta,
                      "oracle_min_rate_mbps": _mbps(g.r_w_min)})
        cols += ["oracle_alpha", "oracle_beta", "oracle_min_rate_mbps"]
    return Table(cols, _per_wd_rows(config, res, extra), {})


def cmd_sweep_m(config, manifest: RunManifest) -> Table:
    m_list = manifest.flags["m_list"]
    bad = [m for m in m_list if m <= config.K]
    if bad:
        raise ConfigError([f"M > K violated for M in {bad}"])
    K = config.K
    cols = ["M", "alpha", "beta", "fairness_radius_m", "radius_scaled",
            "common_rate_mbps", "rate_gap_rel", "n_unfair", "converged"]
    cols += [f"xi_{k + 1}" for k in range(K)] + [f"r_w_{k + 1}_mbps" for k in range(K)]
    rows = []
    for m in m_list:
        cfg = config.replace(M=m)
        res = run_algorithm1(cfg, asymptotic_init=manifest.flags.get("asymptotic_init", False))
        rw = res.report.r_w
        rc = res.partition.common_rate
        row = {
            "M": m,
            "alpha": res.vars.alpha,
            "beta": res.vars.beta,
            "fairness_radius_m": res.partition.fairness_radius,
            "radius_scaled": res.partition.fairness_radius * m ** (1.0 / (2 * cfg.delta)),
            "common_rate_mbps": _mbps(rc),
            "rate_gap_rel": float((rw.max() - rw.min()) / rc),
            "n_unfair": len(res.partition.unfair_set),
            "converged": res.converged,
        }
        for k in range(K):
            row[f"xi_{k + 1}"] = float(res.vars.xi[k])
            row[f"r_w_{k + 1}_mbps"] = _mbps(rw[k])
        rows.append(row)
    return Table(cols, rows, {})


def cmd_surface(config, manifest: RunManifest) -> Table:
    from .optimizer import rates_at

    na, nb = manifest.flags["grid"]
    wds = manifest.flags.get("wds") or list(range(1, config.K + 1))
    if any(not 1 <= k <= config.K for k in wds):
        raise ConfigError([f"WD indices must lie in 1..{config.K}"])
    alphas, betas = default_grid(config, na, nb)
    rows = []
    for a in alphas:
        for be in betas:
            rep = rates_at(config, float(a), float(be))
            for k in wds:
                rate = math.nan if rep is None else _mbps(rep.r_w[k - 1])
                rows.append({"alpha": float(a), "beta": float(be), "wd": k, "r_w_mbps": rate})
    return Table(["alpha", "beta", "wd", "r_w_mbps"], rows, {})


def cmd_asymptotics(config, manifest: RunManifest) -> Table:
    m_list = manifest.flags.get("m_list") or [config.M]
    cols = ["M", "alpha_asym", "alpha_log_law", "beta_asym", "beta_log_law",
            "rf_asym_order", "gamma_bar_K"] + [f"xi_asym_{k + 1}" for k in range(config.K)]
    rows = []
    for m in m_list:
        cfg = config.replace(M=m)
        asym = asymptotics(cfg)
        row = {"M": m, "alpha_asym": asym.alpha_asym,
               "alpha_log_law": math.log(2) / math.log(m),
               "beta_asym": asym.beta_asym,
               "beta_log_law": 1.0 / math.log(asym.gamma_bar_K),
               "rf_asym_order": asym.rf_asym_order,
               "gamma_bar_K": asym.gamma_bar_K}
        for k in range(config.K):
            row[f"xi_asym_{k + 1}"] = float(asym.xi_asym[k])
        rows.append(row)
    return Table(cols, rows, {})


def cmd_oracle(config, manifest: RunManifest) -> Table:
    na, nb = manifest.flags["grid"]
    g = grid_oracle(config, na, nb)
    return Table(["alpha", "beta", "min_rate_mbps", "n_alpha", "n_beta"],
                 [{"alpha": g.alpha, "beta": g.beta, "min_rate_mbps": _mbps(g.r_w_min),
                   "n_alpha": na, "n_beta": nb}], {})


COMMANDS = {
    "forward": cmd_forward,
    "optimize": cmd_optimize,
    "sweep-m": cmd_sweep_m,
    "surface": cmd_surface,
    "asymptotics": cmd_asymptotics,
    "oracle": cmd_oracle,
}


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return v


def render(table: Table, fmt: str) -> str:
    if fmt == "json":
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return None
            if isinstance(v, np.generic):
                return v.item()
            return v
        payload = {"metadata": table.metadata, "columns": table.columns,
                   "rows": [{c: clean(r.get(c)) for c in table.columns} for r in table.rows]}
        return json.dumps(payload, indent=2) + "\n"
    buf = io.StringIO()
    for key in ("command", "version", "seed", "trials"):
        buf.write(f"# {key}: {table.metadata.get(key)}\n")
    buf.write(f"# config: {json.dumps(table.metadata.get('config'))}\n")
    buf.write(f"# flags: {json.dumps(table.metadata.get('flags'))}\n")
    writer = csv.DictWriter(buf, fieldnames=table.columns, lineterminator="\r\n")
    writer.writeheader()
    for r in table.rows:
        writer.writerow({c: _cell(r.get(c)) for c in table.columns})
    return buf.getvalue()


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".wpcn-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def manifest_from_args(args) -> RunManifest:
    skip = {"command", "config", "seed", "trials", "out", "format"}
    flags = {k: v for k, v in vars(args).items() if k not in skip}
    if "grid" in flags:
        flags["grid"] = list(flags["grid"])
    return RunManifest(args.command, args.config, args.seed, args.trials,
                       args.out, args.format, flags)


def run(manifest: RunManifest) -> str:
    """Execute a manifest and return the rendered output text."""
    if manifest.trials < 1:
        raise ConfigError(["trials >= 1 violated"])
    config = load_config(manifest.config_path) if manifest.config_path else default_config()
    table = COMMANDS[manifest.command](config, manifest)
    table.metadata = _metadata(manifest, config)
    return render(table, manifest.format)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    manifest = manifest_from_args(args)
    try:
        text = run(manifest)
    except ConfigError as exc:
        print(f"wpcn: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FeedbackApproximationError, SingularMixingError, ConvergenceError,
            ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"wpcn: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if manifest.output_path:
        _write_atomic(manifest.output_path, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
