"""Command-line interface.

Verbs: ``simulate``, ``estimate-jump``, ``estimate-density``, ``table``,
``rates``. All outputs are CSV with header rows. Exit codes: 0 on success,
2 on configuration errors, 3 on numeric failures.

A flat ``key=value`` config file can seed any verb through ``--config``;
explicit command-line flags override file entries.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .bench import (DEFAULT_PIPELINES, ExperimentConfig, emit_report,
                    run_table_experiment)
from .errors import ConfigError, LevyEstError
from .models import parse_model
from .rates import (CompoundPoissonClass, DensityExp, DensityPol, GlobalExp,
                    GlobalPol, LocalHolder, rate_table, write_rate_csv)
from .sampling import draw_uniform_gaps, write_scheme_csv
from .selection import CutoffMenu, build_block_plan, cv_cutoff_density, cv_cutoff_jump, write_loss_csv
from .spectral import (SpectralGrid, _cumtrapz_from_zero, clamp_phi, compute_statistics,
                       integrate_psi, mirror, write_spectral_csv)
from .estimators import SINC, estimate_f, estimate_g, write_estimate_csv
from .weights import (binned_weights, equal_weights, iterative_weights,
                      oracle_weights, parse_weight_designation)


def _read_config_file(path) -> dict:
    values = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"bad config line {raw.rstrip()!r}")
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
    return values


def _common_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key=value file; flags override it")
    p.add_argument("--model", help="e.g. gamma(3,2), bgamma(2,4), "
                                   "cpois_normal(3), bm(2,1)")
    p.add_argument("--n", help="sample size (table accepts a comma list)")
    p.add_argument("--gap-upper", type=float,
                   help="gaps are uniform on (0, this]")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--grid-umax", type=float,
                   help="default max(sqrt(T), 10)")
    p.add_argument("--grid-du", type=float, default=0.01)
    p.add_argument("--out-dir", default=".")


def _merge_config(args: argparse.Namespace, parser_defaults: dict):
    if not args.config:
        return
    file_vals = _read_config_file(args.config)
    for key, raw in file_vals.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise ConfigError(f"unknown config key {key!r}")
        # a flag given on the command line wins over the file
        if getattr(args, attr) == parser_defaults.get(attr):
            cast = type(parser_defaults.get(attr)) if parser_defaults.get(attr) is not None else str
            if cast is bool:
                setattr(args, attr, raw.lower() in ("1", "true", "yes"))
            elif parser_defaults.get(attr) is None:
                setattr(args, attr, raw)
            else:
                setattr(args, attr, cast(raw))


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="levyest", description=__doc__)
    sub = top.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("simulate", help="draw a scheme and one set of increments")
    _common_flags(p)

    for verb in ("estimate-jump", "estimate-density"):
        p = sub.add_parser(verb, help=f"single-path {verb.split('-')[1]} estimate "
                                      "with cross-validated cutoff")
        _common_flags(p)
        p.add_argument("--weights", default="iterative",
                       help="oracle | equal | binned:K | iterative")
        p.add_argument("--x-min", type=float, default=-10.0)
        p.add_argument("--x-max", type=float, default=10.0)
        p.add_argument("--x-step", type=float, default=0.01)
        p.add_argument("--dump-spectra", action="store_true",
                       help="also write the spectral arrays as u,re,im CSV")

    p = sub.add_parser("table", help="Monte Carlo risk table for one model")
    _common_flags(p)
    p.add_argument("--target", choices=["jump", "density"], default="jump")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--pipelines", default=",".join(DEFAULT_PIPELINES),
                   help="comma list from oracle,adaptive,equal,binned:K")
    p.add_argument("--gap-file", help="fixed scheme CSV instead of uniform draws")
    p.add_argument("--delta-max", type=float,
                   help="declared gap bound for --gap-file schemes")
    p.add_argument("--progress", action="store_true")

    p = sub.add_parser("rates", help="tabulate implicit optimal bandwidths")
    _common_flags(p)
    p.add_argument("--family", required=True,
                   choices=["gpol", "gexp", "gcp", "glocal", "fpol", "fexp"])
    p.add_argument("--params", default="",
                   help="comma list, e.g. beta=1 or alpha=0.4,c_phi=1")
    return top


def _parse_params(text: str) -> dict:
    out = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        key, _, val = item.partition("=")
        if not val:
            raise ConfigError(f"bad parameter {item!r}")
        out[key.strip()] = float(val)
    return out


_FAMILIES = {
    "gpol": (GlobalPol, {"beta"}),
    "gexp": (GlobalExp, {"alpha", "c_phi"}),
    "gcp": (CompoundPoissonClass, {"a", "rho", "c_g", "c_phi"}),
    "glocal": (LocalHolder, {"a", "beta"}),
    "fpol": (DensityPol, {"beta", "k"}),
    "fexp": (DensityExp, {"alpha", "c", "k"}),
}


def _single_scheme(args):
    if args.model is None or args.n is None or args.gap_upper is None:
        raise ConfigError("--model, --n and --gap-upper are required")
    n = int(args.n)
    model = parse_model(args.model)
    ss = np.random.SeedSequence([int(args.seed), 0])
    gap_rng, inc_rng = ss.spawn(2)
    scheme = draw_uniform_gaps(n, args.gap_upper, gap_rng)
    obs = model.sample_increments(scheme, inc_rng)
    return model, scheme, obs


def _cmd_simulate(args) -> int:
    import csv

    model, scheme, obs = _single_scheme(args)
    os.makedirs(args.out_dir, exist_ok=True)
    write_scheme_csv(scheme, os.path.join(args.out_dir, "scheme.csv"))
    with open(os.path.join(args.out_dir, "observations.csv"), "w",
              newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "t", "delta", "z"])
        times = scheme.times
        for j in range(1, scheme.n + 1):
            w.writerow([j, repr(float(times[j])),
                        repr(float(scheme.deltas[j - 1])),
                        repr(float(obs.increments[j - 1]))])
    print(f"wrote scheme.csv and observations.csv to {args.out_dir}")
    return 0


def _weights_for(args, model, obs, grid):
    kind, n_bins = parse_weight_designation(args.weights)
    if kind == "oracle":
        return oracle_weights(model, obs.scheme, grid)
    if kind == "equal":
        return equal_weights(obs.n, grid)
    if kind == "binned":
        return binned_weights(obs, n_bins, grid)
    return iterative_weights(obs, grid, kappa=args.kappa)


def _cmd_estimate(args, target: str) -> int:
    model, scheme, obs = _single_scheme(args)
    horizon = scheme.horizon
    u_max = args.grid_umax or max(np.sqrt(horizon), 10.0)
    grid = SpectralGrid.from_spacing(u_max, args.grid_du)
    ws = _weights_for(args, model, obs, grid)
    stats = compute_statistics(obs, ws, grid, kappa=args.kappa)
    menu = CutoffMenu.from_horizon(horizon)
    if len(menu) == 0:
        raise ConfigError("horizon below 1 leaves no admissible cutoff")
    plan = build_block_plan(obs.n)
    if target == "jump":
        cv = cv_cutoff_jump(obs, ws, args.kappa, grid, menu, plan)
        est = estimate_g(stats, SINC, 1.0 / cv.m_hat)
        spectra = [("psi_prime_hat.csv", stats.psi_prime_hat)]
    else:
        cv = cv_cutoff_density(obs, ws, args.kappa, grid, menu, plan)
        charfn = clamp_phi(integrate_psi(stats.psi_prime_hat, grid), grid)
        est = estimate_f(charfn, SINC, 1.0 / cv.m_hat)
        spectra = [("psi_prime_hat.csv", stats.psi_prime_hat),
                   ("phi_hat.csv", charfn.phi_hat)]
    os.makedirs(args.out_dir, exist_ok=True)
    xs = np.arange(args.x_min, args.x_max + 0.5 * args.x_step, args.x_step)
    write_estimate_csv(est, xs, os.path.join(args.out_dir, "estimate.csv"))
    write_loss_csv(cv, os.path.join(args.out_dir, "cv_loss.csv"))
    if args.dump_spectra:
        for name, arr in spectra:
            write_spectral_csv(grid, arr, os.path.join(args.out_dir, name))
    print(f"selected cutoff m={cv.m_hat}; wrote estimate.csv and cv_loss.csv "
          f"to {args.out_dir}")
    return 0


def _cmd_table(args) -> int:
    if args.model is None or args.n is None:
        raise ConfigError("--model and --n are required")
    if args.gap_file is None and args.gap_upper is None:
        raise ConfigError("one of --gap-upper / --gap-file is required")
    reports = []
    for n_text in str(args.n).split(","):
        config = ExperimentConfig(
            model=args.model, target=args.target, n=int(n_text),
            gap_upper=args.gap_upper, gap_file=args.gap_file,
            reps=args.reps, seed=args.seed, kappa=args.kappa,
            grid_umax=args.grid_umax, grid_du=args.grid_du,
            pipelines=tuple(args.pipelines.split(",")),
            delta_max=args.delta_max,
        )
        progress = None
        if args.progress:
            def progress(done, total, _n=n_text):
                print(f"n={_n}: replication {done}/{total}", file=sys.stderr)
        reports.append(run_table_experiment(config, progress=progress))
    paths = emit_report(reports, args.out_dir)
    for rep in reports:
        cells = []
        for p in rep.config.pipelines:
            mean, se = rep.aggregate(p)
            cells.append(f"{p}: {mean:.5g} (se {se:.2g})")
        print(f"{rep.config.model} target={rep.config.target} "
              f"n={rep.config.n}: " + "; ".join(cells))
    print(f"wrote {paths['summary.csv']}")
    return 0


def _cmd_rates(args) -> int:
    cls_type, allowed = _FAMILIES[args.family]
    params = _parse_params(args.params)
    unknown = set(params) - allowed
    if unknown:
        raise ConfigError(f"family {args.family} does not take {sorted(unknown)}")
    if "k" in params:
        params["k"] = int(params["k"])
    try:
        cls = cls_type(**params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if args.n is None or args.gap_upper is None:
        raise ConfigError("--n (comma list allowed) and --gap-upper are required")
    schemes = []
    for i, n_text in enumerate(str(args.n).split(",")):
        schemes.append(draw_uniform_gaps(int(n_text), args.gap_upper,
                                         np.random.SeedSequence([args.seed, i])))
    rows = rate_table(cls, schemes)
    os.makedirs(args.out_dir, exist_ok=True)
    path = os.path.join(args.out_dir, "rates.csv")
    write_rate_csv(rows, path)
    for row in rows:
        print(f"T={row['T']:.6g} delta_max={row['delta_max']:g} "
              f"h_star={row['h_star']:.6g} rate_proxy={row['rate_proxy']:.6g}")
    print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    defaults = {a.dest: a.default for a in parser._subparsers._group_actions[0]
                .choices[args.verb]._actions}
    try:
        _merge_config(args, defaults)
        if args.verb == "simulate":
            return _cmd_simulate(args)
        if args.verb == "estimate-jump":
            return _cmd_estimate(args, "jump")
        if args.verb == "estimate-density":
            return _cmd_estimate(args, "density")
        if args.verb == "table":
            return _cmd_table(args)
        if args.verb == "rates":
            return _cmd_rates(args)
        raise ConfigError(f"unknown verb {args.verb!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (LevyEstError, FloatingPointError, ValueError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
