#!/usr/bin/env python3

# Copyright 2024 The perc_ldp Developers & Contributors

# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at https://mozilla.org/MPL/2.0/.

"""Command line front end of perc_ldp.

Every sub-command writes a CSV table (grids and series) or a JSON report
(single results) to ``--output`` or stdout. Exit codes: 0 on success, 1 when
a numerical guard trips, 2 on usage or parameter range errors.
"""

import argparse
import dataclasses
import json
import logging
import math
import sys

import numpy as np
import pandas as pd

from perc_ldp.binomial_chain import (
    ChainParams,
    chain_final_sizes,
    fraction_at_least,
    simulate_chain,
    summarize_final_sizes,
    survival_mc,
)
from perc_ldp.cli.utils.arguments import (
    parse_endpoint,
    parse_grid,
    parse_int_list,
    parse_int_number,
    parse_number,
)
from perc_ldp.cli.utils.output import write_frame, write_text
from perc_ldp.config import ExperimentConfig, seed_from_env
from perc_ldp.exact_dp import ExponentPoint, empirical_exponent, exact_distribution
from perc_ldp.exceptions import PercLdpError, StateSpaceTooLargeError
from perc_ldp.extremal_bounds import bound_sanity, corollary_bound, first_moment
from perc_ldp.graph_bootstrap import final_size_samples
from perc_ldp.info import __version__
from perc_ldp.model_analytics import (
    ModelParams,
    clt_moments,
    optimal_trajectory,
    phi,
    rate_xi,
)
from perc_ldp.rng import resolve_seed
from perc_ldp.variational import (
    TrajectoryProblem,
    maximize_trajectory,
    sigma_total,
    snapped_resolution,
    verify_diagonal_claims,
)

logger = logging.getLogger("perc_ldp")

COMMON_DESTS = {
    "command",
    "func",
    "seed",
    "threads",
    "output",
    "config",
    "save_config",
    "verbose",
    "progress",
}
STOCHASTIC_COMMANDS = {"simulate", "chain"}


def _require(parser: argparse.ArgumentParser, args: argparse.Namespace, *names: str) -> None:
    missing = [f"--{name.replace('_', '-')}" for name in names if getattr(args, name) is None]
    if missing:
        parser.error(f"the following arguments are required: {', '.join(missing)}")


def _values(single, grid) -> list:
    return list(grid) if grid is not None else [single]


def cmd_rate(args: argparse.Namespace) -> int:
    """Tabulate ``xi(alpha, beta)``; points with ``beta <= phi_alpha`` are flagged."""
    rows = []
    for alpha in _values(args.alpha, args.alpha_grid):
        phi_alpha = phi(alpha, args.r)
        for beta in _values(args.beta, args.beta_grid):
            if beta > phi_alpha:
                point = rate_xi(alpha, beta, args.r)
                rows.append((alpha, beta, args.r, phi_alpha, point.xi, point.branch.value, True))
            else:
                rows.append((alpha, beta, args.r, phi_alpha, math.nan, "", False))
    frame = pd.DataFrame(rows, columns=["alpha", "beta", "r", "phi", "xi", "branch", "valid"])
    write_frame(frame, args.output)
    return 0


def cmd_trajectory(args: argparse.Namespace) -> int:
    """Closed-form ``f*`` next to the lattice maximizer, with their gap."""
    problem = TrajectoryProblem(
        alpha=args.alpha,
        beta=args.beta,
        r=args.r,
        m=args.m,
        cap=args.cap,
        endpoint=args.endpoint,
    )
    closed = optimal_trajectory(args.alpha, args.beta, args.r, args.m)
    found = maximize_trajectory(problem, resolution=args.resolution)
    sigma = sigma_total(found, args.r)
    gap = np.abs(found.values - closed.values)
    logger.info(
        "Sup-norm gap %.3g at resolution %.3g, J = %.10g",
        gap.max(),
        snapped_resolution(problem, args.resolution),
        sigma.total,
    )
    frame = pd.DataFrame(
        {
            "x": found.grid,
            "f_star": closed.values,
            "f_opt": found.values,
            "gap": gap,
            "sigma": np.append(sigma.sigma, np.nan),
        }
    )
    write_frame(frame, args.output)
    return 0


def cmd_exponent(args: argparse.Namespace) -> int:
    """Finite-n exponents from the exact DP along an ``n`` sequence."""
    status = 0
    try:
        points = empirical_exponent(
            args.alpha,
            args.beta,
            args.r,
            args.n_sequence,
            kappa=args.kappa,
            cap=args.cap,
            progress=args.progress,
        )
    except StateSpaceTooLargeError as e:
        print(f"WARNING: {e}; writing the {len(e.partial)} points computed so far", file=sys.stderr)
        points = e.partial
        status = 1
    columns = [f.name for f in dataclasses.fields(ExponentPoint)]
    frame = pd.DataFrame([dataclasses.asdict(p) for p in points], columns=columns)
    write_frame(frame, args.output)
    return status


def cmd_simulate(args: argparse.Namespace) -> int:
    """Final sizes of bootstrap percolation on sampled graphs, one row per run."""
    model = ModelParams(n=args.n, p=args.p, r=args.r)
    sizes = final_size_samples(
        model,
        args.a,
        args.runs,
        seed=args.seed,
        threads=args.threads,
        progress=args.progress,
        random_initial=args.random_initial,
    )
    write_frame(pd.DataFrame({"final_size": sizes}), args.output)
    return 0


def cmd_chain(args: argparse.Namespace) -> int:
    """Binomial chain Monte Carlo: a single trace or a batch report."""
    model = ModelParams(n=args.n, p=args.p, r=args.r)
    if args.a is not None:
        params = ChainParams(model=model, a=args.a)
    elif args.alpha is not None:
        params = ChainParams.from_alpha(model, args.alpha)
    else:
        raise ValueError("one of --a or --alpha is required")
    threshold = None
    if args.fraction is not None:
        threshold = math.ceil(args.fraction * model.n)
    horizon = args.horizon
    if horizon is None and threshold is not None:
        horizon = min(model.n, max(params.horizon, threshold - 1))
    if horizon is not None:
        params = params.with_horizon(horizon)

    if args.trace:
        trace = simulate_chain(params, args.seed)
        write_frame(trace.to_frame(), args.output)
        return 0

    report = {"params": params.to_dict(), "seed": args.seed, "runs": args.runs}
    if args.t_target is not None:
        survival = survival_mc(
            params, args.t_target, args.runs, args.seed, args.threads, args.progress
        )
        report["survival"] = {"t": args.t_target, "p_hat": survival.p_hat, "stderr": survival.stderr}
    else:
        sizes = chain_final_sizes(params, args.runs, args.seed, args.threads, args.progress)
        moments = summarize_final_sizes(sizes)
        report["moments"] = dataclasses.asdict(moments)
        if args.alpha is not None and args.alpha < 1:
            mu, sigma2 = clt_moments(args.alpha, model)
            report["clt"] = {"mean": mu, "variance": sigma2}
        if threshold is not None:
            share = fraction_at_least(sizes, threshold, params.horizon)
            report["fraction_at_least"] = {
                "threshold": threshold,
                "p_hat": share.p_hat,
                "stderr": share.stderr,
            }
    write_text(json.dumps(report, indent=2), args.output)
    return 0


def cmd_bound(args: argparse.Namespace) -> int:
    """Contagious set lower bound, optionally with its finite-n first moment."""
    if args.sanity is not None:
        report = bound_sanity(
            args.r,
            args.n,
            args.vartheta,
            args.delta,
            args.sanity,
            args.seed,
            size_limit=args.size_limit,
            progress=args.progress,
        )
        if report.below_reference:
            logger.warning(
                "%d of %d graphs have m(G, r) below %d",
                report.below_reference,
                len(report.sizes),
                report.reference,
            )
        write_text(report.to_json(), args.output)
    elif args.first_moment:
        write_text(first_moment(args.r, args.n, args.vartheta, args.delta).to_json(), args.output)
    else:
        write_text(corollary_bound(args.r, args.n, args.vartheta, args.delta).to_json(), args.output)
    return 0


def cmd_dp(args: argparse.Namespace) -> int:
    """Exact law of the final size from the dynamic program."""
    model = ModelParams(n=args.n, p=args.p, r=args.r)
    params = ChainParams(model=model, a=args.a, horizon=args.horizon)
    table = exact_distribution(params, cap=args.cap, progress=args.progress)
    if args.json:
        write_text(table.to_json(), args.output)
    else:
        write_frame(table.to_frame(), args.output)
    return 0


def cmd_claims(args: argparse.Namespace) -> int:
    """Both sides of the diagonal inequalities over a parameter grid."""
    report = verify_diagonal_claims(args.r, args.alpha_grid, args.beta_grid, points=args.points)
    if not report.all_hold:
        logger.warning("Some strict inequalities fail, minimum margin %.3g", report.min_margin)
    write_text(report.to_json(), args.output)
    return 0


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--seed",
        type=int,
        default=None,
        help="Master seed of the random streams (default: $PERC_LDP_SEED, else fresh entropy).",
    )
    common.add_argument(
        "--threads",
        type=int,
        default=1,
        help="Number of worker processes. Results do not depend on it.",
    )
    common.add_argument(
        "-o",
        "--output",
        type=str,
        default=None,
        help="Output file (default: stdout).",
    )
    common.add_argument(
        "--config",
        type=str,
        default=None,
        help="JSON experiment configuration providing default parameter values.",
    )
    common.add_argument(
        "--save-config",
        type=str,
        default=None,
        help="Write the effective experiment configuration to this JSON file.",
    )
    common.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="Log progress messages (-v for INFO, -vv for DEBUG).",
    )
    common.add_argument(
        "--progress",
        action="store_true",
        help="Show progress bars on stderr.",
    )
    return common


def _add_model_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n", type=parse_int_number, default=None, help="Number of vertices.")
    parser.add_argument("--p", type=parse_number, default=None, help="Edge probability.")
    parser.add_argument("--r", type=int, default=2, help="Activation threshold (default: 2).")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="perc_ldp",
        description="Large deviations of r-neighbour bootstrap percolation on G(n, p).",
    )
    parser.add_argument("--version", action="version", version=f"{__version__}")
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True
    common = _common_parser()
    subs = {}

    sub = subparsers.add_parser(
        "rate", parents=[common], help="Evaluate the rate function xi(alpha, beta)."
    )
    sub.add_argument("--r", type=int, default=2, help="Activation threshold (default: 2).")
    sub.add_argument("--alpha", type=parse_number, default=None, help="Initial size in units of a_c.")
    sub.add_argument("--alpha-grid", type=parse_grid, default=None, help="Grid start:stop:step or a,b,c.")
    sub.add_argument("--beta", type=parse_number, default=None, help="Final size in units of t_c.")
    sub.add_argument("--beta-grid", type=parse_grid, default=None, help="Grid start:stop:step or a,b,c.")
    sub.set_defaults(func=cmd_rate)
    subs["rate"] = sub

    sub = subparsers.add_parser(
        "trajectory", parents=[common], help="Compare f* with the lattice maximizer."
    )
    sub.add_argument("--r", type=int, default=2, help="Activation threshold (default: 2).")
    sub.add_argument("--alpha", type=parse_number, default=None, help="Initial size in units of a_c.")
    sub.add_argument("--beta", type=parse_number, default=None, help="Final size in units of t_c.")
    sub.add_argument("--m", type=parse_int_number, default=256, help="Number of grid cells (default: 256).")
    sub.add_argument(
        "--resolution",
        type=parse_number,
        default=None,
        help="Requested value lattice step (default: 1 / 2000).",
    )
    sub.add_argument("--cap", type=parse_number, default=None, help="Value cap C (default: 3).")
    sub.add_argument(
        "--endpoint",
        type=parse_endpoint,
        default=None,
        help="'free' (default) or 'fixed:<value>'.",
    )
    sub.set_defaults(func=cmd_trajectory)
    subs["trajectory"] = sub

    sub = subparsers.add_parser(
        "exponent", parents=[common], help="Finite-n exponents log P(a, t) / t_c from the exact DP."
    )
    sub.add_argument("--r", type=int, default=2, help="Activation threshold (default: 2).")
    sub.add_argument("--alpha", type=parse_number, default=None, help="Initial size in units of a_c.")
    sub.add_argument("--beta", type=parse_number, default=None, help="Final size in units of t_c.")
    sub.add_argument(
        "--n-sequence",
        type=parse_int_list,
        default=[10**4, 10**5, 10**6],
        help="Comma separated increasing n values (default: 1e4,1e5,1e6).",
    )
    sub.add_argument(
        "--kappa",
        type=parse_number,
        default=None,
        help="Exponent of np = n^kappa (default: gamma_r / 2).",
    )
    sub.add_argument("--cap", type=parse_number, default=None, help="DP cap multiplier (default: 3).")
    sub.set_defaults(func=cmd_exponent)
    subs["exponent"] = sub

    sub = subparsers.add_parser(
        "simulate", parents=[common], help="Percolate sampled G(n, p) graphs."
    )
    _add_model_arguments(sub)
    sub.add_argument("--a", type=parse_int_number, default=None, help="Initial set size.")
    sub.add_argument("--runs", type=parse_int_number, default=1000, help="Number of graphs (default: 1000).")
    sub.add_argument(
        "--random-initial",
        action="store_true",
        help="Draw the initial set uniformly instead of using {0, ..., a-1}.",
    )
    sub.set_defaults(func=cmd_simulate)
    subs["simulate"] = sub

    sub = subparsers.add_parser("chain", parents=[common], help="Binomial chain Monte Carlo.")
    _add_model_arguments(sub)
    sub.add_argument("--a", type=parse_int_number, default=None, help="Initial set size.")
    sub.add_argument(
        "--alpha", type=parse_number, default=None, help="Initial size ceil(alpha a_c), if --a is absent."
    )
    sub.add_argument("--runs", type=parse_int_number, default=1000, help="Number of runs (default: 1000).")
    sub.add_argument("--horizon", type=parse_int_number, default=None, help="Step horizon.")
    sub.add_argument("--t-target", type=parse_int_number, default=None, help="Estimate P(|A*| >= t).")
    sub.add_argument(
        "--fraction",
        type=parse_number,
        default=None,
        help="Report the share of runs activating at least this fraction of n.",
    )
    sub.add_argument("--trace", action="store_true", help="Write a single trace (t, S_t).")
    sub.set_defaults(func=cmd_chain)
    subs["chain"] = sub

    sub = subparsers.add_parser("bound", parents=[common], help="Contagious set lower bound.")
    sub.add_argument("--r", type=int, default=2, help="Activation threshold (default: 2).")
    sub.add_argument("--n", type=parse_int_number, default=None, help="Number of vertices.")
    sub.add_argument("--vartheta", type=parse_number, default=None, help="Scale parameter.")
    sub.add_argument("--delta", type=parse_number, default=0.0, help="Slack in [0, 1) (default: 0).")
    sub.add_argument(
        "--first-moment",
        action="store_true",
        help="Also evaluate the finite-n first moment with the exact DP.",
    )
    sub.add_argument(
        "--sanity",
        type=parse_int_number,
        default=None,
        metavar="SAMPLES",
        help="Brute-force m(G, r) on this many sampled G(n, p) at the bound's p.",
    )
    sub.add_argument(
        "--size-limit",
        type=parse_int_number,
        default=None,
        help="Largest subset size searched with --sanity (default: n).",
    )
    sub.set_defaults(func=cmd_bound)
    subs["bound"] = sub

    sub = subparsers.add_parser("dp", parents=[common], help="Exact final size distribution.")
    _add_model_arguments(sub)
    sub.add_argument("--a", type=parse_int_number, default=None, help="Initial set size.")
    sub.add_argument("--horizon", type=parse_int_number, default=None, help="Step horizon.")
    sub.add_argument("--cap", type=parse_number, default=None, help="Cap multiplier (default: 3).")
    sub.add_argument("--json", action="store_true", help="Write the full JSON record.")
    sub.set_defaults(func=cmd_dp)
    subs["dp"] = sub

    sub = subparsers.add_parser(
        "claims", parents=[common], help="Check the diagonal inequalities over a grid."
    )
    sub.add_argument("--r", type=int, default=2, help="Activation threshold (default: 2).")
    sub.add_argument(
        "--alpha-grid", type=parse_grid, default=parse_grid("0.1:0.9:0.2"), help="Alpha grid."
    )
    sub.add_argument(
        "--beta-grid", type=parse_grid, default=parse_grid("0.2:1.0:0.2"), help="Beta grid."
    )
    sub.add_argument("--points", type=int, default=4, help="Interior points per sub-grid.")
    sub.set_defaults(func=cmd_claims)
    subs["claims"] = sub

    return parser, subs


REQUIRED = {
    "rate": (),
    "trajectory": ("alpha", "beta"),
    "exponent": ("alpha", "beta"),
    "simulate": ("n", "p", "a"),
    "chain": ("n", "p"),
    "bound": ("n", "vartheta"),
    "dp": ("n", "p", "a"),
    "claims": (),
}


def get_parser() -> argparse.ArgumentParser:
    """Get the parser of the `perc_ldp` script."""
    parser, _ = _build_parser()
    return parser


def _configure_logging(verbose: int) -> None:
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s |%(levelname)s: %(message)s")


def main(argv=None) -> int:
    """Main function of the `perc_ldp` script."""
    parser, subs = _build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)

    if args.config is not None:
        try:
            config = ExperimentConfig.load(args.config)
        except (OSError, ValueError) as e:
            parser.error(f"cannot read configuration {args.config}: {e}")
        if config.command != args.command:
            parser.error(f"configuration is for '{config.command}', not '{args.command}'")
        subs[args.command].set_defaults(**config.params)
        cli_seed = args.seed
        args = parser.parse_args(argv)
        args.seed = cli_seed if cli_seed is not None else config.seed

    _require(subs[args.command], args, *REQUIRED[args.command])
    if args.command == "rate":
        if args.alpha is None and args.alpha_grid is None:
            subs["rate"].error("one of --alpha or --alpha-grid is required")
        if args.beta is None and args.beta_grid is None:
            subs["rate"].error("one of --beta or --beta-grid is required")

    if args.command in STOCHASTIC_COMMANDS or getattr(args, "sanity", None) is not None:
        try:
            args.seed = resolve_seed(args.seed, seed_from_env())
        except ValueError as e:
            parser.error(str(e))

    if args.save_config is not None:
        params = {k: v for k, v in vars(args).items() if k not in COMMON_DESTS}
        ExperimentConfig(command=args.command, params=params, seed=args.seed).save(
            args.save_config
        )

    try:
        return args.func(args)
    except PercLdpError as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        subs[args.command].print_usage(sys.stderr)
        print(f"ERROR: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
