"""Command-line entry point: ``branchfreq <subcommand> ...``.

Every output starts with ``#``-prefixed manifest lines (subcommand, argument
vector, seed, generator, version, duration).  Exit status is 0 on success, 1
on a domain error and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import io
import shlex
import sys
import time
import warnings
from typing import Sequence

import numpy as np

from . import __version__
from .asymptotics import delta_distribution
from .errors import BranchFreqError
from .formatting import csv_line, fmt_num, matrix_block, parse_int_range, parse_real_list
from .inference import format_observations, get_family, mle_fit, read_observations, synthesize_observations
from .moments import iter_moment_tables, moment_table
from .process_model import dump_spec, load_spec
from .simulator import (
    GENERATOR,
    fractions,
    monte_carlo,
    replicate_rng,
    replicate_snapshot,
    simulate_continuous_clone,
)
from .simulator.ensemble import SEED_RULE


class UsageError(Exception):
    pass


def _labels(prefix: str, d: int) -> list[str]:
    return [f"{prefix}{j + 1}" for j in range(d)]


def cmd_validate(args, out):
    spec = load_spec(args.spec)
    out.write(dump_spec(spec))


def cmd_moments(args, out):
    spec = load_spec(args.spec)
    times = parse_int_range(args.time)
    d = spec.d
    pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]
    header = (
        ["t"]
        + [f"m1{j + 1}" for j in range(d)]
        + _labels("sigma2_", d)
        + [f"C_{i + 1}{j + 1}" for i, j in pairs]
        + _labels("p_", d)
        + ["M_tot", "q"]
    )
    out.write(",".join(header) + "\n")
    wanted = set(times)
    tables = {tb.t: tb for tb in iter_moment_tables(spec, max(times), args.ancestors) if tb.t in wanted}
    for t in times:
        tb = tables[t]
        row = [t] + tb.mean[0].tolist() + tb.sigma2.tolist() + [tb.cov[i, j] for i, j in pairs]
        row += tb.p.tolist() + [tb.M_tot, tb.q]
        out.write(csv_line(row) + "\n")


def cmd_asymptotics(args, out):
    spec = load_spec(args.spec)
    tb = moment_table(spec, args.time, args.ancestors)
    k = None if args.k is None else args.k
    g = delta_distribution(tb, args.ancestors, k)
    labels = [f"delta_{i + 1}" for i in g.index]
    out.write(f"# mean of frequencies at t={tb.t}, N={g.N}, M_tot={fmt_num(tb.M_tot)}\n")
    out.write(",".join(labels) + "\n" + csv_line(g.mean.tolist()) + "\n")
    out.write(matrix_block("limit covariance D of W", g.cov_limit, labels))
    out.write(matrix_block("covariance of frequencies, D/(N*M_tot^2)", g.cov_delta, labels))


def cmd_simulate(args, out):
    spec = load_spec(args.spec)
    d = spec.d
    header = ["replicate", "t"] + _labels("z_", d) + ["extinct"] + _labels("delta_", d) + _labels("w_", d)
    out.write(",".join(header) + "\n")
    if args.continuous:
        t_real = parse_real_list(args.time)
        for r in range(args.replicates):
            rng = replicate_rng(args.seed, r)
            for t in t_real:
                counts = np.zeros(d, dtype=np.int64)
                for _ in range(args.ancestors):
                    counts += simulate_continuous_clone(spec, t, rng)
                total = int(counts.sum())
                frac = counts / total if total else None
                row = [r + 1, t] + counts.tolist() + [int(total == 0)]
                row += frac.tolist() if frac is not None else [""] * d
                row += [""] * d
                out.write(csv_line(row) + "\n")
        return
    t = int(args.time)
    tb = moment_table(spec, t, args.ancestors)
    for r in range(args.replicates):
        snap = replicate_snapshot(spec, args.ancestors, t, args.seed, r)
        frac = fractions(snap)
        row = [r + 1, t] + snap.counts.tolist() + [int(snap.extinct)]
        if frac is None:
            row += [""] * (2 * d)
        else:
            w = tb.M_tot * np.sqrt(args.ancestors) * (frac - tb.p)
            row += frac.tolist() + w.tolist()
        out.write(csv_line(row) + "\n")


def cmd_mc(args, out):
    spec = load_spec(args.spec)
    t = int(args.time)
    summ = monte_carlo(spec, args.ancestors, t, args.replicates, args.seed, workers=args.workers)
    tb = moment_table(spec, t, args.ancestors)
    d = spec.d
    out.write(f"replicates={summ.replicates}\n")
    out.write(f"extinct_count={summ.extinct_count}\n")
    out.write(f"extinction_frequency={fmt_num(summ.extinction_frequency)}\n")
    out.write(f"q_tN_theory={fmt_num(tb.q_N)}\n")
    out.write(f"seed_rule={SEED_RULE}\n")
    out.write("mean_fractions=" + csv_line(summ.mean_fractions.tolist()) + "\n")
    out.write("p_theory=" + csv_line(tb.p.tolist()) + "\n")
    out.write("mean_W=" + csv_line(summ.mean_W.tolist()) + "\n")
    labels = _labels("w_", d)
    out.write(matrix_block("empirical covariance of W", summ.emp_cov_W, labels))
    D = delta_distribution(tb, args.ancestors, d).cov_limit
    out.write(matrix_block("limit covariance D", D, labels))


def cmd_synth(args, out):
    spec = load_spec(args.spec)
    if args.design:
        design = []
        for item in args.design.split(","):
            t, n = item.split(":")
            design.append((float(t) if spec.time_mode == "continuous" else int(t), int(n)))
    else:
        if args.ancestors is None or args.time is None:
            raise UsageError("synth needs --design or both --time and --ancestors")
        times = parse_real_list(args.time) if spec.time_mode == "continuous" else parse_int_range(args.time)
        design = [(t, args.ancestors) for t in times]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        obs = synthesize_observations(spec, design, args.seed)
    for w in caught:
        out.write(f"# warning: {w.message}\n")
    out.write(format_observations(obs, counts=args.counts, fmt=fmt_num))


def cmd_fit(args, out):
    obs = read_observations(args.obs, counts=args.counts)
    supports = None
    if args.family == "general_bgw_d2":
        if not args.supports:
            raise UsageError("--supports is required for general_bgw_d2, e.g. '0 0;2 0;0 1|0 0'")
        supports = [[tuple(int(v) for v in atom.split()) for atom in part.split(";")] for part in args.supports.split("|")]
    family = get_family(args.family, supports)
    init = parse_real_list(args.init)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = mle_fit(obs, family, init, max_iter=args.max_iter, trace=args.trace or bool(args.trace_out))
    out.write(f"family={res.family}\n")
    for name, val in zip(res.param_names, res.params.tolist()):
        out.write(f"{name}={fmt_num(val)}\n")
    out.write(f"loglik={fmt_num(res.loglik)}\n")
    out.write(f"converged={int(res.converged)}\n")
    out.write(f"iterations={res.iterations}\n")
    out.write(f"evaluations={res.evaluations}\n")
    out.write(f"grad_norm={fmt_num(res.grad_norm)}\n")
    out.write(f"observations={len(obs)}\n")
    for w in caught:
        out.write(f"warning={w.message}\n")
    if res.param_trace is not None:
        lines = [",".join(["iteration"] + list(res.param_names))]
        lines += [csv_line([i] + p.tolist()) for i, p in enumerate(res.param_trace)]
        text = "\n".join(lines) + "\n"
        if args.trace_out:
            with open(args.trace_out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            out.write("# iteration trace\n" + text)


def cmd_selftest(args, out):
    from .selftest import run

    ok = run(out=lambda line: out.write(line + "\n"))
    if not ok:
        raise BranchFreqError("selftest failed")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    common.add_argument("--out", default=None, help="output file (default: stdout)")

    spec_p = argparse.ArgumentParser(add_help=False)
    spec_p.add_argument("--spec", required=True, help="JSON process specification")

    parser = argparse.ArgumentParser(prog="branchfreq", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"branchfreq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", parents=[common, spec_p], help="validate and normalize a spec")

    p = sub.add_parser("moments", parents=[common, spec_p], help="exact moments per generation")
    p.add_argument("--time", required=True, help="generations, a..b or comma list")
    p.add_argument("--ancestors", type=int, default=1)

    p = sub.add_parser("asymptotics", parents=[common, spec_p], help="limiting Gaussian of frequencies")
    p.add_argument("--time", type=int, required=True)
    p.add_argument("--ancestors", type=int, required=True)
    p.add_argument("--k", type=int, default=None, help="number of leading types (default d-1)")

    p = sub.add_parser("simulate", parents=[common, spec_p], help="per-replicate simulated populations")
    p.add_argument("--ancestors", type=int, required=True)
    p.add_argument("--time", required=True, help="generation, or comma list of clock times with --continuous")
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--continuous", action="store_true")

    p = sub.add_parser("mc", parents=[common, spec_p], help="Monte Carlo ensemble summary")
    p.add_argument("--ancestors", type=int, required=True)
    p.add_argument("--time", required=True)
    p.add_argument("--replicates", type=int, required=True)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("synth", parents=[common, spec_p], help="synthetic serial-sacrifice observations")
    p.add_argument("--design", default=None, help="comma list of t:N pairs")
    p.add_argument("--time", default=None, help="a..b with --ancestors for a uniform design")
    p.add_argument("--ancestors", type=int, default=None)
    p.add_argument("--counts", action="store_true", help="emit z_ counts instead of fractions")

    p = sub.add_parser("fit", parents=[common], help="asymptotic maximum-likelihood fit")
    p.add_argument("--obs", required=True)
    p.add_argument("--family", choices=["example2", "general_bgw_d2"], default="example2")
    p.add_argument("--init", required=True, help="comma list of starting parameters")
    p.add_argument("--supports", default=None, help="general_bgw_d2 supports: 'n n;n n|n n'")
    p.add_argument("--counts", action="store_true", help="observation file holds z_ counts")
    p.add_argument("--max-iter", type=int, default=2000)
    p.add_argument("--trace", action="store_true")
    p.add_argument("--trace-out", default=None)

    sub.add_parser("selftest", parents=[common], help="run the internal consistency checks")
    return parser


COMMANDS = {
    "validate": cmd_validate,
    "moments": cmd_moments,
    "asymptotics": cmd_asymptotics,
    "simulate": cmd_simulate,
    "mc": cmd_mc,
    "synth": cmd_synth,
    "fit": cmd_fit,
    "selftest": cmd_selftest,
}


def manifest(args, argv: Sequence[str], duration: float) -> str:
    lines = [
        f"# branchfreq version={__version__}",
        f"# subcommand={args.command}",
        f"# argv={shlex.join(argv)}",
        f"# seed={args.seed}, generator={GENERATOR}",
        f"# duration_s={duration:.3f}",
    ]
    return "\n".join(lines) + "\n"


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    buf = io.StringIO()
    start = time.perf_counter()
    try:
        COMMANDS[args.command](args, buf)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"branchfreq {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        if not isinstance(exc, BranchFreqError):
            print(f"branchfreq {args.command}: error: invalid value: {exc}", file=sys.stderr)
            return 2
        print(f"branchfreq {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        _flush(args, argv, start, buf)
        return 1
    except (BranchFreqError, OverflowError, OSError) as exc:
        print(f"branchfreq {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        _flush(args, argv, start, buf)
        return 1
    _flush(args, argv, start, buf)
    return 0


def _flush(args, argv, start, buf):
    text = manifest(args, argv, time.perf_counter() - start) + buf.getvalue()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    raise SystemExit(main())
