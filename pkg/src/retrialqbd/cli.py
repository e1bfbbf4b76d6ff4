"""Command-line harness: solve, expand-error, tail, coeffs.

Every command reads an INI config (see :mod:`retrialqbd.config`), applies
flag overrides, and writes one RFC-4180 CSV (header row, CRLF, floats with
12 significant digits) to --out or stdout.  Identical configs produce
byte-identical files.  Diagnostics go to stderr.

Exit codes: 0 success, 1 usage or config error, 2 non-ergodic model,
3 numerical or convergence failure.  Sweep points run in parallel threads,
capped by the QBD_THREADS environment variable; output order never depends
on scheduling.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import asymptotics, expansion, rate_matrix
from .config import ExperimentConfig, load_config
from .errors import (ConfigError, ConvergenceError, NonErgodicError,
                     NumericalError, RegimeError)
from .model import ModelParams

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NON_ERGODIC = 2
EXIT_NUMERICAL = 3


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the contract reserves 2."""

    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="retrialqbd",
                     description="Retrial-queue QBD solver and experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("solve", "joint stationary distribution as CSV"),
            ("expand-error", "relative error of the series truncations vs the solver"),
            ("tail", "compensated tail-ratio series with boundedness verdicts"),
            ("coeffs", "dump the series coefficient table")):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", metavar="PATH", help="INI experiment config")
        cmd.add_argument("--N", type=int, dest="horizon_N", metavar="INT",
                         help="orbit truncation level")
        cmd.add_argument("--tol", type=float, metavar="FLOAT",
                         help="fixed-point convergence tolerance (L1)")
        cmd.add_argument("--orders", metavar="LIST",
                         help="comma-separated expansion orders, e.g. 1,2,3")
        cmd.add_argument("--out", dest="out_path", metavar="PATH",
                         help="output CSV path (default: stdout)")
        cmd.add_argument("--plot", action="store_true",
                         help="also render a PNG figure next to --out")
    return parser


def _thread_cap(n_points: int) -> int:
    raw = os.environ.get("QBD_THREADS")
    if raw is None:
        cap = os.cpu_count() or 1
    else:
        try:
            cap = int(raw)
        except ValueError as exc:
            raise ConfigError(f"QBD_THREADS must be an integer, got {raw!r}") from exc
        if cap < 1:
            raise ConfigError("QBD_THREADS must be >= 1")
    return max(1, min(cap, n_points))


def _run_points(points, worker):
    """Evaluate worker over sweep points, preserving configured order."""
    if len(points) == 1:
        return [worker(points[0])]
    with ThreadPoolExecutor(max_workers=_thread_cap(len(points))) as pool:
        return list(pool.map(worker, points))


def _solve_one(params: ModelParams, cfg: ExperimentConfig):
    seq = rate_matrix.compute_rate_rows(params, cfg.horizon_N, cfg.tol)
    dist = rate_matrix.stationary_distribution(params, seq)
    return seq, dist


def cmd_solve(cfg: ExperimentConfig, out) -> None:
    points = cfg.models()
    results = _run_points(points, lambda pt: _solve_one(pt[1], cfg))
    sweeping = len(points) > 1 or bool(cfg.sweep)
    writer = csv.writer(out)
    header = ["n", "i", "pi", "cumulative_mass"]
    writer.writerow((["rho_star"] if sweeping else []) + header)
    for (rho_star, _), (seq, dist) in zip(points, results):
        cum = 0.0
        for n in range(dist.horizon_N + 1):
            for i in range(dist.pi.shape[1]):
                cum += dist.pi[n, i]
                row = [str(n), str(i), _fmt(dist.pi[n, i]), _fmt(cum)]
                writer.writerow(([_fmt(rho_star)] if sweeping else []) + row)
        warn = " (tail mass above threshold)" if dist.tail_warning else ""
        print(f"solve rho*={rho_star:.6g}: captured mass {dist.mass_captured:.12g}, "
              f"backward depth {seq.iterations}{warn}", file=sys.stderr)


def cmd_expand_error(cfg: ExperimentConfig, out) -> None:
    points = cfg.models()
    orders = cfg.orders

    def one(point):
        _, params = point
        seq = rate_matrix.compute_rate_rows(params, cfg.horizon_N, cfg.tol)
        exact = seq.row(cfg.horizon_N)
        table = (expansion.theta_table(params, max(orders)) if params.persistent
                 else expansion.gamma_table(params, max(orders)))
        norm = abs(exact).sum()
        errs = []
        for m in orders:
            approx = expansion.eval_expansion(table, cfg.horizon_N, m)
            errs.append(abs(approx - exact).sum() / norm)
        return errs

    results = _run_points(points, one)
    writer = csv.writer(out)
    writer.writerow(["rho_star"] + [f"order_{m}" for m in orders])
    for (rho_star, _), errs in zip(points, results):
        writer.writerow([_fmt(rho_star)] + [_fmt(e) for e in errs])


def cmd_tail(cfg: ExperimentConfig, out) -> None:
    points = cfg.models()
    K = cfg.capacity
    for k in cfg.tail_k:
        if not 0 <= k <= K:
            raise ConfigError(f"tail idle count k={k} outside 0..{K}")

    def one(point):
        _, params = point
        seq = rate_matrix.compute_rate_rows(params, cfg.horizon_N, cfg.tol)
        dist = rate_matrix.stationary_distribution(params, seq)
        law = asymptotics.tail_law(params)
        series = {}
        verdicts = {}
        for k in cfg.tail_k:
            s = asymptotics.tail_ratio_series(dist, law, k)
            series[k] = s
            try:
                verdicts[k] = asymptotics.boundedness_check(
                    s, cfg.tail_window, cfg.bound_factor, cfg.drift_limit)
            except ValueError as exc:
                raise ConfigError(f"tail window {cfg.tail_window} unusable: {exc}") from exc
        return series, verdicts

    results = _run_points(points, one)
    writer = csv.writer(out)
    writer.writerow(["rho_star", "n", "k", "ratio", "verdict"])
    for (rho_star, _), (series, verdicts) in zip(points, results):
        for n in range(1, cfg.horizon_N + 1):
            for k in cfg.tail_k:
                s = series[k]
                idx = n - 1
                value = "" if s.absent[idx] else _fmt(s.values[idx])
                verdict = "PASS" if verdicts[k].passed else "FAIL"
                writer.writerow([_fmt(rho_star), str(n), str(k), value, verdict])
        for k in cfg.tail_k:
            print(f"tail rho*={rho_star:.6g} k={k}: {verdicts[k]}", file=sys.stderr)


def cmd_coeffs(cfg: ExperimentConfig, out) -> None:
    points = cfg.models()
    if len(points) != 1:
        raise ConfigError("coeffs expects a single model, not a sweep")
    _, params = points[0]
    max_order = max(cfg.orders)
    table = (expansion.theta_table(params, max_order) if params.persistent
             else expansion.gamma_table(params, max_order))
    writer = csv.writer(out)
    writer.writerow(["k", "m", "value", "saturated"])
    for k in range(table.capacity + 1):
        for m in range(table.min_order, table.max_order + 1):
            writer.writerow([str(k), str(m), _fmt(table.coeffs[k, m]),
                             "1" if table.saturated[k, m] else "0"])


_COMMANDS = {
    "solve": cmd_solve,
    "expand-error": cmd_expand_error,
    "tail": cmd_tail,
    "coeffs": cmd_coeffs,
}


def _overrides(args: argparse.Namespace) -> dict:
    over = {"horizon_N": args.horizon_N, "tol": args.tol, "out_path": args.out_path}
    if args.orders is not None:
        try:
            over["orders"] = tuple(int(x) for x in args.orders.replace(",", " ").split())
        except ValueError as exc:
            raise ConfigError(f"bad --orders value {args.orders!r}") from exc
    return over


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        cfg = load_config(args.config, _overrides(args))
        run = _COMMANDS[args.command]
        buffer = io.StringIO(newline="")
        run(cfg, buffer)
        payload = buffer.getvalue()
        if cfg.out_path:
            with open(cfg.out_path, "w", newline="") as fh:
                fh.write(payload)
        else:
            sys.stdout.write(payload)
        if args.plot:
            if not cfg.out_path:
                raise ConfigError("--plot requires --out (or [output] path)")
            from . import figures
            png = figures.render(args.command, cfg.out_path)
            print(f"figure written to {png}", file=sys.stderr)
    except (ConfigError, RegimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonErgodicError as exc:
        print(f"error: non-ergodic model: {exc}", file=sys.stderr)
        return EXIT_NON_ERGODIC
    except (ConvergenceError, NumericalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
