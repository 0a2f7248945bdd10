"""Command-line entry point.

Exit codes: 0 success / no alarm, 1 I/O or data error, 2 usage error,
3 alarm raised, 4 degenerate normalizer.  Flags take precedence over the
``SPIKE_SEED``, ``SPIKE_THREADS`` and ``SPIKE_QTABLE`` environment variables.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from .core import EigenSeries, ParseError, QuantileTable, derive_seed, read_matrix_stream, \
    read_quantile_table, write_matrix_stream, write_quantile_table
from .detector import DegenerateNormalizerError, monitor
from .eigen import largest_eigenvalues
from .experiments import ExperimentPlan, run_pfa, run_power, write_results
from .ingest import center_by_baseline, deseasonalize, fit_seasonal, outer_product_stream, \
    read_panel, write_panel
from .quantiles import QuantileRequest, cached_quantiles
from .synth import SignalSpec, WignerStreamSpec, gen_stream

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_ALARM, EXIT_DEGENERATE = 0, 1, 2, 3, 4

log = logging.getLogger("spikemon")


class UsageError(Exception):
    pass


def _int_list(text):
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _alphas(text):
    vals = _float_list(text)
    if not vals or any(not 0 < a < 1 for a in vals):
        raise argparse.ArgumentTypeError(f"alpha values must lie in (0, 1), got {text!r}")
    return vals


def _positive(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _env_int(name, default):
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"environment variable {name} must be an integer, got {raw!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # SUPPRESS keeps a subcommand's defaults from clobbering global flags
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="base random seed (env SPIKE_SEED, default 0)")
    common.add_argument("--threads", type=_positive, default=argparse.SUPPRESS,
                        help="worker processes (env SPIKE_THREADS, default 1)")
    common.add_argument("--verbose", "-v", action="store_true", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="spikemon", parents=[common],
                                description="Monitor Wigner-matrix streams for an emerging spike.")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("quantiles", parents=[common], help="simulate critical values")
    q.add_argument("--m", type=_positive, required=True)
    q.add_argument("--T", type=_positive, required=True)
    q.add_argument("--reps", type=_positive, required=True)
    q.add_argument("--alpha", type=_alphas, default=(0.05, 0.10))
    q.add_argument("--table", help="quantile cache CSV to read and update (env SPIKE_QTABLE)")
    q.add_argument("--out", help="also write this request's rows to a quantile CSV")

    mo = sub.add_parser("monitor", parents=[common], help="run the sequential test")
    mo.add_argument("--train", required=True, help="matrix-stream CSV of training matrices")
    mo.add_argument("--stream", required=True, help="matrix-stream CSV to monitor")
    mo.add_argument("--alpha", type=_alphas, default=(0.05,))
    mo.add_argument("--threshold", type=float, help="critical value, skips the quantile lookup")
    mo.add_argument("--quantile-table", help="quantile cache CSV (env SPIKE_QTABLE)")
    mo.add_argument("--T", type=_positive, default=500, help="horizon of the critical value")
    mo.add_argument("--reps", type=_positive, default=10_000)
    mo.add_argument("--max-k", type=_positive)
    mo.add_argument("--continue", dest="keep_going", action="store_true",
                    help="keep tracing after the first alarm")
    mo.add_argument("--trace", help="write k,gamma CSV here")

    sy = sub.add_parser("synth", parents=[common], help="generate a synthetic matrix stream")
    sy.add_argument("--n", type=_positive, required=True)
    sy.add_argument("--m", type=_positive, required=True)
    sy.add_argument("--len", dest="length", type=_positive, required=True)
    sy.add_argument("--law", choices=("uniform", "beta"), default="uniform")
    sy.add_argument("--regime", choices=("sub", "super"), default="sub")
    sy.add_argument("--delta", type=float)
    sy.add_argument("--kstar", type=int, default=0)
    sy.add_argument("--burn-in", type=int, default=50)
    sy.add_argument("--out", required=True)

    ex = sub.add_parser("experiment", parents=[common], help="size and power studies")
    ex.add_argument("kind", choices=("pfa", "power"))
    ex.add_argument("--m", type=_int_list, required=True)
    ex.add_argument("--n", type=_int_list, required=True)
    ex.add_argument("--alpha", type=_alphas, default=(0.05, 0.10))
    ex.add_argument("--law", choices=("uniform", "beta"), default="uniform")
    ex.add_argument("--reps", type=_positive, default=1000)
    ex.add_argument("--delta", type=_float_list, default=())
    ex.add_argument("--kstar", type=_int_list, default=())
    ex.add_argument("--horizon", type=_positive)
    ex.add_argument("--quantile-table", help="quantile cache CSV (env SPIKE_QTABLE)")
    ex.add_argument("--quantile-T", type=_positive,
                    help="horizon of the critical values (default: the monitoring horizon)")
    ex.add_argument("--quantile-reps", type=_positive, default=10_000)
    ex.add_argument("--out", help="results CSV (default: stdout)")

    ig = sub.add_parser("ingest", parents=[common], help="panel and sensor ingestion")
    isub = ig.add_subparsers(dest="step", required=True)
    ds = isub.add_parser("deseasonalize", parents=[common])
    ds.add_argument("--history", required=True)
    ds.add_argument("--series", required=True)
    ds.add_argument("--window", type=_positive, default=30)
    ds.add_argument("--period", type=_positive, default=365)
    ds.add_argument("--interpolate", action="store_true",
                    help="fill missing readings by linear interpolation in time")
    ds.add_argument("--out", help="panel CSV (default: stdout)")
    op = isub.add_parser("outer", parents=[common])
    op.add_argument("--series", required=True)
    op.add_argument("--out", required=True)
    ce = isub.add_parser("center", parents=[common])
    ce.add_argument("--stream", required=True)
    ce.add_argument("--baseline", type=_positive, required=True)
    ce.add_argument("--out", required=True)
    return p


def _qtable_path(flag):
    return flag or os.environ.get("SPIKE_QTABLE") or None


def _print_table(rows, header, out=None):
    out = out or sys.stdout
    out.write(",".join(header) + "\n")
    for r in rows:
        out.write(",".join("" if v is None else str(v) for v in r) + "\n")


def cmd_quantiles(args) -> int:
    req = QuantileRequest(args.m, args.T, args.alpha, args.reps, args.seed)
    table = cached_quantiles(req, _qtable_path(args.table), args.threads)
    if args.out:
        write_quantile_table(table, args.out)
    _print_table([(r.m, r.T, r.alpha, r.quantile, r.replications, r.seed) for r in table.rows],
                 ("m", "T", "alpha", "quantile", "replications", "seed"))
    return EXIT_OK


def _threshold(args, m: int) -> float:
    if args.threshold is not None:
        if not args.threshold > 0:
            raise UsageError("--threshold must be positive")
        return args.threshold
    if len(args.alpha) != 1:
        raise UsageError("monitor takes a single --alpha")
    alpha = args.alpha[0]
    path = _qtable_path(args.quantile_table)
    if path and os.path.exists(path):
        q = read_quantile_table(path).get(m, args.T, alpha)
        if q is not None:
            return q
    req = QuantileRequest(m, args.T, (alpha,), args.reps, args.seed)
    return cached_quantiles(req, path, args.threads).rows[0].quantile


def cmd_monitor(args) -> int:
    train = read_matrix_stream(args.train)
    stream = read_matrix_stream(args.stream)
    if len(train) < 2:
        raise UsageError("training file must hold at least 2 matrices")
    n = train[0].n
    if stream and stream[0].n != n:
        raise ValueError(f"stream dimension {stream[0].n} differs from training dimension {n}")
    lam_train = largest_eigenvalues(train)
    lam_stream = largest_eigenvalues(stream) if stream else np.empty(0)
    q = _threshold(args, len(train))
    verdict = monitor(EigenSeries(lam_train, len(train), n), lam_stream, q,
                      max_k=args.max_k, continue_after_alarm=args.keep_going)
    if args.trace:
        with open(args.trace, "w") as fh:
            fh.write("k,gamma\n")
            for k, g in verdict.gamma_trace:
                fh.write(f"{k},{g!r}\n")
    if verdict.alarmed:
        print(f"alarm at k={verdict.k_hat} (t={len(train) + verdict.k_hat}), threshold {q:.4f}")
        return EXIT_ALARM
    print(f"no alarm after {len(verdict.gamma_trace)} observations, threshold {q:.4f}")
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.regime == "super" and args.delta is None:
        raise UsageError("--regime super needs --delta")
    if args.length < args.m:
        raise UsageError("--len must be at least --m")
    law = {"uniform": "uniform01", "beta": "beta24"}[args.law]
    wspec = WignerStreamSpec(n=args.n, phi_seed=derive_seed(args.seed, 0),
                             noise_seed=derive_seed(args.seed, 1), burn_in=args.burn_in)
    sspec = SignalSpec(law=law, regime="supercritical" if args.regime == "super" else "subcritical",
                       delta=args.delta, kstar=args.kstar)
    write_matrix_stream(gen_stream(wspec, sspec, args.m, args.length), args.out)
    return EXIT_OK


def cmd_experiment(args) -> int:
    qpath = _qtable_path(args.quantile_table)
    qtable = read_quantile_table(qpath) if qpath and os.path.exists(qpath) else QuantileTable()
    plan = ExperimentPlan(m_grid=args.m, n_grid=args.n, alphas=args.alpha, law=args.law,
                          delta_grid=args.delta, kstar_grid=args.kstar,
                          replications=args.reps, seed=args.seed, horizon=args.horizon,
                          quantile_T=args.quantile_T, quantile_reps=args.quantile_reps,
                          workers=args.threads)
    if args.kind == "power":
        if not args.delta or not args.kstar:
            raise UsageError("power runs need --delta and --kstar")
        rows = run_power(plan, qtable)
    else:
        rows = run_pfa(plan, qtable)
    write_results(rows, args.out or sys.stdout)
    return EXIT_OK


def cmd_ingest(args) -> int:
    if args.step == "deseasonalize":
        model = fit_seasonal(read_panel(args.history), args.period, args.window, args.interpolate)
        out = deseasonalize(read_panel(args.series), model, args.interpolate)
        write_panel(out, args.out or sys.stdout)
    elif args.step == "outer":
        write_matrix_stream(outer_product_stream(read_panel(args.series)), args.out)
    else:
        write_matrix_stream(center_by_baseline(read_matrix_stream(args.stream), args.baseline),
                            args.out)
    return EXIT_OK


COMMANDS = {"quantiles": cmd_quantiles, "monitor": cmd_monitor, "synth": cmd_synth,
            "experiment": cmd_experiment, "ingest": cmd_ingest}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors (and --help) this way
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "seed", None) is None:
            args.seed = _env_int("SPIKE_SEED", 0)
        if getattr(args, "threads", None) is None:
            args.threads = max(1, _env_int("SPIKE_THREADS", 1))
        if args.seed < 0:
            raise UsageError("--seed must be nonnegative")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"spikemon: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateNormalizerError as exc:
        print(f"spikemon: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (OSError, ParseError, ValueError) as exc:
        print(f"spikemon: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
