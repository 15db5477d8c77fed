from __future__ import annotations

import argparse
import json
import sys
from collections.abc import Sequence
from typing import Any

import sentry_sdk
from prometheus_client import REGISTRY, write_to_textfile

from app.application.bench import BENCH_OPS, REPRESENTATIONS, bench_controller_step, run_bench
from app.application.crypto.keys import keygen, make_params
from app.application.crypto.keystream import KeyStream
from app.application.loop.closed_loop import build_setup, run_closed_loop
from app.application.selftest import run_selftest
from app.core.logging import configure_logging, get_logger
from app.core.settings import Settings, load_settings
from app.domain.errors import ChannelClosed, ConfigError, EngineError, InvalidParams, NoiseBudgetExceeded
from app.domain.scheme import STANDARD_WORD_WIDTHS
from app.infrastructure.csv_export import (
    BENCH_COLUMNS,
    GAIN_COLUMNS,
    TRAJECTORY_COLUMNS,
    write_bench_csv,
    write_gain_csv,
)
from app.infrastructure.wire import write_key_file

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VERIFICATION = 3
EXIT_IO = 4

STABILIZATION_START_S = 5.0
STABILIZATION_BOUND_RAD = 0.01

_CSV_HELP = (
    "CSV schemas:\n"
    f"  trajectory: {', '.join(TRAJECTORY_COLUMNS)}\n"
    f"  bench:      {', '.join(BENCH_COLUMNS)}\n"
    f"  gains:      {', '.join(GAIN_COLUMNS)}\n"
    "Exit codes: 0 success, 2 usage, 3 verification failure, 4 IO."
)


def _int_list(value: str) -> list[int]:
    try:
        return [int(part) for part in value.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}") from exc


def _str_list(value: str) -> list[str]:
    return [part.strip() for part in value.split(",") if part.strip()]


def _scheme_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n", type=int, help="lattice dimension")
    parser.add_argument("--m", type=int, help="public-key sample count")
    parser.add_argument("--ell", type=int, help="word width in bits")
    parser.add_argument("--m-q", dest="m_q", type=int, help="integer bits of the Q format")
    parser.add_argument("--n-q", dest="n_q", type=int, help="fraction bits of the Q format")
    parser.add_argument("--noise-bound", dest="noise_bound", type=int, help="fresh noise magnitude")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rce",
        description="Reduced-cipher encrypted control: keys, benchmarks, closed-loop runs.",
        epilog=_CSV_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--config", help="flat 'key = value' config file")
    parser.add_argument("--seed", type=int, help="seed for every random draw")
    parser.add_argument("--log-json", dest="log_json", action="store_true", default=None, help="JSON log lines")
    parser.add_argument("--metrics-out", dest="metrics_out", help="write Prometheus metrics here on exit")
    commands = parser.add_subparsers(dest="command", required=True)

    keygen_cmd = commands.add_parser("keygen", help="generate and store a key pair")
    _scheme_flags(keygen_cmd)
    keygen_cmd.add_argument("--out", required=True, help="key file to write")

    bench_cmd = commands.add_parser("bench", help="count word operations per homomorphic operation")
    bench_cmd.add_argument("--ops", type=_str_list, default=list(BENCH_OPS), help="comma-separated operations")
    bench_cmd.add_argument("--ell-sweep", dest="ell_sweep", type=_int_list, default=[8, 16, 32])
    bench_cmd.add_argument("--repr", choices=("full", "reduced", "both"), default="both")
    bench_cmd.add_argument("--bench-n", dest="bench_n", type=int, default=2, help="lattice dimension of the sweep")
    bench_cmd.add_argument("--controller-step", action="store_true", help="also time one encrypted controller step")
    bench_cmd.add_argument("--csv", help="benchmark CSV to write")

    simulate_cmd = commands.add_parser("simulate", help="run the closed loop")
    _scheme_flags(simulate_cmd)
    simulate_cmd.add_argument("--duration", dest="duration_s", type=float, help="simulated seconds")
    simulate_cmd.add_argument("--transport", choices=("inprocess", "socket"))
    simulate_cmd.add_argument("--controller", choices=("encrypted", "fixed_point", "float"))
    simulate_cmd.add_argument("--verify", action="store_true", default=None, help="check against the plaintext twin")
    simulate_cmd.add_argument("--csv-out", dest="csv_out", help="trajectory CSV to write")
    simulate_cmd.add_argument("--gains-csv", dest="gains_csv", help="composite gain CSV to write")

    selftest_cmd = commands.add_parser("selftest", help="toy-geometry equivalence checks")
    selftest_cmd.add_argument("--trials", type=int, default=50)
    return parser


def _overrides(args: argparse.Namespace, *names: str) -> dict[str, Any]:
    return {name: getattr(args, name, None) for name in names}


def _settings(args: argparse.Namespace) -> Settings:
    overrides = _overrides(
        args,
        "seed",
        "log_json",
        "n",
        "m",
        "ell",
        "m_q",
        "n_q",
        "noise_bound",
        "duration_s",
        "transport",
        "controller",
        "verify",
    )
    return load_settings(args.config, **overrides)


def cmd_keygen(args: argparse.Namespace, settings: Settings) -> int:
    params = make_params(
        settings.n,
        settings.m,
        settings.ell,
        settings.m_q,
        settings.n_q,
        settings.noise_bound,
        allow_toy=settings.ell not in STANDARD_WORD_WIDTHS,
    )
    sk, pk = keygen(params, KeyStream(settings.seed).fork("keys"))
    fingerprint = write_key_file(args.out, sk, pk)
    rows, cols = pk.A.shape
    print(f"fingerprint {fingerprint}")
    print(f"public key {rows}x{cols}, cipher {params.N}x{params.width}, ell={params.ell}")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace, settings: Settings) -> int:
    unknown = sorted(set(args.ops) - set(BENCH_OPS))
    if unknown:
        raise ConfigError(f"unknown operations {unknown}", ops=unknown)
    representations = REPRESENTATIONS if args.repr == "both" else (args.repr,)
    rows = run_bench(args.ops, args.ell_sweep, representations, n=args.bench_n, seed=settings.seed)
    if args.controller_step:
        rows.append(bench_controller_step(settings.seed))

    if args.csv:
        write_bench_csv(args.csv, rows)
    else:
        print(",".join(BENCH_COLUMNS))
        for row in rows:
            print(",".join(str(row[c]) for c in BENCH_COLUMNS))
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace, settings: Settings) -> int:
    config = settings.simulation()
    if args.gains_csv:
        write_gain_csv(args.gains_csv, build_setup(config).gains)
    trace = run_closed_loop(config, trajectory_csv=args.csv_out)

    theta1, theta2 = trace.max_angles_after(STABILIZATION_START_S)
    summary = {
        "controller": config.controller,
        "steps": len(trace),
        "max_theta1_after_5s": theta1,
        "max_theta2_after_5s": theta2,
        "audit_head": trace.audit_head,
        "max_noise": trace.max_noise,
    }
    print(json.dumps(summary))

    if config.verify and config.duration_s > STABILIZATION_START_S:
        if not trace.stabilized(STABILIZATION_START_S, STABILIZATION_BOUND_RAD):
            logger.error("Plant not stabilized", extra={"rce_extra": json.dumps(summary)})
            print(f"stabilization failed: max |theta| after 5 s = {max(theta1, theta2):.6f} rad", file=sys.stderr)
            return EXIT_VERIFICATION
    return EXIT_OK


def cmd_selftest(args: argparse.Namespace, settings: Settings) -> int:
    results = run_selftest(seed=settings.seed, trials=args.trials)
    for result in results:
        mark = "✅" if result.passed else "❌"
        line = f"{mark} {result.name} ({result.trials} trials)"
        print(f"{line}: {result.detail}" if result.detail else line)
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFICATION


COMMANDS = {
    "keygen": cmd_keygen,
    "bench": cmd_bench,
    "simulate": cmd_simulate,
    "selftest": cmd_selftest,
}


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point; returns the process exit code."""

    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        settings = _settings(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    configure_logging(json=settings.log_json or settings.environment != "dev")
    if settings.sentry_dsn:
        sentry_sdk.init(dsn=settings.sentry_dsn, traces_sample_rate=0.1, environment=settings.environment)

    try:
        return COMMANDS[args.command](args, settings)
    except (ConfigError, InvalidParams) as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NoiseBudgetExceeded as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION
    except ChannelClosed as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except EngineError as exc:
        logger.error("Command failed", extra={"rce_extra": json.dumps({"code": exc.code, **_jsonable(exc.context)})})
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION
    finally:
        if args.metrics_out:
            write_to_textfile(args.metrics_out, REGISTRY)


def _jsonable(context: dict[str, Any]) -> dict[str, Any]:
    return {k: v if isinstance(v, int | float | str | bool | None) else repr(v) for k, v in context.items()}


if __name__ == "__main__":
    sys.exit(main())
