"""Command-line interface for the relu_cert project."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Any, Iterable

import numpy as np
import pandas as pd
from tqdm import tqdm

from .certify.certifier import (
    BoundsCache,
    Method,
    TargetMode,
    best_of,
    certify_target,
    certify_untargeted,
    select_target,
)
from .certify.search import SearchConfig
from .errors import (
    CertError,
    DimensionMismatchError,
    InvalidParameterError,
    InvalidStateError,
    InvariantViolationError,
    ModelFileError,
    NumericError,
)
from .io.models import Certificate, ComparisonRow, RunReport
from .io.network_file import load_input, load_network, save_input, save_network
from .io.outputs import write_report, write_table
from .linalg.norms import Vector, format_norm_order, parse_norm_order
from .model.network import Network, random_network
from .oracle.attack import AttackConfig, attack_upper_bound
from .oracle.checks import soundness_check
from .oracle.exhaustive import MAX_GRID_DIM, grid_min_distortion

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_NUMERIC = 3

ALL_METHODS = (Method.FAST_LIN, Method.FAST_LIP, Method.OP_NORM)
TARGET_ALIASES = {
    "runner-up": TargetMode.RUNNER_UP,
    "random": TargetMode.RANDOM,
    "least": TargetMode.LEAST_LIKELY,
}
DEFAULT_GRID_RESOLUTION = 201
DEFAULT_BENCH_SHAPES = "2x1024,3x1024"
NOT_FOUND = "not-found"


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage errors as exceptions."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise InvalidParameterError(message)


def _search_flags() -> argparse.ArgumentParser:
    defaults = SearchConfig()
    parent = _Parser(add_help=False)
    parent.add_argument("--p", type=parse_norm_order, default=parse_norm_order("inf"), help="Norm order: 1, 2 or inf.")
    parent.add_argument(
        "--method",
        choices=[m.value for m in Method] + ["all"],
        default=Method.FAST_LIN.value,
        help="Certification method, or 'all' for fast-lin, fast-lip and op-norm.",
    )
    parent.add_argument("--eps0", type=float, default=defaults.eps0, help="Initial radius of the search.")
    parent.add_argument("--max-iter", type=int, default=defaults.max_iter, help="Bisection steps after bracketing.")
    parent.add_argument("--tol", type=float, default=defaults.rel_tol, help="Relative bracket width that ends bisection.")
    parent.add_argument("--threads", type=int, default=1, help="Worker threads for untargeted certification.")
    parent.add_argument("--untargeted", action="store_true", help="Certify against every other class.")
    parent.add_argument("--clip-min", type=float, default=None, help="Lower input bound (p = inf only).")
    parent.add_argument("--clip-max", type=float, default=None, help="Upper input bound (p = inf only).")
    return parent


def _common_flags() -> argparse.ArgumentParser:
    parent = _Parser(add_help=False)
    parent.add_argument("--seed", type=int, default=0, help="Seed for every random choice.")
    parent.add_argument("--out", default=None, help="Path of the JSON report to write.")
    parent.add_argument("--verbose", action="store_true", help="Enable debug logging.")
    return parent


def parse_args(argv: Iterable[str] | None = None) -> argparse.Namespace:
    """Parse command-line arguments for the certification tools."""
    parser = _Parser(description="Certified robustness radii for fully connected ReLU networks.")
    commands = parser.add_subparsers(dest="command", required=True)
    common = _common_flags()
    search = _search_flags()

    verify = commands.add_parser("verify", parents=[common, search], help="Certify one input.")
    verify.add_argument("--model", required=True, help="Model document (JSON).")
    verify.add_argument("--input", required=True, help="Input document (JSON).")
    verify.add_argument("--target", default="runner-up", help="runner-up, random, least or a class index.")
    verify.set_defaults(handler=cmd_verify)

    compare = commands.add_parser("compare", parents=[common, search], help="Compare certificates with oracles.")
    compare.add_argument("--model", required=True, help="Model document (JSON).")
    compare.add_argument("--input", required=True, help="Input document (JSON).")
    compare.add_argument("--target", default="runner-up", help="runner-up, random, least or a class index.")
    compare.add_argument("--resolution", type=int, default=DEFAULT_GRID_RESOLUTION, help="Grid points per input axis.")
    compare.add_argument("--grid-radius", type=float, default=1.0, help="Half-width of the searched grid box.")
    compare.add_argument("--budget", type=int, default=AttackConfig().budget, help="Attack evaluation budget.")
    compare.add_argument("--samples", type=int, default=500, help="Samples for the soundness check.")
    compare.set_defaults(handler=cmd_compare)

    bench = commands.add_parser("bench", parents=[common, search], help="Time certification on random networks.")
    bench.add_argument("--shapes", default=DEFAULT_BENCH_SHAPES, help="Comma-separated LAYERSxWIDTH hidden shapes.")
    bench.add_argument("--input-dim", type=int, default=784, help="Input dimension of generated networks.")
    bench.add_argument("--classes", type=int, default=10, help="Output classes of generated networks.")
    bench.set_defaults(handler=cmd_bench)

    gen = commands.add_parser("gen", parents=[common], help="Write a seeded random network.")
    gen.add_argument("--dims", required=True, help="Comma-separated layer sizes, input first.")
    gen.add_argument("--input-out", default=None, help="Also write a random anchor input here.")
    gen.set_defaults(handler=cmd_gen)

    args = parser.parse_args(list(argv) if argv is not None else None)
    if args.command == "gen" and args.out is None:
        parser.error("gen requires --out")
    return args


def parse_dims(text: str) -> list[int]:
    try:
        dims = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise InvalidParameterError(f"dims must be comma-separated integers, got {text!r}") from exc
    if len(dims) < 2 or any(d <= 0 for d in dims):
        raise InvalidParameterError(f"dims needs at least two positive sizes, got {text!r}")
    return dims


def parse_shapes(text: str) -> list[tuple[int, int]]:
    """Parse ``"2x1024,3x1024"`` into (hidden layers, width) pairs."""
    shapes = []
    for part in text.split(","):
        part = part.strip().lower()
        if not part:
            continue
        try:
            depth, width = (int(v) for v in part.split("x"))
        except ValueError as exc:
            raise InvalidParameterError(f"shape must look like 2x1024, got {part!r}") from exc
        if depth <= 0 or width <= 0:
            raise InvalidParameterError(f"shape sizes must be positive, got {part!r}")
        shapes.append((depth, width))
    if not shapes:
        raise InvalidParameterError("at least one shape is required")
    return shapes


def _methods(args: argparse.Namespace) -> list[Method]:
    return list(ALL_METHODS) if args.method == "all" else [Method(args.method)]


def _search_config(args: argparse.Namespace) -> SearchConfig:
    return SearchConfig(eps0=args.eps0, max_iter=args.max_iter, rel_tol=args.tol)


def _clip(args: argparse.Namespace) -> tuple[float, float] | None:
    if args.clip_min is None and args.clip_max is None:
        return None
    if args.clip_min is None or args.clip_max is None:
        raise InvalidParameterError("--clip-min and --clip-max must be given together")
    return (args.clip_min, args.clip_max)


def _resolve_target(spec: str, net: Network, x0: Vector, c: int, seed: int) -> int:
    if spec in TARGET_ALIASES:
        return select_target(net.logits(x0), c, TARGET_ALIASES[spec], seed)
    try:
        j = int(spec)
    except ValueError as exc:
        raise InvalidParameterError(f"unknown target {spec!r}") from exc
    if j == c or not 0 <= j < net.output_dim:
        raise InvalidParameterError(f"target {j} must be a class other than {c} below {net.output_dim}")
    return j


def _load_problem(args: argparse.Namespace) -> tuple[Network, Vector, int]:
    net = load_network(args.model)
    x0, label = load_input(args.input)
    if x0.shape[0] != net.input_dim:
        raise DimensionMismatchError(
            f"input has {x0.shape[0]} entries, model expects {net.input_dim}", path=args.input
        )
    if label is not None and label >= net.output_dim:
        raise DimensionMismatchError(f"label {label} exceeds {net.output_dim} classes", path=args.input)
    c = label if label is not None else net.predict(x0)
    return net, x0, c


def _format_radius(value: float | None) -> str:
    return NOT_FOUND if value is None else f"{value:.6g}"


def _gap(upper: float | None, lower: float) -> float | None:
    if upper is None or lower <= 0.0:
        return None
    return upper / lower


def cmd_verify(args: argparse.Namespace) -> int:
    net, x0, c = _load_problem(args)
    search = _search_config(args)
    clip = _clip(args)
    p = args.p
    j = None if args.untargeted else _resolve_target(args.target, net, x0, c, args.seed)
    cache = BoundsCache(net, x0, p, clip)
    certificates: list[Certificate] = []
    for method in tqdm(_methods(args), desc="Certifying", unit="method", leave=False):
        if j is None:
            cert = certify_untargeted(net, x0, c, p, method, search, clip, args.threads, cache)
        else:
            cert = certify_target(net, x0, c, j, p, method, search, clip, cache)
        certificates.append(cert)
        target = "all" if j is None else str(j)
        print(
            f"[verify] {cert.method} p={cert.p} c={c} target={target}: radius {cert.radius:.6g}"
            f" ({cert.status}, {cert.iterations} bisections, {cert.wall_time_ms:.1f} ms)"
        )
    if len(certificates) > 1:
        best = best_of(certificates)
        print(f"[verify] best: {best.method} radius {best.radius:.6g}")

    report = RunReport(
        command="verify",
        model_path=str(args.model),
        input_path=str(args.input),
        methods=[cert.method for cert in certificates],
        p=format_norm_order(p),
        mode="untargeted" if j is None else "targeted",
        true_class=c,
        certificates=certificates,
        timing_ms={cert.method: cert.wall_time_ms for cert in certificates},
    )
    if args.out:
        path = write_report(Path(args.out), report)
        print(f"[saved] {path}")
    return EXIT_OK


def _compare_target(
    args: argparse.Namespace,
    net: Network,
    x0: Vector,
    c: int,
    j: int,
    methods: list[Method],
    cache: BoundsCache,
) -> list[ComparisonRow]:
    p = args.p
    clip = cache.clip
    note = ""
    attack = attack_upper_bound(net, x0, c, j, p, AttackConfig(budget=args.budget, seed=args.seed), clip)
    attack_value = attack.value if attack.found else None
    grid_value = None
    if net.input_dim <= MAX_GRID_DIM:
        try:
            grid = grid_min_distortion(net, x0, c, j, p, args.resolution, args.grid_radius)
            grid_value = grid.value if grid.found else None
        except CertError as exc:
            note = f"grid: {exc}"
            print(f"[warn] target {j}: {note}")
    else:
        note = "grid skipped"

    rows = []
    certificates = []
    for method in methods:
        cert = certify_target(net, x0, c, j, p, method, _search_config(args), clip, cache)
        certificates.append(cert)
        check = soundness_check(cert, net, x0, args.samples, args.seed, clip)
        rows.append(
            ComparisonRow(
                method=cert.method,
                target_class=j,
                certified=cert.radius,
                attack_upper=attack_value,
                grid_min=grid_value,
                gap_attack=_gap(attack_value, cert.radius),
                gap_grid=_gap(grid_value, cert.radius),
                sample_check=bool(check.value),
                note=note,
            )
        )
    if len(certificates) > 1:
        best = best_of(certificates)
        rows.append(
            ComparisonRow(
                method="best",
                target_class=j,
                certified=best.radius,
                attack_upper=attack_value,
                grid_min=grid_value,
                gap_attack=_gap(attack_value, best.radius),
                gap_grid=_gap(grid_value, best.radius),
                note=best.method,
            )
        )
    return rows


def cmd_compare(args: argparse.Namespace) -> int:
    net, x0, c = _load_problem(args)
    clip = _clip(args)
    cache = BoundsCache(net, x0, args.p, clip)
    methods = _methods(args)
    if args.untargeted:
        targets = [j for j in range(net.output_dim) if j != c]
    else:
        targets = [_resolve_target(args.target, net, x0, c, args.seed)]

    start = time.perf_counter()
    comparisons: list[ComparisonRow] = []
    for j in tqdm(targets, desc="Comparing", unit="target", leave=False):
        comparisons.extend(_compare_target(args, net, x0, c, j, methods, cache))
    elapsed_ms = (time.perf_counter() - start) * 1000.0

    for row in comparisons:
        gap = "-" if row.gap_attack is None else f"{row.gap_attack:.3g}"
        print(
            f"[compare] j={row.target_class} {row.method}: certified {row.certified:.6g}"
            f" attack {_format_radius(row.attack_upper)} grid {_format_radius(row.grid_min)} gap {gap}"
        )
    table = [
        {
            "method": row.method,
            "target_class": row.target_class,
            "certified": row.certified,
            "attack_upper": row.attack_upper,
            "grid_min": row.grid_min,
            "gap_attack": row.gap_attack,
            "gap_grid": row.gap_grid,
            "sample_check": row.sample_check,
            "note": row.note,
        }
        for row in comparisons
    ]
    report = RunReport(
        command="compare",
        model_path=str(args.model),
        input_path=str(args.input),
        methods=[m.value for m in methods],
        p=format_norm_order(args.p),
        mode="untargeted" if args.untargeted else "targeted",
        true_class=c,
        comparisons=comparisons,
        timing_ms={"total": elapsed_ms},
        rows=table,
    )
    if args.out:
        out = Path(args.out)
        write_report(out, report)
        parquet_path, csv_path = write_table(table, out)
        print(f"[saved] {out} ({parquet_path.name}, {csv_path.name})")
    return EXIT_OK


def _bench_row(
    net: Network,
    x0: Vector,
    method: Method,
    args: argparse.Namespace,
) -> dict[str, Any]:
    c = net.predict(x0)
    search = _search_config(args)
    if args.untargeted:
        cert = certify_untargeted(net, x0, c, args.p, method, search, threads=1)
    else:
        j = select_target(net.logits(x0), c, TargetMode.RUNNER_UP)
        cert = certify_target(net, x0, c, j, args.p, method, search)
    row: dict[str, Any] = {
        "method": method.value,
        "radius": cert.radius,
        "iterations": cert.iterations,
        "time_ms": cert.wall_time_ms,
    }
    if args.untargeted and args.threads > 1:
        threaded = certify_untargeted(net, x0, c, args.p, method, search, threads=args.threads)
        row["threads"] = args.threads
        row["time_threaded_ms"] = threaded.wall_time_ms
        row["speedup"] = cert.wall_time_ms / threaded.wall_time_ms if threaded.wall_time_ms > 0 else None
    return row


def cmd_bench(args: argparse.Namespace) -> int:
    shapes = parse_shapes(args.shapes)
    if args.threads > 1 and not args.untargeted:
        print("[warn] --threads only applies with --untargeted; timing single-threaded")
    rows: list[dict[str, Any]] = []
    for depth, width in tqdm(shapes, desc="Benchmarking", unit="shape", leave=False):
        dims = [args.input_dim] + [width] * depth + [args.classes]
        net = random_network(dims, args.seed)
        x0 = np.random.default_rng(args.seed).uniform(0.0, 1.0, size=args.input_dim)
        for method in _methods(args):
            row = {"shape": f"{depth}x{width}", **_bench_row(net, x0, method, args)}
            rows.append(row)
            print(f"[bench] {row['shape']} {row['method']}: radius {row['radius']:.6g} in {row['time_ms']:.1f} ms")

    print(pd.DataFrame(rows).to_string(index=False))
    report = RunReport(
        command="bench",
        model_path=None,
        input_path=None,
        methods=[m.value for m in _methods(args)],
        p=format_norm_order(args.p),
        mode="untargeted" if args.untargeted else "targeted",
        timing_ms={f"{row['shape']}/{row['method']}": row["time_ms"] for row in rows},
        rows=rows,
    )
    if args.out:
        out = Path(args.out)
        write_report(out, report)
        write_table(rows, out)
        print(f"[saved] {out}")
    return EXIT_OK


def cmd_gen(args: argparse.Namespace) -> int:
    dims = parse_dims(args.dims)
    net = random_network(dims, args.seed)
    path = save_network(net, Path(args.out))
    print(f"[gen] {'-'.join(str(d) for d in dims)} network -> {path}")
    if args.input_out:
        x0 = np.random.default_rng(args.seed + 1).uniform(-1.0, 1.0, size=dims[0])
        label = net.predict(x0)
        input_path = save_input(x0, label, Path(args.input_out))
        print(f"[gen] input with label {label} -> {input_path}")
    return EXIT_OK


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


def main(argv: Iterable[str] | None = None) -> int:
    """Entry point for the CLI."""
    try:
        args = parse_args(argv)
        _configure_logging(args.verbose)
        return args.handler(args)
    except InvalidParameterError as exc:
        print(f"[error] {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ModelFileError, OSError) as exc:
        print(f"[error] {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericError, InvariantViolationError, InvalidStateError) as exc:
        print(f"[error] {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CertError as exc:
        print(f"[error] {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
