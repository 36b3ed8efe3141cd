"""
``xorlab`` command line.

Exit codes: 0 on completion (including runs that fail to solve XOR),
1 on I/O or runtime errors, 2 on usage errors.
"""

import argparse
import logging
import sys
from typing import Callable, Optional, Sequence

from pydantic import BaseModel, ValidationError

from . import __version__
from .commands import (
    BenchRequest,
    BoundaryRequest,
    CurvesRequest,
    LandscapeRequest,
    PlotRequest,
    SweepRequest,
    TrainRequest,
    handle_bench,
    handle_boundary,
    handle_curves,
    handle_landscape,
    handle_plot,
    handle_sweep,
    handle_train,
)
from .config import THREADS_ENV_VAR
from .models import InputRange, ModelName

logger = logging.getLogger(__name__)

MODEL_CHOICES = [m.value for m in ModelName]
RANGE_CHOICES = [r.value for r in InputRange]


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger().setLevel(level)


def _model_lr(value: str) -> tuple[str, float]:
    name, sep, lr = value.partition("=")
    if not sep or name not in MODEL_CHOICES:
        raise argparse.ArgumentTypeError(f"expected NAME=LR with NAME in {MODEL_CHOICES}, got {value!r}")
    try:
        return name, float(lr)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {lr!r}")


def _model_range(value: str) -> tuple[str, str]:
    name, sep, input_range = value.partition("=")
    if not sep or name not in MODEL_CHOICES or input_range not in RANGE_CHOICES:
        raise argparse.ArgumentTypeError(
            f"expected NAME=RANGE with NAME in {MODEL_CHOICES} and RANGE in {RANGE_CHOICES}, got {value!r}"
        )
    return name, input_range


def _logging_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_mutually_exclusive_group()
    group.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    group.add_argument("-q", "--quiet", action="store_true", help="Warnings and errors only")
    return parent


def _common_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--out", help="Output directory (default: ./out)")
    parent.add_argument("--seed", type=int, help="Base seed; trial i uses stream (seed, i)")
    parent.add_argument("--no-timing", dest="no_timing", action="store_true", default=None,
                        help="Drop wall-clock columns so outputs are byte-reproducible")
    parent.add_argument("--threads", type=int, help=f"Worker processes (default: ${THREADS_ENV_VAR} or all cores)")
    parent.add_argument("--beta1", type=float, help="Adam beta1 (default 0.9)")
    parent.add_argument("--beta2", type=float, help="Adam beta2 (default 0.999)")
    parent.add_argument("--eps", type=float, help="Adam epsilon (default 1e-8)")
    parent.add_argument("--weight-bound", dest="weight_bound", type=float,
                        help="Initial weights are uniform on [-bound, bound] (default 1)")
    return parent


def build_parser() -> argparse.ArgumentParser:
    logging_flags = _logging_flags()
    common = [_common_flags(), logging_flags]

    parser = argparse.ArgumentParser(prog="xorlab", description="Single-neuron XOR experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def command(name: str, summary: str, request: type[BaseModel], handler: Callable, parents=common):
        sub = commands.add_parser(name, help=summary, parents=parents)
        sub.set_defaults(request_cls=request, handler=handler, parser=sub)
        return sub

    train = command("train", "Train one model once and record its trace", TrainRequest, handle_train)
    train.add_argument("--model", required=True, choices=MODEL_CHOICES)
    train.add_argument("--range", dest="input_range", choices=RANGE_CHOICES,
                       help="Input encoding (default: 01 for gcu, pm1 otherwise)")
    train.add_argument("--lr", type=float)
    train.add_argument("--epochs", type=int)
    train.add_argument("--trace", action="store_true", default=None, help="Write every epoch, not just the last")

    sweep = command("sweep", "Success rate over a log-spaced learning-rate grid", SweepRequest, handle_sweep)
    sweep.add_argument("--model", dest="models", action="append", choices=MODEL_CHOICES,
                       help="Repeat to select models (default: all four)")
    sweep.add_argument("--range", dest="input_range", choices=RANGE_CHOICES,
                       help="Input encoding for every model (default: 01 for gcu, pm1 otherwise)")
    sweep.add_argument("--model-range", dest="model_ranges", action="append", type=_model_range,
                       metavar="NAME=RANGE", help="Per-model input encoding, wins over --range")
    sweep.add_argument("--lr-min", dest="lr_min", type=float)
    sweep.add_argument("--lr-max", dest="lr_max", type=float)
    sweep.add_argument("--lr-points", dest="lr_points", type=int)
    sweep.add_argument("--trials", type=int)
    sweep.add_argument("--epochs", type=int)

    curves = command("curves", "Per-epoch success rate and mean loss", CurvesRequest, handle_curves)
    curves.add_argument("--model", dest="models", action="append", choices=MODEL_CHOICES,
                        help="Repeat to select models (default: prelu, gcu, mlp)")
    curves.add_argument("--lr", type=float, help="Learning rate for every model (default: 0.05, gcu 0.1)")
    curves.add_argument("--model-lr", dest="model_lrs", action="append", type=_model_lr, metavar="NAME=LR",
                        help="Per-model learning rate override")
    curves.add_argument("--trials", type=int)
    curves.add_argument("--curve-epochs", dest="curve_epochs", type=int)
    curves.add_argument("--epochs", type=int)

    landscape = command("landscape", "Loss surface of the PReLU neuron plus quadrant study",
                        LandscapeRequest, handle_landscape)
    landscape.add_argument("--range", dest="input_range", choices=RANGE_CHOICES)
    landscape.add_argument("--slope", type=float, help="Fixed PReLU slope (default -1)")
    landscape.add_argument("--extent", type=float, help="Grid covers [-extent, extent]^2 (default 2)")
    landscape.add_argument("--steps", type=int, help="Grid points per axis (default 201)")
    landscape.add_argument("--lr", type=float)
    landscape.add_argument("--quadrant-trials", dest="quadrant_trials", type=int)
    landscape.add_argument("--epochs", type=int)
    landscape.add_argument("--trajectories", action="store_true", default=None,
                           help="Also write one optimizer path per weight quadrant")

    boundary = command("boundary", "Averaged decision boundaries and class margins",
                       BoundaryRequest, handle_boundary)
    boundary.add_argument("--model", dest="models", action="append", choices=MODEL_CHOICES,
                          help="Repeat to select models (default: prelu, gcu, mlp)")
    boundary.add_argument("--lr", type=float)
    boundary.add_argument("--trials", type=int)
    boundary.add_argument("--steps", type=int)
    boundary.add_argument("--epochs", type=int)

    bench = command("bench", "Wall time of single training runs", BenchRequest, handle_bench)
    bench.add_argument("--model", dest="models", action="append", choices=MODEL_CHOICES,
                       help="Repeat to select models (default: prelu, gcu, mlp)")
    bench.add_argument("--lr", type=float)
    bench.add_argument("--repetitions", type=int)
    bench.add_argument("--trials", type=int, help="Distinct initialisations cycled over the repetitions")
    bench.add_argument("--epochs", type=int)
    bench.add_argument("--warmup", type=int)

    plot = command("plot", "Render CSV outputs to SVG", PlotRequest, handle_plot, parents=[logging_flags])
    plot.add_argument("inputs", nargs="+", help="CSV files written by the other commands")
    plot.add_argument("--out", help="Directory for the SVGs (default: next to each CSV)")

    return parser


def _request_fields(args: argparse.Namespace) -> dict:
    skip = {"command", "request_cls", "handler", "parser", "verbose", "quiet"}
    fields = {key: value for key, value in vars(args).items() if key not in skip and value is not None}
    for key in ("model_lrs", "model_ranges"):
        if key in fields:
            fields[key] = dict(fields[key])
    return fields


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2

    configure_logging(args.verbose, args.quiet)

    try:
        request = args.request_cls(**_request_fields(args))
    except ValidationError as exc:
        args.parser.print_usage(sys.stderr)
        for error in exc.errors():
            field = ".".join(str(part) for part in error["loc"]) or "arguments"
            print(f"{parser.prog} {args.command}: error: {field}: {error['msg']}", file=sys.stderr)
        return 2

    try:
        args.handler(request)
    except OSError as exc:
        logger.error(f"❌ I/O error: {exc}")
        return 1
    except (ValueError, FloatingPointError) as exc:
        logger.error(f"❌ {args.command} failed: {exc}")
        return 1
    return 0
