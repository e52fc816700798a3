"""Command-line surface: python -m app.cli <command> [flags]"""
import argparse
import json
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import InvalidParameters, SpinBathError
from app.models.bath import BathParams
from app.models.nonmarkov import PairName
from app.models.run import CommandType, OutputFormat, RunConfig
from app.services.runner import run

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FAILED, EXIT_INVALID = 0, 1, 2

# pydantic field -> flag, for error messages
FLAGS = {
    "N": "--n-bath", "alpha": "--alpha", "omega0": "--omega0", "t_max": "--t-max", "dt": "--dt",
    "initial_state": "--initial", "pair": "--pair", "output": "--out", "format": "--format",
    "sweep_alpha": "--sweep-alpha", "sweep_n": "--sweep-n", "workers": "--workers", "seed": "--seed",
}


def _float_list(text: str) -> List[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _int_list(text: str) -> List[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m app.cli",
        description="Exact reduced dynamics of a central spin in an unpolarized spin bath.",
    )
    parser.add_argument("command", choices=[c.value for c in CommandType])
    parser.add_argument("--n-bath", type=int, default=settings.DEFAULT_N_BATH,
                        help=f"Number of bath spins. Default: {settings.DEFAULT_N_BATH}.")
    parser.add_argument("--alpha", type=float, default=settings.DEFAULT_ALPHA,
                        help=f"Coupling strength in units of omega0. Default: {settings.DEFAULT_ALPHA}.")
    parser.add_argument("--omega0", type=float, default=settings.DEFAULT_OMEGA0,
                        help="Central-spin splitting, sets the time unit. Default: 1.0.")
    parser.add_argument("--t-max", type=float, default=settings.DEFAULT_T_MAX,
                        help=f"Grid end time. Default: {settings.DEFAULT_T_MAX}.")
    parser.add_argument("--dt", type=float, default=settings.DEFAULT_DT,
                        help=f"Grid step. Default: {settings.DEFAULT_DT}.")
    parser.add_argument("--initial", default="1",
                        help="Initial state: 0, 1, +, -, +i, -i, mixed or a Bloch vector 'x,y,z'. Default: 1.")
    parser.add_argument("--pair", choices=[p.value for p in PairName], default=PairName.ALL.value,
                        help="State pairs for the trace-distance measure. Default: all.")
    parser.add_argument("--out", default=None,
                        help=f"Output file. Default: {settings.OUTPUT_DIR}/<command>.<format>.")
    parser.add_argument("--format", choices=[f.value for f in OutputFormat], default=OutputFormat.CSV.value)
    parser.add_argument("--sweep-alpha", type=_float_list, default=[],
                        help="Comma-separated coupling strengths for sweep.")
    parser.add_argument("--sweep-n", type=_int_list, default=[],
                        help="Comma-separated bath sizes for sweep.")
    parser.add_argument("--workers", type=int, default=settings.DEFAULT_WORKERS,
                        help="Worker processes for sweep cells.")
    parser.add_argument("--seed", type=int, default=0, help="Seed of the randomized verification suites.")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """RunConfig from parsed flags; validation errors name the offending flag"""
    try:
        params = BathParams(N=args.n_bath, alpha=args.alpha, omega0=args.omega0)
        return RunConfig(
            command=args.command, params=params, t_max=args.t_max, dt=args.dt,
            initial_state=args.initial, pair=args.pair, output=args.out, format=args.format,
            sweep_alpha=args.sweep_alpha, sweep_n=args.sweep_n, workers=args.workers, seed=args.seed,
        )
    except ValidationError as e:
        problems = []
        for error in e.errors():
            fields = [str(part) for part in error["loc"] if str(part) in FLAGS]
            where = FLAGS[fields[-1]] if fields else "config"
            problems.append(f"{where}: {error['msg']}")
        raise InvalidParameters("; ".join(problems)) from e


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=args.log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        config = config_from_args(args)
        result = run(config)
    except InvalidParameters as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except SpinBathError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_FAILED

    print(json.dumps({"command": result.command.value, "exit_code": result.exit_code,
                      "outputs": result.outputs, "summary": result.summary}, sort_keys=True))
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
