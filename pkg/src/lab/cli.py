"""
Command line interface

    run_lab.py validate
    run_lab.py integrate --config cfg.json -T 50 --tol 1e-10
    run_lab.py conjugate-scan --model data/models/flat_constant_b.json --samples 100 -T 10 --control
    run_lab.py sigma --model data/models/conformal_eps03_n3.json --grid 16 --sphere 6
    run_lab.py green-limit --model data/models/flat_free.json --times 10 20 40
    run_lab.py decompose --model data/models/flat_exact.json

Exit codes: 0 success, 1 experiment or validation failure, 2 configuration error.
"""
import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from ..storage.writers import dumps_json
from ..utils.errors import ConfigInvalid, TorusLabError
from ..utils.logger import get_logger, set_verbosity
from .runner import ExperimentFailed, ExperimentRunner
from .schemas import parse_config

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2

# argparse dest -> config field
OVERRIDES = {
    "model": "model", "out": "output_dir", "seed": "seed", "T": "T", "tol": "tol",
    "method": "method", "formulation": "formulation", "q0": "initial_q", "p0": "initial_p",
    "samples_out": "samples_out", "samples": "samples", "tmax": "t_max", "control": "control",
    "traces": "dump_traces", "workers": "workers", "grid": "grid", "sphere": "sphere", "times": "times",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Torus Lab: twisted geodesic flows on the n-torus")
    subparsers = parser.add_subparsers(dest="kind", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment configuration file (JSON)")
    common.add_argument("--model", help="model definition file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="seed for initial-condition sampling")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    flow = argparse.ArgumentParser(add_help=False)
    flow.add_argument("-T", type=float, dest="T", help="integration time")
    flow.add_argument("--tol", type=float, help="integrator tolerance")
    flow.add_argument("--method", choices=["DOP853", "RK45", "midpoint"], help="integrator")
    flow.add_argument("--q0", type=float, nargs="+", help="initial position")
    flow.add_argument("--p0", type=float, nargs="+", help="initial momentum (rescaled onto H = 1/2)")

    subparsers.add_parser("validate", parents=[common], help="run the invariant suite")

    integrate = subparsers.add_parser("integrate", parents=[common, flow], help="integrate one orbit")
    integrate.add_argument("--formulation", choices=["gauged", "twisted"])
    integrate.add_argument("--samples-out", type=int, dest="samples_out", help="output samples")

    scan = subparsers.add_parser("conjugate-scan", parents=[common], help="first conjugate times over sampled orbits")
    scan.add_argument("--samples", type=int, help="number of initial conditions")
    scan.add_argument("-T", "--tmax", type=float, dest="tmax", help="scan horizon Tmax")
    scan.add_argument("--tol", type=float, help="integrator tolerance")
    scan.add_argument("--method", choices=["DOP853", "RK45", "midpoint"], help="integrator")
    scan.add_argument("--control", action="store_true", default=None, help="rerun with the field removed")
    scan.add_argument("--traces", action="store_true", default=None, help="dump detector traces")
    scan.add_argument("--workers", type=int, help="worker processes")

    sigma = subparsers.add_parser("sigma", parents=[common], help="level-set averages and closed form")
    sigma.add_argument("--grid", type=int, help="torus grid points per axis")
    sigma.add_argument("--sphere", type=int, help="sphere rule order (points for n = 2)")

    green = subparsers.add_parser("green-limit", parents=[common, flow], help="finite-time stable Lagrangian field")
    green.add_argument("--times", type=float, nargs="+", help="increasing horizons T_1 < ... < T_m")

    subparsers.add_parser("decompose", parents=[common], help="gauge decomposition of the magnetic field")
    return parser


def load_config_file(path: str) -> Dict[str, Any]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise ConfigInvalid([{"field": "config", "message": f"cannot read {path}: {e}"}]) from e
    if not isinstance(data, dict):
        raise ConfigInvalid([{"field": "config", "message": "configuration must be a JSON object"}])
    return data


def config_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    data = load_config_file(args.config) if args.config else {}
    if data.get("kind", args.kind) != args.kind:
        raise ConfigInvalid([{"field": "kind", "message": f"config is for '{data['kind']}', not '{args.kind}'"}])
    data["kind"] = args.kind
    for dest, field in OVERRIDES.items():
        value = getattr(args, dest, None)
        if value is not None:
            data[field] = value
    return data


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    set_verbosity(args.verbose)
    logger = get_logger("cli")

    try:
        config = parse_config(config_from_args(args))
        record = ExperimentRunner().run(config)
    except ConfigInvalid as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        print(dumps_json(e.diagnostics), file=sys.stderr, end="")
        return EXIT_CONFIG
    except ExperimentFailed as e:
        print(dumps_json(e.record.summary), end="")
        print(f"Run {e.record.run_id} failed", file=sys.stderr)
        return EXIT_FAILED
    except (TorusLabError, ValueError) as e:
        logger.error(f"{args.kind} failed: {e}")
        return EXIT_FAILED
    except KeyboardInterrupt:
        print("\nInterrupted", file=sys.stderr)
        return EXIT_FAILED

    print(dumps_json(record.summary), end="")
    print(f"Run {record.run_id} written to {Path(config.output_dir) / record.run_id}")
    return EXIT_OK

