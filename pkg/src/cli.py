"""
Command-line entry point.

    python -m src.cli fit-curve --seed 3 --iterations 500 --out runs/low
    python -m src.cli dlp --config configs/dlp.json --threads 4

Precedence: built-in defaults < --config file < command-line flags.
Exit codes: 0 success, 2 configuration or input error, 3 numeric failure.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

from pydantic import ValidationError

from .config.log_handler import RunLogHandler
from .config.logging_config import setup_logging
from .execution.orchestrator import ExperimentOrchestrator
from .models.config import RunConfig
from .models.errors import ConfigurationError, ConfigValidationException, ErrorReport, OutputValidationException
from .utils.parallel import set_max_workers

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

EXPERIMENTS = {
    "fit-curve": "Train the curve ansatz on a low/mid/high-frequency target and track per-frequency errors",
    "spectrum": "Fourier coefficients of the circuit output at random parameters",
    "qntk-compare": "Compare measured residual decay with the tangent-kernel prediction",
    "iris": "Binary Iris classification with projected-spectrum diagnostics",
    "dlp": "Kernel-alignment training and SVM classification on the discrete-log task",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pqc-lab", description="Statevector experiments on data-reloading circuits")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name, help_text in EXPERIMENTS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="JSON run configuration")
        p.add_argument("--seed", type=int, default=None, help="Seed for initial parameters and dataset sampling")
        p.add_argument("--out", default=None, help="Output directory (default <output_dir>/<experiment>-seed<seed>)")
        p.add_argument("--threads", type=int, default=None, help="Worker threads for batched simulation")
        p.add_argument("--iterations", type=int, default=None, help="Gradient-descent iterations (alignment steps for dlp)")
        p.add_argument("--eta", type=float, default=None, help="Learning rate")
    return parser


def _key_line(text: str, key: Any) -> Optional[int]:
    needle = f'"{key}"'
    for lineno, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return lineno
    return None


def _load_config_file(path: str) -> Dict[str, Any]:
    report = ErrorReport()
    try:
        text = Path(path).read_text()
    except OSError as e:
        report.add(f"cannot read config file: {e}")
        raise ConfigValidationException(report)
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        report.add(f"invalid JSON: {e.msg}", line=e.lineno)
        raise ConfigValidationException(report)
    if not isinstance(payload, dict):
        report.add("config file must hold a JSON object", line=1)
        raise ConfigValidationException(report)
    payload["__source_text__"] = text
    return payload


def _merge(target: Dict[str, Any], section: str, key: str, value: Any) -> None:
    if value is not None:
        target.setdefault(section, {})[key] = value


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults < config file < flags. Validation problems are reported all at once."""
    raw: Dict[str, Any] = _load_config_file(args.config) if args.config else {}
    source = raw.pop("__source_text__", "")

    file_experiment = raw.get("experiment")
    if file_experiment is not None and file_experiment != args.experiment:
        report = ErrorReport()
        report.add(f"config file is for '{file_experiment}', not '{args.experiment}'",
                   line=_key_line(source, "experiment"), field="experiment")
        raise ConfigValidationException(report)
    raw["experiment"] = args.experiment

    _merge(raw, "train", "seed", args.seed)
    if args.seed is not None:
        _merge(raw, "dlp", "seed", args.seed)
    if args.experiment == "dlp":
        _merge(raw, "alignment", "steps", args.iterations)
        _merge(raw, "alignment", "learning_rate", args.eta)
    else:
        _merge(raw, "train", "iterations", args.iterations)
        _merge(raw, "train", "learning_rate", args.eta)
    if args.threads is not None:
        raw["threads"] = args.threads

    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        report = ErrorReport()
        for err in e.errors():
            loc = ".".join(str(part) for part in err["loc"])
            leaf = next((part for part in reversed(err["loc"]) if isinstance(part, str)), None)
            report.add(err["msg"], line=_key_line(source, leaf) if leaf else None, field=loc or None)
        raise ConfigValidationException(report)


def _out_dir(config: RunConfig, out: Optional[str]) -> Path:
    if out:
        return Path(out)
    return Path(config.output_dir) / f"{config.experiment}-seed{config.train.seed}"


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    try:
        config = resolve_config(args)
    except ConfigValidationException as e:
        for message in e.errors.errors:
            print(f"config error: {message}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = _out_dir(config, args.out)
    setup_logging(log_dir=str(out_dir))
    capture = RunLogHandler()
    logging.getLogger().addHandler(capture)
    if config.threads is not None:
        set_max_workers(config.threads)

    try:
        manifest = ExperimentOrchestrator(config, out_dir, log_handler=capture).run()
    except (ArithmeticError, OutputValidationException) as e:
        logger.error(f"{config.experiment} failed: {e}")
        return EXIT_NUMERIC
    except (ConfigurationError, ValueError, LookupError, OSError) as e:
        logger.error(f"{config.experiment} rejected its input: {e}")
        return EXIT_CONFIG
    finally:
        logging.getLogger().removeHandler(capture)

    for key, value in manifest.metrics.items():
        logger.info(f"{key}: {value}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
