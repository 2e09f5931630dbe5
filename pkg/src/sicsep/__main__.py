"""sicsep command-line entrypoint.

Usage:
    sicsep validate-povm --povm gsic3:0.01       # Check POVM algebra (exit 3 on failure)
    sicsep detect --named example1_rho           # Scan every canonical partition
    sicsep detect --state rho.json --partition "A|(B|C)" --mode marginal
    sicsep sweep --spec sweep.json --out grid.csv
    sicsep reproduce-example 4 --out results/
    sicsep --version

Exit codes: 0 success or INCONCLUSIVE, 2 ENTANGLED, 3 POVM validation failure,
1 any error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, NoReturn

from pydantic import ValidationError

from sicsep.config import RunConfig, load_run_config
from sicsep.criteria import evaluate, scan
from sicsep.errors import DocumentError, PovmError, SicsepError
from sicsep.logging import bind_run_context, clear_logging_context, configure_logging, get_logger
from sicsep.models import CorrelationMode, Verdict
from sicsep.partitions import parse_partition
from sicsep.povm import (
    VALIDATION_TOLERANCE,
    misprinted_gsic_qubit,
    renormalize,
    resolve_povm,
    resolve_povms,
    save_povm,
    validate,
)
from sicsep.reproduce import ReproduceConfig, run_example
from sicsep.states import DensityState, build_named_state, load_state
from sicsep.sweep import (
    SweepAxis,
    SweepSpec,
    load_sweep_spec,
    render_csv,
    run_sweep,
    write_sweep_csv,
)
from sicsep.tensor import Functional

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_ENTANGLED = 2
EXIT_VALIDATION_FAILED = 3

logger = get_logger(__name__)


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit 1 so that 2 stays reserved for ENTANGLED."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        _print_error({"error_code": "USAGE", "error": message, "details": {}})
        sys.exit(EXIT_ERROR)


def _print_json(payload: dict[str, Any]) -> None:
    print(json.dumps(payload, indent=2))


def _print_error(payload: dict[str, Any]) -> None:
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)


def _parse_assignments(items: list[str] | None, flag: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise SicsepError(f"{flag} expects key=value, got {item!r}")
        values[key.strip()] = value.strip()
    return values


def _parse_params(items: list[str] | None) -> dict[str, float]:
    params: dict[str, float] = {}
    for key, raw in _parse_assignments(items, "--param").items():
        try:
            params[key] = float(raw)
        except ValueError as exc:
            raise SicsepError(f"--param {key} needs a number, got {raw!r}") from exc
    return params


def _parse_axis(text: str) -> SweepAxis:
    """``name=start:stop:step``, with a trailing ``:nozero`` to drop 0."""
    name, sep, body = text.partition("=")
    parts = body.split(":")
    if not sep or len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] != "nozero"):
        raise SicsepError(f"--axis expects name=start:stop:step[:nozero], got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts[:3])
    except ValueError as exc:
        raise SicsepError(f"--axis has a non-numeric bound in {text!r}") from exc
    return SweepAxis(
        name=name.strip(), start=start, stop=stop, step=step, exclude_zero=len(parts) == 4
    )


def _add_criterion_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--povm", default=None, help="sic2 | gsic2:<t> | gsic3:<t> | file:<path>")
    parser.add_argument(
        "--mode", choices=[m.value for m in CorrelationMode], default=None, help="Construction"
    )
    parser.add_argument("--partition", default=None, help='Partition tree, e.g. "A|(B|C)"')
    parser.add_argument(
        "--conjugate-assignment", default=None, help="Pattern over M/C, e.g. MCM (GSIC only)"
    )
    parser.add_argument(
        "--functional", choices=[f.value for f in Functional], default=None, help="Functional"
    )
    parser.add_argument(
        "--normalization", choices=["auto", "povm", "renormalized"], default=None
    )
    parser.add_argument("--t", type=float, default=None, help="GSIC family parameter")
    parser.add_argument(
        "--extended-range", action="store_true", help="Admit |t| up to the PSD boundary"
    )
    parser.add_argument("--workers", type=int, default=None, help="Thread pool size")
    parser.add_argument(
        "--tolerance", type=float, default=None, help="Verdict tolerance above the bound"
    )


def build_parser() -> argparse.ArgumentParser:
    from sicsep import __version__

    parser = _ArgumentParser(
        prog="sicsep",
        description="sicsep: SIC and GSIC POVM entanglement criteria",
    )
    parser.add_argument("--version", "-v", action="version", version=f"sicsep {__version__}")
    parser.add_argument("--config", type=Path, default=None, help="JSON config file")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING, ERROR")
    parser.add_argument(
        "--log-format", choices=["json", "console"], default="json", help="stderr log format"
    )
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    validate_cmd = commands.add_parser("validate-povm", help="Check POVM algebraic conditions")
    validate_cmd.add_argument("--povm", default=None, help="sic2 | gsic2:<t> | gsic3:<t> | file:")
    validate_cmd.add_argument(
        "--dim", type=int, default=None, help="Subsystem dimension (required for bare 'gsic')"
    )
    validate_cmd.add_argument("--t", type=float, default=None, help="GSIC family parameter")
    validate_cmd.add_argument(
        "--misprinted", action="store_true", help="Use the printed d=2 distinguished operator"
    )
    validate_cmd.add_argument("--renormalized", action="store_true", help="Validate scaled set")
    validate_cmd.add_argument("--extended-range", action="store_true")
    validate_cmd.add_argument(
        "--tolerance", type=float, default=VALIDATION_TOLERANCE, help="Check tolerance"
    )
    validate_cmd.add_argument("--out", type=Path, default=None, help="Write the POVM document")

    detect_cmd = commands.add_parser("detect", help="Evaluate the criteria on a state")
    source = detect_cmd.add_mutually_exclusive_group(required=True)
    source.add_argument("--state", type=Path, help="State document (JSON)")
    source.add_argument("--named", help="Named state family")
    detect_cmd.add_argument("--param", action="append", help="Family parameter k=v")
    _add_criterion_flags(detect_cmd)
    detect_cmd.add_argument("--out", type=Path, default=None, help="Also write the report here")

    sweep_cmd = commands.add_parser("sweep", help="Sweep family parameters into CSV")
    sweep_cmd.add_argument("--spec", type=Path, default=None, help="Sweep spec (JSON)")
    sweep_cmd.add_argument("--named", default=None, help="Named state family")
    sweep_cmd.add_argument("--param", action="append", help="Fixed parameter k=v")
    sweep_cmd.add_argument(
        "--axis", action="append", help="Swept axis name=start:stop:step[:nozero]"
    )
    _add_criterion_flags(sweep_cmd)
    sweep_cmd.add_argument("--out", type=Path, default=None, help="CSV path (default stdout)")

    reproduce_cmd = commands.add_parser("reproduce-example", help="Reproduce a worked example")
    reproduce_cmd.add_argument("example", type=int, choices=[1, 2, 3, 4])
    reproduce_cmd.add_argument("--out", type=Path, default=Path("results"), help="Output dir")
    reproduce_cmd.add_argument("--workers", type=int, default=None, help="Thread pool size")
    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    overrides = {
        "mode": getattr(args, "mode", None),
        "partition": getattr(args, "partition", None),
        "povm": getattr(args, "povm", None),
        "conjugate_assignment": getattr(args, "conjugate_assignment", None),
        "functional": getattr(args, "functional", None),
        "normalization": getattr(args, "normalization", None),
        "workers": getattr(args, "workers", None),
        "log_level": args.log_level,
    }
    if args.command in {"detect", "sweep"}:
        overrides["verdict_tolerance"] = args.tolerance
    return load_run_config(overrides, config_path=args.config)


def _command_validate(args: argparse.Namespace, config: RunConfig) -> int:
    if args.misprinted:
        if args.t is None:
            raise PovmError("--misprinted needs --t")
        povm = misprinted_gsic_qubit(args.t)
    else:
        povm = resolve_povm(config.povm, args.dim, t=args.t, extended=args.extended_range)
    if args.renormalized:
        povm = renormalize(povm)
    report = validate(povm, args.tolerance)
    if args.out is not None:
        save_povm(povm, args.out)
    _print_json(report.model_dump(mode="json"))
    return EXIT_OK if report.status == "pass" else EXIT_VALIDATION_FAILED


def _load_detect_state(args: argparse.Namespace, config: RunConfig) -> DensityState:
    if args.state is not None:
        if args.param:
            raise SicsepError("--param applies to --named families only")
        return load_state(args.state, tol=config.tolerance, psd_tol=config.psd_tolerance)
    return build_named_state(args.named, _parse_params(args.param))


def _command_detect(args: argparse.Namespace, config: RunConfig) -> int:
    rho = _load_detect_state(args, config)
    povms = resolve_povms(
        config.povm,
        rho.dims,
        conjugate_assignment=config.conjugate_assignment,
        normalization=config.normalization,
        t=args.t,
        extended=args.extended_range,
    )
    if config.partition:
        tree = parse_partition(config.partition, rho.n_subsystems)
        report = evaluate(
            rho,
            povms,
            tree,
            config.mode,
            functional=config.functional,
            verdict_tolerance=config.verdict_tolerance,
        )
        payload = report.model_dump(mode="json")
        verdict = report.verdict
    else:
        result = scan(
            rho,
            povms,
            config.mode,
            functional=config.functional,
            verdict_tolerance=config.verdict_tolerance,
            workers=config.workers,
        )
        payload = result.model_dump(mode="json")
        verdict = result.overall
    _print_json(payload)
    if args.out is not None:
        args.out.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return EXIT_ENTANGLED if verdict is Verdict.ENTANGLED else EXIT_OK


def _command_sweep(args: argparse.Namespace, config: RunConfig) -> int:
    if args.spec is not None:
        spec = load_sweep_spec(args.spec)
    else:
        if not args.named or not args.axis:
            raise SicsepError("sweep needs --spec or both --named and --axis")
        try:
            spec = SweepSpec(
                state=args.named,
                params=_parse_params(args.param),
                axes=[_parse_axis(item) for item in args.axis],
                povm=config.povm,
                conjugate_assignment=config.conjugate_assignment,
                normalization=config.normalization,
                extended=args.extended_range,
                t=args.t,
                partition=config.partition,
                mode=config.mode,
                functional=config.functional,
                verdict_tolerance=config.verdict_tolerance,
            )
        except ValidationError as exc:
            raise DocumentError(f"invalid sweep arguments: {exc}") from exc
    rows = run_sweep(spec, workers=config.workers)
    target = args.out or spec.output
    if target is None:
        sys.stdout.write(render_csv(rows, spec.fieldnames))
    else:
        write_sweep_csv(rows, spec.fieldnames, target)
    return EXIT_OK


def _command_reproduce(args: argparse.Namespace, config: RunConfig) -> int:
    summary = run_example(
        args.example,
        ReproduceConfig(
            out_dir=args.out,
            workers=config.workers,
            verdict_tolerance=config.verdict_tolerance,
            psd_tolerance=config.psd_tolerance,
        ),
    )
    if summary.status != "pass":
        failing = [a.model_dump(mode="json") for a in summary.assertions if not a.passed]
        _print_error({"error_code": "ASSERTION_FAILED", "error": "example", "details": failing})
        return EXIT_ERROR
    return EXIT_OK


def _run_label(args: argparse.Namespace) -> str:
    """Deterministic label for log context, derived from the command inputs."""
    if args.command == "reproduce-example":
        return f"example{args.example}"
    if args.command == "validate-povm":
        return "misprinted" if args.misprinted else (args.povm or "default")
    source = args.named or (args.state if args.command == "detect" else args.spec)
    return Path(source).stem if isinstance(source, Path) else str(source)


COMMANDS = {
    "validate-povm": _command_validate,
    "detect": _command_detect,
    "sweep": _command_sweep,
    "reproduce-example": _command_reproduce,
}


def main() -> None:
    """CLI entrypoint."""
    parser = build_parser()
    args = parser.parse_args()
    try:
        config = _run_config(args)
        configure_logging(config.log_level, json_output=args.log_format == "json")
        bind_run_context(command=args.command, run=_run_label(args))
        code = COMMANDS[args.command](args, config)
    except SicsepError as exc:
        _print_error(exc.to_payload())
        code = EXIT_ERROR
    finally:
        clear_logging_context()
    logger.debug("command_finished", command=args.command, exit_code=code)
    sys.exit(code)


if __name__ == "__main__":
    main()
