"""Command-line front end.

Subcommands: ``parse``, ``fidelity``, ``scan``, ``verify-eq5``, ``rabi``,
``echo``, ``estimate-error``, ``eseem-ratio``.  Every command supports
``--json`` (JSON artifact instead of the default CSV/text), ``--out``
(write to a file instead of stdout) and ``--quiet`` (suppress status
lines, which go to stderr).  Angles on the command line use the same
unit-suffixed literals as the DSL: ``1pi``, ``90deg``, ``1.2rad``.

An optional ``--config FILE`` reads ``key=value`` lines (same names as
the long flags, ``#`` comments allowed); explicit flags override file
values.  Identical configurations produce byte-identical outputs.

Exit codes: 0 success, 2 usage or domain error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from . import __version__
from .analysis import (
    EseemRatioSpec,
    bb1_fidelity,
    eseem_ratio,
    estimate_rotation_error,
    magic_refocus_angle,
    scan_order,
    verify_eq5_coefficients,
)
from .dsl import ParseError, format_program, parse_angle_literal, parse_program, program_to_ast
from .errors import DELTA_ZERO, EnsembleSpec, Gaussian, Uniform
from .simulator import (
    DEFAULT_DETUNING_NODES,
    DEFAULT_DETUNING_SPAN,
    Signal,
    echo_train,
    rabi_trace,
)

__all__ = ["main", "build_parser"]


def _angle(text: str) -> float:
    try:
        return parse_angle_literal(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _fmt_cell(value) -> str:
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        _status(args, f"wrote {args.out}")
    else:
        sys.stdout.write(text)


def _status(args, message: str) -> None:
    if not getattr(args, "quiet", False):
        print(message, file=sys.stderr)


def _csv_text(rows: list[dict]) -> str:
    if not rows:
        return "\n"
    header = list(rows[0].keys())
    lines = [",".join(header)]
    lines.extend(",".join(_fmt_cell(row[k]) for k in header) for row in rows)
    return "\n".join(lines) + "\n"


def _json_text(meta: dict, rows) -> str:
    return json.dumps({"meta": meta, "data": rows}, indent=2) + "\n"


def _meta(args, command: str, config: dict) -> dict:
    return {"tool": "spinpulse", "version": __version__, "command": command, "config": config}


def _emit_rows(args, command: str, config: dict, rows: list[dict]) -> None:
    if args.json:
        _emit(args, _json_text(_meta(args, command, config), rows))
    else:
        _emit(args, _csv_text(rows))


def _require(args, *names: str) -> None:
    # Flags that must arrive either on the command line or via --config.
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise ValueError(f"missing required option(s): {', '.join(missing)}")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_parse(args) -> int:
    with open(args.file, "r", encoding="utf-8") as fh:
        text = fh.read()
    program = parse_program(text, name=args.file)
    if args.ast or args.json:
        _emit(args, json.dumps(program_to_ast(program), indent=2) + "\n")
    else:
        _emit(args, format_program(program))
    return 0


def cmd_fidelity(args) -> int:
    _require(args, "theta")
    offsets = (args.dphi1, args.dphi2)
    if args.bb1:
        f = bb1_fidelity(args.theta, args.epsilon, offsets)
    else:
        if offsets != (0.0, 0.0):
            raise ValueError("--dphi1/--dphi2 apply to the composite sequence; add --bb1")
        f = _simple(args)
    config = {
        "theta_rad": args.theta,
        "epsilon": args.epsilon,
        "bb1": bool(args.bb1),
        "dphi1_rad": args.dphi1,
        "dphi2_rad": args.dphi2,
    }
    rows = [{"fidelity": f, "infidelity": 1.0 - f}]
    if args.json:
        _emit(args, _json_text(_meta(args, "fidelity", config), rows))
    else:
        _emit(args, f"F={f:.11e} 1-F={1.0 - f:.11e}\n")
    return 0


def _simple(args) -> float:
    from .su2 import RotationSpec, fidelity, rotation

    return fidelity(
        rotation(RotationSpec(args.theta, 0.0, 0.0)),
        rotation(RotationSpec(args.theta, 0.0, args.epsilon)),
    )


def cmd_scan(args) -> int:
    _require(args, "theta")
    scan, slope = scan_order(
        args.theta, (args.lo, args.hi), args.points, use_bb1=not args.simple
    )
    config = {
        "theta_rad": args.theta,
        "lo": args.lo,
        "hi": args.hi,
        "points": args.points,
        "bb1": not args.simple,
        "slope": slope,
    }
    rows = [{"epsilon": e, "infidelity": i} for e, i in scan.points]
    _emit_rows(args, "scan", config, rows)
    if slope is None:
        _status(args, "degenerate scan: all infidelities below 1e-15; no slope fitted")
    else:
        _status(args, f"fitted log-log slope = {slope:.4f}")
    return 0


def cmd_verify_eq5(args) -> int:
    report = verify_eq5_coefficients()
    config = {"epsilon": report.epsilon, "step_rad": report.step}
    rows = [
        {
            "term": term,
            "reference": ref,
            "fitted": fit,
            "rel_deviation": abs(fit - ref) / abs(ref),
        }
        for term, ref, fit in report.rows
    ]
    config["max_rel_deviation"] = report.max_rel_deviation
    _emit_rows(args, "verify-eq5", config, rows)
    _status(args, f"max relative deviation = {report.max_rel_deviation:.3e}")
    return 0


def _signal_rows(signal: Signal) -> list[dict]:
    xkey = f"{signal.axis_label}_{signal.axis_unit}"
    return [{xkey: x, signal.value_label: y} for x, y in signal.samples]


def cmd_rabi(args) -> int:
    _require(args, "sigma", "max", "step")
    ensemble = EnsembleSpec(
        epsilon_dist=Gaussian(args.mean, args.sigma),
        detuning_dist=DELTA_ZERO,
        nodes=args.nodes,
    )
    signal = rabi_trace(
        args.max,
        args.step,
        ensemble,
        use_bb1=args.bb1,
        mc_samples=args.mc_samples,
        mc_seed=args.seed,
    )
    config = {
        "sigma": args.sigma,
        "mean": args.mean,
        "max_rad": args.max,
        "step_rad": args.step,
        "bb1": bool(args.bb1),
        "nodes": args.nodes,
        "mc_samples": args.mc_samples,
        "seed": args.seed,
        "provenance": signal.provenance,
    }
    _emit_rows(args, "rabi", config, _signal_rows(signal))
    return 0


def cmd_echo(args) -> int:
    _require(args, "mode", "n")
    ensemble = None
    if args.span is not None:
        ensemble = EnsembleSpec(
            epsilon_dist=DELTA_ZERO,
            detuning_dist=Uniform(-args.span, args.span),
            nodes=args.nodes,
        )
    elif args.nodes != DEFAULT_DETUNING_NODES:
        span = DEFAULT_DETUNING_SPAN / args.tau
        ensemble = EnsembleSpec(
            epsilon_dist=DELTA_ZERO, detuning_dist=Uniform(-span, span), nodes=args.nodes
        )
    signal = echo_train(
        args.mode,
        args.n,
        args.epsilon,
        ensemble_detuning=ensemble,
        use_bb1=args.bb1,
        t2_envelope=args.t2,
        tau=args.tau,
        mc_samples=args.mc_samples,
        mc_seed=args.seed,
    )
    config = {
        "mode": args.mode,
        "n": args.n,
        "epsilon": args.epsilon,
        "bb1": bool(args.bb1),
        "tau_s": args.tau,
        "t2_s": args.t2,
        "span_rad_per_s": args.span,
        "nodes": args.nodes,
        "mc_samples": args.mc_samples,
        "seed": args.seed,
        "provenance": signal.provenance,
    }
    _emit_rows(args, "echo", config, _signal_rows(signal))
    return 0


def _read_signal_csv(path: str) -> Signal:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if len(lines) < 2:
        raise ValueError(f"{path}: expected a CSV header plus data rows")
    header = lines[0].split(",")
    if len(header) != 2:
        raise ValueError(f"{path}: expected two CSV columns, got {len(header)}")
    samples = []
    for ln in lines[1:]:
        cells = ln.split(",")
        if len(cells) != 2:
            raise ValueError(f"{path}: malformed CSV row {ln!r}")
        samples.append((float(cells[0]), float(cells[1])))
    name_unit = header[0].rsplit("_", 1)
    axis = name_unit[0] if len(name_unit) == 2 else header[0]
    unit = name_unit[1] if len(name_unit) == 2 else ""
    return Signal(
        axis_label=axis,
        axis_unit=unit,
        value_label=header[1],
        samples=samples,
        provenance={"source": path},
    )


def cmd_estimate_error(args) -> int:
    _require(args, "cp", "cpmg")
    cp = _read_signal_csv(args.cp)
    cpmg = _read_signal_csv(args.cpmg)
    eps_hat, residual = estimate_rotation_error(cp, cpmg, eps_max=args.eps_max)
    config = {"cp": args.cp, "cpmg": args.cpmg, "eps_max": args.eps_max}
    rows = [{"epsilon_hat": eps_hat, "residual": residual}]
    if args.json:
        _emit(args, _json_text(_meta(args, "estimate-error", config), rows))
    else:
        _emit(args, f"epsilon_hat={eps_hat:.11e} residual={residual:.11e}\n")
    return 0


def cmd_eseem_ratio(args) -> int:
    _require(args, "mode", "theta_eps")
    spec = EseemRatioSpec(mode=args.mode, theta_eps=args.theta_eps)
    ratio = eseem_ratio(spec)
    config = {"mode": args.mode, "theta_eps_rad": args.theta_eps}
    rows = [
        {
            "mode": args.mode,
            "theta_eps_rad": args.theta_eps,
            "ratio": ratio,
            "magic_angle_rad": magic_refocus_angle(),
        }
    ]
    if args.json:
        _emit(args, _json_text(_meta(args, "eseem-ratio", config), rows))
    else:
        _emit(args, f"ratio={ratio:.11e}\n")
    return 0


# ---------------------------------------------------------------------------
# Parser assembly
# ---------------------------------------------------------------------------


def _add_common(sub) -> None:
    sub.add_argument("--json", action="store_true", help="emit a JSON artifact")
    sub.add_argument("--out", default=None, help="write the artifact to this path")
    sub.add_argument("--quiet", action="store_true", help="suppress status lines")
    sub.add_argument("--config", default=None, help="key=value config file; flags override")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(
        prog="spinpulse",
        description="Composite-pulse spin-control simulation and verification.",
    )
    parser.add_argument("--version", action="version", version=f"spinpulse {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)
    registry = {}

    p = subs.add_parser("parse", help="parse a pulse-program file; print canonical text")
    p.add_argument("file", help="program file in the pulse DSL")
    p.add_argument("--ast", action="store_true", help="emit the JSON AST")
    _add_common(p)
    p.set_defaults(func=cmd_parse)
    registry["parse"] = p

    p = subs.add_parser("fidelity", help="fidelity of a simple or corrected rotation")
    p.add_argument("--theta", type=_angle, default=None, help="target angle (e.g. 1pi)")
    p.add_argument("--epsilon", type=float, default=0.0, help="fractional amplitude error")
    p.add_argument("--bb1", action="store_true", help="use the corrected four-pulse sequence")
    p.add_argument("--dphi1", type=_angle, default=0.0, help="offset on the first phase channel")
    p.add_argument("--dphi2", type=_angle, default=0.0, help="offset on the second phase channel")
    _add_common(p)
    p.set_defaults(func=cmd_fidelity)
    registry["fidelity"] = p

    p = subs.add_parser("scan", help="log-log infidelity-vs-error scan and slope")
    p.add_argument("--theta", type=_angle, default=None)
    p.add_argument("--lo", type=float, default=1e-2)
    p.add_argument("--hi", type=float, default=1e-1)
    p.add_argument("--points", type=_positive_int, default=9)
    p.add_argument("--simple", action="store_true", help="scan an uncorrected single pulse")
    _add_common(p)
    p.set_defaults(func=cmd_scan)
    registry["scan"] = p

    p = subs.add_parser("verify-eq5", help="extract phase-sensitivity coefficients numerically")
    _add_common(p)
    p.set_defaults(func=cmd_verify_eq5)
    registry["verify-eq5"] = p

    p = subs.add_parser("rabi", help="nutation trace over a Gaussian amplitude-error ensemble")
    p.add_argument("--sigma", type=float, default=None, help="Gaussian width of epsilon")
    p.add_argument("--mean", type=float, default=0.0, help="Gaussian mean of epsilon")
    p.add_argument("--max", type=_angle, default=None, help="largest nominal angle (e.g. 40pi)")
    p.add_argument("--step", type=_angle, default=None, help="angle step (e.g. 0.25pi)")
    p.add_argument("--bb1", action="store_true", help="decompose into corrected pi blocks")
    p.add_argument("--nodes", type=_positive_int, default=41, help="quadrature nodes")
    p.add_argument("--mc-samples", type=_positive_int, default=None, help="Monte Carlo cross-check")
    p.add_argument("--seed", type=int, default=0, help="Monte Carlo seed")
    _add_common(p)
    p.set_defaults(func=cmd_rabi)
    registry["rabi"] = p

    p = subs.add_parser("echo", help="CP/CPMG echo-train amplitudes")
    p.add_argument("--mode", choices=["cp", "cpmg"], default=None)
    p.add_argument("--n", type=_positive_int, default=None, help="number of refocusing cycles")
    p.add_argument("--epsilon", type=float, default=0.0, help="refocusing amplitude error")
    p.add_argument("--bb1", action="store_true", help="corrected refocusing pulses")
    p.add_argument("--tau", type=float, default=1.0, help="half echo spacing (s)")
    p.add_argument("--t2", type=float, default=None, help="optional T2 envelope constant (s)")
    p.add_argument("--span", type=float, default=None, help="detuning half-span (rad/s)")
    p.add_argument("--nodes", type=_positive_int, default=DEFAULT_DETUNING_NODES)
    p.add_argument("--mc-samples", type=_positive_int, default=None)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)
    p.set_defaults(func=cmd_echo)
    registry["echo"] = p

    p = subs.add_parser("estimate-error", help="fit the rotation error from CP/CPMG CSV files")
    p.add_argument("--cp", default=None, help="CSV produced by 'echo --mode cp'")
    p.add_argument("--cpmg", default=None, help="CSV produced by 'echo --mode cpmg'")
    p.add_argument("--eps-max", type=float, default=0.3)
    _add_common(p)
    p.set_defaults(func=cmd_estimate_error)
    registry["estimate-error"] = p

    p = subs.add_parser("eseem-ratio", help="modulation-component ratio for a refocusing pulse")
    p.add_argument("--mode", choices=["pi", "magic"], default=None)
    p.add_argument("--theta-eps", type=_angle, default=None, help="absolute angle error (e.g. 0.1rad)")
    _add_common(p)
    p.set_defaults(func=cmd_eseem_ratio)
    registry["eseem-ratio"] = p

    return parser, registry


def _load_config(path: str) -> dict:
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def _apply_config(subparser: argparse.ArgumentParser, values: dict) -> None:
    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, text in values.items():
        dest = key.replace("-", "_")
        action = actions.get(dest)
        if action is None:
            raise ValueError(f"unknown config key {key!r}")
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            defaults[dest] = text.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            try:
                defaults[dest] = action.type(text)
            except argparse.ArgumentTypeError as exc:
                raise ValueError(f"config key {key!r}: {exc}") from exc
        else:
            defaults[dest] = text
    subparser.set_defaults(**defaults)


def main(argv: Optional[list[str]] = None) -> int:
    parser, registry = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "config", None):
            _apply_config(registry[args.command], _load_config(args.config))
            args = parser.parse_args(argv)
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
