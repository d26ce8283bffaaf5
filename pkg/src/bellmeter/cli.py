"""Command-line surface: thin adapters from JSON files to library calls.

Every subcommand reads JSON (``-`` means stdin), calls the library, and
prints a JSON result on stdout with all floats at 17 significant digits.
Domain failures exit 1 with ``{"error": {...}}`` on stderr; usage errors
exit 2 via argparse.  The default tolerance is 1e-9, overridable by the
``BELLMETER_TOL`` environment variable and per-invocation by ``--tol``.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

from . import chsh, polytope, quantum, sim
from .behaviour import (
    SettingsDistribution,
    Tolerance,
    behaviour_from_jsonable,
    behaviour_to_jsonable,
    is_non_signalling,
    settings_from_jsonable,
    validate,
)
from .errors import BellmeterError, DomainError, StructureError
from .hvmodel import (
    classify,
    dilate,
    measures,
    model_from_jsonable,
    model_to_jsonable,
    validate_model,
)
from .jsonio import dump_json, parse_json

_DEFAULT_EPS = 1e-9


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise StructureError(f"cannot read {path}: {exc.strerror}") from exc


def _load_behaviour(path: str, tol: Tolerance):
    return behaviour_from_jsonable(parse_json(_read_text(path)), tol)


def _load_model(path: str):
    return model_from_jsonable(parse_json(_read_text(path)))


def _resolve_tolerance(args: argparse.Namespace) -> Tolerance:
    eps = getattr(args, "tol", None)
    if eps is None:
        env = os.environ.get("BELLMETER_TOL")
        if env is not None:
            try:
                eps = float(env)
            except ValueError:
                raise StructureError(
                    f"BELLMETER_TOL must be a float, got {env!r}"
                ) from None
    if eps is None:
        eps = _DEFAULT_EPS
    return Tolerance(eps=eps)


def _require_non_signalling(b, tol: Tolerance, context: str) -> None:
    report = validate(b, tol)
    if not report.valid:
        raise DomainError(f"{context}: behaviour fails validation: {report.violations[0]}")
    ok, witness = is_non_signalling(b, tol)
    if not ok:
        raise DomainError(f"{context}: behaviour is signalling: {witness}")


# ---------------------------------------------------------------------------
# Subcommand handlers.  Each returns the jsonable result object.
# ---------------------------------------------------------------------------


def _cmd_check(args, tol: Tolerance):
    b, _ = _load_behaviour(args.input, tol)
    report = validate(b, tol)
    ns, witness = (False, None)
    if report.valid:
        ns, witness = is_non_signalling(b, tol)
    return {
        "valid": report.valid,
        "non_signalling": ns,
        "violations": [
            {"kind": v.kind, "location": list(v.location), "magnitude": v.magnitude}
            for v in report.violations
        ],
        "signalling_witness": None
        if witness is None or ns
        else {
            "party": witness.party,
            "setting": witness.setting,
            "outcome": witness.outcome,
            "other_settings": list(witness.other_settings),
            "discrepancy": witness.discrepancy,
        },
    }


def _cmd_chsh(args, tol: Tolerance):
    b, _ = _load_behaviour(args.input, tol)
    report = validate(b, tol)
    if not report.valid:
        raise DomainError(f"behaviour fails validation: {report.violations[0]}")
    ns, _ = is_non_signalling(b, tol)
    r = chsh.chsh_report(b)
    return {
        "s_values": list(r.s_values),
        "s_max": r.s_max,
        "measure": r.measure,
        "non_signalling": ns,
    }


def _cmd_measure(args, tol: Tolerance):
    b, _ = _load_behaviour(args.input, tol)
    _require_non_signalling(b, tol, "measure")
    out: dict = {}
    if args.method in ("formula", "both"):
        r = chsh.chsh_report(b)
        out["s_values"] = list(r.s_values)
        out["s_max"] = r.s_max
        out["measure_formula"] = r.measure
    if args.method in ("lp", "both"):
        content = polytope.local_content_lp(b, tol)
        out["measure_lp"] = content.mu
    return out


def _cmd_decompose(args, tol: Tolerance):
    b, _ = _load_behaviour(args.input, tol)
    _require_non_signalling(b, tol, "decompose")
    if args.method == "pr-box":
        d = polytope.decompose_onto_pr_box(b, tol)
        return {
            "method": "pr-box",
            "p": d.p,
            "pr_box_index": d.pr_part.index,
            "local_part": behaviour_to_jsonable(d.local_part),
            "pr_box": behaviour_to_jsonable(d.pr_part.behaviour),
        }
    content = polytope.local_content_lp(b, tol)
    return {
        "method": "lp",
        "mu": content.mu,
        "weights": content.weights.tolist(),
        "remainder": None
        if content.remainder is None
        else behaviour_to_jsonable(content.remainder),
    }


def _cmd_dilate(args, tol: Tolerance):
    b, settings = _load_behaviour(args.input, tol)
    _require_non_signalling(b, tol, "dilate")
    if settings is None:
        settings = SettingsDistribution.uniform(b.num_settings_a, b.num_settings_b)
    model = dilate(b, settings, tol)
    return model_to_jsonable(model)


def _cmd_classify(args, tol: Tolerance):
    model = _load_model(args.input)
    report = validate_model(model, tol)
    if not report.valid:
        raise DomainError(f"model fails validation: {report.violations[0]}")
    cls = classify(model, tol)
    mm = measures(model, tol)
    return {
        "num_lambda": model.lambda_count,
        "locality_mass": mm.locality_mass,
        "freedom_mass": mm.freedom_mass,
        "local": len(cls.local),
        "nonlocal": len(cls.nonlocal_),
        "free": len(cls.free),
        "nonfree": len(cls.nonfree),
    }


def _parse_angles(text: str, what: str) -> tuple[quantum.MeasurementBasis, ...]:
    try:
        values = [float(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise StructureError(f"{what} must be comma-separated floats, got {text!r}")
    if not values:
        raise StructureError(f"{what} needs at least one angle")
    return tuple(quantum.MeasurementBasis(v) for v in values)


def _cmd_quantum(args, tol: Tolerance):
    state = quantum.TwoQubitPureState(args.theta)
    alice = _parse_angles(args.alice, "--alice")
    bob = _parse_angles(args.bob, "--bob")
    b = quantum.born_behaviour(state, alice, bob)
    return behaviour_to_jsonable(b)


def _cmd_chained(args, tol: Tolerance):
    analysis = quantum.chained_analysis(args.m)
    return {
        "m": analysis.m,
        "s_value": analysis.s_value,
        "s_sharp": analysis.s_sharp,
        "s_loc": analysis.s_loc,
        "bound_exact": analysis.bound,
        "bound_envelope": analysis.envelope,
        "behaviour": behaviour_to_jsonable(analysis.behaviour),
    }


def _settings_from_arg(arg: str, model) -> SettingsDistribution:
    if arg == "uniform":
        return SettingsDistribution.uniform(
            model.num_settings_a, model.num_settings_b
        )
    obj = parse_json(_read_text(arg))
    if isinstance(obj, dict) and "settings_distribution" in obj:
        obj = obj["settings_distribution"]
    return settings_from_jsonable(obj)


def _cmd_simulate(args, tol: Tolerance):
    model = _load_model(args.model)
    if args.settings is None:
        config = sim.SimConfig(trials=args.trials, seed=args.seed)
    else:
        config = sim.SimConfig(
            trials=args.trials,
            seed=args.seed,
            settings_source="external",
            external_settings=_settings_from_arg(args.settings, model),
        )
    result = sim.run(model, config, tol)
    empirical = result.empirical_table()
    jsonable_empirical = [
        [
            [[None if math.isnan(p) else p for p in row] for row in cell]
            for cell in line
        ]
        for line in empirical.tolist()
    ]
    return {
        "trials": result.trials,
        "seed": result.seed,
        "first_trial": result.first_trial,
        "counts": result.counts.tolist(),
        "setting_counts": result.setting_counts.tolist(),
        "local_trials": result.local_trials,
        "free_trials": result.free_trials,
        "empirical": jsonable_empirical,
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bellmeter",
        description="Quantify how much locality or free choice a behaviour leaves intact.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name: str, handler, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(handler=handler)
        p.add_argument(
            "--tol",
            type=float,
            default=None,
            help="tolerance override (default: BELLMETER_TOL or 1e-9)",
        )
        return p

    p = add("check", _cmd_check, "validate a behaviour file and test non-signalling")
    p.add_argument("input", help="behaviour JSON path, or - for stdin")

    p = add("chsh", _cmd_chsh, "print the four CHSH values, S_max and the measure")
    p.add_argument("input", help="behaviour JSON path, or - for stdin")

    p = add("measure", _cmd_measure, "largest local (= free) mass of a behaviour")
    p.add_argument("input", help="behaviour JSON path, or - for stdin")
    p.add_argument(
        "--method",
        choices=("formula", "lp", "both"),
        default="both",
        help="closed form from S_max, linear program, or both (default)",
    )

    p = add("decompose", _cmd_decompose, "split a behaviour into local + extremal parts")
    p.add_argument("input", help="behaviour JSON path, or - for stdin")
    p.add_argument(
        "--method",
        choices=("pr-box", "lp"),
        default="pr-box",
        help="two-term PR-box split (default) or LP vertex weights",
    )

    p = add("dilate", _cmd_dilate, "build a fully local hidden-variable model")
    p.add_argument(
        "input",
        help="behaviour JSON path (optional settings_distribution key), or - for stdin",
    )

    p = add("classify", _cmd_classify, "report local/free mass of a model")
    p.add_argument("input", help="model JSON path, or - for stdin")

    p = add("quantum", _cmd_quantum, "behaviour of a two-qubit state under x-z measurements")
    p.add_argument("--theta", type=float, required=True, help="Schmidt angle in [0, pi/2]")
    p.add_argument("--alice", required=True, help="comma-separated ket angles")
    p.add_argument("--bob", required=True, help="comma-separated ket angles")

    p = add("chained", _cmd_chained, "chained scenario on the maximally entangled state")
    p.add_argument("--m", type=int, required=True, help="number of settings per party (>= 2)")

    p = add("simulate", _cmd_simulate, "Monte Carlo run of a hidden-variable model")
    p.add_argument("--model", required=True, help="model JSON path, or - for stdin")
    p.add_argument("--trials", type=int, required=True, help="number of trials")
    p.add_argument("--seed", type=int, required=True, help="64-bit master seed")
    p.add_argument(
        "--settings",
        default=None,
        help="external settings source: 'uniform' or a JSON file "
        "(default: draw from the model itself)",
    )

    return parser


def dispatch(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        tol = _resolve_tolerance(args)
        result = args.handler(args, tol)
    except BellmeterError as exc:
        payload = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        print(dump_json(payload), file=sys.stderr)
        return 1
    print(dump_json(result))
    return 0


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
