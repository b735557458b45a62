"""Command-line front end: simulate, fit, select and mc subcommands.

Exit codes: 0 success, 1 runtime or model error, 2 usage error.  All payload
output is deterministic given the flags; summaries and human-readable echoes
go to stderr when a payload occupies stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

import numpy as np

from .errors import CountselError
from .model import EmissionFamily, Ingarch, Knot, ModelSpec, ParamVector
from .montecarlo import (
    DESK_REPLICATIONS,
    FULL_REPLICATIONS,
    DEFAULT_BASE_SEED,
    ExperimentConfig,
    preset,
    run_experiment,
)
from .qmle import FitOptions, fit, sandwich
from .select import Penalty, enumerate_ingarch, enumerate_knots, select_with_penalties
from .simulate import DEFAULT_BURN_IN, SimConfig, read_csv, simulate, write_csv
from .errors import DomainError, SingularInformation

__all__ = ["main"]


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {v}")
    return v


def _parse_family(text: str) -> EmissionFamily:
    t = text.strip().lower()
    if t == "poisson":
        return EmissionFamily.poisson()
    if t == "bernoulli":
        return EmissionFamily.bernoulli()
    for prefix in ("nb:", "negbinomial:"):
        if t.startswith(prefix):
            return EmissionFamily.negbinomial(int(t[len(prefix):]))
    raise argparse.ArgumentTypeError(
        f"unknown family {text!r}; use poisson, bernoulli or nb:R"
    )


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _parse_float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_model_flags(sp: argparse.ArgumentParser, with_theta: bool) -> None:
    sp.add_argument("--family", type=_parse_family, required=True,
                    help="emission family: poisson, bernoulli or nb:R")
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--ingarch", type=_parse_int_list, metavar="P,Q",
                       help="INGARCH orders, e.g. 2,0")
    group.add_argument("--knots", type=_parse_int_list, metavar="XI1,XI2,...",
                       help="knot locations for the piecewise-linear form")
    sp.add_argument("--no-feedback", action="store_true",
                    help="drop the mean-feedback term of the knot form")
    if with_theta:
        sp.add_argument("--theta", type=_parse_float_list, required=True,
                        help="parameters in layout order: intercept, lags, feedback, knots")


def _resolve_spec(parser: argparse.ArgumentParser, args) -> ModelSpec:
    if args.ingarch is not None:
        if len(args.ingarch) != 2 or min(args.ingarch) < 0:
            parser.error("--ingarch expects P,Q with non-negative integers")
        if args.no_feedback:
            parser.error("--no-feedback only applies to --knots")
        form = Ingarch(*args.ingarch)
    else:
        form = Knot(args.knots, with_feedback=not args.no_feedback)
    try:
        return ModelSpec(args.family, form)
    except CountselError as exc:
        parser.error(str(exc))


def _resolve_theta(parser: argparse.ArgumentParser, spec: ModelSpec, values) -> ParamVector:
    try:
        return ParamVector.from_array(spec.form, np.asarray(values, dtype=float))
    except CountselError as exc:
        parser.error(str(exc))


def _parse_penalties(parser: argparse.ArgumentParser, items) -> list[Penalty]:
    texts = []
    for item in items or ["logn"]:
        texts.extend(t for t in item.split(",") if t)
    try:
        return [Penalty.parse(t) for t in texts]
    except CountselError as exc:
        parser.error(str(exc))


def _check_output_path(parser: argparse.ArgumentParser, path: Optional[str]) -> None:
    # fail on an unwritable destination before any work starts
    if path is None:
        return
    parent = os.path.dirname(os.path.abspath(path)) or "."
    if not os.path.isdir(parent):
        parser.error(f"output directory does not exist: {parent}")


def _write_payload(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
            if not text.endswith("\n"):
                fh.write("\n")
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _echo_equation(result) -> str:
    """Fitted conditional-mean equation with standard errors beneath."""
    theta = result.theta_hat.to_array()
    se = result.sandwich.std_errors if result.sandwich is not None else None
    spec = result.spec
    terms = [("", f"{theta[0]:.4f}")]
    if isinstance(spec.form, Ingarch):
        for i in range(spec.form.p):
            terms.append((f" Y_t-{i+1}", f"{theta[1 + i]:.4f}"))
        for j in range(spec.form.q):
            terms.append((f" lam_t-{j+1}", f"{theta[1 + spec.form.p + j]:.4f}"))
    else:
        terms.append((" Y_t-1", f"{theta[1]:.4f}"))
        nfb = 1 if spec.form.with_feedback else 0
        if nfb:
            terms.append((" lam_t-1", f"{theta[2]:.4f}"))
        for k, xi in enumerate(spec.form.knots):
            terms.append((f" (Y_t-1 - {xi})^+", f"{theta[2 + nfb + k]:.4f}"))
    head = "E(Y_t | F_t-1) = "
    line1 = head
    line2 = " " * len(head)
    for idx, (suffix, coef) in enumerate(terms):
        line1 += "" if idx == 0 else " + "
        col = len(line1)
        line1 += coef + suffix
        if se is not None:
            line2 = line2.ljust(col) + f"({se[idx]:.4f})"
    if se is None:
        return line1
    return line1 + "\n" + line2


def cmd_simulate(parser, args) -> int:
    _check_output_path(parser, args.output)
    spec = _resolve_spec(parser, args)
    theta = _resolve_theta(parser, spec, args.theta)
    cfg = SimConfig(n=args.n, burn_in=args.burn_in, seed=args.seed)
    y = simulate(spec, theta, cfg)
    if args.output:
        write_csv(y, args.output, header=args.header)
    else:
        for v in y:
            sys.stdout.write(f"{int(v)}\n")
    summary = f"n={len(y)} mean={y.mean():.6f} variance={y.var():.6f} max={int(y.max())}"
    stream = sys.stdout if args.output else sys.stderr
    stream.write(summary + "\n")
    return 0


def cmd_fit(parser, args) -> int:
    _check_output_path(parser, args.output)
    spec = _resolve_spec(parser, args)
    y = read_csv(args.input)
    opts = FitOptions(n_starts=args.starts)
    result = fit(spec, y, opts)
    if not args.no_sandwich:
        try:
            result = sandwich(spec, result, y)
        except (SingularInformation, DomainError) as exc:
            sys.stderr.write(f"countsel: no standard errors: {exc}\n")
    payload = json.dumps(result.to_json(), indent=2, sort_keys=True)
    _write_payload(payload, args.output)
    echo = _echo_equation(result)
    stream = sys.stderr if not args.output else sys.stdout
    stream.write(echo + "\n")
    return 0


def _build_collection(parser, args):
    if args.pmax is not None or args.qmax is not None:
        if args.pmax is None or args.qmax is None:
            parser.error("--pmax and --qmax must be given together")
        if args.kmax is not None or args.knot_candidates is not None:
            parser.error("give either --pmax/--qmax or --kmax/--knot-candidates")
        return enumerate_ingarch(args.family, args.pmax, args.qmax)
    if args.kmax is None or args.knot_candidates is None:
        parser.error("give either --pmax/--qmax or --kmax/--knot-candidates")
    if args.family.kind != "negbinomial":
        parser.error("knot collections require --family nb:R")
    return enumerate_knots(args.family.r, args.kmax, args.knot_candidates)


def cmd_select(parser, args) -> int:
    _check_output_path(parser, args.output)
    y = read_csv(args.input)
    collection = _build_collection(parser, args)
    penalties = _parse_penalties(parser, args.penalty)
    results = select_with_penalties(collection, y, penalties, FitOptions(n_starts=args.starts))
    if args.format == "table":
        payload = "\n\n".join(r.to_text() for r in results)
    elif args.format == "csv":
        lines = ["penalty,model,dim,loglik,criterion,chosen"]
        for r in results:
            for i, row in enumerate(r.table):
                ll = "" if row.failed else f"{row.loglik:.6f}"
                cr = "inf" if row.failed else f"{row.criterion:.6f}"
                lines.append(
                    f"{r.penalty.label},{row.model.label},{row.dim},{ll},{cr},{int(i == r.chosen)}"
                )
        payload = "\n".join(lines)
    else:
        doc = [r.to_json() for r in results]
        payload = json.dumps(doc[0] if len(doc) == 1 else {"selections": doc}, indent=2, sort_keys=True)
    _write_payload(payload, args.output)
    for r in results:
        sys.stderr.write(f"chosen under {r.penalty.label}: {r.chosen_row.model.label}\n")
    return 0


def _read_config_file(parser, path) -> dict:
    out = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    parser.error(f"{path}:{lineno}: expected key=value")
                key, _, value = line.partition("=")
                out[key.strip()] = value.strip()
    except OSError as exc:
        parser.error(str(exc))
    return out


def cmd_mc(parser, args) -> int:
    _check_output_path(parser, args.output)
    conf = _read_config_file(parser, args.config) if args.config else {}
    preset_name = args.preset or conf.get("preset")
    if not preset_name:
        parser.error("an experiment preset is required (--preset or preset= in --config)")
    truth_spec, truth_theta, collection = preset(preset_name)

    def pick(flag_value, key, cast):
        if flag_value is not None:
            return flag_value
        if key in conf:
            try:
                return cast(conf[key])
            except (ValueError, argparse.ArgumentTypeError) as exc:
                parser.error(f"config field {key!r}: {exc}")
        return None

    sizes = pick(args.sizes, "sizes", _parse_int_list) or (500, 1000, 2000)
    replications = pick(args.replications, "replications", int)
    full = args.full or conf.get("full", "").lower() in ("1", "true", "yes")
    if replications is None:
        replications = FULL_REPLICATIONS if full else DESK_REPLICATIONS
    seed = pick(args.seed, "seed", int)
    if seed is None:
        seed = DEFAULT_BASE_SEED
    penalty_items = args.penalty or ([conf["penalties"]] if "penalties" in conf else None)
    penalties = _parse_penalties(parser, penalty_items)
    if min(sizes) < 1 or replications < 1:
        parser.error("sizes and replications must be positive")

    cfg = ExperimentConfig(
        truth_spec=truth_spec,
        truth_theta=truth_theta,
        collection=collection,
        penalties=tuple(penalties),
        sample_sizes=tuple(sizes),
        replications=replications,
        base_seed=seed,
    )
    table = run_experiment(cfg)
    payload = table.to_text() if args.format == "table" else table.serialize()
    _write_payload(payload, args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="countsel",
        description="Count time series: simulation, quasi-likelihood fitting and penalized model selection",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="simulate a trajectory and write it as CSV")
    _add_model_flags(sp, with_theta=True)
    sp.add_argument("--n", type=_positive_int, required=True, help="kept length")
    sp.add_argument("--burn-in", type=_nonneg_int, default=DEFAULT_BURN_IN)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--header", action="store_true", help="write a single 'y' header line")
    sp.add_argument("-o", "--output", help="output CSV path (default: stdout)")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("fit", help="fit one model to a CSV series")
    _add_model_flags(sp, with_theta=False)
    sp.add_argument("--input", required=True, help="CSV with one count per line")
    sp.add_argument("--starts", type=_positive_int, default=5, help="number of optimizer starts")
    sp.add_argument("--no-sandwich", action="store_true", help="skip standard errors")
    sp.add_argument("-o", "--output", help="output JSON path (default: stdout)")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("select", help="penalized selection over a model collection")
    sp.add_argument("--input", required=True)
    sp.add_argument("--family", type=_parse_family, required=True)
    sp.add_argument("--pmax", type=_nonneg_int)
    sp.add_argument("--qmax", type=_nonneg_int)
    sp.add_argument("--kmax", type=_nonneg_int)
    sp.add_argument("--knot-candidates", type=_parse_int_list, metavar="XI1,XI2,...")
    sp.add_argument("--penalty", action="append", help="logn or pow:DELTA; repeatable")
    sp.add_argument("--starts", type=_positive_int, default=5)
    sp.add_argument("--format", choices=("json", "table", "csv"), default="json")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_select)

    sp = sub.add_parser("mc", help="Monte Carlo selection-frequency experiment")
    sp.add_argument("--preset", help="model-a|model-b|model-c|model-d|knots-r1|knots-r8")
    sp.add_argument("--config", help="key=value config file (preset, sizes, replications, penalties, seed, full)")
    sp.add_argument("--sizes", type=_parse_int_list, metavar="N1,N2,...")
    sp.add_argument("--replications", type=_positive_int)
    sp.add_argument("--penalty", action="append", help="logn or pow:DELTA; repeatable")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--full", action="store_true", help="use the 100-replication mode")
    sp.add_argument("--format", choices=("json", "table"), default="json")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_mc)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(parser, args)
    except CountselError as exc:
        sys.stderr.write(f"countsel: error: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"countsel: error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
