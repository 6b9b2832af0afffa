"""Command-line front end for the workbench.

Subcommands cover space validation, Lipschitz and free-space norms,
theorem hypothesis checks, family verification, the main pipeline, the
consolidated report, and one floating-point sampling command (everything
else is exact rational arithmetic).

Every report records the seed and is written atomically (temp file plus
rename); identical configuration and seed produce byte-identical JSON,
because keys are sorted and no timestamps are embedded.

Exit codes:
  0  all requested checks passed
  1  a verification failed (the report is still written)
  2  usage or configuration errors
  3  model definition errors (unknown model, missing tail data)
"""

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field
from typing import Optional

from .rational import ONE, format_rat, is_rational, parse_rat, rat
from .metric import (
    CATALOG_NAMES,
    ModelError,
    PreconditionError,
    StructureError,
    catalog,
    integer_line,
    power_line,
    space_from_json,
    truncate,
    validate,
)
from .lipfun import defect, lip_norm, lipfn, pointwise_sup, strong_pairs
from .freespace import (
    check_thm310,
    free_from_json,
    free_norm_flow,
    free_norm_lp,
    pairing,
)
from .embeddings import (
    BATTERY_RANDOM_COUNT,
    BATTERY_SEED,
    ConstructionError,
    DichotomyError,
    check_prop31,
    check_prop42,
    check_thm34,
    check_thm37,
    check_thm43,
    check_thm45,
    check_thm46,
    main_theorem_pipeline,
    report_json,
    standard_battery,
    standard_family,
    verify_isometry,
)

OUT_DIR_ENV = "LIPCHECK_OUT_DIR"

VERIFY_THEOREMS = (
    "prop23", "prop31", "thm34", "thm37", "prop42",
    "thm43", "thm45", "thm46", "thm51", "prop53", "thm57",
)
CHECK_THEOREMS = (
    "prop31", "thm34", "thm37", "prop42", "thm43", "thm45", "thm46", "thm310",
)
MODEL_NAMES = CATALOG_NAMES + ("integer_line", "power_line")

ANALYTIC_FUNCTIONS = {
    "x2-over-absx-plus-2": lambda x: x * x / (abs(x) + 2.0),
}


@dataclass
class RunConfig:
    command: str
    space: Optional[str] = None
    model: Optional[str] = None
    theorem: Optional[str] = None
    n: Optional[int] = None
    values: Optional[str] = None
    element: Optional[str] = None
    support: Optional[int] = None
    rand_count: int = BATTERY_RANDOM_COUNT
    seed: int = BATTERY_SEED
    out: Optional[str] = None
    fmt: str = "json"
    params: dict = field(default_factory=dict)
    function: str = "x2-over-absx-plus-2"
    resolution: int = 512
    horizon: int = 10 ** 6
    span: float = 1000.0


# ---------------------------------------------------------------------------
# Report plumbing


def _atomic_write(path: str, text: str) -> str:
    path = os.path.abspath(path)
    directory = os.path.dirname(path)
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".lipcheck-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_json(path: str, obj) -> str:
    return _atomic_write(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _markdown_lines(obj, indent=0):
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for key in sorted(obj):
            val = obj[key]
            if isinstance(val, (dict, list)):
                lines.append(f"{pad}- {key}:")
                lines.extend(_markdown_lines(val, indent + 1))
            else:
                lines.append(f"{pad}- {key}: {val}")
    elif isinstance(obj, list):
        for val in obj:
            if isinstance(val, (dict, list)):
                lines.append(f"{pad}-")
                lines.extend(_markdown_lines(val, indent + 1))
            else:
                lines.append(f"{pad}- {val}")
    else:
        lines.append(f"{pad}{obj}")
    return lines


def write_report_file(config: RunConfig, blob: dict, default_stem: str) -> str:
    ext = ".md" if config.fmt == "markdown" else ".json"
    if config.out:
        path = config.out
    else:
        path = os.path.join(
            os.environ.get(OUT_DIR_ENV, "."), default_stem + ext
        )
    if config.fmt == "markdown":
        text = f"# {default_stem}\n\n" + "\n".join(_markdown_lines(blob)) + "\n"
        return _atomic_write(path, text)
    return write_json(path, blob)


def _fmt(obj):
    """Rationals to canonical strings, recursively; leaves everything else."""
    if is_rational(obj):
        return format_rat(obj)
    if isinstance(obj, dict):
        return {str(k): _fmt(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_fmt(v) for v in obj]
    return obj


def _rat_entry(x):
    if isinstance(x, str):
        return parse_rat(x)
    return rat(x)


# ---------------------------------------------------------------------------
# Selectors


def load_model(name: str, params: dict):
    if name == "integer_line":
        if params:
            raise ModelError("integer_line takes no parameters")
        return integer_line()
    if name == "power_line":
        return power_line(**params)
    return catalog(name, **params)


def _require_n(config: RunConfig) -> int:
    if config.n is None:
        raise PreconditionError("--n is required for model-backed spaces")
    if config.n < 2:
        raise PreconditionError("--n must be at least 2")
    return config.n


def load_space(config: RunConfig):
    sel = config.space
    if sel is None:
        raise PreconditionError("--space is required")
    if sel.startswith("@") or sel.endswith(".json"):
        path = sel[1:] if sel.startswith("@") else sel
        with open(path, encoding="utf-8") as fh:
            return space_from_json(json.load(fh))
    return truncate(load_model(sel, config.params), _require_n(config))


# ---------------------------------------------------------------------------
# Command handlers, each returning the process exit code


def cmd_validate(config: RunConfig) -> int:
    space = load_space(config)
    rep = validate(space)
    blob = {
        "command": "validate",
        "space": space.name or config.space,
        "n_points": space.n_points,
        "seed": config.seed,
        "passed": rep.passed,
        "violations": rep.to_json()["violations"],
    }
    path = write_report_file(config, blob, "lipcheck-validate")
    print(f"validate {blob['space']}: {'pass' if rep.passed else 'FAIL'} -> {path}")
    return 0 if rep.passed else 1


def cmd_norm(config: RunConfig) -> int:
    space = load_space(config)
    if config.values is None:
        raise PreconditionError("--values is required")
    raw = json.loads(config.values)
    f = lipfn(space, [_rat_entry(x) for x in raw])
    value = lip_norm(f)
    blob = {
        "command": "norm",
        "space": space.name or config.space,
        "seed": config.seed,
        "lip_norm": format_rat(value),
        "attaining_pairs": [list(pq) for pq in strong_pairs(f)],
        "sup_at_base": format_rat(pointwise_sup(f, 0)),
        "defect_at_base": format_rat(defect(f, 0)),
    }
    path = write_report_file(config, blob, "lipcheck-norm")
    print(f"norm {blob['space']}: {blob['lip_norm']} -> {path}")
    return 0


def cmd_free_norm(config: RunConfig) -> int:
    space = load_space(config)
    if config.element is None:
        raise PreconditionError("--element is required")
    mu = free_from_json(json.loads(config.element), space)
    lp = free_norm_lp(mu)
    flow = free_norm_flow(mu)
    agree = lp.value == flow
    wit_norm = lip_norm(lp.witness)
    achieves = pairing(mu, lp.witness) == lp.value
    ok = agree and wit_norm <= ONE and achieves
    blob = {
        "command": "free-norm",
        "space": space.name or config.space,
        "seed": config.seed,
        "value": format_rat(lp.value),
        "flow_value": format_rat(flow),
        "routes_agree": agree,
        "dual_witness": [format_rat(v) for v in lp.witness.values],
        "witness_lip_norm": format_rat(wit_norm),
        "witness_achieves": achieves,
        "passed": ok,
    }
    path = write_report_file(config, blob, "lipcheck-free-norm")
    print(f"free-norm {blob['space']}: {blob['value']} "
          f"({'pass' if ok else 'FAIL'}) -> {path}")
    return 0 if ok else 1


def _disjoint_pairs(n_points: int):
    return tuple((r, r + 1) for r in range(1, n_points - 1, 2))


def run_check(theorem: str, model, N: int):
    """Run a hypothesis checker with its canonical anchor layout."""
    if theorem in ("prop31", "thm34", "thm37", "prop42"):
        space = truncate(model, N)
        if theorem == "prop31":
            pairs = _disjoint_pairs(space.n_points)
            return check_prop31(space, tuple(p for p, _ in pairs),
                                tuple(q for _, q in pairs))
        if theorem == "thm34":
            return check_thm34(space, _disjoint_pairs(space.n_points))
        if theorem == "thm37":
            return check_thm37(space, _disjoint_pairs(space.n_points))
        return check_prop42(space, tuple(range(1, space.n_points, 2)))
    if theorem == "thm43":
        return check_thm43(model, N)
    if theorem == "thm45":
        return check_thm45(model, tuple(range(2, model.n_seq(N) + 1)), N)
    if theorem == "thm46":
        return check_thm46(model, model.eps, N)
    if theorem == "thm310":
        return check_thm310(model, N)
    raise PreconditionError(f"no checker for theorem {theorem!r}")


def cmd_check(config: RunConfig) -> int:
    if config.model is None:
        raise PreconditionError("--model is required")
    model = load_model(config.model, config.params)
    n = _require_n(config)
    check = run_check(config.theorem, model, n)
    blob = {
        "command": "check",
        "theorem": config.theorem,
        "model": config.model,
        "n": n,
        "seed": config.seed,
    }
    blob.update(check.to_json())
    path = write_report_file(config, blob, f"lipcheck-check-{config.theorem}")
    print(f"check {config.theorem} on {config.model}: "
          f"{'pass' if check.ok else 'FAIL'} -> {path}")
    return 0 if check.ok else 1


def cmd_verify(config: RunConfig) -> int:
    built = standard_family(config.theorem, N=config.n, **config.params)
    battery = standard_battery(
        built.size, seed=config.seed, rand_count=config.rand_count,
        support=config.support,
    )
    report = verify_isometry(
        built.functions, built.target, battery, built.expectation,
        seed=config.seed,
    )
    n_val = config.n if config.n is not None else built.spec.space.n_points
    blob = report_json(
        config.theorem, built.spec.space.name, n_val, built.checker, report
    )
    blob["command"] = "verify"
    ok = report.expectation_pass
    path = write_report_file(config, blob, f"lipcheck-verify-{config.theorem}")
    print(f"verify {config.theorem}: {'pass' if ok else 'FAIL'} "
          f"({len(battery)} vectors) -> {path}")
    return 0 if ok else 1


def cmd_pipeline(config: RunConfig) -> int:
    if config.model is None:
        raise PreconditionError("--model is required")
    model = load_model(config.model, config.params)
    n = _require_n(config)
    base = {
        "command": "pipeline",
        "model": config.model,
        "n": n,
        "seed": config.seed,
    }
    try:
        res = main_theorem_pipeline(model, n)
    except (DichotomyError, ConstructionError) as exc:
        blob = dict(base, passed=False, error=str(exc))
        path = write_report_file(config, blob, "lipcheck-pipeline")
        print(f"pipeline {config.model}: FAIL ({exc}) -> {path}")
        return 1
    ok = res.report.expectation_pass
    blob = dict(
        base,
        case=res.case,
        subspace=list(res.subspace),
        family_size=len(res.family),
        data=_fmt(res.data),
        exact_pass=res.report.exact_pass,
        expectation_kind=res.report.expectation_kind,
        expectation_pass=res.report.expectation_pass,
        worst_defect=format_rat(res.report.worst_defect),
        failures=list(res.report.failures),
        passed=ok,
    )
    path = write_report_file(config, blob, "lipcheck-pipeline")
    print(f"pipeline {config.model}: case {res.case} "
          f"{'pass' if ok else 'FAIL'} -> {path}")
    return 0 if ok else 1


def cmd_report(config: RunConfig) -> int:
    from . import acceptance

    results = acceptance.run_all()
    if config.out:
        json_path = config.out
    else:
        json_path = os.path.join(
            os.environ.get(OUT_DIR_ENV, "."), "lipcheck-report.json"
        )
    stem, _ = os.path.splitext(json_path)
    write_json(json_path, results)
    md_path = _atomic_write(stem + ".md", acceptance.markdown_summary(results))
    for row in results["criteria"]:
        print(f"criterion {row['id']:2d} {row['title']}: "
              f"{'pass' if row['passed'] else 'FAIL'}")
    print(f"report: {'pass' if results['passed'] else 'FAIL'} "
          f"-> {json_path}, {md_path}")
    return 0 if results["passed"] else 1


def sample_analytic(function_id: str, resolution: int, horizon: int,
                    span: float = 1000.0) -> dict:
    """Float-only sampling of a reference function; clearly labeled as the
    single non-exact code path.

    Reports the max two-point slope over an even grid on [-span, span] and
    the base-to-horizon slope, against the bounds the limiting statement
    implies (slope below 1 up to float error, horizon sample within
    4/horizon of 1).
    """
    if function_id not in ANALYTIC_FUNCTIONS:
        raise PreconditionError(f"unknown analytic function {function_id!r}")
    if resolution <= 0 or horizon <= 0:
        raise PreconditionError("resolution and horizon must be positive")
    f = ANALYTIC_FUNCTIONS[function_id]
    xs = [-span + 2.0 * span * i / resolution for i in range(resolution + 1)]
    ys = [f(x) for x in xs]
    max_slope = 0.0
    for i in range(len(xs)):
        for j in range(i + 1, len(xs)):
            gap = xs[j] - xs[i]
            if gap == 0.0:
                continue
            s = abs(ys[j] - ys[i]) / gap
            if s > max_slope:
                max_slope = s
    sample = (f(float(horizon)) - f(0.0)) / float(horizon)
    slope_bound = 1.0 + 1e-12
    error_bound = 4.0 / horizon
    slope_ok = max_slope <= slope_bound
    sample_ok = abs(1.0 - sample) <= error_bound
    return {
        "function": function_id,
        "arithmetic": "float64",
        "exact": False,
        "resolution": resolution,
        "span": span,
        "horizon": horizon,
        "max_grid_slope": max_slope,
        "slope_bound": slope_bound,
        "slope_ok": slope_ok,
        "sample_at_horizon": sample,
        "limit": 1.0,
        "sample_error": abs(1.0 - sample),
        "error_bound": error_bound,
        "sample_ok": sample_ok,
        "passed": slope_ok and sample_ok,
    }


def cmd_sample_analytic(config: RunConfig) -> int:
    rep = sample_analytic(
        config.function, config.resolution, config.horizon, config.span
    )
    blob = dict(rep, command="sample-analytic", seed=config.seed)
    path = write_report_file(config, blob, "lipcheck-sample-analytic")
    print(f"sample-analytic {config.function}: "
          f"{'pass' if rep['passed'] else 'FAIL'} -> {path}")
    return 0 if rep["passed"] else 1


HANDLERS = {
    "validate": cmd_validate,
    "norm": cmd_norm,
    "free-norm": cmd_free_norm,
    "check": cmd_check,
    "verify": cmd_verify,
    "pipeline": cmd_pipeline,
    "report": cmd_report,
    "sample-analytic": cmd_sample_analytic,
}


# ---------------------------------------------------------------------------
# Argument parsing


def _parse_params(pairs):
    """--param k=v entries; integers stay integers, anything else must be a
    canonical rational string."""
    out = {}
    for entry in pairs or ():
        if "=" not in entry:
            raise PreconditionError(f"--param needs key=value, got {entry!r}")
        key, _, value = entry.partition("=")
        try:
            out[key] = int(value)
        except ValueError:
            out[key] = parse_rat(value)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lipcheck",
        description="Exact verification workbench for norm attainment "
                    "on pointed metric spaces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_space=False, needs_model=False):
        if needs_space:
            p.add_argument("--space", help="catalog model name or a JSON file path")
        if needs_model:
            p.add_argument("--model", choices=MODEL_NAMES)
        p.add_argument("--n", type=int, help="truncation size (at least 2)")
        p.add_argument("--param", action="append", dest="params_raw",
                       metavar="KEY=VALUE", help="model parameter, repeatable")
        p.add_argument("--seed", type=int, default=BATTERY_SEED)
        p.add_argument("--out", help="report path (default under $%s)" % OUT_DIR_ENV)
        p.add_argument("--format", dest="fmt", choices=("json", "markdown"),
                       default="json")

    common(sub.add_parser("validate", help="check the metric axioms"),
           needs_space=True)
    p_norm = sub.add_parser("norm", help="Lipschitz norm of explicit values")
    common(p_norm, needs_space=True)
    p_norm.add_argument("--values", help="JSON array of rational strings")

    p_free = sub.add_parser("free-norm", help="free-space norm, dual routes")
    common(p_free, needs_space=True)
    p_free.add_argument("--element", help='JSON like {"weights": {"1": "1/2"}}')

    p_check = sub.add_parser("check", help="run a theorem hypothesis checker")
    common(p_check, needs_model=True)
    p_check.add_argument("--theorem", required=True, choices=CHECK_THEOREMS)

    p_verify = sub.add_parser("verify", help="build and verify a standard family")
    common(p_verify)
    p_verify.add_argument("--theorem", required=True, choices=VERIFY_THEOREMS)
    p_verify.add_argument("--support", type=int,
                          help="sign-vector support size (default 5)")
    p_verify.add_argument("--rand-count", type=int, default=BATTERY_RANDOM_COUNT)

    p_pipe = sub.add_parser("pipeline", help="run the main construction pipeline")
    common(p_pipe, needs_model=True)

    p_rep = sub.add_parser("report", help="full acceptance suite, JSON + markdown")
    common(p_rep)

    p_samp = sub.add_parser("sample-analytic",
                            help="float sampling of the reference function")
    common(p_samp)
    p_samp.add_argument("--function", default="x2-over-absx-plus-2",
                        choices=sorted(ANALYTIC_FUNCTIONS))
    p_samp.add_argument("--resolution", type=int, default=512)
    p_samp.add_argument("--horizon", type=int, default=10 ** 6)
    p_samp.add_argument("--span", type=float, default=1000.0)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    fields = vars(args).copy()
    params_raw = fields.pop("params_raw", None)
    fields["params"] = _parse_params(params_raw)
    return RunConfig(**fields)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        config = config_from_args(args)
        return HANDLERS[config.command](config)
    except (StructureError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (json.JSONDecodeError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ModelError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
