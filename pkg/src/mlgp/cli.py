"""Command-line entry point: design, points, bench, asymptotics."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from typing import Any

import numpy as np

from .allocator import (BudgetProblem, CostModel, PrecisionProblem, budget_allocation, interpolation_bound_surrogate,
                        level_count_for_precision, precision_allocation, truncation_bound)
from .bench import METHODS, BenchConfig, asymptotics_study, run_study
from .gp import ModelSpec
from .kernel import KernelSpec
from .lowdisc import DomainBox, build_nested_design, write_design_csv

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("mlgp")


class UsageError(ValueError):
    pass


def fmt(x: Any) -> str:
    """Human formatting: 6 significant digits for floats."""
    if isinstance(x, float):
        return f"{x:.6g}"
    if isinstance(x, (list, tuple)):
        return ", ".join(fmt(v) for v in x)
    return str(x)


def parse_domain(text: str) -> tuple[tuple[float, ...], tuple[float, ...]]:
    lo, hi = [], []
    for part in text.split(","):
        bits = part.strip().split(":")
        if len(bits) != 2:
            raise UsageError(f"bad domain component {part!r}; expected lo:hi")
        try:
            lo.append(float(bits[0]))
            hi.append(float(bits[1]))
        except ValueError:
            raise UsageError(f"non-numeric domain component {part!r}") from None
    return tuple(lo), tuple(hi)


def parse_counts(text: str) -> list[int]:
    parts = [p for p in text.replace(";", ",").split(",") if p.strip()]
    if not parts:
        raise UsageError("empty structure")
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise UsageError(f"structure must be comma-separated integers, got {text!r}") from None


def _box(args) -> DomainBox:
    if args.domain:
        lo, hi = parse_domain(args.domain)
        if args.dim is not None and args.dim != len(lo):
            raise UsageError(f"--dim {args.dim} disagrees with a {len(lo)}-dimensional --domain")
        return DomainBox(lo, hi)
    return DomainBox.unit(args.dim or 1)


def _model_flags(p: argparse.ArgumentParser, with_levels: bool = True) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--lambda-sq", type=float, help="variance decay ratio between levels")
    g.add_argument("--sigma-sq", type=float, default=1.0)
    g.add_argument("--nu", type=float, default=1.25, help="Matern smoothness")
    g.add_argument("--lengthscale", type=float, default=1.0)
    g.add_argument("--dim", type=int, help="input dimension (default: from --domain, else 1)")
    g.add_argument("--domain", help="box as lo:hi[,lo:hi...]")
    g.add_argument("--cost-ratio", type=float, help="per-level cost growth a")
    g.add_argument("--cost-base", type=float, default=1.0, help="cost of one level-0 sample")
    g.add_argument("--p-const", type=float, default=1.0)
    if with_levels:
        g.add_argument("--levels", type=int, help="index K of the highest level")


def _require(args, *names: str) -> None:
    missing = [n for n in names if getattr(args, n.replace("-", "_")) is None]
    if missing:
        raise UsageError("missing required flag(s): " + ", ".join("--" + n for n in missing))


def _emit(args, payload: dict, human_lines: list[str]) -> None:
    text = json.dumps(payload, indent=2) + "\n" if args.json else "\n".join(human_lines) + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


# ------------------------------------------------------------------ design


def cmd_design(args) -> int:
    _require(args, "lambda-sq", "cost-ratio")
    box = _box(args)
    cost = CostModel(args.cost_ratio, args.cost_base)
    if (args.budget is None) == (args.epsilon is None):
        raise UsageError("give exactly one of --budget (with --levels) or --epsilon")
    if args.budget is not None:
        _require(args, "levels")
        model = ModelSpec(args.lambda_sq, args.sigma_sq, args.levels, KernelSpec(args.nu, args.lengthscale), box)
        prob = BudgetProblem(args.budget, model, cost, enforce_monotone=not args.allow_non_nested,
                             eta_search=args.eta_search)
        s = budget_allocation(prob)
    else:
        model0 = ModelSpec(args.lambda_sq, args.sigma_sq, 0, KernelSpec(args.nu, args.lengthscale), box)
        K = level_count_for_precision(PrecisionProblem(args.epsilon, model0, cost, args.p_const))
        model = dataclasses.replace(model0, levels=K)
        s = precision_allocation(PrecisionProblem(args.epsilon, model, cost, args.p_const))
    surrogate = interpolation_bound_surrogate(s, model, args.p_const)
    payload = s.to_dict()
    payload["surrogate_bound"] = surrogate
    payload["truncation_bound"] = truncation_bound(model, s.K)
    lines = [
        f"structure: {fmt(list(s.counts))}",
        f"costs_per_level: {fmt(list(s.costs_per_level))}",
        f"total_cost: {fmt(s.total_cost)}",
        f"surrogate_bound: {fmt(surrogate)}",
        f"truncation_bound: {fmt(payload['truncation_bound'])}",
    ]
    _emit(args, payload, lines)
    return EXIT_OK


# ------------------------------------------------------------------ points


def cmd_points(args) -> int:
    if args.structure is None and args.from_json is None:
        raise UsageError("give --structure n0,n1,... or --from design.json")
    if args.structure is not None:
        counts = parse_counts(args.structure)
    else:
        with open(args.from_json) as f:
            counts = [int(c) for c in json.load(f)["counts"]]
        if not counts:
            raise UsageError("empty structure")
    design = build_nested_design(counts, _box(args), allow_non_nested=args.allow_non_nested)
    if args.out:
        with open(args.out, "w") as f:
            write_design_csv(design, f)
    else:
        write_design_csv(design, sys.stdout)
    return EXIT_OK


# ------------------------------------------------------------------- bench

_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def _coerce(field: dataclasses.Field, raw: str):
    name = field.name
    if name in ("methods",):
        return tuple(m.strip() for m in raw.split(",") if m.strip())
    if name == "enforce_monotone":
        if raw.lower() not in _BOOL:
            raise ValueError(f"expected true/false, got {raw!r}")
        return _BOOL[raw.lower()]
    if name in ("levels", "n_test", "replications", "seed", "single_level"):
        return None if raw.lower() == "none" else int(raw)
    if name == "eta_search":
        return raw
    if raw.lower() == "none":
        return None
    return float(raw)


def read_config(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment. ``domain`` expands to lower/upper."""
    fields = {f.name: f for f in dataclasses.fields(BenchConfig)}
    out: dict = {}
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, raw = (s.strip() for s in text.split("=", 1))
            key = key.replace("-", "_")
            try:
                if key == "domain":
                    out["lower"], out["upper"] = parse_domain(raw)
                elif key in fields:
                    out[key] = _coerce(fields[key], raw)
                else:
                    raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            except UsageError:
                raise
            except ValueError as e:
                raise UsageError(f"{path}:{lineno}: field {key!r}: {e}") from None
    return out


def resolve_seed(flag: int | None, file_value: int | None) -> int:
    """--seed, then the config file, then MLGP_SEED, then 0."""
    if flag is not None:
        return flag
    if file_value is not None:
        return file_value
    env = os.environ.get("MLGP_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"MLGP_SEED must be an integer, got {env!r}") from None
    return 0


def cmd_bench(args) -> int:
    values = read_config(args.config)
    seed = resolve_seed(args.seed, values.pop("seed", None))
    overrides = {
        "replications": args.replications, "budget": args.budget, "levels": args.levels,
        "lambda_sq": args.lambda_sq, "decay_ratio": args.decay_ratio, "cost_ratio": args.cost_ratio,
        "nu": args.nu, "lengthscale": args.lengthscale, "sigma_sq": args.sigma_sq,
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    if args.methods:
        values["methods"] = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    if args.domain:
        values["lower"], values["upper"] = parse_domain(args.domain)
    try:
        config = BenchConfig(seed=seed, **values)
    except TypeError as e:
        raise UsageError(f"{args.config}: {e}") from None
    result = run_study(config, threads=args.threads)
    prefix = args.out or os.path.splitext(os.path.basename(args.config))[0]
    with open(prefix + ".csv", "w") as f:
        result.write_csv(f)
    with open(prefix + ".json", "w") as f:
        result.write_json(f)
    if args.json:
        sys.stdout.write(json.dumps(result.to_dict(), indent=2) + "\n")
    else:
        means = result.mean_rmse
        print(f"{'method':<10} {'structure':<20} {'total_cost':>10} {'mean_rmse':>10}")
        for m in config.methods:
            s = result.structures[m]
            print(f"{m:<10} {','.join(map(str, s.counts)):<20} {fmt(s.total_cost):>10} {fmt(means[m]):>10}")
        print(f"seed {seed}, {config.replications} replications; wrote {prefix}.csv and {prefix}.json")
    return EXIT_OK


# ------------------------------------------------------------- asymptotics


def cmd_asymptotics(args) -> int:
    _require(args, "lambda-sq", "cost-ratio")
    if not 0 < args.epsilon_min < args.epsilon_max:
        raise UsageError("need 0 < --epsilon-min < --epsilon-max")
    if args.num < 4:
        raise UsageError("--num must be at least 4")
    box = _box(args)
    model = ModelSpec(args.lambda_sq, args.sigma_sq, 0, KernelSpec(args.nu, args.lengthscale), box)
    cost = CostModel(args.cost_ratio, args.cost_base)
    eps = np.geomspace(args.epsilon_max, args.epsilon_min, args.num)
    rep = asymptotics_study(model, cost, eps, args.p_const, min_cost=args.min_cost)
    if args.out:
        with open(args.out, "w") as f:
            rep.write_csv(f)
    if args.json:
        sys.stdout.write(json.dumps(rep.to_dict(), indent=2) + "\n")
    else:
        if not args.out:
            rep.write_csv(sys.stdout)
        print(f"regime: {rep.regime} (2*alpha*nu = {fmt(2 * rep.alpha * args.nu)}, d*beta = {fmt(box.dim * rep.beta)})")
        print(f"mlgp_slope: {fmt(rep.mlgp_slope)} (predicted {fmt(rep.predicted_mlgp_slope)})")
        print(f"single_slope: {fmt(rep.single_slope)} (predicted {fmt(rep.predicted_single_slope)})")
    return EXIT_OK


# -------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mlgp", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("design", help="design structure for a budget or a target precision")
    _model_flags(d)
    d.add_argument("--budget", type=float)
    d.add_argument("--epsilon", type=float)
    d.add_argument("--eta-search", choices=("binary", "integer"), default="binary")
    d.add_argument("--allow-non-nested", action="store_true", help="disable monotone enforcement in the greedy step")
    d.add_argument("--json", action="store_true")
    d.add_argument("--out")
    d.set_defaults(func=cmd_design)

    pt = sub.add_parser("points", help="nested Halton design as CSV")
    pt.add_argument("--structure", help="comma-separated counts n0,n1,...")
    pt.add_argument("--from", dest="from_json", help="JSON file written by 'design --json'")
    pt.add_argument("--dim", type=int)
    pt.add_argument("--domain")
    pt.add_argument("--allow-non-nested", action="store_true")
    pt.add_argument("--out")
    pt.set_defaults(func=cmd_points)

    b = sub.add_parser("bench", help="simulation study from a config file")
    b.add_argument("config")
    b.add_argument("--seed", type=int)
    b.add_argument("--threads", type=int, default=1)
    b.add_argument("--replications", type=int)
    b.add_argument("--methods", help=f"comma-separated subset of {','.join(METHODS)}")
    b.add_argument("--budget", type=float)
    b.add_argument("--levels", type=int)
    b.add_argument("--lambda-sq", type=float)
    b.add_argument("--sigma-sq", type=float)
    b.add_argument("--nu", type=float)
    b.add_argument("--lengthscale", type=float)
    b.add_argument("--domain")
    b.add_argument("--cost-ratio", type=float)
    b.add_argument("--decay-ratio", type=float)
    b.add_argument("--json", action="store_true")
    b.add_argument("--out", help="output prefix for .csv and .json (default: config file stem)")
    b.set_defaults(func=cmd_bench)

    a = sub.add_parser("asymptotics", help="cost-versus-precision curves and slopes")
    _model_flags(a, with_levels=False)
    a.add_argument("--epsilon-min", type=float, default=1e-5)
    a.add_argument("--epsilon-max", type=float, default=1e-2)
    a.add_argument("--num", type=int, default=13)
    a.add_argument("--min-cost", type=float, default=0.0, help="drop points cheaper than this from the fits")
    a.add_argument("--json", action="store_true")
    a.add_argument("--out")
    a.set_defaults(func=cmd_asymptotics)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (np.linalg.LinAlgError, ArithmeticError) as e:
        print(f"error: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
