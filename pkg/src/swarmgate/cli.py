"""Command-line surface.

Subcommands: simulate (closed-form-checked Monte Carlo), estimate (trajectory
logs or measured tables to arm statistics), fingerprint (family distance
matrices), scaling (exponential sycophancy fit), run (taint experiment
matrix). Every command writes fixed-format CSV (6 decimal places) plus
structured records under --out, renders its figures unless --no-figures is
passed, and is byte-deterministic given --seed.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path
from typing import IO, Iterator, Mapping, Sequence

from . import figures, refdata
from .core import ArchProfile, ArmStatistics, ModelFamily, default_registry
from .estimate import derive_statistics, estimate_log, regime_classify
from .fingerprint import (
    DEFAULT_BOUNDARY,
    build_fingerprint,
    classify_pair,
    distance_matrix,
    jsd,
)
from .gating import (
    attention_latch_factor,
    critical_complexity,
    fit_scaling_law,
    linear_cascade_rate,
    resilience_check,
    saturation_threshold,
    sycophancy_at_complexity,
)
from .harness import load_matrix, run_matrix
from .simulate import SimulationSpec, entropy_trace, simulate_arm, step_error_targets
from .trajlog import LogFormatError, read_records

STAT_COLUMNS = (
    "benchmark",
    "config",
    "n",
    "mu",
    "mu_ci_halfwidth",
    "critic_accuracy",
    "tribalism",
    "sycophancy",
    "conditional_tribalism",
    "conditional_sycophancy",
    "complexity",
    "latch",
    "saturation",
    "regime",
)


def _fmt(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[object]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(cell) for cell in row])
    return path


def _json_safe(value: object) -> object:
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


def _write_json(path: Path, payload: Mapping[str, object]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump({k: _json_safe(v) for k, v in payload.items()}, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return path


def _stat_row(stats: ArmStatistics, omega_threshold: float) -> list[object]:
    latch = stats.latch
    return [
        stats.benchmark,
        stats.config,
        stats.n,
        stats.mu,
        stats.mu_ci_halfwidth,
        stats.critic_accuracy,
        stats.tribalism,
        stats.sycophancy,
        stats.conditional_tribalism,
        stats.conditional_sycophancy,
        stats.complexity,
        latch,
        stats.saturation,
        regime_classify(stats, omega_threshold),
    ]


def _write_statistics(out: Path, rows: Sequence[ArmStatistics], omega_threshold: float) -> None:
    ordered = sorted(rows, key=lambda s: (s.benchmark, s.config))
    table = [_stat_row(s, omega_threshold) for s in ordered]
    _write_csv(out / "arm_statistics.csv", STAT_COLUMNS, table)
    with open(out / "arm_statistics.jsonl", "w", encoding="utf-8") as handle:
        for row in table:
            payload = {key: _json_safe(cell) for key, cell in zip(STAT_COLUMNS, row)}
            handle.write(json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n")


def _iter_stat_rows(handle: IO[str], path: Path) -> Iterator[tuple[int, Mapping]]:
    # sniff: estimate writes both a CSV and a JSON-lines table, accept either
    first = handle.read(1)
    handle.seek(0)
    if first != "{":
        yield from enumerate(csv.DictReader(handle), start=2)
        return
    for lineno, line in enumerate(handle, start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}, line {lineno}: bad statistics row ({exc})") from exc
        if not isinstance(row, dict):
            raise ValueError(f"{path}, line {lineno}: bad statistics row (not an object)")
        yield lineno, row


def _read_stats_table(path: Path) -> list[ArmStatistics]:
    rows: list[ArmStatistics] = []
    with open(path, encoding="utf-8", newline="") as handle:
        for lineno, row in _iter_stat_rows(handle, path):
            try:
                n = int(row["n"])
                mu = float(row["mu"])
                stats = derive_statistics(
                    benchmark=row["benchmark"],
                    config=row["config"],
                    n=n,
                    mu=mu,
                    critic_accuracy=float(row["critic_accuracy"]),
                    tribalism=float(row["tribalism"]),
                    sycophancy=float(row["sycophancy"]),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}, line {lineno}: bad statistics row ({exc})") from exc
            ci = row.get("mu_ci_halfwidth")
            if ci is not None and ci != "":
                stats = ArmStatistics(
                    config=stats.config,
                    benchmark=stats.benchmark,
                    n=n,
                    mu=mu,
                    mu_ci_halfwidth=float(ci),
                    critic_accuracy=stats.critic_accuracy,
                    tribalism=stats.tribalism,
                    sycophancy=stats.sycophancy,
                    conditional_tribalism=stats.conditional_tribalism,
                    conditional_sycophancy=stats.conditional_sycophancy,
                )
            rows.append(stats)
    if not rows:
        raise ValueError(f"{path}: no statistics rows")
    return rows


# ----------------------------------------------------------------------------
# simulate


def _load_spec_file(path: str) -> dict:
    import yaml

    with open(path, encoding="utf-8") as handle:
        doc = yaml.safe_load(handle) if path.endswith((".yaml", ".yml")) else json.load(handle)
    if not isinstance(doc, dict):
        raise ValueError("simulation spec file must be a mapping")
    return doc


def cmd_simulate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    doc: dict = {}
    if args.config:
        doc = _load_spec_file(args.config)

    def pick(flag_value, *keys, default=None):
        if flag_value is not None:
            return flag_value
        for key in keys:
            if key in doc:
                return doc[key]
        return default

    tau = pick(args.tau, "tau", "tribalism")
    sigma = pick(args.sigma, "sigma", "sycophancy")
    accuracy = pick(args.critic_accuracy, "B", "critic_accuracy")
    if tau is None or sigma is None or accuracy is None:
        parser.error("simulate needs --tau, --sigma and --B (flags or spec file)")
    tau, sigma, accuracy = float(tau), float(sigma), float(accuracy)
    latch = pick(args.latch, "lambda", "latch")
    chain_code = pick(args.chain, "chain")
    n_agents = int(pick(args.n_agents, "n_agents", default=len(chain_code) if chain_code else 3))
    trajectories = int(pick(args.trajectories, "trajectories", default=100_000))
    seed = int(pick(args.seed, "seed", default=0))
    benchmark = str(pick(args.benchmark, "benchmark", default="synthetic"))

    registry = default_registry()
    if chain_code:
        if len(chain_code) != n_agents:
            parser.error(f"--chain has {len(chain_code)} agents but --n-agents says {n_agents}")
        if any(letter not in registry for letter in chain_code):
            for letter in dict.fromkeys(chain_code):
                if letter not in registry:
                    registry.register(ModelFamily(letter, f"family {letter}"))
        chain = tuple(registry.get(letter) for letter in chain_code)
    else:
        member = ModelFamily("X", "uniform")
        chain = (member,) * n_agents
    if latch is None:
        # Without an explicit latch a bare rate sweep runs uncoupled; a named
        # chain falls back to the kinship rule.
        latch = None if chain_code else 1.0
    else:
        latch = float(latch)

    profiles = {}
    for member in dict.fromkeys(chain):
        profiles[(member.id, benchmark)] = ArchProfile(
            family=member,
            benchmark=benchmark,
            critic_accuracy=accuracy,
            tribalism=tau,
            sycophancy=sigma,
        )
    spec = SimulationSpec(
        chain=chain,
        profiles=profiles,
        benchmark=benchmark,
        n_trajectories=trajectories,
        base_seed=seed,
        latch=latch,
    )

    result = simulate_arm(spec, workers=args.workers)
    rates = result.per_step_error_rates
    trace = entropy_trace(rates, config=spec.config, benchmark=benchmark)
    targets = step_error_targets(spec)

    out = Path(args.out)
    _write_csv(
        out / "steps.csv",
        ("step", "error_rate", "entropy"),
        [(i + 1, rate, h) for i, (rate, h) in enumerate(zip(rates, trace.per_step_entropy))],
    )

    mu_hat = result.mu_hat
    mu_model = targets[-1]
    effective = spec.step_latches()[-1]
    mu_lin = linear_cascade_rate(sigma, tau, accuracy)
    latch_observed = attention_latch_factor(mu_hat, mu_lin) if len(chain) == 3 and mu_lin > 0 else None

    sat = saturation_threshold(tau, sigma)
    gauge = latch_observed if latch_observed is not None else effective
    if sat >= refdata.OMEGA_DEFAULT and gauge >= 1.9:
        regime = "logic_saturation"
    elif accuracy > 0 and resilience_check(tau, sigma, accuracy).resilient:
        regime = "resilient"
    else:
        regime = "transition"

    summary = {
        "benchmark": benchmark,
        "chain": spec.config,
        "critic_accuracy": accuracy,
        "latch_effective": effective,
        "latch_observed": latch_observed,
        "mu_hat": mu_hat,
        "mu_model": mu_model,
        "n_agents": n_agents,
        "regime": regime,
        "seed": seed,
        "sigma": sigma,
        "tau": tau,
        "trajectories": trajectories,
    }
    _write_json(out / "summary.json", summary)
    if not args.no_figures:
        figures.step_trace_figure(trace, out / "step_trace.png")

    print(f"chain {spec.config} on {benchmark}: mu_hat={mu_hat:.6f} model={mu_model:.6f} regime={regime}")
    print(f"wrote {out / 'steps.csv'} and {out / 'summary.json'}")
    return 0


# ----------------------------------------------------------------------------
# estimate


def cmd_estimate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if args.reference:
        stats = refdata.reference_statistics()
    elif args.table:
        stats = _read_stats_table(Path(args.table))
    else:
        records = read_records(args.log)
        if not records:
            raise ValueError(f"no records in {args.log}")
        stats = estimate_log(records)

    out = Path(args.out)
    _write_statistics(out, stats, args.omega_threshold)
    if not args.no_figures:
        figures.metric_heatmap(stats, "mu", out / "mu_heatmap.png")
        figures.metric_heatmap(stats, "tribalism", out / "tribalism_heatmap.png")
        figures.metric_heatmap(stats, "sycophancy", out / "sycophancy_heatmap.png")
        figures.model_fit_figure(stats, out / "model_fit.png")

    for s in sorted(stats, key=lambda s: (s.benchmark, s.config)):
        print(
            f"{s.benchmark:>16s} {s.config} n={s.n:<6d} mu={s.mu:.3f}+-{s.mu_ci_halfwidth:.3f} "
            f"B={s.critic_accuracy:.3f} tau={s.tribalism:.3f} sigma={s.sycophancy:.3f} "
            f"regime={regime_classify(s, args.omega_threshold)}"
        )
    print(f"wrote {out / 'arm_statistics.csv'}")
    return 0


# ----------------------------------------------------------------------------
# fingerprint


def cmd_fingerprint(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    out = Path(args.out)
    stats = None
    if args.builtin_vectors:
        prints = refdata.published_fingerprints()
    else:
        stats = _read_stats_table(Path(args.stats))
        registry = default_registry()
        letters = sorted({s.config[2] for s in stats})
        prints = []
        for letter in letters:
            family = registry.get(letter) if letter in registry else ModelFamily(letter, f"family {letter}")
            prints.append(build_fingerprint(stats, family))
    if len(prints) < 2:
        raise ValueError(f"need at least 2 families to compare, got {len(prints)}")

    matrix = distance_matrix(prints)
    _write_csv(
        out / "fingerprints.csv",
        ("family", "p_tribal", "p_syco", "p_truth"),
        [(fp.family.id, fp.p_tribal, fp.p_syco, fp.p_truth) for fp in prints],
    )
    (out / "jsd_matrix.csv").write_text(matrix.to_csv("jsd"), encoding="utf-8")
    (out / "js_distance_matrix.csv").write_text(matrix.to_csv("js_distance"), encoding="utf-8")

    pair_rows = []
    for i, a in enumerate(matrix.families):
        for b in matrix.families[i + 1 :]:
            value = matrix.pair(a, b)
            pair_rows.append((a, b, value, math.sqrt(value), classify_pair(value, args.boundary)))
    _write_csv(out / "pairs.csv", ("family_a", "family_b", "jsd", "js_distance", "classification"), pair_rows)

    if stats is not None:
        by_letter = {fp.family.id: fp for fp in prints}
        sensitivity = []
        scatter = []
        for s in sorted(stats, key=lambda s: (s.benchmark, s.config)):
            prop, synth = s.config[0], s.config[2]
            if prop not in by_letter or synth not in by_letter:
                continue
            value = 0.0 if prop == synth else jsd(by_letter[prop].as_tuple(), by_letter[synth].as_tuple())
            pair = classify_pair(value, args.boundary)
            latch = s.latch
            sensitivity.append(
                (s.benchmark, s.config, latch, value, pair, regime_classify(s, args.omega_threshold))
            )
            if not math.isnan(latch):
                scatter.append((latch, value, pair))
        _write_csv(
            out / "sensitivity.csv",
            ("benchmark", "config", "latch", "jsd", "pair", "regime"),
            sensitivity,
        )
        if not args.no_figures:
            figures.sensitivity_figure(scatter, out / "sensitivity.png")

    if not args.no_figures:
        figures.distance_heatmap(matrix, out / "distance_heatmap.png")

    for a, b, value, root, label in pair_rows:
        print(f"JSD({a},{b}) = {value:.6f}  sqrt = {root:.6f}  {label}")
    print(f"wrote {out / 'jsd_matrix.csv'}")
    return 0


# ----------------------------------------------------------------------------
# scaling


def _parse_points(text: str) -> tuple[tuple[float, float], ...]:
    points = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            k_text, s_text = chunk.split(":")
            points.append((float(k_text), float(s_text)))
        except ValueError:
            raise argparse.ArgumentTypeError(
                f"bad point {chunk!r}; expected complexity:sycophancy, e.g. 0.08:0.075"
            ) from None
    if len(points) < 2:
        raise argparse.ArgumentTypeError("need at least two complexity:sycophancy points")
    return tuple(points)


def cmd_scaling(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    points = args.points if args.points is not None else refdata.SCALING_POINTS
    fit = fit_scaling_law(points, mode=args.mode)
    try:
        kc = critical_complexity(fit, args.omega)
    except ValueError:
        kc = None

    out = Path(args.out)
    residual_rows = []
    for k, measured in sorted(points):
        fitted = sycophancy_at_complexity(fit, k)
        residual_rows.append((k, measured, fitted, measured - fitted, math.log(measured) - math.log(fitted)))
    _write_csv(
        out / "residuals.csv",
        ("complexity", "measured", "fitted", "residual", "log_residual"),
        residual_rows,
    )
    _write_json(
        out / "fit.json",
        {
            "alpha": fit.alpha,
            "critical_complexity": kc,
            "mode": args.mode,
            "omega": args.omega,
            "sigma0": fit.sigma0,
        },
    )
    if not args.no_figures:
        figures.scaling_figure(fit, points, args.omega, out / "scaling.png")

    kc_text = f"{kc:.6f}" if kc is not None else "not reached"
    print(f"alpha={fit.alpha:.6f} sigma0={fit.sigma0:.6f} critical_complexity={kc_text} (mode={args.mode})")
    print(f"wrote {out / 'fit.json'} and {out / 'residuals.csv'}")
    return 0


# ----------------------------------------------------------------------------
# run


def cmd_run(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    matrix, endpoints = load_matrix(args.matrix)
    result = run_matrix(matrix, endpoints, workers=args.workers, max_new_samples=args.max_new_samples)

    out = Path(args.out)
    _write_statistics(out, list(result.statistics), args.omega_threshold)
    _write_csv(
        out / "aborted.csv",
        ("benchmark", "config", "sample_id", "reason"),
        [(a.benchmark, a.config, a.sample_id, a.reason) for a in result.aborted],
    )
    if not args.no_figures and result.statistics:
        figures.metric_heatmap(result.statistics, "mu", out / "mu_heatmap.png")

    for s in result.statistics:
        print(
            f"{s.benchmark:>16s} {s.config} n={s.n:<6d} mu={s.mu:.6f}+-{s.mu_ci_halfwidth:.6f} "
            f"B={s.critic_accuracy:.6f} tau={s.tribalism:.6f} sigma={s.sycophancy:.6f}"
        )
    print(
        f"log {result.log_path}: {result.new_records} new records, "
        f"{len(result.aborted)} aborted, {result.pending} pending"
    )
    if result.failed_arms:
        for benchmark, config in result.failed_arms:
            print(f"error: arm {config} on {benchmark} produced no records", file=sys.stderr)
        return 1
    return 0


# ----------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swarmgate",
        description="Cascade failure toolkit: simulate audited agent chains, "
        "estimate gate parameters from trajectory logs, compare family "
        "fingerprints, fit sycophancy scaling, and run taint experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out", default=".", help="output directory (default: current directory)")
        p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    p_sim = sub.add_parser("simulate", help="Monte Carlo over an audited chain")
    p_sim.add_argument("--tau", type=float, help="tribalism rate of the synthesizer gate")
    p_sim.add_argument("--sigma", type=float, help="sycophancy rate of the synthesizer gate")
    p_sim.add_argument("--B", dest="critic_accuracy", type=float, help="auditor accuracy")
    p_sim.add_argument(
        "--lambda",
        "--latch",
        dest="latch",
        type=float,
        help="latch factor in [1,2] (default 1.0, or the kinship rule when --chain is given)",
    )
    p_sim.add_argument("--n-agents", type=int, help="chain length (default 3)")
    p_sim.add_argument("--trajectories", type=int, help="number of Monte Carlo trajectories (default 100000)")
    p_sim.add_argument("--seed", type=int, help="base seed (default 0)")
    p_sim.add_argument("--chain", help="explicit chain code, e.g. GCG or GGGGG")
    p_sim.add_argument("--benchmark", help="benchmark label for the outputs (default synthetic)")
    p_sim.add_argument("--config", help="YAML/JSON spec file; inline flags override its values")
    p_sim.add_argument("--workers", type=int, default=1, help="simulation worker threads")
    add_common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_est = sub.add_parser("estimate", help="arm statistics from logs, tables, or the bundled study")
    src = p_est.add_mutually_exclusive_group(required=True)
    src.add_argument("--log", help="trajectory log (JSON lines)")
    src.add_argument("--table", help="measured-proportions table, CSV or JSON lines (derive-only mode)")
    src.add_argument("--reference", action="store_true", help="use the bundled 36-arm study")
    p_est.add_argument("--group-by", choices=["arm"], default="arm", help="grouping (one row per arm)")
    p_est.add_argument("--omega-threshold", type=float, default=refdata.OMEGA_DEFAULT)
    add_common(p_est)
    p_est.set_defaults(func=cmd_estimate)

    p_fp = sub.add_parser("fingerprint", help="family fingerprints and distance matrices")
    src = p_fp.add_mutually_exclusive_group(required=True)
    src.add_argument("--stats", help="arm statistics table from estimate (CSV or JSON lines)")
    src.add_argument(
        "--builtin-vectors", action="store_true", help="use the bundled published fingerprints"
    )
    p_fp.add_argument("--boundary", type=float, default=DEFAULT_BOUNDARY, help="stranger boundary on JSD")
    p_fp.add_argument("--omega-threshold", type=float, default=refdata.OMEGA_DEFAULT)
    add_common(p_fp)
    p_fp.set_defaults(func=cmd_fingerprint)

    p_sc = sub.add_parser("scaling", help="fit the exponential sycophancy scaling law")
    p_sc.add_argument(
        "--points",
        type=_parse_points,
        help="comma-separated complexity:sycophancy pairs (default: bundled study points)",
    )
    p_sc.add_argument("--omega", type=float, default=refdata.OMEGA_DEFAULT, help="saturation boundary")
    p_sc.add_argument("--mode", choices=["two_point", "least_squares"], default="two_point")
    add_common(p_sc)
    p_sc.set_defaults(func=cmd_scaling)

    p_run = sub.add_parser("run", help="run or resume a taint experiment matrix")
    p_run.add_argument("--matrix", required=True, help="matrix config file (YAML or JSON)")
    p_run.add_argument("--workers", type=int, default=1, help="arms executed in parallel")
    p_run.add_argument(
        "--max-new-samples", type=int, default=None, help="stop after this many new samples (resume later)"
    )
    p_run.add_argument("--omega-threshold", type=float, default=refdata.OMEGA_DEFAULT)
    add_common(p_run)
    p_run.set_defaults(func=cmd_run)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except LogFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, KeyError, ValueError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
