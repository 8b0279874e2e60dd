"""Scenario presets, the Monte-Carlo harness and report writers."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .baselines import baseline_localize, dvhop_localize, dvhop_tables
from .errors import ConfigError, InsufficientAnchors, NoEstimates
from .localization import LocalizationResult, localize_all
from .network import Deployment, build_graph, deploy
from .rng import DEPLOY_KEY, METHOD_KEYS, stream
from .swarm import ADAPTIVE, SwarmParams, Trace

METHODS = ("dvhop", "pso", "scapso", "adapscapso")
SWARM_METHODS = ("pso", "scapso", "adapscapso")
OURS = "adapscapso"


@dataclass(frozen=True)
class Scenario:
    name: str
    n_nodes: int
    anchor_ratio: float
    comm_range: float
    area: tuple[float, float] = (100.0, 100.0)
    n_runs: int = 50
    noise_sigma: float = 0.0

    def __post_init__(self):
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 3:
            raise ConfigError("n_nodes must be an integer >= 3")
        if not 0 < self.anchor_ratio < 1:
            raise ConfigError("anchor_ratio must lie strictly between 0 and 1")
        if not 1 <= round(self.n_nodes * self.anchor_ratio) < self.n_nodes:
            raise ConfigError("anchor_ratio must give at least one anchor and one unknown node")
        if not self.comm_range > 0:
            raise ConfigError("comm_range must be positive")
        if int(self.n_runs) != self.n_runs or self.n_runs < 1:
            raise ConfigError("n_runs must be >= 1")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be >= 0")


PRESETS = {
    "s1": Scenario("s1", 100, 0.10, 30.0),
    "s2": Scenario("s2", 100, 0.20, 30.0),
    "s3": Scenario("s3", 200, 0.10, 15.0),
    "s4": Scenario("s4", 200, 0.20, 15.0),
}


def check_methods(methods: Iterable[str]) -> tuple[str, ...]:
    methods = tuple(methods)
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise ConfigError(f"unknown method(s) {bad}; choose from {list(METHODS)}")
    if not methods:
        raise ConfigError("need at least one method")
    return methods


def avg_error(result: LocalizationResult, d: Deployment) -> float:
    """Mean true-vs-estimated distance over the localized unknown nodes."""
    if not result.estimates:
        raise NoEstimates("no unknown node was localized")
    total = 0.0
    for u, est in result.estimates.items():
        tx, ty = d.nodes[u].true_pos
        total += math.hypot(float(est[0]) - tx, float(est[1]) - ty)
    return total / len(result.estimates)


def run_method(method: str, d: Deployment, p: SwarmParams, rng: np.random.Generator,
               refine_passes: int = 2, noise_sigma: float = 0.0,
               g=None) -> tuple[LocalizationResult, dict[int, Trace]]:
    """Run one localizer on one deployment."""
    g = g if g is not None else build_graph(d)
    if method == "adapscapso":
        return localize_all(d, g, p, ADAPTIVE, refine_passes, noise_sigma, rng)
    tables = dvhop_tables(d, g)
    if method == "dvhop":
        return dvhop_localize(d, g, tables), {}
    return baseline_localize(method, d, g, tables, p, rng)


@dataclass
class RunOutcome:
    run: int
    digest: str
    errors: dict[str, float]
    skipped: dict[str, int]
    trace_sum: dict[str, np.ndarray]
    trace_count: dict[str, int]
    results: dict[str, LocalizationResult] = field(repr=False, default_factory=dict)


def run_deployment(d: Deployment, run: int, methods: Sequence[str], master_seed: int,
                   p: SwarmParams, refine_passes: int = 2, noise_sigma: float = 0.0,
                   keep_results: bool = False) -> RunOutcome:
    """All methods on one deployment; method streams are keyed by (seed, run, method)."""
    g = build_graph(d)
    out = RunOutcome(run, d.digest(), {}, {}, {}, {})
    for m in methods:
        try:
            res, traces = run_method(m, d, p, stream(master_seed, run, METHOD_KEYS[m]),
                                     refine_passes, noise_sigma, g)
            err = avg_error(res, d)
        except (NoEstimates, InsufficientAnchors):
            res, traces, err = LocalizationResult(skipped=d.unknowns), {}, math.nan
        out.errors[m] = err
        out.skipped[m] = len(res.skipped)
        if m in SWARM_METHODS:
            # per-unit-weight so the neighbor sum and the DV-Hop mean share a scale
            stacked = [t.best_fitness_per_iter / res.fitness_weight[u] for u, t in traces.items()]
            out.trace_sum[m] = np.sum(stacked, axis=0) if stacked else np.zeros(p.max_iters)
            out.trace_count[m] = len(stacked)
        if keep_results:
            out.results[m] = res
    return out


@dataclass
class ScenarioReport:
    scenario: Scenario
    methods: tuple[str, ...]
    master_seed: int
    per_method: dict[str, list[float]]
    skipped_counts: dict[str, list[int]]
    convergence: dict[str, np.ndarray]
    digests: list[str]

    def mean(self, method: str) -> float:
        vals = [v for v in self.per_method[method] if not math.isnan(v)]
        return float(np.mean(vals)) if vals else math.nan

    def std(self, method: str) -> float:
        vals = [v for v in self.per_method[method] if not math.isnan(v)]
        return float(np.std(vals)) if vals else math.nan


def scenario_params(s: Scenario, params: SwarmParams | None = None) -> SwarmParams:
    return replace(params or SwarmParams(), comm_range=s.comm_range)


def run_scenario(
    s: Scenario,
    methods: Sequence[str],
    master_seed: int,
    params: SwarmParams | None = None,
    refine_passes: int = 2,
    workers: int = 1,
    progress: Callable[[int, int], None] | None = None,
) -> ScenarioReport:
    """Monte-Carlo comparison: one fresh deployment per run, shared by all methods."""
    methods = check_methods(methods)
    p = scenario_params(s, params)

    def one(run: int) -> RunOutcome:
        d = deploy(s.n_nodes, s.anchor_ratio, s.area, s.comm_range,
                   stream(master_seed, run, DEPLOY_KEY))
        return run_deployment(d, run, methods, master_seed, p, refine_passes, s.noise_sigma)

    outcomes: list[RunOutcome] = []
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            for i, o in enumerate(pool.map(one, range(s.n_runs))):
                outcomes.append(o)
                if progress:
                    progress(i + 1, s.n_runs)
    else:
        for run in range(s.n_runs):
            outcomes.append(one(run))
            if progress:
                progress(run + 1, s.n_runs)
    return aggregate(s, methods, master_seed, p, outcomes)


def aggregate(s: Scenario, methods: Sequence[str], master_seed: int, p: SwarmParams,
              outcomes: Sequence[RunOutcome]) -> ScenarioReport:
    outcomes = sorted(outcomes, key=lambda o: o.run)
    convergence = {}
    for m in methods:
        if m not in SWARM_METHODS:
            continue
        total = np.zeros(p.max_iters)
        count = 0
        for o in outcomes:
            total = total + o.trace_sum[m]
            count += o.trace_count[m]
        convergence[m] = total / count if count else np.full(p.max_iters, math.nan)
    return ScenarioReport(
        s, tuple(methods), master_seed,
        {m: [o.errors[m] for o in outcomes] for m in methods},
        {m: [o.skipped[m] for o in outcomes] for m in methods},
        convergence,
        [o.digest for o in outcomes],
    )


def reduction(baseline_err: float, ours_err: float) -> float | None:
    """Percent error reduction relative to ``baseline_err``; ``None`` if undefined."""
    if not baseline_err or math.isnan(baseline_err) or math.isnan(ours_err):
        return None
    return 100.0 * (baseline_err - ours_err) / baseline_err


def compare(report: ScenarioReport) -> dict[str, float | None]:
    if OURS not in report.methods:
        raise ConfigError("comparison needs adapscapso in the report")
    baselines = [m for m in report.methods if m != OURS]
    if not baselines:
        raise ConfigError("comparison needs at least one baseline")
    ours = report.mean(OURS)
    return {m: reduction(report.mean(m), ours) for m in baselines}


def pooled_reduction(per_scenario: Sequence[dict[str, float | None]]) -> dict[str, float | None]:
    """Unweighted mean of scenario-level reductions, per baseline."""
    out = {}
    for m in sorted({k for r in per_scenario for k in r}):
        vals = [r.get(m) for r in per_scenario]
        out[m] = None if any(v is None for v in vals) else float(np.mean(vals))
    return out


# report writers -----------------------------------------------------------

def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else repr(float(x))


def runs_csv(reports: Sequence[ScenarioReport], header: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(["scenario", "run", "method", "avg_error_m", "skipped"])
    for r in reports:
        for run in range(len(r.digests)):
            for m in r.methods:
                w.writerow([r.scenario.name, run, m, _fmt(r.per_method[m][run]),
                            r.skipped_counts[m][run]])
    return buf.getvalue()


def convergence_csv(reports: Sequence[ScenarioReport], header: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(["scenario", "method", "iteration", "mean_best_fitness"])
    for r in reports:
        for m, curve in r.convergence.items():
            for t, v in enumerate(curve):
                w.writerow([r.scenario.name, m, t, _fmt(v)])
    return buf.getvalue()


def summary(reports: Sequence[ScenarioReport]) -> dict:
    scen = {}
    per_scenario_red = []
    for r in reports:
        entry = {
            "scenario": asdict(r.scenario),
            "master_seed": r.master_seed,
            "methods": {
                m: {
                    "mean_error_m": _num(r.mean(m)),
                    "std_error_m": _num(r.std(m)),
                    "valid_runs": sum(1 for v in r.per_method[m] if not math.isnan(v)),
                    "mean_skipped": float(np.mean(r.skipped_counts[m])),
                }
                for m in r.methods
            },
        }
        if OURS in r.methods and len(r.methods) > 1:
            red = compare(r)
            entry["reduction_pct"] = red
            per_scenario_red.append(red)
        scen[r.scenario.name] = entry
    out = {"scenarios": scen}
    if per_scenario_red:
        out["pooled_reduction_pct"] = pooled_reduction(per_scenario_red)
    return out


def _num(x: float):
    return None if math.isnan(x) else x


def summary_json(reports: Sequence[ScenarioReport]) -> str:
    return json.dumps(summary(reports), indent=2, sort_keys=True) + "\n"


def table(reports: Sequence[ScenarioReport]) -> str:
    """Plain-text table of mean errors, one row per scenario."""
    methods = []
    for r in reports:
        methods += [m for m in r.methods if m not in methods]
    lines = ["scenario  " + "".join(f"{m:>13}" for m in methods)]
    for r in reports:
        cells = []
        for m in methods:
            cells.append(f"{r.mean(m):>12.4f}m" if m in r.methods else f"{'-':>13}")
        lines.append(f"{r.scenario.name:<10}" + "".join(cells))
    return "\n".join(lines)
