"""Predefined environments, fleet metrics, and the batch benchmark runner.

The five stock scenarios cover the teaching case (five components, tight
fixed budget, episode ends at the first failure), periodic budgets, sudden
multi-component failures, maintenance blackout windows, and the 100,000
component scaling benchmark. The runner rolls a policy over independent
seeded episodes and reports time-to-failure, budget utilization, and
replacement counts; results are identical for any parallelism degree.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import ComponentGroup, ComponentSpec
from .dynamics import DynamicsConfig
from .economics import BudgetModel
from .episode_log import EpisodeLog
from .policies import Policy, parse_policy
from .simulator import RewardConfig, ScenarioConfig, Simulation

PREDEFINED = ("simple5", "cyclic", "catastrophic", "intermittent", "largesys")

REPORT_FORMAT = "benchmark-report/1"


def generate_simple5(seed: int = 0) -> ScenarioConfig:
    """Five heterogeneous components, fixed budget 2000, failure threshold 40,
    horizon 100, episode ends at the first failure."""
    shapes = [1.6, 2.0, 2.4, 1.8, 2.2]
    scales = [55.0, 70.0, 60.0, 80.0, 65.0]
    costs = [400.0, 320.0, 360.0, 450.0, 380.0]
    components = tuple(
        ComponentSpec(
            id=f"c{i}",
            type_id=f"t{i}",
            shape=shapes[i],
            scale=scales[i],
            failure_threshold=40.0,
            replace_cost=costs[i],
            cost_exponent=2.0,
            min_repair_fraction=0.1,
            inspect_cost=4.0,
        )
        for i in range(5)
    )
    return ScenarioConfig(
        components=components,
        budget=BudgetModel(kind="fixed", fixed_amount=2000.0),
        horizon=100,
        dynamics=DynamicsConfig(
            shape_std=0.15, scale_std=4.0, shape_min=0.5, scale_min=5.0, repair_gain=30.0
        ),
        reward=RewardConfig(kind="threshold_margin"),
        termination="first_failure",
        master_seed=seed,
        name="simple5",
    )


def generate_cyclic(seed: int = 0) -> ScenarioConfig:
    """Eight components on a four-cycle periodic budget (use-it-or-lose-it)."""
    components = tuple(
        ComponentSpec(
            id=f"c{i}",
            type_id="cyclic",
            shape=1.8 + 0.1 * i,
            scale=50.0 + 6.0 * i,
            failure_threshold=40.0,
            replace_cost=300.0 + 25.0 * i,
            inspect_cost=3.0,
        )
        for i in range(8)
    )
    return ScenarioConfig(
        components=components,
        budget=BudgetModel(
            kind="cyclic",
            cycle_starts=(0, 25, 50, 75),
            cycle_amounts=(600.0, 600.0, 600.0, 600.0),
        ),
        horizon=100,
        dynamics=DynamicsConfig(shape_std=0.15, scale_std=4.0, shape_min=0.5, scale_min=5.0),
        termination="horizon",
        master_seed=seed,
        name="cyclic",
    )


def generate_catastrophic(seed: int = 0) -> ScenarioConfig:
    """Ten components, four of which can fail suddenly each step."""
    components = tuple(
        ComponentSpec(
            id=f"c{i}",
            type_id="exposed" if i < 4 else "sheltered",
            shape=2.0,
            scale=60.0 + 4.0 * i,
            failure_threshold=40.0,
            replace_cost=350.0,
            inspect_cost=3.0,
            hazard_rate=0.02 if i < 4 else 0.0,
        )
        for i in range(10)
    )
    return ScenarioConfig(
        components=components,
        budget=BudgetModel(kind="fixed", fixed_amount=5000.0),
        horizon=100,
        dynamics=DynamicsConfig(shape_std=0.15, scale_std=4.0, shape_min=0.5, scale_min=5.0),
        termination="horizon",
        master_seed=seed,
        name="catastrophic",
    )


def generate_intermittent(seed: int = 0) -> ScenarioConfig:
    """Six components; three have maintenance blackout windows."""
    windows = [
        ((10, 25), (60, 80)),
        ((30, 45),),
        ((0, 5), (50, 70)),
        (),
        (),
        (),
    ]
    components = tuple(
        ComponentSpec(
            id=f"c{i}",
            type_id="windowed" if windows[i] else "open",
            shape=2.0,
            scale=55.0 + 5.0 * i,
            failure_threshold=40.0,
            replace_cost=300.0,
            inspect_cost=3.0,
            availability_windows=windows[i],
        )
        for i in range(6)
    )
    return ScenarioConfig(
        components=components,
        budget=BudgetModel(kind="fixed", fixed_amount=3000.0),
        horizon=100,
        dynamics=DynamicsConfig(shape_std=0.15, scale_std=4.0, shape_min=0.5, scale_min=5.0),
        termination="horizon",
        master_seed=seed,
        name="intermittent",
    )


#: documented meta-ranges for the per-type parameters of the scaling benchmark
LARGESYS_SHAPE_RANGE = (1.2, 3.0)
LARGESYS_SCALE_RANGE = (20.0, 120.0)
LARGESYS_COST_RANGE = (50.0, 5000.0)
LARGESYS_TYPES = 100
LARGESYS_PER_TYPE = 1000
LARGESYS_BUDGET = 20_000_000.0


def generate_largesys(seed: int = 0) -> ScenarioConfig:
    """The 100,000-component scaling benchmark: 100 types, 1000 instances per
    type, fixed budget of 20,000,000, components fail at condition 0.

    Per-type deterioration and cost parameters are drawn once, deterministically
    from ``seed``, within the documented meta-ranges above; per-instance
    variation around the type means comes from the scenario's dynamics config
    at reset time.
    """
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0x1A26E515)))
    shapes = rng.uniform(*LARGESYS_SHAPE_RANGE, LARGESYS_TYPES)
    scales = rng.uniform(*LARGESYS_SCALE_RANGE, LARGESYS_TYPES)
    costs = rng.uniform(*LARGESYS_COST_RANGE, LARGESYS_TYPES)
    groups = tuple(
        ComponentGroup(
            type_id=f"type{i:03d}",
            count=LARGESYS_PER_TYPE,
            shape=float(shapes[i]),
            scale=float(scales[i]),
            failure_threshold=0.0,
            replace_cost=float(costs[i]),
            cost_exponent=2.0,
            min_repair_fraction=0.1,
            inspect_cost=1.0,
        )
        for i in range(LARGESYS_TYPES)
    )
    return ScenarioConfig(
        components=tuple(g for group in groups for g in group.expand()),
        budget=BudgetModel(kind="fixed", fixed_amount=LARGESYS_BUDGET),
        horizon=100,
        dynamics=DynamicsConfig(
            shape_std=0.1, scale_std=5.0, shape_min=0.5, scale_min=5.0, repair_gain=30.0
        ),
        reward=RewardConfig(kind="threshold_margin"),
        termination="horizon",
        master_seed=seed,
        name="largesys",
        groups=groups,
    )


def generate_predefined(name: str, seed: int = 0) -> ScenarioConfig:
    builders = {
        "simple5": generate_simple5,
        "cyclic": generate_cyclic,
        "catastrophic": generate_catastrophic,
        "intermittent": generate_intermittent,
        "largesys": generate_largesys,
    }
    try:
        return builders[name](seed)
    except KeyError:
        raise ValueError(
            f"unknown scenario {name!r}; valid names: {', '.join(PREDEFINED)}"
        ) from None


# -- metrics -------------------------------------------------------------------


def ettf(logs: list[EpisodeLog], horizon: int) -> float:
    """Mean first-failure step over runs and components, counting components
    that never failed as ``horizon`` (censoring)."""
    if not logs:
        raise ValueError("ettf needs at least one episode log")
    per_run: list[float] = []
    n_expected: int | None = None
    for log in logs:
        if not log.records:
            raise ValueError("ettf needs at least one step per log")
        n = (len(log.records[0].observation) - 1) // 2
        if n_expected is None:
            n_expected = n
        elif n != n_expected:
            raise ValueError(f"inconsistent component counts across logs: {n} vs {n_expected}")
        times = np.full(n, float(horizon))
        seen = np.zeros(n, dtype=bool)
        for rec in log.records:
            for i in rec.new_failures:
                if not seen[i]:
                    times[i] = min(float(rec.t + 1), float(horizon))
                    seen[i] = True
        per_run.append(float(np.mean(times)))
    return float(np.mean(per_run))


@dataclass
class RunRow:
    """Deterministic metrics of one benchmark episode."""

    run: int
    seed: int
    ettf: float
    budget_utilization_pct: float
    replacements_total: int
    failures_total: int
    episode_length: int
    episode_return: float


CSV_COLUMNS = (
    "run",
    "seed",
    "ettf",
    "budget_utilization_pct",
    "replacements_total",
    "failures_total",
    "episode_length",
    "episode_return",
)

_AGG_METRICS = (
    "ettf",
    "budget_utilization_pct",
    "replacements_total",
    "failures_total",
    "episode_length",
    "episode_return",
)


@dataclass
class BenchmarkReport:
    """Per-run rows plus aggregates; runtime stats are volatile and excluded
    from any determinism comparison."""

    scenario_name: str
    fingerprint: str
    policy: str
    n_runs: int
    base_seed: int
    horizon: int
    rows: list[RunRow] = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    runtime: dict = field(default_factory=dict)

    def recompute_aggregates(self) -> dict:
        out: dict[str, dict[str, float]] = {}
        for metric in _AGG_METRICS:
            values = np.array([getattr(r, metric) for r in self.rows], dtype=np.float64)
            out[metric] = {"mean": float(values.mean()), "std": float(values.std())}
        return out

    def to_dict(self) -> dict:
        return {
            "format": REPORT_FORMAT,
            "scenario_name": self.scenario_name,
            "fingerprint": self.fingerprint,
            "policy": self.policy,
            "n_runs": self.n_runs,
            "base_seed": self.base_seed,
            "horizon": self.horizon,
            "rows": [asdict(r) for r in self.rows],
            "aggregates": self.aggregates,
            "runtime": self.runtime,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "BenchmarkReport":
        if obj.get("format") != REPORT_FORMAT:
            raise ValueError(
                f"unsupported report format {obj.get('format')!r}; expected {REPORT_FORMAT}"
            )
        return cls(
            scenario_name=obj["scenario_name"],
            fingerprint=obj["fingerprint"],
            policy=obj["policy"],
            n_runs=obj["n_runs"],
            base_seed=obj["base_seed"],
            horizon=obj["horizon"],
            rows=[RunRow(**r) for r in obj["rows"]],
            aggregates=obj["aggregates"],
            runtime=obj.get("runtime", {}),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "BenchmarkReport":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        lines = [",".join(CSV_COLUMNS)]
        for r in self.rows:
            lines.append(",".join(repr(getattr(r, c)) for c in CSV_COLUMNS))
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        head = (
            f"scenario: {self.scenario_name}   policy: {self.policy}   "
            f"runs: {self.n_runs}   base seed: {self.base_seed}"
        )
        cols = ["metric", "mean", "std"]
        widths = [24, 16, 16]
        sep = "  ".join("-" * w for w in widths)
        lines = [head, sep, "  ".join(c.ljust(w) for c, w in zip(cols, widths)), sep]
        for metric in _AGG_METRICS:
            agg = self.aggregates[metric]
            lines.append(
                f"{metric:<24}  {agg['mean']:<16.6g}  {agg['std']:<16.6g}"
            )
        lines.append(sep)
        return "\n".join(lines) + "\n"


def _row_from_sim(sim: Simulation, run: int, seed: int) -> RunRow:
    allocated = sim.budget.allocated_total
    return RunRow(
        run=run,
        seed=seed,
        ettf=float(np.mean(sim.failure_times_censored())),
        budget_utilization_pct=(
            100.0 * sim.budget.spent_total / allocated if allocated > 0 else 0.0
        ),
        replacements_total=sim.replacements_total,
        failures_total=sim.failure_events,
        episode_length=sim.t,
        episode_return=sim.episode_return,
    )


def _roll(sim: Simulation, policy: Policy, seed: int) -> None:
    from .policies import context_from_simulation

    obs = sim.reset(seed)
    policy.reset(context_from_simulation(sim), seed=seed)
    while not (sim.terminated or sim.truncated):
        result = sim.step(policy.act(obs, sim.t))
        obs = result.observation


_WORKER: dict = {}


def _init_worker(scenario_json: str, policy_descriptor: str) -> None:
    from .scenario_io import scenario_from_dict

    config = scenario_from_dict(json.loads(scenario_json))
    _WORKER["sim"] = Simulation(config)
    _WORKER["policy"] = parse_policy(policy_descriptor)


def _run_seed(args: tuple[int, int]) -> RunRow:
    run, seed = args
    sim: Simulation = _WORKER["sim"]
    _roll(sim, _WORKER["policy"], seed)
    return _row_from_sim(sim, run, seed)


def run_benchmark(
    config: ScenarioConfig,
    policy: Policy | str,
    n_runs: int,
    base_seed: int = 0,
    jobs: int = 1,
) -> BenchmarkReport:
    """Roll ``n_runs`` independent episodes with seeds base_seed..base_seed+n-1.

    Rows and aggregates depend only on (config, policy, seeds); ``jobs`` just
    spreads runs over worker processes. Parallel runs need the policy as a
    descriptor string so workers can rebuild it.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    from .scenario_io import fingerprint, scenario_to_dict

    descriptor = policy if isinstance(policy, str) else policy.describe()
    started = time.perf_counter()
    rows: list[RunRow]
    if jobs <= 1:
        sim = Simulation(config)
        pol = parse_policy(policy) if isinstance(policy, str) else policy
        rows = []
        for run in range(n_runs):
            seed = base_seed + run
            _roll(sim, pol, seed)
            rows.append(_row_from_sim(sim, run, seed))
    else:
        scenario_json = json.dumps(scenario_to_dict(config), sort_keys=True)
        tasks = [(run, base_seed + run) for run in range(n_runs)]
        with ProcessPoolExecutor(
            max_workers=min(jobs, n_runs),
            initializer=_init_worker,
            initargs=(scenario_json, descriptor),
        ) as pool:
            rows = list(pool.map(_run_seed, tasks))
    elapsed = time.perf_counter() - started

    report = BenchmarkReport(
        scenario_name=config.name,
        fingerprint=fingerprint(config),
        policy=descriptor,
        n_runs=n_runs,
        base_seed=base_seed,
        horizon=config.horizon,
        rows=rows,
    )
    report.aggregates = report.recompute_aggregates()
    report.runtime = {
        "wall_s": elapsed,
        "jobs": jobs,
        "runs_per_s": n_runs / elapsed if elapsed > 0 else float("inf"),
    }
    return report
