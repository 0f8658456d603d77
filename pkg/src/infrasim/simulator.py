"""The budget-coupled POMDP environment.

One :class:`Simulation` owns the whole fleet as flat numpy arrays and advances
it with gym-style reset/step/observe. Components are independent except for
the shared budget, so every per-step phase is vectorized; the only inherently
sequential piece, budget charging, runs as a compiled scan in ascending
component order.

Step phases, in order: budget cycle allocation; action resolution
(availability / hard-failure / affordability downgrades, pricing, charging,
effects); natural deterioration for everything not replaced this step; reward
on the post-step true conditions; termination bookkeeping.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import (
    MAX_STEPS_SINCE_INSPECTION,
    NO_OBSERVATION,
    Action,
    ComponentGroup,
    ComponentSpec,
    Hierarchy,
    HierarchyNode,
    ValidationError,
    validate_metadata,
)
from .dynamics import DynamicsConfig, round_half_up, truncated_normal
from .economics import BudgetModel, BudgetState, advance_cycle

try:  # the scan is hot for fleet-wide maintenance rounds on 1e5 components
    import numba

    @numba.njit(cache=True)
    def _charge_scan(costs: np.ndarray, remaining: float):  # pragma: no cover
        accepted = np.zeros(costs.shape[0], dtype=np.bool_)
        rem = remaining
        for i in range(costs.shape[0]):
            c = costs[i]
            if c <= rem:
                accepted[i] = True
                rem -= c
        return accepted, rem

except ImportError:  # pragma: no cover

    def _charge_scan(costs: np.ndarray, remaining: float):
        accepted = np.zeros(costs.shape[0], dtype=np.bool_)
        rem = remaining
        for i in range(costs.shape[0]):
            c = costs[i]
            if c <= rem:
                accepted[i] = True
                rem -= c
        return accepted, rem


TERMINATION_MODES = ("first_failure", "horizon")

_REWARD_REGISTRY: dict[str, Callable[[np.ndarray, np.ndarray, "RewardConfig"], float]] = {}


def register_reward(tag: str, fn: Callable[[np.ndarray, np.ndarray, "RewardConfig"], float]):
    """Register a custom reward callable selectable as kind="custom:<tag>"."""
    _REWARD_REGISTRY[tag] = fn


@dataclass(frozen=True)
class RewardConfig:
    """Reward family selector.

    ``threshold_margin``: mean margin above the failure thresholds, normalized
    by ``normalizer`` (default 100*n), minus ``failure_penalty`` for every
    component at or below its threshold. The penalty sits outside the
    normalizer so it does not vanish for large fleets.

    ``survival_time``: 1 per step until the first component failure, so the
    episode return is the number of steps survived (capped by the horizon).
    """

    kind: str = "threshold_margin"
    failure_penalty: float = 10.0
    normalizer: float | None = None

    def __post_init__(self):
        if self.failure_penalty < 0:
            raise ValidationError("reward.failure_penalty", "must be >= 0")
        known = self.kind in ("threshold_margin", "survival_time")
        if not known and not self.kind.startswith("custom:"):
            raise ValidationError(
                "reward.kind",
                f"must be 'threshold_margin', 'survival_time', or 'custom:<tag>', got {self.kind!r}",
            )
        if self.normalizer is not None and not self.normalizer > 0:
            raise ValidationError("reward.normalizer", "must be > 0 when given")


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete description of one environment instance."""

    components: tuple[ComponentSpec, ...]
    budget: BudgetModel
    horizon: int = 100
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    termination: str = "horizon"
    master_seed: int = 0
    name: str = "scenario"
    hierarchy: tuple[HierarchyNode, ...] = ()
    metadata: dict[str, str] = field(default_factory=dict)
    groups: tuple[ComponentGroup, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "hierarchy", tuple(self.hierarchy))
        object.__setattr__(self, "groups", tuple(self.groups))
        if self.horizon < 1:
            raise ValidationError("horizon", f"must be >= 1, got {self.horizon}")
        if not self.components:
            raise ValidationError("components", "at least one component is required")
        if self.termination not in TERMINATION_MODES:
            raise ValidationError(
                "termination", f"must be one of {TERMINATION_MODES}, got {self.termination!r}"
            )
        ids = set()
        for i, comp in enumerate(self.components):
            if comp.id in ids:
                raise ValidationError(f"components[{i}].id", f"duplicate id {comp.id!r}")
            ids.add(comp.id)
        if self.hierarchy:
            h = Hierarchy(self.hierarchy)
            for node in self.hierarchy:
                for cid in node.member_components:
                    if cid not in ids:
                        raise ValidationError(
                            f"hierarchy[{node.id}].member_components",
                            f"unknown component {cid!r}",
                        )
            del h
        validate_metadata(self.metadata)

    @property
    def n_components(self) -> int:
        return len(self.components)


@dataclass
class StepResult:
    """What one environment step hands back to the decision maker."""

    observation: np.ndarray
    reward: float
    terminated: bool
    truncated: bool
    info: dict

    @property
    def done(self) -> bool:
        return self.terminated or self.truncated


class IllegalStateError(RuntimeError):
    """step() called on a finished or unreset simulation."""


def reward_threshold_margin(
    cis: Sequence[float] | np.ndarray,
    thresholds: Sequence[float] | np.ndarray,
    cfg: RewardConfig | None = None,
) -> float:
    """Margin-above-threshold reward with a flat per-failure penalty.

    (1 / normalizer) * sum_i (ci_i - threshold_i)
        - failure_penalty * |{i : ci_i <= threshold_i}|

    The caller supplies the condition values at whatever rounding convention
    it reports (the engine passes floored true conditions).
    """
    cfg = cfg or RewardConfig()
    cis = np.asarray(cis, dtype=np.float64)
    thresholds = np.asarray(thresholds, dtype=np.float64)
    if cis.shape != thresholds.shape:
        raise ValueError(f"shape mismatch: {cis.shape} vs {thresholds.shape}")
    norm = cfg.normalizer if cfg.normalizer is not None else 100.0 * cis.shape[0]
    margin = float(np.sum(cis - thresholds)) / norm
    failures = int(np.count_nonzero(cis <= thresholds))
    return margin - cfg.failure_penalty * failures


class Simulation:
    """Vectorized fleet simulation for one scenario.

    Not reentrant: one logical owner per instance. Use :meth:`clone` to branch
    an independent copy (deep copy of state and random streams).
    """

    def __init__(self, config: ScenarioConfig):
        self.config = config
        specs = config.components
        self.n = len(specs)
        self.ids: list[str] = [c.id for c in specs]
        self.id_to_index = {cid: i for i, cid in enumerate(self.ids)}

        def arr(get, dtype=np.float64):
            return np.fromiter((get(c) for c in specs), dtype=dtype, count=self.n)

        self.shape_mean = arr(lambda c: c.shape)
        self.scale_mean = arr(lambda c: c.scale)
        self.threshold = arr(lambda c: c.failure_threshold)
        self.replace_cost = arr(lambda c: c.replace_cost)
        self.cost_exponent = arr(lambda c: c.cost_exponent)
        self.min_repair_fraction = arr(lambda c: c.min_repair_fraction)
        self.inspect_cost = arr(lambda c: c.inspect_cost)
        self.importance = arr(lambda c: c.importance)
        self.hazard = arr(lambda c: c.hazard_rate)
        self.any_hazard = bool(np.any(self.hazard > 0))
        # availability windows are rare; keep only the components that have any
        self.windowed: list[tuple[int, tuple[tuple[int, int], ...]]] = [
            (i, c.availability_windows) for i, c in enumerate(specs) if c.availability_windows
        ]
        self._started = False
        self.reset(config.master_seed)

    # -- lifecycle -----------------------------------------------------------

    def reset(self, seed: int | None = None) -> np.ndarray:
        """Start a fresh episode; returns the initial observation."""
        self.seed = int(self.config.master_seed if seed is None else seed)
        ss = np.random.SeedSequence(self.seed)
        params_ss, jitter_ss, hazard_ss, obs_ss = ss.spawn(4)
        self._params_rng = np.random.default_rng(params_ss)
        self._jitter_rng = np.random.default_rng(jitter_ss)
        self._hazard_rng = np.random.default_rng(hazard_ss)
        self._obs_rng = np.random.default_rng(obs_ss)

        dyn = self.config.dynamics
        self.k = truncated_normal(
            self._params_rng, self.shape_mean, dyn.shape_std, dyn.shape_min, self.n
        )
        self.lam = truncated_normal(
            self._params_rng, self.scale_mean, dyn.scale_std, dyn.scale_min, self.n
        )

        self.age = np.zeros(self.n, dtype=np.float64)
        self.ci = np.full(self.n, 100.0, dtype=np.float64)
        self.failed = np.zeros(self.n, dtype=bool)
        self.last_obs = np.full(self.n, NO_OBSERVATION, dtype=np.int16)
        self.steps_since_inspection = np.zeros(self.n, dtype=np.int16)

        self.budget = BudgetState.initial(self.config.budget)
        self.t = 0
        self.terminated = False
        self.truncated = False
        self.episode_return = 0.0
        self._any_failure_so_far = False
        self._threshold_failed = np.zeros(self.n, dtype=bool)
        self.first_failure_step = np.full(self.n, -1, dtype=np.int64)
        self.replacements_total = 0
        self.failure_events = 0
        self._started = True
        return self.observe()

    def clone(self) -> "Simulation":
        """Independent deep copy: state, budget, and random streams."""
        return copy.deepcopy(self)

    def reseed_future(self, entropy: Sequence[int]) -> None:
        """Re-derive the random streams so a cloned run explores a different
        stochastic future from the same present state."""
        ss = np.random.SeedSequence(tuple(int(e) for e in entropy))
        params_ss, jitter_ss, hazard_ss, obs_ss = ss.spawn(4)
        self._params_rng = np.random.default_rng(params_ss)
        self._jitter_rng = np.random.default_rng(jitter_ss)
        self._hazard_rng = np.random.default_rng(hazard_ss)
        self._obs_rng = np.random.default_rng(obs_ss)

    # -- observation ---------------------------------------------------------

    def observe(self) -> np.ndarray:
        """[last_obs per component, remaining budget, steps-since-inspection
        per component]; length 2n+1."""
        out = np.empty(2 * self.n + 1, dtype=np.float64)
        out[: self.n] = self.last_obs
        out[self.n] = self.budget.remaining
        out[self.n + 1 :] = self.steps_since_inspection
        return out

    def true_ci(self) -> np.ndarray:
        return self.ci.copy()

    def displayed_ci(self) -> np.ndarray:
        return np.floor(self.ci)

    def availability_mask(self, t: int | None = None) -> np.ndarray:
        """Per-component availability for maintenance at step t (default now)."""
        t = self.t if t is None else t
        mask = np.ones(self.n, dtype=bool)
        for i, windows in self.windowed:
            for a, b in windows:
                if a <= t <= b:
                    mask[i] = False
                    break
        return mask

    # -- stepping ------------------------------------------------------------

    def step(self, actions: Sequence[int] | np.ndarray) -> StepResult:
        if not self._started:
            raise IllegalStateError("reset() the simulation before stepping")
        if self.terminated or self.truncated:
            raise IllegalStateError(f"episode already finished at step {self.t}")
        requested = np.asarray(actions, dtype=np.int64)
        if requested.shape != (self.n,):
            raise ValueError(f"expected {self.n} actions, got shape {requested.shape}")
        if requested.size and (requested.min() < 0 or requested.max() > 3):
            raise ValueError("action codes must be in {0, 1, 2, 3}")

        t = self.t
        self.budget = advance_cycle(self.budget, self.config.budget, t)

        applied = requested.copy()
        downgrades: list[tuple[int, str]] = []

        # unavailable components: no maintenance action of any kind
        if self.windowed:
            for i, windows in self.windowed:
                if applied[i] != Action.DO_NOTHING:
                    for a, b in windows:
                        if a <= t <= b:
                            downgrades.append((i, "unavailable"))
                            applied[i] = Action.DO_NOTHING
                            break

        # repairing a hard-failed component has no effect; only replace revives
        dead_repairs = np.nonzero((applied == Action.REPAIR) & self.failed)[0]
        for i in dead_repairs:
            downgrades.append((int(i), "failed"))
            applied[i] = Action.DO_NOTHING

        # pricing (on pre-deterioration condition)
        costs = np.zeros(self.n, dtype=np.float64)
        inspect_mask = applied == Action.INSPECT
        repair_mask = applied == Action.REPAIR
        replace_mask = applied == Action.REPLACE
        if inspect_mask.any():
            costs[inspect_mask] = self.inspect_cost[inspect_mask]
        if repair_mask.any():
            idx = np.nonzero(repair_mask)[0]
            ratio = (100.0 - self.ci[idx]) / (100.0 - self.threshold[idx])
            costs[idx] = (
                np.power(ratio, self.cost_exponent[idx]) * self.replace_cost[idx]
                + self.min_repair_fraction[idx] * self.replace_cost[idx]
            )
        if replace_mask.any():
            costs[replace_mask] = self.replace_cost[replace_mask]

        # sequential charging in ascending component order
        candidates = np.nonzero(applied != Action.DO_NOTHING)[0]
        charged = np.zeros(self.n, dtype=np.float64)
        if candidates.size:
            accepted, remaining = _charge_scan(costs[candidates], self.budget.remaining)
            rejected = candidates[~accepted]
            for i in rejected:
                downgrades.append((int(i), "budget"))
            applied[rejected] = Action.DO_NOTHING
            ok = candidates[accepted]
            charged[ok] = costs[ok]
            spent = float(np.sum(costs[ok]))
            self.budget = BudgetState(
                remaining=float(remaining),
                current_cycle=self.budget.current_cycle,
                spent_total=self.budget.spent_total + spent,
                allocated_total=self.budget.allocated_total,
            )

        # action effects
        inspect_idx = np.nonzero(applied == Action.INSPECT)[0]
        repair_idx = np.nonzero(applied == Action.REPAIR)[0]
        replace_idx = np.nonzero(applied == Action.REPLACE)[0]
        dyn = self.config.dynamics

        if inspect_idx.size:
            seen = self.ci[inspect_idx]
            if dyn.obs_noise_std > 0:
                seen = seen + dyn.obs_noise_std * self._obs_rng.standard_normal(inspect_idx.size)
            self.last_obs[inspect_idx] = np.clip(round_half_up(seen), 0, 100).astype(np.int16)
            self.steps_since_inspection[inspect_idx] = 0

        if repair_idx.size:
            new_ci = np.minimum(100.0, self.ci[repair_idx] + dyn.repair_gain)
            new_age = np.where(
                new_ci >= 100.0,
                0.0,
                self.lam[repair_idx]
                * np.power(-np.log(new_ci / 100.0), 1.0 / self.k[repair_idx]),
            )
            self.ci[repair_idx] = new_ci
            self.age[repair_idx] = new_age

        if replace_idx.size:
            self.age[replace_idx] = 0.0
            self.ci[replace_idx] = 100.0
            self.failed[replace_idx] = False
            self.last_obs[replace_idx] = 100
            self.steps_since_inspection[replace_idx] = 0
            self._threshold_failed[replace_idx] = False
            self.replacements_total += int(replace_idx.size)
            if dyn.redraw_on_replace:
                self.k[replace_idx] = truncated_normal(
                    self._params_rng,
                    self.shape_mean[replace_idx],
                    dyn.shape_std,
                    dyn.shape_min,
                    replace_idx.size,
                )
                self.lam[replace_idx] = truncated_normal(
                    self._params_rng,
                    self.scale_mean[replace_idx],
                    dyn.scale_std,
                    dyn.scale_min,
                    replace_idx.size,
                )

        # natural deterioration for everything not replaced this step;
        # hard-failed components are absorbing
        det = ~self.failed
        if replace_idx.size:
            det[replace_idx] = False
        if det.any():
            if dyn.age_jitter_std > 0:
                increments = np.exp(dyn.age_jitter_std * self._jitter_rng.standard_normal(self.n))
                self.age[det] += increments[det]
            else:
                self.age[det] += 1.0
            self.ci[det] = 100.0 * np.exp(-np.power(self.age[det] / self.lam[det], self.k[det]))
            if self.any_hazard:
                u = self._hazard_rng.random(self.n)
                struck = det & (u < self.hazard)
                if struck.any():
                    self.failed[struck] = True
                    self.ci[struck] = 0.0
            self.steps_since_inspection[det] = np.minimum(
                self.steps_since_inspection[det] + 1, MAX_STEPS_SINCE_INSPECTION
            )
            # an inspection this step means 0 completed steps since inspection
            if inspect_idx.size:
                self.steps_since_inspection[inspect_idx] = 0

        # reward on post-step true conditions (floored, the reporting convention)
        floor_ci = np.floor(self.ci)
        fail_mask = floor_ci <= self.threshold
        new_failures = np.nonzero(fail_mask & ~self._threshold_failed)[0]
        if new_failures.size:
            fresh = new_failures[self.first_failure_step[new_failures] < 0]
            self.first_failure_step[fresh] = t + 1
            self.failure_events += int(new_failures.size)
        self._threshold_failed = fail_mask

        reward = self._compute_reward(floor_ci, fail_mask)
        self.episode_return += reward
        if fail_mask.any():
            self._any_failure_so_far = True

        if self.config.termination == "first_failure" and bool(fail_mask.any()):
            self.terminated = True
        if not self.terminated and t + 1 >= self.config.horizon:
            self.truncated = True
        self.t = t + 1

        info = {
            "true_ci": self.ci.copy(),
            "requested_actions": requested,
            "applied_actions": applied,
            "downgrades": downgrades,
            "costs": charged,
            "cost_total": float(np.sum(charged)),
            "new_failures": [int(i) for i in new_failures],
            "replacements": int(replace_idx.size),
            "budget_remaining": self.budget.remaining,
            "budget_spent_total": self.budget.spent_total,
            "budget_allocated_total": self.budget.allocated_total,
            "budget_cycle": self.budget.current_cycle,
        }
        return StepResult(
            observation=self.observe(),
            reward=reward,
            terminated=self.terminated,
            truncated=self.truncated,
            info=info,
        )

    def _compute_reward(self, floor_ci: np.ndarray, fail_mask: np.ndarray) -> float:
        cfg = self.config.reward
        if cfg.kind == "threshold_margin":
            return reward_threshold_margin(floor_ci, self.threshold, cfg)
        if cfg.kind == "survival_time":
            return 0.0 if self._any_failure_so_far else 1.0
        tag = cfg.kind.split(":", 1)[1]
        try:
            fn = _REWARD_REGISTRY[tag]
        except KeyError:
            raise ValidationError("reward.kind", f"custom reward {tag!r} is not registered")
        return float(fn(floor_ci, self.threshold, cfg))

    # -- derived metrics -----------------------------------------------------

    def failure_times_censored(self, horizon: int | None = None) -> np.ndarray:
        """Per-component first-failure step, censored at the horizon."""
        h = self.config.horizon if horizon is None else horizon
        out = self.first_failure_step.astype(np.float64)
        out[out < 0] = h
        return out

    def summary(self) -> "EpisodeSummary":
        from .episode_log import EpisodeSummary

        allocated = self.budget.allocated_total
        return EpisodeSummary(
            steps=self.t,
            terminated=self.terminated,
            truncated=self.truncated,
            episode_return=self.episode_return,
            replacements_total=self.replacements_total,
            failure_events=self.failure_events,
            spent_total=self.budget.spent_total,
            allocated_total=allocated,
            budget_utilization_pct=(
                100.0 * self.budget.spent_total / allocated if allocated > 0 else 0.0
            ),
            ettf=float(np.mean(self.failure_times_censored())),
        )


def run_episode(
    config_or_sim: ScenarioConfig | Simulation,
    policy,
    seed: int | None = None,
    include_true_ci: bool = True,
    collect_records: bool = True,
) -> "EpisodeLog":
    """Roll one episode of ``policy`` and return its log.

    The log is deterministic for a given (scenario, policy, seed): wall-clock
    fields stay null on this path. Pass ``collect_records=False`` to keep only
    the header and summary (metric runs over large fleets).
    """
    from .episode_log import EpisodeLog, EpisodeRecord
    from .policies import PolicyContractError, context_from_simulation
    from .scenario_io import fingerprint, scenario_to_dict

    sim = config_or_sim if isinstance(config_or_sim, Simulation) else Simulation(config_or_sim)
    obs = sim.reset(seed)
    policy.reset(context_from_simulation(sim), seed=sim.seed)

    log = EpisodeLog(
        scenario=scenario_to_dict(sim.config),
        fingerprint=fingerprint(sim.config),
        seed=sim.seed,
        policy=policy.describe(),
        include_true_ci=include_true_ci,
    )
    while not (sim.terminated or sim.truncated):
        t = sim.t
        actions = np.asarray(policy.act(obs, t))
        if actions.shape != (sim.n,):
            raise PolicyContractError(
                f"step {t}: policy {policy.describe()!r} returned shape {actions.shape}, "
                f"expected ({sim.n},)"
            )
        if actions.size and (actions.min() < 0 or actions.max() > 3):
            raise PolicyContractError(
                f"step {t}: policy {policy.describe()!r} returned action codes outside 0..3"
            )
        result = sim.step(actions)
        if collect_records:
            info = result.info
            log.records.append(
                EpisodeRecord(
                    t=t,
                    observation=result.observation.tolist(),
                    actions=info["requested_actions"].tolist(),
                    applied=info["applied_actions"].tolist(),
                    downgrades=[[i, reason] for i, reason in info["downgrades"]],
                    cost_total=info["cost_total"],
                    reward=result.reward,
                    budget_remaining=info["budget_remaining"],
                    new_failures=info["new_failures"],
                    replacements=info["replacements"],
                    true_ci=info["true_ci"].tolist() if include_true_ci else None,
                )
            )
        obs = result.observation
    log.summary = sim.summary()
    return log
