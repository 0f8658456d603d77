"""Baseline decision policies behind one small interface.

Policies see only the observation vector (last observed conditions, remaining
budget, inspection ages) plus static scenario facts; they never read the
latent state. All of them are deterministic functions of (observation, step),
which keeps episode logs replayable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import NO_OBSERVATION, Action


class PolicyContractError(RuntimeError):
    """A policy emitted an action vector the environment cannot accept."""


@dataclass(frozen=True)
class PolicyContext:
    """Static, non-secret scenario facts made available to policies."""

    n: int
    thresholds: np.ndarray
    replace_costs: np.ndarray
    inspect_costs: np.ndarray
    cost_exponents: np.ndarray
    min_repair_fractions: np.ndarray
    importance: np.ndarray
    horizon: int
    metadata: dict[str, str] = field(default_factory=dict)


class Policy:
    """Base interface: reset once per episode, then act on each observation."""

    name = "policy"

    def reset(self, ctx: PolicyContext, seed: int | None = None) -> None:
        self.ctx = ctx

    def act(self, observation: np.ndarray, t: int) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> str:
        return self.name


class NoActionPolicy(Policy):
    """Let everything deteriorate naturally."""

    name = "no-action"

    def act(self, observation: np.ndarray, t: int) -> np.ndarray:
        return np.zeros(self.ctx.n, dtype=np.int64)


@dataclass(frozen=True)
class RuleBasedParams:
    """Inspect every ``inspect_interval`` steps; on the following step act on
    every component whose fresh observation crossed the trigger.

    ``trigger_form`` "absolute": observed condition < ``threshold``.
    ``trigger_form`` "margin": observed condition <= component threshold + ``threshold``.
    """

    inspect_interval: int = 5
    threshold: float = 20.0
    on_trigger: Action = Action.REPLACE
    trigger_form: str = "absolute"

    def __post_init__(self):
        if self.inspect_interval < 1:
            raise ValueError("inspect_interval must be >= 1")
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")
        if self.trigger_form not in ("absolute", "margin"):
            raise ValueError(f"trigger_form must be 'absolute' or 'margin', got {self.trigger_form!r}")
        if self.on_trigger not in (Action.REPAIR, Action.REPLACE):
            raise ValueError("on_trigger must be repair or replace")


class RuleBasedPolicy(Policy):
    """Periodic-inspection threshold policy.

    The trigger acts one step after the inspection that produced the
    observation: the environment has a single action phase per step, so the
    inspection result only becomes visible in the next observation.
    """

    def __init__(self, params: RuleBasedParams):
        self.params = params
        self.name = (
            f"rb:tau={params.inspect_interval},theta={params.threshold:g},"
            f"action={params.on_trigger.name.lower()},form={params.trigger_form}"
        )

    def act(self, observation: np.ndarray, t: int) -> np.ndarray:
        n = self.ctx.n
        p = self.params
        actions = np.zeros(n, dtype=np.int64)
        if t % p.inspect_interval == 0:
            actions[:] = Action.INSPECT
        if t >= 1 and (t - 1) % p.inspect_interval == 0:
            obs = observation[:n]
            seen = obs != NO_OBSERVATION
            if p.trigger_form == "absolute":
                triggered = seen & (obs < p.threshold)
            else:
                triggered = seen & (obs <= self.ctx.thresholds + p.threshold)
            actions[triggered] = p.on_trigger
        return actions


class GreedyImportancePolicy(Policy):
    """Worst-first maintenance ranked by observed condition over importance.

    Candidates are the observed components below ``act_below``; the worst
    ranked get maintenance (major rehab below ``rehab_below``, minor repair
    otherwise) until the action cap or the budget estimate runs out. Ties
    break toward the lower component index. Components never observed get an
    inspection with whatever cap/budget is left, so the policy bootstraps its
    own visibility.
    """

    def __init__(
        self,
        max_actions_per_step: int = 10,
        act_below: float = 70.0,
        rehab_below: float = 20.0,
        inspect_unobserved: bool = True,
    ):
        if max_actions_per_step < 1:
            raise ValueError("max_actions_per_step must be >= 1")
        self.cap = max_actions_per_step
        self.act_below = act_below
        self.rehab_below = rehab_below
        self.inspect_unobserved = inspect_unobserved
        self.name = (
            f"greedy:cap={max_actions_per_step},act_below={act_below:g},"
            f"rehab_below={rehab_below:g},inspect={int(inspect_unobserved)}"
        )

    def act(self, observation: np.ndarray, t: int) -> np.ndarray:
        ctx = self.ctx
        n = ctx.n
        obs = observation[:n]
        budget = float(observation[n])
        actions = np.zeros(n, dtype=np.int64)

        seen = obs != NO_OBSERVATION
        candidates = np.nonzero(seen & (obs < self.act_below))[0]
        taken = 0
        planned = 0.0
        if candidates.size:
            scores = obs[candidates] / np.maximum(ctx.importance[candidates], 1e-12)
            order = candidates[np.argsort(scores, kind="stable")]
            for i in order:
                if taken >= self.cap:
                    break
                if obs[i] <= self.rehab_below:
                    action, cost = Action.REPLACE, ctx.replace_costs[i]
                else:
                    ratio = (100.0 - obs[i]) / (100.0 - ctx.thresholds[i])
                    cost = (
                        np.power(ratio, ctx.cost_exponents[i]) * ctx.replace_costs[i]
                        + ctx.min_repair_fractions[i] * ctx.replace_costs[i]
                    )
                    action = Action.REPAIR
                if planned + cost > budget:
                    break
                actions[i] = action
                planned += cost
                taken += 1

        if self.inspect_unobserved and taken < self.cap:
            for i in np.nonzero(~seen)[0]:
                if taken >= self.cap:
                    break
                cost = ctx.inspect_costs[i]
                if planned + cost > budget:
                    break
                actions[i] = Action.INSPECT
                planned += cost
                taken += 1
        return actions


def no_action_policy() -> Policy:
    return NoActionPolicy()


def rule_based_policy(params: RuleBasedParams) -> Policy:
    return RuleBasedPolicy(params)


def greedy_importance_policy(
    max_actions_per_step: int = 10, **kwargs
) -> Policy:
    return GreedyImportancePolicy(max_actions_per_step=max_actions_per_step, **kwargs)


POLICY_NAMES = ("no-action", "rb", "greedy")


def parse_policy(descriptor: str) -> Policy:
    """Build a policy from its CLI/service descriptor string.

    Examples: ``no-action``, ``rb:tau=10,theta=20,action=replace,form=absolute``,
    ``greedy:cap=50,act_below=70,rehab_below=20,inspect=1``.
    """
    descriptor = descriptor.strip()
    head, _, tail = descriptor.partition(":")
    head = head.lower()
    kv: dict[str, str] = {}
    if tail:
        for part in tail.split(","):
            if not part:
                continue
            key, eq, value = part.partition("=")
            if not eq:
                raise ValueError(f"bad policy parameter {part!r} in {descriptor!r}")
            kv[key.strip()] = value.strip()

    if head in ("no-action", "noaction", "none"):
        return NoActionPolicy()
    if head == "rb":
        action = kv.get("action", "replace").lower()
        if action not in ("repair", "replace"):
            raise ValueError(f"rb action must be repair or replace, got {action!r}")
        return RuleBasedPolicy(
            RuleBasedParams(
                inspect_interval=int(kv.get("tau", 5)),
                threshold=float(kv.get("theta", 20)),
                on_trigger=Action.REPAIR if action == "repair" else Action.REPLACE,
                trigger_form=kv.get("form", "absolute"),
            )
        )
    if head == "greedy":
        return GreedyImportancePolicy(
            max_actions_per_step=int(kv.get("cap", 10)),
            act_below=float(kv.get("act_below", 70)),
            rehab_below=float(kv.get("rehab_below", 20)),
            inspect_unobserved=bool(int(kv.get("inspect", 1))),
        )
    raise ValueError(f"unknown policy {head!r}; valid: {', '.join(POLICY_NAMES)}")


def context_from_simulation(sim) -> PolicyContext:
    """PolicyContext for a live :class:`~infrasim.simulator.Simulation`."""
    return PolicyContext(
        n=sim.n,
        thresholds=sim.threshold.copy(),
        replace_costs=sim.replace_cost.copy(),
        inspect_costs=sim.inspect_cost.copy(),
        cost_exponents=sim.cost_exponent.copy(),
        min_repair_fractions=sim.min_repair_fraction.copy(),
        importance=sim.importance.copy(),
        horizon=sim.config.horizon,
        metadata=dict(sim.config.metadata),
    )
