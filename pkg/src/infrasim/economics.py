"""Action pricing and the shared budget: fixed and cyclic allocation models.

Repair pricing is nonlinear in the current condition: repairs get
disproportionately expensive as a component approaches its failure threshold,
with a floor of ``min_repair_fraction * replace_cost`` on any repair. The
budget couples otherwise-independent components; charging is sequential in
ascending component order (the engine's tie-break for contention) and an
unaffordable action is downgraded, never an error.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np

from .core import Action, ComponentSpec, ComponentState, ValidationError


@dataclass(frozen=True)
class BudgetModel:
    """Either a single fixed pot or periodic cycle allocations.

    Cyclic: ``cycle_starts`` must begin at 0 and strictly increase;
    ``cycle_amounts[j]`` becomes available at step ``cycle_starts[j]``. With
    ``carry_over`` the unspent remainder survives into the next cycle,
    otherwise each cycle resets the pot (use-it-or-lose-it).
    """

    kind: str = "fixed"  # "fixed" | "cyclic"
    fixed_amount: float = 0.0
    cycle_starts: tuple[int, ...] = ()
    cycle_amounts: tuple[float, ...] = ()
    carry_over: bool = False

    def __post_init__(self):
        object.__setattr__(self, "cycle_starts", tuple(int(t) for t in self.cycle_starts))
        object.__setattr__(self, "cycle_amounts", tuple(float(b) for b in self.cycle_amounts))
        if self.kind not in ("fixed", "cyclic"):
            raise ValidationError("budget.kind", f"must be 'fixed' or 'cyclic', got {self.kind!r}")
        if self.kind == "fixed":
            if self.fixed_amount < 0:
                raise ValidationError("budget.fixed_amount", "must be >= 0")
        else:
            if not self.cycle_starts:
                raise ValidationError("budget.cycle_starts", "cyclic model needs cycle starts")
            if self.cycle_starts[0] != 0:
                raise ValidationError("budget.cycle_starts", "first cycle must start at step 0")
            if any(b <= a for a, b in zip(self.cycle_starts, self.cycle_starts[1:])):
                raise ValidationError("budget.cycle_starts", "must be strictly increasing")
            if len(self.cycle_amounts) != len(self.cycle_starts):
                raise ValidationError(
                    "budget.cycle_amounts", "must have one amount per cycle start"
                )
            if any(b < 0 for b in self.cycle_amounts):
                raise ValidationError("budget.cycle_amounts", "amounts must be >= 0")

    def cycle_index(self, t: int) -> int:
        """Index of the cycle covering step t (latest start <= t)."""
        return bisect.bisect_right(self.cycle_starts, t) - 1


@dataclass
class BudgetState:
    """Mutable ledger of one simulation run. ``remaining`` never goes negative;
    every accepted charge moves money from remaining to ``spent_total``."""

    remaining: float = 0.0
    current_cycle: int = 0
    spent_total: float = 0.0
    allocated_total: float = 0.0

    @classmethod
    def initial(cls, model: BudgetModel) -> "BudgetState":
        """Ledger at reset: the fixed pot, or the first cycle's allocation."""
        if model.kind == "fixed":
            return cls(
                remaining=model.fixed_amount,
                current_cycle=0,
                spent_total=0.0,
                allocated_total=model.fixed_amount,
            )
        first = model.cycle_amounts[0]
        return cls(remaining=first, current_cycle=0, spent_total=0.0, allocated_total=first)


def repair_cost(current_ci: float, spec: ComponentSpec) -> float:
    """Price of repairing a component whose continuous condition is ``current_ci``.

    ((100 - s) / (100 - threshold))^exponent * replace_cost
        + min_repair_fraction * replace_cost

    Strictly decreasing in s above the threshold; below the threshold the
    ratio exceeds 1 and repair prices above the base replacement term, which
    is permitted.
    """
    if spec.failure_threshold >= 100:
        raise ValidationError(
            f"component[{spec.id}].failure_threshold", "must be < 100 for repair pricing"
        )
    if not (0 <= current_ci <= 100):
        raise ValueError(f"condition must be in [0, 100], got {current_ci}")
    ratio = (100.0 - current_ci) / (100.0 - spec.failure_threshold)
    return float(
        np.power(ratio, spec.cost_exponent) * spec.replace_cost
        + spec.min_repair_fraction * spec.replace_cost
    )


def action_cost(action: Action, state: ComponentState, spec: ComponentSpec) -> float:
    """Price of one action against a component's current state."""
    if action == Action.DO_NOTHING:
        return 0.0
    if action == Action.INSPECT:
        return spec.inspect_cost
    if action == Action.REPAIR:
        return repair_cost(state.ci, spec)
    if action == Action.REPLACE:
        return spec.replace_cost
    raise ValueError(f"unknown action {action!r}")


def budget_at(model: BudgetModel, t: int) -> float:
    """Allocation in force at step t (piecewise constant, right-continuous)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if model.kind == "fixed":
        return model.fixed_amount
    return model.cycle_amounts[model.cycle_index(t)]


def advance_cycle(state: BudgetState, model: BudgetModel, t: int) -> BudgetState:
    """Apply the cycle allocation due at step t, if any. Call once per step
    before charging; re-applying the cycle already in force is a no-op, so the
    reset-time allocation of cycle 0 is not doubled by the first step."""
    if model.kind == "fixed":
        return state
    k = model.cycle_index(t)
    if k == state.current_cycle:
        return state
    amount = model.cycle_amounts[k]
    base = state.remaining if model.carry_over else 0.0
    return BudgetState(
        remaining=base + amount,
        current_cycle=k,
        spent_total=state.spent_total,
        allocated_total=state.allocated_total + amount,
    )


def charge(state: BudgetState, amount: float) -> tuple[BudgetState, bool]:
    """Attempt to spend ``amount``. Returns the (possibly unchanged) ledger and
    whether the charge was accepted. Insufficient funds reject; they never
    drive the ledger negative."""
    if amount < 0:
        raise ValueError(f"charge amount must be >= 0, got {amount}")
    if amount > state.remaining:
        return state, False
    return (
        BudgetState(
            remaining=state.remaining - amount,
            current_cycle=state.current_cycle,
            spent_total=state.spent_total + amount,
            allocated_total=state.allocated_total,
        ),
        True,
    )
