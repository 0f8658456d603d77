"""Stochastic Weibull deterioration and maintenance action effects.

The latent Markov state of a component is its effective age plus a hard-failure
flag. The condition index follows ci = 100 * exp(-(age/scale)^shape), kept
continuous internally; flooring to integers happens only at observation and
reporting time. Randomness enters through per-instance parameter draws,
optional lognormal aging jitter, sudden-failure hazards, and inspection noise.

All curve math goes through numpy ufuncs (np.exp / np.power / np.log) so that
scalar calls and the vectorized engine produce bit-identical float64 results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    MAX_STEPS_SINCE_INSPECTION,
    Action,
    ComponentSpec,
    ComponentState,
    ValidationError,
)


@dataclass(frozen=True)
class DynamicsConfig:
    """Distributional and action-effect parameters of the deterioration model.

    ``shape_mean``/``scale_mean`` are the defaults used when a component spec
    does not pin its own Weibull parameters; ``shape_std``/``scale_std`` add
    per-instance variation around the (per-component) means at reset, truncated
    below at the floors. ``age_jitter_std`` is the sigma of the lognormal
    per-step age increment (0 = deterministic aging, increment exactly 1).
    ``repair_gain`` is the condition bump of a repair; ``obs_noise_std`` the
    sigma of Gaussian inspection noise in condition points.
    """

    shape_mean: float = 2.0
    shape_std: float = 0.0
    scale_mean: float = 60.0
    scale_std: float = 0.0
    shape_min: float = 0.05
    scale_min: float = 1.0
    age_jitter_std: float = 0.0
    repair_gain: float = 30.0
    redraw_on_replace: bool = False
    obs_noise_std: float = 0.0

    def __post_init__(self):
        for name in ("shape_std", "scale_std", "age_jitter_std", "obs_noise_std"):
            if getattr(self, name) < 0:
                raise ValidationError(f"dynamics.{name}", "must be >= 0")
        if not self.shape_min > 0:
            raise ValidationError("dynamics.shape_min", "must be > 0")
        if not self.scale_min > 0:
            raise ValidationError("dynamics.scale_min", "must be > 0")
        if not self.shape_mean > 0:
            raise ValidationError("dynamics.shape_mean", "must be > 0")
        if not self.scale_mean > 0:
            raise ValidationError("dynamics.scale_mean", "must be > 0")
        if not (0 < self.repair_gain <= 100):
            raise ValidationError("dynamics.repair_gain", "must be in (0, 100]")


def truncated_normal(
    rng: np.random.Generator,
    mean: float | np.ndarray,
    std: float | np.ndarray,
    floor: float,
    size: int,
) -> np.ndarray:
    """Normal draws conditioned on >= floor, by masked redraw.

    With std == 0 this degenerates to the mean (which must itself satisfy the
    floor for a valid config). Deterministic given the generator state.
    """
    mean = np.broadcast_to(np.asarray(mean, dtype=np.float64), (size,))
    std = np.broadcast_to(np.asarray(std, dtype=np.float64), (size,))
    if np.all(std == 0):
        return np.maximum(mean.copy(), floor)
    out = mean + std * rng.standard_normal(size)
    bad = out < floor
    while np.any(bad):
        idx = np.nonzero(bad)[0]
        out[idx] = mean[idx] + std[idx] * rng.standard_normal(idx.size)
        bad = out < floor
    return out


def sample_component_params(
    config: DynamicsConfig, rng: np.random.Generator | int
) -> tuple[float, float]:
    """Draw one (shape, scale) pair from the config's truncated normals."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    shape = truncated_normal(rng, config.shape_mean, config.shape_std, config.shape_min, 1)[0]
    scale = truncated_normal(rng, config.scale_mean, config.scale_std, config.scale_min, 1)[0]
    return float(shape), float(scale)


def ci_from_age(age, shape, scale):
    """Condition index on the Weibull curve: 100 * exp(-(age/scale)^shape).

    Accepts scalars or arrays; monotone non-increasing in age. The displayed
    (integer) condition is floor(ci); callers apply that at reporting time.
    """
    return 100.0 * np.exp(-np.power(np.asarray(age, dtype=np.float64) / scale, shape))


def age_from_ci(ci, shape, scale):
    """Inverse of :func:`ci_from_age`; defined for 0 < ci <= 100.

    Failed components (ci == 0) have no finite age on the curve.
    """
    ci_arr = np.asarray(ci, dtype=np.float64)
    if np.any(ci_arr <= 0) or np.any(ci_arr > 100):
        raise ValueError(f"ci must be in (0, 100], got {ci}")
    return scale * np.power(-np.log(ci_arr / 100.0), 1.0 / np.asarray(shape, dtype=np.float64))


def displayed_ci(ci) -> int | np.ndarray:
    """Integer condition as shown in observations and reports (floor)."""
    out = np.floor(ci)
    if np.isscalar(ci) or np.ndim(ci) == 0:
        return int(out)
    return out


def round_half_up(x):
    """Observation rounding convention (0.5 always rounds up)."""
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5)


def is_failed_ci(ci, threshold) -> bool | np.ndarray:
    """Failure test used everywhere: floored condition at or below threshold."""
    out = np.floor(ci) <= threshold
    if np.isscalar(ci) or np.ndim(ci) == 0:
        return bool(out)
    return out


def deteriorate_step(
    state: ComponentState,
    spec: ComponentSpec,
    config: DynamicsConfig,
    rng: np.random.Generator,
    shape: float | None = None,
    scale: float | None = None,
) -> ComponentState:
    """Advance one component by one time step of natural deterioration.

    Hard-failed components are absorbing and return unchanged. Otherwise the
    effective age grows by a lognormal increment (exactly 1 when
    ``age_jitter_std`` is 0), the condition is recomputed, the sudden-failure
    hazard is applied, and the steps-since-inspection counter is bumped
    (saturating). ``shape``/``scale`` override the spec means when the caller
    holds per-instance realized parameters.
    """
    if state.failed:
        return ComponentState(
            age=state.age,
            ci=state.ci,
            failed=True,
            last_obs=state.last_obs,
            steps_since_inspection=state.steps_since_inspection,
        )
    k = spec.shape if shape is None else shape
    lam = spec.scale if scale is None else scale
    if config.age_jitter_std > 0:
        delta = float(np.exp(config.age_jitter_std * rng.standard_normal()))
    else:
        delta = 1.0
    age = state.age + delta
    ci = float(ci_from_age(age, k, lam))
    failed = False
    if spec.hazard_rate > 0 and rng.random() < spec.hazard_rate:
        failed = True
        ci = 0.0
    return ComponentState(
        age=age,
        ci=ci,
        failed=failed,
        last_obs=state.last_obs,
        steps_since_inspection=min(state.steps_since_inspection + 1, MAX_STEPS_SINCE_INSPECTION),
    )


def apply_action_effect(
    state: ComponentState,
    spec: ComponentSpec,
    config: DynamicsConfig,
    action: Action,
    rng: np.random.Generator | None = None,
    shape: float | None = None,
    scale: float | None = None,
) -> ComponentState:
    """Apply a maintenance action to the latent state (availability and budget
    are the caller's concern).

    Inspect records the (optionally noisy) rounded condition without touching
    the latent state. Repair lifts the condition by ``repair_gain`` (clamped
    at 100) and rewinds the effective age accordingly; it does nothing to a
    hard-failed component, which only Replace revives. Replace resets to a
    brand-new component and sets the observation to 100 by construction.
    Repair deliberately leaves ``last_obs`` stale.
    """
    k = spec.shape if shape is None else shape
    lam = spec.scale if scale is None else scale
    if action == Action.DO_NOTHING:
        return state
    if action == Action.INSPECT:
        noise = 0.0
        if config.obs_noise_std > 0:
            if rng is None:
                raise ValueError("inspection noise requires an rng")
            noise = config.obs_noise_std * rng.standard_normal()
        obs = int(np.clip(round_half_up(state.ci + noise), 0, 100))
        return ComponentState(
            age=state.age,
            ci=state.ci,
            failed=state.failed,
            last_obs=obs,
            steps_since_inspection=0,
        )
    if action == Action.REPAIR:
        if state.failed or state.ci <= 0:
            return state
        new_ci = min(100.0, state.ci + config.repair_gain)
        new_age = 0.0 if new_ci >= 100.0 else float(age_from_ci(new_ci, k, lam))
        return ComponentState(
            age=new_age,
            ci=new_ci,
            failed=False,
            last_obs=state.last_obs,
            steps_since_inspection=state.steps_since_inspection,
        )
    if action == Action.REPLACE:
        return ComponentState(
            age=0.0, ci=100.0, failed=False, last_obs=100, steps_since_inspection=0
        )
    raise ValueError(f"unknown action {action!r}")


def is_available(spec: ComponentSpec, t: int) -> bool:
    """Whether maintenance actions are permitted at step t (windows list the
    closed intervals of unavailability)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    for a, b in spec.availability_windows:
        if a <= t <= b:
            return False
        if t < a:
            break
    return True


def analytic_first_failure_step(shape: float, scale: float, threshold: float) -> float:
    """First integer step at which floor(ci(t)) <= threshold on the noiseless
    curve, or infinity if the crossing never happens in finite time.

    Used as the independent oracle for episode lengths and failure-time
    metrics under deterministic dynamics.
    """
    # floor(ci) <= threshold  <=>  ci < floor(threshold) + 1
    target = math.floor(threshold) + 1.0
    if target > 100.0:
        return 0.0
    boundary = scale * (math.log(100.0 / target)) ** (1.0 / shape)
    # walk forward from just below the analytic boundary over float ties
    t = max(0, math.floor(boundary) - 2)
    while not float(ci_from_age(t, shape, scale)) < target:
        t += 1
    return float(t)
