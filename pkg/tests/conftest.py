import dataclasses

import pytest

from infrasim import BudgetModel, ComponentSpec, DynamicsConfig, RewardConfig, ScenarioConfig


def deterministic(config: ScenarioConfig) -> ScenarioConfig:
    """Same scenario with all stochastic knobs switched off."""
    dyn = dataclasses.replace(
        config.dynamics, shape_std=0.0, scale_std=0.0, age_jitter_std=0.0, obs_noise_std=0.0
    )
    return dataclasses.replace(config, dynamics=dyn)


def two_component_scenario(**overrides) -> ScenarioConfig:
    """Small deterministic scenario used across simulator tests."""
    base = dict(
        components=(
            ComponentSpec(
                id="a",
                shape=1.3,
                scale=2.2,
                failure_threshold=40.0,
                replace_cost=700.0,
                cost_exponent=2.0,
                min_repair_fraction=0.1,
                inspect_cost=30.0,
            ),
            ComponentSpec(
                id="b",
                shape=1.0,
                scale=3.0,
                failure_threshold=40.0,
                replace_cost=900.0,
                cost_exponent=1.5,
                min_repair_fraction=0.15,
                inspect_cost=50.0,
            ),
        ),
        budget=BudgetModel(kind="fixed", fixed_amount=1000.0),
        horizon=3,
        dynamics=DynamicsConfig(),
        reward=RewardConfig(kind="threshold_margin", failure_penalty=10.0),
        termination="horizon",
        master_seed=0,
        name="two-comp",
    )
    base.update(overrides)
    return ScenarioConfig(**base)


@pytest.fixture
def simple5():
    from infrasim.benchmarks import generate_simple5

    return generate_simple5(seed=11)
