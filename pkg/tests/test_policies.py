import dataclasses

import numpy as np
import pytest

from infrasim import (
    Action,
    BudgetModel,
    GreedyImportancePolicy,
    NoActionPolicy,
    RuleBasedParams,
    RuleBasedPolicy,
    Simulation,
    encode_action_index,
    parse_policy,
    run_episode,
)
from infrasim.policies import PolicyContext, context_from_simulation

from conftest import deterministic


def make_ctx(n=5, thresholds=40.0, importance=None):
    return PolicyContext(
        n=n,
        thresholds=np.full(n, thresholds),
        replace_costs=np.full(n, 300.0),
        inspect_costs=np.full(n, 3.0),
        cost_exponents=np.full(n, 2.0),
        min_repair_fractions=np.full(n, 0.1),
        importance=np.ones(n) if importance is None else np.asarray(importance, dtype=float),
        horizon=100,
    )


def obs_vector(last_obs, budget=1e9, tau=None):
    n = len(last_obs)
    tau = tau or [0] * n
    return np.array([*map(float, last_obs), float(budget), *map(float, tau)])


class TestNoAction:
    def test_always_do_nothing(self):
        policy = NoActionPolicy()
        policy.reset(make_ctx())
        out = policy.act(obs_vector([101] * 5), 0)
        assert out.tolist() == [0] * 5
        assert encode_action_index(out, 5) == 0

    def test_trajectory_is_pure_curve(self, simple5):
        config = deterministic(simple5)
        log = run_episode(config, NoActionPolicy(), seed=0)
        from infrasim import ci_from_age

        for rec in log.records:
            t = rec.t + 1
            for i, comp in enumerate(config.components):
                assert rec.true_ci[i] == pytest.approx(
                    float(ci_from_age(t, comp.shape, comp.scale)), rel=1e-9
                )


class TestRuleBased:
    def test_margin_trigger_repairs(self):
        # observed 59 is within 20 units of threshold 40 -> repair next step
        policy = RuleBasedPolicy(
            RuleBasedParams(inspect_interval=5, threshold=20.0, on_trigger=Action.REPAIR,
                            trigger_form="margin")
        )
        policy.reset(make_ctx())
        out = policy.act(obs_vector([59, 61, 101, 100, 80]), 6)
        assert out[0] == Action.REPAIR
        assert out[1] == Action.DO_NOTHING  # 61 > 60
        assert out[2] == Action.DO_NOTHING  # never observed
        assert out[3] == Action.DO_NOTHING

    def test_inspect_on_interval_steps(self):
        policy = RuleBasedPolicy(RuleBasedParams(inspect_interval=5, threshold=20.0))
        policy.reset(make_ctx())
        assert policy.act(obs_vector([101] * 5), 0).tolist() == [Action.INSPECT] * 5
        assert policy.act(obs_vector([80] * 5), 5).tolist() == [Action.INSPECT] * 5
        assert policy.act(obs_vector([80] * 5), 7).tolist() == [Action.DO_NOTHING] * 5

    def test_absolute_trigger_replaces(self):
        policy = RuleBasedPolicy(
            RuleBasedParams(inspect_interval=1, threshold=10.0, on_trigger=Action.REPLACE)
        )
        policy.reset(make_ctx())
        out = policy.act(obs_vector([9, 10, 50, 101, 0]), 4)
        assert out[0] == Action.REPLACE
        assert out[1] == Action.INSPECT  # 10 is not < 10: falls back to periodic inspect
        assert out[2] == Action.INSPECT
        assert out[4] == Action.REPLACE

    def test_deterministic_pure_function(self):
        policy = RuleBasedPolicy(RuleBasedParams())
        policy.reset(make_ctx())
        obs = obs_vector([55, 44, 61, 70, 99])
        assert policy.act(obs, 6).tolist() == policy.act(obs, 6).tolist()

    def test_no_failures_with_tight_rule_and_unbounded_budget(self, simple5):
        config = deterministic(
            dataclasses.replace(
                simple5, budget=BudgetModel(kind="fixed", fixed_amount=1e12)
            )
        )
        policy = RuleBasedPolicy(
            RuleBasedParams(inspect_interval=1, threshold=50.0, on_trigger=Action.REPLACE)
        )
        log = run_episode(config, policy, seed=0)
        assert log.summary.failure_events == 0
        assert log.summary.steps == 100  # truncated at horizon, never terminated
        assert log.summary.replacements_total > 0


class TestGreedyImportance:
    def test_nothing_below_trigger(self):
        policy = GreedyImportancePolicy(max_actions_per_step=3)
        policy.reset(make_ctx())
        out = policy.act(obs_vector([100, 100, 100, 100, 100]), 0)
        assert out.tolist() == [0] * 5

    def test_worst_first_with_cap_one(self):
        policy = GreedyImportancePolicy(max_actions_per_step=1, inspect_unobserved=False)
        policy.reset(make_ctx(n=2))
        out = policy.act(obs_vector([20, 80]), 0)
        assert out[0] != Action.DO_NOTHING
        assert out[1] == Action.DO_NOTHING

    def test_ties_break_to_lower_index(self):
        policy = GreedyImportancePolicy(max_actions_per_step=1, inspect_unobserved=False)
        policy.reset(make_ctx(n=3))
        out = policy.act(obs_vector([50, 50, 50]), 0)
        assert out[0] != Action.DO_NOTHING
        assert out[1] == out[2] == Action.DO_NOTHING

    def test_importance_weights_ranking(self):
        policy = GreedyImportancePolicy(max_actions_per_step=1, inspect_unobserved=False)
        policy.reset(make_ctx(n=2, importance=[1.0, 3.0]))
        # scores: 40/1=40 vs 50/3=16.7 -> the important component wins
        out = policy.act(obs_vector([40, 50]), 0)
        assert out[1] != Action.DO_NOTHING
        assert out[0] == Action.DO_NOTHING

    def test_cap_respected(self):
        policy = GreedyImportancePolicy(max_actions_per_step=2)
        policy.reset(make_ctx())
        out = policy.act(obs_vector([10, 20, 30, 40, 101]), 0)
        assert int(np.count_nonzero(out)) <= 2

    def test_rehab_versus_repair_split(self):
        policy = GreedyImportancePolicy(
            max_actions_per_step=5, rehab_below=20.0, inspect_unobserved=False
        )
        policy.reset(make_ctx())
        out = policy.act(obs_vector([10, 50, 45, 100, 100]), 0)
        assert out[0] == Action.REPLACE
        assert out[1] == Action.REPAIR
        assert out[2] == Action.REPAIR

    def test_budget_estimate_stops_spending(self):
        policy = GreedyImportancePolicy(max_actions_per_step=5, inspect_unobserved=False)
        policy.reset(make_ctx())
        # replace costs 300 each; budget only covers one
        out = policy.act(obs_vector([5, 6, 7, 100, 100], budget=350.0), 0)
        assert int(np.count_nonzero(out)) == 1

    def test_inspects_unobserved_components(self):
        policy = GreedyImportancePolicy(max_actions_per_step=5)
        policy.reset(make_ctx())
        out = policy.act(obs_vector([101, 101, 100, 100, 100]), 0)
        assert out[0] == Action.INSPECT
        assert out[1] == Action.INSPECT


class TestDescriptorParsing:
    def test_round_trips(self):
        assert parse_policy("no-action").describe() == "no-action"
        rb = parse_policy("rb:tau=10,theta=20,action=replace")
        assert "tau=10" in rb.describe() and "theta=20" in rb.describe()
        greedy = parse_policy("greedy:cap=7")
        assert "cap=7" in greedy.describe()

    def test_unknown_name_lists_valid(self):
        with pytest.raises(ValueError) as err:
            parse_policy("wat")
        assert "no-action" in str(err.value)

    def test_bad_parameter(self):
        with pytest.raises(ValueError):
            parse_policy("rb:tau")
        with pytest.raises(ValueError):
            parse_policy("rb:action=paint")

    def test_context_from_simulation(self, simple5):
        sim = Simulation(simple5)
        ctx = context_from_simulation(sim)
        assert ctx.n == 5
        assert ctx.thresholds.tolist() == [40.0] * 5
        assert ctx.horizon == 100
