"""Budget-coupled POMDP simulation of deteriorating infrastructure fleets."""

from .core import (
    Action,
    ComponentGroup,
    ComponentSpec,
    ComponentState,
    Hierarchy,
    HierarchyNode,
    NO_OBSERVATION,
    ValidationError,
    aggregate_ci,
    decode_action_index,
    encode_action_index,
)
from .dynamics import (
    DynamicsConfig,
    age_from_ci,
    apply_action_effect,
    ci_from_age,
    deteriorate_step,
    is_available,
    sample_component_params,
)
from .economics import (
    BudgetModel,
    BudgetState,
    action_cost,
    advance_cycle,
    budget_at,
    charge,
    repair_cost,
)
from .simulator import (
    IllegalStateError,
    RewardConfig,
    ScenarioConfig,
    Simulation,
    StepResult,
    register_reward,
    reward_threshold_margin,
    run_episode,
)
from .policies import (
    GreedyImportancePolicy,
    NoActionPolicy,
    Policy,
    PolicyContractError,
    RuleBasedParams,
    RuleBasedPolicy,
    parse_policy,
)
from .benchmarks import (
    BenchmarkReport,
    PREDEFINED,
    ettf,
    generate_largesys,
    generate_predefined,
    run_benchmark,
)
from .episode_log import (
    EpisodeLog,
    EpisodeRecord,
    EpisodeSummary,
    read_episode_log,
    replay_episode,
    write_episode_log,
)
from .scenario_io import (
    fingerprint,
    ingest_road_network,
    parse_road_network,
    parse_scenario,
    sample_network_path,
    scenario_from_dict,
    scenario_to_dict,
    serialize_scenario,
    write_scenario,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
