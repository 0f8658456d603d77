"""Scenario files, canonical serialization, and road-network ingestion.

Scenario files are strict JSON: unknown keys are rejected, absent keys take
the documented defaults, and serialization echoes the fully-defaulted form
back, so serialize(parse(x)) is a fixpoint. Fleets can be declared either as
explicit ``components`` or as compact ``component_groups`` templates (the
canonical form keeps whichever the config carries).

Road networks arrive as delimited text with a version header; ingestion turns
every edge into one component, mapping average speed onto the deterioration
time scale and segment length onto replacement cost.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Any

from .core import (
    ComponentGroup,
    ComponentSpec,
    HierarchyNode,
    ValidationError,
    expand_groups,
)
from .dynamics import DynamicsConfig
from .economics import BudgetModel
from .simulator import RewardConfig, ScenarioConfig

SCENARIO_FORMAT = "scenario/1"
NETWORK_FORMAT = "road-network/1"


class ScenarioParseError(ValueError):
    """Undecodable scenario text; carries line/column when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


def _require_keys(obj: dict, allowed: set[str], path: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ValidationError(path, f"unknown keys: {sorted(unknown)}")


def _get(obj: dict, key: str, default: Any, path: str, types: tuple[type, ...]) -> Any:
    value = obj.get(key, default)
    if value is None and default is None:
        return None
    if not isinstance(value, types) or isinstance(value, bool) and bool not in types:
        raise ValidationError(f"{path}.{key}", f"expected {types}, got {type(value).__name__}")
    return value


_COMPONENT_KEYS = {
    "id",
    "type_id",
    "shape",
    "scale",
    "failure_threshold",
    "replace_cost",
    "cost_exponent",
    "min_repair_fraction",
    "inspect_cost",
    "importance",
    "availability_windows",
    "hazard_rate",
    "metadata",
}

_NUM = (int, float)


def _component_fields(obj: dict, path: str, dyn: DynamicsConfig) -> dict:
    windows = obj.get("availability_windows", [])
    if not isinstance(windows, list) or any(
        not isinstance(w, list) or len(w) != 2 for w in windows
    ):
        raise ValidationError(f"{path}.availability_windows", "expected a list of [start, end]")
    return dict(
        type_id=_get(obj, "type_id", "default", path, (str,)),
        shape=float(_get(obj, "shape", dyn.shape_mean, path, _NUM)),
        scale=float(_get(obj, "scale", dyn.scale_mean, path, _NUM)),
        failure_threshold=float(_get(obj, "failure_threshold", 40.0, path, _NUM)),
        replace_cost=float(_get(obj, "replace_cost", 100.0, path, _NUM)),
        cost_exponent=float(_get(obj, "cost_exponent", 2.0, path, _NUM)),
        min_repair_fraction=float(_get(obj, "min_repair_fraction", 0.1, path, _NUM)),
        inspect_cost=float(_get(obj, "inspect_cost", 1.0, path, _NUM)),
        importance=float(_get(obj, "importance", 1.0, path, _NUM)),
        availability_windows=tuple((int(a), int(b)) for a, b in windows),
        hazard_rate=float(_get(obj, "hazard_rate", 0.0, path, _NUM)),
        metadata=dict(_get(obj, "metadata", {}, path, (dict,)) or {}),
    )


def _parse_component(obj: dict, path: str, dyn: DynamicsConfig) -> ComponentSpec:
    _require_keys(obj, _COMPONENT_KEYS, path)
    if "id" not in obj:
        raise ValidationError(f"{path}.id", "required")
    return ComponentSpec(id=str(obj["id"]), **_component_fields(obj, path, dyn))


def _parse_group(obj: dict, path: str, dyn: DynamicsConfig) -> ComponentGroup:
    allowed = (_COMPONENT_KEYS - {"id"}) | {"count"}
    _require_keys(obj, allowed, path)
    if "type_id" not in obj or "count" not in obj:
        raise ValidationError(path, "groups require type_id and count")
    fields = _component_fields(obj, path, dyn)
    return ComponentGroup(count=int(obj["count"]), **fields)


_DYNAMICS_KEYS = {
    "shape_mean",
    "shape_std",
    "scale_mean",
    "scale_std",
    "shape_min",
    "scale_min",
    "age_jitter_std",
    "repair_gain",
    "redraw_on_replace",
    "obs_noise_std",
}


def _parse_dynamics(obj: dict) -> DynamicsConfig:
    _require_keys(obj, _DYNAMICS_KEYS, "dynamics")
    defaults = DynamicsConfig()
    kwargs = {}
    for key in _DYNAMICS_KEYS:
        if key == "redraw_on_replace":
            kwargs[key] = bool(obj.get(key, defaults.redraw_on_replace))
        else:
            kwargs[key] = float(_get(obj, key, getattr(defaults, key), "dynamics", _NUM))
    return DynamicsConfig(**kwargs)


def _parse_budget(obj: dict) -> BudgetModel:
    kind = _get(obj, "kind", "fixed", "budget", (str,))
    if kind == "fixed":
        _require_keys(obj, {"kind", "amount", "carry_over"}, "budget")
        return BudgetModel(kind="fixed", fixed_amount=float(_get(obj, "amount", 0.0, "budget", _NUM)))
    if kind == "cyclic":
        _require_keys(obj, {"kind", "cycle_starts", "cycle_amounts", "carry_over"}, "budget")
        return BudgetModel(
            kind="cyclic",
            cycle_starts=tuple(int(t) for t in obj.get("cycle_starts", [])),
            cycle_amounts=tuple(float(b) for b in obj.get("cycle_amounts", [])),
            carry_over=bool(obj.get("carry_over", False)),
        )
    raise ValidationError("budget.kind", f"must be 'fixed' or 'cyclic', got {kind!r}")


def _parse_reward(obj: dict) -> RewardConfig:
    _require_keys(obj, {"kind", "failure_penalty", "normalizer"}, "reward")
    normalizer = obj.get("normalizer")
    if normalizer is not None:
        normalizer = float(normalizer)
    return RewardConfig(
        kind=_get(obj, "kind", "threshold_margin", "reward", (str,)),
        failure_penalty=float(_get(obj, "failure_penalty", 10.0, "reward", _NUM)),
        normalizer=normalizer,
    )


_TOP_KEYS = {
    "format",
    "name",
    "seed",
    "horizon",
    "termination",
    "reward",
    "dynamics",
    "budget",
    "components",
    "component_groups",
    "hierarchy",
    "metadata",
}


def scenario_from_dict(obj: dict) -> ScenarioConfig:
    """Validated ScenarioConfig from an already-decoded mapping."""
    if not isinstance(obj, dict):
        raise ValidationError("$", f"scenario must be an object, got {type(obj).__name__}")
    fmt = obj.get("format", SCENARIO_FORMAT)
    if fmt != SCENARIO_FORMAT:
        raise ValidationError(
            "format", f"unsupported scenario format {fmt!r}; this reader handles {SCENARIO_FORMAT}"
        )
    _require_keys(obj, _TOP_KEYS, "$")
    dynamics = _parse_dynamics(_get(obj, "dynamics", {}, "$", (dict,)) or {})
    if "budget" not in obj:
        raise ValidationError("budget", "required")
    budget = _parse_budget(obj["budget"])
    reward = _parse_reward(_get(obj, "reward", {}, "$", (dict,)) or {})

    groups: tuple[ComponentGroup, ...] = ()
    components: list[ComponentSpec] = []
    if "component_groups" in obj:
        raw_groups = obj["component_groups"]
        if not isinstance(raw_groups, list):
            raise ValidationError("component_groups", "expected a list")
        groups = tuple(
            _parse_group(g, f"component_groups[{i}]", dynamics) for i, g in enumerate(raw_groups)
        )
        components = expand_groups(groups)
    if "components" in obj:
        raw = obj["components"]
        if not isinstance(raw, list):
            raise ValidationError("components", "expected a list")
        components = [
            _parse_component(c, f"components[{i}]", dynamics) for i, c in enumerate(raw)
        ] + components
    if not components:
        raise ValidationError("components", "a scenario needs components or component_groups")

    hierarchy: list[HierarchyNode] = []
    for i, node in enumerate(obj.get("hierarchy", []) or []):
        path = f"hierarchy[{i}]"
        _require_keys(node, {"id", "label", "parent", "members", "metadata"}, path)
        hierarchy.append(
            HierarchyNode(
                id=str(node["id"]),
                label=str(node.get("label", "")),
                parent=node.get("parent"),
                member_components=tuple(node.get("members", [])),
                metadata=dict(node.get("metadata", {}) or {}),
            )
        )

    return ScenarioConfig(
        components=tuple(components),
        budget=budget,
        horizon=int(_get(obj, "horizon", 100, "$", (int,))),
        dynamics=dynamics,
        reward=reward,
        termination=_get(obj, "termination", "horizon", "$", (str,)),
        master_seed=int(_get(obj, "seed", 0, "$", (int,))),
        name=_get(obj, "name", "scenario", "$", (str,)),
        hierarchy=tuple(hierarchy),
        metadata=dict(_get(obj, "metadata", {}, "$", (dict,)) or {}),
        groups=groups,
    )


def parse_scenario(source: str | bytes | Path | IO[str]) -> ScenarioConfig:
    """Parse and validate a scenario file (path, text, bytes, or stream)."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and source.endswith(".json")):
        text = Path(source).read_text(encoding="utf-8")
    elif isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioParseError(e.msg, e.lineno, e.colno) from None
    return scenario_from_dict(obj)


def _component_dict(c: ComponentSpec) -> dict:
    out = {
        "id": c.id,
        "type_id": c.type_id,
        "shape": c.shape,
        "scale": c.scale,
        "failure_threshold": c.failure_threshold,
        "replace_cost": c.replace_cost,
        "cost_exponent": c.cost_exponent,
        "min_repair_fraction": c.min_repair_fraction,
        "inspect_cost": c.inspect_cost,
        "importance": c.importance,
        "availability_windows": [[a, b] for a, b in c.availability_windows],
        "hazard_rate": c.hazard_rate,
    }
    if c.metadata:
        out["metadata"] = dict(c.metadata)
    return out


def _group_dict(g: ComponentGroup) -> dict:
    out = {
        "type_id": g.type_id,
        "count": g.count,
        "shape": g.shape,
        "scale": g.scale,
        "failure_threshold": g.failure_threshold,
        "replace_cost": g.replace_cost,
        "cost_exponent": g.cost_exponent,
        "min_repair_fraction": g.min_repair_fraction,
        "inspect_cost": g.inspect_cost,
        "importance": g.importance,
        "availability_windows": [[a, b] for a, b in g.availability_windows],
        "hazard_rate": g.hazard_rate,
    }
    if g.metadata:
        out["metadata"] = dict(g.metadata)
    return out


def scenario_to_dict(config: ScenarioConfig) -> dict:
    """Canonical fully-defaulted dict form (what files and logs embed)."""
    dyn = config.dynamics
    out: dict[str, Any] = {
        "format": SCENARIO_FORMAT,
        "name": config.name,
        "seed": config.master_seed,
        "horizon": config.horizon,
        "termination": config.termination,
        "reward": {
            "kind": config.reward.kind,
            "failure_penalty": config.reward.failure_penalty,
            "normalizer": config.reward.normalizer,
        },
        "dynamics": {key: getattr(dyn, key) for key in sorted(_DYNAMICS_KEYS)},
        "budget": (
            {
                "kind": "fixed",
                "amount": config.budget.fixed_amount,
                "carry_over": config.budget.carry_over,
            }
            if config.budget.kind == "fixed"
            else {
                "kind": "cyclic",
                "cycle_starts": list(config.budget.cycle_starts),
                "cycle_amounts": list(config.budget.cycle_amounts),
                "carry_over": config.budget.carry_over,
            }
        ),
    }
    if config.groups:
        out["component_groups"] = [_group_dict(g) for g in config.groups]
    else:
        out["components"] = [_component_dict(c) for c in config.components]
    if config.hierarchy:
        out["hierarchy"] = []
        for node in config.hierarchy:
            entry: dict[str, Any] = {
                "id": node.id,
                "label": node.label,
                "parent": node.parent,
                "members": list(node.member_components),
            }
            if node.metadata:
                entry["metadata"] = dict(node.metadata)
            out["hierarchy"].append(entry)
    if config.metadata:
        out["metadata"] = dict(sorted(config.metadata.items()))
    return out


def serialize_scenario(config: ScenarioConfig) -> str:
    return json.dumps(scenario_to_dict(config), sort_keys=True, indent=2) + "\n"


def write_scenario(config: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(serialize_scenario(config), encoding="utf-8")


def fingerprint(config: ScenarioConfig) -> str:
    """Stable hash of the canonical scenario form (seed included)."""
    payload = json.dumps(scenario_to_dict(config), sort_keys=True).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


# -- road networks ------------------------------------------------------------


@dataclass(frozen=True)
class RoadVertex:
    id: str
    x: float
    y: float


@dataclass(frozen=True)
class RoadEdge:
    id: str
    u: str
    v: str
    length: float
    avg_speed: float
    importance: float


@dataclass(frozen=True)
class RoadNetwork:
    vertices: tuple[RoadVertex, ...]
    edges: tuple[RoadEdge, ...]


class NetworkParseError(ValueError):
    def __init__(self, message: str, row: int):
        self.row = row
        super().__init__(f"row {row}: {message}")


def parse_road_network(source: str | Path | IO[str]) -> RoadNetwork:
    """Read the delimited road-network format.

    First non-blank line must be ``#format=road-network/1``; data rows are
    ``V,<id>,<x>,<y>`` or ``E,<id>,<u>,<v>,<length>,<avg_speed>,<importance>``.
    """
    if isinstance(source, (str, Path)):
        lines = Path(source).read_text(encoding="utf-8").splitlines()
    else:
        lines = source.read().splitlines()
    vertices: list[RoadVertex] = []
    edges: list[RoadEdge] = []
    saw_header = False
    for row, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if line.startswith("#format="):
                fmt = line.split("=", 1)[1]
                if fmt != NETWORK_FORMAT:
                    raise NetworkParseError(
                        f"unsupported network format {fmt!r}; this reader handles {NETWORK_FORMAT}",
                        row,
                    )
                saw_header = True
            continue
        if not saw_header:
            raise NetworkParseError("missing #format=road-network/1 header", row)
        parts = line.split(",")
        try:
            if parts[0] == "V":
                if len(parts) != 4:
                    raise ValueError(f"vertex rows need 4 fields, got {len(parts)}")
                vertices.append(RoadVertex(id=parts[1], x=float(parts[2]), y=float(parts[3])))
            elif parts[0] == "E":
                if len(parts) != 7:
                    raise ValueError(f"edge rows need 7 fields, got {len(parts)}")
                edges.append(
                    RoadEdge(
                        id=parts[1],
                        u=parts[2],
                        v=parts[3],
                        length=float(parts[4]),
                        avg_speed=float(parts[5]),
                        importance=float(parts[6]),
                    )
                )
            else:
                raise ValueError(f"unknown record type {parts[0]!r}")
        except ValueError as e:
            raise NetworkParseError(str(e), row) from None

    ids = {v.id for v in vertices}
    for i, e in enumerate(edges):
        if e.u not in ids or e.v not in ids:
            raise NetworkParseError(f"edge {e.id!r} references unknown vertex", i + 1)
        if not e.length > 0:
            raise NetworkParseError(f"edge {e.id!r} length must be > 0", i + 1)
        if not e.avg_speed > 0:
            raise NetworkParseError(f"edge {e.id!r} avg_speed must be > 0", i + 1)
    return RoadNetwork(vertices=tuple(vertices), edges=tuple(edges))


def ingest_road_network(
    network: RoadNetwork | str | Path,
    scale_base: float = 60.0,
    speed_ref: float = 40.0,
    cost_rate: float = 5.0,
    shape: float = 2.2,
    failure_threshold: float = 40.0,
    inspect_cost: float = 1.0,
    budget_cycle_amount: float = 50_000.0,
    budget_cycle_length: int = 15,
    horizon: int = 75,
    max_rehabs_per_step: int = 25,
    seed: int = 0,
    scale_min: float = 1.0,
) -> ScenarioConfig:
    """One component per road segment.

    The deterioration time scale is linear in average speed,
    ``scale_base * speed / speed_ref`` (slow, congested segments wear out
    faster); replacement cost is ``cost_rate * length``. The per-step
    rehabilitation cap is scenario metadata for policies to honor; the mapping
    is an explicit stand-in, all knobs are arguments.
    """
    if isinstance(network, (str, Path)):
        network = parse_road_network(network)
    components = [
        ComponentSpec(
            id=e.id,
            type_id="road-segment",
            shape=shape,
            scale=max(scale_min, scale_base * e.avg_speed / speed_ref),
            failure_threshold=failure_threshold,
            replace_cost=cost_rate * e.length,
            inspect_cost=inspect_cost,
            importance=e.importance,
        )
        for e in network.edges
    ]
    starts = tuple(range(0, horizon, budget_cycle_length))
    budget = BudgetModel(
        kind="cyclic",
        cycle_starts=starts,
        cycle_amounts=tuple(budget_cycle_amount for _ in starts),
    )
    metadata = {
        "source": "road-network",
        "scale_base": repr(scale_base),
        "speed_ref": repr(speed_ref),
        "cost_rate": repr(cost_rate),
        "max_rehabs_per_step": str(max_rehabs_per_step),
        "vertices": str(len(network.vertices)),
        "edges": str(len(network.edges)),
    }
    return ScenarioConfig(
        components=tuple(components),
        budget=budget,
        horizon=horizon,
        dynamics=DynamicsConfig(shape_mean=shape, scale_mean=scale_base, scale_min=scale_min),
        reward=RewardConfig(),
        termination="horizon",
        master_seed=seed,
        name="road-network",
        metadata=metadata,
    )


def sample_network_path() -> Path:
    """Path of the bundled sample road network (1024 vertices, 2118 edges)."""
    return Path(__file__).parent / "data" / "manhattan_sample.csv"
