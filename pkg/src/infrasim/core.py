"""Shared domain types: actions, component parameters and state, hierarchy.

Everything here is a plain value object. The simulation engine converts
component specs into flat numpy arrays; these classes are the validated,
serializable form used by configs, logs, and the service layer.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Mapping, Sequence


class Action(IntEnum):
    """Per-component maintenance decision. Integer codes are stable and are
    what gets serialized in logs and wire payloads."""

    DO_NOTHING = 0
    INSPECT = 1
    REPAIR = 2
    REPLACE = 3


#: last_obs value meaning "no observation since reset"
NO_OBSERVATION = 101

#: steps_since_inspection saturates here (observation bound)
MAX_STEPS_SINCE_INSPECTION = 100


class ValidationError(ValueError):
    """A config or spec field violates its documented bound.

    ``field_path`` names the offending field, e.g. ``components[3].failure_threshold``.
    """

    def __init__(self, field_path: str, message: str):
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}")


def _freeze_metadata(value, path: str) -> tuple[tuple[str, str], ...]:
    """Normalize a metadata mapping (or pair sequence) to a hashable tuple;
    keys must be unique strings per entity."""
    pairs = list(value.items()) if isinstance(value, Mapping) else [tuple(p) for p in value]
    seen: set[str] = set()
    for k, v in pairs:
        if not isinstance(k, str) or not isinstance(v, str):
            raise ValidationError(f"{path}.metadata[{k!r}]", "keys and values must be strings")
        if k in seen:
            raise ValidationError(f"{path}.metadata[{k!r}]", "duplicate key")
        seen.add(k)
    return tuple(pairs)


@dataclass(frozen=True)
class ComponentSpec:
    """Static parameters of one component.

    ``shape``/``scale`` are the Weibull deterioration parameters (means when
    the scenario's dynamics config adds per-instance variation). The condition
    index runs 100 (new) down to 0; a component counts as failed once its
    floored condition is at or below ``failure_threshold``.

    ``availability_windows`` lists closed ``[start, end]`` step intervals
    during which maintenance actions (inspect/repair/replace) are forbidden.
    ``hazard_rate`` is a per-step probability of sudden, total failure.
    """

    id: str
    type_id: str = "default"
    shape: float = 2.0
    scale: float = 60.0
    failure_threshold: float = 40.0
    replace_cost: float = 100.0
    cost_exponent: float = 2.0
    min_repair_fraction: float = 0.1
    inspect_cost: float = 1.0
    importance: float = 1.0
    availability_windows: tuple[tuple[int, int], ...] = ()
    hazard_rate: float = 0.0
    metadata: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(
            self,
            "availability_windows",
            tuple((int(a), int(b)) for a, b in self.availability_windows),
        )
        object.__setattr__(self, "metadata", _freeze_metadata(self.metadata, f"component[{self.id}]"))
        self.validate()

    def validate(self, path: str = "") -> None:
        p = path or f"component[{self.id}]"
        if not self.id:
            raise ValidationError(f"{p}.id", "must be a non-empty string")
        if not self.shape > 0:
            raise ValidationError(f"{p}.shape", f"must be > 0, got {self.shape}")
        if not self.scale > 0:
            raise ValidationError(f"{p}.scale", f"must be > 0, got {self.scale}")
        if not (0 <= self.failure_threshold < 100):
            raise ValidationError(
                f"{p}.failure_threshold",
                f"must be in [0, 100), got {self.failure_threshold}",
            )
        if not self.replace_cost > 0:
            raise ValidationError(f"{p}.replace_cost", f"must be > 0, got {self.replace_cost}")
        if not self.cost_exponent > 0:
            raise ValidationError(f"{p}.cost_exponent", f"must be > 0, got {self.cost_exponent}")
        if self.min_repair_fraction < 0:
            raise ValidationError(
                f"{p}.min_repair_fraction", f"must be >= 0, got {self.min_repair_fraction}"
            )
        if self.inspect_cost < 0:
            raise ValidationError(f"{p}.inspect_cost", f"must be >= 0, got {self.inspect_cost}")
        if self.importance < 0:
            raise ValidationError(f"{p}.importance", f"must be >= 0, got {self.importance}")
        if not (0 <= self.hazard_rate <= 1):
            raise ValidationError(f"{p}.hazard_rate", f"must be in [0, 1], got {self.hazard_rate}")
        last_end = -1
        for i, (a, b) in enumerate(self.availability_windows):
            w = f"{p}.availability_windows[{i}]"
            if a < 0 or b < 0:
                raise ValidationError(w, "interval bounds must be nonnegative")
            if a > b:
                raise ValidationError(w, f"start {a} exceeds end {b}")
            if a <= last_end:
                raise ValidationError(w, "intervals must be sorted and disjoint")
            last_end = b


@dataclass(frozen=True)
class ComponentGroup:
    """Compact template for a block of identical component specs.

    Large fleets (thousands of instances per type) are declared as groups and
    expanded on demand; scenario files keep the compact form.
    """

    type_id: str
    count: int
    shape: float = 2.0
    scale: float = 60.0
    failure_threshold: float = 40.0
    replace_cost: float = 100.0
    cost_exponent: float = 2.0
    min_repair_fraction: float = 0.1
    inspect_cost: float = 1.0
    importance: float = 1.0
    availability_windows: tuple[tuple[int, int], ...] = ()
    hazard_rate: float = 0.0
    metadata: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if self.count < 1:
            raise ValidationError(f"group[{self.type_id}].count", "must be >= 1")
        object.__setattr__(
            self,
            "availability_windows",
            tuple((int(a), int(b)) for a, b in self.availability_windows),
        )
        object.__setattr__(self, "metadata", _freeze_metadata(self.metadata, f"group[{self.type_id}]"))

    def expand(self) -> list[ComponentSpec]:
        width = max(4, len(str(self.count - 1)))
        return [
            ComponentSpec(
                id=f"{self.type_id}-{i:0{width}d}",
                type_id=self.type_id,
                shape=self.shape,
                scale=self.scale,
                failure_threshold=self.failure_threshold,
                replace_cost=self.replace_cost,
                cost_exponent=self.cost_exponent,
                min_repair_fraction=self.min_repair_fraction,
                inspect_cost=self.inspect_cost,
                importance=self.importance,
                availability_windows=self.availability_windows,
                hazard_rate=self.hazard_rate,
                metadata=self.metadata,
            )
            for i in range(self.count)
        ]


def expand_groups(groups: Iterable[ComponentGroup]) -> list[ComponentSpec]:
    out: list[ComponentSpec] = []
    for g in groups:
        out.extend(g.expand())
    return out


@dataclass
class ComponentState:
    """Latent dynamic state of one component.

    ``age`` is the effective age driving the deterioration curve; ``ci`` is
    kept continuous (the public floor-to-integer convention applies only when
    observations and reports are produced). ``last_obs`` is the most recent
    observed condition, or ``NO_OBSERVATION`` if never inspected.
    """

    age: float = 0.0
    ci: float = 100.0
    failed: bool = False
    last_obs: int = NO_OBSERVATION
    steps_since_inspection: int = 0


@dataclass(frozen=True)
class HierarchyNode:
    """One node of the grouping forest. Only leaf nodes list member components."""

    id: str
    label: str = ""
    parent: str | None = None
    member_components: tuple[str, ...] = ()
    metadata: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "member_components", tuple(self.member_components))
        object.__setattr__(self, "metadata", _freeze_metadata(self.metadata, f"hierarchy[{self.id}]"))


class Hierarchy:
    """A validated forest of :class:`HierarchyNode`.

    Guarantees: no cycles, parents exist, and every component id appears in at
    most one leaf group.
    """

    def __init__(self, nodes: Iterable[HierarchyNode]):
        self.nodes: dict[str, HierarchyNode] = {}
        for node in nodes:
            if node.id in self.nodes:
                raise ValidationError(f"hierarchy[{node.id}]", "duplicate node id")
            self.nodes[node.id] = node
        self._children: dict[str, list[str]] = {nid: [] for nid in self.nodes}
        for node in self.nodes.values():
            if node.parent is not None:
                if node.parent not in self.nodes:
                    raise ValidationError(
                        f"hierarchy[{node.id}].parent", f"unknown node {node.parent!r}"
                    )
                self._children[node.parent].append(node.id)
        self._check_forest()
        seen: dict[str, str] = {}
        for node in self.nodes.values():
            for cid in node.member_components:
                if cid in seen:
                    raise ValidationError(
                        f"hierarchy[{node.id}].member_components",
                        f"component {cid!r} already belongs to group {seen[cid]!r}",
                    )
                seen[cid] = node.id

    def _check_forest(self) -> None:
        for start in self.nodes:
            slow = self.nodes[start].parent
            hops = 0
            while slow is not None:
                hops += 1
                if hops > len(self.nodes):
                    raise ValidationError(f"hierarchy[{start}]", "cycle in parent chain")
                slow = self.nodes[slow].parent

    def children(self, node_id: str) -> list[str]:
        return list(self._children[node_id])

    def leaf_members(self, node_id: str) -> list[str]:
        """All component ids under ``node_id`` (transitively)."""
        if node_id not in self.nodes:
            raise KeyError(node_id)
        out: list[str] = []
        stack = [node_id]
        while stack:
            nid = stack.pop()
            out.extend(self.nodes[nid].member_components)
            stack.extend(self._children[nid])
        return out


class EmptyAggregateError(ValueError):
    pass


def aggregate_ci(
    ci_by_component: Mapping[str, float],
    node: HierarchyNode | str,
    hierarchy: Hierarchy | None = None,
) -> float:
    """Mean condition index of the components under a hierarchy node.

    With a ``hierarchy`` given, members are collected transitively; otherwise
    the node's own member list is used. Raises :class:`EmptyAggregateError`
    for a group with no resolvable members.
    """
    if hierarchy is not None:
        node_id = node if isinstance(node, str) else node.id
        members = hierarchy.leaf_members(node_id)
    else:
        if isinstance(node, str):
            raise TypeError("node id lookup requires a hierarchy")
        members = list(node.member_components)
    values = [ci_by_component[m] for m in members if m in ci_by_component]
    if not values:
        raise EmptyAggregateError(f"group {node if isinstance(node, str) else node.id!r} is empty")
    return sum(values) / len(values)


def validate_metadata(metadata: Mapping[str, str], path: str = "metadata") -> dict[str, str]:
    """Key/value string map attached to components, groups, or scenarios."""
    out: dict[str, str] = {}
    for k, v in metadata.items():
        if not isinstance(k, str) or not isinstance(v, str):
            raise ValidationError(f"{path}[{k!r}]", "metadata keys and values must be strings")
        out[k] = v
    return out


def encode_action_index(actions: Sequence[int], n: int) -> int:
    """Pack a per-component action vector into a single base-4 index.

    Component 0 is the least-significant digit, so the all-DO_NOTHING vector
    encodes to 0. Bijective with :func:`decode_action_index`.
    """
    if len(actions) != n:
        raise ValueError(f"expected {n} actions, got {len(actions)}")
    index = 0
    for i, code in enumerate(actions):
        code = int(code)
        if code not in (0, 1, 2, 3):
            raise ValueError(f"action code at position {i} out of range: {code}")
        index += code * 4**i
    return index


def decode_action_index(index: int, n: int) -> list[Action]:
    """Inverse of :func:`encode_action_index`."""
    index = int(index)
    if not (0 <= index < 4**n):
        raise ValueError(f"index {index} out of range for {n} components")
    out = []
    for _ in range(n):
        out.append(Action(index % 4))
        index //= 4
    return out
