import pytest
from hypothesis import given
from hypothesis import strategies as st

from infrasim import (
    Action,
    ComponentSpec,
    Hierarchy,
    HierarchyNode,
    ValidationError,
    aggregate_ci,
    decode_action_index,
    encode_action_index,
)
from infrasim.core import EmptyAggregateError


class TestActionEncoding:
    def test_all_do_nothing_is_zero(self):
        assert encode_action_index([0, 0, 0, 0, 0], 5) == 0

    def test_base4_positional(self):
        # component 0 is the least significant digit
        assert encode_action_index([Action.INSPECT, Action.DO_NOTHING], 2) == 1
        assert encode_action_index([Action.REPLACE, Action.REPAIR], 2) == 3 + 2 * 4

    def test_decode_trivial(self):
        assert decode_action_index(0, 3) == [Action.DO_NOTHING] * 3

    def test_decode_inverse_of_encode(self):
        assert decode_action_index(11, 2) == [Action.REPLACE, Action.REPAIR]
        assert decode_action_index(4**2 - 1, 2) == [Action.REPLACE, Action.REPLACE]

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_bijection_exhaustive(self, n):
        for index in range(4**n):
            assert encode_action_index(decode_action_index(index, n), n) == index

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            encode_action_index([0, 0], 3)

    def test_bad_code(self):
        with pytest.raises(ValueError):
            encode_action_index([0, 4], 2)

    def test_index_out_of_range(self):
        with pytest.raises(ValueError):
            decode_action_index(4**3, 3)
        with pytest.raises(ValueError):
            decode_action_index(-1, 3)

    @given(st.integers(min_value=5, max_value=8), st.data())
    def test_bijection_sampled_larger_n(self, n, data):
        index = data.draw(st.integers(min_value=0, max_value=4**n - 1))
        assert encode_action_index(decode_action_index(index, n), n) == index


class TestComponentSpecValidation:
    def test_valid_spec(self):
        spec = ComponentSpec(id="x", shape=2.0, scale=50.0)
        assert spec.failure_threshold == 40.0

    @pytest.mark.parametrize(
        "field,value",
        [
            ("shape", 0.0),
            ("shape", -1.0),
            ("scale", 0.0),
            ("failure_threshold", 100.0),
            ("failure_threshold", -1.0),
            ("replace_cost", 0.0),
            ("cost_exponent", 0.0),
            ("min_repair_fraction", -0.1),
            ("inspect_cost", -1.0),
            ("hazard_rate", 1.5),
            ("hazard_rate", -0.1),
        ],
    )
    def test_rejects_out_of_bound(self, field, value):
        with pytest.raises(ValidationError) as err:
            ComponentSpec(id="x", **{field: value})
        assert field in str(err.value)

    def test_windows_must_be_sorted_disjoint(self):
        ComponentSpec(id="x", availability_windows=((1, 3), (5, 9)))
        with pytest.raises(ValidationError):
            ComponentSpec(id="x", availability_windows=((5, 9), (1, 3)))
        with pytest.raises(ValidationError):
            ComponentSpec(id="x", availability_windows=((1, 5), (4, 9)))
        with pytest.raises(ValidationError):
            ComponentSpec(id="x", availability_windows=((3, 1),))
        with pytest.raises(ValidationError):
            ComponentSpec(id="x", availability_windows=((-2, 4),))

    @given(
        st.floats(min_value=-5, max_value=5, allow_nan=False),
        st.floats(min_value=-50, max_value=200, allow_nan=False),
    )
    def test_shape_threshold_bounds_property(self, shape, threshold):
        ok_shape = shape > 0
        ok_threshold = 0 <= threshold < 100
        if ok_shape and ok_threshold:
            ComponentSpec(id="x", shape=shape, failure_threshold=threshold)
        else:
            with pytest.raises(ValidationError):
                ComponentSpec(id="x", shape=shape, failure_threshold=threshold)


class TestHierarchy:
    def _nodes(self):
        return [
            HierarchyNode(id="root", label="campus"),
            HierarchyNode(id="building-a", parent="root", member_components=("c0", "c1")),
            HierarchyNode(id="building-b", parent="root", member_components=("c2", "c3", "c4")),
        ]

    def test_aggregate_means(self):
        nodes = self._nodes()
        h = Hierarchy(nodes)
        ci = {"c0": 100.0, "c1": 100.0, "c2": 100.0, "c3": 50.0, "c4": 60.0}
        assert aggregate_ci(ci, nodes[1], h) == 100.0
        assert aggregate_ci({"c0": 100.0, "c1": 50.0}, nodes[1], h) == 75.0
        assert aggregate_ci({"c2": 80.0, "c3": 60.0, "c4": 40.0}, nodes[2], h) == 60.0

    def test_aggregate_recurses_to_root(self):
        nodes = self._nodes()
        h = Hierarchy(nodes)
        ci = {f"c{i}": v for i, v in enumerate([100.0, 100.0, 100.0, 50.0, 60.0])}
        assert aggregate_ci(ci, "root", h) == pytest.approx(82.0)

    def test_empty_group_errors(self):
        h = Hierarchy([HierarchyNode(id="solo")])
        with pytest.raises(EmptyAggregateError):
            aggregate_ci({}, "solo", h)

    def test_cycle_rejected(self):
        with pytest.raises(ValidationError):
            Hierarchy(
                [
                    HierarchyNode(id="a", parent="b"),
                    HierarchyNode(id="b", parent="a"),
                ]
            )

    def test_component_in_two_groups_rejected(self):
        with pytest.raises(ValidationError):
            Hierarchy(
                [
                    HierarchyNode(id="a", member_components=("c0",)),
                    HierarchyNode(id="b", member_components=("c0",)),
                ]
            )

    def test_unknown_parent_rejected(self):
        with pytest.raises(ValidationError):
            Hierarchy([HierarchyNode(id="a", parent="ghost")])
