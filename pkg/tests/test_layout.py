import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alluvial_lab.core import AlluvialDataset, Flow, count_crossings, identity_orderings
from alluvial_lab.errors import InvalidOrdering, LayoutOverflow
from alluvial_lab.generator import GeneratorConfig, generate
from alluvial_lab.layout import (
    LayoutConfig,
    LayoutGeometry,
    assign_geometry,
    layout,
    order_columns,
    vertical_scale,
)
from oracles import brute_force_crossings


def ds(columns, flows, id="x"):
    return AlluvialDataset(id, tuple(columns), tuple(Flow(s, t, v) for s, t, v in flows))


def random_dataset(rng, max_flows=50):
    """Random valid two-or-more column dataset with at most ``max_flows`` flows."""
    while True:
        cols = rng.integers(1, 7, size=rng.integers(2, 5)).tolist()
        flows = set()
        for c in range(len(cols) - 1):
            for k in range(cols[c]):
                flows.add(((c, k), (c + 1, int(rng.integers(cols[c + 1])))))
            for k in range(cols[c + 1]):
                flows.add(((c, int(rng.integers(cols[c]))), (c + 1, k)))
            for _ in range(int(rng.integers(0, 6))):
                flows.add(((c, int(rng.integers(cols[c]))), (c + 1, int(rng.integers(cols[c + 1])))))
        if len(flows) <= max_flows:
            flows = sorted(flows)
            return ds(cols, [(s, t, int(rng.integers(1, 9))) for s, t in flows])


class TestOrdering:
    def test_x_pattern_uncrossed(self):
        d = ds([2, 2], [((0, 0), (1, 1), 1), ((0, 1), (1, 0), 1)])
        o = order_columns(d)
        assert count_crossings(d, o) == 0
        assert o in ([[0, 1], [1, 0]], [[1, 0], [0, 1]])

    def test_parallel_identity(self):
        d = ds([3, 3], [((0, i), (1, i), 1) for i in range(3)])
        assert order_columns(d) == identity_orderings(d)

    def test_seed42_not_worse(self):
        d = generate(GeneratorConfig(seed=42))
        assert count_crossings(d, order_columns(d)) <= count_crossings(d, identity_orderings(d))

    def test_never_worse_random(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            d = random_dataset(rng)
            o = order_columns(d)
            assert sorted(o[0]) == list(range(d.columns[0]))
            assert count_crossings(d, o) <= count_crossings(d, identity_orderings(d))

    def test_deterministic(self, corpus45):
        for d in corpus45[:10]:
            assert order_columns(d) == order_columns(d)

    def test_relaxation_helps_on_corpus(self, corpus45):
        before = sum(count_crossings(d, identity_orderings(d)) for d in corpus45)
        after = sum(count_crossings(d, order_columns(d)) for d in corpus45)
        assert after < before

    def test_zero_iterations_is_identity(self):
        d = ds([2, 2], [((0, 0), (1, 1), 1), ((0, 1), (1, 0), 1)])
        assert order_columns(d, LayoutConfig(relaxation_iterations=0)) == identity_orderings(d)


class TestCrossingOracle:
    def test_30_small_instances(self):
        rng = np.random.default_rng(30)
        for _ in range(30):
            d = random_dataset(rng, max_flows=20)
            o = [rng.permutation(n).tolist() for n in d.columns]
            flows = [(tuple(f.source), tuple(f.target)) for f in d.flows]
            assert count_crossings(d, o) == brute_force_crossings(flows, o)

    def test_pair_order_symmetry(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            d = random_dataset(rng)
            rev = AlluvialDataset(d.id, d.columns, tuple(reversed(d.flows)))
            o = [rng.permutation(n).tolist() for n in d.columns]
            assert count_crossings(d, o) == count_crossings(rev, o)

    def test_bad_permutation(self):
        d = ds([2, 2], [((0, 0), (1, 1), 1), ((0, 1), (1, 0), 1)])
        with pytest.raises(InvalidOrdering):
            assign_geometry(d, [[0, 1], [1, 1]])


class TestGeometry:
    def test_single_flow_full_height(self):
        d = ds([1, 1], [((0, 0), (1, 0), 30)])
        g = layout(d)
        usable = 1080 - 2 * 30
        for col in g.entity_rects:
            assert col[0].height == pytest.approx(usable)
            assert col[0].y == pytest.approx(30)
        assert g.flow_ribbons[0].thickness == pytest.approx(g.entity_rects[0][0].height)

    def test_height_ratio(self):
        d = ds([2, 1], [((0, 0), (1, 0), 10), ((0, 1), (1, 0), 30)])
        g = layout(d)
        a, b = g.entity_rects[0]
        assert b.height / a.height == pytest.approx(3.0, rel=1e-12)

    def test_column_x_positions(self):
        d = ds([1, 1, 1], [((0, 0), (1, 0), 4), ((1, 0), (2, 0), 4)])
        g = layout(d)
        xs = [col[0].x for col in g.entity_rects]
        assert xs[0] == 30 and xs[-1] == pytest.approx(1920 - 30 - 20)
        assert xs[1] - xs[0] == pytest.approx(xs[2] - xs[1])

    def test_invariants_on_corpus(self, corpus45):
        cfg = LayoutConfig()
        for d in corpus45:
            g = layout(d, cfg)
            totals = d.entity_totals()
            col_total = totals[0].sum()
            ky = vertical_scale(d.columns, [t.sum() for t in totals], cfg)
            for c, (rects, order) in enumerate(zip(g.entity_rects, g.orderings)):
                stack = [rects[s] for s in order]
                for upper, lower in zip(stack, stack[1:]):
                    assert lower.y >= upper.y + upper.height + cfg.node_padding_px - 1e-9
                for k, r in enumerate(rects):
                    assert r.height == pytest.approx(totals[c][k] / col_total * ky * col_total, rel=1e-12)
                assert stack[0].y >= cfg.margin_px - 1e-9
                assert stack[-1].y + stack[-1].height <= cfg.canvas_height_px - cfg.margin_px + 1e-9
            # proportionality and contiguous stacking
            for fl, rb in zip(d.flows, g.flow_ribbons):
                assert rb.thickness == pytest.approx(fl.value * ky, rel=1e-12)
                assert rb.thickness >= 10 - 1e-9
            for c, n in enumerate(d.columns):
                for k in range(n):
                    rect = g.entity_rects[c][k]
                    for side in ("source", "target"):
                        ids = [i for i, fl in enumerate(d.flows) if tuple(getattr(fl, side)) == (c, k)]
                        if not ids:
                            continue
                        ys = sorted(
                            (g.flow_ribbons[i].source_y if side == "source" else g.flow_ribbons[i].target_y, i)
                            for i in ids
                        )
                        y = rect.y
                        for yy, i in ys:
                            assert yy == pytest.approx(y, abs=1e-9)
                            y += g.flow_ribbons[i].thickness
                        assert y <= rect.y + rect.height + 1e-9

    def test_same_entity_ribbons_follow_opposite_order(self):
        d = ds([1, 3], [((0, 0), (1, i), 2) for i in range(3)])
        g = assign_geometry(d, [[0], [2, 0, 1]])
        ys = [rb.source_y for rb in g.flow_ribbons]
        # target slot 2 is on top, so its ribbon leaves first
        assert ys[2] < ys[0] < ys[1]

    def test_overflow(self):
        d = ds([5, 5], [((0, i), (1, i), 1) for i in range(5)])
        with pytest.raises(LayoutOverflow):
            layout(d, LayoutConfig(canvas_height_px=100, node_padding_px=30, margin_px=10))
        with pytest.raises(LayoutOverflow):
            layout(d, LayoutConfig(canvas_width_px=50))

    def test_json_round_trip(self, corpus45):
        g = layout(corpus45[0])
        import json

        again = LayoutGeometry.from_dict(json.loads(g.to_json()))
        assert again == g

    @pytest.mark.parametrize("kw", [{"canvas_width_px": 0}, {"node_padding_px": -1}, {"relaxation_iterations": -1}])
    def test_config_validation(self, kw):
        with pytest.raises(ValueError):
            LayoutConfig(**kw)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ordering_property_any_seed(seed):
    rng = np.random.default_rng(seed)
    d = random_dataset(rng)
    o = order_columns(d)
    assert count_crossings(d, o) <= count_crossings(d, identity_orderings(d))
