import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alluvial_lab.core import (
    ACC3,
    ACC4,
    S_A,
    SVC,
    AlluvialDataset,
    ComplexityClass,
    EntityRef,
    FeatureVector,
    Flow,
    ModelWeights,
    build_reports,
    classify,
    classify_scores,
    count_crossings,
    extract_features,
    features_csv,
    identity_orderings,
    normalize_scores,
    read_features_csv,
    score,
)
from alluvial_lab.errors import EmptyInput, FormatError, InvalidDataset, InvalidOrdering, OutOfRange
from oracles import brute_force_crossings


def ds(columns, flows, id="x"):
    return AlluvialDataset(id, tuple(columns), tuple(Flow(s, t, v) for s, t, v in flows))


X_PATTERN = ds([2, 2], [((0, 0), (1, 1), 1), ((0, 1), (1, 0), 1)])


class TestDataset:
    def test_flow_coerces_refs(self):
        fl = Flow((0, 1), (1, 0), 3)
        assert fl.source == EntityRef(0, 1) and fl.target.column == 1

    def test_parallel_flows_merge(self):
        d = ds([1, 1], [((0, 0), (1, 0), 2), ((0, 0), (1, 0), 3)])
        assert len(d.flows) == 1 and d.flows[0].value == 5

    @pytest.mark.parametrize(
        "columns,flows",
        [
            ([1], []),
            ([1, 0], [((0, 0), (1, 0), 1)]),
            ([1, 1], [((0, 0), (1, 0), 0)]),
            ([1, 1], [((0, 0), (1, 0), -1)]),
            ([1, 1, 1], [((0, 0), (2, 0), 1)]),
            ([1, 1], [((1, 0), (0, 0), 1)]),
            ([1, 1], [((0, 0), (1, 3), 1)]),
            ([2, 1], [((0, 0), (1, 0), 1)]),  # (0,1) has no outflow
            ([1, 2], [((0, 0), (1, 0), 1)]),  # (1,1) has no inflow
        ],
    )
    def test_invalid(self, columns, flows):
        with pytest.raises(InvalidDataset):
            ds(columns, flows)

    def test_json_round_trip(self, corpus45):
        for d in corpus45[:10]:
            text = d.to_json()
            again = AlluvialDataset.from_json(text)
            assert again == d and again.to_json() == text

    def test_json_schema_shape(self):
        doc = json.loads(X_PATTERN.to_json())
        assert set(doc) == {"id", "columns", "flows"}
        assert doc["flows"][0] == {"source": [0, 0], "target": [1, 1], "value": 1}

    def test_bad_json(self):
        with pytest.raises(InvalidDataset):
            AlluvialDataset.from_json("{not json")
        with pytest.raises(InvalidDataset):
            AlluvialDataset.from_json('{"id": "a"}')

    def test_entity_totals_use_throughput(self):
        d = ds([1, 2], [((0, 0), (1, 0), 2), ((0, 0), (1, 1), 6)])
        totals = d.entity_totals()
        assert totals[0].tolist() == [8] and totals[1].tolist() == [2, 6]


class TestCrossings:
    def test_x_pattern(self):
        assert count_crossings(X_PATTERN, [[0, 1], [0, 1]]) == 1
        assert count_crossings(X_PATTERN, [[0, 1], [1, 0]]) == 0
        assert count_crossings(X_PATTERN, [[1, 0], [0, 1]]) == 0

    def test_parallel(self):
        d = ds([3, 3], [((0, i), (1, i), 1) for i in range(3)])
        assert count_crossings(d, identity_orderings(d)) == 0

    def test_shared_endpoints_never_cross(self):
        d = ds([1, 3], [((0, 0), (1, i), 1) for i in range(3)])
        assert count_crossings(d, [[0], [2, 0, 1]]) == 0

    def test_invalid_ordering(self):
        with pytest.raises(InvalidOrdering):
            count_crossings(X_PATTERN, [[0, 0], [0, 1]])
        with pytest.raises(InvalidOrdering):
            count_crossings(X_PATTERN, [[0, 1]])
        with pytest.raises(InvalidOrdering):
            count_crossings(X_PATTERN, [[0, 1, 2], [0, 1]])

    def test_three_column_example(self):
        # [2,3,3] with two inverted pairs in the first gap and none in the second
        d = ds(
            [2, 3, 3],
            [
                ((0, 0), (1, 1), 1),
                ((0, 0), (1, 2), 1),
                ((0, 1), (1, 0), 1),
                ((1, 0), (2, 0), 1),
                ((1, 1), (2, 1), 1),
                ((1, 2), (2, 2), 1),
            ],
        )
        fv = extract_features(d, identity_orderings(d))
        assert fv == FeatureVector(3, 8, 6, 2)
        assert score(fv, S_A) == 19

    def test_single_flow(self):
        d = ds([1, 1], [((0, 0), (1, 0), 5)])
        assert extract_features(d, identity_orderings(d)) == FeatureVector(2, 2, 1, 0)

    def test_matches_oracle_on_corpus(self, corpus45):
        rng = np.random.default_rng(42)
        for d in corpus45:
            orderings = [list(rng.permutation(n)) for n in d.columns]
            flows = [(tuple(f.source), tuple(f.target)) for f in d.flows]
            assert count_crossings(d, orderings) == brute_force_crossings(flows, orderings)

    @settings(max_examples=60, deadline=None)
    @given(st.data())
    def test_slot_relabelling_invariance(self, data):
        n0 = data.draw(st.integers(1, 4))
        n1 = data.draw(st.integers(1, 4))
        pairs = data.draw(
            st.sets(st.tuples(st.integers(0, n0 - 1), st.integers(0, n1 - 1)), min_size=1, max_size=n0 * n1)
        )
        used0 = {a for a, _ in pairs}
        used1 = {b for _, b in pairs}
        if used0 != set(range(n0)) or used1 != set(range(n1)):
            return
        d = ds([n0, n1], [((0, a), (1, b), 1) for a, b in pairs])
        o = [data.draw(st.permutations(range(n0))), data.draw(st.permutations(range(n1)))]
        # relabel slots by a permutation and move the ordering along with it
        p0 = data.draw(st.permutations(range(n0)))
        p1 = data.draw(st.permutations(range(n1)))
        d2 = ds([n0, n1], [((0, p0[a]), (1, p1[b]), 1) for a, b in pairs])
        o2 = [[p0[s] for s in o[0]], [p1[s] for s in o[1]]]
        assert count_crossings(d, o) == count_crossings(d2, o2)


class TestScoring:
    def test_unit_weights(self):
        assert score(FeatureVector(3, 8, 4, 2), S_A) == 17

    def test_published_examples(self):
        assert score(FeatureVector(10, 10, 10, 10), ACC3) == pytest.approx(9.99, abs=1e-12)
        assert score(FeatureVector(1, 0, 0, 0), SVC) == pytest.approx(0.240, abs=1e-15)

    @pytest.mark.parametrize("w,total", [(ACC3, 0.999), (ACC4, 0.9986), (SVC, 0.998)])
    def test_weight_sums(self, w, total):
        assert abs(score(FeatureVector(1, 1, 1, 1), w) - total) <= 1e-12

    def test_labels(self):
        with pytest.raises(ValueError):
            ModelWeights(1, 1, 1, 2, "S_a")
        with pytest.raises(ValueError):
            ModelWeights(1, 1, 1, 1, "Svc2")

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(0, 100), min_size=4, max_size=4), st.integers(0, 3), st.integers(1, 50))
    def test_monotone(self, base, j, bump):
        fv = FeatureVector(*base)
        up = list(base)
        up[j] += bump
        for w in (S_A, ACC3, ACC4, SVC):
            assert score(FeatureVector(*up), w) >= score(fv, w)


class TestNormalizeClassify:
    def test_published_scores(self):
        out = normalize_scores([17, 204, 306])
        assert [round(v, 4) for v in out] == [0.0, 0.6471, 1.0]

    def test_constant(self):
        assert normalize_scores([5, 5, 5]) == [0, 0, 0]

    def test_empty(self):
        with pytest.raises(EmptyInput):
            normalize_scores([])

    def test_rank_preserving(self, features45):
        raw = [score(f, S_A) for f in features45]
        norm = normalize_scores(raw)
        assert np.array_equal(np.argsort(raw, kind="stable"), np.argsort(norm, kind="stable"))
        assert min(norm) == 0.0 and max(norm) == 1.0

    @pytest.mark.parametrize(
        "s,cls",
        [
            (0.0, ComplexityClass.EASY),
            (0.3299999, ComplexityClass.EASY),
            (0.33, ComplexityClass.MEDIUM),
            (0.6699999, ComplexityClass.MEDIUM),
            (0.67, ComplexityClass.HARD),
            (1.0, ComplexityClass.HARD),
        ],
    )
    def test_thresholds(self, s, cls):
        assert classify(s) is cls

    @pytest.mark.parametrize("s", [-1e-9, 1.0000001, math.nan])
    def test_out_of_range(self, s):
        with pytest.raises(OutOfRange):
            classify(s)

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=30),
        st.floats(0.01, 100),
        st.floats(-100, 100),
    )
    def test_affine_invariance(self, scores, a, b):
        before = classify_scores(scores)
        after = classify_scores([a * s + b for s in scores])
        norm = normalize_scores(scores)
        # only compare away from the thresholds, where rounding could flip a bin
        for x, p, q in zip(norm, before, after):
            if min(abs(x - 0.33), abs(x - 0.67)) > 1e-9:
                assert p is q

    def test_class_index(self):
        for i, c in enumerate((ComplexityClass.EASY, ComplexityClass.MEDIUM, ComplexityClass.HARD)):
            assert c.index == i and ComplexityClass.from_index(i) is c


class TestFeatureCsv:
    def test_round_trip(self, corpus45, features45):
        reports = build_reports(features45, SVC, [d.id for d in corpus45])
        text = features_csv(reports)
        assert text.splitlines()[0] == "id,t,e,f,c,raw_score,normalized_score,class"
        ids, feats = read_features_csv(text)
        assert ids == [d.id for d in corpus45] and feats == list(features45)

    def test_bad_header(self):
        with pytest.raises(FormatError):
            read_features_csv("a,b\n1,2\n")

    def test_bad_row(self):
        with pytest.raises(FormatError):
            read_features_csv("id,t,e,f,c\nx,1,2,three,4\n")

    def test_report_fields(self, features45):
        reports = build_reports(features45, S_A)
        for r, fv in zip(reports, features45):
            assert r.raw_score == sum(fv)
            assert 0 <= r.normalized_score <= 1
            assert r.complexity_class is classify(r.normalized_score)
