from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import _oracles
from conftest import random_instance
from mgrobust.domain import (
    ALL,
    Dataset,
    GroupClass,
    LabeledDistribution,
    PatchedPredictor,
    Schema,
    constant_predictor,
    parse_predicate,
)
from mgrobust.errors import EmptyGroupError
from mgrobust.metrics import (
    DEFAULT_GAMMA_GRID,
    accuracy,
    distshift_check,
    group_report,
    ma_err,
    optimize_gamma,
    robustness_check,
)
from mgrobust.rng import stream


def vector_predictor(values) -> PatchedPredictor:
    arr = np.asarray(values, dtype=np.float64)
    return PatchedPredictor(lambda table: arr[: table.n])


class TestMaErr:
    def test_half_predictor_on_positive_pair(self, four_row, four_row_groups):
        p = PatchedPredictor(constant_predictor(0.5))
        assert ma_err(p, four_row, four_row_groups["A"]) == pytest.approx(-0.25)

    def test_exact_predictor_gives_zero(self, four_row, four_row_groups):
        p = vector_predictor([1.0, 1.0, 0.0, 0.0])
        for g in four_row_groups:
            assert ma_err(p, four_row, g) == 0.0

    def test_balanced_cancellation_on_all(self, four_row):
        p = PatchedPredictor(constant_predictor(0.5))
        assert ma_err(p, four_row, ALL) == 0.0

    def test_custom_normalizer(self, four_row, four_row_groups):
        p = PatchedPredictor(constant_predictor(0.5))
        assert ma_err(p, four_row, four_row_groups["A"], normalizer=2) == pytest.approx(-0.5)

    def test_zero_normalizer_rejected(self, four_row):
        with pytest.raises(ValueError):
            ma_err(PatchedPredictor(constant_predictor(0.5)), four_row, ALL, normalizer=0)

    @given(alpha=st.floats(0.0, 1.0))
    @settings(max_examples=40, deadline=None)
    def test_linearity_in_predictor(self, alpha):
        rng = stream("linearity")
        schema = Schema(("v",), ("numeric",))
        n = 40
        data = Dataset.from_rows(
            schema,
            [(float(v),) for v in rng.random(n)],
            rng.integers(0, 2, n).tolist(),
        )
        p = rng.random(n)
        q = rng.random(n)
        mix = vector_predictor(alpha * p + (1 - alpha) * q)
        group = parse_predicate("half: v<=0.5")
        expected = alpha * ma_err(vector_predictor(p), data, group) + (1 - alpha) * ma_err(
            vector_predictor(q), data, group
        )
        assert ma_err(mix, data, group) == pytest.approx(expected, abs=1e-12)


class TestAccuracy:
    def test_perfect_separation(self, four_row_groups):
        schema = Schema(("g",), ("categorical",))
        data = Dataset.from_rows(schema, [("a",), ("b",)], [1, 0])
        p = vector_predictor([0.9, 0.2])
        assert accuracy(p, data, ALL, 0.5) == 1.0

    def test_inverted_labels(self):
        schema = Schema(("g",), ("categorical",))
        data = Dataset.from_rows(schema, [("a",), ("b",)], [0, 1])
        p = vector_predictor([0.9, 0.2])
        assert accuracy(p, data, ALL, 0.5) == 0.0

    def test_two_thirds(self):
        schema = Schema(("g",), ("categorical",))
        data = Dataset.from_rows(schema, [("a",), ("a",), ("b",)], [1, 0, 0])
        p = vector_predictor([0.6, 0.6, 0.4])
        assert accuracy(p, data, ALL, 0.5) == pytest.approx(2 / 3)

    def test_empty_group_raises(self, four_row):
        with pytest.raises(EmptyGroupError):
            accuracy(
                PatchedPredictor(constant_predictor(0.5)),
                four_row,
                parse_predicate("none: g==zzz"),
                0.5,
            )

    def test_group_report_flags_empty(self, four_row):
        report = group_report(
            PatchedPredictor(constant_predictor(0.5)),
            four_row,
            parse_predicate("none: g==zzz"),
            0.5,
        )
        assert report.support == 0
        assert report.accuracy is None
        assert report.abs_ma_err == abs(report.ma_err) == 0.0


class TestOptimizeGamma:
    def test_calibrated_balanced(self):
        schema = Schema(("v",), ("numeric",))
        data = Dataset.from_rows(schema, [(0.0,), (1.0,)], [0, 1])
        p = vector_predictor([0.2, 0.8])
        # every gamma in [0.2, 0.8) separates; the smallest maximizer wins
        assert optimize_gamma(p, data) == 0.2

    def test_all_positive_labels(self):
        schema = Schema(("v",), ("numeric",))
        data = Dataset.from_rows(schema, [(0.0,), (1.0,)], [1, 1])
        p = vector_predictor([0.3, 0.9])
        assert optimize_gamma(p, data) == DEFAULT_GAMMA_GRID[0]

    def test_single_point_grid(self):
        schema = Schema(("v",), ("numeric",))
        data = Dataset.from_rows(schema, [(0.0,)], [1])
        p = vector_predictor([0.9])
        assert optimize_gamma(p, data, (0.5,)) == 0.5

    def test_empty_grid_rejected(self):
        schema = Schema(("v",), ("numeric",))
        data = Dataset.from_rows(schema, [(0.0,)], [1])
        with pytest.raises(ValueError):
            optimize_gamma(vector_predictor([0.9]), data, ())

    def test_matches_exhaustive_search(self):
        rng = stream("gamma-oracle")
        schema = Schema(("v",), ("numeric",))
        n = 60
        data = Dataset.from_rows(
            schema, [(float(v),) for v in rng.random(n)], rng.integers(0, 2, n).tolist()
        )
        preds = rng.random(n)
        p = vector_predictor(preds)
        got = optimize_gamma(p, data)
        best = max(
            DEFAULT_GAMMA_GRID,
            key=lambda gm: (_oracles.accuracy_loops(preds, data, ALL, gm), -gm),
        )
        assert got == best


class TestRobustnessCheck:
    def test_identity_gives_zero_everywhere(self, four_row, four_row_groups):
        p = PatchedPredictor(constant_predictor(0.5))
        checks = robustness_check(
            p, p, four_row, four_row, four_row.features, four_row_groups, 0.1
        )
        for check in checks:
            assert check.lhs == 0.0
            assert check.label_term == 0.0
            assert check.sym_diff_term == 0.0
            assert check.satisfied

    def test_single_flip_label_term(self, four_row, four_row_groups):
        flipped = four_row.with_labels([1, 1, 1, 0])  # one 0 -> 1 inside group B
        p = PatchedPredictor(constant_predictor(0.5))
        checks = {
            c.group: c
            for c in robustness_check(
                p, p, four_row, flipped, four_row.features, four_row_groups, 0.1
            )
        }
        assert checks["B"].label_term == pytest.approx(1 / 4)
        assert checks["A"].label_term == 0.0
        assert all(c.satisfied for c in checks.values())

    def test_satisfied_flag_matches_inequality(self, four_row, four_row_groups):
        p0 = PatchedPredictor(constant_predictor(0.0))
        p1 = PatchedPredictor(constant_predictor(1.0))
        checks = robustness_check(
            p0, p1, four_row, four_row, four_row.features, four_row_groups, 0.05
        )
        for check in checks:
            bound = check.label_term + check.sym_diff_term + check.epsilon_slack
            assert check.satisfied == (check.lhs <= bound)
            if check.group == "ALL":
                assert check.lhs == pytest.approx(1.0)
                assert not check.satisfied


class TestDistShiftCheck:
    def setup_method(self):
        self.schema = Schema(("tok",), ("categorical",))
        self.table_rows = [("a",), ("b",)]
        self.groups = GroupClass([parse_predicate("onlya: tok==a")])

    def dist(self, labels, probs):
        from mgrobust.domain import FeatureTable

        return LabeledDistribution(
            FeatureTable.from_rows(self.schema, self.table_rows), labels, probs
        )

    def test_no_shift_bound_is_slack(self):
        d = self.dist([1, 0], [0.5, 0.5])
        p = PatchedPredictor(constant_predictor(0.5))
        for check in distshift_check(p, p, d, d, self.groups, 0.05):
            assert check.lhs == 0.0
            assert check.label_term == 0.0
            assert check.sym_diff_term == 0.0
            assert check.satisfied

    def test_label_flip_mass(self):
        d = self.dist([0, 0], [0.25, 0.75])
        shifted = self.dist([1, 0], [0.25, 0.75])  # flip label of 'a' w.p. 1
        p = PatchedPredictor(constant_predictor(0.5))
        checks = {c.group: c for c in distshift_check(p, p, d, shifted, self.groups, 0.0)}
        assert checks["onlya"].label_term == pytest.approx(0.25)

    def test_covariate_term_matches_restricted_distance(self):
        from mgrobust.domain import FeatureTable

        uniform = self.dist([0, 0], [0.5, 0.5])
        point = LabeledDistribution(
            FeatureTable.from_rows(self.schema, [("a",)]), [0], [1.0]
        )
        p = PatchedPredictor(constant_predictor(0.5))
        checks = {c.group: c for c in distshift_check(p, p, uniform, point, self.groups, 0.0)}
        assert checks["onlya"].sym_diff_term == pytest.approx(0.5)
        assert checks["ALL"].sym_diff_term == pytest.approx(1.0)


class TestOracleAgreement:
    def test_metrics_match_loop_oracles(self):
        rng = stream("metrics-oracle")
        for _ in range(40):
            data, predicates = random_instance(rng, max_rows=80)
            preds = rng.random(data.n)
            p = vector_predictor(preds)
            gamma = float(rng.choice(DEFAULT_GAMMA_GRID))
            for predicate in predicates:
                assert ma_err(p, data, predicate) == pytest.approx(
                    _oracles.ma_err_loops(preds, data, predicate), abs=1e-12
                )
                support = sum(_oracles.membership_bits(data, predicate))
                if support:
                    assert accuracy(p, data, predicate, gamma) == pytest.approx(
                        _oracles.accuracy_loops(preds, data, predicate, gamma), abs=1e-12
                    )
