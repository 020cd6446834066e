import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from serialfusion.roc import (
    OperationalPoint,
    PointKind,
    RocCurve,
    auc,
    build_roc,
    eer,
    far_at,
    frr_at,
    zero_far_point,
    zero_frr_point,
)
from serialfusion.scores import ScoreSet


def brute_force_roc(gen, imp):
    """O(n^2) threshold enumeration: count by hand at every distinct score."""
    out = []
    for t in sorted(set(gen) | set(imp)):
        fa = sum(1 for s in imp if s > t)
        fr = sum(1 for s in gen if s <= t)
        out.append((t, fa / len(imp), fr / len(gen)))
    return out


def mann_whitney_auc(gen, imp):
    wins = 0.0
    for g in gen:
        for i in imp:
            wins += 1.0 if g > i else 0.5 if g == i else 0.0
    return wins / (len(gen) * len(imp))


class TestRates:
    def test_far_count(self):
        s = ScoreSet([0.5], [0.1, 0.2])
        assert far_at(s, 0.15) == 0.5
        assert far_at(s, -1.0) == 1.0
        assert far_at(s, 0.2) == 0.0  # strict: a tie is not accepted

    def test_frr_count(self):
        s = ScoreSet([0.8, 0.9], [0.1])
        assert frr_at(s, 0.85) == 0.5
        assert frr_at(s, 2.0) == 1.0
        assert frr_at(s, 0.8) == 0.5  # a tie counts as rejected

    @settings(max_examples=100, deadline=None)
    @given(
        st.lists(st.floats(-5, 5), min_size=1, max_size=30),
        st.lists(st.floats(-5, 5), min_size=1, max_size=30),
        st.floats(-6, 6),
        st.floats(-6, 6),
    )
    def test_monotone(self, gen, imp, t1, t2):
        s = ScoreSet(gen, imp)
        lo, hi = min(t1, t2), max(t1, t2)
        assert far_at(s, lo) >= far_at(s, hi)
        assert frr_at(s, lo) <= frr_at(s, hi)


class TestBuildRoc:
    def test_separable(self):
        curve = build_roc(ScoreSet([0.8], [0.2]))
        far, frr = curve.rates_at(0.5)
        assert (far, frr) == (0.0, 0.0)
        assert any(a == 0 and r == 0 for _, a, r in curve.points())

    def test_full_overlap(self):
        curve = build_roc(ScoreSet([0.5], [0.5]))
        assert not any(a == 0 and r == 0 for _, a, r in curve.points())

    def test_sentinels(self):
        curve = build_roc(ScoreSet([0.3, 0.9], [0.1, 0.5]))
        assert (curve.far[0], curve.frr[0]) == (1.0, 0.0)
        assert (curve.far[-1], curve.frr[-1]) == (0.0, 1.0)
        assert curve.thresholds[0] < 0.1 and curve.thresholds[-1] > 0.9

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(100)
        gen = np.round(rng.normal(1.0, 1.0, 100), 2)  # rounding forces ties
        imp = np.round(rng.normal(0.0, 1.0, 100), 2)
        curve = build_roc(ScoreSet(gen, imp))
        oracle = brute_force_roc(gen.tolist(), imp.tolist())
        assert curve.points()[1:-1] == oracle

    def test_stored_points_equal_rate_functions(self):
        rng = np.random.default_rng(3)
        s = ScoreSet(rng.normal(1, 1, 40), rng.normal(0, 1, 60))
        for t, a, r in build_roc(s).points():
            assert a == far_at(s, t) and r == frr_at(s, t)

    def test_rates_are_count_ratios(self):
        rng = np.random.default_rng(4)
        gen, imp = rng.normal(1, 1, 37), rng.normal(0, 1, 53)
        curve = build_roc(ScoreSet(gen, imp))
        assert np.allclose(curve.far * 53, np.round(curve.far * 53), atol=1e-9)
        assert np.allclose(curve.frr * 37, np.round(curve.frr * 37), atol=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(st.integers(-50, 50), min_size=1, max_size=25),
        st.lists(st.integers(-50, 50), min_size=1, max_size=25),
        st.sampled_from(["exp", "cube", "affine"]),
    )
    def test_invariant_under_increasing_transform(self, gen, imp, kind):
        f = {"exp": lambda x: np.exp(x / 10.0), "cube": lambda x: x**3, "affine": lambda x: 3 * x - 7}[kind]
        a = build_roc(ScoreSet(np.array(gen, float), np.array(imp, float)))
        b = build_roc(ScoreSet(f(np.array(gen, float)), f(np.array(imp, float))))
        assert np.array_equal(a.far, b.far) and np.array_equal(a.frr, b.frr)

    def test_rates_at_between_points(self):
        curve = build_roc(ScoreSet([0.4, 0.8], [0.2, 0.6]))
        assert curve.rates_at(0.7) == (0.0, 0.5)
        assert curve.rates_at(0.5) == (0.5, 0.5)
        assert curve.rates_at(-100.0) == (1.0, 0.0)


class TestSerialization:
    def test_csv_round_trip(self):
        rng = np.random.default_rng(8)
        curve = build_roc(ScoreSet(rng.normal(1, 1, 20), rng.normal(0, 1, 20)))
        text = curve.to_csv()
        assert text.splitlines()[0] == "threshold,far,frr"
        assert RocCurve.from_csv(text) == curve

    def test_json_round_trip(self):
        curve = build_roc(ScoreSet([0.7, 0.9], [0.1, 0.75]))
        assert RocCurve.from_json(curve.to_json()) == curve

    def test_rejects_non_monotone(self):
        with pytest.raises(ValueError):
            RocCurve([0, 1], [0.2, 0.5], [0.0, 1.0])
        with pytest.raises(ValueError):
            RocCurve([1, 0], [0.5, 0.2], [0.0, 1.0])


class TestZeroPoints:
    def test_zero_frr_value(self):
        p = zero_frr_point(ScoreSet([0.8, 0.9], [0.1, 0.85]))
        # impostors >= min genuine (0.8): just 0.85
        assert p.far == 0.5 and p.frr == 0.0 and p.threshold == 0.8
        assert p.kind is PointKind.ZERO_FRR

    def test_zero_far_value(self):
        p = zero_far_point(ScoreSet([0.8, 0.9], [0.1, 0.85]))
        # genuines <= max impostor (0.85): just 0.8
        assert p.frr == 0.5 and p.far == 0.0 and p.threshold == 0.85
        assert p.kind is PointKind.ZERO_FAR

    def test_separated(self):
        s = ScoreSet([0.8, 0.9], [0.1, 0.2])
        assert zero_frr_point(s).far == 0.0
        assert zero_far_point(s).frr == 0.0

    def test_inverted(self):
        s = ScoreSet([0.1, 0.2], [0.8, 0.9])
        assert zero_frr_point(s).far == 1.0
        assert zero_far_point(s).frr == 1.0

    @settings(max_examples=100, deadline=None)
    @given(
        st.lists(st.floats(-5, 5), min_size=1, max_size=40),
        st.lists(st.floats(-5, 5), min_size=1, max_size=40),
    )
    def test_zero_rates_hold_on_own_data(self, gen, imp):
        s = ScoreSet(gen, imp)
        lo, hi = zero_frr_point(s), zero_far_point(s)
        # stage reject rule is score < lower; stage accept rule is score > upper
        assert not np.any(np.asarray(gen) < lo.threshold)
        assert not np.any(np.asarray(imp) > hi.threshold)
        assert lo.far == np.mean(np.asarray(imp) >= lo.threshold)
        assert hi.frr == np.mean(np.asarray(gen) <= hi.threshold)

    def test_kind_invariants(self):
        with pytest.raises(ValueError):
            OperationalPoint(0.5, 0.1, 0.0, PointKind.ZERO_FAR)
        with pytest.raises(ValueError):
            OperationalPoint(0.5, 0.0, 0.1, PointKind.ZERO_FRR)


class TestSummaries:
    def test_separable(self):
        curve = build_roc(ScoreSet([0.8, 0.9], [0.1, 0.2]))
        assert eer(curve) == 0.0
        assert auc(curve) == 1.0

    def test_class_independent_uniform(self):
        rng = np.random.default_rng(21)
        curve = build_roc(ScoreSet(rng.uniform(size=20_000), rng.uniform(size=20_000)))
        assert auc(curve) == pytest.approx(0.5, abs=0.02)
        assert eer(curve) == pytest.approx(0.5, abs=0.02)

    def test_auc_matches_mann_whitney(self):
        rng = np.random.default_rng(20)
        gen = np.round(rng.normal(0.5, 1, 20), 1)
        imp = np.round(rng.normal(0.0, 1, 20), 1)
        assert abs(auc(build_roc(ScoreSet(gen, imp))) - mann_whitney_auc(gen, imp)) < 1e-9

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(st.integers(0, 20), min_size=1, max_size=15),
        st.lists(st.integers(0, 20), min_size=1, max_size=15),
    )
    def test_auc_mann_whitney_property(self, gen, imp):
        assert auc(build_roc(ScoreSet(gen, imp))) == pytest.approx(
            mann_whitney_auc(gen, imp), abs=1e-12
        )

    def test_eer_exact_crossing(self):
        # at t = 0.5: far = 1/2, frr = 1/2
        curve = build_roc(ScoreSet([0.4, 0.8], [0.2, 0.6]))
        assert eer(curve) == 0.5

    def test_eer_midpoint_rule(self):
        # far steps 1 -> 2/3 -> 0 ... frr steps 0 -> 0 -> 1: no exact crossing
        curve = RocCurve([0, 1, 2], [1.0, 2 / 3, 0.0], [0.0, 0.25, 1.0])
        # bracketing pair (2/3, 0.25) and (0, 1): interval [max(0, .25), min(2/3, 1)]
        assert eer(curve) == pytest.approx((0.25 + 2 / 3) / 2)

    def test_eer_between_error_rates(self):
        rng = np.random.default_rng(2)
        curve = build_roc(ScoreSet(rng.normal(1.5, 1, 300), rng.normal(0, 1, 300)))
        e = eer(curve)
        d = curve.far - curve.frr
        k = int(np.argmax(d < 0))
        assert min(curve.far[k], curve.frr[k - 1]) <= e <= max(curve.far[k - 1], curve.frr[k])
