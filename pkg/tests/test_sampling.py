import numpy as np
import pytest

from overlap_ifs import (
    IfsSystem, ProbabilityVector, code_point, code_points, ks_compare,
    lift_orbit_point, lift_step, projection_equality_test, sample_word,
    sample_word_matrix,
)
from overlap_ifs.sampling import LiftState, stream


def test_streams_deterministic():
    a = sample_word(ProbabilityVector.uniform(2), 40, seed=7, index=3)
    b = sample_word(ProbabilityVector.uniform(2), 40, seed=7, index=3)
    assert a.symbols == b.symbols
    c = sample_word(ProbabilityVector.uniform(2), 40, seed=7, index=4)
    assert a.symbols != c.symbols
    d = sample_word(ProbabilityVector.uniform(2), 40, seed=8, index=3)
    assert a.symbols != d.symbols


def test_streams_order_independent():
    # stream index fixes the draw regardless of how the batch is laid out
    m = sample_word_matrix(ProbabilityVector.uniform(2), 20, seed=5, count=10)
    shifted = sample_word_matrix(ProbabilityVector.uniform(2), 20, seed=5,
                                 count=4, first_index=6)
    assert np.array_equal(m[6:], shifted)
    single = sample_word(ProbabilityVector.uniform(2), 20, seed=5, index=8)
    assert tuple(m[8]) == single.symbols


def test_prefix_consistency():
    long = sample_word(ProbabilityVector.uniform(2), 60, seed=11, index=0)
    short = sample_word(ProbabilityVector.uniform(2), 25, seed=11, index=0)
    assert long.symbols[:25] == short.symbols


def test_symbol_frequencies():
    p = ProbabilityVector([0.7, 0.3])
    m = sample_word_matrix(p, 50, seed=1, count=400)
    total = m.size
    frac = np.count_nonzero(m == 0) / total
    se = np.sqrt(0.7 * 0.3 / total)
    assert abs(frac - 0.7) < 4 * se


def test_code_point_examples(bc75):
    cp = code_point(bc75, (0, 1))
    # f_0(f_1(0)) = 0.75 * (0.75*0 + 1) - 1
    assert cp.value == pytest.approx(-0.25)
    assert cp.error_bound == pytest.approx(0.75 ** 2 * 4.0)
    bc60 = IfsSystem.bernoulli_convolution(0.6)
    deep = code_point(bc60, (1,) * 30)
    assert deep.value == pytest.approx(2.5, abs=1e-6)
    assert deep.error_bound < 1e-6


def test_code_point_rejects_empty(bc75):
    with pytest.raises(ValueError):
        code_point(bc75, ())


def test_coding_nested(bc75):
    w = sample_word(ProbabilityVector.uniform(2), 30, seed=2, index=0)
    prev = None
    for depth in (5, 10, 20, 30):
        cp = code_point(bc75, w.symbols[:depth])
        if prev is not None:
            # deeper codings stay inside the earlier certified interval
            assert abs(cp.value - prev.value) <= prev.error_bound + cp.error_bound
            assert cp.error_bound < prev.error_bound
        prev = cp


def test_code_points_matches_scalar(bc75):
    m = sample_word_matrix(ProbabilityVector.uniform(2), 12, seed=9, count=20)
    xs = code_points(bc75, m)
    for i in (0, 7, 19):
        assert xs[i] == code_point(bc75, tuple(m[i])).value


def test_code_points_reverse(bc75):
    m = sample_word_matrix(ProbabilityVector.uniform(2), 10, seed=9, count=5)
    xs = code_points(bc75, m, reverse=True)
    for i in range(5):
        assert xs[i] == code_point(bc75, tuple(m[i])[::-1]).value


def test_lift_step_examples(bc60):
    st0 = LiftState(word_window=(0, 1), x=0.0)
    st1 = lift_step(bc60, st0)
    assert st1.word_window == (1,)
    assert st1.x == pytest.approx(-1.0)
    st2 = lift_step(bc60, st1)
    assert st2.word_window == ()
    assert st2.x == pytest.approx(0.4)
    with pytest.raises(ValueError):
        lift_step(bc60, st2)


def test_lift_orbit_is_reversed_composition(bc75):
    w = sample_word(ProbabilityVector.uniform(2), 15, seed=4, index=1)
    direct = lift_orbit_point(bc75, w.symbols, bc75.hull.midpoint)
    assert direct == code_point(bc75, w.symbols[::-1]).value


def test_lift_preserves_hull(bc75):
    x = bc75.hull.lo
    for sym in (0, 1, 1, 0, 1):
        x = lift_orbit_point(bc75, (sym,), x)
        assert bc75.hull.lo - 1e-12 <= x <= bc75.hull.hi + 1e-12


def test_ks_compare_identical():
    rng = stream(0, 0)
    a = rng.normal(size=2000)
    rep = ks_compare(a, a.copy())
    assert rep.passed and rep.statistic == 0.0


def test_projection_equality(bc75):
    rep = projection_equality_test(bc75, ProbabilityVector.uniform(2),
                                   N=4000, depth=40, seed=21)
    assert rep.passed, f"stat {rep.statistic} >= {rep.threshold}"


def test_projection_equality_negative_control(bc75):
    rep = projection_equality_test(bc75, ProbabilityVector.uniform(2),
                                   N=4000, depth=40, seed=21,
                                   p_lift=ProbabilityVector([0.9, 0.1]))
    assert not rep.passed


def test_projection_equality_sample_floor(bc75):
    with pytest.raises(ValueError):
        projection_equality_test(bc75, ProbabilityVector.uniform(2),
                                 N=10, depth=10, seed=0)
