import math

import numpy as np
import pytest

from chartgeo.charts import NORTH
from chartgeo.errors import NonFiniteSample, ZeroVelocity
from chartgeo.functionals import (AnalyticCurve, DiscreteCurve, angle, energy, length,
                                  reparametrize_unit_speed, sample, speed)
from chartgeo.geodesic import integrate
from chartgeo.numerics import QuadratureConfig

TWO_PI = 2 * math.pi


def line(p, q, a=0.0, b=1.0):
    p, q = np.asarray(p, float), np.asarray(q, float)
    return AnalyticCurve(a, b, lambda t: p + (t - a) / (b - a) * (q - p),
                         velocity=lambda t: (q - p) / (b - a))


def equator():
    return AnalyticCurve(0, TWO_PI, lambda t: np.array([math.cos(t), math.sin(t)]),
                         velocity=lambda t: np.array([-math.sin(t), math.cos(t)]))


def test_sample_examples():
    s = sample(line((0, 0), (1, 0)), 3)
    assert np.allclose(s.lam, [0, 0.5, 1])
    const = sample(AnalyticCurve(0, 1, lambda t: np.array([2.0, -1.0])), 4)
    assert np.allclose(const.coords, [2, -1]) and np.allclose(const.velocities, 0)
    circ = sample(equator(), 5)
    assert np.allclose(circ.coords[0], circ.coords[-1], atol=1e-12)


def test_sample_with_break_point_duplicates_parameter():
    kink = AnalyticCurve(0, 2, lambda t: np.array([t, 0.0]) if t <= 1 else np.array([1.0, t - 1]),
                         break_points=(1.0,))
    s = sample(kink, 5)
    assert list(s.lam).count(1.0) == 2
    i = list(s.lam).index(1.0)
    assert np.allclose(s.velocities[i], [1, 0], atol=1e-6)
    assert np.allclose(s.velocities[i + 1], [0, 1], atol=1e-6)
    assert s.smooth_segments() == [(0, i + 1), (i + 1, len(s))]


def test_discrete_curve_validation():
    with pytest.raises(ValueError):
        DiscreteCurve([0, 1, 1, 2], 0, np.zeros((4, 2)), np.zeros((4, 2)))
    with pytest.raises(ValueError):
        DiscreteCurve([0, 2, 1], 0, np.zeros((3, 2)), np.zeros((3, 2)))
    with pytest.raises(NonFiniteSample):
        DiscreteCurve([0, 1], 0, [[0, 0], [math.nan, 0]], np.zeros((2, 2)))
    with pytest.raises(ValueError):
        DiscreteCurve([0, 1], 0, np.zeros((2, 2)), np.zeros((2, 2)), break_points=(1.0,))


def test_fd_velocity_fallback(euclid2):
    c = AnalyticCurve(0, 2, lambda t: np.array([t * t, 3 * t]))
    for lam in (0.0, 0.7, 2.0):
        assert np.allclose(c.vel(lam), [2 * lam, 3], atol=1e-8)
    assert length(euclid2, AnalyticCurve(0, 1, lambda t: np.array([3 * t, 4 * t]))) == pytest.approx(5, abs=1e-9)


def test_length_examples(euclid2, sphere):
    assert length(euclid2, line((0, 0), (3, 4))) == pytest.approx(5, abs=1e-10)
    assert length(sphere, equator()) == pytest.approx(TWO_PI, abs=1e-6)
    assert length(sphere, AnalyticCurve(0, 1, lambda t: np.array([0.4, 0.1]))) == 0.0


def test_energy_examples(euclid2, sphere):
    assert energy(euclid2, line((0, 0), (0.6, 0.8))) == pytest.approx(0.5, abs=1e-12)
    assert energy(euclid2, AnalyticCurve(0, 1, lambda t: np.array([1.0, 1.0]))) == 0.0
    assert energy(sphere, equator()) == pytest.approx(math.pi, abs=1e-6)


def test_discrete_functionals_match_analytic(sphere):
    s = sample(equator(), 401)
    assert length(sphere, s) == pytest.approx(TWO_PI, abs=1e-8)
    assert energy(sphere, s) == pytest.approx(math.pi, abs=1e-8)


def test_piecewise_length(euclid2):
    kink = AnalyticCurve(0, 2, lambda t: np.array([t, 0.0]) if t <= 1 else np.array([1.0, 2 * (t - 1)]),
                         break_points=(1.0,))
    assert length(euclid2, kink) == pytest.approx(3, abs=1e-9)
    assert length(euclid2, sample(kink, 41)) == pytest.approx(3, abs=1e-9)
    assert energy(euclid2, kink) == pytest.approx(0.5 + 2.0, abs=1e-9)


def test_angle_examples(euclid2, sphere):
    assert angle(euclid2, (0, (0, 0)), (1, 0), (0, 1)) == pytest.approx(math.pi / 2, abs=1e-15)
    assert angle(sphere, (NORTH, (0.5, 2)), (1, 3), (2, 6)) == pytest.approx(0, abs=1e-7)
    assert angle(sphere, (NORTH, (0.3, -0.2)), (1, 0), (0, 1)) == pytest.approx(math.pi / 2, abs=1e-10)


def test_angle_zero_vector(sphere):
    with pytest.raises(ZeroVelocity):
        angle(sphere, (NORTH, (0, 0)), (0, 0), (1, 0))


def test_angle_symmetry_and_scaling(sphere):
    rng = np.random.default_rng(8)
    for _ in range(50):
        p = (NORTH, rng.uniform(-2, 2, size=2))
        v, w = rng.normal(size=(2, 2))
        a, b = rng.uniform(0.01, 100, size=2)
        th = angle(sphere, p, v, w)
        assert 0 <= th <= math.pi
        assert abs(th - angle(sphere, p, w, v)) <= 1e-12
        assert abs(th - angle(sphere, p, a * v, b * w)) <= 1e-12


def test_speed_examples(euclid2, sphere):
    assert speed(euclid2, AnalyticCurve(0, 1, lambda t: np.array([t, 0.0])), 0.3) == pytest.approx(1)
    assert speed(euclid2, AnalyticCurve(0, 1, lambda t: np.array([2 * t, 0.0])), 0.3) == pytest.approx(2)
    for lam in np.linspace(0, TWO_PI, 7):
        assert speed(sphere, equator(), lam) == pytest.approx(1, abs=1e-6)
    assert speed(sphere, sample(equator(), 50), 1.234) == pytest.approx(1, abs=1e-2)


def test_reparametrize_examples(euclid2):
    unit = sample(line((0, 0), (0.6, 0.8)), 50)
    r = reparametrize_unit_speed(euclid2, unit)
    assert np.allclose(r.coords, unit.coords, atol=1e-12) and np.allclose(r.lam, unit.lam)

    sq = sample(AnalyticCurve(1, 2, lambda t: np.array([t * t, 0.0])), 200)
    r = reparametrize_unit_speed(euclid2, sq)
    speeds = [speed(euclid2, r, lam) for lam in r.lam]
    assert max(abs(s - 1) for s in speeds) <= 0.02
    assert length(euclid2, r) == pytest.approx(3, abs=1e-4)

    fast = sample(line((0, 0), (3, 0), 0, 2), 21)
    r = reparametrize_unit_speed(euclid2, fast)
    assert r.domain == pytest.approx((0, 3))


def test_reparametrize_rejects_stationary_curve(euclid2):
    with pytest.raises(ZeroVelocity):
        reparametrize_unit_speed(euclid2, sample(AnalyticCurve(0, 1, lambda t: np.zeros(2)), 5))


def curve_corpus(euclid2, sphere):
    yield euclid2, line((0, 0), (3, 4)), True
    yield euclid2, AnalyticCurve(0, 1, lambda t: np.array([t, t * t])), False
    yield euclid2, AnalyticCurve(-1, 2, lambda t: np.array([math.cos(t), math.sin(t)])), True
    yield euclid2, AnalyticCurve(0, 3, lambda t: np.array([t**3, math.sin(t)])), False
    yield euclid2, AnalyticCurve(0, 1, lambda t: np.array([0.3, 0.3])), True
    yield sphere, equator(), True
    yield sphere, AnalyticCurve(0, 1, lambda t: np.array([t, 0.5 * t * t - 0.2])), False
    yield sphere, integrate(sphere, (NORTH, (0.2, -0.4)), (1.0, 0.7), (0, 1), 400), True


def test_nonnegative_and_zero_iff_stationary(euclid2, sphere):
    for metric, curve, _ in curve_corpus(euclid2, sphere):
        L = length(metric, curve)
        assert L >= 0
        if L == 0:
            s = sample(curve, 17) if isinstance(curve, AnalyticCurve) else curve
            assert np.allclose(s.velocities, 0)


def test_cauchy_schwarz(euclid2, sphere):
    for metric, curve, constant in curve_corpus(euclid2, sphere):
        a, b = curve.domain
        L, E = length(metric, curve), energy(metric, curve)
        assert L * L <= 2 * (b - a) * E + 1e-8
        if constant:
            assert abs(L * L - 2 * (b - a) * E) <= 1e-8


def test_reparametrization_invariance(euclid2):
    base = line((0, 0), (3, 4))
    smooth = lambda s: min(1.0, max(0.0, 3 * s * s - 2 * s**3))
    moved = AnalyticCurve(0, 1, lambda s: base.pos(smooth(s)))
    assert abs(length(euclid2, moved) - 5) <= 1e-6
    assert abs(energy(euclid2, moved) / energy(euclid2, base) - 1) > 0.01


def test_additivity(sphere):
    pos = lambda t: np.array([math.cos(t), 0.5 * math.sin(2 * t)])
    whole = length(sphere, AnalyticCurve(0, 2, pos), QuadratureConfig(128))
    parts = (length(sphere, AnalyticCurve(0, 0.75, pos), QuadratureConfig(48))
             + length(sphere, AnalyticCurve(0.75, 2, pos), QuadratureConfig(80)))
    assert abs(whole - parts) <= 1e-8


def test_curve_slicing_and_state(sphere):
    g = integrate(sphere, (NORTH, (0, 0)), (0.5, 0), (0, math.pi), 400)
    assert len(g.switches) == 1
    sw = g.switches[0]
    sub = g.slice(sw.index - 10, sw.index + 10)
    assert len(sub.switches) == 1 and sub.switches[0].index == 10
    assert len(sub.chart_runs()) == 2
    chart, x, v = g.state_at(0.0)
    assert chart == NORTH and np.allclose(x, 0) and np.allclose(v, [0.5, 0])
