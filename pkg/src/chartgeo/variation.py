"""First variations and Euler-Lagrange residuals of chart Lagrangians.

Perturbations are compactly supported bumps added to a curve in chart
coordinates, so everything in this module is local to a single chart.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ChartExit, ZeroVelocity
from .functionals import AnalyticCurve, DiscreteCurve, energy, length
from .numerics import QuadratureConfig, integrate_scalar

DEFAULT_ALPHA_STEP = 1e-4
MIN_LENGTH_SPEED = 1e-9
# bump derivatives are steep near the support edges; 64 panels leave ~1e-4 error
VARIATION_QUAD = QuadratureConfig(256)


@dataclass(frozen=True)
class BumpPerturbation:
    """``eta(lam) = direction * exp(-1 / (1 - s^2))`` with ``s = 2 (lam - center) / width``."""

    a: float
    b: float
    center: float
    width: float
    direction: tuple

    def __post_init__(self):
        object.__setattr__(self, "direction", tuple(float(c) for c in self.direction))
        lo, hi = self.support
        if not (self.width > 0 and self.a < lo and hi < self.b):
            raise ValueError(f"bump support [{lo}, {hi}] must lie strictly inside "
                             f"({self.a}, {self.b})")

    @property
    def support(self):
        return self.center - 0.5 * self.width, self.center + 0.5 * self.width

    def _profile(self, lam):
        s = 2.0 * (np.asarray(lam, dtype=float) - self.center) / self.width
        inside = np.abs(s) < 1.0
        s_in = np.where(inside, s, 0.0)
        prof = np.where(inside, np.exp(-1.0 / (1.0 - s_in**2)), 0.0)
        dprof = np.where(inside, prof * (-2.0 * s_in / (1.0 - s_in**2) ** 2)
                         * (2.0 / self.width), 0.0)
        return prof, dprof

    def value(self, lam):
        prof, _ = self._profile(lam)
        return np.multiply.outer(prof, np.array(self.direction))

    def derivative(self, lam):
        _, dprof = self._profile(lam)
        return np.multiply.outer(dprof, np.array(self.direction))


class ChartLagrangian:
    """``L(x, v)`` equal to ``sqrt(R)`` (length) or ``R / 2`` (energy), ``R = v^T g(x) v``."""

    def __init__(self, field, chart, kind="energy"):
        if kind not in ("length", "energy"):
            raise ValueError(f"unknown Lagrangian kind {kind!r}")
        self.field = field
        self.chart = chart
        self.kind = kind

    def __call__(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        r = v @ self.field.components(self.chart, x) @ v
        if self.kind == "energy":
            return 0.5 * r
        if r <= MIN_LENGTH_SPEED**2:
            raise ZeroVelocity("length Lagrangian is not differentiable at zero speed")
        return math.sqrt(r)


def _single_chart(curve):
    if isinstance(curve, AnalyticCurve):
        return curve.chart
    charts = set(curve.charts.tolist())
    if len(charts) != 1:
        raise ChartExit("variations are only defined for curves inside one chart")
    return charts.pop()


def perturb(curve, bump, alpha):
    """``curve + alpha * bump`` in chart coordinates."""
    _single_chart(curve)
    if isinstance(curve, DiscreteCurve):
        coords = curve.coords + alpha * bump.value(curve.lam)
        vels = curve.velocities + alpha * bump.derivative(curve.lam)
        return DiscreteCurve(curve.lam, curve.charts, coords, vels, curve.break_points)

    def position(lam):
        return curve.pos(lam) + alpha * bump.value(lam)

    def velocity(lam):
        return curve.vel(lam) + alpha * bump.derivative(lam)

    return replace(curve, position=position, velocity=velocity)


def _check_in_chart(field, curve, chart):
    domain = field.atlas.domains[chart]
    if isinstance(curve, DiscreteCurve):
        pts = curve.coords
    else:
        pts = [curve.pos(t) for t in np.linspace(curve.a, curve.b, 65)]
    for x in pts:
        if not domain(x):
            raise ChartExit(f"perturbed point {tuple(x)} leaves chart {chart}")


def hermite_curve(curve):
    """Cubic Hermite interpolant of a smooth single-chart discrete curve.

    Uses both stored positions and stored velocities, so the interpolated
    velocity is third-order accurate in the sample spacing.
    """
    from scipy.interpolate import CubicHermiteSpline

    chart = _single_chart(curve)
    if curve.break_points:
        raise ValueError("Hermite interpolation needs a curve without break points")
    spline = CubicHermiteSpline(curve.lam, curve.coords, curve.velocities, axis=0)
    deriv = spline.derivative()
    a, b = curve.domain
    return AnalyticCurve(a, b, spline, chart, velocity=deriv)


def first_variation(field, curve, bump, functional="energy", alpha_step=DEFAULT_ALPHA_STEP,
                    quad=VARIATION_QUAD, richardson=True):
    """Central-difference derivative of ``F(curve + alpha * bump)`` at ``alpha = 0``.

    With ``richardson`` the step is halved once and the two central
    differences are combined to cancel the leading error term. For analytic
    curves the functional is evaluated only over the bump support, where all
    of the change happens, so ``quad`` resolves narrow bumps. Smooth discrete
    curves are first replaced by their cubic Hermite interpolant.
    """
    if not alpha_step > 0:
        raise ValueError("alpha_step must be positive")
    F = {"energy": energy, "length": length}[functional]
    chart = _single_chart(curve)
    if isinstance(curve, DiscreteCurve) and not curve.break_points:
        curve = hermite_curve(curve)
    if isinstance(curve, AnalyticCurve):
        lo, hi = bump.support
        inside = tuple(c for c in curve.break_points if lo < c < hi)
        curve = replace(curve, a=lo, b=hi, break_points=inside)

    def value(alpha):
        moved = perturb(curve, bump, alpha)
        _check_in_chart(field, moved, chart)
        return F(field, moved, quad)

    def central(h):
        return (value(h) - value(-h)) / (2.0 * h)

    d1 = central(alpha_step)
    if not richardson:
        return d1
    return (4.0 * central(0.5 * alpha_step) - d1) / 3.0


def _state(curve, lam, offset=0):
    """Position and velocity at ``lam`` (analytic) or at sample ``lam + offset`` (discrete)."""
    if isinstance(curve, AnalyticCurve):
        return curve.pos(lam), curve.vel(lam)
    return curve.coords[lam + offset], curve.velocities[lam + offset]


def euler_lagrange_residual(field, curve, kind, lam, h_lam=None):
    """``d_x L - d/dlam (d_v L)`` along the curve at parameter ``lam``.

    Partial derivatives of the Lagrangian use the field's finite-difference
    step; the outer parameter derivative is a central difference along the
    curve (fourth order on the stored samples of a discrete curve where
    two neighbours on each side are available).
    """
    chart = _single_chart(curve)
    L = ChartLagrangian(field, chart, kind)
    h = field.fd.h

    def grads(x, v):
        d = x.size
        gx, gv = np.empty(d), np.empty(d)
        for k in range(d):
            e = np.zeros(d)
            e[k] = h
            gx[k] = (L(x + e, v) - L(x - e, v)) / (2 * h)
            gv[k] = (L(x, v + e) - L(x, v - e)) / (2 * h)
        return gx, gv

    if isinstance(curve, AnalyticCurve):
        if not curve.a < lam < curve.b:
            raise ValueError(f"parameter {lam} must be interior")
        dl = h_lam if h_lam is not None else 1e-3 * (curve.b - curve.a)
        gx, _ = grads(*_state(curve, lam))
        p_plus = grads(*_state(curve, lam + dl))[1]
        p_minus = grads(*_state(curve, lam - dl))[1]
        return gx - (p_plus - p_minus) / (2 * dl)

    idx = int(np.argmin(np.abs(curve.lam - lam)))
    if not math.isclose(curve.lam[idx], lam, rel_tol=0.0, abs_tol=1e-12):
        raise ValueError(f"parameter {lam} is not a sample of the curve")
    n = len(curve)
    if not 0 < idx < n - 1:
        raise ValueError(f"parameter {lam} must be interior")
    gx, _ = grads(*_state(curve, idx))
    p = lambda off: grads(*_state(curve, idx, off))[1]
    step = curve.lam[idx + 1] - curve.lam[idx]
    if 2 <= idx < n - 2:
        dp = (-p(2) + 8 * p(1) - 8 * p(-1) + p(-2)) / (12 * step)
    else:
        dp = (p(1) - p(-1)) / (curve.lam[idx + 1] - curve.lam[idx - 1])
    return gx - dp


def fundamental_lemma_probe(residual_fn, basis, quad=QuadratureConfig()):
    """``max |int <L(lam), eta(lam)> dlam|`` over the bump basis."""
    if not basis:
        raise ValueError("probe basis must not be empty")
    worst = 0.0
    for bump in basis:
        lo, hi = bump.support
        val = integrate_scalar(
            lambda t: float(np.dot(np.asarray(residual_fn(t), dtype=float), bump.value(t))),
            lo, hi, quad)
        worst = max(worst, abs(val))
    return worst
