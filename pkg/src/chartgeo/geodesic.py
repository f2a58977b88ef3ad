"""Geodesic initial- and boundary-value problems in chart coordinates.

The integrator is fixed-step RK4 on the first-order system
``x' = v, v' = -Gamma(x)[v, v]``. On multi-chart atlases the state is moved
to a neighbouring chart after any step that leaves the ball
``|x| <= switch_radius``.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .charts import ChartPoint, TangentSample, chart_points_for_pair, push_velocity, transition
from .errors import (DegenerateMetric, GeometryError, InsufficientSamples, NoConvergence,
                     NonFiniteSample, OutsideOverlap)
from .functionals import ChartSwitch, DiscreteCurve
from .metric import geodesic_acceleration, geodesic_acceleration_batch
from .numerics import jacobian, rk4_step, solve_linear

logger = logging.getLogger(__name__)

ANTIPODAL_TOL = 1e-9
# cap on a Newton update, in metric units of initial speed
MAX_NEWTON_STEP = 0.5
COARSE_TOL = 1e-6


@dataclass(frozen=True)
class ChartSwitchPolicy:
    switch_radius: float = 2.0

    def __post_init__(self):
        if not self.switch_radius > 1.0:
            raise ValueError(f"switch radius must exceed 1, got {self.switch_radius}")


@dataclass(frozen=True)
class ShootConfig:
    tolerance: float = 1e-10
    max_iter: int = 30
    fd_step: float = 1e-7
    multi_start: int = 8
    steps: int = 100
    damping: float = 0.5

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iter < 1 or self.multi_start < 1 or self.steps < 1:
            raise ValueError("iteration, start and step counts must be >= 1")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must lie in (0, 1]")


def _pack(p):
    if isinstance(p, ChartPoint):
        return p.chart, p.x
    chart, x = p
    return chart, np.asarray(x, dtype=float)


def geodesic_rhs(field, state):
    """Return ``(v, a)`` with ``a^k = -Gamma^k_ij v^i v^j``.

    ``state`` is a :class:`TangentSample` or a ``(chart, x, v)`` triple.
    """
    if isinstance(state, TangentSample):
        chart, x, v = state.base.chart, state.base.x, np.asarray(state.velocity)
    else:
        chart, x, v = state
        x, v = np.asarray(x, dtype=float), np.asarray(v, dtype=float)
    return np.concatenate([v, geodesic_acceleration(field, chart, x, v)])


def _maybe_switch(field, chart, y, policy):
    """Move one state ``(x, v)`` to a neighbouring chart if it left the switch ball."""
    atlas = field.atlas
    d = atlas.dimension
    x = y[:d]
    if len(atlas.chart_ids) < 2 or math.sqrt(x @ x) <= policy.switch_radius:
        return chart, y
    for target in atlas.other_charts(chart):
        try:
            moved = push_velocity(atlas, chart, target,
                                  TangentSample(ChartPoint(chart, tuple(x)), tuple(y[d:])),
                                  field.fd)
        except OutsideOverlap:
            continue
        return target, np.concatenate([moved.base.x, moved.velocity])
    return chart, y


def _flow_rhs(field, charts, d):
    unique = np.unique(charts)

    def rhs(t, Y):
        out = np.empty_like(Y)
        out[:, :d] = Y[:, d:]
        if unique.size == 1:
            out[:, d:] = geodesic_acceleration_batch(field, int(unique[0]), Y[:, :d], Y[:, d:])
        else:
            for c in unique:
                rows = charts == c
                out[rows, d:] = geodesic_acceleration_batch(field, int(c), Y[rows, :d],
                                                            Y[rows, d:])
        return out

    return rhs


def _flow(field, charts, Y, span, steps, policy):
    """RK4 for a stack of geodesic states ``Y[m] = (x, v)``, each row in its own chart."""
    d = field.atlas.dimension
    t0, t1 = map(float, span)
    h = (t1 - t0) / steps
    lam = t0 + h * np.arange(steps + 1)
    lam[-1] = t1
    charts = np.array(charts, dtype=int)
    states = np.empty((steps + 1,) + Y.shape)
    chart_hist = np.empty((steps + 1, Y.shape[0]), dtype=int)
    states[0], chart_hist[0] = Y, charts
    multi = len(field.atlas.chart_ids) > 1
    for i in range(steps):
        Y = rk4_step(_flow_rhs(field, charts, d), Y, lam[i], h)
        if multi:
            far = np.einsum("mi,mi->m", Y[:, :d], Y[:, :d]) > policy.switch_radius**2
            for r in np.flatnonzero(far):
                charts[r], Y[r] = _maybe_switch(field, int(charts[r]), Y[r], policy)
        states[i + 1], chart_hist[i + 1] = Y, charts
    return lam, states, chart_hist


def _curve_from_flow(lam, states, chart_hist, row, d):
    charts = chart_hist[:, row]
    switches = [ChartSwitch(float(lam[i]), int(i), int(charts[i - 1]), int(charts[i]))
                for i in np.flatnonzero(np.diff(charts)) + 1]
    return DiscreteCurve(lam, charts, states[:, row, :d], states[:, row, d:], (), switches)


def integrate(field, x0, v0, span=(0.0, 1.0), steps=400, policy=ChartSwitchPolicy()):
    """Fixed-step RK4 along the geodesic flow; returns a :class:`DiscreteCurve`.

    Chart switches are checked after every step and recorded on the curve.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    chart, x = _pack(x0)
    field.atlas.check_chart(chart)
    d = field.atlas.dimension
    Y = np.concatenate([x, np.asarray(v0, dtype=float)])[None, :]
    lam, states, hist = _flow(field, [chart], Y, span, steps, policy)
    return _curve_from_flow(lam, states, hist, 0, d)


def exp_map(field, p, v, steps=400, policy=ChartSwitchPolicy()):
    curve = integrate(field, p, v, (0.0, 1.0), steps, policy)
    return curve.point(len(curve) - 1)


def _second_derivative(lam, vel, field, chart, coords, first=0, last=None):
    """Residual rows at samples ``first:last`` that have enough neighbours."""
    n = lam.size
    last = n if last is None else last
    h = np.diff(lam)
    rows = []
    uniform = np.allclose(h, h[0], rtol=1e-9, atol=0.0)
    if uniform:
        # fourth-order central stencil on the stored velocities; samples
        # without two neighbours on each side are not scored
        idx = range(max(2, first), min(n - 2, last))
        acc = lambda i: (-vel[i + 2] + 8 * vel[i + 1] - 8 * vel[i - 1] + vel[i - 2]) / (12 * h[0])
    else:
        idx = range(max(1, first), min(n - 1, last))

        def acc(i):
            h1, h2 = h[i - 1], h[i]
            return (h1**2 * vel[i + 1] - h2**2 * vel[i - 1] - (h1**2 - h2**2) * vel[i]) / (
                h1 * h2 * (h1 + h2))
    for i in idx:
        rows.append(acc(i) - geodesic_acceleration(field, chart, coords[i], vel[i]))
    return rows


def _run_in_chart(field, curve, lo, hi, seg_lo, seg_hi, pad=2):
    """Samples ``[lo, hi)`` of one chart run padded by up to ``pad`` neighbours
    from adjacent runs, re-expressed in the run's chart.

    Returns ``(lam, coords, vel, first, last)`` where ``first:last`` indexes
    the run's own samples inside the padded arrays.
    """
    chart = int(curve.charts[lo])
    start, stop = max(seg_lo, lo - pad), min(seg_hi, hi + pad)
    coords, vels = [], []
    for i in range(start, stop):
        c = int(curve.charts[i])
        if c == chart:
            coords.append(curve.coords[i])
            vels.append(curve.velocities[i])
            continue
        try:
            moved = push_velocity(field.atlas, c, chart,
                                  TangentSample(curve.point(i), curve.velocities[i]))
        except (OutsideOverlap, GeometryError):
            return (curve.lam[lo:hi], curve.coords[lo:hi], curve.velocities[lo:hi], 0, hi - lo)
        coords.append(np.array(moved.base.coords))
        vels.append(np.array(moved.velocity))
    return (curve.lam[start:stop], np.array(coords), np.array(vels), lo - start, hi - start)


def residual(field, curve):
    """Max over interior samples of ``|x'' + Gamma(x)[x', x']|``.

    ``x''`` is a central difference of the stored velocities inside each
    smooth segment. Each single-chart run borrows its neighbours across a
    chart switch (mapped through the transition) so that short runs keep
    the full-width stencil.
    """
    segments = curve.smooth_segments()
    for lo, hi in segments:
        if hi - lo < 5:
            raise InsufficientSamples(f"segment [{lo}, {hi}) has fewer than 5 samples")
    worst = 0.0
    for seg_lo, seg_hi in segments:
        for lo, hi in curve.chart_runs():
            if not seg_lo <= lo < seg_hi:
                continue
            lam, coords, vels, first, last = _run_in_chart(field, curve, lo, hi, seg_lo, seg_hi)
            if lam.size < 3:
                continue
            rows = _second_derivative(lam, vels, field, int(curve.charts[lo]), coords,
                                      first, last)
            if rows:
                worst = max(worst, float(np.max(np.abs(rows))))
    return worst


def _endpoint_mismatch(field, curve, target_ambient, q):
    atlas = field.atlas
    chart = int(curve.charts[-1])
    x = curve.coords[-1]
    if target_ambient is not None:
        return atlas.embed(chart, x) - target_ambient
    q_chart, q_x = _pack(q)
    return x - (q_x if q_chart == chart else transition(atlas, q_chart, chart, q_x))


def _initial_guesses(field, p_chart, p_x, q, target_ambient, span_len, count):
    atlas = field.atlas
    q_chart, q_x = _pack(q)
    try:
        q_in_p = q_x if q_chart == p_chart else transition(atlas, q_chart, p_chart, q_x)
        chord = (q_in_p - p_x) / span_len
    except GeometryError:
        # q is not representable in p's chart: project the ambient chord instead
        J = jacobian(atlas.embedding[p_chart], p_x, field.fd)
        ambient = target_ambient - atlas.embed(p_chart, p_x)
        chord = solve_linear(J.T @ J, J.T @ ambient) / span_len
    if target_ambient is not None:
        # keep the chart direction but give it the metric speed of the
        # ambient chord; raw chart distances explode near a chart's pole
        G = field.components(p_chart, p_x)
        speed = math.sqrt(chord @ G @ chord)
        ambient_gap = np.linalg.norm(target_ambient - atlas.embed(p_chart, p_x))
        if speed > 0.0:
            chord = chord * (ambient_gap / span_len) / speed
    guesses = [chord]
    d = chord.size
    for k in range(1, count):
        if d < 2:
            guesses.append(chord * (-1.0) ** k * (1 + k // 2))
            continue
        th = 2.0 * math.pi * k / count
        g = chord.copy()
        g[0], g[1] = (math.cos(th) * chord[0] - math.sin(th) * chord[1],
                      math.sin(th) * chord[0] + math.cos(th) * chord[1])
        guesses.append(g)
    return guesses


def _endpoint_map(field, p, v, span, target_ambient, q, cfg, policy, steps):
    """Integrate ``v`` and its forward-difference perturbations as one batch.

    Returns the endpoint mismatch, its Jacobian with respect to ``v`` and
    the unperturbed curve.
    """
    chart, x = p
    d = v.size
    V = np.vstack([v, v + cfg.fd_step * np.eye(d)])
    Y = np.hstack([np.broadcast_to(x, V.shape), V])
    lam, states, hist = _flow(field, [chart] * (d + 1), Y, span, steps, policy)
    curves = [_curve_from_flow(lam, states, hist, r, d) for r in range(d + 1)]
    mism = [_endpoint_mismatch(field, c, target_ambient, q) for c in curves]
    J = np.column_stack([(m - mism[0]) / cfg.fd_step for m in mism[1:]])
    return mism[0], J, curves[0]


def _newton(field, p, v, span, target_ambient, q, cfg, policy, steps, tol):
    """Damped Gauss-Newton on the endpoint map; returns ``(v, curve, mismatch)``."""
    evaluate = lambda vel: _endpoint_map(field, p, vel, span, target_ambient, q, cfg,
                                         policy, steps)
    F, J, curve = evaluate(v)
    norm = float(np.linalg.norm(F))
    best = norm
    G = field.components(p[0], p[1])
    for it in range(cfg.max_iter):
        if norm <= tol:
            logger.debug("newton converged after %d iterations (%d steps)", it, steps)
            return v, curve, norm
        delta = solve_linear(J.T @ J, -(J.T @ F))
        dnorm = math.sqrt(delta @ G @ delta)
        step = min(1.0, MAX_NEWTON_STEP / dnorm) if dnorm > 0 else 1.0
        while True:
            cand = v + step * delta
            F_new, J_new, curve_new = evaluate(cand)
            norm_new = float(np.linalg.norm(F_new))
            if norm_new < norm or step < 1e-3:
                break
            step *= cfg.damping
        v, F, J, curve, norm = cand, F_new, J_new, curve_new, norm_new
        best = min(best, norm)
    if norm <= tol:
        return v, curve, norm
    raise NoConvergence(f"Newton stalled at endpoint mismatch {best:.3e}", best)


def shoot(field, p, q, span=(0.0, 1.0), cfg=ShootConfig(), policy=ChartSwitchPolicy()):
    """Find ``v0`` so that the geodesic from ``p`` reaches ``q`` at ``span[1]``.

    Endpoint mismatch is measured in ambient coordinates when the atlas has
    an embedding. Returns ``(v0, curve)`` for the first start that converges.
    """
    atlas = field.atlas
    p_chart, p_x = _pack(p)
    q_chart, q_x = _pack(q)
    target = atlas.embed(q_chart, q_x) if atlas.embedding is not None else None
    if target is not None:
        start = atlas.embed(p_chart, p_x)
        if np.linalg.norm(start - target) == 0.0:
            raise ValueError("p and q coincide")
        if atlas.tag == "sphere2" and start @ target <= -1.0 + ANTIPODAL_TOL:
            raise NoConvergence("antipodal points: the connecting geodesic is not unique",
                                float(np.linalg.norm(start - target)))
    span_len = float(span[1]) - float(span[0])
    guesses = _initial_guesses(field, p_chart, p_x, (q_chart, q_x), target, span_len,
                               cfg.multi_start)
    best = math.inf
    for k, guess in enumerate(guesses):
        try:
            # cheap pass on a coarse grid, then polish at full resolution
            v0 = guess
            coarse = max(8, cfg.steps // 4)
            if coarse < cfg.steps:
                v0, _, _ = _newton(field, (p_chart, p_x), v0, span, target, (q_chart, q_x),
                                   cfg, policy, coarse, max(cfg.tolerance, COARSE_TOL))
            v0, curve, _ = _newton(field, (p_chart, p_x), v0, span, target, (q_chart, q_x),
                                   cfg, policy, cfg.steps, cfg.tolerance)
            return v0, curve
        except NoConvergence as exc:
            best = min(best, exc.best_residual)
        except (NonFiniteSample, DegenerateMetric, OverflowError) as exc:
            logger.debug("start %d failed: %s", k, exc)
    raise NoConvergence(f"no start converged; best endpoint mismatch {best:.3e}", best)


def shoot_ambient(field, p, q, **kwargs):
    """Shoot between two ambient points expressed in a shared chart that
    contains the minor arc between them."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if field.atlas.tag == "sphere2" and p @ q <= -1.0 + ANTIPODAL_TOL:
        # checked before projecting: one of an antipodal pair may be a projection pole
        raise NoConvergence("antipodal points: the connecting geodesic is not unique",
                            float(np.linalg.norm(p - q)))
    cp, cq = chart_points_for_pair(field.atlas, p, q)
    return shoot(field, cp, cq, **kwargs)
