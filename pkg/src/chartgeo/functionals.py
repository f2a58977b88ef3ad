"""Curves and the length, energy and angle functionals."""

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from .charts import ChartPoint
from .errors import NonFiniteSample, ZeroVelocity
from .metric import metric_at
from .numerics import QuadratureConfig, simpson_weights

ZERO_NORM2 = 1e-14


@dataclass(frozen=True)
class ChartSwitch:
    lam: float
    index: int  # first sample expressed in the new chart
    source: int
    target: int


@dataclass
class DiscreteCurve:
    """Ordered samples ``(lam, chart, coords, velocity)``.

    A break point where the curve is only piecewise smooth appears twice at
    the same parameter: once closing the left piece with its one-sided
    velocity and once opening the right piece. Away from break points the
    parameters are strictly increasing.
    """

    lam: np.ndarray
    charts: np.ndarray
    coords: np.ndarray
    velocities: np.ndarray
    break_points: Tuple[float, ...] = ()
    switches: List[ChartSwitch] = field(default_factory=list)

    def __post_init__(self):
        self.lam = np.asarray(self.lam, dtype=float)
        self.coords = np.atleast_2d(np.asarray(self.coords, dtype=float))
        self.velocities = np.atleast_2d(np.asarray(self.velocities, dtype=float))
        n = self.lam.size
        self.charts = np.broadcast_to(np.asarray(self.charts, dtype=int), (n,)).copy()
        if n < 2:
            raise ValueError("a curve needs at least two samples")
        if self.coords.shape[0] != n or self.velocities.shape != self.coords.shape:
            raise ValueError("sample arrays disagree in length or dimension")
        if not (np.all(np.isfinite(self.coords)) and np.all(np.isfinite(self.velocities))):
            raise NonFiniteSample("curve samples must be finite")
        self.break_points = tuple(sorted(float(c) for c in self.break_points))
        a, b = self.lam[0], self.lam[-1]
        for c in self.break_points:
            if not a < c < b:
                raise ValueError(f"break point {c} not inside ({a}, {b})")
        step = np.diff(self.lam)
        repeats = set(self.lam[1:][step == 0.0])
        if np.any(step < 0.0) or not repeats <= set(self.break_points):
            raise ValueError("parameters must increase strictly except at break points")

    @property
    def domain(self):
        return float(self.lam[0]), float(self.lam[-1])

    @property
    def dimension(self):
        return self.coords.shape[1]

    def __len__(self):
        return self.lam.size

    def point(self, i):
        return ChartPoint(int(self.charts[i]), tuple(self.coords[i]))

    def smooth_segments(self):
        """Index ranges ``[lo, hi)`` between break points."""
        cuts = [i + 1 for i in np.flatnonzero(np.diff(self.lam) == 0.0)]
        bounds = [0] + cuts + [len(self)]
        return list(zip(bounds[:-1], bounds[1:]))

    def chart_runs(self):
        """Index ranges on which the curve is smooth and stays in one chart."""
        runs = []
        for lo, hi in self.smooth_segments():
            start = lo
            for i in range(lo + 1, hi):
                if self.charts[i] != self.charts[i - 1]:
                    runs.append((start, i))
                    start = i
            runs.append((start, hi))
        return runs

    def slice(self, lo, hi):
        """Contiguous sub-range of samples as a new curve."""
        lam = self.lam[lo:hi]
        bps = tuple(c for c in self.break_points if lam[0] < c < lam[-1])
        sw = [ChartSwitch(s.lam, s.index - lo, s.source, s.target)
              for s in self.switches if lo < s.index < hi]
        return DiscreteCurve(lam, self.charts[lo:hi], self.coords[lo:hi],
                             self.velocities[lo:hi], bps, sw)

    def state_at(self, lam):
        """Linear interpolation of position and velocity within a chart run."""
        for lo, hi in self.chart_runs():
            if self.lam[lo] <= lam <= self.lam[hi - 1]:
                t = self.lam[lo:hi]
                x = np.array([np.interp(lam, t, c) for c in self.coords[lo:hi].T])
                v = np.array([np.interp(lam, t, c) for c in self.velocities[lo:hi].T])
                return int(self.charts[lo]), x, v
        raise ValueError(f"parameter {lam} outside {self.domain}")


@dataclass(frozen=True)
class AnalyticCurve:
    """A curve given by a position map into one chart.

    Without a ``velocity`` map, velocities come from central differences
    with step ``1e-6 * (b - a)``, one-sided at segment ends.
    """

    a: float
    b: float
    position: Callable[[float], np.ndarray]
    chart: int = 0
    velocity: Optional[Callable[[float], np.ndarray]] = None
    break_points: Tuple[float, ...] = ()

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"empty domain [{self.a}, {self.b}]")

    @property
    def domain(self):
        return self.a, self.b

    def segments(self):
        edges = [self.a, *sorted(self.break_points), self.b]
        return list(zip(edges[:-1], edges[1:]))

    def _segment_of(self, lam):
        for lo, hi in self.segments():
            if lo <= lam <= hi:
                return lo, hi
        raise ValueError(f"parameter {lam} outside [{self.a}, {self.b}]")

    def pos(self, lam):
        return np.asarray(self.position(lam), dtype=float)

    def vel(self, lam, segment=None):
        lo, hi = segment if segment is not None else self._segment_of(lam)
        if self.velocity is not None:
            # nudge inside the segment so piecewise maps pick the right side
            eps = 1e-12 * (self.b - self.a)
            return np.asarray(self.velocity(min(max(lam, lo + eps), hi - eps)), dtype=float)
        h = 1e-6 * (self.b - self.a)
        # one-sided second-order stencils, written as differences so that a
        # constant curve gets exactly zero velocity
        if lam - h < lo:
            x0 = self.pos(lam)
            return (4 * (self.pos(lam + h) - x0) - (self.pos(lam + 2 * h) - x0)) / (2 * h)
        if lam + h > hi:
            x0 = self.pos(lam)
            return (4 * (x0 - self.pos(lam - h)) - (x0 - self.pos(lam - 2 * h))) / (2 * h)
        return (self.pos(lam + h) - self.pos(lam - h)) / (2 * h)


def sample(curve, n):
    """``n`` equally spaced samples; break points are added as duplicates."""
    if n < 2:
        raise ValueError("need at least two samples")
    grid = np.linspace(curve.a, curve.b, n)
    lam, coords, vels = [], [], []
    for lo, hi in curve.segments():
        inner = grid[(grid > lo) & (grid < hi)]
        for t in [lo, *inner, hi]:
            lam.append(t)
            coords.append(curve.pos(t))
            vels.append(curve.vel(t, (lo, hi)))
    return DiscreteCurve(np.array(lam), curve.chart, np.array(coords), np.array(vels),
                         tuple(curve.break_points))


def _sample_speeds2(field, curve):
    out = np.empty(len(curve))
    for i in range(len(curve)):
        G = metric_at(field, (int(curve.charts[i]), curve.coords[i]))
        v = curve.velocities[i]
        out[i] = v @ G @ v
    return out


def _integrate_norm2(field, curve, quad, transform):
    """Integrate ``transform(g(X, X))`` segment by segment."""
    if isinstance(curve, DiscreteCurve):
        s2 = _sample_speeds2(field, curve)
        total = 0.0
        for lo, hi in curve.smooth_segments():
            total += simpson_weights(curve.lam[lo:hi]) @ transform(s2[lo:hi])
        return float(total)
    a, b = curve.domain
    total = 0.0
    for lo, hi in curve.segments():
        panels = max(2, 2 * round(quad.panels * (hi - lo) / (b - a) / 2))
        nodes = np.linspace(lo, hi, panels + 1)
        s2 = np.empty(nodes.size)
        for i, t in enumerate(nodes):
            v = curve.vel(t, (lo, hi))
            s2[i] = v @ metric_at(field, (curve.chart, curve.pos(t))) @ v
        if not np.all(np.isfinite(s2)):
            raise NonFiniteSample("non-finite speed sample")
        total += simpson_weights(nodes) @ transform(s2)
    return float(total)


def length(field, curve, quad=QuadratureConfig()):
    """Riemannian length; discrete curves are integrated on their own samples."""
    return _integrate_norm2(field, curve, quad, lambda s2: np.sqrt(np.maximum(s2, 0.0)))


def energy(field, curve, quad=QuadratureConfig()):
    return 0.5 * _integrate_norm2(field, curve, quad, lambda s2: s2)


def angle(field, p, v, w):
    G = metric_at(field, p)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    vv, ww = v @ G @ v, w @ G @ w
    if vv <= ZERO_NORM2 or ww <= ZERO_NORM2:
        raise ZeroVelocity("angle needs two nonzero tangent vectors")
    c = (v @ G @ w) / math.sqrt(vv * ww)
    return math.acos(min(1.0, max(-1.0, c)))


def speed(field, curve, lam):
    if isinstance(curve, DiscreteCurve):
        chart, x, v = curve.state_at(lam)
    else:
        chart, x, v = curve.chart, curve.pos(lam), curve.vel(lam)
    return math.sqrt(max(0.0, v @ metric_at(field, (chart, x)) @ v))


def reparametrize_unit_speed(field, curve, n=None):
    """Resample a single-chart, smooth curve by arc length.

    Arc length is the cumulative trapezoid of the sampled speeds; positions
    and unit-speed velocities are linearly interpolated onto a uniform
    arc-length grid starting at the original initial parameter.
    """
    if len(set(curve.charts.tolist())) != 1 or curve.break_points:
        raise ValueError("reparametrization needs a smooth single-chart curve")
    s = np.sqrt(np.maximum(_sample_speeds2(field, curve), 0.0))
    if np.min(s) <= 1e-9:
        raise ZeroVelocity(f"sampled speed {np.min(s):.3e} too small to reparametrize")
    arc = np.concatenate([[0.0], np.cumsum(0.5 * (s[1:] + s[:-1]) * np.diff(curve.lam))])
    n = len(curve) if n is None else n
    grid = np.linspace(0.0, arc[-1], n)
    coords = np.column_stack([np.interp(grid, arc, c) for c in curve.coords.T])
    unit = curve.velocities / s[:, None]
    vels = np.column_stack([np.interp(grid, arc, c) for c in unit.T])
    return DiscreteCurve(curve.lam[0] + grid, curve.charts[0], coords, vels)
