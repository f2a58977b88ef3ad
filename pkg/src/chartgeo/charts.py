"""Atlases of coordinate charts with transition maps.

Two concrete atlases are provided: the single identity chart on R^d and
the two stereographic charts on the unit 2-sphere. Chart 0 (``NORTH``)
projects from the north pole (0, 0, 1), chart 1 (``SOUTH``) from the
south pole.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .errors import InvalidDimension, OutsideOverlap, UnknownChart
from .numerics import FiniteDiffConfig, jacobian

NORTH = 0
SOUTH = 1

# points closer than this to the origin are outside the sphere overlap
OVERLAP_RADIUS = 1e-9


def whole_space(x):
    """Domain predicate of a chart whose image is all of R^d."""
    return True


@dataclass(frozen=True)
class ChartPoint:
    chart: int
    coords: Tuple[float, ...]

    def __post_init__(self):
        coords = tuple(float(c) for c in np.ravel(self.coords))
        if not all(np.isfinite(coords)):
            raise ValueError(f"non-finite chart coordinates {coords}")
        object.__setattr__(self, "coords", coords)

    @property
    def x(self):
        return np.array(self.coords)


@dataclass(frozen=True)
class TangentSample:
    base: ChartPoint
    velocity: Tuple[float, ...]

    def __post_init__(self):
        vel = tuple(float(c) for c in np.ravel(self.velocity))
        if not all(np.isfinite(vel)):
            raise ValueError(f"non-finite velocity {vel}")
        object.__setattr__(self, "velocity", vel)


@dataclass(frozen=True)
class Transition:
    """Coordinate change ``psi o phi^-1`` restricted to an overlap image."""

    map: Callable[[np.ndarray], np.ndarray]
    in_overlap: Callable[[np.ndarray], bool]
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None


@dataclass(frozen=True)
class Atlas:
    """Charts, transitions and an optional embedding into R^n.

    ``domains`` maps chart id to a predicate on coordinate tuples.
    ``embedding``/``chart_of`` map chart coordinates to ambient coordinates
    and back; both are keyed by chart id.
    """

    tag: str
    dimension: int
    domains: Dict[int, Callable[[np.ndarray], bool]]
    transitions: Dict[Tuple[int, int], Transition] = field(default_factory=dict)
    embedding: Optional[Dict[int, Callable[[np.ndarray], np.ndarray]]] = None
    chart_of: Optional[Dict[int, Callable[[np.ndarray], np.ndarray]]] = None
    ambient_dimension: Optional[int] = None

    @property
    def chart_ids(self):
        return tuple(sorted(self.domains))

    def check_chart(self, chart):
        if chart not in self.domains:
            raise UnknownChart(f"chart {chart!r} not in atlas {self.tag}")

    def contains(self, chart, x):
        self.check_chart(chart)
        return bool(self.domains[chart](np.asarray(x, dtype=float)))

    def embed(self, chart, x):
        if self.embedding is None:
            return None
        self.check_chart(chart)
        return self.embedding[chart](np.asarray(x, dtype=float))

    def other_charts(self, chart):
        return [to for (frm, to) in self.transitions if frm == chart and to != chart]


def euclidean_atlas(d):
    if d < 1:
        raise InvalidDimension(f"dimension must be >= 1, got {d}")
    ident = Transition(map=lambda x: np.array(x, dtype=float), in_overlap=lambda x: True,
                       jacobian=lambda x: np.eye(d))
    return Atlas(
        tag=f"euclidean:{d}",
        dimension=d,
        domains={0: whole_space},
        transitions={(0, 0): ident},
        embedding={0: lambda x: np.array(x, dtype=float)},
        chart_of={0: lambda p: np.array(p, dtype=float)},
        ambient_dimension=d,
    )


def _inversion(x):
    return x / (x @ x)


def _inversion_jacobian(x):
    r2 = x @ x
    return (np.eye(2) * r2 - 2.0 * np.outer(x, x)) / r2**2


def _in_sphere_overlap(x):
    return bool(np.hypot(x[0], x[1]) > OVERLAP_RADIUS)


def _from_north(x):
    r2 = x @ x
    return np.array([2 * x[0], 2 * x[1], r2 - 1.0]) / (r2 + 1.0)


def _from_south(y):
    r2 = y @ y
    return np.array([2 * y[0], 2 * y[1], 1.0 - r2]) / (r2 + 1.0)


def _to_north(p):
    return np.array([p[0], p[1]]) / (1.0 - p[2])


def _to_south(p):
    return np.array([p[0], p[1]]) / (1.0 + p[2])


def sphere_atlas(analytic_jacobians=False):
    """Two-chart stereographic atlas of the unit sphere.

    Both transitions are the inversion ``x -> x / |x|^2``. Transition
    Jacobians come from finite differences unless ``analytic_jacobians``.
    """
    jac = _inversion_jacobian if analytic_jacobians else None
    inv = Transition(map=_inversion, in_overlap=_in_sphere_overlap, jacobian=jac)
    same = Transition(map=lambda x: np.array(x, dtype=float), in_overlap=lambda x: True,
                      jacobian=lambda x: np.eye(2))
    return Atlas(
        tag="sphere2",
        dimension=2,
        domains={NORTH: whole_space, SOUTH: whole_space},
        transitions={(NORTH, SOUTH): inv, (SOUTH, NORTH): inv,
                     (NORTH, NORTH): same, (SOUTH, SOUTH): same},
        embedding={NORTH: _from_north, SOUTH: _from_south},
        chart_of={NORTH: _to_north, SOUTH: _to_south},
        ambient_dimension=3,
    )


def _get_transition(atlas, frm, to):
    atlas.check_chart(frm)
    atlas.check_chart(to)
    try:
        return atlas.transitions[(frm, to)]
    except KeyError:
        raise UnknownChart(f"no transition {frm} -> {to} in atlas {atlas.tag}") from None


def transition(atlas, frm, to, x):
    tr = _get_transition(atlas, frm, to)
    x = np.asarray(x, dtype=float)
    if not tr.in_overlap(x):
        raise OutsideOverlap(f"{tuple(x)} is outside the overlap of charts {frm} -> {to}")
    return tr.map(x)


def transition_jacobian(atlas, frm, to, x, cfg=FiniteDiffConfig(), analytic=True):
    """``J[j, i] = d(transition)^j / dx^i``.

    Uses the per-transition analytic override when one is registered and
    ``analytic`` is true, central differences otherwise.
    """
    tr = _get_transition(atlas, frm, to)
    x = np.asarray(x, dtype=float)
    if not tr.in_overlap(x):
        raise OutsideOverlap(f"{tuple(x)} is outside the overlap of charts {frm} -> {to}")
    if analytic and tr.jacobian is not None:
        return np.asarray(tr.jacobian(x), dtype=float)
    for k in range(x.size):
        for s in (-1.0, 1.0):
            probe = x.copy()
            probe[k] += s * cfg.h
            if not tr.in_overlap(probe):
                raise OutsideOverlap(f"stencil point {tuple(probe)} leaves the overlap")
    return jacobian(tr.map, x, cfg)


def push_velocity(atlas, frm, to, sample, cfg=FiniteDiffConfig()):
    x = sample.base.x
    if sample.base.chart != frm:
        raise UnknownChart(f"sample lives in chart {sample.base.chart}, not {frm}")
    y = transition(atlas, frm, to, x)
    J = transition_jacobian(atlas, frm, to, x, cfg)
    return TangentSample(ChartPoint(to, tuple(y)), tuple(J @ np.asarray(sample.velocity)))


def chart_point_from_ambient(atlas, p):
    """Express an ambient point in the chart where its coordinates are smallest.

    On the sphere this picks the north-pole projection for the lower
    hemisphere (including the equator) and the south-pole projection
    otherwise, so the returned coordinates satisfy ``|x| <= 1``.
    """
    p = np.asarray(p, dtype=float)
    if atlas.chart_of is None:
        raise ValueError(f"atlas {atlas.tag} has no embedding")
    if atlas.tag == "sphere2":
        chart = NORTH if p[2] <= 0.0 else SOUTH
    else:
        chart = atlas.chart_ids[0]
    return ChartPoint(chart, tuple(atlas.chart_of[chart](p)))


def chart_points_for_pair(atlas, p, q):
    """Chart points for two ambient points, both in a chart that contains
    the minor great-circle arc between them.

    On the sphere, if ``p_z + q_z <= 0`` the minor arc cannot pass through
    the north pole (its z-extent would force ``p_z + q_z > 0``), so the
    north-pole projection is used; otherwise the south-pole one.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if atlas.tag != "sphere2":
        return chart_point_from_ambient(atlas, p), chart_point_from_ambient(atlas, q)
    chart = NORTH if p[2] + q[2] <= 0.0 else SOUTH
    to_chart = atlas.chart_of[chart]
    return ChartPoint(chart, tuple(to_chart(p))), ChartPoint(chart, tuple(to_chart(q)))
