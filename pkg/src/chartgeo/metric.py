"""Riemannian metric fields in chart components and their Christoffel symbols."""

import functools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .charts import ChartPoint, whole_space
from .errors import AtlasMismatch, DegenerateMetric, MissingEmbedding, StencilOutOfDomain
from .numerics import FiniteDiffConfig, central_grad, invert, jacobian, solve_linear

# fixed probe directions for the positive-definiteness guard
_PROBES = {}


def _probe_directions(d):
    if d not in _PROBES:
        rand = np.random.default_rng(1000 + d).normal(size=(20, d))
        rand /= np.linalg.norm(rand, axis=1, keepdims=True)
        _PROBES[d] = np.vstack([np.eye(d), rand])
    return _PROBES[d]


@functools.lru_cache(maxsize=None)
def _stencil_offsets(d, h):
    return np.vstack([np.zeros(d), h * np.eye(d), -h * np.eye(d)])


@dataclass(frozen=True)
class MetricField:
    """Chart-wise metric components ``g_ij(x)``.

    ``components(chart, x)`` returns the d x d matrix. If ``derivatives`` is
    given it must return ``dg[k, i, j] = d_k g_ij`` and is used instead of
    central differences.
    """

    atlas: object
    components: Callable[[int, np.ndarray], np.ndarray]
    derivatives: Optional[Callable[[int, np.ndarray], np.ndarray]] = None
    fd: FiniteDiffConfig = FiniteDiffConfig()
    name: str = "metric"
    # components accept stacked points (m, d) -> (m, d, d)
    batched: bool = False

    @property
    def strategy(self):
        return "analytic" if self.derivatives is not None else "finite-difference"

    @property
    def dimension(self):
        return self.atlas.dimension

    def derivative_array(self, chart, x):
        x = np.asarray(x, dtype=float)
        if self.derivatives is not None:
            return np.asarray(self.derivatives(chart, x), dtype=float)
        self._check_stencil(chart, x)
        if self.batched:
            return self._batched_stencil(chart, x)[1]
        return central_grad(lambda y: self.components(chart, y), x, self.fd)

    def _check_stencil(self, chart, x):
        domain = self.atlas.domains[chart]
        if domain is whole_space:
            return
        for k in range(x.size):
            for s in (-1.0, 1.0):
                probe = x.copy()
                probe[k] += s * self.fd.h
                if not domain(probe):
                    raise StencilOutOfDomain(f"stencil point {tuple(probe)} outside chart {chart}")

    def _batched_stencil(self, chart, x):
        d = x.size
        h = self.fd.h
        offsets = _stencil_offsets(d, h)
        G = np.asarray(self.components(chart, x + offsets), dtype=float)
        if not math.isfinite(G.sum()):
            raise DegenerateMetric(f"non-finite metric near chart {chart}, {tuple(x)}")
        return G[0], (G[1:d + 1] - G[d + 1:]) / (2.0 * h)

    def components_and_derivatives(self, chart, x):
        """``(g_ij(x), d_k g_ij(x))`` with as few component calls as possible."""
        x = np.asarray(x, dtype=float)
        if self.batched and self.derivatives is None:
            self._check_stencil(chart, x)
            return self._batched_stencil(chart, x)
        return np.asarray(self.components(chart, x), dtype=float), self.derivative_array(chart, x)


def _as_xy(p):
    if isinstance(p, ChartPoint):
        return p.chart, p.x
    chart, x = p
    return chart, np.asarray(x, dtype=float)


def euclidean_metric(atlas):
    if not atlas.tag.startswith("euclidean:"):
        raise AtlasMismatch(f"euclidean metric needs a euclidean atlas, got {atlas.tag}")
    d = atlas.dimension
    return MetricField(
        atlas=atlas,
        components=lambda chart, x: np.eye(d),
        derivatives=lambda chart, x: np.zeros((d, d, d)),
        name="euclidean",
    )


_EYE2 = np.eye(2)


def _conformal_components(chart, x):
    lam = 4.0 / (1.0 + np.sum(x * x, axis=-1)) ** 2
    return np.multiply.outer(lam, _EYE2)


def _conformal_derivatives(chart, x):
    lam_grad = -16.0 * x / (1.0 + x @ x) ** 3
    return lam_grad[:, None, None] * _EYE2[None, :, :]


def sphere_metric(atlas, analytic_derivatives=False, cfg=FiniteDiffConfig()):
    """Round metric of the unit sphere in stereographic coordinates.

    Both charts carry the conformal form ``4 / (1 + |x|^2)^2 * I``.
    """
    if atlas.tag != "sphere2":
        raise AtlasMismatch(f"sphere metric needs the sphere atlas, got {atlas.tag}")
    return MetricField(
        atlas=atlas,
        components=_conformal_components,
        derivatives=_conformal_derivatives if analytic_derivatives else None,
        fd=cfg,
        name="sphere",
        batched=True,
    )


def pullback_metric(atlas, cfg=FiniteDiffConfig()):
    """Metric induced by the atlas embedding: ``g_ij = <d_i F, d_j F>``."""
    if atlas.embedding is None:
        raise MissingEmbedding(f"atlas {atlas.tag} declares no embedding")

    def components(chart, x):
        J = jacobian(atlas.embedding[chart], x, cfg)
        return J.T @ J

    return MetricField(atlas=atlas, components=components, fd=cfg, name="pullback")


def metric_at(field, p):
    """Metric matrix at ``p``; raises DegenerateMetric if not positive definite."""
    chart, x = _as_xy(p)
    field.atlas.check_chart(chart)
    G = np.asarray(field.components(chart, x), dtype=float)
    if not np.all(np.isfinite(G)):
        raise DegenerateMetric(f"non-finite metric at chart {chart}, {tuple(x)}")
    D = _probe_directions(G.shape[0])
    if np.min(np.einsum("ki,ij,kj->k", D, G, D)) <= 0.0:
        raise DegenerateMetric(f"metric not positive definite at chart {chart}, {tuple(x)}")
    return G


def inner(field, p, v, w):
    G = metric_at(field, p)
    return float(np.asarray(v, dtype=float) @ G @ np.asarray(w, dtype=float))


def christoffel_first_kind(field, chart, x):
    """``[n, i, j] = 1/2 (d_i g_nj + d_j g_ni - d_n g_ij)``."""
    dg = field.derivative_array(chart, x)
    return 0.5 * (dg.transpose(1, 0, 2) + dg.transpose(1, 2, 0) - dg)


def christoffel_at(field, p):
    """Symmetrized Christoffel symbols ``Gamma[k, i, j]``."""
    chart, x = _as_xy(p)
    G = metric_at(field, (chart, x))
    first = christoffel_first_kind(field, chart, x)
    gam = np.einsum("kn,nij->kij", invert(G), first)
    return 0.5 * (gam + gam.transpose(0, 2, 1))


def christoffel_asymmetric(field, p):
    """Unsymmetrized ``1/2 g^kn (2 d_j g_ni - d_n g_ij)``.

    Agrees with :func:`christoffel_at` only when contracted against a
    symmetric tensor such as ``v (x) v``.
    """
    chart, x = _as_xy(p)
    G = metric_at(field, (chart, x))
    dg = field.derivative_array(chart, x)
    bracket = 2.0 * dg.transpose(1, 2, 0) - dg
    return 0.5 * np.einsum("kn,nij->kij", invert(G), bracket)


def geodesic_acceleration(field, chart, x, v):
    """``-Gamma^k_ij v^i v^j`` without forming the inverse metric."""
    G, dg = field.components_and_derivatives(chart, x)
    # G a = -(d_i g_nj v^i v^j - 1/2 d_n g_ij v^i v^j)
    dgv = dg @ v                      # [k, i] = d_k g_ij v^j
    rhs = 0.5 * (dgv @ v) - v @ dgv   # 1/2 d_n g(v,v) - (d_i g_nj v^i v^j)
    return solve_linear(G, rhs)


def geodesic_acceleration_batch(field, chart, X, V):
    """Row-wise :func:`geodesic_acceleration` for stacked points in one chart."""
    X = np.asarray(X, dtype=float)
    V = np.asarray(V, dtype=float)
    if not field.batched or field.derivatives is not None:
        return np.array([geodesic_acceleration(field, chart, x, v) for x, v in zip(X, V)])
    m, d = X.shape
    h = field.fd.h
    domain = field.atlas.domains[chart]
    offsets = _stencil_offsets(d, h)
    pts = (X[:, None, :] + offsets[None, :, :]).reshape(-1, d)
    if domain is not whole_space and not all(domain(p) for p in pts):
        raise StencilOutOfDomain(f"finite-difference stencil leaves chart {chart}")
    Gs = np.asarray(field.components(chart, pts), dtype=float).reshape(m, 2 * d + 1, d, d)
    if not math.isfinite(Gs.sum()):
        raise DegenerateMetric(f"non-finite metric in chart {chart}")
    G = Gs[:, 0]
    dg = (Gs[:, 1:d + 1] - Gs[:, d + 1:]) / (2.0 * h)   # [m, k, i, j]
    dgv = (dg @ V[:, None, :, None])[..., 0]                   # [m, k, i]
    rhs = 0.5 * (dgv @ V[:, :, None])[..., 0] - (V[:, None, :] @ dgv)[:, 0, :]
    return _solve_spd_batch(G, rhs)


def _solve_spd_batch(A, b):
    """Row-wise solve of small SPD systems (Cramer's rule for d = 2)."""
    if b.shape[1] == 2:
        a00, a01, a10, a11 = A[:, 0, 0], A[:, 0, 1], A[:, 1, 0], A[:, 1, 1]
        det = a00 * a11 - a01 * a10
        if np.any(det <= 0.0):
            raise DegenerateMetric("metric lost positive definiteness")
        return np.stack([a11 * b[:, 0] - a01 * b[:, 1], a00 * b[:, 1] - a10 * b[:, 0]], axis=1) / det[:, None]
    return np.linalg.solve(A, b[:, :, None])[:, :, 0]
