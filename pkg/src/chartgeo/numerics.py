"""Small numerical kernels: dense solves, central differences, Simpson
quadrature and a classical RK4 step.

Everything here works on plain numpy arrays and is side-effect free.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteSample, SingularMatrix

PIVOT_RTOL = 1e-13
DEFAULT_FD_STEP = 1e-5


@dataclass(frozen=True)
class FiniteDiffConfig:
    h: float = DEFAULT_FD_STEP
    scheme: str = "central"

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"finite-difference step must be positive, got {self.h}")
        if self.scheme != "central":
            raise ValueError(f"unsupported scheme {self.scheme!r}")


@dataclass(frozen=True)
class QuadratureConfig:
    """Composite Simpson; ``panels`` is the number of subintervals."""

    panels: int = 64
    rule: str = "composite-simpson"

    def __post_init__(self):
        if self.panels < 2 or self.panels % 2:
            raise ValueError(f"panels must be an even integer >= 2, got {self.panels}")
        if self.rule != "composite-simpson":
            raise ValueError(f"unsupported rule {self.rule!r}")


def _check_finite(*values):
    for val in values:
        # a sum is NaN/inf whenever any entry is; overflow of finite entries is
        # not a concern at the magnitudes used here
        if not math.isfinite(np.sum(val)):
            raise NonFiniteSample(f"non-finite sample: {val!r}")


def _eliminate(A, B):
    """Gaussian elimination with partial pivoting on A X = B (B is n x m).

    Works on Python lists: the systems here are 2x2 or 3x3 and numpy call
    overhead would dominate.
    """
    a = np.asarray(A, dtype=float).tolist()
    b = np.asarray(B, dtype=float).tolist()
    n = len(a)
    if any(len(row) != n for row in a) or len(b) != n:
        raise ValueError(f"shape mismatch: A {np.shape(A)}, b {np.shape(B)}")
    if not all(math.isfinite(v) for row in a for v in row):
        raise NonFiniteSample("non-finite matrix entry")
    m = len(b[0]) if n else 0
    scale = max((abs(v) for row in a for v in row), default=0.0)
    tiny = PIVOT_RTOL * scale
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(a[r][col]))
        if scale == 0.0 or abs(a[piv][col]) <= tiny:
            raise SingularMatrix(f"pivot {a[piv][col]:.3e} below threshold {tiny:.3e}")
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            b[col], b[piv] = b[piv], b[col]
        pivot_row, rhs_row, p = a[col], b[col], a[col][col]
        for r in range(col + 1, n):
            f = a[r][col] / p
            if f != 0.0:
                row = a[r]
                for c in range(col, n):
                    row[c] -= f * pivot_row[c]
                brow = b[r]
                for c in range(m):
                    brow[c] -= f * rhs_row[c]
    x = [[0.0] * m for _ in range(n)]
    for r in range(n - 1, -1, -1):
        row = a[r]
        for c in range(m):
            acc = b[r][c]
            for k in range(r + 1, n):
                acc -= row[k] * x[k][c]
            x[r][c] = acc / row[r]
    return np.array(x)


def solve_linear(A, b):
    """Solve ``A x = b`` for a small dense square system."""
    b = np.asarray(b, dtype=float)
    return _eliminate(A, b.reshape(-1, 1))[:, 0]


def invert(A):
    A = np.asarray(A, dtype=float)
    return _eliminate(A, np.eye(A.shape[0]))


def is_symmetric(A, atol=1e-12):
    A = np.asarray(A)
    return bool(np.max(np.abs(A - A.T), initial=0.0) <= atol)


def central_diff(f, x, k, cfg=FiniteDiffConfig()):
    """Central difference of a scalar map along axis ``k`` (0-based)."""
    x = np.asarray(x, dtype=float)
    e = np.zeros_like(x)
    e[k] = cfg.h
    fp, fm = f(x + e), f(x - e)
    _check_finite(fp, fm)
    return (fp - fm) / (2.0 * cfg.h)


def central_grad(f, x, cfg=FiniteDiffConfig()):
    """Central differences of an array-valued map along every axis.

    Returns an array of shape ``(d,) + f(x).shape`` whose leading index is
    the differentiation axis.
    """
    x = np.asarray(x, dtype=float)
    h = cfg.h
    out = []
    for k in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[k] += h
        xm[k] -= h
        out.append((np.asarray(f(xp), dtype=float) - f(xm)) / (2.0 * h))
    out = np.array(out)
    _check_finite(out)
    return out


def jacobian(f, x, cfg=FiniteDiffConfig()):
    """``J[j, i] = d f^j / d x^i`` by central differences."""
    return central_grad(f, x, cfg).T


def integrate_scalar(f, a, b, cfg=QuadratureConfig()):
    """Composite Simpson rule on ``[a, b]`` with ``cfg.panels`` subintervals."""
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    nodes = np.linspace(a, b, cfg.panels + 1)
    vals = np.array([f(t) for t in nodes], dtype=float)
    _check_finite(vals)
    return simpson_weights(nodes) @ vals


def simpson_weights(nodes):
    """Quadrature weights for samples at ``nodes``.

    Uniform grids with an even number of intervals get the composite Simpson
    weights; anything else falls back to trapezoid-corrected Simpson from
    scipy, expressed through its action on unit vectors.
    """
    nodes = np.asarray(nodes, dtype=float)
    n = nodes.size - 1
    if n < 1:
        raise ValueError("need at least two nodes")
    h = (nodes[-1] - nodes[0]) / n
    uniform = np.allclose(np.diff(nodes), h, rtol=1e-9, atol=0.0)
    if uniform and n % 2 == 0:
        w = np.ones(n + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return w * h / 3.0
    if n == 1:
        return np.full(2, 0.5 * (nodes[1] - nodes[0]))
    from scipy.integrate import simpson

    return np.array([simpson(row, x=nodes) for row in np.eye(n + 1)])


def rk4_step(rhs, state, lam, h):
    """One classical Runge-Kutta step for ``y' = rhs(lam, y)``."""
    y = np.asarray(state, dtype=float)
    k1 = rhs(lam, y)
    k2 = rhs(lam + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(lam + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(lam + h, y + h * k3)
    _check_finite(k1, k2, k3, k4)
    out = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    _check_finite(out)
    return out
