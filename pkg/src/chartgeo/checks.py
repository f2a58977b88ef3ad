"""Cross-module invariant suite run by ``chartgeo check``.

Every check is a function ``(ctx) -> (passed, detail)``. All randomness
comes from ``ctx.rng``, seeded once, so two runs with the same seed print
identical reports.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .charts import (NORTH, SOUTH, ChartPoint, TangentSample, euclidean_atlas,
                     push_velocity, sphere_atlas, transition)
from .functionals import AnalyticCurve, angle, energy, length, sample
from .geodesic import ChartSwitchPolicy, integrate, residual, shoot_ambient
from .metric import (christoffel_at, christoffel_asymmetric, euclidean_metric, inner,
                     metric_at, pullback_metric, sphere_metric)
from .numerics import QuadratureConfig
from .variation import BumpPerturbation, euler_lagrange_residual, first_variation

DEFAULT_SEED = 7


@dataclass
class CheckContext:
    rng: np.random.Generator
    sphere: object
    euclid: object
    pullback: object
    results: list = field(default_factory=list)


def corrupt_symmetry(metric, eps):
    """Return a copy of ``metric`` whose ``g_12`` entry is shifted by ``eps``."""
    base = metric.components

    def components(chart, x):
        G = np.array(base(chart, x), dtype=float)
        G[..., 0, 1] += eps
        return G

    return replace(metric, components=components, name=f"{metric.name}+asym")


def build_context(seed=DEFAULT_SEED, symmetry_defect=0.0):
    atlas = sphere_atlas()
    sphere = sphere_metric(atlas)
    pull = pullback_metric(atlas)
    if symmetry_defect:
        sphere = corrupt_symmetry(sphere, symmetry_defect)
        pull = corrupt_symmetry(pull, symmetry_defect)
    return CheckContext(rng=np.random.default_rng(seed), sphere=sphere,
                        euclid=euclidean_metric(euclidean_atlas(2)), pullback=pull)


def _annulus_grid():
    pts = []
    for r in (0.1, 0.3, 0.7, 1.0, 1.5, 3.0, 6.0, 10.0):
        for th in np.linspace(0.0, 2 * math.pi, 9)[:-1] + 0.1:
            pts.append(r * np.array([math.cos(th), math.sin(th)]))
    return pts


def _disk_grid(radius=2.0, n=9):
    ax = np.linspace(-radius / math.sqrt(2), radius / math.sqrt(2), n)
    return [np.array([a, b]) for a in ax for b in ax]


def _conformal_christoffel(x):
    r2 = x @ x
    lam = 4.0 / (1.0 + r2) ** 2
    dlam = -16.0 * x / (1.0 + r2) ** 3
    gam = np.zeros((2, 2, 2))
    for k in range(2):
        for i in range(2):
            for j in range(2):
                gam[k, i, j] = 0.5 / lam * (dlam[i] * (k == j) + dlam[j] * (k == i)
                                            - dlam[k] * (i == j))
    return gam


def _unit(rng, d=2):
    v = rng.normal(size=d)
    return v / np.linalg.norm(v)


# -- charts ---------------------------------------------------------------

def check_transition_roundtrip(ctx):
    atlas = ctx.sphere.atlas
    err = max(np.max(np.abs(transition(atlas, SOUTH, NORTH, transition(atlas, NORTH, SOUTH, x)) - x))
              for x in _annulus_grid())
    return err <= 1e-10, f"max round-trip error {err:.2e}"


def check_velocity_roundtrip(ctx):
    atlas = ctx.sphere.atlas
    err = 0.0
    for x in _annulus_grid():
        s = TangentSample(ChartPoint(NORTH, x), _unit(ctx.rng))
        back = push_velocity(atlas, SOUTH, NORTH, push_velocity(atlas, NORTH, SOUTH, s))
        err = max(err, np.max(np.abs(np.subtract(back.velocity, s.velocity))))
    return err <= 1e-6, f"max velocity round-trip error {err:.2e}"


def check_embedding_norm(ctx):
    atlas = ctx.sphere.atlas
    err = max(abs(np.linalg.norm(atlas.embed(c, x)) - 1.0)
              for c in (NORTH, SOUTH) for x in _annulus_grid() + [np.zeros(2)])
    return err <= 1e-12, f"max | |F(x)| - 1 | = {err:.2e}"


def check_embedding_consistency(ctx):
    atlas = ctx.sphere.atlas
    err = max(np.max(np.abs(atlas.embed(NORTH, x)
                            - atlas.embed(SOUTH, transition(atlas, NORTH, SOUTH, x))))
              for x in _annulus_grid())
    return err <= 1e-10, f"max embedding mismatch {err:.2e}"


# -- metric ---------------------------------------------------------------

def check_metric_symmetry(ctx):
    err = 0.0
    for metric in (ctx.sphere, ctx.pullback):
        for c in (NORTH, SOUTH):
            for x in _disk_grid():
                G = metric_at(metric, (c, x))
                err = max(err, np.max(np.abs(G - G.T)))
    return err <= 1e-12, f"max |g - g^T| = {err:.2e}"


def check_positive_definite(ctx):
    worst = math.inf
    for x in _disk_grid():
        for _ in range(20):
            v = _unit(ctx.rng)
            worst = min(worst, inner(ctx.sphere, (NORTH, x), v, v))
    return worst > 0.0, f"min g(v, v) over unit probes {worst:.3e}"


def check_christoffel_index_symmetry(ctx):
    err = max(np.max(np.abs(gam - gam.transpose(0, 2, 1)))
              for gam in (christoffel_at(ctx.sphere, (NORTH, x)) for x in _disk_grid(n=5)))
    return err == 0.0, f"max |Gamma_ij - Gamma_ji| = {err:.2e}"


def check_asymmetric_form_contraction(ctx):
    err = 0.0
    for metric in (ctx.sphere, ctx.pullback):
        for c in (NORTH, SOUTH):
            for x in _disk_grid(n=5):
                sym = christoffel_at(metric, (c, x))
                lit = christoffel_asymmetric(metric, (c, x))
                v = ctx.rng.normal(size=2)
                err = max(err, np.max(np.abs(sym @ v @ v - lit @ v @ v)))
    return err <= 1e-10, f"max contraction disagreement {err:.2e}"


def check_christoffel_closed_form(ctx):
    err = max(np.max(np.abs(christoffel_at(ctx.pullback, (NORTH, x)) - _conformal_christoffel(x)))
              for x in _disk_grid())
    return err <= 1e-5, f"max |Gamma_fd - Gamma_conformal| = {err:.2e}"


def check_inner_covariance(ctx):
    atlas = ctx.sphere.atlas
    err = 0.0
    for x in _annulus_grid():
        v, w = ctx.rng.normal(size=(2, 2))
        pv = push_velocity(atlas, NORTH, SOUTH, TangentSample(ChartPoint(NORTH, x), v))
        pw = push_velocity(atlas, NORTH, SOUTH, TangentSample(ChartPoint(NORTH, x), w))
        a = inner(ctx.sphere, (NORTH, x), v, w)
        b = inner(ctx.sphere, pv.base, pv.velocity, pw.velocity)
        err = max(err, abs(a - b))
    return err <= 1e-6, f"max |g_N(v,w) - g_S(Jv,Jw)| = {err:.2e}"


# -- functionals ----------------------------------------------------------

def _test_curves(ctx):
    """(metric, curve, constant_speed) triples used by the functional checks."""
    out = [
        (ctx.euclid, AnalyticCurve(0, 1, lambda t: np.array([3 * t, 4 * t])), True),
        (ctx.euclid, AnalyticCurve(0, 1, lambda t: np.array([t, t * t])), False),
        (ctx.euclid, AnalyticCurve(0, 2, lambda t: np.array([math.cos(t), math.sin(t)])), True),
        (ctx.euclid, AnalyticCurve(0, 1, lambda t: np.array([0.5, -0.5])), True),
        (ctx.sphere, AnalyticCurve(0, 2 * math.pi, lambda t: np.array([math.cos(t), math.sin(t)])),
         True),
        (ctx.sphere, AnalyticCurve(0, 1, lambda t: np.array([t, 0.5 * t * t - 0.2])), False),
    ]
    g = integrate(ctx.sphere, (NORTH, np.array([0.2, -0.4])), np.array([1.0, 0.7]), (0, 1), 400)
    out.append((ctx.sphere, g, True))
    return out


def check_nonnegative(ctx):
    vals = [length(m, c) for m, c, _ in _test_curves(ctx)]
    const = length(ctx.euclid, AnalyticCurve(0, 1, lambda t: np.array([0.5, -0.5])))
    return min(vals) >= 0.0 and const == 0.0, f"min length {min(vals):.3e}, constant {const:.1e}"


def check_cauchy_schwarz(ctx):
    slack, eq_err = math.inf, 0.0
    for m, c, const in _test_curves(ctx):
        a, b = c.domain
        L, E = length(m, c), energy(m, c)
        slack = min(slack, 2 * (b - a) * E + 1e-8 - L * L)
        if const:
            eq_err = max(eq_err, abs(2 * (b - a) * E - L * L))
    ok = slack >= 0.0 and eq_err <= 1e-8
    return ok, f"min slack {slack:.2e}, constant-speed equality error {eq_err:.2e}"


def check_reparametrization(ctx):
    line = AnalyticCurve(0, 1, lambda t: np.array([3 * t, 4 * t]))
    smooth = lambda s: min(1.0, max(0.0, 3 * s * s - 2 * s**3))
    bent = AnalyticCurve(0, 1, lambda s: line.pos(smooth(s)),
                         velocity=lambda s: line.vel(smooth(s)) * (6 * s - 6 * s * s))
    dL = abs(length(ctx.euclid, bent) - length(ctx.euclid, line))
    rel_E = abs(energy(ctx.euclid, bent) / energy(ctx.euclid, line) - 1.0)
    return dL <= 1e-6 and rel_E > 0.01, f"length change {dL:.2e}, energy change {rel_E:.1%}"


def check_additivity(ctx):
    pos = lambda t: np.array([math.cos(t), 0.5 * math.sin(2 * t)])
    quad = QuadratureConfig(128)
    whole = length(ctx.sphere, AnalyticCurve(0, 2, pos), quad)
    parts = (length(ctx.sphere, AnalyticCurve(0, 0.75, pos), QuadratureConfig(48))
             + length(ctx.sphere, AnalyticCurve(0.75, 2, pos), QuadratureConfig(80)))
    err = abs(whole - parts)
    return err <= 1e-8, f"|L[a,b] - L[a,c] - L[c,b]| = {err:.2e}"


def check_angle(ctx):
    err = 0.0
    for _ in range(20):
        x = ctx.rng.uniform(-2, 2, size=2)
        v, w = ctx.rng.normal(size=(2, 2))
        al, be = ctx.rng.uniform(0.1, 10, size=2)
        th = angle(ctx.sphere, (NORTH, x), v, w)
        err = max(err, abs(th - angle(ctx.sphere, (NORTH, x), w, v)),
                  abs(th - angle(ctx.sphere, (NORTH, x), al * v, be * w)))
    return err <= 1e-12, f"max angle asymmetry / scale dependence {err:.2e}"


# -- geodesic -------------------------------------------------------------

def _random_geodesics(ctx, n=4):
    """``(metric, curve)`` pairs: random sphere geodesics plus a Euclidean line."""
    out = []
    for _ in range(n):
        x0 = ctx.rng.uniform(-1, 1, size=2)
        v0 = _unit(ctx.rng) * ctx.rng.uniform(0.5, 2.0)
        out.append((ctx.sphere, integrate(ctx.sphere, (NORTH, x0), v0, (0, 1), 400)))
    out.append((ctx.euclid, integrate(ctx.euclid, (0, np.zeros(2)), np.array([1.0, 2.0]),
                                      (0, 1), 400)))
    return out


def _speeds(metric, curve):
    return np.array([math.sqrt(inner(metric, curve.point(i), v, v))
                     for i, v in enumerate(curve.velocities)])


def check_speed_conservation(ctx):
    worst = 0.0
    for metric, g in _random_geodesics(ctx):
        s = _speeds(metric, g)
        worst = max(worst, np.max(np.abs(s - s[0])) / s[0])
    return worst <= 1e-6, f"max relative speed drift {worst:.2e}"


def check_integration_residual(ctx):
    worst = max(residual(m, g) for m, g in _random_geodesics(ctx))
    return worst <= 1e-4, f"max residual {worst:.2e}"


def check_restriction(ctx):
    g = integrate(ctx.sphere, (NORTH, np.array([0.5, 0.1])), np.array([-1.0, 1.5]), (0, 1), 400)
    worst = 0.0
    for _ in range(10):
        lo = int(ctx.rng.integers(0, 390))
        hi = int(ctx.rng.integers(lo + 5, 401))
        worst = max(worst, residual(ctx.sphere, g.slice(lo, hi + 1)))
    return worst <= 1e-4, f"max sub-range residual {worst:.2e}"


def check_homogeneity(ctx):
    x0, v = np.array([0.3, -0.2]), np.array([0.4, 0.9])
    a = integrate(ctx.sphere, (NORTH, x0), 2 * v, (0, 1), 400)
    b = integrate(ctx.sphere, (NORTH, x0), v, (0, 2), 400)
    ea = ctx.sphere.atlas.embed(int(a.charts[-1]), a.coords[-1])
    eb = ctx.sphere.atlas.embed(int(b.charts[-1]), b.coords[-1])
    err = np.max(np.abs(ea - eb))
    return err <= 1e-8, f"|exp(2v) - flow(v, 2)| = {err:.2e}"


def check_shooting(ctx, pairs=20):
    worst_len, worst_res = 0.0, 0.0
    for _ in range(pairs):
        while True:
            p, q = ctx.rng.normal(size=(2, 3))
            p, q = p / np.linalg.norm(p), q / np.linalg.norm(q)
            if p @ q > -0.99:
                break
        _, curve = shoot_ambient(ctx.sphere, p, q)
        worst_len = max(worst_len, abs(length(ctx.sphere, curve) - math.acos(p @ q)))
        worst_res = max(worst_res, residual(ctx.sphere, curve))
    ok = worst_len <= 1e-6 and worst_res <= 1e-4
    return ok, f"max length error {worst_len:.2e}, max residual {worst_res:.2e}"


def meridian_embedded(metric, radius, steps=2000):
    curve = integrate(metric, (NORTH, np.zeros(2)), np.array([0.5, 0.0]), (0, math.pi), steps,
                      ChartSwitchPolicy(radius))
    emb = np.array([metric.atlas.embed(int(c), x) for c, x in zip(curve.charts, curve.coords)])
    return curve, emb


def check_chart_switch_invariance(ctx):
    c1, e1 = meridian_embedded(ctx.sphere, 1.5)
    c2, e2 = meridian_embedded(ctx.sphere, 3.0)
    err = np.max(np.abs(e1 - e2))
    ok = err <= 1e-6 and len(c1.switches) == 1 and len(c2.switches) == 1
    return ok, f"max embedded disagreement {err:.2e}, switches {len(c1.switches)}/{len(c2.switches)}"


# -- variation ------------------------------------------------------------

def _bumps(ctx, n, a=0.0, b=1.0):
    out = []
    for _ in range(n):
        w = ctx.rng.uniform(0.2, 0.4) * (b - a)
        c = ctx.rng.uniform(a + 0.6 * w, b - 0.6 * w)
        out.append(BumpPerturbation(a, b, c, w, ctx.rng.normal(size=2)))
    return out


def check_stationarity_views(ctx):
    line = AnalyticCurve(0, 1, lambda t: np.array([1 + 2 * t, -t]))
    parab = AnalyticCurve(0, 1, lambda t: np.array([t, t * t]))
    out = []
    for curve in (line, parab):
        fv = max(abs(first_variation(ctx.euclid, curve, b)) for b in _bumps(ctx, 10))
        el = max(np.max(np.abs(euler_lagrange_residual(ctx.euclid, curve, "energy", t)))
                 for t in np.linspace(0.1, 0.9, 9))
        out.append((fv <= 1e-4, el <= 1e-3, fv, el))
    ok = out[0][:2] == (True, True) and out[1][:2] == (False, False)
    return ok, (f"line: dE {out[0][2]:.1e} EL {out[0][3]:.1e}; "
                f"parabola: dE {out[1][2]:.1e} EL {out[1][3]:.1e}")


def check_unit_speed_variations(ctx):
    v0 = np.array([0.6, 0.8]) / 2.0  # unit speed at the origin, where g = 4 I
    g = integrate(ctx.sphere, (NORTH, np.zeros(2)), v0, (0, 1), 400)
    worst = 0.0
    for b in _bumps(ctx, 5):
        worst = max(worst, abs(first_variation(ctx.sphere, g, b, "energy")),
                    abs(first_variation(ctx.sphere, g, b, "length")))
    return worst <= 1e-4, f"max |dE|, |dL| on a unit-speed geodesic {worst:.2e}"


def check_variation_convergence(ctx):
    parab = AnalyticCurve(0, 1, lambda t: np.array([t, math.sin(t)]))
    b = BumpPerturbation(0, 1, 0.5, 0.5, (0.3, 1.0))
    d = [first_variation(ctx.sphere, parab, b, alpha_step=h, richardson=False)
         for h in (1e-1, 5e-2, 2.5e-2)]
    first, second = abs(d[1] - d[0]), abs(d[2] - d[1])
    return second <= first, f"successive changes {first:.2e} -> {second:.2e}"


def check_el_matches_geodesic_residual(ctx):
    curve = sample(AnalyticCurve(0, 1, lambda t: np.array([t - 0.3, 0.4 * t * t])), 201)
    worst = 0.0
    for idx in range(20, 181, 20):
        el = euler_lagrange_residual(ctx.sphere, curve, "energy", curve.lam[idx])
        x, v = curve.coords[idx], curve.velocities[idx]
        acc = np.array([0.0, 0.8])
        G = metric_at(ctx.sphere, (NORTH, x))
        gam = christoffel_at(ctx.sphere, (NORTH, x))
        worst = max(worst, np.max(np.abs(el + G @ (acc + gam @ v @ v))))
    return worst <= 1e-3, f"max |EL + G (x'' + Gamma x' x')| = {worst:.2e}"


CHECKS = [
    ("charts", "transition round trip", check_transition_roundtrip),
    ("charts", "velocity round trip", check_velocity_roundtrip),
    ("charts", "embedding on unit sphere", check_embedding_norm),
    ("charts", "embedding consistency", check_embedding_consistency),
    ("metric", "metric symmetry", check_metric_symmetry),
    ("metric", "positive definiteness", check_positive_definite),
    ("metric", "christoffel index symmetry", check_christoffel_index_symmetry),
    ("metric", "asymmetric-form contraction", check_asymmetric_form_contraction),
    ("metric", "christoffel closed form", check_christoffel_closed_form),
    ("metric", "inner product chart covariance", check_inner_covariance),
    ("functionals", "length nonnegative", check_nonnegative),
    ("functionals", "cauchy-schwarz bound", check_cauchy_schwarz),
    ("functionals", "reparametrization", check_reparametrization),
    ("functionals", "length additivity", check_additivity),
    ("functionals", "angle symmetry and scaling", check_angle),
    ("geodesic", "speed conservation", check_speed_conservation),
    ("geodesic", "integration residual", check_integration_residual),
    ("geodesic", "restriction", check_restriction),
    ("geodesic", "homogeneity", check_homogeneity),
    ("geodesic", "shooting consistency", check_shooting),
    ("geodesic", "chart-switch invariance", check_chart_switch_invariance),
    ("variation", "stationarity views agree", check_stationarity_views),
    ("variation", "unit-speed energy/length variations", check_unit_speed_variations),
    ("variation", "variation derivative convergence", check_variation_convergence),
    ("variation", "euler-lagrange vs geodesic residual", check_el_matches_geodesic_residual),
]


def run_checks(seed=DEFAULT_SEED, symmetry_defect=0.0):
    """Run the suite; returns a list of ``(module, name, passed, detail)``."""
    ctx = build_context(seed, symmetry_defect)
    rows = []
    for module, name, fn in CHECKS:
        try:
            ok, detail = fn(ctx)
        except Exception as exc:  # a crash is a failed invariant, not a crashed suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        rows.append((module, name, bool(ok), detail))
    return rows


def format_report(rows):
    width = max(len(f"{m}/{n}") for m, n, _, _ in rows)
    lines = [f"{'PASS' if ok else 'FAIL'}  {f'{m}/{n}':<{width}}  {detail}"
             for m, n, ok, detail in rows]
    failed = sum(not ok for _, _, ok, _ in rows)
    lines.append(f"{len(rows) - failed}/{len(rows)} invariants passed")
    return "\n".join(lines)
