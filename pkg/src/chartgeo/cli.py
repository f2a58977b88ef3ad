"""Command-line front end.

    chartgeo integrate --manifold sphere2 --chart N --x0 1,0 --v0 0,1 --t1 6.283185 --out eq.json
    chartgeo shoot --manifold sphere2 --p 1,0,0 --q 0,1,0 --out arc.json
    chartgeo eval --curve eq.json --what energy
    chartgeo check --seed 7

Exit codes: 0 success, 1 numerical failure, 2 bad flags or unreadable input.
"""

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import checks
from .charts import NORTH, SOUTH, ChartPoint, euclidean_atlas, sphere_atlas
from .errors import GeometryError, NoConvergence
from .functionals import ChartSwitch, DiscreteCurve, energy, length
from .geodesic import ChartSwitchPolicy, ShootConfig, integrate, residual, shoot, shoot_ambient
from .metric import euclidean_metric, inner, sphere_metric

FORMAT = "chartgeo-curve"
VERSION = 1
CHART_NAMES = {"n": NORTH, "north": NORTH, "s": SOUTH, "south": SOUTH}


class BadInput(Exception):
    """Unreadable or invalid input file (exit code 2)."""


# -- manifolds and flag types ----------------------------------------------

def parse_manifold(tag):
    if tag == "sphere2":
        return tag
    kind, _, dim = tag.partition(":")
    if kind == "euclidean" and dim.isdigit() and int(dim) >= 1:
        return f"euclidean:{int(dim)}"
    raise argparse.ArgumentTypeError(f"unknown manifold {tag!r} (euclidean:<d> or sphere2)")


def build_metric(tag):
    if tag == "sphere2":
        return sphere_metric(sphere_atlas())
    return euclidean_metric(euclidean_atlas(int(tag.split(":")[1])))


def comma_floats(text):
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not all(math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError(f"non-finite value in {text!r}")
    return np.array(vals)


def chart_id(text):
    key = text.strip().lower()
    if key in CHART_NAMES:
        return CHART_NAMES[key]
    try:
        return int(key)
    except ValueError:
        raise argparse.ArgumentTypeError(f"chart must be an integer id, N or S; got {text!r}")


# -- curve files ------------------------------------------------------------

def _embedded(metric, curve):
    atlas = metric.atlas
    return [atlas.embed(int(c), x) for c, x in zip(curve.charts, curve.coords)]


def summarize(metric, curve, v0=None):
    out = {"length": length(metric, curve), "energy": energy(metric, curve),
           "max_residual": residual(metric, curve)}
    if v0 is not None:
        out["v0"] = [float(c) for c in v0]
    return out


def curve_document(tag, metric, curve, summary):
    emb = _embedded(metric, curve) if tag == "sphere2" else None
    samples = []
    for i in range(len(curve)):
        rec = {"lambda": float(curve.lam[i]), "chart": int(curve.charts[i]),
               "coords": [float(c) for c in curve.coords[i]],
               "velocity": [float(c) for c in curve.velocities[i]]}
        if emb is not None:
            rec["embedded"] = [float(c) for c in emb[i]]
        samples.append(rec)
    return {
        "format": FORMAT,
        "version": VERSION,
        "manifold": tag,
        "switches": [{"lambda": s.lam, "index": s.index, "source": s.source,
                      "target": s.target} for s in curve.switches],
        "summary": summary,
        "samples": samples,
    }


def write_curve(path, tag, metric, curve, summary):
    if str(path).lower().endswith(".csv"):
        write_csv(path, tag, metric, curve)
        return
    with open(path, "w") as fh:
        json.dump(curve_document(tag, metric, curve, summary), fh, indent=1)
        fh.write("\n")


def write_csv(path, tag, metric, curve):
    d = curve.dimension
    header = ["lambda", "chart"] + [f"x{i + 1}" for i in range(d)]
    emb = None
    if tag == "sphere2":
        header += ["e1", "e2", "e3"]
        emb = _embedded(metric, curve)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(len(curve)):
            row = [repr(float(curve.lam[i])), int(curve.charts[i])]
            row += [repr(float(c)) for c in curve.coords[i]]
            if emb is not None:
                row += [repr(float(c)) for c in emb[i]]
            w.writerow(row)


def read_curve(path):
    """Load a curve file; returns ``(tag, metric, curve, summary)``."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, ValueError) as exc:
        raise BadInput(f"cannot read curve file {path}: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT or "version" not in doc:
        raise BadInput(f"{path} is not a versioned {FORMAT} document")
    if doc["version"] != VERSION:
        raise BadInput(f"unsupported curve file version {doc['version']!r}")
    try:
        tag = parse_manifold(doc["manifold"])
        metric = build_metric(tag)
        recs = doc["samples"]
        lam = np.array([r["lambda"] for r in recs], dtype=float)
        charts = np.array([r["chart"] for r in recs], dtype=int)
        coords = np.array([r["coords"] for r in recs], dtype=float)
        vels = np.array([r["velocity"] for r in recs], dtype=float)
        switches = [ChartSwitch(float(s["lambda"]), int(s["index"]), int(s["source"]),
                                int(s["target"])) for s in doc.get("switches", [])]
        summary = doc.get("summary", {})
    except (KeyError, TypeError, ValueError, argparse.ArgumentTypeError) as exc:
        raise BadInput(f"malformed curve file {path}: {exc}") from None
    if lam.size < 2 or np.any(np.diff(lam) <= 0.0):
        raise BadInput("sample parameters must be strictly increasing")
    bad = set(charts.tolist()) - set(metric.atlas.chart_ids)
    if bad:
        raise BadInput(f"chart ids {sorted(bad)} are not valid for {tag}")
    if coords.ndim != 2 or coords.shape[1] != metric.dimension or vels.shape != coords.shape:
        raise BadInput(f"coordinates do not match the dimension of {tag}")
    try:
        curve = DiscreteCurve(lam, charts, coords, vels, switches=switches)
    except (ValueError, GeometryError) as exc:
        raise BadInput(f"invalid samples: {exc}") from None
    return tag, metric, curve, summary


# -- subcommands ------------------------------------------------------------

def cmd_integrate(args):
    metric = build_metric(args.manifold)
    d = metric.dimension
    if args.x0.size != d or args.v0.size != d:
        raise GeometryError(f"--x0 and --v0 need {d} components for {args.manifold}")
    metric.atlas.check_chart(args.chart)
    if args.steps < 1:
        raise GeometryError("--steps must be positive")
    curve = integrate(metric, (args.chart, args.x0), args.v0, (args.t0, args.t1), args.steps,
                      ChartSwitchPolicy(args.switch_radius))
    write_curve(args.out, args.manifold, metric, curve, summarize(metric, curve))
    return 0


def cmd_shoot(args):
    metric = build_metric(args.manifold)
    cfg = ShootConfig(tolerance=args.tol, max_iter=args.max_iter, multi_start=args.multi_start,
                      steps=args.steps)
    policy = ChartSwitchPolicy(args.switch_radius)
    if args.manifold == "sphere2":
        p, q = args.p, args.q
        if p.size != 3 or q.size != 3:
            raise GeometryError("sphere2 endpoints are embedded points with 3 components")
        p, q = p / np.linalg.norm(p), q / np.linalg.norm(q)
        v0, curve = shoot_ambient(metric, p, q, cfg=cfg, policy=policy)
    else:
        d = metric.dimension
        if args.p.size != d or args.q.size != d:
            raise GeometryError(f"--p and --q need {d} components for {args.manifold}")
        v0, curve = shoot(metric, ChartPoint(0, tuple(args.p)), ChartPoint(0, tuple(args.q)),
                          cfg=cfg, policy=policy)
    write_curve(args.out, args.manifold, metric, curve, summarize(metric, curve, v0))
    return 0


def fmt(value):
    return f"{value:#.12g}"


def cmd_eval(args):
    _, metric, curve, _ = read_curve(args.curve)
    if args.what == "length":
        print(fmt(length(metric, curve)))
    elif args.what == "energy":
        print(fmt(energy(metric, curve)))
    elif args.what == "residual":
        print(fmt(residual(metric, curve)))
    else:
        for i, v in enumerate(curve.velocities):
            s = math.sqrt(max(0.0, inner(metric, curve.point(i), v, v)))
            print(f"{fmt(curve.lam[i])} {fmt(s)}")
    return 0


def cmd_check(args):
    rows = checks.run_checks(args.seed, args.corrupt_symmetry)
    print(checks.format_report(rows))
    return 0 if all(ok for _, _, ok, _ in rows) else 1


# -- entry point ------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="chartgeo", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("integrate", help="integrate a geodesic from initial data")
    p.add_argument("--manifold", type=parse_manifold, required=True)
    p.add_argument("--chart", type=chart_id, default=0)
    p.add_argument("--x0", type=comma_floats, required=True)
    p.add_argument("--v0", type=comma_floats, required=True)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=400)
    p.add_argument("--switch-radius", type=float, default=2.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("shoot", help="solve the geodesic boundary-value problem")
    p.add_argument("--manifold", type=parse_manifold, required=True)
    p.add_argument("--p", type=comma_floats, required=True)
    p.add_argument("--q", type=comma_floats, required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--max-iter", type=int, default=30)
    p.add_argument("--multi-start", type=int, default=8)
    p.add_argument("--switch-radius", type=float, default=2.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_shoot)

    p = sub.add_parser("eval", help="evaluate a functional on a curve file")
    p.add_argument("--curve", required=True)
    p.add_argument("--what", choices=("length", "energy", "residual", "speed"), required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("check", help="run the invariant suite")
    p.add_argument("--seed", type=int, default=checks.DEFAULT_SEED)
    # test hook: perturb g_12 of the built-in metrics to plant a symmetry defect
    p.add_argument("--corrupt-symmetry", type=float, default=0.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_check)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BadInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NoConvergence as exc:
        print(f"error: {exc} (best residual {exc.best_residual:.3e})", file=sys.stderr)
        return 1
    except (GeometryError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
