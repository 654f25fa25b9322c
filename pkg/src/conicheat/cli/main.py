"""Command-line front end: config-driven experiments with CSV and JSON outputs.

Exit codes: 0 success (or all checks passed), 1 numeric failure, 2 config error.
"""

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from itertools import product
from pathlib import Path

import numpy as np

from .. import __version__
from ..cone_model import (ConePoint, ModeSumConfig, gaussian_bound_fit, heat_from_resolvent_contour,
                          heat_kernel_cone, resolvent_cone, verify_bf0_zf_matching)
from ..cross_section import ConeGeometry, indicial_roots, load_spectrum, sphere_point
from ..errors import (ConicHeatError, InvalidGeometryError, SpectrumParseError,
                      UndefinedDeterminantError)
from ..special_functions.bessel import BesselEvalConfig
from .config import (ConfigError, apply_overrides, config_digest, load_config, thread_count,
                     validate_config)

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG = 0, 1, 2
COMMANDS = ("spectrum", "heat", "resolvent", "rtrace", "zeta", "det", "verify")


class Context:
    """Validated configuration plus output helpers."""

    def __init__(self, cfg, base_dir, command):
        self.cfg = cfg
        self.base_dir = Path(base_dir)
        self.command = command
        self.digest = config_digest(cfg)
        out = cfg.get("output", {})
        self.out_dir = self._resolve(out.get("dir", "."))
        self.prefix = out.get("prefix", command)
        self.numerics = cfg.get("numerics", {})
        self.task = cfg.get("task", {})
        self.threads = thread_count()
        self.written = []

    def _resolve(self, path):
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p

    def path(self, suffix):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return self.out_dir / f"{self.prefix}_{suffix}"

    def provenance(self):
        return {"version": f"conicheat {__version__}", "config_sha256": self.digest}

    def write_csv(self, suffix, header, rows):
        path = self.path(suffix)
        buf = io.StringIO()
        buf.write(f"# conicheat {__version__}\n# config-sha256 {self.digest}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
        path.write_text(buf.getvalue())
        self.written.append(str(path))
        return path

    def write_json(self, suffix, payload):
        path = self.path(suffix)
        data = {"provenance": self.provenance(), **payload}
        path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")
        self.written.append(str(path))
        return path

    def mode_config(self):
        tol = self.numerics.get("bessel_rel_tol")
        return ModeSumConfig(max_modes=int(self.numerics.get("max_modes", 200000)),
                             tail_tol=float(self.numerics.get("tail_tol", 1e-15)),
                             bessel=BesselEvalConfig(target_rel_tol=tol))

    def map(self, fn, items):
        """Order-preserving map over independent work items."""
        items = list(items)
        if self.threads <= 1 or len(items) < 2:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(max_workers=self.threads) as ex:
            return list(ex.map(fn, items))


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (np.floating,)):
        return repr(float(v))
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


# ------------------------------------------------------------ geometry

def build_geometry(ctx):
    g = ctx.cfg["geometry"]
    kind = g["kind"]
    cutoff = float(g.get("cutoff", 400.0))
    if kind == "circle":
        cone = ConeGeometry.circle(g["length"], cutoff)
    elif kind == "sphere":
        cone = ConeGeometry.sphere(g["d"], cutoff, g.get("radius", 1.0))
    elif kind == "file":
        cone = ConeGeometry.from_file(ctx._resolve(g["path"]), g["n"], g["volume"])
    else:
        raise ConfigError("a mock geometry only supports the zeta and det commands")
    if "n" in g and g["n"] != cone.n:
        raise ConfigError(f"geometry.n = {g['n']} conflicts with the cross-section "
                          f"(dimension {cone.n})")
    return cone


def mock_spectrum(ctx):
    g = ctx.cfg["geometry"]
    if "eigenvalues" in g:
        lam = list(g["eigenvalues"])
        mult = list(g.get("multiplicities", [1] * len(lam)))
        if len(mult) != len(lam):
            raise ConfigError("multiplicities must match eigenvalues in length")
        return lam, mult
    spec = load_spectrum(ctx._resolve(g["path"]))
    if spec.eigenvalues[0] <= 0:
        raise ConfigError("mock spectra must be strictly positive")
    return list(spec.eigenvalues), list(spec.multiplicities)


def _angle(cone, y):
    if cone.kind != "sphere":
        if isinstance(y, list):
            raise ConfigError("circle angles are single numbers")
        return float(y)
    d = cone.n - 1
    if isinstance(y, list):
        if len(y) != d:
            raise ConfigError(f"sphere points need {d} angles")
        return sphere_point(*y)
    v = np.zeros(d + 1)
    v[0], v[1] = math.cos(y), math.sin(y)
    return v


def _point(cone, spec, default_r=1.0):
    spec = spec or {}
    return ConePoint(float(spec.get("r", default_r)), _angle(cone, spec.get("y", 0.0)))


def _evaluation_points(ctx, cone, var):
    """(value of var, p, p2) tuples from task.grid or a single point."""
    grid = ctx.task.get("grid")
    if grid:
        keys = (var, "r", "y", "r2", "y2")
        defaults = {var: [1.0], "r": [1.0], "y": [0.0], "r2": [1.0], "y2": [0.0]}
        axes = [grid.get(k, defaults[k]) for k in keys]
        return [(a, ConePoint(float(r), _angle(cone, y)), ConePoint(float(r2), _angle(cone, y2)))
                for a, r, y, r2, y2 in product(*axes)]
    val = ctx.task.get(var, 1.0)
    if isinstance(val, list):
        raise ConfigError(f"task.{var} must be a single number outside a grid")
    return [(val, _point(cone, ctx.task.get("p")), _point(cone, ctx.task.get("p2")))]


def _y_label(y):
    arr = np.atleast_1d(np.asarray(y, dtype=float))
    return " ".join(repr(float(v)) for v in arr)


# ------------------------------------------------------------ commands

def cmd_spectrum(ctx):
    cone = build_geometry(ctx)
    rows = [(lam, m, nu) for (lam, m), (nu, _) in zip(cone.spectrum, indicial_roots(cone))]
    ctx.write_csv("spectrum.csv", ["lambda", "multiplicity", "nu"], rows)
    for row in rows:
        print(f"{row[0]:.12g}\t{row[1]}\t{row[2]:.12g}")
    return EXIT_OK


def cmd_heat(ctx):
    cone = build_geometry(ctx)
    mcfg = ctx.mode_config()
    pts = _evaluation_points(ctx, cone, "t")
    vals = ctx.map(lambda x: heat_kernel_cone(cone, float(x[0]), x[1], x[2], mcfg), pts)
    rows = [(float(t), p.r, _y_label(p.y), p2.r, _y_label(p2.y), float(v))
            for (t, p, p2), v in zip(pts, vals)]
    ctx.write_csv("heat.csv", ["t", "r", "y", "r2", "y2", "value"], rows)
    if len(rows) == 1:
        print(repr(rows[0][-1]))
    else:
        print(f"wrote {len(rows)} rows")
    return EXIT_OK


def cmd_resolvent(ctx):
    cone = build_geometry(ctx)
    mcfg = ctx.mode_config()
    pts = _evaluation_points(ctx, cone, "k")
    vals = ctx.map(lambda x: resolvent_cone(cone, float(x[0]), x[1], x[2], mcfg), pts)
    rows = [(float(k), p.r, _y_label(p.y), p2.r, _y_label(p2.y), float(np.real(v)))
            for (k, p, p2), v in zip(pts, vals)]
    ctx.write_csv("resolvent.csv", ["k", "r", "y", "r2", "y2", "value"], rows)
    if len(rows) == 1:
        print(repr(rows[0][-1]))
    else:
        print(f"wrote {len(rows)} rows")
    return EXIT_OK


def _times(ctx, default=(1.0,)):
    t = ctx.task.get("t", list(default))
    return [float(v) for v in (t if isinstance(t, list) else [t])]


def cmd_rtrace(ctx):
    from ..renormalization import (default_delta_grid, default_remainder_powers,
                                   fit_divergent_expansion, sharp_cutoff, trace_sweep)
    cone = build_geometry(ctx)
    mcfg = ctx.mode_config()
    count = int(ctx.numerics.get("delta_count", 21))
    tol = float(ctx.numerics.get("tolerance", 1e-6))
    results = []
    for i, t in enumerate(_times(ctx)):
        sweep = trace_sweep(cone, t, default_delta_grid(t, count), sharp_cutoff(), mcfg)
        exp = fit_divergent_expansion(sweep, cone.n, default_remainder_powers(cone))
        ctx.write_csv(f"sweep_t{i}.csv", ["delta", "value"], zip(sweep.deltas, sweep.values))
        ctx.write_csv(f"expansion_t{i}.csv", ["term", "exponent", "logpower", "coefficient"],
                      exp.rows())
        results.append({"t": t, "finite_part": exp.finite_part, "f": exp.f, "f_log": exp.f_log,
                        "relative_residual": exp.relative_residual,
                        "condition_number": exp.condition_number})
        print(f"t={t:.6g}\tfinite_part={exp.finite_part:.15g}")
    fps = [r["finite_part"] for r in results]
    spread = float(max(fps) - min(fps))
    ctx.write_json("report.json", {"geometry": cone.label(), "n": cone.n, "traces": results,
                                   "t_independence": {"spread": spread, "tolerance": tol,
                                                      "certified": spread <= tol}})
    return EXIT_OK


def _s_values(ctx):
    raw = ctx.task.get("s", [0.5, 1.0, 2.0])
    return [complex(v[0], v[1]) if isinstance(v, list) else complex(v) for v in raw]


def _trace_model(ctx):
    from ..zeta_det import build_trace_model_from_cone, mock_trace_model
    if ctx.cfg["geometry"]["kind"] == "mock":
        lam, mult = mock_spectrum(ctx)
        return mock_trace_model(lam, mult), None
    cone = build_geometry(ctx)
    model = build_trace_model_from_cone(
        cone, ctx.mode_config(), t_lo=float(ctx.numerics.get("t_lo", 0.25)),
        t_hi=float(ctx.numerics.get("t_hi", 4.0)),
        samples=int(ctx.numerics.get("trace_samples", 9)))
    return model, cone


def _model_payload(ctx, model):
    payload = {
        "label": model.label,
        "short_expansion": [list(t) for t in model.short_expansion.terms],
        "long_expansion": [list(t) for t in model.long_expansion.terms],
        "t_lo": model.t_lo, "t_hi": model.t_hi, "splice_gaps": list(model.splice_gaps()),
    }
    if model.samples:
        ts, vals = model.samples
        ctx.write_csv("trace_samples.csv", ["t", "renormalized_trace"], zip(ts, vals))
        spread = float(np.max(vals) - np.min(vals))
        payload["t_independence"] = {"spread": spread,
                                     "tolerance": float(ctx.numerics.get("tolerance", 1e-6))}
        payload["t_independence"]["certified"] = spread <= payload["t_independence"]["tolerance"]
    return payload


def cmd_zeta(ctx):
    from ..zeta_det import zeta_result
    model, _ = _trace_model(ctx)
    res = zeta_result(model)
    s_vals = _s_values(ctx)
    samples = ctx.map(res.evaluation, s_vals)
    ctx.write_csv("zeta.csv", ["s_re", "s_im", "zeta_re", "zeta_im"],
                  [(s.real, s.imag, v.real, v.imag) for s, v in zip(s_vals, samples)])
    ctx.write_json("report.json", {
        "model": _model_payload(ctx, model),
        "laurent_at_0": {"residue": res.residue, "value": res.value_at_0,
                         "derivative": res.derivative_at_0},
        "poles": [{"location": a, "order": b} for a, b in res.poles],
        "samples": [{"s": s, "zeta": v} for s, v in zip(s_vals, samples)],
    })
    print(f"residue={res.residue:.15g}\tvalue={res.value_at_0:.15g}\t"
          f"derivative={res.derivative_at_0:.15g}")
    return EXIT_OK


def cmd_det(ctx):
    from ..zeta_det import zeta_laurent_at_zero
    model, _ = _trace_model(ctx)
    res, val, der = zeta_laurent_at_zero(model)
    tol = float(ctx.numerics.get("residue_tol", 1e-9))
    payload = {"model": _model_payload(ctx, model),
               "laurent_at_0": {"residue": res, "value": val, "derivative": der}}
    if abs(res) > tol:
        payload["error"] = f"zeta has residue {res:.6g} at s = 0; determinant undefined"
        ctx.write_json("report.json", payload)
        raise UndefinedDeterminantError("zeta has a pole at s = 0", res)
    payload["log_det"] = -der
    payload["det"] = math.exp(-der)
    ctx.write_json("report.json", payload)
    print(f"log_det={-der:.15g}\tdet={math.exp(-der):.15g}")
    return EXIT_OK


# ------------------------------------------------------------- verify

def _check(name, expected, actual, passed):
    return {"name": name, "expected": expected, "actual": actual, "passed": bool(passed)}


def _random_points(cone, rng, count, t_range, r_range=(0.5, 2.0), min_radial_gap=0.0):
    out = []
    for _ in range(count):
        t = float(np.exp(rng.uniform(*np.log(t_range))))
        r, r2 = rng.uniform(*r_range, size=2)
        while abs(r - r2) < min_radial_gap:
            r2 = rng.uniform(*r_range)
        if cone.kind == "sphere":
            d = cone.n - 1
            y, y2 = rng.normal(size=d + 1), rng.normal(size=d + 1)
            y, y2 = y / np.linalg.norm(y), y2 / np.linalg.norm(y2)
        else:
            y, y2 = rng.uniform(0.0, cone.length, size=2)
        out.append((t, ConePoint(float(r), y), ConePoint(float(r2), y2)))
    return out


def verify_index(ctx, n):
    from ..index_calculus import heat_family_from_resolvent, leading_order_table, resolvent_family
    checks = []
    res = leading_order_table(resolvent_family(n))
    zf_res = (0.0, 1) if n == 2 else (0.0, 0)
    exp_res = {"sc": (0.0, 0), "bf0": (n - 2.0, 0), "rb0": (n - 2.0, 0), "lb0": (n - 2.0, 0),
               "zf": zf_res}
    for face, want in exp_res.items():
        checks.append(_check(f"resolvent {face}", want, res[face], res[face] == want))
    heat = leading_order_table(heat_family_from_resolvent(resolvent_family(n), n, True))
    exp_heat = {"sc": (0.0, 0), "bf0": (float(n), 0), "rb0": (float(n), 0),
                "lb0": (float(n), 0), "zf": (float(n), 0)}
    for face, want in exp_heat.items():
        checks.append(_check(f"heat {face}", want, heat[face], heat[face] == want))
    for face in ("lb", "rb", "bf"):
        checks.append(_check(f"heat {face}", "inf", heat[face][0], math.isinf(heat[face][0])))
    return checks


def verify_contour(ctx, cone):
    rng = np.random.default_rng(int(ctx.numerics.get("seed", 0)))
    tol = float(ctx.numerics.get("tolerance", 1e-6))
    mcfg = ctx.mode_config()
    # the resolvent mode sum needs separated radii for a tail bound
    pts = _random_points(cone, rng, int(ctx.numerics.get("samples", 20)), (0.2, 2.0),
                         min_radial_gap=0.05)

    def one(x):
        t, p, p2 = x
        return heat_from_resolvent_contour(cone, t, p, p2, cfg=mcfg), \
            heat_kernel_cone(cone, t, p, p2, mcfg)

    vals = ctx.map(one, pts)
    diff = max(abs(c.real - h) for c, h in vals)
    imag = max(abs(c.imag) for c, _ in vals)
    ctx.write_csv("contour.csv", ["t", "r", "r2", "contour_re", "contour_im", "mode_sum"],
                  [(t, p.r, p2.r, c.real, c.imag, h) for (t, p, p2), (c, h) in zip(pts, vals)])
    return [_check("max |contour - mode sum|", f"< {tol:g}", diff, diff < tol),
            _check("max |imaginary part|", "< 1e-9", imag, imag < 1e-9)]


def verify_cutoffs(ctx, cone):
    from ..renormalization import compare_cutoffs, smooth_cutoff
    tol = float(ctx.numerics.get("tolerance", 1e-6))
    inner = float(ctx.task.get("smooth_inner", math.log(2.0)))
    outer = float(ctx.task.get("smooth_outer", inner))
    t = _times(ctx)[0]
    cmp = compare_cutoffs(cone, t, smooth_cutoff(inner, outer), ctx.mode_config())
    fp_gap = abs(cmp.finite_part_shift - cmp.predicted_shift)
    return [
        _check("smooth/sharp coefficient relation", f"< {tol:g}", cmp.max_relative_deviation,
               cmp.max_relative_deviation < tol),
        _check("finite-part shift", cmp.predicted_shift, cmp.finite_part_shift, fp_gap < tol),
        _check("stated-moment deviation (informational)", "reported",
               cmp.max_relative_deviation_stated, True),
    ]


def verify_bound(ctx, cone):
    rng = np.random.default_rng(int(ctx.numerics.get("seed", 0)))
    pts = _random_points(cone, rng, int(ctx.numerics.get("samples", 40)), (0.05, 20.0),
                         (0.2, 5.0))
    fit = gaussian_bound_fit(cone, pts, cfg=ctx.mode_config())
    ok = math.isfinite(fit.c1) and math.isfinite(fit.c2)
    return [_check("finite constants", "finite", [fit.c1, fit.c2], ok),
            _check("violations", 0, len(fit.violations), not fit.violations),
            _check("samples skipped as unresolved (informational)", "reported",
                   len(fit.skipped), True)]


def verify_matching(ctx, cone):
    if cone.n != 2:
        raise ConfigError("the matching suite needs a two-dimensional cone")
    rep = verify_bf0_zf_matching(cone, [1e-3, 1e-4, 1e-5, 1e-6], [0.25, 0.5, 0.75],
                                 cfg=ctx.mode_config())
    tail = float(np.max(np.abs(rep.higher_mode_sum - rep.higher_mode_limit)))
    return [
        _check("log coefficient", rep.expected_log_coefficient, rep.log_coefficient,
               abs(rep.log_coefficient - rep.expected_log_coefficient) < 1e-4),
        _check("relative deviation from leading term", "< 1e-4", rep.max_deviation,
               rep.max_deviation < 1e-4),
        _check("higher-mode limit", "< 1e-6", tail, tail < 1e-6),
    ]


def verify_orders(ctx, cone):
    from ..asymptotic_lab import verify_all_heat_orders, verify_resolvent_orders
    checks = []
    for c in verify_all_heat_orders(cone, ctx.mode_config()):
        checks.append(_check(f"heat order {c.regime}", c.expected, c.fit.exponent, c.passed))
    if cone.n in (2, 3):
        rep = verify_resolvent_orders(cone, cfg=ctx.mode_config())
        checks.append(_check("resolvent log-k coefficient", rep.expected_log_coefficient,
                             rep.log_coefficient, rep.log_ok()))
        checks.append(_check("resolvent finite limit", "finite", rep.limit, rep.limit_ok()))
    return checks


def cmd_verify(ctx):
    suite = ctx.task.get("suite")
    if suite is None:
        raise ConfigError("verify needs task.suite")
    cone = build_geometry(ctx)
    if suite == "index":
        checks = verify_index(ctx, cone.n)
    else:
        runner = {"contour": verify_contour, "cutoffs": verify_cutoffs, "bound": verify_bound,
                  "matching": verify_matching, "orders": verify_orders}[suite]
        checks = runner(ctx, cone)
    passed = all(c["passed"] for c in checks)
    ctx.write_json("report.json", {"suite": suite, "geometry": cone.label(), "passed": passed,
                                   "checks": checks})
    for c in checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}: expected {c['expected']}, "
              f"got {c['actual']}")
    return EXIT_OK if passed else EXIT_NUMERIC


HANDLERS = {"spectrum": cmd_spectrum, "heat": cmd_heat, "resolvent": cmd_resolvent,
            "rtrace": cmd_rtrace, "zeta": cmd_zeta, "det": cmd_det, "verify": cmd_verify}


def build_parser():
    p = argparse.ArgumentParser(prog="conicheat",
                                description="Heat kernels, renormalized traces and "
                                            "determinants on exact cones.")
    p.add_argument("--version", action="version", version=f"conicheat {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("config", help="YAML experiment configuration")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override a config entry, e.g. task.t=2.0")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = validate_config(apply_overrides(cfg, args.overrides))
        ctx = Context(cfg, Path(args.config).resolve().parent, args.command)
        if args.out:
            ctx.out_dir = Path(args.out)
        return HANDLERS[args.command](ctx)
    except (ConfigError, InvalidGeometryError, SpectrumParseError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConicHeatError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def entry_point():
    sys.exit(main())
