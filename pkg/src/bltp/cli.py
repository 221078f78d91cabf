"""Command line front end.

    bltp simulate --config run.json --output-dir out/
    bltp fields | selfforce | diagnostics | bessel-selftest ...

Every subcommand is deterministic: identical configs produce byte-identical
files.  JSON reports embed the resolved configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import _backend, bessel
from .config import parse_config
from .dynamics import TRAJECTORY_COLUMNS, solve_multi
from .emtensor import em_tensor_at, richardson, worldtube_flux
from .errors import BLTPError
from .fields import Particle, field_batch
from .geometry import four_velocity, minkowski_dot
from .selfforce import self_eb_batch, self_force_four_batch
from .worldline import CSV_COLUMNS, Worldline, format_float, smooth_kick

log = logging.getLogger("bltp")

FIELD_COLUMNS = ("t", "x", "y", "z", "A0", "A1", "A2", "A3",
                 "Ex", "Ey", "Ez", "Bx", "By", "Bz", "gauge_residual")
SELFFORCE_COLUMNS = ("t", "tau", "f0", "f1", "f2", "f3", "Ex", "Ey", "Ez", "Bx", "By", "Bz")


# ---------------------------------------------------------------------------
# output helpers

def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(x) for x in row])


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, payload):
    text = json.dumps(_plain(payload), indent=2, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + "\n")


def _per_particle(name, particle, count):
    if count == 1:
        return name
    stem, dot, ext = name.rpartition(".")
    return f"{stem}_{particle}.{ext}" if dot else f"{name}_{particle}"


def _map(fn, items, threads):
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# scenario plumbing

def _rest_particles(cfg):
    return [Particle(p.charge, p.mass, cfg.kappa, Worldline.at_rest(p.position, cfg.solver.A0))
            for p in cfg.particles]


def _simulate(cfg, threads):
    forces = [p.force for p in cfg.particles]
    return solve_multi(_rest_particles(cfg), forces, cfg.solver, threads=threads)


def _source(cfg, threads, name):
    """Particle with a finished worldline: the prescribed kick, or a simulated history."""
    sc = cfg.section("scenario")
    idx = cfg.particle_index(name)
    spec = cfg.particles[idx]
    pr = sc["prescribed"]
    if pr is not None and pr["particle"] == name:
        w = smooth_kick(pr["speed"], pr["ramp"], pr["direction"], pr["t_kick"], sc["t_end"], pr["h"],
                        spec.position)
        return [Particle(spec.charge, spec.mass, cfg.kappa, w)], 0
    result = _simulate(cfg, threads)
    return [Particle(p.charge, p.mass, cfg.kappa, w) for p, w in zip(cfg.particles, result.worldlines)], idx


def _fibonacci_dirs(n):
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    phi = np.pi * (1.0 + 5**0.5) * i
    r = np.sqrt(1.0 - z * z)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def _probe_points(w, n, r_lo, r_hi, lo=0.2, hi=0.8):
    """Deterministic off-worldline events spread along the history."""
    span = w.t_end - w.t_start
    ts = w.t_start + span * np.linspace(lo, hi, n)
    radii = np.geomspace(r_lo, r_hi, n) if n > 1 else np.array([r_lo])
    q = w.position(ts)
    return np.column_stack([ts, q + radii[:, None] * _fibonacci_dirs(n)])


# ---------------------------------------------------------------------------
# subcommands

def cmd_simulate(cfg, out, threads):
    result = _simulate(cfg, threads)
    names = [p.name for p in cfg.particles]
    files = cfg.section("output")
    summary = {}
    for n, name in enumerate(names):
        write_csv(out / _per_particle(files["trajectory"], name, len(names)), TRAJECTORY_COLUMNS, result.rows(n))
        w = result.worldlines[n]
        write_csv(out / _per_particle(files["worldline"], name, len(names)), CSV_COLUMNS,
                  np.column_stack([w.t, w.q, w.p]))
        speed = np.linalg.norm(result.v[n], axis=1)
        # reported only: nothing is asserted about late-time behaviour
        tail = result.t >= result.t[-1] - 0.1 * (result.t[-1] - result.t[0])
        drift = float(np.max(np.linalg.norm(result.v[n][tail] - result.v[n][-1], axis=1)))
        summary[name] = {"max_speed": float(speed.max()), "final_momentum": result.p[n][-1],
                         "final_velocity": result.v[n][-1], "late_velocity_drift": drift}
    ratios = [e["ratio"] for e in result.contraction_log]
    write_json(out / files["report"], {
        "config": cfg.data,
        "backend": _backend.BACKEND,
        "particles": summary,
        "windows": len(result.contraction_log),
        "max_contraction_ratio": max(ratios) if ratios else 0.0,
        "contraction_log": result.contraction_log,
        "tail_bounds": result.tail_bounds,
    })
    return 0


def _field_points(cfg):
    fl = cfg.section("fields")
    if "points" in fl:
        return np.array(fl["points"], dtype=float)
    line = fl["line"]
    s = np.linspace(0.0, 1.0, line["n"]) if line["n"] > 1 else np.zeros(1)
    a, b = np.array(line["start"], float), np.array(line["end"], float)
    return a + s[:, None] * (b - a)


def cmd_fields(cfg, out, threads):
    particles, _ = _source(cfg, threads, cfg.section("diagnostics")["particle"])
    X = _field_points(cfg)
    tol = cfg.section("fields")["tol"]

    def chunk(rows):
        A = np.zeros((rows.shape[0], 4))
        F = np.zeros((rows.shape[0], 4, 4))
        g = np.zeros(rows.shape[0])
        for p in particles:
            r = field_batch(p, rows, want=("A", "F", "gauge"), tol=tol)
            A += r["A"]
            F += r["F"]
            g += p.charge * r["gauge"]
        return A, F, g

    parts = _map(chunk, np.array_split(X, max(1, min(threads, X.shape[0]))), threads)
    A = np.concatenate([p[0] for p in parts])
    F = np.concatenate([p[1] for p in parts])
    g = np.concatenate([p[2] for p in parts])
    E = F[:, 1:, 0]
    B = np.column_stack([F[:, 2, 3], F[:, 3, 1], F[:, 1, 2]])
    write_csv(out / cfg.section("output")["fields"], FIELD_COLUMNS, np.column_stack([X, A, E, B, g]))
    return 0


def _sample_times(w, t0, t1, n):
    t0 = max(t0, w.t_start)
    t1 = min(t1, w.t_end)
    return np.linspace(t0, t1, n) if n > 1 else np.array([t1])


def cmd_selfforce(cfg, out, threads):
    sf = cfg.section("selfforce")
    particles, idx = _source(cfg, threads, cfg.section("diagnostics")["particle"])
    p = particles[idx]
    ts = _sample_times(p.worldline, sf["t_start"], sf["t_end"], sf["samples"])
    chunks = np.array_split(ts, max(1, min(threads, ts.size)))
    parts = _map(lambda c: (self_force_four_batch(p, c, sf["tol"]), *self_eb_batch(p, c, sf["tol"])), chunks, threads)
    f = np.concatenate([x[0] for x in parts])
    E = np.concatenate([x[1] for x in parts])
    B = np.concatenate([x[2] for x in parts])
    tau = np.array([p.worldline.proper_time(t) for t in ts])
    write_csv(out / cfg.section("output")["selfforce"], SELFFORCE_COLUMNS, np.column_stack([ts, tau, f, E, B]))
    return 0


def _slope(x, y):
    x, y = np.log(np.asarray(x)), np.log(np.asarray(y))
    return float(np.polyfit(x, y, 1)[0])


def _divergence(p, x, h, tol):
    d = np.zeros(4)
    for c in range(4):
        dx = np.zeros(4)
        dx[c] = h
        d += (em_tensor_at([p], x + dx, tol)[:, c] - em_tensor_at([p], x - dx, tol)[:, c]) / (2 * h)
    return d


def flux_row(p, tau, eps, tol):
    """Tube-flux ladder at ``tau`` against the self-force, as reported by ``diagnostics``."""
    w = p.worldline
    t = w.time_at_proper(tau)
    ref = -self_force_four_batch(p, [t], min(tol, 1e-11))[0]
    ladder = np.array([worldtube_flux(p, tau, e, tol=tol) for e in eps])
    ext = richardson(ladder, eps)
    scale = np.max(np.abs(ref))
    denom = np.where(np.abs(ref) > 1e-3 * scale, np.abs(ref), scale)
    resid = np.max(np.abs(ladder - ref), axis=1)
    return {"tau": tau, "t": t, "epsilons": list(eps), "fluxes": ladder, "extrapolated": ext,
            "reference": ref, "relative_error": np.abs(ext - ref) / denom,
            "residuals": resid, "residual_slope": _slope(eps, resid)}


def cmd_diagnostics(cfg, out, threads):
    dg = cfg.section("diagnostics")
    particles, idx = _source(cfg, threads, dg["particle"])
    p = particles[idx]
    w = p.worldline
    k = cfg.kappa
    tol = dg["tol"]
    report = {"config": cfg.data, "backend": _backend.BACKEND, "particle": dg["particle"]}

    gauge = []
    if dg["gauge"]:
        X = _probe_points(w, dg["gauge_points"], 0.05 / k, 5.0 / k)
        g = field_batch(p, X, want=("gauge",), tol=tol)["gauge"]
        gauge = [{"x": x, "residual": r} for x, r in zip(X, g)]
    report["gauge_residuals"] = {"points": gauge,
                                 "max_abs": max((abs(e["residual"]) for e in gauge), default=0.0)}

    slopes = []
    if dg["divergence"]:
        hs = dg["divergence_h"]
        X = _probe_points(w, dg["divergence_points"], 1.0 / k, 3.0 / k, 0.4, 0.7)

        def one(x):
            norms = [float(np.linalg.norm(_divergence(p, x, h, min(tol, 1e-12)))) for h in hs]
            return {"x": x, "norms": norms, "slope": _slope(hs, norms)}

        slopes = _map(one, list(X), threads)
    report["divergence_slopes"] = {"h": dg["divergence_h"], "points": slopes,
                                   "min_slope": min((s["slope"] for s in slopes), default=None)}

    rows = []
    if dg["flux"]:
        tau_max = w.proper_time(w.t_end)
        taus = [t for t in dg["flux_taus"] if 0 < t < tau_max]
        rows = _map(lambda tau: flux_row(p, tau, dg["flux_epsilons"], tol), taus, threads)
    report["flux_table"] = rows

    ts = _sample_times(w, w.t_start, w.t_end, dg["selfforce_samples"] + 1)[1:]
    f = self_force_four_batch(p, ts)
    E, B = self_eb_batch(p, ts)
    _, v, _ = w.evaluate(ts)
    u = four_velocity(v)
    gamma = u[:, 0:1]
    spatial_eb = p.charge * gamma * (E + np.cross(v, B))
    scale = np.maximum(np.linalg.norm(f[:, 1:], axis=1), 1e-300)
    report["selfforce_comparison"] = {
        "t": ts,
        "covariant": f,
        "three_plus_one": spatial_eb,
        "relative_difference": np.linalg.norm(f[:, 1:] - spatial_eb, axis=1) / scale,
        "u_dot_f": minkowski_dot(u, f),
    }
    write_json(out / cfg.section("output")["diagnostics"], report)
    return 0


def cmd_bessel_selftest(cfg, out, threads):
    report = bessel.selftest_report()
    if cfg is not None:
        report["config"] = cfg.data
        write_json(out / cfg.section("output")["bessel"], report)
    else:
        write_json(out / "bessel_selftest.json", report)
    sys.stdout.write(json.dumps(_plain(report), indent=2, sort_keys=True) + "\n")
    return 0 if report["passed"] else 1


COMMANDS = {
    "simulate": cmd_simulate,
    "fields": cmd_fields,
    "selfforce": cmd_selfforce,
    "diagnostics": cmd_diagnostics,
    "bessel-selftest": cmd_bessel_selftest,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="bltp", description="Retarded-field dynamics of extended-kernel point charges.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=name != "bessel-selftest", help="JSON run configuration")
        sp.add_argument("--output-dir", default=".", help="directory for CSV and JSON outputs")
        sp.add_argument("--threads", type=int, default=1, help="worker threads for independent evaluations")
        sp.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"])
    return parser


def run(command, cfg, output_dir=".", threads=1):
    """Run one subcommand on a parsed config; returns the exit status."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return COMMANDS[command](cfg, out, max(1, threads))


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(args.config) if args.config else None
        return run(args.command, cfg, args.output_dir, args.threads)
    except BLTPError as exc:
        log.error("%s", exc)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
