"""Experiment runner: config in, CSVs + SVG + JSON manifest out.

Each kind produces a metrics dict; ``[checks]`` entries of the form
``<metric>_min`` / ``<metric>_max`` become the run's embedded checks.
CSV output is a pure function of the config, whatever the thread count.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .config import (
    ExperimentConfig,
    build_cost,
    build_family,
    build_reference,
    build_source,
    load_config,
)
from .dynsys import ConfigurationError, IIDBinary, MarkovChain, SubshiftSFT
from .search import thread_count

# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------


def fmt(v) -> str:
    """CSV cell text: 17 significant digits for floats, exact text for rationals."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, Fraction):
        return "%.17g" % float(v)
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    path.write_text(buf.getvalue(), encoding="utf-8")


def line_plot_svg(xs, ys, title: str, xlabel: str, ylabel: str, floor: float = 1e-12) -> str:
    """Static log-log polyline plot; zero or negative values are drawn at ``floor``."""
    W, H, m = 480, 320, 56
    lx = [math.log10(x) for x in xs]
    ly = [math.log10(max(y, floor)) for y in ys]

    def span(v):
        lo, hi = min(v), max(v)
        return (lo - 0.5, hi + 0.5) if hi - lo < 1e-9 else (lo, hi)

    (x0, x1), (y0, y1) = span(lx), span(ly)
    px = [m + (v - x0) / (x1 - x0) * (W - 2 * m) for v in lx]
    py = [H - m - (v - y0) / (y1 - y0) * (H - 2 * m) for v in ly]
    pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
    dots = "".join(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="3"/>' for a, b in zip(px, py))
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">\n'
        f'<rect width="{W}" height="{H}" fill="white"/>\n'
        f'<line x1="{m}" y1="{H - m}" x2="{W - m}" y2="{H - m}" stroke="black"/>\n'
        f'<line x1="{m}" y1="{m}" x2="{m}" y2="{H - m}" stroke="black"/>\n'
        f'<text x="{W / 2}" y="{m / 2}" text-anchor="middle">{title}</text>\n'
        f'<text x="{W / 2}" y="{H - 16}" text-anchor="middle">{xlabel} (log10 {x0:.2f}..{x1:.2f})</text>\n'
        f'<text x="16" y="{H / 2}" transform="rotate(-90 16 {H / 2})" text-anchor="middle">'
        f'{ylabel} (log10 {y0:.2f}..{y1:.2f})</text>\n'
        f'<polyline points="{pts}" fill="none" stroke="steelblue" stroke-width="2"/>\n'
        f'<g fill="steelblue">{dots}</g>\n</svg>\n'
    )


# --------------------------------------------------------------------------
# runs
# --------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    value: float
    bound: float
    op: str
    passed: bool


@dataclass
class RunManifest:
    kind: str
    config_hash: str
    versions: dict
    seed: int
    outputs: list
    wall_time: float
    metrics: dict
    checks: list = field(default_factory=list)
    out_dir: str = ""

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def to_json(self) -> str:
        d = asdict(self)
        d["passed"] = self.passed
        return json.dumps(d, indent=2, sort_keys=True, default=float) + "\n"


def _schedule(cfg, sec, default):
    s = cfg.get(sec, "schedule")
    s = list(s) if s else list(default)
    if not s or any(b <= a for a, b in zip(s, s[1:])) or s[0] < 1:
        raise ConfigurationError(f"{sec}.schedule must be increasing positive integers")
    return s


def _run_track(cfg: ExperimentConfig, out: Path, threads: int):
    from .joining import build_instance, process_blocks, solve
    from .tracking import track_limit_estimate

    ref = build_reference(cfg.section("reference"))
    src = build_source(cfg.section("source"), cfg.seed)
    cost = build_cost(cfg.section("cost"))
    sched = _schedule(cfg, "track", [2 ** j for j in range(4, 11)])
    res = cfg.get("track", "resolution", 1000)
    trace = track_limit_estimate(ref, cost, src, sched, res, threads)
    (out / "trace.csv").write_text(trace.to_csv(), encoding="utf-8")
    vals = trace.values
    metrics = {"final_value": vals[-1], "min_value": min(vals), "max_value": max(vals)}
    lp_level = cfg.get("track", "lp_level")
    if lp_level and isinstance(ref, SubshiftSFT):
        inst = build_instance(ref, process_blocks(src, lp_level + 1), cost, lp_level)
        lp = solve(inst, mode="rational").value
        metrics["lp_value"] = float(lp)
        metrics["gap"] = vals[-1] - float(lp)
    return ["trace.csv"], metrics


def _run_joinlp(cfg, out, threads):
    from .joining import build_instance, process_blocks, solve

    ref = build_reference(cfg.section("reference"))
    if not isinstance(ref, SubshiftSFT):
        raise ConfigurationError("joinlp needs a shift reference")
    src = build_source(cfg.section("source"), cfg.seed)
    cost = build_cost(cfg.section("cost"))
    k_max = int(cfg.get("joinlp", "k_max", 1))
    mode = cfg.get("joinlp", "mode", "rational")
    cap = cfg.get("joinlp", "max_variables", 4096)
    rows, values, measure = [], [], []
    word = lambda w: "".join(str(int(v)) for v in w)  # noqa: E731
    for k in range(1, k_max + 1):
        inst = build_instance(ref, process_blocks(src, k + 1), cost, k, max_variables=cap)
        r = solve(inst, mode=mode)
        values.append(r.value)
        exact = str(r.value) if isinstance(r.value, Fraction) else ""
        rows.append((k, float(r.value), exact, float(r.product_value), inst.n_variables, r.status,
                     float(max(r.residuals.values(), default=0))))
        for (xb, yb), w in r.optimal_measure.items():
            if w:
                measure.append((k, word(xb), word(yb), float(w), str(w) if isinstance(w, Fraction) else ""))
    write_csv(out / "ladder.csv", ("k", "value", "exact", "product_value", "variables", "status",
                                   "max_residual"), rows)
    write_csv(out / "measure.csv", ("k", "x_block", "y_block", "weight", "exact"), measure)
    monotone = all(b >= a for a, b in zip(values, values[1:]))
    return ["ladder.csv", "measure.csv"], {"final_value": float(values[-1]), "first_value": float(values[0]),
                            "monotone": 1.0 if monotone else 0.0}


def _run_quantid(cfg, out, threads):
    from .quantized import RotationFamily, estimate_theta, generate

    q = cfg.section("quantid")
    alpha = q.get("alpha")
    if alpha is None:
        raise ConfigurationError("quantid.alpha is required")
    n = int(q.get("n", 50000))
    sched = _schedule(cfg, "quantid", [n])
    if sched[-1] > n:
        raise ConfigurationError("quantid.schedule exceeds quantid.n")
    fam = RotationFamily.from_spacing(q.get("theta_step", "1e-4"), q.get("u_step", "1e-3"),
                                      refine=q.get("refine", True))
    run = generate(alpha, q.get("p", 0.0), n, cfg.seed, u=q.get("u"))
    rows, errs = [], []
    for m in sched:
        est = estimate_theta(run.observed[:m], fam, threads)
        err = abs(float(est.theta_hat) - float(alpha))
        errs.append(err)
        rows.append((m, est.theta_hat, est.u_hat, est.min_risk, err))
    write_csv(out / "trace.csv", ("n", "theta_hat", "u_hat", "min_risk", "abs_error"), rows)
    (out / "convergence.svg").write_text(
        line_plot_svg(sched, errs, "rotation angle estimate", "n", "|theta_hat - alpha|"), encoding="utf-8")
    return ["trace.csv", "convergence.svg"], {"theta_error": errs[-1], "min_risk": rows[-1][3]}


def _run_complexity(cfg, out, threads):
    from .quantized import block_complexity

    c = cfg.section("complexity")
    n_max = int(c.get("n_max", 64))
    if "angle" in c:
        angle = c["angle"]
        thetas = [angle if isinstance(angle, Fraction) else Fraction(str(angle))]
    else:
        pts = int(c.get("theta_points", 500))
        thetas = [Fraction(i, 2 * (pts - 1)) for i in range(pts)] if pts > 1 else [Fraction(0)]
    rep = block_complexity(thetas, n_max)
    rows = [(n, cnt, h) for (n, cnt), (_, h) in zip(rep.counts, rep.entropy_estimates)]
    write_csv(out / "complexity.csv", ("n", "count", "entropy"), rows)
    return ["complexity.csv"], {
        "exponent": rep.exponent, "entropy_at_max": rep.entropy_estimates[-1][1],
        "entropy_decreasing": 1.0 if rep.entropy_decreasing_from(min(16, n_max)) else 0.0,
        "max_count": rep.counts[-1][1]}


def _marginal_mean(src):
    from .mle import GaussianIID

    if isinstance(src, MarkovChain):
        st = src.stationary()
        return float(sum(i * v for i, v in enumerate(st)))
    if isinstance(src, IIDBinary):
        return float(src.p)
    if isinstance(src, GaussianIID):
        return float(src.mean)
    return None


def _run_mle(cfg, out, threads):
    from .dynsys import sample
    from .mle import mle_estimate, target_set, tracking_route

    fam = build_family(cfg.section("mle"))
    src = build_source(cfg.section("source"), cfg.seed)
    sched = _schedule(cfg, "mle", [1000, 10000, 100000])
    u = sample(src, sched[-1])
    mean = _marginal_mean(src)
    target = target_set(fam, mean) if mean is not None else None
    res = mle_estimate(fam, u, sched, target, threads)
    via_tracking = tracking_route(fam, u, sched, threads)
    rows = [(n, th, ll, tt) for n, th, ll, tt in zip(res.n, res.theta_hat, res.loglik, via_tracking)]
    write_csv(out / "mle.csv", ("n", "theta_hat", "loglik", "tracking_theta_hat"), rows)
    metrics = {"routes_identical": 1.0 if via_tracking == res.theta_hat else 0.0}
    if target is not None and res.final is not None:
        metrics["theta_error"] = abs(res.final - target[0])
    return ["mle.csv"], metrics


def _run_acceptance(cfg, out, threads):
    from .acceptance import CRITERIA, run_criteria

    ids = list(cfg.get("acceptance", "criteria", ())) or sorted(CRITERIA)
    results = run_criteria(ids, seed=cfg.seed, threads=threads)
    write_csv(out / "acceptance.csv", ("criterion", "name", "passed", "detail"),
              [(r.id, r.name, r.passed, r.detail) for r in results])
    return ["acceptance.csv"], {f"criterion_{r.id}": 1.0 if r.passed else 0.0 for r in results}


RUNNERS = {"track": _run_track, "joinlp": _run_joinlp, "quantid": _run_quantid,
           "complexity": _run_complexity, "mle": _run_mle, "acceptance": _run_acceptance}


def _checks(cfg, metrics) -> list:
    out = []
    for key, bound in sorted(cfg.section("checks").items()):
        metric, op = key.rsplit("_", 1)
        if metric not in metrics:
            raise ConfigurationError(f"checks.{key}: run of kind {cfg.kind!r} has no metric {metric!r}; "
                                     f"available: {', '.join(sorted(metrics))}")
        v = float(metrics[metric])
        ok = v >= bound if op == "min" else v <= bound
        out.append(CheckResult(key, v, float(bound), ">=" if op == "min" else "<=", bool(ok)))
    if cfg.kind == "acceptance":
        out += [CheckResult(k, v, 1.0, ">=", v >= 1.0) for k, v in sorted(metrics.items())]
    return out


def run(config, out_dir, threads: int | None = None) -> RunManifest:
    """Execute one experiment and write its outputs plus ``manifest.json``."""
    cfg = load_config(config) if not isinstance(config, ExperimentConfig) else config
    if cfg.kind not in RUNNERS:
        raise ConfigurationError(f"unknown kind {cfg.kind!r}; registered: {', '.join(RUNNERS)}")
    t = thread_count(threads if threads is not None else cfg.threads)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    files, metrics = RUNNERS[cfg.kind](cfg, out, t)
    wall = time.perf_counter() - start
    (out / "config.ini").write_text(cfg.canonical(), encoding="utf-8")
    manifest = RunManifest(
        kind=cfg.kind, config_hash=cfg.digest(),
        versions={"ergotrack": __version__, "numpy": np.__version__, "kernels": kernels.BACKEND},
        seed=cfg.seed, outputs=files + ["config.ini"], wall_time=wall,
        metrics={k: float(v) for k, v in sorted(metrics.items())}, checks=_checks(cfg, metrics),
        out_dir=str(out))
    (out / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    return manifest


def split_seed(seed: int, index: int) -> int:
    """Independent per-value seed for sweeps."""
    return int(np.random.SeedSequence([int(seed), 0x5EE9, int(index)]).generate_state(1, np.uint64)[0])


def sweep(config, axis: str, values, out_dir, threads: int | None = None) -> list:
    """One run per value of a numeric field, then ``summary.csv`` over all runs."""
    cfg = load_config(config) if not isinstance(config, ExperimentConfig) else config
    values = list(values)
    if not values:
        raise ConfigurationError("sweep needs at least one value")
    out = Path(out_dir)
    manifests = []
    for i, raw in enumerate(values):
        c = cfg.with_value(axis, str(raw), numeric_only=True)
        c = c.with_value("experiment.seed", str(split_seed(cfg.seed, i)))
        manifests.append(run(c, out / f"run_{i:03d}", threads))
    keys = sorted({k for m in manifests for k in m.metrics})
    rows = [(i, v, m.seed, m.passed, *[m.metrics.get(k) for k in keys])
            for i, (v, m) in enumerate(zip(values, manifests))]
    write_csv(out / "summary.csv", ("run", axis, "seed", "passed", *keys), rows)
    return manifests


def default_out_dir(kind: str) -> str:
    return os.path.join("results", kind)
