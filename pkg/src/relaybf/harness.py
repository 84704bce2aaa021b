"""Scenario sweeps: solve, round, simulate, and emit CSV + SVG.

A scenario file (INI syntax) describes the network in paper units (power
thresholds in dB, noise variances linear), one sweep directive, and run
parameters.  Each sweep point is averaged over seeded channel trials;
channels are shared across sweep points (paired comparisons) while
rounding/simulation streams are split per (point, trial), so results are
reproducible and independent of worker scheduling.

CSV is the canonical output (one file per sweep, LF endings); every CSV
gets a minimal standalone SVG line chart with the same basename.
"""

from __future__ import annotations

import concurrent.futures
import configparser
import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from . import bounds as bounds_mod
from .forms import build_constraints, build_user_forms
from .network import derive_seed, generate_channels, split_stream, uniform_config
from .sdr import SdrError, UpperBoundError, randomize, solve_r1sdr, solve_r2sdr
from .signalchain import ber_run

SWEEP_KINDS = ("total_power", "per_relay_count", "primal_count", "ber_power", "bounds_lab")


class ConfigError(ValueError):
    """Malformed scenario file; message carries file:line anchors."""


class HarnessError(RuntimeError):
    """Too many failed trials to report a meaningful sweep."""


def db2lin(x: float) -> float:
    return 10.0 ** (x / 10.0)


def lin2db(x: float) -> float:
    return 10.0 * math.log10(x)


def qfunc(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


@dataclass(frozen=True)
class ScenarioSpec:
    """Parsed scenario: network template, sweep directive, run settings."""

    name: str
    architecture: str
    n_relays: int
    n_groups: int
    n_users: int
    tx_power_db: float = 0.0
    relay_noise: float = 0.25
    user_noise: float = 0.25
    total_power_db: float = None
    per_relay_db: float = None
    n_primal: int = 0
    primal_noise: float = 0.25
    primal_bound_db: float = None
    sweep_kind: str = "total_power"
    sweep_values: tuple = ()
    ber_blocks: int = 20000
    rho_grid: tuple = (0.01, 0.02, 0.05, 0.1, 0.2)
    v_grid: tuple = (2.0, 4.0, 8.0)
    samples: int = 100_000
    trials: int = 50
    candidates: int = 500
    seed: int = 1
    tol_gamma: float = 1e-3

    def config_at(self, value):
        """NetworkConfig (linear units) for one sweep point."""
        kind = self.sweep_kind
        total_db = self.total_power_db
        n_primal = self.n_primal
        if kind in ("total_power", "ber_power"):
            total_db = float(value)
        elif kind == "primal_count":
            n_primal = int(value)
        elif kind == "per_relay_count":
            pass  # constraint count filtered after building
        return uniform_config(
            self.architecture,
            self.n_relays,
            self.n_groups,
            self.n_users,
            tx_power=db2lin(self.tx_power_db),
            relay_noise=self.relay_noise,
            user_noise=self.user_noise,
            total_power=None if total_db is None else db2lin(total_db),
            per_relay_power=None if self.per_relay_db is None else db2lin(self.per_relay_db),
            n_primal=n_primal,
            primal_noise=self.primal_noise,
            primal_bound=None if self.primal_bound_db is None else db2lin(self.primal_bound_db),
        )


def _sweep_column(kind: str) -> str:
    return {
        "total_power": "P0_dB",
        "ber_power": "P0_dB",
        "per_relay_count": "n_per_relay",
        "primal_count": "n_primal",
    }[kind]


# ---------------------------------------------------------------------------
# per-trial work (module level so process pools can pickle it)
# ---------------------------------------------------------------------------


def _active_constraints(spec, cons, value):
    if spec.sweep_kind != "per_relay_count":
        return cons
    keep = []
    for c in cons:
        if c.label.startswith("relay"):
            if int(c.label[5:]) < int(value):
                keep.append(c)
        else:
            keep.append(c)
    return keep


def trial_sweep(spec: ScenarioSpec, point_idx: int, value, trial: int):
    """One (sweep point, trial): solve both relaxations and round both."""
    cfg = spec.config_at(value)
    r = generate_channels(cfg, derive_seed(spec.seed, 1, trial))
    users = build_user_forms(r, cfg)
    cons = _active_constraints(spec, build_constraints(r, cfg), value)
    try:
        s1 = solve_r1sdr(users, cons, tol_gamma=spec.tol_gamma)
        s2 = solve_r2sdr(users, cons, tol_gamma=spec.tol_gamma)
        if s1.status != "optimal" or s2.status != "optimal":
            return {"ok": False}
        # Streams derive from (seed, trial) alone so the same candidate
        # draws back every sweep point of a trial: across-point comparisons
        # stay paired in both the channel and the rounding randomness.
        rng = split_stream(spec.seed, 2, trial)
        p1 = randomize(s1, users, cons, spec.candidates, rng)
        p2 = randomize(s2, users, cons, spec.candidates, rng)
    except UpperBoundError:
        return {"ok": False, "ub_violation": True}
    except SdrError:
        return {"ok": False}
    row = {
        "ok": True,
        "r1sdr_obj": s1.gamma_star,
        "r2sdr_obj": s2.gamma_star,
        "bf_rounded": p1.min_sinr,
        "bfa_rounded": p2.min_sinr,
    }
    if spec.sweep_kind == "ber_power":
        rng_b = split_stream(spec.seed, 3, trial)
        ber_bf = ber_run(cfg, r, p1.w1, None, spec.ber_blocks, rng_b)
        ber_bfa = ber_run(cfg, r, p2.w1, p2.w2, spec.ber_blocks, rng_b)
        row["bf_ber"] = float(ber_bf.max())
        row["bfa_ber"] = float(ber_bfa.max())
        # SDR-bound BER: a fictitious AWGN channel at the relaxation SINR.
        row["r1sdr_ber"] = qfunc(math.sqrt(s1.gamma_star))
        row["r2sdr_ber"] = qfunc(math.sqrt(s2.gamma_star))
    return row


def trial_bounds(spec: ScenarioSpec, trial: int):
    """One bounds-lab trial: R2SDR output, lemma tail reports."""
    cfg = spec.config_at(None)
    r = generate_channels(cfg, derive_seed(spec.seed, 1, trial))
    users = build_user_forms(r, cfg)
    cons = build_constraints(r, cfg)
    try:
        s2 = solve_r2sdr(users, cons, tol_gamma=spec.tol_gamma)
        if s2.status != "optimal":
            return {"ok": False}
    except SdrError:
        return {"ok": False}
    # Analyze the binding user and the tightest power cap.
    ratios = []
    for u in users:
        num = float(np.vdot(u.a, s2.x1).real + np.vdot(u.abar, s2.x2).real)
        den = float(np.vdot(u.c, s2.x1).real + np.vdot(u.cbar, s2.x2).real)
        ratios.append(num / (den + 1.0))
    worst_user = users[int(np.argmin(ratios))]
    utils = [
        (float(np.vdot(c.d, s2.x1).real + np.vdot(c.dbar, s2.x2).real) / c.bound, j)
        for j, c in enumerate(cons)
    ]
    tight = cons[max(utils)[1]]
    rng = split_stream(spec.seed, 4, trial)
    rep1 = bounds_mod.lemma1_empirical(
        s2.x1, s2.x2, worst_user, spec.rho_grid, spec.samples, rng
    )
    rep2 = bounds_mod.lemma2_empirical(s2.x1, s2.x2, tight, spec.v_grid, spec.samples, rng)
    return {"ok": True, "gamma": s2.gamma_star, "lemma1": rep1, "lemma2": rep2}


# ---------------------------------------------------------------------------
# sweep driver
# ---------------------------------------------------------------------------


def _run_tasks(tasks, fn, threads):
    """Evaluate fn over keyed tasks, order-independently."""
    results = {}
    if threads <= 1:
        for key, args in tasks:
            results[key] = fn(*args)
        return results
    with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
        futures = {pool.submit(fn, *args): key for key, args in tasks}
        for fut in concurrent.futures.as_completed(futures):
            results[futures[fut]] = fut.result()
    return results


def run_scenario(spec: ScenarioSpec, out_dir, threads: int = 1):
    """Execute the sweep, write CSV + SVG, return paths and the table."""
    os.makedirs(out_dir, exist_ok=True)
    if spec.sweep_kind == "bounds_lab":
        return _run_bounds_lab(spec, out_dir, threads)

    tasks = [
        ((pi, t), (spec, pi, value, t))
        for pi, value in enumerate(spec.sweep_values)
        for t in range(spec.trials)
    ]
    results = _run_tasks(tasks, trial_sweep, threads)

    n_fail = sum(1 for r in results.values() if not r["ok"])
    n_ub = sum(1 for r in results.values() if r.get("ub_violation"))
    if n_fail > 0.2 * len(tasks):
        raise HarnessError(f"{n_fail}/{len(tasks)} trials failed; aborting sweep")

    ber = spec.sweep_kind == "ber_power"
    header = [_sweep_column(spec.sweep_kind), "r1sdr_obj", "r2sdr_obj", "bf_rounded", "bfa_rounded"]
    if ber:
        header += ["r1sdr_ber", "r2sdr_ber", "bf_ber", "bfa_ber"]
    header.append("failures")

    rows = []
    for pi, value in enumerate(spec.sweep_values):
        got = [results[(pi, t)] for t in range(spec.trials)]
        good = [g for g in got if g["ok"]]
        fails = len(got) - len(good)
        if not good:
            raise HarnessError(f"all trials failed at sweep point {value}")
        row = [float(value)]
        for col in header[1:-1]:
            row.append(float(np.mean([g[col] for g in good])))
        row.append(fails)
        rows.append(row)

    csv_path = os.path.join(out_dir, f"{spec.name}.csv")
    _write_csv(csv_path, header, rows)
    svg_path = os.path.join(out_dir, f"{spec.name}.svg")
    xcol = np.array([r[0] for r in rows])
    if ber:
        series = {name: np.array([r[header.index(name)] for r in rows])
                  for name in ("r1sdr_ber", "r2sdr_ber", "bf_ber", "bfa_ber")}
        _write_svg(svg_path, spec.name, _sweep_column(spec.sweep_kind), "worst-user BER",
                   xcol, series, logy=True)
    else:
        series = {name: np.array([r[header.index(name)] for r in rows])
                  for name in ("r1sdr_obj", "r2sdr_obj", "bf_rounded", "bfa_rounded")}
        _write_svg(svg_path, spec.name, _sweep_column(spec.sweep_kind), "min SINR (linear)",
                   xcol, series)
    return {"csv": [csv_path], "svg": [svg_path], "header": header, "rows": rows,
            "failures": n_fail, "ub_violations": n_ub, "raw": results}


def _run_bounds_lab(spec: ScenarioSpec, out_dir, threads):
    tasks = [((t,), (spec, t)) for t in range(spec.trials)]
    results = _run_tasks(tasks, trial_bounds, threads)
    n_fail = sum(1 for r in results.values() if not r["ok"])
    if n_fail > 0.2 * max(len(tasks), 1):
        raise HarnessError(f"{n_fail}/{len(tasks)} trials failed; aborting bounds lab")

    csv_paths, svg_paths = [], []
    summary_rows = []
    for t in range(spec.trials):
        res = results[(t,)]
        if not res["ok"]:
            continue
        for tag in ("lemma1", "lemma2"):
            rep = res[tag]
            path = os.path.join(out_dir, f"{spec.name}_{tag}_t{t:03d}.csv")
            rep.to_csv(path)
            csv_paths.append(path)
            svg = path[:-4] + ".svg"
            _write_svg(
                svg,
                f"{spec.name} {tag} trial {t}",
                "rho" if tag == "lemma1" else "v",
                "tail probability",
                rep.grid,
                {"empirical": rep.empirical, "bound": rep.analytic},
                logy=True,
            )
            svg_paths.append(svg)
        summary_rows.append(
            [t, res["gamma"], res["lemma1"].omega,
             res["lemma1"].violations(), res["lemma2"].violations()]
        )
    summary = os.path.join(out_dir, f"{spec.name}_summary.csv")
    _write_csv(summary, ["trial", "gamma_star", "omega", "lemma1_violations", "lemma2_violations"],
               summary_rows)
    csv_paths.append(summary)
    if summary_rows:
        svg = summary[:-4] + ".svg"
        _write_svg(
            svg,
            f"{spec.name} summary",
            "trial",
            "value",
            np.array([row[0] for row in summary_rows], dtype=float),
            {
                "gamma_star": np.array([row[1] for row in summary_rows]),
                "omega": np.array([row[2] for row in summary_rows]),
            },
        )
        svg_paths.append(svg)
    return {"csv": csv_paths, "svg": svg_paths, "rows": summary_rows, "failures": n_fail}


# ---------------------------------------------------------------------------
# output writers
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.10g}"


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _write_svg(path, title, xlabel, ylabel, x, series, logy=False):
    """Minimal standalone line chart; no plotting dependency."""
    width, height = 640, 440
    ml, mr, mt, mb = 70, 20, 36, 52
    pw, ph = width - ml - mr, height - mt - mb
    x = np.asarray(x, dtype=float)

    def ty(vals):
        vals = np.asarray(vals, dtype=float)
        if logy:
            return np.log10(np.clip(vals, 1e-12, None))
        return vals

    ys = np.concatenate([ty(v) for v in series.values()])
    ys = ys[np.isfinite(ys)]
    ylo, yhi = (float(ys.min()), float(ys.max())) if ys.size else (0.0, 1.0)
    if yhi - ylo < 1e-12:
        yhi = ylo + 1.0
    xlo, xhi = float(x.min()), float(x.max())
    if xhi - xlo < 1e-12:
        xhi = xlo + 1.0

    def px(v):
        return ml + (v - xlo) / (xhi - xlo) * pw

    def py(v):
        return mt + (1.0 - (v - ylo) / (yhi - ylo)) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<text x="{width/2:.0f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="{ml + pw/2:.0f}" y="{height-12}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="16" y="{mt + ph/2:.0f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {mt + ph/2:.0f})">{ylabel}</text>',
    ]
    for i in range(5):
        xv = xlo + i * (xhi - xlo) / 4
        yv = ylo + i * (yhi - ylo) / 4
        parts.append(
            f'<line x1="{px(xv):.1f}" y1="{mt+ph}" x2="{px(xv):.1f}" y2="{mt+ph+4}" stroke="black"/>'
            f'<text x="{px(xv):.1f}" y="{mt+ph+18}" text-anchor="middle" font-size="10">{xv:.3g}</text>'
        )
        lab = f"1e{yv:.2f}" if logy else f"{yv:.3g}"
        parts.append(
            f'<line x1="{ml-4}" y1="{py(yv):.1f}" x2="{ml}" y2="{py(yv):.1f}" stroke="black"/>'
            f'<text x="{ml-8}" y="{py(yv)+3:.1f}" text-anchor="end" font-size="10">{lab}</text>'
        )
    for i, (name, vals) in enumerate(series.items()):
        color = _SVG_COLORS[i % len(_SVG_COLORS)]
        pts = " ".join(
            f"{px(xx):.2f},{py(yy):.2f}"
            for xx, yy in zip(x, ty(vals))
            if np.isfinite(yy)
        )
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = mt + 16 + 16 * i
        parts.append(
            f'<line x1="{ml+pw-150}" y1="{ly}" x2="{ml+pw-126}" y2="{ly}" stroke="{color}" stroke-width="2"/>'
            f'<text x="{ml+pw-120}" y="{ly+4}" font-size="11">{name}</text>'
        )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
    return path


# ---------------------------------------------------------------------------
# scenario files
# ---------------------------------------------------------------------------


def _key_line(text: str, key: str) -> int:
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith(key) and stripped[len(key):].lstrip()[:1] in ("=", ":"):
            return i
    return 0


def parse_scenario(path) -> ScenarioSpec:
    """Parse a scenario file; raises ConfigError with file:line anchors."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from exc

    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    def fail(key, msg):
        line = _key_line(text, key)
        raise ConfigError(f"{path}:{line}: {key}: {msg}")

    def get(section, key, conv, default=None, required=False):
        if not parser.has_option(section, key):
            if required:
                raise ConfigError(f"{path}: missing required key {key!r} in [{section}]")
            return default
        raw = parser.get(section, key).strip()
        try:
            return conv(raw)
        except (TypeError, ValueError):
            fail(key, f"cannot parse value {raw!r}")

    def floats(raw):
        return tuple(float(v) for v in raw.replace(",", " ").split())

    if not parser.has_section("network"):
        raise ConfigError(f"{path}: missing [network] section")
    if not parser.has_section("sweep"):
        raise ConfigError(f"{path}: missing [sweep] section")

    arch = get("network", "architecture", str, required=True)
    if arch not in ("distributed", "mimo"):
        fail("architecture", f"must be 'distributed' or 'mimo', got {arch!r}")
    kind = get("sweep", "kind", str, required=True)
    if kind not in SWEEP_KINDS:
        fail("kind", f"must be one of {SWEEP_KINDS}")
    values = get("sweep", "values", floats, default=())
    if kind != "bounds_lab" and not values:
        fail("values", "sweep needs at least one value")

    name = os.path.splitext(os.path.basename(str(path)))[0]
    spec = ScenarioSpec(
        name=name,
        architecture=arch,
        n_relays=get("network", "relays", int, required=True),
        n_groups=get("network", "groups", int, required=True),
        n_users=get("network", "users", int, required=True),
        tx_power_db=get("network", "tx_power_db", float, default=0.0),
        relay_noise=get("network", "relay_noise", float, default=0.25),
        user_noise=get("network", "user_noise", float, default=0.25),
        total_power_db=get("network", "total_power_db", float),
        per_relay_db=get("network", "per_relay_db", float),
        n_primal=get("network", "primal_users", int, default=0),
        primal_noise=get("network", "primal_noise", float, default=0.25),
        primal_bound_db=get("network", "primal_bound_db", float),
        sweep_kind=kind,
        sweep_values=values,
        ber_blocks=get("sweep", "ber_blocks", int, default=20000),
        rho_grid=get("sweep", "rho_grid", floats, default=(0.01, 0.02, 0.05, 0.1, 0.2)),
        v_grid=get("sweep", "v_grid", floats, default=(2.0, 4.0, 8.0)),
        samples=get("sweep", "samples", int, default=100_000),
        trials=get("run", "trials", int, default=50) if parser.has_section("run") else 50,
        candidates=get("run", "candidates", int, default=500) if parser.has_section("run") else 500,
        seed=get("run", "seed", int, default=1) if parser.has_section("run") else 1,
        tol_gamma=get("run", "tol_gamma", float, default=1e-3) if parser.has_section("run") else 1e-3,
    )
    _validate_spec(spec, path, text)
    return spec


def _validate_spec(spec: ScenarioSpec, path, text):
    def fail(key, msg):
        raise ConfigError(f"{path}:{_key_line(text, key)}: {key}: {msg}")

    if spec.n_users % spec.n_groups:
        fail("users", "users must split equally across groups")
    if spec.sweep_kind == "per_relay_count":
        if spec.per_relay_db is None:
            fail("per_relay_db", "required for a per_relay_count sweep")
        if spec.total_power_db is None:
            fail("total_power_db", "required for a per_relay_count sweep")
        if any(not float(v).is_integer() or v < 0 or v > spec.n_relays for v in spec.sweep_values):
            fail("values", f"per-relay counts must be integers in 0..{spec.n_relays}")
    if spec.sweep_kind == "primal_count":
        if spec.primal_bound_db is None:
            fail("primal_bound_db", "required for a primal_count sweep")
        if spec.total_power_db is None:
            fail("total_power_db", "required for a primal_count sweep")
        if any(not float(v).is_integer() or v < 0 for v in spec.sweep_values):
            fail("values", "primal-user counts must be nonnegative integers")
    if spec.n_primal > 0 and spec.primal_bound_db is None:
        fail("primal_users", "primal users need primal_bound_db")
    if spec.sweep_kind == "bounds_lab":
        if spec.total_power_db is None and spec.per_relay_db is None:
            fail("total_power_db", "bounds lab needs at least one power cap")
        if any(not 0 < r < 0.5 for r in spec.rho_grid):
            fail("rho_grid", "rho values must lie in (0, 0.5)")
        if any(v < 2 for v in spec.v_grid):
            fail("v_grid", "v values must be >= 2")
    if spec.trials < 1:
        fail("trials", "must be >= 1")
    if spec.candidates < 1:
        fail("candidates", "must be >= 1")
