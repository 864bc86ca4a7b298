"""Command-line runner: ``pathclass <scenario> --config <file> [--out <dir>] [--plot]``.

Exit status 0 when every check passes, 1 on a validation error (nothing is
written) and 2 when a numerical tolerance is missed.  Each scenario writes CSV
tables whose header echoes the configuration as ``# key=value`` lines followed
by its hash; a run that raises removes whatever it had written.
"""

from __future__ import annotations

import argparse
import csv
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .absorber import absorbed_amplitude, optical_evolve, wall_overlap
from .config import SCENARIOS, ConfigError, ExperimentConfig
from .firstcross import completeness_residual, first_crossing_distribution, norm_leak_rate
from .lattice import gaussian_packet, wall_propagate
from .meter import MeterFilter, apply_filter, total_norm, zeno_sweep
from .pathsum import (
    DiscreteSystem,
    enumerate_restricted_amplitude,
    lambda_grid,
    lattice_amplitudes,
    meter_evolve,
    random_hermitian,
)
from .traversal import default_v_grid, sum_rule_residual, traversal_distribution, two_class_split


@dataclass
class Table:
    name: str
    header: list
    rows: list = field(default_factory=list)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str


@dataclass
class Outcome:
    tables: list = field(default_factory=list)
    checks: list = field(default_factory=list)

    def check(self, name: str, passed: bool, detail: str) -> None:
        self.checks.append(Check(name, bool(passed), detail))


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(path: Path, table: Table, cfg: ExperimentConfig) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for k, v in cfg.items():
            fh.write(f"# {k}={_fmt_cfg(v)}\n")
        fh.write(f"# config_hash={cfg.digest}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(table.header)
        for row in table.rows:
            w.writerow([_fmt(v) for v in row])


def _fmt_cfg(v) -> str:
    if isinstance(v, tuple):
        return ",".join(_fmt(x) for x in v)
    return _fmt(v)


def read_csv(path) -> tuple[dict, list, np.ndarray]:
    """(config echo, header, numeric rows) from a file written by ``write_csv``."""
    echo, lines = {}, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("# "):
                k, _, v = line[2:].rstrip("\n").partition("=")
                echo[k] = v
            else:
                lines.append(line)
    rows = list(csv.reader(lines))
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in r] for r in body]) if body else np.zeros((0, len(header)))
    return echo, header, data


# ---------------------------------------------------------------- scenarios


def _packet(cfg):
    return gaussian_packet(cfg.packet(), cfg.grid())


def _traversal(cfg, psi, window_factor=None):
    V = default_v_grid(cfg.packet().energy, cfg.t, cfg.v_max_factor, window_factor or cfg.window_factor)
    return traversal_distribution(psi, cfg.t, V)


def run_traversal(cfg: ExperimentConfig) -> Outcome:
    out = Outcome()
    psi = _packet(cfg)
    dist = _traversal(cfg, psi)
    fine = _traversal(cfg, psi, 2 * cfg.window_factor)
    err, err_fine = sum_rule_residual(dist, psi), sum_rule_residual(fine, psi)
    dens = np.sum(np.abs(dist.smooth) ** 2, axis=1) * dist.weight
    out.tables.append(Table("traversal", ["tau", "smooth_density"], list(zip(dist.f, dens))))
    out.tables.append(
        Table("traversal_summary", ["dV", "sum_rule_residual", "dV_fine", "sum_rule_residual_fine"], [(dist.meta["dV"], err, fine.meta["dV"], err_fine)])
    )
    out.check("sum rule", err <= cfg.sum_rule_tol, f"residual {err:.3e} (tol {cfg.sum_rule_tol:g})")
    out.check("sum rule refinement", err_fine <= max(0.5 * err, 1e-8), f"{err:.3e} -> {err_fine:.3e} when dV is halved")
    return out


def run_paradox(cfg: ExperimentConfig) -> Outcome:
    out = Outcome()
    psi = _packet(cfg)
    dist = _traversal(cfg, psi)
    split = two_class_split(dist)
    filt = MeterFilter(cfg.filter_shape, cfg.filter_width, cfg.alpha)
    filtered_total = total_norm(apply_filter(dist, filt))
    out.tables.append(
        Table(
            "paradox",
            ["total_probability", "norm_reflected", "norm_transmitted", "norm_zero", "filtered_total"],
            [(split.total_probability, split.norm_reflected, split.norm_transmitted, split.norm_zero, filtered_total)],
        )
    )
    out.check("two-class total", abs(split.total_probability - 2) <= cfg.paradox_tol, f"{split.total_probability:.6f}")
    for name, v in (("reflected constituent", split.norm_reflected), ("transmitted constituent", split.norm_transmitted)):
        out.check(name, abs(v - 1) <= cfg.constituent_tol, f"{v:.6f}")
    out.check("filtered total", abs(filtered_total - 1) <= cfg.unitarity_tol, f"{filtered_total:.10f}")
    return out


def run_zeno(cfg: ExperimentConfig) -> Outcome:
    out = Outcome()
    psi = _packet(cfg)
    dist = _traversal(cfg, psi)
    alphas = np.array(sorted(cfg.zeno_alphas))
    reports = {s: zeno_sweep(dist, MeterFilter(s, cfg.filter_width), alphas, cfg.zeno_window) for s in cfg.zeno_shapes}
    header = ["alpha"]
    for s in cfg.zeno_shapes:
        header += [f"smooth_mass_{s}", f"singular_mass_{s}"]
    rows = []
    for i, a in enumerate(alphas):
        row = [a]
        for s in cfg.zeno_shapes:
            row += [reports[s].smooth_mass[i], reports[s].singular_mass[0.0][i]]
        rows.append(row)
    out.tables.append(Table("zeno", header, rows))
    out.tables.append(Table("zeno_fit", ["shape", "slope", "slope_right"], [(s, r.slope, r.slope_right) for s, r in reports.items()]))
    for s, r in reports.items():
        ok = abs(r.slope - cfg.zeno_slope) <= cfg.zeno_slope_tol
        out.check(f"smooth-mass slope ({s})", ok, f"{r.slope:.4f} (target {cfg.zeno_slope:g} +- {cfg.zeno_slope_tol:g})")
        m = r.singular_mass[0.0][-1]
        out.check(f"singular mass at largest alpha ({s})", abs(m - 1) <= cfg.zeno_mass_tol, f"{m:.5f}")
    if len(reports) >= 2:
        ms = [r.singular_mass[0.0][-1] for r in reports.values()]
        rel = (max(ms) - min(ms)) / max(ms)
        out.check("filter-shape agreement", rel <= cfg.zeno_shape_tol, f"relative spread {rel:.4f}")
    return out


def run_absorb(cfg: ExperimentConfig) -> Outcome:
    out = Outcome()
    psi = _packet(cfg)
    dist = _traversal(cfg, psi)
    psi_inf = wall_propagate(psi, cfg.t, warn=False)
    rows = []
    for U in cfg.U:
        spec = absorbed_amplitude(dist, U)
        run = optical_evolve(psi, U, cfg.t)
        diff = float(np.abs(spec.amp - run.psi_U.amp).max())
        ov = wall_overlap(spec, psi_inf) if U > 0 else float("nan")
        wall_diff = float(np.abs(spec.amp - psi_inf.amp).max())
        rows.append((U, U * cfg.t, spec.norm2, run.survival, diff, ov, wall_diff))
        ut = U * cfg.t
        if 0 < ut <= 10 * (1 + 1e-9):
            out.check(f"transform vs time stepping, U t = {ut:g}", diff <= cfg.absorb_tol, f"sup-norm {diff:.3e}")
        if ut >= cfg.absorb_large_ut * (1 - 1e-9):
            out.check(f"survival at U t = {ut:g}", spec.norm2 >= cfg.survival_min, f"{spec.norm2:.5f}")
            out.check(f"overlap with hard wall at U t = {ut:g}", ov >= cfg.overlap_min, f"{ov:.5f}")
    out.tables.append(
        Table("absorb", ["U", "U_t", "survival_transform", "survival_stepping", "supnorm_diff", "wall_overlap", "supnorm_wall"], rows)
    )
    return out


def run_firstcross(cfg: ExperimentConfig) -> Outcome:
    out = Outcome()
    psi = _packet(cfg)
    rows = []
    for t in cfg.crossing_times:
        dec = first_crossing_distribution(psi, t, cfg.n_tau)
        res = completeness_residual(dec, psi)
        rows.append((t, res, dec.crossed_norm()))
        out.check(f"completeness at t = {t:g}", res <= cfg.completeness_tol, f"{res:.3e}")
    out.tables.append(Table("firstcross", ["t", "completeness_residual", "crossed_norm"], rows))
    ts = np.array(cfg.leak_times)
    rate = norm_leak_rate(psi, MeterFilter("gaussian", cfg.leak_width), ts)
    pre = cfg.x0 + cfg.k0 / cfg.mass * ts < -5 * cfg.sigma
    out.tables.append(Table("norm_leak", ["t", "dP_dt", "pre_contact"], [(a, b, int(c)) for a, b, c in zip(ts, rate, pre)]))
    if pre.any():
        m = float(np.abs(rate[pre]).max())
        out.check("no leak before contact", m < cfg.leak_precontact_tol, f"max |dP/dt| = {m:.3e}")
    if (~pre).any():
        m = float(np.abs(rate[~pre]).max())
        out.check("leak during contact", m > cfg.leak_contact_min, f"max |dP/dt| = {m:.3e}")
    return out


def oracle_case(dim: int, K: int, t: float, seed: int) -> dict:
    """Enumeration against lambda-grid evolution for one random system."""
    rng = np.random.default_rng(seed)
    H = random_hermitian(dim, rng)
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    psi /= np.linalg.norm(psi)
    system = DiscreteSystem(H, np.arange(dim, dtype=float), 1.0 / t)
    df = 1.0 / K
    n = (dim - 1) * K + 1
    lam = lambda_grid(n, df)
    trotter = lattice_amplitudes(meter_evolve(system, psi, t, lam, K=K, f_start=0.0))
    continuum = lattice_amplitudes(meter_evolve(system, psi, t, lam, f_start=0.0))
    edges = df * (np.arange(n + 1) - 0.5)
    U = system.propagator(t)
    d_tr = d_co = comp = 0.0
    for x in range(dim):
        e = np.zeros(dim)
        e[x] = 1.0
        bins = enumerate_restricted_amplitude(system, psi, e, t, K, edges)
        d_tr = max(d_tr, float(np.abs(bins - trotter[:, x]).max()))
        d_co = max(d_co, float(np.abs(bins - continuum[:, x]).max()))
        comp = max(comp, abs(bins.sum() - (U @ psi)[x]))
    return {"max_abs_diff": d_co, "max_abs_diff_trotter": d_tr, "completeness_error": comp}


def run_oracle(cfg: ExperimentConfig) -> Outcome:
    out = Outcome()
    rows = []
    for seed in cfg.seeds:
        r = oracle_case(cfg.dim, cfg.K, cfg.oracle_t, seed)
        coarse = oracle_case(cfg.dim, max(1, cfg.K // 2), cfg.oracle_t, seed)["max_abs_diff"]
        rows.append((seed, r["max_abs_diff"], r["max_abs_diff_trotter"], r["completeness_error"], coarse))
        out.check(f"seed {seed}: converging in K", r["max_abs_diff"] < coarse, f"{coarse:.3e} at K/2 -> {r['max_abs_diff']:.3e} at K")
        out.check(f"seed {seed}: continuum", r["max_abs_diff"] <= cfg.oracle_tol, f"{r['max_abs_diff']:.3e}")
        out.check(f"seed {seed}: identical slices", r["max_abs_diff_trotter"] <= cfg.trotter_tol, f"{r['max_abs_diff_trotter']:.3e}")
        out.check(f"seed {seed}: completeness", r["completeness_error"] <= cfg.trotter_tol, f"{r['completeness_error']:.3e}")
    out.tables.append(Table("oracle", ["seed", "max_abs_diff", "max_abs_diff_trotter", "completeness_error", "max_abs_diff_half_K"], rows))
    return out


RUNNERS = {
    "traversal": run_traversal,
    "paradox": run_paradox,
    "zeno": run_zeno,
    "absorb": run_absorb,
    "firstcross": run_firstcross,
    "oracle": run_oracle,
}


# ---------------------------------------------------------------- plots


def plot_tables(paths: list[Path]) -> list[Path]:
    """One SVG per CSV, first column against the others, read back from disk."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    made = []
    for p in paths:
        _, header, data = read_csv(p)
        if data.shape[0] < 2:
            continue
        fig, ax = plt.subplots(figsize=(6, 4))
        x = data[:, 0]
        for j in range(1, data.shape[1]):
            y = data[:, j]
            if np.all(y > 0) and np.all(x > 0) and x.max() / x.min() > 100:
                ax.loglog(x, y, "o-", label=header[j])
            else:
                ax.plot(x, y, label=header[j])
        ax.set_xlabel(header[0])
        ax.legend(fontsize=7)
        fig.tight_layout()
        svg = p.with_suffix(".svg")
        fig.savefig(svg)
        plt.close(fig)
        made.append(svg)
    return made


# ---------------------------------------------------------------- entry point


def run(cfg: ExperimentConfig, out_dir: Path, plot: bool = False, stream=None) -> int:
    stream = sys.stdout if stream is None else stream
    try:
        cfg.validate()
        if plot:
            import matplotlib  # noqa: F401
    except ConfigError as exc:
        print(f"validation error: {exc}", file=stream)
        return 1
    except ImportError:
        print("validation error: --plot needs matplotlib", file=stream)
        return 1
    created_dir = not out_dir.exists()
    written: list[Path] = []
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            outcome = RUNNERS[cfg.scenario](cfg)
        out_dir.mkdir(parents=True, exist_ok=True)
        for table in outcome.tables:
            path = out_dir / f"{table.name}.csv"
            written.append(path)
            write_csv(path, table, cfg)
        if plot:
            written += plot_tables([p for p in written if p.suffix == ".csv"])
    except Exception as exc:
        for p in written:
            if p.exists():
                p.unlink()
        if created_dir and out_dir.exists() and not any(out_dir.iterdir()):
            out_dir.rmdir()
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=stream)
        return 2
    for c in outcome.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}", file=stream)
    return 0 if all(c.passed for c in outcome.checks) else 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="pathclass", description="Run one restricted-path-amplitude scenario.")
    parser.add_argument("scenario", choices=SCENARIOS)
    parser.add_argument("--config", required=True, help="flat 'key = value' configuration file")
    parser.add_argument("--out", default=".", help="output directory for CSV (and SVG) files")
    parser.add_argument("--plot", action="store_true", help="also write one SVG plot per CSV table")
    args = parser.parse_args(argv)
    try:
        cfg = ExperimentConfig.from_file(args.config)
    except (OSError, ConfigError) as exc:
        print(f"validation error: {exc}")
        return 1
    if "scenario" in _explicit_keys(args.config) and cfg.scenario != args.scenario:
        print(f"validation error: config names scenario {cfg.scenario!r} but {args.scenario!r} was requested")
        return 1
    cfg = cfg.replace(scenario=args.scenario)
    return run(cfg, Path(args.out), args.plot)


def _explicit_keys(path) -> set:
    keys = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0]
            if "=" in line:
                keys.add(line.split("=", 1)[0].strip())
    return keys


if __name__ == "__main__":
    sys.exit(main())
