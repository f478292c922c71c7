"""Monte Carlo size and power studies."""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from ..bootstrap import BootstrapConfig
from ..diurnal import DiurnalProfile, estimate_diurnal_profile
from ..errors import ConfigError
from ..preavg import ReturnGrid
from ..sim import JumpParams, NoiseParams, SimConfig, assemble_day, true_profile
from ..teststat import TEST_KINDS
from .pipeline import RunConfig, run_day_test

HYPOTHESES = {"null": 0, "alt": 1}


@dataclass(frozen=True)
class CellSpec:
    """One design point of a study."""

    n: int = 4680
    xi2: float = 0.001
    phi: float = -0.5
    theta: float = 1.0 / 3.0
    hypothesis: str = "null"
    R: int = 250
    B: int = 199
    m: int = 78
    q: int = 3
    alpha: float = 0.05
    profile_mode: str = "estimated"
    qv_share: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.hypothesis not in HYPOTHESES:
            raise ConfigError(f"hypothesis must be one of {sorted(HYPOTHESES)}")
        if self.profile_mode not in ("estimated", "true"):
            raise ConfigError("profile_mode must be 'estimated' or 'true'")
        if self.R < 1:
            raise ConfigError("R must be positive")

    def sim_config(self) -> SimConfig:
        return SimConfig(n=self.n, under_null=self.hypothesis == "null", seed=self.seed,
                         jumps=JumpParams(qv_share=self.qv_share),
                         noise=NoiseParams(xi2=self.xi2, phi_ma=self.phi))

    def run_config(self) -> RunConfig:
        return RunConfig(mode="montecarlo", n=self.n, m=self.m, q=self.q, theta=self.theta,
                         alpha=self.alpha, bootstrap=BootstrapConfig(B=self.B),
                         seed=self.seed)

    def sim_key(self) -> tuple:
        return (self.n, self.xi2, self.phi, self.hypothesis, self.R, self.qv_share, self.seed)


@dataclass
class DayRecord:
    rep: int
    true_h_index: float
    h_hat: float
    T_n: float
    Z_n: float
    b_n: int
    noise_proportion: float
    decisions: dict
    error: str = ""


@dataclass
class CellResult:
    spec: CellSpec
    days: list
    profile: Optional[DiurnalProfile] = None

    @property
    def ok_days(self) -> list:
        return [d for d in self.days if not d.error]

    @property
    def failed(self) -> int:
        return len(self.days) - len(self.ok_days)

    def rates(self) -> dict:
        ok = self.ok_days
        if not ok:
            return {k: math.nan for k in TEST_KINDS}
        return {k: 100.0 * sum(bool(d.decisions.get(k)) for d in ok) / len(ok) for k in TEST_KINDS}

    @property
    def avg_block_length(self) -> float:
        ok = self.ok_days
        return float(np.mean([d.b_n for d in ok])) if ok else math.nan


@dataclass
class MonteCarloReport:
    cells: list = field(default_factory=list)


# --- workers (module level so they pickle) ---------------------------------

def _simulate(args):
    config, rep = args
    day = assemble_day(config, config.seed, keys=(_hypothesis_id(config), rep))
    return day.returns, day.true_h_index


def _hypothesis_id(config: SimConfig) -> int:
    return HYPOTHESES["null" if config.under_null else "alt"]


def _test(args):
    returns, rep, profile, config, hyp_id = args
    out = run_day_test(ReturnGrid(returns, rep), profile, config, keys=(hyp_id, config.n, rep))
    h = out.h_index.h_hat if out.h_index is not None else math.nan
    return out, h


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=chunk))


def simulate_panel(spec: CellSpec, workers: int = 1):
    """(R, n) returns and the true H-index of each simulated day."""
    config = spec.sim_config()
    res = _map(_simulate, [(config, r) for r in range(spec.R)], workers)
    return np.vstack([r[0] for r in res]), np.array([r[1] for r in res])


def run_cell(spec: CellSpec, workers: int = 1, panel=None) -> CellResult:
    returns, true_h = simulate_panel(spec, workers) if panel is None else panel
    if spec.profile_mode == "true":
        profile = true_profile(spec.sim_config().diurnal, spec.n)
    else:
        profile = estimate_diurnal_profile(returns, spec.m, spec.q)
    config = spec.run_config()
    hyp = HYPOTHESES[spec.hypothesis]
    res = _map(_test, [(returns[r], r, profile, config, hyp) for r in range(spec.R)], workers)
    days = []
    for r, (out, h) in enumerate(res):
        days.append(DayRecord(r, float(true_h[r]), float(h), float(out.T_n), float(out.Z_n),
                              int(out.b_n), float(out.noise_proportion),
                              dict(out.decisions), out.error or ""))
    return CellResult(spec, days, profile)


def run_monte_carlo(cells, workers: Optional[int] = None) -> MonteCarloReport:
    """Run every cell; cells differing only in test settings share simulated days."""
    workers = 1 if workers is None else workers
    if workers < 1:
        workers = os.cpu_count() or 1
    panels = {}
    report = MonteCarloReport()
    for spec in cells:
        key = spec.sim_key()
        if key not in panels:
            panels[key] = simulate_panel(spec, workers)
        report.cells.append(run_cell(spec, workers, panels[key]))
    return report


# --- output ----------------------------------------------------------------

SPEC_COLUMNS = ["n", "xi2", "phi", "theta", "hypothesis", "profile_mode", "R", "B", "seed"]
TABLE_COLUMNS = ["cell"] + SPEC_COLUMNS + list(TEST_KINDS) + ["avg_block_length", "failed"]
DAY_COLUMNS = (["cell"] + SPEC_COLUMNS + ["rep", "true_h_index", "h_hat", "T_n", "Z_n", "b_n",
               "noise_proportion"] + list(TEST_KINDS) + ["error"])


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write(path, columns, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])


def _spec_fields(spec: CellSpec) -> dict:
    d = asdict(spec)
    return {c: d[c] for c in SPEC_COLUMNS}


def day_rows(report: MonteCarloReport) -> list:
    rows = []
    for i, cell in enumerate(report.cells):
        base = {"cell": i, **_spec_fields(cell.spec)}
        for d in cell.days:
            row = dict(base, rep=d.rep, true_h_index=d.true_h_index, h_hat=d.h_hat, T_n=d.T_n,
                       Z_n=d.Z_n, b_n=d.b_n, noise_proportion=d.noise_proportion, error=d.error)
            row.update({k: bool(d.decisions.get(k, False)) for k in TEST_KINDS})
            rows.append(row)
    return rows


def table_rows_from_days(rows: list) -> list:
    """Aggregate per-day rows (as written to days.csv) into one row per cell."""
    cells = {}
    for row in rows:
        cells.setdefault(int(row["cell"]), []).append(row)
    out = []
    for i in sorted(cells):
        group = cells[i]
        ok = [r for r in group if not r["error"]]
        t = {"cell": i, **{c: group[0][c] for c in SPEC_COLUMNS}}
        for k in TEST_KINDS:
            t[k] = 100.0 * sum(int(r[k]) for r in ok) / len(ok) if ok else math.nan
        t["avg_block_length"] = float(np.mean([int(r["b_n"]) for r in ok])) if ok else math.nan
        t["failed"] = len(group) - len(ok)
        out.append(t)
    return out


def emit_tables(rows: list, out_dir) -> None:
    """table.csv, hindex_scatter.csv and noise_proportion.csv from per-day rows."""
    os.makedirs(out_dir, exist_ok=True)
    _write(os.path.join(out_dir, "table.csv"), TABLE_COLUMNS, table_rows_from_days(rows))
    _write(os.path.join(out_dir, "hindex_scatter.csv"),
           ["cell", "rep", "true_h_index", "h_hat", "z_wb2"], rows)
    _write(os.path.join(out_dir, "noise_proportion.csv"),
           ["cell", "rep", "noise_proportion"], rows)


def emit_report(report: MonteCarloReport, out_dir, format: str = "csv") -> list:
    """Write every report file to ``out_dir`` and return their paths."""
    if format != "csv":
        raise ConfigError("only csv output is supported")
    os.makedirs(out_dir, exist_ok=True)
    rows = day_rows(report)
    _write(os.path.join(out_dir, "days.csv"), DAY_COLUMNS, rows)
    emit_tables(rows, out_dir)
    prof_rows = []
    for i, cell in enumerate(report.cells):
        p = cell.profile
        if p is None:
            continue
        e = p.edges
        prof_rows += [{"cell": i, "bin_index": j, "s_left": float(e[j]), "s_right": float(e[j + 1]),
                       "sigma2_u": float(p.sigma2_u[j])} for j in range(p.m)]
    _write(os.path.join(out_dir, "diurnal_profile.csv"),
           ["cell", "bin_index", "s_left", "s_right", "sigma2_u"], prof_rows)
    names = ["days.csv", "table.csv", "hindex_scatter.csv", "noise_proportion.csv",
             "diurnal_profile.csv"]
    return [os.path.join(out_dir, f) for f in names]


def read_days(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
