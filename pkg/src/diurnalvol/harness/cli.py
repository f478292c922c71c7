"""``diurnalvol`` command line.

Every option may also come from a flat ``key = value`` config file given by
``--config``; flags on the command line win.  Exit codes: 0 success, 2 bad
configuration, 3 bad data.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys

from ..bootstrap import BootstrapConfig
from ..diurnal import (DiurnalProfile, as_panel, estimate_diurnal_profile, read_profile_csv,
                       write_profile_csv)
from ..errors import ConfigError, DataError
from ..sim import JumpParams, NoiseParams, SimConfig, assemble_day, true_profile
from ..teststat import TEST_KINDS
from .io import ingest_ticks, snap_to_grid, write_ticks
from .montecarlo import CellSpec, emit_report, emit_tables, read_days, run_monte_carlo
from .pipeline import RunConfig, run_day_test

log = logging.getLogger("diurnalvol")

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3

# key -> (type, default); shared by flags and config files
OPTIONS = {
    "n": (int, None),
    "m": (int, 78),
    "q": (int, 3),
    "theta": (float, 1.0 / 3.0),
    "varpi": (float, 0.49),
    "quantile_level": (float, 0.999),
    "alpha": (float, 0.05),
    "bootstrap_b": (int, 199),
    "block_size": (int, None),
    "external": (str, "mammen"),
    "seed": (int, 0),
    "deflate": ("bool", True),
    "bonferroni": ("bool", False),
    "true_profile": (str, None),
    "profile": (str, None),
    "ticks": (str, None),
    "days": (int, 1),
    "hypothesis": (str, "null"),
    "xi2": (float, 0.001),
    "phi": (float, -0.5),
    "qv_share": (float, 0.2),
    "reps": (int, 250),
    "workers": (int, 1),
    "input": (str, None),
    "out": (str, "."),
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _convert(key: str, value):
    kind = OPTIONS[key][0]
    if value is None or not isinstance(value, str):
        return value
    if kind == "bool":
        v = value.strip().lower()
        if v in _TRUE:
            return True
        if v in _FALSE:
            return False
        raise ConfigError(f"{key}: expected a boolean, got {value!r}")
    try:
        return kind(value)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {value!r}") from None


def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in OPTIONS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = _convert(key, value)
    return out


def resolve(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    opts = {k: d for k, (_, d) in OPTIONS.items()}
    if args.config:
        opts.update(read_config(args.config))
    for k in OPTIONS:
        v = getattr(args, k, None)
        if v is not None:
            opts[k] = v
    return opts


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="diurnalvol",
                                description="Test for stochastic volatility beyond a diurnal pattern.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH")
    common.add_argument("--n", type=int)
    common.add_argument("--m", type=int)
    common.add_argument("--q", type=int)
    common.add_argument("--theta", type=float)
    common.add_argument("--varpi", type=float)
    common.add_argument("--alpha", type=float)
    common.add_argument("--bootstrap-b", dest="bootstrap_b", type=int)
    common.add_argument("--block-size", dest="block_size", type=int)
    common.add_argument("--external", choices=["gaussian", "mammen"])
    common.add_argument("--seed", type=int)
    common.add_argument("--deflate", dest="deflate", action="store_true", default=None)
    common.add_argument("--no-deflate", dest="deflate", action="store_false")
    common.add_argument("--true-profile", dest="true_profile", metavar="PATH",
                        help="ground-truth profile CSV, or 'model' for the simulator's shape")
    common.add_argument("--out", metavar="DIR")
    common.add_argument("--workers", type=int)

    s = sub.add_parser("simulate", parents=[common], help="write simulated days as ticks")
    s.add_argument("--days", type=int)
    s.add_argument("--hypothesis", choices=["null", "alt"])
    s.add_argument("--xi2", type=float)
    s.add_argument("--phi", type=float)
    s.add_argument("--qv-share", dest="qv_share", type=float)

    d = sub.add_parser("diurnal", parents=[common], help="estimate the diurnal profile")
    d.add_argument("--ticks", metavar="CSV")

    t = sub.add_parser("test", parents=[common], help="run the test day by day")
    t.add_argument("--ticks", metavar="CSV")
    t.add_argument("--profile", metavar="CSV")
    t.add_argument("--bonferroni", dest="bonferroni", action="store_true", default=None)

    mc = sub.add_parser("montecarlo", parents=[common], help="size or power study")
    mc.add_argument("--hypothesis", choices=["null", "alt"])
    mc.add_argument("--xi2", type=float)
    mc.add_argument("--phi", type=float)
    mc.add_argument("--qv-share", dest="qv_share", type=float)
    mc.add_argument("--reps", type=int)

    r = sub.add_parser("report", parents=[common], help="rebuild tables from days.csv")
    r.add_argument("--input", metavar="CSV")
    return p


def _require(opts, key):
    if opts[key] is None:
        raise ConfigError(f"--{key.replace('_', '-')} is required")
    return opts[key]


def _sim_config(opts) -> SimConfig:
    return SimConfig(n=_require(opts, "n"), under_null=opts["hypothesis"] == "null",
                     seed=opts["seed"], jumps=JumpParams(qv_share=opts["qv_share"]),
                     noise=NoiseParams(xi2=opts["xi2"], phi_ma=opts["phi"]))


def _run_config(opts, n) -> RunConfig:
    return RunConfig(mode="test", n=n, m=opts["m"], q=opts["q"], theta=opts["theta"],
                     varpi=opts["varpi"], quantile_level=opts["quantile_level"],
                     alpha=opts["alpha"],
                     bootstrap=BootstrapConfig(b_n=opts["block_size"], B=opts["bootstrap_b"],
                                               seed=opts["seed"]),
                     externals=(opts["external"],), bonferroni=opts["bonferroni"],
                     deflate=opts["deflate"], seed=opts["seed"])


def _grids(opts):
    ticks = ingest_ticks(_require(opts, "ticks"))
    if not ticks:
        raise DataError("no usable days in tick file")
    n = _require(opts, "n")
    return [t.date for t in ticks], [snap_to_grid(t, n, i) for i, t in enumerate(ticks)]


def _true_profile(opts, n) -> DiurnalProfile:
    if opts["true_profile"] == "model":
        return true_profile(SimConfig(n=n).diurnal, n)
    return read_profile_csv(opts["true_profile"])


def cmd_simulate(opts) -> int:
    config = _sim_config(opts)
    out = opts["out"]
    os.makedirs(out, exist_ok=True)
    hyp = 0 if config.under_null else 1
    days, truth = [], []
    for r in range(opts["days"]):
        day = assemble_day(config, config.seed, keys=(hyp, r))
        days.append((f"day{r:04d}", day.Y))
        truth.append((f"day{r:04d}", day.true_h_index, day.true_iv, day.omega2))
    write_ticks(os.path.join(out, "ticks.csv"), days)
    with open(os.path.join(out, "truth.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "true_h_index", "true_iv", "omega2"])
        w.writerows([d, repr(h), repr(iv), repr(o)] for d, h, iv, o in truth)
    write_profile_csv(true_profile(config.diurnal, opts["m"], config.seconds_grid),
                      os.path.join(out, "true_profile.csv"))
    print(f"wrote {len(days)} days to {out}")
    return EXIT_OK


def cmd_diurnal(opts) -> int:
    _, grids = _grids(opts)
    profile = estimate_diurnal_profile(as_panel([g.returns for g in grids]), opts["m"], opts["q"])
    os.makedirs(opts["out"], exist_ok=True)
    path = os.path.join(opts["out"], "diurnal_profile.csv")
    write_profile_csv(profile, path)
    print(f"profile with m={profile.m} bins from {len(grids)} days -> {path}")
    return EXIT_OK


def cmd_test(opts) -> int:
    dates, grids = _grids(opts)
    n = grids[0].n
    config = _run_config(opts, n)
    if opts["true_profile"]:
        profile = _true_profile(opts, n)
    elif opts["profile"]:
        profile = read_profile_csv(opts["profile"])
    elif config.deflate and len(grids) >= 2:
        profile = estimate_diurnal_profile(as_panel([g.returns for g in grids]), config.m, config.q)
    else:
        profile = None
    alpha = config.alpha / len(grids) if config.bonferroni else config.alpha
    os.makedirs(opts["out"], exist_ok=True)
    label = "wb2" if config.externals[0] == "mammen" else "wb1"
    cols = ["date", "T_n", "Z_n", "V_check", "b_n", "clt_pvalue", "clt", "z_" + label,
            "t_" + label, "h_hat", "noise_proportion", "error"]
    rejected = 0
    with open(os.path.join(opts["out"], "results.csv"), "w", newline="",
              encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for i, (date, g) in enumerate(zip(dates, grids)):
            out = run_day_test(g, profile, config, keys=(i,), alpha=alpha)
            h = float(out.h_index.h_hat) if out.h_index is not None else math.nan
            dec = [int(bool(out.decisions.get(k, False))) for k in cols[6:9]]
            rejected += dec[1]
            w.writerow([date, repr(out.T_n), repr(out.Z_n), repr(out.V_check), out.b_n,
                        repr(out.clt_pvalue), *dec, repr(h), repr(out.noise_proportion),
                        out.error or ""])
    print(f"{rejected}/{len(grids)} days reject at level {alpha:.4g} (z_{label})")
    return EXIT_OK


def cmd_montecarlo(opts) -> int:
    spec = CellSpec(n=_require(opts, "n"), xi2=opts["xi2"], phi=opts["phi"],
                    theta=opts["theta"], hypothesis=opts["hypothesis"], R=opts["reps"],
                    B=opts["bootstrap_b"], m=opts["m"], q=opts["q"], alpha=opts["alpha"],
                    profile_mode="true" if opts["true_profile"] else "estimated",
                    qv_share=opts["qv_share"], seed=opts["seed"])
    report = run_monte_carlo([spec], workers=opts["workers"])
    paths = emit_report(report, opts["out"])
    rates = report.cells[0].rates()
    print(" ".join(f"{k}={rates[k]:.1f}%" for k in TEST_KINDS),
          f"avg_b={report.cells[0].avg_block_length:.0f}")
    print("wrote", ", ".join(paths))
    return EXIT_OK


def cmd_report(opts) -> int:
    path = opts["input"] or os.path.join(opts["out"], "days.csv")
    if not os.path.exists(path):
        raise DataError(f"{path} not found")
    emit_tables(read_days(path), opts["out"])
    print(f"tables written to {opts['out']}")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "diurnal": cmd_diurnal, "test": cmd_test,
            "montecarlo": cmd_montecarlo, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        opts = resolve(args)
        return COMMANDS[args.command](opts)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
