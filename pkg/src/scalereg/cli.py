"""Command-line front end.

Each command writes one file per result table (scale in the first column)
plus ``metadata.json`` into ``--out-dir``, logs to stderr, and prints a
single summary line to stdout.

Exit codes: 0 success, 2 input/validation error, 3 numerical degeneracy,
4 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import platform
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field
from importlib import metadata as importlib_metadata
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import stats

from . import coefficients, fluctuation, ingestion, regression, significance, synthgen
from .errors import CollinearityError, DegenerateError
from .series import ScaleGrid, build_profile, default_scale_grid, log_scale_grid

logger = logging.getLogger("scalereg")

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE, EXIT_INTERNAL = 0, 2, 3, 4
SEED_ENV = "SCALEREG_SEED"
COMMANDS = ("dfa", "regress", "significance", "synth", "partial")


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    y_col: str | None = None
    x1_col: str | None = None
    x2_col: str | None = None
    timestamp_col: str | None = None
    delimiter: str = ","
    max_gap: int = ingestion.DEFAULT_MAX_GAP
    scales: str | None = None
    order: int = fluctuation.DEFAULT_ORDER
    alpha: float = 0.01
    reps: int = 10_000
    seed: int = 0
    season: list = field(default_factory=lambda: ["all"])
    format: str = "csv"
    out_dir: str = "."
    kind: str = "setting1"
    length: int = 10_000
    d: float = 0.4
    d_eps: float | None = None
    p: float = 0.3
    depth: int = 15
    threshold: float | None = None
    noise_sd: float = 1e-4

    def __post_init__(self):
        roles = [c for c in (self.y_col, self.x1_col, self.x2_col) if c]
        if len(set(roles)) != len(roles):
            raise ValueError("--y-col, --x1-col and --x2-col must be distinct")
        if not 0 < self.alpha <= 0.5:
            raise ValueError("--alpha must be in (0, 0.5]")
        if self.command == "significance" and self.reps < 100:
            raise ValueError("--reps must be >= 100")
        if self.command != "synth" and not self.input:
            raise ValueError(f"{self.command} needs --input")
        if not self.season:
            self.season = ["all"]


@dataclass
class ResultBundle:
    tables: dict
    metadata: dict


def parse_scales(text: str | None, length: int) -> ScaleGrid:
    if text is None:
        return default_scale_grid(length)
    try:
        lo, hi, count = (int(part) for part in text.split(":"))
    except ValueError:
        raise ValueError(f"--scales must look like MIN:MAX:COUNT, got {text!r}") from None
    grid = log_scale_grid(lo, hi, count)
    grid.validate_for(length)
    return grid


def _seasons_of(cfg: RunConfig, columns):
    """Yield ``(season, Dataset)`` for every requested season."""
    data = ingestion.load_csv(cfg.input, columns, cfg.timestamp_col, cfg.delimiter)
    data = ingestion.clean(data, cfg.max_gap)
    for season in cfg.season:
        yield season, ingestion.season_slice(data, season)


def _role_columns(cfg: RunConfig) -> list[str]:
    cols = [cfg.y_col, cfg.x1_col, cfg.x2_col]
    if not all(cols):
        raise ValueError(f"{cfg.command} needs --y-col, --x1-col and --x2-col")
    return cols


def cmd_dfa(cfg: RunConfig) -> ResultBundle:
    chosen = [c for c in (cfg.y_col, cfg.x1_col, cfg.x2_col) if c] or None
    tables, summary = {}, {}
    for season, data in _seasons_of(cfg, chosen):
        grid = parse_scales(cfg.scales, len(data))
        table = {"scale": grid.scales}
        slopes = {}
        for name in data.names:
            f2 = fluctuation.dfa_variance(
                build_profile(data.series(name)), grid, cfg.order
            )
            table[f"F2_{name}"] = f2
            table[f"F_{name}"] = np.sqrt(f2)
            slopes[name] = fluctuation.hurst_slope(grid, f2)
        tables[f"dfa_{season}"] = pd.DataFrame(table)
        summary[season] = {"n_obs": len(data), "slope": slopes}
    return ResultBundle(tables, {"summary": summary})


def _fit_season(cfg: RunConfig, data) -> tuple:
    y, x1, x2 = (data.series(c) for c in _role_columns(cfg))
    grid = parse_scales(cfg.scales, len(data))
    return y, x1, x2, grid


def cmd_regress(cfg: RunConfig) -> ResultBundle:
    cols = _role_columns(cfg)
    tables, summary = {}, {}
    for season, data in _seasons_of(cfg, cols):
        y, x1, x2, grid = _fit_season(cfg, data)
        ols = regression.ols_fit(y, x1, x2)
        fit = regression.dfa_regression(y, x1, x2, grid, cfg.order)
        ci = fit.ci95
        eta = fit.elasticity_dfa
        ols_eta = ols.elasticity or (math.nan, math.nan)
        table = pd.DataFrame(
            {
                "scale": fit.grid.scales,
                "beta1": fit.beta1,
                "beta1_ci_lower": ci[:, 0, 0],
                "beta1_ci_upper": ci[:, 0, 1],
                "beta2": fit.beta2,
                "beta2_ci_lower": ci[:, 1, 0],
                "beta2_ci_upper": ci[:, 1, 1],
                "var_beta1": fit.var_beta1,
                "var_beta2": fit.var_beta2,
                "residual_fluct": fit.residual_fluct,
                "r2_dfa": fit.r_squared_dfa,
                "beta_star1": fit.beta_star_dfa[:, 0],
                "beta_star2": fit.beta_star_dfa[:, 1],
                "eta1": eta[:, 0] if eta is not None else math.nan,
                "eta2": eta[:, 1] if eta is not None else math.nan,
                "implied_intercept": fit.implied_intercept,
                "ols_beta0": ols.beta0,
                "ols_beta1": ols.beta1,
                "ols_beta2": ols.beta2,
                "ols_r2": ols.r_squared,
                "ols_beta_star1": ols.beta_star[0],
                "ols_beta_star2": ols.beta_star[1],
                "ols_eta1": ols_eta[0],
                "ols_eta2": ols_eta[1],
            }
        )
        tables[f"regress_{season}"] = table
        summary[season] = {
            "n_obs": len(data),
            "roles": {"y": cols[0], "x1": cols[1], "x2": cols[2]},
            "ols": {
                "beta0": ols.beta0, "beta1": ols.beta1, "beta2": ols.beta2,
                "var_beta1": ols.var_beta1, "var_beta2": ols.var_beta2,
                "r_squared": ols.r_squared, "beta_star": list(ols.beta_star),
                "elasticity": list(ols.elasticity) if ols.elasticity else None,
            },
            "degenerate_scales": list(fit.degenerate_scales),
        }
    return ResultBundle(tables, {"summary": summary})


def cmd_significance(cfg: RunConfig) -> ResultBundle:
    cols = _role_columns(cfg)
    tables, summary = {}, {}
    for season, data in _seasons_of(cfg, cols):
        y, x1, x2, grid = _fit_season(cfg, data)
        fit = regression.dfa_regression(y, x1, x2, grid, cfg.order)
        tstat = significance.t_statistics(fit)
        t_curve = significance.mc_critical_t(
            y, x1, x2, tstat.grid, cfg.order, cfg.alpha, cfg.reps, cfg.seed, keep_samples=True
        )
        t_curve_common = t_curve.restrict(ScaleGrid(np.intersect1d(t_curve.grid.scales, tstat.grid.scales)))
        keep = np.isin(tstat.grid.scales, t_curve_common.grid.scales)
        t_obs = tstat.values[keep]
        t_flags = significance.decide(t_curve_common, t_obs)

        fset = fluctuation.fluctuation_set([y, x1, x2], grid, cfg.order, labels=cols)
        dm = coefficients.dcca_matrix(fset)
        pairs = coefficients.all_pairs(cols)
        pdcca = np.column_stack([coefficients.rho_pdcca(dm, a, b).values for a, b in pairs])
        p_curve = significance.mc_critical_pdcca(
            [y, x1, x2], grid, cfg.order, cfg.alpha, cfg.reps, cfg.seed + 1
        )
        p_keep = np.isin(grid.scales, p_curve.grid.scales)
        p_flags = significance.decide(p_curve, pdcca[p_keep])

        t_table = pd.DataFrame(
            {
                "scale": t_curve_common.grid.scales,
                "t1": t_obs[:, 0],
                "t2": t_obs[:, 1],
                "t_critical": t_curve_common.critical,
                "significant1": t_flags[:, 0],
                "significant2": t_flags[:, 1],
            }
        )
        p_table = pd.DataFrame({"scale": p_curve.grid.scales})
        for i, (a, b) in enumerate(pairs):
            p_table[f"pdcca_{a}_{b}"] = pdcca[p_keep, i]
        p_table["pdcca_critical"] = p_curve.critical
        for i, (a, b) in enumerate(pairs):
            p_table[f"significant_{a}_{b}"] = p_flags[:, i]
        tables[f"significance_{season}"] = t_table.merge(p_table, on="scale", how="outer")

        pdf_rows = []
        for n, centres, density in t_curve.histogram(bins=60):
            pdf_rows.append(pd.DataFrame({"scale": n, "t": centres, "density": density}))
        tables[f"t_null_pdf_{season}"] = pd.concat(pdf_rows, ignore_index=True)
        summary[season] = {
            "n_obs": len(data),
            "t_failed_reps": t_curve.n_failed,
            "pdcca_failed_reps": p_curve.n_failed,
            "t_seed": cfg.seed,
            "pdcca_seed": cfg.seed + 1,
            "fraction_significant_t": float(t_flags.mean()),
            "fraction_significant_pdcca": float(p_flags.mean()),
        }
    return ResultBundle(tables, {"summary": summary})


def _hourly_index(length: int) -> pd.DatetimeIndex:
    return pd.date_range("2013-12-01T00:00:00", periods=length, freq="h")


def cmd_synth(cfg: RunConfig) -> ResultBundle:
    rng = np.random.default_rng(cfg.seed)
    info: dict = {"kind": cfg.kind, "generator": "numpy PCG64", "seed": cfg.seed}
    if cfg.kind == "arfima":
        x = synthgen.arfima_generate(synthgen.ArfimaSpec(cfg.d, cfg.length), rng)
        cols = {"x": x.values}
        info.update(d=cfg.d, truncation=synthgen.DEFAULT_TRUNCATION)
    elif cfg.kind == "bmfs":
        x = synthgen.bmfs_generate(synthgen.BmfsSpec(cfg.p, cfg.depth))
        info.update(p=cfg.p, depth=cfg.depth)
        if cfg.threshold is not None:
            x, replaced = synthgen.embed_in_noise(x, cfg.threshold, cfg.noise_sd, rng)
            info.update(threshold=cfg.threshold, noise_sd=cfg.noise_sd, replaced=replaced)
        cols = {"x": x.values}
    elif cfg.kind in ("setting1", "setting2"):
        d_eps = None
        if cfg.kind == "setting2":
            d_eps = 0.0 if cfg.d_eps is None else cfg.d_eps
        sample = synthgen.arfima_regression_sample(cfg.d, cfg.length, d_error=d_eps, seed=rng)
        cols = {"y": sample.y.values, "x1": sample.x1.values, "x2": sample.x2.values}
        info.update(sample.meta)
    elif cfg.kind == "bmfs-regression":
        threshold = 1e-5 if cfg.threshold is None else cfg.threshold
        sample = synthgen.bmfs_regression_sample(
            cfg.p, cfg.depth, threshold, cfg.noise_sd, seed=rng
        )
        cols = {"y": sample.y.values, "x1": sample.x1.values, "x2": sample.x2.values}
        info.update(sample.meta)
    else:
        raise ValueError(f"unknown synth kind {cfg.kind!r}")
    n = len(next(iter(cols.values())))
    data = ingestion.Dataset(cols, _hourly_index(n), "synth")
    return ResultBundle({"synth": data}, {"summary": info})


def cmd_partial(cfg: RunConfig) -> ResultBundle:
    cols = _role_columns(cfg)
    tables, summary = {}, {}
    for season, data in _seasons_of(cfg, cols):
        rows = []
        for a, b in coefficients.all_pairs(cols):
            (control,) = [c for c in cols if c not in (a, b)]
            n_obs = len(data)
            row = {"pair": f"{a}~{b}", "control": control, "n": n_obs}
            t_crit = float(stats.t.ppf(1 - cfg.alpha / 2, n_obs - 3))
            try:
                r, t = coefficients.partial_corr_classic(
                    data.series(a), data.series(b), data.series(control)
                )
                row.update(r=r, t=t, t_critical=t_crit, significant=bool(abs(t) > t_crit), note="")
            except CollinearityError as exc:
                row.update(r=math.nan, t=math.nan, t_critical=t_crit, significant=False, note=str(exc))
            rows.append(row)
        tables[f"partial_{season}"] = pd.DataFrame(rows)
        summary[season] = {"n_obs": len(data)}
    return ResultBundle(tables, {"summary": summary})


HANDLERS = {
    "dfa": cmd_dfa,
    "regress": cmd_regress,
    "significance": cmd_significance,
    "synth": cmd_synth,
    "partial": cmd_partial,
}


def _json_value(v):
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return None if not math.isfinite(v) else float(v)
    return v


def write_bundle(bundle: ResultBundle, out_dir: Path, fmt: str) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, table in bundle.tables.items():
        if isinstance(table, ingestion.Dataset):
            path = out_dir / f"{name}.csv"
            ingestion.write_csv(table, path)
        elif fmt == "json":
            path = out_dir / f"{name}.json"
            records = [
                {k: _json_value(v) for k, v in row.items()}
                for row in table.to_dict(orient="records")
            ]
            path.write_text(json.dumps(records, indent=1))
        else:
            path = out_dir / f"{name}.csv"
            table.to_csv(path, index=False, float_format="%.17g")
        written.append(path)
    path = out_dir / "metadata.json"
    path.write_text(json.dumps(bundle.metadata, indent=2, default=_json_value))
    written.append(path)
    return written


def _versions() -> dict:
    try:
        pkg = importlib_metadata.version("artifact")
    except importlib_metadata.PackageNotFoundError:
        pkg = "unknown"
    return {
        "scalereg": pkg,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "pandas": pd.__version__,
        "scipy": __import__("scipy").__version__,
        "platform": platform.platform(),
    }


def build_parser() -> argparse.ArgumentParser:
    env_seed = os.environ.get(SEED_ENV)
    parser = argparse.ArgumentParser(
        prog="scalereg", description="Multi-scale DFA-based bivariate regression toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--input", help="delimited input file")
        p.add_argument("--y-col")
        p.add_argument("--x1-col")
        p.add_argument("--x2-col")
        p.add_argument("--timestamp-col")
        p.add_argument("--delimiter", default=",")
        p.add_argument("--max-gap", type=int, default=ingestion.DEFAULT_MAX_GAP,
                       help="longest gap (rows) filled by interpolation")
        p.add_argument("--scales", metavar="MIN:MAX:COUNT")
        p.add_argument("--order", type=int, default=fluctuation.DEFAULT_ORDER)
        p.add_argument("--alpha", type=float, default=0.01)
        p.add_argument("--reps", type=int, default=10_000)
        p.add_argument("--seed", type=int, default=int(env_seed) if env_seed else 0,
                       help=f"RNG seed (default: ${SEED_ENV} or 0)")
        p.add_argument("--season", action="append",
                       choices=list(ingestion.SEASONS) + ["all"],
                       help="repeatable; 'all' uses the whole file (default)")
        p.add_argument("--format", choices=["csv", "json"], default="csv")
        p.add_argument("--out-dir", default=".")
        if name == "synth":
            p.add_argument("--kind", default="setting1",
                           choices=["arfima", "bmfs", "setting1", "setting2", "bmfs-regression"])
            p.add_argument("--length", type=int, default=10_000)
            p.add_argument("--d", type=float, default=0.4)
            p.add_argument("--d-eps", type=float)
            p.add_argument("--p", type=float, default=0.3)
            p.add_argument("--depth", type=int, default=15)
            p.add_argument("--threshold", type=float)
            p.add_argument("--noise-sd", type=float, default=1e-4)
    return parser


def run(cfg: RunConfig, argv=None) -> tuple[ResultBundle, list[Path]]:
    start = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        bundle = HANDLERS[cfg.command](cfg)
    for w in caught:
        logger.warning("%s", w.message)
    bundle.metadata.update(
        command=cfg.command,
        config=asdict(cfg),
        argv=list(argv) if argv is not None else None,
        seed=cfg.seed,
        versions=_versions(),
        elapsed_seconds=time.perf_counter() - start,
        warnings=[str(w.message) for w in caught],
    )
    written = write_bundle(bundle, Path(cfg.out_dir), cfg.format)
    return bundle, written


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    try:
        fields = {k: v for k, v in vars(args).items() if k in RunConfig.__dataclass_fields__}
        cfg = RunConfig(**fields)
        bundle, written = run(cfg, argv)
    except DegenerateError as exc:
        logger.error("numerical degeneracy: %s", exc)
        return EXIT_DEGENERATE
    except (ValueError, KeyError, OSError) as exc:
        logger.error("invalid input: %s", exc)
        return EXIT_INPUT
    except Exception:
        logger.exception("internal error")
        return EXIT_INTERNAL
    print(f"{cfg.command}: wrote {len(written)} files to {cfg.out_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
