"""Command line entry point.

Every run writes ``manifest.txt`` holding the full configuration, so
``softening <mode> --from-manifest old/manifest.txt --out new`` repeats it.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .dynamics import EnsembleParams, SnfParams, conditional_ensemble, simulate_linear, simulate_snf, stationary_fp_solve
from .errors import SofteningError
from .estimators import TrackConfig, indicator_track, potential_surface
from .pipeline_io import (
    RecordSpec,
    ingest,
    read_manifest,
    write_csv,
    write_manifest,
    write_scan,
    write_series,
    write_summary,
    write_surface,
    write_surrogates,
    write_track,
)
from .significance import sensitivity_scan, surrogate_test

MODES = ("simulate", "analyze", "surrogate", "scan", "fpsolve", "ensemble")


@dataclass(frozen=True)
class RunConfig:
    mode: str
    out: str = "out"
    # record
    input: str = ""
    time_col: str = "0"
    value_col: str = "1"
    bp: bool = False
    crop: str = ""
    resample_dt: str = "auto"
    drop_missing: bool = False
    # analysis
    window: float = 0.5
    bandwidth: float = 0.05
    kde_bandwidth: str = "isj"
    step: int = 1
    n_grid: int = 256
    support_floor: float = 1e-3
    skew_source: str = "density"
    n_state: int = 128
    # significance
    surrogates: int = 500
    indicators: str = "c_emp,n2,gamma"
    scan_windows: str = ""
    scan_bandwidths: str = ""
    seed: int = 0
    # models
    model: str = "snf"
    mu: float = 1.0
    epsilon: float = 0.0
    sigma: float = 1.0
    dt: float = 0.1
    n: int = 2000
    x0: str = ""
    escape_level: str = "-1"
    kappa: float = 2.0
    mu_range: str = "0.1:4"
    mu_points: int = 40
    b: float = 1.0
    realizations: int = 100_000
    ens_dt: float = 0.01
    burn_in: int = 1000
    horizon: int = 3000
    svg: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.mode in ("analyze", "surrogate", "scan") and not self.input:
            raise ValueError(f"{self.mode} needs --input")

    def manifest(self):
        return {f"config.{k}": v for k, v in asdict(self).items()}

    @classmethod
    def from_manifest(cls, items, **overrides):
        kw = {}
        for f in fields(cls):
            key = f"config.{f.name}"
            if key not in items:
                continue
            raw = items[key]
            typ = {"bool": lambda s: s in ("1", "True", "true"), "int": int, "float": float}.get(f.type, str)
            kw[f.name] = typ(raw)
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kw)

    def track_config(self):
        kde = self.kde_bandwidth
        try:
            kde = float(kde)
        except ValueError:
            pass
        return TrackConfig(
            window=self.window,
            detrend_bandwidth=self.bandwidth,
            step=self.step,
            kde_bandwidth=kde,
            n_grid=self.n_grid,
            support_floor=self.support_floor,
            skew_source=self.skew_source,
        )

    def record(self):
        crop = None
        if self.crop:
            a, _, b = self.crop.partition(":")
            crop = (float(a), float(b))
        dt = self.resample_dt if self.resample_dt == "auto" else float(self.resample_dt)
        return RecordSpec(self.input, self.time_col, self.value_col, "bp" if self.bp else "forward", crop, dt, self.drop_missing)

    def mu_values(self):
        a, _, b = self.mu_range.partition(":")
        if not b:
            return np.array([float(a)])
        return np.linspace(float(a), float(b), self.mu_points)


def _floats(text):
    return None if not text else [float(s) for s in text.split(",")]


def _svg(path, draw):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4))
    draw(ax)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def _simulate(cfg, out, meta):
    if cfg.model == "snf":
        p = SnfParams(
            mu0=cfg.mu,
            epsilon=cfg.epsilon,
            sigma=cfg.sigma,
            dt=cfg.dt,
            n_max=cfg.n,
            x0=float(cfg.x0) if cfg.x0 else None,
            escape_level=float(cfg.escape_level) if cfg.escape_level else None,
            seed=cfg.seed,
        )
        ts = simulate_snf(p)
        meta["result.censored_index"] = "" if ts.censored_index is None else ts.censored_index
    elif cfg.model == "linear":
        ts = simulate_linear(cfg.kappa, cfg.sigma, cfg.dt, cfg.n, seed=cfg.seed)
    else:
        raise ValueError("model must be 'snf' or 'linear'")
    meta["result.length"] = len(ts)
    files = [write_series(out / "series.csv", ts)]
    if cfg.svg:
        files.append(_svg(out / "series.svg", lambda ax: ax.plot(ts.times, ts.values, lw=0.6)))
    return files


def _load(cfg, meta):
    ts = ingest(cfg.record())
    meta.update({f"input.{k}": v for k, v in ts.provenance.items()})
    return ts


def _analyze(cfg, out, meta):
    ts = _load(cfg, meta)
    tc = cfg.track_config()
    track = indicator_track(ts, tc)
    surface = potential_surface(ts, tc, cfg.n_state)
    meta["result.window_len"] = track.window_len
    meta["result.config_digest"] = track.config_digest
    meta["result.failed_windows"] = len(track.errors)
    files = [write_track(out / "tracks.csv", track), write_surface(out / "surface.csv", surface)]
    if cfg.svg:

        def draw(ax):
            for k in ("c_emp", "n2", "gamma"):
                ax.plot(track.t_center, getattr(track, k), label=k)
            ax.legend()

        files.append(_svg(out / "tracks.svg", draw))

        def surf(ax):
            m = np.nanmax(np.abs(surface.parabola_dev)) if np.any(surface.support_mask) else 1.0
            ax.pcolormesh(surface.time_centers, surface.state_grid, surface.parabola_dev.T, cmap="RdBu_r", vmin=-m, vmax=m)

        files.append(_svg(out / "surface.svg", surf))
    return files


def _surrogate(cfg, out, meta):
    ts = _load(cfg, meta)
    tc = cfg.track_config()
    names = tuple(cfg.indicators.split(","))
    reports = surrogate_test(ts, tc, names, cfg.surrogates, cfg.seed)
    first = next(iter(reports.values()))
    meta["result.matched_kappa"] = first.matched_kappa
    meta["result.matched_sigma2"] = first.matched_sigma2
    meta["result.config_digest"] = first.config_digest
    files = [
        write_track(out / "tracks.csv", indicator_track(ts, tc)),
        write_surrogates(out / "surrogates.csv", reports),
        write_summary(out / "summary.csv", reports),
    ]
    if cfg.svg:
        for k, r in reports.items():

            def draw(ax, r=r):
                ax.hist(r.surrogate_values[np.isfinite(r.surrogate_values)], bins=30, color="0.7")
                ax.axvline(r.observed_mean, color="k")
                ax.set_title(f"{r.indicator_name}: percentile {r.percentile:.1f}")

            files.append(_svg(out / f"surrogates_{k}.svg", draw))
    return files


def _scan(cfg, out, meta):
    ts = _load(cfg, meta)
    grid = sensitivity_scan(
        ts,
        _floats(cfg.scan_windows),
        _floats(cfg.scan_bandwidths),
        tuple(cfg.indicators.split(",")),
        cfg.surrogates,
        cfg.seed,
        cfg.track_config(),
    )
    meta["result.contour_levels"] = ",".join(str(v) for v in grid.contour_levels)
    meta["result.failed_cells"] = len(grid.errors)
    files = write_scan(out, grid)
    if cfg.svg:
        for k, m in grid.percentile.items():

            def draw(ax, m=m):
                x, y = np.log2(grid.bandwidth_fractions), np.log2(grid.window_fractions)
                ax.pcolormesh(x, y, m, vmin=0, vmax=100, cmap="viridis")
                if np.isfinite(m).sum() > 3 and m.shape[0] > 1 and m.shape[1] > 1:
                    ax.contour(x, y, m, levels=grid.contour_levels, colors="w", linewidths=0.5)
                ax.set_xlabel("log2 bandwidth fraction")
                ax.set_ylabel("log2 window fraction")

            files.append(_svg(out / f"scan_{k}.svg", draw))
    return files


def _fpsolve(cfg, out, meta):
    mus = cfg.mu_values()
    rows = [stationary_fp_solve(float(m), cfg.sigma) for m in mus]
    cols = ["mu", "c", "mean", "variance", "skewness", "ode_residual"]
    data = [[getattr(r, k) if k != "ode_residual" else r.ode_residual() for r in rows] for k in cols]
    files = [write_csv(out / "fp.csv", cols, data)]
    if cfg.svg:

        def draw(ax):
            for k in ("mean", "variance", "skewness"):
                ax.plot(mus, [getattr(r, k) for r in rows], label=k)
            ax.set_xlabel("mu")
            ax.legend()

        files.append(_svg(out / "fp.svg", draw))
    return files


def _ensemble(cfg, out, meta):
    mus = cfg.mu_values()
    res = [
        conditional_ensemble(
            EnsembleParams(
                n_realizations=cfg.realizations,
                mu=float(m),
                sigma=cfg.sigma,
                b=cfg.b,
                dt=cfg.ens_dt,
                burn_in=cfg.burn_in,
                horizon=cfg.horizon,
                seed=cfg.seed,
            )
        )
        for m in mus
    ]
    cols = ["mu", "mean", "variance", "skewness", "se_mean", "se_variance", "se_skewness", "n_escaped"]
    data = [
        mus,
        [r.mean for r in res],
        [r.variance for r in res],
        [r.skewness for r in res],
        [r.stderr["mean"] for r in res],
        [r.stderr["variance"] for r in res],
        [r.stderr["skewness"] for r in res],
        [r.n_escaped for r in res],
    ]
    files = [write_csv(out / "ensemble.csv", cols, data)]
    if cfg.svg:
        files.append(_svg(out / "ensemble.svg", lambda ax: ax.errorbar(mus, data[3], yerr=data[6], marker="o")))
    return files


HANDLERS = {
    "simulate": _simulate,
    "analyze": _analyze,
    "surrogate": _surrogate,
    "scan": _scan,
    "fpsolve": _fpsolve,
    "ensemble": _ensemble,
}


def run(cfg: RunConfig) -> int:
    """Execute one mode; returns 0 on success.

    On failure every artifact this run wrote is removed and the message goes
    to stderr.
    """
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"softening.version": __version__, "softening.backend": kernels.BACKEND}
    meta.update(cfg.manifest())
    before = set(out.iterdir())
    try:
        HANDLERS[cfg.mode](cfg, out, meta)
        write_manifest(out / "manifest.txt", meta)
    except (SofteningError, ValueError, OSError) as exc:
        for p in set(out.iterdir()) - before:
            p.unlink()
        print(f"softening {cfg.mode}: {exc}", file=sys.stderr)
        return 1
    return 0


def _parser():
    ap = argparse.ArgumentParser(prog="softening", description="Nonlinear softening indicators for noisy time series.")
    ap.add_argument("mode", choices=MODES)
    ap.add_argument("--from-manifest", metavar="PATH", help="reuse every setting from an earlier run")
    ap.add_argument("--out")
    g = ap.add_argument_group("record")
    g.add_argument("--input")
    g.add_argument("--time-col", dest="time_col")
    g.add_argument("--value-col", dest="value_col")
    g.add_argument("--bp", action="store_const", const=True, help="time column is years before present")
    g.add_argument("--crop", metavar="A:B")
    g.add_argument("--resample-dt", dest="resample_dt")
    g.add_argument("--drop-missing", dest="drop_missing", action="store_const", const=True)
    g = ap.add_argument_group("analysis")
    g.add_argument("--window", type=float, help="fraction of N if <= 1, else samples")
    g.add_argument("--bandwidth", type=float, help="detrending bandwidth, fraction of N if <= 1, else samples")
    g.add_argument("--kde-bandwidth", dest="kde_bandwidth", help="isj, silverman or a number")
    g.add_argument("--step", type=int)
    g.add_argument("--n-grid", dest="n_grid", type=int)
    g.add_argument("--skew-source", dest="skew_source", choices=("density", "sample"))
    g = ap.add_argument_group("significance")
    g.add_argument("--surrogates", type=int)
    g.add_argument("--indicators")
    g.add_argument("--scan-windows", dest="scan_windows", help="comma-separated window fractions")
    g.add_argument("--scan-bandwidths", dest="scan_bandwidths", help="comma-separated bandwidth fractions")
    g.add_argument("--seed", type=int)
    g = ap.add_argument_group("models")
    g.add_argument("--model", choices=("snf", "linear"))
    g.add_argument("--mu", type=float)
    g.add_argument("--epsilon", type=float)
    g.add_argument("--sigma", type=float)
    g.add_argument("--dt", type=float)
    g.add_argument("-n", "--n", type=int)
    g.add_argument("--x0")
    g.add_argument("--escape-level", dest="escape_level", help="empty for no escape censoring")
    g.add_argument("--kappa", type=float)
    g.add_argument("--mu-range", dest="mu_range", metavar="A:B")
    g.add_argument("--mu-points", dest="mu_points", type=int)
    g.add_argument("-b", "--b", type=float)
    g.add_argument("--realizations", type=int)
    g.add_argument("--ens-dt", dest="ens_dt", type=float)
    g.add_argument("--burn-in", dest="burn_in", type=int)
    g.add_argument("--horizon", type=int)
    ap.add_argument("--svg", action="store_const", const=True)
    return ap


def main(argv=None) -> int:
    ap = _parser()
    args = vars(ap.parse_args(argv))
    source = args.pop("from_manifest")
    mode = args.pop("mode")
    try:
        if source:
            cfg = RunConfig.from_manifest(read_manifest(source), mode=mode, **args)
        else:
            cfg = RunConfig(mode=mode, **{k: v for k, v in args.items() if v is not None})
    except (ValueError, OSError) as exc:
        ap.error(str(exc))
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
