"""Command-line workflow: estimate | simulate | risk | stress | report.

Every command loads the JSON run configuration (plus flag overrides),
reads its upstream artifacts from the output directory, and writes its own
artifacts atomically. Exit codes: 0 success, 2 configuration error, 3 data
or missing-artifact error, 4 convergence failure.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .errors import ConfigError, ConvergenceError, DataError
from .estimation import FitConfig, fit
from .io import (ArtifactSet, RunConfig, SeriesPanel, config_hash, ingest,
                 load_config, params_from_dict, params_to_dict,
                 read_json_artifact)
from .levy_ou import var1_to_ou
from .nig import nig_pdf
from .risk import build_risk_report
from .simulation import SimSpec, simulate
from .stress import StressTarget, rdo_bar, stress_calibrate

_PARAMS_FILE = "params.json"
_META_FILE = "ensemble_meta.json"


def _provenance(cfg: RunConfig) -> dict:
    return {"seed": cfg.seed, "config_hash": config_hash(cfg), "version": __version__}


def _load_panel(cfg: RunConfig) -> SeriesPanel:
    return ingest(cfg.data_csv, cfg)


def _load_params(cfg: RunConfig):
    doc = read_json_artifact(os.path.join(cfg.out_dir, _PARAMS_FILE), "parameter")
    return params_from_dict(doc), doc


def cmd_estimate(cfg: RunConfig) -> None:
    panel = _load_panel(cfg)
    fit_cfg = FitConfig(noise_family=cfg.family,
                        enforce_signs=cfg.estimation.enforce_signs,
                        optimizer=cfg.estimation.optimizer,
                        max_iter=cfg.estimation.max_iter,
                        restarts=cfg.estimation.restarts)
    result = fit(panel, fit_cfg)
    p = result.params
    K, theta = var1_to_ou(p.a, p.B, p.dt)

    doc = params_to_dict(p)
    doc.update({
        "K": K.tolist(),
        "theta": theta.tolist(),
        "loglik": result.loglik,
        "n_obs": len(panel),
        "init": params_to_dict(result.init),
        "diagnostics": {k: v for k, v in result.diagnostics.items()
                        if k in ("nfev", "converged", "n_obs")},
    })

    art = ArtifactSet(cfg.out_dir, _provenance(cfg))
    art.add_json(_PARAMS_FILE, doc)

    eps = result.residuals
    art.add_csv("residuals.csv", ["date", "eps1", "eps2", "eps3"],
                [[panel.dates[k + 1].isoformat(), eps[k, 0], eps[k, 1], eps[k, 2]]
                 for k in range(eps.shape[0])])

    hist_rows, fit_rows = [], []
    for i in range(3):
        col = eps[:, i]
        counts, edges = np.histogram(col, bins=30, density=True)
        hist_rows += [[f"eps{i+1}", edges[j], edges[j + 1], counts[j]]
                      for j in range(len(counts))]
        sd = p.sigma[i]
        grid = np.linspace(col.min() - sd, col.max() + sd, 201)
        gauss = np.exp(-0.5 * (grid / sd) ** 2) / (sd * np.sqrt(2 * np.pi))
        nig_curve = nig_pdf(grid, p.nig[i]) if p.noise_family == "nig" else np.full_like(grid, np.nan)
        fit_rows += [[f"eps{i+1}", grid[j], gauss[j], nig_curve[j]]
                     for j in range(len(grid))]
    art.add_csv("residual_hist.csv", ["component", "bin_left", "bin_right", "density"], hist_rows)
    art.add_csv("residual_fit.csv", ["component", "x", "gaussian_pdf", "nig_pdf"], fit_rows)
    art.commit()


def cmd_simulate(cfg: RunConfig) -> None:
    params, _ = _load_params(cfg)
    panel = _load_panel(cfg)
    spec = SimSpec(params=params, x0=panel.states[-1], n_paths=cfg.n_paths,
                   horizon_steps=cfg.horizon_steps, seed=cfg.seed,
                   store="volume", workers=cfg.workers)
    ens = simulate(spec)
    d = ens.volumes()

    probes = [0.01, 0.05, 0.25, 0.50, 0.75, 0.95, 0.99]
    qcols = np.quantile(d, probes, axis=0)
    rows = [[int(t), d[:, t].mean()] + [qcols[j, t] for j in range(len(probes))]
            for t in range(d.shape[1])]

    art = ArtifactSet(cfg.out_dir, _provenance(cfg))
    art.add_csv("ensemble_summary.csv",
                ["step", "mean_volume"] + [f"q{int(p * 100):02d}" for p in probes],
                rows)
    art.add_json(_META_FILE, {
        "n_paths": cfg.n_paths,
        "horizon_steps": cfg.horizon_steps,
        "x0": ens.x0.tolist(),
        "initial_volume": ens.initial_volume(),
        "stationary": ens.stationary,
    })
    art.commit()


def cmd_risk(cfg: RunConfig) -> None:
    params, _ = _load_params(cfg)
    meta = read_json_artifact(os.path.join(cfg.out_dir, _META_FILE), "simulation")
    if meta.get("config_hash") != config_hash(cfg):
        raise DataError("simulation artifact was produced under a different "
                        "configuration; re-run the simulate command")
    panel = _load_panel(cfg)
    spec = SimSpec(params=params, x0=panel.states[-1], n_paths=cfg.n_paths,
                   horizon_steps=cfg.horizon_steps, seed=cfg.seed,
                   store="volume", workers=cfg.workers)
    ens = simulate(spec)
    report = build_risk_report(ens, alphas=cfg.alphas, es_alpha=cfg.es_alpha,
                               horizons_years=cfg.table_horizons_years)

    art = ArtifactSet(cfg.out_dir, _provenance(cfg))
    var_headers = [f"var{int(a * 1000) / 10:g}" for a in cfg.alphas]
    art.add_csv("risk_table.csv",
                ["horizon_years"] + var_headers + [f"es{cfg.es_alpha * 100:g}"],
                [[h] + list(row) for h, row in zip(report.horizons_years, report.table)])
    art.add_csv("tsl_curves.csv",
                ["step"] + [f"tsl{int(a * 1000) / 10:g}" for a in cfg.alphas],
                [[int(t)] + [report.tsl_curves[a][t] for a in cfg.alphas]
                 for t in range(len(report.grid))])
    art.add_csv("fan_chart.csv",
                ["step", "mean"] + var_headers + [f"es{cfg.es_alpha * 100:g}"],
                [[int(t), report.mean_curve[t]]
                 + [report.var_curves[a][t] for a in cfg.alphas]
                 + [report.es_curve[t]]
                 for t in range(len(report.grid))])
    art.commit()


def cmd_stress(cfg: RunConfig) -> None:
    params, _ = _load_params(cfg)
    if params.noise_family != "nig":
        raise ConfigError("stress calibration requires an NIG-family fit; "
                          "re-run estimate with family=nig")
    panel = _load_panel(cfg)
    target = StressTarget(outflow_fraction=cfg.stress.outflow_fraction,
                          alpha=cfg.stress.alpha,
                          horizon_steps=cfg.stress.horizon_months,
                          mc_paths=cfg.stress.mc_paths,
                          confirm_paths=cfg.stress.confirm_paths,
                          tolerance=cfg.stress.tolerance)
    result = stress_calibrate(params, panel, target, seed=cfg.seed)

    art = ArtifactSet(cfg.out_dir, _provenance(cfg))
    art.add_json("stress_result.json", {
        "target": {
            "outflow_fraction": target.outflow_fraction,
            "alpha": target.alpha,
            "horizon_months": target.horizon_steps,
        },
        "stressed_params": params_to_dict(result.params),
        "nig3": {"alpha": result.nig3.alpha, "beta": result.nig3.beta,
                 "delta": result.nig3.delta, "mu": result.nig3.mu},
        "beta3": result.beta3,
        "log_gamma3": result.log_gamma3,
        "achieved_rdo_bar": result.achieved,
        "confirmed_rdo_bar": result.confirmed,
        "annual_skewness": result.annual_skewness,
        "annual_excess_kurtosis": result.annual_excess_kurtosis,
        "trace": [[b, r] for b, r in result.trace],
    })

    bar_rows = []
    for a in (0.95, 0.99, target.alpha):
        calibrated_rb = rdo_bar(params, panel, target.horizon_steps, a,
                                seed=cfg.seed, n_paths=target.mc_paths)
        stressed_rb = rdo_bar(result.params, panel, target.horizon_steps, a,
                              seed=cfg.seed, n_paths=target.mc_paths)
        bar_rows.append([a, calibrated_rb, stressed_rb])
    art.add_csv("rdo_bars.csv", ["alpha", "calibrated_nig", "stressed_nig"], bar_rows)
    art.commit()


def cmd_report(cfg: RunConfig) -> None:
    doc = read_json_artifact(os.path.join(cfg.out_dir, _PARAMS_FILE), "parameter")
    lines = [
        "non-maturing deposit model: run summary",
        "=" * 46,
        f"version       : {__version__}",
        f"seed          : {cfg.seed}",
        f"config hash   : {config_hash(cfg)}",
        f"noise family  : {doc['family']}",
        f"observations  : {doc.get('n_obs')}",
        f"log-likelihood: {doc.get('loglik'):.4f}",
        "",
        "one-step drift (a | B):",
    ]
    for i in range(3):
        lines.append(f"  {doc['a'][i]:+.6f} | " +
                     " ".join(f"{doc['B'][i][j]:+.6f}" for j in range(3)))
    lines.append("")
    lines.append("continuous-time (theta | K):")
    for i in range(3):
        lines.append(f"  {doc['theta'][i]:+.6f} | " +
                     " ".join(f"{doc['K'][i][j]:+.6f}" for j in range(3)))
    lines.append("")
    lines.append("noise scales sigma: " +
                 " ".join(f"{s:.6f}" for s in doc["sigma"]))
    if doc["family"] == "nig":
        lines.append("NIG components (alpha, beta, delta, mu):")
        for i, q in enumerate(doc["nig"]):
            lines.append(f"  eps{i+1}: {q['alpha']:.5f}, {q['beta']:.5f}, "
                         f"{q['delta']:.6f}, {q['mu']:.6f}")

    table_path = os.path.join(cfg.out_dir, "risk_table.csv")
    if os.path.exists(table_path):
        lines.append("")
        lines.append("liquidity table (normalized running-minimum quantiles):")
        with open(table_path, "r", encoding="utf-8") as fh:
            for raw in fh:
                if not raw.startswith("#"):
                    lines.append("  " + raw.rstrip())

    stress_path = os.path.join(cfg.out_dir, "stress_result.json")
    if os.path.exists(stress_path):
        sdoc = read_json_artifact(stress_path, "stress")
        lines += [
            "",
            "stress calibration:",
            f"  target outflow    : {sdoc['target']['outflow_fraction']:.1%} over "
            f"{sdoc['target']['horizon_months']}m at {sdoc['target']['alpha']:.1%}",
            f"  achieved avg RDO  : {sdoc['achieved_rdo_bar']:.4f}"
            f" (confirmed {sdoc['confirmed_rdo_bar']:.4f})",
            f"  stressed beta3    : {sdoc['beta3']:.4f}",
            f"  annual skew/exkurt: {sdoc['annual_skewness']:.3f} / "
            f"{sdoc['annual_excess_kurtosis']:.3f}",
        ]

    art = ArtifactSet(cfg.out_dir, _provenance(cfg))
    art.add_text("report.txt", "\n".join(lines) + "\n")
    art.commit()


_COMMANDS = {
    "estimate": cmd_estimate,
    "simulate": cmd_simulate,
    "risk": cmd_risk,
    "stress": cmd_stress,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nmdrisk",
        description="Estimation, projection and liquidity risk for non-maturing deposits")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("estimate", "fit the model to a monthly panel"),
        ("simulate", "project deposit volumes by Monte Carlo"),
        ("risk", "compute VaR / expected shortfall / liquidity term structure"),
        ("stress", "re-calibrate the volume noise to a target outflow"),
        ("report", "write a consolidated human-readable summary"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the JSON run configuration")
        p.add_argument("--seed", type=int, default=None, help="override the configured seed")
        p.add_argument("--paths", type=int, default=None, help="override the configured path count")
        p.add_argument("--out", default=None, help="override the output directory")
        p.add_argument("--family", choices=["gaussian", "nig"], default=None,
                       help="override the noise family")
        p.add_argument("--workers", type=int, default=None, help="override the worker count")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed, n_paths=args.paths,
                          out_dir=args.out, family=args.family,
                          workers=args.workers)
        _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
