"""Configuration-driven command-line front end.

    regen-rates <simulate|rates|llt|rwre|mixing> --config <path>
                [--out <dir>] [--seed <u64>] [--threads <k>]

Commands bind models, harvesting, rate sweeps, lattice checks and walk
analytics into reproducible experiments: identical config and seed produce
byte-identical CSV/JSON artifacts.  Exit codes: 0 success, 2 configuration
error, 3 computation error (the error name goes to stderr).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import (
    ExperimentConfig,
    build_llt,
    build_mixing,
    build_model,
    build_plan,
    build_rwre,
    build_sweep,
    load_config,
)
from .errors import ConfigError, NotTransient, RegenRatesError
from .lattice import LatticeJointLaw, semilocal_discrepancy
from .mixing import alpha_exact, mixing_rate_exponent
from .models import rwre1d_hitting_model, rwre1d_position_model
from .regen import HarvestPlan, estimate, harvest, moment_gate
from .rates import fit_rate, rate_sweep
from .rng import SeedSpec
from .rwre_analytics import classify, delta_recommendation, sigma0_sq, speed
from .types import BlockEstimates

__all__ = ["main"]

_EXIT_CONFIG = 2
_EXIT_COMPUTE = 3


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)  # RFC 4180 CRLF line endings
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _json_safe(value):
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


def _write_json(path: Path, payload: dict):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_json_safe(payload), fh, sort_keys=True, indent=2)
        fh.write("\n")


def _exact_estimates(model, delta: float) -> Optional[BlockEstimates]:
    law = model.exact_block_law() if hasattr(model, "exact_block_law") else None
    if law is None:
        return None
    sigma2 = law.sigma2()
    return BlockEstimates(
        mu_hat=law.mu(),
        sigma2_hat=sigma2,
        tau_bar=law.mean_length(),
        cov_a=law.covariance(),
        n_blocks=max(2, len(law.probs)),
        delta=delta,
        degenerate=not sigma2 > 1e-30,
    )


# -- commands ------------------------------------------------------------------


def cmd_simulate(cfg: ExperimentConfig) -> int:
    model = build_model(cfg)
    plan = build_plan(cfg)
    seed = SeedSpec(cfg.master_seed)
    result = harvest(model, plan, seed, threads=cfg.threads)
    est = estimate(result.blocks, plan.delta)
    gate = moment_gate(est, result.blocks)

    rows = [
        (int(result.blocks.stream_ids[i]), i, int(result.blocks.lengths[i]),
         float(result.blocks.sums[i]), float(result.blocks.abs_sums[i]))
        for i in range(len(result.blocks))
    ]
    _write_csv(cfg.out_dir / "blocks.csv", ["stream", "index", "length", "sum", "abs_sum"], rows)

    payload = est.to_jsonable()
    payload["censored_blocks"] = result.censored_blocks
    payload["trajectories"] = result.trajectories
    payload["moment_gate"] = {
        "threshold": gate.threshold,
        "hill_index": gate.hill_index,
        "flag_raised": gate.flag_raised,
        "hill_suppressed": gate.hill_suppressed,
    }
    if result.first_block is not None:
        payload["first_block"] = {
            "length": result.first_block.length,
            "sum": result.first_block.sum,
            "abs_sum": result.first_block.abs_sum,
        }
    _write_json(cfg.out_dir / "estimates.json", payload)
    return 0


def _series_rows(series) -> list:
    rows = []
    for (n, d), dkw in zip(series.points, series.dkw_bounds or [0.0] * len(series.points)):
        rows.append((n, d, dkw, series.n_paths if series.n_paths else 0, series.mode))
    return rows


def cmd_rates(cfg: ExperimentConfig) -> int:
    model = build_model(cfg)
    plan = build_plan(cfg)
    sweep = build_sweep(cfg)
    seed = SeedSpec(cfg.master_seed)

    est = _exact_estimates(model, plan.delta)
    if est is None:
        # estimate on a stream range disjoint from the sweep's
        result = harvest(model, plan, SeedSpec(cfg.master_seed, 1), threads=cfg.threads)
        est = estimate(result.blocks, plan.delta)
    series = rate_sweep(
        model.spawn(),
        est,
        sweep.ns,
        sweep.mode,
        n_paths=sweep.n_paths,
        seed=SeedSpec(cfg.master_seed, 2),
        include_first=sweep.include_first_block,
        center=sweep.center,
    )
    fit = fit_rate(series)
    _write_csv(
        cfg.out_dir / "rates.csv",
        ["n", "distance", "dkw_bound", "n_paths", "mode"],
        _series_rows(series),
    )
    payload = fit.to_jsonable()
    payload["delta"] = series.delta
    _write_json(cfg.out_dir / "fit.json", payload)
    return 0


def cmd_llt(cfg: ExperimentConfig) -> int:
    spec = build_llt(cfg)
    try:
        law = LatticeJointLaw.from_table(spec.law_values_v, spec.law_values_w, spec.law_probs)
    except ValueError as exc:
        raise ConfigError(f"[llt.law] invalid: {exc}") from exc
    rows = []
    weight_power = (1.0 + spec.delta) / 2.0
    for n in spec.n_values:
        rep = semilocal_discrepancy(law, n, x_grid=spec.x_grid)
        rows.append(
            (n, rep.sup_weighted_llt, rep.sup_weighted_semilocal, rep.argmax_x, rep.argmax_y,
             n**weight_power * rep.sup_weighted_llt,
             n**weight_power * rep.sup_weighted_semilocal)
        )
    _write_csv(
        cfg.out_dir / "llt.csv",
        ["n", "sup_llt", "sup_semilocal", "argmax_x", "argmax_y",
         "weighted_llt", "weighted_semilocal"],
        rows,
    )
    return 0


def cmd_rwre(cfg: ExperimentConfig) -> int:
    spec = build_rwre(cfg)
    seed = SeedSpec(cfg.master_seed)
    try:
        verdict = classify(spec.rho_law)
    except NotTransient as exc:
        payload = {
            "error": "NotTransient",
            "E_log_rho": exc.e_log_rho,
            "E_rho": exc.e_rho,
        }
        _write_json(cfg.out_dir / "analytics.json", payload)
        raise
    payload = {
        "E_log_rho": verdict.e_log_rho,
        "E_rho": verdict.e_rho,
        "kappa": verdict.kappa,
        "ballistic": verdict.ballistic,
        "clt_regime": verdict.clt_regime,
        "v_P": speed(spec.rho_law),
        "delta_recommended": delta_recommendation(verdict),
    }
    if spec.sigma0_envs > 0:
        if spec.site_law is None:
            raise ConfigError("[rwre] sigma0 estimation requires a site law")
        s0 = sigma0_sq(
            spec.site_law,
            SeedSpec(cfg.master_seed, 3),
            n_envs=spec.sigma0_envs,
            truncation=spec.truncation,
            replicas=spec.sigma0_replicas,
        )
        payload["sigma0_sq"] = s0.value
        payload["sigma0_se"] = s0.se
    _write_json(cfg.out_dir / "analytics.json", payload)

    if spec.sweep_model is not None:
        v = speed(spec.rho_law)
        if spec.sweep_model == "hitting":
            model = rwre1d_hitting_model(spec.site_law, spec.horizon, spec.confirmation)
            center = 1.0 / v if v > 0 else None
        else:
            model = rwre1d_position_model(spec.site_law, spec.horizon, spec.confirmation)
            center = v
        delta = delta_recommendation(verdict) or 1.0
        plan = HarvestPlan(n_blocks=spec.sweep_n_blocks, n_streams=4, delta=delta)
        result = harvest(model, plan, SeedSpec(cfg.master_seed, 1), threads=cfg.threads)
        est = estimate(result.blocks, delta)
        series = rate_sweep(
            model.spawn(),
            est,
            spec.sweep_ns,
            "monte_carlo",
            n_paths=spec.sweep_n_paths,
            seed=SeedSpec(cfg.master_seed, 2),
            include_first=True,
            center=center,
        )
        fit = fit_rate(series)
        _write_csv(
            cfg.out_dir / "rates.csv",
            ["n", "distance", "dkw_bound", "n_paths", "mode"],
            _series_rows(series),
        )
        payload = fit.to_jsonable()
        payload["delta"] = delta
        _write_json(cfg.out_dir / "fit.json", payload)
    return 0


def cmd_mixing(cfg: ExperimentConfig) -> int:
    spec = build_mixing(cfg)
    rows = [(n, alpha_exact(spec.chain, n)) for n in spec.n_values]
    _write_csv(cfg.out_dir / "mixing.csv", ["n", "alpha"], rows)
    if spec.p is not None:
        result = mixing_rate_exponent(spec.p, spec.lam)
        payload = {
            "p": spec.p,
            "lambda": spec.lam,
            "exponent": result.exponent if result else None,
            "delta": result.delta if result else None,
        }
        _write_json(cfg.out_dir / "mixing.json", payload)
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "rates": cmd_rates,
    "llt": cmd_llt,
    "rwre": cmd_rwre,
    "mixing": cmd_mixing,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="regen-rates",
        description="Simulation and verification toolkit for regenerative CLT rates",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="path to the TOML experiment file")
    parser.add_argument("--out", default=None, help="output directory override")
    parser.add_argument("--seed", type=int, default=None, help="master seed override")
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="harvesting threads (falls back to REGEN_RATES_THREADS, then 1)",
    )
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        if args.out is not None:
            cfg.out_dir = Path(args.out)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg.master_seed = args.seed
        threads = args.threads
        if threads is None:
            threads = int(os.environ.get("REGEN_RATES_THREADS", "1"))
        if threads < 1:
            raise ConfigError("--threads must be positive")
        cfg.threads = threads
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"ConfigError: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    except RegenRatesError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return _EXIT_COMPUTE
    except ValueError as exc:
        print(f"ValueError: {exc}", file=sys.stderr)
        return _EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
