"""Experiment configuration: a sectioned TOML file under a strict schema.

Unknown keys are errors, required keys are checked per command, and model
construction failures surface as configuration errors, so a bad experiment
file never reaches the computation stage.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import numpy as np

from .errors import ConfigError
from .models import (
    BetaSiteLaw,
    DirichletSiteLaw,
    FiniteMarkovChain,
    FixedVectorSiteLaw,
    LatticeWalkConfig,
    ProcessModel,
    SiteLaw,
    TwoPointSiteLaw,
    UniformSiteLaw,
    iid_model,
    markov_additive_model,
    rwre1d_hitting_model,
    rwre1d_position_model,
    rwre_lattice_model,
)
from .regen import HarvestPlan
from .rwre_analytics import FiniteRhoLaw, RhoLaw

__all__ = ["ExperimentConfig", "load_config"]

_TOP_KEYS = {"master_seed", "output", "model", "plan", "sweep", "llt", "rwre", "mixing"}


def _require(section: dict, name: str, key: str) -> Any:
    if key not in section:
        raise ConfigError(f"[{name}] is missing required key '{key}'")
    return section[key]


def _check_keys(section: dict, name: str, allowed: set[str]):
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"[{name}] has unknown keys: {sorted(unknown)}")


def _positive_int(value, name: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ConfigError(f"{name} must be a positive integer, got {value!r}")
    return value


def _int_list(value, name: str) -> list[int]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{name} must be a nonempty list of integers")
    return [_positive_int(v, f"{name} entry") for v in value]


@dataclass
class ExperimentConfig:
    master_seed: int
    out_dir: Path
    raw: dict = field(repr=False, default_factory=dict)
    threads: int = 1

    def section(self, name: str, required: bool = False) -> Optional[dict]:
        got = self.raw.get(name)
        if got is None and required:
            raise ConfigError(f"missing required section [{name}]")
        return got


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from exc
    _check_keys(raw, "config", _TOP_KEYS)
    seed = _require(raw, "config", "master_seed")
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        raise ConfigError("master_seed must be an unsigned 64-bit integer")
    output = raw.get("output", {})
    _check_keys(output, "output", {"dir"})
    out_dir = Path(output.get("dir", "out"))
    return ExperimentConfig(master_seed=seed, out_dir=out_dir, raw=raw)


# -- section builders ---------------------------------------------------------


def build_site_law(section: dict, name: str) -> SiteLaw:
    kind = _require(section, name, "kind")
    try:
        if kind == "two_point":
            _check_keys(section, name, {"kind", "p1", "p2", "q"})
            return TwoPointSiteLaw(
                float(_require(section, name, "p1")),
                float(_require(section, name, "p2")),
                float(_require(section, name, "q")),
            )
        if kind == "uniform":
            _check_keys(section, name, {"kind", "a", "b"})
            return UniformSiteLaw(
                float(_require(section, name, "a")), float(_require(section, name, "b"))
            )
        if kind == "beta":
            _check_keys(section, name, {"kind", "alpha", "beta", "eps"})
            return BetaSiteLaw(
                float(_require(section, name, "alpha")),
                float(_require(section, name, "beta")),
                float(section.get("eps", 1e-6)),
            )
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"[{name}] invalid parameters: {exc}") from exc
    raise ConfigError(f"[{name}] unknown site-law kind {kind!r}")


def build_rho_law(rwre: dict) -> tuple[RhoLaw, Optional[SiteLaw]]:
    has_rho = "rho_law" in rwre
    has_site = "site_law" in rwre
    if has_rho == has_site:
        raise ConfigError("[rwre] needs exactly one of rho_law or site_law")
    if has_site:
        site = build_site_law(rwre["site_law"], "rwre.site_law")
        return site.rho_law(), site
    section = rwre["rho_law"]
    _check_keys(section, "rwre.rho_law", {"kind", "values", "probs"})
    if section.get("kind", "finite") != "finite":
        raise ConfigError("[rwre.rho_law] only 'finite' laws are accepted here; "
                          "use site_law for continuous families")
    try:
        law = FiniteRhoLaw(section["values"], section["probs"])
    except Exception as exc:
        raise ConfigError(f"[rwre.rho_law] invalid: {exc}") from exc
    site = None
    if len(np.atleast_1d(section["values"])) <= 2:
        rhos = [float(r) for r in section["values"]]
        ps = [1.0 / (1.0 + r) for r in rhos]
        probs = [float(p) for p in section["probs"]]
        if len(ps) == 1:
            site = TwoPointSiteLaw.homogeneous(ps[0])
        else:
            site = TwoPointSiteLaw(ps[0], ps[1], probs[0])
    return law, site


def build_model(cfg: ExperimentConfig) -> ProcessModel:
    section = cfg.section("model", required=True)
    kind = _require(section, "model", "kind")
    try:
        if kind == "iid":
            _check_keys(section, "model", {"kind", "values", "probs"})
            values = _require(section, "model", "values")
            probs = _require(section, "model", "probs")
            return iid_model(zip(map(float, values), map(float, probs)))
        if kind == "markov":
            _check_keys(section, "model", {"kind", "transition", "f", "anchor", "initial"})
            chain = FiniteMarkovChain(
                np.asarray(_require(section, "model", "transition"), dtype=float),
                np.asarray(_require(section, "model", "f"), dtype=float),
                anchor=int(section.get("anchor", 0)),
                initial=(
                    np.asarray(section["initial"], dtype=float)
                    if "initial" in section
                    else None
                ),
            )
            return markov_additive_model(chain)
        if kind in ("rwre1d_position", "rwre1d_hitting"):
            _check_keys(section, "model", {"kind", "site_law", "horizon", "confirmation"})
            site = build_site_law(_require(section, "model", "site_law"), "model.site_law")
            horizon = int(section.get("horizon", 2**16))
            confirmation = int(section.get("confirmation", 512))
            build = (
                rwre1d_position_model if kind == "rwre1d_position" else rwre1d_hitting_model
            )
            return build(site, horizon, confirmation)
        if kind == "rwre_lattice":
            _check_keys(
                section,
                "model",
                {"kind", "dimension", "direction_u", "projection_w", "site_law",
                 "horizon", "confirmation", "exact_abs_sum"},
            )
            lattice_law = build_lattice_site_law(
                _require(section, "model", "site_law"), "model.site_law"
            )
            walk = LatticeWalkConfig(
                dimension=int(_require(section, "model", "dimension")),
                site_law=lattice_law,
                direction_u=np.asarray(_require(section, "model", "direction_u"), dtype=float),
                projection_w=np.asarray(_require(section, "model", "projection_w"), dtype=float),
                horizon=int(section.get("horizon", 2**16)),
                confirmation=int(section.get("confirmation", 512)),
                exact_abs_sum=bool(section.get("exact_abs_sum", False)),
            )
            return rwre_lattice_model(walk)
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"[model] invalid: {exc}") from exc
    raise ConfigError(f"[model] unknown kind {kind!r}")


def build_lattice_site_law(section: dict, name: str):
    kind = _require(section, name, "kind")
    if kind == "fixed":
        _check_keys(section, name, {"kind", "probs"})
        return FixedVectorSiteLaw(np.asarray(_require(section, name, "probs"), dtype=float))
    if kind == "dirichlet":
        _check_keys(section, name, {"kind", "alphas"})
        return DirichletSiteLaw(np.asarray(_require(section, name, "alphas"), dtype=float))
    raise ConfigError(f"[{name}] unknown lattice site-law kind {kind!r}")


def build_plan(cfg: ExperimentConfig) -> HarvestPlan:
    section = cfg.section("plan", required=True)
    _check_keys(section, "plan", {"n_blocks", "n_streams", "delta", "include_first_block"})
    try:
        return HarvestPlan(
            n_blocks=_positive_int(_require(section, "plan", "n_blocks"), "plan.n_blocks"),
            n_streams=_positive_int(section.get("n_streams", 1), "plan.n_streams"),
            delta=float(section.get("delta", 1.0)),
            include_first_block=bool(section.get("include_first_block", False)),
        )
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"[plan] invalid: {exc}") from exc


@dataclass
class SweepSpec:
    ns: list[int]
    mode: str
    n_paths: Optional[int]
    include_first_block: bool
    center: Optional[float]


def build_sweep(cfg: ExperimentConfig) -> SweepSpec:
    section = cfg.section("sweep", required=True)
    _check_keys(section, "sweep", {"ns", "mode", "n_paths", "include_first_block", "center"})
    ns = _int_list(_require(section, "sweep", "ns"), "sweep.ns")
    mode = section.get("mode", "exact")
    if mode not in ("exact", "monte_carlo"):
        raise ConfigError(f"[sweep] mode must be exact or monte_carlo, got {mode!r}")
    n_paths = section.get("n_paths")
    if mode == "monte_carlo":
        n_paths = _positive_int(_require(section, "sweep", "n_paths"), "sweep.n_paths")
    center = section.get("center")
    if center is not None and not isinstance(center, (int, float)):
        raise ConfigError("[sweep] center must be a number when present")
    return SweepSpec(
        ns=ns,
        mode=mode,
        n_paths=n_paths,
        include_first_block=bool(section.get("include_first_block", False)),
        center=None if center is None else float(center),
    )


@dataclass
class LltSpec:
    n_values: list[int]
    x_grid: list[float]
    law_values_v: list[float]
    law_values_w: list[float]
    law_probs: list[list[float]]
    delta: float


def build_llt(cfg: ExperimentConfig) -> LltSpec:
    section = cfg.section("llt", required=True)
    _check_keys(section, "llt", {"n_values", "x_grid", "law", "delta"})
    law = _require(section, "llt", "law")
    _check_keys(law, "llt.law", {"v_values", "w_values", "probs"})
    probs = _require(law, "llt.law", "probs")
    if not isinstance(probs, list) or not all(isinstance(r, list) for r in probs):
        raise ConfigError("[llt.law] probs must be a matrix (list of rows)")
    delta = float(section.get("delta", 1.0))
    if not 0 < delta <= 1:
        raise ConfigError("[llt] delta must lie in (0, 1]")
    return LltSpec(
        n_values=_int_list(_require(section, "llt", "n_values"), "llt.n_values"),
        x_grid=[float(x) for x in section.get("x_grid", [])],
        law_values_v=[float(v) for v in _require(law, "llt.law", "v_values")],
        law_values_w=[float(w) for w in _require(law, "llt.law", "w_values")],
        law_probs=[[float(p) for p in row] for row in probs],
        delta=delta,
    )


@dataclass
class RwreSpec:
    rho_law: RhoLaw
    site_law: Optional[SiteLaw]
    truncation: int
    sigma0_envs: int
    sigma0_replicas: int
    sweep_model: Optional[str]
    sweep_ns: list[int]
    sweep_n_paths: int
    sweep_n_blocks: int
    horizon: int
    confirmation: int


def build_rwre(cfg: ExperimentConfig) -> RwreSpec:
    section = cfg.section("rwre", required=True)
    _check_keys(
        section,
        "rwre",
        {"rho_law", "site_law", "truncation", "sigma0_envs", "sigma0_replicas", "sweep"},
    )
    rho_law, site_law = build_rho_law(section)
    sweep = section.get("sweep", {})
    _check_keys(sweep, "rwre.sweep", {"model", "ns", "n_paths", "n_blocks", "horizon", "confirmation"})
    sweep_model = sweep.get("model")
    if sweep_model is not None:
        if sweep_model not in ("hitting", "position"):
            raise ConfigError("[rwre.sweep] model must be 'hitting' or 'position'")
        if site_law is None:
            raise ConfigError("[rwre.sweep] requires a site law (finite two-point or site_law)")
        _int_list(_require(sweep, "rwre.sweep", "ns"), "rwre.sweep.ns")
    return RwreSpec(
        rho_law=rho_law,
        site_law=site_law,
        truncation=_positive_int(section.get("truncation", 100_000), "rwre.truncation"),
        sigma0_envs=int(section.get("sigma0_envs", 0)),
        sigma0_replicas=_positive_int(section.get("sigma0_replicas", 200), "rwre.sigma0_replicas"),
        sweep_model=sweep_model,
        sweep_ns=[int(n) for n in sweep.get("ns", [])],
        sweep_n_paths=int(sweep.get("n_paths", 10_000)),
        sweep_n_blocks=int(sweep.get("n_blocks", 20_000)),
        horizon=int(sweep.get("horizon", 2**16)),
        confirmation=int(sweep.get("confirmation", 512)),
    )


@dataclass
class MixingSpec:
    chain: FiniteMarkovChain
    n_values: list[int]
    p: Optional[float]
    lam: Optional[float]


def build_mixing(cfg: ExperimentConfig) -> MixingSpec:
    section = cfg.section("mixing", required=True)
    _check_keys(section, "mixing", {"transition", "f", "anchor", "n_values", "p", "lambda"})
    transition = np.asarray(_require(section, "mixing", "transition"), dtype=float)
    f = section.get("f")
    try:
        chain = FiniteMarkovChain(
            transition,
            np.asarray(f, dtype=float) if f is not None else np.zeros(transition.shape[0]),
            anchor=int(section.get("anchor", 0)),
        )
    except Exception as exc:
        raise ConfigError(f"[mixing] invalid chain: {exc}") from exc
    p = section.get("p")
    lam = section.get("lambda")
    if (p is None) != (lam is None):
        raise ConfigError("[mixing] p and lambda must be given together")
    if p is not None:
        p = float(p)  # TOML 'inf' parses to float infinity
        lam = float(lam)
    return MixingSpec(
        chain=chain,
        n_values=_int_list(_require(section, "mixing", "n_values"), "mixing.n_values"),
        p=p,
        lam=lam,
    )
