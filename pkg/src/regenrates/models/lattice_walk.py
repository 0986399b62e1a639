"""Nearest-neighbor walks in i.i.d. environments on Z^d with directional
regeneration blocks of a projected coordinate.

The walk scans its path for times whose projection on the transience
direction u is a strict record never undercut through the simulated horizon
(with a confirmation window), and emits blocks of the w-projection.  The
one-dimensional case delegates to the dedicated 1D machinery so both share
one regeneration definition.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import CensoredBlock, HarvestFailed
from ..types import BlockSample
from .base import ProcessModel
from .rwre1d import DEFAULT_CONFIRMATION, DEFAULT_HORIZON, Rwre1dPositionModel, scan_regenerations
from .site_laws import SiteLaw, TwoPointSiteLaw

__all__ = [
    "LatticeSiteLaw",
    "FixedVectorSiteLaw",
    "DirichletSiteLaw",
    "LatticeWalkConfig",
    "RwreLatticeModel",
    "rwre_lattice_model",
]

_UNIT_TOL = 1e-12
_EMPTY_TRAJECTORY_LIMIT = 100


class LatticeSiteLaw(ABC):
    """Sampler of one site's probability vector over the 2d unit steps.

    Directions are ordered (+e1, -e1, +e2, -e2, ...).
    """

    @abstractmethod
    def sample_site(self, rng: np.random.Generator, dimension: int) -> np.ndarray: ...


class FixedVectorSiteLaw(LatticeSiteLaw):
    """Deterministic environment: every site gets the same vector."""

    def __init__(self, probs):
        self.probs = np.asarray(probs, dtype=np.float64)
        if np.any(self.probs < 0) or abs(math.fsum(self.probs) - 1.0) > 1e-12:
            raise ValueError("site probabilities must be a distribution")

    def sample_site(self, rng, dimension):
        if len(self.probs) != 2 * dimension:
            raise ValueError("probability vector length must be 2*dimension")
        return self.probs


class DirichletSiteLaw(LatticeSiteLaw):
    """Dirichlet(alphas) environment over the 2d directions."""

    def __init__(self, alphas):
        self.alphas = np.asarray(alphas, dtype=np.float64)
        if np.any(self.alphas <= 0):
            raise ValueError("Dirichlet parameters must be positive")

    def sample_site(self, rng, dimension):
        if len(self.alphas) != 2 * dimension:
            raise ValueError("parameter vector length must be 2*dimension")
        return rng.dirichlet(self.alphas)


@dataclass
class LatticeWalkConfig:
    """Geometry and horizon of a directional-regeneration lattice walk."""

    dimension: int
    site_law: LatticeSiteLaw
    direction_u: np.ndarray
    projection_w: np.ndarray
    horizon: int = DEFAULT_HORIZON
    confirmation: int = DEFAULT_CONFIRMATION
    exact_abs_sum: bool = False

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        self.direction_u = np.asarray(self.direction_u, dtype=np.float64)
        self.projection_w = np.asarray(self.projection_w, dtype=np.float64)
        for name, v in (("direction_u", self.direction_u), ("projection_w", self.projection_w)):
            if v.shape != (self.dimension,):
                raise ValueError(f"{name} must be a vector of length {self.dimension}")
            if abs(np.linalg.norm(v) - 1.0) > _UNIT_TOL:
                raise ValueError(f"{name} must be a unit vector within 1e-12")
        if self.confirmation > self.horizon:
            raise ValueError("confirmation must not exceed horizon")


def _unit_steps(dimension: int) -> np.ndarray:
    steps = np.zeros((2 * dimension, dimension), dtype=np.int64)
    for k in range(dimension):
        steps[2 * k, k] = 1
        steps[2 * k + 1, k] = -1
    return steps


class RwreLatticeModel(ProcessModel):
    """Blocks of the w-projection between directional regenerations.

    Block length is the time between regenerations; each step moves the
    w-projection by at most 1 in modulus, so the step count is the
    conservative absolute-increment sum (exact tracking is a config flag).
    """

    def __init__(self, cfg: LatticeWalkConfig):
        self.cfg = cfg
        self._steps = _unit_steps(cfg.dimension)
        self._step_u = self._steps @ cfg.direction_u
        self._step_w = self._steps @ cfg.projection_w
        self._buffer: list[BlockSample] = []
        self._first_candidate: Optional[BlockSample] = None
        self.last_regen_u_projections: Optional[np.ndarray] = None
        self.reset()

    def reset(self):
        super().reset()
        self._buffer = []

    def _simulate_projections(self, stream) -> tuple[np.ndarray, np.ndarray]:
        """(u-projections, w-projections) of one walk in a fresh environment."""
        cfg = self.cfg
        env: dict[tuple, np.ndarray] = {}
        site = (0,) * cfg.dimension
        u_proj = np.empty(cfg.horizon + 1)
        w_proj = np.empty(cfg.horizon + 1)
        u_proj[0] = 0.0
        w_proj[0] = 0.0
        pos = np.zeros(cfg.dimension, dtype=np.int64)
        uniforms = stream.random(cfg.horizon)
        for t in range(1, cfg.horizon + 1):
            cum = env.get(site)
            if cum is None:
                cum = np.cumsum(cfg.site_law.sample_site(stream, cfg.dimension))
                env[site] = cum
            k = int(np.searchsorted(cum, uniforms[t - 1], side="right"))
            k = min(k, 2 * cfg.dimension - 1)
            pos += self._steps[k]
            site = tuple(pos)
            u_proj[t] = u_proj[t - 1] + self._step_u[k]
            w_proj[t] = w_proj[t - 1] + self._step_w[k]
        return u_proj, w_proj

    def _trajectory_blocks(self, stream) -> list[BlockSample]:
        u_proj, w_proj = self._simulate_projections(stream)
        regens, window_censored = scan_regenerations(u_proj, self.cfg.confirmation)
        self.trajectories += 1
        self.censored_blocks += window_censored + 1
        regen_u = u_proj[regens]
        if len(regens) >= 1:
            # regeneration definition forces strictly increasing u-records
            assert np.all(np.diff(regen_u) > 0), "u-projection records must increase"
            self.last_regen_u_projections = regen_u
        blocks = []
        for k in range(len(regens) - 1):
            t0, t1 = int(regens[k]), int(regens[k + 1])
            length = t1 - t0
            total = float(w_proj[t1] - w_proj[t0])
            if self.cfg.exact_abs_sum:
                abs_total = float(np.abs(np.diff(w_proj[t0 : t1 + 1])).sum())
            else:
                abs_total = float(length)
            blocks.append(BlockSample(length, total, abs_total))
        self._first_candidate = None
        if len(regens) >= 1:
            t1 = int(regens[0])
            self._first_candidate = BlockSample(t1, float(w_proj[t1]), float(t1))
        return blocks

    def next_block(self, stream) -> BlockSample:
        empty_streak = 0
        while not self._buffer:
            blocks = self._trajectory_blocks(stream)
            if blocks:
                self._buffer.extend(blocks)
                break
            empty_streak += 1
            if empty_streak >= _EMPTY_TRAJECTORY_LIMIT:
                raise HarvestFailed(
                    f"{empty_streak} consecutive trajectories produced no confirmed "
                    "regeneration pair",
                    attempts=empty_streak,
                    censored=empty_streak,
                )
        return self._buffer.pop(0)

    def first_block(self, stream) -> BlockSample:
        for _ in range(_EMPTY_TRAJECTORY_LIMIT):
            self._trajectory_blocks(stream)
            if self._first_candidate is not None:
                return self._first_candidate
        raise CensoredBlock("no confirmed regeneration within the horizon")


def rwre_lattice_model(cfg: LatticeWalkConfig) -> ProcessModel:
    """Build the lattice model; d=1 with u = +e1 delegates to the 1D machinery
    (identical regeneration definition, shared simulation path)."""
    if cfg.dimension == 1 and cfg.direction_u[0] > 0:
        law = cfg.site_law
        if isinstance(law, FixedVectorSiteLaw):
            site_law: SiteLaw = TwoPointSiteLaw.homogeneous(float(law.probs[0]))
            model = Rwre1dPositionModel(site_law, cfg.horizon, cfg.confirmation)
            if cfg.projection_w[0] < 0:
                return _MirroredSumModel(model)
            return model
    return RwreLatticeModel(cfg)


class _MirroredSumModel(ProcessModel):
    """Negates block sums of a wrapped model (w pointing against u in d=1)."""

    def __init__(self, inner: ProcessModel):
        self.inner = inner

    def next_block(self, stream) -> BlockSample:
        b = self.inner.next_block(stream)
        return BlockSample(b.length, -b.sum, b.abs_sum)

    def first_block(self, stream) -> BlockSample:
        b = self.inner.first_block(stream)
        return BlockSample(b.length, -b.sum, b.abs_sum)
