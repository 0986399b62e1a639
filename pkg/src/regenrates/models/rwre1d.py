"""1D random walks in random environments with directional regeneration blocks.

A trajectory is simulated in a fresh environment up to a fixed horizon; the
regeneration times are the strict running records of the position that are
never undercut for the remainder of the horizon.  Records whose confirmation
window would cross the horizon are discarded and counted (censoring), so the
residual bias is auditable.  Two block views share the machinery:

* position blocks: (steps between regenerations, displacement);
* hitting blocks, indexed by space: (sites crossed, time elapsed).

Environments are realized through chunk-stable per-trajectory caches, so a
trajectory re-run with a wider site window reproduces the same walk exactly.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .. import _kernels
from ..errors import CensoredBlock, HarvestFailed, RegenRatesError
from ..rng import SeedSpec, kernel_seeds
from ..types import Blocks, BlockSample
from .base import ProcessModel
from .site_laws import Environment1d, SiteLaw

__all__ = [
    "Rwre1dPositionModel",
    "Rwre1dHittingModel",
    "rwre1d_position_model",
    "rwre1d_hitting_model",
]

DEFAULT_HORIZON = 2**16
DEFAULT_CONFIRMATION = 512
_LEFT_MARGIN = 512
_LEFT_LIMIT = 2**20
_EMPTY_TRAJECTORY_LIMIT = 100


def scan_regenerations(levels: np.ndarray, confirmation: int) -> tuple[np.ndarray, int]:
    """Confirmed regeneration times of a level path started at 0.

    A time t > 0 qualifies when levels[t] is a strict record, is never
    undercut through the end of the path, and t + confirmation stays inside
    the path.  Returns (times, count of candidates lost to the window rule).
    """
    steps = len(levels) - 1
    prefix_max = np.maximum.accumulate(levels)
    records = levels[1:] > prefix_max[:-1]
    suffix_min = np.minimum.accumulate(levels[::-1])[::-1]
    never_undercut = levels[1:] == suffix_min[1:]
    candidates = 1 + np.nonzero(records & never_undercut)[0]
    eligible = candidates[candidates + confirmation <= steps]
    return eligible, int(len(candidates) - len(eligible))


class _Walk1dBase(ProcessModel):
    """Shared trajectory machinery for the position and hitting views."""

    def __init__(
        self,
        site_law: SiteLaw,
        horizon: int = DEFAULT_HORIZON,
        confirmation: int = DEFAULT_CONFIRMATION,
    ):
        if horizon < 2:
            raise ValueError("horizon must be at least 2")
        if not 0 <= confirmation <= horizon:
            raise ValueError("confirmation must lie in [0, horizon]")
        self.site_law = site_law
        self.horizon = int(horizon)
        self.confirmation = int(confirmation)
        self._buffer: list[tuple[BlockSample, Optional[np.ndarray]]] = []
        self.reset()

    def reset(self):
        super().reset()
        self._buffer = []

    # -- trajectory simulation ------------------------------------------------

    def _env_from_keys(self, k0: int, k1: int) -> Environment1d:
        return Environment1d(self.site_law, SeedSpec(int(k0), int(k1)))

    def _walk_levels(self, env: Environment1d, step_seed, horizon: int) -> np.ndarray:
        """Level path of one walk from site 0; widens the window on demand."""
        left = _LEFT_MARGIN
        while True:
            window = env.window(-left, horizon)
            pos, steps, hit_edge = _kernels.walk_path_1d(window, left, horizon, step_seed)
            if not hit_edge:
                return pos[: steps + 1] - left
            left *= 2
            if left > _LEFT_LIMIT:
                raise RegenRatesError(
                    f"walk ventured past -{_LEFT_LIMIT}; environment guard tripped"
                )

    def _trajectory(self, stream) -> tuple[np.ndarray, np.ndarray, int]:
        """(levels, regeneration times, censored-block count) of a fresh walk."""
        k0, k1, step_seed = kernel_seeds(stream, 3)
        env = self._env_from_keys(k0, k1)
        levels = self._walk_levels(env, step_seed, self.horizon)
        regens, window_censored = scan_regenerations(levels, self.confirmation)
        self.trajectories += 1
        censored = window_censored + 1  # trailing partial segment is always discarded
        self.censored_blocks += censored
        return levels, regens, censored

    # -- block views (implemented by subclasses) ------------------------------

    def _block_arrays(self, levels, regens) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        raise NotImplementedError

    def _first_segment(self, levels, tau1: int) -> BlockSample:
        raise NotImplementedError

    def _increments(self, levels, t0: int, t1: int) -> np.ndarray:
        raise NotImplementedError

    # -- ProcessModel surface --------------------------------------------------

    def _refill_once(self, stream, with_paths: bool):
        """One fresh trajectory; raises CensoredBlock when it yields no block pair."""
        levels, regens, _ = self._trajectory(stream)
        if len(regens) < 2:
            raise CensoredBlock(
                f"no confirmed regeneration pair within horizon {self.horizon}",
                steps=len(levels) - 1,
                max_level=int(levels.max()),
                candidates=len(regens),
            )
        lengths, sums, abs_sums = self._block_arrays(levels, regens)
        for k in range(len(lengths)):
            incs = self._increments(levels, int(regens[k]), int(regens[k + 1])) if with_paths else None
            self._buffer.append(
                (BlockSample(int(lengths[k]), float(sums[k]), float(abs_sums[k])), incs)
            )

    def next_block(self, stream) -> BlockSample:
        if not self._buffer:
            self._refill_once(stream, with_paths=False)
        return self._buffer.pop(0)[0]

    def next_block_with_path(self, stream):
        while True:
            if self._buffer:
                block, incs = self._buffer.pop(0)
                if incs is not None:
                    return block, incs
                continue  # drop pathless leftovers from a previous plain refill
            self._refill_once(stream, with_paths=True)

    def next_blocks(self, stream, count, stream_id=0) -> Blocks:
        lengths = np.empty(count, dtype=np.int64)
        sums = np.empty(count, dtype=np.float64)
        abs_sums = np.empty(count, dtype=np.float64)
        got = 0
        attempts = 0
        censored = 0
        while got < count:
            if self._buffer:
                take = min(len(self._buffer), count - got)
                for i in range(take):
                    b = self._buffer[i][0]
                    lengths[got + i] = b.length
                    sums[got + i] = b.sum
                    abs_sums[got + i] = b.abs_sum
                del self._buffer[:take]
                got += take
            else:
                attempts += 1
                try:
                    self._refill_once(stream, with_paths=False)
                except CensoredBlock:
                    censored += 1
                    if censored >= _EMPTY_TRAJECTORY_LIMIT and censored >= 0.99 * attempts:
                        raise HarvestFailed(
                            f"{censored}/{attempts} trajectories produced no confirmed "
                            f"regeneration pair (horizon {self.horizon})",
                            attempts=attempts,
                            censored=censored,
                        )
        return Blocks(lengths, sums, abs_sums, np.full(count, stream_id, dtype=np.int64))

    def _fresh_first(self, stream):
        empty_streak = 0
        while True:
            levels, regens, _ = self._trajectory(stream)
            if len(regens) >= 1:
                return levels, int(regens[0])
            empty_streak += 1
            if empty_streak >= _EMPTY_TRAJECTORY_LIMIT:
                raise CensoredBlock(
                    "no confirmed regeneration within the horizon",
                    steps=len(levels) - 1,
                    max_level=int(levels.max()),
                )

    def first_block(self, stream) -> BlockSample:
        levels, tau1 = self._fresh_first(stream)
        return self._first_segment(levels, tau1)

    def first_block_with_path(self, stream):
        levels, tau1 = self._fresh_first(stream)
        return self._first_segment(levels, tau1), self._increments(levels, 0, tau1)


class Rwre1dPositionModel(_Walk1dBase):
    """Blocks of the walk position: length = steps, sum = displacement.

    Nearest-neighbor steps have unit modulus, so the absolute-increment sum
    equals the step count exactly.
    """

    def _block_arrays(self, levels, regens):
        lengths = np.diff(regens)
        sums = np.diff(levels[regens]).astype(np.float64)
        return lengths, sums, lengths.astype(np.float64)

    def _first_segment(self, levels, tau1):
        return BlockSample(tau1, float(levels[tau1]), float(tau1))

    def _increments(self, levels, t0, t1):
        return np.diff(levels[t0 : t1 + 1]).astype(np.float64)

    def simulate_values(self, n, count, stream, include_first=False):
        """Direct draws of the position after n steps under the annealed law."""
        if not include_first:
            return None  # the post-regeneration law is served by block assembly
        keys = stream.integers(0, 2**64, size=(count, 3), dtype=np.uint64)
        out = np.empty(count)
        for i in range(count):
            env = self._env_from_keys(keys[i, 0], keys[i, 1])
            levels = self._walk_levels(env, keys[i, 2], n)
            out[i] = levels[-1]
        return out


class Rwre1dHittingModel(_Walk1dBase):
    """Blocks of the hitting-time process indexed by space: length = sites
    crossed between regenerations, sum = time elapsed (always >= length)."""

    def _block_arrays(self, levels, regens):
        lengths = np.diff(levels[regens])
        sums = np.diff(regens).astype(np.float64)
        return lengths, sums, sums.copy()

    def _first_segment(self, levels, tau1):
        sites = int(levels[tau1])
        return BlockSample(sites, float(tau1), float(tau1))

    def _increments(self, levels, t0, t1):
        # per-site crossing times: first-passage differences over the block's range
        prefix_max = np.maximum.accumulate(levels)
        lo, hi = int(levels[t0]), int(levels[t1])
        passage = np.searchsorted(prefix_max, np.arange(lo, hi + 1), side="left")
        return np.diff(passage).astype(np.float64)

    def simulate_values(self, n, count, stream, include_first=False):
        """Direct draws of the first-passage time of site n under the annealed law."""
        if not include_first:
            return None
        keys = stream.integers(0, 2**64, size=(count, 3), dtype=np.uint64)
        out = np.empty(count)
        for i in range(count):
            out[i] = self._hit_one(keys[i], n)
        return out

    def _hit_one(self, key_row, n) -> float:
        env = self._env_from_keys(key_row[0], key_row[1])
        left = _LEFT_MARGIN
        while True:
            window = env.window(-left, n)
            seeds = np.array([key_row[2]], dtype=np.uint64)
            times, status = _kernels.hitting_times_batch(
                window[None, :], left, left + n, seeds, 2**40
            )
            if status[0] == _kernels.STATUS_OK:
                return float(times[0])
            if status[0] == _kernels.STATUS_STEP_LIMIT:
                raise RegenRatesError("hitting-time simulation exceeded the step limit")
            left *= 2
            if left > _LEFT_LIMIT:
                raise RegenRatesError(
                    f"walk ventured past -{_LEFT_LIMIT}; environment guard tripped"
                )


def rwre1d_position_model(
    site_law: SiteLaw,
    horizon: int = DEFAULT_HORIZON,
    confirmation: int = DEFAULT_CONFIRMATION,
) -> Rwre1dPositionModel:
    return Rwre1dPositionModel(site_law, horizon, confirmation)


def rwre1d_hitting_model(
    site_law: SiteLaw,
    horizon: int = DEFAULT_HORIZON,
    confirmation: int = DEFAULT_CONFIRMATION,
) -> Rwre1dHittingModel:
    return Rwre1dHittingModel(site_law, horizon, confirmation)
