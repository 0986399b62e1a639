"""Abstract generator interface for regenerative processes.

A model draws i.i.d. post-regeneration blocks (`next_block`) plus a possibly
differently distributed initial block (`first_block`).  Optional capabilities
let engines go exact or fast where a model supports it:

* ``exact_block_law`` -- finite joint pmf over (length, sum);
* ``next_block_with_path`` -- block plus its within-block increments, used to
  truncate a final partial block exactly at time n;
* ``exact_value_distribution`` -- exact law of the process value at index n;
* ``simulate_values`` -- direct simulation of the value at index n.
"""

from __future__ import annotations

import copy
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import CensoredBlock, HarvestFailed
from ..types import Blocks, BlockSample

__all__ = ["BlockLaw", "ProcessModel"]


@dataclass(frozen=True)
class BlockLaw:
    """Finite joint pmf over (block length, block sum)."""

    lengths: np.ndarray
    sums: np.ndarray
    probs: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        if not (len(self.lengths) == len(self.sums) == len(self.probs)):
            raise ValueError("length/sum/prob arrays must align")
        if abs(math.fsum(self.probs) + self.tail_mass - 1.0) > 1e-10:
            raise ValueError("block law mass must be 1 within 1e-10")

    def mean_length(self) -> float:
        return math.fsum(self.probs * self.lengths)

    def mean_sum(self) -> float:
        return math.fsum(self.probs * self.sums)

    def mu(self) -> float:
        return self.mean_sum() / self.mean_length()

    def sigma2(self) -> float:
        mu = self.mu()
        centered = self.sums - self.lengths * mu
        return math.fsum(self.probs * centered * centered) / self.mean_length()

    def covariance(self) -> tuple[float, float, float]:
        """Covariance of (sum - length*mu, length) as (a11, a12, a22)."""
        mu = self.mu()
        tau = self.mean_length()
        u = self.sums - self.lengths * mu
        a11 = math.fsum(self.probs * u * u)
        a12 = math.fsum(self.probs * u * (self.lengths - tau))
        a22 = math.fsum(self.probs * (self.lengths - tau) ** 2)
        return a11, a12, a22

    def length_moment(self, order: float) -> float:
        return math.fsum(self.probs * np.asarray(self.lengths, dtype=float) ** order)

    def prob_of(self, length: int, total: float, tol: float = 1e-9) -> float:
        mask = (self.lengths == length) & (np.abs(self.sums - total) <= tol)
        return float(math.fsum(self.probs[mask]))


class ProcessModel(ABC):
    """Generator of regeneration blocks under the post-regeneration law."""

    @abstractmethod
    def next_block(self, stream: np.random.Generator) -> BlockSample:
        """Draw one post-regeneration block; i.i.d. across calls."""

    def first_block(self, stream: np.random.Generator) -> BlockSample:
        """Draw the initial block.  Defaults to the post-regeneration law."""
        return self.next_block(stream)

    def next_blocks(self, stream: np.random.Generator, count: int, stream_id: int = 0) -> Blocks:
        """Draw `count` blocks, retrying censored trajectories.

        Aborts with HarvestFailed when at least 99% of attempts censor.
        """
        lengths = np.empty(count, dtype=np.int64)
        sums = np.empty(count, dtype=np.float64)
        abs_sums = np.empty(count, dtype=np.float64)
        got = 0
        attempts = 0
        censored = 0
        while got < count:
            attempts += 1
            try:
                b = self.next_block(stream)
            except CensoredBlock:
                censored += 1
                if censored >= 100 and censored >= 0.99 * attempts:
                    raise HarvestFailed(
                        f"{censored}/{attempts} block attempts censored",
                        attempts=attempts,
                        censored=censored,
                    )
                continue
            lengths[got] = b.length
            sums[got] = b.sum
            abs_sums[got] = b.abs_sum
            got += 1
        blocks = Blocks(lengths, sums, abs_sums, np.full(count, stream_id, dtype=np.int64))
        return blocks

    # -- optional capabilities ----------------------------------------------

    def exact_block_law(self) -> Optional[BlockLaw]:
        return None

    def next_block_with_path(
        self, stream: np.random.Generator
    ) -> Optional[tuple[BlockSample, np.ndarray]]:
        """Block plus its within-block increment sequence, or None."""
        return None

    def first_block_with_path(
        self, stream: np.random.Generator
    ) -> Optional[tuple[BlockSample, np.ndarray]]:
        return None

    def exact_value_distribution(
        self, n: int, include_first: bool = False
    ) -> Optional[tuple[np.ndarray, np.ndarray]]:
        """Exact pmf (values, probs) of the process value at index n, or None."""
        return None

    def simulate_values(
        self,
        n: int,
        count: int,
        stream: np.random.Generator,
        include_first: bool = False,
    ) -> Optional[np.ndarray]:
        """Direct draws of the value at index n, or None if unsupported."""
        return None

    # -- bookkeeping ---------------------------------------------------------

    censored_blocks: int = 0
    trajectories: int = 0

    def spawn(self) -> "ProcessModel":
        """Fresh instance with the same parameters and cleared buffers."""
        clone = copy.deepcopy(self)
        clone.reset()
        return clone

    def reset(self):
        self.censored_blocks = 0
        self.trajectories = 0
