"""Deterministic random-stream plumbing.

Streams are identified by (master_seed, stream_index) and are materialized as
independent PCG64 generators through numpy's SeedSequence spawn-key mechanism.
Two calls with the same SeedSpec produce byte-identical draw sequences;
distinct stream indices never share state, so parallel harvesting stays
deterministic regardless of scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SeedSpec", "make_stream", "substream", "kernel_seeds"]


@dataclass(frozen=True)
class SeedSpec:
    """Address of one reproducible random stream."""

    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must fit in an unsigned 64-bit integer")
        if self.stream_index < 0:
            raise ValueError("stream_index must be nonnegative")

    def child(self, index: int) -> "SeedSpec":
        """Spec addressing the index-th substream (used by fan-out code)."""
        if index < 0:
            raise ValueError("substream index must be nonnegative")
        return SeedSpec(self.master_seed, self.stream_index * 0x10000 + index)


def _seed_sequence(spec: SeedSpec, extra: tuple[int, ...] = ()) -> np.random.SeedSequence:
    return np.random.SeedSequence(spec.master_seed, spawn_key=(spec.stream_index, *extra))


def make_stream(spec: SeedSpec) -> np.random.Generator:
    """Stateful uniform generator for the given spec."""
    return np.random.Generator(np.random.PCG64(_seed_sequence(spec)))


def substream(spec: SeedSpec, index: int) -> np.random.Generator:
    """Deterministic child stream; children of distinct (spec, index) never collide."""
    if index < 0:
        raise ValueError("substream index must be nonnegative")
    return np.random.Generator(np.random.PCG64(_seed_sequence(spec, (index,))))


def kernel_seeds(stream: np.random.Generator, count: int) -> np.ndarray:
    """Draw uint64 seeds for compiled kernels that run their own generator."""
    return stream.integers(0, 2**64, size=count, dtype=np.uint64)
