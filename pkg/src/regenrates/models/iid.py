"""Sums of i.i.d. increments: every block has length one."""

from __future__ import annotations

import math
from typing import Iterable, Mapping, Optional

import numpy as np

from ..errors import ResourceLimit
from ..types import Blocks, BlockSample
from .base import BlockLaw, ProcessModel

__all__ = ["IidSumModel", "iid_model"]

_EXACT_N_LIMIT = 2**14


class IidSumModel(ProcessModel):
    """Partial sums of i.i.d. draws from a finite pmf; tau_k = k."""

    def __init__(self, values, probs):
        self.values = np.asarray(values, dtype=np.float64)
        self.probs = np.asarray(probs, dtype=np.float64)
        if self.values.ndim != 1 or self.values.shape != self.probs.shape:
            raise ValueError("values and probs must be 1-D arrays of equal length")
        if np.any(self.probs < 0):
            raise ValueError("probabilities must be nonnegative")
        total = math.fsum(self.probs)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"increment pmf must sum to 1 within 1e-12, got {total!r}")
        if len(np.unique(self.values)) != len(self.values):
            raise ValueError("increment values must be distinct")

    def next_block(self, stream: np.random.Generator) -> BlockSample:
        x = float(self.values[stream.choice(len(self.values), p=self.probs)])
        return BlockSample(1, x, abs(x))

    def next_blocks(self, stream, count, stream_id=0) -> Blocks:
        idx = stream.choice(len(self.values), size=count, p=self.probs)
        xs = self.values[idx]
        return Blocks(
            np.ones(count, dtype=np.int64),
            xs,
            np.abs(xs),
            np.full(count, stream_id, dtype=np.int64),
        )

    def next_block_with_path(self, stream):
        b = self.next_block(stream)
        return b, np.array([b.sum])

    def first_block_with_path(self, stream):
        return self.next_block_with_path(stream)

    def exact_block_law(self) -> BlockLaw:
        return BlockLaw(
            np.ones(len(self.values), dtype=np.int64), self.values.copy(), self.probs.copy()
        )

    def exact_value_distribution(self, n: int, include_first: bool = False):
        """Exact pmf of the n-fold sum by repeated-squaring convolution."""
        if n < 1:
            raise ValueError("n must be >= 1")
        if n > _EXACT_N_LIMIT:
            raise ResourceLimit(f"exact convolution capped at n={_EXACT_N_LIMIT}")
        from ..lattice import _infer_lattice  # same span inference as the 2D engine

        base, span, idx = _infer_lattice(np.unique(self.values))
        pmf = np.zeros(int(idx.max()) + 1)
        value_to_index = {v: i for v, i in zip(np.unique(self.values), idx)}
        for v, p in zip(self.values, self.probs):
            pmf[value_to_index[v]] += p

        acc: Optional[np.ndarray] = None
        cur = pmf
        copies_acc = 0
        copies_cur = 1
        m = n
        while m > 0:
            if m & 1:
                acc = cur.copy() if acc is None else np.convolve(acc, cur)
                copies_acc += copies_cur
            m >>= 1
            if m > 0:
                cur = np.convolve(cur, cur)
                copies_cur *= 2
        assert acc is not None and copies_acc == n
        values = n * base + span * np.arange(len(acc))
        keep = acc > 0.0
        return values[keep], acc[keep]

    def simulate_values(self, n, count, stream, include_first=False):
        # multinomial split over the support is an exact sampler of the n-fold sum
        counts = stream.multinomial(n, self.probs, size=count)
        return counts @ self.values


def iid_model(increment_law: Mapping[float, float] | Iterable[tuple[float, float]]) -> IidSumModel:
    """Build the i.i.d.-sum model from a finite pmf over the reals."""
    if isinstance(increment_law, Mapping):
        items = sorted(increment_law.items())
    else:
        items = sorted(increment_law)
    values = [v for v, _ in items]
    probs = [p for _, p in items]
    return IidSumModel(values, probs)
