"""Additive functionals of finite-state Markov chains with return-time blocks.

Regenerations are the successive visits to a fixed anchor state, so one block
is an excursion from the anchor back to itself; the block sum collects the
functional over steps 1..tau.  Exact routines (block law, value distribution)
require the functional to take values on a one-dimensional lattice, which
keeps the dynamic programs exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .. import _kernels
from ..errors import ResourceLimit
from ..rng import kernel_seeds
from ..types import Blocks, BlockSample
from .base import BlockLaw, ProcessModel

__all__ = ["FiniteMarkovChain", "MarkovAdditiveModel", "markov_additive_model"]

_ROW_SUM_TOL = 1e-12
_EXACT_STATE_LIMIT = 20
_EXACT_TAIL_TOL = 1e-14
_EXACT_VALUE_N_LIMIT = 64


def _reachable(adjacency: np.ndarray, start: int) -> set[int]:
    seen = {start}
    frontier = [start]
    while frontier:
        s = frontier.pop()
        for t in np.nonzero(adjacency[s])[0]:
            if int(t) not in seen:
                seen.add(int(t))
                frontier.append(int(t))
    return seen


@dataclass
class FiniteMarkovChain:
    """Row-stochastic chain with an additive functional and an anchor state."""

    transition: np.ndarray
    f: np.ndarray
    anchor: int = 0
    initial: Optional[np.ndarray] = None

    def __post_init__(self):
        self.transition = np.asarray(self.transition, dtype=np.float64)
        self.f = np.asarray(self.f, dtype=np.float64)
        n = self.transition.shape[0]
        if self.transition.shape != (n, n):
            raise ValueError("transition must be square")
        if self.f.shape != (n,):
            raise ValueError("f must assign one value per state")
        if np.any(self.transition < 0):
            raise ValueError("transition probabilities must be nonnegative")
        rows = self.transition.sum(axis=1)
        if np.any(np.abs(rows - 1.0) > _ROW_SUM_TOL):
            raise ValueError("every transition row must sum to 1 within 1e-12")
        if not 0 <= self.anchor < n:
            raise ValueError("anchor out of range")
        if self.initial is None:
            self.initial = np.zeros(n)
            self.initial[self.anchor] = 1.0
        else:
            self.initial = np.asarray(self.initial, dtype=np.float64)
            if self.initial.shape != (n,) or np.any(self.initial < 0):
                raise ValueError("initial must be a probability vector over states")
            if abs(math.fsum(self.initial) - 1.0) > _ROW_SUM_TOL:
                raise ValueError("initial must sum to 1 within 1e-12")
        adj = self.transition > 0.0
        forward = _reachable(adj, self.anchor)
        backward = _reachable(adj.T, self.anchor)
        if not forward <= backward:
            raise ValueError(
                "chain restricted to states reachable from the anchor must be irreducible"
            )
        init_support = set(np.nonzero(self.initial > 0)[0].astype(int))
        if not init_support <= backward:
            raise ValueError("anchor unreachable from part of the initial distribution")

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    def stationary(self) -> np.ndarray:
        """Stationary distribution of the (irreducible) chain."""
        n = self.n_states
        a = np.vstack([self.transition.T - np.eye(n), np.ones(n)])
        b = np.zeros(n + 1)
        b[-1] = 1.0
        pi, *_ = np.linalg.lstsq(a, b, rcond=None)
        return np.clip(pi, 0.0, None) / pi.sum()

    def period(self) -> int:
        """Period of the anchor's communicating class (BFS level gcd)."""
        adj = self.transition > 0.0
        level = {self.anchor: 0}
        frontier = [self.anchor]
        g = 0
        while frontier:
            nxt = []
            for s in frontier:
                for t in np.nonzero(adj[s])[0]:
                    t = int(t)
                    if t in level:
                        g = math.gcd(g, level[s] + 1 - level[t])
                    else:
                        level[t] = level[s] + 1
                        nxt.append(t)
            frontier = nxt
        # residual edges between already-leveled states
        for s in level:
            for t in np.nonzero(adj[s])[0]:
                g = math.gcd(g, level[s] + 1 - level[int(t)])
        return abs(g) if g else 1


class MarkovAdditiveModel(ProcessModel):
    """Blocks are anchor-to-anchor excursions; sums collect f over the excursion."""

    def __init__(self, chain: FiniteMarkovChain):
        self.chain = chain
        self._cum_rows = np.cumsum(chain.transition, axis=1)
        self._block_law_cache: Optional[BlockLaw] = None

    # -- sampling -----------------------------------------------------------

    def next_block(self, stream) -> BlockSample:
        return self.next_blocks(stream, 1)[0]

    def next_blocks(self, stream, count, stream_id=0) -> Blocks:
        seed = kernel_seeds(stream, 1)[0]
        lengths, sums, abs_sums = _kernels.markov_return_blocks(
            self._cum_rows, self.chain.f, self.chain.anchor, count, seed
        )
        return Blocks(lengths, sums, abs_sums, np.full(count, stream_id, dtype=np.int64))

    def first_block(self, stream) -> BlockSample:
        start = int(stream.choice(self.chain.n_states, p=self.chain.initial))
        seed = kernel_seeds(stream, 1)[0]
        lengths, sums, abs_sums = _kernels.markov_first_blocks(
            self._cum_rows, self.chain.f, self.chain.anchor,
            np.array([start], dtype=np.int64), seed,
        )
        return BlockSample(int(lengths[0]), float(sums[0]), float(abs_sums[0]))

    def _block_with_path(self, stream, start: int):
        # walk step by step so the functional increments are retained
        f = self.chain.f
        cum = self._cum_rows
        s = start
        incs = []
        while True:
            u = stream.random()
            s = int(np.searchsorted(cum[s], u, side="right"))
            incs.append(f[s])
            if s == self.chain.anchor:
                break
        incs = np.asarray(incs)
        total = float(math.fsum(incs))
        return BlockSample(len(incs), total, float(np.abs(incs).sum())), incs

    def next_block_with_path(self, stream):
        return self._block_with_path(stream, self.chain.anchor)

    def first_block_with_path(self, stream):
        start = int(stream.choice(self.chain.n_states, p=self.chain.initial))
        return self._block_with_path(stream, start)

    def simulate_values(self, n, count, stream, include_first=False):
        if include_first:
            starts = stream.choice(self.chain.n_states, size=count, p=self.chain.initial)
        else:
            starts = np.full(count, self.chain.anchor)
        seed = kernel_seeds(stream, 1)[0]
        return _kernels.markov_values_at_time(
            self._cum_rows, self.chain.f, starts.astype(np.int64), n, seed
        )

    # -- exact routines -----------------------------------------------------

    def _f_lattice(self) -> tuple[float, float, np.ndarray]:
        from ..lattice import _infer_lattice

        uniq = np.unique(self.chain.f)
        base, span, idx = _infer_lattice(uniq)
        lookup = {v: int(i) for v, i in zip(uniq, idx)}
        return base, span, np.array([lookup[v] for v in self.chain.f], dtype=np.int64)

    def exact_block_law(self, tail_tol: float = _EXACT_TAIL_TOL, max_len: int = 100_000) -> BlockLaw:
        """Joint law of (return time, functional sum) by DP over (state, step).

        Enumeration stops once the surviving mass drops below `tail_tol`;
        requires <= 20 states and a lattice-valued functional.
        """
        if self._block_law_cache is not None:
            return self._block_law_cache
        chain = self.chain
        if chain.n_states > _EXACT_STATE_LIMIT:
            raise ResourceLimit(f"exact block law limited to {_EXACT_STATE_LIMIT} states")
        base, span, fidx = self._f_lattice()
        p = chain.transition
        anchor = chain.anchor
        min_off = int(min(0, fidx.min()))

        # alive[s] maps lattice-sum offset -> probability of being at s (never
        # having returned) with that accumulated functional sum
        alive: dict[int, dict[int, float]] = {anchor: {0: 1.0}}
        out: dict[tuple[int, int], float] = {}
        for step in range(1, max_len + 1):
            nxt: dict[int, dict[int, float]] = {}
            for s, sums in alive.items():
                row = p[s]
                for t in np.nonzero(row > 0)[0]:
                    t = int(t)
                    w = row[t]
                    dj = int(fidx[t])
                    if t == anchor:
                        for j, q in sums.items():
                            key = (step, j + dj)
                            out[key] = out.get(key, 0.0) + q * w
                    else:
                        bucket = nxt.setdefault(t, {})
                        for j, q in sums.items():
                            bucket[j + dj] = bucket.get(j + dj, 0.0) + q * w
            alive = nxt
            remaining = sum(q for sums in alive.values() for q in sums.values())
            if remaining < tail_tol:
                break
        else:
            raise ResourceLimit(
                f"return-time tail above {tail_tol} after {max_len} steps"
            )
        lengths = np.array([k[0] for k in out], dtype=np.int64)
        jsums = np.array([k[1] for k in out], dtype=np.int64)
        probs = np.array(list(out.values()))
        order = np.lexsort((jsums, lengths))
        law = BlockLaw(
            lengths[order],
            lengths[order] * base + span * jsums[order],
            probs[order],
            tail_mass=float(remaining),
        )
        self._block_law_cache = law
        return law

    def exact_value_distribution(self, n: int, include_first: bool = False):
        """Exact pmf of X_n = sum_{i=1..n} f(zeta_i) by DP over (state, lattice sum)."""
        if n < 1:
            raise ValueError("n must be >= 1")
        if n > _EXACT_VALUE_N_LIMIT:
            raise ResourceLimit(f"exact chain distribution capped at n={_EXACT_VALUE_N_LIMIT}")
        chain = self.chain
        base, span, fidx = self._f_lattice()
        lo = int(fidx.min()) * n
        hi = int(fidx.max()) * n
        width = hi - lo + 1
        dist = np.zeros((chain.n_states, width))
        if include_first:
            start = chain.initial
        else:
            start = np.zeros(chain.n_states)
            start[chain.anchor] = 1.0
        dist[:, -lo] = start
        p = chain.transition
        for _ in range(n):
            nxt = np.zeros_like(dist)
            for s in range(chain.n_states):
                col = dist[s]
                if not col.any():
                    continue
                for t in np.nonzero(p[s] > 0)[0]:
                    t = int(t)
                    # support at step t stays in [min*t, max*t], so the roll
                    # never wraps nonzero mass
                    nxt[t] += np.roll(col, fidx[t]) * p[s, t]
            dist = nxt
        pmf = dist.sum(axis=0)
        keep = pmf > 0.0
        values = n * base + span * (np.arange(lo, hi + 1, dtype=np.int64))
        return values[keep], pmf[keep]


def markov_additive_model(chain: FiniteMarkovChain) -> MarkovAdditiveModel:
    return MarkovAdditiveModel(chain)
