"""Compiled inner loops for walk and chain simulation.

Kernels run their own SplitMix64 generator seeded from the caller's stream,
so results are reproducible independent of the numba version's internal RNG.
All uniforms are u in [0, 1) built from the top 53 bits.
"""

from __future__ import annotations

import numba as nb
import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.1102230246251565e-16  # 2**-53

STATUS_OK = 0
STATUS_LEFT_EDGE = 1
STATUS_STEP_LIMIT = 2


@nb.njit(cache=True, inline="always")
def _next_unit(state):
    state[0] = state[0] + _GOLDEN
    z = state[0]
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    z = z ^ (z >> _S31)
    return (z >> _S11) * _INV53


@nb.njit(cache=True)
def markov_return_blocks(cum_rows, f, anchor, count, seed):
    """Simulate `count` excursions from the anchor back to the anchor.

    Returns (lengths, sums of f along the excursion, sums of |f|).
    """
    lengths = np.empty(count, np.int64)
    sums = np.empty(count, np.float64)
    abs_sums = np.empty(count, np.float64)
    state = np.empty(1, np.uint64)
    state[0] = seed
    n_states = cum_rows.shape[0]
    for b in range(count):
        s = anchor
        steps = 0
        total = 0.0
        abs_total = 0.0
        while True:
            u = _next_unit(state)
            nxt = 0
            while nxt < n_states - 1 and u >= cum_rows[s, nxt]:
                nxt += 1
            s = nxt
            steps += 1
            total += f[s]
            abs_total += abs(f[s])
            if s == anchor:
                break
        lengths[b] = steps
        sums[b] = total
        abs_sums[b] = abs_total
    return lengths, sums, abs_sums


@nb.njit(cache=True)
def markov_first_blocks(cum_rows, f, anchor, starts, seed):
    """One excursion per start state, run until the first visit to the anchor."""
    count = starts.shape[0]
    lengths = np.empty(count, np.int64)
    sums = np.empty(count, np.float64)
    abs_sums = np.empty(count, np.float64)
    state = np.empty(1, np.uint64)
    state[0] = seed
    n_states = cum_rows.shape[0]
    for b in range(count):
        s = starts[b]
        steps = 0
        total = 0.0
        abs_total = 0.0
        while True:
            u = _next_unit(state)
            nxt = 0
            while nxt < n_states - 1 and u >= cum_rows[s, nxt]:
                nxt += 1
            s = nxt
            steps += 1
            total += f[s]
            abs_total += abs(f[s])
            if s == anchor:
                break
        lengths[b] = steps
        sums[b] = total
        abs_sums[b] = abs_total
    return lengths, sums, abs_sums


@nb.njit(cache=True)
def markov_values_at_time(cum_rows, f, starts, n, seed):
    """Additive functional after n steps, one sample per start state."""
    count = starts.shape[0]
    out = np.empty(count, np.float64)
    state = np.empty(1, np.uint64)
    state[0] = seed
    n_states = cum_rows.shape[0]
    for b in range(count):
        s = starts[b]
        total = 0.0
        for _ in range(n):
            u = _next_unit(state)
            nxt = 0
            while nxt < n_states - 1 and u >= cum_rows[s, nxt]:
                nxt += 1
            s = nxt
            total += f[s]
        out[b] = total
    return out


@nb.njit(cache=True)
def walk_path_1d(env, origin, horizon, seed):
    """Nearest-neighbor walk in a fixed environment; env[x] = P(step right).

    Returns (positions including time 0, steps walked, hit_left_edge).  On an
    edge hit the caller re-runs with a wider window and the same seed; the
    uniform sequence is positional, so the prefix is reproduced exactly.
    """
    pos = np.empty(horizon + 1, np.int64)
    pos[0] = origin
    state = np.empty(1, np.uint64)
    state[0] = seed
    x = origin
    width = env.shape[0]
    for t in range(1, horizon + 1):
        u = _next_unit(state)
        if u < env[x]:
            x += 1
        else:
            x -= 1
        if x < 0 or x >= width:
            return pos, t - 1, True
        pos[t] = x
    return pos, horizon, False


@nb.njit(cache=True)
def hitting_times_batch(envs, origin, target, seeds, max_steps):
    """First-passage time to `target` index for one walk per environment row."""
    count = envs.shape[0]
    times = np.empty(count, np.float64)
    status = np.zeros(count, np.int8)
    for i in range(count):
        state = np.empty(1, np.uint64)
        state[0] = seeds[i]
        x = origin
        t = 0
        while x != target:
            u = _next_unit(state)
            if u < envs[i, x]:
                x += 1
            else:
                x -= 1
            t += 1
            if x < 0:
                status[i] = STATUS_LEFT_EDGE
                break
            if t >= max_steps:
                status[i] = STATUS_STEP_LIMIT
                break
        times[i] = t
    return times, status


@nb.njit(cache=True)
def positions_at_time_batch(envs, origin, n_steps, seeds):
    """Displacement after n_steps for one walk per environment row."""
    count = envs.shape[0]
    out = np.empty(count, np.float64)
    status = np.zeros(count, np.int8)
    for i in range(count):
        state = np.empty(1, np.uint64)
        state[0] = seeds[i]
        x = origin
        for _ in range(n_steps):
            u = _next_unit(state)
            if u < envs[i, x]:
                x += 1
            else:
                x -= 1
            if x < 0:
                status[i] = STATUS_LEFT_EDGE
                break
        out[i] = x - origin
    return out, status


@nb.njit(cache=True)
def t1_times_in_env(env, origin, seeds, max_steps):
    """First-passage times to origin+1, replicated walks in one fixed environment."""
    count = seeds.shape[0]
    times = np.empty(count, np.float64)
    status = np.zeros(count, np.int8)
    target = origin + 1
    for i in range(count):
        state = np.empty(1, np.uint64)
        state[0] = seeds[i]
        x = origin
        t = 0
        while x != target:
            u = _next_unit(state)
            if u < env[x]:
                x += 1
            else:
                x -= 1
            t += 1
            if x < 0:
                status[i] = STATUS_LEFT_EDGE
                break
            if t >= max_steps:
                status[i] = STATUS_STEP_LIMIT
                break
        times[i] = t
    return times, status


def warm_up():
    """Compile the kernels on tiny inputs (first call in a fresh cache is slow)."""
    cum = np.array([[0.5, 1.0], [0.5, 1.0]])
    f = np.array([0.0, 1.0])
    markov_return_blocks(cum, f, 0, 1, np.uint64(1))
    markov_first_blocks(cum, f, 0, np.zeros(1, np.int64), np.uint64(1))
    markov_values_at_time(cum, f, np.zeros(1, np.int64), 2, np.uint64(1))
    env = np.full(8, 0.75)
    walk_path_1d(env, 2, 4, np.uint64(1))
    envs = np.full((1, 8), 0.75)
    hitting_times_batch(envs, 2, 4, np.ones(1, np.uint64), 10_000)
    positions_at_time_batch(envs, 4, 2, np.ones(1, np.uint64))
    t1_times_in_env(env, 2, np.ones(1, np.uint64), 10_000)
