"""Exact distribution engine for sums of i.i.d. lattice pairs.

A joint law of a centered pair (V, W) is stored on an integer index grid with
per-coordinate spans and real offsets.  Exact n-fold convolutions are computed
by repeated squaring; small products use exact shift-and-add, large ones fall
back to FFT convolution with post-hoc renormalization under a strict error
budget.  On top of the exact pmf the module evaluates the weighted local-CLT
discrepancy for the lattice coordinate and the weighted semi-local discrepancy
(CDF in the first coordinate, exact lattice point in the second) against the
half-plane Gaussian kernel, plus the characteristic functions used in the
normal-approximation diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.signal import fftconvolve

from .errors import DegenerateCovariance, ResourceLimit
from .gaussian import CovarianceMatrix2, psi_kernel, psi_x_limit

__all__ = [
    "LatticeJointLaw",
    "LatticePmf2D",
    "SemiLocalReport",
    "convolve_n",
    "weighted_llt_discrepancy",
    "semilocal_discrepancy",
    "charfn_eval",
    "charfn_closeness_spotcheck",
]

MAX_SUPPORT_ATOMS = 64
MAX_CONVOLUTION_N = 4096
MASS_ERROR_BUDGET = 1e-10
# pairwise convolutions cheaper than this run exact shift-and-add
_SHIFT_ADD_COST_LIMIT = 2**24
# sweep window for lattice points outside the support, in marginal sd units
_PAD_SIGMAS = 12.0

_LATTICE_TOL = 1e-9


def _float_gcd(values: np.ndarray, tol: float) -> float:
    """Approximate positive gcd of nonnegative floats (Euclid with tolerance)."""
    g = 0.0
    for v in values:
        a, b = max(g, v), min(g, v)
        while b > tol:
            a, b = b, math.fmod(a, b)
        g = a
    return g


def _infer_lattice(values: np.ndarray) -> tuple[float, float, np.ndarray]:
    """Map distinct floats onto base + span * index with a maximal span.

    Returns (base, span, integer indices); a single-point support gets span 1.
    """
    values = np.asarray(values, dtype=float)
    base = float(values.min())
    diffs = values - base
    scale = max(1.0, float(np.abs(values).max()))
    if len(values) == 1:
        return base, 1.0, np.zeros(1, dtype=np.int64)
    span = _float_gcd(diffs[diffs > 0], _LATTICE_TOL * scale)
    if span <= 0:
        raise ValueError("could not infer a lattice span from the support")
    idx = np.rint(diffs / span).astype(np.int64)
    if np.max(np.abs(base + idx * span - values)) > _LATTICE_TOL * scale:
        raise ValueError("support does not lie on a lattice within tolerance")
    g = int(np.gcd.reduce(idx[idx > 0])) if np.any(idx > 0) else 1
    if g > 1:
        span *= g
        idx //= g
    return base, span, idx


class LatticeJointLaw:
    """Joint pmf of a centered pair (V, W) on a 2D lattice.

    probs[ia, ib] is the mass at value (v0 + ia*hV, w0 + ib*hW).  The law is
    stored pre-centered: the mean of (V, W) is (0, 0) within 1e-12, so the
    offsets carry the lattice shift of each coordinate.
    """

    def __init__(self, probs: np.ndarray, v0: float, hv: float, w0: float, hw: float):
        self.probs = np.asarray(probs, dtype=float)
        if self.probs.ndim != 2:
            raise ValueError("probs must be a 2D array")
        if np.any(self.probs < 0):
            raise ValueError("probabilities must be nonnegative")
        self.v0, self.hv, self.w0, self.hw = float(v0), float(hv), float(w0), float(hw)
        if self.hv <= 0 or self.hw <= 0:
            raise ValueError("spans must be positive")
        mass = math.fsum(self.probs.ravel())
        if abs(mass - 1.0) > 1e-12:
            raise ValueError(f"probabilities must sum to 1 within 1e-12, got {mass!r}")
        mv, mw = self._raw_mean()
        if abs(mv) > 1e-12 or abs(mw) > 1e-12:
            raise ValueError("law must be centered; use a from_* constructor")

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_atoms(cls, atoms: Iterable[tuple[float, float, float]]) -> "LatticeJointLaw":
        """Build a centered law from (v, w, probability) atoms."""
        merged: dict[tuple[float, float], float] = {}
        for v, w, p in atoms:
            if p < 0:
                raise ValueError("probabilities must be nonnegative")
            merged[(float(v), float(w))] = merged.get((float(v), float(w)), 0.0) + float(p)
        if not merged:
            raise ValueError("empty support")
        total = math.fsum(merged.values())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"atom probabilities must sum to 1 within 1e-12, got {total!r}")
        vs = np.array([k[0] for k in merged])
        ws = np.array([k[1] for k in merged])
        ps = np.array(list(merged.values()))
        mean_v = math.fsum(ps * vs)
        mean_w = math.fsum(ps * ws)
        vs -= mean_v
        ws -= mean_w
        v0, hv, vi = _infer_lattice(np.unique(vs))
        w0, hw, wi = _infer_lattice(np.unique(ws))
        v_index = {val: i for val, i in zip(np.unique(vs), vi)}
        w_index = {val: i for val, i in zip(np.unique(ws), wi)}
        grid = np.zeros((int(max(vi)) + 1, int(max(wi)) + 1))
        for v, w, p in zip(vs, ws, ps):
            grid[v_index[v], w_index[w]] += p
        return cls(grid, v0, hv, w0, hw)

    @classmethod
    def from_table(
        cls, v_values: Sequence[float], w_values: Sequence[float], probs
    ) -> "LatticeJointLaw":
        probs = np.asarray(probs, dtype=float)
        if probs.shape != (len(v_values), len(w_values)):
            raise ValueError("probability table shape must match value lists")
        atoms = [
            (v_values[i], w_values[j], probs[i, j])
            for i in range(len(v_values))
            for j in range(len(w_values))
            if probs[i, j] != 0.0
        ]
        return cls.from_atoms(atoms)

    @classmethod
    def from_product(
        cls,
        v_values: Sequence[float],
        v_probs: Sequence[float],
        w_values: Sequence[float],
        w_probs: Sequence[float],
    ) -> "LatticeJointLaw":
        table = np.outer(np.asarray(v_probs, float), np.asarray(w_probs, float))
        return cls.from_table(list(v_values), list(w_values), table)

    # -- properties --------------------------------------------------------

    def _raw_mean(self) -> tuple[float, float]:
        ia, ib = np.nonzero(self.probs)
        p = self.probs[ia, ib]
        mv = math.fsum(p * (self.v0 + ia * self.hv))
        mw = math.fsum(p * (self.w0 + ib * self.hw))
        return mv, mw

    @property
    def support_size(self) -> int:
        return int(np.count_nonzero(self.probs))

    def atoms(self) -> list[tuple[float, float, float]]:
        ia, ib = np.nonzero(self.probs)
        return [
            (self.v0 + int(a) * self.hv, self.w0 + int(b) * self.hw, float(self.probs[a, b]))
            for a, b in zip(ia, ib)
        ]

    @property
    def cov(self) -> CovarianceMatrix2:
        ia, ib = np.nonzero(self.probs)
        p = self.probs[ia, ib]
        v = self.v0 + ia * self.hv
        w = self.w0 + ib * self.hw
        return CovarianceMatrix2(
            math.fsum(p * v * v), math.fsum(p * v * w), math.fsum(p * w * w)
        )

    def charfn(self, t1: float, t2: float) -> complex:
        """E[exp(i(t1 V + t2 W))] by direct summation over the support."""
        ia, ib = np.nonzero(self.probs)
        p = self.probs[ia, ib]
        v = self.v0 + ia * self.hv
        w = self.w0 + ib * self.hw
        return complex(np.sum(p * np.exp(1j * (t1 * v + t2 * w))))


@dataclass
class LatticePmf2D:
    """Exact pmf of an n-fold sum on the index lattice."""

    probs: np.ndarray
    v0: float
    hv: float
    w0: float
    hw: float
    n: int
    mass_defect: float = 0.0

    @property
    def v_values(self) -> np.ndarray:
        return self.v0 + self.hv * np.arange(self.probs.shape[0])

    @property
    def w_values(self) -> np.ndarray:
        return self.w0 + self.hw * np.arange(self.probs.shape[1])

    def total_mass(self) -> float:
        return math.fsum(self.probs.ravel())


def _pairwise_convolve(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
    """Convolve two nonnegative 2D pmf arrays; returns (result, mass clipped)."""
    nnz_a, nnz_b = np.count_nonzero(a), np.count_nonzero(b)
    small, large = (a, b) if nnz_a <= nnz_b else (b, a)
    small_nnz = min(nnz_a, nnz_b)
    if small_nnz * large.size <= _SHIFT_ADD_COST_LIMIT:
        out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1))
        for i, j in zip(*np.nonzero(small)):
            out[i : i + large.shape[0], j : j + large.shape[1]] += small[i, j] * large
        return out, 0.0
    out = fftconvolve(a, b)
    clipped = float(-np.sum(out[out < 0.0]))
    np.clip(out, 0.0, None, out=out)
    return out, clipped


def convolve_n(law: LatticeJointLaw, n: int) -> LatticePmf2D:
    """Exact pmf of the n-fold sum by repeated-squaring convolution.

    Large pairwise products go through FFT; their results are renormalized and
    the accumulated defect must stay within the 1e-10 error budget.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > MAX_CONVOLUTION_N:
        raise ResourceLimit(f"n={n} exceeds the desk-scale limit {MAX_CONVOLUTION_N}")
    if law.support_size > MAX_SUPPORT_ATOMS:
        raise ResourceLimit(
            f"support of {law.support_size} atoms exceeds the limit {MAX_SUPPORT_ATOMS}"
        )

    defect = 0.0

    def normalized(arr: np.ndarray, clipped: float) -> np.ndarray:
        nonlocal defect
        if clipped == 0.0:
            return arr
        mass = float(np.sum(arr))
        defect += abs(1.0 - mass) + clipped
        if defect > MASS_ERROR_BUDGET:
            raise ResourceLimit(
                f"accumulated convolution rounding {defect:.3e} exceeds the "
                f"{MASS_ERROR_BUDGET} budget"
            )
        return arr / mass

    base = law.probs
    acc: Optional[np.ndarray] = None
    acc_copies = 0
    base_copies = 1
    m = n
    while m > 0:
        if m & 1:
            if acc is None:
                acc, acc_copies = base.copy(), base_copies
            else:
                acc, clipped = _pairwise_convolve(acc, base)
                acc = normalized(acc, clipped)
                acc_copies += base_copies
        m >>= 1
        if m > 0:
            base, clipped = _pairwise_convolve(base, base)
            base = normalized(base, clipped)
            base_copies *= 2
    assert acc is not None and acc_copies == n
    out = LatticePmf2D(acc, n * law.v0, law.hv, n * law.w0, law.hw, n)
    out.mass_defect = abs(1.0 - out.total_mass()) + defect
    if out.mass_defect > MASS_ERROR_BUDGET:
        raise ResourceLimit(
            f"final mass defect {out.mass_defect:.3e} exceeds the {MASS_ERROR_BUDGET} budget"
        )
    return out


@dataclass(frozen=True)
class LltReport:
    """Weighted local-CLT discrepancy of the lattice coordinate."""

    n: int
    sup: float
    argmax_y: float
    argmax_y_n: float


@dataclass(frozen=True)
class SemiLocalReport:
    """Weighted discrepancies of the exact n-fold law against the Gaussian kernel."""

    n: int
    sup_weighted_llt: float
    sup_weighted_semilocal: float
    argmax_x: float
    argmax_y: float
    sup_unweighted_semilocal: float = 0.0
    llt_argmax_y: float = float("nan")
    mass_defect: float = 0.0

    def __post_init__(self):
        if self.sup_weighted_llt < 0 or self.sup_weighted_semilocal < 0:
            raise ValueError("discrepancy sups must be nonnegative")


def _w_index_window(conv: LatticePmf2D, sigma2: float) -> np.ndarray:
    """Lattice indices covering the support plus a +-12 sd Gaussian pad."""
    sqrt_n = math.sqrt(conv.n)
    pad = _PAD_SIGMAS * sigma2 * sqrt_n
    lo = min(0, int(math.floor((-pad - conv.w0) / conv.hw)))
    hi = max(conv.probs.shape[1] - 1, int(math.ceil((pad - conv.w0) / conv.hw)))
    return np.arange(lo, hi + 1)


def _llt_from_conv(law: LatticeJointLaw, conv: LatticePmf2D) -> LltReport:
    sigma2 = math.sqrt(law.cov.s22)
    if law.cov.s22 <= 1e-12:
        raise DegenerateCovariance("second-coordinate variance vanishes")
    n = conv.n
    sqrt_n = math.sqrt(n)
    idx = _w_index_window(conv, sigma2)
    probs = np.zeros(idx.shape[0])
    inside = (idx >= 0) & (idx < conv.probs.shape[1])
    probs[inside] = conv.probs.sum(axis=0)[idx[inside]]
    y = conv.w0 + conv.hw * idx
    y_n = y / sqrt_n
    gauss = (conv.hw / (sigma2 * math.sqrt(2.0 * math.pi * n))) * np.exp(
        -0.5 * y_n * y_n / (sigma2 * sigma2)
    )
    disc = (1.0 + y_n * y_n) * np.abs(probs - gauss)
    k = int(np.argmax(disc))
    return LltReport(n=n, sup=float(disc[k]), argmax_y=float(y[k]), argmax_y_n=float(y_n[k]))


def weighted_llt_discrepancy(law: LatticeJointLaw, n: int) -> LltReport:
    """Sup over the lattice of (1 + y_n^2) |pmf - Gaussian mass| for Y_n/sqrt(n).

    The Gaussian mass per lattice point is hW/(sigma2 sqrt(2 pi n)) times the
    normal density at y_n, the natural rescaling for a span-hW lattice.
    """
    return _llt_from_conv(law, convolve_n(law, n))


def semilocal_discrepancy(
    law: LatticeJointLaw, n: int, x_grid: Sequence[float] = ()
) -> SemiLocalReport:
    """Weighted sup over (x, lattice y) of |P(X_n/sqrt(n) <= x, Y_n/sqrt(n) = y_n)
    - (hW/sqrt(n)) psi_Sigma(x, y_n)|.

    The exact probability is a step function of x while the kernel is
    continuous and increasing, so the sup over x is attained at a jump point;
    both one-sided limits are evaluated at every jump (plus the x -> +inf
    limit, which reproduces the local-CLT comparison).  Entries of `x_grid`
    only add reporting points.
    """
    sigma = law.cov
    sigma.require_positive_definite()
    conv = convolve_n(law, n)
    llt = _llt_from_conv(law, conv)

    sqrt_n = math.sqrt(n)
    scale = conv.hw / sqrt_n
    x_jumps = conv.v_values / sqrt_n
    extra_x = np.asarray(sorted(x_grid), dtype=float)

    idx = _w_index_window(conv, math.sqrt(sigma.s22))
    best = (-1.0, math.nan, math.nan)
    best_unweighted = 0.0
    n_cols = conv.probs.shape[1]
    for b in idx:
        y = conv.w0 + conv.hw * b
        y_n = y / sqrt_n
        weight = 1.0 + y_n * y_n
        tail = scale * psi_x_limit(sigma, y_n)
        if 0 <= b < n_cols:
            col = np.cumsum(conv.probs[:, b])
            kernel = scale * psi_kernel(sigma, x_jumps, y_n)
            left = np.abs(np.concatenate(([0.0], col[:-1])) - kernel)
            right = np.abs(col - kernel)
            candidates = np.maximum(left, right)
            sup_b = max(float(candidates.max()), abs(float(col[-1]) - tail))
            k = int(np.argmax(candidates))
            x_at = float(x_jumps[k])
            if abs(float(col[-1]) - tail) > float(candidates.max()):
                x_at = math.inf
            if extra_x.size:
                pos = np.searchsorted(x_jumps, extra_x, side="right")
                step_vals = np.concatenate(([0.0], col))[pos]
                grid_disc = np.abs(step_vals - scale * psi_kernel(sigma, extra_x, y_n))
                if float(grid_disc.max()) > sup_b:
                    sup_b = float(grid_disc.max())
                    x_at = float(extra_x[int(np.argmax(grid_disc))])
        else:
            # lattice row with zero probability: the kernel alone contributes
            sup_b = tail
            x_at = math.inf
        if weight * sup_b > best[0]:
            best = (weight * sup_b, x_at, y)
        best_unweighted = max(best_unweighted, sup_b)

    return SemiLocalReport(
        n=n,
        sup_weighted_llt=llt.sup,
        sup_weighted_semilocal=best[0],
        argmax_x=best[1],
        argmax_y=best[2],
        sup_unweighted_semilocal=best_unweighted,
        llt_argmax_y=llt.argmax_y,
        mass_defect=conv.mass_defect,
    )


def charfn_eval(law: LatticeJointLaw, n: int, t: tuple[float, float]) -> tuple[complex, complex]:
    """(lambda_n, lambda_0) at t: the ch.f. of S_n/sqrt(n) and its Gaussian limit."""
    t1, t2 = float(t[0]), float(t[1])
    sqrt_n = math.sqrt(n)
    lam_n = law.charfn(t1 / sqrt_n, t2 / sqrt_n) ** n
    s = law.cov
    quad = s.s11 * t1 * t1 + 2.0 * s.s12 * t1 * t2 + s.s22 * t2 * t2
    lam_0 = complex(math.exp(-0.5 * quad))
    return lam_n, lam_0


@dataclass(frozen=True)
class CharfnClosenessReport:
    """Empirical constant witnessed for the ch.f. closeness diagnostic."""

    n: int
    max_value: float
    argmax_t: tuple[float, float]
    argmax_j: int


def charfn_closeness_spotcheck(
    law: LatticeJointLaw,
    n: int,
    grid: Sequence[tuple[float, float]],
    *,
    delta: float = 1.0,
    c: Optional[float] = None,
    eps: float = 0.5,
) -> CharfnClosenessReport:
    """Max over the grid of |phi(t/sqrt(n))^(n-j) - lambda_0(t)| e^{c|t|^2} n^{delta/2}.

    A monitoring diagnostic: the witnessed max plays the role of the
    (non-explicit) constant and should stay bounded as n grows.  The grid must
    satisfy |t1| <= eps sqrt(n) and |t2| <= (pi/hW) sqrt(n).
    """
    if c is None:
        eigs = np.linalg.eigvalsh(law.cov.as_matrix())
        c = 0.25 * float(eigs.min())
    sqrt_n = math.sqrt(n)
    best = (-1.0, (math.nan, math.nan), -1)
    for t1, t2 in grid:
        if abs(t1) > eps * sqrt_n + 1e-12 or abs(t2) > math.pi * sqrt_n / law.hw + 1e-12:
            raise ValueError(f"grid point {(t1, t2)} outside the admissible region")
        phi = law.charfn(t1 / sqrt_n, t2 / sqrt_n)
        s = law.cov
        quad = s.s11 * t1 * t1 + 2.0 * s.s12 * t1 * t2 + s.s22 * t2 * t2
        lam0 = math.exp(-0.5 * quad)
        envelope = math.exp(c * (t1 * t1 + t2 * t2)) * n ** (delta / 2.0)
        for j in (0, 1, 2):
            value = abs(phi ** (n - j) - lam0) * envelope
            if value > best[0]:
                best = (value, (t1, t2), j)
    return CharfnClosenessReport(n=n, max_value=best[0], argmax_t=best[1], argmax_j=best[2])
