"""Site laws for 1D environments and the lazily sampled environment cache.

A site law produces i.i.d. right-jump probabilities omega_x(1) in (0, 1).
Sampling consumes exactly one uniform per site, so batched draws line up with
sequential ones.  Environment1d realizes sites in fixed chunks keyed by the
chunk index, which makes a site's value independent of the order in which it
is first queried (quenched consistency).
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod

import numpy as np
from scipy import stats

from ..rwre_analytics import FiniteRhoLaw, QuadratureRhoLaw, RhoLaw
from ..rng import SeedSpec

__all__ = [
    "SiteLaw",
    "TwoPointSiteLaw",
    "UniformSiteLaw",
    "BetaSiteLaw",
    "Environment1d",
]

_CHUNK = 4096


class SiteLaw(ABC):
    """Law of one site's right-jump probability."""

    @abstractmethod
    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        """Draw site values; consumes exactly prod(size) uniforms."""

    @abstractmethod
    def rho_law(self) -> RhoLaw:
        """Induced law of rho = (1 - omega)/omega."""

    @abstractmethod
    def config_dict(self) -> dict:
        """Echo of the law's configuration for experiment artifacts."""


class TwoPointSiteLaw(SiteLaw):
    """omega = p1 with probability q, else p2."""

    def __init__(self, p1: float, p2: float, q: float):
        for name, p in (("p1", p1), ("p2", p2)):
            if not 0.0 < p < 1.0:
                raise ValueError(f"{name} must lie in the open interval (0, 1)")
        if not 0.0 <= q <= 1.0:
            raise ValueError("q must lie in [0, 1]")
        self.p1, self.p2, self.q = float(p1), float(p2), float(q)

    @classmethod
    def homogeneous(cls, p: float) -> "TwoPointSiteLaw":
        return cls(p, p, 1.0)

    def sample(self, rng, size):
        return np.where(rng.random(size) < self.q, self.p1, self.p2)

    def rho_law(self) -> RhoLaw:
        rho1 = (1.0 - self.p1) / self.p1
        rho2 = (1.0 - self.p2) / self.p2
        if self.q in (0.0, 1.0) or rho1 == rho2:
            value = rho1 if self.q == 1.0 else rho2 if self.q == 0.0 else rho1
            return FiniteRhoLaw([value], [1.0])
        return FiniteRhoLaw([rho1, rho2], [self.q, 1.0 - self.q])

    def config_dict(self) -> dict:
        return {"kind": "two_point", "p1": self.p1, "p2": self.p2, "q": self.q}


class UniformSiteLaw(SiteLaw):
    """omega uniform on (a, b) with 0 < a < b < 1."""

    def __init__(self, a: float, b: float):
        if not 0.0 < a < b < 1.0:
            raise ValueError("need 0 < a < b < 1")
        self.a, self.b = float(a), float(b)

    def sample(self, rng, size):
        return self.a + (self.b - self.a) * rng.random(size)

    def rho_law(self) -> RhoLaw:
        density = 1.0 / (self.b - self.a)
        return QuadratureRhoLaw(lambda p: density, self.a, self.b)

    def config_dict(self) -> dict:
        return {"kind": "uniform", "a": self.a, "b": self.b}


class BetaSiteLaw(SiteLaw):
    """Beta(alpha, beta) truncated to (eps, 1 - eps) via inverse-CDF sampling."""

    def __init__(self, alpha: float, beta: float, eps: float = 1e-6):
        if alpha <= 0 or beta <= 0:
            raise ValueError("shape parameters must be positive")
        if not 0.0 < eps < 0.5:
            raise ValueError("eps must lie in (0, 0.5)")
        self.alpha, self.beta, self.eps = float(alpha), float(beta), float(eps)
        dist = stats.beta(alpha, beta)
        self._lo_cdf = float(dist.cdf(eps))
        self._hi_cdf = float(dist.cdf(1.0 - eps))
        self._dist = dist
        self._norm = self._hi_cdf - self._lo_cdf

    def sample(self, rng, size):
        u = rng.random(size)
        return self._dist.ppf(self._lo_cdf + u * self._norm)

    def rho_law(self) -> RhoLaw:
        def pdf(p: float) -> float:
            return float(self._dist.pdf(p)) / self._norm

        return QuadratureRhoLaw(pdf, self.eps, 1.0 - self.eps)

    def config_dict(self) -> dict:
        return {"kind": "beta", "alpha": self.alpha, "beta": self.beta, "eps": self.eps}


def _zigzag(c: int) -> int:
    return 2 * c if c >= 0 else -2 * c - 1


class Environment1d:
    """Quenched environment over Z, realized lazily in deterministic chunks.

    Chunk c holds sites [c*4096, (c+1)*4096); its values are drawn from a
    generator keyed by (seed, chunk), so a site's value never depends on query
    order and is identical however the window is assembled.
    """

    def __init__(self, site_law: SiteLaw, seed: SeedSpec):
        self.site_law = site_law
        self.seed = seed
        self._chunks: dict[int, np.ndarray] = {}

    def _chunk(self, c: int) -> np.ndarray:
        got = self._chunks.get(c)
        if got is None:
            ss = np.random.SeedSequence(
                self.seed.master_seed, spawn_key=(self.seed.stream_index, 0x51E5, _zigzag(c))
            )
            rng = np.random.Generator(np.random.PCG64(ss))
            got = self.site_law.sample(rng, _CHUNK)
            if np.any(got <= 0.0) or np.any(got >= 1.0):
                raise ValueError("site law produced a value outside (0, 1)")
            self._chunks[c] = got
        return got

    def omega(self, x: int) -> float:
        c, r = divmod(int(x), _CHUNK)
        return float(self._chunk(c)[r])

    def rho(self, x: int) -> float:
        w = self.omega(x)
        return (1.0 - w) / w

    def window(self, lo: int, hi: int) -> np.ndarray:
        """Values for sites lo..hi inclusive (index i maps to site lo + i)."""
        if hi < lo:
            raise ValueError("window bounds out of order")
        out = np.empty(hi - lo + 1)
        c_lo = math.floor(lo / _CHUNK)
        c_hi = math.floor(hi / _CHUNK)
        for c in range(c_lo, c_hi + 1):
            chunk = self._chunk(c)
            start = c * _CHUNK
            a = max(lo, start)
            b = min(hi, start + _CHUNK - 1)
            out[a - lo : b - lo + 1] = chunk[a - start : b - start + 1]
        return out
