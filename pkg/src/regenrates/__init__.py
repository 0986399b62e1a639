"""Simulation and numerical-verification toolkit for central limit theorem
rates of regenerative processes.

The package builds regenerative models (i.i.d. sums, Markov additive
functionals, random walks in random environments), harvests regeneration
blocks, and checks normal-approximation rate claims through exact lattice
convolutions, Gaussian kernels and deterministic Monte Carlo sweeps.
"""

from .errors import (
    CensoredBlock,
    ConfigError,
    DegenerateCovariance,
    DegenerateSigma,
    HarvestFailed,
    NotTransient,
    PeriodicChain,
    RegenRatesError,
    ResourceLimit,
    TruncationUnreliable,
)
from .rng import SeedSpec, make_stream, substream
from .types import BlockEstimates, Blocks, BlockSample, RateFit, RateSeries

__version__ = "0.1.0"

__all__ = [
    "SeedSpec",
    "make_stream",
    "substream",
    "BlockSample",
    "Blocks",
    "BlockEstimates",
    "RateSeries",
    "RateFit",
    "RegenRatesError",
    "ConfigError",
    "DegenerateCovariance",
    "DegenerateSigma",
    "ResourceLimit",
    "CensoredBlock",
    "HarvestFailed",
    "NotTransient",
    "TruncationUnreliable",
    "PeriodicChain",
    "__version__",
]
