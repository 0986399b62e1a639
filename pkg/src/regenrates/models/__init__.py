"""Concrete regenerative process generators."""

from .base import BlockLaw, ProcessModel
from .iid import IidSumModel, iid_model
from .lattice_walk import (
    DirichletSiteLaw,
    FixedVectorSiteLaw,
    LatticeSiteLaw,
    LatticeWalkConfig,
    RwreLatticeModel,
    rwre_lattice_model,
)
from .markov import FiniteMarkovChain, MarkovAdditiveModel, markov_additive_model
from .rwre1d import (
    Rwre1dHittingModel,
    Rwre1dPositionModel,
    rwre1d_hitting_model,
    rwre1d_position_model,
)
from .site_laws import (
    BetaSiteLaw,
    Environment1d,
    SiteLaw,
    TwoPointSiteLaw,
    UniformSiteLaw,
)

__all__ = [
    "BlockLaw",
    "ProcessModel",
    "IidSumModel",
    "iid_model",
    "FiniteMarkovChain",
    "MarkovAdditiveModel",
    "markov_additive_model",
    "SiteLaw",
    "TwoPointSiteLaw",
    "UniformSiteLaw",
    "BetaSiteLaw",
    "Environment1d",
    "Rwre1dPositionModel",
    "Rwre1dHittingModel",
    "rwre1d_position_model",
    "rwre1d_hitting_model",
    "LatticeSiteLaw",
    "FixedVectorSiteLaw",
    "DirichletSiteLaw",
    "LatticeWalkConfig",
    "RwreLatticeModel",
    "rwre_lattice_model",
]
