"""Functionally generated trading strategies on market-weight paths.

Modules
-------
path_core
    Time grids, market paths, discrete integrals, brackets, local times, ranks.
market_models
    Simulators for market-weight paths and deterministic fixtures.
generators
    Generating functions, derivative selections and their Gamma processes.
strategies
    Self-financing strategies, additive and multiplicative generation.
diagnostics
    Outperformance checks, Monte Carlo and variation diagnostics.
cli
    Scenario runner and command-line entry point.
"""
from . import diagnostics, generators, market_models, path_core, strategies
from .generators import builtin, custom_concave, gamma_analytic, gamma_by_definition, normalize
from .market_models import ModelSpec, SimConfig, simulate, simulate_ensemble
from .path_core import MarketPath, TimeGrid
from .strategies import additive_generate, multiplicative_generate, portfolio_weights

__version__ = "0.1.0"
