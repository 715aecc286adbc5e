"""Synthetic prediction-market microstructure lab."""

from ._core import (
    ConfigError,
    DataError,
    EstimationError,
    IoError,
    WelfareError,
    __version__,
    adverse_selection,
    brier,
    check_config,
    classify_regime,
    complementary_gap,
    default_config,
    ece,
    effective_spread,
    full,
    pass_through,
    price_impact,
    realized_spread,
    semantic_dispersion,
    shock_wedge,
    simplex_gap,
    simulate,
    summarize,
    twfe,
    twfe_panel,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
