"""APSK constellation design for joint sensing and communication."""

__version__ = "0.1.0"

from .constellation import (  # noqa: F401
    ApskDesign,
    Constellation,
    DesignError,
    TradeoffParams,
    build_apsk,
    build_comm_optimal_family,
    build_psk,
    build_qam,
    build_tradeoff_family,
)
