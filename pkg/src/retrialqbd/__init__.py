"""Level-dependent QBD solver for multiserver retrial queues with impatience.

The public surface mirrors the pipeline: define a model (:mod:`model`),
compute the rate-matrix rows and stationary distribution
(:mod:`rate_matrix`), expand the rows as series in 1/n (:mod:`expansion`),
and verify tail behavior (:mod:`asymptotics`).  The CLI in :mod:`cli`
drives all of it from INI configs.
"""

from .asymptotics import (BoundednessVerdict, TailLaw, TailRatioSeries,
                          boundedness_check, tail_law, tail_ratio_series)
from .errors import (ConfigError, ConvergenceError, NonErgodicError,
                     NumericalError, RegimeError, RetrialQbdError)
from .expansion import (ExpansionTable, Regime, eval_expansion,
                        explicit_small_k, gamma_table, pochhammer,
                        regime_of, theta_table)
from .model import (ErgodicityResult, GeneratorBlocks, ModelParams,
                    ValidationReport, build_blocks, check_ergodicity,
                    linear_service_rates, validate)
from .rate_matrix import (RateRowSequence, StationaryDistribution,
                          backward_sweep, censored_generator,
                          compute_rate_rows, rate_map,
                          stationary_distribution)

__all__ = [
    "BoundednessVerdict", "ConfigError", "ConvergenceError",
    "ErgodicityResult", "ExpansionTable", "GeneratorBlocks", "ModelParams",
    "NonErgodicError", "NumericalError", "RateRowSequence", "Regime",
    "RegimeError", "RetrialQbdError", "StationaryDistribution", "TailLaw",
    "TailRatioSeries", "ValidationReport", "backward_sweep",
    "boundedness_check", "build_blocks", "censored_generator",
    "check_ergodicity", "compute_rate_rows", "eval_expansion",
    "explicit_small_k", "gamma_table", "linear_service_rates", "pochhammer",
    "rate_map", "regime_of", "stationary_distribution", "tail_law",
    "tail_ratio_series", "theta_table", "validate",
]

__version__ = "0.1.0"
