"""Coupling-aware channel modeling and estimation for metasurface antennas.

Library layout:

* :mod:`dmatensor.tensor_ops` — third-order tensor algebra and symmetric
  vectorization machinery.
* :mod:`dmatensor.network_model` — multiport forward model, coupling-unaware
  benchmark, open-port reduction.
* :mod:`dmatensor.scenario` — synthetic ground truth, noisy measurements,
  dataset files.
* :mod:`dmatensor.estimators` — the five channel estimators plus
  identifiability bounds and prediction.
* :mod:`dmatensor.metrics` — NMSE and the offset-insensitive zeta metric.
* :mod:`dmatensor.optimizer` — genetic configuration search for channel-gain
  maximization.
* :mod:`dmatensor.pipeline`, :mod:`dmatensor.sweep`, :mod:`dmatensor.report`,
  :mod:`dmatensor.cli` — orchestration and the command-line harness.
"""

from .errors import (
    ConfigError,
    DatasetFormatError,
    DatasetVersionError,
    DegenerateInputError,
    DivergenceError,
    EstimationError,
    IdentifiabilityError,
    MissingInputError,
    RankDeficiencyError,
    SingularModelError,
    SymmetryError,
)
from .estimators import (
    ESTIMATOR_LABELS,
    EstimationReport,
    EstimatorConfig,
    PROBLEM_TYPES,
    fit_type1,
    fit_type2,
    fit_type2_bilinear,
    fit_type3,
    fit_type4,
    min_k,
    predict,
)
from .metrics import MetricReport, align_scalar, evaluate, nmse, zeta
from .network_model import (
    ScatteringMatrix,
    SystemParameters,
    build_omega_stack,
    encode,
    end_to_end,
    end_to_end_no_mc,
    omega,
    reduce_open_ports,
)
from .optimizer import GaConfig, OptimizationResult, channel_gain, gain_function, genetic_optimize
from .pipeline import EstimationOutcome, estimated_parameters, run_estimation, split_dataset
from .scenario import (
    MeasurementSet,
    ScenarioSpec,
    generate_params,
    load_dataset,
    measure,
    sample_configs,
    save_dataset,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
