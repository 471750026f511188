"""Frequency-shift estimation from time-resolved two-photon interference."""
from .errors import BatchFormatError, ConfigurationError, NotIdentifiableError, QuadratureError
from .estimator import (
    IMPOSSIBLE_EVENT,
    EstimationResult,
    EstimatorConfig,
    MonteCarloSummary,
    log_likelihood,
    mle,
    monte_carlo,
)
from .fisher import (
    FisherReport,
    Method,
    QuadratureSpec,
    beta_mean,
    beta_nu,
    crlb_sigma,
    fi_asymptotic,
    fi_contribution,
    fi_nonresolving,
    fi_resolving,
    qfi,
)
from .kernels import BACKEND as KERNEL_BACKEND
from .model import (
    EventClass,
    ModelParams,
    OnePhoton,
    TwoPhoton,
    ZeroPhoton,
    density_dt,
    envelope_c,
    joint_density_t1t2,
    outcome_probability,
    resolution_check,
)
from .sampler import SampleBatch, SamplerConfig, draw_batch, empirical_histogram

__version__ = "0.1.0"
