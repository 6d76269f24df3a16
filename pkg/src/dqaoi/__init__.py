"""Age-of-information analysis of a discrete-time zero-wait dual-queue
status-updating system: closed forms, an exact enumeration oracle, a
slot-level Monte Carlo simulator, and discrete-to-continuous convergence
studies."""

from .closed_forms import (
    ContinuousParams,
    GeoDParams,
    avg_aoi_d_d,
    avg_aoi_geo_d,
    avg_aoi_geo_geo,
    avg_aosi_geo_geo,
    avg_paoi_geo_d,
    avg_paoi_geo_d_strict,
    expected_valid_geo_d,
    expected_valid_geo_d_strict,
    m_d_reference,
    m_m_reference,
    reduction_ratio,
    single_queue_metrics,
    state_probability,
)
from .model import (
    AoiMetrics,
    DomainError,
    DualQueueSpec,
    InvalidParameter,
    ResourceLimit,
    ServiceModel,
    SimConfig,
    StateKey,
    derive_round_seed,
    derive_stream_seed,
    validate,
)
from .slot_sim import (
    AoiTrace,
    apply_deliveries,
    empirical_state_frequencies,
    estimate_with_ci,
    run,
    run_trace,
    sample_service,
)

__all__ = [
    "AoiMetrics",
    "AoiTrace",
    "ContinuousParams",
    "DomainError",
    "DualQueueSpec",
    "GeoDParams",
    "InvalidParameter",
    "ResourceLimit",
    "ServiceModel",
    "SimConfig",
    "StateKey",
    "apply_deliveries",
    "avg_aoi_d_d",
    "avg_aoi_geo_d",
    "avg_aoi_geo_geo",
    "avg_aosi_geo_geo",
    "avg_paoi_geo_d",
    "avg_paoi_geo_d_strict",
    "derive_round_seed",
    "derive_stream_seed",
    "empirical_state_frequencies",
    "estimate_with_ci",
    "expected_valid_geo_d",
    "expected_valid_geo_d_strict",
    "m_d_reference",
    "m_m_reference",
    "reduction_ratio",
    "run",
    "run_trace",
    "sample_service",
    "single_queue_metrics",
    "state_probability",
    "validate",
]

__version__ = "0.1.0"
