"""Latency, energy and cost models for reasoning LLMs on edge GPUs."""

from ._core import (
    ConfigPoint,
    CostBreakdown,
    EdgePerfError,
    LatencyBreakdown,
    MeasurementRecord,
    ModelProfile,
    PhaseRatios,
    ProfileRegistry,
    best_under_cost,
    best_under_latency,
    cost_per_million_tokens,
    decode_energy,
    decode_latency,
    decode_power,
    default_config_table,
    default_profiles,
    fit_decode_latency,
    fit_exp_decay,
    fit_log_curve,
    fit_prefill_latency,
    load_config_table,
    load_measurements,
    load_profiles,
    majority_vote,
    mape,
    max_output_tokens,
    padded_length,
    pareto_frontier,
    phase_ratios,
    prefill_energy_per_token,
    prefill_latency,
    prefill_power,
    serialize_profiles,
    tbt,
    total_energy,
    total_latency,
    validate_profile,
)

__all__ = [name for name in dir() if not name.startswith("_")]
