//! Noise-free half-duplex relay cascades.
//!
//! A line network of `m` half-duplex relays between a source and a sink,
//! with ternary channel inputs `{0, 1, N}`. The crate computes capacities
//! and two-source rate-region bounds, brute-forces the cut-set structure
//! behind them, and implements a zero-error code that encodes information
//! in the positions of each relay's transmit slots.

#![allow(clippy::needless_range_loop)]

pub mod capacity;
pub mod channel;
pub mod coding;
pub mod cutset;
pub mod error;
mod fullsupport;
pub mod info;
pub mod region;
pub mod simulator;

pub use capacity::{
    cut_values, infinite_cascade_chain, solve_cascade, solve_cascade_full_support,
    solve_cascade_with, solve_single_relay, CapacityResult, ChainDistribution, SilenceProfile,
    SolverOptions,
};
pub use channel::{network_use, relay_output, CascadeTopology, RelayModelVariant, TernarySymbol};
pub use coding::{
    decode_at_node, embed_allocation, encode_relay, encode_source, optimize_slot_counts,
    rank_allocation, two_source_decode, two_source_encode, unrank_allocation, CodebookSpec,
    SlotAllocation, TwoSourceSpec,
};
pub use cutset::{
    cut_value_single_source, materialize, two_source_bounds, verify_ascending_minimality,
    verify_two_source_ascending, CutSet, FullJointPmf, TwoSourceBounds, VerificationReport,
    Violation,
};
pub use error::{Error, Result};
pub use info::{EdgeDistribution, ProbVector};
pub use region::{
    achievable_segment, finite_n_achievable, general_region_bound, outer_boundary_single_relay,
    sum_capacity_threshold, CurveLabel, RatePoint, RegionCurve,
};
pub use simulator::{
    run_pipeline, run_two_source, sweep_rates, ExperimentConfig, MessageSource, NodeState,
    SweepRow, TransmissionReport,
};
