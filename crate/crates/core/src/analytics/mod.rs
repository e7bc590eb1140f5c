//! Prior analytics: ordering of the weights, laws of the allocation
//! variables and of the number of occupied components.

pub mod allocation;
pub mod kn;
pub mod ordering;

pub use allocation::{
    allocation_probability, allocation_probability_capped, allocation_probability_dsb,
    allocation_probability_mc, allocation_tally, sample_allocations, AllocationVector,
};
pub use kn::{expected_kn_curve, sample_kn, total_variation, KnCurve, KnSummary};
pub use ordering::{
    conditional_ordering_probability, mc_ordering_probability, ordering_probability_dsb,
    ordering_probability_general, ordering_threshold,
};
