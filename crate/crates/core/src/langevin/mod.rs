//! Finite-N Langevin dynamics with Gaussian p-spin couplings, used as an
//! empirical check on the limiting two-time equations.

mod compare;
mod disorder;
mod simulate;

pub use compare::{compare_to_limit, grid_observables, Discrepancy};
pub use disorder::{
    multiplicity_factor, sample_disorder, DisorderSample, MAX_INDEXED_COUPLINGS, MAX_N_P2, MAX_N_P3,
};
pub use simulate::{simulate, LangevinParams, LangevinRun, BLOWUP_LEVEL, STABILITY_LIMIT};
