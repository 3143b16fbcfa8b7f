//! Multicolour East model on finite volumes.
//!
//! Everything here is `no_std` with `alloc`; IO and the command line live in
//! the `mcem` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dynamics;
pub mod lattice;
pub mod reachability;
pub mod renormalization;
pub mod spectral;

pub use lattice::{
    constraint, log_measure_weight, measure_weight, partial_order_leq, propagation_directions, sample_config,
    stream_rng, validate_params, BoundaryCondition, Configuration, Dir, Domain, LatticeError, ModelSpec, Point, Region,
    SiteState, VacancyType, MAX_DIM, NEUTRAL,
};
