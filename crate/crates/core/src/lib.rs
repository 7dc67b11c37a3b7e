//! Particle-in-a-box barrier insertion and binary state discrimination.
//!
//! States live in the eigenbasis of an infinite square well ([`wellbox`]).
//! Inserting an impenetrable barrier re-expands a state in the two
//! compartment bases ([`insertion`]), after which each compartment evolves
//! independently ([`evolution`]). The energy bill of the insertion acts as a
//! classical side-channel that sharpens the Helstrom-optimal discrimination
//! of two candidate states ([`discrimination`], [`probe`]).

pub mod discrimination;
pub mod error;
pub mod evolution;
pub mod insertion;
pub mod probe;
pub mod quadrature;
pub mod wellbox;

pub use discrimination::{
    combined_cost, helstrom_cost, posterior_update, signal_likelihoods, split_overlap, sweep,
    transition_probability, CostBreakdown, DiscriminationSetup, Hypothesis, Outcome,
    OutcomeDistribution, PosteriorRow, Scenario, SignalModel, SplitOverlap, SweepGrid, SweepRow,
};
pub use error::{Error, Result};
pub use evolution::{density_grid, evolve, evolve_split, DensityGrid, DensitySource};
pub use insertion::{
    compartment_probability, insertion_energy_diagnostics, is_nodal, midpoint_coefficients_n1,
    split, split_with, DivergenceClass, InsertionReport, Projection, SplitState,
};
pub use probe::{matched_pair_probe, MatchDefinition, ProbeReport};
pub use quadrature::Quadrature;
pub use wellbox::{BoxState, WellGeometry};

pub use num_complex::Complex64;
