// Copyright 2026 hyperqec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Linear-optical controlled-sign gates on hyperentangled photons.
//!
//! Fock-space amplitudes, gate metrics for heralded contractions, a
//! two-stage optimizer, unitary dilation with Reck decomposition, and a
//! state-vector model of the error-correction protocol built on the gate.

pub mod appendix;
pub mod dilation;
pub mod error;
pub mod fock;
pub mod io;
pub mod metrics;
pub mod optimizer;
pub mod permanent;
pub mod qec;
pub mod targets;

pub use num_complex::Complex64;

pub use dilation::{
    compile, dilate, dilate_with_tolerance, reck_decompose, recompose, singular_values, vacuum_postselection_error,
    Compilation, Dilation, InterferometerElement, Netlist,
};
pub use error::{Error, Result};
pub use fock::{
    apply_transform, enumerate_basis, postselect, transition_amplitude, FockState, ModeTransform, PhotonicState,
};
pub use metrics::{contraction_map, metrics, ContractionMap, GateMetrics, MeasurementScheme};
pub use permanent::permanent;
pub use qec::{BellLabel, ErrorKind, HyperState, Message, Recovery, SyndromeRecord, SYNDROME_TABLE};
pub use targets::{
    lift_reduced_to_full, quad_rail_basis, reduced_basis, reduced_csign, restrict_full_to_reduced, target_csign,
    LogicalBasis, SpectatorFactors, TargetGate,
};
