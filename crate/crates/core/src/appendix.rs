// Copyright 2026 hyperqec Contributors
// SPDX-License-Identifier: Apache-2.0

//! The bundled 9x9 encoding-circuit matrix and its verification.
//!
//! The published matrix does not say which row/column belongs to which
//! physical mode. Its structure pins the active modes to `{0, 2, 4}`, the
//! pass-through modes to `{1, 3, 5}` and the ancillas to `{6, 7, 8}`;
//! [`verify_appendix`] searches all role assignments within those sets and
//! all ancilla schemes with at most three photons, and keeps the best.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dilation::singular_values;
use crate::error::{Error, Result};
use crate::fock::{enumerate_basis, ModeTransform};
use crate::io::MatrixFile;
use crate::metrics::{raw_metrics, ContractionPlan, GateMetrics, MeasurementScheme};
use crate::targets::{quad_rail_basis, target_csign, SpectatorFactors};

pub const APPENDIX_JSON: &str = include_str!("../assets/appendix_matrix.json");

/// SHA-256 of `assets/appendix_matrix.json`.
pub const APPENDIX_SHA256: &str = "64e58deab31ab04777b7486dc9ac44c172e0f5f90ae7900c71e8dd4c1c3887a5";

/// Published success probability of the appendix solution.
pub const PUBLISHED_SUCCESS_PROBABILITY: f64 = 0.00974276;

/// Published infidelity of the appendix solution.
pub const PUBLISHED_INFIDELITY: f64 = 6e-8;

/// Role names of [`ModeOrder`] entries.
pub const ROLE_LABELS: [&str; 9] = ["H_A", "V_A", "H↺_A1", "H↻_A1", "V↺_A1", "V↻_A1", "anc1", "anc2", "anc3"];

const ACTIVE_CANDIDATES: [usize; 3] = [0, 2, 4];
const SPECTATOR_CANDIDATES: [usize; 3] = [1, 3, 5];
const ANCILLA_MODES: [usize; 3] = [6, 7, 8];
const MAX_ANCILLA_PHOTONS: usize = 3;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses the bundled asset after checking its checksum.
pub fn bundled_appendix() -> Result<ModeTransform> {
    let found = sha256_hex(APPENDIX_JSON.as_bytes());
    if found != APPENDIX_SHA256 {
        return Err(Error::Checksum {
            what: "bundled appendix matrix".into(),
            expected: APPENDIX_SHA256.into(),
            found,
        });
    }
    MatrixFile::parse(APPENDIX_JSON)?.to_transform()
}

/// Physical matrix index for each role in [`ROLE_LABELS`] order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModeOrder(pub [usize; 9]);

impl ModeOrder {
    pub fn h_a(&self) -> usize {
        self.0[0]
    }

    /// Physical indices of the reduced problem's modes, in
    /// `(V_A, V↻_A1, V↺_A1, anc1, anc2, anc3)` order.
    pub fn active_modes(&self) -> [usize; 6] {
        let o = &self.0;
        [o[1], o[5], o[4], o[6], o[7], o[8]]
    }

    pub fn labelled(&self) -> Vec<(String, usize)> {
        ROLE_LABELS.iter().map(|l| l.to_string()).zip(self.0).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationScore {
    pub mode_order: ModeOrder,
    pub scheme: MeasurementScheme,
    pub fidelity: f64,
    pub success_probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AppendixReport {
    pub fidelity: f64,
    pub success_probability: f64,
    /// Of the active 6x6 block (three active modes plus ancillas).
    pub singular_values: Vec<f64>,
    pub resolved_mode_order: ModeOrder,
    pub resolved_scheme: MeasurementScheme,
    pub spectator_factors: SpectatorFactors,
    pub configurations_tested: usize,
    /// Best configurations, best first.
    pub ranking: Vec<ConfigurationScore>,
}

impl AppendixReport {
    pub fn metrics(&self) -> GateMetrics {
        GateMetrics {
            fidelity: self.fidelity,
            success_probability: self.success_probability,
        }
    }
}

fn permutations3(items: [usize; 3]) -> Vec<[usize; 3]> {
    let [a, b, c] = items;
    vec![[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]
}

/// All role assignments in the documented search space, in a fixed order.
pub fn candidate_mode_orders() -> Vec<ModeOrder> {
    let mut out = Vec::with_capacity(36);
    for active in permutations3(ACTIVE_CANDIDATES) {
        for spectators in permutations3(SPECTATOR_CANDIDATES) {
            // roles: H_A, V_A, H↺, H↻, V↺, V↻
            let [v_a, v_ccw, v_cw] = active;
            let [h_a, h_ccw, h_cw] = spectators;
            out.push(ModeOrder([
                h_a,
                v_a,
                h_ccw,
                h_cw,
                v_ccw,
                v_cw,
                ANCILLA_MODES[0],
                ANCILLA_MODES[1],
                ANCILLA_MODES[2],
            ]));
        }
    }
    out
}

/// All ancilla schemes on modes 6..9 with equal input and herald photon
/// numbers, at most three photons, in a fixed order (default scheme first).
pub fn candidate_schemes() -> Vec<MeasurementScheme> {
    let default = MeasurementScheme::three_single_photons(6);
    let mut out = vec![default.clone()];
    for n in 0..=MAX_ANCILLA_PHOTONS {
        let patterns = enumerate_basis(3, n);
        for input in &patterns {
            for herald in &patterns {
                let scheme = MeasurementScheme {
                    ancilla_modes: ANCILLA_MODES.to_vec(),
                    ancilla_input: input.occupations().to_vec(),
                    herald_pattern: herald.occupations().to_vec(),
                };
                if scheme != default {
                    out.push(scheme);
                }
            }
        }
    }
    out
}

/// The active 6x6 block in `(V_A, V↻_A1, V↺_A1, anc1, anc2, anc3)` order.
pub fn active_block(t: &ModeTransform, order: &ModeOrder) -> Result<ModeTransform> {
    t.submatrix(&order.active_modes())
}

/// Diagonal entries picked up by photons in the pass-through modes.
pub fn spectator_factors(t: &ModeTransform, order: &ModeOrder) -> SpectatorFactors {
    let m = t.matrix();
    let o = &order.0;
    SpectatorFactors {
        h_a: m[(o[0], o[0])],
        h_ccw_a1: m[(o[2], o[2])],
        h_cw_a1: m[(o[3], o[3])],
    }
}

/// The active block with the pass-through factors folded into its input
/// columns, so that the block alone realizes the reduced controlled sign
/// whenever the full matrix realizes the full one.
pub fn normalized_active_block(t: &ModeTransform, order: &ModeOrder) -> Result<ModeTransform> {
    let block = active_block(t, order)?;
    let f = spectator_factors(t, order);
    let mut m = block.into_matrix();
    let divisors = [f.h_a, f.h_cw_a1, f.h_ccw_a1];
    for (col, d) in divisors.iter().enumerate() {
        if d.norm() == 0.0 {
            return Err(Error::Dimension("pass-through mode has zero transmission".into()));
        }
        let mut c = m.column_mut(col);
        c /= *d;
    }
    ModeTransform::new(m)
}

fn better(a: &ConfigurationScore, b: &ConfigurationScore) -> bool {
    const TIE: f64 = 1e-12;
    a.fidelity > b.fidelity + TIE
        || ((a.fidelity - b.fidelity).abs() <= TIE && a.success_probability > b.success_probability + TIE)
}

/// Scores every configuration in the search space against the full
/// controlled-sign target and reports the best one.
pub fn verify_appendix(t: &ModeTransform) -> Result<AppendixReport> {
    if t.mode_count() != 9 {
        return Err(Error::Dimension(format!(
            "appendix verification needs a 9-mode matrix, got {}",
            t.mode_count()
        )));
    }
    let basis = quad_rail_basis();
    let target = target_csign();
    let scale = singular_values(t)[0];
    let orders = candidate_mode_orders();
    let permuted: Vec<DMatrix<Complex64>> = orders
        .iter()
        .map(|o| t.permuted(&o.0).map(ModeTransform::into_matrix))
        .collect::<Result<_>>()?;

    let mut scores = Vec::new();
    for scheme in candidate_schemes() {
        let plan = ContractionPlan::new(9, &basis, &scheme)?;
        let photons = plan.photon_numbers().to_vec();
        for (order, m) in orders.iter().zip(&permuted) {
            let a = plan.evaluate(m);
            let rescaled = DMatrix::from_fn(8, 8, |j, i| a[(j, i)] / scale.powi(photons[i] as i32));
            let g = raw_metrics(&rescaled, &target.matrix);
            scores.push(ConfigurationScore {
                mode_order: order.clone(),
                scheme: scheme.clone(),
                fidelity: g.fidelity,
                success_probability: g.success_probability,
            });
        }
    }
    let configurations_tested = scores.len();

    // Stable selection: earlier configurations win ties.
    let mut ranked: Vec<usize> = Vec::with_capacity(configurations_tested);
    for i in 0..scores.len() {
        let pos = ranked
            .iter()
            .position(|&r| better(&scores[i], &scores[r]))
            .unwrap_or(ranked.len());
        if pos < 10 {
            ranked.insert(pos, i);
            ranked.truncate(10);
        }
    }
    let ranking: Vec<ConfigurationScore> = ranked.iter().map(|&i| scores[i].clone()).collect();
    let best = ranking[0].clone();
    let sv = singular_values(&active_block(t, &best.mode_order)?);
    Ok(AppendixReport {
        fidelity: best.fidelity,
        success_probability: best.success_probability,
        singular_values: sv,
        spectator_factors: spectator_factors(t, &best.mode_order),
        resolved_mode_order: best.mode_order,
        resolved_scheme: best.scheme,
        configurations_tested,
        ranking,
    })
}
