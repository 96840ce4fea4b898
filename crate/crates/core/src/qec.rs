// Copyright 2026 hyperqec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Logical-level simulation of the hyperentanglement-assisted code and of
//! superdense coding with hyperentangled pairs.
//!
//! Each of the photons A₁ and B₁ lives in the four-dimensional
//! polarization-OAM space with basis `(H↺, H↻, V↺, V↻)`; the information
//! photon A carries polarization only. A [`HyperState`] stores 32 amplitudes
//! at index `a·16 + a1·4 + b1`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SINGLE_PHOTON_LABELS: [&str; 4] = ["H↺", "H↻", "V↺", "V↻"];

/// Squared norm deviation tolerated on inputs.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Probability below which a syndrome outcome counts as impossible.
const OUTCOME_TOLERANCE: f64 = 1e-9;

pub type Qubit = [Complex64; 2];

/// Two-photon polarization-OAM amplitudes at index `first·4 + second`.
pub type PairState = [Complex64; 16];

/// Single-photon polarization-OAM amplitudes.
pub type PhotonState = [Complex64; 4];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn is_vertical(photon: usize) -> bool {
    photon >= 2
}

/// Polarization flip keeping the OAM label.
fn flip_polarization(photon: usize) -> usize {
    photon ^ 2
}

#[derive(Clone, Debug, PartialEq)]
pub struct HyperState {
    amplitudes: [Complex64; 32],
}

impl HyperState {
    pub fn new(amplitudes: [Complex64; 32]) -> Result<Self> {
        let norm_sqr: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(Self { amplitudes })
    }

    /// `|ψ⟩_A ⊗ |pair⟩_{A₁B₁}`.
    pub fn product(psi: &Qubit, pair: &PairState) -> Result<Self> {
        let mut amplitudes = [ZERO; 32];
        for (a, pa) in psi.iter().enumerate() {
            for (k, pk) in pair.iter().enumerate() {
                amplitudes[a * 16 + k] = pa * pk;
            }
        }
        Self::new(amplitudes)
    }

    pub fn amplitudes(&self) -> &[Complex64; 32] {
        &self.amplitudes
    }

    pub fn amplitude(&self, a: usize, a1: usize, b1: usize) -> Complex64 {
        self.amplitudes[a * 16 + a1 * 4 + b1]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `|⟨self|other⟩|²`, blind to global phase.
    pub fn fidelity(&self, other: &HyperState) -> f64 {
        let overlap: Complex64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(x, y)| x.conj() * y)
            .sum();
        overlap.norm_sqr()
    }

    fn map(&self, f: impl Fn(usize, usize, usize) -> (usize, usize, usize, Complex64)) -> Self {
        let mut out = [ZERO; 32];
        for a in 0..2 {
            for a1 in 0..4 {
                for b1 in 0..4 {
                    let (na, na1, nb1, phase) = f(a, a1, b1);
                    out[na * 16 + na1 * 4 + nb1] += phase * self.amplitude(a, a1, b1);
                }
            }
        }
        Self { amplitudes: out }
    }

    /// Reduced density matrix of one photon's OAM label (`0` for A₁, `1`
    /// for B₁), in `(↺, ↻)` order.
    pub fn oam_reduced_state(&self, photon: usize) -> DMatrix<Complex64> {
        let mut rho = DMatrix::zeros(2, 2);
        for a in 0..2 {
            for a1 in 0..4 {
                for b1 in 0..4 {
                    let (mine, other) = if photon == 0 { (a1, b1) } else { (b1, a1) };
                    let (pol, oam) = (mine / 2, mine % 2);
                    for oam2 in 0..2 {
                        let mine2 = pol * 2 + oam2;
                        let (x1, y1) = if photon == 0 { (mine2, other) } else { (other, mine2) };
                        rho[(oam, oam2)] += self.amplitude(a, a1, b1) * self.amplitude(a, x1, y1).conj();
                    }
                }
            }
        }
        rho
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellLabel {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellLabel {
    pub const ALL: [BellLabel; 4] = [Self::PhiPlus, Self::PhiMinus, Self::PsiPlus, Self::PsiMinus];
}

impl fmt::Display for BellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PhiPlus => "Φ+",
            Self::PhiMinus => "Φ-",
            Self::PsiPlus => "Ψ+",
            Self::PsiMinus => "Ψ-",
        })
    }
}

/// Single-photon polarization-OAM states `φ± = (H↺ ± V↻)/√2`,
/// `ψ± = (H↻ ± V↺)/√2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpoamLabel {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl SpoamLabel {
    pub const ALL: [SpoamLabel; 4] = [Self::PhiPlus, Self::PhiMinus, Self::PsiPlus, Self::PsiMinus];
}

impl fmt::Display for SpoamLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PhiPlus => "φ+",
            Self::PhiMinus => "φ-",
            Self::PsiPlus => "ψ+",
            Self::PsiMinus => "ψ-",
        })
    }
}

/// `|Φ±⟩ = ½(|HH⟩ ± |VV⟩)(|↺↻⟩ + |↻↺⟩)`, `|Ψ±⟩ = ½(|HV⟩ ± |VH⟩)(|↺↻⟩ + |↻↺⟩)`.
pub fn hyper_bell_state(label: BellLabel) -> PairState {
    let (pols, sign): ([(usize, usize); 2], f64) = match label {
        BellLabel::PhiPlus => ([(0, 0), (1, 1)], 1.0),
        BellLabel::PhiMinus => ([(0, 0), (1, 1)], -1.0),
        BellLabel::PsiPlus => ([(0, 1), (1, 0)], 1.0),
        BellLabel::PsiMinus => ([(0, 1), (1, 0)], -1.0),
    };
    let mut out = [ZERO; 16];
    for (term, (p1, p2)) in pols.into_iter().enumerate() {
        let s = if term == 0 { 1.0 } else { sign };
        for (o1, o2) in [(0, 1), (1, 0)] {
            out[(p1 * 2 + o1) * 4 + p2 * 2 + o2] = c(0.5 * s);
        }
    }
    out
}

pub fn hyper_bell_states() -> [(BellLabel, PairState); 4] {
    BellLabel::ALL.map(|l| (l, hyper_bell_state(l)))
}

pub fn spoam_state(label: SpoamLabel) -> PhotonState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match label {
        SpoamLabel::PhiPlus => [c(h), ZERO, ZERO, c(h)],
        SpoamLabel::PhiMinus => [c(h), ZERO, ZERO, c(-h)],
        SpoamLabel::PsiPlus => [ZERO, c(h), c(h), ZERO],
        SpoamLabel::PsiMinus => [ZERO, c(h), c(-h), ZERO],
    }
}

pub fn spoam_basis() -> [(SpoamLabel, PhotonState); 4] {
    SpoamLabel::ALL.map(|l| (l, spoam_state(l)))
}

/// Coefficients `t[i][j] = ⟨s_i ⊗ s_j|pair⟩` over [`SpoamLabel::ALL`].
pub fn bell_to_spoam(pair: &PairState) -> [[Complex64; 4]; 4] {
    let basis = spoam_basis();
    let mut table = [[ZERO; 4]; 4];
    for (i, (_, si)) in basis.iter().enumerate() {
        for (j, (_, sj)) in basis.iter().enumerate() {
            table[i][j] = (0..16).map(|k| (si[k / 4] * sj[k % 4]).conj() * pair[k]).sum();
        }
    }
    table
}

/// Inverse of [`bell_to_spoam`].
pub fn spoam_to_pair(table: &[[Complex64; 4]; 4]) -> PairState {
    let basis = spoam_basis();
    let mut pair = [ZERO; 16];
    for (i, (_, si)) in basis.iter().enumerate() {
        for (j, (_, sj)) in basis.iter().enumerate() {
            for (k, p) in pair.iter_mut().enumerate() {
                *p += table[i][j] * si[k / 4] * sj[k % 4];
            }
        }
    }
    pair
}

/// The Bell label whose expansion contains the outcome pair `(first, second)`.
pub fn joint_label(first: SpoamLabel, second: SpoamLabel) -> BellLabel {
    let (i, j) = (first as usize, second as usize);
    BellLabel::ALL
        .into_iter()
        .find(|&l| bell_to_spoam(&hyper_bell_state(l))[i][j].norm() > 0.25)
        .expect("every outcome pair belongs to one Bell state")
}

/// Polarization errors of the channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErrorKind {
    I,
    XA,
    XA1,
    XAXA1,
}

impl ErrorKind {
    pub const ALL: [ErrorKind; 4] = [Self::I, Self::XA, Self::XA1, Self::XAXA1];

    fn flips(self) -> (bool, bool) {
        match self {
            Self::I => (false, false),
            Self::XA => (true, false),
            Self::XA1 => (false, true),
            Self::XAXA1 => (true, true),
        }
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::I => "I",
            Self::XA => "XA",
            Self::XA1 => "XA1",
            Self::XAXA1 => "XAXA1",
        })
    }
}

impl FromStr for ErrorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown error kind {s:?} (expected I, XA, XA1 or XAXA1)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Recovery {
    I,
    X,
    Z,
    /// `Z·X`: X first.
    ZX,
}

impl Recovery {
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        match self {
            Self::I => [[ONE, ZERO], [ZERO, ONE]],
            Self::X => [[ZERO, ONE], [ONE, ZERO]],
            Self::Z => [[ONE, ZERO], [ZERO, -ONE]],
            Self::ZX => [[ZERO, ONE], [-ONE, ZERO]],
        }
    }

    pub fn apply(self, q: &Qubit) -> Qubit {
        let m = self.matrix();
        [m[0][0] * q[0] + m[0][1] * q[1], m[1][0] * q[0] + m[1][1] * q[1]]
    }
}

impl fmt::Display for Recovery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyndromeRecord {
    pub error: ErrorKind,
    pub syndrome: BellLabel,
    pub recovery: Recovery,
}

/// Error, syndrome and recovery for each supported channel error.
pub const SYNDROME_TABLE: [SyndromeRecord; 4] = [
    SyndromeRecord {
        error: ErrorKind::I,
        syndrome: BellLabel::PhiPlus,
        recovery: Recovery::I,
    },
    SyndromeRecord {
        error: ErrorKind::XA,
        syndrome: BellLabel::PhiMinus,
        recovery: Recovery::X,
    },
    SyndromeRecord {
        error: ErrorKind::XA1,
        syndrome: BellLabel::PsiPlus,
        recovery: Recovery::Z,
    },
    SyndromeRecord {
        error: ErrorKind::XAXA1,
        syndrome: BellLabel::PsiMinus,
        recovery: Recovery::ZX,
    },
];

pub fn record_for_syndrome(syndrome: BellLabel) -> SyndromeRecord {
    SYNDROME_TABLE
        .into_iter()
        .find(|r| r.syndrome == syndrome)
        .expect("table covers every Bell label")
}

pub fn qubit(alpha: Complex64, beta: Complex64) -> Result<Qubit> {
    let norm_sqr = alpha.norm_sqr() + beta.norm_sqr();
    if (norm_sqr - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NotNormalized { norm_sqr });
    }
    Ok([alpha, beta])
}

/// `|⟨a|b⟩|²` for normalized qubits.
pub fn qubit_fidelity(a: &Qubit, b: &Qubit) -> f64 {
    (a[0].conj() * b[0] + a[1].conj() * b[1]).norm_sqr()
}

/// Controlled sign on (A polarization, A₁ polarization), as an 8×8 matrix on
/// index `a·4 + a1`.
pub fn controlled_sign_matrix() -> DMatrix<Complex64> {
    DMatrix::from_fn(8, 8, |r, col| {
        if r != col {
            ZERO
        } else if r / 4 == 1 && is_vertical(r % 4) {
            -ONE
        } else {
            ONE
        }
    })
}

/// The encoding (and decoding) gate: `-1` when both A and A₁ are vertical.
pub fn apply_controlled_sign(state: &HyperState) -> HyperState {
    state.map(|a, a1, b1| {
        let phase = if a == 1 && is_vertical(a1) { -ONE } else { ONE };
        (a, a1, b1, phase)
    })
}

/// `CS (|ψ⟩_A ⊗ |Φ+⟩_{A₁B₁})` for `|ψ⟩ = α|H⟩ + β|V⟩`.
pub fn encode(alpha: Complex64, beta: Complex64) -> Result<HyperState> {
    let psi = qubit(alpha, beta)?;
    let start = HyperState::product(&psi, &hyper_bell_state(BellLabel::PhiPlus))?;
    Ok(apply_controlled_sign(&start))
}

/// Polarization flips on A and/or A₁; OAM is untouched.
pub fn apply_channel(state: &HyperState, error: ErrorKind) -> HyperState {
    let (flip_a, flip_a1) = error.flips();
    state.map(|a, a1, b1| {
        let na = if flip_a { 1 - a } else { a };
        let na1 = if flip_a1 { flip_polarization(a1) } else { a1 };
        (na, na1, b1, ONE)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyndromeMeasurement {
    pub syndrome: BellLabel,
    /// Individual analysis outcomes on `(B₁′, B₁)`; only set when sampled.
    pub outcomes: Option<(SpoamLabel, SpoamLabel)>,
    /// State of photon B, normalized.
    pub residual: Qubit,
}

/// Probability of each individual-analysis outcome pair, summed over A.
fn outcome_probabilities(state: &HyperState) -> [[f64; 4]; 4] {
    let mut probs = [[0.0; 4]; 4];
    for a in 0..2 {
        let pair: PairState = std::array::from_fn(|k| state.amplitudes[a * 16 + k]);
        let table = bell_to_spoam(&pair);
        for i in 0..4 {
            for j in 0..4 {
                probs[i][j] += table[i][j].norm_sqr();
            }
        }
    }
    probs
}

fn project_a(state: &HyperState, onto: &PairState) -> (Qubit, f64) {
    let q: Qubit = std::array::from_fn(|a| (0..16).map(|k| onto[k].conj() * state.amplitudes[a * 16 + k]).sum());
    let norm = (q[0].norm_sqr() + q[1].norm_sqr()).sqrt();
    (q, norm)
}

fn normalized(q: Qubit, norm: f64) -> Qubit {
    [q[0] / norm, q[1] / norm]
}

/// Applies the decoding gate and projects `(B₁′, B₁)` onto the Bell state
/// identified by the two single-photon analyses.
///
/// Fails with [`Error::AmbiguousSyndrome`] unless all outcome pairs with
/// nonzero probability point to the same Bell state.
pub fn decode_and_measure(state: &HyperState) -> Result<SyndromeMeasurement> {
    let decoded = apply_controlled_sign(state);
    let probs = outcome_probabilities(&decoded);
    let mut weights = [0.0; 4];
    for (i, first) in SpoamLabel::ALL.into_iter().enumerate() {
        for (j, second) in SpoamLabel::ALL.into_iter().enumerate() {
            weights[joint_label(first, second) as usize] += probs[i][j];
        }
    }
    let present: Vec<BellLabel> = BellLabel::ALL
        .into_iter()
        .filter(|&l| weights[l as usize] > OUTCOME_TOLERANCE)
        .collect();
    let [syndrome] = present[..] else {
        return Err(Error::AmbiguousSyndrome(format!(
            "outcomes point to {} Bell states",
            present.len()
        )));
    };
    let (q, norm) = project_a(&decoded, &hyper_bell_state(syndrome));
    if (norm * norm - 1.0).abs() > OUTCOME_TOLERANCE {
        return Err(Error::AmbiguousSyndrome(format!(
            "state has weight {} on {syndrome}",
            norm * norm
        )));
    }
    Ok(SyndromeMeasurement {
        syndrome,
        outcomes: None,
        residual: normalized(q, norm),
    })
}

/// Like [`decode_and_measure`], but draws the individual analysis outcomes
/// from their Born probabilities and conditions B on them.
pub fn decode_and_sample<R: Rng + ?Sized>(state: &HyperState, rng: &mut R) -> Result<SyndromeMeasurement> {
    let decoded = apply_controlled_sign(state);
    let probs = outcome_probabilities(&decoded);
    let draw: f64 = rng.random::<f64>() * probs.iter().flatten().sum::<f64>();
    let mut acc = 0.0;
    let mut pick = None;
    'outer: for (i, row) in probs.iter().enumerate() {
        for (j, p) in row.iter().enumerate() {
            if *p <= OUTCOME_TOLERANCE {
                continue;
            }
            pick = Some((i, j));
            acc += p;
            if draw < acc {
                break 'outer;
            }
        }
    }
    let (i, j) = pick.ok_or_else(|| Error::AmbiguousSyndrome("no outcome has nonzero probability".into()))?;
    let (first, second) = (SpoamLabel::ALL[i], SpoamLabel::ALL[j]);
    let (si, sj) = (spoam_state(first), spoam_state(second));
    let onto: PairState = std::array::from_fn(|k| si[k / 4] * sj[k % 4]);
    let (q, norm) = project_a(&decoded, &onto);
    Ok(SyndromeMeasurement {
        syndrome: joint_label(first, second),
        outcomes: Some((first, second)),
        residual: normalized(q, norm),
    })
}

/// Applies the recovery listed for `syndrome`.
pub fn recover(residual: &Qubit, syndrome: BellLabel) -> Qubit {
    record_for_syndrome(syndrome).recovery.apply(residual)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolOutcome {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub error: ErrorKind,
    pub syndrome: BellLabel,
    /// Individual analysis outcomes, when sampled.
    pub outcomes: Option<(SpoamLabel, SpoamLabel)>,
    pub recovery: Recovery,
    /// Fidelity of the recovered photon with the sent one.
    pub fidelity: f64,
    /// Whether `(error, syndrome, recovery)` is the matching table row.
    pub matches_table: bool,
}

fn protocol_with(
    alpha: Complex64,
    beta: Complex64,
    error: ErrorKind,
    measure: impl FnOnce(&HyperState) -> Result<SyndromeMeasurement>,
) -> Result<ProtocolOutcome> {
    let psi = qubit(alpha, beta)?;
    let received = apply_channel(&encode(alpha, beta)?, error);
    let measured = measure(&received)?;
    let record = record_for_syndrome(measured.syndrome);
    let out = record.recovery.apply(&measured.residual);
    Ok(ProtocolOutcome {
        alpha,
        beta,
        error,
        syndrome: record.syndrome,
        outcomes: measured.outcomes,
        recovery: record.recovery,
        fidelity: qubit_fidelity(&psi, &out),
        matches_table: record.error == error,
    })
}

/// Encode, channel, decode, measure and recover.
pub fn run_protocol(alpha: Complex64, beta: Complex64, error: ErrorKind) -> Result<ProtocolOutcome> {
    protocol_with(alpha, beta, error, decode_and_measure)
}

/// [`run_protocol`] with sampled individual analysis outcomes.
pub fn run_protocol_sampled<R: Rng + ?Sized>(
    alpha: Complex64,
    beta: Complex64,
    error: ErrorKind,
    rng: &mut R,
) -> Result<ProtocolOutcome> {
    protocol_with(alpha, beta, error, |s| decode_and_sample(s, rng))
}

/// Uniformly random pure qubit state.
pub fn random_qubit<R: Rng + ?Sized>(rng: &mut R) -> Qubit {
    let mut z: [Complex64; 2] =
        std::array::from_fn(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let norm = (z[0].norm_sqr() + z[1].norm_sqr()).sqrt();
    z.iter_mut().for_each(|x| *x /= norm);
    z
}

/// Generator used for random inputs and sampled outcomes.
pub fn seeded_rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Every channel error on `states` random inputs drawn from `seed`.
pub fn protocol_sweep(seed: u64, states: usize, sample: bool) -> Result<Vec<ProtocolOutcome>> {
    let mut rng = seeded_rng(seed);
    let mut out = Vec::with_capacity(4 * states);
    for _ in 0..states {
        let [alpha, beta] = random_qubit(&mut rng);
        for error in ErrorKind::ALL {
            out.push(if sample {
                run_protocol_sampled(alpha, beta, error, &mut rng)?
            } else {
                run_protocol(alpha, beta, error)?
            });
        }
    }
    Ok(out)
}

/// Two classical bits, sent as `00 → I`, `01 → Z`, `10 → X`, `11 → XZ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message(pub u8);

impl Message {
    pub const ALL: [Message; 4] = [Message(0), Message(1), Message(2), Message(3)];

    pub fn new(bits: u8) -> Result<Self> {
        if bits > 3 {
            return Err(Error::InvalidConfig(format!("message {bits} does not fit in two bits")));
        }
        Ok(Self(bits))
    }

    fn expected_label(self) -> BellLabel {
        BellLabel::ALL[self.0 as usize]
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02b}", self.0)
    }
}

impl FromStr for Message {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "00" => Ok(Self(0)),
            "01" => Ok(Self(1)),
            "10" => Ok(Self(2)),
            "11" => Ok(Self(3)),
            _ => Err(Error::InvalidConfig(format!(
                "message {s:?} is not one of 00, 01, 10, 11"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperdenseOutcome {
    pub sent: Message,
    pub detected: BellLabel,
    pub decoded: Message,
}

/// Alice applies the message's Pauli to her photon's polarization in
/// `|Φ+⟩`; Bob runs the φ±/ψ± analysis on both photons.
pub fn superdense_roundtrip(message: Message) -> Result<SuperdenseOutcome> {
    let mut pair = hyper_bell_state(BellLabel::PhiPlus);
    if message.0 & 1 == 1 {
        for (k, p) in pair.iter_mut().enumerate() {
            if is_vertical(k / 4) {
                *p = -*p;
            }
        }
    }
    if message.0 & 2 == 2 {
        let before = pair;
        for (k, p) in pair.iter_mut().enumerate() {
            *p = before[flip_polarization(k / 4) * 4 + k % 4];
        }
    }
    let table = bell_to_spoam(&pair);
    let mut detected = None;
    for (i, first) in SpoamLabel::ALL.into_iter().enumerate() {
        for (j, second) in SpoamLabel::ALL.into_iter().enumerate() {
            if table[i][j].norm_sqr() <= OUTCOME_TOLERANCE {
                continue;
            }
            let label = joint_label(first, second);
            if detected.is_some_and(|d| d != label) {
                return Err(Error::AmbiguousSyndrome("message outcomes disagree".into()));
            }
            detected = Some(label);
        }
    }
    let detected = detected.ok_or_else(|| Error::AmbiguousSyndrome("no outcome".into()))?;
    let decoded = Message::ALL
        .into_iter()
        .find(|m| m.expected_label() == detected)
        .expect("every Bell state decodes");
    Ok(SuperdenseOutcome {
        sent: message,
        detected,
        decoded,
    })
}
