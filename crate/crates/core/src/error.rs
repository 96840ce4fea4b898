// Copyright 2026 hyperqec Contributors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{photons} photons exceed the supported maximum of {max}")]
    TooManyPhotons { photons: usize, max: usize },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is not unitary (max |U^H U - I| = {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("largest singular value {sigma_max} exceeds 1; rescale the matrix before dilation")]
    NotAContraction { sigma_max: f64 },

    #[error("amplitudes are not normalized (|alpha|^2 + |beta|^2 = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("syndrome measurement is ambiguous: {0}")]
    AmbiguousSyndrome(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid netlist: {0}")]
    InvalidNetlist(String),

    #[error("malformed matrix file: {0}")]
    MalformedMatrix(String),

    #[error("checksum mismatch for {what}: expected {expected}, found {found}")]
    Checksum {
        what: String,
        expected: String,
        found: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
