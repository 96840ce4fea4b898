// Copyright 2026 hyperqec Contributors
// SPDX-License-Identifier: Apache-2.0

//! File formats: matrices, netlists, run reports and distribution CSVs.
//!
//! Floating-point numbers are written with 17 significant digits so every
//! `f64` survives a write/read cycle bit-exactly. All writes go to a
//! temporary file in the destination directory and are renamed into place.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::dilation::Netlist;
use crate::error::{Error, Result};
use crate::fock::ModeTransform;

pub const MATRIX_FORMAT: &str = "hyperqec-matrix";
pub const NETLIST_FORMAT: &str = "hyperqec-netlist";
pub const FORMAT_VERSION: u32 = 1;

/// A square complex matrix with provenance metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub format: String,
    pub version: u32,
    pub mode_count: usize,
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub source: String,
    /// Row-major `[re, im]` pairs.
    pub entries: Vec<[f64; 2]>,
}

impl MatrixFile {
    pub fn from_transform(t: &ModeTransform, label: impl Into<String>, source: impl Into<String>) -> Self {
        let n = t.mode_count();
        let entries = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| {
                let z = t.matrix()[(i, j)];
                [z.re, z.im]
            })
            .collect();
        Self {
            format: MATRIX_FORMAT.to_string(),
            version: FORMAT_VERSION,
            mode_count: n,
            label: label.into(),
            source: source.into(),
            entries,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != MATRIX_FORMAT {
            return Err(Error::MalformedMatrix(format!("unknown format tag {:?}", self.format)));
        }
        if self.entries.len() != self.mode_count * self.mode_count {
            return Err(Error::MalformedMatrix(format!(
                "{} entries for mode_count {}",
                self.entries.len(),
                self.mode_count
            )));
        }
        if self.entries.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::MalformedMatrix("non-finite entry".into()));
        }
        Ok(())
    }

    pub fn to_transform(&self) -> Result<ModeTransform> {
        self.validate()?;
        let entries: Vec<Complex64> = self.entries.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        ModeTransform::from_row_major(self.mode_count, &entries)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text).map_err(|e| Error::MalformedMatrix(e.to_string()))?;
        file.validate()?;
        Ok(file)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.validate()?;
        write_json(path, self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetlistFile {
    pub format: String,
    pub version: u32,
    #[serde(flatten)]
    pub netlist: Netlist,
}

impl NetlistFile {
    pub fn new(netlist: Netlist) -> Self {
        Self {
            format: NETLIST_FORMAT.to_string(),
            version: FORMAT_VERSION,
            netlist,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file: Self = serde_json::from_str(&read_to_string(path)?)?;
        if file.format != NETLIST_FORMAT {
            return Err(Error::InvalidNetlist(format!("unknown format tag {:?}", file.format)));
        }
        Ok(file)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

/// Structured record of one CLI invocation.
///
/// `payload` holds every number the command computed; `wall_time_seconds`
/// is the only field that varies between identical runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub payload: serde_json::Value,
    pub wall_time_seconds: f64,
}

impl RunReport {
    pub fn new(command: impl Into<String>, config: serde_json::Value, payload: serde_json::Value) -> Self {
        Self {
            command: command.into(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: None,
            config,
            payload,
            wall_time_seconds: 0.0,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&read_to_string(path)?)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn to_json_string(&self) -> String {
        to_json_string(self).expect("reports serialize")
    }
}

/// Serializes with 17 significant digits per float.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17Formatter::default());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits utf-8"))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json_string(value)?.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&read_to_string(path)?)?)
}

/// Formats a float with 17 significant digits.
pub fn format_sig17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `cycle_rank,fidelity,success_probability` rows.
pub fn distribution_csv(rows: &[(f64, f64)]) -> String {
    let mut out = String::from("cycle_rank,fidelity,success_probability\n");
    for (rank, (f, p)) in rows.iter().enumerate() {
        out.push_str(&format!("{rank},{},{}\n", format_sig17(*f), format_sig17(*p)));
    }
    out
}

pub fn write_distribution_csv(path: &Path, rows: &[(f64, f64)]) -> Result<()> {
    write_atomic(path, distribution_csv(rows).as_bytes())
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| io_err(path)(io::Error::new(io::ErrorKind::InvalidInput, "no file name")))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io_err(path))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Container {
    Object,
    Array,
    Inline,
}

/// Pretty printer that keeps arrays nested in arrays on one line and writes
/// floats as `{:.16e}`.
#[derive(Default)]
struct Sig17Formatter {
    stack: Vec<(Container, bool)>,
}

impl Sig17Formatter {
    fn inline(&self) -> bool {
        self.stack.iter().any(|(c, _)| *c == Container::Inline)
    }

    fn indent<W: ?Sized + Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(b"\n")?;
        for _ in 0..self.stack.len() {
            w.write_all(b"  ")?;
        }
        Ok(())
    }

    fn begin<W: ?Sized + Write>(&mut self, w: &mut W, kind: Container, open: &[u8]) -> io::Result<()> {
        let kind = if self.inline()
            || (kind == Container::Array && matches!(self.stack.last(), Some((Container::Array, _))))
        {
            Container::Inline
        } else {
            kind
        };
        self.stack.push((kind, false));
        w.write_all(open)
    }

    fn end<W: ?Sized + Write>(&mut self, w: &mut W, close: &[u8]) -> io::Result<()> {
        let (kind, had_values) = self.stack.pop().unwrap_or((Container::Object, false));
        if kind != Container::Inline && had_values {
            self.indent(w)?;
        }
        w.write_all(close)
    }

    fn element<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        let inline = self.inline();
        if let Some(top) = self.stack.last_mut() {
            top.1 = true;
        }
        if inline {
            if !first {
                w.write_all(b", ")?;
            }
            Ok(())
        } else {
            if !first {
                w.write_all(b",")?;
            }
            self.indent(w)
        }
    }
}

impl Formatter for Sig17Formatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_sig17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.begin(writer, Container::Array, b"[")
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.end(writer, b"]")
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.element(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, _writer: &mut W) -> io::Result<()> {
        Ok(())
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.begin(writer, Container::Object, b"{")
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.end(writer, b"}")
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.element(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        writer.write_all(b": ")
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, _writer: &mut W) -> io::Result<()> {
        Ok(())
    }
}
