//! Plain-text checkpoints of named parameter tensors.
//!
//! ```text
//! fincast-checkpoint 1
//! header {"kind":"nbeats",...}
//! tensor stack0.block0.layer0.weight 256 120
//! 0.0123 -0.5 ...
//! ```
//!
//! Values are written with Rust's shortest round-trip float formatting, so a
//! save/load cycle reproduces every bit.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::layer::DenseLayer;
use crate::error::{Error, Result};

const MAGIC: &str = "fincast-checkpoint";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Single-line JSON describing the model the tensors belong to.
    pub header: String,
    pub tensors: Vec<NamedTensor>,
}

impl Checkpoint {
    pub fn from_layers<'a>(
        header: String,
        names: &[String],
        layers: impl IntoIterator<Item = &'a DenseLayer>,
    ) -> Self {
        let mut tensors = Vec::new();
        for (name, layer) in names.iter().zip(layers) {
            let (rows, cols) = layer.weights.dim();
            tensors.push(NamedTensor {
                name: format!("{name}.weight"),
                rows,
                cols,
                data: layer.weights.iter().copied().collect(),
            });
            tensors.push(NamedTensor {
                name: format!("{name}.bias"),
                rows: 1,
                cols: layer.bias.len(),
                data: layer.bias.to_vec(),
            });
        }
        Self { header, tensors }
    }

    /// Copies tensors back into `layers`, checking names and shapes.
    pub fn load_into(&self, names: &[String], layers: Vec<&mut DenseLayer>) -> Result<()> {
        if self.tensors.len() != 2 * layers.len() || names.len() != layers.len() {
            return Err(Error::Checkpoint(format!(
                "{} tensors for {} layers",
                self.tensors.len(),
                layers.len()
            )));
        }
        for ((name, layer), pair) in names.iter().zip(layers).zip(self.tensors.chunks(2)) {
            let (w, b) = (&pair[0], &pair[1]);
            if w.name != format!("{name}.weight") || b.name != format!("{name}.bias") {
                return Err(Error::Checkpoint(format!("expected tensors for `{name}`, found `{}`", w.name)));
            }
            if (w.rows, w.cols) != layer.weights.dim() || b.cols != layer.bias.len() {
                return Err(Error::Checkpoint(format!("shape mismatch for `{name}`")));
            }
            layer.weights = Array2::from_shape_vec((w.rows, w.cols), w.data.clone())
                .map_err(|e| Error::Checkpoint(e.to_string()))?;
            layer.bias = Array1::from(b.data.clone());
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC} {VERSION}");
        let _ = writeln!(out, "header {}", self.header);
        for t in &self.tensors {
            let _ = writeln!(out, "tensor {} {} {}", t.name, t.rows, t.cols);
            let line: Vec<String> = t.data.iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Checkpoint(msg.to_string());
        let mut lines = text.lines();
        let magic = lines.next().ok_or_else(|| bad("empty file"))?;
        let version = magic
            .strip_prefix(MAGIC)
            .map(str::trim)
            .ok_or_else(|| bad("not a checkpoint"))?;
        if version != VERSION.to_string() {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let header = lines
            .next()
            .and_then(|l| l.strip_prefix("header "))
            .ok_or_else(|| bad("missing header line"))?
            .to_string();
        let mut tensors = Vec::new();
        while let Some(line) = lines.next() {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "tensor" {
                return Err(Error::Checkpoint(format!("unexpected line `{line}`")));
            }
            let rows: usize = parts[2].parse().map_err(|_| bad("bad row count"))?;
            let cols: usize = parts[3].parse().map_err(|_| bad("bad column count"))?;
            let data = lines
                .next()
                .unwrap_or("")
                .split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|_| bad("bad value")))
                .collect::<Result<Vec<f64>>>()?;
            if data.len() != rows * cols {
                return Err(Error::Checkpoint(format!(
                    "tensor `{}` declares {rows}x{cols} but holds {} values",
                    parts[1],
                    data.len()
                )));
            }
            tensors.push(NamedTensor {
                name: parts[1].to_string(),
                rows,
                cols,
                data,
            });
        }
        Ok(Self { header, tensors })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
