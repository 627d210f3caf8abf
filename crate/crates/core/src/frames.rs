//! Fixed-width groups of real values, one group per code symbol.

use crate::{Error, Result};

/// A sequence of `dim`-dimensional real vectors stored contiguously.
///
/// Used both for demodulator probabilities (one `P`-vector of `p(bit = 1)`
/// per trellis step) and for raw channel samples grouped per code symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct Frames {
    dim: usize,
    data: Vec<f64>,
}

impl Frames {
    /// Groups `data` into consecutive non-overlapping vectors of length `dim`.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Framing("frame dimension must be positive".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::Framing(format!(
                "{} values do not split into frames of {}",
                data.len(),
                dim
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            data: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.data
    }

    /// Keeps only the frames whose index satisfies `keep`.
    pub fn select(&self, mut keep: impl FnMut(usize) -> bool) -> Frames {
        let mut data = Vec::new();
        for (t, f) in self.iter().enumerate() {
            if keep(t) {
                data.extend_from_slice(f);
            }
        }
        Frames {
            dim: self.dim,
            data,
        }
    }

    pub fn push(&mut self, frame: &[f64]) {
        assert_eq!(frame.len(), self.dim, "frame width mismatch");
        self.data.extend_from_slice(frame);
    }
}
