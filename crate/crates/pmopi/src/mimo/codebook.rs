//! The 16-entry rank-2 Householder precoding codebook.
//!
//! Generating vectors and per-index column pairs follow the 4-TX cellular
//! codebook of 3GPP TS 36.211, Table 6.3.4.2.3-2. Each parent matrix is the
//! Householder reflection `W_n = I_4 - 2 u_n u_n^H / (u_n^H u_n)`; the rank-2
//! precoder keeps two of its columns. Columns are kept orthonormal (no 1/sqrt2
//! power scaling): a positive scalar on every precoder rescales the SNR
//! uniformly and cannot change which index wins the capacity argmax.

use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

use super::{ComplexMatrix, Pmi};
use crate::{Error, Result};

/// Number of transmit antennas the codebook is built for.
pub const TX_ANTENNAS: usize = 4;
/// Spatial streams per precoder.
pub const STREAMS: usize = 2;
/// Codebook size; PMIs carry `log2(CODEBOOK_SIZE) = 4` bits.
pub const CODEBOOK_SIZE: usize = 16;

/// Orthonormality tolerance accepted by [`Codebook::new`].
const COLUMN_ORTHONORMALITY_TOL: f64 = 1e-9;

/// An ordered set of tall precoding matrices; the list position is the PMI.
#[derive(Clone, PartialEq)]
pub struct Codebook {
    precoders: Vec<ComplexMatrix>,
}

impl Codebook {
    /// Validates that every entry is the same shape with orthonormal columns.
    pub fn new(precoders: Vec<ComplexMatrix>) -> Result<Self> {
        if precoders.is_empty() {
            return Err(Error::InvalidCodebook("codebook is empty".into()));
        }
        let (rows, cols) = (precoders[0].rows(), precoders[0].cols());
        for (i, f) in precoders.iter().enumerate() {
            if (f.rows(), f.cols()) != (rows, cols) {
                return Err(Error::InvalidCodebook(format!(
                    "entry {i} is {}x{}, expected {rows}x{cols}",
                    f.rows(),
                    f.cols()
                )));
            }
            let gram = f.hermitian().mul(f)?;
            let dev = gram.max_abs_diff(&ComplexMatrix::identity(cols));
            if dev > COLUMN_ORTHONORMALITY_TOL {
                return Err(Error::InvalidCodebook(format!(
                    "entry {i} columns deviate from orthonormal by {dev:.3e}"
                )));
            }
        }
        Ok(Self { precoders })
    }

    pub fn len(&self) -> usize {
        self.precoders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.precoders.is_empty()
    }

    pub fn get(&self, pmi: Pmi) -> &ComplexMatrix {
        &self.precoders[pmi.index()]
    }

    pub fn entry(&self, index: usize) -> &ComplexMatrix {
        &self.precoders[index]
    }

    pub fn iter(&self) -> impl Iterator<Item = &ComplexMatrix> {
        self.precoders.iter()
    }
}

/// The Householder reflection `I - 2 u u^H / (u^H u)`.
///
/// Unitary (and Hermitian) for any nonzero `u`, so any column subset is
/// orthonormal.
pub fn householder_reflection(u: &[Complex64]) -> ComplexMatrix {
    let n = u.len();
    let norm_sqr: f64 = u.iter().map(|z| z.norm_sqr()).sum();
    assert!(norm_sqr > 0.0, "generating vector must be nonzero");
    let scale = 2.0 / norm_sqr;
    ComplexMatrix::from_fn(n, n, |i, j| {
        let outer = u[i] * u[j].conj() * scale;
        if i == j {
            Complex64::new(1.0, 0.0) - outer
        } else {
            -outer
        }
    })
}

/// Generating vectors `u_n` and the 0-based column pair kept for rank 2,
/// per TS 36.211 Table 6.3.4.2.3-2.
fn generator_table() -> [([Complex64; 4], [usize; 2]); CODEBOOK_SIZE] {
    let c = Complex64::new;
    let one = c(1.0, 0.0);
    let j = c(0.0, 1.0);
    let h = FRAC_1_SQRT_2;
    [
        ([one, c(-1.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0)], [0, 3]),
        ([one, -j, one, j], [0, 1]),
        ([one, one, c(-1.0, 0.0), one], [0, 1]),
        ([one, j, one, -j], [0, 1]),
        ([one, c(-h, -h), -j, c(h, -h)], [0, 3]),
        ([one, c(h, -h), j, c(-h, -h)], [0, 3]),
        ([one, c(h, h), -j, c(-h, h)], [0, 2]),
        ([one, c(-h, h), j, c(h, h)], [0, 2]),
        ([one, c(-1.0, 0.0), one, one], [0, 1]),
        ([one, -j, c(-1.0, 0.0), -j], [0, 3]),
        ([one, one, one, c(-1.0, 0.0)], [0, 2]),
        ([one, j, c(-1.0, 0.0), j], [0, 2]),
        ([one, c(-1.0, 0.0), c(-1.0, 0.0), one], [0, 1]),
        ([one, c(-1.0, 0.0), one, c(-1.0, 0.0)], [0, 2]),
        ([one, one, c(-1.0, 0.0), c(-1.0, 0.0)], [0, 2]),
        ([one, one, one, one], [0, 1]),
    ]
}

/// Builds the 16-entry 4x2 Householder codebook. Pure arithmetic on constant
/// inputs, so repeated calls are bit-identical.
pub fn build_householder_codebook() -> Codebook {
    let precoders = generator_table()
        .iter()
        .map(|(u, cols)| {
            let w = householder_reflection(u);
            ComplexMatrix::from_fn(TX_ANTENNAS, STREAMS, |i, s| w.get(i, cols[s]))
        })
        .collect();
    Codebook::new(precoders).expect("constant codebook table must validate")
}
