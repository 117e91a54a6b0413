//! Capacity evaluation and PMI selection.
//!
//! The objective both parties optimize is the precoded MIMO capacity
//! `log2 det[I + rho * F^H H^H H F]` in bits/s/Hz, where `H` is the channel
//! estimate, `F` a codebook precoder, and `rho` the transmit-power to
//! noise-power ratio. Selecting the argmax index over the shared codebook is
//! what turns a channel estimate into key material; the rotated variants
//! evaluate the same objective on the effective channel `H U` so a secret
//! unitary can refresh keys on a static channel.

mod codebook;
mod matrix;

pub use codebook::{
    build_householder_codebook, householder_reflection, Codebook, CODEBOOK_SIZE, STREAMS,
    TX_ANTENNAS,
};
pub use matrix::ComplexMatrix;

use num_complex::Complex64;
use rand::Rng;

use crate::rng::complex_gaussian;
use crate::{Error, Result};

/// Deviation of `U^H U` from the identity above which a rotation matrix is
/// rejected.
const UNITARY_TOL: f64 = 1e-6;

/// Linear transmit-power to noise-power ratio entering the capacity formula.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Snr {
    rho: f64,
}

impl Snr {
    pub fn new(rho: f64) -> Result<Self> {
        if !rho.is_finite() {
            return Err(Error::NonFinite("snr"));
        }
        if rho <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "snr must be positive, got {rho}"
            )));
        }
        Ok(Self { rho })
    }

    pub fn from_db(db: f64) -> Result<Self> {
        Self::new(10f64.powf(db / 10.0))
    }

    pub fn rho(self) -> f64 {
        self.rho
    }
}

/// Index of a precoder within a codebook; the 4-bit secret unit of the
/// key exchange.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pmi(usize);

impl Pmi {
    pub fn new(index: usize) -> Self {
        Self(index)
    }

    pub fn index(self) -> usize {
        self.0
    }
}

/// Precoded channel capacity `log2 det[I + rho * F^H H^H H F]` in bits/s/Hz.
///
/// `H` is `m x n` and `F` is `n x r` with `r` in {1, 2}; the determinant of
/// the resulting `r x r` matrix is evaluated in closed form. The tiny
/// imaginary rounding residue of the determinant is discarded and the result
/// clamped to be nonnegative.
pub fn capacity(h: &ComplexMatrix, f: &ComplexMatrix, snr: Snr) -> Result<f64> {
    if !h.is_finite() {
        return Err(Error::NonFinite("channel matrix"));
    }
    if !f.is_finite() {
        return Err(Error::NonFinite("precoding matrix"));
    }
    if h.cols() != f.rows() {
        return Err(Error::DimensionMismatch(format!(
            "channel is {}x{} but precoder is {}x{}",
            h.rows(),
            h.cols(),
            f.rows(),
            f.cols()
        )));
    }
    let streams = f.cols();
    let gram = h.hermitian().mul(h)?; // H^H H, n x n
    let inner = f.hermitian().mul(&gram)?.mul(f)?; // F^H H^H H F, r x r
    let rho = Complex64::new(snr.rho(), 0.0);
    let det = match streams {
        1 => Complex64::new(1.0, 0.0) + rho * inner.get(0, 0),
        2 => {
            let m = ComplexMatrix::identity(2)
                .add(&inner.scale(rho))
                .expect("2x2 shapes agree");
            m.det2()
        }
        _ => {
            return Err(Error::DimensionMismatch(format!(
                "capacity supports 1 or 2 streams, got {streams}"
            )))
        }
    };
    debug_assert!(det.im.abs() < 1e-9 * det.norm().max(1.0));
    // det >= 1 analytically; rounding can only graze it from below.
    Ok(det.re.max(1.0).log2())
}

/// Capacity of the rotated effective channel `H U`.
///
/// Algebraically equal to `capacity(H, U * F, snr)`: the unitary can be
/// absorbed into the precoder.
pub fn rotated_capacity(
    h: &ComplexMatrix,
    f: &ComplexMatrix,
    u: &ComplexMatrix,
    snr: Snr,
) -> Result<f64> {
    let hu = rotate_channel(h, u)?;
    capacity(&hu, f, snr)
}

/// Index of the codebook entry maximizing [`capacity`]; ties break toward the
/// lowest index, comparing capacities exactly as computed.
pub fn select_pmi(h: &ComplexMatrix, snr: Snr, codebook: &Codebook) -> Result<Pmi> {
    let mut best = 0usize;
    let mut best_capacity = capacity(h, codebook.entry(0), snr)?;
    for index in 1..codebook.len() {
        let c = capacity(h, codebook.entry(index), snr)?;
        if c > best_capacity {
            best = index;
            best_capacity = c;
        }
    }
    Ok(Pmi::new(best))
}

/// [`select_pmi`] with [`rotated_capacity`] as the objective.
pub fn select_pmi_rotated(
    h: &ComplexMatrix,
    u: &ComplexMatrix,
    snr: Snr,
    codebook: &Codebook,
) -> Result<Pmi> {
    let hu = rotate_channel(h, u)?;
    select_pmi(&hu, snr, codebook)
}

/// Validates `U` and forms the effective channel `H U`.
fn rotate_channel(h: &ComplexMatrix, u: &ComplexMatrix) -> Result<ComplexMatrix> {
    if u.rows() != h.cols() || u.cols() != h.cols() {
        return Err(Error::DimensionMismatch(format!(
            "rotation must be {0}x{0} for a {1}x{0} channel, got {2}x{3}",
            h.cols(),
            h.rows(),
            u.rows(),
            u.cols()
        )));
    }
    let deviation = u.unitary_deviation()?;
    if deviation > UNITARY_TOL {
        return Err(Error::NotUnitary { deviation });
    }
    h.mul(u)
}

/// A Haar-distributed `n x n` random unitary.
///
/// QR of an iid complex Gaussian matrix via modified Gram-Schmidt; the
/// pivots are normalized to be real and positive, which fixes the phase
/// ambiguity of the triangular factor and makes the Q factor Haar.
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    assert!(n >= 1, "unitary dimension must be at least 1");
    loop {
        let z = ComplexMatrix::from_fn(n, n, |_, _| complex_gaussian(rng, 1.0));
        if let Some(q) = gram_schmidt(&z) {
            return q;
        }
        // Numerically degenerate draw (never observed in practice): resample.
    }
}

/// Column-wise modified Gram-Schmidt; returns `None` when a pivot collapses.
fn gram_schmidt(z: &ComplexMatrix) -> Option<ComplexMatrix> {
    let n = z.rows();
    let mut q = z.clone();
    for j in 0..n {
        for prev in 0..j {
            let mut proj = Complex64::new(0.0, 0.0);
            for i in 0..n {
                proj += q.get(i, prev).conj() * q.get(i, j);
            }
            for i in 0..n {
                let v = q.get(i, j) - proj * q.get(i, prev);
                q.set(i, j, v);
            }
        }
        let norm: f64 = (0..n).map(|i| q.get(i, j).norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            return None;
        }
        for i in 0..n {
            let v = q.get(i, j) / norm;
            q.set(i, j, v);
        }
    }
    Some(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// A 2x4 channel with iid unit-variance complex Gaussian entries.
    fn random_channel(rng: &mut impl rand::Rng) -> ComplexMatrix {
        ComplexMatrix::from_fn(2, 4, |_, _| complex_gaussian(rng, 1.0))
    }

    #[test]
    fn zero_channel_has_zero_capacity() {
        let cb = build_householder_codebook();
        let h = ComplexMatrix::zeros(2, 4);
        let snr = Snr::new(10.0).unwrap();
        for f in cb.iter() {
            assert_eq!(capacity(&h, f, snr).unwrap(), 0.0);
        }
    }

    #[test]
    fn orthonormal_product_capacity_is_analytic() {
        // H = F^H makes H F = I_2, so capacity = 2 log2(1 + rho) = 2 log2(4).
        let cb = build_householder_codebook();
        let snr = Snr::new(3.0).unwrap();
        for f in cb.iter() {
            let h = f.hermitian();
            let cap = capacity(&h, f, snr).unwrap();
            assert!((cap - 4.0).abs() < 1e-12, "capacity {cap}");
        }
    }

    #[test]
    fn capacity_dimension_mismatch() {
        let h = ComplexMatrix::zeros(2, 3);
        let f = ComplexMatrix::zeros(4, 2);
        assert!(capacity(&h, &f, Snr::new(1.0).unwrap()).is_err());
    }

    #[test]
    fn snr_rejects_invalid_values() {
        assert!(Snr::new(0.0).is_err());
        assert!(Snr::new(-1.0).is_err());
        assert!(Snr::new(f64::NAN).is_err());
        assert!(Snr::new(1e-6).is_ok());
    }

    #[test]
    fn identity_rotation_matches_plain_capacity() {
        let mut rng = rng::stream(5);
        let cb = build_householder_codebook();
        let snr = Snr::new(2.5).unwrap();
        let id = ComplexMatrix::identity(4);
        for _ in 0..50 {
            let h = random_channel(&mut rng);
            for f in cb.iter() {
                let plain = capacity(&h, f, snr).unwrap();
                let rotated = rotated_capacity(&h, f, &id, snr).unwrap();
                assert_eq!(plain, rotated);
            }
        }
    }

    #[test]
    fn rotation_absorbs_into_precoder() {
        let mut rng = rng::stream(6);
        let cb = build_householder_codebook();
        let snr = Snr::new(1.0).unwrap();
        for _ in 0..100 {
            let h = random_channel(&mut rng);
            let u = random_unitary(&mut rng, 4);
            for f in cb.iter() {
                let via_channel = rotated_capacity(&h, f, &u, snr).unwrap();
                let via_precoder = capacity(&h, &u.mul(f).unwrap(), snr).unwrap();
                assert!(
                    (via_channel - via_precoder).abs() < 1e-9,
                    "{via_channel} vs {via_precoder}"
                );
            }
        }
    }

    #[test]
    fn non_unitary_rotation_is_rejected() {
        let h = ComplexMatrix::zeros(2, 4);
        let f = build_householder_codebook().entry(0).clone();
        let u = ComplexMatrix::identity(4).scale(c(1.001, 0.0));
        let err = rotated_capacity(&h, &f, &u, Snr::new(1.0).unwrap());
        assert!(matches!(err, Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn select_pmi_zero_channel_breaks_tie_low() {
        let cb = build_householder_codebook();
        let h = ComplexMatrix::zeros(2, 4);
        let pmi = select_pmi(&h, Snr::new(10.0).unwrap(), &cb).unwrap();
        assert_eq!(pmi.index(), 0);
    }

    #[test]
    fn select_pmi_single_entry_codebook() {
        let cb = build_householder_codebook();
        let single = Codebook::new(vec![cb.entry(3).clone()]).unwrap();
        let mut rng = rng::stream(8);
        for _ in 0..10 {
            let h = random_channel(&mut rng);
            let pmi = select_pmi(&h, Snr::new(10.0).unwrap(), &single).unwrap();
            assert_eq!(pmi.index(), 0);
        }
    }

    #[test]
    fn select_pmi_matches_exhaustive_argmax() {
        let mut rng = rng::stream(7);
        let cb = build_householder_codebook();
        let snr = Snr::new(10.0).unwrap();
        for _ in 0..200 {
            let h = random_channel(&mut rng);
            let selected = select_pmi(&h, snr, &cb).unwrap();
            let mut best = 0usize;
            let mut best_c = f64::NEG_INFINITY;
            for i in 0..cb.len() {
                let cap = capacity(&h, cb.entry(i), snr).unwrap();
                if cap > best_c {
                    best = i;
                    best_c = cap;
                }
            }
            assert_eq!(selected.index(), best);
        }
    }

    #[test]
    fn rotated_selection_matches_rotated_codebook_bruteforce() {
        let mut rng = rng::stream(9);
        let cb = build_householder_codebook();
        let snr = Snr::new(1.0).unwrap();
        for _ in 0..200 {
            let h = random_channel(&mut rng);
            let u = random_unitary(&mut rng, 4);
            let selected = select_pmi_rotated(&h, &u, snr, &cb).unwrap();
            let mut best = 0usize;
            let mut best_c = f64::NEG_INFINITY;
            for i in 0..cb.len() {
                let cap = capacity(&h, &u.mul(cb.entry(i)).unwrap(), snr).unwrap();
                if cap > best_c {
                    best = i;
                    best_c = cap;
                }
            }
            assert_eq!(selected.index(), best);
        }
    }

    #[test]
    fn rotated_selection_with_identity_equals_plain() {
        let mut rng = rng::stream(10);
        let cb = build_householder_codebook();
        let snr = Snr::new(10.0).unwrap();
        let id = ComplexMatrix::identity(4);
        for _ in 0..100 {
            let h = random_channel(&mut rng);
            assert_eq!(
                select_pmi_rotated(&h, &id, snr, &cb).unwrap(),
                select_pmi(&h, snr, &cb).unwrap()
            );
        }
        let zero = ComplexMatrix::zeros(2, 4);
        let u = random_unitary(&mut rng, 4);
        assert_eq!(select_pmi_rotated(&zero, &u, snr, &cb).unwrap().index(), 0);
    }

    #[test]
    fn random_unitary_is_unitary_and_deterministic() {
        for seed in [0u64, 1, 42, 1234] {
            let u = random_unitary(&mut rng::stream(seed), 4);
            assert!(u.unitary_deviation().unwrap() < 1e-9);
            let again = random_unitary(&mut rng::stream(seed), 4);
            for (a, b) in u.entries().iter().zip(again.entries().iter()) {
                assert_eq!(a.re.to_bits(), b.re.to_bits());
                assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
        }
    }

    #[test]
    fn random_unitary_1x1_has_unit_magnitude() {
        let u = random_unitary(&mut rng::stream(3), 1);
        assert!((u.get(0, 0).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn haar_mean_is_near_zero() {
        // Columns of a Haar unitary have zero-mean entries; a crude check
        // that the phase normalization does not bias the distribution.
        let mut rng = rng::stream(77);
        let mut mean = Complex64::new(0.0, 0.0);
        let n = 2000;
        for _ in 0..n {
            mean += random_unitary(&mut rng, 4).get(0, 0);
        }
        mean /= n as f64;
        assert!(mean.norm() < 0.02, "mean {mean}");
    }

    proptest! {
        // det(I + rho A^H A) == det(I + rho A A^H) with A = H F.
        #[test]
        fn determinant_identity(seed in any::<u64>(), rho in 0.01f64..100.0) {
            let mut rng = rng::stream(seed);
            let h = random_channel(&mut rng);
            let cb = build_householder_codebook();
            let snr = Snr::new(rho).unwrap();
            for f in cb.iter() {
                let a = h.mul(f).unwrap();
                let lhs = capacity(&h, f, snr).unwrap();
                let outer = a.mul(&a.hermitian()).unwrap();
                let m = ComplexMatrix::identity(2)
                    .add(&outer.scale(Complex64::new(rho, 0.0)))
                    .unwrap();
                let rhs = m.det2().re.max(1.0).log2();
                prop_assert!((lhs - rhs).abs() < 1e-9, "{} vs {}", lhs, rhs);
            }
        }

        #[test]
        fn capacity_nonnegative_and_monotone_in_snr(seed in any::<u64>()) {
            let mut rng = rng::stream(seed);
            let h = random_channel(&mut rng);
            let f = build_householder_codebook().entry(0).clone();
            let mut last = 0.0f64;
            for rho in [0.01, 0.1, 1.0, 3.0, 10.0, 100.0, 1e4] {
                let cap = capacity(&h, &f, Snr::new(rho).unwrap()).unwrap();
                prop_assert!(cap >= 0.0);
                prop_assert!(cap >= last - 1e-12, "capacity decreased: {} -> {}", last, cap);
                last = cap;
            }
        }

        // A global phase on H cannot move the argmax.
        #[test]
        fn global_phase_argmax_invariance(seed in any::<u64>(), theta in 0.0f64..std::f64::consts::TAU) {
            let mut rng = rng::stream(seed);
            let h = random_channel(&mut rng);
            let rotated = h.scale(Complex64::from_polar(1.0, theta));
            let cb = build_householder_codebook();
            let snr = Snr::new(10.0).unwrap();
            prop_assert_eq!(
                select_pmi(&h, snr, &cb).unwrap(),
                select_pmi(&rotated, snr, &cb).unwrap()
            );
        }
    }
}
