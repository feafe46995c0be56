//! Small dense Hermitian matrices, their spectra, and density matrices.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Maximum tolerated |A - A^H| entry for a matrix to count as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Maximum tolerated |Tr ρ - 1|.
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue a density matrix may have.
pub const PSD_TOL: f64 = 1e-10;
/// Eigenvalues in [-CLAMP_TOL, 0) are treated as round-off and set to zero.
pub const CLAMP_TOL: f64 = 1e-12;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Largest entrywise deviation |A_ij - conj(A_ji)|.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn check_square(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(())
}

fn check_hermitian(m: &CMatrix) -> Result<()> {
    check_square(m)?;
    let dev = hermitian_deviation(m);
    if !(dev <= HERMITIAN_TOL) {
        return Err(Error::NotHermitian(dev));
    }
    Ok(())
}

fn is_diagonal(m: &CMatrix) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == C64::new(0.0, 0.0)))
}

/// Real eigenvalues of a Hermitian matrix, ascending.
///
/// Diagonal input is read off directly; everything else goes through a
/// Householder tridiagonalisation and implicit QR sweep.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    check_hermitian(m)?;
    let mut values: Vec<f64> = if is_diagonal(m) {
        m.diagonal().iter().map(|z| z.re).collect()
    } else {
        let sym = symmetrize(m);
        sym.symmetric_eigenvalues().iter().copied().collect()
    };
    values.sort_by(|a, b| a.total_cmp(b));
    Ok(values)
}

/// Eigenvalues (ascending) and matching orthonormal eigenvectors as columns.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    check_hermitian(m)?;
    let eig = symmetrize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// (A + A^H) / 2
pub fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigenvalues of a density operator: nonnegative, summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    /// Validates and clamps. Values in [-1e-12, 0) become 0; anything more
    /// negative, non-finite, or a sum off by more than 1e-10 is rejected.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let mut values = values;
        let mut sum = 0.0;
        for v in values.iter_mut() {
            if !v.is_finite() {
                return Err(Error::NonFinite("eigenvalue"));
            }
            if *v < -CLAMP_TOL {
                return Err(Error::NegativeEigenvalue(*v));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
            sum += *v;
        }
        if (sum - 1.0).abs() > TRACE_TOL {
            return Err(Error::SpectrumNotNormalized(sum));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A validated density matrix with a text label per basis vector.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
    labels: Vec<String>,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix, labels: Vec<String>) -> Result<Self> {
        check_hermitian(&matrix)?;
        if labels.len() != matrix.nrows() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), got: labels.len() });
        }
        let tr = matrix.trace().re;
        if !((tr - 1.0).abs() <= TRACE_TOL) {
            return Err(Error::TraceNotUnit(tr));
        }
        let matrix = symmetrize(&matrix);
        let values = hermitian_eigenvalues(&matrix)?;
        if let Some(&min) = values.first() {
            if min < -PSD_TOL {
                return Err(Error::NegativeEigenvalue(min));
            }
        }
        Ok(Self { matrix, labels })
    }

    /// Basis labels `|0⟩, |1⟩, ...`.
    pub fn numbered_labels(dim: usize) -> Vec<String> {
        (0..dim).map(|i| format!("|{i}⟩")).collect()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.matrix[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        Spectrum::new(hermitian_eigenvalues(&self.matrix)?)
    }

    /// von Neumann entropy in bits.
    pub fn entropy(&self) -> Result<f64> {
        Ok(crate::entropy::von_neumann_entropy(&self.spectrum()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        let a = CMatrix::from_fn(n, n, |_, _| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        symmetrize(&a)
    }

    /// Roots of det(λI - A) for 3x3 Hermitian A, by the trigonometric cubic formula.
    fn cubic_roots(a: &CMatrix) -> Vec<f64> {
        let tr = a.trace().re;
        let minors = (a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)] + a[(0, 0)] * a[(2, 2)] - a[(0, 2)] * a[(2, 0)]
            + a[(1, 1)] * a[(2, 2)]
            - a[(1, 2)] * a[(2, 1)])
            .re;
        let det = (a[(0, 0)] * (a[(1, 1)] * a[(2, 2)] - a[(1, 2)] * a[(2, 1)])
            - a[(0, 1)] * (a[(1, 0)] * a[(2, 2)] - a[(1, 2)] * a[(2, 0)])
            + a[(0, 2)] * (a[(1, 0)] * a[(2, 1)] - a[(1, 1)] * a[(2, 0)]))
            .re;
        // λ³ - tr λ² + minors λ - det = 0, shift λ = x + tr/3
        let shift = tr / 3.0;
        let p = minors - tr * tr / 3.0;
        let q = -2.0 * tr.powi(3) / 27.0 + tr * minors / 3.0 - det;
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        let mut roots: Vec<f64> = (0..3).map(|k| shift + m * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos()).collect();
        roots.sort_by(|a, b| a.total_cmp(b));
        roots
    }

    #[test]
    fn half_identity_spectrum() {
        let m = CMatrix::identity(2, 2).scale(0.5);
        assert_eq!(hermitian_eigenvalues(&m).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn diagonal_is_exact() {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c64(0.75, 0.0), c64(0.25, 0.0)]));
        assert_eq!(hermitian_eigenvalues(&m).unwrap(), vec![0.25, 0.75]);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::identity(2, 2);
        m[(0, 1)] = c64(0.0, 1.0);
        assert!(matches!(hermitian_eigenvalues(&m), Err(Error::NotHermitian(_))));
        assert!(matches!(hermitian_eigenvalues(&CMatrix::zeros(2, 3)), Err(Error::NotSquare { rows: 2, cols: 3 })));
    }

    #[test]
    fn random_3x3_matches_cubic_roots() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let a = random_hermitian(&mut rng, 3);
            let got = hermitian_eigenvalues(&a).unwrap();
            let want = cubic_roots(&a);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-10, "{got:?} vs {want:?}");
            }
        }
    }

    #[test]
    fn eigenvectors_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..=6 {
            let a = random_hermitian(&mut rng, n);
            let (vals, vecs) = hermitian_eigen(&a).unwrap();
            let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, vals.iter().map(|&v| c64(v, 0.0))));
            let back = &vecs * d * vecs.adjoint();
            assert!((back - &a).norm() < 1e-12);
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn unitary_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..=6 {
            let h = random_hermitian(&mut rng, n);
            let (_, u) = hermitian_eigen(&h).unwrap();
            // random density matrix: G G^H / tr
            let g = CMatrix::from_fn(n, n, |_, _| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let mut rho = &g * g.adjoint();
            let tr = rho.trace();
            rho /= tr;
            let rotated = &u * &rho * u.adjoint();
            let a = hermitian_eigenvalues(&symmetrize(&rho)).unwrap();
            let b = hermitian_eigenvalues(&symmetrize(&rotated)).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn spectrum_clamps_round_off_only() {
        let s = Spectrum::new(vec![-5e-13, 1.0]).unwrap();
        assert_eq!(s.values(), &[0.0, 1.0]);
        assert!(matches!(Spectrum::new(vec![-1e-9, 1.0]), Err(Error::NegativeEigenvalue(_))));
        assert!(matches!(Spectrum::new(vec![0.5, 0.6]), Err(Error::SpectrumNotNormalized(_))));
        assert!(Spectrum::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        let labels = DensityMatrix::numbered_labels(2);
        let ok = CMatrix::identity(2, 2).scale(0.5);
        assert!(DensityMatrix::new(ok, labels.clone()).is_ok());
        let bad_trace = CMatrix::identity(2, 2);
        assert!(matches!(DensityMatrix::new(bad_trace, labels.clone()), Err(Error::TraceNotUnit(_))));
        let mut not_psd = CMatrix::zeros(2, 2);
        not_psd[(0, 0)] = c64(1.5, 0.0);
        not_psd[(1, 1)] = c64(-0.5, 0.0);
        assert!(matches!(DensityMatrix::new(not_psd, labels.clone()), Err(Error::NegativeEigenvalue(_))));
        assert!(DensityMatrix::new(CMatrix::identity(2, 2).scale(0.5), vec!["a".into()]).is_err());
    }
}
