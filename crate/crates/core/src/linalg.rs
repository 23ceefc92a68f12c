//! Dense complex Hermitian linear algebra sized for few-qubit problems.
//!
//! Everything here works on `ndarray` matrices of `Complex<f64>` with the
//! dimension capped at [`MAX_DIM`]. The eigensolver is a cyclic complex
//! Jacobi iteration: at these sizes it is fast, it needs no external BLAS,
//! and it is bitwise deterministic across runs, which the reproducibility
//! tests rely on.

use ndarray::{Array1, Array2, ArrayView2};
use num_complex::Complex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::functional::EntropicFunctional;
use crate::{Error, Result};

pub type C64 = Complex<f64>;

/// Largest supported matrix dimension (six qubits).
pub const MAX_DIM: usize = 64;

/// Acceptable deviation from exact Hermitian symmetry on input.
const HERMITICITY_TOL: f64 = 1e-12;
/// Eigenvalues above this floor count as zero after clamping.
const EIGENVALUE_CLAMP: f64 = 1e-12;
/// Eigenvalues below minus this are a hard PSD violation.
const PSD_FLOOR: f64 = 1e-10;
/// Allowed trace deviation for a density operator.
const TRACE_TOL: f64 = 1e-10;
/// Allowed deviation from orthonormality for dephasing bases.
const ORTHONORMAL_TOL: f64 = 1e-10;
/// Jacobi stops once the off-diagonal norm falls below this times the
/// Frobenius norm.
const JACOBI_RELATIVE_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 60;

/// Conjugate transpose.
pub fn adjoint(a: &ArrayView2<'_, C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// `Tr(a b)` without forming the product matrix.
pub fn trace_product(a: &ArrayView2<'_, C64>, b: &ArrayView2<'_, C64>) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += a[[i, k]] * b[[k, i]];
        }
    }
    acc
}

fn max_asymmetry(a: &Array2<C64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let dev = (a[[i, j]] - a[[j, i]].conj()).norm();
            worst = worst.max(dev);
        }
    }
    worst
}

fn check_square(a: &Array2<C64>) -> Result<usize> {
    let (rows, cols) = a.dim();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    if rows == 0 {
        return Err(Error::InvalidParameter("matrix is empty".into()));
    }
    if rows > MAX_DIM {
        return Err(Error::DimensionTooLarge {
            dim: rows,
            max: MAX_DIM,
        });
    }
    Ok(rows)
}

/// A square matrix vetted and symmetrized to be exactly Hermitian.
#[derive(Clone, Debug)]
pub struct HermitianMatrix {
    data: Array2<C64>,
}

impl HermitianMatrix {
    /// Accepts matrices within [`HERMITICITY_TOL`] of Hermitian symmetry and
    /// replaces them by `(A + A^dag)/2` so later algebra sees exact symmetry.
    pub fn new(a: Array2<C64>) -> Result<Self> {
        let n = check_square(&a)?;
        let asym = max_asymmetry(&a);
        if asym > HERMITICITY_TOL {
            return Err(Error::NotHermitian { max_asym: asym });
        }
        let mut data = a;
        for i in 0..n {
            data[[i, i]] = C64::new(data[[i, i]].re, 0.0);
            for j in i + 1..n {
                let avg = 0.5 * (data[[i, j]] + data[[j, i]].conj());
                data[[i, j]] = avg;
                data[[j, i]] = avg.conj();
            }
        }
        Ok(Self { data })
    }

    /// Real linear combination `sum_i c_i A_i`; stays Hermitian by construction.
    pub fn linear_combination(coeffs: &[f64], mats: &[HermitianMatrix]) -> Result<Self> {
        if coeffs.len() != mats.len() || mats.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "need matching nonempty coefficients and matrices, got {} and {}",
                coeffs.len(),
                mats.len()
            )));
        }
        let n = mats[0].dim();
        let mut acc = Array2::<C64>::zeros((n, n));
        for (c, m) in coeffs.iter().zip(mats) {
            if m.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: m.dim(),
                });
            }
            acc.scaled_add(C64::new(*c, 0.0), &m.data);
        }
        Ok(Self { data: acc })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.data
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.data
    }

    pub fn trace(&self) -> f64 {
        self.data.diag().iter().map(|z| z.re).sum()
    }

    /// Spectral decomposition; eigenvalues descending, eigenvector `j` in
    /// column `j` of the returned matrix.
    pub fn eigh(&self) -> Result<(Array1<f64>, Array2<C64>)> {
        jacobi_eigh(&self.data)
    }
}

fn off_norm(a: &Array2<C64>) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[[i, j]].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

fn jacobi_eigh(a: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = Array2::<C64>::eye(n);
    let frob = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let threshold = JACOBI_RELATIVE_TOL * frob.max(f64::MIN_POSITIVE);

    let mut converged = n < 2;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_norm(&m) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[[p, q]];
                let absa = apq.norm();
                if absa <= f64::MIN_POSITIVE {
                    continue;
                }
                let phase = apq / absa; // e^{i phi}
                let tau = (m[[q, q]].re - m[[p, p]].re) / (2.0 * absa);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let sp = s * phase; // s e^{i phi}
                // column rotation: A <- A G, V <- V G
                for i in 0..n {
                    let aip = m[[i, p]];
                    let aiq = m[[i, q]];
                    m[[i, p]] = c * aip - sp.conj() * aiq;
                    m[[i, q]] = sp * aip + c * aiq;
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = c * vip - sp.conj() * viq;
                    v[[i, q]] = sp * vip + c * viq;
                }
                // row rotation: A <- G^dag A
                for j in 0..n {
                    let apj = m[[p, j]];
                    let aqj = m[[q, j]];
                    m[[p, j]] = c * apj - sp * aqj;
                    m[[q, j]] = sp.conj() * apj + c * aqj;
                }
                m[[p, q]] = C64::new(0.0, 0.0);
                m[[q, p]] = C64::new(0.0, 0.0);
                m[[p, p]] = C64::new(m[[p, p]].re, 0.0);
                m[[q, q]] = C64::new(m[[q, q]].re, 0.0);
            }
        }
    }
    if !converged && off_norm(&m) > threshold {
        return Err(Error::EighNoConvergence { off: off_norm(&m) });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[[i, i]].re).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap());
    let eigenvalues = Array1::from_iter(order.iter().map(|&i| diag[i]));
    let mut vectors = Array2::<C64>::zeros((n, n));
    for (new_col, &old_col) in order.iter().enumerate() {
        for i in 0..n {
            vectors[[i, new_col]] = v[[i, old_col]];
        }
    }
    Ok((eigenvalues, vectors))
}

/// A unit-trace positive semidefinite operator with its spectral
/// decomposition cached.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    matrix: Array2<C64>,
    eigenvalues: Array1<f64>,
    eigenvectors: Array2<C64>,
}

impl DensityOperator {
    /// Validates hermiticity, positivity (eigenvalues no lower than
    /// `-1e-10`, then clamped to zero below `1e-12`), and unit trace.
    pub fn from_matrix(a: Array2<C64>) -> Result<Self> {
        let h = HermitianMatrix::new(a)?;
        let trace = h.trace();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::TraceNotOne { trace });
        }
        let (mut eigenvalues, eigenvectors) = h.eigh()?;
        for p in eigenvalues.iter_mut() {
            if *p < -PSD_FLOOR {
                return Err(Error::NegativeEigenvalue { value: *p });
            }
            if *p < EIGENVALUE_CLAMP {
                *p = 0.0;
            }
        }
        Ok(Self {
            matrix: h.into_matrix(),
            eigenvalues,
            eigenvectors,
        })
    }

    /// Assembles `V diag(p) V^dag` from a spectrum and an orthonormal basis.
    /// Used where the decomposition is already known, e.g. by the solver.
    pub fn from_spectrum(spectrum: Array1<f64>, basis: Array2<C64>) -> Result<Self> {
        Self::assemble(spectrum, basis, true)
    }

    /// Same assembly without the unit-trace requirement. Field inversion
    /// yields sub- or super-normalized spectra by design (normalization is
    /// fixed by the multiplier on the identity, not here).
    pub(crate) fn from_spectrum_any_trace(
        spectrum: Array1<f64>,
        basis: Array2<C64>,
    ) -> Result<Self> {
        Self::assemble(spectrum, basis, false)
    }

    fn assemble(spectrum: Array1<f64>, basis: Array2<C64>, unit_trace: bool) -> Result<Self> {
        let n = check_square(&basis)?;
        if spectrum.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: spectrum.len(),
            });
        }
        check_orthonormal(&basis)?;
        let mut spectrum = spectrum;
        for p in spectrum.iter_mut() {
            if *p < -PSD_FLOOR {
                return Err(Error::NegativeEigenvalue { value: *p });
            }
            if *p < EIGENVALUE_CLAMP {
                *p = 0.0;
            }
        }
        let trace: f64 = spectrum.sum();
        if unit_trace && (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::TraceNotOne { trace });
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| spectrum[j].partial_cmp(&spectrum[i]).unwrap());
        let eigenvalues = Array1::from_iter(order.iter().map(|&i| spectrum[i]));
        let mut eigenvectors = Array2::<C64>::zeros((n, n));
        for (new_col, &old_col) in order.iter().enumerate() {
            for i in 0..n {
                eigenvectors[[i, new_col]] = basis[[i, old_col]];
            }
        }
        let mut matrix = Array2::<C64>::zeros((n, n));
        for (col, &p) in order.iter().map(|&i| &spectrum[i]).enumerate() {
            if p == 0.0 {
                continue;
            }
            for i in 0..n {
                for j in 0..n {
                    matrix[[i, j]] +=
                        C64::new(p, 0.0) * eigenvectors[[i, col]] * eigenvectors[[j, col]].conj();
                }
            }
        }
        Ok(Self {
            matrix,
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        let mut a = Array2::<C64>::zeros((dim, dim));
        let p = 1.0 / dim as f64;
        for i in 0..dim {
            a[[i, i]] = C64::new(p, 0.0);
        }
        Self::from_matrix(a)
    }

    /// Projector onto a (not necessarily normalized) state vector.
    pub fn pure(state: &Array1<C64>) -> Result<Self> {
        let norm_sqr: f64 = state.iter().map(|z| z.norm_sqr()).sum();
        if norm_sqr <= 0.0 {
            return Err(Error::InvalidParameter("state vector is zero".into()));
        }
        let n = state.len();
        let mut a = Array2::<C64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                a[[i, j]] = state[i] * state[j].conj() / norm_sqr;
            }
        }
        Self::from_matrix(a)
    }

    /// Normalized Wishart sample `G G^dag / Tr`, with `G` a `dim x rank`
    /// matrix of standard complex Gaussians. Fully determined by the seed.
    pub fn random(dim: usize, rank: usize, seed: u64) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::DimensionTooLarge { dim, max: MAX_DIM });
        }
        if rank == 0 || rank > dim {
            return Err(Error::InvalidParameter(format!(
                "rank must be in 1..={dim}, got {rank}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = Array2::<C64>::zeros((dim, rank));
        for i in 0..dim {
            for j in 0..rank {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                g[[i, j]] = C64::new(re, im);
            }
        }
        let gdag = adjoint(&g.view());
        let mut w = g.dot(&gdag);
        let trace: f64 = w.diag().iter().map(|z| z.re).sum();
        w.mapv_inplace(|z| z / trace);
        Self::from_matrix(w)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    /// Spectrum in descending order, clamped to `[0, 1]` occupations.
    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eigenvalues
    }

    /// Eigenvector `j` in column `j`, aligned with [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &Array2<C64> {
        &self.eigenvectors
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diag().iter().map(|z| z.re).sum()
    }

    pub fn largest_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `S_f = sum_i f(p_i)` over the spectrum.
    pub fn entropy(&self, functional: &EntropicFunctional) -> f64 {
        self.eigenvalues.iter().map(|&p| functional.f(p)).sum()
    }

    /// `<A> = Tr(A rho)`, real for Hermitian `A`.
    pub fn expectation(&self, observable: &HermitianMatrix) -> Result<f64> {
        if observable.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: observable.dim(),
            });
        }
        Ok(trace_product(&observable.matrix().view(), &self.matrix.view()).re)
    }

    /// Projects onto the diagonal of the given orthonormal basis (columns),
    /// i.e. keeps `<b_i|rho|b_i>` and discards coherences.
    pub fn dephase(&self, basis: &Array2<C64>) -> Result<Self> {
        let n = check_square(basis)?;
        if n != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: n,
            });
        }
        check_orthonormal(basis)?;
        let mut diagonal = Array1::<f64>::zeros(n);
        for col in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    acc += basis[[i, col]].conj() * self.matrix[[i, j]] * basis[[j, col]];
                }
            }
            diagonal[col] = acc.re;
        }
        Self::from_spectrum(diagonal, basis.clone())
    }
}

fn check_orthonormal(basis: &Array2<C64>) -> Result<()> {
    let n = basis.nrows();
    let mut max_dev = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            let mut dot = C64::new(0.0, 0.0);
            for i in 0..n {
                dot += basis[[i, a]].conj() * basis[[i, b]];
            }
            let target = if a == b { 1.0 } else { 0.0 };
            max_dev = max_dev.max((dot - target).norm());
        }
    }
    if max_dev > ORTHONORMAL_TOL {
        return Err(Error::BasisNotOrthonormal { max_dev });
    }
    Ok(())
}

/// Parse a matrix from text: one row per line, entries whitespace-separated,
/// each entry either `re` or `re,im`. Blank lines and `#` comments skipped.
pub fn parse_matrix(text: &str) -> Result<Array2<C64>> {
    let mut rows: Vec<Vec<C64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = lineno + 1;
        let mut entries = Vec::new();
        for token in line.split_whitespace() {
            let (re_s, im_s) = match token.split_once(',') {
                Some((r, i)) => (r, Some(i)),
                None => (token, None),
            };
            let re: f64 = re_s.parse().map_err(|_| Error::MatrixParse {
                row,
                detail: format!("bad real part in {token:?}"),
            })?;
            let im: f64 = match im_s {
                Some(s) => s.parse().map_err(|_| Error::MatrixParse {
                    row,
                    detail: format!("bad imaginary part in {token:?}"),
                })?,
                None => 0.0,
            };
            entries.push(C64::new(re, im));
        }
        rows.push(entries);
    }
    if rows.is_empty() {
        return Err(Error::MatrixParse {
            row: 0,
            detail: "no rows found".into(),
        });
    }
    let ncols = rows[0].len();
    for (i, r) in rows.iter().enumerate() {
        if r.len() != ncols {
            return Err(Error::MatrixParse {
                row: i + 1,
                detail: format!("expected {ncols} entries, found {}", r.len()),
            });
        }
    }
    let nrows = rows.len();
    let flat: Vec<C64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((nrows, ncols), flat)
        .map_err(|e| Error::InvalidParameter(e.to_string()))
}

/// Inverse of [`parse_matrix`]: `re,im` entries with shortest round-trip
/// float formatting, one row per line.
pub fn format_matrix(a: &ArrayView2<'_, C64>) -> String {
    let mut out = String::new();
    for row in a.rows() {
        let line: Vec<String> = row.iter().map(|z| format!("{},{}", z.re, z.im)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn reconstruct(eigs: &Array1<f64>, vecs: &Array2<C64>) -> Array2<C64> {
        let n = eigs.len();
        let mut out = Array2::<C64>::zeros((n, n));
        for col in 0..n {
            for i in 0..n {
                for j in 0..n {
                    out[[i, j]] += c(eigs[col], 0.0) * vecs[[i, col]] * vecs[[j, col]].conj();
                }
            }
        }
        out
    }

    #[test]
    fn eigh_two_by_two_pauli_y() {
        let h = HermitianMatrix::new(array![
            [c(0.0, 0.0), c(0.0, 1.0)],
            [c(0.0, -1.0), c(0.0, 0.0)]
        ])
        .unwrap();
        let (eigs, vecs) = h.eigh().unwrap();
        assert!((eigs[0] - 1.0).abs() < 1e-14);
        assert!((eigs[1] + 1.0).abs() < 1e-14);
        let rec = reconstruct(&eigs, &vecs);
        for i in 0..2 {
            for j in 0..2 {
                assert!((rec[[i, j]] - h.matrix()[[i, j]]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn eigh_matches_reference_decomposition() {
        // 4x4 case with known spectrum, checked against an independent solver
        let h = HermitianMatrix::new(array![
            [c(2.0, 0.0), c(1.0, -1.0), c(0.5, 0.25), c(0.0, 0.0)],
            [c(1.0, 1.0), c(-1.0, 0.0), c(0.0, -2.0), c(0.75, 0.0)],
            [c(0.5, -0.25), c(0.0, 2.0), c(0.5, 0.0), c(-0.5, 0.5)],
            [c(0.0, 0.0), c(0.75, 0.0), c(-0.5, -0.5), c(1.0, 0.0)]
        ])
        .unwrap();
        let (eigs, vecs) = h.eigh().unwrap();
        let expected = [
            2.8024387053694837,
            2.159_656_631_595_046,
            0.41990112116920764,
            -2.8819964581337354,
        ];
        for (got, want) in eigs.iter().zip(expected) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
        // columns orthonormal
        assert!(check_orthonormal(&vecs).is_ok());
        let rec = reconstruct(&eigs, &vecs);
        for i in 0..4 {
            for j in 0..4 {
                assert!((rec[[i, j]] - h.matrix()[[i, j]]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn eigh_sorts_descending_with_degeneracy() {
        let mut a = Array2::<C64>::zeros((5, 5));
        for (i, v) in [0.1, 0.5, 0.5, -0.2, 0.9].iter().enumerate() {
            a[[i, i]] = c(*v, 0.0);
        }
        let (eigs, _) = HermitianMatrix::new(a).unwrap().eigh().unwrap();
        let sorted: Vec<f64> = eigs.to_vec();
        assert_eq!(sorted, vec![0.9, 0.5, 0.5, 0.1, -0.2]);
    }

    #[test]
    fn rejects_non_hermitian_and_non_square() {
        let bad = array![[c(0.0, 0.0), c(1.0, 0.0)], [c(0.5, 0.0), c(0.0, 0.0)]];
        assert!(matches!(
            HermitianMatrix::new(bad),
            Err(Error::NotHermitian { .. })
        ));
        let rect = Array2::<C64>::zeros((2, 3));
        assert!(matches!(
            HermitianMatrix::new(rect),
            Err(Error::NotSquare { rows: 2, cols: 3 })
        ));
        let big = Array2::<C64>::eye(MAX_DIM + 1);
        assert!(matches!(
            HermitianMatrix::new(big),
            Err(Error::DimensionTooLarge { .. })
        ));
    }

    #[test]
    fn symmetrizes_small_asymmetry() {
        let eps = 5e-13;
        let a = array![
            [c(1.0, eps), c(0.3, 0.1)],
            [c(0.3, -0.1 + eps), c(-1.0, 0.0)]
        ];
        let h = HermitianMatrix::new(a).unwrap();
        assert_eq!(max_asymmetry(h.matrix()), 0.0);
        assert_eq!(h.matrix()[[0, 0]].im, 0.0);
    }

    #[test]
    fn density_from_matrix_validates() {
        let rho = DensityOperator::from_matrix(array![
            [c(0.5, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.5, 0.0)]
        ])
        .unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-15);
        let f = EntropicFunctional::shannon(1.0).unwrap();
        assert!((rho.entropy(&f) - std::f64::consts::LN_2).abs() < 1e-14);

        let neg = array![[c(1.5, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-0.5, 0.0)]];
        assert!(matches!(
            DensityOperator::from_matrix(neg),
            Err(Error::NegativeEigenvalue { .. })
        ));

        let off_trace = array![[c(0.6, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.6, 0.0)]];
        assert!(matches!(
            DensityOperator::from_matrix(off_trace),
            Err(Error::TraceNotOne { .. })
        ));
    }

    #[test]
    fn pure_state_spectrum() {
        let psi = Array1::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]);
        let rho = DensityOperator::pure(&psi).unwrap();
        assert!((rho.largest_eigenvalue() - 1.0).abs() < 1e-12);
        assert!(rho.eigenvalues()[1].abs() < 1e-12);
        let f = EntropicFunctional::shannon(1.0).unwrap();
        assert!(rho.entropy(&f).abs() < 1e-12);
    }

    #[test]
    fn random_density_is_deterministic_per_seed() {
        let a = DensityOperator::random(4, 4, 7).unwrap();
        let b = DensityOperator::random(4, 4, 7).unwrap();
        let c_ = DensityOperator::random(4, 4, 8).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        assert_ne!(a.matrix(), c_.matrix());
        assert!((a.trace() - 1.0).abs() < 1e-12);
        assert!(a.eigenvalues().iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn random_density_rank_controls_zeros() {
        let rho = DensityOperator::random(6, 2, 3).unwrap();
        let eigs = rho.eigenvalues();
        assert!(eigs[0] > 0.0 && eigs[1] > 0.0);
        for i in 2..6 {
            assert!(eigs[i].abs() < 1e-10, "eig {i} = {}", eigs[i]);
        }
        assert!(DensityOperator::random(4, 0, 1).is_err());
        assert!(DensityOperator::random(4, 5, 1).is_err());
    }

    #[test]
    fn dephasing_in_eigenbasis_is_identity() {
        let rho = DensityOperator::random(4, 4, 11).unwrap();
        let dephased = rho.dephase(&rho.eigenvectors().clone()).unwrap();
        for (a, b) in rho.matrix().iter().zip(dephased.matrix()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn dephasing_never_lowers_entropy() {
        let f = EntropicFunctional::tsallis(2.0, 1.0).unwrap();
        let basis = Array2::<C64>::eye(4);
        for seed in 0..20 {
            let rho = DensityOperator::random(4, 4, seed).unwrap();
            let dephased = rho.dephase(&basis).unwrap();
            assert!(
                dephased.entropy(&f) >= rho.entropy(&f) - 1e-12,
                "seed {seed}"
            );
        }
    }

    #[test]
    fn dephase_rejects_skewed_basis() {
        let rho = DensityOperator::maximally_mixed(2).unwrap();
        let skew = array![[c(1.0, 0.0), c(0.5, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
        assert!(matches!(
            rho.dephase(&skew),
            Err(Error::BasisNotOrthonormal { .. })
        ));
    }

    #[test]
    fn expectation_of_projector_is_population() {
        let rho = DensityOperator::from_matrix(array![
            [c(0.7, 0.0), c(0.1, 0.2)],
            [c(0.1, -0.2), c(0.3, 0.0)]
        ])
        .unwrap();
        let proj = HermitianMatrix::new(array![
            [c(1.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0)]
        ])
        .unwrap();
        assert!((rho.expectation(&proj).unwrap() - 0.7).abs() < 1e-14);
    }

    #[test]
    fn from_spectrum_round_trips_through_from_matrix() {
        let rho = DensityOperator::random(3, 3, 21).unwrap();
        let rebuilt = DensityOperator::from_spectrum(
            rho.eigenvalues().clone(),
            rho.eigenvectors().clone(),
        )
        .unwrap();
        for (a, b) in rho.matrix().iter().zip(rebuilt.matrix()) {
            assert!((a - b).norm() < 1e-11);
        }
    }

    #[test]
    fn parse_and_format_round_trip() {
        let text = "0.5,0 0.1,0.2\n0.1,-0.2 0.5,0\n";
        let m = parse_matrix(text).unwrap();
        assert_eq!(m[[0, 1]], c(0.1, 0.2));
        let formatted = format_matrix(&m.view());
        let reparsed = parse_matrix(&formatted).unwrap();
        assert_eq!(m, reparsed);
    }

    #[test]
    fn parse_accepts_bare_reals_and_comments() {
        let text = "# a comment\n1 0\n\n0 1\n";
        let m = parse_matrix(text).unwrap();
        assert_eq!(m[[0, 0]], c(1.0, 0.0));
        assert_eq!(m.dim(), (2, 2));
    }

    #[test]
    fn parse_reports_offending_row() {
        let err = parse_matrix("1 0\n0 oops\n").unwrap_err();
        match err {
            Error::MatrixParse { row, detail } => {
                assert_eq!(row, 2);
                assert!(detail.contains("oops"));
            }
            other => panic!("unexpected error {other:?}"),
        }
        let ragged = parse_matrix("1 0\n0\n").unwrap_err();
        assert!(matches!(ragged, Error::MatrixParse { row: 2, .. }));
    }
}
