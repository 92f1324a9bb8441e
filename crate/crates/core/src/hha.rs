//! Hyperhermitian matrix algebra over the quaternions.
//!
//! A square quaternionic matrix X is hyperhermitian when x_{jk} =
//! conj(x_{kj}); its real embedding X^R (blockwise left-multiplication
//! matrices) is then symmetric, and every eigenvalue of X^R occurs with
//! multiplicity four ("eigenvalue quadrupling"). The n distinct values
//! are the quaternionic eigenvalues of X, and the Moore determinant is
//! their product. `moore_det` takes this eigendecomposition route; an
//! independent Schur-complement recursion (`moore_det_oracle`) is kept
//! for cross-checking on small n.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::CoreError;
use crate::quaternion::{left_mult_matrix, Quaternion};

/// Relative tolerance accepted when validating hyperhermitian symmetry.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Relative spread allowed inside one eigenvalue quadruple.
pub const QUADRUPLE_SPREAD_TOL: f64 = 1e-8;
/// Pivot threshold of the Schur-complement recursion.
const ORACLE_PIVOT_TOL: f64 = 1e-12;
/// Diagonal perturbation used when every pivot vanishes.
const ORACLE_EPSILON: f64 = 1e-8;

/// Dense quaternionic matrix, row-major. Used for products, adjoints
/// and as the unconstrained companion of [`HyperhermitianMatrix`].
#[derive(Clone, Debug, PartialEq)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Quaternion>,
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMatrix { rows, cols, data: vec![Quaternion::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = QMatrix::zeros(n, n);
        for j in 0..n {
            m.set(j, j, Quaternion::ONE);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Quaternion) -> Self {
        let mut m = QMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, f(r, c));
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Quaternion {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, q: Quaternion) {
        self.data[r * self.cols + c] = q;
    }

    pub fn mul(&self, other: &QMatrix) -> QMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in quaternionic product");
        let mut out = QMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for c in 0..other.cols {
                let mut acc = Quaternion::ZERO;
                for k in 0..self.cols {
                    acc = acc + self.get(r, k) * other.get(k, c);
                }
                out.set(r, c, acc);
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> QMatrix {
        QMatrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    pub fn scale(&self, c: f64) -> QMatrix {
        QMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|q| q.scale(c)).collect(),
        }
    }
}

/// Square quaternionic matrix with x_{jk} = conj(x_{kj}) enforced
/// exactly on construction (diagonal entries real).
#[derive(Clone, Debug, PartialEq)]
pub struct HyperhermitianMatrix {
    n: usize,
    data: Vec<Quaternion>,
}

impl HyperhermitianMatrix {
    /// Validates approximate hyperhermitian symmetry (tolerance
    /// `HERMITIAN_TOL` relative to the largest entry) and stores the
    /// exactly symmetrized matrix.
    pub fn new(n: usize, entries: Vec<Quaternion>) -> Result<Self, CoreError> {
        if entries.len() != n * n {
            return Err(CoreError::InvalidInput(format!(
                "expected {} entries for a {n} x {n} matrix, got {}",
                n * n,
                entries.len()
            )));
        }
        let scale = entries.iter().map(|q| q.norm()).fold(0.0f64, f64::max);
        let tol = HERMITIAN_TOL * (1.0 + scale);
        let mut data = entries;
        for j in 0..n {
            let d = data[j * n + j];
            if d.imag_norm() > tol {
                return Err(CoreError::NotHyperhermitian(format!(
                    "diagonal entry ({j},{j}) = {d} has imaginary part {:.3e}",
                    d.imag_norm()
                )));
            }
            data[j * n + j] = Quaternion::from_real(d.re());
            for k in (j + 1)..n {
                let upper = data[j * n + k];
                let lower = data[k * n + j];
                let dev = (upper - lower.conj()).norm();
                if dev > tol {
                    return Err(CoreError::NotHyperhermitian(format!(
                        "entries ({j},{k}) and ({k},{j}) differ from conjugates by {dev:.3e}"
                    )));
                }
                let sym = (upper + lower.conj()).scale(0.5);
                data[j * n + k] = sym;
                data[k * n + j] = sym.conj();
            }
        }
        Ok(HyperhermitianMatrix { n, data })
    }

    pub fn from_qmatrix(m: &QMatrix) -> Result<Self, CoreError> {
        if m.rows() != m.cols() {
            return Err(CoreError::InvalidInput("matrix is not square".into()));
        }
        HyperhermitianMatrix::new(m.rows(), m.clone().data)
    }

    pub fn identity(n: usize) -> Self {
        HyperhermitianMatrix::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut data = vec![Quaternion::ZERO; n * n];
        for j in 0..n {
            data[j * n + j] = Quaternion::from_real(d[j]);
        }
        HyperhermitianMatrix { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize, k: usize) -> Quaternion {
        self.data[j * self.n + k]
    }

    pub fn to_qmatrix(&self) -> QMatrix {
        QMatrix { rows: self.n, cols: self.n, data: self.data.clone() }
    }

    /// Entrywise transpose (equivalently entrywise conjugate); again
    /// hyperhermitian. Transposition is not an anti-homomorphism over
    /// the quaternions and can change the Moore determinant for
    /// n >= 3.
    pub fn transpose(&self) -> HyperhermitianMatrix {
        let n = self.n;
        let mut data = vec![Quaternion::ZERO; n * n];
        for j in 0..n {
            for k in 0..n {
                data[k * n + j] = self.data[j * n + k];
            }
        }
        HyperhermitianMatrix { n, data }
    }

    pub fn scale(&self, c: f64) -> HyperhermitianMatrix {
        HyperhermitianMatrix {
            n: self.n,
            data: self.data.iter().map(|q| q.scale(c)).collect(),
        }
    }

    pub fn add(&self, other: &HyperhermitianMatrix) -> HyperhermitianMatrix {
        assert_eq!(self.n, other.n, "dimension mismatch");
        HyperhermitianMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise distance to `other`; handy for deduplication.
    pub fn max_entry_dist(&self, other: &HyperhermitianMatrix) -> f64 {
        assert_eq!(self.n, other.n, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Real embedding: the symmetric 4n x 4n matrix whose (j,k) block
    /// is the left-multiplication matrix of entry (j,k). It represents
    /// the action of X on real coordinates: (Xq)^R = X^R q^R.
    pub fn real_embed(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut out = DMatrix::<f64>::zeros(4 * n, 4 * n);
        for j in 0..n {
            for k in 0..n {
                let block = left_mult_matrix(self.get(j, k));
                for r in 0..4 {
                    for c in 0..4 {
                        out[(4 * j + r, 4 * k + c)] = block[(r, c)];
                    }
                }
            }
        }
        out
    }
}

/// Quaternionic eigenvalues, ascending. For hyperhermitian matrices
/// they are real and `values().len() == n`.
#[derive(Clone, Debug)]
pub struct QEigenSpectrum {
    values: Vec<f64>,
}

impl QEigenSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn product(&self) -> f64 {
        self.values.iter().product()
    }
}

pub(crate) fn symmetric_eigen(m: &DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    // guard against last-ulp asymmetry before handing to the solver
    let sym = (m + m.transpose()).scale(0.5);
    SymmetricEigen::new(sym)
}

fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let eig = symmetric_eigen(m);
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals
}

/// Group the 4n sorted eigenvalues of X^R into n quadruples and return
/// their means. Fails when a quadruple's spread exceeds
/// `QUADRUPLE_SPREAD_TOL * (1 + |X|_F)`, which signals that the sorted
/// positions no longer align with the multiplicity-four structure.
pub fn q_eigenvalues(x: &HyperhermitianMatrix) -> Result<QEigenSpectrum, CoreError> {
    let vals = sorted_eigenvalues(&x.real_embed());
    group_quadruples(&vals, QUADRUPLE_SPREAD_TOL * (1.0 + x.fro_norm()))
}

/// Quadruple-grouping step, exposed for direct testing.
pub fn group_quadruples(sorted: &[f64], spread_tol: f64) -> Result<QEigenSpectrum, CoreError> {
    if sorted.len() % 4 != 0 {
        return Err(CoreError::EigenGrouping(format!(
            "eigenvalue count {} is not a multiple of four",
            sorted.len()
        )));
    }
    let mut values = Vec::with_capacity(sorted.len() / 4);
    for chunk in sorted.chunks_exact(4) {
        let spread = chunk[3] - chunk[0];
        if spread > spread_tol {
            return Err(CoreError::EigenGrouping(format!(
                "quadruple {chunk:?} has spread {spread:.3e} > {spread_tol:.3e}"
            )));
        }
        values.push(chunk.iter().sum::<f64>() / 4.0);
    }
    Ok(QEigenSpectrum { values })
}

/// Smallest quaternionic eigenvalue; needs no quadruple grouping since
/// it coincides with the smallest eigenvalue of the real embedding.
pub fn min_q_eigenvalue(x: &HyperhermitianMatrix) -> f64 {
    sorted_eigenvalues(&x.real_embed())[0]
}

/// Positive semidefiniteness up to `tol` (all quaternionic eigenvalues
/// >= -tol).
pub fn is_psd(x: &HyperhermitianMatrix, tol: f64) -> bool {
    min_q_eigenvalue(x) >= -tol
}

/// Moore determinant via the eigenvalue-quadrupling path. If grouping
/// fails (numerical degeneracy) and n <= 4, falls back to the
/// Schur-complement oracle; otherwise the grouping error propagates.
pub fn moore_det(x: &HyperhermitianMatrix) -> Result<f64, CoreError> {
    match q_eigenvalues(x) {
        Ok(spec) => Ok(spec.product()),
        Err(CoreError::EigenGrouping(msg)) => {
            if x.n() <= 4 {
                moore_det_oracle(x)
            } else {
                Err(CoreError::EigenGrouping(msg))
            }
        }
        Err(e) => Err(e),
    }
}

/// Independent Moore determinant for n <= 4: recursive Schur
/// complement det A = a_pp * det(A / a_pp) on the largest available
/// real diagonal pivot. When every diagonal entry (all real) is below
/// the pivot threshold, the matrix is shifted by eps * Id for two
/// values of eps and the results are extrapolated back to eps = 0.
pub fn moore_det_oracle(x: &HyperhermitianMatrix) -> Result<f64, CoreError> {
    if x.n() > 4 {
        return Err(CoreError::OracleDimension(x.n()));
    }
    let mut data = x.to_qmatrix().data;
    Ok(schur_det(&mut data, x.n()))
}

fn schur_det(m: &mut [Quaternion], n: usize) -> f64 {
    if n == 1 {
        return m[0].re();
    }
    let mut p = 0usize;
    for j in 1..n {
        if m[j * n + j].re().abs() > m[p * n + p].re().abs() {
            p = j;
        }
    }
    if m[p * n + p].re().abs() < ORACLE_PIVOT_TOL {
        // zero diagonal: det(X + eps Id) is polynomial in eps with the
        // target as constant term; 2 f(eps) - f(2 eps) removes the
        // linear term and leaves an O(eps^2) error.
        let shifted = |e: f64| {
            let mut c = m.to_vec();
            for j in 0..n {
                c[j * n + j] = c[j * n + j] + Quaternion::from_real(e);
            }
            schur_det(&mut c, n)
        };
        return 2.0 * shifted(ORACLE_EPSILON) - shifted(2.0 * ORACLE_EPSILON);
    }
    if p != 0 {
        // symmetric permutation: swap rows then columns, det preserved
        for c in 0..n {
            m.swap(c, p * n + c);
        }
        for r in 0..n {
            m.swap(r * n, r * n + p);
        }
    }
    let a = m[0].re();
    let sub = n - 1;
    let mut s = vec![Quaternion::ZERO; sub * sub];
    for j in 1..n {
        for k in 1..n {
            let corr = (m[j * n] * m[k]).scale(1.0 / a);
            s[(j - 1) * sub + (k - 1)] = m[j * n + k] - corr;
        }
    }
    a * schur_det(&mut s, sub)
}

/// Re Tr(a b) for quaternionic matrices; symmetric in its arguments.
pub fn re_trace_product(a: &HyperhermitianMatrix, b: &HyperhermitianMatrix) -> f64 {
    assert_eq!(a.n(), b.n(), "dimension mismatch");
    let n = a.n();
    let mut acc = 0.0;
    for k in 0..n {
        for j in 0..n {
            let p = a.get(k, j);
            let q = b.get(j, k);
            // real part of the product, without forming it fully
            acc += p.x0 * q.x0 - p.x1 * q.x1 - p.x2 * q.x2 - p.x3 * q.x3;
        }
    }
    acc
}

/// Re Tr(a) (the diagonal is real for hyperhermitian matrices).
pub fn re_trace(a: &HyperhermitianMatrix) -> f64 {
    (0..a.n()).map(|j| a.get(j, j).re()).sum()
}

/// Inverse of a positive definite hyperhermitian matrix, computed in
/// the real embedding and projected back.
pub fn inverse(x: &HyperhermitianMatrix) -> Result<HyperhermitianMatrix, CoreError> {
    let emb = x.real_embed();
    let eig = symmetric_eigen(&emb);
    let tol = 1e-12 * (1.0 + x.fro_norm());
    if eig.eigenvalues.iter().any(|l| l.abs() <= tol) {
        return Err(CoreError::Singular(
            "real embedding has an eigenvalue at numerical zero".into(),
        ));
    }
    let inv_vals = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l));
    let inv = &eig.eigenvectors * inv_vals * eig.eigenvectors.transpose();
    unembed(&inv, x.n())
}

/// Read a quaternionic matrix back off its real embedding (first
/// column of each 4 x 4 block) and symmetrize.
pub fn unembed(m: &DMatrix<f64>, n: usize) -> Result<HyperhermitianMatrix, CoreError> {
    assert_eq!(m.nrows(), 4 * n);
    assert_eq!(m.ncols(), 4 * n);
    let mut entries = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            entries.push(Quaternion::new(
                m[(4 * j, 4 * k)],
                m[(4 * j + 1, 4 * k)],
                m[(4 * j + 2, 4 * k)],
                m[(4 * j + 3, 4 * k)],
            ));
        }
    }
    HyperhermitianMatrix::new(n, entries)
}

/// Value and minimizer of the trace-infimum representation
///
///   (det X)^{1/n} = (1/n) inf { Re Tr(a X) : a > 0, det a >= 1 }
///
/// for positive definite X. The infimum is attained at
/// a* = (det X)^{1/n} X^{-1}, which satisfies det a* = 1.
pub fn inf_trace_value(
    x: &HyperhermitianMatrix,
) -> Result<(f64, HyperhermitianMatrix), CoreError> {
    let spec = q_eigenvalues(x)?;
    let tol = 1e-12 * (1.0 + x.fro_norm());
    if spec.min() <= tol {
        return Err(CoreError::NotPositiveDefinite(format!(
            "smallest quaternionic eigenvalue {:.3e}",
            spec.min()
        )));
    }
    let n = x.n() as f64;
    let value = spec.product().powf(1.0 / n);
    let minimizer = inverse(x)?.scale(value);
    Ok((value, minimizer))
}

/// Parse the plain-text matrix format: first line n, then n^2 lines
/// `row col x0 x1 x2 x3` with 0-based indices in any order.
pub fn parse_matrix_text(text: &str) -> Result<HyperhermitianMatrix, CoreError> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let n: usize = lines
        .next()
        .ok_or_else(|| CoreError::InvalidInput("empty matrix file".into()))?
        .parse()
        .map_err(|_| CoreError::InvalidInput("first line must be the dimension n".into()))?;
    if n == 0 {
        return Err(CoreError::InvalidInput("dimension must be at least 1".into()));
    }
    let mut entries = vec![None::<Quaternion>; n * n];
    let mut count = 0usize;
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(CoreError::InvalidInput(format!(
                "entry line {} needs 6 fields `row col x0 x1 x2 x3`, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let row: usize = fields[0].parse().map_err(|_| {
            CoreError::InvalidInput(format!("bad row index on line {}", lineno + 2))
        })?;
        let col: usize = fields[1].parse().map_err(|_| {
            CoreError::InvalidInput(format!("bad column index on line {}", lineno + 2))
        })?;
        if row >= n || col >= n {
            return Err(CoreError::InvalidInput(format!(
                "index ({row},{col}) out of range for n = {n} (indices are 0-based)"
            )));
        }
        let mut comp = [0.0f64; 4];
        for (i, f) in fields[2..].iter().enumerate() {
            comp[i] = f.parse().map_err(|_| {
                CoreError::InvalidInput(format!("bad component on line {}", lineno + 2))
            })?;
        }
        let slot = &mut entries[row * n + col];
        if slot.is_some() {
            return Err(CoreError::InvalidInput(format!(
                "duplicate entry for ({row},{col})"
            )));
        }
        *slot = Some(Quaternion::from_components(&comp));
        count += 1;
    }
    if count != n * n {
        return Err(CoreError::InvalidInput(format!(
            "expected {} entries, found {count}",
            n * n
        )));
    }
    HyperhermitianMatrix::new(n, entries.into_iter().map(Option::unwrap).collect())
}

pub fn read_matrix_file(path: &std::path::Path) -> Result<HyperhermitianMatrix, CoreError> {
    let text = std::fs::read_to_string(path)?;
    parse_matrix_text(&text)
}

/// Serialize in the same plain-text format accepted by
/// [`parse_matrix_text`].
pub fn write_matrix_text(x: &HyperhermitianMatrix) -> String {
    let mut out = format!("{}\n", x.n());
    for j in 0..x.n() {
        for k in 0..x.n() {
            let q = x.get(j, k);
            out.push_str(&format!("{} {} {} {} {} {}\n", j, k, q.x0, q.x1, q.x2, q.x3));
        }
    }
    out
}
