//! Cauchy-Fueter second derivatives and the operators built from them.
//!
//! The quaternionic Hessian of a real C^2 function u is assembled from
//! the real Hessian D = [d^2 u / dx_s dx_t] as
//!
//!   H_{jk} = sum_{s,t} D_{(4j+s)(4k+t)} e_t conj(e_s),
//!
//! which realizes H_{jk} = d/dq_j (dbar/dq_k u) with the imaginary
//! units applied on the left in dbar and on the right in d. The
//! normalization is anchored by hessian(|q|^2) = 8 Id. The companion
//! matrix [d^2 u / dqbar_j dq_k] is the entrywise transpose of H, and
//! it is the one traced against test matrices in `delta_a` and fed to
//! the Moore determinant in `ma_det`. The transpose changes Moore
//! determinants for n >= 3, so the operator consistently uses the
//! companion order everywhere.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::CoreError;
use crate::hha::{
    self, min_q_eigenvalue, moore_det, re_trace_product, HyperhermitianMatrix,
};
use crate::quaternion::Quaternion;

/// Real-valued field on H^n = R^{4n}, with an optional analytic real
/// Hessian. Evaluation maps must be safe for concurrent calls.
#[derive(Clone)]
pub struct ScalarField {
    n: usize,
    eval: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    hessian: Option<Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>>,
}

impl ScalarField {
    pub fn new(n: usize, eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField { n, eval: Arc::new(eval), hessian: None }
    }

    pub fn with_hessian(
        n: usize,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        hessian: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        ScalarField { n, eval: Arc::new(eval), hessian: Some(Arc::new(hessian)) }
    }

    /// u(x) = x' d x / 2 + b' x + c with analytic Hessian d.
    pub fn quadratic(n: usize, d: DMatrix<f64>, b: Vec<f64>, c: f64) -> Self {
        assert_eq!(d.nrows(), 4 * n);
        assert_eq!(d.ncols(), 4 * n);
        assert_eq!(b.len(), 4 * n);
        let d2 = d.clone();
        ScalarField::with_hessian(
            n,
            move |x| {
                let xv = nalgebra::DVector::from_row_slice(x);
                0.5 * (xv.transpose() * &d * &xv)[(0, 0)]
                    + b.iter().zip(x).map(|(bi, xi)| bi * xi).sum::<f64>()
                    + c
            },
            move |_| d2.clone(),
        )
    }

    /// |q|^2, the anchor of the Hessian normalization.
    pub fn norm_sqr(n: usize) -> Self {
        ScalarField::with_hessian(
            n,
            |x| x.iter().map(|v| v * v).sum(),
            move |x| DMatrix::identity(x.len(), x.len()).scale(2.0),
        )
    }

    pub fn affine(n: usize, b: Vec<f64>, c: f64) -> Self {
        assert_eq!(b.len(), 4 * n);
        ScalarField::with_hessian(
            n,
            move |x| b.iter().zip(x).map(|(bi, xi)| bi * xi).sum::<f64>() + c,
            move |x| DMatrix::zeros(x.len(), x.len()),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), 4 * self.n);
        (self.eval)(x)
    }

    pub fn has_analytic_hessian(&self) -> bool {
        self.hessian.is_some()
    }
}

/// Central-difference step 1e-4 (1 + |q|).
pub fn default_step(x: &[f64]) -> f64 {
    1e-4 * (1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt())
}

fn eval_checked(u: &ScalarField, x: &[f64]) -> Result<f64, CoreError> {
    let v = u.eval(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CoreError::NonFiniteEvaluation(x.to_vec()))
    }
}

/// Real 4n x 4n Hessian: the analytic map when the field carries one,
/// otherwise second-order central differences with step `h`
/// (`default_step` when None). The result is symmetrized; asymmetry
/// beyond 1e-6 (1 + scale) is rejected as insufficient smoothness.
pub fn real_hessian(u: &ScalarField, x: &[f64], h: Option<f64>) -> Result<DMatrix<f64>, CoreError> {
    let dim = 4 * u.n;
    assert_eq!(x.len(), dim, "point has wrong dimension");
    let mut d = if let Some(hess) = &u.hessian {
        let m = hess(x);
        if m.nrows() != dim || m.ncols() != dim {
            return Err(CoreError::InvalidInput(format!(
                "analytic Hessian must be {dim} x {dim}"
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFiniteEvaluation(x.to_vec()));
        }
        m
    } else {
        let h = h.unwrap_or_else(|| default_step(x));
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        let center = eval_checked(u, x)?;
        let mut xs = x.to_vec();
        for s in 0..dim {
            xs[s] += h;
            let up = eval_checked(u, &xs)?;
            xs[s] -= 2.0 * h;
            let down = eval_checked(u, &xs)?;
            xs[s] = x[s];
            m[(s, s)] = (up - 2.0 * center + down) / (h * h);
            for t in (s + 1)..dim {
                xs[s] += h;
                xs[t] += h;
                let pp = eval_checked(u, &xs)?;
                xs[t] -= 2.0 * h;
                let pm = eval_checked(u, &xs)?;
                xs[s] -= 2.0 * h;
                let mm = eval_checked(u, &xs)?;
                xs[t] += 2.0 * h;
                let mp = eval_checked(u, &xs)?;
                xs[s] = x[s];
                xs[t] = x[t];
                let v = (pp - pm - mp + mm) / (4.0 * h * h);
                m[(s, t)] = v;
                m[(t, s)] = v;
            }
        }
        m
    };
    let scale = d.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let asym = (&d - d.transpose()).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if asym > 1e-6 * (1.0 + scale) {
        return Err(CoreError::NotSmooth(format!(
            "real Hessian asymmetry {asym:.3e} at {x:?}"
        )));
    }
    d = (&d + d.transpose()).scale(0.5);
    Ok(d)
}

/// e_t * conj(e_s) table used by the assembly.
fn unit_table() -> [[Quaternion; 4]; 4] {
    let mut t = [[Quaternion::ZERO; 4]; 4];
    for ti in 0..4 {
        for si in 0..4 {
            t[ti][si] = Quaternion::unit(ti) * Quaternion::unit(si).conj();
        }
    }
    t
}

/// Quaternionic Hessian [d^2 u / dq_j dqbar_k] at a point.
#[derive(Clone, Debug)]
pub struct QHessian {
    mat: HyperhermitianMatrix,
}

impl QHessian {
    pub fn matrix(&self) -> &HyperhermitianMatrix {
        &self.mat
    }

    /// The companion matrix [d^2 u / dqbar_j dq_k] (entrywise
    /// transpose); the one that pairs with test matrices in trace
    /// formulas and carries the operator's determinant. The transpose
    /// preserves Moore determinants only up to n = 2.
    pub fn qbar_q(&self) -> HyperhermitianMatrix {
        self.mat.transpose()
    }

    pub fn into_matrix(self) -> HyperhermitianMatrix {
        self.mat
    }
}

fn assemble_qhessian(d: &DMatrix<f64>, n: usize) -> Result<HyperhermitianMatrix, CoreError> {
    let table = unit_table();
    let mut entries = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            let mut acc = Quaternion::ZERO;
            for s in 0..4 {
                for t in 0..4 {
                    let w = d[(4 * j + s, 4 * k + t)];
                    if w != 0.0 {
                        acc = acc + table[t][s].scale(w);
                    }
                }
            }
            entries.push(acc);
        }
    }
    HyperhermitianMatrix::new(n, entries)
}

/// Quaternionic Hessian at `x`, from the analytic real Hessian when
/// available and from central differences otherwise.
pub fn quaternionic_hessian(
    u: &ScalarField,
    x: &[f64],
    h: Option<f64>,
) -> Result<QHessian, CoreError> {
    let d = real_hessian(u, x, h)?;
    Ok(QHessian { mat: assemble_qhessian(&d, u.n)? })
}

/// Moore determinant of the mixed Hessian, taken on the same matrix
/// that appears inside `delta_a`'s trace pairing. For n <= 2 the two
/// index orders have equal determinants, but not in general, so the
/// trace-paired one is the operator the solver discretizes.
pub fn ma_det(u: &ScalarField, x: &[f64], h: Option<f64>) -> Result<f64, CoreError> {
    moore_det(&quaternionic_hessian(u, x, h)?.qbar_q())
}

/// The elliptic trace operator
///
///   Delta_a u = (1/2) Re Tr(a [d^2 u / dqbar_j dq_k]),
///
/// computed both in quaternionic arithmetic and as
/// (1/2) Tr(a^R D^2 u); the two routes are asserted equal to 1e-8 and
/// the common value is returned. `a` must be positive semidefinite.
pub fn delta_a(
    u: &ScalarField,
    a: &HyperhermitianMatrix,
    x: &[f64],
    h: Option<f64>,
) -> Result<f64, CoreError> {
    if a.n() != u.n {
        return Err(CoreError::GridMismatch(format!(
            "test matrix is {} x {} but the field lives on H^{}",
            a.n(),
            a.n(),
            u.n
        )));
    }
    if !hha::is_psd(a, 1e-10 * (1.0 + a.fro_norm())) {
        return Err(CoreError::NotPositiveDefinite(
            "delta_a requires a positive semidefinite test matrix".into(),
        ));
    }
    let d = real_hessian(u, x, h)?;
    let qh = QHessian { mat: assemble_qhessian(&d, u.n)? };
    let quaternionic = 0.5 * re_trace_product(a, &qh.qbar_q());
    let embedded = 0.5 * a.real_embed().iter().zip(d.iter()).map(|(p, q)| p * q).sum::<f64>();
    if (quaternionic - embedded).abs() > 1e-8 {
        return Err(CoreError::Degeneracy(format!(
            "trace routes disagree: {quaternionic} vs {embedded}"
        )));
    }
    Ok(quaternionic)
}

#[derive(Clone, Debug)]
pub struct PshWitness {
    pub point: Vec<f64>,
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug)]
pub struct PshReport {
    pub plurisubharmonic: bool,
    pub witness: Option<PshWitness>,
}

/// Check positive semidefiniteness of the quaternionic Hessian at each
/// sample point; reports the worst violation as a witness.
pub fn psh_check(
    u: &ScalarField,
    points: &[Vec<f64>],
    tol: f64,
    h: Option<f64>,
) -> Result<PshReport, CoreError> {
    let mut worst: Option<PshWitness> = None;
    for p in points {
        let qh = quaternionic_hessian(u, p, h)?;
        let lambda = min_q_eigenvalue(qh.matrix());
        if lambda < -tol && worst.as_ref().map_or(true, |w| lambda < w.min_eigenvalue) {
            worst = Some(PshWitness { point: p.clone(), min_eigenvalue: lambda });
        }
    }
    Ok(PshReport { plurisubharmonic: worst.is_none(), witness: worst })
}

#[derive(Clone, Copy, Debug)]
pub struct DetInequalityGap {
    /// det(quaternionic Hessian)^{1/n}
    pub lhs: f64,
    /// 4 det(real Hessian)^{1/4n}
    pub rhs: f64,
}

/// Evaluate both sides of the Hessian determinant inequality
/// lhs >= rhs at a point where u is plurisubharmonic; equality holds
/// exactly when the real Hessian is itself an embedded hyperhermitian
/// matrix (e.g. multiples of |q|^2).
pub fn det_inequality_gap(
    u: &ScalarField,
    x: &[f64],
    h: Option<f64>,
) -> Result<DetInequalityGap, CoreError> {
    let d = real_hessian(u, x, h)?;
    let qh = QHessian { mat: assemble_qhessian(&d, u.n)? };
    let traced = qh.qbar_q();
    let lambda = min_q_eigenvalue(&traced);
    if lambda < -1e-8 * (1.0 + traced.fro_norm()) {
        return Err(CoreError::NotPsh(format!(
            "smallest Hessian eigenvalue {lambda:.3e} at {x:?}"
        )));
    }
    let det_q = moore_det(&traced)?.max(0.0);
    let n = u.n as f64;
    let lhs = det_q.powf(1.0 / n);
    let det_r = d.determinant();
    let scale = d.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if det_r < -1e-10 * (1.0 + scale.powi(4 * u.n as i32)) {
        return Err(CoreError::Degeneracy(format!(
            "negative real Hessian determinant {det_r:.3e} under the PSH hypothesis"
        )));
    }
    let rhs = 4.0 * det_r.max(0.0).powf(1.0 / (4.0 * n));
    if lhs < rhs - 1e-8 {
        return Err(CoreError::Degeneracy(format!(
            "determinant inequality violated: {lhs} < {rhs}"
        )));
    }
    Ok(DetInequalityGap { lhs, rhs })
}
