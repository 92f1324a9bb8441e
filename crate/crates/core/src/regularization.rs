//! Sup/inf-convolutions on grid functions and perturbed right-hand
//! sides, the regularization devices behind the comparison and
//! equivalence arguments.
//!
//! The sup-convolution of f with parameter delta is
//!
//!   f^delta(q) = sup_w { f(w) - |q - w|^2 / (2 delta^2) },
//!
//! restricted to the shrunken domain of nodes farther than A*delta
//! from the boundary. Under A^2 > 2 osc(f) the sup localizes to the
//! ball |w - q| <= A*delta, which turns the global scan into a local
//! one without changing any value; both scans are implemented and
//! agree exactly.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::CoreError;
use crate::grid::{GridFunction, NodeMask};

/// Right-hand side F(q, t) >= 0, non-decreasing in t.
#[derive(Clone)]
pub struct RhsFunction {
    n: usize,
    eval: Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>,
}

impl RhsFunction {
    pub fn new(n: usize, eval: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        RhsFunction { n, eval: Arc::new(eval) }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        RhsFunction::new(n, move |_, _| c)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eval(&self, q: &[f64], t: f64) -> f64 {
        debug_assert_eq!(q.len(), 4 * self.n);
        (self.eval)(q, t)
    }

    /// Spot-check nonnegativity and monotonicity in t over sample
    /// points and ordered t-pairs.
    pub fn validate(&self, points: &[Vec<f64>], t_range: (f64, f64)) -> Result<(), CoreError> {
        let (t0, t1) = t_range;
        let ts: Vec<f64> = (0..=8).map(|k| t0 + (t1 - t0) * k as f64 / 8.0).collect();
        for q in points {
            let mut prev = f64::NEG_INFINITY;
            for &t in &ts {
                let v = self.eval(q, t);
                if !v.is_finite() {
                    return Err(CoreError::NonFiniteEvaluation(q.clone()));
                }
                if v < 0.0 {
                    return Err(CoreError::Precondition(format!(
                        "F({q:?}, {t}) = {v} is negative"
                    )));
                }
                if v < prev - 1e-12 * (1.0 + prev.abs()) {
                    return Err(CoreError::Precondition(format!(
                        "F is decreasing in t at {q:?}: F(.,{t}) = {v} < {prev}"
                    )));
                }
                prev = v;
            }
        }
        Ok(())
    }
}

/// max - min over in-domain nodes (0 for all-exterior grids).
pub fn oscillation(f: &GridFunction) -> f64 {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for idx in 0..f.len() {
        if f.mask(idx).in_domain() {
            min = min.min(f.value(idx));
            max = max.max(f.value(idx));
        }
    }
    if min <= max {
        max - min
    } else {
        0.0
    }
}

fn check_conv_params(f: &GridFunction, delta: f64, a_const: f64) -> Result<(), CoreError> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(CoreError::InvalidInput("convolution parameter must be positive".into()));
    }
    if !(a_const.is_finite() && a_const > 0.0) {
        return Err(CoreError::InvalidInput("localization constant A must be positive".into()));
    }
    let osc = oscillation(f);
    if a_const * a_const <= 2.0 * osc {
        return Err(CoreError::Precondition(format!(
            "need A^2 > 2 osc(f): A = {a_const}, osc = {osc}"
        )));
    }
    Ok(())
}

/// Nodes of the shrunken domain: the radius-r ball around the node
/// fits inside the grid box and contains no exterior node.
fn shrunken_mask(f: &GridFunction, r: f64) -> Vec<bool> {
    let dim = f.dim();
    let len = f.len();
    let mut keep = vec![false; len];
    let mut multi = vec![0usize; dim];
    let mut sub = vec![(0usize, 0usize); dim];
    for idx in 0..len {
        if !f.mask(idx).in_domain() {
            continue;
        }
        let x = f.coords(idx);
        if (0..dim).any(|a| x[a] - r < f.lo()[a] - 1e-12 || x[a] + r > f.hi()[a] + 1e-12) {
            continue;
        }
        for a in 0..dim {
            let h = f.spacing(a);
            let lo = ((x[a] - r - f.lo()[a]) / h - 1e-12).ceil().max(0.0) as usize;
            let hi = (((x[a] + r - f.lo()[a]) / h + 1e-12).floor() as usize)
                .min(f.shape()[a] - 1);
            sub[a] = (lo, hi);
        }
        let mut clear = true;
        for a in 0..dim {
            multi[a] = sub[a].0;
        }
        'scan: loop {
            let w = f.index_of(&multi);
            if f.mask(w) == NodeMask::Exterior {
                let d2: f64 = (0..dim)
                    .map(|a| {
                        let d = f.coord(a, multi[a]) - x[a];
                        d * d
                    })
                    .sum();
                if d2 <= r * r {
                    clear = false;
                    break 'scan;
                }
            }
            let mut a = dim;
            loop {
                if a == 0 {
                    break 'scan;
                }
                a -= 1;
                if multi[a] < sub[a].1 {
                    multi[a] += 1;
                    break;
                }
                multi[a] = sub[a].0;
            }
        }
        keep[idx] = clear;
    }
    keep
}

fn convolve(
    f: &GridFunction,
    delta: f64,
    a_const: f64,
    sup: bool,
) -> Result<GridFunction, CoreError> {
    check_conv_params(f, delta, a_const)?;
    let r = a_const * delta;
    let keep = shrunken_mask(f, r);
    if !keep.iter().any(|&k| k) {
        return Err(CoreError::EmptyShrunkenDomain(format!(
            "no node is {r} away from the boundary"
        )));
    }
    let dim = f.dim();
    let inv = 1.0 / (2.0 * delta * delta);
    let values: Vec<f64> = (0..f.len())
        .into_par_iter()
        .map(|idx| {
            if !keep[idx] {
                return 0.0;
            }
            let x = f.coords(idx);
            let mut sub = vec![(0usize, 0usize); dim];
            for a in 0..dim {
                let h = f.spacing(a);
                let lo = ((x[a] - r - f.lo()[a]) / h - 1e-12).ceil().max(0.0) as usize;
                let hi = (((x[a] + r - f.lo()[a]) / h + 1e-12).floor() as usize)
                    .min(f.shape()[a] - 1);
                sub[a] = (lo, hi);
            }
            let mut best = if sup { f64::NEG_INFINITY } else { f64::INFINITY };
            let mut multi: Vec<usize> = sub.iter().map(|s| s.0).collect();
            'scan: loop {
                let w = f.index_of(&multi);
                if f.mask(w).in_domain() {
                    let d2: f64 = (0..dim)
                        .map(|a| {
                            let d = f.coord(a, multi[a]) - x[a];
                            d * d
                        })
                        .sum();
                    let cand = if sup {
                        f.value(w) - d2 * inv
                    } else {
                        f.value(w) + d2 * inv
                    };
                    best = if sup { best.max(cand) } else { best.min(cand) };
                }
                let mut a = dim;
                loop {
                    if a == 0 {
                        break 'scan;
                    }
                    a -= 1;
                    if multi[a] < sub[a].1 {
                        multi[a] += 1;
                        break;
                    }
                    multi[a] = sub[a].0;
                }
            }
            best
        })
        .collect();
    let mut out = f.clone();
    out.replace_values(values);
    out.remask(&keep);
    Ok(out)
}

/// Sup-convolution f^delta on the shrunken domain; requires
/// A^2 > 2 osc(f).
pub fn sup_convolution(
    f: &GridFunction,
    delta: f64,
    a_const: f64,
) -> Result<GridFunction, CoreError> {
    convolve(f, delta, a_const, true)
}

/// Inf-convolution, the dual regularization from below; the search
/// radius mirrors the sup side (A * eps) so that
/// inf_convolution(-f) = -sup_convolution(f) exactly.
pub fn inf_convolution(
    f: &GridFunction,
    eps: f64,
    a_const: f64,
) -> Result<GridFunction, CoreError> {
    convolve(f, eps, a_const, false)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PerturbSign {
    /// F_delta: infimum of F(., t) over the closed ball of radius
    /// A*delta; lower bound of F.
    Lower,
    /// F^delta: the supremum variant, upper bound of F.
    Upper,
}

/// Perturbed right-hand side. The ball extremum is evaluated over a
/// deterministic candidate set: the center, axis shifts at half and
/// full radius, and radial moves toward and away from the origin.
/// Exact for radial monotone profiles; always on the correct side
/// of F (candidates never leave the ball).
pub fn perturbed_rhs(f: &RhsFunction, delta: f64, a_const: f64, sign: PerturbSign) -> RhsFunction {
    let n = f.n();
    let inner = f.clone();
    let r = a_const * delta;
    RhsFunction::new(n, move |q, t| {
        let dim = 4 * n;
        let mut best = inner.eval(q, t);
        let mut consider = |w: &[f64]| {
            let v = inner.eval(w, t);
            best = match sign {
                PerturbSign::Lower => best.min(v),
                PerturbSign::Upper => best.max(v),
            };
        };
        let mut w = q.to_vec();
        for rho in [0.5 * r, r] {
            for a in 0..dim {
                w[a] = q[a] + rho;
                consider(&w);
                w[a] = q[a] - rho;
                consider(&w);
                w[a] = q[a];
            }
            let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                let shrink = 1.0 - rho.min(norm) / norm;
                let inward: Vec<f64> = q.iter().map(|v| v * shrink).collect();
                consider(&inward);
                let grow = 1.0 + rho / norm;
                let outward: Vec<f64> = q.iter().map(|v| v * grow).collect();
                consider(&outward);
            }
        }
        best
    })
}
