//! Flat JSON problem configuration: a single document with explicit
//! keys, no includes or templating. Validation parses the expressions,
//! checks coordinate ranges, and spot-checks the right-hand side for
//! nonnegativity and monotonicity in t on seeded random samples.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use qma_core::sampling::rng_from_seed;
use qma_core::{CoreError, DirichletProblem, Domain, InitStrategy, RhsFunction, SolverParams};

use crate::expr::{parse_expression, Expr};

fn d_tol() -> f64 {
    1e-6
}
fn d_max_iter() -> usize {
    20_000
}
fn d_tau_factor() -> f64 {
    0.5
}
fn d_richness() -> usize {
    1
}
fn d_stencil_radius() -> f64 {
    1.0
}
fn d_init() -> InitStrategy {
    InitStrategy::BoundaryExtension
}
fn d_t_min() -> f64 {
    -10.0
}
fn d_t_max() -> f64 {
    10.0
}
fn d_solution_csv() -> String {
    "solution.csv".into()
}
fn d_report_json() -> String {
    "report.json".into()
}

/// One experiment: problem data, discretization and output locations.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Quaternionic dimension; the domain lives in R^{4n}.
    pub n: usize,
    /// "ball" or "box".
    pub domain: String,
    /// Ball center, length 4n; defaults to the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Box bounds, length 4n each.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<Vec<f64>>,
    pub points_per_axis: usize,
    /// Right-hand side F(q, t); may use x0..x_{4n-1} and t.
    pub f: String,
    /// Boundary data g(q); may use x0..x_{4n-1} only.
    pub g: String,
    /// Known exact solution, used for error reporting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    #[serde(default = "d_tol")]
    pub tol: f64,
    #[serde(default = "d_max_iter")]
    pub max_iter: usize,
    #[serde(default = "d_tau_factor")]
    pub tau_factor: f64,
    #[serde(default = "d_richness")]
    pub richness: usize,
    #[serde(default = "d_stencil_radius")]
    pub stencil_radius: f64,
    #[serde(default = "d_init")]
    pub init: InitStrategy,
    /// t-range over which the right-hand side is spot-checked.
    #[serde(default = "d_t_min")]
    pub t_min: f64,
    #[serde(default = "d_t_max")]
    pub t_max: f64,
    /// Seed for the randomized checks and the property suites.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_solution_csv")]
    pub solution_csv: String,
    #[serde(default = "d_report_json")]
    pub report_json: String,
}

/// Config after validation: parsed expressions and a concrete domain.
#[derive(Debug)]
pub struct Validated {
    pub n: usize,
    pub domain: Domain,
    pub f: Expr,
    pub g: Expr,
    pub exact: Option<Expr>,
    pub params: SolverParams,
    pub seed: u64,
    pub solution_csv: String,
    pub report_json: String,
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Config, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn validate(&self) -> Result<Validated, String> {
        if self.n == 0 {
            return Err("n must be at least 1".into());
        }
        let dim = 4 * self.n;
        let domain = self.build_domain(dim)?;
        domain.validate().map_err(|e| e.to_string())?;

        let f = parse_expression(&self.f).map_err(|e| format!("f: {e}"))?;
        let g = parse_expression(&self.g).map_err(|e| format!("g: {e}"))?;
        let exact = match &self.exact {
            Some(s) => Some(parse_expression(s).map_err(|e| format!("exact: {e}"))?),
            None => None,
        };
        check_vars("f", &f, self.n)?;
        check_vars("g", &g, self.n)?;
        if g.uses_t() {
            return Err("g must not reference t".into());
        }
        if let Some(e) = &exact {
            check_vars("exact", e, self.n)?;
            if e.uses_t() {
                return Err("exact must not reference t".into());
            }
        }

        if self.points_per_axis < 3 {
            return Err("points_per_axis must be at least 3".into());
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err("tol must be positive".into());
        }
        if self.max_iter == 0 {
            return Err("max_iter must be at least 1".into());
        }
        if !(self.tau_factor.is_finite() && self.tau_factor > 0.0) {
            return Err("tau_factor must be positive".into());
        }
        if !(self.stencil_radius.is_finite() && self.stencil_radius > 0.0) {
            return Err("stencil_radius must be positive".into());
        }
        if !(self.t_min.is_finite() && self.t_max.is_finite() && self.t_min < self.t_max) {
            return Err("t range must satisfy t_min < t_max".into());
        }

        self.spot_check(&domain, &f, &g, exact.as_ref())?;

        Ok(Validated {
            n: self.n,
            domain,
            f,
            g,
            exact,
            params: SolverParams {
                points_per_axis: self.points_per_axis,
                richness: self.richness,
                stencil_radius: self.stencil_radius,
                tol: self.tol,
                max_iter: self.max_iter,
                tau_factor: self.tau_factor,
                init: self.init,
            },
            seed: self.seed,
            solution_csv: self.solution_csv.clone(),
            report_json: self.report_json.clone(),
        })
    }

    fn build_domain(&self, dim: usize) -> Result<Domain, String> {
        match self.domain.as_str() {
            "ball" => {
                if self.lo.is_some() || self.hi.is_some() {
                    return Err("ball domain does not take lo/hi".into());
                }
                let center = self.center.clone().unwrap_or_else(|| vec![0.0; dim]);
                if center.len() != dim {
                    return Err(format!(
                        "center has {} coordinates, expected {dim}",
                        center.len()
                    ));
                }
                let radius =
                    self.radius.ok_or_else(|| "ball domain needs a radius".to_string())?;
                Ok(Domain::Ball { center, radius })
            }
            "box" => {
                if self.center.is_some() || self.radius.is_some() {
                    return Err("box domain does not take center/radius".into());
                }
                let lo = self.lo.clone().ok_or_else(|| "box domain needs lo".to_string())?;
                let hi = self.hi.clone().ok_or_else(|| "box domain needs hi".to_string())?;
                if lo.len() != dim || hi.len() != dim {
                    return Err(format!("lo/hi must have {dim} coordinates"));
                }
                Ok(Domain::Box { lo, hi })
            }
            other => Err(format!("unknown domain kind `{other}`; use \"ball\" or \"box\"")),
        }
    }

    // 200 seeded (q, t1 < t2) samples: F finite, nonnegative and
    // non-decreasing in t; g and exact finite
    fn spot_check(
        &self,
        domain: &Domain,
        f: &Expr,
        g: &Expr,
        exact: Option<&Expr>,
    ) -> Result<(), String> {
        let mut rng = rng_from_seed(self.seed);
        for _ in 0..200 {
            let q = sample_in_domain(domain, &mut rng);
            let (t1, t2) = ordered_t_pair(self.t_min, self.t_max, &mut rng);
            let v1 = f.eval(&q, t1);
            let v2 = f.eval(&q, t2);
            if !v1.is_finite() || !v2.is_finite() {
                return Err(format!("f is non-finite at q = {q:?}, t = {t1}"));
            }
            if v1 < 0.0 || v2 < 0.0 {
                let (t, v) = if v1 < 0.0 { (t1, v1) } else { (t2, v2) };
                return Err(format!(
                    "f violates nonnegativity: f = {v} at q = {q:?}, t = {t}; \
                     the right-hand side must be nonnegative"
                ));
            }
            if v2 < v1 - 1e-12 * (1.0 + v1.abs()) {
                return Err(format!(
                    "f must be non-decreasing in t: f(q, {t1}) = {v1} exceeds \
                     f(q, {t2}) = {v2} at q = {q:?}"
                ));
            }
            if !g.eval(&q, 0.0).is_finite() {
                return Err(format!("g is non-finite at q = {q:?}"));
            }
            if let Some(e) = exact {
                if !e.eval(&q, 0.0).is_finite() {
                    return Err(format!("exact is non-finite at q = {q:?}"));
                }
            }
        }
        Ok(())
    }
}

fn check_vars(label: &str, e: &Expr, n: usize) -> Result<(), String> {
    if let Some(k) = e.max_var() {
        if k >= 4 * n {
            return Err(format!(
                "{label}: variable x{k} is out of range; n = {n} allows x0..x{}",
                4 * n - 1
            ));
        }
    }
    Ok(())
}

/// Uniform sample of the domain: per-axis for boxes, radial via
/// Box-Muller directions for balls.
pub fn sample_in_domain(domain: &Domain, rng: &mut impl Rng) -> Vec<f64> {
    match domain {
        Domain::Box { lo, hi } => {
            lo.iter().zip(hi).map(|(&a, &b)| rng.gen_range(a..b)).collect()
        }
        Domain::Ball { center, radius } => {
            let dim = center.len();
            loop {
                let v: Vec<f64> = (0..dim.div_ceil(2))
                    .flat_map(|_| {
                        let u1: f64 = rng.gen_range(1e-12..1.0f64);
                        let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                        let r = (-2.0 * u1.ln()).sqrt();
                        [r * u2.cos(), r * u2.sin()]
                    })
                    .take(dim)
                    .collect();
                let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                if norm < 1e-9 {
                    continue;
                }
                let radial = radius * rng.gen_range(0.0f64..1.0).powf(1.0 / dim as f64);
                return center.iter().zip(&v).map(|(c, a)| c + radial * a / norm).collect();
            }
        }
    }
}

fn ordered_t_pair(t_min: f64, t_max: f64, rng: &mut impl Rng) -> (f64, f64) {
    let a = rng.gen_range(t_min..t_max);
    let b = rng.gen_range(t_min..t_max);
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Assemble the library-side problem from a validated config.
pub fn build_problem(v: &Validated) -> Result<DirichletProblem, CoreError> {
    let g = v.g.clone();
    let f = v.f.clone();
    let problem = DirichletProblem::new(
        v.domain.clone(),
        move |x| g.eval(x, 0.0),
        RhsFunction::new(v.n, move |q, t| f.eval(q, t)),
    )?;
    Ok(match v.exact.clone() {
        Some(e) => problem.with_exact(move |x| e.eval(x, 0.0)),
        None => problem,
    })
}
