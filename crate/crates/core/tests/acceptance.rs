//! End-to-end acceptance checks. Each test prints a single PASS/FAIL
//! line so the suite doubles as a release report:
//!
//!   cargo test -p qma-core --test acceptance -- --nocapture

use std::time::Instant;

use qma_core::hha::re_trace_product;
use qma_core::sampling;
use qma_core::{
    det_inequality_gap, delta_a, inf_trace_value, ma_det, moore_det, moore_det_oracle,
    quaternionic_hessian, real_hessian, solve_dirichlet, sup_convolution, Domain,
    DirichletProblem, GridFunction, HyperhermitianMatrix, InitStrategy, NodeMask, RhsFunction,
    ScalarField, SolverParams,
};

fn verdict(name: &str, pass: bool, details: &str) {
    println!("criterion {name}: {} - {details}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {name}: {details}");
}

fn random_spd(dim: usize, rng: &mut rand_chacha::ChaCha8Rng) -> nalgebra::DMatrix<f64> {
    use rand::Rng;
    let m = nalgebra::DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
    &m * m.transpose() + nalgebra::DMatrix::identity(dim, dim).scale(0.3)
}

fn ball_problem(rhs: RhsFunction) -> DirichletProblem {
    DirichletProblem::new(
        Domain::Ball { center: vec![0.0; 4], radius: 1.0 },
        |x: &[f64]| x.iter().map(|v| v * v).sum(),
        rhs,
    )
    .unwrap()
    .with_exact(|x: &[f64]| x.iter().map(|v| v * v).sum())
}

#[test]
fn criterion_01_determinant_routes_agree() {
    let start = Instant::now();
    let mut rng = sampling::rng_from_seed(101);
    let mut worst = 0.0f64;
    for n in 1..=4usize {
        for _ in 0..500 {
            let x = sampling::random_hyperhermitian(n, &mut rng);
            let a = moore_det(&x).unwrap();
            let b = moore_det_oracle(&x).unwrap();
            let scale = a.abs().max(b.abs()).max(1e-6 * x.fro_norm().powi(n as i32));
            worst = worst.max((a - b).abs() / scale);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "01 determinant routes",
        worst <= 1e-9 && secs < 10.0,
        &format!("max relative gap {worst:.2e} over 2000 matrices in {secs:.1}s"),
    );
}

#[test]
fn criterion_02_determinant_is_superadditive_on_psd() {
    let start = Instant::now();
    let mut rng = sampling::rng_from_seed(202);
    let mut worst = 0.0f64;
    for n in 1..=3usize {
        for _ in 0..334 {
            let a = sampling::random_psd(n, &mut rng);
            let b = sampling::random_psd(n, &mut rng);
            let lhs = moore_det(&a.add(&b)).unwrap();
            let rhs = moore_det(&a).unwrap() + moore_det(&b).unwrap();
            worst = worst.max(rhs - lhs);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "02 superadditivity",
        worst <= 1e-9 && secs < 10.0,
        &format!("worst det(A)+det(B)-det(A+B) = {worst:.2e} over 1002 pairs in {secs:.1}s"),
    );
}

#[test]
fn criterion_03_hessian_anchor() {
    let mut worst_entry = 0.0f64;
    let mut worst_det = 0.0f64;
    for n in 1..=3usize {
        let analytic = ScalarField::norm_sqr(n);
        let fd = ScalarField::new(n, |x: &[f64]| x.iter().map(|v| v * v).sum());
        let target = HyperhermitianMatrix::diagonal(&vec![8.0; n]);
        let x: Vec<f64> = (0..4 * n).map(|i| 0.07 * i as f64 - 0.2).collect();
        for field in [&analytic, &fd] {
            let h = quaternionic_hessian(field, &x, Some(0.01)).unwrap();
            worst_entry = worst_entry.max(h.matrix().max_entry_dist(&target));
            let det = ma_det(field, &x, Some(0.01)).unwrap();
            let expect = 8f64.powi(n as i32);
            worst_det = worst_det.max((det - expect).abs() / expect);
        }
    }
    verdict(
        "03 hessian anchor",
        worst_entry <= 1e-6 && worst_det <= 1e-6,
        &format!("max |H - 8 Id| entry {worst_entry:.2e}, max relative det gap {worst_det:.2e}"),
    );
}

#[test]
fn criterion_04_trace_infimum() {
    let mut rng = sampling::rng_from_seed(404);
    let mut attain = 0.0f64;
    let mut undercut = 0.0f64;
    for i in 0..200 {
        let n = 1 + i % 3;
        let x = sampling::random_pd(n, &mut rng);
        let det_root = moore_det(&x).unwrap().powf(1.0 / n as f64);
        let (value, minimizer) = inf_trace_value(&x).unwrap();
        attain = attain.max((value - det_root).abs());
        attain = attain.max((re_trace_product(&minimizer, &x) / n as f64 - det_root).abs());
        for _ in 0..200 {
            let a = sampling::random_det_one(n, &mut rng);
            undercut = undercut.max(det_root - re_trace_product(&a, &x) / n as f64);
        }
    }
    verdict(
        "04 trace infimum",
        attain <= 1e-8 && undercut <= 1e-9,
        &format!(
            "minimizer attainment gap {attain:.2e}, worst competitor undercut {undercut:.2e}"
        ),
    );
}

#[test]
fn criterion_05_determinant_inequality() {
    let mut rng = sampling::rng_from_seed(505);
    let mut min_gap = f64::INFINITY;
    for i in 0..500 {
        let n = 1 + i % 3;
        let d = random_spd(4 * n, &mut rng);
        let u = ScalarField::quadratic(n, d, vec![0.0; 4 * n], 0.0);
        let gap = det_inequality_gap(&u, &vec![0.0; 4 * n], None).unwrap();
        min_gap = min_gap.min(gap.lhs - gap.rhs);
    }
    let mut eq_dev = 0.0f64;
    for n in 1..=2usize {
        for c in [0.125, 1.0, 3.0] {
            let d = nalgebra::DMatrix::identity(4 * n, 4 * n).scale(2.0 * c);
            let u = ScalarField::quadratic(n, d, vec![0.0; 4 * n], 0.0);
            let gap = det_inequality_gap(&u, &vec![0.1; 4 * n], None).unwrap();
            eq_dev = eq_dev.max((gap.lhs - gap.rhs).abs());
        }
    }
    verdict(
        "05 determinant inequality",
        min_gap >= -1e-8 && eq_dev <= 1e-8,
        &format!(
            "min lhs-rhs {min_gap:.2e} over 500 fields, radial equality deviation {eq_dev:.2e}"
        ),
    );
}

#[test]
fn criterion_06_trace_routes_on_random_pairs() {
    use rand::Rng;
    let mut rng = sampling::rng_from_seed(606);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let n = rng.gen_range(1..=3usize);
        let m = nalgebra::DMatrix::from_fn(4 * n, 4 * n, |_, _| rng.gen_range(-1.0..1.0));
        let d_sym = (&m + m.transpose()).scale(0.5);
        let u = ScalarField::quadratic(n, d_sym.clone(), vec![0.0; 4 * n], 0.0);
        let a = sampling::random_psd(n, &mut rng);
        let x: Vec<f64> = (0..4 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let qh = quaternionic_hessian(&u, &x, None).unwrap();
        let quaternionic = 0.5 * re_trace_product(&a, &qh.qbar_q());
        let d = real_hessian(&u, &x, None).unwrap();
        let embedded =
            0.5 * a.real_embed().iter().zip(d.iter()).map(|(p, q)| p * q).sum::<f64>();
        worst = worst.max((quaternionic - embedded).abs());
        delta_a(&u, &a, &x, None).unwrap();
    }
    verdict(
        "06 trace routes",
        worst <= 1e-8,
        &format!("max route gap {worst:.2e} over 500 pairs"),
    );
}

#[test]
fn criterion_07_sup_convolution_suite() {
    use rand::Rng;
    let domain = Domain::Ball { center: vec![0.0; 4], radius: 1.0 };
    let mut rng = sampling::rng_from_seed(707);
    let mut f = GridFunction::from_domain(&domain, 9, |_| 0.0).unwrap();
    for idx in 0..f.len() {
        if f.mask(idx).in_domain() {
            f.set_value(idx, rng.gen_range(0.0..0.4));
        }
    }
    let (a_const, d_small, d_large) = (1.5, 0.15, 0.3);
    let g_small = sup_convolution(&f, d_small, a_const).unwrap();
    let g_large = sup_convolution(&f, d_large, a_const).unwrap();

    // exhaustive oracle: scan every in-domain node of the whole grid
    let inv = 1.0 / (2.0 * d_small * d_small);
    let mut oracle_gap = 0.0f64;
    let mut checked = 0usize;
    for idx in 0..g_small.len() {
        if !g_small.mask(idx).in_domain() {
            continue;
        }
        let x = g_small.coords(idx);
        let mut best = f64::NEG_INFINITY;
        for w in 0..f.len() {
            if !f.mask(w).in_domain() {
                continue;
            }
            let cw = f.coords(w);
            let d2: f64 = (0..4)
                .map(|a| {
                    let d = cw[a] - x[a];
                    d * d
                })
                .sum();
            best = best.max(f.value(w) - d2 * inv);
        }
        if best != g_small.value(idx) {
            oracle_gap = oracle_gap.max((best - g_small.value(idx)).abs());
        }
        checked += 1;
    }

    let mut family = 0.0f64;
    for idx in 0..f.len() {
        if g_small.mask(idx).in_domain() {
            family = family.max(f.value(idx) - g_small.value(idx));
        }
        if g_large.mask(idx).in_domain() {
            family = family.max(g_small.value(idx) - g_large.value(idx));
        }
    }

    let bound = -1.0 / (d_small * d_small) - 1e-8;
    let mut convexity = 0.0f64;
    let mut multi = vec![0usize; 4];
    for idx in 0..g_small.len() {
        if g_small.mask(idx) != NodeMask::Interior {
            continue;
        }
        g_small.unindex(idx, &mut multi);
        for ax in 0..4 {
            if multi[ax] == 0 || multi[ax] + 1 >= g_small.shape()[ax] {
                continue;
            }
            let mut lo = multi.clone();
            lo[ax] -= 1;
            let mut hi = multi.clone();
            hi[ax] += 1;
            let (i0, i1) = (g_small.index_of(&lo), g_small.index_of(&hi));
            if g_small.mask(i0).in_domain() && g_small.mask(i1).in_domain() {
                let h = g_small.spacing(ax);
                let second = (g_small.value(i1) - 2.0 * g_small.value(idx) + g_small.value(i0))
                    / (h * h);
                convexity = convexity.max(bound - second);
            }
        }
    }

    // closed form for |q|^2
    let q2 = GridFunction::from_domain(&domain, 9, |x| x.iter().map(|v| v * v).sum()).unwrap();
    let delta = 0.12;
    let q2d = sup_convolution(&q2, delta, a_const).unwrap();
    let mut closed = 0.0f64;
    for idx in 0..q2d.len() {
        if q2d.mask(idx).in_domain() {
            let r2: f64 = q2d.coords(idx).iter().map(|v| v * v).sum();
            closed = closed.max((q2d.value(idx) - r2 / (1.0 - 2.0 * delta * delta)).abs());
        }
    }
    let h = q2.max_spacing();

    verdict(
        "07 sup-convolution",
        oracle_gap == 0.0 && family <= 0.0 && convexity <= 0.0 && closed <= 10.0 * h,
        &format!(
            "oracle gap {oracle_gap:.1e} on {checked} nodes, family violation {family:.1e}, \
             semi-convexity violation {convexity:.1e}, closed-form error {closed:.2e} (10h = {:.2})",
            10.0 * h
        ),
    );
}

#[test]
fn criterion_08_manufactured_ball_solve() {
    let start = Instant::now();
    let problem = ball_problem(RhsFunction::constant(1, 8.0));
    let params = SolverParams {
        points_per_axis: 13,
        richness: 1,
        tol: 1e-6,
        init: InitStrategy::ConstantMin,
        ..SolverParams::default()
    };
    let (_, report) = solve_dirichlet(&problem, &params).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let linf = report.linf_error.unwrap();

    let affine = DirichletProblem::new(
        Domain::Ball { center: vec![0.0; 4], radius: 1.0 },
        |x: &[f64]| 0.3 + x[0] - 2.0 * x[1] + 0.5 * x[3],
        RhsFunction::constant(1, 0.0),
    )
    .unwrap()
    .with_exact(|x: &[f64]| 0.3 + x[0] - 2.0 * x[1] + 0.5 * x[3]);
    let aff_params = SolverParams {
        points_per_axis: 9,
        tol: 1e-7,
        init: InitStrategy::ConstantMin,
        ..SolverParams::default()
    };
    let (_, aff_report) = solve_dirichlet(&affine, &aff_params).unwrap();
    let aff_linf = aff_report.linf_error.unwrap();

    verdict(
        "08 manufactured solve",
        report.converged
            && linf <= 0.05
            && report.residual <= 1e-6
            && secs <= 300.0
            && aff_report.converged
            && aff_linf <= 1e-6,
        &format!(
            "13^4 ball: linf {linf:.2e}, residual {:.2e}, {} iterations in {secs:.1}s; \
             affine: linf {aff_linf:.2e}",
            report.residual, report.iterations
        ),
    );
}

#[test]
fn criterion_09_uniqueness_and_comparison() {
    let problem = ball_problem(RhsFunction::constant(1, 8.0));
    let base = SolverParams {
        points_per_axis: 9,
        richness: 1,
        tol: 1e-8,
        ..SolverParams::default()
    };
    let (u_ext, r1) = solve_dirichlet(&problem, &base).unwrap();
    let (u_min, r2) = solve_dirichlet(
        &problem,
        &SolverParams { init: InitStrategy::ConstantMin, ..base.clone() },
    )
    .unwrap();
    let init_gap = u_ext.max_abs_diff(&u_min).unwrap();

    let tight = SolverParams { tol: 1e-10, init: InitStrategy::ConstantMin, ..base.clone() };
    let pairs: Vec<(RhsFunction, RhsFunction)> = vec![
        (RhsFunction::constant(1, 0.0), RhsFunction::constant(1, 8.0)),
        (RhsFunction::constant(1, 4.0), RhsFunction::constant(1, 8.0)),
        (
            RhsFunction::constant(1, 8.0),
            RhsFunction::new(1, |q, _| 8.0 + 4.0 * q.iter().map(|v| v * v).sum::<f64>()),
        ),
    ];
    let mut order_violation = 0.0f64;
    for (f1, f2) in pairs {
        let (u1, s1) = solve_dirichlet(&ball_problem(f1), &tight).unwrap();
        let (u2, s2) = solve_dirichlet(&ball_problem(f2), &tight).unwrap();
        assert!(s1.converged && s2.converged);
        for idx in 0..u1.len() {
            if u1.mask(idx).in_domain() {
                order_violation = order_violation.max(u2.value(idx) - u1.value(idx));
            }
        }
    }
    verdict(
        "09 uniqueness and comparison",
        r1.converged && r2.converged && init_gap <= 1e-6 && order_violation <= 1e-8,
        &format!(
            "init-independence gap {init_gap:.2e}, worst ordering violation {order_violation:.2e}"
        ),
    );
}

#[test]
fn criterion_10_refinement_trend() {
    let problem = ball_problem(RhsFunction::constant(1, 8.0));
    let mut errors = Vec::new();
    for points in [9usize, 13, 17] {
        let h = 2.0 / (points - 1) as f64;
        let params = SolverParams {
            points_per_axis: points,
            richness: 1,
            tol: 3.6e-5 * h * h,
            init: InitStrategy::ConstantMin,
            ..SolverParams::default()
        };
        let (_, report) = solve_dirichlet(&problem, &params).unwrap();
        assert!(report.converged, "{points}^4 solve did not converge");
        errors.push(report.linf_error.unwrap());
    }
    let monotone = errors[1] <= errors[0] && errors[2] <= errors[1];
    let halved = errors[2] <= 0.5 * errors[0];
    verdict(
        "10 refinement trend",
        monotone && halved,
        &format!("errors {:.2e} -> {:.2e} -> {:.2e}", errors[0], errors[1], errors[2]),
    );
}
