//! Acceptance criteria 1–11, one PASS/FAIL line each.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rotlayer::assembly::{fit_eps_exponent, ApproxSolution, AssemblyConfig, ResidualReport};
use rotlayer::batchelor_wood::{compute_tilde_omega, Params};
use rotlayer::cli::{run, Mode, RunConfig};
use rotlayer::error_solver::{hardy_check, mode_matrix, solve_modes, Coefficients, ErrorConfig};
use rotlayer::euler_hierarchy::{corrector_hk, decay_exponent};
use rotlayer::field_core::smooth::Jet;
use rotlayer::field_core::{laplacian, Coords, FourierRadialField as Field, RadialGrid, ThetaGrid};
use rotlayer::prandtl::{solve_hierarchy, LayerConfig};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

struct Outcome {
    passed: bool,
    detail: String,
}

fn check(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn tg() -> ThetaGrid {
    ThetaGrid::new(8, 24).unwrap()
}

fn c1_tilde_omega() -> Outcome {
    let p = Params::new(2.0, 0.1, 0.1, vec![], vec![0.0, 1.0], 0).unwrap();
    let reps = 1000;
    let t = Instant::now();
    let mut w = 0.0;
    for _ in 0..reps {
        w = compute_tilde_omega(std::hint::black_box(&p)).unwrap().tilde_omega;
    }
    let per_call = t.elapsed().as_secs_f64() / reps as f64;
    let n = 10_000;
    let mean_sq = (0..n).map(|j| (2.0 + 0.1 * (2.0 * PI * j as f64 / n as f64).sin()).powi(2)).sum::<f64>() / n as f64;
    let err = (w - mean_sq.sqrt()).abs();
    check(err < 1e-12 && per_call < 1e-3, format!("|ω̃ − oracle| = {err:.2e}, {:.2e} s per call", per_call))
}

fn c2_leading_layer() -> Outcome {
    let t = Instant::now();
    let p = Params::new(1.0, 1e-3, 0.1, vec![0.0, 1.0], vec![], 0).unwrap();
    let h = solve_hierarchy(&p, &ThetaGrid::new(8, 18).unwrap(), &LayerConfig::default()).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let u = &h.layers[0].u_p;
    let lam = C64::new(0.0, h.tilde_omega()).sqrt();
    let mut rel = 0.0f64;
    for (i, &z) in u.nodes().iter().enumerate().take_while(|(_, &z)| z <= 12.0) {
        let exact = C64::new(1e-3, 0.0) * (-lam * z).exp();
        rel = rel.max((u.c(i, 1) - exact).norm() / exact.norm());
    }
    let vm = h.layers[0].diag.v_mean_max;
    check(
        rel < 1e-2 && vm < 1e-10 && secs < 5.0,
        format!("mode-1 relative error {rel:.2e}, mean of v {vm:.2e}, {secs:.2} s"),
    )
}

fn c3_delta_linearity() -> Outcome {
    let sup = |d: f64| {
        let p = Params::new(1.0, d, 0.1, vec![0.0, 1.0], vec![], 0).unwrap();
        let h = solve_hierarchy(&p, &tg(), &LayerConfig::default()).unwrap();
        h.layers[0].u_p.sup_abs(&tg())
    };
    let q = sup(0.1) / sup(0.05);
    check((1.8..=2.2).contains(&q), format!("sup ratio {q:.4}"))
}

fn c4_euler_orders() -> Outcome {
    let p = Params::new(1.0, 0.05, 0.1, vec![0.0, 1.0], vec![0.0, 0.0, 0.3], 2).unwrap();
    let h = solve_hierarchy(&p, &tg(), &LayerConfig::default()).unwrap();
    let g = Arc::new(RadialGrid::geometric_r(64.0, 801).unwrap());
    let mut lap = 0.0f64;
    let mut exp_err = 0.0f64;
    for e in &h.euler {
        let rv = e.v().sample(&g, 0, None).mul_radial(g.nodes());
        lap = lap.max(laplacian(&rv, Coords::Polar).unwrap().max_coeff_abs());
        let top = e.cv.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if let Some(n) = (1..e.cv.len()).find(|&n| e.cv[n].norm() > 1e-14 * top) {
            let x = decay_exponent(&e.v(), &[64.0, 128.0, 256.0, 512.0], &tg());
            exp_err = exp_err.max((x + n as f64 + 1.0).abs());
        }
    }
    let compat = h.compatibility.iter().map(|c| c.max_mean).fold(0.0, f64::max);
    check(
        lap < 1e-8 && exp_err < 0.05 && compat < 1e-9,
        format!("Δ(rv) {lap:.2e}, exponent error {exp_err:.3}, compatibility {compat:.2e}"),
    )
}

fn c5_corrector() -> Outcome {
    let g = RadialGrid::geometric_r(64.0, 1001).unwrap();
    let r = g.nodes();
    let f: Vec<f64> = r.iter().map(|x| x.powi(-5)).collect();
    let (h, _) = corrector_hk(1.0, &f, &g).unwrap();
    let closed = (0..r.len()).map(|i| (h[i] - (0.875 / r[i] + 0.125 * r[i].powi(-3))).abs()).fold(0.0, f64::max);
    let hf = Field::zeros(&Arc::new(g.clone()), 0).map_coeffs(|i, _, _| C64::new(h[i], 0.0));
    let (d1, d2) = (hf.d_coord(1), hf.d_coord(2));
    let ode = (0..r.len())
        .map(|i| (d2.c(i, 0).re + d1.c(i, 0).re / r[i] - h[i] / (r[i] * r[i]) - f[i]).abs())
        .fold(0.0, f64::max);
    check(
        closed < 1e-10 && ode < 1e-8 && h[0] == 1.0,
        format!("closed form {closed:.2e}, ODE residual {ode:.2e}, h(1) − A = {:e}", h[0] - 1.0),
    )
}

fn c6_assembly() -> Outcome {
    let p = Params::new(1.0, 0.05, 0.1, vec![0.0, 1.0], vec![], 2).unwrap();
    let h = solve_hierarchy(&p, &tg(), &LayerConfig::default()).unwrap();
    let r = ApproxSolution::assemble(&h, &tg(), &AssemblyConfig::default()).unwrap().residual_report().unwrap();
    let b = r.boundary_u.max(r.boundary_v);
    check(
        r.divergence < 1e-9 && b < 1e-10 && r.support_violation < 1e-9,
        format!("divergence {:.2e}, boundary {b:.2e}, support {:.2e}", r.divergence, r.support_violation),
    )
}

fn c7_residual_order() -> Outcome {
    let t = Instant::now();
    let layer = LayerConfig { z_max: 8.0, n_zeta: 1000, ..Default::default() };
    let reps: Vec<ResidualReport> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&e| {
            let p = Params::new(100.0, 0.1, e, vec![0.0, 1.0], vec![], 2).unwrap();
            let h = solve_hierarchy(&p, &tg(), &layer).unwrap();
            ApproxSolution::assemble(&h, &tg(), &AssemblyConfig::default()).unwrap().residual_report().unwrap()
        })
        .collect();
    let x = fit_eps_exponent(&reps).unwrap();
    let secs = t.elapsed().as_secs_f64();
    check((2.6..=3.4).contains(&x) && secs < 300.0, format!("ω = 100: fitted exponent {x:.4}, {secs:.1} s"))
}

fn manufactured_recovery() -> (f64, f64) {
    let grid = ErrorConfig::default().grid().unwrap();
    let c = Coefficients::rotation(&grid, 0.1, 1.0, 2);
    let n = grid.len();
    let phi = |s: f64| {
        let x = Jet::variable(s);
        (x * x * (x * x).scale(-2.0).exp()).derivs()
    };
    let mut rhs = Field::zeros(&grid, 2);
    for (i, &s) in grid.nodes().iter().enumerate() {
        let d = phi(s);
        let e = 0.01 * (-s).exp();
        let visc = d[4] - 4.0 * d[3] + 2.0 * d[2] + 4.0 * d[1] - 3.0 * d[0];
        rhs.set_c(i, 1, C64::new(e * visc, 0.0) - C64::new(0.0, (-s).exp()) * (d[2] - d[0]));
    }
    let st = solve_modes(&c, &rhs, &vec![0.0; n]).unwrap();
    let exact = (0..n).map(|i| (st.phi.c(i, 1).re - phi(grid.nodes()[i])[0]).abs() + st.phi.c(i, 1).im.abs());
    let exact = exact.fold(0.0, f64::max);
    let dense = mode_matrix(&c, 1).to_dense();
    let a = nalgebra::DMatrix::from_fn(n, n, |i, j| dense[i][j]);
    let mut b = rhs.mode(1);
    for i in [0, 1, n - 2, n - 1] {
        b[i] = ZERO;
    }
    let x = a.lu().solve(&nalgebra::DVector::from_vec(b)).unwrap();
    let vs_dense = (0..n).map(|i| (st.phi.c(i, 1) - x[i]).norm()).fold(0.0, f64::max);
    (exact, vs_dense)
}

fn full_solve(epsilon: f64) -> rotlayer::cli::RunArtifacts {
    let cfg = RunConfig { mode: Mode::FullSolve, epsilon, delta: 0.05, write_fields: false, ..Default::default() };
    run(&cfg).unwrap()
}

fn c8_error_solve(base: &rotlayer::cli::RunArtifacts) -> Outcome {
    let e = base.report.error_solve.as_ref().unwrap();
    let last = e.history.last().unwrap().relative_update;
    let (exact, dense) = manufactured_recovery();
    check(
        e.converged && last < 1e-10 && e.iterations <= 50 && exact < 1e-6 && dense < 1e-6,
        format!(
            "{} iterations, final update {last:.2e}; manufactured error {exact:.2e}, banded vs dense {dense:.2e}",
            e.iterations
        ),
    )
}

fn c9_far_field_scaling(base: &rotlayer::cli::RunArtifacts) -> Outcome {
    let t1 = &base.report.error_solve.as_ref().unwrap().far_field;
    let coarse = full_solve(0.2);
    let t2 = &coarse.report.error_solve.as_ref().unwrap().far_field;
    let q = t2.bound_constant_v.max(t1.bound_constant_v) / t2.bound_constant_v.min(t1.bound_constant_v);
    check(
        t1.decay_v <= -1.8 && t1.decay_u <= -1.8 && q < 2.0,
        format!("decay v {:.3}, u {:.3}; bound constant ratio {q:.3}", t1.decay_v, t1.decay_u),
    )
}

fn c10_rescaling() -> Outcome {
    let cfg = RunConfig { mode: Mode::RescaleLambda, lambda: Some(100.0), delta: 0.05, write_fields: false, ..Default::default() };
    let a = run(&cfg).unwrap();
    let r = a.report.rescale.as_ref().unwrap();
    check(r.check.identity_error < 1e-10, format!("ε = {}, identity error {:.2e}", r.epsilon, r.check.identity_error))
}

fn c11_hardy() -> Outcome {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let s: Vec<f64> = (0..4001).map(|i| 40.0 * i as f64 / 4000.0).collect();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let c: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let b: f64 = rng.gen_range(1.0..3.0);
        let f: Vec<f64> = s.iter().map(|&x| x * (c[0] + c[1] * x + c[2] * x * x) * (-b * x).exp()).collect();
        let alpha = rng.gen_range(0.1..0.9) * 2.0 * b * if rng.gen::<bool>() { 1.0 } else { -1.0 };
        worst = worst.max(hardy_check(&s, &f, None).unwrap().ratio).max(hardy_check(&s, &f, Some(alpha)).unwrap().ratio);
    }
    let fine: Vec<f64> = (0..8001).map(|i| 40.0 * i as f64 / 8000.0).collect();
    let f: Vec<f64> = fine.iter().map(|x| x * (-x).exp()).collect();
    let closed = hardy_check(&fine, &f, None).unwrap().ratio;
    check(
        worst <= 1.0 + 1e-8 && (closed - 0.5).abs() < 1e-10,
        format!("worst ratio {worst:.6}, closed form {closed:.12}"),
    )
}

fn main() {
    let base = full_solve(0.1);
    let results: Vec<(&str, Outcome)> = vec![
        ("rotation average", c1_tilde_omega()),
        ("leading layer", c2_leading_layer()),
        ("delta linearity", c3_delta_linearity()),
        ("outer orders", c4_euler_orders()),
        ("radial corrector", c5_corrector()),
        ("assembly invariants", c6_assembly()),
        ("residual order", c7_residual_order()),
        ("error solve", c8_error_solve(&base)),
        ("far-field scaling", c9_far_field_scaling(&base)),
        ("rescaling identity", c10_rescaling()),
        ("hardy inequalities", c11_hardy()),
    ];
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!("{} criterion {:>2} {name}: {}", if o.passed { "PASS" } else { "FAIL" }, i + 1, o.detail);
        failed += usize::from(!o.passed);
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
