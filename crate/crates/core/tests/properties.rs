use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rotlayer::batchelor_wood::{check_rescaling, compute_tilde_omega, rescale_lambda, FlowFields, Params};
use rotlayer::euler_hierarchy::solve_euler_order;
use rotlayer::field_core::banded::BandMatrix;
use rotlayer::field_core::fd::DiffOp;
use rotlayer::field_core::{stream_from_velocity, FourierRadialField as Field, RadialGrid, ThetaGrid};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

fn coeffs(k_max: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), k_max + 1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn nodal_spectral_round_trip(c in coeffs(6)) {
        let tg = ThetaGrid::new(6, 16).unwrap();
        let g = Arc::new(RadialGrid::geometric_r(4.0, 11).unwrap());
        let f = Field::from_fn(&g, 6, |k, r| {
            let (a, b) = c[k];
            C64::new(a * r, if k == 0 { 0.0 } else { b / r })
        });
        let back = Field::from_nodal(&g, &tg, &f.to_nodal(&tg));
        prop_assert!((&back - &f).max_coeff_abs() < 1e-14);
        for i in 0..g.len() {
            prop_assert_eq!(back.c(i, 0).im, 0.0);
            for &t in &[0.0, 0.7, 2.9] {
                let direct: f64 = (0..=6).map(|k| {
                    let (a, b) = f.cos_sin(i, k);
                    a * (k as f64 * t).cos() + b * (k as f64 * t).sin()
                }).sum();
                prop_assert!((f.eval(i, t) - direct).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn theta_derivative_is_exact(c in coeffs(5)) {
        let g = Arc::new(RadialGrid::geometric_r(4.0, 11).unwrap());
        let f = Field::from_fn(&g, 5, |k, _| C64::new(c[k].0, if k == 0 { 0.0 } else { c[k].1 }));
        let d = f.dtheta();
        for k in 0..=5 {
            let (a, b) = f.cos_sin(0, k);
            let (da, db) = d.cos_sin(0, k);
            prop_assert_eq!(da, k as f64 * b);
            prop_assert_eq!(db, -(k as f64) * a);
        }
    }

    #[test]
    fn stream_function_recovery(a in -1.0..1.0f64, b in -1.0..1.0f64, q in 0.5..2.0f64) {
        // Φ = a (r−1)² e^{−q(r−1)} cos θ + b (r−1)² e^{−q(r−1)} sin 2θ satisfies Φ = Φ_r = 0 at r = 1.
        let g = Arc::new(RadialGrid::geometric_r(40.0, 1601).unwrap());
        let tg = ThetaGrid::new(4, 12).unwrap();
        let prof = |r: f64| (r - 1.0).powi(2) * (-q * (r - 1.0)).exp();
        let dprof = |r: f64| (2.0 * (r - 1.0) - q * (r - 1.0).powi(2)) * (-q * (r - 1.0)).exp();
        let mode = |k: usize, p: f64| match k {
            1 => C64::new(a * p, 0.0),
            2 => C64::new(0.0, -b * p),
            _ => ZERO,
        };
        let phi = Field::from_fn(&g, 4, |k, r| mode(k, prof(r)));
        let u = Field::from_fn(&g, 4, |k, r| mode(k, dprof(r)));
        let v = phi.dtheta().mul_radial(&g.nodes().iter().map(|r| -1.0 / r).collect::<Vec<_>>());
        let st = stream_from_velocity(&u, &v, &tg, 1e-8).unwrap();
        prop_assert!((&st.phi - &phi).sup_abs(&tg) < 1e-10);
        let phi_r = st.phi.d_coord(1);
        prop_assert!((&phi_r - &u).sup_abs(&tg) < 1e-8);
        let rv = v.mul_radial(g.nodes());
        prop_assert!((&st.phi.dtheta() + &rv).sup_abs(&tg) < 1e-10);
    }

    #[test]
    fn tilde_omega_depends_only_on_mean_and_square(
        omega in 0.5..3.0f64, delta in 0.0..0.3f64, c in coeffs(4), shift in 0.0..6.3f64,
    ) {
        let fc: Vec<f64> = c.iter().map(|x| x.0).collect();
        let mut fs: Vec<f64> = c.iter().map(|x| x.1).collect();
        fs[0] = 0.0;
        let p = Params::new(omega, delta, 0.1, fc.clone(), fs.clone(), 1).unwrap();
        // f(θ + shift) in coefficient form
        let (mut gc, mut gs) = (fc.clone(), fs.clone());
        for k in 1..fc.len() {
            let (ck, sk) = ((k as f64 * shift).cos(), (k as f64 * shift).sin());
            gc[k] = fc[k] * ck + fs[k] * sk;
            gs[k] = fs[k] * ck - fc[k] * sk;
        }
        let q = Params::new(omega, delta, 0.1, gc, gs, 1).unwrap();
        let a = compute_tilde_omega(&p).unwrap().tilde_omega;
        let b = compute_tilde_omega(&q).unwrap().tilde_omega;
        prop_assert!((a - b).abs() < 1e-13);
        let n = 10_000;
        let quad = ((0..n).map(|j| {
            let t = 2.0 * PI * j as f64 / n as f64;
            (omega + delta * p.f_eval(t)).powi(2)
        }).sum::<f64>() / n as f64).sqrt();
        prop_assert!((a - quad).abs() < 1e-12);
    }

    #[test]
    fn rescaling_inverse_is_identity(lambda in 1.0..500.0f64, c in coeffs(3)) {
        let g = Arc::new(RadialGrid::geometric_r(8.0, 41).unwrap());
        let f = Field::from_fn(&g, 3, |k, r| C64::new(c[k].0 / r, if k == 0 { 0.0 } else { c[k].1 / (r * r) }));
        let sol = FlowFields { u: f.clone(), v: f.dtheta(), p: f.scale(0.3) };
        let back = rescale_lambda(&rescale_lambda(&sol, lambda), 1.0 / lambda);
        prop_assert!((&back.u - &sol.u).max_coeff_abs() < 1e-15);
        prop_assert!((&back.p - &sol.p).max_coeff_abs() < 1e-14);
        let one = rescale_lambda(&sol, 1.0);
        prop_assert_eq!((&one.v - &sol.v).max_coeff_abs(), 0.0);
        let tg = ThetaGrid::new(3, 10).unwrap();
        prop_assert!(check_rescaling(&sol, lambda, &tg).unwrap().identity_error < 1e-10);
    }

    #[test]
    fn euler_order_linear_and_closed_form(
        c1 in (-1.0..1.0f64, -1.0..1.0f64), c2 in (-1.0..1.0f64, -1.0..1.0f64), al in -2.0..2.0f64, be in -2.0..2.0f64,
    ) {
        let mut t1 = vec![ZERO; 7];
        let mut t2 = vec![ZERO; 7];
        t1[1] = C64::new(c1.0, c1.1);
        t2[3] = C64::new(c2.0, c2.1);
        let comb: Vec<C64> = t1.iter().zip(&t2).map(|(a, b)| a * al + b * be).collect();
        let o = solve_euler_order(1, &comb, 1e-10).unwrap();
        let o1 = solve_euler_order(1, &t1, 1e-10).unwrap();
        let o2 = solve_euler_order(1, &t2, 1e-10).unwrap();
        let g = Arc::new(RadialGrid::geometric_r(64.0, 101).unwrap());
        let rv = o.v().sample(&g, 0, None).mul_radial(g.nodes());
        let lin = &o1.v().sample(&g, 0, None).scale(al) + &o2.v().sample(&g, 0, None).scale(be);
        prop_assert!((&o.v().sample(&g, 0, None) - &lin).max_coeff_abs() < 1e-15);
        for (i, &r) in g.nodes().iter().enumerate() {
            for n in [1usize, 3] {
                let exact = -comb[n] * r.powi(-(n as i32));
                prop_assert!((rv.c(i, n) - exact).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn banded_solve_matches_dense(seed in 0u64..1000) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let d2 = DiffOp::new(&x, 2);
        let c2: Vec<C64> = (0..40).map(|_| C64::new(1.0 + rng.gen::<f64>(), rng.gen::<f64>())).collect();
        let c0: Vec<C64> = (0..40).map(|_| C64::new(rng.gen::<f64>() - 3.0, 0.0)).collect();
        let m = BandMatrix::from_stencils(40, &[(Some(&d2), &c2), (None, &c0)]);
        let dense = m.to_dense();
        let b: Vec<C64> = (0..40).map(|_| C64::new(rng.gen(), rng.gen())).collect();
        let a = nalgebra::DMatrix::from_fn(40, 40, |i, j| dense[i][j]);
        let want = a.lu().solve(&nalgebra::DVector::from_vec(b.clone())).unwrap();
        let got = m.factor().unwrap().solve(&b);
        let scale = want.iter().fold(0.0f64, |s, z| s.max(z.norm()));
        for i in 0..40 {
            prop_assert!((got[i] - want[i]).norm() < 1e-10 * scale.max(1.0));
        }
    }
}
