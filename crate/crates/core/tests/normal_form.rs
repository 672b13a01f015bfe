use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use wavelab::diagnostics::complex_variable;
use wavelab::dtn::WaveState;
use wavelab::ensemble::{random_real_field, stream, SpectralEnvelope};
use wavelab::evolution::{make_initial_data, rhs, simulate, SimulationConfig};
use wavelab::fit::log_log_fit;
use wavelab::normal_form::{
    bilinear_apply, boundary_term, ibp_identity_residual, phase, quadratic_pairs, quadratic_symbol, split_nonlinearity,
    BilinearKernel, Sign, PAIRS,
};
use wavelab::spectral::{l2_quadrature, Field, PeriodicGrid};

fn grid() -> PeriodicGrid {
    PeriodicGrid::new(64, 2.0 * PI).unwrap()
}

/// Random state with `‖h'‖_∞` near `slope`.
fn random_state(seed: u64, slope: f64) -> WaveState {
    let env = SpectralEnvelope { peak: 5.0, width: 2.0 };
    let mut rng = stream(seed, 0);
    let h = random_real_field(&grid(), &env, &mut rng);
    let psi = random_real_field(&grid(), &env, &mut rng);
    let k = slope / h.ddx().sup_norm();
    WaveState::new(h.scale(k), psi.scale(k), 0.0).unwrap()
}

fn rel(a: &Field, b: &Field) -> f64 {
    l2_quadrature(&a.sub(b).unwrap()) / l2_quadrature(b)
}

#[test]
fn split_identity_on_random_states() {
    let worst = (0..50)
        .map(|i| {
            let s = split_nonlinearity(&random_state(i, 0.05), 3).unwrap();
            rel(&s.n2.add(&s.n3).unwrap(), &s.n)
        })
        .fold(0.0, f64::max);
    assert!(worst <= 1e-12, "{worst:e}");
}

#[test]
fn complex_form_matches_zakharov_rhs() {
    let worst = (0..50)
        .map(|i| {
            let st = random_state(100 + i, 0.05);
            let (ht, pt) = rhs(&st, 3).unwrap();
            // u_t + iΛu = (h_t − |∇|ψ) + iΛ(ψ_t + h)
            let re = ht.sub(&st.psi().abs_grad()).unwrap();
            let im = pt.add(st.h()).unwrap().half_grad();
            let lhs = re.add(&im.scale_complex(Complex64::i())).unwrap();
            let n = split_nonlinearity(&st, 3).unwrap().n;
            rel(&lhs, &n)
        })
        .fold(0.0, f64::max);
    assert!(worst <= 1e-10, "{worst:e}");
}

#[test]
fn quadratic_and_cubic_parts_scale() {
    let base = random_state(7, 0.05);
    let lams = [1.0, 0.5, 0.25];
    let (mut n2, mut n3) = (vec![], vec![]);
    for &l in &lams {
        let s = split_nonlinearity(&base.scaled(l), 3).unwrap();
        n2.push(l2_quadrature(&s.n2));
        n3.push(l2_quadrature(&s.n3));
    }
    let p2 = log_log_fit(&lams, &n2).unwrap().slope;
    let p3 = log_log_fit(&lams, &n3).unwrap().slope;
    assert!((p2 - 2.0).abs() <= 0.1, "{p2}");
    assert!((p3 - 3.0).abs() <= 0.1, "{p3}");
}

#[test]
fn symbol_reconstruction_of_quadratic_part() {
    for i in 0..10 {
        let st = random_state(200 + i, 0.05);
        let pairs = quadratic_pairs(&st).unwrap();
        let sum = pairs.iter().skip(1).fold(pairs[0].clone(), |a, b| a.add(b).unwrap());
        let direct = split_nonlinearity(&st, 3).unwrap().n2;
        let r = rel(&sum, &direct);
        assert!(r <= 1e-10, "seed {i}: {r:e}");
    }
}

#[test]
fn boundary_term_is_quadratic() {
    let base = random_state(9, 0.05);
    let lams = [1.0, 0.5, 0.25];
    let q: Vec<f64> = lams
        .iter()
        .map(|&l| l2_quadrature(&boundary_term(&base.scaled(l)).unwrap()))
        .collect();
    let p = log_log_fit(&lams, &q).unwrap().slope;
    assert!((p - 2.0).abs() <= 0.05, "{p}");
}

#[test]
fn divided_kernels_are_finite_on_the_grid() {
    let st = random_state(3, 0.05);
    let u = complex_variable(&st);
    for (mu, nu) in PAIRS {
        let q = bilinear_apply(&BilinearKernel::divided(mu, nu), &mu.select(&u), &nu.select(&u)).unwrap();
        assert!(q.values().iter().all(|v| v.re.is_finite() && v.im.is_finite()));
    }
}

#[test]
fn linear_trajectory_has_no_quadratic_duhamel_term() {
    let g = grid();
    let mut cfg = SimulationConfig::new(&g, 1.0);
    cfg.nonlinear = false;
    cfg.snapshots = 10;
    let (traj, _) = simulate(&WaveState::zero(g), &cfg, |_, _| {}).unwrap();
    let check = ibp_identity_residual(&traj, 3).unwrap();
    assert_eq!(check.residual, 0.0);
}

#[test]
fn ibp_identity_converges_under_cadence_halving() {
    let g = PeriodicGrid::new(64, 20.0 * PI).unwrap();
    let env = SpectralEnvelope { peak: 1.0, width: 0.3 };
    let init = make_initial_data(&g, &env, 0.05, 18.0, 1).unwrap();
    let residual = |snapshots: usize| {
        let mut cfg = SimulationConfig::new(&g, 8.0);
        cfg.dt = 0.0625;
        cfg.snapshots = snapshots;
        let (traj, _) = simulate(&init, &cfg, |_, _| {}).unwrap();
        ibp_identity_residual(&traj, 3).unwrap().residual
    };
    let r: Vec<f64> = [8, 16, 32].iter().map(|&n| residual(n)).collect();
    for w in r.windows(2) {
        assert!(w[0] / w[1] >= 4.0, "{r:?}");
    }
}

proptest! {
    #[test]
    fn symbols_are_three_halves_homogeneous(a in -5.0f64..5.0, b in -5.0f64..5.0, lam in 1.5f64..4.0) {
        for (mu, nu) in PAIRS {
            let m = quadratic_symbol(mu, nu, lam * a, lam * b);
            let expect = quadratic_symbol(mu, nu, a, b) * lam.powf(1.5);
            prop_assert!((m - expect).norm() <= 1e-11 * (1.0 + expect.norm()));
        }
    }

    #[test]
    fn phase_vanishes_only_on_the_resonant_set(a in -5.0f64..5.0, b in -5.0f64..5.0) {
        prop_assume!(a.abs() > 1e-3 && b.abs() > 1e-3 && (a + b).abs() > 1e-3);
        for (mu, nu) in PAIRS {
            prop_assert!(phase(mu, nu, a, b).abs() > 0.0);
        }
    }

    #[test]
    fn bilinear_apply_is_bilinear(c in -2.0f64..2.0, seed in 0u64..1000) {
        let s1 = random_state(seed, 0.05);
        let s2 = random_state(seed + 5000, 0.05);
        let (f, g) = (complex_variable(&s1), complex_variable(&s2));
        let k = BilinearKernel::divided(Sign::Plus, Sign::Minus);
        let lhs = bilinear_apply(&k, &f.scale(c).add(&g).unwrap(), &f).unwrap();
        let rhs = bilinear_apply(&k, &f, &f).unwrap().scale(c).add(&bilinear_apply(&k, &g, &f).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().sup_norm() <= 1e-12 * (1.0 + rhs.sup_norm()));
    }
}
