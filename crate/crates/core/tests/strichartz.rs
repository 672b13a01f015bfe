use num_complex::Complex64;
use proptest::prelude::*;
use wavelab::spectral::{sobolev_norm, Field, PeriodicGrid};
use wavelab::strichartz::{
    free_evolve, measure_decay, measure_decay_unchecked, measure_strichartz, period_scaling, wrap_time, BandPacket,
    TimeGrid,
};

#[test]
fn decay_slope_ignores_translation() {
    // Only the sample positions move, so the residual is sup-sampling error.
    let p = BandPacket::block(0, 4000.0).unwrap();
    let a = measure_decay_unchecked(&p, 50.0, 800.0, 16, 16).unwrap();
    let b = measure_decay_unchecked(&p.translated(1234.5), 50.0, 800.0, 16, 16).unwrap();
    assert!((a.slope() - b.slope()).abs() < 1e-5, "{} vs {}", a.slope(), b.slope());
}

#[test]
fn decay_slope_survives_parabolic_rescaling() {
    // u(x, t) ↦ 2^{k/2} u(2^k x, 2^{k/2} t) maps block 0 on R to block k on R/2^k.
    let base = measure_decay(0, 4000.0, 50.0, 800.0, 16, 4).unwrap();
    let scaled = measure_decay(4, 250.0, 12.5, 200.0, 16, 4).unwrap();
    assert!(
        (base.slope() - scaled.slope()).abs() < 1e-6,
        "{} vs {}",
        base.slope(),
        scaled.slope()
    );
    for (a, b) in base.sup.iter().zip(&scaled.sup) {
        assert!((4.0 * a - b).abs() <= 1e-9 * b);
    }
}

#[test]
fn wrapped_window_is_rejected() {
    let p = BandPacket::block(0, 100.0).unwrap();
    assert!(measure_decay_unchecked(&p, 5.0, 2000.0, 60, 4).is_err());
}

#[test]
fn strichartz_norm_vanishes_with_horizon() {
    let v: Vec<f64> = [1e-2, 1e-4, 1e-8]
        .iter()
        .map(|&t| {
            measure_strichartz(2, t, 200.0, TimeGrid::Graded { points: 40 }, 4)
                .unwrap()
                .value
        })
        .collect();
    assert!(v[0] > v[1] && v[1] > v[2] && v[2] < 1e-1 * v[0]);
}

#[test]
fn periodic_norm_grows_with_horizon() {
    let p = period_scaling(2, 10.0, &[160.0, 640.0], 0.05, 4).unwrap();
    assert!(p.values[1].value > p.values[0].value);
    assert!(p.values.iter().all(|v| !v.inconclusive));
}

#[test]
fn centroid_speed_matches_group_velocity() {
    // Mean of Λ'(ξ) = ½ξ^{−1/2} over the block is close to ½·2^{−k/2}.
    for k in [0, 2, 4] {
        let w = wrap_time(k, 300.0, 0.5).unwrap();
        let expected = 0.5 * 2f64.powf(-k as f64 / 2.0);
        let speed = w.speed.unwrap();
        assert!(
            (speed - expected).abs() < 0.1 * expected,
            "k={k}: {speed} vs {expected}"
        );
    }
}

#[test]
fn wrap_time_scales_with_circumference() {
    let a = wrap_time(2, 200.0, 0.5).unwrap();
    let b = wrap_time(2, 400.0, 0.5).unwrap();
    let ratio = b.measured.unwrap() / a.measured.unwrap();
    assert!((ratio - 2.0).abs() < 0.2, "{ratio}");
    assert!(!a.inconclusive && !b.inconclusive);
}

fn field(seed: u64) -> Field {
    let g = PeriodicGrid::new(64, 40.0).unwrap();
    let s = seed as f64;
    Field::from_complex_fn(g, move |x| {
        Complex64::new((0.3 * x + s).sin(), 0.5 * (0.45 * x - s).cos()) * (-(x - 20.0).powi(2) / 30.0).exp()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn free_flow_conserves_sobolev_norms(seed in 0u64..1000, t in -50.0f64..50.0, s in 0.0f64..20.0) {
        let u = field(seed);
        let n0 = sobolev_norm(&u, s);
        prop_assert!((sobolev_norm(&free_evolve(&u, t), s) - n0).abs() <= 1e-12 * n0);
    }

    #[test]
    fn free_flow_composes(seed in 0u64..1000, t1 in -20.0f64..20.0, t2 in -20.0f64..20.0) {
        let u = field(seed);
        let two = free_evolve(&free_evolve(&u, t1), t2);
        let one = free_evolve(&u, t1 + t2);
        prop_assert!(two.sub(&one).unwrap().sup_norm() <= 1e-12);
    }
}
