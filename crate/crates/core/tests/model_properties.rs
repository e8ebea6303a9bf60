use fdamimo::model::{
    approximation_error, clean_output, draw_pulse, draw_stack, i1_integral, matched_output_approx,
    steering_vectors, white_noise_variance, OffsetModel, PulseDraw, RadarConfig, SignalMatrix, Target,
};
use fdamimo::quadrature::QuadOptions;
use fdamimo::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn table1_target() -> Target {
    Target::from_degrees(30.0, 6000.0)
}

/// Composite Simpson rule on `t e^{-j2πkΔf t}` over one pulse.
fn simpson_i1(cfg: &RadarConfig, i: usize, n: usize) -> Complex64 {
    let tp = cfg.pulse_duration();
    let k = i as f64 - n as f64;
    let steps = 20_000;
    let h = tp / steps as f64;
    let f = |t: f64| Complex64::from_polar(t, -2.0 * PI * k * cfg.delta_f * t);
    let mut acc = f(0.0) + f(tp);
    for s in 1..steps {
        let w = if s % 2 == 1 { 4.0 } else { 2.0 };
        acc += f(s as f64 * h) * w;
    }
    acc * (h / 3.0)
}

#[test]
fn i1_closed_form_matches_simpson() {
    for df in [1e3, 10e3, 37e3] {
        let cfg = RadarConfig::table1().with_delta_f(df);
        for i in 0..cfg.n_tx {
            for n in 0..cfg.n_tx {
                let a = i1_integral(&cfg, i, n);
                let b = simpson_i1(&cfg, i, n);
                let scale = cfg.pulse_duration().powi(2);
                assert!((a - b).norm() < 1e-10 * scale, "I1[{i},{n}] at Δf={df}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn white_noise_power_at_zero_db() {
    let cfg = RadarConfig::table1();
    let t = table1_target();
    let clean = clean_output(&cfg, &t);
    let pulses = 2000;
    let mut power = 0.0;
    for p in 0..pulses {
        let y = draw_pulse(&cfg, &[t], &OffsetModel::new(0.0, 0.0, 9), 0.0, p).unwrap();
        power += (&y.y - &clean).norm_squared();
    }
    power /= (pulses as usize * cfg.dim()) as f64;
    let want = t.beta(&cfg).norm_sqr();
    assert!((power / want - 1.0).abs() < 0.03, "noise power {power:e}, |β|² {want:e}");
    assert_eq!(white_noise_variance(&cfg, &[t], 0.0), want);
}

#[test]
fn first_order_error_is_quadratic_in_sigma() {
    // The neglected terms are second order in the offsets.
    let cfg = RadarConfig::table1();
    let t = table1_target();
    let q = QuadOptions { rel_tol: 1e-9, ..QuadOptions::default() };
    let small = approximation_error(&cfg, &t, &OffsetModel::new(50.0, 50.0, 4), 40, q).unwrap();
    let large = approximation_error(&cfg, &t, &OffsetModel::new(100.0, 100.0, 4), 40, q).unwrap();
    for (a, b) in [(small.tx_only, large.tx_only), (small.rx_only, large.rx_only), (small.both, large.both)] {
        let ratio = b / a;
        assert!((3.5..4.5).contains(&ratio), "error ratio {ratio}");
    }
}

#[test]
fn stacks_are_reproducible_per_seed() {
    let cfg = RadarConfig::table1();
    let t = table1_target();
    let a = draw_stack(&cfg, &[t], &OffsetModel::new(500.0, 500.0, 3), 10.0, 8).unwrap();
    let b = draw_stack(&cfg, &[t], &OffsetModel::new(500.0, 500.0, 3), 10.0, 8).unwrap();
    let c = draw_stack(&cfg, &[t], &OffsetModel::new(500.0, 500.0, 4), 10.0, 8).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn pulses_with_same_index_share_offsets_across_targets() {
    let cfg = RadarConfig::table1();
    let t1 = table1_target();
    let t2 = Target::from_degrees(-10.0, 9000.0);
    let o = OffsetModel::new(300.0, 200.0, 5);
    let joint = draw_pulse(&cfg, &[t1, t2], &o, f64::INFINITY, 3).unwrap();
    let draw = PulseDraw::sample(&cfg, &o, 3);
    let sum = matched_output_approx(&cfg, &t1, &draw).total().y + matched_output_approx(&cfg, &t2, &draw).total().y;
    assert!((&joint.y - &sum).norm() < 1e-12 * sum.norm());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn steering_is_unit_modulus_kronecker(theta_deg in -89.0..89.0f64, frac in 0.0..0.999f64, df in 1e3..1e5f64) {
        let cfg = RadarConfig::table1().with_delta_f(df);
        let st = steering_vectors(&cfg, theta_deg.to_radians(), frac * cfg.max_range()).unwrap();
        for z in st.joint.iter() {
            prop_assert!((z.norm() - 1.0).abs() < 1e-12);
        }
        for n in 0..cfg.n_tx {
            for m in 0..cfg.n_rx {
                let want = st.tx[n] * st.rx[m];
                prop_assert!((st.joint[n * cfg.n_rx + m] - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn tx_noise_columns_follow_receive_steering(
        theta_deg in -80.0..80.0f64,
        frac in 0.01..0.99f64,
        ratio in 0.001..0.1f64,
        seed in any::<u64>(),
        pulse in 0u64..1000,
    ) {
        let cfg = RadarConfig::table1();
        let t = Target::from_degrees(theta_deg, frac * cfg.max_range());
        let draw = PulseDraw::sample(&cfg, &OffsetModel::new(ratio * cfg.delta_f, 0.0, seed), pulse);
        let nt = matched_output_approx(&cfg, &t, &draw).n_t;
        let rx = steering_vectors(&cfg, t.theta, t.r).unwrap().rx;
        let peak = nt.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for n in 0..cfg.n_tx {
            for m in 0..cfg.n_rx {
                prop_assert!((nt[(m, n)] - rx[m] * nt[(0, n)]).norm() <= 1e-10 * peak);
            }
        }
    }

    #[test]
    fn output_is_linear_in_alpha(re in -5.0..5.0f64, im in -5.0..5.0f64, seed in any::<u64>()) {
        let cfg = RadarConfig::table1();
        let unit = table1_target();
        let scaled = Target { alpha: Complex64::new(re, im), ..unit };
        let draw = PulseDraw::sample(&cfg, &OffsetModel::new(400.0, 400.0, seed), 0);
        let a = matched_output_approx(&cfg, &unit, &draw).total().y * Complex64::new(re, im);
        let b = matched_output_approx(&cfg, &scaled, &draw).total().y;
        prop_assert!((&a - &b).norm() <= 1e-12 * a.norm().max(1e-300));
    }

    #[test]
    fn vectorization_is_column_major(seed in any::<u64>()) {
        let cfg = RadarConfig::table1();
        let y = draw_pulse(&cfg, &[table1_target()], &OffsetModel::new(100.0, 100.0, seed), 5.0, 0).unwrap();
        let v = y.vectorize();
        for n in 0..cfg.n_tx {
            for m in 0..cfg.n_rx {
                prop_assert_eq!(v[n * cfg.n_rx + m], y.y[(m, n)]);
            }
        }
        prop_assert_eq!(SignalMatrix::from_vector(&v, cfg.n_rx, cfg.n_tx).unwrap(), y);
    }
}
