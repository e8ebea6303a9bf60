use fdamimo::estimators::{
    anm_denoise, build_c4, default_tau, music_2d, music_c4, music_rows, omp, run_method, AnmOptions, EstimatorOptions,
    GridSpec, Method, MusicInput,
};
use fdamimo::model::{draw_stack, joint_steering, white_noise_variance, OffsetModel, RadarConfig, Target};
use fdamimo::Complex64;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn small_grid() -> GridSpec {
    GridSpec::uniform((20.0, 40.0), 41, (5000.0, 7000.0), 41).unwrap()
}

fn noise(dim: usize, l: usize, seed: u64) -> DMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(dim, l, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re, im)
    })
}

fn mean_abs(c: &DMatrix<Complex64>) -> f64 {
    c.iter().map(|z| z.norm()).sum::<f64>() / c.len() as f64
}

#[test]
fn gaussian_cumulant_decays_like_inverse_root_l() {
    let dim = 8;
    let mut ratios = Vec::new();
    for seed in 0..4 {
        let a = build_c4(&noise(dim, 500, seed)).unwrap();
        let b = build_c4(&noise(dim, 2000, 100 + seed)).unwrap();
        ratios.push(mean_abs(&b.c4) / mean_abs(&a.c4));
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!((mean - 0.5).abs() < 0.1, "ratios {ratios:?}");
}

#[test]
fn noiseless_two_targets_recovered_by_omp() {
    let cfg = RadarConfig::table1();
    // sin 30° − sin 0° = 1/2 makes the half-wavelength receive responses
    // orthogonal, hence the joint atoms too. With orthogonal pulse sequences
    // the correlation energy then peaks exactly on the stronger atom.
    let grid = GridSpec::default_for(&cfg);
    let (a, b) = ((900, 300), (1200, 1100));
    let a1 = joint_steering(&cfg, grid.theta_axis[a.0], grid.r_axis[a.1]);
    let a2 = joint_steering(&cfg, grid.theta_axis[b.0], grid.r_axis[b.1]);
    assert!(a1.dotc(&a2).norm() < 1e-12);
    let s1 = DMatrix::from_row_slice(1, 2, &[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]);
    let s2 = DMatrix::from_row_slice(1, 2, &[Complex64::new(0.5, 0.1), Complex64::new(-0.5, -0.1)]);
    let x = &a1 * s1 + &a2 * s2;
    let res = omp(&cfg, &x, &grid, 2).unwrap();
    assert_eq!(res.atoms, vec![a, b]);
    assert!(res.residual_norms.last().unwrap() / res.residual_norms[0] < 1e-10);
    assert!(res.residual_norms.windows(2).all(|w| w[1] <= w[0]));
}

fn anm_history_and_certificate(seed: u64) {
    let cfg = RadarConfig::table1();
    let t = Target::from_degrees(30.0, 6000.0);
    let x = draw_stack(&cfg, &[t], &OffsetModel::new(0.0, 0.0, seed), 10.0, 40).unwrap();
    let s0 = white_noise_variance(&cfg, &[t], 10.0);
    let d = anm_denoise(&x, cfg.n_rx, cfg.n_tx, default_tau(&x, s0), &AnmOptions::default()).unwrap();
    assert!(d.converged);
    assert!(d.min_eigenvalue >= -1e-8 * d.block_norm);
    // ADMM is not a descent method; only the second half must be monotone.
    let h = &d.objective_history;
    let tail = &h[h.len() / 2..];
    assert!(tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)), "history tail not monotone");
    assert!((&x - &d.x_hat).norm_squared() <= default_tau(&x, s0) * (1.0 + 1e-6));
}

#[test]
fn anm_history_tail_is_monotone_and_certificate_holds() {
    for seed in 0..6 {
        anm_history_and_certificate(seed);
    }
}

#[test]
fn anm_is_equivariant_to_scaling() {
    let cfg = RadarConfig::table1();
    let t = Target::from_degrees(30.0, 6000.0);
    let x = draw_stack(&cfg, &[t], &OffsetModel::new(0.0, 0.0, 3), 10.0, 30).unwrap();
    let tau = default_tau(&x, white_noise_variance(&cfg, &[t], 10.0));
    let k = 1e4;
    let a = anm_denoise(&x, cfg.n_rx, cfg.n_tx, tau, &AnmOptions::default()).unwrap();
    let b = anm_denoise(&(&x * Complex64::new(k, 0.0)), cfg.n_rx, cfg.n_tx, tau * k * k, &AnmOptions::default()).unwrap();
    let rel = (&a.x_hat * Complex64::new(k, 0.0) - &b.x_hat).norm() / b.x_hat.norm();
    assert!(rel < 1e-6, "relative mismatch {rel}");
}

#[test]
fn every_method_runs_through_dispatcher() {
    let cfg = RadarConfig::table1();
    let grid = small_grid();
    let t = Target::new(grid.theta_axis[20], grid.r_axis[20], Complex64::new(1.0, 0.0));
    let x = draw_stack(&cfg, &[t], &OffsetModel::none(), 30.0, 30).unwrap();
    let opts = EstimatorOptions { sigma0_sq: white_noise_variance(&cfg, &[t], 30.0), ..EstimatorOptions::default() };
    for m in Method::ALL {
        let est = run_method(m, &cfg, &x, &grid, 1, &opts).unwrap();
        assert_eq!(est.len(), 1, "{m}");
        assert_eq!(est[0].method, m);
        assert!((est[0].theta_deg - 30.0).abs() <= 0.5 + 1e-9, "{m}: {}", est[0].theta_deg);
        assert_eq!(est[0].r_m.is_some(), m.estimates_range());
        assert_eq!(m.name().parse::<Method>().unwrap(), m);
    }
    assert!("music".parse::<Method>().is_err());
}

#[test]
fn too_many_sources_is_a_domain_error() {
    let cfg = RadarConfig::table1();
    let x = draw_stack(&cfg, &[Target::from_degrees(30.0, 6000.0)], &OffsetModel::none(), 10.0, 20).unwrap();
    assert!(music_2d(&cfg, MusicInput::Stack(&x), &small_grid(), 16).is_err());
    assert!(music_2d(&cfg, MusicInput::Stack(&x), &small_grid(), 0).is_err());
    assert!(music_rows(&cfg, &x, &small_grid().theta_axis, 4).is_err());
    assert!(build_c4(&x.columns(0, 1).clone_owned()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn noiseless_grid_targets_are_exact(ti in 1usize..40, ri in 1usize..40, phase in 0.0..std::f64::consts::TAU) {
        let cfg = RadarConfig::table1();
        let grid = small_grid();
        let t = Target::new(grid.theta_axis[ti], grid.r_axis[ri], Complex64::from_polar(1.0, phase));
        let x = draw_stack(&cfg, &[t], &OffsetModel::none(), f64::INFINITY, 4).unwrap();
        let (s, _) = music_2d(&cfg, MusicInput::Stack(&x), &grid, 1).unwrap();
        prop_assert_eq!(s.peak_index, (ti, ri));
        let (s, _) = music_c4(&cfg, &build_c4(&x).unwrap(), &grid, 1).unwrap();
        prop_assert_eq!(s.peak_index, (ti, ri));
        let (s, _) = music_rows(&cfg, &x, &grid.theta_axis, 1).unwrap();
        prop_assert_eq!(s.peak_index, ti);
        let o = omp(&cfg, &x, &grid, 1).unwrap();
        prop_assert_eq!(o.atoms[0], (ti, ri));
        let amp = Complex64::new(o.estimates[0].amplitude_re, o.estimates[0].amplitude_im);
        prop_assert!((amp - t.beta(&cfg)).norm() < 1e-9 * t.beta(&cfg).norm());
    }

    #[test]
    fn estimates_ignore_data_scale(seed in any::<u64>(), exp in -8i32..8) {
        let cfg = RadarConfig::table1();
        let grid = small_grid();
        let x = draw_stack(&cfg, &[Target::from_degrees(31.0, 6100.0)], &OffsetModel::new(300.0, 300.0, seed), 15.0, 20).unwrap();
        let y = &x * Complex64::new(10f64.powi(exp), 0.0);
        let (a, _) = music_2d(&cfg, MusicInput::Stack(&x), &grid, 1).unwrap();
        let (b, _) = music_2d(&cfg, MusicInput::Stack(&y), &grid, 1).unwrap();
        prop_assert_eq!(a.peak_index, b.peak_index);
        prop_assert_eq!(omp(&cfg, &x, &grid, 1).unwrap().atoms, omp(&cfg, &y, &grid, 1).unwrap().atoms);
    }
}
