use fdamimo::estimators::{Estimate, Method};
use fdamimo::experiments::{GridMode, Scenario, Sweep, SweepAxis, TargetSpec};
use fdamimo::model::{draw_pulse, OffsetModel, RadarConfig, SignalMatrix, Target};
use fdamimo::noise_stats::{equalized_snr, SnrMode};
use fdamimo::quadrature::QuadOptions;
use proptest::prelude::*;

#[test]
fn infinite_snr_round_trips() {
    let s = Scenario { snr_db: None, ..Scenario::table1() };
    let text = serde_json::to_string(&s).unwrap();
    assert_eq!(serde_json::from_str::<Scenario>(&text).unwrap(), s);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["snr_db"].is_null());
    let from_string: Scenario = serde_json::from_str(r#"{"snr_db": "inf"}"#).unwrap();
    assert_eq!(from_string.snr(), f64::INFINITY);
}

#[test]
fn offset_free_report_serializes_inf() {
    let cfg = RadarConfig::table1();
    let rep = equalized_snr(&cfg, &Target::from_degrees(30.0, 6000.0), &OffsetModel::none(), SnrMode::Model, 0, QuadOptions::default())
        .unwrap();
    let text = serde_json::to_string(&rep).unwrap();
    assert!(text.contains("\"inf\""), "{text}");
    assert_eq!(serde_json::from_str::<fdamimo::noise_stats::EqualizedSnrReport>(&text).unwrap(), rep);
}

#[test]
fn unknown_fields_are_rejected() {
    assert!(serde_json::from_str::<RadarConfig>(r#"{"n_tx": 4, "n_txx": 4}"#).is_err());
    assert!(serde_json::from_str::<Scenario>(r#"{"trials": 4}"#).is_err());
    let partial: RadarConfig = serde_json::from_str(r#"{"delta_f": 1000.0}"#).unwrap();
    assert_eq!(partial, RadarConfig::table1().with_delta_f(1e3));
}

#[test]
fn nan_amplitude_survives() {
    let e = Estimate {
        theta_deg: 30.0,
        r_m: None,
        amplitude_re: f64::NAN,
        amplitude_im: f64::NAN,
        method: Method::MusicRows,
        diagnostics: Default::default(),
    };
    let back: Estimate = serde_json::from_str(&serde_json::to_string(&e).unwrap()).unwrap();
    assert!(back.amplitude_re.is_nan() && back.r_m.is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn signal_matrix_round_trips(seed in any::<u64>(), snr in -10.0..40.0f64) {
        let cfg = RadarConfig::table1();
        let y = draw_pulse(&cfg, &[Target::from_degrees(12.0, 3000.0)], &OffsetModel::new(200.0, 200.0, seed), snr, 1).unwrap();
        let back: SignalMatrix = serde_json::from_str(&serde_json::to_string(&y).unwrap()).unwrap();
        prop_assert_eq!(back, y);
    }

    #[test]
    fn scenario_round_trips(
        theta in -60.0..60.0f64,
        r in 100.0..14000.0f64,
        seed in any::<u64>(),
        snr in proptest::option::of(-10.0..40.0f64),
        window in any::<bool>(),
        values in proptest::collection::vec(0.0..0.1f64, 1..5),
    ) {
        let s = Scenario {
            targets: vec![TargetSpec::new(theta, r)],
            seed,
            snr_db: snr,
            grid: if window { GridMode::Window { theta_half_deg: 2.0, r_half_m: 500.0 } } else { GridMode::Full },
            sweep: Sweep { axis: SweepAxis::SigmaROverDf, values },
            estimators: Method::ALL.to_vec(),
            ..Scenario::table1()
        };
        let back: Scenario = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        prop_assert_eq!(back, s);
    }
}
