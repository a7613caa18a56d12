use extropy_core::complexity::{complexity, Backend};
use extropy_core::covering::{build_covering, encode_orbit};
use extropy_core::ergodic::AdmissibleSequence;
use extropy_core::estimators::*;
use extropy_core::experiment::{tables, Command, ExperimentConfig};
use extropy_core::lattice::*;
use extropy_core::{Error, Window};

fn w(lo: i64, hi: i64) -> Window {
    Window::new(lo, hi).unwrap()
}

#[test]
fn coded_word_of_a_translated_state_matches_the_shifted_window() {
    let sys = SystemDefinition::logistic_cml(3.9, 0.2);
    let s = MeasureSampler::uniform(&sys, 21);
    let f = sample_for_window(&s, &sys, &w(0, 8), 31, HaloMode::LightCone);
    let moved = translate(&f, 3);
    let a = encode_orbit(&f, &sys, &build_covering(w(3, 5), 0.25, 0).unwrap(), 32).unwrap();
    let b = encode_orbit(&moved, &sys, &build_covering(w(0, 2), 0.25, 0).unwrap(), 32).unwrap();
    assert_eq!(a.symbols, b.symbols);
}

#[test]
fn evolution_commutes_with_translation() {
    let sys = SystemDefinition::elementary_ca(110);
    let s = MeasureSampler::uniform(&sys, 4);
    let f = sample_initial(&s, &w(-20, 20), HaloPolicy::Periodic);
    let a = translate(&evolve(&f, &sys, 7).unwrap(), 5);
    let b = evolve(&translate(&f, 5), &sys, 7).unwrap();
    assert_eq!(
        a.values_on(&w(-10, 10), 53).unwrap(),
        b.values_on(&w(-10, 10), 53).unwrap()
    );
}

#[test]
fn identity_system_has_vanishing_rates_everywhere() {
    let sys = SystemDefinition::identity();
    let s = MeasureSampler::uniform(&sys, 2);
    let e = entropy_pipeline(&s, &sys, 0.25, &[w(0, 1), w(0, 2)], &[1, 2, 3, 4], 64).unwrap();
    assert_eq!(e.rate(), 0.0);
    let p = RateParams {
        n_grid: (1..=4).map(|i| i << 12).collect(),
        ..RateParams::default()
    };
    let v = volume_rate(
        &s,
        &sys,
        0.25,
        &Backend::default(),
        &AdmissibleSequence::Growing,
        &[1, 2],
        1,
        &p,
    )
    .unwrap();
    assert!(v.rate().abs() < 0.05, "{}", v.rate());
}

#[test]
fn coarse_precision_sees_no_entropy() {
    let sys = SystemDefinition::logistic_cml(4.0, 0.1);
    let e = sampled_entropy(
        &MeasureSampler::uniform(&sys, 3),
        &sys,
        1.5,
        &[w(0, 1), w(0, 2)],
        &[1, 2, 3, 4],
        32,
    )
    .unwrap();
    assert_eq!(e.rate(), 0.0);
    assert!(e
        .windows
        .iter()
        .all(|x| x.counts.iter().all(|c| c.log2_lower == 0.0)));
}

#[test]
fn short_halos_are_refused() {
    let sys = SystemDefinition::elementary_ca(30);
    let s = MeasureSampler::uniform(&sys, 5);
    let f = sample_initial(&s, &w(0, 4), HaloPolicy::FixedHalo { width: 0 });
    let cov = build_covering(w(0, 4), 0.5, 0).unwrap();
    assert!(matches!(
        encode_orbit(&f, &sys, &cov, 3),
        Err(Error::InsufficientHalo { .. })
    ));
    // the light-cone pad is exactly wide enough
    let g = sample_for_window(&s, &sys, &w(0, 4), 2, HaloMode::LightCone);
    assert!(encode_orbit(&g, &sys, &cov, 3).is_ok());
}

#[test]
fn one_bit_tape_word_compresses_at_about_one_bit_per_symbol() {
    let sys = SystemDefinition::bit_tape(1);
    let f = sample_initial(
        &MeasureSampler::uniform(&sys, 6),
        &w(0, 1),
        HaloPolicy::Periodic,
    );
    let cov = build_covering(w(0, 1), 0.5, 0).unwrap().with_tape_bits(1);
    let n = 1 << 16;
    let k = complexity(
        &encode_orbit(&f, &sys, &cov, n).unwrap(),
        &Backend::default(),
    )
    .unwrap();
    let rate = k / n as f64;
    assert!((1.0..1.2).contains(&rate), "{rate}");
}

#[test]
fn saturation_reaches_the_entropy_table() {
    let cfg = ExperimentConfig::from_json(
        r#"{
            "seed": 1,
            "system": {"kind": "elementary_ca", "rule": 30},
            "eps": [0.5],
            "windows": [[0, 2], [0, 3]],
            "n_grid": [2, 4, 6, 8],
            "ensemble": 16
        }"#,
    )
    .unwrap();
    let ts = tables(Command::Entropy, &cfg).unwrap();
    let counts = ts.iter().find(|t| t.name == "entropy_counts.csv").unwrap();
    let col = counts
        .header
        .iter()
        .position(|h| *h == "saturated")
        .unwrap();
    assert!(counts.rows.iter().any(|r| r[col] == "true"));
    let fits = ts.iter().find(|t| t.name == "entropy.csv").unwrap();
    let col = fits
        .header
        .iter()
        .position(|h| *h == "ensemble_limited")
        .unwrap();
    assert!(fits.rows.iter().all(|r| r[col] == "true"));
}
