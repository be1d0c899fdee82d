use noon_core::device::{mhz_to_rad, DeviceParams};
use noon_core::experiments::{
    evaluate_grid, evaluate_point, golden_section_max, optimize_g, run_fidelity, GridPoint,
    ResultRow,
};
use noon_core::lindblad::IntegratorConfig;
use noon_core::protocol::{run_protocol, Mode};
use proptest::prelude::*;

fn full_fidelity(n: usize, p: &DeviceParams) -> f64 {
    let res = run_protocol(n, p, &IntegratorConfig::default(), Mode::Full).unwrap();
    assert!(res.flags().is_empty(), "{:?}", res.flags());
    run_fidelity(&res).unwrap()
}

fn row_bits(r: &ResultRow) -> Vec<u64> {
    [r.g, r.t, r.fidelity, r.tau, r.trace_drift, r.min_eig, r.top_population]
        .iter()
        .map(|x| x.to_bits())
        .collect()
}

#[test]
fn parallel_grid_matches_serial_bit_for_bit() {
    let cfg = IntegratorConfig::default();
    let mut points = Vec::new();
    for n in 1..=3 {
        for ratio in [0.0, 2.0] {
            let mut p = DeviceParams::standard_for_n(n).unwrap();
            p.gab_ratio = ratio;
            points.push(GridPoint { n, params: p });
        }
    }
    let par = evaluate_grid(&points, &cfg, Mode::Ideal);
    let ser: Vec<ResultRow> = points.iter().map(|p| evaluate_point(p, &cfg, Mode::Ideal)).collect();
    assert_eq!(par.rows.len(), ser.len());
    for (a, b) in par.rows.iter().zip(&ser) {
        assert_eq!((a.n, a.gab_ratio), (b.n, b.gab_ratio));
        assert_eq!(row_bits(a), row_bits(b));
    }

    let full = [GridPoint { n: 1, params: DeviceParams::standard_for_n(1).unwrap() }];
    let a = evaluate_grid(&full, &cfg, Mode::Full);
    let b = evaluate_grid(&full, &cfg, Mode::Full);
    assert_eq!(row_bits(&a.rows[0]), row_bits(&b.rows[0]));
}

#[test]
fn longer_coherence_never_hurts() {
    let base = DeviceParams::standard_for_n(1).unwrap();
    let f: Vec<f64> = [2e-6, 5e-6, 20e-6]
        .iter()
        .map(|&t| full_fidelity(1, &base.clone().with_coherence_time(t)))
        .collect();
    assert!(f[0] < f[1] && f[1] < f[2], "{f:?}");
}

#[test]
fn doubling_any_rate_lowers_fidelity() {
    let base = DeviceParams::standard_for_n(1).unwrap();
    let f0 = full_fidelity(1, &base);
    type Bump = (&'static str, fn(&mut DeviceParams));
    let bumps: [Bump; 6] = [
        ("gamma_phi_f", |p| p.gamma_phi_f *= 2.0),
        ("gamma_phi_e", |p| p.gamma_phi_e *= 2.0),
        ("gamma_fe", |p| p.gamma_fe *= 2.0),
        ("gamma_eg", |p| p.gamma_eg *= 2.0),
        ("kappa_a", |p| p.kappa_a *= 2.0),
        ("kappa_b", |p| p.kappa_b *= 2.0),
    ];
    for (name, bump) in bumps {
        let mut p = base.clone();
        bump(&mut p);
        let f = full_fidelity(1, &p);
        assert!(f < f0, "{name}: {f} !< {f0}");
    }
}

#[test]
fn coherent_errors_remain_without_dissipation() {
    let mut p = DeviceParams::standard_for_n(1).unwrap();
    p.gamma_phi_f = 0.0;
    p.gamma_phi_e = 0.0;
    p.gamma_fe = 0.0;
    p.gamma_eg = 0.0;
    p.kappa_a = 0.0;
    p.kappa_b = 0.0;
    let f = full_fidelity(1, &p);
    let with_loss = full_fidelity(1, &DeviceParams::standard_for_n(1).unwrap());
    assert!(f < 0.999, "{f}");
    assert!(f > with_loss, "{f} vs {with_loss}");
}

#[test]
fn optimizer_beats_the_bracket_ends() {
    let (lo, hi) = (mhz_to_rad(0.5), mhz_to_rad(5.0));
    let base = DeviceParams::standard_for_n(1).unwrap();
    let cfg = IntegratorConfig::default();
    let opt = optimize_g(1, &base, &cfg, Mode::Full, (lo, hi), mhz_to_rad(0.5)).unwrap();
    assert!(opt.g_opt > lo && opt.g_opt < hi);
    assert!(opt.evaluations.iter().all(|&(_, f)| f <= opt.f_opt));
    for g in [lo, hi] {
        let mut p = base.clone();
        p.g = g;
        assert!(full_fidelity(1, &p) <= opt.f_opt);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn golden_section_finds_unimodal_peaks(peak in 0.6f64..4.9, width in 0.2f64..5.0) {
        let f = |x: f64| Ok(-((x - peak) / width).powi(2));
        let (x, y, evals) = golden_section_max(f, 0.5, 5.0, 1e-3).unwrap();
        prop_assert!((x - peak).abs() < 2e-3);
        prop_assert!(evals.iter().all(|e| e.1 <= y));
    }
}
