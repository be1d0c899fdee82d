use std::f64::consts::PI;

use super::*;
use crate::device::{derive_couplings, mhz_to_rad, DeviceParams};
use crate::hamiltonian::{h_stage1_resonant, jc_a};
use crate::qspace::{expectation, Level};

fn small() -> HilbertSpace {
    HilbertSpace::new(2, 2).unwrap()
}

fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Mixed, coherent test state with support on every level.
fn generic_rho(space: HilbertSpace) -> DensityMatrix {
    let n = space.total_dim();
    let amps = DVector::from_fn(n, |i, _| C64::new(1.0 + i as f64 * 0.3, 0.2 * (i as f64).sin()));
    let psi = Ket::from_amplitudes(space, &amps / C64::new(amps.norm(), 0.0)).unwrap();
    let other = space.basis_ket(Level::F, 1, 0).unwrap();
    DensityMatrix::mixture(&[(0.7, &psi), (0.3, &other)]).unwrap()
}

#[test]
fn rhs_vanishes_without_dynamics() {
    let s = small();
    let rho = generic_rho(s);
    let out = lindblad_rhs(&s.zero_operator(), &rho, &CollapseSet::none(s)).unwrap();
    assert_eq!(max_diff(&out, &DMatrix::zeros(12, 12)), 0.0);
}

#[test]
fn photon_decay_rate_of_single_photon() {
    let s = small();
    let mut p = DeviceParams::standard(1.0);
    p.kappa_a = 2.5e5;
    let c = CollapseSet::from_params(s, &p).only("kappa_a");
    let rho = DensityMatrix::pure(&s.basis_ket(Level::G, 1, 0).unwrap());
    let drho = lindblad_rhs(&s.zero_operator(), &rho, &c).unwrap();
    let l = Ladder::new(s);
    let dn = expectation(&l.num_a(), &DensityMatrix { space: s, mat: drho }).unwrap();
    assert!((dn.re + p.kappa_a).abs() < 1e-9 * p.kappa_a);
}

#[test]
fn dephasing_kills_coherence_at_half_rate() {
    let s = small();
    let mut p = DeviceParams::standard(1.0);
    p.gamma_phi_e = 4e5;
    let c = CollapseSet::from_params(s, &p).only("gamma_phi_e");
    let g = s.basis_ket(Level::G, 0, 0).unwrap();
    let e = s.basis_ket(Level::E, 0, 0).unwrap();
    let plus = Ket::from_amplitudes(s, (&g.amps + &e.amps) / C64::new(2f64.sqrt(), 0.0)).unwrap();
    let rho = DensityMatrix::pure(&plus);
    let drho = lindblad_rhs(&s.zero_operator(), &rho, &c).unwrap();
    let (ig, ie) = (s.index(Level::G, 0, 0), s.index(Level::E, 0, 0));
    let coh = rho.mat[(ig, ie)];
    assert!((drho[(ig, ie)] + 0.5 * p.gamma_phi_e * coh).norm() < 1e-6);
    assert!(drho[(ig, ig)].norm() < 1e-9);
    assert!(drho[(ie, ie)].norm() < 1e-9);
}

#[test]
fn sparse_rhs_matches_dense_rhs() {
    let space = HilbertSpace::new(3, 3).unwrap();
    let mut p = DeviceParams::standard(mhz_to_rad(2.0));
    p.gab_ratio = 2.0;
    // exaggerate rates so the dissipator is not swamped by H
    p.kappa_a = 1e7;
    p.kappa_b = 2e7;
    p.gamma_fe = 3e7;
    p.gamma_eg = 4e7;
    p.gamma_phi_f = 5e7;
    p.gamma_phi_e = 6e7;
    let d = derive_couplings(&p);
    let h = crate::hamiltonian::h_stage1_pulse(space, &d);
    let c = CollapseSet::from_params(space, &p);
    let rho = generic_rho(space);
    let t = 0.77e-9;

    let dense = lindblad_rhs(&h.evaluate(t), &rho, &c).unwrap();
    let gen = sparse::CompiledGenerator::new(&h, Some(&c));
    let n = space.total_dim();
    let mut vals = gen.values_buffer();
    gen.eval_at(t, &mut vals);
    let mut scratch = vec![C64::new(0.0, 0.0); n * n];
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    gen.lindblad_rhs(&vals, &to_row_major(&rho.mat), &mut scratch, &mut out);
    let sparse = from_row_major(n, &out);
    let scale = dense.iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(max_diff(&dense, &sparse) < 1e-12 * scale);

    // Hermitian and traceless
    assert!(crate::qspace::hermiticity_error(&dense) < 1e-10);
    assert!(dense.trace().norm() < 1e-10 * scale);
}

#[test]
fn zero_duration_is_identity() {
    let s = small();
    let rho = generic_rho(s);
    let h = jc_a(s, mhz_to_rad(2.0));
    let out = evolve_segment(&h, &rho, &CollapseSet::none(s), 0.0, 0.0, &IntegratorConfig::default()).unwrap();
    assert_eq!(out.rho, rho);
    let oracle = propagate_expm_oracle(&h, &rho, &CollapseSet::none(s), 0.0).unwrap();
    assert_eq!(oracle, rho);
}

#[test]
fn vacuum_rabi_half_and_full_cycle() {
    let s = HilbertSpace::new(3, 2).unwrap();
    let g = mhz_to_rad(1.8);
    let h = jc_a(s, g);
    let rho0 = DensityMatrix::pure(&s.basis_ket(Level::E, 0, 0).unwrap());
    let cfg = IntegratorConfig::default();
    let c = CollapseSet::none(s);

    let half = evolve_segment(&h, &rho0, &c, 0.0, PI / (2.0 * g), &cfg).unwrap();
    let target = s.basis_ket(Level::G, 1, 0).unwrap();
    let f = expectation(&Operator::from_matrix(s, &target.amps * target.amps.adjoint()).unwrap(), &half.rho)
        .unwrap()
        .re;
    assert!(f > 1.0 - 1e-8, "F = {f}");

    let psi0 = s.basis_ket(Level::E, 0, 0).unwrap();
    let full = unitary_evolve(&h, &psi0, 0.0, PI / g, &cfg).unwrap();
    assert!((full.amplitude(Level::E, 0, 0) + C64::new(1.0, 0.0)).norm() < 1e-8);
}

#[test]
fn oracle_reproduces_photon_decay_law() {
    let s = small();
    let mut p = DeviceParams::standard(1.0);
    p.kappa_a = 1e6;
    let c = CollapseSet::from_params(s, &p).only("kappa_a");
    let rho0 = DensityMatrix::pure(&s.basis_ket(Level::E, 1, 0).unwrap());
    let t = 0.8e-6;
    let out = propagate_expm_oracle(&TimeDepOperator::zero(s), &rho0, &c, t).unwrap();
    let n = expectation(&Ladder::new(s).num_a(), &out).unwrap().re;
    assert!((n - (-p.kappa_a * t).exp()).abs() < 1e-12);
}

#[test]
fn oracle_rejects_rotating_and_large() {
    let space = HilbertSpace::new(3, 3).unwrap();
    let d = derive_couplings(&DeviceParams::standard(mhz_to_rad(1.0)));
    let h = h_stage1_resonant(space, &d);
    let rho = generic_rho(space);
    assert!(matches!(
        propagate_expm_oracle(&h, &rho, &CollapseSet::none(space), 1e-9),
        Err(Error::Oracle(_))
    ));
    let big = HilbertSpace::new(4, 4).unwrap();
    let rho = generic_rho(big);
    assert!(matches!(
        propagate_expm_oracle(&TimeDepOperator::zero(big), &rho, &CollapseSet::none(big), 1e-9),
        Err(Error::Oracle(_))
    ));
}

#[test]
fn rk4_matches_oracle_with_all_channels() {
    let s = small();
    let mut p = DeviceParams::standard(mhz_to_rad(2.0));
    p.kappa_a = 3e6;
    p.kappa_b = 2e6;
    p.gamma_fe = 4e6;
    p.gamma_eg = 1e6;
    p.gamma_phi_f = 2e6;
    p.gamma_phi_e = 3e6;
    let c = CollapseSet::from_params(s, &p);
    let h = jc_a(s, p.g);
    let rho0 = generic_rho(s);
    let t = 150e-9;
    let rk = evolve_segment(&h, &rho0, &c, 0.0, t, &IntegratorConfig::default()).unwrap();
    let ex = propagate_expm_oracle(&h, &rho0, &c, t).unwrap();
    assert!(max_diff(&rk.rho.mat, &ex.mat) < 1e-6);
    assert!(rk.trace_drift.abs() < 1e-12);
}

#[test]
fn photon_number_never_grows_under_pure_decay() {
    let s = HilbertSpace::new(3, 3).unwrap();
    let mut p = DeviceParams::standard(1.0);
    p.kappa_a = 2e6;
    p.kappa_b = 5e6;
    let c = CollapseSet {
        space: s,
        channels: CollapseSet::from_params(s, &p)
            .channels
            .into_iter()
            .filter(|ch| ch.name.starts_with("kappa"))
            .collect(),
    };
    let l = Ladder::new(s);
    let total = l.num_a().add(&l.num_b()).unwrap();
    let mut rho = generic_rho(s);
    let mut last = expectation(&total, &rho).unwrap().re;
    for _ in 0..10 {
        rho = evolve_segment(&TimeDepOperator::zero(s), &rho, &c, 0.0, 30e-9, &IntegratorConfig::default())
            .unwrap()
            .rho;
        let now = expectation(&total, &rho).unwrap().re;
        assert!(now <= last + 1e-14);
        last = now;
    }
}

#[test]
fn step_halving_on_rotating_hamiltonian() {
    let space = HilbertSpace::new(3, 3).unwrap();
    let mut p = DeviceParams::standard(mhz_to_rad(3.0));
    p.gab_ratio = 2.0;
    let d = derive_couplings(&p);
    let h = h_stage1_resonant(space, &d);
    let c = CollapseSet::from_params(space, &p);
    let rho0 = DensityMatrix::pure(&space.basis_ket(Level::E, 0, 0).unwrap());
    let coarse = IntegratorConfig::default();
    let fine = IntegratorConfig {
        samples_per_fastest_period: 80,
        ..coarse.clone()
    };
    let t = 40e-9;
    let a = evolve_segment(&h, &rho0, &c, 0.0, t, &coarse).unwrap();
    let b = evolve_segment(&h, &rho0, &c, 0.0, t, &fine).unwrap();
    assert_eq!(b.steps, 2 * a.steps);
    assert!(max_diff(&a.rho.mat, &b.rho.mat) < 1e-7);
    assert!(a.rho.min_eigenvalue() > -1e-9);
}

#[test]
fn step_plan_rules() {
    let space = HilbertSpace::new(2, 2).unwrap();
    let cfg = IntegratorConfig::default();
    let (steps, dt) = cfg.step_plan(&TimeDepOperator::zero(space), 10e-9).unwrap();
    assert_eq!(steps, 100);
    assert!((dt - 1e-10).abs() < 1e-22);
    let d = derive_couplings(&DeviceParams::standard(mhz_to_rad(1.0)));
    let (_, dt) = cfg.step_plan(&h_stage1_resonant(space, &d), 100e-9).unwrap();
    // fastest term rotates at 2.5 GHz: 40 samples per period ≈ 10 ps
    assert!(dt <= 1e-11 + 1e-24 && dt > 0.99e-11);
    let bad = IntegratorConfig {
        samples_per_fastest_period: 10,
        ..cfg.clone()
    };
    assert!(bad.step_plan(&TimeDepOperator::zero(space), 1e-9).is_err());
    let floor = IntegratorConfig {
        hard_dt_floor: 5e-11,
        ..cfg
    };
    assert!(floor.step_plan(&h_stage1_resonant(space, &d), 100e-9).is_err());
}

#[test]
fn unitary_evolution_keeps_norm_and_idles() {
    let space = HilbertSpace::new(3, 3).unwrap();
    let mut p = DeviceParams::standard(mhz_to_rad(3.0));
    p.gab_ratio = 1.0;
    let d = derive_couplings(&p);
    let psi0 = space.basis_ket(Level::F, 0, 2).unwrap();
    let cfg = IntegratorConfig::default();
    let out = unitary_evolve(&h_stage1_resonant(space, &d), &psi0, 3e-9, 50e-9, &cfg).unwrap();
    assert!((out.norm() - 1.0).abs() < 1e-8);
    let idle = unitary_evolve(&TimeDepOperator::zero(space), &psi0, 0.0, 50e-9, &cfg).unwrap();
    assert_eq!(idle, psi0);
}
