//! Interaction-picture Hamiltonians for each kind of protocol segment, written
//! as a static Hermitian part plus terms rotating at fixed detunings.
//!
//! ħ = 1: all entries are angular frequencies.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::device::DerivedCouplings;
use crate::error::{Error, Result};
use crate::qspace::{HilbertSpace, Ladder, Level, Operator};

/// Phase of every drive in the protocol.
pub const DRIVE_PHASE: f64 = -FRAC_PI_2;

/// Contributes `op · e^{i(freq·t + phase)} + h.c.` to the Hamiltonian.
#[derive(Clone, Debug)]
pub struct RotatingTerm {
    pub op: Operator,
    pub freq: f64,
    pub phase: f64,
}

impl RotatingTerm {
    pub fn coefficient(&self, t: f64) -> C64 {
        C64::from_polar(1.0, self.freq * t + self.phase)
    }
}

#[derive(Clone, Debug)]
pub struct TimeDepOperator {
    pub static_part: Operator,
    pub terms: Vec<RotatingTerm>,
}

impl TimeDepOperator {
    pub fn new_static(static_part: Operator) -> Self {
        Self {
            static_part,
            terms: Vec::new(),
        }
    }

    pub fn zero(space: HilbertSpace) -> Self {
        Self::new_static(space.zero_operator())
    }

    pub fn space(&self) -> HilbertSpace {
        self.static_part.space
    }

    pub fn is_static(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest `|freq|` among the rotating terms, `None` if static.
    pub fn max_frequency(&self) -> Option<f64> {
        self.terms
            .iter()
            .map(|t| t.freq.abs())
            .filter(|&f| f > 0.0)
            .fold(None, |acc, f| Some(acc.map_or(f, |a: f64| a.max(f))))
    }

    pub fn evaluate(&self, t: f64) -> Operator {
        let mut mat = self.static_part.mat.clone();
        for term in &self.terms {
            let c = term.coefficient(t);
            mat += &term.op.mat * c;
            mat += term.op.mat.adjoint() * c.conj();
        }
        Operator {
            space: self.space(),
            mat,
        }
    }

    /// Adds `op + op†` to the static part.
    fn add_static_pair(&mut self, op: &Operator) {
        self.static_part.mat += &op.mat;
        self.static_part.mat += op.mat.adjoint();
    }

    fn push(&mut self, coupling: f64, op: Operator, freq: f64, phase: f64) {
        if coupling == 0.0 {
            return;
        }
        self.terms.push(RotatingTerm {
            op: op.scale(C64::new(coupling, 0.0)),
            freq,
            phase,
        });
    }

    fn extend(&mut self, other: TimeDepOperator) -> Result<()> {
        if other.space() != self.space() {
            return Err(Error::SpaceMismatch);
        }
        self.static_part.mat += other.static_part.mat;
        self.terms.extend(other.terms);
        Ok(())
    }
}

/// Resonator-a swap stage: `g_eg` resonant on g↔e plus the off-resonant
/// couplings of a to e↔f, of b to both transitions, and a–b crosstalk.
pub fn h_stage1_resonant(space: HilbertSpace, d: &DerivedCouplings) -> TimeDepOperator {
    let l = Ladder::new(space);
    let s_eg = l.sigma(Level::E, Level::G);
    let s_fe = l.sigma(Level::F, Level::E);
    let mut h = jc_a(space, d.g_eg);
    h.push(d.gt_fe, l.a.mul(&s_fe).unwrap(), d.delta1, 0.0);
    h.push(d.mu_eg, l.b.mul(&s_eg).unwrap(), d.delta_eg, 0.0);
    h.push(d.mu_fe, l.b.mul(&s_fe).unwrap(), d.delta_fe, 0.0);
    push_crosstalk(&mut h, &l, d);
    h
}

/// Stage-1 g→e pulse at `ω_eg`, with the spectator drive of e↔f and all of
/// the stage-1 resonator couplings still present.
pub fn h_stage1_pulse(space: HilbertSpace, d: &DerivedCouplings) -> TimeDepOperator {
    let l = Ladder::new(space);
    let mut h = pulse(space, Level::G, Level::E, d.omega_eg_rabi, DRIVE_PHASE);
    h.push(
        d.omegat_fe_rabi,
        l.sigma(Level::E, Level::F),
        -d.delta2,
        DRIVE_PHASE,
    );
    h.extend(h_stage1_resonant(space, d)).unwrap();
    h
}

/// Resonator-b swap stage: `g_fe` resonant on e↔f plus the off-resonant
/// couplings of b to g↔e, of a to both transitions, and a–b crosstalk.
pub fn h_stage2_resonant(space: HilbertSpace, d: &DerivedCouplings) -> TimeDepOperator {
    let l = Ladder::new(space);
    let s_eg = l.sigma(Level::E, Level::G);
    let s_fe = l.sigma(Level::F, Level::E);
    let mut h = jc_b(space, d.g_fe);
    h.push(d.gt_eg, l.b.mul(&s_eg).unwrap(), d.delta3, 0.0);
    h.push(d.mut_eg, l.a.mul(&s_eg).unwrap(), d.deltat_eg, 0.0);
    h.push(d.mut_fe, l.a.mul(&s_fe).unwrap(), d.deltat_fe, 0.0);
    push_crosstalk(&mut h, &l, d);
    h
}

/// Which transition a stage-2 pulse is resonant with.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Stage2Pulse {
    /// e→f pump at `ω'_fe`; spectator g↔e rotates at `−δ₄`.
    Fe,
    /// g→e pump at `ω'_eg` (last step); spectator e↔f rotates at `+δ₄`.
    Eg,
}

pub fn h_stage2_pulse(
    space: HilbertSpace,
    d: &DerivedCouplings,
    which: Stage2Pulse,
) -> TimeDepOperator {
    let l = Ladder::new(space);
    let mut h = match which {
        Stage2Pulse::Fe => {
            let mut h = pulse(space, Level::E, Level::F, d.omega_fe_rabi, DRIVE_PHASE);
            h.push(
                d.omegat_eg_rabi,
                l.sigma(Level::G, Level::E),
                -d.delta4,
                DRIVE_PHASE,
            );
            h
        }
        Stage2Pulse::Eg => {
            let mut h = pulse(space, Level::G, Level::E, d.omega_eg_rabi, DRIVE_PHASE);
            h.push(
                d.omegat_fe_rabi,
                l.sigma(Level::E, Level::F),
                d.delta4,
                DRIVE_PHASE,
            );
            h
        }
    };
    h.extend(h_stage2_resonant(space, d)).unwrap();
    h
}

fn push_crosstalk(h: &mut TimeDepOperator, l: &Ladder, d: &DerivedCouplings) {
    h.push(d.g_ab, l.a.mul(&l.b.dagger()).unwrap(), d.big_delta, 0.0);
}

/// Resonant Jaynes–Cummings coupling of resonator a to g↔e:
/// `g (a|e⟩⟨g| + a†|g⟩⟨e|)`.
pub fn jc_a(space: HilbertSpace, g: f64) -> TimeDepOperator {
    let l = Ladder::new(space);
    let mut h = TimeDepOperator::zero(space);
    if g != 0.0 {
        let half = l.a.mul(&l.sigma(Level::E, Level::G)).unwrap();
        h.add_static_pair(&half.scale(C64::new(g, 0.0)));
    }
    h
}

/// Resonant Jaynes–Cummings coupling of resonator b to e↔f:
/// `g (b|f⟩⟨e| + b†|e⟩⟨f|)`.
pub fn jc_b(space: HilbertSpace, g: f64) -> TimeDepOperator {
    let l = Ladder::new(space);
    let mut h = TimeDepOperator::zero(space);
    if g != 0.0 {
        let half = l.b.mul(&l.sigma(Level::F, Level::E)).unwrap();
        h.add_static_pair(&half.scale(C64::new(g, 0.0)));
    }
    h
}

/// Resonant classical drive `Ω e^{iφ}|lower⟩⟨upper| + h.c.`, which maps
/// `|lower⟩ → cos Ωt |lower⟩ − i e^{−iφ} sin Ωt |upper⟩`.
pub fn pulse(
    space: HilbertSpace,
    lower: Level,
    upper: Level,
    rabi: f64,
    phase: f64,
) -> TimeDepOperator {
    let l = Ladder::new(space);
    let mut h = TimeDepOperator::zero(space);
    let half = l.sigma(lower, upper).scale(C64::from_polar(rabi, phase));
    h.add_static_pair(&half);
    h
}

/// Schrödinger-picture Hamiltonian for a qutrit coupled to resonator a only,
/// split into the free part `h0` and the coupling `h_int`.
#[derive(Clone, Debug)]
pub struct LabFrame {
    pub h0: Operator,
    pub h_int: Operator,
}

impl LabFrame {
    pub fn total(&self) -> Operator {
        self.h0.add(&self.h_int).unwrap()
    }

    /// Diagonal of `h0` (it is diagonal by construction).
    pub fn free_energies(&self) -> Vec<f64> {
        (0..self.h0.mat.nrows()).map(|i| self.h0.mat[(i, i)].re).collect()
    }

    /// `e^{i h0 t} X e^{−i h0 t}` for diagonal `h0`.
    pub fn to_interaction_picture(&self, x: &Operator, t: f64) -> Operator {
        let e = self.free_energies();
        let n = e.len();
        let mat = DMatrix::from_fn(n, n, |i, j| x.mat[(i, j)] * C64::from_polar(1.0, (e[i] - e[j]) * t));
        Operator {
            space: x.space,
            mat,
        }
    }
}

/// Free energies `E_g = 0`, `E_e = ω_eg`, `E_f = ω_eg + ω_fe`, resonators at
/// `ω_a`, `ω_b`, and the coupling `g_eg (a†|g⟩⟨e| + h.c.)`.
pub fn lab_frame_jc(
    space: HilbertSpace,
    omega_eg: f64,
    omega_fe: f64,
    omega_a: f64,
    omega_b: f64,
    g_eg: f64,
) -> LabFrame {
    let l = Ladder::new(space);
    let re = |x: f64| C64::new(x, 0.0);
    let h0 = l
        .sigma(Level::E, Level::E)
        .scale(re(omega_eg))
        .add(&l.sigma(Level::F, Level::F).scale(re(omega_eg + omega_fe)))
        .unwrap()
        .add(&l.num_a().scale(re(omega_a)))
        .unwrap()
        .add(&l.num_b().scale(re(omega_b)))
        .unwrap();
    let half = l.a.dagger().mul(&l.sigma(Level::G, Level::E)).unwrap().scale(re(g_eg));
    let h_int = half.add(&half.dagger()).unwrap();
    LabFrame { h0, h_int }
}

/// Stage-1 resonant configuration in the lab frame.
pub fn h_lab_frame(space: HilbertSpace, d: &DerivedCouplings) -> LabFrame {
    // stage 2 puts ω'_fe on resonance with b, so ω_b = ω'_fe
    lab_frame_jc(space, d.omega_eg, d.omega_fe, d.omega_eg, d.omega_fe_p, d.g_eg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{derive_couplings, mhz_to_rad, DeviceParams};
    use crate::qspace::{embed, qutrit_projector, Slot};
    use proptest::prelude::*;
    use std::f64::consts::{PI, SQRT_2};

    fn setup(gab: f64) -> (HilbertSpace, DerivedCouplings) {
        let mut p = DeviceParams::standard(mhz_to_rad(1.8));
        p.gab_ratio = gab;
        (HilbertSpace::new(4, 4).unwrap(), derive_couplings(&p))
    }

    fn all_builders(space: HilbertSpace, d: &DerivedCouplings) -> Vec<TimeDepOperator> {
        vec![
            h_stage1_resonant(space, d),
            h_stage1_pulse(space, d),
            h_stage2_resonant(space, d),
            h_stage2_pulse(space, d, Stage2Pulse::Fe),
            h_stage2_pulse(space, d, Stage2Pulse::Eg),
        ]
    }

    fn el(op: &Operator, bra: (Level, usize, usize), ket: (Level, usize, usize)) -> C64 {
        let s = op.space;
        op.mat[(s.index(bra.0, bra.1, bra.2), s.index(ket.0, ket.1, ket.2))]
    }

    #[test]
    fn stage1_resonant_matrix_element() {
        let (space, d) = setup(2.0);
        let h0 = h_stage1_resonant(space, &d).evaluate(0.0);
        let v = el(&h0, (Level::G, 1, 0), (Level::E, 0, 0));
        assert!((v - C64::new(TAU_MHZ * 1.8, 0.0)).norm() < 1e-6);
        assert!(h_stage1_resonant(space, &d).evaluate(0.3e-9).hermiticity_error() < 1e-12);
        assert_eq!(h_stage1_resonant(space, &d).terms.len(), 4);
    }

    const TAU_MHZ: f64 = 2.0 * PI * 1e6;

    #[test]
    fn stage1_pulse_matrix_element() {
        let (space, d) = setup(0.0);
        let h = h_stage1_pulse(space, &d).evaluate(0.0);
        let v = el(&h, (Level::E, 0, 0), (Level::G, 0, 0));
        let want = C64::from_polar(d.omega_eg_rabi, FRAC_PI_2);
        assert!((v - want).norm() < 1e-6 * d.omega_eg_rabi);
    }

    #[test]
    fn stage2_resonant_matrix_element() {
        let (space, d) = setup(1.0);
        let h = h_stage2_resonant(space, &d).evaluate(0.0);
        let v = el(&h, (Level::E, 0, 1), (Level::F, 0, 0));
        assert!((v.re - SQRT_2 * d.g_eg).abs() < 1e-6 && v.im.abs() < 1e-9);
    }

    #[test]
    fn stage2_pulse_spectator_frequency() {
        let (space, d) = setup(0.0);
        let fe = h_stage2_pulse(space, &d, Stage2Pulse::Fe);
        let eg = h_stage2_pulse(space, &d, Stage2Pulse::Eg);
        let spectator = |h: &TimeDepOperator| {
            h.terms
                .iter()
                .find(|t| t.phase == DRIVE_PHASE)
                .map(|t| t.freq)
                .unwrap()
        };
        assert_eq!(spectator(&fe), -d.delta4);
        assert_eq!(spectator(&eg), d.delta4);
        assert!((d.delta4 / TAU_MHZ - 400.0).abs() < 1e-9);
    }

    #[test]
    fn reductions_to_ideal_forms() {
        let (space, d) = setup(2.0);
        let ideal = d.without_unwanted();
        let s1 = h_stage1_resonant(space, &ideal);
        assert!(s1.is_static());
        let diff = &s1.static_part.mat - &jc_a(space, d.g_eg).static_part.mat;
        assert!(diff.iter().all(|z| z.norm() < 1e-14 * d.g_eg));

        let s2 = h_stage2_resonant(space, &ideal);
        assert!(s2.is_static());
        let diff = &s2.static_part.mat - &jc_b(space, d.g_fe).static_part.mat;
        assert!(diff.iter().all(|z| z.norm() < 1e-14 * d.g_eg));

        // pulse builders minus the resonant swap coupling leave the bare drive
        let zero_g = DerivedCouplings {
            g_eg: 0.0,
            g_fe: 0.0,
            ..ideal.clone()
        };
        let p1 = h_stage1_pulse(space, &zero_g);
        let bare = pulse(space, Level::G, Level::E, d.omega_eg_rabi, DRIVE_PHASE);
        assert!(p1.is_static());
        assert_eq!(p1.static_part, bare.static_part);
        let p2 = h_stage2_pulse(space, &zero_g, Stage2Pulse::Fe);
        let bare = pulse(space, Level::E, Level::F, d.omega_fe_rabi, DRIVE_PHASE);
        assert_eq!(p2.static_part, bare.static_part);
    }

    #[test]
    fn no_g_to_f_elements() {
        let (space, d) = setup(2.0);
        for h in all_builders(space, &d) {
            let m = h.evaluate(1.234e-9);
            for i in 0..space.total_dim() {
                for j in 0..space.total_dim() {
                    let (qi, _, _) = space.unflatten(i);
                    let (qj, _, _) = space.unflatten(j);
                    if (qi, qj) == (Level::G, Level::F) || (qi, qj) == (Level::F, Level::G) {
                        assert_eq!(m.mat[(i, j)], C64::new(0.0, 0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn swap_hamiltonians_conserve_excitations() {
        let (space, d) = setup(2.0);
        let l = Ladder::new(space);
        let n_exc = l
            .num_a()
            .add(&l.num_b())
            .unwrap()
            .add(&embed(&qutrit_projector(Level::E), Slot::Qutrit, space).unwrap())
            .unwrap()
            .add(&embed(&(qutrit_projector(Level::F) * C64::new(2.0, 0.0)), Slot::Qutrit, space).unwrap())
            .unwrap();
        for h in [h_stage1_resonant(space, &d), h_stage2_resonant(space, &d)] {
            for t in [0.0, 0.37e-9, 5.1e-9] {
                let c = h.evaluate(t).commutator(&n_exc).unwrap();
                assert!(c.max_abs() < 1e-6, "[H, N_exc] = {}", c.max_abs());
            }
        }
    }

    #[test]
    fn lab_frame_free_part_is_diagonal() {
        let (space, d) = setup(0.0);
        let lab = h_lab_frame(space, &d);
        let n = space.total_dim();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    assert_eq!(lab.h0.mat[(i, j)], C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn interaction_picture_of_lab_coupling() {
        let (space, d) = setup(0.0);
        // on resonance the coupling is static and equals the JC form
        let lab = h_lab_frame(space, &d);
        let jc = jc_a(space, d.g_eg).static_part;
        for t in [0.0, 1.3e-9, 77.7e-9] {
            let hi = lab.to_interaction_picture(&lab.h_int, t);
            let diff = &hi.mat - &jc.mat;
            assert!(diff.iter().all(|z| z.norm() < 1e-6 * d.g_eg));
        }
        // detuned by δ: the a†|g⟩⟨e| element rotates as e^{−iδt}
        let delta = mhz_to_rad(25.0);
        let lab = lab_frame_jc(space, d.omega_eg + delta, d.omega_fe, d.omega_eg, mhz_to_rad(3500.0), d.g_eg);
        let t = 3.3e-9;
        let hi = lab.to_interaction_picture(&lab.h_int, t);
        let v = el(&hi, (Level::G, 1, 0), (Level::E, 0, 0));
        let want = C64::from_polar(d.g_eg, -delta * t);
        assert!((v - want).norm() < 1e-6 * d.g_eg);
    }

    proptest! {
        #[test]
        fn builders_hermitian_at_any_time(t in 0.0f64..2e-6, gab in 0.0f64..3.0) {
            let (space, d) = setup(gab);
            for h in all_builders(space, &d) {
                prop_assert!(h.evaluate(t).hermiticity_error() < 1e-12);
            }
        }
    }
}
