//! The 2N-step NOON-state sequence: schedule construction, the ideal state
//! after each stage, and the driver that runs the master equation through
//! every segment.
//!
//! Stage 1 (resonator a on g↔e) loads `N` photons into a one by alternating
//! swaps `|e,j−1⟩ → −i|g,j⟩` with g→e pulses; the last swap is not followed
//! by a pulse. Stage 2 (resonator b on e↔f) does the same on the |f⟩ branch
//! with e→f pulses, except that its last step first pumps g→e and then swaps,
//! which leaves the qutrit in |e⟩ on both branches. Three retuning idles sit
//! before, between and after the stages.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::device::{derive_couplings, pulse_time, swap_time, DerivedCouplings, DeviceParams};
use crate::error::{Error, Result};
use crate::hamiltonian::{
    h_stage1_pulse, h_stage1_resonant, h_stage2_pulse, h_stage2_resonant, jc_a, jc_b, pulse,
    Stage2Pulse, TimeDepOperator, DRIVE_PHASE,
};
use crate::lindblad::{CollapseSet, IntegratorConfig, SegmentEngine, StepSample};
use crate::qspace::{DensityMatrix, HilbertSpace, Ket, Level, Slot};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum SegmentKind {
    SwapAGe,
    PulseEgStage1,
    SwapBFe,
    PulseFeStage2,
    PulseEgStage2,
    RetuneIdle,
}

impl SegmentKind {
    pub fn name(self) -> &'static str {
        match self {
            SegmentKind::SwapAGe => "swap_a_ge",
            SegmentKind::PulseEgStage1 => "pulse_eg_stage1",
            SegmentKind::SwapBFe => "swap_b_fe",
            SegmentKind::PulseFeStage2 => "pulse_fe_stage2",
            SegmentKind::PulseEgStage2 => "pulse_eg_stage2",
            SegmentKind::RetuneIdle => "retune_idle",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Stage {
    One,
    Two,
}

impl Stage {
    pub fn number(self) -> u8 {
        match self {
            Stage::One => 1,
            Stage::Two => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub kind: SegmentKind,
    /// Seconds.
    pub duration: f64,
    pub stage: Stage,
    /// 1-based step within the stage; 0 for idles.
    pub step_index: usize,
    /// Stage-local clock at segment start. The rotating-frame clock runs
    /// continuously through a stage and restarts at the second stage because
    /// the level spacings, and so the frame, change there.
    pub clock_start: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub n: usize,
    pub segments: Vec<Segment>,
}

impl Schedule {
    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Index of the segment after which `checkpoint` holds.
    pub fn checkpoint_segment(&self, checkpoint: Checkpoint) -> Result<usize> {
        checkpoint.check(self.n)?;
        let n = self.n;
        Ok(match checkpoint {
            Checkpoint::FirstSwapA => 1,
            Checkpoint::FirstPulseA => 2,
            Checkpoint::StageOneBeforeLast => 2 * n - 2,
            Checkpoint::StageOneDone => 2 * n - 1,
            Checkpoint::FirstSwapB => 2 * n + 1,
            Checkpoint::FirstPulseB => 2 * n + 2,
            Checkpoint::StageTwoBeforeLast => 4 * n - 2,
            Checkpoint::Final => 4 * n + 1,
        })
    }
}

pub fn build_schedule(n: usize, d: &DerivedCouplings, p: &DeviceParams) -> Result<Schedule> {
    if n < 1 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    let mut segments = Vec::with_capacity(4 * n + 2);
    let idle = |stage, clock_start| Segment {
        kind: SegmentKind::RetuneIdle,
        duration: p.t_d,
        stage,
        step_index: 0,
        clock_start,
    };

    segments.push(idle(Stage::One, 0.0));
    let mut clock = 0.0;
    let mut push = |segments: &mut Vec<Segment>, kind, duration, stage, step_index| {
        segments.push(Segment {
            kind,
            duration,
            stage,
            step_index,
            clock_start: clock,
        });
        clock += duration;
    };
    for j in 1..=n {
        push(&mut segments, SegmentKind::SwapAGe, swap_time(j, d.g_eg), Stage::One, j);
        if j < n {
            push(&mut segments, SegmentKind::PulseEgStage1, pulse_time(d.omega_eg_rabi), Stage::One, j);
        }
    }

    segments.push(idle(Stage::Two, 0.0));
    clock = 0.0;
    let mut push = |segments: &mut Vec<Segment>, kind, duration, step_index| {
        segments.push(Segment {
            kind,
            duration,
            stage: Stage::Two,
            step_index,
            clock_start: clock,
        });
        clock += duration;
    };
    for j in 1..n {
        push(&mut segments, SegmentKind::SwapBFe, swap_time(j, d.g_fe), j);
        push(&mut segments, SegmentKind::PulseFeStage2, pulse_time(d.omega_fe_rabi), j);
    }
    push(&mut segments, SegmentKind::PulseEgStage2, pulse_time(d.omega_eg_rabi), n);
    push(&mut segments, SegmentKind::SwapBFe, swap_time(n, d.g_fe), n);
    let end = clock;
    segments.push(idle(Stage::Two, end));

    Ok(Schedule { n, segments })
}

/// Points along the sequence where the ideal state is known in closed form.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Checkpoint {
    /// After the first stage-1 swap: `(|f,0,0⟩ − i|g,1,0⟩)/√2`.
    FirstSwapA,
    /// After the first stage-1 pulse: `(|f,0,0⟩ − i|e,1,0⟩)/√2`. N ≥ 2.
    FirstPulseA,
    /// After stage-1 step N−1: `(|f,0,0⟩ + (−i)^{N−1}|e,N−1,0⟩)/√2`. N ≥ 2.
    StageOneBeforeLast,
    /// After stage 1: `(|f,0,0⟩ + (−i)^N|g,N,0⟩)/√2`.
    StageOneDone,
    /// After the first stage-2 swap: `(−i|e,0,1⟩ + (−i)^N|g,N,0⟩)/√2`. N ≥ 2.
    FirstSwapB,
    /// After the first stage-2 pulse: `(−i|f,0,1⟩ + (−i)^N|g,N,0⟩)/√2`. N ≥ 2.
    FirstPulseB,
    /// After stage-2 step N−1:
    /// `((−i)^{N−1}|f,0,N−1⟩ + (−i)^N|g,N,0⟩)/√2`. N ≥ 2.
    StageTwoBeforeLast,
    /// The NOON state `(−i)^N (|0,N⟩ + |N,0⟩)|e⟩/√2`.
    Final,
}

impl Checkpoint {
    pub const ALL: [Checkpoint; 8] = [
        Checkpoint::FirstSwapA,
        Checkpoint::FirstPulseA,
        Checkpoint::StageOneBeforeLast,
        Checkpoint::StageOneDone,
        Checkpoint::FirstSwapB,
        Checkpoint::FirstPulseB,
        Checkpoint::StageTwoBeforeLast,
        Checkpoint::Final,
    ];

    fn check(self, n: usize) -> Result<()> {
        let needs_two = matches!(
            self,
            Checkpoint::FirstPulseA
                | Checkpoint::StageOneBeforeLast
                | Checkpoint::FirstSwapB
                | Checkpoint::FirstPulseB
                | Checkpoint::StageTwoBeforeLast
        );
        if n < 1 || (needs_two && n < 2) {
            return Err(Error::Checkpoint { checkpoint: self, n });
        }
        Ok(())
    }

    pub fn defined_for(self, n: usize) -> bool {
        self.check(n).is_ok()
    }
}

/// `(−i)^k`.
fn minus_i_pow(k: usize) -> C64 {
    [
        C64::new(1.0, 0.0),
        C64::new(0.0, -1.0),
        C64::new(-1.0, 0.0),
        C64::new(0.0, 1.0),
    ][k % 4]
}

fn superpose(space: HilbertSpace, parts: &[(C64, (Level, usize, usize))]) -> Result<Ket> {
    let mut amps = DVector::zeros(space.total_dim());
    for &(c, (q, na, nb)) in parts {
        amps[space.try_index(q, na, nb)?] += c * FRAC_1_SQRT_2;
    }
    Ket::from_amplitudes(space, amps)
}

fn check_fits(n: usize, space: HilbertSpace) -> Result<()> {
    if n + 1 >= space.dim_a() || n + 1 >= space.dim_b() {
        return Err(Error::Truncation(format!(
            "N = {n} needs resonator dimensions above {}, have ({}, {})",
            n + 1,
            space.dim_a(),
            space.dim_b()
        )));
    }
    Ok(())
}

/// Target NOON state, including its `(−i)^N` phase.
pub fn ideal_noon_state(n: usize, space: HilbertSpace) -> Result<Ket> {
    ideal_intermediate_state(n, Checkpoint::Final, space)
}

pub fn ideal_intermediate_state(n: usize, checkpoint: Checkpoint, space: HilbertSpace) -> Result<Ket> {
    checkpoint.check(n)?;
    check_fits(n, space)?;
    let one = C64::new(1.0, 0.0);
    let mi = minus_i_pow;
    let parts = match checkpoint {
        Checkpoint::FirstSwapA => vec![(one, (Level::F, 0, 0)), (mi(1), (Level::G, 1, 0))],
        Checkpoint::FirstPulseA => vec![(one, (Level::F, 0, 0)), (mi(1), (Level::E, 1, 0))],
        Checkpoint::StageOneBeforeLast => {
            vec![(one, (Level::F, 0, 0)), (mi(n - 1), (Level::E, n - 1, 0))]
        }
        Checkpoint::StageOneDone => vec![(one, (Level::F, 0, 0)), (mi(n), (Level::G, n, 0))],
        Checkpoint::FirstSwapB => vec![(mi(1), (Level::E, 0, 1)), (mi(n), (Level::G, n, 0))],
        Checkpoint::FirstPulseB => vec![(mi(1), (Level::F, 0, 1)), (mi(n), (Level::G, n, 0))],
        Checkpoint::StageTwoBeforeLast => {
            vec![(mi(n - 1), (Level::F, 0, n - 1)), (mi(n), (Level::G, n, 0))]
        }
        Checkpoint::Final => vec![(mi(n), (Level::E, 0, n)), (mi(n), (Level::E, n, 0))],
    };
    superpose(space, &parts)
}

/// `(|f⟩ + |e⟩)/√2 ⊗ |0,0⟩`.
pub fn initial_state(space: HilbertSpace) -> Ket {
    let one = C64::new(1.0, 0.0);
    superpose(space, &[(one, (Level::F, 0, 0)), (one, (Level::E, 0, 0))]).unwrap()
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Mode {
    /// All unwanted couplings, crosstalk, dissipation and idles included.
    Full,
    /// Only the resonant couplings and drives; no dissipation; idles skipped.
    Ideal,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Full => "full",
            Mode::Ideal => "ideal",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Mode::Full),
            "ideal" => Ok(Mode::Ideal),
            other => Err(Error::InvalidParameter(format!("unknown mode {other:?}"))),
        }
    }
}

/// Populations above this in the highest kept Fock level flag a run.
pub const TOP_LEVEL_LIMIT: f64 = 1e-3;
/// Eigenvalues below this flag a run as unphysical.
pub const MIN_EIGENVALUE_LIMIT: f64 = -1e-6;
/// Raw trace drift beyond this flags a run.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct SegmentDiagnostics {
    pub index: usize,
    pub segment: Segment,
    pub steps: usize,
    pub dt: f64,
    pub trace_drift: f64,
    pub min_eigenvalue: f64,
    pub top_population_a: f64,
    pub top_population_b: f64,
    pub samples: Vec<StepSample>,
}

#[derive(Clone, Debug)]
pub struct SimResult {
    pub n: usize,
    pub mode: Mode,
    pub space: HilbertSpace,
    pub schedule: Schedule,
    pub rho_final: DensityMatrix,
    pub segments: Vec<SegmentDiagnostics>,
    pub wall_clock: Duration,
}

impl SimResult {
    pub fn max_abs_trace_drift(&self) -> f64 {
        self.segments
            .iter()
            .flat_map(|s| std::iter::once(s.trace_drift).chain(s.samples.iter().map(|x| x.trace_drift)))
            .map(f64::abs)
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.segments
            .iter()
            .flat_map(|s| std::iter::once(s.min_eigenvalue).chain(s.samples.iter().map(|x| x.min_eigenvalue)))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_top_population(&self) -> (f64, f64) {
        self.segments.iter().fold((0.0, 0.0), |(a, b), s| {
            (f64::max(a, s.top_population_a), f64::max(b, s.top_population_b))
        })
    }

    /// Problems with the run's numerics or truncation, empty if none.
    pub fn flags(&self) -> Vec<String> {
        let mut out = Vec::new();
        let drift = self.max_abs_trace_drift();
        if drift > TRACE_DRIFT_LIMIT {
            out.push(format!("trace drift {drift:e} exceeds {TRACE_DRIFT_LIMIT:e}"));
        }
        let eig = self.min_eigenvalue();
        if eig < MIN_EIGENVALUE_LIMIT {
            out.push(format!("min eigenvalue {eig:e} below {MIN_EIGENVALUE_LIMIT:e}"));
        }
        let (ta, tb) = self.max_top_population();
        if ta.max(tb) > TOP_LEVEL_LIMIT {
            out.push(format!(
                "top Fock level population ({ta:e}, {tb:e}) exceeds {TOP_LEVEL_LIMIT:e}"
            ));
        }
        out
    }
}

fn segment_hamiltonian(kind: SegmentKind, mode: Mode, space: HilbertSpace, d: &DerivedCouplings) -> TimeDepOperator {
    match mode {
        Mode::Full => match kind {
            SegmentKind::SwapAGe => h_stage1_resonant(space, d),
            SegmentKind::PulseEgStage1 => h_stage1_pulse(space, d),
            SegmentKind::SwapBFe => h_stage2_resonant(space, d),
            SegmentKind::PulseFeStage2 => h_stage2_pulse(space, d, Stage2Pulse::Fe),
            SegmentKind::PulseEgStage2 => h_stage2_pulse(space, d, Stage2Pulse::Eg),
            SegmentKind::RetuneIdle => TimeDepOperator::zero(space),
        },
        Mode::Ideal => match kind {
            SegmentKind::SwapAGe => jc_a(space, d.g_eg),
            SegmentKind::SwapBFe => jc_b(space, d.g_fe),
            SegmentKind::PulseEgStage1 | SegmentKind::PulseEgStage2 => {
                pulse(space, Level::G, Level::E, d.omega_eg_rabi, DRIVE_PHASE)
            }
            SegmentKind::PulseFeStage2 => pulse(space, Level::E, Level::F, d.omega_fe_rabi, DRIVE_PHASE),
            SegmentKind::RetuneIdle => TimeDepOperator::zero(space),
        },
    }
}

/// Hilbert space used for an `N`-photon run.
pub fn protocol_space(n: usize, p: &DeviceParams) -> Result<HilbertSpace> {
    let dim = p.resonator_dim(n);
    HilbertSpace::new(dim, dim)
}

pub fn run_protocol(n: usize, params: &DeviceParams, cfg: &IntegratorConfig, mode: Mode) -> Result<SimResult> {
    run_protocol_observed(n, params, cfg, mode, |_, _, _| {})
}

/// As [`run_protocol`], calling `observer(index, segment, ρ)` after every
/// segment that was integrated (idles are skipped in ideal mode).
pub fn run_protocol_observed<F>(
    n: usize,
    params: &DeviceParams,
    cfg: &IntegratorConfig,
    mode: Mode,
    mut observer: F,
) -> Result<SimResult>
where
    F: FnMut(usize, &Segment, &DensityMatrix),
{
    let started = Instant::now();
    params.validate()?;
    cfg.validate()?;
    let space = protocol_space(n, params)?;
    check_fits(n, space)?;
    let d = derive_couplings(params);
    let schedule = build_schedule(n, &d, params)?;
    let collapse = match mode {
        Mode::Full => CollapseSet::from_params(space, params),
        Mode::Ideal => CollapseSet::none(space),
    };

    let mut engines: HashMap<SegmentKind, SegmentEngine> = HashMap::new();
    let mut rho = DensityMatrix::pure(&initial_state(space));
    let mut diagnostics = Vec::with_capacity(schedule.segments.len());

    for (index, seg) in schedule.segments.iter().enumerate() {
        if mode == Mode::Ideal && seg.kind == SegmentKind::RetuneIdle {
            continue;
        }
        let engine = match engines.entry(seg.kind) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => {
                let h = segment_hamiltonian(seg.kind, mode, space, &d);
                e.insert(SegmentEngine::new(&h, &collapse)?)
            }
        };
        let out = engine
            .evolve(&rho, seg.clock_start, seg.duration, cfg)
            .map_err(|e| match e {
                Error::IntegrationBlowUp { detail, .. } => Error::IntegrationBlowUp {
                    segment: index,
                    detail,
                },
                other => other,
            })?;
        rho = out.rho;
        diagnostics.push(SegmentDiagnostics {
            index,
            segment: seg.clone(),
            steps: out.steps,
            dt: out.dt,
            trace_drift: out.trace_drift,
            min_eigenvalue: rho.min_eigenvalue(),
            top_population_a: rho.fock_population(Slot::ResA, space.dim_a() - 1),
            top_population_b: rho.fock_population(Slot::ResB, space.dim_b() - 1),
            samples: out.samples,
        });
        observer(index, seg, &rho);
    }

    Ok(SimResult {
        n,
        mode,
        space,
        schedule,
        rho_final: rho,
        segments: diagnostics,
        wall_clock: started.elapsed(),
    })
}
