//! Master-equation integration.
//!
//! `dρ/dt = −i[H(t), ρ] + Σ_k γ_k (L_k ρ L_k† − ½{L_k†L_k, ρ})` with
//! resonator decay, qutrit relaxation (f→e, e→g) and projector dephasing of
//! |f⟩ and |e⟩. [`evolve_segment`] is a fixed-step RK4 whose step follows the
//! fastest rotating frequency of the Hamiltonian; [`propagate_expm_oracle`]
//! exponentiates the vectorized Liouvillian for small static problems and is
//! used only to check the integrator.

mod oracle;
mod sparse;

pub use oracle::{liouvillian, propagate_expm_oracle, ORACLE_MAX_DIM};

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::device::DeviceParams;
use crate::error::{Error, Result};
use crate::hamiltonian::TimeDepOperator;
use crate::qspace::{DensityMatrix, HilbertSpace, Ket, Ladder, Level, Operator};

use sparse::CompiledGenerator;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ChannelKind {
    Decay,
    Dephasing,
}

#[derive(Clone, Debug)]
pub struct Channel {
    pub name: &'static str,
    pub kind: ChannelKind,
    pub op: Operator,
    /// 1/s.
    pub rate: f64,
}

#[derive(Clone, Debug)]
pub struct CollapseSet {
    pub space: HilbertSpace,
    pub channels: Vec<Channel>,
}

impl CollapseSet {
    pub fn none(space: HilbertSpace) -> Self {
        Self {
            space,
            channels: Vec::new(),
        }
    }

    /// Resonator decay `a`, `b`; qutrit relaxation `|e⟩⟨f|`, `|g⟩⟨e|`;
    /// dephasing projectors `|f⟩⟨f|`, `|e⟩⟨e|`.
    pub fn from_params(space: HilbertSpace, p: &DeviceParams) -> Self {
        let l = Ladder::new(space);
        let channels = vec![
            Channel {
                name: "kappa_a",
                kind: ChannelKind::Decay,
                op: l.a.clone(),
                rate: p.kappa_a,
            },
            Channel {
                name: "kappa_b",
                kind: ChannelKind::Decay,
                op: l.b.clone(),
                rate: p.kappa_b,
            },
            Channel {
                name: "gamma_fe",
                kind: ChannelKind::Decay,
                op: l.sigma(Level::E, Level::F),
                rate: p.gamma_fe,
            },
            Channel {
                name: "gamma_eg",
                kind: ChannelKind::Decay,
                op: l.sigma(Level::G, Level::E),
                rate: p.gamma_eg,
            },
            Channel {
                name: "gamma_phi_f",
                kind: ChannelKind::Dephasing,
                op: l.sigma(Level::F, Level::F),
                rate: p.gamma_phi_f,
            },
            Channel {
                name: "gamma_phi_e",
                kind: ChannelKind::Dephasing,
                op: l.sigma(Level::E, Level::E),
                rate: p.gamma_phi_e,
            },
        ];
        Self { space, channels }
    }

    /// Keep only the named channel (others dropped).
    pub fn only(&self, name: &str) -> Self {
        Self {
            space: self.space,
            channels: self.channels.iter().filter(|c| c.name == name).cloned().collect(),
        }
    }

    pub fn push(&mut self, name: &'static str, kind: ChannelKind, op: Operator, rate: f64) -> Result<()> {
        if op.space != self.space {
            return Err(Error::SpaceMismatch);
        }
        if !(rate >= 0.0) {
            return Err(Error::InvalidParameter(format!("rate of {name} must be >= 0")));
        }
        self.channels.push(Channel { name, kind, op, rate });
        Ok(())
    }

    pub(crate) fn active(&self) -> impl Iterator<Item = &Channel> {
        self.channels.iter().filter(|c| c.rate > 0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorConfig {
    /// Upper bound on the RK4 step, seconds.
    pub dt_max: f64,
    /// Steps per period of the fastest rotating term.
    pub samples_per_fastest_period: usize,
    /// A step rule asking for less than this is rejected.
    pub hard_dt_floor: f64,
    /// Record trace drift and min eigenvalue every this many steps (0 = only
    /// at segment ends).
    pub record_stride: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt_max: 1e-9,
            samples_per_fastest_period: 40,
            hard_dt_floor: 1e-14,
            record_stride: 0,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_fastest_period < 20 {
            return Err(Error::InvalidParameter(format!(
                "samples_per_fastest_period must be >= 20, got {}",
                self.samples_per_fastest_period
            )));
        }
        if !(self.dt_max > 0.0 && self.hard_dt_floor > 0.0 && self.hard_dt_floor <= self.dt_max) {
            return Err(Error::InvalidParameter(
                "need 0 < hard_dt_floor <= dt_max".into(),
            ));
        }
        Ok(())
    }

    /// Number of equal steps and their size for a segment of `duration`.
    pub fn step_plan(&self, h: &TimeDepOperator, duration: f64) -> Result<(usize, f64)> {
        self.validate()?;
        if duration == 0.0 {
            return Ok((0, 0.0));
        }
        let mut target = self.dt_max.min(duration / 100.0);
        if let Some(nu) = h.max_frequency() {
            target = target.min(TAU / (self.samples_per_fastest_period as f64 * nu));
        }
        if target < self.hard_dt_floor {
            return Err(Error::InvalidParameter(format!(
                "step {target:e} s is below the floor {:e} s",
                self.hard_dt_floor
            )));
        }
        let steps = (duration / target).ceil() as usize;
        Ok((steps, duration / steps as f64))
    }
}

/// One intermediate record taken every `record_stride` steps.
#[derive(Clone, Debug, PartialEq)]
pub struct StepSample {
    pub t: f64,
    pub trace_drift: f64,
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug)]
pub struct SegmentOutcome {
    /// Final state after Hermitization and trace renormalization.
    pub rho: DensityMatrix,
    /// `tr ρ − 1` before renormalization.
    pub trace_drift: f64,
    pub steps: usize,
    pub dt: f64,
    pub samples: Vec<StepSample>,
}

/// Dense evaluation of the master-equation right-hand side.
pub fn lindblad_rhs(h_t: &Operator, rho: &DensityMatrix, c: &CollapseSet) -> Result<DMatrix<C64>> {
    if h_t.space != rho.space || c.space != rho.space {
        return Err(Error::SpaceMismatch);
    }
    let i = C64::new(0.0, 1.0);
    let r = &rho.mat;
    let mut out = (&h_t.mat * r - r * &h_t.mat) * (-i);
    for ch in c.active() {
        let l = &ch.op.mat;
        let ld = l.adjoint();
        let ldl = &ld * l;
        let rate = C64::new(ch.rate, 0.0);
        out += (l * r * &ld - (&ldl * r) * C64::new(0.5, 0.0) - (r * &ldl) * C64::new(0.5, 0.0)) * rate;
    }
    Ok(out)
}

fn to_row_major(m: &DMatrix<C64>) -> Vec<C64> {
    m.transpose().as_slice().to_vec()
}

fn from_row_major(n: usize, v: &[C64]) -> DMatrix<C64> {
    DMatrix::from_row_slice(n, n, v)
}

fn trace_row_major(n: usize, v: &[C64]) -> C64 {
    (0..n).map(|i| v[i * n + i]).sum()
}

/// Integrate the master equation over one segment starting at stage-local
/// clock `t0`.
pub fn evolve_segment(
    h: &TimeDepOperator,
    rho0: &DensityMatrix,
    c: &CollapseSet,
    t0: f64,
    duration: f64,
    cfg: &IntegratorConfig,
) -> Result<SegmentOutcome> {
    SegmentEngine::new(h, c)?.evolve(rho0, t0, duration, cfg)
}

/// A Hamiltonian and collapse set compiled once and reusable for every
/// segment of the same kind.
pub struct SegmentEngine {
    h: TimeDepOperator,
    gen: CompiledGenerator,
}

impl SegmentEngine {
    pub fn new(h: &TimeDepOperator, c: &CollapseSet) -> Result<Self> {
        if h.space() != c.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(Self {
            h: h.clone(),
            gen: CompiledGenerator::new(h, Some(c)),
        })
    }

    pub fn hamiltonian(&self) -> &TimeDepOperator {
        &self.h
    }

    /// Non-zeros of the compiled effective Hamiltonian.
    pub fn nnz(&self) -> usize {
        self.gen.nnz()
    }

    pub fn evolve(
        &self,
        rho0: &DensityMatrix,
        t0: f64,
        duration: f64,
        cfg: &IntegratorConfig,
    ) -> Result<SegmentOutcome> {
        if self.h.space() != rho0.space {
            return Err(Error::SpaceMismatch);
        }
        if !(duration >= 0.0) {
            return Err(Error::InvalidParameter(format!("negative duration {duration}")));
        }
        let (steps, dt) = cfg.step_plan(&self.h, duration)?;
        if steps == 0 {
            return Ok(SegmentOutcome {
                rho: rho0.clone(),
                trace_drift: 0.0,
                steps: 0,
                dt: 0.0,
                samples: Vec::new(),
            });
        }

        let gen = &self.gen;
        let n = gen.dim();
        let nn = n * n;
        let zero = C64::new(0.0, 0.0);
        let mut rho = to_row_major(&rho0.mat);
        let mut vals = gen.values_buffer();
        let mut scratch = vec![zero; nn];
        let mut k = vec![zero; nn];
        let mut acc = vec![zero; nn];
        let mut stage = vec![zero; nn];
        let mut samples = Vec::new();
        let tr0 = trace_row_major(n, &rho).re;

        for step in 0..steps {
            let t = t0 + step as f64 * dt;

            gen.eval_at(t, &mut vals);
            gen.lindblad_rhs(&vals, &rho, &mut scratch, &mut k);
            for idx in 0..nn {
                acc[idx] = k[idx];
                stage[idx] = rho[idx] + 0.5 * dt * k[idx];
            }

            gen.eval_at(t + 0.5 * dt, &mut vals);
            gen.lindblad_rhs(&vals, &stage, &mut scratch, &mut k);
            for idx in 0..nn {
                acc[idx] += 2.0 * k[idx];
                stage[idx] = rho[idx] + 0.5 * dt * k[idx];
            }
            gen.lindblad_rhs(&vals, &stage, &mut scratch, &mut k);
            for idx in 0..nn {
                acc[idx] += 2.0 * k[idx];
                stage[idx] = rho[idx] + dt * k[idx];
            }

            gen.eval_at(t + dt, &mut vals);
            gen.lindblad_rhs(&vals, &stage, &mut scratch, &mut k);
            let w = dt / 6.0;
            for idx in 0..nn {
                rho[idx] += w * (acc[idx] + k[idx]);
            }

            if cfg.record_stride > 0 && (step + 1) % cfg.record_stride == 0 {
                let dm = DensityMatrix {
                    space: rho0.space,
                    mat: from_row_major(n, &rho),
                };
                samples.push(StepSample {
                    t: t + dt,
                    trace_drift: trace_row_major(n, &rho).re - tr0,
                    min_eigenvalue: dm.min_eigenvalue(),
                });
            }
        }

        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::IntegrationBlowUp {
                segment: 0,
                detail: format!("non-finite density matrix after {steps} steps of {dt:e} s"),
            });
        }

        let tr = trace_row_major(n, &rho).re;
        let raw = from_row_major(n, &rho);
        let herm = (&raw + raw.adjoint()) * C64::new(0.5 / tr, 0.0);
        Ok(SegmentOutcome {
            rho: DensityMatrix {
                space: rho0.space,
                mat: herm,
            },
            trace_drift: tr - tr0,
            steps,
            dt,
            samples,
        })
    }
}

/// Schrödinger-equation counterpart of [`evolve_segment`] for pure states,
/// same step rule, no dissipation.
pub fn unitary_evolve(
    h: &TimeDepOperator,
    psi0: &Ket,
    t0: f64,
    duration: f64,
    cfg: &IntegratorConfig,
) -> Result<Ket> {
    if h.space() != psi0.space {
        return Err(Error::SpaceMismatch);
    }
    let (steps, dt) = cfg.step_plan(h, duration)?;
    let gen = CompiledGenerator::new(h, None);
    let n = gen.dim();
    let zero = C64::new(0.0, 0.0);
    let mut psi: Vec<C64> = psi0.amps.iter().copied().collect();
    let mut vals = gen.values_buffer();
    let (mut k, mut acc, mut stage) = (vec![zero; n], vec![zero; n], vec![zero; n]);

    for step in 0..steps {
        let t = t0 + step as f64 * dt;
        gen.eval_at(t, &mut vals);
        gen.schrodinger_rhs(&vals, &psi, &mut k);
        for i in 0..n {
            acc[i] = k[i];
            stage[i] = psi[i] + 0.5 * dt * k[i];
        }
        gen.eval_at(t + 0.5 * dt, &mut vals);
        gen.schrodinger_rhs(&vals, &stage, &mut k);
        for i in 0..n {
            acc[i] += 2.0 * k[i];
            stage[i] = psi[i] + 0.5 * dt * k[i];
        }
        gen.schrodinger_rhs(&vals, &stage, &mut k);
        for i in 0..n {
            acc[i] += 2.0 * k[i];
            stage[i] = psi[i] + dt * k[i];
        }
        gen.eval_at(t + dt, &mut vals);
        gen.schrodinger_rhs(&vals, &stage, &mut k);
        for i in 0..n {
            psi[i] += dt / 6.0 * (acc[i] + k[i]);
        }
    }
    if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::IntegrationBlowUp {
            segment: 0,
            detail: "non-finite state vector".into(),
        });
    }
    Ket::from_amplitudes(psi0.space, DVector::from_vec(psi))
}

#[cfg(test)]
mod tests;
