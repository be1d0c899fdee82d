//! Fidelity evaluation, parameter sweeps and the scalar optimizer over `g`.

use rayon::prelude::*;

use crate::device::{derive_couplings, mhz_to_rad, listed_g_mhz, tau_total, DeviceParams};
use crate::error::{Error, Result};
use crate::lindblad::IntegratorConfig;
use crate::protocol::{ideal_noon_state, run_protocol, Mode, SimResult};
use crate::qspace::{expectation, DensityMatrix, Ket, Operator};

/// `⟨ψ|ρ|ψ⟩` (real part).
pub fn fidelity(rho: &DensityMatrix, psi: &Ket) -> Result<f64> {
    if rho.space != psi.space {
        return Err(Error::SpaceMismatch);
    }
    let v = psi.amps.dotc(&(&rho.mat * &psi.amps));
    Ok(v.re)
}

/// `tr(ρ |ψ⟩⟨ψ|)`, an independent route to [`fidelity`].
pub fn fidelity_via_trace(rho: &DensityMatrix, psi: &Ket) -> Result<f64> {
    let proj = Operator::from_matrix(psi.space, &psi.amps * psi.amps.adjoint())?;
    Ok(expectation(&proj, rho)?.re)
}

/// Clamp a computed fidelity into `[0, 1]` for reporting.
pub fn clamp_fidelity(f: f64) -> f64 {
    f.clamp(0.0, 1.0)
}

/// Fidelity of a finished run against the NOON target.
pub fn run_fidelity(res: &SimResult) -> Result<f64> {
    let target = ideal_noon_state(res.n, res.space)?;
    fidelity(&res.rho_final, &target)
}

/// How the coupling `g` is chosen for each row.
#[derive(Clone, Debug, PartialEq)]
pub enum GChoice {
    /// Optimized values listed for N = 1..=5.
    Listed,
    /// Explicit values, rad/s.
    Values(Vec<f64>),
    /// Golden-section search in `[lo, hi]` to tolerance `tol`, rad/s.
    Optimize { lo: f64, hi: f64, tol: f64 },
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub ns: Vec<usize>,
    pub gab_ratios: Vec<f64>,
    pub g: GChoice,
    /// Coherence times (s) for the `T` scaling rule; empty keeps the base
    /// rates.
    pub ts: Vec<f64>,
    pub base: DeviceParams,
    pub cfg: IntegratorConfig,
    pub mode: Mode,
}

impl SweepSpec {
    /// Default parameters, listed `g`, base rates.
    pub fn standard(ns: Vec<usize>, gab_ratios: Vec<f64>) -> Self {
        Self {
            ns,
            gab_ratios,
            g: GChoice::Listed,
            ts: Vec::new(),
            base: DeviceParams::standard(mhz_to_rad(1.0)),
            cfg: IntegratorConfig::default(),
            mode: Mode::Full,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.ns.is_empty() || self.gab_ratios.is_empty() {
            return Err(Error::InvalidParameter("empty sweep grid".into()));
        }
        match &self.g {
            GChoice::Values(v) if v.is_empty() => {
                return Err(Error::InvalidParameter("empty g list".into()))
            }
            GChoice::Values(v) if v.iter().any(|&g| !(g > 0.0)) => {
                return Err(Error::InvalidParameter("g must be positive".into()))
            }
            _ => {}
        }
        if self.ts.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::InvalidParameter("T must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub n: usize,
    pub gab_ratio: f64,
    /// rad/s.
    pub g: f64,
    /// Coherence-time scale, s: `1/γ_φ,f` of the parameters used.
    pub t: f64,
    pub fidelity: f64,
    /// Total protocol time, s.
    pub tau: f64,
    pub trace_drift: f64,
    pub min_eig: f64,
    pub top_population: f64,
    pub flags: Vec<String>,
    /// Set when the run failed; numeric fields are NaN then.
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    /// Sort by `(n, gab_ratio, g, t)`.
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            a.n.cmp(&b.n)
                .then(a.gab_ratio.total_cmp(&b.gab_ratio))
                .then(a.g.total_cmp(&b.g))
                .then(a.t.total_cmp(&b.t))
        });
    }

    pub fn find(&self, n: usize, gab_ratio: f64) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.n == n && r.gab_ratio == gab_ratio)
    }
}

/// One grid point, fully resolved.
#[derive(Clone, Debug)]
pub struct GridPoint {
    pub n: usize,
    pub params: DeviceParams,
}

/// Run one protocol and tabulate it; errors are folded into the row.
pub fn evaluate_point(point: &GridPoint, cfg: &IntegratorConfig, mode: Mode) -> ResultRow {
    let p = &point.params;
    let mut row = ResultRow {
        n: point.n,
        gab_ratio: p.gab_ratio,
        g: p.g,
        t: 1.0 / p.gamma_phi_f,
        fidelity: f64::NAN,
        tau: f64::NAN,
        trace_drift: f64::NAN,
        min_eig: f64::NAN,
        top_population: f64::NAN,
        flags: Vec::new(),
        error: None,
    };
    let outcome = tau_total(point.n, &derive_couplings(p), p).and_then(|tau| {
        let res = run_protocol(point.n, p, cfg, mode)?;
        Ok((tau, run_fidelity(&res)?, res))
    });
    match outcome {
        Ok((tau, f, res)) => {
            let (ta, tb) = res.max_top_population();
            row.fidelity = f;
            row.tau = tau;
            row.trace_drift = res.max_abs_trace_drift();
            row.min_eig = res.min_eigenvalue();
            row.top_population = ta.max(tb);
            row.flags = res.flags();
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Evaluate grid points concurrently; output order follows input order.
pub fn evaluate_grid(points: &[GridPoint], cfg: &IntegratorConfig, mode: Mode) -> ResultTable {
    let rows = points.par_iter().map(|p| evaluate_point(p, cfg, mode)).collect();
    ResultTable { rows }
}

fn params_for(base: &DeviceParams, g: f64, gab_ratio: f64, t: Option<f64>) -> DeviceParams {
    let mut p = base.clone();
    p.g = g;
    p.gab_ratio = gab_ratio;
    match t {
        Some(t) => p.with_coherence_time(t),
        None => p,
    }
}

/// Fidelity versus `N` for every `(N, g_ab/g, g, T)` combination.
pub fn sweep_n(spec: &SweepSpec) -> Result<ResultTable> {
    spec.validate()?;
    let ts: Vec<Option<f64>> = if spec.ts.is_empty() {
        vec![None]
    } else {
        spec.ts.iter().copied().map(Some).collect()
    };
    let mut points = Vec::new();
    let mut optimized = Vec::new();
    for &n in &spec.ns {
        for &ratio in &spec.gab_ratios {
            for &t in &ts {
                match &spec.g {
                    GChoice::Listed => {
                        let g = listed_g_mhz(n).map(mhz_to_rad).ok_or_else(|| {
                            Error::InvalidParameter(format!("no listed g for N = {n}"))
                        })?;
                        points.push(GridPoint {
                            n,
                            params: params_for(&spec.base, g, ratio, t),
                        });
                    }
                    GChoice::Values(gs) => {
                        for &g in gs {
                            points.push(GridPoint {
                                n,
                                params: params_for(&spec.base, g, ratio, t),
                            });
                        }
                    }
                    GChoice::Optimize { lo, hi, tol } => {
                        let p = params_for(&spec.base, *lo, ratio, t);
                        let opt = optimize_g(n, &p, &spec.cfg, spec.mode, (*lo, *hi), *tol)?;
                        optimized.push(evaluate_point(
                            &GridPoint {
                                n,
                                params: params_for(&spec.base, opt.g_opt, ratio, t),
                            },
                            &spec.cfg,
                            spec.mode,
                        ));
                    }
                }
            }
        }
    }
    let mut table = evaluate_grid(&points, &spec.cfg, spec.mode);
    table.rows.extend(optimized);
    table.sort();
    Ok(table)
}

/// Fidelity over the `{T, g}` grid at fixed `N`, with rates from the `T`
/// scaling rule and everything else from `base`.
pub fn sweep_t_g(
    n: usize,
    ts: &[f64],
    gs: &[f64],
    base: &DeviceParams,
    cfg: &IntegratorConfig,
) -> Result<ResultTable> {
    if ts.is_empty() || gs.is_empty() {
        return Err(Error::InvalidParameter("empty T or g list".into()));
    }
    if ts.iter().chain(gs).any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidParameter("T and g must be positive".into()));
    }
    let points: Vec<GridPoint> = ts
        .iter()
        .flat_map(|&t| {
            gs.iter().map(move |&g| GridPoint {
                n,
                params: params_for(base, g, base.gab_ratio, Some(t)),
            })
        })
        .collect();
    let mut table = evaluate_grid(&points, cfg, Mode::Full);
    table.sort();
    Ok(table)
}

/// `(x, f(x))` pairs in evaluation order.
pub type Evaluations = Vec<(f64, f64)>;

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizeResult {
    /// rad/s.
    pub g_opt: f64,
    pub f_opt: f64,
    /// Every `(g, F)` evaluated, in evaluation order.
    pub evaluations: Vec<(f64, f64)>,
}

/// Golden-section maximization of `f` on `[lo, hi]`; stops when the bracket
/// is narrower than `tol` and returns the best point evaluated.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64, Evaluations)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo > 0.0 && hi > lo && tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < lo < hi and tol > 0, got [{lo}, {hi}], tol {tol}"
        )));
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut evals = Vec::new();
    let mut eval = |x: f64, evals: &mut Vec<(f64, f64)>| -> Result<f64> {
        let y = f(x)?;
        if !y.is_finite() {
            return Err(Error::InvalidParameter(format!("objective is {y} at {x}")));
        }
        evals.push((x, y));
        Ok(y)
    };
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = eval(c, &mut evals)?;
    let mut fd = eval(d, &mut evals)?;
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c, &mut evals)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d, &mut evals)?;
        }
    }
    let (x, y) = evals
        .iter()
        .copied()
        .fold((f64::NAN, f64::NEG_INFINITY), |best, e| if e.1 > best.1 { e } else { best });
    Ok((x, y, evals))
}

/// Maximize the protocol fidelity over `g` for fixed `N`; the other
/// parameters (including `g_ab/g`) come from `params`.
pub fn optimize_g(
    n: usize,
    params: &DeviceParams,
    cfg: &IntegratorConfig,
    mode: Mode,
    bounds: (f64, f64),
    tol: f64,
) -> Result<OptimizeResult> {
    let objective = |g: f64| -> Result<f64> {
        let mut p = params.clone();
        p.g = g;
        let res = run_protocol(n, &p, cfg, mode)?;
        run_fidelity(&res)
    };
    let (g_opt, f_opt, evaluations) = golden_section_max(objective, bounds.0, bounds.1, tol)?;
    Ok(OptimizeResult {
        g_opt,
        f_opt,
        evaluations,
    })
}
