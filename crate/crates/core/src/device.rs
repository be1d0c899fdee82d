//! Physical parameters of the two-resonator / qutrit device and the
//! bookkeeping derived from them.
//!
//! Everything stored here is SI with angular frequencies: rad/s, 1/s, s, F.
//! The `*_to_*` helpers are the only place where lab units (GHz, MHz, μs, ns,
//! fF) are converted.

use std::f64::consts::{PI, SQRT_2, TAU};

use crate::error::{Error, Result};

/// `ν` in GHz to angular frequency in rad/s.
pub fn ghz_to_rad(nu_ghz: f64) -> f64 {
    TAU * nu_ghz * 1e9
}

/// `ν` in MHz to angular frequency in rad/s.
pub fn mhz_to_rad(nu_mhz: f64) -> f64 {
    TAU * nu_mhz * 1e6
}

pub fn rad_to_mhz(omega: f64) -> f64 {
    omega / (TAU * 1e6)
}

pub fn rad_to_ghz(omega: f64) -> f64 {
    omega / (TAU * 1e9)
}

/// Lifetime in μs to a rate in 1/s. An infinite lifetime gives a zero rate.
pub fn inv_us_to_rate(lifetime_us: f64) -> f64 {
    1.0 / (lifetime_us * 1e-6)
}

pub fn ns_to_s(t_ns: f64) -> f64 {
    t_ns * 1e-9
}

pub fn ff_to_farad(c_ff: f64) -> f64 {
    c_ff * 1e-15
}

/// Coupling constants of the optimized runs, `g/2π` in MHz for N = 1..=5.
pub const LISTED_G_MHZ: [f64; 5] = [3.9, 2.2, 1.8, 1.5, 1.3];

pub fn listed_g_mhz(n: usize) -> Option<f64> {
    n.checked_sub(1).and_then(|i| LISTED_G_MHZ.get(i)).copied()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeviceParams {
    /// Resonator a angular frequency.
    pub omega_a: f64,
    /// Resonator b angular frequency.
    pub omega_b: f64,
    /// `ω_fe − ω_a` during stage 1 (negative).
    pub delta1: f64,
    /// `ω_fe − ω_eg` seen by the stage-1 pulse (negative).
    pub delta2: f64,
    /// `ω'_eg − ω_b` during stage 2 (positive).
    pub delta3: f64,
    /// `ω'_eg − ω'_fe` seen by the stage-2 pulses (positive).
    pub delta4: f64,
    /// Base qutrit-resonator coupling `g_eg`.
    pub g: f64,
    /// Base Rabi rate, `Ω_eg = Ω_fe`.
    pub omega_rabi: f64,
    /// Inter-resonator crosstalk in units of `g`.
    pub gab_ratio: f64,
    pub gamma_phi_f: f64,
    pub gamma_phi_e: f64,
    pub gamma_fe: f64,
    pub gamma_eg: f64,
    pub kappa_a: f64,
    pub kappa_b: f64,
    /// Duration of each level-spacing adjustment.
    pub t_d: f64,
    pub c_c: f64,
    pub c_q: f64,
    /// Fock levels kept above `N` in each resonator.
    pub n_guard: usize,
}

impl DeviceParams {
    /// Default parameter set with the given base coupling (rad/s).
    pub fn standard(g: f64) -> Self {
        Self {
            omega_a: ghz_to_rad(6.0),
            omega_b: ghz_to_rad(3.5),
            delta1: mhz_to_rad(-400.0),
            delta2: mhz_to_rad(-400.0),
            delta3: mhz_to_rad(400.0),
            delta4: mhz_to_rad(400.0),
            g,
            omega_rabi: mhz_to_rad(18.0),
            gab_ratio: 0.0,
            gamma_phi_f: inv_us_to_rate(3.0),
            gamma_phi_e: inv_us_to_rate(3.0),
            gamma_fe: inv_us_to_rate(1.5),
            gamma_eg: inv_us_to_rate(3.0),
            kappa_a: inv_us_to_rate(20.0),
            kappa_b: inv_us_to_rate(20.0),
            t_d: ns_to_s(1.0),
            c_c: ff_to_farad(1.0),
            c_q: ff_to_farad(98.0),
            n_guard: 2,
        }
    }

    /// Defaults with the optimized `g` listed for this `N`.
    pub fn standard_for_n(n: usize) -> Result<Self> {
        let g = listed_g_mhz(n).ok_or_else(|| {
            Error::InvalidParameter(format!("no listed coupling for N = {n} (only 1..=5)"))
        })?;
        Ok(Self::standard(mhz_to_rad(g)))
    }

    /// Apply the coherence-time scaling rule used for the `{T, g}` map:
    /// `γ_φ,f⁻¹ = γ_φ,e⁻¹ = T`, `γ_fe⁻¹ = T/2`, `γ_eg⁻¹ = T`.
    pub fn with_coherence_time(mut self, t: f64) -> Self {
        self.gamma_phi_f = 1.0 / t;
        self.gamma_phi_e = 1.0 / t;
        self.gamma_fe = 2.0 / t;
        self.gamma_eg = 1.0 / t;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        let all_finite = [
            self.omega_a,
            self.omega_b,
            self.delta1,
            self.delta2,
            self.delta3,
            self.delta4,
            self.g,
            self.omega_rabi,
            self.gab_ratio,
            self.gamma_phi_f,
            self.gamma_phi_e,
            self.gamma_fe,
            self.gamma_eg,
            self.kappa_a,
            self.kappa_b,
            self.t_d,
            self.c_c,
            self.c_q,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !all_finite {
            return bad("all parameters must be finite");
        }
        if !(self.omega_a > self.omega_b && self.omega_b > 0.0) {
            return bad("need omega_a > omega_b > 0");
        }
        if !(self.delta1 < 0.0 && self.delta2 < 0.0) {
            return bad("delta1 and delta2 must be negative");
        }
        if !(self.delta3 > 0.0 && self.delta4 > 0.0) {
            return bad("delta3 and delta4 must be positive");
        }
        if !(self.g > 0.0 && self.omega_rabi > 0.0) {
            return bad("g and the Rabi rate must be positive");
        }
        if self.gab_ratio < 0.0 {
            return bad("gab_ratio must be non-negative");
        }
        let rates = [
            self.gamma_phi_f,
            self.gamma_phi_e,
            self.gamma_fe,
            self.gamma_eg,
            self.kappa_a,
            self.kappa_b,
        ];
        if rates.iter().any(|&r| r < 0.0) {
            return bad("decay and dephasing rates must be non-negative");
        }
        if self.t_d < 0.0 {
            return bad("t_d must be non-negative");
        }
        if self.n_guard < 1 {
            return bad("n_guard must be at least 1");
        }
        Ok(())
    }

    /// Resonator dimension needed for an `N`-photon NOON state.
    pub fn resonator_dim(&self, n: usize) -> usize {
        n + 1 + self.n_guard
    }
}

/// Couplings, Rabi rates, level spacings and detunings that follow from
/// [`DeviceParams`]. Names with a `t` suffix are the tilded quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivedCouplings {
    pub g_eg: f64,
    pub g_fe: f64,
    pub gt_fe: f64,
    pub gt_eg: f64,
    pub mu_eg: f64,
    pub mu_fe: f64,
    pub mut_eg: f64,
    pub mut_fe: f64,
    pub g_ab: f64,
    pub omega_eg_rabi: f64,
    pub omega_fe_rabi: f64,
    pub omegat_fe_rabi: f64,
    pub omegat_eg_rabi: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub delta4: f64,
    pub delta_eg: f64,
    pub delta_fe: f64,
    pub deltat_eg: f64,
    pub deltat_fe: f64,
    /// `ω_b − ω_a`.
    pub big_delta: f64,
    /// Stage-1 level spacings.
    pub omega_eg: f64,
    pub omega_fe: f64,
    /// Stage-2 level spacings.
    pub omega_eg_p: f64,
    pub omega_fe_p: f64,
}

impl DerivedCouplings {
    /// Copy with every unwanted coupling, spectator drive, and crosstalk set
    /// to zero. Resonant couplings and Rabi rates are kept.
    pub fn without_unwanted(&self) -> Self {
        Self {
            gt_fe: 0.0,
            gt_eg: 0.0,
            mu_eg: 0.0,
            mu_fe: 0.0,
            mut_eg: 0.0,
            mut_fe: 0.0,
            g_ab: 0.0,
            omegat_fe_rabi: 0.0,
            omegat_eg_rabi: 0.0,
            ..self.clone()
        }
    }
}

pub fn derive_couplings(p: &DeviceParams) -> DerivedCouplings {
    let g = p.g;
    let up = (p.omega_b / p.omega_a).sqrt();
    let down = (p.omega_a / p.omega_b).sqrt();

    // stage 1: resonator a resonant with g<->e
    let omega_eg = p.omega_a;
    let omega_fe = p.omega_a + p.delta1;
    // stage 2: resonator b resonant with e<->f
    let omega_fe_p = p.omega_b;
    let omega_eg_p = p.omega_b + p.delta3;

    DerivedCouplings {
        g_eg: g,
        g_fe: SQRT_2 * g,
        gt_fe: SQRT_2 * g,
        gt_eg: g,
        mu_eg: g * up,
        mu_fe: SQRT_2 * g * up,
        mut_eg: g * down,
        mut_fe: SQRT_2 * g * down,
        g_ab: p.gab_ratio * g,
        omega_eg_rabi: p.omega_rabi,
        omega_fe_rabi: p.omega_rabi,
        omegat_fe_rabi: SQRT_2 * p.omega_rabi,
        omegat_eg_rabi: p.omega_rabi / SQRT_2,
        delta1: p.delta1,
        delta2: p.delta2,
        delta3: p.delta3,
        delta4: p.delta4,
        delta_eg: omega_eg - p.omega_b,
        delta_fe: omega_fe - p.omega_b,
        deltat_eg: omega_eg_p - p.omega_a,
        deltat_fe: omega_fe_p - p.omega_a,
        big_delta: p.omega_b - p.omega_a,
        omega_eg,
        omega_fe,
        omega_eg_p,
        omega_fe_p,
    }
}

/// Crosstalk estimate `g · C_c / (2 C_c + C_q)`.
pub fn crosstalk_g_ab(g: f64, c_c: f64, c_q: f64) -> Result<f64> {
    if !(c_c >= 0.0 && c_q > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "capacitances must be positive (C_c = {c_c}, C_q = {c_q})"
        )));
    }
    Ok(g * c_c / (2.0 * c_c + c_q))
}

/// Swap time for the `j`-th photon: half a vacuum-Rabi period at `√j · g`.
pub fn swap_time(j: usize, g: f64) -> f64 {
    PI / (2.0 * (j as f64).sqrt() * g)
}

/// Duration of a resonant π/2-type pulse, `π / (2Ω)`.
pub fn pulse_time(omega: f64) -> f64 {
    PI / (2.0 * omega)
}

/// Total protocol time for an `N`-photon NOON state.
pub fn tau_total(n: usize, d: &DerivedCouplings, p: &DeviceParams) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    let swaps_a: f64 = (1..=n).map(|j| swap_time(j, d.g_eg)).sum();
    let swaps_b: f64 = (1..=n).map(|j| swap_time(j, d.g_fe)).sum();
    Ok(swaps_a
        + swaps_b
        + n as f64 * pulse_time(d.omega_eg_rabi)
        + (n - 1) as f64 * pulse_time(d.omega_fe_rabi)
        + 3.0 * p.t_d)
}

/// Entanglement lifetime `½ min(T_a, T_b)` with `T_k = (Q_k / 2πν_k) / n̄_k`.
pub fn t_cav(q_a: f64, q_b: f64, nu_a: f64, nu_b: f64, nbar_a: f64, nbar_b: f64) -> Result<f64> {
    if [q_a, q_b, nu_a, nu_b, nbar_a, nbar_b].iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidParameter(
            "quality factors, frequencies and photon numbers must be positive".into(),
        ));
    }
    let ta = resonator_lifetime(q_a, nu_a, nbar_a);
    let tb = resonator_lifetime(q_b, nu_b, nbar_b);
    Ok(0.5 * ta.min(tb))
}

pub fn resonator_lifetime(q: f64, nu: f64, nbar: f64) -> f64 {
    (q / (TAU * nu)) / nbar
}

/// Loaded quality factor for photon decay rate `kappa` at frequency `nu` (Hz).
pub fn quality_factor(kappa: f64, nu: f64) -> f64 {
    TAU * nu / kappa
}

/// Mean photon number per resonator of an `N`-photon NOON state.
pub fn noon_mean_photons(n: usize) -> f64 {
    n as f64 / 2.0
}
