//! Command-line front end: config ingestion, command dispatch, CSV and
//! result-document output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::device::{
    derive_couplings, ff_to_farad, ghz_to_rad, inv_us_to_rate, mhz_to_rad, ns_to_s, listed_g_mhz,
    tau_total, DeviceParams,
};
use crate::error::{Error, Result};
use crate::experiments::{run_fidelity, sweep_n, sweep_t_g, GChoice, ResultTable, SweepSpec};
use crate::lindblad::IntegratorConfig;
use crate::protocol::{ideal_intermediate_state, ideal_noon_state, run_protocol, Checkpoint, Mode};
use crate::qspace::{HilbertSpace, Ket};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PHYSICS: i32 = 2;

pub const CSV_HEADER: &str = "n,gab_ratio,g_mhz,t_us,fidelity,tau_ns,trace_drift,min_eig";

/// `[device]` section. Every key carries its unit; missing keys take the
/// default parameter set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    pub omega_a_ghz: Option<f64>,
    pub omega_b_ghz: Option<f64>,
    pub delta1_mhz: Option<f64>,
    pub delta2_mhz: Option<f64>,
    pub delta3_mhz: Option<f64>,
    pub delta4_mhz: Option<f64>,
    /// Absent: the listed optimum for the requested `N`.
    pub g_mhz: Option<f64>,
    pub omega_rabi_mhz: Option<f64>,
    pub gab_ratio: Option<f64>,
    pub kappa_a_inv_us: Option<f64>,
    pub kappa_b_inv_us: Option<f64>,
    pub gamma_fe_inv_us: Option<f64>,
    pub gamma_eg_inv_us: Option<f64>,
    pub gamma_phi_f_inv_us: Option<f64>,
    pub gamma_phi_e_inv_us: Option<f64>,
    pub t_d_ns: Option<f64>,
    pub c_c_ff: Option<f64>,
    pub c_q_ff: Option<f64>,
    pub n_guard: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub dt_max_ps: Option<f64>,
    pub samples_per_period: Option<usize>,
    pub record_stride: Option<usize>,
}

/// Input configuration. A result document written by `run` is also a valid
/// config: its output sections are accepted and ignored.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub device: DeviceSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default, skip_serializing)]
    pub resolved: Option<toml::Value>,
    #[serde(default, skip_serializing)]
    pub result: Option<toml::Value>,
    #[serde(default, skip_serializing)]
    pub schedule: Option<toml::Value>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Fill every key with its effective value; `g_mhz` falls back to the
    /// listed optimum for `n` when given.
    pub fn resolved(&self, n: Option<usize>) -> Result<Self> {
        let d = &self.device;
        let i = &self.integrator;
        let g_mhz = match (d.g_mhz, n) {
            (Some(g), _) => Some(g),
            (None, Some(n)) => Some(listed_g_mhz(n).ok_or_else(|| {
                Error::Config(format!("g_mhz not set and no listed value for N = {n}"))
            })?),
            (None, None) => None,
        };
        let device = DeviceSection {
            omega_a_ghz: Some(d.omega_a_ghz.unwrap_or(6.0)),
            omega_b_ghz: Some(d.omega_b_ghz.unwrap_or(3.5)),
            delta1_mhz: Some(d.delta1_mhz.unwrap_or(-400.0)),
            delta2_mhz: Some(d.delta2_mhz.unwrap_or(-400.0)),
            delta3_mhz: Some(d.delta3_mhz.unwrap_or(400.0)),
            delta4_mhz: Some(d.delta4_mhz.unwrap_or(400.0)),
            g_mhz,
            omega_rabi_mhz: Some(d.omega_rabi_mhz.unwrap_or(18.0)),
            gab_ratio: Some(d.gab_ratio.unwrap_or(0.0)),
            kappa_a_inv_us: Some(d.kappa_a_inv_us.unwrap_or(20.0)),
            kappa_b_inv_us: Some(d.kappa_b_inv_us.unwrap_or(20.0)),
            gamma_fe_inv_us: Some(d.gamma_fe_inv_us.unwrap_or(1.5)),
            gamma_eg_inv_us: Some(d.gamma_eg_inv_us.unwrap_or(3.0)),
            gamma_phi_f_inv_us: Some(d.gamma_phi_f_inv_us.unwrap_or(3.0)),
            gamma_phi_e_inv_us: Some(d.gamma_phi_e_inv_us.unwrap_or(3.0)),
            t_d_ns: Some(d.t_d_ns.unwrap_or(1.0)),
            c_c_ff: Some(d.c_c_ff.unwrap_or(1.0)),
            c_q_ff: Some(d.c_q_ff.unwrap_or(98.0)),
            n_guard: Some(d.n_guard.unwrap_or(2)),
        };
        let integrator = IntegratorSection {
            dt_max_ps: Some(i.dt_max_ps.unwrap_or(1000.0)),
            samples_per_period: Some(i.samples_per_period.unwrap_or(40)),
            record_stride: Some(i.record_stride.unwrap_or(0)),
        };
        Ok(Self {
            device,
            integrator,
            ..Default::default()
        })
    }

    /// Device parameters in rad/s and seconds. `g` is 1 MHz when neither the
    /// config nor `n` fixes it.
    pub fn device_params(&self, n: Option<usize>) -> Result<DeviceParams> {
        let r = self.resolved(n)?.device;
        let p = DeviceParams {
            omega_a: ghz_to_rad(r.omega_a_ghz.unwrap()),
            omega_b: ghz_to_rad(r.omega_b_ghz.unwrap()),
            delta1: mhz_to_rad(r.delta1_mhz.unwrap()),
            delta2: mhz_to_rad(r.delta2_mhz.unwrap()),
            delta3: mhz_to_rad(r.delta3_mhz.unwrap()),
            delta4: mhz_to_rad(r.delta4_mhz.unwrap()),
            g: mhz_to_rad(r.g_mhz.unwrap_or(1.0)),
            omega_rabi: mhz_to_rad(r.omega_rabi_mhz.unwrap()),
            gab_ratio: r.gab_ratio.unwrap(),
            gamma_phi_f: inv_us_to_rate(r.gamma_phi_f_inv_us.unwrap()),
            gamma_phi_e: inv_us_to_rate(r.gamma_phi_e_inv_us.unwrap()),
            gamma_fe: inv_us_to_rate(r.gamma_fe_inv_us.unwrap()),
            gamma_eg: inv_us_to_rate(r.gamma_eg_inv_us.unwrap()),
            kappa_a: inv_us_to_rate(r.kappa_a_inv_us.unwrap()),
            kappa_b: inv_us_to_rate(r.kappa_b_inv_us.unwrap()),
            t_d: ns_to_s(r.t_d_ns.unwrap()),
            c_c: ff_to_farad(r.c_c_ff.unwrap()),
            c_q: ff_to_farad(r.c_q_ff.unwrap()),
            n_guard: r.n_guard.unwrap(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn integrator_config(&self) -> Result<IntegratorConfig> {
        let r = self.resolved(None)?.integrator;
        let cfg = IntegratorConfig {
            dt_max: r.dt_max_ps.unwrap() / 1e12,
            samples_per_fastest_period: r.samples_per_period.unwrap(),
            record_stride: r.record_stride.unwrap(),
            ..IntegratorConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config sections serialize")
    }
}

/// `%.9g`-style formatting: 9 significant digits, trailing zeros dropped.
pub fn format_g9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// CSV text for a table, with one `#` metadata line first.
pub fn table_to_csv(table: &ResultTable, metadata: &str) -> String {
    let mut out = String::new();
    writeln!(out, "# {metadata}").unwrap();
    writeln!(out, "{CSV_HEADER}").unwrap();
    for r in &table.rows {
        let cells = [
            format_g9(r.gab_ratio),
            format_g9(crate::device::rad_to_mhz(r.g)),
            format_g9(r.t * 1e6),
            format_g9(r.fidelity),
            format_g9(r.tau * 1e9),
            format_g9(r.trace_drift),
            format_g9(r.min_eig),
        ];
        writeln!(out, "{},{}", r.n, cells.join(",")).unwrap();
    }
    out
}

#[derive(Debug, Parser)]
#[command(name = "noonsim", version, about = "NOON-state generation in two resonators via a qutrit coupler")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML config with [device] and [integrator] sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the ideal target state amplitudes.
    Ideal {
        #[arg(long)]
        n: usize,
        /// Also print the intermediate states of the ideal protocol.
        #[arg(long)]
        checkpoints: bool,
        #[arg(long, default_value_t = 2)]
        n_guard: usize,
    },
    /// Run one protocol and write a result document.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
        /// Overrides the config's gab_ratio.
        #[arg(long)]
        gab_ratio: Option<f64>,
        #[arg(long, default_value = "full")]
        mode: Mode,
    },
    /// Fidelity versus N.
    SweepN {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5)]
        n_max: usize,
        #[arg(long, value_delimiter = ',', default_value = "2")]
        gab_ratios: Vec<f64>,
        /// Coupling values in MHz; the listed optimum per N when omitted.
        #[arg(long, value_delimiter = ',')]
        g_mhz: Vec<f64>,
        /// Coherence times in μs for the T scaling rule; config rates when
        /// omitted.
        #[arg(long, value_delimiter = ',')]
        t_us: Vec<f64>,
        #[arg(long, default_value = "full")]
        mode: Mode,
    },
    /// Maximize the fidelity over g at fixed N.
    OptimizeG {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
        /// Overrides the config's gab_ratio.
        #[arg(long)]
        gab_ratio: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        lo_mhz: f64,
        #[arg(long, default_value_t = 5.0)]
        hi_mhz: f64,
        #[arg(long, default_value_t = 0.05)]
        tol_mhz: f64,
        #[arg(long, default_value = "full")]
        mode: Mode,
    },
    /// Fidelity over the {T, g} grid.
    SweepTg {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "3,5,10")]
        t_us: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1.2,1.5,1.8,2.1,2.4")]
        g_mhz: Vec<f64>,
    },
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile> {
    match path {
        Some(p) => ConfigFile::load(p),
        None => Ok(ConfigFile::default()),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn ket_listing(ket: &Ket) -> String {
    let mut out = String::new();
    for (i, a) in ket.amps.iter().enumerate() {
        if a.norm() > 1e-12 {
            writeln!(
                out,
                "{} {} {}",
                ket.space.label(i),
                format_g9(a.re),
                format_g9(a.im)
            )
            .unwrap();
        }
    }
    out
}

fn cmd_ideal(n: usize, checkpoints: bool, n_guard: usize) -> Result<String> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    let dim = n + 1 + n_guard;
    let space = HilbertSpace::new(dim, dim)?;
    let mut out = format!("# target N={n}\n");
    out += &ket_listing(&ideal_noon_state(n, space)?);
    if checkpoints {
        for cp in Checkpoint::ALL {
            if cp.defined_for(n) {
                writeln!(out, "# checkpoint {cp:?}").unwrap();
                out += &ket_listing(&ideal_intermediate_state(n, cp, space)?);
            }
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct ResolvedSection {
    omega_a: f64,
    omega_b: f64,
    delta1: f64,
    delta2: f64,
    delta3: f64,
    delta4: f64,
    g_eg: f64,
    g_fe: f64,
    g_ab: f64,
    omega_eg_rabi: f64,
    omega_fe_rabi: f64,
    big_delta: f64,
    gamma_phi_f: f64,
    gamma_phi_e: f64,
    gamma_fe: f64,
    gamma_eg: f64,
    kappa_a: f64,
    kappa_b: f64,
    t_d: f64,
    resonator_dim: usize,
}

#[derive(Serialize)]
struct ScheduleEntry {
    kind: &'static str,
    stage: u8,
    step: usize,
    duration_ns: f64,
}

#[derive(Serialize)]
struct ResultSection {
    n: usize,
    mode: &'static str,
    fidelity: f64,
    tau_ns: f64,
    trace_drift: f64,
    min_eigenvalue: f64,
    top_population_a: f64,
    top_population_b: f64,
    flags: Vec<String>,
}

#[derive(Serialize)]
struct ResultDocument<'a> {
    #[serde(flatten)]
    config: &'a ConfigFile,
    resolved: ResolvedSection,
    result: ResultSection,
    schedule: Vec<ScheduleEntry>,
}

/// Output of a single run: the document text and whether a physics flag
/// was raised.
pub struct RunReport {
    pub document: String,
    pub fidelity: f64,
    pub flagged: bool,
}

pub fn cmd_run(config: &ConfigFile, n: usize, gab_ratio: Option<f64>, mode: Mode) -> Result<RunReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    let mut resolved = config.resolved(Some(n))?;
    if let Some(r) = gab_ratio {
        resolved.device.gab_ratio = Some(r);
    }
    let p = resolved.device_params(Some(n))?;
    let cfg = resolved.integrator_config()?;
    let d = derive_couplings(&p);
    let tau = tau_total(n, &d, &p)?;
    let res = run_protocol(n, &p, &cfg, mode)?;
    let fidelity = run_fidelity(&res)?;
    let (ta, tb) = res.max_top_population();
    let flags = res.flags();
    let flagged = !flags.is_empty();
    let doc = ResultDocument {
        config: &resolved,
        resolved: ResolvedSection {
            omega_a: p.omega_a,
            omega_b: p.omega_b,
            delta1: p.delta1,
            delta2: p.delta2,
            delta3: p.delta3,
            delta4: p.delta4,
            g_eg: d.g_eg,
            g_fe: d.g_fe,
            g_ab: d.g_ab,
            omega_eg_rabi: d.omega_eg_rabi,
            omega_fe_rabi: d.omega_fe_rabi,
            big_delta: d.big_delta,
            gamma_phi_f: p.gamma_phi_f,
            gamma_phi_e: p.gamma_phi_e,
            gamma_fe: p.gamma_fe,
            gamma_eg: p.gamma_eg,
            kappa_a: p.kappa_a,
            kappa_b: p.kappa_b,
            t_d: p.t_d,
            resonator_dim: res.space.dim_a(),
        },
        result: ResultSection {
            n,
            mode: mode.name(),
            fidelity,
            tau_ns: tau * 1e9,
            trace_drift: res.max_abs_trace_drift(),
            min_eigenvalue: res.min_eigenvalue(),
            top_population_a: ta,
            top_population_b: tb,
            flags,
        },
        schedule: res
            .schedule
            .segments
            .iter()
            .map(|s| ScheduleEntry {
                kind: s.kind.name(),
                stage: s.stage.number(),
                step: s.step_index,
                duration_ns: s.duration * 1e9,
            })
            .collect(),
    };
    let document = toml::to_string(&doc).map_err(|e| Error::Config(e.to_string()))?;
    Ok(RunReport {
        document,
        fidelity,
        flagged,
    })
}

fn table_flagged(table: &ResultTable) -> bool {
    let mut flagged = false;
    for r in &table.rows {
        if let Some(e) = &r.error {
            eprintln!("N={} g_ab/g={}: {e}", r.n, r.gab_ratio);
            flagged = true;
        }
        for f in &r.flags {
            eprintln!("N={} g_ab/g={}: {f}", r.n, r.gab_ratio);
            flagged = true;
        }
    }
    flagged
}

fn list(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

/// Run a parsed command; returns the exit code.
pub fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Ideal {
            n,
            checkpoints,
            n_guard,
        } => {
            print!("{}", cmd_ideal(n, checkpoints, n_guard)?);
            Ok(EXIT_OK)
        }
        Command::Run {
            common,
            n,
            gab_ratio,
            mode,
        } => {
            let config = load_config(common.config.as_deref())?;
            let report = cmd_run(&config, n, gab_ratio, mode)?;
            emit(common.out.as_deref(), &report.document)?;
            Ok(if report.flagged { EXIT_PHYSICS } else { EXIT_OK })
        }
        Command::SweepN {
            common,
            n_max,
            gab_ratios,
            g_mhz,
            t_us,
            mode,
        } => {
            let config = load_config(common.config.as_deref())?;
            let mut base = config.device_params(None)?;
            if let Some(g) = config.device.g_mhz {
                base.g = mhz_to_rad(g);
            }
            let g = if !g_mhz.is_empty() {
                GChoice::Values(g_mhz.iter().copied().map(mhz_to_rad).collect())
            } else if config.device.g_mhz.is_some() {
                GChoice::Values(vec![base.g])
            } else {
                GChoice::Listed
            };
            let spec = SweepSpec {
                ns: (1..=n_max).collect(),
                gab_ratios: gab_ratios.clone(),
                g,
                ts: t_us.iter().map(|t| t * 1e-6).collect(),
                base,
                cfg: config.integrator_config()?,
                mode,
            };
            let table = sweep_n(&spec)?;
            let meta = format!(
                "noonsim sweep-n mode={} n_max={n_max} gab_ratios={} g_mhz={} t_us={}",
                mode.name(),
                list(&gab_ratios),
                if g_mhz.is_empty() { "default".into() } else { list(&g_mhz) },
                if t_us.is_empty() { "config".into() } else { list(&t_us) },
            );
            emit(common.out.as_deref(), &table_to_csv(&table, &meta))?;
            Ok(if table_flagged(&table) { EXIT_PHYSICS } else { EXIT_OK })
        }
        Command::OptimizeG {
            common,
            n,
            gab_ratio,
            lo_mhz,
            hi_mhz,
            tol_mhz,
            mode,
        } => {
            let config = load_config(common.config.as_deref())?;
            let base = config.device_params(None)?;
            let ratio = gab_ratio.unwrap_or(base.gab_ratio);
            let spec = SweepSpec {
                ns: vec![n],
                gab_ratios: vec![ratio],
                g: GChoice::Optimize {
                    lo: mhz_to_rad(lo_mhz),
                    hi: mhz_to_rad(hi_mhz),
                    tol: mhz_to_rad(tol_mhz),
                },
                ts: Vec::new(),
                base,
                cfg: config.integrator_config()?,
                mode,
            };
            let table = sweep_n(&spec)?;
            let meta = format!(
                "noonsim optimize-g mode={} n={n} gab_ratio={ratio} bounds_mhz={lo_mhz};{hi_mhz} tol_mhz={tol_mhz}",
                mode.name()
            );
            emit(common.out.as_deref(), &table_to_csv(&table, &meta))?;
            Ok(if table_flagged(&table) { EXIT_PHYSICS } else { EXIT_OK })
        }
        Command::SweepTg {
            common,
            n,
            t_us,
            g_mhz,
        } => {
            let config = load_config(common.config.as_deref())?;
            let base = config.device_params(None)?;
            let ts: Vec<f64> = t_us.iter().map(|t| t * 1e-6).collect();
            let gs: Vec<f64> = g_mhz.iter().copied().map(mhz_to_rad).collect();
            let table = sweep_t_g(n, &ts, &gs, &base, &config.integrator_config()?)?;
            let meta = format!(
                "noonsim sweep-tg n={n} t_us={} g_mhz={}",
                list(&t_us),
                list(&g_mhz)
            );
            emit(common.out.as_deref(), &table_to_csv(&table, &meta))?;
            Ok(if table_flagged(&table) { EXIT_PHYSICS } else { EXIT_OK })
        }
    }
}

/// Parse `args`, run, report errors on stderr; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
