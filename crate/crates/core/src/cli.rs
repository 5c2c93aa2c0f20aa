//! Command-line front end: load system specs, run derivations,
//! verifications, flows and integrability reports, emit JSON/CSV.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::catalog::{self, SampleDomain};
use crate::error::{Error, Result};
use crate::expr::{eval_jet, parse_expression};
use crate::flow::{
    action_integral, bump_profile, conservation_drift, fit_quadratic, integrate_characteristic,
    flow_symmetry, stationarity_probe,
};
use crate::geometry::{
    characteristic_field, elementary_action, pc_contract, BetaForm, FieldValue, OneFormValue,
    PhasePoint, SystemSpec,
};
use crate::integrability::{integrability_report, SV_TOL};
use crate::jsonfmt;
use crate::noether::{directional_derivative, symmetry_residuals, SymmetryCandidate};
use crate::sample::sample_points;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Parser, Debug)]
#[command(name = "noether", about = "Noether symmetries of time-dependent Hamiltonian systems")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct SystemArg {
    /// Builtin system name or path to a JSON system-spec file.
    #[arg(long)]
    pub system: String,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Derive the Noether symmetry of an integral at a point.
    Derive {
        #[command(flatten)]
        system: SystemArg,
        /// Name of the integral in the system spec.
        #[arg(long)]
        integral: String,
        /// Comma-separated coordinates `t,q1..qn,p1..pn`.
        #[arg(long)]
        point: String,
        #[arg(long, default_value_t = crate::geometry::EPS_RHO)]
        eps_rho: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify the symmetry conditions for derived symmetries over sampled points.
    Verify {
        #[command(flatten)]
        system: SystemArg,
        /// Restrict to one integral; all integrals when omitted.
        #[arg(long)]
        integral: Option<String>,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate a characteristic trajectory; export CSV and a drift table.
    Flow {
        #[command(flatten)]
        system: SystemArg,
        #[arg(long)]
        point: String,
        #[arg(long, default_value_t = 1.0)]
        duration: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        /// Flow along the symmetry derived from this integral instead of Z.
        #[arg(long)]
        symmetry_of: Option<String>,
        /// Flow parameter length when `--symmetry-of` is used.
        #[arg(long, default_value_t = 0.01)]
        s: f64,
        /// Trajectory CSV destination.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stationarity probe of the action functional along a trajectory.
    Action {
        #[command(flatten)]
        system: SystemArg,
        #[arg(long)]
        point: String,
        #[arg(long, default_value_t = 0.5)]
        duration: f64,
        #[arg(long, default_value_t = 1e-4)]
        step: f64,
        /// Comma-separated probe amplitudes (each used with both signs).
        #[arg(long, default_value = "1e-3,1e-2")]
        amplitudes: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrability hypothesis report for a set of integrals.
    Integrability {
        #[command(flatten)]
        system: SystemArg,
        /// Comma-separated integral names.
        #[arg(long)]
        integrals: String,
        /// Size of the commuting subset.
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = SV_TOL)]
        sv_tol: f64,
        #[arg(long, default_value_t = 1e-6)]
        bracket_tol: f64,
        #[arg(long, default_value_t = 1e-8)]
        invariance_tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List builtin systems or export one as a JSON spec.
    Catalog {
        #[arg(long)]
        list: bool,
        /// Export this builtin as a system-spec JSON.
        #[arg(long)]
        export: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

// ---------------------------------------------------------------------------
// System-spec file format
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct BetaFile {
    #[serde(default)]
    pub dt: f64,
    #[serde(default)]
    pub dq: Vec<f64>,
    #[serde(default)]
    pub dp: Vec<f64>,
    #[serde(default)]
    pub exact: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SystemFile {
    pub n: usize,
    pub hamiltonian: String,
    #[serde(default)]
    pub integrals: BTreeMap<String, String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<BetaFile>,
}

impl SystemFile {
    pub fn compile(&self) -> Result<SystemSpec> {
        let names: HashSet<String> = self.params.keys().cloned().collect();
        let h = parse_expression(&self.hamiltonian, self.n, &names)?;
        let mut integrals = BTreeMap::new();
        for (name, src) in &self.integrals {
            integrals.insert(name.clone(), parse_expression(src, self.n, &names)?);
        }
        let beta = match &self.beta {
            None => None,
            Some(b) => {
                let constant = OneFormValue {
                    a: b.dt,
                    b: pad(&b.dq, self.n),
                    c: pad(&b.dp, self.n),
                };
                let exact = match b.exact.as_deref() {
                    None | Some("0") | Some("") => None,
                    Some(src) => Some(parse_expression(src, self.n, &names)?),
                };
                Some(BetaForm { constant: Some(constant), exact })
            }
        };
        Ok(SystemSpec { n: self.n, hamiltonian: h, integrals, beta, params: self.params.clone() })
    }

    pub fn from_spec(spec: &SystemSpec) -> SystemFile {
        SystemFile {
            n: spec.n,
            hamiltonian: spec.hamiltonian.source().to_string(),
            integrals: spec
                .integrals
                .iter()
                .map(|(k, v)| (k.clone(), v.source().to_string()))
                .collect(),
            params: spec.params.clone(),
            beta: None,
        }
    }
}

fn pad(v: &[f64], n: usize) -> Vec<f64> {
    let mut out = v.to_vec();
    out.resize(n, 0.0);
    out
}

/// Resolve `--system` to a spec plus the sampling domain to use for it.
pub fn load_system(source: &str) -> Result<(SystemSpec, SampleDomain, String)> {
    if catalog::BUILTIN_NAMES.contains(&source) {
        let entry = catalog::builtin(source)?;
        return Ok((entry.spec, entry.domain, source.to_string()));
    }
    let text = fs::read_to_string(source)
        .map_err(|e| Error::Io(format!("cannot read system file `{source}`: {e}")))?;
    let file: SystemFile = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidConfig(format!("bad system file `{source}`: {e}")))?;
    let spec = file.compile()?;
    Ok((spec, SampleDomain::default(), source.to_string()))
}

/// Parse `t,q1..qn,p1..pn`; the count must equal `2n+1`.
pub fn parse_point(text: &str, n: usize) -> Result<PhasePoint> {
    let parts: Vec<&str> = text.split(',').collect();
    let expected = 2 * n + 1;
    if parts.len() != expected {
        return Err(Error::InvalidConfig(format!(
            "point needs {expected} comma-separated coordinates (t,q1..q{n},p1..p{n}), got {}",
            parts.len()
        )));
    }
    let coords: Result<Vec<f64>> = parts
        .iter()
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("bad coordinate `{s}`")))
        })
        .collect();
    PhasePoint::from_coords(&coords?)
}

fn effective_seed(seed: u64) -> u64 {
    match std::env::var("NOETHER_SEED") {
        Ok(v) => v.parse().unwrap_or(seed),
        Err(_) => seed,
    }
}

// ---------------------------------------------------------------------------
// Output schema
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct Report<T: Serialize> {
    schema_version: &'static str,
    command: &'static str,
    system: String,
    params: BTreeMap<String, f64>,
    results: T,
    diagnostics: BTreeMap<String, serde_json::Value>,
}

#[derive(Serialize)]
struct ErrorObject {
    schema_version: &'static str,
    error: String,
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(Error::from),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn report<T: Serialize>(
    command: &'static str,
    system: &str,
    params: &BTreeMap<String, f64>,
    results: T,
    diagnostics: BTreeMap<String, serde_json::Value>,
    out: &Option<PathBuf>,
) -> Result<()> {
    let rep = Report {
        schema_version: SCHEMA_VERSION,
        command,
        system: system.to_string(),
        params: params.clone(),
        results,
        diagnostics,
    };
    emit(out, &jsonfmt::to_string(&rep)?)
}

fn num(v: f64) -> serde_json::Value {
    serde_json::json!(v)
}

// ---------------------------------------------------------------------------
// Command implementations
// ---------------------------------------------------------------------------

/// Run a parsed configuration. Returns the process exit code: 0 on success,
/// 2 on a tolerance violation in verify/integrability.
pub fn run(config: RunConfig) -> Result<i32> {
    match config.command {
        Command::Derive { system, integral, point, eps_rho, out } => {
            let (spec, _, name) = load_system(&system.system)?;
            let x = parse_point(&point, spec.n)?;
            let f = spec.integral(&integral)?.clone();
            let v = crate::noether::inverse_noether(&spec, &f, &x, eps_rho)?;
            let fval = eval_jet(&f, &x, &spec.params, 0)?.value();
            let contraction = pc_contract(&spec, &v, &x)?;
            let z = characteristic_field(&spec, &x)?;
            let zf = directional_derivative(&spec, &f, &z, &x)?;
            let warn = zf.abs() > 1e-8 * (1.0 + fval.abs());
            let rho = elementary_action(&spec, &x)?;
            #[derive(Serialize)]
            struct DeriveResult {
                point: Vec<f64>,
                integral: String,
                tau: f64,
                xi: Vec<f64>,
                eta: Vec<f64>,
                contraction_residual: f64,
                z_of_integral: f64,
                z_of_integral_warning: bool,
            }
            let mut diag = BTreeMap::new();
            diag.insert("rho".to_string(), num(rho));
            report(
                "derive",
                &name,
                &spec.params,
                DeriveResult {
                    point: x.coords(),
                    integral,
                    tau: v.tau,
                    xi: v.xi.clone(),
                    eta: v.eta.clone(),
                    contraction_residual: (contraction - fval).abs(),
                    z_of_integral: zf,
                    z_of_integral_warning: warn,
                },
                diag,
                &out,
            )?;
            Ok(0)
        }

        Command::Verify { system, integral, samples, seed, tol, out } => {
            let (spec, domain, name) = load_system(&system.system)?;
            let seed = effective_seed(seed);
            let points = sample_points(&spec, &domain, samples, seed)?;
            let targets: Vec<String> = match integral {
                Some(n) => {
                    spec.integral(&n)?;
                    vec![n]
                }
                None => spec.integrals.keys().cloned().collect(),
            };
            #[derive(Serialize)]
            struct VerifyEntry {
                integral: String,
                max_rel: f64,
                pass: bool,
            }
            let mut entries = Vec::new();
            let mut ok = true;
            for iname in targets {
                let zeta = SymmetryCandidate::derived(spec.integral(&iname)?.clone());
                let mut worst: f64 = 0.0;
                for x in &points {
                    let r = symmetry_residuals(&spec, &zeta, x)?;
                    worst = worst.max(r.max_rel);
                }
                let pass = worst <= tol;
                ok &= pass;
                entries.push(VerifyEntry { integral: iname, max_rel: worst, pass });
            }
            let mut diag = BTreeMap::new();
            diag.insert("seed".to_string(), serde_json::json!(seed));
            diag.insert("samples".to_string(), serde_json::json!(samples));
            diag.insert("tol".to_string(), num(tol));
            report("verify", &name, &spec.params, entries, diag, &out)?;
            Ok(if ok { 0 } else { 2 })
        }

        Command::Flow { system, point, duration, step, symmetry_of, s, csv, out } => {
            let (spec, _, name) = load_system(&system.system)?;
            let x0 = parse_point(&point, spec.n)?;
            let traj = match &symmetry_of {
                None => integrate_characteristic(&spec, &x0, duration, step)?,
                Some(iname) => {
                    let zeta = SymmetryCandidate::derived(spec.integral(iname)?.clone());
                    flow_symmetry(&spec, &zeta, &x0, s, step)?
                }
            };
            if let Some(path) = &csv {
                fs::write(path, traj.to_csv())?;
            }
            #[derive(Serialize)]
            struct DriftEntry {
                integral: String,
                drift: f64,
            }
            let mut drifts = Vec::new();
            for (iname, f) in &spec.integrals {
                drifts.push(DriftEntry {
                    integral: iname.clone(),
                    drift: conservation_drift(f, &traj, &spec.params)?,
                });
            }
            #[derive(Serialize)]
            struct FlowResult {
                generator: String,
                samples: usize,
                final_point: Vec<f64>,
                drift: Vec<DriftEntry>,
            }
            let mut diag = BTreeMap::new();
            diag.insert("step".to_string(), num(step));
            report(
                "flow",
                &name,
                &spec.params,
                FlowResult {
                    generator: match symmetry_of {
                        None => "characteristic".to_string(),
                        Some(i) => format!("symmetry({i})"),
                    },
                    samples: traj.samples.len(),
                    final_point: traj.last().coords(),
                    drift: drifts,
                },
                diag,
                &out,
            )?;
            Ok(0)
        }

        Command::Action { system, point, duration, step, amplitudes, out } => {
            let (spec, _, name) = load_system(&system.system)?;
            let x0 = parse_point(&point, spec.n)?;
            let traj = integrate_characteristic(&spec, &x0, duration, step)?;
            let base: Result<Vec<f64>> = amplitudes
                .split(',')
                .map(|a| {
                    a.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidConfig(format!("bad amplitude `{a}`")))
                })
                .collect();
            let mut amps = vec![0.0];
            for a in base? {
                amps.push(a);
                amps.push(-a);
            }
            let mut dir = FieldValue::zero(spec.n);
            for i in 0..spec.n {
                dir.xi[i] = 0.3;
                dir.eta[i] = 0.2;
            }
            let profile = bump_profile(traj.samples.len(), &dir);
            let table = stationarity_probe(&spec, &traj, &profile, &amps)?;
            let (slope, curvature) = fit_quadratic(&table);
            #[derive(Serialize)]
            struct ActionResult {
                action: f64,
                table: Vec<(f64, f64)>,
                fitted_slope: f64,
                fitted_curvature: f64,
            }
            report(
                "action",
                &name,
                &spec.params,
                ActionResult {
                    action: action_integral(&spec, &traj)?,
                    table,
                    fitted_slope: slope,
                    fitted_curvature: curvature,
                },
                BTreeMap::new(),
                &out,
            )?;
            Ok(0)
        }

        Command::Integrability {
            system,
            integrals,
            r,
            samples,
            seed,
            sv_tol,
            bracket_tol,
            invariance_tol,
            out,
        } => {
            let (spec, domain, name) = load_system(&system.system)?;
            let seed = effective_seed(seed);
            let names: Vec<String> =
                integrals.split(',').map(|s| s.trim().to_string()).collect();
            let exprs: Result<Vec<_>> =
                names.iter().map(|n| Ok(spec.integral(n)?.clone())).collect();
            let exprs = exprs?;
            if r > exprs.len() {
                return Err(Error::InvalidConfig(format!(
                    "r={r} exceeds the number of integrals m={}",
                    exprs.len()
                )));
            }
            let mut dom = domain;
            dom.min_rho = dom.min_rho.max(0.1);
            let points = sample_points(&spec, &dom, samples, seed)?;
            let rep = integrability_report(&spec, &exprs, r, &points, sv_tol)?;
            let pass = rep.hypotheses_satisfied(bracket_tol, invariance_tol);
            #[derive(Serialize)]
            struct IntegrabilityResult {
                m: usize,
                r: usize,
                integrals: Vec<String>,
                commutator_pairwise: Vec<Vec<f64>>,
                commutator_with_z: Vec<f64>,
                independence_rank: usize,
                singular_values: Vec<Vec<f64>>,
                invariance_mean: Vec<Vec<f64>>,
                invariance_stddev: Vec<Vec<f64>>,
                hypotheses_satisfied: bool,
            }
            let mut diag = BTreeMap::new();
            diag.insert("seed".to_string(), serde_json::json!(seed));
            diag.insert("samples".to_string(), serde_json::json!(samples));
            diag.insert("sv_tol".to_string(), num(sv_tol));
            report(
                "integrability",
                &name,
                &spec.params,
                IntegrabilityResult {
                    m: rep.m,
                    r: rep.r,
                    integrals: names,
                    commutator_pairwise: rep.commutators.pairwise.clone(),
                    commutator_with_z: rep.commutators.with_z.clone(),
                    independence_rank: rep.rank.rank,
                    singular_values: rep.rank.detail.iter().map(|(_, sv, _)| sv.clone()).collect(),
                    invariance_mean: rep.invariance.mean.clone(),
                    invariance_stddev: rep.invariance.stddev.clone(),
                    hypotheses_satisfied: pass,
                },
                diag,
                &out,
            )?;
            Ok(if pass { 0 } else { 2 })
        }

        Command::Catalog { list, export, out } => {
            if let Some(name) = export {
                let entry = catalog::builtin(&name)?;
                let file = SystemFile::from_spec(&entry.spec);
                emit(&out, &jsonfmt::to_string(&file)?)?;
                return Ok(0);
            }
            let _ = list;
            let names: Vec<&str> = catalog::BUILTIN_NAMES.to_vec();
            emit(&out, &jsonfmt::to_string(&names)?)?;
            Ok(0)
        }
    }
}

/// Entry point for the binary: parse arguments, run, map errors to exit 1
/// with a structured error object on stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // clap handles --help/--version printing itself
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(config) {
        Ok(code) => code,
        Err(err) => {
            let obj = ErrorObject { schema_version: SCHEMA_VERSION, error: err.to_string() };
            eprintln!("{}", jsonfmt::to_string(&obj).unwrap_or_else(|_| err.to_string()));
            1
        }
    }
}
