//! Batch front-end: parses an experiment specification, evaluates it on a
//! grid and writes deterministic CSV files plus a manifest.
//!
//! Distances on the command line and in the CSV files are the dimensionless
//! `z𝒞/γ`; frequencies and detunings are in units of `γ` as set by the
//! parameter file. Exit codes: 0 success, 1 usage or schema error, 2
//! numerical error (or, for `diff`, a deviation beyond the tolerance).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::closed_form;
use crate::doppler::{doppler_sweep, DopplerConfig, WidthConvention};
use crate::error::{Error, Result};
use crate::langevin::{self, LangevinModel};
use crate::medium::{coupling_constant, format_float, Field, FieldConfig, ParameterSet};

/// Grid of values given either as `start:stop:count` (inclusive, evenly
/// spaced) or as a comma-separated list.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub values: Vec<f64>,
    /// The specification as written, recorded in the manifest.
    pub spec: String,
}

impl Grid {
    pub fn parse(s: &str) -> std::result::Result<Self, String> {
        let values = if let Some((a, rest)) = s.split_once(':') {
            let (b, n) = rest
                .split_once(':')
                .ok_or_else(|| format!("expected start:stop:count, got `{s}`"))?;
            let a: f64 = a.trim().parse().map_err(|e| format!("`{a}`: {e}"))?;
            let b: f64 = b.trim().parse().map_err(|e| format!("`{b}`: {e}"))?;
            let n: usize = n.trim().parse().map_err(|e| format!("`{n}`: {e}"))?;
            match n {
                0 => return Err("grid count must be ≥ 1".into()),
                1 => vec![a],
                _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
            }
        } else {
            s.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
                .collect::<std::result::Result<Vec<_>, _>>()?
        };
        if values.is_empty() {
            return Err("grid is empty".into());
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(format!("grid `{s}` contains non-finite values"));
        }
        Ok(Grid {
            values,
            spec: s.trim().to_string(),
        })
    }

    fn from_values(values: Vec<f64>) -> Self {
        let spec = values.iter().map(|v| format_float(*v)).collect::<Vec<_>>().join(",");
        Grid { values, spec }
    }

    fn describe(&self) -> String {
        format!("{} ({} points)", self.spec, self.values.len())
    }
}

/// Spectral engine selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Engine {
    ClosedForm,
    Langevin,
    Both,
}

impl Engine {
    fn name(self) -> &'static str {
        match self {
            Engine::ClosedForm => "closed-form",
            Engine::Langevin => "langevin",
            Engine::Both => "both",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WidthMeaning {
    Std,
    Variance,
}

#[derive(Debug, Parser)]
#[command(name = "eitfluct", version, about = "Noise spectra of pump and probe fields in a Λ-type EIT medium")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Probe susceptibility versus probe detuning.
    Susceptibility(SusceptibilityArgs),
    /// Quadrature spectra on exact resonance (δ1 = δ2 = 0).
    ResonanceSpectra(SpectraArgs),
    /// Quadrature spectra on the detuned two-photon resonance δ1 = δ2 = δ.
    DetunedSpectra(SpectraArgs),
    /// Pump–probe quadrature cross-spectra.
    Correlations(CorrelationArgs),
    /// Propagation coefficients, length scales and absorption landmarks.
    Diagnostics(DiagnosticsArgs),
    /// Velocity-averaged spectra for a list of Doppler widths.
    Doppler(DopplerArgs),
    /// Compares two CSV outputs column by column.
    Diff(DiffArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Parameter file (`key = value` lines).
    #[arg(long)]
    pub params: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SusceptibilityArgs {
    #[command(flatten)]
    pub common: Common,
    /// Pump detunings δ1/γ.
    #[arg(long, allow_hyphen_values = true, value_parser = Grid::parse, default_value = "0,1")]
    pub delta1: Grid,
    /// Probe detuning scan δ2/γ.
    #[arg(long, allow_hyphen_values = true, value_parser = Grid::parse, default_value = "-4:4:801")]
    pub delta2: Grid,
}

#[derive(Debug, Args)]
pub struct SpectraArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "closed-form")]
    pub engine: Engine,
    /// Distances z𝒞/γ.
    #[arg(long, allow_hyphen_values = true, value_parser = Grid::parse, default_value = "0:20:201")]
    pub z: Grid,
    /// Spectrum frequencies ω/γ.
    #[arg(long, allow_hyphen_values = true, value_parser = Grid::parse, default_value = "0.1")]
    pub omega: Grid,
    /// Quadrature angles θ (rad).
    #[arg(long, allow_hyphen_values = true, value_parser = Grid::parse, default_value = "0")]
    pub theta: Grid,
    /// Two-photon detunings δ/γ (detuned spectra only; defaults to the
    /// parameter file's common detuning).
    #[arg(long, allow_hyphen_values = true, value_parser = Grid::parse)]
    pub delta: Option<Grid>,
}

#[derive(Debug, Args)]
pub struct CorrelationArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "closed-form")]
    pub engine: Engine,
    #[arg(long, allow_hyphen_values = true, value_parser = Grid::parse, default_value = "0:20:201")]
    pub z: Grid,
    #[arg(long, allow_hyphen_values = true, value_parser = Grid::parse, default_value = "0.1")]
    pub omega: Grid,
    /// Pump quadrature angles θ1 (rad).
    #[arg(long, allow_hyphen_values = true, value_parser = Grid::parse, default_value = "0")]
    pub theta1: Grid,
    /// Probe quadrature angles θ2 (rad).
    #[arg(long, allow_hyphen_values = true, value_parser = Grid::parse, default_value = "0")]
    pub theta2: Grid,
    #[arg(long, allow_hyphen_values = true, value_parser = Grid::parse)]
    pub delta: Option<Grid>,
}

#[derive(Debug, Args)]
pub struct DiagnosticsArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, allow_hyphen_values = true, value_parser = Grid::parse, default_value = "-4:4:801")]
    pub omega: Grid,
    #[arg(long, allow_hyphen_values = true, value_parser = Grid::parse)]
    pub delta: Option<Grid>,
}

#[derive(Debug, Args)]
pub struct DopplerArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, allow_hyphen_values = true, value_parser = Grid::parse, default_value = "0:100:101")]
    pub z: Grid,
    /// Spectrum frequency ω/γ of the mean velocity class.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.1)]
    pub omega: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub theta: f64,
    /// Doppler widths Δδ/γ.
    #[arg(long, allow_hyphen_values = true, value_parser = Grid::parse, default_value = "0.01,0.1,0.25,0.5")]
    pub width: Grid,
    /// Gauss–Legendre nodes per panel.
    #[arg(long, default_value_t = 32)]
    pub order: usize,
    /// Whether Δδ is the standard deviation or the variance of the Gaussian.
    #[arg(long, value_enum, default_value = "std")]
    pub width_convention: WidthMeaning,
}

#[derive(Debug, Args)]
pub struct DiffArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    /// Allowed deviation `|a − b| ≤ tol·max(1, |b|)`.
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
}

/// Output table: header and rows of numbers.
struct Table {
    name: &'static str,
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(self.name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format_float(*v)))?;
        }
        w.flush()?;
        Ok(path)
    }
}

/// Everything recorded in the manifest besides the tables.
struct Manifest {
    experiment: &'static str,
    engine: Option<Engine>,
    params: ParameterSet,
    settings: Vec<(String, String)>,
    warnings: Vec<String>,
}

impl Manifest {
    fn new(experiment: &'static str, engine: Option<Engine>, params: ParameterSet) -> Self {
        Manifest {
            experiment,
            engine,
            params,
            settings: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn set(&mut self, key: &str, value: String) {
        self.settings.push((key.to_string(), value));
    }

    fn write(&self, dir: &Path, tables: &[Table]) -> Result<()> {
        let mut s = String::new();
        let _ = writeln!(s, "program = eitfluct {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "experiment = {}", self.experiment);
        if let Some(e) = self.engine {
            let _ = writeln!(s, "engine = {}", e.name());
        }
        let _ = writeln!(s, "\n[parameters]");
        for (k, v) in &self.params.resolved {
            let _ = writeln!(s, "{k} = {v}");
        }
        let _ = writeln!(s, "\n[settings]");
        for (k, v) in &self.settings {
            let _ = writeln!(s, "{k} = {v}");
        }
        let _ = writeln!(s, "\n[outputs]");
        for t in tables {
            let _ = writeln!(s, "{} rows={} columns={}", t.name, t.rows.len(), t.header.join(","));
        }
        let _ = writeln!(s, "\n[warnings]");
        for w in &self.warnings {
            let _ = writeln!(s, "{w}");
        }
        fs::write(dir.join("manifest.txt"), s)?;
        Ok(())
    }
}

fn load(common: &Common) -> Result<ParameterSet> {
    let p = ParameterSet::from_file(&common.params).map_err(|e| match e {
        Error::Io(io) => Error::invalid("params", format!("{}: {io}", common.params.display())),
        other => other,
    })?;
    fs::create_dir_all(&common.out)?;
    Ok(p)
}

fn finish(common: &Common, manifest: &Manifest, tables: &[Table]) -> Result<()> {
    for t in tables {
        t.write(&common.out)?;
    }
    manifest.write(&common.out, tables)?;
    for w in &manifest.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

/// `z` in physical units from the dimensionless `z𝒞/γ`.
fn physical_z(zhat: f64, params: &ParameterSet, f: &FieldConfig) -> Result<f64> {
    Ok(zhat * params.medium.gamma() / coupling_constant(&params.medium, f)?)
}

fn detunings(arg: &Option<Grid>, params: &ParameterSet) -> Result<Vec<f64>> {
    match arg {
        Some(g) => Ok(g.values.clone()),
        None => Ok(vec![params.fields.common_detuning()?]),
    }
}

fn run_susceptibility(a: &SusceptibilityArgs) -> Result<()> {
    let params = load(&a.common)?;
    let mut manifest = Manifest::new("susceptibility", None, params.clone());
    manifest.set("delta1_over_gamma", a.delta1.describe());
    manifest.set("delta2_over_gamma", a.delta2.describe());
    manifest.set("normalisation", "chi = -<sigma_2e>/Omega2 (arbitrary positive units)".into());
    let gamma = params.medium.gamma();
    let d2: Vec<f64> = a.delta2.values.iter().map(|d| d * gamma).collect();
    let blocks = a
        .delta1
        .values
        .par_iter()
        .map(|&d1| {
            let chi = langevin::susceptibility(&d2, d1 * gamma, &params.medium, &params.fields)?;
            Ok(a.delta2
                .values
                .iter()
                .zip(chi)
                .map(|(&x, c)| vec![d1, x, c.re, c.im])
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let table = Table {
        name: "susceptibility.csv",
        header: ["delta1_over_gamma", "delta2_over_gamma", "re_chi_arb", "im_chi_arb"]
            .map(String::from)
            .to_vec(),
        rows: blocks.into_iter().flatten().collect(),
    };
    finish(&a.common, &manifest, &[table])
}

fn engine_header(base: &[&str], quantities: &[&str], engine: Engine) -> Vec<String> {
    let mut h: Vec<String> = base.iter().map(|s| s.to_string()).collect();
    match engine {
        Engine::Both => {
            for q in quantities {
                h.push(format!("{q}_closed_form"));
                h.push(format!("{q}_langevin"));
            }
            h.push("max_abs_diff".into());
        }
        _ => h.extend(quantities.iter().map(|s| s.to_string())),
    }
    h
}

/// Appends engine values: `closed` and `lang` hold one value per quantity.
fn push_values(row: &mut Vec<f64>, engine: Engine, closed: &[f64], lang: &[f64]) {
    match engine {
        Engine::ClosedForm => row.extend_from_slice(closed),
        Engine::Langevin => row.extend_from_slice(lang),
        Engine::Both => {
            let mut worst: f64 = 0.0;
            for (c, l) in closed.iter().zip(lang) {
                row.push(*c);
                row.push(*l);
                worst = worst.max((c - l).abs());
            }
            row.push(worst);
        }
    }
}

fn unsupported_hint(e: Error) -> Error {
    match e {
        Error::UnsupportedRegime(msg) if !msg.contains("--engine") => {
            Error::UnsupportedRegime(format!("{msg} (rerun with --engine langevin)"))
        }
        other => other,
    }
}

fn run_spectra(a: &SpectraArgs, resonance: bool) -> Result<()> {
    let params = load(&a.common)?;
    let name = if resonance { "resonance-spectra" } else { "detuned-spectra" };
    let deltas = if resonance {
        if a.delta.as_ref().is_some_and(|g| g.values.iter().any(|d| *d != 0.0)) {
            return Err(Error::invalid("delta", "resonance-spectra is defined at δ = 0; use detuned-spectra"));
        }
        vec![0.0]
    } else {
        detunings(&a.delta, &params)?
    };
    let mut manifest = Manifest::new(name, Some(a.engine), params.clone());
    manifest.set("delta_over_gamma", Grid::from_values(deltas.clone()).describe());
    manifest.set("omega_over_gamma", a.omega.describe());
    manifest.set("theta_rad", a.theta.describe());
    manifest.set("z_C_over_gamma", a.z.describe());
    let gamma = params.medium.gamma();
    let points: Vec<(f64, f64)> = deltas
        .iter()
        .flat_map(|&d| a.omega.values.iter().map(move |&w| (d, w)))
        .collect();
    let blocks = points
        .par_iter()
        .map(|&(dhat, what)| {
            let f = params.fields.with_detuning(dhat * gamma);
            let omega = what * gamma;
            let noise = params.noise.at(omega);
            let model = match a.engine {
                Engine::ClosedForm => None,
                _ => Some(LangevinModel::new(&params.medium, &f)?),
            };
            let mut rows = Vec::new();
            for &theta in &a.theta.values {
                for &zhat in &a.z.values {
                    let z = physical_z(zhat, &params, &f)?;
                    let closed = match a.engine {
                        Engine::Langevin => [0.0; 2],
                        _ => {
                            let eval = |field| {
                                if resonance {
                                    closed_form::spectrum_resonance(z, omega, theta, field, &params.noise, &params.medium, &f)
                                } else {
                                    closed_form::spectrum_detuned(z, omega, theta, field, &params.noise, &params.medium, &f)
                                }
                            };
                            [eval(Field::Pump)?, eval(Field::Probe)?]
                        }
                    };
                    let lang = match &model {
                        None => [0.0; 2],
                        Some(mdl) => {
                            let cov = mdl.covariance(z, omega, &noise)?;
                            [
                                langevin::quadrature_spectrum(&cov, Field::Pump, theta),
                                langevin::quadrature_spectrum(&cov, Field::Probe, theta),
                            ]
                        }
                    };
                    let mut row = vec![dhat, what, theta, zhat];
                    push_values(&mut row, a.engine, &closed, &lang);
                    rows.push(row);
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()
        .map_err(unsupported_hint)?;
    let table = Table {
        name: if resonance { "resonance_spectra.csv" } else { "detuned_spectra.csv" },
        header: engine_header(
            &["delta_over_gamma", "omega_over_gamma", "theta_rad", "z_C_over_gamma"],
            &["S1", "S2"],
            a.engine,
        ),
        rows: blocks.into_iter().flatten().collect(),
    };
    finish(&a.common, &manifest, &[table])
}

fn run_correlations(a: &CorrelationArgs) -> Result<()> {
    let params = load(&a.common)?;
    let deltas = detunings(&a.delta, &params)?;
    let mut manifest = Manifest::new("correlations", Some(a.engine), params.clone());
    manifest.set("delta_over_gamma", Grid::from_values(deltas.clone()).describe());
    manifest.set("omega_over_gamma", a.omega.describe());
    manifest.set("theta1_rad", a.theta1.describe());
    manifest.set("theta2_rad", a.theta2.describe());
    manifest.set("z_C_over_gamma", a.z.describe());
    let gamma = params.medium.gamma();
    let points: Vec<(f64, f64)> = deltas
        .iter()
        .flat_map(|&d| a.omega.values.iter().map(move |&w| (d, w)))
        .collect();
    let blocks = points
        .par_iter()
        .map(|&(dhat, what)| {
            let f = params.fields.with_detuning(dhat * gamma);
            let omega = what * gamma;
            let noise = params.noise.at(omega);
            let model = match a.engine {
                Engine::ClosedForm => None,
                _ => Some(LangevinModel::new(&params.medium, &f)?),
            };
            let mut rows = Vec::new();
            for &t1 in &a.theta1.values {
                for &t2 in &a.theta2.values {
                    for &zhat in &a.z.values {
                        let z = physical_z(zhat, &params, &f)?;
                        let closed = match a.engine {
                            Engine::Langevin => [0.0; 2],
                            _ => {
                                let c = closed_form::correlation_detuned(z, omega, t1, t2, &params.noise, &params.medium, &f)?;
                                [c.re, c.im]
                            }
                        };
                        let lang = match &model {
                            None => [0.0; 2],
                            Some(mdl) => {
                                let c = langevin::quadrature_correlation(&mdl.covariance(z, omega, &noise)?, t1, t2);
                                [c.re, c.im]
                            }
                        };
                        let mut row = vec![dhat, what, t1, t2, zhat];
                        push_values(&mut row, a.engine, &closed, &lang);
                        rows.push(row);
                    }
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()
        .map_err(unsupported_hint)?;
    let table = Table {
        name: "correlations.csv",
        header: engine_header(
            &["delta_over_gamma", "omega_over_gamma", "theta1_rad", "theta2_rad", "z_C_over_gamma"],
            &["re_Sc", "im_Sc"],
            a.engine,
        ),
        rows: blocks.into_iter().flatten().collect(),
    };
    finish(&a.common, &manifest, &[table])
}

fn run_diagnostics(a: &DiagnosticsArgs) -> Result<()> {
    let params = load(&a.common)?;
    let deltas = detunings(&a.delta, &params)?;
    let mut manifest = Manifest::new("diagnostics", Some(Engine::ClosedForm), params.clone());
    manifest.set("delta_over_gamma", Grid::from_values(deltas.clone()).describe());
    manifest.set("omega_over_gamma", a.omega.describe());
    let gamma = params.medium.gamma();
    let mut rows = Vec::new();
    let mut landmarks = Vec::new();
    for &dhat in &deltas {
        let f = params.fields.with_detuning(dhat * gamma);
        let scale = coupling_constant(&params.medium, &f)? / gamma;
        for &what in &a.omega.values {
            let d = closed_form::diagnostics(what * gamma, dhat * gamma, &params.medium, &f)?;
            rows.push(vec![
                dhat,
                what,
                d.q.plus.re / scale,
                d.q.plus.im / scale,
                d.q.minus.re / scale,
                d.q.minus.im / scale,
                (d.q.plus.im + d.q.minus.im).abs() / scale,
                d.z_abs * scale,
                d.z_osc * scale,
                d.z_int * scale,
                d.abs_osc_ratio,
            ]);
        }
        // Landmarks do not depend on ω; evaluate them away from ω = 0.
        let d = closed_form::diagnostics(gamma, dhat * gamma, &params.medium, &f)?;
        let mut row = vec![dhat];
        row.extend(d.absorption_extrema_atomic.iter().map(|w| w / gamma));
        row.extend(d.absorption_extrema_carrier.iter().map(|w| w / gamma));
        row.push(d.window_width.map_or(f64::NAN, |w| w / gamma));
        landmarks.push(row);
    }
    let tables = [
        Table {
            name: "diagnostics.csv",
            header: [
                "delta_over_gamma",
                "omega_over_gamma",
                "Qplus_re_over_C",
                "Qplus_im_over_C",
                "Qminus_re_over_C",
                "Qminus_im_over_C",
                "abs_Qplus_im_plus_Qminus_im_over_C",
                "z_abs_C_over_gamma",
                "z_osc_C_over_gamma",
                "z_int_C_over_gamma",
                "z_abs_over_z_osc",
            ]
            .map(String::from)
            .to_vec(),
            rows,
        },
        Table {
            name: "absorption_landmarks.csv",
            header: [
                "delta_over_gamma",
                "omega_pp_atomic_over_gamma",
                "omega_pm_atomic_over_gamma",
                "omega_mp_atomic_over_gamma",
                "omega_mm_atomic_over_gamma",
                "omega_pp_carrier_over_gamma",
                "omega_pm_carrier_over_gamma",
                "omega_mp_carrier_over_gamma",
                "omega_mm_carrier_over_gamma",
                "window_width_over_gamma",
            ]
            .map(String::from)
            .to_vec(),
            rows: landmarks,
        },
    ];
    finish(&a.common, &manifest, &tables)
}

fn run_doppler(a: &DopplerArgs) -> Result<()> {
    let params = load(&a.common)?;
    let mut template = DopplerConfig::new(0.0, a.order)?;
    template.convention = match a.width_convention {
        WidthMeaning::Std => WidthConvention::StandardDeviation,
        WidthMeaning::Variance => WidthConvention::Variance,
    };
    let gamma = params.medium.gamma();
    let f = params.fields;
    let mut manifest = Manifest::new("doppler", Some(Engine::Langevin), params.clone());
    manifest.set("z_C_over_gamma", a.z.describe());
    manifest.set("omega_over_gamma", format_float(a.omega));
    manifest.set("theta_rad", format_float(a.theta));
    manifest.set("delta_width_over_gamma", a.width.describe());
    manifest.set("quadrature_order", a.order.to_string());
    manifest.set(
        "width_convention",
        match a.width_convention {
            WidthMeaning::Std => "standard-deviation".into(),
            WidthMeaning::Variance => "variance".into(),
        },
    );
    manifest.set("truncation_sigmas", format_float(template.truncation));
    let zs = a
        .z
        .values
        .iter()
        .map(|&zh| physical_z(zh, &params, &f))
        .collect::<Result<Vec<_>>>()?;
    let widths: Vec<f64> = a
        .width
        .values
        .iter()
        .map(|w| match template.convention {
            WidthConvention::StandardDeviation => w * gamma,
            WidthConvention::Variance => w * gamma * gamma,
        })
        .collect();
    let curves = doppler_sweep(&zs, &widths, a.theta, a.omega * gamma, &params.noise, &params.medium, &f, &template)?;
    let mut rows = Vec::new();
    for (curve, &what) in curves.iter().zip(&a.width.values) {
        manifest.set(&format!("panels[{}]", format_float(what)), curve.panels.to_string());
        for w in &curve.warnings {
            manifest.warnings.push(format!("delta_width = {what}: {w}"));
        }
        for (i, &zh) in a.z.values.iter().enumerate() {
            rows.push(vec![what, zh, curve.pump[i], curve.probe[i]]);
        }
    }
    let table = Table {
        name: "doppler.csv",
        header: ["delta_width_over_gamma", "z_C_over_gamma", "S1", "S2"]
            .map(String::from)
            .to_vec(),
        rows,
    };
    finish(&a.common, &manifest, &[table])
}

/// Per-column deviation summary of a CSV comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnDeviation {
    pub column: String,
    pub max_abs: f64,
    pub max_rel: f64,
    pub within: bool,
}

fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(String::from).collect()))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((header, rows))
}

fn same_number(a: f64, b: f64) -> bool {
    a == b || (a.is_nan() && b.is_nan())
}

/// Compares two CSV files of identical schema. Cells are within tolerance
/// when `|a − b| ≤ tol·max(1, |b|)`; non-numeric cells must match exactly.
pub fn diff_files(a: &Path, b: &Path, tolerance: f64) -> Result<Vec<ColumnDeviation>> {
    let (ha, ra) = read_csv(a)?;
    let (hb, rb) = read_csv(b)?;
    if ha != hb {
        return Err(Error::Parse {
            line: 1,
            reason: format!("header mismatch: `{}` vs `{}`", ha.join(","), hb.join(",")),
        });
    }
    if ra.len() != rb.len() {
        return Err(Error::Parse {
            line: ra.len().min(rb.len()) + 2,
            reason: format!("row count mismatch: {} vs {}", ra.len(), rb.len()),
        });
    }
    let mut out: Vec<ColumnDeviation> = ha
        .iter()
        .map(|c| ColumnDeviation {
            column: c.clone(),
            max_abs: 0.0,
            max_rel: 0.0,
            within: true,
        })
        .collect();
    for (i, (x, y)) in ra.iter().zip(&rb).enumerate() {
        if x.len() != ha.len() || y.len() != ha.len() {
            return Err(Error::Parse {
                line: i + 2,
                reason: "ragged row".into(),
            });
        }
        for (col, (u, v)) in out.iter_mut().zip(x.iter().zip(y)) {
            match (u.parse::<f64>(), v.parse::<f64>()) {
                (Ok(p), Ok(q)) => {
                    if same_number(p, q) {
                        continue;
                    }
                    let d = (p - q).abs();
                    let d = if d.is_nan() { f64::INFINITY } else { d };
                    col.max_abs = col.max_abs.max(d);
                    col.max_rel = col.max_rel.max(if q == 0.0 { f64::INFINITY } else { d / q.abs() });
                    if d > tolerance * q.abs().max(1.0) {
                        col.within = false;
                    }
                }
                _ => {
                    if u != v {
                        col.max_abs = f64::INFINITY;
                        col.max_rel = f64::INFINITY;
                        col.within = false;
                    }
                }
            }
        }
    }
    Ok(out)
}

fn run_diff(a: &DiffArgs) -> Result<i32> {
    if !a.tolerance.is_finite() || a.tolerance < 0.0 {
        return Err(Error::invalid("tolerance", "must be a finite number ≥ 0"));
    }
    let cols = diff_files(&a.a, &a.b, a.tolerance)?;
    println!("{:<40} {:>24} {:>24}  status", "column", "max_abs", "max_rel");
    for c in &cols {
        println!(
            "{:<40} {:>24} {:>24}  {}",
            c.column,
            format_float(c.max_abs),
            format_float(c.max_rel),
            if c.within { "ok" } else { "EXCEEDED" }
        );
    }
    Ok(if cols.iter().all(|c| c.within) { 0 } else { 2 })
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Singularity(_) | Error::Numerical(_) => 2,
        _ => 1,
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("EITFLUCT_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::invalid("EITFLUCT_THREADS", format!("expected a positive integer, got `{v}`")))?;
        // A global pool may already exist (e.g. in tests); the cap then
        // simply does not apply.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command;
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return 1;
    }
    let result = match &cli.command {
        Command::Susceptibility(a) => run_susceptibility(a).map(|_| 0),
        Command::ResonanceSpectra(a) => run_spectra(a, true).map(|_| 0),
        Command::DetunedSpectra(a) => run_spectra(a, false).map(|_| 0),
        Command::Correlations(a) => run_correlations(a).map(|_| 0),
        Command::Diagnostics(a) => run_diagnostics(a).map(|_| 0),
        Command::Doppler(a) => run_doppler(a).map(|_| 0),
        Command::Diff(a) => run_diff(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(Grid::parse("0:1:3").unwrap().values, vec![0.0, 0.5, 1.0]);
        assert_eq!(Grid::parse("2:5:1").unwrap().values, vec![2.0]);
        assert_eq!(Grid::parse("0.1, 0.2").unwrap().values, vec![0.1, 0.2]);
        assert!(Grid::parse("0:1:0").is_err());
        assert!(Grid::parse("0:1").is_err());
        assert!(Grid::parse("a,b").is_err());
        assert!(Grid::parse("inf").is_err());
    }
}
