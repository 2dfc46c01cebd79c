//! Physical parameters of the atomic medium and the two driving fields,
//! input-noise descriptions, and the parameter-file format.
//!
//! Units: every rate (decay rates, couplings, detunings, Rabi and spectrum
//! frequencies) is expressed in the same frequency unit, conventionally the
//! excited-state linewidth `γ = γ1 + γ2`. Lengths are measured in the units
//! implied by the light-speed scale `c`; plots and CSV files use the
//! dimensionless distance `z·𝒞/γ`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Atomic and geometric constants of the medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumParams {
    /// Spontaneous decay rate from `|e⟩` into `|1⟩`.
    pub gamma1: f64,
    /// Spontaneous decay rate from `|e⟩` into `|2⟩`.
    pub gamma2: f64,
    /// Ground-state decoherence rate.
    pub gamma12: f64,
    /// Dipole coupling constant of the pump (field 1) on `|1⟩ ↔ |e⟩`.
    pub g1: f64,
    /// Dipole coupling constant of the probe (field 2) on `|2⟩ ↔ |e⟩`.
    pub g2: f64,
    /// Number of atoms.
    pub n_atoms: f64,
    /// Medium length.
    pub length: f64,
    /// Light-speed scale (length per unit time).
    pub light_speed: f64,
}

impl MediumParams {
    /// Builds a validated parameter set.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        gamma1: f64,
        gamma2: f64,
        gamma12: f64,
        g1: f64,
        g2: f64,
        n_atoms: f64,
        length: f64,
        light_speed: f64,
    ) -> Result<Self> {
        let m = MediumParams {
            gamma1,
            gamma2,
            gamma12,
            g1,
            g2,
            n_atoms,
            length,
            light_speed,
        };
        m.validate()?;
        Ok(m)
    }

    /// The parameter set of the Doppler figures: `γ1 = γ2 = γ/2`,
    /// `g1 = g2 = γ/10`, `N = 10^12`, with `c = 10^10` so that `𝒞 = γ`.
    pub fn doppler_reference() -> Self {
        MediumParams {
            gamma1: 0.5,
            gamma2: 0.5,
            gamma12: 0.0,
            g1: 0.1,
            g2: 0.1,
            n_atoms: 1e12,
            length: 1.0,
            light_speed: 1e10,
        }
    }

    /// Total excited-state linewidth `γ = γ1 + γ2`.
    pub fn gamma(&self) -> f64 {
        self.gamma1 + self.gamma2
    }

    /// Checks the invariants: non-negative rates, `N ≥ 1`, `L > 0`, `c > 0`.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("gamma12", self.gamma12),
            ("g1", self.g1),
            ("g2", self.g2),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(name, format!("must be a finite rate ≥ 0, got {v}")));
            }
        }
        if !self.n_atoms.is_finite() || self.n_atoms < 1.0 {
            return Err(Error::invalid("N", format!("must be ≥ 1, got {}", self.n_atoms)));
        }
        if !self.length.is_finite() || self.length <= 0.0 {
            return Err(Error::invalid("L", format!("must be > 0, got {}", self.length)));
        }
        if !self.light_speed.is_finite() || self.light_speed <= 0.0 {
            return Err(Error::invalid("c", format!("must be > 0, got {}", self.light_speed)));
        }
        Ok(())
    }
}

/// Carrier detunings and mean amplitudes of the two fields.
///
/// Field 1 is the pump (on `|1⟩ ↔ |e⟩`), field 2 the probe (on `|2⟩ ↔ |e⟩`).
/// Mean amplitudes are real; the Rabi frequencies are `Ω_j = |g_j α_j|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldConfig {
    pub delta1: f64,
    pub delta2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl FieldConfig {
    /// Fields detuned by the same amount `δ` (two-photon resonance).
    pub fn two_photon(delta: f64, alpha1: f64, alpha2: f64) -> Self {
        FieldConfig {
            delta1: delta,
            delta2: delta,
            alpha1,
            alpha2,
        }
    }

    /// The same amplitudes with both detunings replaced by `delta`.
    pub fn with_detuning(&self, delta: f64) -> Self {
        FieldConfig {
            delta1: delta,
            delta2: delta,
            ..*self
        }
    }

    pub fn omega1(&self, m: &MediumParams) -> f64 {
        (m.g1 * self.alpha1).abs()
    }

    pub fn omega2(&self, m: &MediumParams) -> f64 {
        (m.g2 * self.alpha2).abs()
    }

    /// Total Rabi frequency `Ω = sqrt(Ω1² + Ω2²)`.
    pub fn omega(&self, m: &MediumParams) -> f64 {
        self.omega1(m).hypot(self.omega2(m))
    }

    /// True iff `δ1 == δ2`.
    pub fn two_photon_resonant(&self) -> bool {
        self.delta1 == self.delta2
    }

    /// Common detuning, or an error if the fields are not in two-photon resonance.
    pub fn common_detuning(&self) -> Result<f64> {
        if self.two_photon_resonant() {
            Ok(self.delta1)
        } else {
            Err(Error::UnsupportedRegime(format!(
                "closed forms need δ1 = δ2, got δ1 = {}, δ2 = {}; use the langevin engine",
                self.delta1, self.delta2
            )))
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        Ok(())
    }
}

/// Propagation length scale `𝒞 = N (g1²Ω2² + g2²Ω1²) / (Ω² c)`.
///
/// Distances are conventionally reported as `z·𝒞/γ`.
pub fn coupling_constant(m: &MediumParams, f: &FieldConfig) -> Result<f64> {
    let (o1, o2) = (f.omega1(m), f.omega2(m));
    let o_sq = o1 * o1 + o2 * o2;
    if o_sq == 0.0 {
        return Err(Error::NoDrivingField);
    }
    Ok(m.n_atoms * (m.g1 * m.g1 * o2 * o2 + m.g2 * m.g2 * o1 * o1) / (o_sq * m.light_speed))
}

/// Input-noise coefficients `(f, g)` of a broadband squeezed state with
/// squeezing parameter `xi`: `f = sinh²ξ`, `g = −½ sinh 2ξ`.
///
/// The θ-quadrature spectrum `1 + 2g cos 2θ + 2f` is then
/// `e^{−2ξ} cos²θ + e^{2ξ} sin²θ`, squeezed along `θ = 0` for `ξ > 0`.
pub fn squeezed_preset(xi: f64) -> (f64, f64) {
    let s = xi.sinh();
    (s * s, -0.5 * (2.0 * xi).sinh())
}

/// θ-quadrature spectrum `1 + 2g cos 2θ + 2f` of a field with noise `(f, g)`.
pub fn quadrature_spectrum(f: f64, g: f64, theta: f64) -> f64 {
    1.0 + 2.0 * g * (2.0 * theta).cos() + 2.0 * f
}

/// Identifies one of the two fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    /// Field 1, driving `|1⟩ ↔ |e⟩`.
    Pump,
    /// Field 2, driving `|2⟩ ↔ |e⟩`.
    Probe,
}

impl Field {
    /// Zero-based index (pump 0, probe 1).
    pub fn index(self) -> usize {
        match self {
            Field::Pump => 0,
            Field::Probe => 1,
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::Pump => "pump",
            Field::Probe => "probe",
        })
    }
}

/// Tabulated, even noise functions `f(ω)`, `g(ω)`.
///
/// The table is symmetrised on construction (entries at `±ω` are averaged and
/// stored against `|ω|`), interpolated linearly and clamped outside its range.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTable {
    abs_omega: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
}

impl NoiseTable {
    pub fn new(omega: &[f64], f: &[f64], g: &[f64]) -> Result<Self> {
        if omega.is_empty() || omega.len() != f.len() || omega.len() != g.len() {
            return Err(Error::invalid(
                "noise table",
                "omega, f and g columns must be non-empty and of equal length",
            ));
        }
        let mut acc: BTreeMap<u64, (f64, f64, f64, usize)> = BTreeMap::new();
        for ((&w, &fv), &gv) in omega.iter().zip(f).zip(g) {
            if !(w.is_finite() && fv.is_finite() && gv.is_finite()) {
                return Err(Error::invalid("noise table", "entries must be finite"));
            }
            // Non-negative floats order like their bit patterns.
            let key = (w.abs() + 0.0).to_bits();
            let e = acc.entry(key).or_insert((w.abs(), 0.0, 0.0, 0));
            e.1 += fv;
            e.2 += gv;
            e.3 += 1;
        }
        let mut table = NoiseTable {
            abs_omega: Vec::with_capacity(acc.len()),
            f: Vec::with_capacity(acc.len()),
            g: Vec::with_capacity(acc.len()),
        };
        for (_, (w, fs, gs, n)) in acc {
            let (fv, gv) = (fs / n as f64, gs / n as f64);
            if gv.abs() > fv + 0.5 + 1e-12 {
                return Err(Error::invalid(
                    "noise table",
                    format!("unphysical entry at |ω| = {w}: |g| > f + 1/2"),
                ));
            }
            table.abs_omega.push(w);
            table.f.push(fv);
            table.g.push(gv);
        }
        Ok(table)
    }

    /// Reads a CSV file with header `omega,f,g`.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
                line: 1,
                reason: format!("missing column `{name}` in {}", path.display()),
            })
        };
        let (iw, i_f, ig) = (col("omega")?, col("f")?, col("g")?);
        let (mut w, mut f, mut g) = (Vec::new(), Vec::new(), Vec::new());
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                rec.get(i).unwrap_or("").parse::<f64>().map_err(|e| Error::Parse {
                    line: row + 2,
                    reason: format!("{}: {e}", path.display()),
                })
            };
            w.push(num(iw)?);
            f.push(num(i_f)?);
            g.push(num(ig)?);
        }
        NoiseTable::new(&w, &f, &g)
    }

    fn interp(&self, ys: &[f64], omega: f64) -> f64 {
        let x = omega.abs();
        let xs = &self.abs_omega;
        if x <= xs[0] {
            return ys[0];
        }
        if x >= xs[xs.len() - 1] {
            return ys[ys.len() - 1];
        }
        let k = xs.partition_point(|&v| v <= x);
        let (x0, x1) = (xs[k - 1], xs[k]);
        let t = (x - x0) / (x1 - x0);
        ys[k - 1] + t * (ys[k] - ys[k - 1])
    }

    pub fn eval(&self, omega: f64) -> (f64, f64) {
        (self.interp(&self.f, omega), self.interp(&self.g, omega))
    }
}

/// Noise description of one input field.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseProfile {
    /// Coherent state: `f = g = 0`.
    Coherent,
    /// Broadband squeezed state with parameter `xi` (squeezed along `θ = 0`).
    Squeezed { xi: f64 },
    /// Frequency-dependent tabulated noise.
    Tabulated(NoiseTable),
}

impl NoiseProfile {
    /// `(f(ω), g(ω))`.
    pub fn eval(&self, omega: f64) -> (f64, f64) {
        match self {
            NoiseProfile::Coherent => (0.0, 0.0),
            NoiseProfile::Squeezed { xi } => squeezed_preset(*xi),
            NoiseProfile::Tabulated(t) => t.eval(omega),
        }
    }

    pub fn is_coherent(&self) -> bool {
        match self {
            NoiseProfile::Coherent => true,
            NoiseProfile::Squeezed { xi } => *xi == 0.0,
            NoiseProfile::Tabulated(t) => t.f.iter().chain(&t.g).all(|&v| v == 0.0),
        }
    }

    fn describe(&self) -> String {
        match self {
            NoiseProfile::Coherent => "coherent".into(),
            NoiseProfile::Squeezed { xi } => format!("squeezed(xi={xi})"),
            NoiseProfile::Tabulated(t) => format!("tabulated({} points)", t.abs_omega.len()),
        }
    }
}

/// Input noise of both fields at the entrance face.
#[derive(Debug, Clone, PartialEq)]
pub struct InputNoise {
    pub pump: NoiseProfile,
    pub probe: NoiseProfile,
}

/// Noise coefficients of both fields at one spectrum frequency.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseValues {
    pub f1: f64,
    pub g1: f64,
    pub f2: f64,
    pub g2: f64,
}

impl NoiseValues {
    /// The `(f, g)` pair of one field.
    pub fn of(&self, field: Field) -> (f64, f64) {
        match field {
            Field::Pump => (self.f1, self.g1),
            Field::Probe => (self.f2, self.g2),
        }
    }
}

impl InputNoise {
    /// Both fields coherent.
    pub fn coherent() -> Self {
        InputNoise {
            pump: NoiseProfile::Coherent,
            probe: NoiseProfile::Coherent,
        }
    }

    /// Coherent pump and broadband squeezed probe.
    pub fn squeezed_probe(xi: f64) -> Self {
        InputNoise {
            pump: NoiseProfile::Coherent,
            probe: NoiseProfile::Squeezed { xi },
        }
    }

    pub fn profile(&self, field: Field) -> &NoiseProfile {
        match field {
            Field::Pump => &self.pump,
            Field::Probe => &self.probe,
        }
    }

    pub fn at(&self, omega: f64) -> NoiseValues {
        let (f1, g1) = self.pump.eval(omega);
        let (f2, g2) = self.probe.eval(omega);
        NoiseValues { f1, g1, f2, g2 }
    }

    /// Entrance-face quadrature spectrum of `field`.
    pub fn initial_spectrum(&self, field: Field, omega: f64, theta: f64) -> f64 {
        let (f, g) = self.profile(field).eval(omega);
        quadrature_spectrum(f, g, theta)
    }
}

/// Everything a parameter file resolves to.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    pub medium: MediumParams,
    pub fields: FieldConfig,
    pub noise: InputNoise,
    /// Resolved `key = value` pairs (defaults included), in key order.
    pub resolved: BTreeMap<String, String>,
}

/// Keys accepted in a parameter file.
pub const PARAMETER_KEYS: [&str; 16] = [
    "gamma1", "gamma2", "gamma12", "g1", "g2", "N", "L", "c", "delta1", "delta2", "alpha1",
    "alpha2", "noise1", "noise2", "xi1", "xi2",
];

impl ParameterSet {
    /// Parses the flat `key = value` format (`#` starts a comment). Missing
    /// keys take the defaults of [`MediumParams::doppler_reference`], zero
    /// detunings, `α1 = α2 = 10` and coherent inputs. Relative table paths
    /// are resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut values: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                reason: format!("expected `key = value`, got `{line}`"),
            })?;
            let (k, v) = (k.trim(), v.trim());
            if !PARAMETER_KEYS.contains(&k) {
                return Err(Error::Parse {
                    line: i + 1,
                    reason: format!("unknown key `{k}`"),
                });
            }
            if values.insert(k.to_string(), (i + 1, v.to_string())).is_some() {
                return Err(Error::Parse {
                    line: i + 1,
                    reason: format!("duplicate key `{k}`"),
                });
            }
        }
        let num = |key: &str, default: f64| -> Result<f64> {
            match values.get(key) {
                None => Ok(default),
                Some((line, v)) => v.parse::<f64>().map_err(|e| Error::Parse {
                    line: *line,
                    reason: format!("key `{key}`: {e}"),
                }),
            }
        };
        let d = MediumParams::doppler_reference();
        let medium = MediumParams::new(
            num("gamma1", d.gamma1)?,
            num("gamma2", d.gamma2)?,
            num("gamma12", d.gamma12)?,
            num("g1", d.g1)?,
            num("g2", d.g2)?,
            num("N", d.n_atoms)?,
            num("L", d.length)?,
            num("c", d.light_speed)?,
        )?;
        let fields = FieldConfig {
            delta1: num("delta1", 0.0)?,
            delta2: num("delta2", 0.0)?,
            alpha1: num("alpha1", 10.0)?,
            alpha2: num("alpha2", 10.0)?,
        };
        fields.validate()?;
        let profile = |noise_key: &str, xi_key: &str| -> Result<NoiseProfile> {
            let xi = num(xi_key, 0.0)?;
            let (line, kind) = match values.get(noise_key) {
                None => return Ok(NoiseProfile::Coherent),
                Some((l, v)) => (*l, v.as_str()),
            };
            match kind {
                "coherent" => Ok(NoiseProfile::Coherent),
                "squeezed" => Ok(NoiseProfile::Squeezed { xi }),
                other => match other.strip_prefix("table:") {
                    Some(p) => {
                        let mut path = PathBuf::from(p.trim());
                        if path.is_relative() {
                            if let Some(b) = base_dir {
                                path = b.join(path);
                            }
                        }
                        Ok(NoiseProfile::Tabulated(NoiseTable::from_csv(&path)?))
                    }
                    None => Err(Error::Parse {
                        line,
                        reason: format!(
                            "key `{noise_key}`: expected coherent | squeezed | table:<path>, got `{other}`"
                        ),
                    }),
                },
            }
        };
        let noise = InputNoise {
            pump: profile("noise1", "xi1")?,
            probe: profile("noise2", "xi2")?,
        };
        let mut resolved = BTreeMap::new();
        for (k, v) in [
            ("gamma1", medium.gamma1),
            ("gamma2", medium.gamma2),
            ("gamma12", medium.gamma12),
            ("g1", medium.g1),
            ("g2", medium.g2),
            ("N", medium.n_atoms),
            ("L", medium.length),
            ("c", medium.light_speed),
            ("delta1", fields.delta1),
            ("delta2", fields.delta2),
            ("alpha1", fields.alpha1),
            ("alpha2", fields.alpha2),
            ("xi1", num("xi1", 0.0)?),
            ("xi2", num("xi2", 0.0)?),
        ] {
            resolved.insert(k.to_string(), format_float(v));
        }
        resolved.insert("noise1".into(), noise.pump.describe());
        resolved.insert("noise2".into(), noise.probe.describe());
        Ok(ParameterSet {
            medium,
            fields,
            noise,
            resolved,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        ParameterSet::parse(&text, path.parent())
    }
}

/// Formats a float with 17 significant digits (lossless round trip).
pub fn format_float(v: f64) -> String {
    format!("{}", Sci17(v))
}

struct Sci17(f64);

impl fmt::Display for Sci17 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == 0.0 {
            // Normalise -0 so that outputs are byte-identical.
            write!(f, "0.0000000000000000e0")
        } else {
            write!(f, "{:.16e}", self.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coupling_constant_symmetric_case() {
        let m = MediumParams::doppler_reference();
        let f = FieldConfig::two_photon(0.0, 10.0, 10.0);
        let c = coupling_constant(&m, &f).unwrap();
        assert!((c - 1e12 * 0.01 / 1e10).abs() < 1e-12);
    }

    #[test]
    fn coupling_constant_requires_drive() {
        let m = MediumParams::doppler_reference();
        let f = FieldConfig::two_photon(0.0, 0.0, 0.0);
        assert!(matches!(coupling_constant(&m, &f), Err(Error::NoDrivingField)));
    }

    #[test]
    fn table_is_symmetrised_and_clamped() {
        let t = NoiseTable::new(&[-1.0, 0.0, 1.0, 2.0], &[0.2, 0.0, 0.4, 1.0], &[0.0; 4]).unwrap();
        assert_eq!(t.eval(1.0), (0.30000000000000004, 0.0));
        assert_eq!(t.eval(-1.0), t.eval(1.0));
        assert_eq!(t.eval(5.0).0, 1.0);
        assert!((t.eval(0.5).0 - 0.15).abs() < 1e-15);
    }

    #[test]
    fn unphysical_table_rejected() {
        assert!(NoiseTable::new(&[0.0], &[0.0], &[0.6]).is_err());
    }

    #[test]
    fn parser_reports_unknown_key() {
        let err = ParameterSet::parse("gamma1 = 0.5\nfoo = 1\n", None).unwrap_err();
        assert!(err.to_string().contains("foo"));
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn parser_reads_noise_and_defaults() {
        let p = ParameterSet::parse("noise2 = squeezed # probe\nxi2 = 1\nalpha2=0\n", None).unwrap();
        assert_eq!(p.noise.probe, NoiseProfile::Squeezed { xi: 1.0 });
        assert_eq!(p.noise.pump, NoiseProfile::Coherent);
        assert_eq!(p.fields.alpha2, 0.0);
        assert_eq!(p.medium.n_atoms, 1e12);
        assert_eq!(p.resolved.len(), PARAMETER_KEYS.len());
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, -3.25e-17, 1.0 / 3.0, 12345.678, -0.0] {
            let s = format_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), if v == 0.0 { 0.0 } else { v });
        }
    }
}
