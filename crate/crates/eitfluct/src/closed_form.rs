//! Analytic spectra of the pump (field 1) and probe (field 2) after a
//! propagation distance `z`, together with the derived length scales,
//! rotation angles and limiting forms.
//!
//! All decay factors are written so that they decay: `exp(Q^(i) z)` with
//! `Q^(i) ≤ 0`, i.e. `exp(−|Q^(i)| z)`.
//!
//! Frequencies `ω` are measured from the field carriers, so the lossless
//! point of the noise spectrum is `ω = 0`. Where a result is conventionally
//! quoted relative to the atomic transition (absorption extrema), both
//! frames are returned.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::medium::{
    coupling_constant, squeezed_preset, Field, FieldConfig, InputNoise, MediumParams, NoiseValues,
};

/// Complex propagation coefficients `Q±(ω) = ω𝒞 / (Ω² − ω(ω ± δ) + iωγ/2)`.
///
/// On two-photon resonance (`δ = 0`) both equal the single coefficient `Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationCoefficients {
    pub plus: Complex64,
    pub minus: Complex64,
}

impl PropagationCoefficients {
    /// `Q^(r)` of the resonant case (`Q+^(r)` in general).
    pub fn q_r(&self) -> f64 {
        self.plus.re
    }

    /// `Q^(i)` of the resonant case (`Q+^(i)` in general).
    pub fn q_i(&self) -> f64 {
        self.plus.im
    }
}

fn q_single(omega: f64, delta_signed: f64, c: f64, big_omega_sq: f64, gamma: f64) -> Result<Complex64> {
    let re_den = big_omega_sq - omega * (omega + delta_signed);
    let im_den = omega * gamma / 2.0;
    if im_den == 0.0 && omega != 0.0 && re_den.abs() <= 1e-14 * big_omega_sq.max(omega * omega) {
        return Err(Error::Singularity(format!(
            "lossless pole at ω = {omega} (Ω² = ω(ω {} δ))",
            if delta_signed >= 0.0 { '+' } else { '−' }
        )));
    }
    Ok(Complex64::new(omega * c, 0.0) / Complex64::new(re_den, im_den))
}

/// Propagation coefficient `Q(ω)` on two-photon resonance with `δ = 0`.
pub fn q_resonance(omega: f64, m: &MediumParams, f: &FieldConfig) -> Result<PropagationCoefficients> {
    q_detuned(omega, 0.0, m, f)
}

/// Propagation coefficients `Q±(ω)` for the detuned two-photon resonance `δ1 = δ2 = δ`.
pub fn q_detuned(omega: f64, delta: f64, m: &MediumParams, f: &FieldConfig) -> Result<PropagationCoefficients> {
    let c = coupling_constant(m, f)?;
    let o_sq = f.omega(m).powi(2);
    let gamma = m.gamma();
    Ok(PropagationCoefficients {
        plus: q_single(omega, delta, c, o_sq, gamma)?,
        minus: q_single(omega, -delta, c, o_sq, gamma)?,
    })
}

fn alpha_weights(f: &FieldConfig) -> Result<(f64, f64)> {
    let (a1, a2) = (f.alpha1 * f.alpha1, f.alpha2 * f.alpha2);
    if a1 + a2 == 0.0 {
        return Err(Error::NoDrivingField);
    }
    Ok((a1, a2))
}

fn require_resonance(f: &FieldConfig) -> Result<()> {
    if f.delta1 != 0.0 || f.delta2 != 0.0 {
        return Err(Error::UnsupportedRegime(format!(
            "resonance formulas need δ1 = δ2 = 0, got ({}, {}); use the detuned evaluators",
            f.delta1, f.delta2
        )));
    }
    Ok(())
}

fn require_equal_amplitudes(f: &FieldConfig) -> Result<()> {
    if f.alpha1.abs() != f.alpha2.abs() {
        return Err(Error::UnsupportedRegime(format!(
            "closed-form correlations need |α1| = |α2|, got ({}, {}); use the langevin engine",
            f.alpha1, f.alpha2
        )));
    }
    Ok(())
}

/// θ-quadrature spectrum of `field` on exact resonance (`δ1 = δ2 = 0`) for
/// arbitrary input noise on both fields.
pub fn spectrum_resonance(
    z: f64,
    omega: f64,
    theta: f64,
    field: Field,
    inputs: &InputNoise,
    m: &MediumParams,
    f: &FieldConfig,
) -> Result<f64> {
    require_resonance(f)?;
    let (a1, a2) = alpha_weights(f)?;
    let q = q_resonance(omega, m, f)?;
    let NoiseValues { f1, g1, f2, g2 } = inputs.at(omega);
    let (qr, qi) = (q.q_r(), q.q_i().abs());
    let c2 = (2.0 * theta).cos();
    let osc = 4.0 * (-qi * z).exp() * (qr * z).cos() * a1 * a2;
    let mixed = f2 * a1 + a2 * f1 + c2 * (g2 * a1 + a2 * g1);
    let kept = f1 * a1 + a2 * f2 + c2 * (g1 * a1 + a2 * g2);
    let decayed = 2.0 * (-2.0 * qi * z).exp() * mixed;
    let body = match field {
        Field::Pump => osc * (f1 - f2 + c2 * (g1 - g2)) + a2 * decayed + 2.0 * a1 * kept,
        Field::Probe => osc * (f2 - f1 + c2 * (g2 - g1)) + a1 * decayed + 2.0 * a2 * kept,
    };
    Ok(1.0 + body / (a1 + a2).powi(2))
}

/// θ-quadrature spectrum of `field` for the detuned two-photon resonance
/// `δ1 = δ2 = δ` with a coherent pump and arbitrary probe noise.
pub fn spectrum_detuned(
    z: f64,
    omega: f64,
    theta: f64,
    field: Field,
    inputs: &InputNoise,
    m: &MediumParams,
    f: &FieldConfig,
) -> Result<f64> {
    let delta = f.common_detuning()?;
    let NoiseValues { f1, g1, f2, g2 } = inputs.at(omega);
    if f1 != 0.0 || g1 != 0.0 {
        return Err(Error::UnsupportedRegime(
            "detuned closed forms assume a coherent pump input; use the langevin engine".into(),
        ));
    }
    let (a1, a2) = alpha_weights(f)?;
    let q = q_detuned(omega, delta, m, f)?;
    let (pr, pi) = (q.plus.re * z, q.plus.im * z);
    let (mr, mi) = (q.minus.re * z, q.minus.im * z);
    let th2 = 2.0 * theta;
    let e = f64::exp;
    let norm = (a1 + a2).powi(2);
    let value = match field {
        Field::Pump => {
            let fp = f2
                * (2.0 + e(2.0 * mi) + e(2.0 * pi)
                    - 2.0 * e(mi) * mr.cos()
                    - 2.0 * e(pi) * pr.cos());
            let gp = 2.0
                * g2
                * (th2.cos() + e(mi + pi) * (mr - pr + th2).cos()
                    - e(pi) * (pr - th2).cos()
                    - e(mi) * (mr + th2).cos());
            a1 * a2 / norm * (fp + gp)
        }
        Field::Probe => {
            let t1 = a1 * a1
                * (f2 * (e(2.0 * mi) + e(2.0 * pi)) + 2.0 * g2 * e(mi + pi) * (mr - pr + th2).cos());
            let t2 = a1 * a2
                * (2.0 * f2 * (e(mi) * mr.cos() + e(pi) * pr.cos())
                    + 2.0 * g2 * (e(pi) * (pr - th2).cos() + e(mi) * (mr + th2).cos()));
            let t3 = 2.0 * a2 * a2 * (f2 + g2 * th2.cos());
            (t1 + t2 + t3) / norm
        }
    };
    Ok(1.0 + value)
}

/// Exact complex cross-spectrum `S_c(θ1, θ2)` between the pump
/// θ1-quadrature and the probe θ2-quadrature for `|α1| = |α2|`, arbitrary
/// input noise on both fields and detuned two-photon resonance `δ1 = δ2 = δ`.
///
/// The cross-spectrum of two different quadratures is not real in general.
/// Its real part tends to the plateau `½[cos(θ1−θ2)(f1+f2) + cos(θ1+θ2)(g1+g2)]`
/// for `z ≫ z_abs`. The coherent oscillation of the correlations on
/// `z ≪ z_abs` sits in its imaginary part.
pub fn correlation_detuned(
    z: f64,
    omega: f64,
    theta1: f64,
    theta2: f64,
    inputs: &InputNoise,
    m: &MediumParams,
    f: &FieldConfig,
) -> Result<Complex64> {
    let delta = f.common_detuning()?;
    require_equal_amplitudes(f)?;
    let q = q_detuned(omega, delta, m, f)?;
    let NoiseValues { f1, g1, f2, g2 } = inputs.at(omega);
    let (bp, bm) = ((q.plus.im * z).exp(), (q.minus.im * z).exp());
    let (p, mm) = (q.plus.re * z, q.minus.re * z);
    let (dif, sum) = (theta1 - theta2, theta1 + theta2);
    let (ff, gg) = (f1 + f2, g1 + g2);
    let re = 0.5 * (ff * dif.cos() + gg * sum.cos())
        - 0.25 * (bm * bm + bp * bp) * ff * dif.cos()
        - 0.5 * bm * bp * (mm - p + sum).cos() * gg
        + 0.5 * (f2 - f1) * dif.sin() * (bm * mm.sin() - bp * p.sin());
    let im = 0.25 * (bp * bp - bm * bm) * ff * dif.sin()
        + 0.5 * (f1 - f2) * dif.cos() * (bm * mm.sin() + bp * p.sin())
        + 0.5 * (g1 - g2) * (bm * (mm + sum).sin() + bp * (p - sum).sin());
    Ok(Complex64::new(re, im))
}

/// Exact complex cross-spectrum on resonance (`δ1 = δ2 = 0`, `|α1| = |α2|`).
///
/// With `B = exp(Q^(i) z)` and `p = Q^(r) z`:
/// `Re S_c = ½(1 − B²)[cos(θ1−θ2)(f1+f2) + cos(θ1+θ2)(g1+g2)]` and
/// `Im S_c = B sin p [cos(θ1−θ2)(f1−f2) + cos(θ1+θ2)(g1−g2)]`.
pub fn correlation_resonance(
    z: f64,
    omega: f64,
    theta1: f64,
    theta2: f64,
    inputs: &InputNoise,
    m: &MediumParams,
    f: &FieldConfig,
) -> Result<Complex64> {
    require_resonance(f)?;
    correlation_detuned(z, omega, theta1, theta2, inputs, m, f)
}

/// The `z ≫ z_abs` plateau of `Re S_c`.
pub fn correlation_plateau(theta1: f64, theta2: f64, n: &NoiseValues) -> f64 {
    0.5 * ((theta1 - theta2).cos() * (n.f1 + n.f2) + (theta1 + theta2).cos() * (n.g1 + n.g2))
}

/// Phase-difference spectrum `S_φ = (S1^{π/2} + S2^{π/2} − 2 Re S_c^{π/2,π/2}) / α²`
/// on resonance with `α1 = α2 = α`, evaluated from its exact propagation law
/// `α² S_φ(z) = 2 + exp(−2|Q^(i)| z) (α² S_φ(0) − 2)`.
///
/// The constant 2 is the vacuum floor of the two phase quadratures; only the
/// excess above it decays, at twice the field-amplitude absorption rate.
pub fn phase_difference_spectrum(
    z: f64,
    omega: f64,
    inputs: &InputNoise,
    m: &MediumParams,
    f: &FieldConfig,
) -> Result<f64> {
    require_resonance(f)?;
    require_equal_amplitudes(f)?;
    let a_sq = f.alpha1 * f.alpha1;
    if a_sq == 0.0 {
        return Err(Error::invalid("alpha", "phase-difference spectrum needs α > 0"));
    }
    let q = q_resonance(omega, m, f)?;
    let s0 = inputs.initial_spectrum(Field::Pump, omega, FRAC_PI_2)
        + inputs.initial_spectrum(Field::Probe, omega, FRAC_PI_2);
    Ok((2.0 + (2.0 * q.q_i() * z).exp() * (s0 - 2.0)) / a_sq)
}

/// The same quantity assembled from the three component evaluators.
pub fn phase_difference_from_components(
    z: f64,
    omega: f64,
    inputs: &InputNoise,
    m: &MediumParams,
    f: &FieldConfig,
) -> Result<f64> {
    require_equal_amplitudes(f)?;
    let a_sq = f.alpha1 * f.alpha1;
    if a_sq == 0.0 {
        return Err(Error::invalid("alpha", "phase-difference spectrum needs α > 0"));
    }
    let s1 = spectrum_resonance(z, omega, FRAC_PI_2, Field::Pump, inputs, m, f)?;
    let s2 = spectrum_resonance(z, omega, FRAC_PI_2, Field::Probe, inputs, m, f)?;
    let sc = correlation_resonance(z, omega, FRAC_PI_2, FRAC_PI_2, inputs, m, f)?;
    Ok((s1 + s2 - 2.0 * sc.re) / a_sq)
}

/// Reduces an angle to its representative in `[0, π)`.
pub fn wrap_pi(theta: f64) -> f64 {
    let r = theta.rem_euclid(PI);
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// Quadrature-rotation angles of the detuned two-photon resonance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationAngles {
    /// `(Q−^(r) − Q+^(r)) z / 2`: the angle `φ` in `S2(z, θ=0) = S2(0, θ=φ)`
    /// for a squeezed-vacuum probe (`α2 = 0`) with absorption neglected.
    /// The squeezed quadrature itself sits at `θ = −φ (mod π)`.
    pub vacuum_probe: f64,
    /// `θ_min = (Q+^(r) − Q−^(r)) z / 4`, in `[0, π)`, for `α1 = α2`.
    pub theta_min: f64,
    /// `θ_max = θ_min + π/2`, in `[0, π)`.
    pub theta_max: f64,
}

/// Rotation angles at distance `z`. The two conventions differ by a factor
/// of two in rate because they describe different settings (vacuum probe
/// versus equal mean amplitudes); they are reported separately.
///
/// `theta_min` is the exact minimiser of the probe spectrum for `α1 = α2`,
/// negligible absorption and a probe squeezed along `θ = 0` whenever
/// `cos(Q+^(r) z/2) cos(Q−^(r) z/2) > 0`; otherwise the extremal quadratures
/// swap roles.
pub fn rotation_angle(z: f64, omega: f64, delta: f64, m: &MediumParams, f: &FieldConfig) -> Result<RotationAngles> {
    let q = q_detuned(omega, delta, m, f)?;
    let (pr, mr) = (q.plus.re, q.minus.re);
    let theta_min = wrap_pi((pr - mr) * z / 4.0);
    Ok(RotationAngles {
        vacuum_probe: (mr - pr) * z / 2.0,
        theta_min,
        theta_max: wrap_pi(theta_min + FRAC_PI_2),
    })
}

/// Length scales, absorption extrema and transparency-window width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub q: PropagationCoefficients,
    /// Absorption length `1 / max(|Q+^(i)|, |Q−^(i)|)` (infinite when lossless).
    pub z_abs: f64,
    /// Fast oscillation length: `2π/|Q^(r)|` on resonance (the period of the
    /// pump–probe interchange), `π/|Q+^(r)|` when detuned.
    pub z_osc: f64,
    /// Intermediate envelope length `2π/|Q−^(r) − Q+^(r)|` (infinite at `δ = 0`).
    pub z_int: f64,
    /// `z_abs / z_osc`; on resonance equal to `|Ω² − ω²| / (πγω)`.
    pub abs_osc_ratio: f64,
    /// The four absorption maxima `ω±± = δ + ½(±δ ± sqrt(δ² + 4Ω²))`,
    /// measured from the atomic transition, ordered `[++, +−, −+, −−]`
    /// (first sign in front of `δ`, second in front of the root).
    pub absorption_extrema_atomic: [f64; 4],
    /// The same extrema measured from the field carriers (`ω±± − δ`): the
    /// frequencies at which `|Q±^(i)(ω)|` peak.
    pub absorption_extrema_carrier: [f64; 4],
    /// Central transparency-window width `2Ω²/|δ|`; `None` at `δ = 0`.
    pub window_width: Option<f64>,
}

/// Length scales and spectral landmarks at spectrum frequency `ω` and detuning `δ`.
pub fn diagnostics(omega: f64, delta: f64, m: &MediumParams, f: &FieldConfig) -> Result<Diagnostics> {
    let q = q_detuned(omega, delta, m, f)?;
    let o_sq = f.omega(m).powi(2);
    let z_abs = 1.0 / q.plus.im.abs().max(q.minus.im.abs());
    let z_osc = if delta == 0.0 {
        2.0 * PI / q.plus.re.abs()
    } else {
        PI / q.plus.re.abs()
    };
    let dq = (q.minus.re - q.plus.re).abs();
    let z_int = if dq == 0.0 { f64::INFINITY } else { 2.0 * PI / dq };
    let root = (delta * delta + 4.0 * o_sq).sqrt();
    let atomic = [
        delta + 0.5 * (delta + root),
        delta + 0.5 * (delta - root),
        delta + 0.5 * (-delta + root),
        delta + 0.5 * (-delta - root),
    ];
    Ok(Diagnostics {
        q,
        z_abs,
        z_osc,
        z_int,
        abs_osc_ratio: z_abs / z_osc,
        absorption_extrema_atomic: atomic,
        absorption_extrema_carrier: atomic.map(|w| w - delta),
        window_width: (delta != 0.0).then(|| 2.0 * o_sq / delta.abs()),
    })
}

/// Distances at which every quadrature of one field carries the same noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropyDistances {
    /// `Q+^(r) z_{2,+}(m) = 4πm + π`.
    pub z2_plus: f64,
    /// `Q−^(r) z_{2,−}(m) = 4πm + π`.
    pub z2_minus: f64,
    /// `Q+^(r) z_{1,+}(m) = 4πm`.
    pub z1_plus: f64,
    /// `Q−^(r) z_{1,−}(m) = 4πm`.
    pub z1_minus: f64,
    /// Common probe value `1 + ½(cos(Q−^(r) z_{2,+}) + 1) sinh²ξ` at `z_{2,+}`.
    pub s2_at_z2_plus: f64,
    /// Common probe value `1 + ½(cos(Q+^(r) z_{2,−}) + 1) sinh²ξ` at `z_{2,−}`.
    pub s2_at_z2_minus: f64,
    /// Common pump value `1 + ½(1 − cos(Q−^(r) z_{1,+})) sinh²ξ` at `z_{1,+}`.
    pub s1_at_z1_plus: f64,
    /// Common pump value `1 + ½(1 − cos(Q+^(r) z_{1,−})) sinh²ξ` at `z_{1,−}`.
    pub s1_at_z1_minus: f64,
}

/// Isotropy distances of order `m_index` for `α1 = α2`, a coherent pump and a
/// probe squeezed with parameter `xi`, neglecting absorption.
pub fn isotropy_distances(
    m_index: u32,
    omega: f64,
    delta: f64,
    xi: f64,
    m: &MediumParams,
    f: &FieldConfig,
) -> Result<IsotropyDistances> {
    require_equal_amplitudes(f)?;
    let q = q_detuned(omega, delta, m, f)?;
    let (pr, mr) = (q.plus.re, q.minus.re);
    if pr == 0.0 || mr == 0.0 {
        return Err(Error::Singularity("Q±^(r) = 0: no finite isotropy distance".into()));
    }
    let k = 4.0 * PI * f64::from(m_index);
    let (z2p, z2m, z1p, z1m) = ((k + PI) / pr, (k + PI) / mr, k / pr, k / mr);
    let (fs, _) = squeezed_preset(xi);
    Ok(IsotropyDistances {
        z2_plus: z2p,
        z2_minus: z2m,
        z1_plus: z1p,
        z1_minus: z1m,
        s2_at_z2_plus: 1.0 + 0.5 * ((mr * z2p).cos() + 1.0) * fs,
        s2_at_z2_minus: 1.0 + 0.5 * ((pr * z2m).cos() + 1.0) * fs,
        s1_at_z1_plus: 1.0 + 0.5 * (1.0 - (mr * z1p).cos()) * fs,
        s1_at_z1_minus: 1.0 + 0.5 * (1.0 - (pr * z1m).cos()) * fs,
    })
}

/// Large-detuning approximation of the θ = 0 spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeDetuningSpectra {
    pub s1: f64,
    pub s2: f64,
    /// Set when the evaluation point violates a precondition by more than
    /// a factor of 10 (or lies beyond the absorption length).
    pub regime_warning: Option<String>,
}

fn large_detuning_probe(x: f64, xi: f64) -> f64 {
    let (c, s) = ((x / 2.0).cos(), (x / 2.0).sin());
    (-2.0 * xi).exp() * c.powi(4) + s * s + 0.25 * (2.0 * xi).exp() * x.sin().powi(2)
}

/// θ = 0 spectra for `|δω| ≫ Ω², ω²`, `δ ≫ γ`, `z < z_abs`, `α1 = α2`:
/// `S2(z) = S1(z + π/Q+^(r)) ≈ e^{−2ξ}cos⁴(x/2) + sin²(x/2) + ¼e^{2ξ}sin²x`
/// with `x = Q+^(r) z`.
pub fn large_detuning_spectrum(
    z: f64,
    omega: f64,
    delta: f64,
    xi: f64,
    m: &MediumParams,
    f: &FieldConfig,
) -> Result<LargeDetuningSpectra> {
    require_equal_amplitudes(f)?;
    let q = q_detuned(omega, delta, m, f)?;
    let x = q.plus.re * z;
    let o_sq = f.omega(m).powi(2);
    let z_abs = 1.0 / q.plus.im.abs().max(q.minus.im.abs());
    let mut issues = Vec::new();
    if (delta * omega).abs() < 10.0 * o_sq.max(omega * omega) {
        issues.push(format!("|δω| = {} is not ≫ max(Ω², ω²) = {}", (delta * omega).abs(), o_sq.max(omega * omega)));
    }
    if delta.abs() < 10.0 * m.gamma() {
        issues.push(format!("|δ| = {} is not ≫ γ = {}", delta.abs(), m.gamma()));
    }
    if z > z_abs {
        issues.push(format!("z = {z} exceeds z_abs = {z_abs}"));
    }
    Ok(LargeDetuningSpectra {
        s1: large_detuning_probe(x - PI, xi),
        s2: large_detuning_probe(x, xi),
        regime_warning: (!issues.is_empty()).then(|| issues.join("; ")),
    })
}
