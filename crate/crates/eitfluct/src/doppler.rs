//! Gaussian velocity-class averaging of the quadrature spectra.
//!
//! Every velocity class shifts both carriers by the same two-photon detuning
//! `δ` (co-propagating beams), and the spectrum frequency seen by that class
//! becomes `ω − δ`. The stationary spectrum averaged over independent
//! classes at the two time arguments is
//!
//! `S = ∫∫ ρ(δ1) ρ(δ2) S(θ, ω, δ1, δ2) dδ1 dδ2`,
//!
//! with the pair covariance `C_vac + M_δ1 (C0 − C_vac) M'_δ2ᵀ` of
//! [`crate::langevin::pair_covariance`]. The double sum factorises exactly
//! into `C_vac + M̄ (C0 − C_vac) M̄'ᵀ` with class-averaged transfer matrices
//! `M̄ = Σ w_k exp(G_δk(ω − δk) z)`, which makes the cost linear in the node
//! count.
//!
//! The integrand oscillates in `δ` with a phase that grows like `δ·z𝒞/Ω²`,
//! so a single global Gauss rule does not converge at long distances. The
//! quadrature is a composite Gauss–Legendre rule on `[−Tσ, Tσ]` with the
//! Gaussian as weight function, `n` nodes per panel and a panel count that
//! is doubled until the longest requested distance is converged.

use std::fmt;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::langevin::{input_covariance, quadrature_spectrum, vacuum_covariance, LangevinModel, Mat4};
use crate::medium::{Field, FieldConfig, InputNoise, MediumParams};

/// Meaning of the width parameter `Δδ` of the detuning distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WidthConvention {
    /// `Δδ` is the standard deviation of the Gaussian.
    #[default]
    StandardDeviation,
    /// `Δδ` is the variance of the Gaussian (in squared rate units).
    Variance,
}

/// Settings of the velocity-class average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerConfig {
    /// Width parameter `Δδ` of the Gaussian detuning distribution.
    pub delta_width: f64,
    /// Gauss–Legendre nodes per panel.
    pub quadrature_order: usize,
    pub convention: WidthConvention,
    /// Nodes are kept within `±truncation·σ`.
    pub truncation: f64,
}

/// Relative change below which the panel refinement stops.
const PANEL_TOLERANCE: f64 = 1e-6;
/// Relative change between `n` and `2n` nodes per panel that triggers a warning.
const ORDER_TOLERANCE: f64 = 1e-3;
const INITIAL_PANELS: usize = 4;
const MAX_PANELS: usize = 4096;

impl DopplerConfig {
    pub fn new(delta_width: f64, quadrature_order: usize) -> Result<Self> {
        let d = DopplerConfig {
            delta_width,
            quadrature_order,
            convention: WidthConvention::StandardDeviation,
            truncation: 5.0,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.delta_width.is_finite() || self.delta_width < 0.0 {
            return Err(Error::invalid("delta_width", format!("must be ≥ 0, got {}", self.delta_width)));
        }
        if self.quadrature_order == 0 {
            return Err(Error::invalid("quadrature_order", "must be ≥ 1"));
        }
        if !self.truncation.is_finite() || self.truncation <= 0.0 {
            return Err(Error::invalid("truncation", format!("must be > 0, got {}", self.truncation)));
        }
        Ok(())
    }

    /// Standard deviation `σ` of the detuning distribution.
    pub fn sigma(&self) -> f64 {
        match self.convention {
            WidthConvention::StandardDeviation => self.delta_width,
            WidthConvention::Variance => self.delta_width.sqrt(),
        }
    }
}

/// Quadrature nodes over the velocity classes; weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityNodes {
    pub detunings: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Composite Gauss–Legendre rule for the normalised Gaussian of standard
/// deviation `sigma` on `[−truncation·σ, truncation·σ]`.
pub fn velocity_nodes(sigma: f64, order: usize, panels: usize, truncation: f64) -> Result<VelocityNodes> {
    let order = NonZeroUsize::new(order).ok_or_else(|| Error::invalid("quadrature_order", "must be ≥ 1"))?;
    if panels == 0 {
        return Err(Error::invalid("panels", "must be ≥ 1"));
    }
    if sigma == 0.0 {
        return Ok(VelocityNodes {
            detunings: vec![0.0],
            weights: vec![1.0],
        });
    }
    let rule = GaussLegendre::new(order);
    let (lo, width) = (-truncation * sigma, 2.0 * truncation * sigma / panels as f64);
    let mut detunings = Vec::with_capacity(panels * order.get());
    let mut weights = Vec::with_capacity(panels * order.get());
    for k in 0..panels {
        let a = lo + k as f64 * width;
        for &(x, w) in rule.as_node_weight_pairs() {
            let d = a + 0.5 * width * (x + 1.0);
            detunings.push(d);
            weights.push(0.5 * width * w * (-0.5 * (d / sigma).powi(2)).exp());
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(VelocityNodes { detunings, weights })
}

/// Diagnostics raised while averaging.
#[derive(Debug, Clone, PartialEq)]
pub enum DopplerWarning {
    /// The panel refinement hit its cap before converging.
    PanelLimit { panels: usize, relative_change: f64 },
    /// Doubling the nodes per panel changed a value by more than 0.1 %.
    OrderRefinement { z: f64, field: Field, coarse: f64, fine: f64 },
}

impl fmt::Display for DopplerWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DopplerWarning::PanelLimit { panels, relative_change } => write!(
                f,
                "velocity quadrature not converged with {panels} panels (last relative change {relative_change:e})"
            ),
            DopplerWarning::OrderRefinement { z, field, coarse, fine } => write!(
                f,
                "quadrature refinement warning at z = {z} ({field}): n nodes give {coarse}, 2n nodes give {fine}"
            ),
        }
    }
}

/// Velocity-averaged spectra of both fields along a distance grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DopplerCurve {
    pub delta_width: f64,
    pub z: Vec<f64>,
    pub pump: Vec<f64>,
    pub probe: Vec<f64>,
    /// Panels of the converged rule (0 when no averaging was needed).
    pub panels: usize,
    pub warnings: Vec<DopplerWarning>,
}

impl DopplerCurve {
    pub fn field(&self, field: Field) -> &[f64] {
        match field {
            Field::Pump => &self.pump,
            Field::Probe => &self.probe,
        }
    }
}

struct ClassGenerators {
    weight: f64,
    forward: Mat4,
    backward: Mat4,
}

fn shifted(f: &FieldConfig, delta: f64) -> FieldConfig {
    let mut g = *f;
    g.delta1 += delta;
    g.delta2 += delta;
    g
}

fn class_generators(
    nodes: &VelocityNodes,
    omega: f64,
    m: &MediumParams,
    f: &FieldConfig,
) -> Result<Vec<ClassGenerators>> {
    nodes
        .detunings
        .par_iter()
        .zip(nodes.weights.par_iter())
        .map(|(&d, &w)| {
            let model = LangevinModel::new(m, &shifted(f, d))?;
            let w_class = omega - d;
            Ok(ClassGenerators {
                weight: w,
                forward: model.generator(w_class)?,
                backward: model.generator(-w_class)?,
            })
        })
        .collect()
}

/// Class-averaged spectra `(S1, S2)` at each `z` for one node set.
fn averaged_spectra(classes: &[ClassGenerators], zs: &[f64], theta: f64, c0: &Mat4) -> (Vec<f64>, Vec<f64>) {
    let vac = vacuum_covariance();
    let excess = c0 - vac;
    zs.par_iter()
        .map(|&z| {
            let zc = Complex64::new(z, 0.0);
            let (mut fwd, mut bwd) = (Mat4::zeros(), Mat4::zeros());
            for cl in classes {
                let w = Complex64::new(cl.weight, 0.0);
                fwd += (cl.forward * zc).exp() * w;
                bwd += (cl.backward * zc).exp() * w;
            }
            let cov = vac + fwd * excess * bwd.transpose();
            (
                quadrature_spectrum(&cov, Field::Pump, theta),
                quadrature_spectrum(&cov, Field::Probe, theta),
            )
        })
        .unzip()
}

fn max_relative_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1.0))
        .fold(0.0, f64::max)
}

/// Velocity-averaged θ-quadrature spectra of both fields on the distance
/// grid `zs`.
///
/// `omega` is the spectrum frequency of the mean velocity class; `f` holds
/// its (common) two-photon detuning. The input noise is evaluated at
/// `omega`. For `Δδ = 0` the unaveraged Langevin spectrum is returned.
#[allow(clippy::too_many_arguments)]
pub fn doppler_curve(
    zs: &[f64],
    theta: f64,
    omega: f64,
    inputs: &InputNoise,
    m: &MediumParams,
    f: &FieldConfig,
    d: &DopplerConfig,
) -> Result<DopplerCurve> {
    d.validate()?;
    f.common_detuning()?;
    if zs.iter().any(|z| !z.is_finite() || *z < 0.0) {
        return Err(Error::invalid("z", "distances must be finite and ≥ 0"));
    }
    let noise = inputs.at(omega);
    let sigma = d.sigma();
    if sigma == 0.0 {
        let model = LangevinModel::new(m, f)?;
        let (pump, probe) = zs
            .par_iter()
            .map(|&z| {
                let cov = model.covariance(z, omega, &noise)?;
                Ok((
                    quadrature_spectrum(&cov, Field::Pump, theta),
                    quadrature_spectrum(&cov, Field::Probe, theta),
                ))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        return Ok(DopplerCurve {
            delta_width: d.delta_width,
            z: zs.to_vec(),
            pump,
            probe,
            panels: 0,
            warnings: Vec::new(),
        });
    }

    let c0 = input_covariance(&noise);
    let evaluate = |order: usize, panels: usize| -> Result<(Vec<f64>, Vec<f64>)> {
        let nodes = velocity_nodes(sigma, order, panels, d.truncation)?;
        let classes = class_generators(&nodes, omega, m, f)?;
        Ok(averaged_spectra(&classes, zs, theta, &c0))
    };

    let mut warnings = Vec::new();
    let mut panels = INITIAL_PANELS;
    let mut current = evaluate(d.quadrature_order, panels)?;
    loop {
        let refined = evaluate(d.quadrature_order, 2 * panels)?;
        let change = max_relative_change(&current.0, &refined.0).max(max_relative_change(&current.1, &refined.1));
        panels *= 2;
        current = refined;
        if change < PANEL_TOLERANCE {
            break;
        }
        if panels >= MAX_PANELS {
            warnings.push(DopplerWarning::PanelLimit {
                panels,
                relative_change: change,
            });
            break;
        }
    }

    let fine = evaluate(2 * d.quadrature_order, panels)?;
    for (field, coarse_v, fine_v) in [
        (Field::Pump, &current.0, &fine.0),
        (Field::Probe, &current.1, &fine.1),
    ] {
        for ((&z, &c), &fv) in zs.iter().zip(coarse_v.iter()).zip(fine_v.iter()) {
            if (c - fv).abs() > ORDER_TOLERANCE * fv.abs() {
                warnings.push(DopplerWarning::OrderRefinement {
                    z,
                    field,
                    coarse: c,
                    fine: fv,
                });
            }
        }
    }

    Ok(DopplerCurve {
        delta_width: d.delta_width,
        z: zs.to_vec(),
        pump: current.0,
        probe: current.1,
        panels,
        warnings,
    })
}

/// Velocity-averaged θ-quadrature spectrum of one field at one distance.
#[allow(clippy::too_many_arguments)]
pub fn doppler_spectrum(
    z: f64,
    theta: f64,
    omega: f64,
    field: Field,
    inputs: &InputNoise,
    m: &MediumParams,
    f: &FieldConfig,
    d: &DopplerConfig,
) -> Result<(f64, Vec<DopplerWarning>)> {
    let curve = doppler_curve(&[z], theta, omega, inputs, m, f, d)?;
    Ok((curve.field(field)[0], curve.warnings))
}

/// One curve per width in `widths`, sharing the distance grid and settings
/// of `template` (whose `delta_width` is ignored).
#[allow(clippy::too_many_arguments)]
pub fn doppler_sweep(
    zs: &[f64],
    widths: &[f64],
    theta: f64,
    omega: f64,
    inputs: &InputNoise,
    m: &MediumParams,
    f: &FieldConfig,
    template: &DopplerConfig,
) -> Result<Vec<DopplerCurve>> {
    widths
        .iter()
        .map(|&w| {
            let d = DopplerConfig {
                delta_width: w,
                ..*template
            };
            doppler_curve(zs, theta, omega, inputs, m, f, &d)
        })
        .collect()
}
