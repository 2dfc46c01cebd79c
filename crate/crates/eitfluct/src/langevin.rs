//! Frequency-domain solution of the linearised Heisenberg–Langevin equations
//! of the Λ medium.
//!
//! The atom is described by the 3×3 operator algebra with
//! `H = δ1σ11 + δ2σ22 + Ω1(σe1 + σ1e) + Ω2(σe2 + σ2e)` (`Ω_j = g_j α_j`),
//! spontaneous decay `√γ1 σ1e`, `√γ2 σ2e` and ground-state dephasing
//! `√(γ12/2)(σ22 − σ11)`. Heisenberg equations read `dO/dt = i[H,O] + 𝓛†(O)`.
//!
//! Atomic fluctuations live in the basis
//! `x = (σ1e, σe1, σ2e, σe2, σ21, σ12, ϖ1, ϖ2)` with `ϖ_j = σee − σjj`.
//! They are eliminated algebraically at each spectrum frequency, which is
//! exact at every `ω`. This leaves a 4×4 spatial generator for the field
//! fluctuations `(δa1(ω), δa1†(−ω), δa2(ω), δa2†(−ω))`. Propagation uses
//! the retarded frame, so the free-space phase `iωz/c` is dropped.
//!
//! Covariances are normalised so that the vacuum has `⟨δa(ω) δa†(−ω)⟩ = 1`.
//! A field with input noise `(f, g)` has entries `1 + f`, `f`, `g`, `g`.

use nalgebra::{Matrix3, SMatrix, SVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::medium::{Field, FieldConfig, InputNoise, MediumParams, NoiseValues};

pub type C64 = Complex64;
pub type Op = Matrix3<C64>;
pub type Mat4 = SMatrix<C64, 4, 4>;
pub type Mat8 = SMatrix<C64, 8, 8>;
type Mat4x8 = SMatrix<C64, 4, 8>;
type Mat8x4 = SMatrix<C64, 8, 4>;
type Mat17 = SMatrix<C64, 17, 17>;

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `|i⟩⟨j|` with levels ordered `|1⟩, |2⟩, |e⟩`.
fn ket_bra(i: usize, j: usize) -> Op {
    let mut o = Op::zeros();
    o[(i, j)] = c(1.0);
    o
}

/// The eight atomic basis operators.
pub fn atomic_basis() -> [Op; 8] {
    let see = ket_bra(2, 2);
    [
        ket_bra(0, 2),
        ket_bra(2, 0),
        ket_bra(1, 2),
        ket_bra(2, 1),
        ket_bra(1, 0),
        ket_bra(0, 1),
        see - ket_bra(0, 0),
        see - ket_bra(1, 1),
    ]
}

/// Decomposes `o = c0·1 + Σ_k c_k x_k`; returns `(c, c0)`.
fn coordinates(o: &Op) -> ([C64; 8], C64) {
    let c0 = (o[(0, 0)] + o[(1, 1)] + o[(2, 2)]) / c(3.0);
    (
        [
            o[(0, 2)],
            o[(2, 0)],
            o[(1, 2)],
            o[(2, 1)],
            o[(1, 0)],
            o[(0, 1)],
            c0 - o[(0, 0)],
            c0 - o[(1, 1)],
        ],
        c0,
    )
}

/// Atomic Hamiltonian with the mean fields inserted.
pub fn hamiltonian(m: &MediumParams, f: &FieldConfig) -> Op {
    let (o1, o2) = (c(m.g1 * f.alpha1), c(m.g2 * f.alpha2));
    ket_bra(0, 0) * c(f.delta1)
        + ket_bra(1, 1) * c(f.delta2)
        + (ket_bra(2, 0) + ket_bra(0, 2)) * o1
        + (ket_bra(2, 1) + ket_bra(1, 2)) * o2
}

/// Lindblad operators of the medium.
pub fn lindblad_operators(m: &MediumParams) -> Vec<Op> {
    let mut ls = Vec::with_capacity(3);
    if m.gamma1 > 0.0 {
        ls.push(ket_bra(0, 2) * c(m.gamma1.sqrt()));
    }
    if m.gamma2 > 0.0 {
        ls.push(ket_bra(1, 2) * c(m.gamma2.sqrt()));
    }
    if m.gamma12 > 0.0 {
        ls.push((ket_bra(1, 1) - ket_bra(0, 0)) * c((m.gamma12 / 2.0).sqrt()));
    }
    ls
}

/// Dissipative part of the adjoint generator, `Σ L†OL − ½{L†L, O}`.
fn dissipator_adjoint(ls: &[Op], o: &Op) -> Op {
    let mut r = Op::zeros();
    for l in ls {
        let ld = l.adjoint();
        let ldl = ld * l;
        r += ld * o * l - (ldl * o + o * ldl) * c(0.5);
    }
    r
}

/// Full adjoint generator `i[H, O] + 𝓛†(O)`.
fn adjoint_generator(h: &Op, ls: &[Op], o: &Op) -> Op {
    (h * o - o * h) * I + dissipator_adjoint(ls, o)
}

/// Stationary mean values of the atomic operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomicSteadyState {
    /// Mean values of `(σ1e, σe1, σ2e, σe2, σ21, σ12, ϖ1, ϖ2)`.
    pub means: [C64; 8],
}

impl AtomicSteadyState {
    pub fn sigma_1e(&self) -> C64 {
        self.means[0]
    }
    pub fn sigma_2e(&self) -> C64 {
        self.means[2]
    }
    pub fn sigma_21(&self) -> C64 {
        self.means[4]
    }
    pub fn varpi(&self) -> (C64, C64) {
        (self.means[6], self.means[7])
    }

    /// Populations `(σ11, σ22, σee)`.
    pub fn populations(&self) -> (f64, f64, f64) {
        let (w1, w2) = (self.means[6].re, self.means[7].re);
        ((1.0 - 2.0 * w1 + w2) / 3.0, (1.0 + w1 - 2.0 * w2) / 3.0, (1.0 + w1 + w2) / 3.0)
    }

    /// Density matrix reconstructed from the means (`⟨O⟩ = Tr ρO`).
    pub fn density_matrix(&self) -> Op {
        let (p1, p2, pe) = self.populations();
        let x = &self.means;
        let mut rho = Op::zeros();
        rho[(0, 0)] = c(p1);
        rho[(1, 1)] = c(p2);
        rho[(2, 2)] = c(pe);
        rho[(2, 0)] = x[0];
        rho[(0, 2)] = x[1];
        rho[(2, 1)] = x[2];
        rho[(1, 2)] = x[3];
        rho[(0, 1)] = x[4];
        rho[(1, 0)] = x[5];
        rho
    }
}

/// Drift of the atomic basis: `dx/dt = A x + b` (mean fields inserted).
fn drift(m: &MediumParams, f: &FieldConfig) -> (Mat8, SVector<C64, 8>) {
    let h = hamiltonian(m, f);
    let ls = lindblad_operators(m);
    let mut a = Mat8::zeros();
    let mut b = SVector::<C64, 8>::zeros();
    for (k, x) in atomic_basis().iter().enumerate() {
        let (row, c0) = coordinates(&adjoint_generator(&h, &ls, x));
        for (l, v) in row.iter().enumerate() {
            a[(k, l)] = *v;
        }
        b[k] = c0;
    }
    (a, b)
}

/// Solves the stationary mean-value equations.
pub fn steady_state(m: &MediumParams, f: &FieldConfig) -> Result<AtomicSteadyState> {
    let (a, b) = drift(m, f);
    let x = a
        .lu()
        .solve(&(-b))
        .ok_or_else(|| Error::Numerical("singular mean-value system (no dissipation?)".into()))?;
    let mut means = [ZERO; 8];
    means.copy_from_slice(x.as_slice());
    Ok(AtomicSteadyState { means })
}

/// Weak-probe-normalised probe susceptibility `χ ∝ −⟨σ2e⟩ / Ω2` (arbitrary
/// positive units; `Im χ > 0` is absorption) for each probe detuning of
/// `delta2_scan`, at fixed pump detuning `delta1`.
///
/// The steady state is solved at the configured Rabi frequencies. When the
/// probe amplitude is zero the weak-probe limit is taken with `Ω2 = 10⁻⁶ Ω1`.
pub fn susceptibility(delta2_scan: &[f64], delta1: f64, m: &MediumParams, f: &FieldConfig) -> Result<Vec<C64>> {
    let mut cfg = *f;
    cfg.delta1 = delta1;
    if cfg.omega2(m) == 0.0 {
        if m.g2 == 0.0 || cfg.omega1(m) == 0.0 {
            return Err(Error::NoDrivingField);
        }
        cfg.alpha2 = 1e-6 * cfg.omega1(m) / m.g2;
    }
    let o2 = m.g2 * cfg.alpha2;
    delta2_scan
        .iter()
        .map(|&d2| {
            cfg.delta2 = d2;
            Ok(-steady_state(m, &cfg)?.sigma_2e() / c(o2))
        })
        .collect()
}

/// Diffusion coefficients `D_xy` over the atomic basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionMatrix {
    pub d: Mat8,
}

/// Generalised Einstein relation
/// `D_xy = ⟨𝓛†(xy) − x𝓛†(y) − 𝓛†(x)y⟩` evaluated in the steady state. The
/// Hamiltonian part cancels identically, so only the dissipator enters.
pub fn diffusion_matrix(ss: &AtomicSteadyState, m: &MediumParams) -> Result<DiffusionMatrix> {
    let rho = ss.density_matrix();
    let ls = lindblad_operators(m);
    let basis = atomic_basis();
    let mut d = Mat8::zeros();
    for (i, x) in basis.iter().enumerate() {
        let lx = dissipator_adjoint(&ls, x);
        for (j, y) in basis.iter().enumerate() {
            let ly = dissipator_adjoint(&ls, y);
            let o = dissipator_adjoint(&ls, &(x * y)) - x * ly - lx * y;
            d[(i, j)] = (rho * o).trace();
        }
    }
    // The Hermitian sector pairs x_k with its adjoint: the matrix
    // W_ij = D(x_i†, x_j) must be positive semidefinite.
    let adj_index = [1usize, 0, 3, 2, 5, 4, 6, 7];
    let mut w = Mat8::zeros();
    for i in 0..8 {
        for j in 0..8 {
            w[(i, j)] = d[(adj_index[i], j)];
        }
    }
    let herm = (w + w.adjoint()) * c(0.5);
    let scale = herm.norm().max(1.0);
    let min_eig = herm.symmetric_eigenvalues().min();
    if min_eig < -1e-10 * scale {
        return Err(Error::Numerical(format!(
            "diffusion matrix not positive semidefinite (min eigenvalue {min_eig:e})"
        )));
    }
    Ok(DiffusionMatrix { d })
}

/// Transfer data of the field fluctuations over a distance `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    /// `M(ω, z) = exp(G(ω) z)`, acting on `(δa1(ω), δa1†(−ω), δa2(ω), δa2†(−ω))`.
    pub forward: Mat4,
    /// `M(−ω, z)`, acting on the conjugate-frequency components.
    pub backward: Mat4,
    /// Accumulated Langevin-noise covariance `V(ω, z)`.
    pub noise: Mat4,
}

impl TransferMatrix {
    /// Output covariance `M C0 M(−ω)ᵀ + V`.
    pub fn apply(&self, c0: &Mat4) -> Mat4 {
        self.forward * c0 * self.backward.transpose() + self.noise
    }
}

/// Linearised medium at fixed detunings: everything needed to build the
/// spatial generator at any spectrum frequency.
#[derive(Debug, Clone)]
pub struct LangevinModel {
    pub steady: AtomicSteadyState,
    pub diffusion: DiffusionMatrix,
    drift: Mat8,
    field_jacobian: Mat8x4,
    projection: Mat4x8,
    noise_scale: f64,
}

impl LangevinModel {
    pub fn new(m: &MediumParams, f: &FieldConfig) -> Result<Self> {
        m.validate()?;
        f.validate()?;
        let (drift, _) = drift(m, f);
        let steady = steady_state(m, f)?;
        let diffusion = diffusion_matrix(&steady, m)?;
        let rho = steady.density_matrix();
        // Interaction H_I = g1(a1 σe1 + a1† σ1e) + g2(a2 σe2 + a2† σ2e).
        let parts = [
            ket_bra(2, 0) * c(m.g1),
            ket_bra(0, 2) * c(m.g1),
            ket_bra(2, 1) * c(m.g2),
            ket_bra(1, 2) * c(m.g2),
        ];
        let mut field_jacobian = Mat8x4::zeros();
        for (k, x) in atomic_basis().iter().enumerate() {
            for (j, hp) in parts.iter().enumerate() {
                field_jacobian[(k, j)] = (rho * ((hp * x - x * hp) * I)).trace();
            }
        }
        // ∂a_j/∂z = −i g_j (N/c) σ_je in the retarded frame.
        let mut projection = Mat4x8::zeros();
        let (k1, k2) = (m.g1 * m.n_atoms / m.light_speed, m.g2 * m.n_atoms / m.light_speed);
        projection[(0, 0)] = -I * k1;
        projection[(1, 1)] = I * k1;
        projection[(2, 2)] = -I * k2;
        projection[(3, 3)] = I * k2;
        Ok(LangevinModel {
            steady,
            diffusion,
            drift,
            field_jacobian,
            projection,
            noise_scale: m.light_speed / m.n_atoms,
        })
    }

    /// Atomic response `Γ(ω) = P (−iω − A)⁻¹` (4×8).
    fn response(&self, omega: f64) -> Result<Mat4x8> {
        let k = Mat8::from_diagonal_element(-I * omega) - self.drift;
        let r = k.try_inverse().ok_or_else(|| {
            Error::Singularity(format!("atomic response singular at ω = {omega} (lossless resonance)"))
        })?;
        Ok(self.projection * r)
    }

    /// Spatial generator `G(ω)` of the field fluctuations.
    pub fn generator(&self, omega: f64) -> Result<Mat4> {
        Ok(self.response(omega)? * self.field_jacobian)
    }

    /// Langevin source covariance `K(ω) = Γ(ω) (c/N) D Γ(−ω)ᵀ` per unit length.
    pub fn source(&self, omega: f64) -> Result<Mat4> {
        let (gp, gm) = (self.response(omega)?, self.response(-omega)?);
        Ok(gp * (self.diffusion.d * c(self.noise_scale)) * gm.transpose())
    }

    /// Transfer matrices and accumulated noise over `z`.
    pub fn transfer(&self, z: f64, omega: f64) -> Result<TransferMatrix> {
        let (gp, gm) = (self.generator(omega)?, self.generator(-omega)?);
        let k = self.source(omega)?;
        // Row-major vec: vec(G C) = (G ⊗ 1) vec C, vec(C Gmᵀ) = (1 ⊗ Gm) vec C.
        let mut aug = Mat17::zeros();
        for i in 0..4 {
            for j in 0..4 {
                for l in 0..4 {
                    aug[(4 * i + j, 4 * l + j)] += gp[(i, l)];
                    aug[(4 * i + j, 4 * i + l)] += gm[(j, l)];
                }
                aug[(4 * i + j, 16)] = k[(i, j)];
            }
        }
        let e = (aug * c(z)).exp();
        let mut noise = Mat4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                noise[(i, j)] = e[(4 * i + j, 16)];
            }
        }
        Ok(TransferMatrix {
            forward: (gp * c(z)).exp(),
            backward: (gm * c(z)).exp(),
            noise,
        })
    }

    /// Output covariance for the input noise `n`.
    pub fn covariance(&self, z: f64, omega: f64, n: &NoiseValues) -> Result<Mat4> {
        Ok(self.transfer(z, omega)?.apply(&input_covariance(n)))
    }
}

/// Entrance-face covariance of both fields.
pub fn input_covariance(n: &NoiseValues) -> Mat4 {
    let mut cov = Mat4::zeros();
    for (j, (f, g)) in [(n.f1, n.g1), (n.f2, n.g2)].into_iter().enumerate() {
        let (a, ad) = (2 * j, 2 * j + 1);
        cov[(a, ad)] = c(1.0 + f);
        cov[(ad, a)] = c(f);
        cov[(a, a)] = c(g);
        cov[(ad, ad)] = c(g);
    }
    cov
}

/// Vacuum covariance.
pub fn vacuum_covariance() -> Mat4 {
    input_covariance(&NoiseValues::default())
}

fn quadrature_vector(field: Field, theta: f64) -> SVector<C64, 4> {
    let mut u = SVector::<C64, 4>::zeros();
    let k = 2 * field.index();
    u[k] = C64::from_polar(1.0, -theta);
    u[k + 1] = C64::from_polar(1.0, theta);
    u
}

/// θ-quadrature spectrum of `field` from a covariance matrix.
pub fn quadrature_spectrum(cov: &Mat4, field: Field, theta: f64) -> f64 {
    let u = quadrature_vector(field, theta);
    (u.transpose() * cov * u)[(0, 0)].re
}

/// Cross-spectrum between the pump θ1- and the probe θ2-quadrature.
pub fn quadrature_correlation(cov: &Mat4, theta1: f64, theta2: f64) -> C64 {
    let (u1, u2) = (quadrature_vector(Field::Pump, theta1), quadrature_vector(Field::Probe, theta2));
    (u1.transpose() * cov * u2)[(0, 0)]
}

/// θ-quadrature spectrum of `field` at distance `z` from the Langevin solution.
pub fn spectrum(
    z: f64,
    omega: f64,
    theta: f64,
    field: Field,
    inputs: &InputNoise,
    m: &MediumParams,
    f: &FieldConfig,
) -> Result<f64> {
    let model = LangevinModel::new(m, f)?;
    Ok(quadrature_spectrum(&model.covariance(z, omega, &inputs.at(omega))?, field, theta))
}

/// Complex pump–probe cross-spectrum at distance `z` from the Langevin solution.
pub fn correlation(
    z: f64,
    omega: f64,
    theta1: f64,
    theta2: f64,
    inputs: &InputNoise,
    m: &MediumParams,
    f: &FieldConfig,
) -> Result<C64> {
    let model = LangevinModel::new(m, f)?;
    Ok(quadrature_correlation(&model.covariance(z, omega, &inputs.at(omega))?, theta1, theta2))
}

/// One propagation branch of a pair covariance: a medium (fixed
/// detunings) and the spectrum frequency at which that branch is evaluated.
#[derive(Debug, Clone, Copy)]
pub struct Branch<'a> {
    pub model: &'a LangevinModel,
    pub omega: f64,
}

/// Covariance between the field propagated through branch 1 (at `+ω1`) and
/// the field propagated through branch 2 (at `−ω2`), for a common input:
/// `C12 = C_vac + M1(ω1, z) (C0 − C_vac) M2(−ω2, z)ᵀ`.
///
/// The Langevin noise is the vacuum complement, so the vacuum input is a
/// fixed point of every pair. When both branches coincide and the medium
/// keeps the vacuum invariant (`γ12 = 0`, two-photon resonance), this
/// equals the full Langevin covariance.
pub fn pair_covariance(b1: Branch<'_>, b2: Branch<'_>, z: f64, c0: &Mat4) -> Result<Mat4> {
    let m1 = (b1.model.generator(b1.omega)? * c(z)).exp();
    let m2 = (b2.model.generator(-b2.omega)? * c(z)).exp();
    let vac = vacuum_covariance();
    Ok(vac + m1 * (c0 - vac) * m2.transpose())
}

/// Stationary cross-spectrum of the θ-quadrature of `field` between the
/// field propagated through a medium with two-photon detuning `delta1` and
/// the one propagated with `delta2` (both fields of a class share the
/// detuning). Reduces to [`spectrum`] for `delta1 == delta2`.
#[allow(clippy::too_many_arguments)]
pub fn cross_spectrum(
    theta: f64,
    omega: f64,
    delta1: f64,
    delta2: f64,
    z: f64,
    field: Field,
    inputs: &InputNoise,
    m: &MediumParams,
    f: &FieldConfig,
) -> Result<f64> {
    let c0 = input_covariance(&inputs.at(omega));
    let m1 = LangevinModel::new(m, &f.with_detuning(delta1))?;
    if delta1 == delta2 {
        return Ok(quadrature_spectrum(&m1.covariance(z, omega, &inputs.at(omega))?, field, theta));
    }
    let m2 = LangevinModel::new(m, &f.with_detuning(delta2))?;
    let cov = pair_covariance(
        Branch { model: &m1, omega },
        Branch { model: &m2, omega },
        z,
        &c0,
    )?;
    Ok(quadrature_spectrum(&cov, field, theta))
}
