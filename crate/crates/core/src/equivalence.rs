//! Unitary equivalence classes of channels.
//!
//! A fixed unitary `U` acts on the coherence vector as the rotation
//! `R_αβ = ½Tr(σ_α U σ_β U†)`. Conjugating the Lindblad operators by `U`
//! gives `A′ = R A Rᵗ`, and in the Bloch picture `M₀′ = R M₀ Rᵗ`, `k′ = R k`.

use nalgebra::{Matrix2, Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64 as C64;

use crate::bloch::{gks_to_channel, max_norm, pauli, BlochChannel, CoherenceVector, GksMatrix};
use crate::error::{Error, Result};
use crate::tracking::{breakdown_time, tracking_fields_dephasing};

const UNITARY_TOL: f64 = 1e-12;
const ORTHO_TOL: f64 = 1e-12;
const DET_TOL: f64 = 1e-10;
const PICTURE_TOL: f64 = 1e-12;
const SPECTRUM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2(Matrix2<C64>);

impl Unitary2 {
    pub fn new(u: Matrix2<C64>) -> Result<Self> {
        if !u.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::InvalidUnitary("non-finite entry".into()));
        }
        let residual = max_norm(&(u.adjoint() * u - Matrix2::identity()));
        if residual > UNITARY_TOL {
            return Err(Error::InvalidUnitary(format!("|U†U − I| = {residual:e}")));
        }
        let det = u.determinant().norm();
        if (det - 1.0).abs() > UNITARY_TOL {
            return Err(Error::InvalidUnitary(format!("|det U| = {det}")));
        }
        Ok(Self(u))
    }

    pub fn identity() -> Self {
        Self(Matrix2::identity())
    }

    pub fn hadamard() -> Self {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self(Matrix2::new(h, h, h, -h))
    }

    /// `exp(iθσ_a) = cos θ I + i sin θ σ_a` for axis index `a ∈ {0, 1, 2}`.
    pub fn exp_i_pauli(axis: usize, theta: f64) -> Result<Self> {
        let s = pauli();
        let sigma = s.get(axis).ok_or_else(|| {
            Error::InvalidUnitary(format!("Pauli axis must be 0, 1 or 2, got {axis}"))
        })?;
        let u = Matrix2::identity() * C64::new(theta.cos(), 0.0)
            + sigma * C64::new(0.0, theta.sin());
        Self::new(u)
    }

    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.0
    }

    /// `U₁U₂`.
    pub fn compose(&self, other: &Self) -> Self {
        Self(self.0 * other.0)
    }

    pub fn neg(&self) -> Self {
        Self(-self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3(Matrix3<f64>);

impl Rotation3 {
    pub fn new(r: Matrix3<f64>) -> Result<Self> {
        if !r.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidRotation("non-finite entry".into()));
        }
        let residual = (r.transpose() * r - Matrix3::identity()).abs().max();
        if residual > ORTHO_TOL {
            return Err(Error::InvalidRotation(format!("|RᵗR − I| = {residual:e}")));
        }
        let det = r.determinant();
        if (det - 1.0).abs() > DET_TOL {
            return Err(Error::InvalidRotation(format!("det R = {det}")));
        }
        Ok(Self(r))
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// True when `R` maps the z-axis to `±z`, i.e. preserves the pure-dephasing channel.
    pub fn stabilizes_dephasing(&self) -> bool {
        (self.0[(2, 2)].abs() - 1.0).abs() <= ORTHO_TOL
    }
}

fn trace2(m: &Matrix2<C64>) -> C64 {
    m[(0, 0)] + m[(1, 1)]
}

/// Components of `U σ_β U†` on the Pauli basis, `c_αβ = ½Tr(σ_α U σ_β U†)`, kept complex.
fn conjugation_coefficients(u: &Unitary2) -> Matrix3<C64> {
    let s = pauli();
    let (u, ud) = (u.0, u.0.adjoint());
    Matrix3::from_fn(|a, b| trace2(&(s[a] * u * s[b] * ud)) * 0.5)
}

pub fn su2_to_so3(u: &Unitary2) -> Result<Rotation3> {
    let c = conjugation_coefficients(u);
    let imag = c.map(|z| z.im.abs()).max();
    if imag > UNITARY_TOL {
        return Err(Error::InvalidUnitary(format!("adjoint image not real ({imag:e})")));
    }
    Rotation3::new(c.map(|z| z.re))
}

/// `M₀′ = R M₀ Rᵗ`, `k′ = R k`.
pub fn transform_bloch_channel(ch: &BlochChannel, r: &Rotation3) -> Result<BlochChannel> {
    let r = r.0;
    let m0 = r * ch.m0() * r.transpose();
    BlochChannel::new((m0 + m0.transpose()) * 0.5, r * ch.k())
}

/// Largest entry difference between the two routes to the transformed channel.
pub fn picture_mismatch(a: &GksMatrix, u: &Unitary2) -> Result<f64> {
    let (_, via_gks) = gks_to_channel(&conjugate_gks(a, u)?);
    let (_, ch) = gks_to_channel(a);
    let via_bloch = transform_bloch_channel(&ch, &su2_to_so3(u)?)?;
    let dm = (via_gks.m0() - via_bloch.m0()).abs().max();
    let dk = (via_gks.k() - via_bloch.k()).abs().max();
    Ok(dm.max(dk))
}

/// Lindblad operators `F_i ↦ U F_i U† = Σ_j c_ji F_j`, so `a′ = c a cᵀ`.
fn conjugate_gks(a: &GksMatrix, u: &Unitary2) -> Result<GksMatrix> {
    let c = conjugation_coefficients(u);
    let ap = c * a.matrix() * c.transpose();
    GksMatrix::new((ap + ap.adjoint()) * C64::new(0.5, 0.0))
}

/// GKS matrix of the channel with Lindblad operators conjugated by `U`.
///
/// Also builds `(R M₀ Rᵗ, R k)` and fails if the two pictures disagree beyond 1e-12.
pub fn transform_channel(a: &GksMatrix, u: &Unitary2) -> Result<GksMatrix> {
    let out = conjugate_gks(a, u)?;
    let scale = a.matrix().map(|z| z.norm()).max().max(1.0);
    let mismatch = picture_mismatch(a, u)?;
    if mismatch > PICTURE_TOL * scale {
        return Err(Error::Domain(format!(
            "Heisenberg and Schrödinger transforms disagree by {mismatch:e}"
        )));
    }
    Ok(out)
}

pub fn transform_state(v: &CoherenceVector, r: &Rotation3) -> CoherenceVector {
    let w = r.0 * v.as_vector();
    // Orthogonal R cannot leave the ball beyond roundoff.
    CoherenceVector::from_vector(w).unwrap_or_else(|_| {
        CoherenceVector::from_vector(w / w.norm()).expect("unit vector lies in the ball")
    })
}

/// Tracking fields for the transformed initial state `R v0` under the same `γ`, `ω₀`.
pub fn transform_tracking_fields(
    v0: &CoherenceVector,
    gamma: f64,
    omega0: f64,
    r: &Rotation3,
    t: f64,
) -> Result<(f64, f64)> {
    if !r.stabilizes_dephasing() {
        return Err(Error::InvalidRotation(
            "rotation does not preserve the pure-dephasing channel".into(),
        ));
    }
    tracking_fields_dephasing(&transform_state(v0, r), gamma, omega0, t)
}

/// Breakdown time of the transformed state `R v0`.
pub fn transformed_breakdown_time(v0: &CoherenceVector, gamma: f64, r: &Rotation3) -> Result<f64> {
    breakdown_time(&transform_state(v0, r), gamma)
}

/// Membership of a channel in the pure-dephasing unitary class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DephasingClass {
    pub gamma: f64,
    /// `Rᵗ M₀ R = diag(−γ, −γ, 0)`.
    pub rotation: Rotation3,
}

/// Returns the rate and a diagonalizing rotation when `k = 0` and `spec M₀ = {−γ, −γ, 0}`.
pub fn is_dephasing_class(ch: &BlochChannel) -> Option<DephasingClass> {
    if ch.k().norm() > 1e-12 {
        return None;
    }
    let eig = SymmetricEigen::new(*ch.m0());
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let [a, b, top] = order.map(|i| eig.eigenvalues[i]);
    if (a - b).abs() > SPECTRUM_TOL || top.abs() > SPECTRUM_TOL || b > SPECTRUM_TOL {
        return None;
    }
    let gamma = (-0.5 * (a + b)).max(0.0);

    let mut n: Vector3<f64> = eig.eigenvectors.column(order[2]).into_owned();
    if gamma <= SPECTRUM_TOL {
        // The zero channel: every axis is a null direction.
        n = Vector3::z();
    }
    n.normalize_mut();
    // Canonical sign: first significant component positive.
    if let Some(x) = n.iter().find(|x| x.abs() > 1e-12) {
        if *x < 0.0 {
            n = -n;
        }
    }
    let project = |e: Vector3<f64>| e - n * n.dot(&e);
    let mut first = project(Vector3::x());
    if first.norm() < 1e-8 {
        first = project(Vector3::y());
    }
    first.normalize_mut();
    let second = n.cross(&first);
    let r = Matrix3::from_columns(&[first, second, n]);
    Rotation3::new(r).ok().map(|rotation| DephasingClass { gamma, rotation })
}
