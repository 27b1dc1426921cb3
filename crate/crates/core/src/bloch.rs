//! Qubit state and channel representations.
//!
//! Two pictures are kept side by side: the 2×2 density matrix and the real
//! coherence (Bloch) vector under the convention `ρ = ½(I + v·σ)`, so that
//! `v_α = Tr(ρ σ_α)` and pure states sit on the unit sphere.
//!
//! **Purity** throughout this crate means `|v|²`, not `Tr ρ²` (which equals
//! `½(1 + |v|²)`). Coherence is the squared in-plane radius `v_x² + v_y²`.

use nalgebra::{Matrix2, Matrix3, Vector3};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const PSD_REL_TOL: f64 = 1e-10;
pub const BALL_TOL: f64 = 1e-12;
pub const UNITAL_TOL: f64 = 1e-12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Pauli matrices `(σ_x, σ_y, σ_z)`, which double as the fixed Lindblad basis `F_1..F_3`.
pub fn pauli() -> [Matrix2<C64>; 3] {
    [
        Matrix2::new(ZERO, ONE, ONE, ZERO),
        Matrix2::new(ZERO, -I, I, ZERO),
        Matrix2::new(ONE, ZERO, ZERO, -ONE),
    ]
}

/// Largest entry modulus.
pub(crate) fn max_norm<R: nalgebra::Dim, Cc: nalgebra::Dim, S: nalgebra::RawStorage<C64, R, Cc>>(
    m: &nalgebra::Matrix<C64, R, Cc, S>,
) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

fn trace2(m: &Matrix2<C64>) -> C64 {
    m[(0, 0)] + m[(1, 1)]
}

/// Real 3-vector with `|v| ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceVector(Vector3<f64>);

impl CoherenceVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::from_vector(Vector3::new(x, y, z))
    }

    pub fn from_vector(v: Vector3<f64>) -> Result<Self> {
        if !v.iter().all(|c| c.is_finite()) {
            return Err(Error::Domain(format!("non-finite coherence vector {v:?}")));
        }
        let norm_sq = v.norm_squared();
        if norm_sq > 1.0 + BALL_TOL {
            return Err(Error::OutsideBlochBall { norm_sq });
        }
        Ok(Self(v))
    }

    /// Builds `(√c cos φ, √c sin φ, +√(p − c))`.
    pub fn from_coherence_purity(coherence: f64, purity: f64, phase: f64) -> Result<Self> {
        if !(coherence >= 0.0 && coherence <= purity && purity <= 1.0 + BALL_TOL) {
            return Err(Error::Domain(format!(
                "need 0 <= c <= p <= 1, got c = {coherence}, p = {purity}"
            )));
        }
        let r = coherence.sqrt();
        Self::new(r * phase.cos(), r * phase.sin(), (purity - coherence).sqrt())
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }

    pub fn z(&self) -> f64 {
        self.0.z
    }

    pub fn as_vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn purity(&self) -> f64 {
        purity(self)
    }

    pub fn coherence(&self) -> f64 {
        coherence(self)
    }
}

/// `p = v_x² + v_y² + v_z²`.
pub fn purity(v: &CoherenceVector) -> f64 {
    v.0.x * v.0.x + v.0.y * v.0.y + v.0.z * v.0.z
}

/// `c = v_x² + v_y²`.
pub fn coherence(v: &CoherenceVector) -> f64 {
    v.0.x * v.0.x + v.0.y * v.0.y
}

/// Validated qubit density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Matrix2<C64>);

impl DensityMatrix {
    pub fn new(m: Matrix2<C64>) -> Result<Self> {
        if !m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::InvalidDensity("non-finite entry".into()));
        }
        let herm = max_norm(&(m - m.adjoint()));
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidDensity(format!("not Hermitian (residual {herm:e})")));
        }
        let tr = trace2(&m);
        if (tr - ONE).norm() > TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr} != 1")));
        }
        // 2×2 Hermitian: eigenvalues are ½(tr ± √((a−d)² + 4|b|²)).
        let a = m[(0, 0)].re;
        let d = m[(1, 1)].re;
        let b = m[(0, 1)];
        let disc = ((a - d).powi(2) + 4.0 * b.norm_sqr()).sqrt();
        let min_eig = 0.5 * (a + d - disc);
        if min_eig < -1e-12 {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min_eig:e}")));
        }
        let tr_sq = (m * m).trace().re;
        if tr_sq > 1.0 + 1e-12 {
            return Err(Error::InvalidDensity(format!("Tr(rho^2) = {tr_sq} > 1")));
        }
        Ok(Self(m))
    }

    pub fn from_entries(r00: C64, r01: C64, r10: C64, r11: C64) -> Result<Self> {
        Self::new(Matrix2::new(r00, r01, r10, r11))
    }

    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.0
    }
}

/// `v_α = Tr(ρ σ_α)`.
pub fn density_to_bloch(rho: &DensityMatrix) -> CoherenceVector {
    let s = pauli();
    let comp = |k: usize| trace2(&(rho.0 * s[k])).re;
    CoherenceVector(Vector3::new(comp(0), comp(1), comp(2)))
}

/// `ρ = ½(I + v·σ)`.
pub fn bloch_to_density(v: &CoherenceVector) -> DensityMatrix {
    let (x, y, z) = (v.x(), v.y(), v.z());
    DensityMatrix(Matrix2::new(
        C64::new(0.5 * (1.0 + z), 0.0),
        C64::new(0.5 * x, -0.5 * y),
        C64::new(0.5 * x, 0.5 * y),
        C64::new(0.5 * (1.0 - z), 0.0),
    ))
}

/// 3×3 positive-semidefinite Hermitian Lindblad coefficient matrix in the Pauli basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GksMatrix(Matrix3<C64>);

/// Outcome of [`validate_gks`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GksReport {
    pub hermitian_residual: f64,
    pub min_eigenvalue: f64,
}

pub fn validate_gks(a: &Matrix3<C64>) -> Result<GksReport> {
    if !a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain("non-finite GKS entry".into()));
    }
    let residual = max_norm(&(a - a.adjoint()));
    if residual > HERMITIAN_TOL {
        return Err(Error::NonHermitian { residual });
    }
    let herm = (a + a.adjoint()).scale(0.5);
    let min_eigenvalue = herm.symmetric_eigenvalues().min();
    let scale = max_norm(a).max(1.0);
    if min_eigenvalue < -PSD_REL_TOL * scale {
        return Err(Error::NotPositive { min_eigenvalue });
    }
    Ok(GksReport { hermitian_residual: residual, min_eigenvalue })
}

impl GksMatrix {
    pub fn new(a: Matrix3<C64>) -> Result<Self> {
        validate_gks(&a)?;
        Ok(Self(a))
    }

    pub fn from_real(a: Matrix3<f64>) -> Result<Self> {
        Self::new(a.map(|x| C64::new(x, 0.0)))
    }

    pub fn zero() -> Self {
        Self(Matrix3::zeros())
    }

    /// `A = diag(0, 0, γ/2)`: the phase-flip Lindbladian `(γ/2)(σ_z ρ σ_z − ρ)`.
    pub fn dephasing(gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::Domain(format!("dephasing rate must be >= 0, got {gamma}")));
        }
        Self::from_real(Matrix3::from_diagonal(&Vector3::new(0.0, 0.0, 0.5 * gamma)))
    }

    /// Jump operator `σ₋ = (σ_x − iσ_y)/2` at rate `γ`.
    pub fn spontaneous_emission(gamma: f64) -> Result<Self> {
        let q = 0.25 * gamma;
        let mut a = Matrix3::zeros();
        a[(0, 0)] = C64::new(q, 0.0);
        a[(1, 1)] = C64::new(q, 0.0);
        a[(0, 1)] = C64::new(0.0, q);
        a[(1, 0)] = C64::new(0.0, -q);
        Self::new(a)
    }

    pub fn matrix(&self) -> &Matrix3<C64> {
        &self.0
    }

    pub fn eigenvalues(&self) -> Vector3<f64> {
        self.0.symmetric_eigenvalues()
    }
}

/// Applies the GKS superoperator `½ Σ a_ij ([F_i, X F_j†] + [F_i X, F_j†])` to any 2×2 matrix.
pub fn lindbladian_action(a: &GksMatrix, x: &Matrix2<C64>) -> Matrix2<C64> {
    let f = pauli();
    let mut out = Matrix2::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let aij = a.0[(i, j)];
            if aij == ZERO {
                continue;
            }
            let fj_dag = f[j].adjoint();
            let c1 = f[i] * x * fj_dag - x * fj_dag * f[i];
            let c2 = f[i] * x * fj_dag - fj_dag * f[i] * x;
            out += (c1 + c2) * (aij * 0.5);
        }
    }
    out
}

/// Damping rates, Lamb-shift couplings and affine-shift coefficients of a Bloch channel.
///
/// Labels are tied to axes: `gamma_x` damps `v_x`, and so on. The couplings
/// and shifts satisfy `M₀ = [[-γx, α, β], [α, -γy, δ], [β, δ, -γz]]` and
/// `k = -2(λ, μ, ν)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub gamma_x: f64,
    pub gamma_y: f64,
    pub gamma_z: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub lambda: f64,
    pub mu: f64,
    pub nu: f64,
}

impl ChannelParams {
    pub fn from_channel(ch: &BlochChannel) -> Self {
        let m = &ch.m0;
        Self {
            gamma_x: -m[(0, 0)],
            gamma_y: -m[(1, 1)],
            gamma_z: -m[(2, 2)],
            alpha: m[(0, 1)],
            beta: m[(0, 2)],
            delta: m[(1, 2)],
            lambda: -0.5 * ch.k.x,
            mu: -0.5 * ch.k.y,
            nu: -0.5 * ch.k.z,
        }
    }
}

/// Channel parameters evaluated from the closed-form coefficient table
/// `γ₁ = 2(a₂₂+a₃₃), γ₂ = 2(a₁₁+a₃₃), γ₃ = 2(a₁₁+a₂₂), α = 2Re a₁₂, β = 2Re a₁₃,
/// δ = 2Re a₂₃, λ = Im a₂₃, μ = −Im a₁₃, ν = Im a₁₂`.
///
/// Kept as a cross-check on [`gks_to_channel`]. Relation to the axis-labelled
/// [`ChannelParams`]: `γ₁ = gamma_x`, `γ₂ = gamma_y`, `γ₃ = gamma_z`; the
/// couplings agree; the table's `(λ, μ, ν)` are half of the axis-labelled
/// ones because the table assumes `v_α = ½Tr(ρσ_α)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TabulatedParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub lambda: f64,
    pub mu: f64,
    pub nu: f64,
}

impl TabulatedParams {
    pub fn from_gks(a: &GksMatrix) -> Self {
        let m = &a.0;
        Self {
            gamma1: 2.0 * (m[(1, 1)].re + m[(2, 2)].re),
            gamma2: 2.0 * (m[(0, 0)].re + m[(2, 2)].re),
            gamma3: 2.0 * (m[(0, 0)].re + m[(1, 1)].re),
            alpha: 2.0 * m[(0, 1)].re,
            beta: 2.0 * m[(0, 2)].re,
            delta: 2.0 * m[(1, 2)].re,
            lambda: m[(1, 2)].im,
            mu: -m[(0, 2)].im,
            nu: m[(0, 1)].im,
        }
    }
}

/// Affine generator `dv/dt = M₀ v + k` of the dissipative part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochChannel {
    m0: Matrix3<f64>,
    k: Vector3<f64>,
}

impl BlochChannel {
    pub fn new(m0: Matrix3<f64>, k: Vector3<f64>) -> Result<Self> {
        if !(m0.iter().all(|x| x.is_finite()) && k.iter().all(|x| x.is_finite())) {
            return Err(Error::Domain("non-finite channel entry".into()));
        }
        let scale = m0.abs().max().max(1.0);
        let asym = (m0 - m0.transpose()).abs().max();
        if asym > HERMITIAN_TOL * scale {
            return Err(Error::Domain(format!("M0 not symmetric (residual {asym:e})")));
        }
        if let Some(d) = m0.diagonal().iter().find(|d| **d > HERMITIAN_TOL * scale) {
            return Err(Error::Domain(format!("M0 has positive diagonal entry {d}")));
        }
        Ok(Self { m0, k })
    }

    pub fn zero() -> Self {
        Self { m0: Matrix3::zeros(), k: Vector3::zeros() }
    }

    /// `M₀ = diag(−γ, −γ, 0)`, `k = 0`.
    pub fn dephasing(gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::Domain(format!("dephasing rate must be >= 0, got {gamma}")));
        }
        Self::new(Matrix3::from_diagonal(&Vector3::new(-gamma, -gamma, 0.0)), Vector3::zeros())
    }

    pub fn m0(&self) -> &Matrix3<f64> {
        &self.m0
    }

    pub fn k(&self) -> &Vector3<f64> {
        &self.k
    }

    pub fn params(&self) -> ChannelParams {
        ChannelParams::from_channel(self)
    }

    /// Returns `γ` when the channel is exactly of the form `diag(−γ, −γ, 0)`, `k = 0`.
    pub fn dephasing_rate(&self) -> Option<f64> {
        let m = &self.m0;
        let gamma = -m[(0, 0)];
        let off = [m[(0, 1)], m[(0, 2)], m[(1, 2)], m[(1, 0)], m[(2, 0)], m[(2, 1)]];
        let tol = 1e-14 * gamma.abs().max(1.0);
        let ok = (m[(1, 1)] + gamma).abs() <= tol
            && m[(2, 2)].abs() <= tol
            && off.iter().all(|x| x.abs() <= tol)
            && self.k.norm() <= UNITAL_TOL;
        ok.then_some(gamma)
    }

    /// Time derivative of the coherence vector under this channel and control matrix `M(t)`.
    pub fn velocity(&self, control: &ControlMatrix, v: &Vector3<f64>) -> Vector3<f64> {
        (self.m0 + control.0) * v + self.k
    }
}

/// Builds `(M₀, k)` by applying the Lindblad superoperator to `{I, σ_x, σ_y, σ_z}`:
/// `M₀_αβ = ½Tr(σ_α L(σ_β))` and `k_α = Tr(σ_α L(I/2))`.
pub fn gks_to_channel(a: &GksMatrix) -> (ChannelParams, BlochChannel) {
    let s = pauli();
    let mut m0 = Matrix3::zeros();
    for beta in 0..3 {
        let image = lindbladian_action(a, &s[beta]);
        for alpha in 0..3 {
            m0[(alpha, beta)] = 0.5 * trace2(&(s[alpha] * image)).re;
        }
    }
    let half_identity = Matrix2::identity().scale(0.5).map(|x: f64| C64::new(x, 0.0));
    let image = lindbladian_action(a, &half_identity);
    let k = Vector3::from_fn(|alpha, _| trace2(&(s[alpha] * image)).re);
    // Roundoff asymmetry is ~1e-16; symmetrize so the validated invariant holds exactly.
    let m0 = (m0 + m0.transpose()).scale(0.5);
    let ch = BlochChannel { m0, k };
    (ch.params(), ch)
}

/// True iff `‖k‖ ≤ 1e-12`.
pub fn is_unital(ch: &BlochChannel) -> bool {
    ch.k.norm() <= UNITAL_TOL
}

/// The three so(3) generators `Λ₀, Λ₁, Λ₂`.
pub fn generators() -> [Matrix3<f64>; 3] {
    [
        Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0),
        Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0),
        Matrix3::new(0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0),
    ]
}

/// Antisymmetric Hamiltonian generator `M = ω₀Λ₀ + ω₁Λ₁ + ω₂Λ₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlMatrix(Matrix3<f64>);

impl ControlMatrix {
    pub fn zero() -> Self {
        Self(Matrix3::zeros())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }
}

pub fn control_matrix(omega0: f64, omega1: f64, omega2: f64) -> Result<ControlMatrix> {
    if !(omega0.is_finite() && omega1.is_finite() && omega2.is_finite()) {
        return Err(Error::Domain(format!(
            "non-finite control field ({omega0}, {omega1}, {omega2})"
        )));
    }
    Ok(ControlMatrix(Matrix3::new(
        0.0, -omega0, -omega2, //
        omega0, 0.0, -omega1, //
        omega2, omega1, 0.0,
    )))
}

/// Hamiltonian `H = ½(ω₀σ_z + ω₁σ_x − ω₂σ_y)` with ħ = 1.
pub fn hamiltonian(omega: [f64; 3]) -> Matrix2<C64> {
    let s = pauli();
    (s[2] * C64::from(omega[0]) + s[0] * C64::from(omega[1]) - s[1] * C64::from(omega[2])) * C64::new(0.5, 0.0)
}

pub fn commutator(a: &Matrix3<f64>, b: &Matrix3<f64>) -> Matrix3<f64> {
    a * b - b * a
}

pub fn anticommutator(a: &Matrix3<f64>, b: &Matrix3<f64>) -> Matrix3<f64> {
    a * b + b * a
}
