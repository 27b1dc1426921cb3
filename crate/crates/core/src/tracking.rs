//! Tracking control of coherence.
//!
//! The controller holds `v_x` and `v_y` at their initial values, which keeps
//! `c = v_x² + v_y²` constant. Under pure dephasing the tracked `v_z` obeys
//! `v_z(t)² + 2γct = v_z(0)²`, so the fields diverge like `(t_b − t)^{-1/2}`
//! at `t_b = v_z(0)²/(2γc)`.

use std::fmt;

use nalgebra::{Matrix3, Vector3};

use crate::bloch::{
    anticommutator, commutator, control_matrix, generators, BlochChannel, CoherenceVector,
};
use crate::dynamics::{propagate_bloch, BREAKDOWN_GUARD};
use crate::error::{Error, Result};
use crate::integrate::{run_leg, EndReason, Flow, IntegratorConfig, Leg, TimeGrid};
use crate::trajectory::{Sample, Termination, Trajectory};
use crate::waveform::ControlWaveform;

/// Denominators with magnitude at or below this count as vanishing.
pub const EPS_D: f64 = 1e-10;
/// Numerators above this make a vanishing denominator an `α/0` singularity.
pub const EPS_N: f64 = 1e-8;
const VZ_ZERO: f64 = 1e-14;

/// Free choice of the `σ_z` field.
#[derive(Debug, Clone, PartialEq)]
pub enum Omega0 {
    Constant(f64),
    /// Uniform samples from `t = 0`, linearly interpolated, held at the last value.
    Sampled { dt: f64, values: Vec<f64> },
}

impl Omega0 {
    pub fn sampled(dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || values.is_empty() || !values.iter().all(|x| x.is_finite()) {
            return Err(Error::Domain("omega0 samples need dt > 0 and finite values".into()));
        }
        Ok(Self::Sampled { dt, values })
    }

    pub fn at(&self, t: f64) -> f64 {
        match self {
            Self::Constant(w) => *w,
            Self::Sampled { dt, values } => {
                let x = (t / dt).max(0.0);
                let i = x.floor() as usize;
                if i + 1 >= values.len() {
                    return *values.last().unwrap();
                }
                let w = x - i as f64;
                values[i] + w * (values[i + 1] - values[i])
            }
        }
    }
}

fn sign_of(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Breakdown time `v_z(0)²/(2γc)`; `+∞` for `γ = 0` or `c = 0`.
pub fn breakdown_time(v0: &CoherenceVector, gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::Domain(format!("dephasing rate must be >= 0, got {gamma}")));
    }
    let c = v0.coherence();
    if gamma == 0.0 || c == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(v0.z() * v0.z() / (2.0 * gamma * c))
}

/// `s·√(v_z(0)² − 2γct)` with `s = sign(v_z(0))`.
pub fn vz_tracked(v0: &CoherenceVector, gamma: f64, t: f64) -> Result<f64> {
    if v0.z().abs() < VZ_ZERO {
        return Err(Error::NoControlPossible);
    }
    let t_b = breakdown_time(v0, gamma)?;
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    if t > t_b {
        return Err(Error::PastBreakdown { t, t_b });
    }
    let sq = (v0.z() * v0.z() - 2.0 * gamma * v0.coherence() * t).max(0.0);
    Ok(sign_of(v0.z()) * sq.sqrt())
}

/// Closed-form tracking solution for pure dephasing.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingSolution {
    v0: CoherenceVector,
    gamma: f64,
    omega0: Omega0,
    t_b: f64,
    sign: f64,
}

impl TrackingSolution {
    pub fn new(v0: CoherenceVector, gamma: f64, omega0: Omega0) -> Result<Self> {
        if v0.z().abs() < VZ_ZERO {
            return Err(Error::NoControlPossible);
        }
        let t_b = breakdown_time(&v0, gamma)?;
        Ok(Self { v0, gamma, omega0, t_b, sign: sign_of(v0.z()) })
    }

    pub fn initial_state(&self) -> &CoherenceVector {
        &self.v0
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn omega0(&self) -> &Omega0 {
        &self.omega0
    }

    pub fn breakdown_time(&self) -> f64 {
        self.t_b
    }

    /// Sign branch `s = sign(v_z(0))`.
    pub fn branch(&self) -> f64 {
        self.sign
    }

    /// Closed-form synthesis refuses times at or beyond this.
    pub fn usable_until(&self) -> f64 {
        self.t_b * (1.0 - BREAKDOWN_GUARD)
    }

    /// Tracked `v_z(t)`.
    pub fn vz(&self, t: f64) -> Result<f64> {
        vz_tracked(&self.v0, self.gamma, t)
    }

    /// Tracked state `(v_x(0), v_y(0), v_z(t))`.
    pub fn state(&self, t: f64) -> Result<Vector3<f64>> {
        Ok(Vector3::new(self.v0.x(), self.v0.y(), self.vz(t)?))
    }

    /// `(ω₀(t), ω₁(t), ω₂(t))`.
    pub fn fields(&self, t: f64) -> Result<[f64; 3]> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("time must be >= 0, got {t}")));
        }
        if t >= self.usable_until() {
            return Err(Error::PastBreakdown { t, t_b: self.t_b });
        }
        let w0 = self.omega0.at(t);
        let (vx, vy) = (self.v0.x(), self.v0.y());
        let root = (self.v0.z().powi(2) - 2.0 * self.gamma * self.v0.coherence() * t).sqrt();
        let w1 = self.sign * (-self.gamma * vy + w0 * vx) / root;
        let w2 = self.sign * (-self.gamma * vx - w0 * vy) / root;
        Ok([w0, w1, w2])
    }
}

/// Linearized fields `(ω₁, ω₂)` holding `v_x`, `v_y` fixed under pure dephasing.
pub fn tracking_fields_dephasing(
    v0: &CoherenceVector,
    gamma: f64,
    omega0: f64,
    t: f64,
) -> Result<(f64, f64)> {
    let [_, w1, w2] = TrackingSolution::new(*v0, gamma, Omega0::Constant(omega0))?.fields(t)?;
    Ok((w1, w2))
}

/// `|Ω(t)|² = (γ² + ω₀²)c/(v_z(0)² − 2γct) + ω₀²`.
pub fn omega_magnitude_sq(v0: &CoherenceVector, gamma: f64, omega0: f64, t: f64) -> Result<f64> {
    let sol = TrackingSolution::new(*v0, gamma, Omega0::Constant(omega0))?;
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    if t >= sol.usable_until() {
        return Err(Error::PastBreakdown { t, t_b: sol.t_b });
    }
    let c = v0.coherence();
    let w0sq = omega0 * omega0;
    Ok((gamma * gamma + w0sq) * c / (v0.z().powi(2) - 2.0 * gamma * c * t) + w0sq)
}

/// `dv_z/dt = F + G/v_z − γ_z v_z` under the constant-coherence constraint.
pub fn tracking_rhs(ch: &BlochChannel, v: &CoherenceVector) -> Result<f64> {
    if v.z().abs() < VZ_ZERO {
        return Err(Error::Singular {
            report: Box::new(SingularityReport::at_state(ch, v.as_vector(), 0.0, 0.0)),
        });
    }
    let p = ch.params();
    let (vx, vy, vz) = (v.x(), v.y(), v.z());
    let f = 2.0 * p.beta * vx + 2.0 * p.delta * vy - 2.0 * p.nu;
    let g = -p.gamma_x * vx * vx - p.gamma_y * vy * vy + 2.0 * p.alpha * vx * vy
        - 2.0 * p.lambda * vx
        - 2.0 * p.mu * vy;
    Ok(f + g / vz - p.gamma_z * vz)
}

/// Quadratic objectives `S_i = vᵗ O_i v` with `O₁ = diag(1,0,0)`, `O₂ = diag(0,1,0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingObjective {
    pub targets: [f64; 2],
    pub o1: Matrix3<f64>,
    pub o2: Matrix3<f64>,
}

impl TrackingObjective {
    pub fn hold(v0: &CoherenceVector) -> Self {
        let o1 = Matrix3::from_diagonal(&Vector3::new(1.0, 0.0, 0.0));
        let o2 = Matrix3::from_diagonal(&Vector3::new(0.0, 1.0, 0.0));
        let v = v0.as_vector();
        Self { targets: [v.dot(&(o1 * v)), v.dot(&(o2 * v))], o1, o2 }
    }

    pub fn values(&self, v: &Vector3<f64>) -> [f64; 2] {
        [v.dot(&(self.o1 * v)), v.dot(&(self.o2 * v))]
    }
}

/// Numerators and denominators of the objective-derivative field formulas at `v`.
///
/// `N₁ = Ṡ₂ + ω₀ vᵗ[Λ₀,O₂]v − vᵗ{M₀,O₂}v − kᵗO₂v − vᵗO₂k` and
/// `D₁ = vᵗ[Λ₁,O₂]v = 2v_y v_z`; `N₂, D₂` likewise with `O₁, Λ₂`.
/// Differentiating `S₂` gives `ω₁ vᵗ[O₂,Λ₁]v = N₁`, hence `ω₁ = −N₁/D₁`.
fn field_terms(
    ch: &BlochChannel,
    v: &Vector3<f64>,
    omega0: f64,
    s1_dot: f64,
    s2_dot: f64,
) -> ([f64; 2], [f64; 2]) {
    let [l0, l1, l2] = generators();
    let obj = TrackingObjective::hold(&CoherenceVector::new(0.0, 0.0, 0.0).unwrap());
    let (m0, k) = (ch.m0(), ch.k());
    let quad = |m: Matrix3<f64>| v.dot(&(m * v));
    let numerator = |s_dot: f64, o: &Matrix3<f64>| {
        s_dot + omega0 * quad(commutator(&l0, o)) - quad(anticommutator(m0, o))
            - k.dot(&(o * v))
            - v.dot(&(o * k))
    };
    let n = [numerator(s2_dot, &obj.o2), numerator(s1_dot, &obj.o1)];
    let d = [quad(commutator(&l1, &obj.o2)), quad(commutator(&l2, &obj.o1))];
    (n, d)
}

/// Fields from the objective derivatives `Ṡ₁ = d(v_x²)/dt`, `Ṡ₂ = d(v_y²)/dt`.
pub fn tracking_fields_general(
    ch: &BlochChannel,
    v: &CoherenceVector,
    omega0: f64,
    s1_dot: f64,
    s2_dot: f64,
) -> Result<(f64, f64)> {
    let (n, d) = field_terms(ch, v.as_vector(), omega0, s1_dot, s2_dot);
    if d[0].abs() <= 1e-12 || d[1].abs() <= 1e-12 {
        let class = if (d[0].abs() <= 1e-12 && n[0].abs() > EPS_N)
            || (d[1].abs() <= 1e-12 && n[1].abs() > EPS_N)
        {
            SingularityClass::NontrivialA
        } else {
            SingularityClass::NontrivialB
        };
        return Err(Error::Singular {
            report: Box::new(SingularityReport { time: 0.0, d1: d[0], d2: d[1], n1: n[0], n2: n[1], class }),
        });
    }
    Ok((-n[0] / d[0], -n[1] / d[1]))
}

/// Feedback fields solving `v̇_x = v̇_y = 0` directly from the Bloch equations:
/// `ω₁ = ((M₀v)_y + k_y + ω₀v_x)/v_z`, `ω₂ = ((M₀v)_x + k_x − ω₀v_y)/v_z`.
///
/// Returns the numerators; only `v_z` divides them.
fn inversion_numerators(ch: &BlochChannel, v: &Vector3<f64>, omega0: f64) -> [f64; 2] {
    let drift = ch.m0() * v + ch.k();
    [drift.y + omega0 * v.x, drift.x - omega0 * v.y]
}

/// Feedback fields scaled by a common factor so that `max |ω_i| ≤ ω_max`.
fn saturated_fields(ch: &BlochChannel, v: &Vector3<f64>, omega0: f64, omega_max: Option<f64>) -> [f64; 2] {
    let g = inversion_numerators(ch, v, omega0);
    let gmax = g[0].abs().max(g[1].abs());
    match omega_max {
        Some(wmax) if gmax > wmax * v.z.abs() => {
            if gmax == 0.0 {
                return [0.0, 0.0];
            }
            let s = sign_of(v.z) * wmax / gmax;
            [s * g[0], s * g[1]]
        }
        _ => [g[0] / v.z, g[1] / v.z],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularityClass {
    None,
    Trivial,
    /// Isolated zero of a denominator with non-vanishing numerator (`α/0`).
    NontrivialA,
    /// Isolated zero where the numerator vanishes too (`0/0`).
    NontrivialB,
}

impl fmt::Display for SingularityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::Trivial => "trivial",
            Self::NontrivialA => "nontrivial-a",
            Self::NontrivialB => "nontrivial-b",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularityReport {
    pub time: f64,
    pub d1: f64,
    pub d2: f64,
    pub n1: f64,
    pub n2: f64,
    pub class: SingularityClass,
}

impl SingularityReport {
    fn at_state(ch: &BlochChannel, v: &Vector3<f64>, omega0: f64, t: f64) -> Self {
        let (n, d) = field_terms(ch, v, omega0, 0.0, 0.0);
        let vanish = |i: usize| d[i].abs() <= EPS_D;
        let class = if !(vanish(0) || vanish(1)) {
            SingularityClass::None
        } else if (vanish(0) && n[0].abs() > EPS_N) || (vanish(1) && n[1].abs() > EPS_N) {
            SingularityClass::NontrivialA
        } else {
            SingularityClass::NontrivialB
        };
        Self { time: t, d1: d[0], d2: d[1], n1: n[0], n2: n[1], class }
    }

    /// `singularity=<class> t=… D1=… D2=… N1=… N2=…`, for appending to a trajectory CSV.
    pub fn annotation(&self) -> String {
        use crate::trajectory::fmt_num;
        format!(
            "singularity={} t={} D1={} D2={} N1={} N2={}",
            self.class,
            fmt_num(self.time),
            fmt_num(self.d1),
            fmt_num(self.d2),
            fmt_num(self.n1),
            fmt_num(self.n2)
        )
    }
}

/// Minimum run of consecutive vanishing-denominator samples counted as trivial.
pub const TRIVIAL_WINDOW: usize = 10;

/// Locates and classifies zeros of the field denominators along a trajectory.
pub fn classify_singularity(traj: &Trajectory, ch: &BlochChannel) -> Result<SingularityReport> {
    let samples = &traj.samples;
    if samples.is_empty() {
        return Err(Error::Domain("cannot classify an empty trajectory".into()));
    }
    let denoms: Vec<[f64; 2]> =
        samples.iter().map(|s| [2.0 * s.v.y * s.v.z, 2.0 * s.v.x * s.v.z]).collect();

    for k in 0..2 {
        let mut run = 0;
        for (i, d) in denoms.iter().enumerate() {
            run = if d[k].abs() <= EPS_D { run + 1 } else { 0 };
            if run >= TRIVIAL_WINDOW {
                let s = &samples[i + 1 - run];
                let mut r = SingularityReport::at_state(ch, &s.v, s.omega[0], s.t);
                r.class = SingularityClass::Trivial;
                return Ok(r);
            }
        }
    }

    for (i, s) in samples.iter().enumerate() {
        let d = denoms[i];
        if d[0].abs() <= EPS_D || d[1].abs() <= EPS_D {
            return Ok(SingularityReport::at_state(ch, &s.v, s.omega[0], s.t));
        }
        if let Some(next) = samples.get(i + 1) {
            let dn = denoms[i + 1];
            let crossing = (0..2).find(|&k| d[k].signum() != dn[k].signum());
            if let Some(k) = crossing {
                let w = d[k] / (d[k] - dn[k]);
                let t = s.t + w * (next.t - s.t);
                let mut v = s.v + (next.v - s.v) * w;
                // Land exactly on the factor of D that changed sign.
                let planar = if k == 0 { 1 } else { 0 };
                if s.v.z.signum() != next.v.z.signum() {
                    v.z = 0.0;
                } else if s.v[planar].signum() != next.v[planar].signum() {
                    v[planar] = 0.0;
                }
                return Ok(SingularityReport::at_state(ch, &v, s.omega[0], t));
            }
        }
    }

    if let Termination::Breakdown { t_b } = traj.termination {
        let last = samples.last().unwrap();
        let v = Vector3::new(last.v.x, last.v.y, 0.0);
        return Ok(SingularityReport::at_state(ch, &v, last.omega[0], t_b));
    }

    let (i, _) = denoms
        .iter()
        .enumerate()
        .min_by(|a, b| a.1[0].abs().min(a.1[1].abs()).total_cmp(&b.1[0].abs().min(b.1[1].abs())))
        .unwrap();
    let s = &samples[i];
    let mut r = SingularityReport::at_state(ch, &s.v, s.omega[0], s.t);
    r.class = SingularityClass::None;
    Ok(r)
}

/// Earliest time in `[0, limit)` at which `max |ω_i|` of the closed form reaches `ω_max`.
fn closed_form_clip_time(sol: &TrackingSolution, omega_max: f64, limit: f64) -> Option<f64> {
    let exceeds = |t: f64| {
        sol.fields(t).map_or(true, |w| w[1].abs().max(w[2].abs()) >= omega_max)
    };
    if exceeds(0.0) {
        return Some(0.0);
    }
    const SCAN: usize = 4096;
    let mut lo = 0.0;
    for i in 1..=SCAN {
        let t = limit * i as f64 / SCAN as f64;
        if t >= limit || !exceeds(t) {
            lo = t.min(limit);
            continue;
        }
        let mut hi = t;
        for _ in 0..200 {
            if hi - lo <= 1e-14 * hi.max(1.0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if exceeds(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        return Some(hi);
    }
    None
}

struct Phases<'a> {
    ch: &'a BlochChannel,
    omega0: &'a Omega0,
    cfg: &'a IntegratorConfig,
    points: Vec<f64>,
    t_max: f64,
    samples: Vec<Sample>,
}

enum Control<'a> {
    ClosedForm(&'a TrackingSolution),
    Feedback { omega_max: Option<f64> },
    Released,
}

impl Phases<'_> {
    fn fields(&self, control: &Control<'_>, t: f64, v: &Vector3<f64>) -> Result<[f64; 3]> {
        let w0 = self.omega0.at(t);
        match control {
            Control::ClosedForm(sol) => sol.fields(t),
            Control::Feedback { omega_max } => {
                let [w1, w2] = saturated_fields(self.ch, v, w0, *omega_max);
                Ok([w0, w1, w2])
            }
            Control::Released => Ok([w0, 0.0, 0.0]),
        }
    }

    /// Runs one phase from `(t0, y0)` to `t_stop` with an optional stopping event.
    fn run(
        &mut self,
        control: &Control<'_>,
        t0: f64,
        y0: [f64; 3],
        t_stop: f64,
        event: Option<&dyn Fn(f64, &[f64; 3]) -> f64>,
    ) -> Result<(f64, [f64; 3], EndReason)> {
        if t_stop <= t0 {
            return Ok((t0, y0, EndReason::Reached));
        }
        let leg = Leg { t0, t_stop, outputs: &self.points, breakpoints: &[] };
        let mut failure = None;
        let ch = self.ch;
        let rtol = self.cfg.rtol;
        let mut out = Vec::new();
        let end = {
            let this = &*self;
            run_leg(
                this.cfg,
                &leg,
                y0,
                |t, y, _| {
                    let v = Vector3::from_column_slice(y);
                    let w = this.fields(control, t, &v)?;
                    let dv = ch.velocity(&control_matrix(w[0], w[1], w[2])?, &v);
                    Ok([dv.x, dv.y, dv.z])
                },
                |t, y| {
                    let v = Vector3::from_column_slice(y);
                    if !v.iter().all(|x| x.is_finite()) || v.norm() > 1.0 + 10.0 * rtol {
                        return Flow::Stop;
                    }
                    match this.fields(control, t, &v) {
                        Ok(w) => {
                            out.push(Sample::new(t, v, w));
                            Flow::Continue
                        }
                        Err(e) => {
                            failure = Some(e);
                            Flow::Stop
                        }
                    }
                },
                event,
            )?
        };
        if let Some(e) = failure {
            return Err(e);
        }
        self.samples.extend(out);
        Ok((end.t, end.y, end.reason))
    }
}

/// Propagates `v0` under synthesized tracking fields.
///
/// Pure-dephasing channels use the closed-form fields; any other channel
/// uses state feedback recomputed at every stage of every step. With
/// `omega_max`, the fields are scaled down by a common factor once either
/// would exceed the bound; after the clamped controller drives `v_z` through
/// zero it releases (`ω₁ = ω₂ = 0`) and the state decays freely.
pub fn simulate_tracked(
    ch: &BlochChannel,
    v0: &CoherenceVector,
    omega0: &Omega0,
    grid: &TimeGrid,
    omega_max: Option<f64>,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    match ch.dephasing_rate() {
        Some(gamma) => {
            let sol = TrackingSolution::new(*v0, gamma, omega0.clone())?;
            simulate(ch, v0, omega0, grid, omega_max, cfg, Some(&sol))
        }
        None => simulate(ch, v0, omega0, grid, omega_max, cfg, None),
    }
}

/// Like [`simulate_tracked`] but always uses state feedback, even for pure dephasing.
pub fn simulate_tracked_feedback(
    ch: &BlochChannel,
    v0: &CoherenceVector,
    omega0: &Omega0,
    grid: &TimeGrid,
    omega_max: Option<f64>,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    simulate(ch, v0, omega0, grid, omega_max, cfg, None)
}

fn simulate(
    ch: &BlochChannel,
    v0: &CoherenceVector,
    omega0: &Omega0,
    grid: &TimeGrid,
    omega_max: Option<f64>,
    cfg: &IntegratorConfig,
    closed_form: Option<&TrackingSolution>,
) -> Result<Trajectory> {
    cfg.validate()?;
    if v0.z().abs() < VZ_ZERO {
        return Err(Error::NoControlPossible);
    }
    if let Some(w) = omega_max {
        if !(w > 0.0) {
            return Err(Error::Domain(format!("omega_max must be > 0, got {w}")));
        }
    }
    let points = grid.points();
    let mut ph = Phases {
        ch,
        omega0,
        cfg,
        points: points[1..].to_vec(),
        t_max: grid.t_max,
        samples: Vec::new(),
    };
    let y0 = [v0.x(), v0.y(), v0.z()];
    let vz0 = v0.z();

    // Phase 1: unclamped tracking.
    let phase1 = match closed_form {
        Some(sol) => Control::ClosedForm(sol),
        None => Control::Feedback { omega_max: None },
    };
    let w_start = ph.fields(&phase1, 0.0, v0.as_vector())?;
    let clipped_at_start =
        omega_max.is_some_and(|wmax| w_start[1].abs().max(w_start[2].abs()) > wmax);

    let (t1, y1, mut termination, clip_time) = if clipped_at_start {
        ph.samples.push(Sample::new(0.0, *v0.as_vector(), ph.fields(&Control::Feedback { omega_max }, 0.0, v0.as_vector())?));
        (0.0, y0, Termination::Clipped { t: 0.0 }, Some(0.0))
    } else {
        ph.samples.push(Sample::new(0.0, *v0.as_vector(), w_start));
        match closed_form {
            Some(sol) => {
                let guard = sol.usable_until();
                let clip = omega_max
                    .and_then(|wmax| closed_form_clip_time(sol, wmax, guard.min(grid.t_max)));
                match clip {
                    Some(tc) => {
                        let (t, y, _) = ph.run(&phase1, 0.0, y0, tc, None)?;
                        (t, y, Termination::Clipped { t: tc }, Some(tc))
                    }
                    None if grid.t_max >= guard => {
                        let last = points.iter().copied().rfind(|&t| t < guard).unwrap_or(0.0);
                        let (t, y, _) = ph.run(&phase1, 0.0, y0, last, None)?;
                        let traj = Trajectory::new(ph.samples, Termination::Breakdown { t_b: sol.breakdown_time() });
                        let _ = (t, y);
                        return Ok(traj);
                    }
                    None => {
                        let (t, y, _) = ph.run(&phase1, 0.0, y0, grid.t_max, None)?;
                        (t, y, Termination::Horizon, None)
                    }
                }
            }
            None => {
                let vz_floor = BREAKDOWN_GUARD.sqrt() * vz0.abs();
                let omega0_ref = omega0;
                let event = |t: f64, y: &[f64; 3]| {
                    let v = Vector3::from_column_slice(y);
                    let breakdown = v.z * sign_of(vz0) - vz_floor;
                    match omega_max {
                        Some(wmax) => {
                            let g = inversion_numerators(ch, &v, omega0_ref.at(t));
                            let over = wmax * v.z.abs() - g[0].abs().max(g[1].abs());
                            breakdown.min(over)
                        }
                        None => breakdown,
                    }
                };
                let (t, y, reason) = ph.run(&phase1, 0.0, y0, grid.t_max, Some(&event))?;
                match reason {
                    EndReason::Event if y[2] * sign_of(vz0) - vz_floor <= 0.0 => {
                        // v_z² falls linearly near breakdown; extrapolate its root.
                        let v = Vector3::from_column_slice(&y);
                        let w = ph.fields(&phase1, t, &v)?;
                        let vdot = ch.velocity(&control_matrix(w[0], w[1], w[2])?, &v);
                        let t_b = t - v.z / vdot.z * 0.5;
                        return Ok(Trajectory::new(ph.samples, Termination::Breakdown { t_b }));
                    }
                    EndReason::Event => (t, y, Termination::Clipped { t }, Some(t)),
                    EndReason::Stopped => {
                        return Ok(Trajectory::new(ph.samples, Termination::Invalid { t }))
                    }
                    EndReason::Reached => (t, y, Termination::Horizon, None),
                }
            }
        }
    };

    if clip_time.is_none() {
        return Ok(Trajectory::new(ph.samples, termination));
    }

    // Phase 2: clamped feedback until v_z crosses zero.
    let clamped = Control::Feedback { omega_max };
    let crossing = |_t: f64, y: &[f64; 3]| y[2] * sign_of(vz0);
    let (t2, y2, reason) = ph.run(&clamped, t1, y1, ph.t_max, Some(&crossing))?;
    match reason {
        EndReason::Stopped => termination = Termination::Invalid { t: t2 },
        EndReason::Event => {
            // Phase 3: released.
            let (t3, _, reason) = ph.run(&Control::Released, t2, y2, ph.t_max, None)?;
            if let EndReason::Stopped = reason {
                termination = Termination::Invalid { t: t3 };
            }
        }
        EndReason::Reached => {}
    }
    Ok(Trajectory::new(ph.samples, termination))
}

/// One segment of a coherence ramp.
#[derive(Debug, Clone, PartialEq)]
pub struct RampSegment {
    pub start: f64,
    pub end: f64,
    pub target_coherence: f64,
    pub solution: TrackingSolution,
}

/// Piecewise closed-form tracking with stepwise-lowered coherence targets.
#[derive(Debug, Clone, PartialEq)]
pub struct RampWaveform {
    segments: Vec<RampSegment>,
}

impl RampWaveform {
    pub fn segments(&self) -> &[RampSegment] {
        &self.segments
    }

    pub fn end(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.end)
    }

    pub(crate) fn boundaries(&self) -> Vec<f64> {
        self.segments.iter().skip(1).map(|s| s.start).collect()
    }

    fn segment(&self, t: f64) -> &RampSegment {
        let i = self.segments.partition_point(|s| s.start <= t).saturating_sub(1);
        &self.segments[i]
    }

    pub fn fields(&self, t: f64) -> Result<[f64; 3]> {
        if t > self.end() * (1.0 + 1e-12) {
            return Err(Error::WaveformDomain { t, end: self.end() });
        }
        let seg = self.segment(t);
        seg.solution.fields((t - seg.start).max(0.0))
    }

    pub(crate) fn fields_within(&self, t: f64, mid: f64) -> Result<[f64; 3]> {
        let seg = self.segment(mid);
        seg.solution.fields((t - seg.start).clamp(0.0, seg.end - seg.start))
    }
}

/// Builds a ramp from `(t_i, c_i)` pairs (starting at `(0, c(v0))`, `c_i`
/// strictly decreasing) ending at `horizon`.
///
/// At each boundary the held in-plane components are scaled by `√(c_i/c_{i−1})`
/// while `v_z` keeps the value the previous segment reached.
pub fn coherence_ramp_schedule(
    v0: &CoherenceVector,
    gamma: f64,
    omega0: f64,
    schedule: &[(f64, f64)],
    horizon: f64,
) -> Result<RampWaveform> {
    let Some(&(t_first, c_first)) = schedule.first() else {
        return Err(Error::Domain("empty ramp schedule".into()));
    };
    if t_first != 0.0 || (c_first - v0.coherence()).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "ramp must start at (0, c(v0) = {}), got ({t_first}, {c_first})",
            v0.coherence()
        )));
    }
    if schedule.windows(2).any(|w| !(w[1].0 > w[0].0) || !(w[1].1 < w[0].1) || w[1].1 <= 0.0) {
        return Err(Error::Domain(
            "ramp times must increase and coherence targets strictly decrease (and stay > 0)".into(),
        ));
    }
    let last_t = schedule.last().unwrap().0;
    if !(horizon > last_t) {
        return Err(Error::Domain(format!("horizon {horizon} must exceed last ramp time {last_t}")));
    }

    let mut segments = Vec::with_capacity(schedule.len());
    let mut entry = *v0;
    for (i, &(start, target)) in schedule.iter().enumerate() {
        let end = schedule.get(i + 1).map_or(horizon, |s| s.0);
        if i > 0 {
            let scale = (target / entry.coherence()).sqrt();
            entry = CoherenceVector::new(entry.x() * scale, entry.y() * scale, entry.z())?;
        }
        let solution = TrackingSolution::new(entry, gamma, Omega0::Constant(omega0))?;
        let duration = end - start;
        if duration >= solution.usable_until() {
            return Err(Error::ScheduleInfeasible {
                segment: i,
                duration,
                t_b: solution.breakdown_time(),
            });
        }
        let exit = solution.state(duration)?;
        segments.push(RampSegment { start, end, target_coherence: target, solution });
        entry = CoherenceVector::from_vector(exit)?;
    }
    Ok(RampWaveform { segments })
}

/// Propagates under a closed-form waveform with the Bloch ODE; convenience for ramps.
pub fn propagate_ramp(
    ch: &BlochChannel,
    ramp: &RampWaveform,
    grid: &TimeGrid,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let v0 = ramp.segments()[0].solution.initial_state();
    propagate_bloch(ch, &ControlWaveform::Ramp(ramp.clone()), v0, grid, cfg)
}
