//! Free and controlled propagation in both pictures.

use nalgebra::{Matrix2, Vector3};
use num_complex::Complex64 as C64;

use crate::bloch::{
    bloch_to_density, control_matrix, hamiltonian, lindbladian_action, pauli, BlochChannel,
    CoherenceVector, DensityMatrix, GksMatrix,
};
use crate::error::{Error, Result};
use crate::integrate::{run_leg, EndReason, Flow, IntegratorConfig, Leg, TimeGrid};
use crate::trajectory::{Sample, Termination, Trajectory};
use crate::waveform::ControlWaveform;

/// Relative distance below `t_b` at which closed-form synthesis stops.
pub const BREAKDOWN_GUARD: f64 = 1e-6;

/// `L(ρ)` for a validated state; traceless, Hermitian.
pub fn lindblad_apply(a: &GksMatrix, rho: &DensityMatrix) -> Matrix2<C64> {
    lindbladian_action(a, rho.matrix())
}

/// `(e^{−γt} v_x, e^{−γt} v_y, v_z)`.
pub fn free_dephasing_analytic(gamma: f64, v0: &CoherenceVector, t: f64) -> Result<CoherenceVector> {
    if !(gamma >= 0.0 && t >= 0.0) {
        return Err(Error::Domain(format!("need gamma >= 0 and t >= 0, got {gamma}, {t}")));
    }
    let d = (-gamma * t).exp();
    CoherenceVector::new(d * v0.x(), d * v0.y(), v0.z())
}

/// Kraus weight of `σ_z` in the equivalent phase-flip channel, `(1 − e^{−γt})/2`.
pub fn phase_flip_probability(gamma: f64, t: f64) -> Result<f64> {
    if !(gamma >= 0.0 && t >= 0.0) {
        return Err(Error::Domain(format!("need gamma >= 0 and t >= 0, got {gamma}, {t}")));
    }
    Ok(-0.5 * (-gamma * t).exp_m1())
}

/// Control-independent purity derivative `dp/dt = 2 vᵗ(M₀ v + k)`.
///
/// Takes no waveform: `vᵗ M(t) v = 0` for any antisymmetric `M(t)`.
pub fn purity_rate(ch: &BlochChannel, v: &CoherenceVector) -> f64 {
    let v = v.as_vector();
    2.0 * v.dot(&(ch.m0() * v + ch.k()))
}

/// Stop time and termination reason for a waveform on a grid.
fn plan(w: &ControlWaveform, points: &[f64], t_max: f64) -> Result<(f64, Termination)> {
    if let Some(t_b) = w.breakdown_time() {
        let guard = t_b * (1.0 - BREAKDOWN_GUARD);
        if t_max >= guard {
            let last = points.iter().copied().rfind(|&t| t < guard).unwrap_or(0.0);
            return Ok((last, Termination::Breakdown { t_b }));
        }
    }
    let end = w.defined_until();
    if t_max > end * (1.0 + 1e-12) {
        return Err(Error::WaveformDomain { t: t_max, end });
    }
    Ok((t_max, Termination::Horizon))
}

fn invalid(v: &Vector3<f64>, rtol: f64) -> bool {
    !v.iter().all(|x| x.is_finite()) || v.norm() > 1.0 + 10.0 * rtol
}

/// Shared driver: integrates `rhs` on the grid and converts states with `to_bloch`.
fn propagate<const N: usize, F, B>(
    w: &ControlWaveform,
    grid: &TimeGrid,
    cfg: &IntegratorConfig,
    y0: [f64; N],
    rhs: F,
    to_bloch: B,
) -> Result<Trajectory>
where
    F: Fn(&[f64; N], [f64; 3]) -> Result<[f64; N]>,
    B: Fn(&[f64; N]) -> Vector3<f64>,
{
    cfg.validate()?;
    let points = grid.points();
    let (t_stop, mut termination) = plan(w, &points, grid.t_max)?;
    let mut samples = vec![Sample::new(0.0, to_bloch(&y0), w.fields(0.0)?)];
    if t_stop > 0.0 {
        let breakpoints = w.breakpoints(0.0, t_stop);
        let leg = Leg { t0: 0.0, t_stop, outputs: &points[1..], breakpoints: &breakpoints };
        let mut failure = None;
        let end = run_leg(
            cfg,
            &leg,
            y0,
            |t, y, interval| rhs(y, w.fields_within(t, interval)?),
            |t, y| {
                let v = to_bloch(y);
                if invalid(&v, cfg.rtol) {
                    return Flow::Stop;
                }
                match w.fields(t) {
                    Ok(omega) => {
                        samples.push(Sample::new(t, v, omega));
                        Flow::Continue
                    }
                    Err(e) => {
                        failure = Some(e);
                        Flow::Stop
                    }
                }
            },
            None,
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        if let EndReason::Stopped = end.reason {
            termination = Termination::Invalid { t: end.t };
        }
    }
    Ok(Trajectory::new(samples, termination))
}

/// Integrates `dv/dt = (M₀ + M(t)) v + k`.
pub fn propagate_bloch(
    ch: &BlochChannel,
    w: &ControlWaveform,
    v0: &CoherenceVector,
    grid: &TimeGrid,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let y0 = [v0.x(), v0.y(), v0.z()];
    propagate(
        w,
        grid,
        cfg,
        y0,
        |y, omega| {
            let m = control_matrix(omega[0], omega[1], omega[2])?;
            let dv = ch.velocity(&m, &Vector3::from_column_slice(y));
            Ok([dv.x, dv.y, dv.z])
        },
        |y| Vector3::from_column_slice(y),
    )
}

fn pack(m: &Matrix2<C64>) -> [f64; 8] {
    [
        m[(0, 0)].re,
        m[(0, 0)].im,
        m[(0, 1)].re,
        m[(0, 1)].im,
        m[(1, 0)].re,
        m[(1, 0)].im,
        m[(1, 1)].re,
        m[(1, 1)].im,
    ]
}

fn unpack(y: &[f64; 8]) -> Matrix2<C64> {
    Matrix2::new(
        C64::new(y[0], y[1]),
        C64::new(y[2], y[3]),
        C64::new(y[4], y[5]),
        C64::new(y[6], y[7]),
    )
}

/// Integrates `dρ/dt = −i[H(t), ρ] + L(ρ)` (ħ = 1) on the full 2×2 complex matrix.
pub fn propagate_density(
    a: &GksMatrix,
    w: &ControlWaveform,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let s = pauli();
    let minus_i = C64::new(0.0, -1.0);
    propagate(
        w,
        grid,
        cfg,
        pack(rho0.matrix()),
        |y, omega| {
            if !omega.iter().all(|x| x.is_finite()) {
                return Err(Error::Domain(format!("non-finite control field {omega:?}")));
            }
            let rho = unpack(y);
            let h = hamiltonian(omega);
            let drho = (h * rho - rho * h) * minus_i + lindbladian_action(a, &rho);
            Ok(pack(&drho))
        },
        |y| {
            let rho = unpack(y);
            Vector3::from_fn(|k, _| {
                let m = rho * s[k];
                (m[(0, 0)] + m[(1, 1)]).re
            })
        },
    )
}

/// Density-matrix propagation started from a coherence vector.
pub fn propagate_density_from_bloch(
    a: &GksMatrix,
    w: &ControlWaveform,
    v0: &CoherenceVector,
    grid: &TimeGrid,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    propagate_density(a, w, &bloch_to_density(v0), grid, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::gks_to_channel;
    use nalgebra::Matrix3;

    fn dephasing_state(vx: f64) -> CoherenceVector {
        CoherenceVector::new(vx, vx, 0.5f64.sqrt()).unwrap()
    }

    #[test]
    fn lindblad_apply_examples() {
        let gamma = 0.1;
        let v = CoherenceVector::new(0.3, -0.2, 0.5).unwrap();
        let rho = bloch_to_density(&v);
        let l = lindblad_apply(&GksMatrix::dephasing(gamma).unwrap(), &rho);
        let r = rho.matrix();
        let sz = pauli()[2];
        let expected = (sz * r * sz - r) * C64::new(0.5 * gamma, 0.0);
        assert!(crate::bloch::max_norm(&(l - expected)) < 1e-16);
        assert!((l[(0, 1)] + r[(0, 1)] * gamma).norm() < 1e-16);
        assert_eq!(lindblad_apply(&GksMatrix::zero(), &rho), Matrix2::zeros());

        let a = GksMatrix::from_real(Matrix3::from_diagonal(&Vector3::new(0.0, 0.0, 0.05))).unwrap();
        let rho = bloch_to_density(&CoherenceVector::new(0.6, 0.0, 0.0).unwrap());
        let l = lindblad_apply(&a, &rho);
        let expected = pauli()[0] * C64::new(-0.03, 0.0);
        assert!(crate::bloch::max_norm(&(l - expected)) < 1e-16);
    }

    #[test]
    fn free_dephasing_examples() {
        let v0 = CoherenceVector::new(0.39, 0.39, 0.5f64.sqrt()).unwrap();
        assert_eq!(free_dephasing_analytic(0.1, &v0, 0.0).unwrap(), v0);
        assert_eq!(free_dephasing_analytic(0.0, &v0, 7.0).unwrap(), v0);
        let v = free_dephasing_analytic(0.1, &v0, 10.0).unwrap();
        // 0.39·e⁻¹ = 0.1434733…
        assert!((v.x() - 0.39 * (-1f64).exp()).abs() < 1e-15);
        assert!((v.x() - 0.143_473).abs() < 5e-7);
        assert!((v.z() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(free_dephasing_analytic(-0.1, &v0, 1.0).is_err());
        assert!(free_dephasing_analytic(0.1, &v0, -1.0).is_err());
    }

    #[test]
    fn phase_flip_probability_examples() {
        assert_eq!(phase_flip_probability(0.1, 0.0).unwrap(), 0.0);
        assert!((phase_flip_probability(1.0, 50.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((phase_flip_probability(0.1, 10.0).unwrap() - 0.316_060_3).abs() < 5e-8);
        assert!(phase_flip_probability(0.1, -1.0).is_err());
    }

    #[test]
    fn purity_rate_examples() {
        let ch = BlochChannel::dephasing(0.1).unwrap();
        let v = dephasing_state(0.15f64.sqrt());
        assert!((purity_rate(&ch, &v) + 0.06).abs() < 1e-15);
        let pole = CoherenceVector::new(0.0, 0.0, 0.7).unwrap();
        assert_eq!(purity_rate(&ch, &pole), 0.0);
    }

    #[test]
    fn zero_channel_is_static() {
        let v0 = CoherenceVector::new(0.2, -0.4, 0.6).unwrap();
        let traj = propagate_bloch(
            &BlochChannel::zero(),
            &ControlWaveform::zero(),
            &v0,
            &TimeGrid::new(3.0, 0.5).unwrap(),
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert_eq!(traj.samples.len(), 7);
        assert!(traj.samples.iter().all(|s| s.v == *v0.as_vector()));
        assert_eq!(traj.termination, Termination::Horizon);
    }

    #[test]
    fn free_dephasing_matches_analytic() {
        let v0 = CoherenceVector::new(0.39, 0.39, 0.5f64.sqrt()).unwrap();
        let (_, ch) = gks_to_channel(&GksMatrix::dephasing(0.1).unwrap());
        let traj = propagate_bloch(
            &ch,
            &ControlWaveform::zero(),
            &v0,
            &TimeGrid::new(10.0, 0.1).unwrap(),
            &IntegratorConfig::default(),
        )
        .unwrap();
        let end = traj.last().unwrap();
        assert_eq!(end.t, 10.0);
        assert!((end.v.x - 0.39 * (-1.0f64).exp()).abs() < 1e-10);
        assert_eq!(end.v.z, 0.5f64.sqrt());
    }

    #[test]
    fn z_rotation_conserves_norms() {
        let v0 = CoherenceVector::new(0.5, 0.1, -0.3).unwrap();
        let traj = propagate_bloch(
            &BlochChannel::zero(),
            &ControlWaveform::Constant([2.5, 0.0, 0.0]),
            &v0,
            &TimeGrid::new(5.0, 0.05).unwrap(),
            &IntegratorConfig::default(),
        )
        .unwrap();
        for s in &traj.samples {
            assert!((s.purity - v0.purity()).abs() < 1e-9);
            assert!((s.coherence - v0.coherence()).abs() < 1e-9);
        }
    }

    #[test]
    fn density_static_and_dephasing_kraus() {
        let v0 = CoherenceVector::new(0.3, 0.4, 0.5).unwrap();
        let grid = TimeGrid::new(4.0, 0.5).unwrap();
        let cfg = IntegratorConfig::default();
        let traj = propagate_density_from_bloch(
            &GksMatrix::zero(),
            &ControlWaveform::zero(),
            &v0,
            &grid,
            &cfg,
        )
        .unwrap();
        assert!(traj.samples.iter().all(|s| (s.v - v0.as_vector()).abs().max() < 1e-15));

        let gamma = 0.3;
        let traj = propagate_density_from_bloch(
            &GksMatrix::dephasing(gamma).unwrap(),
            &ControlWaveform::zero(),
            &v0,
            &grid,
            &cfg,
        )
        .unwrap();
        for s in &traj.samples {
            // ρ₀₁(t) = e^{−γt} ρ₀₁(0) ⇔ (v_x, v_y) scale by e^{−γt}.
            let d = (-gamma * s.t).exp();
            assert!((s.v.x - d * 0.3).abs() < 1e-10 && (s.v.y - d * 0.4).abs() < 1e-10);
            assert!((s.v.z - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn sampled_waveform_must_cover_horizon() {
        let w = ControlWaveform::Sampled(
            crate::waveform::SampledWaveform::new(0.5, vec![[0.0; 3]; 3]).unwrap(),
        );
        let v0 = CoherenceVector::new(0.0, 0.0, 1.0).unwrap();
        let err = propagate_bloch(
            &BlochChannel::zero(),
            &w,
            &v0,
            &TimeGrid::new(2.0, 0.5).unwrap(),
            &IntegratorConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::WaveformDomain { .. }));
    }

    #[test]
    fn outward_drift_terminates_invalid() {
        // Not a physical channel: positive M₀ is rejected, so feed a pumping k instead.
        let ch = BlochChannel::new(Matrix3::zeros(), Vector3::new(0.0, 0.0, 1.0)).unwrap();
        let v0 = CoherenceVector::new(0.0, 0.0, 0.9).unwrap();
        let traj = propagate_bloch(
            &ch,
            &ControlWaveform::zero(),
            &v0,
            &TimeGrid::new(1.0, 0.01).unwrap(),
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert!(matches!(traj.termination, Termination::Invalid { t } if (t - 0.11).abs() < 1e-9));
    }
}
