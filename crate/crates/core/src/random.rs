//! Seeded generators for random channels, states, unitaries and waveforms.

use nalgebra::{Matrix2, Matrix3};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bloch::{CoherenceVector, GksMatrix};
use crate::equivalence::Unitary2;
use crate::waveform::{ControlWaveform, PiecewiseConstant};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `A = B B† · rate / Tr(B B†)` with uniform complex `B`, so `Tr A = rate`.
pub fn gks<R: Rng>(rng: &mut R, rate: f64) -> GksMatrix {
    let b = Matrix3::from_fn(|_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    psd(b * b.adjoint(), rate)
}

/// Real symmetric PSD `A`: unital channels.
pub fn unital_gks<R: Rng>(rng: &mut R, rate: f64) -> GksMatrix {
    let b = Matrix3::from_fn(|_, _| C64::new(rng.gen_range(-1.0..1.0), 0.0));
    psd(b * b.transpose(), rate)
}

fn psd(a: Matrix3<C64>, rate: f64) -> GksMatrix {
    let tr = (a[(0, 0)] + a[(1, 1)] + a[(2, 2)]).re.max(f64::MIN_POSITIVE);
    let a = a * C64::new(rate / tr, 0.0);
    // B B† is Hermitian PSD up to roundoff; re-symmetrize before validation.
    GksMatrix::new((a + a.adjoint()) * C64::new(0.5, 0.0)).expect("B B† is positive")
}

/// Uniform in the unit ball.
pub fn state<R: Rng>(rng: &mut R) -> CoherenceVector {
    loop {
        let v = nalgebra::Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        if v.norm_squared() <= 1.0 {
            return CoherenceVector::from_vector(v).expect("inside the ball");
        }
    }
}

/// Haar-random `SU(2)` element times a random global phase.
pub fn unitary<R: Rng>(rng: &mut R) -> Unitary2 {
    let q: nalgebra::Vector4<f64> = loop {
        let q = nalgebra::Vector4::<f64>::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let n = q.norm();
        if n > 1e-3 && n <= 1.0 {
            break q / n;
        }
    };
    let phase = C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
    let i = C64::new(0.0, 1.0);
    let u = Matrix2::new(
        C64::new(q[0], 0.0) + i * q[3],
        i * q[1] + C64::new(q[2], 0.0),
        i * q[1] - C64::new(q[2], 0.0),
        C64::new(q[0], 0.0) - i * q[3],
    ) * phase;
    Unitary2::new(u).expect("unit quaternion gives a unitary")
}

/// `pieces` equal intervals on `[0, t_max]`, each field uniform in `[-amp, amp]`.
pub fn piecewise_fields<R: Rng>(rng: &mut R, t_max: f64, pieces: usize, amp: f64) -> ControlWaveform {
    let pieces = pieces.max(1);
    let breaks = (0..pieces).map(|i| t_max * i as f64 / pieces as f64).collect();
    let values = (0..pieces).map(|_| [(); 3].map(|_| rng.gen_range(-amp..amp))).collect();
    ControlWaveform::PiecewiseConstant(PiecewiseConstant::new(breaks, values).expect("valid breaks"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_valid_and_reproducible() {
        let mut a = rng(7);
        let mut b = rng(7);
        for _ in 0..50 {
            assert_eq!(gks(&mut a, 0.5), gks(&mut b, 0.5));
            let u = unitary(&mut a);
            assert_eq!(u, unitary(&mut b));
            assert!(unital_gks(&mut a, 1.0).matrix().iter().all(|z| z.im == 0.0));
            let _ = unital_gks(&mut b, 1.0);
            assert!(state(&mut a).purity() <= 1.0);
            let _ = state(&mut b);
        }
    }
}
