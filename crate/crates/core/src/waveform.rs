//! Control field waveforms `(ω₀(t), ω₁(t), ω₂(t))`.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::tracking::{RampWaveform, TrackingSolution};

/// Uniformly sampled fields starting at `t = 0`, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledWaveform {
    dt: f64,
    samples: Vec<[f64; 3]>,
}

impl SampledWaveform {
    pub fn new(dt: f64, samples: Vec<[f64; 3]>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain(format!("sample spacing must be > 0, got {dt}")));
        }
        if samples.len() < 2 {
            return Err(Error::Domain("sampled waveform needs at least two samples".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.iter().all(|x| x.is_finite())) {
            return Err(Error::Domain(format!("non-finite waveform sample at index {i}")));
        }
        Ok(Self { dt, samples })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[[f64; 3]] {
        &self.samples
    }

    pub fn end(&self) -> f64 {
        self.dt * (self.samples.len() - 1) as f64
    }

    fn at(&self, t: f64) -> [f64; 3] {
        let x = (t / self.dt).max(0.0);
        let i = (x.floor() as usize).min(self.samples.len() - 2);
        let w = (x - i as f64).clamp(0.0, 1.0);
        let (a, b) = (self.samples[i], self.samples[i + 1]);
        [0, 1, 2].map(|k| a[k] + w * (b[k] - a[k]))
    }
}

/// Fields held constant on `[breaks[i], breaks[i+1])`; the last value holds forever.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstant {
    breaks: Vec<f64>,
    values: Vec<[f64; 3]>,
}

impl PiecewiseConstant {
    /// `breaks[0]` must be `0`; `breaks` strictly increasing; one value per break.
    pub fn new(breaks: Vec<f64>, values: Vec<[f64; 3]>) -> Result<Self> {
        if breaks.is_empty() || breaks.len() != values.len() || breaks[0] != 0.0 {
            return Err(Error::Domain(
                "piecewise waveform needs matching breaks/values starting at t = 0".into(),
            ));
        }
        if breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("piecewise breaks must be strictly increasing".into()));
        }
        if !values.iter().flatten().all(|x| x.is_finite()) {
            return Err(Error::Domain("non-finite piecewise value".into()));
        }
        Ok(Self { breaks, values })
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[[f64; 3]] {
        &self.values
    }

    fn index(&self, t: f64) -> usize {
        self.breaks.partition_point(|&b| b <= t).saturating_sub(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ControlWaveform {
    Constant([f64; 3]),
    Sampled(SampledWaveform),
    PiecewiseConstant(PiecewiseConstant),
    Tracking(TrackingSolution),
    Ramp(RampWaveform),
}

impl ControlWaveform {
    pub fn zero() -> Self {
        Self::Constant([0.0; 3])
    }

    /// Fields at `t`.
    pub fn fields(&self, t: f64) -> Result<[f64; 3]> {
        if t < 0.0 {
            return Err(Error::WaveformDomain { t, end: self.defined_until() });
        }
        match self {
            Self::Constant(w) => Ok(*w),
            Self::Sampled(s) => {
                if t > s.end() * (1.0 + 1e-12) {
                    return Err(Error::WaveformDomain { t, end: s.end() });
                }
                Ok(s.at(t))
            }
            Self::PiecewiseConstant(p) => Ok(p.values[p.index(t)]),
            Self::Tracking(sol) => sol.fields(t),
            Self::Ramp(r) => r.fields(t),
        }
    }

    /// Fields at `t` for a step lying in `[a, b]`, resolving jumps at the ends
    /// to the piece that contains the interval.
    pub(crate) fn fields_within(&self, t: f64, (a, b): (f64, f64)) -> Result<[f64; 3]> {
        match self {
            Self::PiecewiseConstant(p) => Ok(p.values[p.index(0.5 * (a + b))]),
            Self::Ramp(r) => r.fields_within(t, 0.5 * (a + b)),
            _ => self.fields(t.clamp(a, b)),
        }
    }

    /// Last time at which the waveform is usable.
    pub fn defined_until(&self) -> f64 {
        match self {
            Self::Sampled(s) => s.end(),
            Self::Tracking(sol) => sol.usable_until(),
            Self::Ramp(r) => r.end(),
            Self::Constant(_) | Self::PiecewiseConstant(_) => f64::INFINITY,
        }
    }

    /// Declared breakdown time of a closed-form tracking waveform.
    pub fn breakdown_time(&self) -> Option<f64> {
        match self {
            Self::Tracking(sol) => Some(sol.breakdown_time()).filter(|t| t.is_finite()),
            _ => None,
        }
    }

    /// Times in `(t0, t1)` where the fields or their slope jump.
    pub fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        let inside = |t: &f64| *t > t0 && *t < t1;
        match self {
            Self::Sampled(s) => (1..s.samples.len() - 1)
                .map(|i| i as f64 * s.dt)
                .filter(inside)
                .collect(),
            Self::PiecewiseConstant(p) => p.breaks.iter().copied().filter(inside).collect(),
            Self::Ramp(r) => r.boundaries().into_iter().filter(inside).collect(),
            Self::Constant(_) | Self::Tracking(_) => Vec::new(),
        }
    }

    /// Transports the fields through a fixed rotation of the Bloch picture:
    /// `H ↦ U H U†` acts on `Ω = (ω₁, −ω₂, ω₀)` as `Ω ↦ R Ω`.
    pub fn rotated(&self, r: &Matrix3<f64>) -> Result<Self> {
        let rot = |w: &[f64; 3]| rotate_fields(r, *w);
        Ok(match self {
            Self::Constant(w) => Self::Constant(rot(w)),
            Self::Sampled(s) => {
                Self::Sampled(SampledWaveform::new(s.dt, s.samples.iter().map(rot).collect())?)
            }
            Self::PiecewiseConstant(p) => Self::PiecewiseConstant(PiecewiseConstant::new(
                p.breaks.clone(),
                p.values.iter().map(rot).collect(),
            )?),
            Self::Tracking(_) | Self::Ramp(_) => {
                return Err(Error::Domain(
                    "closed-form tracking waveforms are transported via their initial state".into(),
                ))
            }
        })
    }
}

/// Rotates `(ω₀, ω₁, ω₂)` via the field vector `Ω = (ω₁, −ω₂, ω₀)`.
pub fn rotate_fields(r: &Matrix3<f64>, w: [f64; 3]) -> [f64; 3] {
    let omega = r * Vector3::new(w[1], -w[2], w[0]);
    [omega.z, omega.x, -omega.y]
}
