//! Breakdown-time sweeps and batch propagation.
//!
//! Every cell or job is independent. With the `parallel` feature the work is
//! spread over a rayon pool; without it, or with [`Execution::Sequential`],
//! it runs in order on the calling thread. Both give identical results.

use crate::bloch::{BlochChannel, CoherenceVector};
use crate::dynamics::propagate_bloch;
use crate::error::{Error, Result};
use crate::integrate::{IntegratorConfig, TimeGrid};
use crate::trajectory::Trajectory;
use crate::waveform::ControlWaveform;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Falls back to sequential when built without the `parallel` feature.
    #[default]
    Parallel,
}

pub(crate) fn map<T, U, F>(exec: Execution, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

/// Uniform grid `min, …, max` with `count` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if count == 0 || !(min.is_finite() && max.is_finite()) || max < min {
            return Err(Error::Domain(format!("bad axis [{min}, {max}] x {count}")));
        }
        if count == 1 && min != max {
            return Err(Error::Domain("a one-point axis needs min == max".into()));
        }
        Ok(Self { min, max, count })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.max } else { self.min + step * i as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub c: f64,
    pub p: f64,
    /// `None` where `c > p`.
    pub t_b: Option<f64>,
}

/// `t_b = (p − c)/(2γc)` for purity `p`, coherence `c`.
pub fn breakdown_from_cp(gamma: f64, c: f64, p: f64) -> Option<f64> {
    if c > p {
        return None;
    }
    if gamma == 0.0 || c == 0.0 {
        return Some(f64::INFINITY);
    }
    Some((p - c) / (2.0 * gamma * c))
}

/// Row-major over `c` then `p`.
pub fn sweep_breakdown(gamma: f64, c: &Axis, p: &Axis, exec: Execution) -> Result<Vec<SweepCell>> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::Domain(format!("dephasing rate must be >= 0, got {gamma}")));
    }
    if c.min < 0.0 || c.max > 1.0 || p.min < 0.0 || p.max > 1.0 {
        return Err(Error::Domain("coherence and purity axes must lie in [0, 1]".into()));
    }
    let ps = p.values();
    let cs = c.values();
    let rows = map(exec, &cs, |&c| {
        ps.iter().map(|&p| SweepCell { c, p, t_b: breakdown_from_cp(gamma, c, p) }).collect::<Vec<_>>()
    });
    Ok(rows.into_iter().flatten().collect())
}

/// `c,p,t_b` rows; infeasible cells leave `t_b` empty.
pub fn sweep_csv(cells: &[SweepCell]) -> String {
    use crate::trajectory::fmt_num;
    let mut out = String::from("c,p,t_b\n");
    for cell in cells {
        let t_b = cell.t_b.map(fmt_num).unwrap_or_default();
        out.push_str(&format!("{},{},{}\n", fmt_num(cell.c), fmt_num(cell.p), t_b));
    }
    out
}

/// One independent propagation job.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub channel: BlochChannel,
    pub waveform: ControlWaveform,
    pub v0: CoherenceVector,
}

pub fn propagate_batch(
    jobs: &[Job],
    grid: &TimeGrid,
    cfg: &IntegratorConfig,
    exec: Execution,
) -> Vec<Result<Trajectory>> {
    map(exec, jobs, |j| propagate_bloch(&j.channel, &j.waveform, &j.v0, grid, cfg))
}
