//! Explicit Runge–Kutta drivers for small fixed-size systems.
//!
//! Steps are truncated so that every output time and every waveform
//! breakpoint is hit exactly; emitted samples are therefore integrator
//! states rather than interpolants.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    FixedRk4,
    AdaptiveRkf45,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Step for [`Method::FixedRk4`].
    pub dt: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { method: Method::AdaptiveRkf45, dt: 1e-2, rtol: 1e-10, atol: 1e-12, max_step: 0.1 }
    }
}

impl IntegratorConfig {
    pub fn rk4(dt: f64) -> Self {
        Self { method: Method::FixedRk4, dt, ..Self::default() }
    }

    pub fn rkf45(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |x: f64| x > 0.0 && x < 1.0;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Domain(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(in_unit(self.rtol) && in_unit(self.atol)) {
            return Err(Error::Domain(format!(
                "tolerances must lie in (0, 1), got rtol = {}, atol = {}",
                self.rtol, self.atol
            )));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::Domain(format!("max_step must be > 0, got {}", self.max_step)));
        }
        Ok(())
    }
}

/// Uniform output grid `0, dt, 2dt, …` up to `t_max` (with `t_max` appended if off-grid).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_max: f64,
    pub dt: f64,
}

impl TimeGrid {
    pub fn new(t_max: f64, dt: f64) -> Result<Self> {
        if !(t_max >= 0.0 && t_max.is_finite() && dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain(format!("bad output grid t_max = {t_max}, dt = {dt}")));
        }
        Ok(Self { t_max, dt })
    }

    pub fn points(&self) -> Vec<f64> {
        let n = (self.t_max / self.dt * (1.0 + 1e-12)).floor() as usize;
        let mut pts: Vec<f64> = (0..=n).map(|k| k as f64 * self.dt).collect();
        let last = *pts.last().unwrap();
        if self.t_max - last > 1e-12 * self.t_max.max(1.0) {
            pts.push(self.t_max);
        } else if let Some(l) = pts.last_mut() {
            *l = l.min(self.t_max);
        }
        pts
    }
}

pub(crate) enum Flow {
    Continue,
    Stop,
}

pub(crate) enum EndReason {
    Reached,
    Stopped,
    Event,
}

pub(crate) struct RunEnd<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub reason: EndReason,
}

/// One integration leg.
pub(crate) struct Leg<'a> {
    pub t0: f64,
    pub t_stop: f64,
    /// Output times in `(t0, t_stop]`, ascending.
    pub outputs: &'a [f64],
    /// Discontinuities of the right-hand side in `(t0, t_stop)`, ascending.
    pub breakpoints: &'a [f64],
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        if *c != 0.0 {
            for i in 0..N {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

struct Stepped<const N: usize> {
    y: [f64; N],
    err: f64,
}

fn rk4_step<const N: usize, F>(f: &mut F, t: f64, y: &[f64; N], h: f64) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &axpy(y, h, &[(0.5, &k1)]))?;
    let k3 = f(t + 0.5 * h, &axpy(y, h, &[(0.5, &k2)]))?;
    let k4 = f(t + h, &axpy(y, h, &[(1.0, &k3)]))?;
    Ok(axpy(y, h, &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)]))
}

/// Fehlberg 4(5) step; advances with the fifth-order solution.
fn rkf45_step<const N: usize, F>(
    f: &mut F,
    t: f64,
    y: &[f64; N],
    h: f64,
    rtol: f64,
    atol: f64,
) -> Result<Stepped<N>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + h / 4.0, &axpy(y, h, &[(1.0 / 4.0, &k1)]))?;
    let k3 = f(t + 3.0 * h / 8.0, &axpy(y, h, &[(3.0 / 32.0, &k1), (9.0 / 32.0, &k2)]))?;
    let k4 = f(
        t + 12.0 * h / 13.0,
        &axpy(y, h, &[(1932.0 / 2197.0, &k1), (-7200.0 / 2197.0, &k2), (7296.0 / 2197.0, &k3)]),
    )?;
    let k5 = f(
        t + h,
        &axpy(
            y,
            h,
            &[(439.0 / 216.0, &k1), (-8.0, &k2), (3680.0 / 513.0, &k3), (-845.0 / 4104.0, &k4)],
        ),
    )?;
    let k6 = f(
        t + h / 2.0,
        &axpy(
            y,
            h,
            &[
                (-8.0 / 27.0, &k1),
                (2.0, &k2),
                (-3544.0 / 2565.0, &k3),
                (1859.0 / 4104.0, &k4),
                (-11.0 / 40.0, &k5),
            ],
        ),
    )?;
    let y5 = axpy(
        y,
        h,
        &[
            (16.0 / 135.0, &k1),
            (6656.0 / 12825.0, &k3),
            (28561.0 / 56430.0, &k4),
            (-9.0 / 50.0, &k5),
            (2.0 / 55.0, &k6),
        ],
    );
    let y4 = axpy(
        y,
        h,
        &[(25.0 / 216.0, &k1), (1408.0 / 2565.0, &k3), (2197.0 / 4104.0, &k4), (-1.0 / 5.0, &k5)],
    );
    let mut err: f64 = 0.0;
    for i in 0..N {
        let scale = atol + rtol * y[i].abs().max(y5[i].abs());
        err = err.max((y5[i] - y4[i]).abs() / scale);
    }
    if !y5.iter().all(|v| v.is_finite()) {
        err = f64::INFINITY;
    }
    Ok(Stepped { y: y5, err })
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Integrates one leg, landing on every output time and breakpoint.
///
/// `rhs` receives the bounds of the breakpoint interval it is evaluated in,
/// so piecewise waveforms can be evaluated without ambiguity at the ends.
/// `event`, when given, stops the leg at the first sign change of `g(t, y)`,
/// located by bisection to ~1e-13 in time.
pub(crate) fn run_leg<const N: usize, F, S>(
    cfg: &IntegratorConfig,
    leg: &Leg<'_>,
    y0: [f64; N],
    mut rhs: F,
    mut on_output: S,
    event: Option<&dyn Fn(f64, &[f64; N]) -> f64>,
) -> Result<RunEnd<N>>
where
    F: FnMut(f64, &[f64; N], (f64, f64)) -> Result<[f64; N]>,
    S: FnMut(f64, &[f64; N]) -> Flow,
{
    cfg.validate()?;
    // Merged landing points, each flagged as output or not.
    let mut landings: Vec<(f64, bool)> = leg
        .outputs
        .iter()
        .filter(|&&t| t > leg.t0 && t <= leg.t_stop)
        .map(|&t| (t, true))
        .chain(
            leg.breakpoints
                .iter()
                .filter(|&&t| t > leg.t0 && t < leg.t_stop)
                .map(|&t| (t, false)),
        )
        .collect();
    if landings.last().is_none_or(|&(t, _)| t < leg.t_stop) {
        landings.push((leg.t_stop, false));
    }
    landings.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, bool)> = Vec::with_capacity(landings.len());
    for (t, out) in landings {
        match merged.last_mut() {
            Some(last) if (t - last.0).abs() <= 1e-13 * t.abs().max(1.0) => last.1 |= out,
            _ => merged.push((t, out)),
        }
    }

    let mut bounds: Vec<f64> = vec![leg.t0];
    bounds.extend(leg.breakpoints.iter().copied().filter(|&b| b > leg.t0 && b < leg.t_stop));
    bounds.push(leg.t_stop);

    let mut t = leg.t0;
    let mut y = y0;
    let span = (leg.t_stop - leg.t0).max(f64::MIN_POSITIVE);
    let mut h = match cfg.method {
        Method::FixedRk4 => cfg.dt,
        Method::AdaptiveRkf45 => cfg.max_step.min(1e-3 * span.max(1.0)),
    };
    let mut seg = 0usize;

    for (target, is_output) in merged {
        while bounds[seg + 1] <= t + 1e-13 * t.abs().max(1.0) && seg + 2 < bounds.len() {
            seg += 1;
        }
        let interval = (bounds[seg], bounds[seg + 1]);
        let mut f = |tt: f64, yy: &[f64; N]| rhs(tt, yy, interval);
        while t < target {
            let remaining = target - t;
            let mut step = h.min(cfg.max_step).min(remaining);
            if remaining - step <= 1e-12 * remaining.max(1e-300) {
                step = remaining;
            }
            let y_new = match cfg.method {
                Method::FixedRk4 => {
                    let step = cfg.dt.min(remaining);
                    let step = if remaining - step <= 1e-12 * cfg.dt { remaining } else { step };
                    let y_new = rk4_step(&mut f, t, &y, step)?;
                    if !y_new.iter().all(|v| v.is_finite()) {
                        return Err(Error::Integrator(format!("non-finite state at t = {t}")));
                    }
                    h = cfg.dt;
                    (y_new, step)
                }
                Method::AdaptiveRkf45 => {
                    let s = rkf45_step(&mut f, t, &y, step, cfg.rtol, cfg.atol)?;
                    let factor = if s.err == 0.0 {
                        5.0
                    } else {
                        (0.9 * s.err.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    if s.err > 1.0 {
                        h = step * factor;
                        if h < 1e-14 * t.abs().max(1.0) {
                            return Err(Error::Integrator(format!(
                                "step size underflow at t = {t}"
                            )));
                        }
                        continue;
                    }
                    // A step truncated by a landing point says little about the scale.
                    let proposal = step * factor;
                    h = if step < h { proposal.max(h) } else { proposal };
                    (s.y, step)
                }
            };
            let (y_next, step) = y_new;
            let t_next = if step == remaining { target } else { t + step };

            if let Some(g) = event {
                let g0 = g(t, &y);
                let g1 = g(t_next, &y_next);
                if sign(g0) != 0 && sign(g1) != sign(g0) {
                    let (te, ye) = locate_event(cfg, &mut f, g, t, &y, step, g0)?;
                    return Ok(RunEnd { t: te, y: ye, reason: EndReason::Event });
                }
            }
            t = t_next;
            y = y_next;
        }
        if is_output {
            if let Flow::Stop = on_output(t, &y) {
                return Ok(RunEnd { t, y, reason: EndReason::Stopped });
            }
        }
    }
    Ok(RunEnd { t, y, reason: EndReason::Reached })
}

fn locate_event<const N: usize, F>(
    cfg: &IntegratorConfig,
    f: &mut F,
    g: &dyn Fn(f64, &[f64; N]) -> f64,
    t: f64,
    y: &[f64; N],
    h: f64,
    g0: f64,
) -> Result<(f64, [f64; N])>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let sub = |f: &mut F, dh: f64| -> Result<[f64; N]> {
        match cfg.method {
            Method::FixedRk4 => rk4_step(f, t, y, dh),
            Method::AdaptiveRkf45 => Ok(rkf45_step(f, t, y, dh, cfg.rtol, cfg.atol)?.y),
        }
    };
    let (mut lo, mut hi) = (0.0, h);
    let mut y_hi = sub(f, hi)?;
    for _ in 0..200 {
        if hi - lo <= 1e-13 * t.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let y_mid = sub(f, mid)?;
        if sign(g(t + mid, &y_mid)) == sign(g0) {
            lo = mid;
        } else {
            hi = mid;
            y_hi = y_mid;
        }
    }
    Ok((t + hi, y_hi))
}
