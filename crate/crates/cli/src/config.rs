//! Scenario and sweep configuration files (strict JSON).

use std::path::{Path, PathBuf};

use cohtrack::bloch::{gks_to_channel, BlochChannel, CoherenceVector, GksMatrix};
use cohtrack::integrate::{IntegratorConfig, Method, TimeGrid};
use cohtrack::sweep::Axis;
use cohtrack::waveform::{ControlWaveform, SampledWaveform};
use nalgebra::Matrix3;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub channel: ChannelSpec,
    pub initial_state: InitialState,
    pub control: ControlSpec,
    pub t_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum ChannelSpec {
    Dephasing {
        gamma: f64,
    },
    /// Rows of `[re, im]` pairs.
    Gks {
        matrix: [[[f64; 2]; 3]; 3],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum InitialState {
    Vector([f64; 3]),
    /// `v_x = √c cos φ`, `v_y = √c sin φ`, `v_z = +√(p − c)`.
    Cpphi {
        coherence: f64,
        purity: f64,
        phase: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum ControlSpec {
    Free,
    Track {
        omega0: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega_max: Option<f64>,
    },
    /// Uniformly sampled `t,omega0,omega1,omega2` CSV, relative to the config file.
    Fixed {
        waveform: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSpec {
    Rkf45,
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Output grid spacing; default `t_max / 1000`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<String>,
}

fn field_error(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

/// A validated scenario ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub gks: GksMatrix,
    pub channel: BlochChannel,
    pub v0: CoherenceVector,
    pub grid: TimeGrid,
    pub integrator: IntegratorConfig,
    /// Directory that relative paths in the config refer to.
    pub base_dir: PathBuf,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Scenario, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text)?.validate(base)
    }

    pub fn validate(self, base_dir: PathBuf) -> Result<Scenario, CliError> {
        let gks = match &self.channel {
            ChannelSpec::Dephasing { gamma } => {
                if !(*gamma >= 0.0 && gamma.is_finite()) {
                    return Err(field_error(
                        "channel.dephasing.gamma",
                        "must be a finite rate >= 0",
                    ));
                }
                GksMatrix::dephasing(*gamma)
                    .map_err(|e| field_error("channel.dephasing.gamma", e))?
            }
            ChannelSpec::Gks { matrix } => {
                let m = Matrix3::from_fn(|i, j| C64::new(matrix[i][j][0], matrix[i][j][1]));
                GksMatrix::new(m).map_err(|e| field_error("channel.gks.matrix", e))?
            }
        };
        let (_, mut channel) = gks_to_channel(&gks);
        if let ChannelSpec::Dephasing { gamma } = self.channel {
            // Exact form, so tracking takes the closed-form path.
            channel = BlochChannel::dephasing(gamma).expect("validated rate");
        }

        let v0 = match self.initial_state {
            InitialState::Vector(v) => CoherenceVector::new(v[0], v[1], v[2])
                .map_err(|e| field_error("initial_state.vector", e))?,
            InitialState::Cpphi {
                coherence,
                purity,
                phase,
            } => {
                if !(coherence >= 0.0 && coherence <= purity && purity <= 1.0) {
                    return Err(field_error(
                        "initial_state.cpphi",
                        format!(
                            "need 0 <= coherence <= purity <= 1, got c = {coherence}, p = {purity}"
                        ),
                    ));
                }
                CoherenceVector::from_coherence_purity(coherence, purity, phase)
                    .map_err(|e| field_error("initial_state.cpphi", e))?
            }
        };

        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(field_error("t_max", "must be finite and > 0"));
        }
        let out_dt = self
            .output
            .as_ref()
            .and_then(|o| o.dt)
            .unwrap_or(self.t_max / 1000.0);
        let grid = TimeGrid::new(self.t_max, out_dt).map_err(|e| field_error("output.dt", e))?;

        let mut integrator = IntegratorConfig::default();
        if let Some(spec) = &self.integrator {
            if let Some(m) = spec.method {
                integrator.method = match m {
                    MethodSpec::Rkf45 => Method::AdaptiveRkf45,
                    MethodSpec::Rk4 => Method::FixedRk4,
                };
            }
            integrator.dt = spec.dt.unwrap_or(integrator.dt);
            integrator.rtol = spec.rtol.unwrap_or(integrator.rtol);
            integrator.atol = spec.atol.unwrap_or(integrator.atol);
            integrator.max_step = spec.max_step.unwrap_or(integrator.max_step);
        }
        integrator
            .validate()
            .map_err(|e| field_error("integrator", e))?;

        if let ControlSpec::Track { omega0, omega_max } = &self.control {
            if !omega0.is_finite() {
                return Err(field_error("control.track.omega0", "must be finite"));
            }
            if let Some(w) = omega_max {
                if !(*w > 0.0 && w.is_finite()) {
                    return Err(field_error(
                        "control.track.omega_max",
                        "must be finite and > 0",
                    ));
                }
            }
        }

        Ok(Scenario {
            config: self,
            gks,
            channel,
            v0,
            grid,
            integrator,
            base_dir,
        })
    }
}

impl Scenario {
    pub fn output(&self) -> OutputSpec {
        self.config.output.clone().unwrap_or(OutputSpec {
            dt: None,
            trajectory: None,
            fields: None,
        })
    }

    /// Loads the `fixed` control waveform.
    pub fn fixed_waveform(&self) -> Result<Option<ControlWaveform>, CliError> {
        let ControlSpec::Fixed { waveform } = &self.config.control else {
            return Ok(None);
        };
        let path = self.base_dir.join(waveform);
        let text = std::fs::read_to_string(&path).map_err(|e| {
            field_error("control.fixed.waveform", format!("{}: {e}", path.display()))
        })?;
        parse_waveform_csv(&text).map(Some)
    }
}

/// Parses a uniformly spaced `t,omega0,omega1,omega2` CSV starting at `t = 0`.
pub fn parse_waveform_csv(text: &str) -> Result<ControlWaveform, CliError> {
    let err = |line: usize, msg: String| CliError::Config(format!("waveform line {line}: {msg}"));
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some((_, h)) if h.trim() == cohtrack::trajectory::FIELDS_HEADER => {}
        Some((i, h)) => {
            return Err(err(
                i + 1,
                format!("expected header t,omega0,omega1,omega2, got {h:?}"),
            ))
        }
        None => return Err(err(1, "empty file".into())),
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (i, line) in lines {
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| err(i + 1, e.to_string()))?;
        if cols.len() != 4 {
            return Err(err(
                i + 1,
                format!("expected 4 columns, found {}", cols.len()),
            ));
        }
        times.push(cols[0]);
        values.push([cols[1], cols[2], cols[3]]);
    }
    if times.len() < 2 || times[0] != 0.0 {
        return Err(err(2, "need at least two rows starting at t = 0".into()));
    }
    let dt = times[1] - times[0];
    for (k, t) in times.iter().enumerate() {
        if (t - dt * k as f64).abs() > 1e-9 * dt.max(1.0) * (k as f64).max(1.0) {
            return Err(err(
                k + 2,
                format!("samples must be uniform with spacing {dt}"),
            ));
        }
    }
    SampledWaveform::new(dt, values)
        .map(ControlWaveform::Sampled)
        .map_err(|e| err(2, e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub gamma: f64,
    pub coherence: AxisSpec,
    pub purity: AxisSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl SweepSpec {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("sweep spec: {e}")))
    }

    pub fn axes(&self) -> Result<(Axis, Axis), CliError> {
        let axis = |name: &str, a: &AxisSpec| {
            if a.min < 0.0 || a.max > 1.0 {
                return Err(field_error(name, "must lie in [0, 1]"));
            }
            Axis::new(a.min, a.max, a.count).map_err(|e| field_error(name, e))
        };
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(field_error("gamma", "must be a finite rate >= 0"));
        }
        Ok((
            axis("coherence", &self.coherence)?,
            axis("purity", &self.purity)?,
        ))
    }
}
