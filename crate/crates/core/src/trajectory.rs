//! Sampled trajectories and their CSV form.

use std::fmt::{self, Write as _};

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "t,vx,vy,vz,purity,coherence,omega0,omega1,omega2";
pub const FIELDS_HEADER: &str = "t,omega0,omega1,omega2";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub v: Vector3<f64>,
    pub purity: f64,
    pub coherence: f64,
    pub omega: [f64; 3],
}

impl Sample {
    pub fn new(t: f64, v: Vector3<f64>, omega: [f64; 3]) -> Self {
        let coherence = v.x * v.x + v.y * v.y;
        let purity = coherence + v.z * v.z;
        Self { t, v, purity, coherence, omega }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Horizon,
    Breakdown { t_b: f64 },
    Clipped { t: f64 },
    Invalid { t: f64 },
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Horizon => write!(f, "horizon"),
            Self::Breakdown { t_b } => write!(f, "breakdown:t_b={}", fmt_num(*t_b)),
            Self::Clipped { t } => write!(f, "clipped:t={}", fmt_num(*t)),
            Self::Invalid { t } => write!(f, "invalid:t={}", fmt_num(*t)),
        }
    }
}

impl Termination {
    fn parse(s: &str) -> Option<Self> {
        if s == "horizon" {
            return Some(Self::Horizon);
        }
        let (kind, rest) = s.split_once(':')?;
        let (key, value) = rest.split_once('=')?;
        let x: f64 = value.parse().ok()?;
        match (kind, key) {
            ("breakdown", "t_b") => Some(Self::Breakdown { t_b: x }),
            ("clipped", "t") => Some(Self::Clipped { t: x }),
            ("invalid", "t") => Some(Self::Invalid { t: x }),
            _ => None,
        }
    }
}

/// 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub termination: Termination,
    /// Extra `# key=value …` lines appended after the termination line.
    pub annotations: Vec<String>,
}

impl Trajectory {
    pub fn new(samples: Vec<Sample>, termination: Termination) -> Self {
        Self { samples, termination, annotations: Vec::new() }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 + self.samples.len() * 220);
        out.push_str(CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            let cols = [
                s.t, s.v.x, s.v.y, s.v.z, s.purity, s.coherence, s.omega[0], s.omega[1], s.omega[2],
            ];
            let row: Vec<String> = cols.iter().map(|x| fmt_num(*x)).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        let _ = writeln!(out, "# termination={}", self.termination);
        for a in &self.annotations {
            let _ = writeln!(out, "# {a}");
        }
        out
    }

    /// `t,omega0,omega1,omega2` rows only.
    pub fn fields_csv(&self) -> String {
        let mut out = String::from(FIELDS_HEADER);
        out.push('\n');
        for s in &self.samples {
            let row = [s.t, s.omega[0], s.omega[1], s.omega[2]].map(fmt_num);
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses the trajectory CSV format; line numbers in errors are 1-based.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == CSV_HEADER => {}
            Some((_, h)) => {
                return Err(Error::Csv { line: 1, reason: format!("unexpected header {h:?}") })
            }
            None => return Err(Error::Csv { line: 1, reason: "empty file".into() }),
        }
        let mut samples = Vec::new();
        let mut termination = Termination::Horizon;
        let mut annotations = Vec::new();
        for (i, line) in lines {
            let line_no = i + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(term) = comment.strip_prefix("termination=") {
                    termination = Termination::parse(term).ok_or_else(|| Error::Csv {
                        line: line_no,
                        reason: format!("bad termination {term:?}"),
                    })?;
                } else {
                    annotations.push(comment.to_string());
                }
                continue;
            }
            let cols: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Csv { line: line_no, reason: e.to_string() })?;
            if cols.len() != 9 {
                return Err(Error::Csv {
                    line: line_no,
                    reason: format!("expected 9 columns, found {}", cols.len()),
                });
            }
            samples.push(Sample {
                t: cols[0],
                v: Vector3::new(cols[1], cols[2], cols[3]),
                purity: cols[4],
                coherence: cols[5],
                omega: [cols[6], cols[7], cols[8]],
            });
        }
        Ok(Self { samples, termination, annotations })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let mut t = Trajectory::new(
            vec![
                Sample::new(0.0, Vector3::new(0.1, 0.2, 0.3), [4.0, 1.0 / 3.0, -2.0]),
                Sample::new(0.5, Vector3::new(-0.1, 2f64.sqrt() / 3.0, 0.0), [0.0; 3]),
            ],
            Termination::Breakdown { t_b: 25.0 / 3.0 },
        );
        t.annotations.push("singularity=none t=0".into());
        let text = t.to_csv();
        assert!(text.starts_with(CSV_HEADER));
        assert!(text.contains("# termination=breakdown:t_b=8.3333333333333339e0"));
        let back = Trajectory::from_csv(&text).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn malformed_row_reports_line() {
        let text = format!("{CSV_HEADER}\n0,0,0,0,0,0,0,0,0\n1,2,x,0,0,0,0,0,0\n");
        match Trajectory::from_csv(&text) {
            Err(Error::Csv { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(Trajectory::from_csv("a,b\n"), Err(Error::Csv { line: 1, .. })));
    }

    #[test]
    fn header_only_parses_empty() {
        let t = Trajectory::from_csv(&format!("{CSV_HEADER}\n")).unwrap();
        assert!(t.samples.is_empty());
    }
}
