//! Regime maps over terrain-strength space.
//!
//! A sweep evaluates the stride model on a `k_n` x `k_s` grid at fixed
//! robot and slope, labels every cell and traces the `s = R` boundary of
//! the success region.

pub mod contour;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::format::{fmt_sig, round_sig};
use crate::model::{net_step_at, ModelError, RegimeLabel, RobotConfig, SlopeAngle, StrideOutcome};
use contour::{GridEdge, ScalarGrid};

/// Default resolution on each axis.
pub const DEFAULT_GRID: usize = 200;

#[derive(Debug, Error)]
pub enum PhaseError {
    #[error("invalid {axis} axis: {message}")]
    InvalidAxis { axis: &'static str, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    #[serde(alias = "logarithmic")]
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        Axis { min, max, count }
    }

    fn validate(&self, name: &'static str) -> Result<(), PhaseError> {
        let bad = |message: String| PhaseError::InvalidAxis {
            axis: name,
            message,
        };
        if !(self.min.is_finite() && self.max.is_finite() && self.min > 0.0) {
            return Err(bad(format!(
                "bounds must be finite and > 0, got [{}, {}]",
                self.min, self.max
            )));
        }
        if !(self.min < self.max) {
            return Err(bad(format!("min {} must be < max {}", self.min, self.max)));
        }
        if self.count < 2 {
            return Err(bad(format!("count must be >= 2, got {}", self.count)));
        }
        Ok(())
    }

    /// Coordinates in the sampling space: the values themselves for a
    /// linear axis, their base-10 logarithms for a log axis.
    pub fn sampled(&self, scale: Scale) -> Vec<f64> {
        let (lo, hi) = match scale {
            Scale::Linear => (self.min, self.max),
            Scale::Log => (self.min.log10(), self.max.log10()),
        };
        let last = self.count - 1;
        (0..self.count)
            .map(|i| {
                if i == last {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / last as f64
                }
            })
            .collect()
    }

    pub fn values(&self, scale: Scale) -> Vec<f64> {
        let sampled = self.sampled(scale);
        match scale {
            Scale::Linear => sampled,
            Scale::Log => {
                let last = self.count - 1;
                sampled
                    .iter()
                    .enumerate()
                    .map(|(i, &e)| match i {
                        0 => self.min,
                        i if i == last => self.max,
                        _ => 10f64.powf(e),
                    })
                    .collect()
            }
        }
    }
}

fn to_linear(x: f64, scale: Scale) -> f64 {
    match scale {
        Scale::Linear => x,
        Scale::Log => 10f64.powf(x),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub k_n: Axis,
    pub k_s: Axis,
    pub scale: Scale,
    pub robot: RobotConfig,
    pub theta: SlopeAngle,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), PhaseError> {
        self.k_n.validate("k_n")?;
        self.k_s.validate("k_s")?;
        self.robot.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourPoint {
    pub k_n: f64,
    pub k_s: f64,
    /// Grid edge the point was interpolated on.
    pub edge: GridEdge,
}

/// Labelled sweep. Grids are row-major with rows along `k_s` and columns
/// along `k_n`: cell `(i, j)` sits at index `j * k_n.count + i`.
#[derive(Debug, Clone)]
pub struct PhaseDiagram {
    pub spec: SweepSpec,
    pub k_n_values: Vec<f64>,
    pub k_s_values: Vec<f64>,
    pub labels: Vec<RegimeLabel>,
    /// Net step length, negative infinity where the leg sinks.
    pub step_lengths: Vec<f64>,
    pub contour: Vec<Vec<ContourPoint>>,
}

impl PhaseDiagram {
    pub fn index(&self, i_kn: usize, j_ks: usize) -> usize {
        j_ks * self.spec.k_n.count + i_kn
    }

    pub fn label(&self, i_kn: usize, j_ks: usize) -> RegimeLabel {
        self.labels[self.index(i_kn, j_ks)]
    }

    pub fn count(&self, label: RegimeLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn to_json(&self) -> Value {
        let spec = &self.spec;
        let scale = match spec.scale {
            Scale::Linear => "linear",
            Scale::Log => "log",
        };
        let axis =
            |a: &Axis| json!({"min": round_sig(a.min), "max": round_sig(a.max), "count": a.count});
        let rounded = |v: &[f64]| v.iter().map(|&x| round_sig(x)).collect::<Vec<_>>();
        let step: Vec<Value> = self
            .step_lengths
            .iter()
            .map(|&s| {
                if s.is_finite() {
                    json!(round_sig(s))
                } else {
                    Value::Null
                }
            })
            .collect();
        let contour: Vec<Vec<[f64; 2]>> = self
            .contour
            .iter()
            .map(|line| {
                line.iter()
                    .map(|p| [round_sig(p.k_n), round_sig(p.k_s)])
                    .collect()
            })
            .collect();
        json!({
            "spec": {
                "k_n": axis(&spec.k_n),
                "k_s": axis(&spec.k_s),
                "scale": scale,
                "theta_deg": round_sig(spec.theta.degrees()),
                "robot": spec.robot,
            },
            "k_n_values": rounded(&self.k_n_values),
            "k_s_values": rounded(&self.k_s_values),
            "labels": self.labels.iter().map(|l| l.code()).collect::<Vec<_>>(),
            "step_lengths_m": step,
            "contour": contour,
        })
    }

    /// Long-form CSV: `k_n,k_s,s_m,label`, one row per cell in grid order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k_n,k_s,s_m,label\n");
        for (j, &k_s) in self.k_s_values.iter().enumerate() {
            for (i, &k_n) in self.k_n_values.iter().enumerate() {
                let idx = self.index(i, j);
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt_sig(k_n),
                    fmt_sig(k_s),
                    fmt_sig(self.step_lengths[idx]),
                    self.labels[idx]
                ));
            }
        }
        out
    }
}

/// Evaluates every cell of the sweep. Cells are independent; the result
/// does not depend on how rayon schedules them.
pub fn sweep(spec: &SweepSpec) -> Result<PhaseDiagram, PhaseError> {
    spec.validate()?;
    let k_n_values = spec.k_n.values(spec.scale);
    let k_s_values = spec.k_s.values(spec.scale);
    let nx = k_n_values.len();
    let outcomes: Vec<StrideOutcome> = (0..nx * k_s_values.len())
        .into_par_iter()
        .map(|idx| {
            net_step_at(
                &spec.robot,
                k_n_values[idx % nx],
                k_s_values[idx / nx],
                spec.theta,
            )
        })
        .collect();
    let labels = outcomes.iter().map(|o| o.regime).collect();
    let step_lengths: Vec<f64> = outcomes.iter().map(StrideOutcome::step_length).collect();
    let contour = extract_contour(spec, &step_lengths, spec.robot.leg_radius);
    Ok(PhaseDiagram {
        spec: spec.clone(),
        k_n_values,
        k_s_values,
        labels,
        step_lengths,
        contour,
    })
}

/// Iso-lines of the step-length field at `level`, interpolated in the
/// sampled (possibly logarithmic) coordinates and returned in linear units.
/// Cells with an infeasible corner contribute nothing.
pub fn extract_contour(
    spec: &SweepSpec,
    step_lengths: &[f64],
    level: f64,
) -> Vec<Vec<ContourPoint>> {
    let xs = spec.k_n.sampled(spec.scale);
    let ys = spec.k_s.sampled(spec.scale);
    let grid = ScalarGrid {
        xs: &xs,
        ys: &ys,
        values: step_lengths,
    };
    grid.polylines(level)
        .into_iter()
        .map(|line| {
            line.into_iter()
                .map(|v| ContourPoint {
                    k_n: to_linear(v.point[0], spec.scale),
                    k_s: to_linear(v.point[1], spec.scale),
                    edge: v.edge,
                })
                .collect()
        })
        .collect()
}
