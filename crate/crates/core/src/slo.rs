//! SLI sampling, energy accounting and SLO violation scoring.
//!
//! Every SLI is oriented so that larger values are worse. For one SLO with
//! threshold `τ` and scored samples `v(t)`, the violation score is the mean
//! over samples of `1 - τ / v(t)` where `v(t) > τ` and `0` elsewhere, which
//! keeps it in `[0, 1)`. Several SLOs combine as a weighted sum of their
//! scores.

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{SliKind, SloSpec};
use crate::simcore::{ClusterState, SimTime};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SloError {
    #[error("SLI series `{0}` has no samples")]
    EmptySeries(String),
    #[error("{scores} scores but {weights} weights")]
    LengthMismatch { scores: usize, weights: usize },
    #[error("threshold must be a positive finite number, got {0}")]
    InvalidThreshold(f64),
    #[error("sample times of `{name}` must strictly increase (t = {t_ms} ms)")]
    NonIncreasingTime { name: String, t_ms: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliPoint {
    pub t_ms: f64,
    pub value: f64,
}

/// Scored samples of one SLI, strictly increasing in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliSeries {
    pub name: String,
    samples: Vec<SliPoint>,
}

impl SliSeries {
    pub fn new(name: impl Into<String>) -> Self {
        SliSeries {
            name: name.into(),
            samples: Vec::new(),
        }
    }

    pub fn from_points(
        name: impl Into<String>,
        points: impl IntoIterator<Item = SliPoint>,
    ) -> Result<Self, SloError> {
        let mut s = SliSeries::new(name);
        for p in points {
            s.push(p)?;
        }
        Ok(s)
    }

    /// Builds a series with sample times `0, 1, 2, ...` ms.
    pub fn from_values(name: impl Into<String>, values: &[f64]) -> Self {
        SliSeries {
            name: name.into(),
            samples: values
                .iter()
                .enumerate()
                .map(|(i, &value)| SliPoint {
                    t_ms: i as f64,
                    value,
                })
                .collect(),
        }
    }

    pub fn push(&mut self, point: SliPoint) -> Result<(), SloError> {
        if let Some(last) = self.samples.last() {
            if point.t_ms.partial_cmp(&last.t_ms) != Some(std::cmp::Ordering::Greater) {
                return Err(SloError::NonIncreasingTime {
                    name: self.name.clone(),
                    t_ms: point.t_ms,
                });
            }
        }
        self.samples.push(point);
        Ok(())
    }

    pub fn samples(&self) -> &[SliPoint] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SloScore {
    pub name: String,
    /// Per-sample violation terms, `1 - τ/v` or `0`.
    pub terms: Vec<f64>,
    /// Mean of `terms`, in `[0, 1)`.
    pub score: f64,
}

/// Violation term of a single sample.
pub fn violation_term(value: f64, threshold: f64) -> f64 {
    let v = if value < 0.0 {
        warn!("negative SLI value {value} clamped to 0");
        0.0
    } else {
        value
    };
    if v > threshold {
        1.0 - threshold / v
    } else {
        0.0
    }
}

/// Normalized violation score of one SLO over its scored samples.
pub fn violation_score(series: &SliSeries, threshold: f64) -> Result<SloScore, SloError> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(SloError::InvalidThreshold(threshold));
    }
    if series.is_empty() {
        return Err(SloError::EmptySeries(series.name.clone()));
    }
    let terms: Vec<f64> = series
        .samples
        .iter()
        .map(|p| violation_term(p.value, threshold))
        .collect();
    let score = terms.iter().sum::<f64>() / terms.len() as f64;
    Ok(SloScore {
        name: series.name.clone(),
        terms,
        score,
    })
}

/// Weighted sum of per-SLO scores.
pub fn total_score(scores: &[SloScore], weights: &[f64]) -> Result<f64, SloError> {
    if scores.len() != weights.len() {
        return Err(SloError::LengthMismatch {
            scores: scores.len(),
            weights: weights.len(),
        });
    }
    Ok(scores.iter().zip(weights).map(|(s, w)| w * s.score).sum())
}

/// Fraction of samples at or below the threshold.
pub fn compliant_fraction(series: &SliSeries, threshold: f64) -> f64 {
    if series.is_empty() {
        return 1.0;
    }
    let ok = series
        .samples
        .iter()
        .filter(|p| p.value <= threshold)
        .count();
    ok as f64 / series.len() as f64
}

/// Linear power model between idle and fully loaded.
pub fn node_power(idle_power_w: f64, max_power_w: f64, utilization: f64) -> f64 {
    let u = utilization.clamp(0.0, 1.0);
    idle_power_w + u * (max_power_w - idle_power_w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct PowerSegment {
    start: SimTime,
    /// Cluster energy integrated up to `start`.
    energy_j: f64,
    power_w: f64,
}

/// Integrates piecewise-constant node power over simulated time.
#[derive(Debug, Clone)]
pub struct EnergyLedger {
    per_node_j: Vec<f64>,
    node_power_w: Vec<f64>,
    last: SimTime,
    total_j: f64,
    segments: Vec<PowerSegment>,
}

impl EnergyLedger {
    pub fn new(initial_power_w: Vec<f64>) -> Self {
        let power: f64 = initial_power_w.iter().sum();
        EnergyLedger {
            per_node_j: vec![0.0; initial_power_w.len()],
            node_power_w: initial_power_w,
            last: SimTime::ZERO,
            total_j: 0.0,
            segments: vec![PowerSegment {
                start: SimTime::ZERO,
                energy_j: 0.0,
                power_w: power,
            }],
        }
    }

    /// Integrates current power up to `now`.
    pub fn advance(&mut self, now: SimTime) {
        if now <= self.last {
            return;
        }
        let dt = (now - self.last).as_secs();
        for (e, p) in self.per_node_j.iter_mut().zip(&self.node_power_w) {
            *e += p * dt;
        }
        self.total_j += self.current_power_w() * dt;
        self.last = now;
    }

    /// Replaces node powers from the current instant onwards.
    pub fn set_power(&mut self, node_power_w: Vec<f64>) {
        if node_power_w == self.node_power_w {
            return;
        }
        self.node_power_w = node_power_w;
        let seg = PowerSegment {
            start: self.last,
            energy_j: self.total_j,
            power_w: self.current_power_w(),
        };
        match self.segments.last_mut() {
            Some(prev) if prev.start == seg.start => *prev = seg,
            _ => self.segments.push(seg),
        }
    }

    pub fn current_power_w(&self) -> f64 {
        self.node_power_w.iter().sum()
    }

    pub fn node_power_w(&self) -> &[f64] {
        &self.node_power_w
    }

    pub fn per_node_j(&self) -> &[f64] {
        &self.per_node_j
    }

    pub fn total_j(&self) -> f64 {
        self.total_j
    }

    /// Cumulative cluster energy at `t`, extrapolating at current power past
    /// the last integration point.
    pub fn energy_at(&self, t: SimTime) -> f64 {
        let idx = self.segments.partition_point(|s| s.start <= t);
        let seg = &self.segments[idx.saturating_sub(1)];
        seg.energy_j + seg.power_w * (t.saturating_sub(seg.start)).as_secs()
    }

    pub fn energy_between(&self, from: SimTime, to: SimTime) -> f64 {
        self.energy_at(to) - self.energy_at(from)
    }
}

/// Measures one SLI over `(t - window, t]`; `None` when no task completed.
pub fn measure(state: &ClusterState, slo: &SloSpec, t: SimTime) -> Option<f64> {
    let from = t.saturating_sub(SimTime::from_ms(slo.window_ms));
    let results = &state.results;
    let lo = results.partition_point(|r| r.completed_at <= from);
    let hi = results.partition_point(|r| r.completed_at <= t);
    let window = &results[lo..hi];
    if window.is_empty() {
        return None;
    }
    let n = window.len() as f64;
    Some(match slo.sli {
        SliKind::EventTimeLatency => window.iter().map(|r| r.latency().as_secs()).sum::<f64>() / n,
        SliKind::ErrorRate => window.iter().filter(|r| !r.correct).count() as f64 / n,
        SliKind::EnergyPerTask => state.energy.energy_between(from, t) / n,
    })
}

/// One recorded SLI sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliSample {
    pub t_ms: f64,
    pub slo: String,
    pub sli: SliKind,
    pub value: f64,
    /// `value / threshold`.
    pub ratio: f64,
    /// No completions in the window; value repeats the previous sample.
    pub carried_forward: bool,
    /// Inside the evaluation phase and therefore part of the score.
    pub scored: bool,
}

/// Samples all configured SLIs, carrying values forward over empty windows.
#[derive(Debug, Clone)]
pub struct SliSampler {
    slos: Vec<SloSpec>,
    previous: Vec<Option<f64>>,
    scoring: (SimTime, SimTime),
    samples: Vec<SliSample>,
}

impl SliSampler {
    /// Samples with `scoring.0 <= t < scoring.1` count towards the score.
    pub fn new(slos: Vec<SloSpec>, scoring: (SimTime, SimTime)) -> Self {
        let n = slos.len();
        SliSampler {
            slos,
            previous: vec![None; n],
            scoring,
            samples: Vec::new(),
        }
    }

    /// Takes one sample per SLO at `t` and returns them.
    pub fn sample(&mut self, state: &ClusterState, t: SimTime) -> &[SliSample] {
        let start = self.samples.len();
        let scored = t > self.scoring.0 && t <= self.scoring.1;
        for (i, slo) in self.slos.iter().enumerate() {
            let (value, carried_forward) = match measure(state, slo, t) {
                Some(v) => (v, false),
                // Nothing to carry before the first measurement.
                None => (self.previous[i].unwrap_or(0.0), true),
            };
            if !carried_forward {
                self.previous[i] = Some(value);
            }
            self.samples.push(SliSample {
                t_ms: t.as_ms(),
                slo: slo.name.clone(),
                sli: slo.sli,
                value,
                ratio: value / slo.threshold,
                carried_forward,
                scored,
            });
        }
        &self.samples[start..]
    }

    pub fn samples(&self) -> &[SliSample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<SliSample> {
        self.samples
    }

    pub fn slos(&self) -> &[SloSpec] {
        &self.slos
    }
}

/// Scored series of one SLO extracted from recorded samples.
pub fn scored_series(samples: &[SliSample], slo: &str) -> SliSeries {
    SliSeries {
        name: slo.to_string(),
        samples: samples
            .iter()
            .filter(|s| s.scored && s.slo == slo)
            .map(|s| SliPoint {
                t_ms: s.t_ms,
                value: s.value,
            })
            .collect(),
    }
}
