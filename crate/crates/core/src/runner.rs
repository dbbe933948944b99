//! Complete benchmark runs, strategy comparisons and report formats.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{scenario_digest, ScenarioConfig, SliKind, SloSpec};
use crate::remediation::{
    apply_action, placements, Observation, RejectedAction, RemediationAction, Remediator,
    SloReading, StrategyError, StrategyRegistry,
};
use crate::simcore::{
    build_world, ConservationLedger, EventRecord, FinishedRun, SimFault, SimTime, TickHandler,
    World,
};
use crate::slo::{
    compliant_fraction, scored_series, total_score, violation_score, SliPoint, SliSample,
    SliSampler, SliSeries, SloError, SloScore,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error("simulation fault: {0}")]
    Fault(#[from] SimFault),
    #[error("scoring failed: {0}")]
    Slo(#[from] SloError),
    #[error("no strategies to compare")]
    NoStrategies,
    #[error("repetitions must be at least 1")]
    NoRepetitions,
}

/// Score of one SLO in a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SloResult {
    pub name: String,
    pub sli: SliKind,
    pub threshold: f64,
    pub weight: f64,
    /// Per-SLO violation score over the scored samples.
    pub score: f64,
    pub samples: usize,
    pub compliant_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSummary {
    pub total: usize,
    pub by_kind: BTreeMap<String, usize>,
    pub produced: u64,
    pub completed: u64,
    pub correct: u64,
    pub dropped: u64,
    pub energy_j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub worker: String,
    pub action: RemediationAction,
    pub started_ms: f64,
    pub completes_ms: Option<f64>,
}

/// Self-contained record of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario_digest: String,
    pub seed: u64,
    pub strategy: String,
    pub slos: Vec<SloResult>,
    pub v_total: f64,
    pub sli_series: Vec<SliSample>,
    pub events: EventSummary,
    pub conservation: ConservationLedger,
    pub transitions: Vec<TransitionRecord>,
    pub rejected_actions: Vec<RejectedAction>,
    #[serde(skip)]
    pub wall_clock: Duration,
}

impl RunReport {
    pub fn weights(&self) -> Vec<f64> {
        self.slos.iter().map(|s| s.weight).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// SLI samples as CSV, the same format `score` reads.
    pub fn sli_csv(&self) -> String {
        sli_csv(&self.sli_series)
    }

    /// `v / threshold` series of one SLO, all phases.
    pub fn ratio_series(&self, slo: &str) -> Vec<(f64, f64)> {
        self.sli_series
            .iter()
            .filter(|s| s.slo == slo)
            .map(|s| (s.t_ms, s.ratio))
            .collect()
    }

    /// Ratio series restricted to scored samples.
    pub fn scored_ratios(&self, slo: &str) -> Vec<(f64, f64)> {
        self.sli_series
            .iter()
            .filter(|s| s.slo == slo && s.scored)
            .map(|s| (s.t_ms, s.ratio))
            .collect()
    }
}

/// A report plus the full simulation output it was built from.
#[derive(Debug, Clone)]
pub struct DetailedRun {
    pub report: RunReport,
    pub finished: FinishedRun,
    pub cfg: ScenarioConfig,
}

struct Harness<'a> {
    sampler: SliSampler,
    remediator: &'a mut dyn Remediator,
    seen: usize,
    rejected: Vec<RejectedAction>,
}

impl Harness<'_> {
    fn observe(&mut self, world: &World, t: SimTime) -> Observation {
        let reading = |s: &SliSample, spec: &SloSpec| SloReading {
            t_ms: s.t_ms,
            slo: s.slo.clone(),
            sli: s.sli,
            value: s.value,
            threshold: spec.threshold,
            ratio: s.ratio,
            compliant: s.value <= spec.threshold,
            carried_forward: s.carried_forward,
        };
        let specs = self.sampler.slos();
        let spec = |name: &str| specs.iter().find(|s| s.name == name).expect("sampled slo");
        let samples = self.sampler.samples();
        let recent = samples[self.seen..]
            .iter()
            .map(|s| reading(s, spec(&s.slo)))
            .collect();
        let latest = specs
            .iter()
            .filter_map(|sp| {
                samples
                    .iter()
                    .rev()
                    .find(|s| s.slo == sp.name)
                    .map(|s| reading(s, sp))
            })
            .collect();
        self.seen = samples.len();
        let (eval_start, _) = world.evaluation_window();
        Observation {
            t_ms: t.as_ms(),
            elapsed_ms: (t - eval_start).as_ms(),
            latest,
            recent,
            placements: placements(world),
        }
    }
}

impl TickHandler for Harness<'_> {
    fn on_sample_tick(&mut self, world: &World, t: SimTime) -> Result<(), SimFault> {
        self.sampler.sample(&world.state, t);
        Ok(())
    }

    fn on_remediator_tick(&mut self, world: &mut World, t: SimTime) -> Result<(), SimFault> {
        let obs = self.observe(world, t);
        for action in self.remediator.decide(&obs) {
            if let Err(e) = apply_action(world, &action) {
                log::warn!("t={t}: rejected {action:?}: {e}");
                world.record(
                    "action_rejected",
                    json!({"action": action, "reason": e.to_string()}),
                );
                self.rejected.push(RejectedAction {
                    t_ms: t.as_ms(),
                    action,
                    reason: e.to_string(),
                });
            }
        }
        Ok(())
    }
}

/// Runs `cfg` under `remediator` and scores it.
pub fn run(cfg: &ScenarioConfig, remediator: &mut dyn Remediator) -> Result<RunReport, RunError> {
    Ok(run_detailed(cfg, remediator)?.report)
}

/// Like [`run`] but keeps the finished world and its event log.
pub fn run_detailed(
    cfg: &ScenarioConfig,
    remediator: &mut dyn Remediator,
) -> Result<DetailedRun, RunError> {
    let started = Instant::now();
    let mut world = build_world(cfg);
    let mut harness = Harness {
        sampler: SliSampler::new(cfg.slos.clone(), world.evaluation_window()),
        remediator,
        seen: 0,
        rejected: Vec::new(),
    };
    world.run(&mut harness)?;
    let strategy = harness.remediator.name().to_string();
    let samples = harness.sampler.into_samples();
    let rejected = harness.rejected;
    let finished = world.into_finished();

    let mut slos = Vec::with_capacity(cfg.slos.len());
    let mut scores = Vec::with_capacity(cfg.slos.len());
    for spec in &cfg.slos {
        let series = scored_series(&samples, &spec.name);
        let score = violation_score(&series, spec.threshold)?;
        slos.push(SloResult {
            name: spec.name.clone(),
            sli: spec.sli,
            threshold: spec.threshold,
            weight: spec.weight,
            score: score.score,
            samples: series.len(),
            compliant_fraction: compliant_fraction(&series, spec.threshold),
        });
        scores.push(score);
    }
    let v_total = total_score(&scores, &cfg.weights())?;

    let mut by_kind = BTreeMap::new();
    for e in &finished.events {
        *by_kind.entry(e.kind.to_string()).or_insert(0) += 1;
    }
    let state = &finished.state;
    let events = EventSummary {
        total: finished.events.len(),
        by_kind,
        produced: state.produced,
        completed: state.results.len() as u64,
        correct: state.results.iter().filter(|r| r.correct).count() as u64,
        dropped: state.dropped,
        energy_j: state.energy.total_j(),
    };
    let transitions = finished
        .transitions
        .iter()
        .map(|t| TransitionRecord {
            worker: t.worker.clone(),
            action: t.action.clone(),
            started_ms: t.started_at.as_ms(),
            completes_ms: t.completes_at.map(SimTime::as_ms),
        })
        .collect();

    let report = RunReport {
        scenario_digest: scenario_digest(cfg),
        seed: cfg.seed,
        strategy,
        slos,
        v_total,
        sli_series: samples,
        events,
        conservation: state.conservation(),
        transitions,
        rejected_actions: rejected,
        wall_clock: started.elapsed(),
    };
    Ok(DetailedRun {
        report,
        finished,
        cfg: cfg.clone(),
    })
}

/// Parameters for strategy `name`: the scenario's remediator block when it
/// names this strategy, otherwise none.
pub fn strategy_params(cfg: &ScenarioConfig, name: &str) -> Value {
    cfg.remediator
        .as_ref()
        .filter(|r| r.name == name)
        .map(|r| r.params.clone())
        .unwrap_or(Value::Null)
}

pub fn create_remediator(
    registry: &StrategyRegistry,
    cfg: &ScenarioConfig,
    name: &str,
) -> Result<Box<dyn Remediator>, StrategyError> {
    registry.create(name, &strategy_params(cfg, name))
}

/// Aggregate of one strategy over all repetitions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategySummary {
    pub rank: usize,
    pub strategy: String,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// `V_total` per repetition, in seed order.
    pub v_totals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub scenario_digest: String,
    pub seeds: Vec<u64>,
    /// Best (lowest mean) first.
    pub ranking: Vec<StrategySummary>,
}

impl ComparisonReport {
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("rank,strategy,mean_v_total,min_v_total,max_v_total,repetitions\n");
        for s in &self.ranking {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                s.rank,
                s.strategy,
                s.mean,
                s.min,
                s.max,
                s.v_totals.len()
            )
            .unwrap();
        }
        out
    }

    pub fn to_text(&self) -> String {
        let width = self
            .ranking
            .iter()
            .map(|s| s.strategy.len())
            .max()
            .unwrap_or(0)
            .max("strategy".len());
        let mut out = format!(
            "{:>4}  {:<width$}  {:>8}  {:>8}  {:>8}\n",
            "rank", "strategy", "mean", "min", "max"
        );
        for s in &self.ranking {
            writeln!(
                out,
                "{:>4}  {:<width$}  {:>8.3}  {:>8.3}  {:>8.3}",
                s.rank, s.strategy, s.mean, s.min, s.max
            )
            .unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("comparison serializes")
    }
}

/// Runs every strategy against the same derived seeds (`seed + i`).
///
/// Runs execute in parallel; results are merged by strategy and repetition,
/// so the report does not depend on scheduling.
pub fn compare(
    cfg: &ScenarioConfig,
    strategies: &[String],
    repetitions: u32,
    registry: &StrategyRegistry,
) -> Result<ComparisonReport, RunError> {
    if strategies.is_empty() {
        return Err(RunError::NoStrategies);
    }
    if repetitions == 0 {
        return Err(RunError::NoRepetitions);
    }
    // Fail on unknown names or bad params before any run starts.
    for name in strategies {
        create_remediator(registry, cfg, name)?;
    }
    let seeds: Vec<u64> = (0..repetitions as u64)
        .map(|i| cfg.seed.wrapping_add(i))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..strategies.len())
        .flat_map(|s| (0..seeds.len()).map(move |r| (s, r)))
        .collect();
    let results: Vec<((usize, usize), f64)> = jobs
        .par_iter()
        .map(|&(s, r)| {
            let mut run_cfg = cfg.clone();
            run_cfg.seed = seeds[r];
            let mut remediator = create_remediator(registry, cfg, &strategies[s])?;
            let report = run(&run_cfg, remediator.as_mut())?;
            Ok(((s, r), report.v_total))
        })
        .collect::<Result<_, RunError>>()?;

    let mut grid = vec![vec![0.0; seeds.len()]; strategies.len()];
    for ((s, r), v) in results {
        grid[s][r] = v;
    }
    let mut ranking: Vec<StrategySummary> = strategies
        .iter()
        .zip(grid)
        .map(|(name, v_totals)| StrategySummary {
            rank: 0,
            strategy: name.clone(),
            mean: v_totals.iter().sum::<f64>() / v_totals.len() as f64,
            min: v_totals.iter().copied().fold(f64::INFINITY, f64::min),
            max: v_totals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            v_totals,
        })
        .collect();
    ranking.sort_by(|a, b| {
        a.mean
            .total_cmp(&b.mean)
            .then_with(|| a.strategy.cmp(&b.strategy))
    });
    for (i, s) in ranking.iter_mut().enumerate() {
        s.rank = i + 1;
    }
    Ok(ComparisonReport {
        scenario_digest: scenario_digest(cfg),
        seeds,
        ranking,
    })
}

// ---------------------------------------------------------------------------
// SLI CSV
// ---------------------------------------------------------------------------

pub const SLI_CSV_HEADER: &str = "t_ms,slo,sli,value,ratio,carried_forward,scored";

/// Writes samples with full float precision.
pub fn sli_csv(samples: &[SliSample]) -> String {
    let mut out = String::from(SLI_CSV_HEADER);
    out.push('\n');
    for s in samples {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.t_ms, s.slo, s.sli, s.value, s.ratio, s.carried_forward, s.scored
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("missing column `{0}`")]
    MissingColumn(&'static str),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("no samples for SLO `{0}`")]
    NoSamples(String),
    #[error(transparent)]
    Slo(#[from] SloError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvScore {
    pub slos: Vec<SloScore>,
    pub weights: Vec<f64>,
    pub v_total: f64,
}

/// Scores an SLI CSV against `slos`.
///
/// Needs `t_ms`, `slo` and `value` columns. When a `scored` column is present
/// only rows marked `true` count, which makes a simulator export score to the
/// run's own `V_total`. Rows of SLOs not in `slos` are ignored.
pub fn score_sli_csv(text: &str, slos: &[SloSpec]) -> Result<CsvScore, ScoreError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let col = |name: &'static str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or(ScoreError::MissingColumn(name))
    };
    let (t_col, slo_col, value_col) = (col("t_ms")?, col("slo")?, col("value")?);
    let scored_col = headers.iter().position(|h| h == "scored");

    let mut series: BTreeMap<&str, SliSeries> = slos
        .iter()
        .map(|s| (s.name.as_str(), SliSeries::new(s.name.clone())))
        .collect();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row_err = |message: String| ScoreError::Row { line, message };
        if let Some(c) = scored_col {
            let flag = record.get(c).unwrap_or("");
            match flag {
                "true" => {}
                "false" => continue,
                other => {
                    return Err(row_err(format!(
                        "`scored` must be true or false, got `{other}`"
                    )))
                }
            }
        }
        let name = record.get(slo_col).unwrap_or("");
        let Some(s) = series.get_mut(name) else {
            continue;
        };
        let parse = |c: usize, what: &str| {
            record
                .get(c)
                .unwrap_or("")
                .parse::<f64>()
                .map_err(|e| row_err(format!("bad {what}: {e}")))
        };
        let point = SliPoint {
            t_ms: parse(t_col, "t_ms")?,
            value: parse(value_col, "value")?,
        };
        s.push(point).map_err(|e| row_err(e.to_string()))?;
    }

    let mut scores = Vec::with_capacity(slos.len());
    for spec in slos {
        let s = &series[spec.name.as_str()];
        if s.is_empty() {
            return Err(ScoreError::NoSamples(spec.name.clone()));
        }
        scores.push(violation_score(s, spec.threshold)?);
    }
    let weights: Vec<f64> = slos.iter().map(|s| s.weight).collect();
    let v_total = total_score(&scores, &weights)?;
    Ok(CsvScore {
        slos: scores,
        weights,
        v_total,
    })
}

/// Event log as newline-delimited JSON.
pub fn events_ndjson(events: &[EventRecord]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("event serializes"));
        out.push('\n');
    }
    out
}

/// Completed results as CSV.
pub fn results_csv(run: &FinishedRun) -> String {
    let s = &run.state;
    let mut out = String::from("msg_id,produced_ms,completed_ms,worker,node,correct\n");
    for r in &s.results {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.msg_id,
            r.produced_at.as_ms(),
            r.completed_at.as_ms(),
            s.workers[r.worker].id,
            s.nodes[r.node].id,
            r.correct
        )
        .unwrap();
    }
    out
}
