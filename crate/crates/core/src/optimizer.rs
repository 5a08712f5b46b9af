//! Resilience objective over restoration schedules and a shelter-structured
//! population search over random-key genomes.
//!
//! Search operators (the shelter rules are not published in detail, so this
//! is an interpretation). The population is split round-robin into
//! `shelters` groups, each led by its best member. Per generation every
//! individual proposes one trial:
//! - with probability `global_crossover`, a move toward the leader of a
//!   different shelter, `x + scaling * global_amplification * r * (leader - x)`;
//!   if the trial replaces `x`, the individual migrates to that shelter;
//! - otherwise a local move, `x + scaling * r * (leader - x) + scaling * (x_a - x_b)`
//!   mixed with `x` by binomial crossover at rate `local_crossover`.
//!
//! `r` is uniform per dimension. Trials replace their parent when not worse.
//! Random draws are serial; only evaluation runs in parallel.

use std::time::Instant;

use dashmap::DashMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::attack::{
    cascade, enumerate_incidents, robustness_indices, select_target_indices, AttackIncident,
    AttackTarget, RobustnessIndices,
};
use crate::case::{GridCase, LineId};
use crate::dispatch::DEFAULT_TAU;
use crate::error::ScheduleError;
use crate::par::{self, ExecMode};
use crate::sim::{
    check_sequence, decode_indices, restorability_indices, run_steps, RestorabilityIndices,
    SimConfig, SystemState, Trajectory,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObjectiveConfig {
    pub mu: f64,
    pub k_max: usize,
    pub target_fraction: f64,
    pub tau: f64,
    pub step_minutes: f64,
    pub max_steps: usize,
    /// When false, the expected-curtailment term is recomputed only at steps
    /// whose target set changed.
    pub robustness_every_step: bool,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self {
            mu: 0.25,
            k_max: 2,
            target_fraction: 0.30,
            tau: DEFAULT_TAU,
            step_minutes: 5.0,
            max_steps: 96,
            robustness_every_step: true,
        }
    }
}

impl ObjectiveConfig {
    pub fn sim(&self) -> SimConfig {
        SimConfig {
            step_minutes: self.step_minutes,
            max_steps: self.max_steps,
            tau: self.tau,
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(format!("mu must lie in (0, 1), got {}", self.mu));
        }
        if self.k_max < 1 {
            return Err("k_max must be at least 1".into());
        }
        if !(self.target_fraction > 0.0 && self.target_fraction <= 1.0) {
            return Err(format!("target fraction must lie in (0, 1], got {}", self.target_fraction));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(format!("tau must lie in (0, 1], got {}", self.tau));
        }
        if !(self.step_minutes > 0.0) {
            return Err("step length must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchConfig {
    pub population: usize,
    pub generations: usize,
    pub shelters: usize,
    pub scaling: f64,
    pub local_crossover: f64,
    pub global_crossover: f64,
    pub global_amplification: f64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            population: 100,
            generations: 100,
            shelters: 4,
            scaling: 1.0,
            local_crossover: 0.9,
            global_crossover: 0.1,
            global_amplification: 1.2,
            seed: 42,
        }
    }
}

impl SearchConfig {
    pub fn check(&self) -> Result<(), String> {
        if self.population < 1 {
            return Err("population must be at least 1".into());
        }
        if self.generations < 1 {
            return Err("generations must be at least 1".into());
        }
        if self.shelters < 1 {
            return Err("shelters must be at least 1".into());
        }
        for (name, v) in [
            ("local crossover", self.local_crossover),
            ("global crossover", self.global_crossover),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        Ok(())
    }
}

/// Per-step contribution to the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepTerm {
    pub time_min: f64,
    pub restored_mw: f64,
    /// Restored share of total demand.
    pub eta: f64,
    /// Probability-weighted curtailment over the step's incidents, MW.
    pub expected_curtailment_mw: f64,
    /// `((1 - eta)^2 + eta * expected / restored) * dt`
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleCandidate {
    pub genome: Vec<f64>,
    pub decoded_sequence: Vec<LineId>,
    /// Minutes; infinite when the schedule never completes.
    pub objective: f64,
    pub completion_time: Option<f64>,
    pub terms: Vec<StepTerm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    /// Mean over finite objectives; infinite if none are finite.
    pub mean: f64,
    pub evals: usize,
    pub wall_ms: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best: ScheduleCandidate,
    pub history: Vec<GenerationStats>,
}

/// Permutation of positions by ascending key; equal keys keep index order.
pub fn argsort(keys: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]));
    idx
}

/// Genome to line-id permutation.
pub fn genome_permutation(genome: &[f64], case: &GridCase) -> Vec<LineId> {
    argsort(genome).into_iter().map(|i| case.lines()[i].id).collect()
}

/// Objective evaluation with a cache of per-step curtailment terms keyed by
/// (step, energized prefix). A step's snapshot depends only on that prefix,
/// so cache hits are exact.
pub struct Evaluator<'a> {
    case: &'a GridCase,
    cfg: ObjectiveConfig,
    cache: DashMap<Vec<u16>, f64>,
    total_demand: f64,
}

impl<'a> Evaluator<'a> {
    pub fn new(case: &'a GridCase, cfg: ObjectiveConfig) -> Self {
        Self {
            case,
            cfg,
            cache: DashMap::new(),
            total_demand: case.total_load(),
        }
    }

    pub fn config(&self) -> &ObjectiveConfig {
        &self.cfg
    }

    /// Probability-weighted load loss for the anticipated incidents of `s`.
    fn expected_curtailment(&self, s: &SystemState, targets: &[usize]) -> f64 {
        let targets: Vec<AttackTarget> = sorted_ids(self.case, targets)
            .into_iter()
            .map(AttackTarget::Line)
            .collect();
        let before = s.total_load();
        enumerate_incidents(&targets, self.cfg.k_max, self.cfg.mu)
            .iter()
            .map(|inc| {
                let out = cascade(s, inc, self.case);
                inc.probability * (before - out.final_state.total_load()).max(0.0)
            })
            .sum()
    }

    /// Simulates an index sequence and scores it.
    pub(crate) fn evaluate_indices(&self, seq: &[usize]) -> (Trajectory, Vec<StepTerm>, f64) {
        let dt = self.cfg.step_minutes;
        let mut terms = Vec::new();
        let mut last: Option<(Vec<usize>, f64)> = None;
        let tr = run_steps(self.case, seq, &self.cfg.sim(), |k, s| {
            let restored = s.total_load();
            let eta = if self.total_demand > 0.0 { restored / self.total_demand } else { 1.0 };
            let expected = if restored > 0.0 {
                let mut targets = select_target_indices(s, self.case, self.cfg.target_fraction);
                targets.sort_unstable();
                let reuse = match &last {
                    Some((t, v)) if !self.cfg.robustness_every_step && *t == targets => Some(*v),
                    _ => None,
                };
                let v = reuse.unwrap_or_else(|| {
                    let key: Vec<u16> = std::iter::once(k as u16)
                        .chain(seq[..k.min(seq.len())].iter().map(|&l| l as u16))
                        .collect();
                    if let Some(v) = self.cache.get(&key) {
                        return *v;
                    }
                    let v = self.expected_curtailment(s, &targets);
                    self.cache.insert(key, v);
                    v
                });
                last = Some((targets, v));
                v
            } else {
                0.0
            };
            let second = if restored > 0.0 { eta * expected / restored } else { 0.0 };
            terms.push(StepTerm {
                time_min: s.time_min,
                restored_mw: restored,
                eta,
                expected_curtailment_mw: expected,
                value: ((1.0 - eta).powi(2) + second) * dt,
            });
        });
        let r = objective_from_terms(&tr, &terms);
        (tr, terms, r)
    }

    pub fn evaluate_genome(&self, genome: &[f64]) -> ScheduleCandidate {
        let seq = decode_indices(&argsort(genome), self.case);
        let (tr, terms, objective) = self.evaluate_indices(&seq);
        ScheduleCandidate {
            genome: genome.to_vec(),
            decoded_sequence: tr.sequence.clone(),
            objective,
            completion_time: tr.completion_time,
            terms,
        }
    }

    pub fn cache_len(&self) -> usize {
        self.cache.len()
    }
}

fn sorted_ids(case: &GridCase, lines: &[usize]) -> Vec<LineId> {
    let mut v: Vec<LineId> = lines.iter().map(|&l| case.lines()[l].id).collect();
    v.sort();
    v
}

/// Sum of the step terms before completion; infinite if never complete.
fn objective_from_terms(tr: &Trajectory, terms: &[StepTerm]) -> f64 {
    match tr.completion_time {
        None => f64::INFINITY,
        Some(t) => terms
            .iter()
            .filter(|s| s.time_min < t - 1e-9)
            .map(|s| s.value)
            .sum(),
    }
}

/// Resilience objective of a trajectory, minutes.
pub fn objective(tr: &Trajectory, case: &GridCase, cfg: &ObjectiveConfig) -> f64 {
    let ev = Evaluator::new(case, *cfg);
    let dt = cfg.step_minutes;
    let total = case.total_load();
    let terms: Vec<StepTerm> = tr
        .steps
        .iter()
        .map(|s| {
            let restored = s.total_load();
            let eta = if total > 0.0 { restored / total } else { 1.0 };
            let expected = if restored > 0.0 {
                ev.expected_curtailment(s, &select_target_indices(s, case, cfg.target_fraction))
            } else {
                0.0
            };
            let second = if restored > 0.0 { eta * expected / restored } else { 0.0 };
            StepTerm {
                time_min: s.time_min,
                restored_mw: restored,
                eta,
                expected_curtailment_mw: expected,
                value: ((1.0 - eta).powi(2) + second) * dt,
            }
        })
        .collect();
    objective_from_terms(tr, &terms)
}

/// Population search with the default parallel evaluation.
pub fn optimize(case: &GridCase, ocfg: &ObjectiveConfig, scfg: &SearchConfig) -> SearchResult {
    optimize_with(case, ocfg, scfg, ExecMode::default())
}

pub fn optimize_with(
    case: &GridCase,
    ocfg: &ObjectiveConfig,
    scfg: &SearchConfig,
    mode: ExecMode,
) -> SearchResult {
    let start = Instant::now();
    let ev = Evaluator::new(case, *ocfg);
    let dim = case.lines().len();
    let n = scfg.population.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(scfg.seed);

    let mut pop: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let mut cands: Vec<ScheduleCandidate> = par::map(mode, &pop, |g| ev.evaluate_genome(g));
    let mut evals = n;
    let n_shelters = scfg.shelters.clamp(1, n);
    let mut shelter: Vec<usize> = (0..n).map(|i| i % n_shelters).collect();

    let mut best = first_best(&cands).clone();
    let mut history = vec![stats(0, &best, &cands, evals, &start)];

    for generation in 1..scfg.generations {
        let leaders: Vec<Option<usize>> = (0..n_shelters)
            .map(|s| {
                (0..n)
                    .filter(|&i| shelter[i] == s)
                    .min_by(|&a, &b| cands[a].objective.total_cmp(&cands[b].objective).then(a.cmp(&b)))
            })
            .collect();

        let mut trials = Vec::with_capacity(n);
        let mut moves = Vec::with_capacity(n);
        for i in 0..n {
            let x = &pop[i];
            let others: Vec<usize> = (0..n_shelters)
                .filter(|&s| s != shelter[i] && leaders[s].is_some())
                .collect();
            if !others.is_empty() && rng.gen::<f64>() < scfg.global_crossover {
                let o = others[rng.gen_range(0..others.len())];
                let lead = &pop[leaders[o].expect("non-empty shelter")];
                let step = scfg.scaling * scfg.global_amplification;
                let t: Vec<f64> = (0..dim)
                    .map(|j| x[j] + step * rng.gen::<f64>() * (lead[j] - x[j]))
                    .collect();
                trials.push(t);
                moves.push(Some(o));
            } else {
                let lead = &pop[leaders[shelter[i]].unwrap_or(i)];
                let (a, b) = if n >= 3 {
                    let a = loop {
                        let a = rng.gen_range(0..n);
                        if a != i {
                            break a;
                        }
                    };
                    let b = loop {
                        let b = rng.gen_range(0..n);
                        if b != i && b != a {
                            break b;
                        }
                    };
                    (a, b)
                } else {
                    (i, i)
                };
                let f = scfg.scaling;
                let j_rand = rng.gen_range(0..dim.max(1));
                let t: Vec<f64> = (0..dim)
                    .map(|j| {
                        let v = x[j] + f * rng.gen::<f64>() * (lead[j] - x[j]) + f * (pop[a][j] - pop[b][j]);
                        if j == j_rand || rng.gen::<f64>() < scfg.local_crossover {
                            v
                        } else {
                            x[j]
                        }
                    })
                    .collect();
                trials.push(t);
                moves.push(None);
            }
        }

        let scored: Vec<ScheduleCandidate> = par::map(mode, &trials, |g| ev.evaluate_genome(g));
        evals += n;
        for (i, (t, c)) in trials.into_iter().zip(scored).enumerate() {
            if c.objective <= cands[i].objective {
                if let Some(o) = moves[i] {
                    if c.objective < cands[i].objective {
                        shelter[i] = o;
                    }
                }
                if c.objective < best.objective {
                    best = c.clone();
                }
                pop[i] = t;
                cands[i] = c;
            }
        }
        history.push(stats(generation, &best, &cands, evals, &start));
    }
    SearchResult { best, history }
}

fn first_best(c: &[ScheduleCandidate]) -> &ScheduleCandidate {
    c.iter()
        .reduce(|a, b| if b.objective < a.objective { b } else { a })
        .expect("population is non-empty")
}

fn stats(
    generation: usize,
    best: &ScheduleCandidate,
    cands: &[ScheduleCandidate],
    evals: usize,
    start: &Instant,
) -> GenerationStats {
    let finite: Vec<f64> = cands.iter().map(|c| c.objective).filter(|v| v.is_finite()).collect();
    GenerationStats {
        generation,
        best: best.objective,
        mean: if finite.is_empty() {
            f64::INFINITY
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        },
        evals,
        wall_ms: start.elapsed().as_millis(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncidentRow {
    pub time_min: f64,
    pub incident_id: usize,
    pub incident: AttackIncident,
    pub indices: RobustnessIndices,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleReport {
    pub trajectory: Trajectory,
    pub indices: RestorabilityIndices,
    pub terms: Vec<StepTerm>,
    pub objective: f64,
    /// Anticipated incidents at every step before completion.
    pub incidents: Vec<IncidentRow>,
}

/// Full report for an explicit energization order.
pub fn evaluate_schedule(
    case: &GridCase,
    sequence: &[LineId],
    cfg: &ObjectiveConfig,
) -> Result<ScheduleReport, ScheduleError> {
    evaluate_schedule_with(case, sequence, cfg, ExecMode::default())
}

pub fn evaluate_schedule_with(
    case: &GridCase,
    sequence: &[LineId],
    cfg: &ObjectiveConfig,
    mode: ExecMode,
) -> Result<ScheduleReport, ScheduleError> {
    let seq = check_sequence(case, sequence)?;
    let ev = Evaluator::new(case, *cfg);
    let (trajectory, terms, objective) = ev.evaluate_indices(&seq);
    let indices = restorability_indices(&trajectory, case);
    let horizon = trajectory.completion_time.unwrap_or(f64::INFINITY);

    let mut jobs = Vec::new();
    for s in trajectory.steps.iter().filter(|s| s.time_min < horizon - 1e-9) {
        let targets: Vec<AttackTarget> =
            sorted_ids(case, &select_target_indices(s, case, cfg.target_fraction))
                .into_iter()
                .map(AttackTarget::Line)
                .collect();
        for (id, inc) in enumerate_incidents(&targets, cfg.k_max, cfg.mu).into_iter().enumerate() {
            jobs.push((s, id + 1, inc));
        }
    }
    let incidents = par::map(mode, &jobs, |(s, id, inc)| {
        let out = cascade(s, inc, case);
        IncidentRow {
            time_min: s.time_min,
            incident_id: *id,
            incident: inc.clone(),
            indices: robustness_indices(s, &out, case),
        }
    });
    Ok(ScheduleReport {
        trajectory,
        indices,
        terms,
        objective,
        incidents,
    })
}
