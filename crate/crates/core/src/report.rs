//! CSV and JSON renderings of trajectories, index series, incident rows and
//! search histories. Column sets and number formats are fixed: MW and
//! percentages with two decimals, dimensionless indices with four, times
//! in whole minutes, and `NA` for undefined values.

use std::fmt::Write as _;

use serde::Serialize;

use crate::case::{GridCase, LineId};
use crate::optimizer::{GenerationStats, IncidentRow, ScheduleReport};
use crate::sim::Trajectory;

pub const TRAJECTORY_HEADER: &str = "time_min,energized_line,started_gens,total_load_mw,generation_mw";
pub const INDICES_HEADER: &str =
    "time_min,r3res_mw,r4res,r5res,eta,expected_curtailment_mw,step_objective";
pub const INCIDENTS_HEADER: &str =
    "time_min,incident_id,failed_elements,p,r1rob_min,r2rob_mw_h,r3rob_pct,r4rob_pct,r5rob_pct";
pub const CONVERGENCE_HEADER: &str = "generation,best_R,mean_R,evals,wall_ms";
pub const SUMMARY_HEADER: &str =
    "completion_min,r1res_min,r2res_mw_h,r3res_mw,r4res,r5res,objective";

fn opt(v: Option<f64>, digits: usize) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.digits$}"),
        _ => "NA".into(),
    }
}

fn num(x: f64, digits: usize) -> String {
    opt(Some(x), digits)
}

/// Clears negative zero so `-0.00` never appears.
fn tidy(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

pub fn trajectory_csv(tr: &Trajectory, case: &GridCase) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for (k, s) in tr.steps.iter().enumerate() {
        let line = tr.line_at_step(k).map_or("NA".to_string(), |l| l.0.to_string());
        let gens: Vec<String> = s.started_gens(case).iter().map(|g| g.0.to_string()).collect();
        let generation: f64 = s.gen_output.iter().sum();
        let _ = writeln!(
            out,
            "{:.0},{},{},{},{}",
            s.time_min,
            line,
            gens.join(";"),
            num(tidy(s.total_load()), 2),
            num(tidy(generation), 2)
        );
    }
    out
}

pub fn indices_csv(rep: &ScheduleReport) -> String {
    let mut out = String::from(INDICES_HEADER);
    out.push('\n');
    for (i, t) in rep.terms.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:.0},{},{},{},{},{},{}",
            t.time_min,
            num(tidy(rep.indices.r3_mw[i]), 2),
            num(rep.indices.r4[i], 4),
            num(rep.indices.r5[i], 4),
            num(t.eta, 4),
            num(tidy(t.expected_curtailment_mw), 2),
            num(t.value, 4)
        );
    }
    out
}

pub fn incidents_csv(rows: &[IncidentRow]) -> String {
    let mut out = String::from(INCIDENTS_HEADER);
    out.push('\n');
    for r in rows {
        let i = &r.indices;
        let _ = writeln!(
            out,
            "{:.0},{},{},{},{},{},{},{},{}",
            r.time_min,
            r.incident_id,
            r.incident.label(),
            r.incident.probability,
            opt(i.r1_min, 2),
            num(tidy(i.r2_mw_per_h), 2),
            opt(i.r3_pct.map(tidy), 2),
            opt(i.r4_pct.map(tidy), 2),
            opt(i.r5_pct.map(tidy), 2)
        );
    }
    out
}

pub fn convergence_csv(history: &[GenerationStats]) -> String {
    let mut out = String::from(CONVERGENCE_HEADER);
    out.push('\n');
    for h in history {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            h.generation,
            num(h.best, 4),
            num(h.mean, 4),
            h.evals,
            h.wall_ms
        );
    }
    out
}

pub fn summary_csv(rep: &ScheduleReport) -> String {
    let ix = &rep.indices;
    format!(
        "{SUMMARY_HEADER}\n{},{},{},{},{},{},{}\n",
        opt(rep.trajectory.completion_time, 0),
        num(ix.r1_min, 0),
        num(ix.r2_mw_per_h, 2),
        num(tidy(ix.final_r3()), 2),
        num(ix.final_r4(), 4),
        num(ix.final_r5(), 4),
        num(rep.objective, 4)
    )
}

/// One id per line.
pub fn schedule_txt(seq: &[LineId]) -> String {
    seq.iter().map(|l| format!("{}\n", l.0)).collect()
}

/// Line ids separated by whitespace or commas; `#` starts a comment.
pub fn parse_schedule(text: &str) -> Result<Vec<LineId>, String> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("");
        for tok in body.split(|c: char| c.is_whitespace() || c == ',') {
            if tok.is_empty() {
                continue;
            }
            let id: u32 = tok
                .parse()
                .map_err(|_| format!("line {}: `{tok}` is not a line id", n + 1))?;
            out.push(LineId(id));
        }
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub objective: Option<f64>,
    pub completion_time_min: Option<f64>,
    pub sequence: Vec<u32>,
    pub started_generators: Vec<u32>,
    pub r1res_min: f64,
    pub r2res_mw_per_h: f64,
    pub r3res_final_mw: f64,
    pub r4res_final: f64,
    pub r5res_final: f64,
    pub evaluations: Option<usize>,
}

impl Summary {
    pub fn new(rep: &ScheduleReport, case: &GridCase, evaluations: Option<usize>) -> Self {
        let last = rep.trajectory.steps.last();
        Self {
            objective: rep.objective.is_finite().then_some(rep.objective),
            completion_time_min: rep.trajectory.completion_time,
            sequence: rep.trajectory.sequence.iter().map(|l| l.0).collect(),
            started_generators: last
                .map(|s| s.started_gens(case).iter().map(|g| g.0).collect())
                .unwrap_or_default(),
            r1res_min: rep.indices.r1_min,
            r2res_mw_per_h: rep.indices.r2_mw_per_h,
            r3res_final_mw: rep.indices.final_r3(),
            r4res_final: rep.indices.final_r4(),
            r5res_final: rep.indices.final_r5(),
            evaluations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_text_round_trips() {
        let seq = vec![LineId(5), LineId(1), LineId(2)];
        assert_eq!(parse_schedule(&schedule_txt(&seq)).unwrap(), seq);
        assert_eq!(
            parse_schedule("5, 1 # first\n2\n").unwrap(),
            seq
        );
        assert!(parse_schedule("5 x").unwrap_err().contains("line 1"));
    }

    #[test]
    fn formatting_rules() {
        assert_eq!(opt(None, 2), "NA");
        assert_eq!(num(f64::INFINITY, 2), "NA");
        assert_eq!(num(tidy(-0.0), 2), "0.00");
        assert_eq!(num(624.0, 2), "624.00");
    }
}
