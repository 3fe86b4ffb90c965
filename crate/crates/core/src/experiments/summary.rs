use std::collections::BTreeMap;
use std::fmt;

use super::{BenchRow, ExperimentError};
use crate::factor_graph::GRID_RNG_NAME;
use crate::schedulers::Schedule;

/// Aggregates of one schedule; message counts and KL are over converged runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleSummary {
    pub schedule: Schedule,
    pub runs: usize,
    pub converged: usize,
    pub mean_computed: Option<f64>,
    pub median_computed: Option<f64>,
    pub mean_performed: Option<f64>,
    pub median_performed: Option<f64>,
    /// Mean of per-run wasted fractions; only for schedules that waste updates.
    pub wasted_fraction: Option<f64>,
    pub mean_kl: Option<f64>,
}

impl ScheduleSummary {
    pub fn convergence_rate(&self) -> f64 {
        self.converged as f64 / self.runs as f64
    }
}

/// Head-to-head over the instances where both schedules converged.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseComparison {
    pub first: Schedule,
    pub second: Schedule,
    pub joint: usize,
    /// Instances where `first` computed strictly fewer messages.
    pub first_wins: usize,
    pub second_wins: usize,
    /// `mean(first computed) / mean(second computed)`.
    pub computed_ratio: Option<f64>,
    pub mean_abs_kl_diff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub instances: usize,
    pub seeds: (u64, u64),
    pub schedules: Vec<ScheduleSummary>,
    pub pairs: Vec<PairwiseComparison>,
}

impl Summary {
    pub fn schedule(&self, schedule: Schedule) -> Option<&ScheduleSummary> {
        self.schedules.iter().find(|s| s.schedule == schedule)
    }

    /// The comparison of `first` against `second`, in either stored order.
    pub fn pair(&self, first: Schedule, second: Schedule) -> Option<PairwiseComparison> {
        self.pairs.iter().find_map(|p| {
            if (p.first, p.second) == (first, second) {
                Some(p.clone())
            } else if (p.first, p.second) == (second, first) {
                Some(PairwiseComparison {
                    first,
                    second,
                    joint: p.joint,
                    first_wins: p.second_wins,
                    second_wins: p.first_wins,
                    computed_ratio: p.computed_ratio.map(|r| 1.0 / r),
                    mean_abs_kl_diff: p.mean_abs_kl_diff,
                })
            } else {
                None
            }
        })
    }
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        0.5 * (v[mid - 1] + v[mid])
    } else {
        v[mid]
    })
}

pub fn summarize(rows: &[BenchRow]) -> Result<Summary, ExperimentError> {
    if rows.is_empty() {
        return Err(ExperimentError::EmptyInput);
    }
    let mut order: Vec<Schedule> = Vec::new();
    let mut by_seed: BTreeMap<u64, BTreeMap<Schedule, &BenchRow>> = BTreeMap::new();
    for row in rows {
        if !order.contains(&row.schedule) {
            order.push(row.schedule);
        }
        by_seed.entry(row.seed).or_default().insert(row.schedule, row);
    }

    let schedules = order
        .iter()
        .map(|&schedule| {
            let runs: Vec<&BenchRow> = rows.iter().filter(|r| r.schedule == schedule).collect();
            let ok: Vec<&BenchRow> = runs.iter().copied().filter(|r| r.converged).collect();
            let computed: Vec<f64> = ok.iter().map(|r| r.messages_computed as f64).collect();
            let performed: Vec<f64> = ok.iter().map(|r| r.messages_performed as f64).collect();
            let wasted: Vec<f64> = ok
                .iter()
                .filter(|r| r.messages_computed > 0)
                .map(|r| r.wasted as f64 / r.messages_computed as f64)
                .collect();
            let kls: Vec<f64> = ok.iter().filter_map(|r| r.avg_kl).collect();
            ScheduleSummary {
                schedule,
                runs: runs.len(),
                converged: ok.len(),
                mean_computed: mean(&computed),
                median_computed: median(&computed),
                mean_performed: mean(&performed),
                median_performed: median(&performed),
                wasted_fraction: if schedule == Schedule::Rbp1l {
                    mean(&wasted)
                } else {
                    None
                },
                mean_kl: mean(&kls),
            }
        })
        .collect();

    let mut pairs = Vec::new();
    for (k, &first) in order.iter().enumerate() {
        for &second in &order[k + 1..] {
            let joint: Vec<(&BenchRow, &BenchRow)> = by_seed
                .values()
                .filter_map(|runs| Some((*runs.get(&first)?, *runs.get(&second)?)))
                .filter(|(a, b)| a.converged && b.converged)
                .collect();
            let a: Vec<f64> = joint.iter().map(|(a, _)| a.messages_computed as f64).collect();
            let b: Vec<f64> = joint.iter().map(|(_, b)| b.messages_computed as f64).collect();
            let kl_diffs: Vec<f64> = joint
                .iter()
                .filter_map(|(a, b)| Some((a.avg_kl? - b.avg_kl?).abs()))
                .collect();
            pairs.push(PairwiseComparison {
                first,
                second,
                joint: joint.len(),
                first_wins: joint
                    .iter()
                    .filter(|(a, b)| a.messages_computed < b.messages_computed)
                    .count(),
                second_wins: joint
                    .iter()
                    .filter(|(a, b)| b.messages_computed < a.messages_computed)
                    .count(),
                computed_ratio: match (mean(&a), mean(&b)) {
                    (Some(x), Some(y)) if y > 0.0 => Some(x / y),
                    _ => None,
                },
                mean_abs_kl_diff: mean(&kl_diffs),
            });
        }
    }

    let seeds = (*by_seed.keys().next().unwrap(), *by_seed.keys().next_back().unwrap());
    Ok(Summary {
        instances: by_seed.len(),
        seeds,
        schedules,
        pairs,
    })
}

fn opt(v: Option<f64>, precision: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.precision$}"))
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} instances, seeds {}..={} ({})",
            self.instances, self.seeds.0, self.seeds.1, GRID_RNG_NAME
        )?;
        writeln!(
            f,
            "{:<12} {:>9} {:>12} {:>12} {:>12} {:>12} {:>8} {:>10}",
            "schedule", "converged", "mean_comp", "median_comp", "mean_perf", "median_perf", "wasted", "mean_kl"
        )?;
        for s in &self.schedules {
            writeln!(
                f,
                "{:<12} {:>9} {:>12} {:>12} {:>12} {:>12} {:>8} {:>10}",
                s.schedule.name(),
                format!("{}/{}", s.converged, s.runs),
                opt(s.mean_computed, 1),
                opt(s.median_computed, 1),
                opt(s.mean_performed, 1),
                opt(s.median_performed, 1),
                opt(s.wasted_fraction, 3),
                opt(s.mean_kl, 5),
            )?;
        }
        for p in &self.pairs {
            writeln!(
                f,
                "{} vs {}: joint {}, wins {}/{}, computed ratio {}, mean |kl diff| {}",
                p.first.name(),
                p.second.name(),
                p.joint,
                p.first_wins,
                p.second_wins,
                opt(p.computed_ratio, 3),
                opt(p.mean_abs_kl_diff, 5),
            )?;
        }
        Ok(())
    }
}
