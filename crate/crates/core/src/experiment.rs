//! The ensemble-size experiment: how verification outcomes change as more
//! classifiers join the ensemble.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::classifier::{halfplane_truth, unit, Classifier};
use crate::ensemble::{intersect_knowledge, VerificationOutcome};
use crate::formula::ClassLabel;
use crate::knowledge::{ckc_with, InputPoint, KnowledgeError, PerturbationSpec};
use crate::mnist::LabeledDataset;
use crate::par::Execution;

pub const CSV_HEADER: &str =
    "agents,verified_correct,verified_wrong,unverified,inconsistent,error_rate,truth_rate,error_truth_ratio";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("no agent counts given")]
    NoAgentCounts,
    #[error("agent counts must be positive and strictly ascending")]
    UnsortedAgentCounts,
    #[error("{requested} agents requested but only {available} nets supplied")]
    NotEnoughNets { requested: usize, available: usize },
    #[error(transparent)]
    Spec(KnowledgeError),
    #[error("net {net} on item {item}: {source}")]
    ClassifierFailure {
        net: usize,
        item: usize,
        #[source]
        source: KnowledgeError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OutcomeCounts {
    pub verified_correct: usize,
    pub verified_wrong: usize,
    pub unverified: usize,
    pub inconsistent: usize,
}

impl OutcomeCounts {
    pub fn total(&self) -> usize {
        self.verified_correct + self.verified_wrong + self.unverified + self.inconsistent
    }

    fn record(&mut self, outcome: &VerificationOutcome, truth: &ClassLabel) {
        match outcome {
            VerificationOutcome::Verified(c) if c == truth => self.verified_correct += 1,
            VerificationOutcome::Verified(_) => self.verified_wrong += 1,
            VerificationOutcome::Candidates(_) => self.unverified += 1,
            VerificationOutcome::Inconsistent => self.inconsistent += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub agents: usize,
    pub counts: OutcomeCounts,
    pub error_rate: f64,
    pub truth_rate: f64,
    pub error_truth_ratio: f64,
}

impl ReportRow {
    fn new(agents: usize, counts: OutcomeCounts, dataset_size: usize) -> Self {
        let rate = |n: usize| if dataset_size == 0 { 0.0 } else { n as f64 / dataset_size as f64 };
        let error_rate = rate(counts.verified_wrong);
        let truth_rate = rate(counts.verified_correct);
        let error_truth_ratio = if truth_rate == 0.0 { 0.0 } else { error_rate / truth_rate };
        ReportRow {
            agents,
            counts,
            error_rate,
            truth_rate,
            error_truth_ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
    pub dataset_size: usize,
    pub perturbation: String,
    pub seed: u64,
    pub net_fingerprints: Vec<String>,
}

impl ExperimentReport {
    /// Configuration as `#` comment lines, then the header and one row per
    /// agent count.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# perturbation: {}", self.perturbation);
        let _ = writeln!(out, "# seed: {}", self.seed);
        let _ = writeln!(out, "# rates: counts / dataset size ({})", self.dataset_size);
        for (i, fp) in self.net_fingerprints.iter().enumerate() {
            let _ = writeln!(out, "# net {i}: {fp}");
        }
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let c = &r.counts;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.6},{:.6},{:.6}",
                r.agents,
                c.verified_correct,
                c.verified_wrong,
                c.unverified,
                c.inconsistent,
                r.error_rate,
                r.truth_rate,
                r.error_truth_ratio
            );
        }
        out
    }
}

fn check_counts(agent_counts: &[usize], available: usize) -> Result<(), ExperimentError> {
    let Some(&last) = agent_counts.last() else {
        return Err(ExperimentError::NoAgentCounts);
    };
    if agent_counts[0] == 0 || agent_counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ExperimentError::UnsortedAgentCounts);
    }
    if last > available {
        return Err(ExperimentError::NotEnoughNets {
            requested: last,
            available,
        });
    }
    Ok(())
}

/// Outcome of each prefix size in `agent_counts` for one item.
fn item_outcomes<C: Classifier>(
    nets: &[C],
    universe: &BTreeSet<ClassLabel>,
    item: usize,
    x0: &InputPoint,
    spec: &PerturbationSpec,
    agent_counts: &[usize],
) -> Result<Vec<VerificationOutcome>, ExperimentError> {
    let mut outcomes = Vec::with_capacity(agent_counts.len());
    let mut surviving = universe.clone();
    let mut consumed = 0;
    for &k in agent_counts {
        // once empty, every larger prefix is empty too
        while consumed < k && !surviving.is_empty() {
            let ks = ckc_with(Execution::Sequential, &nets[consumed], x0, spec).map_err(|source| {
                ExperimentError::ClassifierFailure {
                    net: consumed,
                    item,
                    source,
                }
            })?;
            surviving = intersect_knowledge(&surviving, [&ks.classes]).0;
            consumed += 1;
        }
        outcomes.push(VerificationOutcome::from_set(&surviving));
    }
    Ok(outcomes)
}

/// Runs the aggregation with the first `k` nets for each `k` in
/// `agent_counts` over every dataset item. The generators are deterministic,
/// so `seed` is only echoed in the report.
pub fn run_experiment<C: Classifier>(
    nets: &[C],
    dataset: &LabeledDataset,
    spec: &PerturbationSpec,
    agent_counts: &[usize],
    seed: u64,
) -> Result<ExperimentReport, ExperimentError> {
    run_experiment_with(Execution::default(), nets, dataset, spec, agent_counts, seed)
}

pub fn run_experiment_with<C: Classifier>(
    exec: Execution,
    nets: &[C],
    dataset: &LabeledDataset,
    spec: &PerturbationSpec,
    agent_counts: &[usize],
    seed: u64,
) -> Result<ExperimentReport, ExperimentError> {
    check_counts(agent_counts, nets.len())?;
    spec.validate().map_err(ExperimentError::Spec)?;
    let used = &nets[..*agent_counts.last().unwrap()];
    let universe: BTreeSet<ClassLabel> = used
        .iter()
        .flat_map(|n| n.class_labels())
        .chain(dataset.items().iter().map(|(_, l)| l.clone()))
        .collect();

    let per_item = exec.try_map(dataset.items(), |i, (x0, _)| {
        item_outcomes(used, &universe, i, x0, spec, agent_counts)
    })?;

    let mut counts = vec![OutcomeCounts::default(); agent_counts.len()];
    for (outcomes, (_, truth)) in per_item.iter().zip(dataset.items()) {
        for (c, o) in counts.iter_mut().zip(outcomes) {
            c.record(o, truth);
        }
    }
    let rows = agent_counts
        .iter()
        .zip(counts)
        .map(|(&k, c)| ReportRow::new(k, c, dataset.len()))
        .collect();
    Ok(ExperimentReport {
        rows,
        dataset_size: dataset.len(),
        perturbation: spec.to_string(),
        seed,
        net_fingerprints: used.iter().map(|n| n.fingerprint()).collect(),
    })
}

/// `n` points drawn uniformly from [-1, 1]² and labelled by
/// [`halfplane_truth`].
pub fn halfplane_dataset(n: usize, seed: u64) -> LabeledDataset {
    let mut s = seed;
    let items = (0..n)
        .map(|_| {
            let p = vec![unit(&mut s) * 2.0 - 1.0, unit(&mut s) * 2.0 - 1.0];
            let label = halfplane_truth(&p);
            (InputPoint::new(p).expect("finite"), label)
        })
        .collect();
    LabeledDataset::new(items, None).expect("uniform dimension")
}
