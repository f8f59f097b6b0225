//! Batch experiment runner.
//!
//! Each figure family is one [`Experiment`] behind the registry, selected by
//! kind name at runtime. Grid points and seeds are dispatched to a rayon
//! pool and reduced in deterministic `(grid, seed)` order, so identical
//! specs and seeds produce byte-identical result files.

mod kinds;
mod output;

pub use output::{emit_outputs, rows_to_csv, EmitOptions};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentKind, ExperimentSpec, SystemConfig};
use crate::error::Result;

/// One measurement row.
///
/// `seed` is a string so aggregate rows (`mean`, `std`) share the schema;
/// `group` distinguishes curves that share a sweep axis (e.g. different RIS
/// sizes in a convergence plot); `channel_model` and `designer` carry the
/// component flags (near-field vs far-field baseline, optimized vs baseline).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub kind: String,
    pub group: String,
    pub sweep_name: String,
    pub sweep_value: f64,
    pub seed: String,
    pub metric: String,
    pub value: f64,
    pub channel_model: String,
    pub designer: String,
}

impl ResultRow {
    fn is_aggregate(&self) -> bool {
        self.seed == "mean" || self.seed == "std"
    }
}

/// Everything one experiment run produces.
#[derive(Debug, Clone, Default)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    /// Kind-specific CSVs with frozen schemas: `(file name, content)`.
    pub extra_csv: Vec<(String, String)>,
    /// Optimizer traces (wall-clock timing inside, not reproducible):
    /// `(file name, content)`. Written only on request.
    pub traces: Vec<(String, String)>,
}

/// Borrowed inputs for one experiment run.
pub struct RunContext<'a> {
    pub config: &'a SystemConfig,
    pub spec: &'a ExperimentSpec,
}

/// A named experiment family.
pub trait Experiment: Sync {
    fn kind(&self) -> ExperimentKind;
    fn run(&self, ctx: &RunContext) -> Result<ExperimentOutput>;
}

/// All registered experiment families, in reporting order.
pub fn registry() -> &'static [&'static dyn Experiment] {
    &[
        &kinds::Convergence,
        &kinds::RateVsDistance,
        &kinds::RateVsN,
        &kinds::RateVsPower,
        &kinds::DepVsThreshold,
        &kinds::OpVsPower,
    ]
}

/// Look an experiment up by its kind.
pub fn by_kind(kind: ExperimentKind) -> &'static dyn Experiment {
    registry()
        .iter()
        .copied()
        .find(|e| e.kind() == kind)
        .expect("every kind is registered")
}

/// Validate and run one experiment, appending seed aggregates.
pub fn run_experiment(config: &SystemConfig, spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate(config)?;
    let ctx = RunContext { config, spec };
    let mut out = by_kind(spec.kind).run(&ctx)?;
    append_aggregates(&mut out.rows);
    Ok(out)
}

/// Run a fallible job per item in parallel, preserving item order.
pub(crate) fn par_map_ordered<T, F>(items: &[T], job: F) -> Result<Vec<Vec<ResultRow>>>
where
    T: Sync,
    F: Fn(&T) -> Result<Vec<ResultRow>> + Sync + Send,
{
    items.par_iter().map(job).collect()
}

/// Append `mean` and `std` rows over seeds for every measured series.
///
/// Aggregation is order-independent over seeds: rows group by everything but
/// the seed, and the outputs are emitted in sorted key order.
pub(crate) fn append_aggregates(rows: &mut Vec<ResultRow>) {
    use std::collections::BTreeMap;
    type Key = (String, String, String, u64, String, String, String);
    let mut groups: BTreeMap<Key, Vec<f64>> = BTreeMap::new();
    for row in rows.iter().filter(|r| !r.is_aggregate()) {
        let key = (
            row.kind.clone(),
            row.group.clone(),
            row.sweep_name.clone(),
            row.sweep_value.to_bits(),
            row.metric.clone(),
            row.channel_model.clone(),
            row.designer.clone(),
        );
        groups.entry(key).or_default().push(row.value);
    }
    for ((kind, group, sweep_name, bits, metric, cm, designer), values) in groups {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        for (label, value) in [("mean", mean), ("std", var.sqrt())] {
            rows.push(ResultRow {
                kind: kind.clone(),
                group: group.clone(),
                sweep_name: sweep_name.clone(),
                sweep_value: f64::from_bits(bits),
                seed: label.into(),
                metric: metric.clone(),
                value,
                channel_model: cm.clone(),
                designer: designer.clone(),
            });
        }
    }
}
