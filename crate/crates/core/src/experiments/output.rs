//! Result emission: the versioned rows CSV, a JSON summary, kind-specific
//! frozen CSVs and a ready-to-render plot script.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{ExperimentOutput, ResultRow};
use crate::config::{ExperimentSpec, SystemConfig};
use crate::error::Result;

/// Emission switches.
#[derive(Debug, Clone, Copy, Default)]
pub struct EmitOptions {
    /// Also write optimizer trace CSVs. Their `ms_elapsed` column carries
    /// wall-clock timing and is not reproducible across runs.
    pub emit_traces: bool,
}

/// Serialize result rows to the versioned CSV schema.
pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from("# nfcovert results v1\n");
    out.push_str("kind,group,sweep_name,sweep_value,seed,metric,value,channel_model,designer\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.kind,
            r.group,
            r.sweep_name,
            r.sweep_value,
            r.seed,
            r.metric,
            r.value,
            r.channel_model,
            r.designer
        ));
    }
    out
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    schema: &'static str,
    kind: &'a str,
    seeds: &'a [u64],
    sweep: Vec<f64>,
    /// `series key -> sweep value (as string) -> {mean, std}`.
    aggregates: BTreeMap<String, BTreeMap<String, Stat>>,
}

#[derive(Serialize, Default, Clone, Copy)]
struct Stat {
    mean: f64,
    std: f64,
}

fn summary_json(rows: &[ResultRow], config: &SystemConfig, spec: &ExperimentSpec) -> String {
    let _ = config;
    let mut aggregates: BTreeMap<String, BTreeMap<String, Stat>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.seed == "mean" || r.seed == "std") {
        let series = format!(
            "{}|{}|{}|{}|{}",
            r.group, r.sweep_name, r.metric, r.channel_model, r.designer
        );
        let point = format!("{}", r.sweep_value);
        let stat = aggregates
            .entry(series)
            .or_default()
            .entry(point)
            .or_default();
        if r.seed == "mean" {
            stat.mean = r.value;
        } else {
            stat.std = r.value;
        }
    }
    let doc = SummaryDoc {
        schema: "nfcovert.summary.v1",
        kind: spec.kind.name(),
        seeds: &spec.seeds,
        sweep: spec.effective_sweep(),
        aggregates,
    };
    serde_json::to_string_pretty(&doc).expect("summary serializes")
}

/// Python plot script rendering the rows CSV; one figure per metric.
fn plot_script(kind: &str) -> String {
    const TEMPLATE: &str = r##"#!/usr/bin/env python3
"""Render figures for a '@KIND@' run from rows.csv (schema: nfcovert results v1)."""
import csv
import collections
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = pathlib.Path(__file__).resolve().parent
with open(here / "rows.csv") as fh:
    reader = csv.DictReader(line for line in fh if not line.startswith("#"))
    rows = list(reader)

series = collections.defaultdict(list)
for r in rows:
    if r["seed"] != "mean":
        continue
    key = (r["metric"], r["group"], r["channel_model"], r["designer"], r["sweep_name"])
    series[key].append((float(r["sweep_value"]), float(r["value"])))

by_metric = collections.defaultdict(list)
for key, pts in series.items():
    by_metric[key[0]].append((key, sorted(pts)))

for metric, entries in sorted(by_metric.items()):
    fig, ax = plt.subplots(figsize=(6, 4))
    for (m, group, cm, designer, sweep_name), pts in entries:
        label = "/".join(x for x in (group, cm, designer) if x != "-")
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=label or m)
        ax.set_xlabel(sweep_name)
    ax.set_ylabel(metric)
    ax.set_title("@KIND@: " + metric)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(here / ("@KIND@_" + metric + ".png"), dpi=150)
    plt.close(fig)
print("figures written next to rows.csv")
"##;
    TEMPLATE.replace("@KIND@", kind)
}

/// Write every output file for one experiment run; returns the paths.
///
/// Outputs are byte-stable given identical inputs, except the optional
/// optimizer traces (opt-in via [`EmitOptions::emit_traces`]).
pub fn emit_outputs(
    output: &ExperimentOutput,
    config: &SystemConfig,
    spec: &ExperimentSpec,
    out_dir: &Path,
    options: &EmitOptions,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let rows_path = out_dir.join("rows.csv");
    std::fs::write(&rows_path, rows_to_csv(&output.rows))?;
    written.push(rows_path);

    let summary_path = out_dir.join("summary.json");
    std::fs::write(&summary_path, summary_json(&output.rows, config, spec))?;
    written.push(summary_path);

    let plot_path = out_dir.join("plot.py");
    std::fs::write(&plot_path, plot_script(spec.kind.name()))?;
    written.push(plot_path);

    for (name, body) in &output.extra_csv {
        let path = out_dir.join(name);
        std::fs::write(&path, body)?;
        written.push(path);
    }
    if options.emit_traces {
        for (name, body) in &output.traces {
            let path = out_dir.join(name);
            std::fs::write(&path, body)?;
            written.push(path);
        }
    }
    Ok(written)
}
