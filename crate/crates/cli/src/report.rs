//! Boxplot-statistics aggregation over metrics.csv: fix one parameter
//! value and marginalize over everything else.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use ncmbeam_core::metrics::boxplot_stats;

const GROUPABLE: [&str; 6] = ["t60_ms", "d_x_m", "d_p_m", "sir_db", "scr_db", "theta_b_deg"];
const METRIC_COLUMNS: [&str; 7] = [
    "angle_err_deg",
    "gsnr_db",
    "gsir_db",
    "isrf_db",
    "dsrf_db",
    "df_db",
    "wng_db",
];

pub fn report(metrics_path: &Path, group_by: &str, out: Option<&Path>) -> Result<String> {
    if !GROUPABLE.contains(&group_by) {
        bail!(
            "unknown parameter {group_by:?}; expected one of {}",
            GROUPABLE.join(", ")
        );
    }
    let text = std::fs::read_to_string(metrics_path)
        .with_context(|| format!("reading {}", metrics_path.display()))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .context("metrics csv is empty")?
        .split(',')
        .collect();
    let col = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| *h == name)
            .with_context(|| format!("column {name} missing from metrics csv"))
    };
    let group_col = col(group_by)?;
    let method_col = col("method")?;
    let metric_cols: Vec<(usize, &str)> = METRIC_COLUMNS
        .iter()
        .map(|m| col(m).map(|i| (i, *m)))
        .collect::<Result<_>>()?;

    // (group value, method, metric) -> samples. BTreeMap keeps the output
    // ordering deterministic.
    let mut groups: BTreeMap<(String, String, &str), Vec<f64>> = BTreeMap::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            bail!("malformed metrics row: {line}");
        }
        let value = fields[group_col].to_string();
        let method = fields[method_col].to_string();
        for &(idx, name) in &metric_cols {
            if fields[idx].is_empty() {
                continue;
            }
            let v: f64 = fields[idx]
                .parse()
                .with_context(|| format!("bad number {:?} in column {name}", fields[idx]))?;
            groups
                .entry((value.clone(), method.clone(), name))
                .or_default()
                .push(v);
        }
    }
    if groups.is_empty() {
        bail!("no usable rows in {}", metrics_path.display());
    }

    let mut out_lines = vec![format!(
        "parameter,value,method,metric,count,p9,p25,p50,p75,p91"
    )];
    for ((value, method, metric), samples) in &groups {
        let stats = boxplot_stats(samples).expect("non-empty group");
        out_lines.push(format!(
            "{group_by},{value},{method},{metric},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            samples.len(),
            stats.p9,
            stats.p25,
            stats.p50,
            stats.p75,
            stats.p91
        ));
    }
    let rendered = out_lines.join("\n") + "\n";
    if let Some(path) = out {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, &rendered)?;
        std::fs::rename(&tmp, path)?;
    }
    Ok(rendered)
}
