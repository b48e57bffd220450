use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{HarnessError, SweepResult};

pub const SUMMARY_HEADER: &str =
    "user\tdeadline\tbudget\tseed\tstrategy\tcompleted\tspend\ttermination_time";

/// Summary table: one row per user per successful cell. `deadline` is
/// relative to the user's start and `budget` is in G$, both resolved from
/// the configured constraint. In multi-user sweeps the user column reads
/// `User3/40` (user 3 of a 40-user cell).
pub fn summary_table(result: &SweepResult) -> String {
    let multi = result.cells.iter().any(|c| c.key.users > 1);
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for cell in &result.cells {
        let Ok(data) = &cell.outcome else { continue };
        for r in &data.results {
            let user = if multi {
                format!("{}/{}", r.user, cell.key.users)
            } else {
                r.user.clone()
            };
            let _ = writeln!(
                out,
                "{user}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.deadline - r.start_time,
                r.budget,
                cell.key.seed,
                r.strategy,
                r.completed,
                r.total_spend,
                r.termination_time,
            );
        }
    }
    out
}

/// Per-resource committed/processed/spend series of one cell.
pub fn trace_table(data: &super::CellData) -> String {
    let mut out = String::from("user\ttime\tresource\tcommitted\tprocessed\tspend\n");
    for r in &data.results {
        for row in &r.trace {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                r.user, row.time, row.resource, row.committed, row.processed, row.spend
            );
        }
    }
    out
}

pub fn trace_file_name(index: usize) -> String {
    format!("cell-{index:05}.tsv")
}

/// Writes `summary.tsv`, one `traces/cell-NNNNN.tsv` per successful cell
/// and, if any cell failed, `failures.tsv`. Returns the paths written.
pub fn emit_report(result: &SweepResult, out_dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| HarnessError::Io { path, source }
    };
    let traces = out_dir.join("traces");
    std::fs::create_dir_all(&traces).map_err(io(&traces))?;
    let mut written = Vec::new();
    let summary = out_dir.join("summary.tsv");
    std::fs::write(&summary, summary_table(result)).map_err(io(&summary))?;
    written.push(summary);
    for cell in &result.cells {
        if let Ok(data) = &cell.outcome {
            let p = traces.join(trace_file_name(cell.key.index));
            std::fs::write(&p, trace_table(data)).map_err(io(&p))?;
            written.push(p);
        }
    }
    if !result.all_ok() {
        let mut text = String::from("cell\tusers\tstrategy\tdeadline\tbudget\tseed\terror\n");
        for (k, e) in result.failures() {
            let _ = writeln!(
                text,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                k.index,
                k.users,
                k.strategy,
                k.deadline,
                k.budget,
                k.seed,
                e.replace(['\t', '\n'], " ")
            );
        }
        let p = out_dir.join("failures.tsv");
        std::fs::write(&p, text).map_err(io(&p))?;
        written.push(p);
    }
    Ok(written)
}
