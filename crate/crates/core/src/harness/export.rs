//! Result tables as CSV, JSON and plain-text summaries.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

use super::engine::EpisodeMetrics;
use super::experiment::ResultTable;

pub const CSV_HEADER: [&str; 10] = [
    "space",
    "preset",
    "n_users",
    "steering",
    "reset_ctrl",
    "trials",
    "mean_resets",
    "sd_resets",
    "mean_mdbr",
    "sd_mdbr",
];

#[derive(Serialize)]
struct CsvRow<'a> {
    space: String,
    preset: &'a str,
    n_users: usize,
    steering: &'a str,
    reset_ctrl: &'a str,
    trials: usize,
    mean_resets: String,
    sd_resets: String,
    mean_mdbr: String,
    sd_mdbr: String,
}

fn fixed(x: f64) -> String {
    format!("{x:.6}")
}

/// One row per successful cell; values use six decimals so output is
/// byte-stable.
pub fn write_csv<W: Write>(table: &ResultTable, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for c in table.cells.iter().filter(|c| c.is_ok()) {
        w.serialize(CsvRow {
            space: c.spec.space_label(),
            preset: c.spec.preset.name(),
            n_users: c.spec.n_users,
            steering: c.spec.steering.name(),
            reset_ctrl: c.spec.reset.name(),
            trials: c.trials,
            mean_resets: fixed(c.mean_resets),
            sd_resets: fixed(c.sd_resets),
            mean_mdbr: fixed(c.mean_mdbr),
            sd_mdbr: fixed(c.sd_mdbr),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Per-episode metrics of a single scenario run.
pub fn write_episode_csv<W: Write>(metrics: &[EpisodeMetrics], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "trial",
        "total_resets",
        "boundary_resets",
        "user_resets",
        "mean_mdbr",
        "frames",
        "truncated",
    ])?;
    for (t, m) in metrics.iter().enumerate() {
        w.write_record([
            t.to_string(),
            m.total_resets.to_string(),
            m.boundary_resets.to_string(),
            m.user_resets.to_string(),
            fixed(m.mean_mdbr),
            m.frames.to_string(),
            m.truncated.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(table: &ResultTable, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, table)?;
    Ok(())
}

pub fn read_json(path: impl AsRef<Path>) -> Result<ResultTable> {
    let f = std::fs::File::open(path)?;
    Ok(serde_json::from_reader(std::io::BufReader::new(f))?)
}

/// Writes CSV or JSON depending on the extension (`.json` → JSON).
pub fn export_results(table: &ResultTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        write_json(table, f)
    } else {
        write_csv(table, f)
    }
}

/// Human-readable table with the pairwise tests.
pub fn summary(table: &ResultTable) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{}: {} cells, {} trials each, {} waypoints per user",
        table.config.name,
        table.cells.len(),
        table.config.trials,
        table.config.path_waypoints
    );
    let _ = writeln!(
        s,
        "{:<7} {:<12} {:>2} {:<4} {:<11} {:>10} {:>9} {:>9}",
        "space", "preset", "n", "steer", "reset", "resets", "sd", "MDbR"
    );
    for c in &table.cells {
        match &c.error {
            None => {
                let _ = writeln!(
                    s,
                    "{:<7} {:<12} {:>2} {:<4} {:<11} {:>10.2} {:>9.2} {:>9.2}",
                    c.spec.space_label(),
                    c.spec.preset.name(),
                    c.spec.n_users,
                    c.spec.steering.name(),
                    c.spec.reset.name(),
                    c.mean_resets,
                    c.sd_resets,
                    c.mean_mdbr
                );
            }
            Some(e) => {
                let _ = writeln!(
                    s,
                    "{:<7} {:<12} {:>2} {:<4} {:<11} failed: {e}",
                    c.spec.space_label(),
                    c.spec.preset.name(),
                    c.spec.n_users,
                    c.spec.steering.name(),
                    c.spec.reset.name()
                );
            }
        }
    }
    for t in &table.tests {
        let _ = writeln!(
            s,
            "{} {} n={} {}: {} {:.2} vs {} {:.2}, U={:.1}, p={:.4}",
            t.space,
            t.preset.name(),
            t.n_users,
            t.steering.name(),
            t.candidate.name(),
            t.candidate_mean,
            t.baseline.name(),
            t.baseline_mean,
            t.u,
            t.p
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Preset, ResetMode, SteeringKind};
    use crate::harness::experiment::{run_experiment, ExperimentConfig};

    fn table() -> ResultTable {
        let e = ExperimentConfig::grid("t", &[10.0], &[Preset::Circle], &[2], &[SteeringKind::Ns], &[ResetMode::MrcGreedy])
            .with_trials(3)
            .with_waypoints(8)
            .with_seed(2);
        run_experiment(&e, None).unwrap()
    }

    #[test]
    fn csv_header_is_exact() {
        let mut buf = Vec::new();
        write_csv(&table(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(
            first,
            "space,preset,n_users,steering,reset_ctrl,trials,mean_resets,sd_resets,mean_mdbr,sd_mdbr"
        );
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(1).unwrap().starts_with("10x10,circle,2,NS,R2C,3,"));
    }

    #[test]
    fn json_round_trips_with_constants() {
        let t = table();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        export_results(&t, &path).unwrap();
        let back = read_json(&path).unwrap();
        assert_eq!(back, t);
        let raw: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let reset = &raw["constants"]["params"]["reset"];
        assert_eq!(reset["user_radius"], 0.3);
        assert_eq!(reset["user_separation"], 0.6);
        let w = &raw["constants"]["params"]["reward"];
        assert_eq!((w["reset"].as_f64(), w["distance"].as_f64(), w["area"].as_f64()), (Some(1.0), Some(0.1), Some(1.0)));
    }

    #[test]
    fn unwritable_path_is_an_error() {
        assert!(export_results(&table(), "/nonexistent-dir/x.csv").is_err());
    }

    #[test]
    fn summary_lists_cells_and_tests() {
        let s = summary(&table());
        assert!(s.contains("MRC_GREEDY"));
        assert!(s.contains("p="));
    }
}
