//! Report serialization.
//!
//! CSV rows carry a `scope` column: `overall` for the summary, `fraction` for
//! the per-fraction breakdown and `problem` for individual problems. Columns
//! that do not apply to a scope are left empty. JSON lines hold one complete
//! report per line.

use std::io::{BufRead, Write};

use serde::Serialize;
use thiserror::Error;

use super::metrics::{MetricsReport, Stat};
use super::GridSearchReport;

named_enum!(
    /// Output encoding of reports.
    ReportFormat { Csv => "csv", JsonLines => "json-lines", Text => "text" }
);

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
}

pub const CSV_COLUMNS: [&str; 24] = [
    "scope",
    "name",
    "mode",
    "depth",
    "k",
    "merge",
    "prune",
    "fraction",
    "n",
    "ppv",
    "ppv_sd",
    "ppv_hw",
    "acc",
    "acc_sd",
    "acc_hw",
    "spr",
    "spr_sd",
    "spr_hw",
    "pc",
    "online_s",
    "online_sd",
    "offline_s",
    "offline_sd",
    "violations",
];

pub const GRID_CSV_COLUMNS: [&str; 9] = [
    "mode",
    "depth",
    "k",
    "merge",
    "prune",
    "ppv",
    "acc",
    "spr",
    "violations",
];

#[derive(Serialize, Default)]
struct Row<'a> {
    scope: &'a str,
    name: &'a str,
    mode: String,
    depth: usize,
    k: usize,
    merge: f64,
    prune: f64,
    fraction: Option<f64>,
    n: usize,
    ppv: f64,
    ppv_sd: Option<f64>,
    ppv_hw: Option<f64>,
    acc: f64,
    acc_sd: Option<f64>,
    acc_hw: Option<f64>,
    spr: f64,
    spr_sd: Option<f64>,
    spr_hw: Option<f64>,
    pc: Option<f64>,
    online_s: Option<f64>,
    online_sd: Option<f64>,
    offline_s: Option<f64>,
    offline_sd: Option<f64>,
    violations: usize,
}

fn rows(r: &MetricsReport) -> Vec<Row<'_>> {
    let s = &r.setting;
    let base = || Row {
        mode: s.mode.to_string(),
        depth: s.depth,
        k: s.k,
        merge: s.merge,
        prune: s.prune,
        ..Row::default()
    };
    let mut out = vec![Row {
        scope: "overall",
        n: r.ppv.n,
        ppv: r.ppv.mean,
        ppv_sd: Some(r.ppv.sd),
        ppv_hw: Some(r.ppv.half_width),
        acc: r.acc.mean,
        acc_sd: Some(r.acc.sd),
        acc_hw: Some(r.acc.half_width),
        spr: r.spr.mean,
        spr_sd: Some(r.spr.sd),
        spr_hw: Some(r.spr.half_width),
        pc: Some(r.pc.mean),
        online_s: Some(r.online_secs.mean),
        online_sd: Some(r.online_secs.sd),
        offline_s: Some(r.offline_secs.mean),
        offline_sd: Some(r.offline_secs.sd),
        violations: r.violation_count(),
        ..base()
    }];
    for f in &r.per_fraction {
        out.push(Row {
            scope: "fraction",
            fraction: Some(f.fraction),
            n: f.ppv.n,
            ppv: f.ppv.mean,
            ppv_sd: Some(f.ppv.sd),
            ppv_hw: Some(f.ppv.half_width),
            acc: f.acc.mean,
            acc_sd: Some(f.acc.sd),
            acc_hw: Some(f.acc.half_width),
            spr: f.spr.mean,
            spr_sd: Some(f.spr.sd),
            spr_hw: Some(f.spr.half_width),
            ..base()
        });
    }
    for p in &r.problems {
        out.push(Row {
            scope: "problem",
            name: &p.name,
            n: 1,
            ppv: p.ppv,
            acc: p.acc,
            spr: p.spr,
            pc: Some(p.pc as f64),
            online_s: Some(p.online_secs),
            offline_s: Some(p.offline_secs),
            violations: p.violations.len(),
            ..base()
        });
    }
    out
}

fn pm(s: &Stat, precision: usize) -> String {
    format!("{:.p$} ± {:.p$}", s.mean, s.sd, p = precision)
}

fn text_table<W: Write>(r: &MetricsReport, w: &mut W) -> std::io::Result<()> {
    let s = &r.setting;
    writeln!(
        w,
        "mode {}  depth {}  K {}  merge {}  prune {}  problems {}",
        s.mode, s.depth, s.k, s.merge, s.prune, r.ppv.n
    )?;
    writeln!(
        w,
        "{:<12} {:>16} {:>16} {:>14} {:>12} {:>22} {:>22}",
        "", "PPV (%)", "ACC (%)", "SPR", "PC", "Online (s)", "Offline (s)"
    )?;
    writeln!(
        w,
        "{:<12} {:>16} {:>16} {:>14} {:>12} {:>22} {:>22}",
        "all",
        pm(&r.ppv, 1),
        pm(&r.acc, 1),
        pm(&r.spr, 2),
        pm(&r.pc, 1),
        format!("{:.2e} ± {:.1e}", r.online_secs.mean, r.online_secs.sd),
        format!("{:.2e} ± {:.1e}", r.offline_secs.mean, r.offline_secs.sd),
    )?;
    writeln!(w)?;
    writeln!(
        w,
        "{:<12} {:>16} {:>16} {:>14} {:>10}",
        "fraction", "PPV (%)", "ACC (%)", "SPR", "±95% PPV"
    )?;
    for f in &r.per_fraction {
        writeln!(
            w,
            "{:<12.4} {:>16} {:>16} {:>14} {:>10.2}",
            f.fraction,
            pm(&f.ppv, 1),
            pm(&f.acc, 1),
            pm(&f.spr, 2),
            f.ppv.half_width
        )?;
    }
    writeln!(w)?;
    writeln!(
        w,
        "{:<20} {:>8} {:>8} {:>6} {:>4} {:>10} {:>10} {:>6} {:>8}",
        "problem", "PPV", "ACC", "SPR", "PC", "online", "offline", "nodes", "branches"
    )?;
    for p in &r.problems {
        writeln!(
            w,
            "{:<20} {:>8.1} {:>8.1} {:>6.2} {:>4} {:>10.2e} {:>10.2e} {:>6} {:>8}",
            p.name,
            p.ppv,
            p.acc,
            p.spr,
            p.pc,
            p.online_secs,
            p.offline_secs,
            p.node_count,
            p.branch_count
        )?;
        for v in &p.violations {
            writeln!(w, "  warning: {v}")?;
        }
    }
    Ok(())
}

/// Writes one report; see the module docs for the layouts.
pub fn emit_report<W: Write>(
    report: &MetricsReport,
    format: ReportFormat,
    mut w: W,
) -> Result<(), ReportError> {
    match format {
        ReportFormat::Csv => {
            let mut c = csv::Writer::from_writer(&mut w);
            for row in rows(report) {
                c.serialize(row)?;
            }
            c.flush()?;
        }
        ReportFormat::JsonLines => {
            serde_json::to_writer(&mut w, report)
                .map_err(|e| ReportError::Json { line: 1, source: e })?;
            writeln!(w)?;
        }
        ReportFormat::Text => text_table(report, &mut w)?,
    }
    Ok(())
}

pub fn read_reports_jsonl<R: BufRead>(r: R) -> Result<Vec<MetricsReport>, ReportError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| ReportError::Json {
            line: i + 1,
            source: e,
        })?);
    }
    Ok(out)
}

#[derive(Serialize)]
struct GridRow {
    mode: String,
    depth: usize,
    k: usize,
    merge: f64,
    prune: f64,
    ppv: f64,
    acc: f64,
    spr: f64,
    violations: usize,
}

/// Grid-search table: CSV heatmap data, one JSON report per cell, or text.
pub fn emit_grid<W: Write>(
    g: &GridSearchReport,
    format: ReportFormat,
    mut w: W,
) -> Result<(), ReportError> {
    match format {
        ReportFormat::Csv => {
            let mut c = csv::Writer::from_writer(&mut w);
            for cell in &g.cells {
                let s = &cell.setting;
                c.serialize(GridRow {
                    mode: s.mode.to_string(),
                    depth: s.depth,
                    k: s.k,
                    merge: s.merge,
                    prune: s.prune,
                    ppv: cell.ppv,
                    acc: cell.acc,
                    spr: cell.spr,
                    violations: cell.violations,
                })?;
            }
            c.flush()?;
        }
        ReportFormat::JsonLines => {
            for r in &g.reports {
                emit_report(r, ReportFormat::JsonLines, &mut w)?;
            }
        }
        ReportFormat::Text => {
            writeln!(
                w,
                "{:<6} {:>4} {:>8} {:>8} {:>8} {:>8} {:>6} {:>10}",
                "mode", "K", "merge", "prune", "PPV", "ACC", "SPR", "violations"
            )?;
            for c in &g.cells {
                let s = &c.setting;
                writeln!(
                    w,
                    "{:<6} {:>4} {:>8} {:>8} {:>8.2} {:>8.2} {:>6.2} {:>10}",
                    s.mode.to_string(),
                    s.k,
                    s.merge,
                    s.prune,
                    c.ppv,
                    c.acc,
                    c.spr,
                    c.violations
                )?;
            }
            for b in &g.best {
                let s = &b.setting;
                writeln!(
                    w,
                    "best {}: K {} merge {} prune {} PPV {:.2}",
                    s.mode, s.k, s.merge, s.prune, b.ppv
                )?;
            }
            for r in &g.reports {
                for p in r.problems.iter().filter(|p| !p.violations.is_empty()) {
                    let s = &r.setting;
                    for v in &p.violations {
                        writeln!(
                            w,
                            "warning: {} K {} merge {} prune {} problem {}: {v}",
                            s.mode, s.k, s.merge, s.prune, p.name
                        )?;
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::metrics::{summarize, InstanceOutcome, ProblemOutcome};
    use super::super::Setting;
    use super::*;
    use crate::trajtree::GoalId;

    fn report() -> MetricsReport {
        let o = |name: &str, steps: Vec<u32>| ProblemOutcome {
            name: name.into(),
            goal_count: 2,
            sampler_calls: 2,
            offline_secs: 0.25,
            online_secs: 1.0 / 3.0,
            instances: vec![InstanceOutcome {
                fraction: 1.0 / 7.0,
                truth: GoalId(0),
                step_argmax: steps.into_iter().map(GoalId).collect(),
                final_predicted: vec![GoalId(0)],
            }],
            node_count: 5,
            branch_count: 2,
            violations: vec!["something".into()],
        };
        summarize(
            Setting::default(),
            &[o("a", vec![0, 1, 0]), o("b", vec![1, 0])],
        )
    }

    #[test]
    fn json_round_trip() {
        let r = report();
        let mut buf = Vec::new();
        emit_report(&r, ReportFormat::JsonLines, &mut buf).unwrap();
        emit_report(&r, ReportFormat::JsonLines, &mut buf).unwrap();
        assert_eq!(
            read_reports_jsonl(buf.as_slice()).unwrap(),
            vec![r.clone(), r]
        );
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        emit_report(&report(), ReportFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
        let scopes: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(scopes, vec!["overall", "fraction", "problem", "problem"]);
    }

    #[test]
    fn text_table_rows() {
        let mut buf = Vec::new();
        emit_report(&report(), ReportFormat::Text, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for needle in [
            "PPV (%)",
            "ACC (%)",
            "SPR",
            "PC",
            "Online (s)",
            "Offline (s)",
            "warning: something",
        ] {
            assert!(text.contains(needle), "missing {needle}");
        }
        assert!(text
            .lines()
            .any(|l| l.starts_with('a') && l.contains("66.7")));
    }
}
