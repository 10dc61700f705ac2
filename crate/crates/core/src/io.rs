//! CSV formats for streams, per-run records and case summaries, plus the text report.
//!
//! Every file may start with `# key=value` comment lines carrying the configuration that
//! produced it; readers skip them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::prequential::{aggregate_runs, case_accuracy, BatchRecord, Case};
use crate::progressive::Mode;
use crate::stats::{protocol_compare, Flags};
use crate::streamgen::LabeledPoint;

pub const STREAM_HEADER: [&str; 4] = ["x1", "x2", "y", "concept"];
pub const RECORD_HEADER: [&str; 7] = ["seed", "mode", "scenario", "concept", "batch_index", "n_points", "accuracy"];
pub const SUMMARY_HEADER: [&str; 6] = ["mode", "scenario", "concept", "case", "seed", "accuracy"];

/// Writes `# key=value` lines.
pub fn write_config_header<W: Write>(out: &mut W, config: &[(String, String)]) -> Result<()> {
    for (k, v) in config {
        writeln!(out, "# {k}={v}")?;
    }
    Ok(())
}

/// Collects the `# key=value` lines at the top of a file.
pub fn read_config_header(text: &str) -> Vec<(String, String)> {
    text.lines()
        .map_while(|l| l.strip_prefix('#'))
        .filter_map(|l| l.trim().split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input)
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let got = rdr.headers()?;
    if got.iter().ne(expected.iter().copied()) {
        return Err(Error::Input(format!("expected header {}, got {}", expected.join(","), got.iter().collect::<Vec<_>>().join(","))));
    }
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, name: &str) -> Result<T> {
    let raw = rec.get(idx).ok_or_else(|| Error::Input(format!("missing column {name}")))?;
    raw.trim()
        .parse()
        .map_err(|_| Error::Input(format!("bad {name} value `{raw}`")))
}

/// 17 significant digits, enough to round-trip any `f64`.
fn exact(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_stream<W: Write>(mut out: W, config: &[(String, String)], points: &[LabeledPoint]) -> Result<()> {
    write_config_header(&mut out, config)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STREAM_HEADER)?;
    for p in points {
        w.write_record([exact(p.x1), exact(p.x2), p.y.to_string(), p.concept.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_stream<R: Read>(input: R) -> Result<Vec<LabeledPoint>> {
    let mut rdr = reader(input);
    check_header(&mut rdr, &STREAM_HEADER)?;
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let y: u8 = field(&rec, 2, "y")?;
        if y > 1 {
            return Err(Error::Input(format!("label {y} is not 0 or 1")));
        }
        points.push(LabeledPoint { x1: field(&rec, 0, "x1")?, x2: field(&rec, 1, "x2")?, y, concept: field(&rec, 3, "concept")? });
    }
    Ok(points)
}

/// Batch records of one run, tagged with the run's identity.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecords {
    pub seed: u64,
    pub mode: Mode,
    pub scenario: String,
    pub records: Vec<BatchRecord>,
}

pub fn write_records<W: Write>(mut out: W, config: &[(String, String)], run: &RunRecords) -> Result<()> {
    write_config_header(&mut out, config)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_HEADER)?;
    for r in &run.records {
        w.write_record([
            run.seed.to_string(),
            run.mode.to_string(),
            run.scenario.clone(),
            r.concept.to_string(),
            r.batch_index.to_string(),
            r.n_points.to_string(),
            r.accuracy.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a record file; every row must belong to the same run.
pub fn read_records<R: Read>(input: R) -> Result<RunRecords> {
    let mut rdr = reader(input);
    check_header(&mut rdr, &RECORD_HEADER)?;
    let mut run: Option<RunRecords> = None;
    for rec in rdr.records() {
        let rec = rec?;
        let seed: u64 = field(&rec, 0, "seed")?;
        let mode: Mode = field(&rec, 1, "mode")?;
        let scenario = rec.get(2).unwrap_or_default().to_string();
        let record = BatchRecord {
            concept: field(&rec, 3, "concept")?,
            batch_index: field(&rec, 4, "batch_index")?,
            n_points: field(&rec, 5, "n_points")?,
            accuracy: field(&rec, 6, "accuracy")?,
        };
        match &mut run {
            None => run = Some(RunRecords { seed, mode, scenario, records: vec![record] }),
            Some(r) if r.seed == seed && r.mode == mode && r.scenario == scenario => r.records.push(record),
            Some(_) => return Err(Error::Input("record file mixes several runs".into())),
        }
    }
    run.ok_or_else(|| Error::Input("record file has no rows".into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub mode: Mode,
    pub scenario: String,
    pub concept: usize,
    pub case: Case,
    pub seed: u64,
    pub accuracy: f64,
}

/// One row per (concept, case) with at least one batch in range.
pub fn summarize(run: &RunRecords) -> Vec<SummaryRow> {
    let concepts: BTreeSet<usize> = run.records.iter().map(|r| r.concept).collect();
    let mut rows = Vec::new();
    for concept in concepts {
        for case in Case::ALL {
            if let Some(accuracy) = case_accuracy(&run.records, concept, case) {
                rows.push(SummaryRow { mode: run.mode, scenario: run.scenario.clone(), concept, case, seed: run.seed, accuracy });
            }
        }
    }
    rows
}

pub fn write_summary<W: Write>(mut out: W, config: &[(String, String)], rows: &[SummaryRow]) -> Result<()> {
    write_config_header(&mut out, config)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.mode.to_string(),
            r.scenario.clone(),
            r.concept.to_string(),
            r.case.to_string(),
            r.seed.to_string(),
            r.accuracy.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary<R: Read>(input: R) -> Result<Vec<SummaryRow>> {
    let mut rdr = reader(input);
    check_header(&mut rdr, &SUMMARY_HEADER)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        rows.push(SummaryRow {
            mode: field(&rec, 0, "mode")?,
            scenario: rec.get(1).unwrap_or_default().to_string(),
            concept: field(&rec, 2, "concept")?,
            case: field(&rec, 3, "case")?,
            seed: field(&rec, 4, "seed")?,
            accuracy: field(&rec, 5, "accuracy")?,
        });
    }
    Ok(rows)
}

/// `0.9604` becomes `.96`, `0.0041` becomes `.004`.
pub fn format_decimal(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    let s = match s {
        "" | "-" | "-0" => "0",
        other => other,
    };
    if let Some(rest) = s.strip_prefix("0.") {
        format!(".{rest}")
    } else if let Some(rest) = s.strip_prefix("-0.") {
        format!("-.{rest}")
    } else {
        s.to_string()
    }
}

/// `mean, std` with protocol markers: `**` best, `_ _` worst, trailing `~` when non-normal.
pub fn format_cell(mean: f64, std: f64, flags: Option<Flags>) -> String {
    let mut cell = format!("{}, {}", format_decimal(mean), format_decimal(std));
    if let Some(f) = flags {
        if f.best {
            cell = format!("**{cell}**");
        } else if f.worst {
            cell = format!("_{cell}_");
        }
        if f.non_normal {
            cell.push('~');
        }
    }
    cell
}

/// Renders the accuracy table, one line per (scenario, concept, case).
///
/// Markers are only computed from the second concept on, when at least two modes and three
/// seeds are present. Modes must cover the same seeds in every group.
pub fn render_report(rows: &[SummaryRow], alpha: f64) -> Result<String> {
    type Key = (String, usize, Case);
    let mut groups: BTreeMap<Key, BTreeMap<Mode, BTreeMap<u64, f64>>> = BTreeMap::new();
    for r in rows {
        let per_seed = groups.entry((r.scenario.clone(), r.concept, r.case)).or_default().entry(r.mode).or_default();
        if per_seed.insert(r.seed, r.accuracy).is_some() {
            return Err(Error::Input(format!(
                "duplicate summary row for {} {} concept {} {} seed {}",
                r.mode, r.scenario, r.concept, r.case, r.seed
            )));
        }
    }
    let modes: Vec<Mode> = Mode::ALL
        .into_iter()
        .filter(|m| groups.values().any(|g| g.contains_key(m)))
        .collect();

    let mut table: Vec<Vec<String>> = vec![["scenario", "concept", "case"]
        .into_iter()
        .map(String::from)
        .chain(modes.iter().map(|m| m.label().to_string()))
        .collect()];
    for ((scenario, concept, case), by_mode) in &groups {
        let mut seed_sets = by_mode.values().map(|s| s.keys().copied().collect::<Vec<u64>>());
        let seeds = seed_sets.next().unwrap_or_default();
        if seed_sets.any(|s| s != seeds) {
            return Err(Error::Input(format!(
                "modes cover different seeds for {scenario} concept {} {case}",
                concept + 1
            )));
        }
        let present: Vec<Mode> = modes.iter().copied().filter(|m| by_mode.contains_key(m)).collect();
        let samples: Vec<Vec<f64>> = present.iter().map(|m| by_mode[m].values().copied().collect()).collect();
        let flags = if *concept >= 1 && present.len() >= 2 && seeds.len() >= 3 {
            Some(protocol_compare(&samples, alpha)?.flags)
        } else {
            None
        };
        let mut line = vec![scenario.clone(), (concept + 1).to_string(), case.label().to_string()];
        for m in &modes {
            match present.iter().position(|p| p == m) {
                Some(i) => {
                    let (mean, std) = if samples[i].len() >= 2 {
                        aggregate_runs(&samples[i])?
                    } else {
                        (samples[i][0], 0.0)
                    };
                    line.push(format_cell(mean, std, flags.as_ref().map(|f| f[i])));
                }
                None => line.push("-".into()),
            }
        }
        table.push(line);
    }

    let widths: Vec<usize> = (0..table[0].len())
        .map(|c| table.iter().map(|row| row[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &table {
        let cells: Vec<String> = row.iter().zip(&widths).map(|(cell, w)| format!("{cell:<w$}")).collect();
        writeln!(out, "{}", cells.join("  ").trim_end()).expect("writing to a String");
    }
    writeln!(out, "\n** significantly best, _ _ significantly worst, ~ not normal (alpha = {alpha})")
        .expect("writing to a String");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(mode: Mode, concept: usize, seed: u64, accuracy: f64) -> SummaryRow {
        SummaryRow { mode, scenario: "s1+,s1-".into(), concept, case: Case::First50, seed, accuracy }
    }

    #[test]
    fn decimals_follow_table_style() {
        assert_eq!(format_decimal(0.9604), ".96");
        assert_eq!(format_decimal(0.0041), ".004");
        assert_eq!(format_decimal(0.0), "0");
        assert_eq!(format_decimal(1.0), "1");
        assert_eq!(format_cell(0.96, 0.004, None), ".96, .004");
        let f = Flags { best: true, worst: false, non_normal: true };
        assert_eq!(format_cell(0.96, 0.004, Some(f)), "**.96, .004**~");
    }

    #[test]
    fn stream_round_trip_is_exact() {
        let points = vec![
            LabeledPoint { x1: 0.1 + 0.2, x2: 1.0 / 3.0, y: 1, concept: 0 },
            LabeledPoint { x1: 5e-324, x2: 0.9999999999999999, y: 0, concept: 1 },
        ];
        let cfg = vec![("seed".to_string(), "7".to_string())];
        let mut buf = Vec::new();
        write_stream(&mut buf, &cfg, &points).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# seed=7\nx1,x2,y,concept\n"));
        assert_eq!(read_config_header(&text), cfg);
        assert_eq!(read_stream(text.as_bytes()).unwrap(), points);
    }

    #[test]
    fn records_round_trip() {
        let run = RunRecords {
            seed: 3,
            mode: Mode::Mclstm,
            scenario: "s1+,s2-".into(),
            records: vec![BatchRecord { concept: 0, batch_index: 1, n_points: 128, accuracy: 0.5078125 }],
        };
        let mut buf = Vec::new();
        write_records(&mut buf, &[], &run).unwrap();
        assert_eq!(read_records(buf.as_slice()).unwrap(), run);
    }

    #[test]
    fn single_mode_has_no_markers() {
        let rows: Vec<SummaryRow> = (0..5).map(|s| row(Mode::Cpnn, 1, s, 0.9 + 0.01 * s as f64)).collect();
        let report = render_report(&rows, 0.05).unwrap();
        assert!(!report.lines().next().unwrap().contains("cLSTM"));
        assert!(!report.lines().nth(1).unwrap().contains("**"));
    }

    #[test]
    fn dominating_mode_is_bold() {
        let mut rows = Vec::new();
        for s in 0..10u64 {
            let jitter = [0.004, -0.002, 0.001, -0.003, 0.0, 0.002, -0.001, 0.003, -0.004, 0.001][s as usize];
            rows.push(row(Mode::Cpnn, 1, s, 0.96 + jitter));
            rows.push(row(Mode::Clstm, 1, s, 0.70 + jitter));
            rows.push(row(Mode::Mclstm, 1, s, 0.85 - jitter));
            rows.push(row(Mode::Cpnn, 0, s, 0.96 + jitter));
            rows.push(row(Mode::Clstm, 0, s, 0.70 + jitter));
            rows.push(row(Mode::Mclstm, 0, s, 0.85 - jitter));
        }
        let report = render_report(&rows, 0.05).unwrap();
        let lines: Vec<&str> = report.lines().collect();
        assert!(!lines[1].contains("**"), "first concept carries no markers: {}", lines[1]);
        assert!(lines[2].contains("**.96"), "{}", lines[2]);
        assert!(lines[2].contains("_.7, "), "{}", lines[2]);
    }

    #[test]
    fn mismatched_seeds_are_rejected() {
        let rows = vec![row(Mode::Cpnn, 1, 1, 0.9), row(Mode::Cpnn, 1, 2, 0.9), row(Mode::Clstm, 1, 1, 0.8), row(Mode::Clstm, 1, 3, 0.8)];
        assert!(render_report(&rows, 0.05).is_err());
    }
}
