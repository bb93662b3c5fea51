//! HTML, CSV and Markdown renderings of a result matrix. CSV reloads to
//! the same matrix.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::time::Duration;

use kspec_core::symexec::VerdictKind;

use crate::backend::JobResult;
use crate::matrix::{is_mutant, MatrixMeta, ReportFormat, ResultMatrix};

const GREEN: &str = "#D4EDDA";
const RED: &str = "#F8D7DA";

pub fn render_report(m: &ResultMatrix, fmt: ReportFormat) -> String {
    match fmt {
        ReportFormat::Html => render_html(m),
        ReportFormat::Csv => render_csv(m),
        ReportFormat::Md => render_md(m),
    }
}

/// Minutes with one decimal, as in the result tables.
pub fn minutes(d: Duration) -> String {
    format!("{:.1}", d.as_secs_f64() / 60.0)
}

fn html_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

fn meta_lines(meta: &MatrixMeta) -> Vec<(&'static str, String)> {
    vec![
        ("backend", meta.backend.clone()),
        ("time limit (s)", format!("{}", meta.time_limit_ms as f64 / 1000.0)),
        ("seed", meta.seed.to_string()),
        ("version", meta.version.clone()),
    ]
}

fn kill_line(m: &ResultMatrix, program: &str) -> Option<String> {
    if !is_mutant(program) {
        return None;
    }
    let failing = m
        .column(program)
        .iter()
        .filter(|(_, r)| r.verdict != VerdictKind::ProvedTrue)
        .count();
    Some(format!(
        "mutant test {}: {failing} of {} rules failed",
        m.kill(program),
        m.column(program).len()
    ))
}

pub fn render_html(m: &ResultMatrix) -> String {
    let mut s = String::new();
    s.push_str("<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>kspec results</title>\n");
    s.push_str("<style>\ntable { border-collapse: collapse; margin-bottom: 1.5em; }\n");
    s.push_str("th, td { border: 1px solid #999; padding: 2px 8px; }\ntd.time { text-align: center; }\n</style>\n");
    s.push_str("</head>\n<body>\n<h1>kspec results</h1>\n<dl>\n");
    for (k, v) in meta_lines(&m.meta) {
        let _ = writeln!(s, "<dt>{k}</dt><dd>{}</dd>", html_escape(&v));
    }
    s.push_str("</dl>\n");
    for p in &m.programs {
        let _ = writeln!(s, "<h2>{}</h2>", html_escape(p));
        if let Some(k) = kill_line(m, p) {
            let _ = writeln!(s, "<p>{}</p>", html_escape(&k));
        }
        s.push_str("<table>\n<tr><th>Rule</th><th>Time (min)</th><th>Result</th></tr>\n");
        for (claim, r) in m.column(p) {
            let color = if r.verdict == VerdictKind::ProvedTrue {
                GREEN
            } else {
                RED
            };
            let _ = writeln!(
                s,
                "<tr><td><code>{}</code></td><td class=\"time\">{}</td><td style=\"background-color: {color}\" title=\"{}\">{}</td></tr>",
                html_escape(claim),
                minutes(r.elapsed),
                html_escape(&r.diagnostic),
                r.verdict
            );
        }
        s.push_str("</table>\n");
    }
    s.push_str("</body>\n</html>\n");
    s
}

fn md_cell(s: &str) -> String {
    s.replace('|', "\\|").replace('\n', "<br>")
}

pub fn render_md(m: &ResultMatrix) -> String {
    let mut s = String::from("# kspec results\n\n");
    for (k, v) in meta_lines(&m.meta) {
        let _ = writeln!(s, "- {k}: {}", md_cell(&v));
    }
    for p in &m.programs {
        let _ = write!(s, "\n## {p}\n\n");
        if let Some(k) = kill_line(m, p) {
            let _ = write!(s, "{k}\n\n");
        }
        s.push_str("| Rule | Time (min) | Result |\n|---|---|---|\n");
        for (claim, r) in m.column(p) {
            let _ = writeln!(s, "| `{claim}` | {} | {} |", minutes(r.elapsed), r.verdict);
        }
    }
    s
}

const HEADER: [&str; 6] = ["record", "program", "claim", "verdict", "elapsed_s", "detail"];

fn seconds(d: Duration) -> String {
    format!("{}.{:09}", d.as_secs(), d.subsec_nanos())
}

fn parse_seconds(s: &str) -> Option<Duration> {
    let (secs, nanos) = s.split_once('.')?;
    if nanos.len() != 9 {
        return None;
    }
    Some(Duration::new(secs.parse().ok()?, nanos.parse().ok()?))
}

/// One record per metadata entry, program, claim and cell. Column 5 holds
/// the only timing data.
pub fn render_csv(m: &ResultMatrix) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut row = |r: [&str; 6]| w.write_record(r).expect("writing to memory");
    row(HEADER);
    let limit = m.meta.time_limit_ms.to_string();
    let seed = m.meta.seed.to_string();
    for (k, v) in [
        ("backend", m.meta.backend.as_str()),
        ("time_limit_ms", limit.as_str()),
        ("seed", seed.as_str()),
        ("version", m.meta.version.as_str()),
    ] {
        row(["meta", k, "", "", "", v]);
    }
    for p in &m.programs {
        row(["program", p, "", "", "", ""]);
    }
    for c in &m.claims {
        row(["claim", "", c, "", "", ""]);
    }
    for p in &m.programs {
        for (c, r) in m.column(p) {
            row(["cell", p, c, r.verdict.label(), &seconds(r.elapsed), &r.diagnostic]);
        }
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv output is utf-8")
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
}

pub fn parse_csv(text: &str) -> Result<ResultMatrix, ReportError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let mut meta: BTreeMap<String, String> = BTreeMap::new();
    let mut programs = Vec::new();
    let mut claims = Vec::new();
    let mut cells = BTreeMap::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let bad = |message: String| ReportError::Malformed { line, message };
        if rec.len() != HEADER.len() {
            return Err(bad(format!("expected {} fields", HEADER.len())));
        }
        let f = |i: usize| rec[i].to_string();
        match &rec[0] {
            "meta" => {
                meta.insert(f(1), f(5));
            }
            "program" => programs.push(f(1)),
            "claim" => claims.push(f(2)),
            "cell" => {
                let verdict =
                    VerdictKind::from_label(&rec[3]).ok_or_else(|| bad(format!("unknown verdict `{}`", &rec[3])))?;
                let elapsed = parse_seconds(&rec[4]).ok_or_else(|| bad(format!("bad elapsed time `{}`", &rec[4])))?;
                cells.insert(
                    (f(2), f(1)),
                    JobResult {
                        verdict,
                        elapsed,
                        diagnostic: f(5),
                    },
                );
            }
            other => return Err(bad(format!("unknown record kind `{other}`"))),
        }
    }
    let get = |k: &str| {
        meta.get(k).cloned().ok_or_else(|| ReportError::Malformed {
            line: 0,
            message: format!("missing metadata `{k}`"),
        })
    };
    let num = |k: &str| -> Result<u64, ReportError> {
        get(k)?.parse().map_err(|_| ReportError::Malformed {
            line: 0,
            message: format!("metadata `{k}` is not a number"),
        })
    };
    Ok(ResultMatrix {
        meta: MatrixMeta {
            backend: get("backend")?,
            time_limit_ms: num("time_limit_ms")?,
            seed: num("seed")?,
            version: get("version")?,
        },
        claims,
        programs,
        cells,
    })
}

/// The CSV with the timing column blanked, for run-to-run comparison.
pub fn without_timings(csv_text: &str) -> String {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(csv_text.as_bytes());
    let mut w = csv::Writer::from_writer(Vec::new());
    for rec in r.records().flatten() {
        let fields: Vec<&str> = rec
            .iter()
            .enumerate()
            .map(|(i, f)| if i == 4 { "" } else { f })
            .collect();
        let _ = w.write_record(fields);
    }
    String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix() -> ResultMatrix {
        let mut cells = BTreeMap::new();
        let claims: Vec<String> = ["executor-invalid", "call-failure"].map(String::from).to_vec();
        let verdicts = [VerdictKind::ProvedTrue, VerdictKind::Error];
        for (c, v) in claims.iter().zip(verdicts) {
            cells.insert(
                (c.clone(), "wallet__dup_call_52".to_string()),
                JobResult {
                    verdict: v,
                    elapsed: Duration::from_millis(132_000),
                    diagnostic: "line one\nline, \"two\" | <b>".into(),
                },
            );
        }
        ResultMatrix {
            meta: MatrixMeta {
                backend: "stub:t".into(),
                time_limit_ms: 2000,
                seed: 7,
                version: "0.1.0".into(),
            },
            claims,
            programs: vec!["wallet__dup_call_52".into()],
            cells,
        }
    }

    #[test]
    fn csv_round_trip() {
        let m = matrix();
        assert_eq!(parse_csv(&render_csv(&m)).unwrap(), m);
        let empty = ResultMatrix {
            claims: vec![],
            programs: vec![],
            cells: BTreeMap::new(),
            ..m
        };
        assert_eq!(parse_csv(&render_csv(&empty)).unwrap(), empty);
    }

    #[test]
    fn html_colors_and_minutes() {
        let h = render_html(&matrix());
        assert!(h.contains("background-color: #F8D7DA\" title=\"line one\nline, &quot;two&quot; | &lt;b&gt;\">error"));
        assert!(h.contains("#D4EDDA"));
        assert!(h.contains("<td class=\"time\">2.2</td>"));
        assert!(h.contains("mutant test PASS: 1 of 2 rules failed"));
        assert_eq!(minutes(Duration::from_secs(180 * 60)), "180.0");
    }

    #[test]
    fn markdown_rows() {
        let md = render_md(&matrix());
        assert!(md.contains("| `call-failure` | 2.2 | error |"));
        assert!(md.contains("- seed: 7"));
    }

    #[test]
    fn timings_can_be_blanked() {
        let m = matrix();
        let mut slower = m.clone();
        for r in slower.cells.values_mut() {
            r.elapsed += Duration::from_secs(1);
        }
        assert_ne!(render_csv(&m), render_csv(&slower));
        assert_eq!(without_timings(&render_csv(&m)), without_timings(&render_csv(&slower)));
    }
}
