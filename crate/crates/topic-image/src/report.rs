//! TSV and plain-text rendering of evaluation reports.
//!
//! A report is a sequence of `#` header lines followed by sections. Each
//! section starts with a `[name]` line, then a tab-separated column header
//! and its rows. Nothing time-dependent is written, so identical runs give
//! identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::{EvaluationReport, Scores};

/// Significance threshold for the paired t-test.
pub const SIGNIFICANCE_LEVEL: f64 = 0.01;

/// Published rows for methods this crate does not implement.
pub const REFERENCE_ROWS: [(&str, [f64; 4]); 2] = [
    ("WSABIE (Topic+Caption+VGG)", [1.87, 0.65, 0.68, 0.70]),
    ("SVM (Topic+Caption+VGG)", [1.94, 0.72, 0.75, 0.76]),
];

pub const TIE_RULE: &str = "equal scores ordered by ascending image id";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Section {
    fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReportDocument {
    pub header: Vec<(String, String)>,
    pub sections: Vec<Section>,
}

fn num(x: f64) -> String {
    format!("{x:.6}")
}

fn score_cells(s: &Scores) -> [String; 4] {
    [num(s.top1), num(s.ndcg1), num(s.ndcg3), num(s.ndcg5)]
}

impl ReportDocument {
    pub fn from_evaluation(report: &EvaluationReport) -> Self {
        let header = vec![
            ("report".into(), "topic-image evaluation".into()),
            ("version".into(), report.version.clone()),
            ("seed".into(), report.seed.to_string()),
            ("fingerprint".into(), report.fingerprint.clone()),
            ("metric".into(), format!("ndcg gain={}; ideal dcg 0 scores 1", report.gain.name())),
            ("ties".into(), TIE_RULE.into()),
            ("folds".into(), report.folds.len().to_string()),
        ];

        let metric_cols = ["top1", "ndcg1", "ndcg3", "ndcg5"];
        let mut summary = Section::new("summary", &[&["method", "label"][..], &metric_cols].concat());
        for (m, s) in &report.aggregate {
            let mut row = vec![m.to_string(), m.label()];
            row.extend(score_cells(s));
            summary.rows.push(row);
        }

        let mut folds = Section::new(
            "folds",
            &[
                &["fold", "method", "train_topics", "test_topics", "train_pairs", "negatives", "test_pairs"][..],
                &metric_cols,
            ]
            .concat(),
        );
        for f in &report.folds {
            for (m, s) in &f.scores {
                let mut row = vec![
                    f.fold_index.to_string(),
                    m.to_string(),
                    f.train_topics.to_string(),
                    f.test_topics.to_string(),
                    f.train_examples.to_string(),
                    f.negative_examples.to_string(),
                    f.test_examples.to_string(),
                ];
                row.extend(score_cells(s));
                folds.rows.push(row);
            }
        }

        let mut sig = Section::new("significance", &["a", "b", "topics", "mean_diff", "t", "p", "significant"]);
        for s in &report.significance {
            sig.rows.push(vec![
                s.a.to_string(),
                s.b.to_string(),
                s.test.n.to_string(),
                num(s.test.mean_diff),
                num(s.test.t),
                format!("{:.6e}", s.test.p),
                if s.test.p < SIGNIFICANCE_LEVEL { "yes" } else { "no" }.into(),
            ]);
        }

        let mut reference = Section::new("reference", &[&["method"][..], &metric_cols].concat());
        for (name, vals) in REFERENCE_ROWS {
            let mut row = vec![name.to_string()];
            row.extend(vals.iter().map(|v| format!("{v:.2}")));
            reference.rows.push(row);
        }

        Self {
            header,
            sections: vec![summary, folds, sig, reference],
        }
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.header {
            writeln!(out, "# {k}\t{v}").unwrap();
        }
        for s in &self.sections {
            writeln!(out, "\n[{}]", s.name).unwrap();
            writeln!(out, "{}", s.columns.join("\t")).unwrap();
            for r in &s.rows {
                writeln!(out, "{}", r.join("\t")).unwrap();
            }
        }
        out
    }

    pub fn parse_tsv(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut doc = ReportDocument::default();
        let mut current: Option<Section> = None;
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            if let Some(h) = line.strip_prefix("# ") {
                if current.is_some() {
                    return Err(err(n, "header line after first section".into()));
                }
                let (k, v) = h.split_once('\t').ok_or_else(|| err(n, "header needs key<TAB>value".into()))?;
                doc.header.push((k.into(), v.into()));
            } else if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                doc.sections.extend(current.take());
                current = Some(Section {
                    name: name.into(),
                    columns: Vec::new(),
                    rows: Vec::new(),
                });
            } else {
                let s = current.as_mut().ok_or_else(|| err(n, "row outside any section".into()))?;
                let cells: Vec<String> = line.split('\t').map(str::to_string).collect();
                if s.columns.is_empty() {
                    s.columns = cells;
                } else if cells.len() != s.columns.len() {
                    return Err(err(n, format!("expected {} columns, found {}", s.columns.len(), cells.len())));
                } else {
                    s.rows.push(cells);
                }
            }
        }
        doc.sections.extend(current);
        if doc.sections.is_empty() {
            return Err(err(0, "no sections found".into()));
        }
        Ok(doc)
    }

    /// Aligned plain-text rendering.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.header {
            writeln!(out, "{k}: {v}").unwrap();
        }
        for s in &self.sections {
            writeln!(out, "\n== {} ==", s.name).unwrap();
            let ncol = s.columns.len();
            let mut widths: Vec<usize> = s.columns.iter().map(|c| c.chars().count()).collect();
            for r in &s.rows {
                for (w, c) in widths.iter_mut().zip(r) {
                    *w = (*w).max(c.chars().count());
                }
            }
            let line = |cells: &[String]| {
                let mut l = String::new();
                for (j, (c, w)) in cells.iter().zip(&widths).enumerate() {
                    let numeric = c.parse::<f64>().is_ok();
                    if numeric {
                        write!(l, "{c:>w$}").unwrap();
                    } else {
                        write!(l, "{c:<w$}").unwrap();
                    }
                    if j + 1 < ncol {
                        l.push_str("  ");
                    }
                }
                l.trim_end().to_string()
            };
            writeln!(out, "{}", line(&s.columns)).unwrap();
            writeln!(out, "{}", widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  ")).unwrap();
            for r in &s.rows {
                writeln!(out, "{}", line(r)).unwrap();
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ReportDocument {
        let mut s = Section::new("summary", &["method", "top1"]);
        s.rows.push(vec!["random".into(), "1.500000".into()]);
        s.rows.push(vec!["dnn-topic+caption+vgg".into(), "2.100000".into()]);
        ReportDocument {
            header: vec![("seed".into(), "7".into())],
            sections: vec![s],
        }
    }

    #[test]
    fn tsv_round_trip() {
        let doc = sample();
        let text = doc.to_tsv();
        assert_eq!(ReportDocument::parse_tsv(&text, Path::new("r.tsv")).unwrap(), doc);
        assert_eq!(doc.header_value("seed"), Some("7"));
    }

    #[test]
    fn table_is_aligned() {
        let t = sample().to_table();
        let rows: Vec<&str> = t.lines().filter(|l| l.contains("000")).collect();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].len(), rows[1].len());
    }

    #[test]
    fn malformed_rows_rejected() {
        let p = Path::new("r.tsv");
        assert!(ReportDocument::parse_tsv("[a]\nx\ty\n1\n", p).is_err());
        assert!(ReportDocument::parse_tsv("1\t2\n", p).is_err());
        assert!(ReportDocument::parse_tsv("", p).is_err());
    }
}
