//! Report tables as TSV or aligned text.
//!
//! A TSV report is an optional `# ` title line, a header line, one line per
//! row, then `# ` note lines. [`Table::parse_tsv`] reads it back exactly.

use std::fmt::Write as _;

use argmove_core::evaluation::{round_half_up, EvalReport};
use argmove_core::stats::analysis::{DevelopmentReport, QualityReport};
use argmove_core::stats::{stars, EstimationMethod, RatioScale};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Tsv,
    #[default]
    Pretty,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Table {
    pub title: Option<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TableError {
    #[error("no header line")]
    NoHeader,
    #[error("line {line}: {got} cells, header has {want}")]
    Width { line: usize, got: usize, want: usize },
    #[error("line {0}: row after notes")]
    RowAfterNotes(usize),
    #[error("column {0:?} missing")]
    MissingColumn(String),
    #[error("row {row}, column {column}: {value:?} is not a number")]
    Number { row: String, column: String, value: String },
}

impl Table {
    pub fn new(header: &[&str]) -> Table {
        Table { header: header.iter().map(|s| s.to_string()).collect(), ..Table::default() }
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Tsv => self.to_tsv(),
            ReportFormat::Pretty => self.to_pretty(),
        }
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        if let Some(t) = &self.title {
            let _ = writeln!(out, "# {t}");
        }
        let _ = writeln!(out, "{}", self.header.join("\t"));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join("\t"));
        }
        for n in &self.notes {
            let _ = writeln!(out, "# {n}");
        }
        out
    }

    pub fn parse_tsv(input: &str) -> Result<Table, TableError> {
        let mut table = Table::default();
        let mut have_header = false;
        for (i, line) in input.lines().enumerate() {
            if let Some(comment) = line.strip_prefix('#') {
                let text = comment.strip_prefix(' ').unwrap_or(comment).to_string();
                if have_header {
                    table.notes.push(text);
                } else {
                    table.title = Some(text);
                }
                continue;
            }
            let cells: Vec<String> = line.split('\t').map(String::from).collect();
            if !have_header {
                table.header = cells;
                have_header = true;
                continue;
            }
            if !table.notes.is_empty() {
                return Err(TableError::RowAfterNotes(i + 1));
            }
            if cells.len() != table.header.len() {
                return Err(TableError::Width { line: i + 1, got: cells.len(), want: table.header.len() });
            }
            table.rows.push(cells);
        }
        if !have_header {
            return Err(TableError::NoHeader);
        }
        Ok(table)
    }

    pub fn to_pretty(&self) -> String {
        let widths: Vec<usize> = (0..self.header.len())
            .map(|c| {
                std::iter::once(&self.header[c])
                    .chain(self.rows.iter().map(|r| &r[c]))
                    .map(|s| s.chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| {
            let mut s = String::new();
            for (c, cell) in cells.iter().enumerate() {
                let pad = widths[c] - cell.chars().count();
                if c == 0 {
                    s.push_str(cell);
                    s.extend(std::iter::repeat_n(' ', pad));
                } else {
                    s.push_str("  ");
                    s.extend(std::iter::repeat_n(' ', pad));
                    s.push_str(cell);
                }
            }
            s.trim_end().to_string()
        };
        let mut out = String::new();
        if let Some(t) = &self.title {
            let _ = writeln!(out, "{t}\n");
        }
        let head = line(&self.header);
        let rule = "-".repeat(widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1));
        let _ = writeln!(out, "{head}\n{rule}");
        for r in &self.rows {
            let _ = writeln!(out, "{}", line(r));
        }
        if !self.notes.is_empty() {
            out.push('\n');
            for n in &self.notes {
                let _ = writeln!(out, "{n}");
            }
        }
        out
    }

    pub fn column(&self, name: &str) -> Result<usize, TableError> {
        self.header.iter().position(|h| h == name).ok_or_else(|| TableError::MissingColumn(name.into()))
    }

    /// The row whose first cell is `key`.
    pub fn row(&self, key: &str) -> Option<&[String]> {
        self.rows.iter().find(|r| r.first().is_some_and(|c| c == key)).map(Vec::as_slice)
    }
}

pub const STAR_NOTE: &str = "Note. * p < .05, ** p < .01, *** p < .001";

/// Two decimals, halves away from zero.
pub fn f2(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    // Half away from zero, so -0.105 shows as -0.11.
    let r = round_half_up(x.abs(), 2).copysign(x);
    let s = format!("{r:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn f3(x: f64) -> String {
    format!("{:.3}", round_half_up(x.abs(), 3).copysign(x))
}

fn p_text(p: f64) -> String {
    if p < 0.001 {
        "p<.001".into()
    } else {
        format!("p={}", f3(p))
    }
}

/// Evaluation table: Annotation, Precision, Recall, F1, Cases, then Total.
pub fn eval_table(report: &EvalReport, title: &str) -> Table {
    let mut t = Table::new(&["Annotation", "Precision", "Recall", "F1", "Cases"]);
    t.title = Some(title.into());
    let mut degenerate = Vec::new();
    for r in report.rows.iter().chain(std::iter::once(&report.total)) {
        let name = r.label.map_or("Total".to_string(), |l| l.as_str().to_string());
        if r.metrics.degenerate {
            degenerate.push(name.clone());
        }
        let m = r.metrics;
        t.rows.push(vec![name, f2(m.precision), f2(m.recall), f2(m.f1), r.cases().to_string()]);
    }
    if !degenerate.is_empty() {
        t.notes.push(format!("Undefined ratios reported as 0: {}", degenerate.join(", ")));
    }
    t
}

/// One parsed evaluation row.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub annotation: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub cases: u64,
}

pub fn parse_eval_table(table: &Table) -> Result<Vec<EvalRow>, TableError> {
    let cols = ["Annotation", "Precision", "Recall", "F1", "Cases"].map(|c| table.column(c));
    let [a, p, r, f, c] = cols;
    let (a, p, r, f, c) = (a?, p?, r?, f?, c?);
    table
        .rows
        .iter()
        .map(|row| {
            let num = |col: usize| -> Result<f64, TableError> {
                row[col].parse().map_err(|_| TableError::Number {
                    row: row[a].clone(),
                    column: table.header[col].clone(),
                    value: row[col].clone(),
                })
            };
            Ok(EvalRow {
                annotation: row[a].clone(),
                precision: num(p)?,
                recall: num(r)?,
                f1: num(f)?,
                cases: num(c)? as u64,
            })
        })
        .collect()
}

fn title_case(level: &str) -> String {
    let mut c = level.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

fn scale_name(scale: RatioScale) -> &'static str {
    match scale {
        RatioScale::Fraction => "fraction",
        RatioScale::Percent => "percent",
    }
}

/// Quality table: mean (SD) per level, F with stars from the
/// Bonferroni-adjusted p, η², and the MANOVA footer.
pub fn quality_table(report: &QualityReport) -> Table {
    let mut header = vec!["Move".to_string()];
    header.extend(report.levels.iter().map(|l| format!("{} Mean (SD)", title_case(l.as_str()))));
    header.push("F".into());
    header.push("η²".into());
    let mut t = Table { header, ..Table::default() };
    t.title = Some(format!("Move ratios ({}) by writing quality", scale_name(report.scale)));
    for row in &report.rows {
        let mut cells = vec![row.label.as_str().to_string()];
        for (m, sd) in row.means.iter().zip(&row.sds) {
            cells.push(format!("{} ({})", f2(*m), f2(*sd)));
        }
        cells.push(format!("{}{}", f2(row.anova.f_statistic), stars(row.adjusted_p)));
        cells.push(f3(row.anova.eta_squared));
        t.rows.push(cells);
    }
    let m = &report.manova.result;
    t.notes.push(format!(
        "MANOVA F({}, {})={}, {}, Wilks' Lambda={}",
        f2(m.df1).trim_end_matches(".00"),
        f2(m.df2).trim_end_matches(".00"),
        f2(m.f_statistic),
        p_text(m.p_value),
        f2(m.wilks_lambda),
    ));
    if !report.manova.dropped.is_empty() {
        let dropped: Vec<&str> = report.manova.dropped.iter().map(|l| l.as_str()).collect();
        t.notes.push(format!("MANOVA leaves out linearly dependent ratios: {}", dropped.join(", ")));
    }
    let n: Vec<String> = report.levels.iter().zip(&report.counts).map(|(l, c)| format!("{}={c}", l.as_str())).collect();
    t.notes.push(format!("n: {}", n.join(", ")));
    if report.skipped > 0 {
        t.notes.push(format!("Essays without quality level or counted moves: {}", report.skipped));
    }
    t.notes.push("F stars use Bonferroni-adjusted p-values.".into());
    t.notes.push(STAR_NOTE.into());
    t
}

/// Development table: one column per move type with fixed effects, random
/// effects (variance components), AIC and BIC.
pub fn development_table(report: &DevelopmentReport) -> Table {
    let mut header = vec![String::new()];
    header.extend(report.rows.iter().map(|r| r.label.as_str().to_string()));
    let mut t = Table { header, ..Table::default() };
    let method = match report.method {
        EstimationMethod::Ml => "ML",
        EstimationMethod::Reml => "REML",
    };
    t.title = Some(format!("Random-intercept models of move ratios ({}) over waves, {method}", scale_name(report.scale)));
    let cols = report.rows.len();
    let mut push = |name: &str, cell: &dyn Fn(usize) -> String| {
        let mut r = vec![name.to_string()];
        r.extend((0..cols).map(cell));
        t.rows.push(r);
    };
    let fit = |i: usize| &report.rows[i].fit;
    push("Fixed effects", &|_| String::new());
    push("wave", &|i| format!("{}{}", f2(fit(i).wave.estimate), stars(fit(i).wave.p_value)));
    push("wave z", &|i| f2(fit(i).wave.z));
    push("Intercept", &|i| format!("{}{}", f2(fit(i).intercept.estimate), stars(fit(i).intercept.p_value)));
    push("Random effects", &|_| String::new());
    push("Between-individual", &|i| format!("{}{}", f2(fit(i).sigma2_between), stars(fit(i).between_p_value)));
    push("Within-individual", &|i| f2(fit(i).sigma2_within));
    push("AIC", &|i| f2(fit(i).aic));
    push("BIC", &|i| f2(fit(i).bic));

    t.notes.push("Random effects are variance components; between-individual stars use a likelihood-ratio test.".into());
    let boundary: Vec<&str> =
        report.rows.iter().filter(|r| r.fit.convergence.boundary).map(|r| r.label.as_str()).collect();
    if !boundary.is_empty() {
        t.notes.push(format!("Between-individual variance at the boundary 0: {}", boundary.join(", ")));
    }
    if let Some(r) = report.rows.first() {
        t.notes.push(format!("n: {} observations, {} individuals", r.fit.observations, r.fit.individuals));
    }
    if report.skipped > 0 {
        t.notes.push(format!("Essays without counted moves: {}", report.skipped));
    }
    t.notes.push(STAR_NOTE.into());
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsv_round_trip_keeps_empty_cells() {
        let mut t = Table::new(&["", "a", "b"]);
        t.title = Some("T".into());
        t.rows.push(vec!["x".into(), String::new(), "1.00".into()]);
        t.rows.push(vec!["y".into(), "2".into(), String::new()]);
        t.notes.push("n".into());
        assert_eq!(Table::parse_tsv(&t.to_tsv()).unwrap(), t);
        assert!(t.to_pretty().contains("1.00"));
    }

    #[test]
    fn rejects_ragged_rows() {
        assert_eq!(Table::parse_tsv("a\tb\n1\n"), Err(TableError::Width { line: 2, got: 1, want: 2 }));
        assert_eq!(Table::parse_tsv("# only a title\n"), Err(TableError::NoHeader));
    }

    #[test]
    fn number_formats() {
        assert_eq!(f2(0.745), "0.75");
        assert_eq!(f2(-0.105), "-0.11");
        assert_eq!(f2(-0.001), "0.00");
        assert_eq!(f2(f64::INFINITY), "inf");
        assert_eq!(f3(0.0265), "0.027");
        assert_eq!(p_text(0.0004), "p<.001");
        assert_eq!(p_text(0.04), "p=0.040");
    }
}
