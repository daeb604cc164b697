//! Scoring against gold labels and the fixed-width report tables.

use std::fmt::Write as _;

use crate::category::{Category, GoldLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("no scored instances")]
    Empty,
    #[error("no gold {0} instances; macro accuracy is undefined")]
    MissingCategory(Category),
}

/// Column labels, in table order. A column is chosen by the gold label.
pub const COLUMNS: [&str; 4] = ["indef", "def", "gen", "other"];

fn column(gold: GoldLabel) -> usize {
    match gold {
        GoldLabel::Category(c) => c.index(),
        GoldLabel::Other => 3,
    }
}

/// Correct / incorrect counts per gold column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CategoryCounts {
    pub correct: [u64; 4],
    pub incorrect: [u64; 4],
}

impl CategoryCounts {
    pub fn from_cells(correct: [u64; 4], incorrect: [u64; 4]) -> Self {
        CategoryCounts { correct, incorrect }
    }

    /// Adds one (gold, predicted) pair. Gold "other" is always incorrect since
    /// predictions never take that value.
    pub fn record(&mut self, gold: GoldLabel, predicted: Category) {
        let col = column(gold);
        if gold == GoldLabel::Category(predicted) {
            self.correct[col] += 1;
        } else {
            self.incorrect[col] += 1;
        }
    }

    pub fn merge(&mut self, other: &CategoryCounts) {
        for k in 0..4 {
            self.correct[k] += other.correct[k];
            self.incorrect[k] += other.incorrect[k];
        }
    }

    pub fn column_total(&self, col: usize) -> u64 {
        self.correct[col] + self.incorrect[col]
    }

    pub fn total(&self) -> u64 {
        (0..4).map(|k| self.column_total(k)).sum()
    }

    pub fn total_correct(&self) -> u64 {
        self.correct.iter().sum()
    }

    /// Percentage correct within one column, if it has any instances.
    pub fn column_accuracy(&self, col: usize) -> Option<f64> {
        let n = self.column_total(col);
        (n > 0).then(|| 100.0 * self.correct[col] as f64 / n as f64)
    }
}

/// Fraction correct over every instance, as a percentage.
pub fn micro_accuracy(counts: &CategoryCounts) -> Result<f64, EvalError> {
    let total = counts.total();
    if total == 0 {
        return Err(EvalError::Empty);
    }
    Ok(100.0 * counts.total_correct() as f64 / total as f64)
}

/// Unweighted mean of the three per-category accuracies; gold "other" is
/// excluded.
pub fn macro_accuracy(counts: &CategoryCounts) -> Result<f64, EvalError> {
    let mut sum = 0.0;
    for c in Category::ALL {
        sum += counts
            .column_accuracy(c.index())
            .ok_or(EvalError::MissingCategory(c))?;
    }
    Ok(sum / 3.0)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub name: String,
    pub counts: CategoryCounts,
}

pub fn score<I>(pairs: I, name: &str) -> Section
where
    I: IntoIterator<Item = (GoldLabel, Category)>,
{
    let mut counts = CategoryCounts::default();
    for (gold, predicted) in pairs {
        counts.record(gold, predicted);
    }
    Section {
        name: name.to_string(),
        counts,
    }
}

/// Rows are gold columns (indef, def, gen, other), columns are predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix(pub [[u64; 3]; 4]);

impl ConfusionMatrix {
    pub fn record(&mut self, gold: GoldLabel, predicted: Category) {
        self.0[column(gold)][predicted.index()] += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Report {
    pub title: String,
    pub sections: Vec<Section>,
    pub confusion: ConfusionMatrix,
}

impl Report {
    pub fn new(title: impl Into<String>) -> Self {
        Report {
            title: title.into(),
            ..Report::default()
        }
    }

    /// Builds a report from named groups of (gold, predicted) pairs.
    pub fn from_groups<N, I>(title: &str, groups: I) -> Self
    where
        N: AsRef<str>,
        I: IntoIterator<Item = (N, Vec<(GoldLabel, Category)>)>,
    {
        let mut report = Report::new(title);
        for (name, pairs) in groups {
            for &(g, p) in &pairs {
                report.confusion.record(g, p);
            }
            report.sections.push(score(pairs, name.as_ref()));
        }
        report
    }

    /// All sections merged.
    pub fn average(&self) -> CategoryCounts {
        let mut all = CategoryCounts::default();
        for s in &self.sections {
            all.merge(&s.counts);
        }
        all
    }

    pub fn micro(&self) -> Result<f64, EvalError> {
        micro_accuracy(&self.average())
    }

    pub fn macro_(&self) -> Result<f64, EvalError> {
        macro_accuracy(&self.average())
    }

    /// Recall of one category over all sections, if it has gold instances.
    pub fn recall(&self, category: Category) -> Option<f64> {
        self.average().column_accuracy(category.index())
    }
}

/// One decimal place, rounding half away from zero.
pub fn fmt_percent(x: f64) -> String {
    format!("{:.1}", (x * 10.0).round() / 10.0)
}

const LABEL_WIDTH: usize = 18;
const CELL_WIDTH: usize = 9;
const EMPTY_CELL: &str = "---";

fn row(out: &mut String, label: &str, cells: &[String]) {
    let _ = write!(out, "{label:<LABEL_WIDTH$}");
    for c in cells {
        let _ = write!(out, "{c:>CELL_WIDTH$}");
    }
    out.push('\n');
}

fn pct(x: Option<f64>) -> String {
    x.map_or_else(|| EMPTY_CELL.to_string(), fmt_percent)
}

fn count_rows(out: &mut String, counts: &CategoryCounts) {
    let mut correct: Vec<String> = counts.correct.iter().map(u64::to_string).collect();
    correct.push(counts.total_correct().to_string());
    row(out, "correct", &correct);
    let mut incorrect: Vec<String> = counts.incorrect.iter().map(u64::to_string).collect();
    incorrect.push((counts.total() - counts.total_correct()).to_string());
    row(out, "incorrect", &incorrect);
}

fn accuracy_row(out: &mut String, label: &str, counts: &CategoryCounts) {
    let mut cells: Vec<String> = (0..4).map(|k| pct(counts.column_accuracy(k))).collect();
    cells.push(pct(micro_accuracy(counts).ok()));
    row(out, label, &cells);
}

/// Renders the per-section counts and the average block as a text table.
pub fn render_table(report: &Report) -> String {
    let mut out = String::new();
    if !report.title.is_empty() {
        let _ = writeln!(out, "{}", report.title);
    }
    let mut header: Vec<String> = COLUMNS.iter().map(|s| s.to_string()).collect();
    header.push("total".into());
    row(&mut out, "", &header);

    for section in &report.sections {
        let _ = writeln!(out, "-- {} --", section.name);
        count_rows(&mut out, &section.counts);
        accuracy_row(&mut out, "% of correct", &section.counts);
    }

    let all = report.average();
    let total = all.total();
    let _ = writeln!(out, "-- average --");
    let mut appearance: Vec<String> = (0..4)
        .map(|k| pct((total > 0).then(|| 100.0 * all.column_total(k) as f64 / total as f64)))
        .collect();
    appearance.push(pct((total > 0).then_some(100.0)));
    row(&mut out, "% of appearance", &appearance);
    accuracy_row(&mut out, "% of correct", &all);
    row(&mut out, "micro accuracy", &[pct(micro_accuracy(&all).ok())]);
    row(&mut out, "macro accuracy", &[pct(macro_accuracy(&all).ok())]);
    out
}

/// `key<TAB>value` lines: micro, macro, per-column counts and the confusion
/// matrix. Undefined accuracies are written as `NA`.
pub fn render_summary(report: &Report) -> String {
    let all = report.average();
    let mut out = String::new();
    let num = |r: Result<f64, EvalError>| r.map_or_else(|_| "NA".to_string(), |x| format!("{x:.4}"));
    let _ = writeln!(out, "micro\t{}", num(micro_accuracy(&all)));
    let _ = writeln!(out, "macro\t{}", num(macro_accuracy(&all)));
    for (k, name) in COLUMNS.iter().enumerate() {
        let _ = writeln!(out, "correct_{name}\t{}", all.correct[k]);
        let _ = writeln!(out, "incorrect_{name}\t{}", all.incorrect[k]);
    }
    for (g, name) in COLUMNS.iter().enumerate() {
        for c in Category::ALL {
            let _ = writeln!(
                out,
                "confusion_{name}_{}\t{}",
                c.code(),
                report.confusion.0[g][c.index()]
            );
        }
    }
    out
}
