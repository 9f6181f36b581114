//! Aligned plain-text tables for evaluation reports (JSON output is plain serde).

use serde::{Deserialize, Serialize};

use crate::convergence::{ConvergenceMethod, ConvergenceReport};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    /// First column left-aligned, the rest right-aligned, two spaces apart.
    pub fn render(&self) -> String {
        let cols = self.header.len();
        let mut width = vec![0; cols];
        for row in std::iter::once(&self.header).chain(&self.rows) {
            for (c, cell) in row.iter().enumerate().take(cols) {
                width[c] = width[c].max(cell.chars().count());
            }
        }
        let line = |row: &[String]| {
            let cells: Vec<String> = (0..cols)
                .map(|c| {
                    let cell = row.get(c).map(String::as_str).unwrap_or("");
                    if c == 0 {
                        format!("{cell:<w$}", w = width[c])
                    } else {
                        format!("{cell:>w$}", w = width[c])
                    }
                })
                .collect();
            cells.join("  ").trim_end().to_string()
        };
        let mut out = line(&self.header);
        out.push('\n');
        out.push_str(&"-".repeat(width.iter().sum::<usize>() + 2 * cols.saturating_sub(1)));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }
}

fn num(x: f64) -> String {
    format!("{x:.4}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_else(|| "-".into())
}

pub fn convergence_table(report: &ConvergenceReport) -> Table {
    match report.method {
        ConvergenceMethod::Sbue => {
            let mut t = Table::new(std::iter::once("k".to_string()).chain(report.agents.iter().map(|a| format!("rmse {a}"))));
            let rmse = report.rmse.as_deref().unwrap_or(&[]);
            for (s, k) in report.sizes.iter().enumerate() {
                let mut row = vec![k.to_string()];
                row.extend(rmse.iter().map(|series| num(series[s])));
                t.push(row);
            }
            t
        }
        ConvergenceMethod::Sica => {
            let mut t = Table::new(["k", "mean cosine", "degenerate"]);
            let sim = report.mean_similarity.as_deref().unwrap_or(&[]);
            for (s, k) in report.sizes.iter().enumerate() {
                t.push(vec![k.to_string(), opt(sim.get(s).copied().flatten()), report.degenerate[s].to_string()]);
            }
            t
        }
    }
}

/// One row of a ranking-agreement table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRow {
    pub category: String,
    pub random: Option<f64>,
    pub strength: Option<f64>,
    pub sica: Option<f64>,
    pub iaa: Option<(f64, f64)>,
    pub n: usize,
}

pub fn ranking_table(rows: &[RankingRow]) -> Table {
    let mut t = Table::new(["Category", "Rand.", "Str.", "SICA", "IAA-rank", "N"]);
    for r in rows {
        let iaa = r
            .iaa
            .map(|(lo, hi)| format!("{:.3} ± {:.3}", (lo + hi) / 2.0, (hi - lo) / 2.0))
            .unwrap_or_else(|| "-".into());
        t.push(vec![r.category.clone(), opt(r.random), opt(r.strength), opt(r.sica), iaa, r.n.to_string()]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_line_up() {
        let rows = vec![
            RankingRow {
                category: "E".into(),
                random: Some(0.55),
                strength: None,
                sica: Some(0.74),
                iaa: Some((0.85, 0.87)),
                n: 30,
            },
            RankingRow {
                category: "F (expert)".into(),
                random: Some(0.58),
                strength: Some(0.6),
                sica: Some(2.0 / 3.0),
                iaa: None,
                n: 30,
            },
        ];
        let text = ranking_table(&rows).render();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[2].contains("0.860 ± 0.010"));
        assert!(lines[3].contains("0.6667"));
        assert_eq!(lines[2].chars().count(), lines[3].chars().count());
    }
}
