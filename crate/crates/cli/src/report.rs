use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::eval::{eval_dir, EvalRow, Method, ProgressRow};
use crate::io::{csv_files, read_csv, write_table, write_text};

/// A pivoted table ready for CSV and markdown output.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn markdown(&self, out: &mut String) {
        let _ = writeln!(out, "### {}\n", self.title);
        let _ = writeln!(out, "| {} |", self.header.join(" | "));
        let _ = writeln!(out, "|{}", "---|".repeat(self.header.len()));
        for r in &self.rows {
            let _ = writeln!(out, "| {} |", r.join(" | "));
        }
        out.push('\n');
    }
}

fn num(x: f64) -> String {
    format!("{x:.4}")
}

fn methods_in(rows: &[EvalRow]) -> Vec<Method> {
    let mut m: Vec<Method> = rows.iter().map(|r| r.method).collect();
    m.sort();
    m.dedup();
    m
}

/// Distinct budgets of the sampling and baseline rows, ascending.
fn fractions_in(rows: &[EvalRow]) -> Vec<f64> {
    let mut f: Vec<f64> = rows.iter().filter(|r| r.method != Method::Exact).map(|r| r.particle_fraction).collect();
    f.sort_by(f64::total_cmp);
    f.dedup();
    if f.is_empty() {
        f.push(1.0);
    }
    f
}

fn lookup<'a>(rows: &'a [EvalRow], method: Method, metric: &str, fraction: f64) -> Option<&'a EvalRow> {
    rows.iter()
        .find(|r| r.method == method && r.metric == metric && (method == Method::Exact || r.particle_fraction == fraction))
}

/// Accuracy per budget, with each method's policy evaluations relative
/// to exact enumeration.
pub fn accuracy_table(stem: &str, rows: &[EvalRow]) -> Table {
    let methods = methods_in(rows);
    let mut header = vec!["particle_fraction".to_string(), "particles".to_string()];
    for m in &methods {
        header.push(format!("{}_accuracy", m.tag()));
        header.push(format!("{}_stderr", m.tag()));
        header.push(format!("{}_compute_ratio", m.tag()));
    }
    let body = fractions_in(rows)
        .into_iter()
        .map(|f| {
            let particles = methods
                .iter()
                .filter(|&&m| m == Method::Ours || m == Method::OursNoNn)
                .find_map(|&m| lookup(rows, m, "accuracy", f))
                .map_or(String::new(), |r| r.particles.to_string());
            let mut line = vec![num(f), particles];
            for &m in &methods {
                match lookup(rows, m, "accuracy", f) {
                    Some(r) => line.extend([num(r.value), num(r.stderr), num(r.compute_ratio)]),
                    None => line.extend([String::new(), String::new(), String::new()]),
                }
            }
            line
        })
        .collect();
    Table {
        title: format!("{stem}: accuracy over particle budget"),
        header,
        rows: body,
    }
}

/// KL from the exact posterior per budget, for the sampling methods.
pub fn kl_table(stem: &str, rows: &[EvalRow]) -> Table {
    let methods: Vec<Method> = methods_in(rows).into_iter().filter(|m| matches!(m, Method::Ours | Method::OursNoNn)).collect();
    let mut header = vec!["particle_fraction".to_string()];
    for m in &methods {
        header.push(format!("{}_kl", m.tag()));
        header.push(format!("{}_stderr", m.tag()));
    }
    let body = fractions_in(rows)
        .into_iter()
        .map(|f| {
            let mut line = vec![num(f)];
            for &m in &methods {
                match lookup(rows, m, "kl", f) {
                    Some(r) => line.extend([num(r.value), num(r.stderr)]),
                    None => line.extend([String::new(), String::new()]),
                }
            }
            line
        })
        .collect();
    Table {
        title: format!("{stem}: KL from exact inference over particle budget"),
        header,
        rows: body,
    }
}

/// Accuracy per progress bucket, one column per method.
pub fn progress_table(stem: &str, curves: &[(Method, Vec<ProgressRow>)]) -> Table {
    let mut header = vec!["bucket".to_string(), "steps".to_string()];
    header.extend(curves.iter().map(|(m, _)| m.tag().to_string()));
    let n = curves.iter().map(|(_, c)| c.len()).max().unwrap_or(0);
    let body = (0..n)
        .map(|b| {
            let count = curves.first().and_then(|(_, c)| c.get(b)).map_or(0, |r| r.count);
            let mut line = vec![b.to_string(), count.to_string()];
            line.extend(curves.iter().map(|(_, c)| c.get(b).map_or(String::new(), |r| num(r.accuracy))));
            line
        })
        .collect();
    Table {
        title: format!("{stem}: accuracy over episode progress"),
        header,
        rows: body,
    }
}

/// Builds every table from the evaluation CSVs under `<out>/eval` and
/// writes them to `<out>/report`, plus a combined `report.md`.
pub fn report(out: &Path) -> Result<Vec<PathBuf>> {
    let files = csv_files(&eval_dir(out))?;
    let mut tables = Vec::new();
    for path in &files {
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else { continue };
        if stem.contains("-progress-") {
            continue;
        }
        let rows: Vec<EvalRow> = read_csv(path)?;
        tables.push(("accuracy", accuracy_table(stem, &rows), stem.to_string()));
        if rows.iter().any(|r| r.metric == "kl") {
            tables.push(("kl", kl_table(stem, &rows), stem.to_string()));
        }
        let mut curves = BTreeMap::new();
        for m in Method::ALL {
            let p = path.with_file_name(format!("{stem}-progress-{}.csv", m.tag()));
            if files.contains(&p) {
                curves.insert(m, read_csv::<ProgressRow>(&p)?);
            }
        }
        if !curves.is_empty() {
            let curves: Vec<_> = curves.into_iter().collect();
            tables.push(("progress", progress_table(stem, &curves), stem.to_string()));
        }
    }
    let dir = out.join("report");
    let mut written = Vec::new();
    let mut md = String::from("# Evaluation report\n\n");
    for (kind, t, stem) in &tables {
        let path = dir.join(format!("{stem}-{kind}.csv"));
        write_table(&path, &t.header, &t.rows)?;
        written.push(path);
        t.markdown(&mut md);
    }
    let md_path = dir.join("report.md");
    write_text(&md_path, &md)?;
    written.push(md_path);
    Ok(written)
}
