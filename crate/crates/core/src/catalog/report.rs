//! Corpus scanning: how often each fix pattern matches, grouped by category.

use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde_json::{json, Value};

use super::{category_of, Category, SeedFile};
use crate::engine::match_pattern;
use crate::registry::Registry;
use crate::spec_lang::Pattern;
use crate::tree::{decode_tree, parse_minilang, Tree};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScanInput {
    Program(PathBuf),
    /// A seeding sidecar; its records count as known bugs.
    Seeds(PathBuf),
}

impl ScanInput {
    pub fn path(&self) -> &Path {
        match self {
            ScanInput::Program(p) | ScanInput::Seeds(p) => p,
        }
    }
}

fn is_seeds(p: &Path) -> bool {
    p.file_name()
        .and_then(|n| n.to_str())
        .is_some_and(|n| n.ends_with(".seeds.json"))
}

fn is_program(p: &Path) -> bool {
    matches!(p.extension().and_then(|e| e.to_str()), Some("mini" | "json"))
}

/// Expands directories (recursively, sorted) into program and sidecar files.
/// Files named explicitly are taken whatever their extension.
pub fn collect_inputs(paths: &[PathBuf]) -> std::io::Result<Vec<ScanInput>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            walk(p, &mut out)?;
        } else if is_seeds(p) {
            out.push(ScanInput::Seeds(p.clone()));
        } else {
            out.push(ScanInput::Program(p.clone()));
        }
    }
    Ok(out)
}

fn walk(dir: &Path, out: &mut Vec<ScanInput>) -> std::io::Result<()> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            walk(&p, out)?;
        } else if is_seeds(&p) {
            out.push(ScanInput::Seeds(p));
        } else if is_program(&p) {
            out.push(ScanInput::Program(p));
        }
    }
    Ok(())
}

/// Reads a `.mini` source or a JSON tree.
pub fn load_program(path: &Path, reg: &Registry) -> Result<Tree, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    if path.extension().and_then(|e| e.to_str()) == Some("json") {
        decode_tree(&text, reg).map_err(|e| e.to_string())
    } else {
        parse_minilang(&text, reg).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    /// Program files seen, including unreadable ones.
    pub files: usize,
    pub per_pattern: IndexMap<String, usize>,
    pub per_category: IndexMap<Category, usize>,
    /// Unreadable inputs: path and message.
    pub errors: Vec<(String, String)>,
}

impl Report {
    fn new(patterns: &[&Pattern]) -> Self {
        Report {
            files: 0,
            per_pattern: patterns.iter().map(|p| (p.name.clone(), 0)).collect(),
            per_category: Category::ALL.iter().map(|c| (*c, 0)).collect(),
            errors: Vec::new(),
        }
    }

    fn add(&mut self, pattern: &str, n: usize) {
        *self.per_pattern.entry(pattern.to_string()).or_insert(0) += n;
        if let Some(c) = category_of(pattern) {
            *self.per_category.entry(c).or_insert(0) += n;
        }
    }

    pub fn total(&self) -> usize {
        self.per_category.values().sum()
    }

    /// Share of each category among categorised findings, rounded to one
    /// decimal place.
    pub fn percentages(&self) -> IndexMap<Category, f64> {
        let total = self.total();
        self.per_category
            .iter()
            .map(|(c, n)| (*c, round1(percent(*n, total))))
            .collect()
    }

    pub fn to_json(&self) -> Value {
        let per_pattern: serde_json::Map<String, Value> =
            self.per_pattern.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        let per_category: serde_json::Map<String, Value> = self
            .per_category
            .iter()
            .map(|(k, v)| (k.to_string(), json!(v)))
            .collect();
        let percentages: serde_json::Map<String, Value> = self
            .percentages()
            .iter()
            .map(|(k, v)| (k.to_string(), json!(v)))
            .collect();
        let errors: Vec<Value> = self
            .errors
            .iter()
            .map(|(p, m)| json!({"path": p, "message": m}))
            .collect();
        json!({
            "files": self.files,
            "per_pattern": per_pattern,
            "per_category": per_category,
            "percentages": percentages,
            "errors": errors,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("files scanned: {}\n\n", self.files);
        let width = self.per_pattern.keys().map(String::len).max().unwrap_or(0).max(18);
        for (p, n) in &self.per_pattern {
            out.push_str(&format!("{p:<width$}  {n:>5}\n"));
        }
        out.push('\n');
        let total = self.total();
        for (c, n) in &self.per_category {
            out.push_str(&format!(
                "{:<width$}  {n:>5}  {:>6}\n",
                c.as_str(),
                format_ratio(*n, total)
            ));
        }
        for (p, m) in &self.errors {
            out.push_str(&format!("error: {p}: {m}\n"));
        }
        out
    }
}

fn percent(n: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        n as f64 * 100.0 / total as f64
    }
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

/// `n / total` as a percentage with one decimal, e.g. `14.0%`.
pub fn format_ratio(n: usize, total: usize) -> String {
    format!("{:.1}%", round1(percent(n, total)))
}

/// Counts the matches of each pattern over the inputs. Sidecar records add
/// their bug to the count of its fixing pattern when that pattern is not
/// itself scanned.
pub fn scan_corpus(inputs: &[ScanInput], patterns: &[&Pattern], reg: &Registry) -> Report {
    let mut report = Report::new(patterns);
    for input in inputs {
        let shown = input.path().display().to_string();
        match input {
            ScanInput::Program(path) => {
                report.files += 1;
                let tree = match load_program(path, reg) {
                    Ok(t) => t,
                    Err(e) => {
                        report.errors.push((shown, e));
                        continue;
                    }
                };
                for p in patterns {
                    match match_pattern(p, &tree, reg) {
                        Ok(ms) => report.add(&p.name, ms.len()),
                        Err(e) => report.errors.push((shown.clone(), e.to_string())),
                    }
                }
            }
            ScanInput::Seeds(path) => {
                let parsed = std::fs::read_to_string(path)
                    .map_err(|e| e.to_string())
                    .and_then(|t| SeedFile::from_json(&t, reg).map_err(|e| e.to_string()));
                match parsed {
                    Ok(sf) => {
                        for s in &sf.seeds {
                            if !patterns.iter().any(|p| p.name == s.fix_pattern) {
                                report.add(&s.fix_pattern, 1);
                            }
                        }
                    }
                    Err(e) => report.errors.push((shown, e)),
                }
            }
        }
    }
    report.errors.sort();
    report
}
