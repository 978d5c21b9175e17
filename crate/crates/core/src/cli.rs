//! The `bugfix` command line.
//!
//! Exit status: 0 on success with nothing to report, 1 when matches or fix
//! proposals were found or when an input could not be read, parsed or
//! validated, 2 on usage errors.

use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use similar::TextDiff;

use crate::catalog::{
    base_unit, collect_inputs, fix_patterns, load_catalog, load_program, scan_corpus, seeding_plan,
    SeedEntry, SeedFile,
};
use crate::engine::{apply_fix, match_pattern, restore_seed, seed_corpus, FixProposal};
use crate::registry::{build_registry, validate_registry, Registry, Severity};
use crate::spec_lang::{parse_spec_named, Pattern, SpecUnit};
use crate::tree::{encode_tree, render, NodeId, Tree};

/// Environment variable listing spec files or directories, `:`-separated.
pub const SPEC_PATH_VAR: &str = "BUGFIX_SPEC_PATH";

#[derive(Debug, Parser)]
#[command(name = "bugfix", version, about = "Match, fix and seed bug patterns in program trees")]
struct Cli {
    /// Spec file to load (repeatable); the bundled catalog is used when absent.
    #[arg(long = "spec", global = true, value_name = "FILE")]
    specs: Vec<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the loaded specs for consistency.
    Validate {
        /// Spec files to check, in addition to any given with --spec.
        #[arg(value_name = "SPEC")]
        files: Vec<PathBuf>,
    },
    /// List the matches of patterns in program files.
    Match {
        /// Only this pattern.
        #[arg(long)]
        pattern: Option<String>,
        /// MiniLang program files.
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Propose fixes, or apply them with --in-place.
    Fix {
        /// Only this pattern.
        #[arg(long)]
        pattern: Option<String>,
        /// Language used to display proposals.
        #[arg(long, default_value = "mini")]
        lang: String,
        /// Apply the non-overlapping proposals and rewrite the files.
        #[arg(long)]
        in_place: bool,
        /// MiniLang program files.
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Insert bugs using the reverses of the loaded patterns.
    Seed {
        /// Only seed bugs fixed by (or introduced by) this pattern.
        #[arg(long)]
        pattern: Option<String>,
        /// Number of bugs to insert across all files.
        #[arg(long)]
        count: usize,
        #[arg(long)]
        rng_seed: u64,
        /// Overwrite the inputs instead of writing `.seeded` copies.
        #[arg(long)]
        in_place: bool,
        /// MiniLang program files.
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Print a program in a concrete language.
    Render {
        /// Target language, e.g. mini, java or eiffel.
        #[arg(long, default_value = "mini")]
        lang: String,
        file: PathBuf,
    },
    /// Count pattern matches over files and directories.
    Report {
        /// Only this pattern.
        #[arg(long)]
        pattern: Option<String>,
        /// Program files, sidecars or directories to scan.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<i32, Failure>;

/// Runs the command line with the given arguments (program name first) and
/// returns the exit status.
pub fn run_cli<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let mut text = e.render().to_string();
            if code == 2 && !text.contains("Usage:") {
                text.push_str(&format!("\n{}\n", Cli::command().render_usage()));
            }
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match run(cli, out, err) {
        Ok(code) => code,
        Err(Failure(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
    }
}

fn spec_path_entries() -> Vec<PathBuf> {
    std::env::var_os(SPEC_PATH_VAR)
        .map(|v| std::env::split_paths(&v).filter(|p| !p.as_os_str().is_empty()).collect())
        .unwrap_or_default()
}

fn read_spec(path: &Path) -> Result<SpecUnit, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    parse_spec_named(&text, &path.display().to_string())
        .map_err(|e| Failure(format!("{}:{e}", path.display())))
}

fn spec_files_in(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "bugfix"))
        .collect();
    files.sort();
    Ok(files)
}

/// Base unit, then the `--spec` files, else the search path, else the
/// bundled catalog.
fn load_units(specs: &[PathBuf]) -> Result<Vec<SpecUnit>, Failure> {
    let mut units = vec![base_unit()];
    let search = spec_path_entries();
    if !specs.is_empty() {
        for s in specs {
            let found = if s.exists() || s.is_absolute() {
                s.clone()
            } else {
                search
                    .iter()
                    .map(|d| d.join(s))
                    .find(|p| p.exists())
                    .unwrap_or_else(|| s.clone())
            };
            units.push(read_spec(&found)?);
        }
    } else if !search.is_empty() {
        for entry in &search {
            if entry.is_dir() {
                for f in spec_files_in(entry)? {
                    units.push(read_spec(&f)?);
                }
            } else {
                units.push(read_spec(entry)?);
            }
        }
    } else {
        units.push(load_catalog());
    }
    Ok(units)
}

fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let mut specs = cli.specs.clone();
    if let Command::Validate { files: extra } = &cli.command {
        specs.extend(extra.iter().cloned());
    }
    let units = load_units(&specs)?;
    let reg = build_registry(&units)?;
    let patterns: Vec<Pattern> = reg.patterns().cloned().collect();
    let json = cli.format == Format::Json;
    if !matches!(cli.command, Command::Validate { .. }) {
        let errors: Vec<_> = validate_registry(&reg)
            .into_iter()
            .filter(|d| d.severity == Severity::Error)
            .collect();
        if let Some(first) = errors.first() {
            return Err(Failure(format!("invalid specs: {first}")));
        }
    }
    match cli.command {
        Command::Validate { .. } => validate(&reg, json, out),
        Command::Match { pattern, files } => {
            let selected = select(&patterns, pattern.as_deref())?;
            cmd_match(&selected, &files, &reg, json, out, err)
        }
        Command::Fix {
            pattern,
            lang,
            in_place,
            files,
        } => {
            let selected = select(&patterns, pattern.as_deref())?;
            cmd_fix(&selected, &patterns, &files, &lang, in_place, &reg, json, out, err)
        }
        Command::Seed {
            pattern,
            count,
            rng_seed,
            in_place,
            files,
        } => cmd_seed(&patterns, pattern.as_deref(), count, rng_seed, in_place, &files, &reg, json, out, err),
        Command::Render { lang, file } => {
            let tree = load_program(&file, &reg).map_err(|e| Failure(format!("{}: {e}", file.display())))?;
            let text = render(&tree.root, &lang, &reg)?;
            write!(out, "{text}")?;
            if !text.ends_with('\n') {
                writeln!(out)?;
            }
            Ok(0)
        }
        Command::Report { pattern, paths } => {
            let selected = select(&patterns, pattern.as_deref())?;
            let inputs = collect_inputs(&paths)?;
            let report = scan_corpus(&inputs, &selected, &reg);
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&report.to_json())?)?;
            } else {
                write!(out, "{}", report.to_text())?;
            }
            Ok(i32::from(!report.errors.is_empty()))
        }
    }
}

/// The fix patterns, or the single named one.
fn select<'p>(all: &'p [Pattern], name: Option<&str>) -> Result<Vec<&'p Pattern>, Failure> {
    match name {
        Some(n) => all
            .iter()
            .find(|p| p.name == n)
            .map(|p| vec![p])
            .ok_or_else(|| Failure(format!("unknown pattern `{n}`"))),
        None => Ok(fix_patterns(all)),
    }
}

fn validate(reg: &Registry, json: bool, out: &mut dyn Write) -> Outcome {
    let diags = validate_registry(reg);
    let failed = diags.iter().any(|d| d.severity == Severity::Error);
    if json {
        let doc = json!({
            "valid": !failed,
            "constructs": reg.constructs().count(),
            "syntax_rules": reg.syntaxes().count(),
            "patterns": reg.patterns().count(),
            "fingerprint": reg.fingerprint(),
            "diagnostics": diags,
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
    } else {
        for d in &diags {
            writeln!(out, "{d}")?;
        }
        if !failed {
            writeln!(
                out,
                "ok: {} constructs, {} syntax rules, {} patterns",
                reg.constructs().count(),
                reg.syntaxes().count(),
                reg.patterns().count()
            )?;
        }
    }
    Ok(i32::from(failed))
}

fn load(path: &Path, reg: &Registry) -> Result<Tree, Failure> {
    load_program(path, reg).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "json")
}

/// `line:col` of a byte offset in `text`, both 1-based.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

fn cmd_match(
    patterns: &[&Pattern],
    files: &[PathBuf],
    reg: &Registry,
    json: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    let mut found = Vec::new();
    let mut failed = false;
    for file in files {
        let tree = match load(file, reg) {
            Ok(t) => t,
            Err(Failure(e)) => {
                writeln!(err, "error: {e}")?;
                failed = true;
                continue;
            }
        };
        let text = if is_json(file) { String::new() } else { std::fs::read_to_string(file)? };
        for p in patterns {
            for m in match_pattern(p, &tree, reg)? {
                let node = tree.find(m.subject_id).expect("matched node");
                let pos = node.span.filter(|_| !text.is_empty()).map(|(s, _)| line_col(&text, s));
                if json {
                    let bindings: serde_json::Map<String, Value> =
                        m.bindings.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
                    found.push(json!({
                        "file": file.display().to_string(),
                        "pattern": m.pattern,
                        "subject": m.subject_id,
                        "construct": node.construct,
                        "line": pos.map(|p| p.0),
                        "column": pos.map(|p| p.1),
                        "bindings": bindings,
                    }));
                } else {
                    let at = match pos {
                        Some((l, c)) => format!("{}:{l}:{c}", file.display()),
                        None => file.display().to_string(),
                    };
                    let binds: Vec<String> = m.bindings.iter().map(|(k, v)| format!("{k}={v}")).collect();
                    writeln!(
                        out,
                        "{at}: {} at node {} ({}) [{}]",
                        m.pattern,
                        m.subject_id,
                        node.construct,
                        binds.join(", ")
                    )?;
                    found.push(Value::Null);
                }
            }
        }
    }
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(&Value::Array(found.clone()))?)?;
    }
    Ok(i32::from(failed || !found.is_empty()))
}

/// Text written back for a program file.
fn program_text(path: &Path, tree: &Tree, reg: &Registry) -> Result<String, Failure> {
    if is_json(path) {
        Ok(encode_tree(tree) + "\n")
    } else {
        Ok(render(&tree.root, "mini", reg)?)
    }
}

fn display_text(tree: &Tree, lang: &str, reg: &Registry) -> String {
    render(&tree.root, lang, reg).unwrap_or_else(|_| encode_tree(tree) + "\n")
}

fn diff(path: &Path, before: &str, after: &str) -> String {
    let name = path.display().to_string();
    TextDiff::from_lines(before, after)
        .unified_diff()
        .header(&name, &name)
        .to_string()
}

/// Applies every proposal whose subtree does not overlap an earlier one.
fn apply_disjoint(tree: &Tree, proposals: &[FixProposal], patterns: &[&Pattern], reg: &Registry) -> Result<(Tree, usize), Failure> {
    let mut current = tree.clone();
    let mut touched: HashSet<NodeId> = HashSet::new();
    let mut applied = 0;
    for prop in proposals {
        let Some(subject) = current.find(prop.location()) else {
            continue;
        };
        if subject.preorder().iter().any(|n| touched.contains(&n.id)) {
            continue;
        }
        let p = patterns
            .iter()
            .find(|p| p.name == prop.matched.pattern)
            .expect("proposal pattern");
        let next = apply_fix(p, &prop.matched, &current, reg)?;
        touched.extend(next.replacement.preorder().iter().map(|n| n.id));
        current = next.after;
        applied += 1;
    }
    Ok((current, applied))
}

/// Undoes every recorded seed, latest first.
fn restore_all(tree: &Tree, seeds: &SeedFile, all: &[Pattern], reg: &Registry) -> Result<Tree, Failure> {
    let mut entries: Vec<&SeedEntry> = seeds.seeds.iter().collect();
    entries.sort_by_key(|e| std::cmp::Reverse(e.record.ordinal));
    let mut current = tree.clone();
    for e in entries {
        let forward = all
            .iter()
            .find(|p| p.name == e.fix_pattern)
            .ok_or_else(|| Failure(format!("unknown pattern `{}`", e.fix_pattern)))?;
        current = restore_seed(forward, &e.record, &current, reg)?;
    }
    Ok(current)
}

#[allow(clippy::too_many_arguments)]
fn cmd_fix(
    patterns: &[&Pattern],
    all: &[Pattern],
    files: &[PathBuf],
    lang: &str,
    in_place: bool,
    reg: &Registry,
    json: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    let mut pending = 0usize;
    let mut failed = false;
    let mut report = Vec::new();
    for file in files {
        let tree = match load(file, reg) {
            Ok(t) => t,
            Err(Failure(e)) => {
                writeln!(err, "error: {e}")?;
                failed = true;
                continue;
            }
        };
        let sidecar = SeedFile::path_for(file);
        let seeds = if sidecar.exists() {
            Some(SeedFile::from_json(&std::fs::read_to_string(&sidecar)?, reg)?)
        } else {
            None
        };

        if let Some(seeds) = seeds {
            let fixed = restore_all(&tree, &seeds, all, reg)?;
            let count = seeds.seeds.len();
            if in_place {
                std::fs::write(file, program_text(file, &fixed, reg)?)?;
                std::fs::remove_file(&sidecar)?;
            } else {
                pending += count;
            }
            report.push(json!({"file": file.display().to_string(), "guided": true, "fixes": count, "applied": in_place}));
            if !json {
                if in_place {
                    writeln!(out, "{}: restored {count} seeded bug(s)", file.display())?;
                } else {
                    let d = diff(file, &display_text(&tree, lang, reg), &display_text(&fixed, lang, reg));
                    write!(out, "{d}")?;
                }
            }
            continue;
        }

        let mut proposals: Vec<FixProposal> = Vec::new();
        let mut shapes = HashSet::new();
        for p in patterns {
            for m in match_pattern(p, &tree, reg)? {
                let prop = apply_fix(p, &m, &tree, reg)?;
                if shapes.insert(crate::tree::encode_node(&prop.after.root.shape())) {
                    proposals.push(prop);
                }
            }
        }
        if in_place {
            let (fixed, applied) = apply_disjoint(&tree, &proposals, patterns, reg)?;
            if applied > 0 {
                std::fs::write(file, program_text(file, &fixed, reg)?)?;
            }
            report.push(json!({"file": file.display().to_string(), "guided": false, "fixes": applied, "applied": true}));
            if !json {
                writeln!(out, "{}: applied {applied} fix(es)", file.display())?;
            }
        } else {
            pending += proposals.len();
            let before = display_text(&tree, lang, reg);
            let mut items = Vec::new();
            for prop in &proposals {
                let d = diff(file, &before, &display_text(&prop.after, lang, reg));
                if !json {
                    writeln!(out, "# {} at node {}", prop.matched.pattern, prop.location())?;
                    write!(out, "{d}")?;
                }
                items.push(json!({"pattern": prop.matched.pattern, "subject": prop.location(), "diff": d}));
            }
            report.push(json!({"file": file.display().to_string(), "guided": false, "fixes": proposals.len(), "applied": false, "proposals": items}));
        }
    }
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(&Value::Array(report))?)?;
    }
    Ok(i32::from(failed || pending > 0))
}

/// `dir/name.seeded.ext` for `dir/name.ext`.
fn seeded_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.seeded.{}", ext.to_string_lossy()),
        None => format!("{stem}.seeded"),
    };
    path.with_file_name(name)
}

#[allow(clippy::too_many_arguments)]
fn cmd_seed(
    all: &[Pattern],
    pattern: Option<&str>,
    count: usize,
    rng_seed: u64,
    in_place: bool,
    files: &[PathBuf],
    reg: &Registry,
    json: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    let (mut plans, skipped) = seeding_plan(all, reg);
    if let Some(name) = pattern {
        plans.retain(|p| p.forward == name || p.seeding.name == name);
        if plans.is_empty() {
            return Err(Failure(format!("no seeding pattern for `{name}`")));
        }
    }
    for s in &skipped {
        writeln!(err, "warning: {s}")?;
    }
    let mut trees = Vec::with_capacity(files.len());
    for f in files {
        trees.push(load(f, reg)?);
    }
    let seeding: Vec<Pattern> = plans.iter().map(|p| p.seeding.clone()).collect();
    let outcome = seed_corpus(&trees, &seeding, count, rng_seed, reg)?;
    let forward_of = |name: &str| {
        plans
            .iter()
            .find(|p| p.seeding.name == name)
            .map(|p| p.forward.clone())
            .unwrap_or_default()
    };

    let mut summary = Vec::new();
    for (i, file) in files.iter().enumerate() {
        let mut entries: Vec<SeedEntry> = outcome
            .records
            .iter()
            .filter(|(fi, _)| *fi == i)
            .map(|(_, r)| SeedEntry {
                fix_pattern: forward_of(&r.pattern),
                record: r.clone(),
            })
            .collect();
        let mut tree = outcome.trees[i].clone();
        if !is_json(file) {
            let (renumbered, map) = tree.renumbered();
            for e in &mut entries {
                e.record.location = map[&e.record.location];
                e.record.mutated.visit_mut(&mut |n| {
                    if let Some(new) = map.get(&n.id) {
                        n.id = *new;
                    }
                });
            }
            tree = renumbered;
        }
        let target = if in_place { file.clone() } else { seeded_path(file) };
        std::fs::write(&target, program_text(&target, &tree, reg)?)?;
        let sidecar = SeedFile {
            file: target
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            rng_seed,
            seeds: entries,
        };
        std::fs::write(SeedFile::path_for(&target), sidecar.to_json())?;
        summary.push(json!({
            "file": file.display().to_string(),
            "output": target.display().to_string(),
            "seeds": sidecar.seeds.iter().map(|e| json!({
                "ordinal": e.record.ordinal,
                "pattern": e.record.pattern,
                "fix_pattern": e.fix_pattern,
                "location": e.record.location,
            })).collect::<Vec<_>>(),
        }));
        if !json {
            writeln!(out, "{}: {} bug(s) seeded -> {}", file.display(), sidecar.seeds.len(), target.display())?;
        }
    }
    if outcome.shortfall {
        writeln!(
            err,
            "warning: only {} of {count} bug(s) could be seeded ({} candidate sites)",
            outcome.records.len(),
            outcome.sites
        )?;
    }
    if json {
        let doc = json!({
            "requested": count,
            "seeded": outcome.records.len(),
            "sites": outcome.sites,
            "shortfall": outcome.shortfall,
            "files": summary,
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
    }
    Ok(0)
}
