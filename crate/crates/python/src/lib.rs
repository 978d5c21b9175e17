//! Python bindings: registries, program trees, matching, fixing, seeding and
//! corpus reports.

use std::path::PathBuf;

use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;

use bugfix_core::catalog::{self, base_unit, load_catalog, seeding_plan};
use bugfix_core::engine;
use bugfix_core::registry::{self, build_registry, validate_registry};
use bugfix_core::spec_lang::{parse_spec, render_spec, Pattern, SpecUnit};
use bugfix_core::tree::{self, decode_tree, encode_node, encode_tree, parse_minilang, render};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A merged set of constructs, syntax rules and patterns.
#[pyclass(name = "Registry", module = "bugfix", frozen)]
struct PyRegistry {
    inner: registry::Registry,
}

impl PyRegistry {
    fn pattern(&self, name: &str) -> PyResult<&Pattern> {
        self.inner
            .pattern(name)
            .ok_or_else(|| PyKeyError::new_err(format!("unknown pattern `{name}`")))
    }
}

#[pymethods]
impl PyRegistry {
    /// The bundled constructs and pattern catalog.
    #[staticmethod]
    fn bundled() -> PyResult<Self> {
        let inner = build_registry(&[base_unit(), load_catalog()]).map_err(value_error)?;
        Ok(PyRegistry { inner })
    }

    /// Builds a registry from spec sources, on top of the bundled constructs
    /// unless `base` is false.
    #[staticmethod]
    #[pyo3(signature = (sources, base = true))]
    fn from_sources(sources: Vec<String>, base: bool) -> PyResult<Self> {
        let mut units: Vec<SpecUnit> = if base { vec![base_unit()] } else { Vec::new() };
        for s in &sources {
            units.push(parse_spec(s).map_err(value_error)?);
        }
        let inner = build_registry(&units).map_err(value_error)?;
        Ok(PyRegistry { inner })
    }

    /// Diagnostics as `severity: name: message` lines; empty when consistent.
    fn validate(&self) -> Vec<String> {
        validate_registry(&self.inner).iter().map(ToString::to_string).collect()
    }

    fn pattern_names(&self) -> Vec<String> {
        self.inner.patterns().map(|p| p.name.clone()).collect()
    }

    fn construct_names(&self) -> Vec<String> {
        self.inner.constructs().map(|c| c.name.clone()).collect()
    }

    fn conforms(&self, sub: &str, sup: &str) -> bool {
        self.inner.conforms(sub, sup)
    }

    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }

    fn __repr__(&self) -> String {
        format!(
            "Registry({} constructs, {} patterns)",
            self.inner.constructs().count(),
            self.inner.patterns().count()
        )
    }
}

/// A validated program tree.
#[pyclass(name = "Tree", module = "bugfix", frozen)]
struct PyTree {
    inner: tree::Tree,
}

#[pymethods]
impl PyTree {
    #[staticmethod]
    fn parse_mini(source: &str, registry: &PyRegistry) -> PyResult<Self> {
        let inner = parse_minilang(source, &registry.inner).map_err(value_error)?;
        Ok(PyTree { inner })
    }

    #[staticmethod]
    fn from_json(document: &str, registry: &PyRegistry) -> PyResult<Self> {
        let inner = decode_tree(document, &registry.inner).map_err(value_error)?;
        Ok(PyTree { inner })
    }

    /// Canonical JSON encoding.
    fn to_json(&self) -> String {
        encode_tree(&self.inner)
    }

    #[pyo3(signature = (registry, lang = "mini"))]
    fn render(&self, registry: &PyRegistry, lang: &str) -> PyResult<String> {
        render(&self.inner.root, lang, &registry.inner).map_err(value_error)
    }

    /// JSON of the subtree rooted at `id`, or None.
    fn node_json(&self, id: u64) -> Option<String> {
        self.inner.find(id).map(encode_node)
    }

    #[getter]
    fn size(&self) -> usize {
        self.inner.root.size()
    }

    fn __len__(&self) -> usize {
        self.inner.root.size()
    }

    fn __eq__(&self, other: &PyTree) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Tree({} nodes, root {})", self.inner.root.size(), self.inner.root.construct)
    }
}

/// One satisfying assignment of a pattern.
#[pyclass(name = "Match", module = "bugfix", frozen)]
struct PyMatch {
    inner: engine::Match,
}

#[pymethods]
impl PyMatch {
    #[getter]
    fn pattern(&self) -> String {
        self.inner.pattern.clone()
    }

    #[getter]
    fn subject_id(&self) -> u64 {
        self.inner.subject_id
    }

    /// `(name, node id)` pairs in declaration order.
    #[getter]
    fn bindings(&self) -> Vec<(String, u64)> {
        self.inner.bindings.clone()
    }

    fn __repr__(&self) -> String {
        let b: Vec<String> = self.inner.bindings.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("Match({} at {} [{}])", self.inner.pattern, self.inner.subject_id, b.join(", "))
    }
}

/// A bug inserted by `seed`.
#[pyclass(name = "SeedRecord", module = "bugfix", frozen)]
struct PySeedRecord {
    inner: engine::SeedRecord,
    #[pyo3(get)]
    fix_pattern: String,
    /// Index of the tree it was seeded into.
    #[pyo3(get)]
    tree_index: usize,
}

#[pymethods]
impl PySeedRecord {
    #[getter]
    fn pattern(&self) -> String {
        self.inner.pattern.clone()
    }

    #[getter]
    fn location(&self) -> u64 {
        self.inner.location
    }

    #[getter]
    fn ordinal(&self) -> usize {
        self.inner.ordinal
    }

    #[getter]
    fn rng_seed(&self) -> u64 {
        self.inner.rng_seed
    }

    #[getter]
    fn original(&self) -> String {
        encode_node(&self.inner.original)
    }

    #[getter]
    fn mutated(&self) -> String {
        encode_node(&self.inner.mutated)
    }

    fn __repr__(&self) -> String {
        format!(
            "SeedRecord(#{} {} at {}, fixed by {})",
            self.inner.ordinal, self.inner.pattern, self.inner.location, self.fix_pattern
        )
    }
}

/// Canonical text of a spec source.
#[pyfunction]
fn format_spec(text: &str) -> PyResult<String> {
    parse_spec(text).map(|u| render_spec(&u)).map_err(value_error)
}

#[pyfunction]
fn match_pattern(registry: &PyRegistry, pattern: &str, tree: &PyTree) -> PyResult<Vec<PyMatch>> {
    let p = registry.pattern(pattern)?;
    let ms = engine::match_pattern(p, &tree.inner, &registry.inner).map_err(value_error)?;
    Ok(ms.into_iter().map(|inner| PyMatch { inner }).collect())
}

/// The tree with the pattern's fix applied at `m`.
#[pyfunction]
fn apply_fix(registry: &PyRegistry, m: &PyMatch, tree: &PyTree) -> PyResult<PyTree> {
    let p = registry.pattern(&m.inner.pattern)?;
    let proposal = engine::apply_fix(p, &m.inner, &tree.inner, &registry.inner).map_err(value_error)?;
    Ok(PyTree { inner: proposal.after })
}

/// Canonical spec text of the pattern's derived reverse.
#[pyfunction]
fn reverse_pattern(registry: &PyRegistry, pattern: &str) -> PyResult<String> {
    let p = registry.pattern(pattern)?;
    let rev = engine::reverse_pattern(p, &registry.inner).map_err(value_error)?;
    Ok(render_spec(&SpecUnit {
        patterns: vec![rev],
        ..SpecUnit::default()
    }))
}

/// Seeds up to `count` bugs across `trees`. Returns the mutated trees and
/// the records.
#[pyfunction]
#[pyo3(signature = (registry, trees, count, rng_seed, pattern = None))]
fn seed(
    registry: &PyRegistry,
    trees: Vec<PyRef<'_, PyTree>>,
    count: usize,
    rng_seed: u64,
    pattern: Option<&str>,
) -> PyResult<(Vec<PyTree>, Vec<PySeedRecord>)> {
    let all: Vec<Pattern> = registry.inner.patterns().cloned().collect();
    let (mut plans, _) = seeding_plan(&all, &registry.inner);
    if let Some(name) = pattern {
        plans.retain(|p| p.forward == name || p.seeding.name == name);
        if plans.is_empty() {
            return Err(PyKeyError::new_err(format!("no seeding pattern for `{name}`")));
        }
    }
    let inputs: Vec<tree::Tree> = trees.iter().map(|t| t.inner.clone()).collect();
    let seeding: Vec<Pattern> = plans.iter().map(|p| p.seeding.clone()).collect();
    let out = engine::seed_corpus(&inputs, &seeding, count, rng_seed, &registry.inner).map_err(value_error)?;
    let records = out
        .records
        .into_iter()
        .map(|(tree_index, inner)| PySeedRecord {
            fix_pattern: plans
                .iter()
                .find(|p| p.seeding.name == inner.pattern)
                .map(|p| p.forward.clone())
                .unwrap_or_default(),
            inner,
            tree_index,
        })
        .collect();
    Ok((out.trees.into_iter().map(|inner| PyTree { inner }).collect(), records))
}

/// Undoes one seeded bug with its fixing pattern.
#[pyfunction]
fn restore(registry: &PyRegistry, tree: &PyTree, record: &PySeedRecord) -> PyResult<PyTree> {
    let forward = registry.pattern(&record.fix_pattern)?;
    let inner = engine::restore_seed(forward, &record.inner, &tree.inner, &registry.inner).map_err(value_error)?;
    Ok(PyTree { inner })
}

/// JSON report of pattern matches over files and directories.
#[pyfunction]
#[pyo3(signature = (registry, paths, pattern = None))]
fn report(registry: &PyRegistry, paths: Vec<PathBuf>, pattern: Option<&str>) -> PyResult<String> {
    let all: Vec<Pattern> = registry.inner.patterns().cloned().collect();
    let mut patterns = catalog::fix_patterns(&all);
    if let Some(name) = pattern {
        patterns = vec![registry.pattern(name)?];
    }
    let inputs = catalog::collect_inputs(&paths).map_err(value_error)?;
    let r = catalog::scan_corpus(&inputs, &patterns, &registry.inner);
    serde_json::to_string_pretty(&r.to_json()).map_err(value_error)
}

/// Runs the command line; returns `(exit code, stdout, stderr)`.
#[pyfunction]
fn run_cli(args: Vec<String>) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("bugfix".to_string()).chain(args);
    let code = bugfix_core::cli::run_cli(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8_lossy(&out).into_owned(),
        String::from_utf8_lossy(&err).into_owned(),
    )
}

#[pymodule]
fn bugfix(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRegistry>()?;
    m.add_class::<PyTree>()?;
    m.add_class::<PyMatch>()?;
    m.add_class::<PySeedRecord>()?;
    m.add_function(wrap_pyfunction!(format_spec, m)?)?;
    m.add_function(wrap_pyfunction!(match_pattern, m)?)?;
    m.add_function(wrap_pyfunction!(apply_fix, m)?)?;
    m.add_function(wrap_pyfunction!(reverse_pattern, m)?)?;
    m.add_function(wrap_pyfunction!(seed, m)?)?;
    m.add_function(wrap_pyfunction!(restore, m)?)?;
    m.add_function(wrap_pyfunction!(report, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    m.add("CATALOG_SOURCE", catalog::CATALOG_SOURCE)?;
    Ok(())
}
