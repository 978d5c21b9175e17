//! The bundled constructs, the bug-fixing pattern catalog, and how each
//! catalog pattern is classified and seeded.

mod report;
mod seeds;

use crate::engine::reverse_pattern;
use crate::registry::Registry;
use crate::spec_lang::{parse_spec_named, Pattern, SpecUnit};

pub use report::{collect_inputs, format_ratio, load_program, scan_corpus, Report, ScanInput};
pub use seeds::{SeedFile, SeedEntry, SeedFileError};

pub const BASE_SOURCE: &str = include_str!("../../catalog/base.bugfix");
pub const CATALOG_SOURCE: &str = include_str!("../../catalog/catalog.bugfix");

/// Constructs and syntax rules every registry starts from.
pub fn base_unit() -> SpecUnit {
    parse_spec_named(BASE_SOURCE, "<base>").expect("bundled base unit parses")
}

/// The bundled pattern catalog.
pub fn load_catalog() -> SpecUnit {
    parse_spec_named(CATALOG_SOURCE, "<catalog>").expect("bundled catalog parses")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    NullCheck,
    IncorrectVariable,
    OffByOne,
    OrderOperator,
    TrueFalse,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::NullCheck,
        Category::IncorrectVariable,
        Category::OffByOne,
        Category::OrderOperator,
        Category::TrueFalse,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::NullCheck => "null_check",
            Category::IncorrectVariable => "incorrect_variable",
            Category::OffByOne => "off_by_one",
            Category::OrderOperator => "order_operator",
            Category::TrueFalse => "true_false",
        }
    }
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Scanned for and fixed.
    Fix,
    /// Only used to seed bugs; its matches are not findings.
    SeedOnly,
}

/// Where the bug-introducing counterpart of a pattern comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedSource {
    Derived,
    Explicit(&'static str),
}

#[derive(Debug, Clone, Copy)]
pub struct Entry {
    pub pattern: &'static str,
    pub category: Category,
    pub role: Role,
    pub seed: SeedSource,
}

const fn fix(pattern: &'static str, category: Category) -> Entry {
    Entry {
        pattern,
        category,
        role: Role::Fix,
        seed: SeedSource::Derived,
    }
}

pub const ENTRIES: &[Entry] = &[
    fix("SWAPPED_ARGUMENTS", Category::IncorrectVariable),
    fix("PLUS_MINUS", Category::OffByOne),
    fix("EQ_NEQ", Category::OrderOperator),
    fix("OFF_BY_ONE", Category::OffByOne),
    fix("OFF_BY_ONE_MINUS", Category::OffByOne),
    fix("LT_LE", Category::OrderOperator),
    fix("LE_LT", Category::OrderOperator),
    fix("GT_GE", Category::OrderOperator),
    fix("GE_GT", Category::OrderOperator),
    Entry {
        seed: SeedSource::Explicit("FALSE_TRUE_FLIP"),
        ..fix("TRUE_FALSE_FLIP", Category::TrueFalse)
    },
    Entry {
        seed: SeedSource::Explicit("TRUE_FALSE_FLIP"),
        ..fix("FALSE_TRUE_FLIP", Category::TrueFalse)
    },
    Entry {
        seed: SeedSource::Explicit("MISSING_NULL_CHECK_REV"),
        ..fix("MISSING_NULL_CHECK", Category::NullCheck)
    },
    Entry {
        role: Role::SeedOnly,
        ..fix("WRONG_VARIABLE", Category::IncorrectVariable)
    },
];

pub fn entry(pattern: &str) -> Option<&'static Entry> {
    ENTRIES.iter().find(|e| e.pattern == pattern)
}

pub fn category_of(pattern: &str) -> Option<Category> {
    entry(pattern).map(|e| e.category)
}

/// A pattern that only exists to seed another one: `X_REV` next to `X`.
fn is_helper(p: &Pattern, all: &[Pattern]) -> bool {
    entry(&p.name).is_none()
        && p.name
            .strip_suffix("_REV")
            .is_some_and(|stem| all.iter().any(|q| q.name == stem))
}

/// Patterns whose matches are findings.
pub fn fix_patterns(all: &[Pattern]) -> Vec<&Pattern> {
    all.iter()
        .filter(|p| !is_helper(p, all))
        .filter(|p| entry(&p.name).is_none_or(|e| e.role == Role::Fix))
        .collect()
}

/// A bug-introducing pattern together with the pattern that fixes its bugs.
#[derive(Debug, Clone)]
pub struct SeedPlan {
    pub seeding: Pattern,
    pub forward: String,
}

/// Seeding counterparts for every non-helper pattern, plus a note for each
/// pattern that has none.
pub fn seeding_plan(all: &[Pattern], reg: &Registry) -> (Vec<SeedPlan>, Vec<String>) {
    let mut plans = Vec::new();
    let mut skipped = Vec::new();
    for p in all.iter().filter(|p| !is_helper(p, all)) {
        let explicit = match entry(&p.name).map(|e| e.seed) {
            Some(SeedSource::Explicit(name)) => Some(name.to_string()),
            Some(SeedSource::Derived) => None,
            None => Some(format!("{}_REV", p.name)).filter(|n| all.iter().any(|q| q.name == *n)),
        };
        let seeding = match explicit {
            Some(name) => match all.iter().find(|q| q.name == name) {
                Some(q) => Ok(q.clone()),
                None => {
                    skipped.push(format!("{}: seeding pattern {name} is not loaded", p.name));
                    continue;
                }
            },
            None => reverse_pattern(p, reg),
        };
        match seeding {
            Ok(seeding) => plans.push(SeedPlan {
                seeding,
                forward: p.name.clone(),
            }),
            Err(e) => skipped.push(e.to_string()),
        }
    }
    (plans, skipped)
}
