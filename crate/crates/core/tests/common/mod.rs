//! Shared test support: a small PRNG, random spec and program generators,
//! and a brute-force match oracle with its own condition evaluator.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;

use bugfix_core::catalog::{base_unit, load_catalog};
use bugfix_core::registry::{build_registry, Registry};
use bugfix_core::spec_lang::*;
use bugfix_core::tree::{Child, Node, NodeId, Tree};

/// splitmix64; independent of the engine's generator.
#[derive(Debug, Clone)]
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed)
    }

    pub fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next() % n as u64) as usize
    }

    pub fn chance(&mut self, percent: u64) -> bool {
        self.next() % 100 < percent
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len())]
    }
}

pub fn catalog_registry() -> Registry {
    build_registry(&[base_unit(), load_catalog()]).unwrap()
}

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn fixture_corpus() -> Vec<PathBuf> {
    let dir = workspace_root().join("fixtures/corpus");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "mini"))
        .collect();
    files.sort();
    files
}

// ---------------------------------------------------------------- specs

const UPPER: &[&str] = &["CALL", "SUM", "EXPR", "STMT", "ROUTINE", "IF_THEN", "A", "B2", "LIST_NODE", "X_Y"];
const LOWER: &[&str] = &["args", "r", "first", "second", "lhs", "rhs", "body", "x1", "item_list", "k"];
const VARS: &[&str] = &["c", "a1", "a2", "e", "e1", "e2", "s", "q", "v", "w"];
const LANGS: &[&str] = &["java", "eiffel", "mini", "c_sharp"];
const LITERAL_CHARS: &[&str] = &[
    " ", "(", ")", ",", ";", ".", ":", "=", "+", "-", "*", "{", "}", "<", ">", "a", "Z", "7", "\"", "\\", "\n", "\t",
    "[", "]", "|", "_", "/", "!", "#", "→", "é",
];

fn gen_literal(r: &mut Rng) -> Literal {
    if r.chance(50) {
        Literal::Int(r.below(2000) as i64 - 1000)
    } else {
        let n = r.below(5);
        Literal::Text((0..n).map(|_| *r.pick(LITERAL_CHARS)).collect())
    }
}

fn gen_text(r: &mut Rng, max: usize) -> String {
    let n = r.below(max + 1);
    (0..n).map(|_| *r.pick(LITERAL_CHARS)).collect()
}

pub fn gen_template(r: &mut Rng, depth: usize) -> Template {
    let n = r.below(5);
    let mut parts = Vec::new();
    for _ in 0..n {
        let part = match r.below(if depth > 0 { 4 } else { 3 }) {
            0 => Template::Literal(gen_text(r, 4)),
            1 => Template::Field(r.pick(LOWER).to_string()),
            2 => Template::Join {
                field: r.pick(LOWER).to_string(),
                separator: gen_text(r, 3),
            },
            _ => Template::Cond {
                guard: Guard {
                    subject: if r.chance(50) {
                        GuardSubject::Count(r.pick(LOWER).to_string())
                    } else {
                        GuardSubject::Value(r.pick(LOWER).to_string())
                    },
                    op: *r.pick(&CmpOp::ALL),
                    literal: gen_literal(r),
                },
                then: Box::new(gen_template(r, depth - 1)),
                otherwise: Box::new(gen_template(r, depth - 1)),
            },
        };
        parts.push(part);
    }
    Template::seq(parts)
}

fn gen_term(r: &mut Rng, depth: usize) -> Term {
    if depth == 0 || r.chance(35) {
        return match r.below(6) {
            0 => Term::Lit(gen_literal(r)),
            1 => Term::Descendants(Box::new(Term::var(r.pick(VARS)))),
            _ => Term::var(r.pick(VARS)),
        };
    }
    let inner = loop {
        let t = gen_term(r, depth - 1);
        if !matches!(t, Term::Lit(_)) {
            break t;
        }
    };
    let inner = Box::new(inner);
    match r.below(5) {
        0 => Term::Field(inner, r.pick(LOWER).to_string()),
        1 => Term::Index(inner),
        2 => Term::Count(inner),
        3 => Term::Value(inner),
        _ => Term::Parent(inner),
    }
}

fn gen_condition(r: &mut Rng, depth: usize) -> Condition {
    match r.below(if depth > 0 { 4 } else { 3 }) {
        0 => Condition::Compare {
            lhs: gen_term(r, 2),
            op: *r.pick(&CmpOp::ALL),
            rhs: gen_term(r, 2),
        },
        1 => Condition::Member {
            element: gen_term(r, 1),
            collection: gen_term(r, 2),
        },
        2 => Condition::Is {
            term: gen_term(r, 2),
            construct: r.pick(UPPER).to_string(),
        },
        _ => Condition::Not((0..r.below(3)).map(|_| gen_condition(r, depth - 1)).collect()),
    }
}

fn gen_node_expr(r: &mut Rng, depth: usize) -> NodeExpr {
    match r.below(if depth > 0 { 5 } else { 4 }) {
        0 => NodeExpr::Var(r.pick(VARS).to_string()),
        1 => NodeExpr::Old(r.pick(VARS).to_string()),
        2 => NodeExpr::Field(r.pick(VARS).to_string(), r.pick(LOWER).to_string()),
        3 => NodeExpr::Atom {
            construct: r.pick(UPPER).to_string(),
            value: gen_literal(r),
        },
        _ => NodeExpr::Instantiate {
            construct: r.pick(UPPER).to_string(),
            fields: gen_assignments(r, depth - 1),
        },
    }
}

fn gen_assignments(r: &mut Rng, depth: usize) -> Vec<(String, NodeExpr)> {
    (0..r.below(3))
        .map(|_| (r.pick(LOWER).to_string(), gen_node_expr(r, depth)))
        .collect()
}

fn gen_fix(r: &mut Rng) -> FixExpr {
    match r.below(3) {
        0 => FixExpr::Update {
            binder: r.pick(VARS).to_string(),
            substitutions: (0..r.below(3))
                .map(|_| (r.pick(VARS).to_string(), gen_node_expr(r, 1)))
                .collect(),
        },
        1 => FixExpr::Instantiate {
            construct: r.pick(UPPER).to_string(),
            fields: gen_assignments(r, 2),
        },
        _ => FixExpr::Replace(loop {
            let e = gen_node_expr(r, 0);
            if !matches!(e, NodeExpr::Instantiate { .. }) {
                break e;
            }
        }),
    }
}

/// Between `lo` and `hi - 1` distinct items of `pool`.
fn distinct<'a>(r: &mut Rng, pool: &[&'a str], lo: usize, hi: usize) -> Vec<&'a str> {
    let n = lo + r.below(hi - lo);
    let mut items: Vec<&str> = pool.to_vec();
    let mut out = Vec::new();
    for _ in 0..n.min(items.len()) {
        let i = r.below(items.len());
        out.push(items.swap_remove(i));
    }
    out
}

/// A random unit that is syntactically valid (names need not resolve).
pub fn gen_spec_unit(r: &mut Rng) -> SpecUnit {
    let mut unit = SpecUnit::default();
    for name in distinct(r, UPPER, 0, 5) {
        let is_atom = r.chance(25);
        let fields = if is_atom {
            Vec::new()
        } else {
            distinct(r, LOWER, 0, 4)
                .into_iter()
                .map(|f| FieldDef {
                    name: f.to_string(),
                    ty: r.pick(UPPER).to_string(),
                    multiplicity: if r.chance(40) { Multiplicity::List } else { Multiplicity::Single },
                })
                .collect()
        };
        let parents = distinct(r, UPPER, 0, 3).into_iter().map(str::to_string).collect();
        unit.constructs.push(ConstructDef {
            name: name.to_string(),
            fields,
            parents,
            is_atom,
        });
    }
    let mut seen = std::collections::HashSet::new();
    for _ in 0..r.below(5) {
        let key = (r.pick(UPPER).to_string(), r.pick(LANGS).to_string());
        if seen.insert(key.clone()) {
            unit.syntaxes.push(SyntaxRule {
                construct: key.0,
                language: key.1,
                template: gen_template(r, 2),
            });
        }
    }
    for name in distinct(r, UPPER, 0, 4) {
        let names = distinct(r, VARS, 1, 5);
        unit.patterns.push(Pattern {
            name: format!("{name}_PAT"),
            subject: Binder {
                name: names[0].to_string(),
                construct: r.pick(UPPER).to_string(),
            },
            metavars: names[1..]
                .iter()
                .map(|n| Binder {
                    name: n.to_string(),
                    construct: r.pick(UPPER).to_string(),
                })
                .collect(),
            where_clauses: (0..r.below(5)).map(|_| gen_condition(r, 2)).collect(),
            fix: gen_fix(r),
        });
    }
    unit
}

// ------------------------------------------------------------- programs

const IDENTS: &[&str] = &["a", "b", "c", "x", "y", "conn", "log", "n"];
const ROUTINES: &[&str] = &["f", "g", "close", "open", "put"];

fn ident(r: &mut Rng) -> Node {
    Node::atom("IDENTIFIER", Literal::Text(r.pick(IDENTS).to_string()))
}

fn routine(r: &mut Rng) -> Node {
    Node::atom("ROUTINE", Literal::Text(r.pick(ROUTINES).to_string()))
}

fn single(n: Node) -> Child {
    Child::Single(Box::new(n))
}

fn binary(c: &str, a: Node, b: Node) -> Node {
    Node::branch(c, vec![("first", single(a)), ("second", single(b))])
}

/// Expression precedence levels, loosest first.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Level {
    Comparison,
    Additive,
    Multiplicative,
    Primary,
}

pub struct ProgramGen<'r> {
    pub rng: &'r mut Rng,
    pub budget: usize,
}

impl ProgramGen<'_> {
    fn take(&mut self, n: usize) -> bool {
        if self.budget >= n {
            self.budget -= n;
            true
        } else {
            false
        }
    }

    fn leaf(&mut self) -> Node {
        self.budget = self.budget.saturating_sub(1);
        let r = &mut *self.rng;
        match r.below(7) {
            0 => Node::atom("INT_LIT", Literal::Int(r.below(7) as i64 - 2)),
            1 => Node::atom("TRUE_LIT", Literal::Text("true".into())),
            2 => Node::atom("FALSE_LIT", Literal::Text("false".into())),
            3 => Node::atom("NULL_LIT", Literal::Text("null".into())),
            _ => ident(r),
        }
    }

    fn call(&mut self) -> Node {
        let qualified = self.rng.chance(40);
        let n = self.rng.below(4);
        let mut args = Vec::new();
        for _ in 0..n {
            if self.budget < 2 {
                break;
            }
            args.push(self.expr(Level::Comparison));
        }
        if qualified {
            let recv = ident(self.rng);
            let r = routine(self.rng);
            Node::branch(
                "QUALIFIED_CALL",
                vec![("recv", single(recv)), ("r", single(r)), ("args", Child::List(args))],
            )
        } else {
            let r = routine(self.rng);
            Node::branch("CALL", vec![("r", single(r)), ("args", Child::List(args))])
        }
    }

    /// An expression that parses back at precedence `min` or tighter.
    fn expr(&mut self, min: Level) -> Node {
        if self.budget < 3 || self.rng.chance(30) {
            return self.leaf();
        }
        let choices: Vec<Level> = [Level::Comparison, Level::Additive, Level::Multiplicative, Level::Primary]
            .into_iter()
            .filter(|l| *l >= min)
            .collect();
        match *self.rng.pick(&choices) {
            Level::Comparison => {
                self.take(1);
                let c = *self.rng.pick(&["EQ_BIN_OP", "NEQ_BIN_OP", "LT_BIN_OP", "LE_BIN_OP", "GT_BIN_OP", "GE_BIN_OP"]);
                let a = self.expr(Level::Additive);
                let b = self.expr(Level::Additive);
                binary(c, a, b)
            }
            Level::Additive => {
                self.take(1);
                let c = *self.rng.pick(&["SUM", "DIFFERENCE"]);
                let a = self.expr(Level::Additive);
                let b = self.expr(Level::Multiplicative);
                binary(c, a, b)
            }
            Level::Multiplicative => {
                self.take(1);
                let a = self.expr(Level::Multiplicative);
                let b = self.expr(Level::Primary);
                binary("PRODUCT", a, b)
            }
            Level::Primary => {
                self.take(2);
                self.call()
            }
        }
    }

    fn stmt(&mut self, depth: usize) -> Node {
        self.take(1);
        match self.rng.below(if depth > 0 { 5 } else { 4 }) {
            0 => {
                let lhs = ident(self.rng);
                self.take(1);
                let rhs = self.expr(Level::Comparison);
                Node::branch("ASSIGN", vec![("lhs", single(lhs)), ("rhs", single(rhs))])
            }
            1 => {
                self.take(2);
                let c = self.call();
                Node::branch("CALL_STMT", vec![("call", single(c))])
            }
            2 => {
                let e = self.expr(Level::Comparison);
                Node::branch("RETURN", vec![("expr", single(e))])
            }
            3 if self.rng.chance(50) => {
                // Null-guarded qualified call.
                let recv = ident(self.rng);
                let r = routine(self.rng);
                let call = Node::branch(
                    "QUALIFIED_CALL",
                    vec![("recv", single(recv.clone())), ("r", single(r)), ("args", Child::List(vec![]))],
                );
                let stmt = Node::branch("CALL_STMT", vec![("call", single(call))]);
                let cond = binary("NEQ_BIN_OP", recv, Node::atom("NULL_LIT", Literal::Text("null".into())));
                self.take(6);
                Node::branch(
                    "IF",
                    vec![("cond", single(cond)), ("then", Child::List(vec![stmt])), ("else", Child::List(vec![]))],
                )
            }
            _ => {
                let cond = self.expr(Level::Comparison);
                let mut then = Vec::new();
                let mut otherwise = Vec::new();
                for _ in 0..self.rng.below(3) {
                    if self.budget > 3 {
                        then.push(self.stmt(depth.saturating_sub(1)));
                    }
                }
                if self.rng.chance(40) {
                    for _ in 0..1 + self.rng.below(2) {
                        if self.budget > 3 {
                            otherwise.push(self.stmt(depth.saturating_sub(1)));
                        }
                    }
                }
                Node::branch(
                    "IF",
                    vec![("cond", single(cond)), ("then", Child::List(then)), ("else", Child::List(otherwise))],
                )
            }
        }
    }

    /// A PROGRAM whose shape the MiniLang parser can produce; ids in pre-order.
    pub fn program(&mut self) -> Node {
        let mut stmts = Vec::new();
        self.take(1);
        while self.budget > 3 && stmts.len() < 6 {
            stmts.push(self.stmt(2));
        }
        let mut root = Node::branch("PROGRAM", vec![("stmts", Child::List(stmts))]);
        root.renumber();
        root
    }
}

/// Random MiniLang program tree of at most `max_nodes` nodes.
pub fn gen_program(r: &mut Rng, max_nodes: usize) -> Node {
    loop {
        let budget = 1 + r.below(max_nodes);
        let root = ProgramGen { rng: r, budget }.program();
        if root.size() <= max_nodes {
            return root;
        }
    }
}

/// A random CALL with `n` arguments.
pub fn gen_call(r: &mut Rng, n: usize) -> Node {
    let args = (0..n).map(|_| ident(r)).collect();
    let rt = routine(r);
    let mut call = Node::branch("CALL", vec![("r", single(rt)), ("args", Child::List(args))]);
    call.renumber();
    call
}

/// Random tree with arbitrary ids (unique, not in pre-order) and spans.
pub fn scramble_ids(root: &mut Node, r: &mut Rng) {
    let n = root.size() as u64;
    let mut ids: Vec<u64> = (1..=n * 3).collect();
    for i in (1..ids.len()).rev() {
        let j = r.below(i + 1);
        ids.swap(i, j);
    }
    let mut k = 0;
    root.visit_mut(&mut |node| {
        node.id = ids[k];
        k += 1;
        if r.chance(50) {
            let s = r.below(100);
            node.span = Some((s, s + r.below(20)));
        }
    });
}

// --------------------------------------------------------------- oracle

struct Facts<'a> {
    nodes: HashMap<NodeId, &'a Node>,
    parent: HashMap<NodeId, NodeId>,
    /// 1-based list position, 0 otherwise.
    index: HashMap<NodeId, i64>,
    order: Vec<NodeId>,
}

fn gather<'a>(n: &'a Node, f: &mut Facts<'a>) {
    f.nodes.insert(n.id, n);
    f.order.push(n.id);
    for (_, c) in &n.fields {
        match c {
            Child::Single(k) => {
                f.parent.insert(k.id, n.id);
                f.index.insert(k.id, 0);
                gather(k, f);
            }
            Child::List(items) => {
                for (i, k) in items.iter().enumerate() {
                    f.parent.insert(k.id, n.id);
                    f.index.insert(k.id, i as i64 + 1);
                    gather(k, f);
                }
            }
        }
    }
}

fn strict_descendants(n: &Node) -> Vec<NodeId> {
    let mut out = Vec::new();
    fn go(n: &Node, out: &mut Vec<NodeId>) {
        for (_, c) in &n.fields {
            let kids: Vec<&Node> = match c {
                Child::Single(k) => vec![k],
                Child::List(items) => items.iter().collect(),
            };
            for k in kids {
                out.push(k.id);
                go(k, out);
            }
        }
    }
    go(n, &mut out);
    out
}

#[derive(Debug, Clone, PartialEq)]
enum V {
    N(NodeId),
    L(Vec<NodeId>),
    S(Literal),
    U,
}

fn eval(t: &Term, env: &HashMap<String, NodeId>, f: &Facts) -> V {
    match t {
        Term::Var(v) => env.get(v).map_or(V::U, |id| V::N(*id)),
        Term::Lit(l) => V::S(l.clone()),
        Term::Field(inner, name) => match eval(inner, env, f) {
            V::N(id) => match f.nodes[&id].fields.iter().find(|(n, _)| n == name) {
                Some((_, Child::Single(k))) => V::N(k.id),
                Some((_, Child::List(items))) => V::L(items.iter().map(|k| k.id).collect()),
                None => V::U,
            },
            _ => V::U,
        },
        Term::Index(inner) => match eval(inner, env, f) {
            V::N(id) => V::S(Literal::Int(*f.index.get(&id).unwrap_or(&0))),
            _ => V::U,
        },
        Term::Count(inner) => match eval(inner, env, f) {
            V::L(v) => V::S(Literal::Int(v.len() as i64)),
            _ => V::U,
        },
        Term::Value(inner) => match eval(inner, env, f) {
            V::N(id) => f.nodes[&id].value.clone().map_or(V::U, V::S),
            _ => V::U,
        },
        Term::Parent(inner) => match eval(inner, env, f) {
            V::N(id) => f.parent.get(&id).map_or(V::U, |p| V::N(*p)),
            _ => V::U,
        },
        Term::Descendants(inner) => match eval(inner, env, f) {
            V::N(id) => V::L(strict_descendants(f.nodes[&id])),
            _ => V::U,
        },
    }
}

fn holds(c: &Condition, env: &HashMap<String, NodeId>, f: &Facts, reg: &Registry) -> bool {
    match c {
        Condition::Compare { lhs, op, rhs } => {
            let (a, b) = (eval(lhs, env, f), eval(rhs, env, f));
            match (a, b) {
                (V::N(x), V::N(y)) => match op {
                    CmpOp::Eq => x == y,
                    CmpOp::Ne => x != y,
                    _ => false,
                },
                (V::L(x), V::L(y)) => match op {
                    CmpOp::Eq => x == y,
                    CmpOp::Ne => x != y,
                    _ => false,
                },
                (V::S(Literal::Int(x)), V::S(Literal::Int(y))) => cmp(x.cmp(&y), *op),
                (V::S(Literal::Text(x)), V::S(Literal::Text(y))) => cmp(x.cmp(&y), *op),
                (V::S(_), V::S(_)) => *op == CmpOp::Ne,
                _ => false,
            }
        }
        Condition::Member { element, collection } => {
            match (eval(element, env, f), eval(collection, env, f)) {
                (V::N(x), V::L(set)) => set.contains(&x),
                _ => false,
            }
        }
        Condition::Is { term, construct } => match eval(term, env, f) {
            V::N(id) => reg.conforms(&f.nodes[&id].construct, construct),
            _ => false,
        },
        Condition::Not(cs) => !cs.iter().all(|c| holds(c, env, f, reg)),
    }
}

fn cmp(o: std::cmp::Ordering, op: CmpOp) -> bool {
    use std::cmp::Ordering::*;
    match op {
        CmpOp::Eq => o == Equal,
        CmpOp::Ne => o != Equal,
        CmpOp::Lt => o == Less,
        CmpOp::Le => o != Greater,
        CmpOp::Gt => o == Greater,
        CmpOp::Ge => o != Less,
    }
}

pub type OracleMatch = (NodeId, Vec<(String, NodeId)>);

/// Every (subject, bindings) tuple satisfying the pattern, by exhaustive
/// enumeration of type-conforming strict descendants.
pub fn brute_force(p: &Pattern, t: &Tree, reg: &Registry) -> BTreeSet<OracleMatch> {
    let mut facts = Facts {
        nodes: HashMap::new(),
        parent: HashMap::new(),
        index: HashMap::new(),
        order: Vec::new(),
    };
    gather(&t.root, &mut facts);
    let mut out = BTreeSet::new();
    for &sid in &facts.order {
        let subject = facts.nodes[&sid];
        if !reg.conforms(&subject.construct, &p.subject.construct) {
            continue;
        }
        let desc = strict_descendants(subject);
        let domains: Vec<Vec<NodeId>> = p
            .metavars
            .iter()
            .map(|b| {
                desc.iter()
                    .copied()
                    .filter(|id| reg.conforms(&facts.nodes[id].construct, &b.construct))
                    .collect()
            })
            .collect();
        if domains.iter().any(Vec::is_empty) && !p.metavars.is_empty() {
            continue;
        }
        let mut counters = vec![0usize; domains.len()];
        loop {
            let mut env: HashMap<String, NodeId> = HashMap::new();
            env.insert(p.subject.name.clone(), sid);
            let mut binding = Vec::new();
            for (i, b) in p.metavars.iter().enumerate() {
                let id = domains[i][counters[i]];
                env.insert(b.name.clone(), id);
                binding.push((b.name.clone(), id));
            }
            if p.where_clauses.iter().all(|c| holds(c, &env, &facts, reg)) {
                out.insert((sid, binding));
            }
            // odometer increment
            let mut k = 0;
            loop {
                if k == counters.len() {
                    break;
                }
                counters[k] += 1;
                if counters[k] < domains[k].len() {
                    break;
                }
                counters[k] = 0;
                k += 1;
            }
            if k == counters.len() {
                break;
            }
        }
    }
    out
}

/// Independent structural validator walking field definitions.
pub fn independently_valid(n: &Node, reg: &Registry) -> bool {
    fn go(n: &Node, reg: &Registry, ids: &mut std::collections::HashSet<NodeId>) -> bool {
        let Some(def) = reg.construct(&n.construct) else {
            return false;
        };
        if !ids.insert(n.id) {
            return false;
        }
        if def.is_atom {
            return n.value.is_some() && n.fields.is_empty();
        }
        if n.value.is_some() || n.fields.len() != def.fields.len() {
            return false;
        }
        for (fd, (name, child)) in def.fields.iter().zip(&n.fields) {
            if fd.name != *name {
                return false;
            }
            let kids: Vec<&Node> = match (child, fd.is_list()) {
                (Child::Single(k), false) => vec![k],
                (Child::List(items), true) => items.iter().collect(),
                _ => return false,
            };
            for k in kids {
                if !reg.conforms(&k.construct, &fd.ty) || !go(k, reg, ids) {
                    return false;
                }
            }
        }
        true
    }
    go(n, reg, &mut std::collections::HashSet::new())
}
