//! Generator catalogs in a small text format, plus the h.s.o.p. programs.
//!
//! ```text
//! # comment
//! n = 9
//! degree = 2
//! order = 2
//! c2 = tr(f, f, 8)
//! c121 = tr(pow(c2, 3), c3, 6)
//! ```
//!
//! Expressions are `f`, a label, `tr(e, e, k)`, `mul(e, e, ...)`,
//! `pow(e, k)` or `sum(e, e, ...)`. The `degree` and `order` pragmas declare
//! the bidegree of the entries that follow and are checked on load.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::program::{CovariantProgram, Family, NodeId, ProgramError};

/// Environment variable naming a directory whose `<name>.cat` files replace
/// the built-in catalogs.
pub const CATALOG_DIR_ENV: &str = "COVARIANTS_CATALOG_DIR";

const BUILTIN: &[(&str, &str)] = &[
    ("s6", include_str!("../data/s6.cat")),
    ("s8", include_str!("../data/s8.cat")),
    ("s9", include_str!("../data/s9.cat")),
    ("s10", include_str!("../data/s10.cat")),
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CatalogError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: undefined label {label}")]
    UndefinedLabel { line: usize, label: String },
    #[error("line {line}: label {label} defined twice")]
    DuplicateLabel { line: usize, label: String },
    #[error("line {line}: {label} has bidegree {computed:?}, declared {declared:?}")]
    BidegreeMismatch { line: usize, label: String, declared: (usize, usize), computed: (usize, usize) },
    #[error("line {line}: {source}")]
    Program { line: usize, source: ProgramError },
    #[error("missing `n = <int>` header")]
    MissingDegree,
    #[error("unknown catalog {0}")]
    Unknown(String),
    #[error("cannot read catalog: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, CatalogError>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CatalogEntry {
    pub label: String,
    pub node: NodeId,
    pub expr: String,
    pub declared: Option<(usize, usize)>,
    pub line: usize,
}

/// Parsed catalog: one shared program holding every entry.
#[derive(Clone, Debug)]
pub struct Catalog {
    pub n: usize,
    pub program: CovariantProgram,
    pub entries: Vec<CatalogEntry>,
    by_label: HashMap<String, usize>,
}

impl Catalog {
    pub fn empty(n: usize) -> Self {
        Catalog { n, program: CovariantProgram::new(n), entries: Vec::new(), by_label: HashMap::new() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<&CatalogEntry> {
        self.by_label.get(label).map(|&i| &self.entries[i])
    }

    pub fn node(&self, label: &str) -> Option<NodeId> {
        self.get(label).map(|e| e.node)
    }

    pub fn nodes(&self) -> Vec<NodeId> {
        self.entries.iter().map(|e| e.node).collect()
    }

    pub fn bidegree(&self, label: &str) -> Option<(usize, usize)> {
        self.get(label).map(|e| self.program.bidegree(e.node))
    }

    /// Label of a node if it is an entry.
    pub fn label_of(&self, node: NodeId) -> Option<&str> {
        self.entries.iter().find(|e| e.node == node).map(|e| e.label.as_str())
    }

    /// Append an entry built in `program`; its text is rendered from the DAG.
    pub fn push(&mut self, label: &str, node: NodeId) -> Result<()> {
        if self.by_label.contains_key(label) {
            return Err(CatalogError::DuplicateLabel { line: 0, label: label.into() });
        }
        let names: HashMap<NodeId, String> = self.entries.iter().map(|e| (e.node, e.label.clone())).collect();
        let expr = render_top(&self.program, node, &names);
        self.by_label.insert(label.to_string(), self.entries.len());
        let declared = Some(self.program.bidegree(node));
        self.entries.push(CatalogEntry { label: label.into(), node, expr, declared, line: 0 });
        Ok(())
    }

    /// Serialize, grouping entries under `degree`/`order` pragmas.
    pub fn to_text(&self, title: &str) -> String {
        let mut out = format!("# {title}\nn = {}\n", self.n);
        let mut current: Option<(usize, usize)> = None;
        for e in &self.entries {
            let (d, m) = self.program.bidegree(e.node);
            if current.map(|c| c.0) != Some(d) {
                out.push_str(&format!("\ndegree = {d}\norder = {m}\n"));
            } else if current.map(|c| c.1) != Some(m) {
                out.push_str(&format!("order = {m}\n"));
            }
            current = Some((d, m));
            out.push_str(&format!("{} = {}\n", e.label, e.expr));
        }
        out
    }

    pub fn table(&self) -> CatalogTable {
        table_counts(self)
    }

    pub fn family(&self) -> Family {
        Family {
            program: self.program.clone(),
            members: self.entries.iter().map(|e| (e.label.clone(), e.node)).collect(),
        }
    }
}

fn render_top(program: &CovariantProgram, node: NodeId, names: &HashMap<NodeId, String>) -> String {
    // The entry itself must expand one level even if an earlier entry shares its node.
    let lookup = |id: NodeId| if id == node { None } else { names.get(&id).cloned() };
    program.render(node, &lookup)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(usize),
    LParen,
    RParen,
    Comma,
}

fn tokenize(s: &str, line: usize) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\r' => i += 1,
            '(' => {
                out.push(Tok::LParen);
                i += 1
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1
            }
            ',' => {
                out.push(Tok::Comma);
                i += 1
            }
            '0'..='9' => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let v = text
                    .parse()
                    .map_err(|_| CatalogError::Syntax { line, msg: format!("integer out of range: {text}") })?;
                out.push(Tok::Int(v));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                    i += 1;
                }
                out.push(Tok::Ident(chars[start..i].iter().collect()));
            }
            other => return Err(CatalogError::Syntax { line, msg: format!("unexpected character {other:?}") }),
        }
    }
    Ok(out)
}

struct ExprParser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    line: usize,
    program: &'a mut CovariantProgram,
    labels: &'a HashMap<String, NodeId>,
}

impl<'a> ExprParser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(CatalogError::Syntax { line: self.line, msg: msg.into() })
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        match self.next() {
            Some(ref got) if *got == t => Ok(()),
            got => self.err(format!("expected {t:?}, found {got:?}")),
        }
    }

    fn int(&mut self) -> Result<usize> {
        match self.next() {
            Some(Tok::Int(v)) => Ok(v),
            got => self.err(format!("expected integer, found {got:?}")),
        }
    }

    fn wrap(&self, r: std::result::Result<NodeId, ProgramError>) -> Result<NodeId> {
        r.map_err(|source| CatalogError::Program { line: self.line, source })
    }

    fn args(&mut self) -> Result<Vec<NodeId>> {
        self.expect(Tok::LParen)?;
        let mut out = vec![self.expr()?];
        loop {
            match self.next() {
                Some(Tok::Comma) => out.push(self.expr()?),
                Some(Tok::RParen) => return Ok(out),
                got => return self.err(format!("expected ',' or ')', found {got:?}")),
            }
        }
    }

    fn expr(&mut self) -> Result<NodeId> {
        let name = match self.next() {
            Some(Tok::Ident(s)) => s,
            got => return self.err(format!("expected expression, found {got:?}")),
        };
        match name.as_str() {
            "f" => Ok(self.program.leaf()),
            "tr" => {
                self.expect(Tok::LParen)?;
                let a = self.expr()?;
                self.expect(Tok::Comma)?;
                let b = self.expr()?;
                self.expect(Tok::Comma)?;
                let k = self.int()?;
                self.expect(Tok::RParen)?;
                let r = self.program.transvect(a, b, k);
                self.wrap(r)
            }
            "pow" => {
                self.expect(Tok::LParen)?;
                let a = self.expr()?;
                self.expect(Tok::Comma)?;
                let e = self.int()?;
                self.expect(Tok::RParen)?;
                if e == 0 {
                    return Ok(self.program.unit());
                }
                let r = self.program.pow(a, e as u32);
                self.wrap(r)
            }
            "mul" => {
                let xs = self.args()?;
                if xs.len() < 2 {
                    return self.err("mul needs at least two arguments");
                }
                let f: Vec<_> = xs.into_iter().map(|x| (x, 1)).collect();
                let r = self.program.product(&f);
                self.wrap(r)
            }
            "sum" => {
                let xs = self.args()?;
                if xs.len() < 2 {
                    return self.err("sum needs at least two arguments");
                }
                let r = self.program.sum(&xs);
                self.wrap(r)
            }
            label => match self.labels.get(label) {
                Some(&id) => Ok(id),
                None => Err(CatalogError::UndefinedLabel { line: self.line, label: label.into() }),
            },
        }
    }
}

fn valid_label(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
        && !matches!(s, "f" | "tr" | "mul" | "pow" | "sum" | "n" | "degree" | "order")
}

pub fn parse_catalog(text: &str) -> Result<Catalog> {
    let mut catalog: Option<Catalog> = None;
    let mut labels: HashMap<String, NodeId> = HashMap::new();
    let mut degree: Option<usize> = None;
    let mut order: Option<usize> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap().trim();
        if body.is_empty() {
            continue;
        }
        let (lhs, rhs) = match body.split_once('=') {
            Some((l, r)) => (l.trim(), r.trim()),
            None => return Err(CatalogError::Syntax { line, msg: "expected `label = expr`".into() }),
        };
        let int_rhs = || {
            rhs.parse::<usize>()
                .map_err(|_| CatalogError::Syntax { line, msg: format!("expected integer after {lhs} =") })
        };
        match lhs {
            "n" => {
                if catalog.is_some() {
                    return Err(CatalogError::Syntax { line, msg: "repeated `n` header".into() });
                }
                catalog = Some(Catalog::empty(int_rhs()?));
                continue;
            }
            "degree" => {
                degree = Some(int_rhs()?);
                order = None;
                continue;
            }
            "order" => {
                order = Some(int_rhs()?);
                continue;
            }
            _ => {}
        }
        let cat = catalog.as_mut().ok_or(CatalogError::MissingDegree)?;
        if !valid_label(lhs) {
            return Err(CatalogError::Syntax { line, msg: format!("invalid label {lhs:?}") });
        }
        if labels.contains_key(lhs) {
            return Err(CatalogError::DuplicateLabel { line, label: lhs.into() });
        }
        let toks = tokenize(rhs, line)?;
        let mut parser = ExprParser { toks, pos: 0, line, program: &mut cat.program, labels: &labels };
        let node = parser.expr()?;
        if parser.pos != parser.toks.len() {
            return Err(CatalogError::Syntax { line, msg: "trailing input".into() });
        }
        let computed = cat.program.bidegree(node);
        let declared = match (degree, order) {
            (Some(d), Some(m)) => Some((d, m)),
            _ => None,
        };
        if let Some(dec) = declared {
            if dec != computed {
                return Err(CatalogError::BidegreeMismatch { line, label: lhs.into(), declared: dec, computed });
            }
        }
        labels.insert(lhs.to_string(), node);
        cat.by_label.insert(lhs.to_string(), cat.entries.len());
        cat.entries.push(CatalogEntry { label: lhs.into(), node, expr: rhs.into(), declared, line });
    }
    catalog.ok_or(CatalogError::MissingDegree)
}

/// Text of a catalog shipped with the crate, or its override from
/// [`CATALOG_DIR_ENV`].
pub fn builtin_text(name: &str) -> Result<String> {
    if let Ok(dir) = std::env::var(CATALOG_DIR_ENV) {
        let path = Path::new(&dir).join(format!("{name}.cat"));
        if path.exists() {
            return std::fs::read_to_string(&path).map_err(|e| CatalogError::Io(e.to_string()));
        }
    }
    BUILTIN
        .iter()
        .find(|(k, _)| *k == name)
        .map(|(_, v)| v.to_string())
        .ok_or_else(|| CatalogError::Unknown(name.into()))
}

pub fn load_builtin(name: &str) -> Result<Catalog> {
    parse_catalog(&builtin_text(name)?)
}

pub fn load_file(path: &Path) -> Result<Catalog> {
    let text = std::fs::read_to_string(path).map_err(|e| CatalogError::Io(e.to_string()))?;
    parse_catalog(&text)
}

/// Generator basis of `Cov(S_n)`, when shipped.
pub fn basis(n: usize) -> Result<Catalog> {
    load_builtin(&format!("s{n}"))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogTable {
    /// Generators per `(degree, order)`.
    pub counts: BTreeMap<(usize, usize), usize>,
    pub row_totals: BTreeMap<usize, usize>,
    pub col_totals: BTreeMap<usize, usize>,
    /// Running total by degree.
    pub cumulative: BTreeMap<usize, usize>,
    pub total: usize,
}

pub fn table_counts(catalog: &Catalog) -> CatalogTable {
    let mut t = CatalogTable::default();
    for e in &catalog.entries {
        let (d, m) = catalog.program.bidegree(e.node);
        *t.counts.entry((d, m)).or_default() += 1;
        *t.row_totals.entry(d).or_default() += 1;
        *t.col_totals.entry(m).or_default() += 1;
        t.total += 1;
    }
    if let Some(&top) = t.row_totals.keys().max() {
        let mut acc = 0;
        for d in 1..=top {
            acc += t.row_totals.get(&d).copied().unwrap_or(0);
            t.cumulative.insert(d, acc);
        }
    }
    t
}

/// Degree multisets of known homogeneous systems of parameters of `Inv(S_n)`.
pub fn hsop_degree_sets(n: usize) -> Option<Vec<Vec<usize>>> {
    match n {
        9 => Some(vec![
            vec![4, 4, 8, 12, 14, 16, 30],
            vec![4, 8, 10, 12, 12, 14, 16],
            vec![4, 4, 10, 12, 14, 16, 24],
            vec![4, 4, 8, 10, 12, 16, 42],
            vec![4, 4, 8, 10, 12, 14, 48],
        ]),
        10 => Some(vec![vec![2, 4, 6, 6, 8, 9, 10, 14]]),
        _ => None,
    }
}

/// Invariants used as partial h.s.o.p. when working in quotients, with the
/// matching catalog labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionSpec {
    pub degrees: Vec<usize>,
    pub hsop_labels: Vec<String>,
    pub catalog_labels: Vec<String>,
}

pub fn reduction_spec(n: usize) -> Option<ReductionSpec> {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    match n {
        9 => Some(ReductionSpec {
            degrees: vec![4, 4, 8],
            hsop_labels: s(&["p4", "q4", "p8"]),
            catalog_labels: s(&["c16", "c17", "c121"]),
        }),
        10 => Some(ReductionSpec {
            degrees: vec![2, 4, 6, 6],
            hsop_labels: s(&["p'2", "p'4", "p'6", "q'6"]),
            catalog_labels: s(&["c2", "c19", "c73", "c74"]),
        }),
        _ => None,
    }
}

/// Programs of the h.s.o.p. invariants and their auxiliary covariants.
#[derive(Clone, Debug)]
pub struct HsopPrograms {
    pub program: CovariantProgram,
    /// `(label, node, declared degree)`; declared degree is `None` for the
    /// auxiliary covariants `h_i`.
    pub items: Vec<(String, NodeId, Option<usize>)>,
}

impl HsopPrograms {
    pub fn node(&self, label: &str) -> Option<NodeId> {
        self.items.iter().find(|(l, _, _)| l == label).map(|(_, id, _)| *id)
    }

    pub fn invariants(&self) -> impl Iterator<Item = &(String, NodeId, Option<usize>)> {
        self.items.iter().filter(|(_, _, d)| d.is_some())
    }
}

pub fn hsop_programs(n: usize) -> Option<HsopPrograms> {
    let built = match n {
        9 => hsop_nonic(),
        10 => hsop_decimic(),
        _ => return None,
    };
    Some(built.expect("h.s.o.p. programs are well formed"))
}

fn hsop_nonic() -> std::result::Result<HsopPrograms, ProgramError> {
    let mut p = CovariantProgram::new(9);
    let mut items = Vec::new();
    let f = p.leaf();
    let aux = |items: &mut Vec<_>, l: &str, id| items.push((l.to_string(), id, None));
    let h1 = p.transvect(f, f, 8)?;
    let h2 = p.transvect(f, f, 6)?;
    let h3 = p.transvect(f, f, 4)?;
    let h4 = p.transvect(f, f, 2)?;
    let h5 = p.transvect(f, h2, 6)?;
    let h6 = p.transvect(f, h5, 3)?;
    let h7 = p.transvect(f, h5, 1)?;
    let h8 = p.transvect(h2, h2, 4)?;
    let h9 = p.transvect(h5, h5, 2)?;
    let h10 = p.mul(h8, h9)?;
    let h11 = p.transvect(h8, h9, 1)?;
    for (l, id) in [
        ("h1", h1),
        ("h2", h2),
        ("h3", h3),
        ("h4", h4),
        ("h5", h5),
        ("h6", h6),
        ("h7", h7),
        ("h8", h8),
        ("h9", h9),
        ("h10", h10),
        ("h11", h11),
    ] {
        aux(&mut items, l, id);
    }
    let h1_3 = p.pow(h1, 3)?;
    let h1_5 = p.pow(h1, 5)?;
    let h1_7 = p.pow(h1, 7)?;
    let p4 = p.transvect(h1, h1, 2)?;
    let q4 = p.transvect(h2, h2, 6)?;
    let p8 = p.transvect(h1_3, h2, 6)?;
    let p12 = p.transvect(h1_5, h3, 10)?;
    let p14 = p.transvect(h1_5, h7, 10)?;
    let p16 = p.transvect(h1_7, h4, 14)?;
    let t = p.transvect(h10, h10, 4)?;
    let p30 = p.transvect(t, h11, 4)?;
    for (l, id, d) in [
        ("p4", p4, 4),
        ("q4", q4, 4),
        ("p8", p8, 8),
        ("p12", p12, 12),
        ("p14", p14, 14),
        ("p16", p16, 16),
        ("p30", p30, 30),
    ] {
        items.push((l.to_string(), id, Some(d)));
    }
    Ok(HsopPrograms { program: p, items })
}

fn hsop_decimic() -> std::result::Result<HsopPrograms, ProgramError> {
    let mut p = CovariantProgram::new(10);
    let mut items = Vec::new();
    let f = p.leaf();
    let h1 = p.transvect(f, f, 8)?;
    let h2 = p.transvect(f, h1, 4)?;
    let h3 = p.transvect(f, f, 6)?;
    let h4 = p.transvect(h3, f, 8)?;
    // Index 6 makes h'5 a quartic as required by h'7 and p'14.
    let h5 = p.transvect(h3, h3, 6)?;
    let h6 = p.transvect(h2, h2, 4)?;
    let h7 = p.transvect(h3, h5, 4)?;
    for (l, id) in [("h'1", h1), ("h'2", h2), ("h'3", h3), ("h'4", h4), ("h'5", h5), ("h'6", h6), ("h'7", h7)] {
        items.push((l.to_string(), id, None));
    }
    let h1_2 = p.pow(h1, 2)?;
    let p2 = p.transvect(f, f, 10)?;
    let p4 = p.transvect(h1, h1, 4)?;
    // Index 6 is the only one giving an invariant of h'2 with itself.
    let p6 = p.transvect(h2, h2, 6)?;
    let q6 = p.transvect(h4, h4, 2)?;
    let p8 = p.transvect(h1, h6, 4)?;
    let t9 = p.transvect(h2, h1, 1)?;
    let p9 = p.transvect(t9, h1_2, 8)?;
    let t10 = p.transvect(h2, h2, 2)?;
    let p10 = p.transvect(t10, h1_2, 8)?;
    let a = p.transvect(h5, h5, 2)?;
    let a = p.transvect(a, h7, 4)?;
    let b = p.transvect(h1, h1, 2)?;
    let b = p.pow(b, 2)?;
    let b = p.transvect(b, t10, 8)?;
    let p14 = p.sum(&[a, b])?;
    for (l, id, d) in [
        ("p'2", p2, 2),
        ("p'4", p4, 4),
        ("p'6", p6, 6),
        ("q'6", q6, 6),
        ("p'8", p8, 8),
        ("p'9", p9, 9),
        ("p'10", p10, 10),
        ("p'14", p14, 14),
    ] {
        items.push((l.to_string(), id, Some(d)));
    }
    Ok(HsopPrograms { program: p, items })
}

/// Pairs `(catalog label, h.s.o.p. label)` naming the same invariant up to scale.
pub fn identifications(n: usize) -> Vec<(&'static str, &'static str)> {
    match n {
        9 => vec![("c16", "p4"), ("c17", "q4"), ("c121", "p8")],
        10 => vec![("c2", "p'2"), ("c19", "p'4"), ("c73", "p'6"), ("c74", "q'6")],
        _ => vec![],
    }
}
