//! Grammar model: parsing, standardization and structural validation.

mod grammar;
mod parse;
mod standardize;
mod validate;

pub use grammar::{Grammar, Rule};
pub use parse::{parse_spec, parse_weight_value, rational_text};
pub use standardize::{standardize, StandardizationReport};
pub use validate::{classify_regular, validate, State, TransferDescription, Transition};

use num_rational::BigRational;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomId(pub usize);

/// Right-hand side expression of a production.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Epsilon,
    Atom(AtomId),
    Class(ClassId),
    Union(Box<Expr>, Box<Expr>),
    Product(Box<Expr>, Box<Expr>),
    Sequence(Box<Expr>),
    Point(ClassId),
    Unpoint(ClassId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDef {
    pub name: String,
    pub rhs: Expr,
    /// When set, the rule defines the pointed class: `ΘC = rhs`.
    pub pointed: bool,
    /// `None` for classes written in the source, otherwise a note on
    /// what the class was introduced for.
    pub provenance: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomDef {
    pub name: String,
    pub symbol: String,
}

/// Double-quoted form read back verbatim by the lexer.
fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' | '\\' => {
                out.push('\\');
                out.push(c);
            }
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

/// A parsed (and possibly standardized) specification.
#[derive(Debug, Clone, PartialEq)]
pub struct Specification {
    pub(crate) classes: Vec<ClassDef>,
    pub(crate) atoms: Vec<AtomDef>,
    pub(crate) axiom: ClassId,
    pub(crate) distinguished: Vec<AtomId>,
    pub(crate) declared_weights: Vec<(AtomId, BigRational)>,
    pub(crate) declared_targets: Vec<(AtomId, f64)>,
}

impl Specification {
    pub fn axiom(&self) -> ClassId {
        self.axiom
    }

    pub fn classes(&self) -> &[ClassDef] {
        &self.classes
    }

    pub fn class(&self, id: ClassId) -> &ClassDef {
        &self.classes[id.0]
    }

    pub fn class_name(&self, id: ClassId) -> &str {
        &self.classes[id.0].name
    }

    pub fn atoms(&self) -> &[AtomDef] {
        &self.atoms
    }

    pub fn atom(&self, id: AtomId) -> &AtomDef {
        &self.atoms[id.0]
    }

    pub fn atom_name(&self, id: AtomId) -> &str {
        &self.atoms[id.0].name
    }

    pub fn atom_ids(&self) -> impl Iterator<Item = AtomId> {
        (0..self.atoms.len()).map(AtomId)
    }

    /// The atoms whose weight or frequency is controlled, in declaration order.
    pub fn distinguished(&self) -> &[AtomId] {
        &self.distinguished
    }

    pub fn declared_weights(&self) -> &[(AtomId, BigRational)] {
        &self.declared_weights
    }

    pub fn declared_targets(&self) -> &[(AtomId, f64)] {
        &self.declared_targets
    }

    pub fn find_class(&self, name: &str) -> Option<ClassId> {
        self.classes.iter().position(|c| c.name == name).map(ClassId)
    }

    pub fn find_atom(&self, name: &str) -> Option<AtomId> {
        self.atoms.iter().position(|a| a.name == name).map(AtomId)
    }

    pub fn class_by_name(&self, name: &str) -> crate::Result<ClassId> {
        self.find_class(name)
            .ok_or_else(|| crate::Error::UnknownClass(name.to_string()))
    }

    pub fn atom_by_name(&self, name: &str) -> crate::Result<AtomId> {
        self.find_atom(name)
            .ok_or_else(|| crate::Error::UnknownAtom(name.to_string()))
    }

    /// Replace the distinguished atom list.
    pub fn with_distinguished(mut self, atoms: Vec<AtomId>) -> Self {
        self.distinguished = atoms;
        self
    }

    /// Standard-form rule view. Fails when some class is not standard.
    pub fn grammar(&self) -> crate::Result<Grammar> {
        Grammar::from_spec(self)
    }

    /// Number of classes written in the source (they come first).
    pub fn source_class_count(&self) -> usize {
        self.classes
            .iter()
            .take_while(|c| c.provenance.is_none())
            .count()
    }

    /// Atom name as it must be written in grammar text: bare when it reads
    /// back as the same atom, quoted otherwise.
    fn atom_token(&self, a: AtomId) -> String {
        let name = &self.atoms[a.0].name;
        let bare = !name.is_empty()
            && name.chars().all(parse::is_word_char)
            && !matches!(name.as_str(), "_" | "->" | "SEQ" | "POINT" | "UNPOINT")
            && self.find_class(name).is_none();
        if bare {
            name.clone()
        } else {
            quote(name)
        }
    }

    /// Render an expression with class and atom names.
    pub fn render_expr(&self, e: &Expr) -> String {
        let mut out = String::new();
        self.render_into(e, &mut out, 0);
        out
    }

    fn render_into(&self, e: &Expr, out: &mut String, prec: u8) {
        match e {
            Expr::Epsilon => out.push('_'),
            Expr::Atom(a) => out.push_str(&self.atom_token(*a)),
            Expr::Class(c) => out.push_str(&self.classes[c.0].name),
            Expr::Union(l, r) => {
                if prec > 0 {
                    out.push('(');
                }
                self.render_into(l, out, 0);
                out.push_str(" | ");
                self.render_into(r, out, 0);
                if prec > 0 {
                    out.push(')');
                }
            }
            Expr::Product(l, r) => {
                self.render_into(l, out, 1);
                out.push(' ');
                self.render_into(r, out, 1);
            }
            Expr::Sequence(inner) => {
                out.push_str("SEQ(");
                self.render_into(inner, out, 0);
                out.push(')');
            }
            Expr::Point(c) => {
                let _ = write!(out, "POINT({})", self.classes[c.0].name);
            }
            Expr::Unpoint(c) => {
                let _ = write!(out, "UNPOINT({})", self.classes[c.0].name);
            }
        }
    }

    /// Canonical text of the productions, used for fingerprints and display.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "axiom {} ;", self.classes[self.axiom.0].name);
        for c in &self.classes {
            let lhs = if c.pointed {
                format!("POINT({})", c.name)
            } else {
                c.name.clone()
            };
            let _ = writeln!(out, "{} -> {} ;", lhs, self.render_expr(&c.rhs));
        }
        for (i, a) in self.atoms.iter().enumerate() {
            let _ = writeln!(out, "symbol {} = {} ;", self.atom_token(AtomId(i)), quote(&a.symbol));
        }
        out
    }

    /// Hex SHA-256 of the canonical productions.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }

    /// Render a word with display symbols. Single-character symbols are
    /// concatenated, longer ones are separated by spaces.
    pub fn render_word(&self, word: &[AtomId]) -> String {
        let short = word
            .iter()
            .all(|a| self.atoms[a.0].symbol.chars().count() == 1);
        let parts: Vec<&str> = word
            .iter()
            .map(|a| self.atoms[a.0].symbol.as_str())
            .collect();
        if short {
            parts.concat()
        } else {
            parts.join(" ")
        }
    }
}
