//! Grammar text parser.
//!
//! ```text
//! # comment
//! axiom S ;
//! S -> a S b S | c S | _ ;
//! POINT(C) -> A B ;
//! weight c = 3/2 ;
//! target c = 0.25 ;
//! symbol gbar = "g" ;
//! ```

use super::{AtomDef, AtomId, ClassDef, ClassId, Expr, Specification};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Quoted(String),
    Arrow,
    Bar,
    Semi,
    Eq,
    LParen,
    RParen,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        column,
        message: message.into(),
    }
}

pub(crate) fn is_word_char(c: char) -> bool {
    !c.is_whitespace() && !matches!(c, ';' | '|' | '(' | ')' | '#' | '"' | '\'' | '=')
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1usize, 1usize);
    while let Some(&c) = chars.peek() {
        let (l0, c0) = (line, column);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let ch = chars.next();
            if ch == Some('\n') {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
            ch
        };
        if c.is_whitespace() {
            bump(&mut chars);
            continue;
        }
        if c == '#' {
            while let Some(&d) = chars.peek() {
                if d == '\n' {
                    break;
                }
                bump(&mut chars);
            }
            continue;
        }
        let tok = match c {
            ';' => {
                bump(&mut chars);
                Tok::Semi
            }
            '|' => {
                bump(&mut chars);
                Tok::Bar
            }
            '(' => {
                bump(&mut chars);
                Tok::LParen
            }
            ')' => {
                bump(&mut chars);
                Tok::RParen
            }
            '=' => {
                bump(&mut chars);
                Tok::Eq
            }
            '"' | '\'' => {
                let quote = c;
                bump(&mut chars);
                let mut s = String::new();
                loop {
                    match bump(&mut chars) {
                        None | Some('\n') => return Err(syntax(l0, c0, "unterminated quoted atom")),
                        Some('\\') => match bump(&mut chars) {
                            Some(e @ ('\\' | '"' | '\'')) => s.push(e),
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            _ => return Err(syntax(l0, c0, "bad escape in quoted atom")),
                        },
                        Some(ch) if ch == quote => break,
                        Some(ch) => s.push(ch),
                    }
                }
                if s.is_empty() {
                    return Err(syntax(l0, c0, "empty quoted atom"));
                }
                Tok::Quoted(s)
            }
            _ => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if !is_word_char(d) {
                        break;
                    }
                    s.push(d);
                    bump(&mut chars);
                }
                if s == "->" {
                    Tok::Arrow
                } else {
                    Tok::Word(s)
                }
            }
        };
        out.push(Token {
            tok,
            line: l0,
            column: c0,
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column,
    });
    Ok(out)
}

/// Surface expression before class/atom resolution.
#[derive(Debug, Clone)]
enum Raw {
    Epsilon,
    /// Bare word: a class if it is some rule's left-hand side, else an atom.
    Name(String),
    Quoted(String),
    Union(Box<Raw>, Box<Raw>),
    Product(Box<Raw>, Box<Raw>),
    Seq(Box<Raw>),
    Point(String, usize, usize),
    Unpoint(String, usize, usize),
}

struct RawRule {
    name: String,
    pointed: bool,
    rhs: Raw,
}

struct Decl {
    kind: DeclKind,
    name: String,
    value: String,
    line: usize,
    column: usize,
    value_line: usize,
    value_column: usize,
}

#[derive(PartialEq)]
enum DeclKind {
    Weight,
    Target,
    Symbol,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Token> {
        let t = self.next();
        if t.tok == want {
            Ok(t)
        } else {
            Err(syntax(t.line, t.column, format!("expected {what}")))
        }
    }

    fn word(&mut self, what: &str) -> Result<(String, usize, usize)> {
        let t = self.next();
        match t.tok {
            Tok::Word(w) => Ok((w, t.line, t.column)),
            _ => Err(syntax(t.line, t.column, format!("expected {what}"))),
        }
    }

    /// `alt ('|' alt)*` up to (not including) `;` or `)`.
    fn alternatives(&mut self) -> Result<Raw> {
        let mut alts = vec![self.sequence()?];
        while self.peek().tok == Tok::Bar {
            self.next();
            alts.push(self.sequence()?);
        }
        Ok(fold_right(alts, |a, b| Raw::Union(Box::new(a), Box::new(b))))
    }

    fn sequence(&mut self) -> Result<Raw> {
        let start = self.peek().clone();
        let mut items = Vec::new();
        let mut saw_epsilon = false;
        loop {
            let t = self.peek().clone();
            match &t.tok {
                Tok::Semi | Tok::Bar | Tok::RParen | Tok::Eof => break,
                Tok::Word(w) if w == "_" => {
                    self.next();
                    saw_epsilon = true;
                }
                Tok::Word(w)
                    if matches!(w.as_str(), "SEQ" | "POINT" | "UNPOINT")
                        && *self.peek_at(1) == Tok::LParen =>
                {
                    let w = w.clone();
                    self.next();
                    self.next();
                    if w == "SEQ" {
                        let inner = self.alternatives()?;
                        self.expect(Tok::RParen, "`)`")?;
                        items.push(Raw::Seq(Box::new(inner)));
                    } else {
                        let (name, l, c) = self.word("a class name")?;
                        self.expect(Tok::RParen, "`)`")?;
                        items.push(if w == "POINT" {
                            Raw::Point(name, l, c)
                        } else {
                            Raw::Unpoint(name, l, c)
                        });
                    }
                }
                Tok::Word(w) => {
                    let w = w.clone();
                    self.next();
                    items.push(Raw::Name(w));
                }
                Tok::Quoted(q) => {
                    let q = q.clone();
                    self.next();
                    items.push(Raw::Quoted(q));
                }
                Tok::LParen => {
                    self.next();
                    let inner = self.alternatives()?;
                    self.expect(Tok::RParen, "`)`")?;
                    items.push(inner);
                }
                Tok::Arrow | Tok::Eq => {
                    return Err(syntax(t.line, t.column, "unexpected token in alternative"))
                }
            }
        }
        if items.is_empty() {
            if saw_epsilon {
                return Ok(Raw::Epsilon);
            }
            return Err(syntax(
                start.line,
                start.column,
                "empty alternative (write `_` for the empty structure)",
            ));
        }
        Ok(fold_right(items, |a, b| Raw::Product(Box::new(a), Box::new(b))))
    }

    fn decl(&mut self, kind: DeclKind) -> Result<Decl> {
        let kw = self.next();
        let t = self.next();
        let name = match t.tok {
            Tok::Word(w) | Tok::Quoted(w) => w,
            _ => return Err(syntax(t.line, t.column, "expected an atom name")),
        };
        self.expect(Tok::Eq, "`=`")?;
        let v = self.next();
        let value = match (&kind, v.tok) {
            (DeclKind::Symbol, Tok::Quoted(s)) => s,
            (DeclKind::Symbol, Tok::Word(s)) => s,
            (DeclKind::Symbol, _) => return Err(syntax(v.line, v.column, "expected a symbol")),
            (_, Tok::Word(s)) => s,
            _ => return Err(syntax(v.line, v.column, "expected a number")),
        };
        self.expect(Tok::Semi, "`;`")?;
        Ok(Decl {
            kind,
            name,
            value,
            line: kw.line,
            column: kw.column,
            value_line: v.line,
            value_column: v.column,
        })
    }
}

fn fold_right(mut items: Vec<Raw>, f: impl Fn(Raw, Raw) -> Raw) -> Raw {
    let mut acc = items.pop().expect("non-empty");
    while let Some(x) = items.pop() {
        acc = f(x, acc);
    }
    acc
}

/// Parse a positive weight given as a decimal (`1.5`, `3.4e-3`) or a
/// fraction (`3/4`).
pub fn parse_weight_value(text: &str) -> Option<BigRational> {
    let v = parse_rational(text)?;
    if v.is_positive() {
        Some(v)
    } else {
        None
    }
}

fn parse_rational(text: &str) -> Option<BigRational> {
    if let Some((p, q)) = text.split_once('/') {
        let p: BigInt = parse_digits(p)?;
        let q: BigInt = parse_digits(q)?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    let (mantissa, exp) = match text.find(['e', 'E']) {
        Some(i) => {
            let e = &text[i + 1..];
            let (neg, digits) = match e.strip_prefix('-') {
                Some(d) => (true, d),
                None => (false, e.strip_prefix('+').unwrap_or(e)),
            };
            if digits.is_empty() || digits.len() > 6 || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            let v: i64 = digits.parse().ok()?;
            (&text[..i], if neg { -v } else { v })
        }
        None => (text, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let all = format!("{int_part}{frac_part}");
    let num: BigInt = parse_digits(&all)?;
    let scale = exp - frac_part.len() as i64;
    if scale.unsigned_abs() > 10_000 {
        return None;
    }
    let ten = BigInt::from(10u32);
    let pow = num_traits::pow(ten, scale.unsigned_abs() as usize);
    Some(if scale >= 0 {
        BigRational::from_integer(num * pow)
    } else {
        BigRational::new(num, pow)
    })
}

fn parse_digits(s: &str) -> Option<BigInt> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Parse a grammar source into a [`Specification`].
pub fn parse_spec(text: &str) -> Result<Specification> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let mut rules: Vec<RawRule> = Vec::new();
    let mut rule_pos: HashMap<String, (usize, usize)> = HashMap::new();
    let mut axiom: Option<(String, usize, usize)> = None;
    let mut decls: Vec<Decl> = Vec::new();

    loop {
        let t = p.peek().clone();
        match &t.tok {
            Tok::Eof => break,
            Tok::Word(w) if *p.peek_at(1) != Tok::Arrow => {
                match w.as_str() {
                    "axiom" => {
                        p.next();
                        let name = p.word("a class name")?;
                        p.expect(Tok::Semi, "`;`")?;
                        if axiom.is_some() {
                            return Err(syntax(t.line, t.column, "axiom declared twice"));
                        }
                        axiom = Some(name);
                    }
                    "weight" => decls.push(p.decl(DeclKind::Weight)?),
                    "target" => decls.push(p.decl(DeclKind::Target)?),
                    "symbol" => decls.push(p.decl(DeclKind::Symbol)?),
                    "POINT" if *p.peek_at(1) == Tok::LParen => {
                        p.next();
                        p.next();
                        let (name, l, c) = p.word("a class name")?;
                        p.expect(Tok::RParen, "`)`")?;
                        p.expect(Tok::Arrow, "`->`")?;
                        let rhs = p.alternatives()?;
                        p.expect(Tok::Semi, "`;`")?;
                        if rule_pos.insert(name.clone(), (l, c)).is_some() {
                            return Err(Error::DuplicateClass { name, line: l, column: c });
                        }
                        rules.push(RawRule {
                            name,
                            pointed: true,
                            rhs,
                        });
                    }
                    _ => return Err(syntax(t.line, t.column, "expected a rule or declaration")),
                }
            }
            Tok::Word(w) => {
                let name = w.clone();
                if matches!(name.as_str(), "_" | "SEQ" | "POINT" | "UNPOINT") {
                    return Err(syntax(t.line, t.column, format!("`{name}` cannot be a class")));
                }
                p.next();
                p.next();
                let rhs = p.alternatives()?;
                p.expect(Tok::Semi, "`;`")?;
                if rule_pos.insert(name.clone(), (t.line, t.column)).is_some() {
                    return Err(Error::DuplicateClass {
                        name,
                        line: t.line,
                        column: t.column,
                    });
                }
                rules.push(RawRule {
                    name,
                    pointed: false,
                    rhs,
                });
            }
            _ => return Err(syntax(t.line, t.column, "expected a rule or declaration")),
        }
    }

    if rules.is_empty() {
        let t = p.peek();
        return Err(syntax(t.line, t.column, "grammar has no rules"));
    }

    let class_index: HashMap<String, ClassId> = rules
        .iter()
        .enumerate()
        .map(|(i, r)| (r.name.clone(), ClassId(i)))
        .collect();

    let mut atoms: Vec<AtomDef> = Vec::new();
    let mut atom_index: HashMap<String, AtomId> = HashMap::new();
    let mut classes = Vec::with_capacity(rules.len());
    for r in &rules {
        let rhs = resolve(&r.rhs, &class_index, &mut atoms, &mut atom_index)?;
        classes.push(ClassDef {
            name: r.name.clone(),
            rhs,
            pointed: r.pointed,
            provenance: None,
        });
    }

    let axiom = match axiom {
        None => ClassId(0),
        Some((name, _, _)) => match class_index.get(&name) {
            Some(&c) => c,
            None => return Err(Error::UndeclaredAxiom(name)),
        },
    };

    let mut declared_weights: Vec<(AtomId, BigRational)> = Vec::new();
    let mut declared_targets: Vec<(AtomId, f64)> = Vec::new();
    let mut distinguished: Vec<AtomId> = Vec::new();
    for d in decls {
        let atom = match atom_index.get(&d.name) {
            Some(&a) => a,
            None => {
                return Err(Error::NotAnAtom {
                    name: d.name,
                    line: d.line,
                    column: d.column,
                })
            }
        };
        match d.kind {
            DeclKind::Symbol => {
                if d.value.is_empty() {
                    return Err(syntax(d.value_line, d.value_column, "empty symbol"));
                }
                atoms[atom.0].symbol = d.value;
            }
            DeclKind::Weight => {
                let w = parse_weight_value(&d.value).ok_or_else(|| {
                    syntax(d.value_line, d.value_column, "weight must be a positive decimal or p/q")
                })?;
                if declared_weights.iter().any(|(a, _)| *a == atom) {
                    return Err(syntax(d.line, d.column, "weight declared twice"));
                }
                declared_weights.push((atom, w));
                if !distinguished.contains(&atom) {
                    distinguished.push(atom);
                }
            }
            DeclKind::Target => {
                let v: f64 = d
                    .value
                    .parse()
                    .ok()
                    .filter(|v: &f64| *v > 0.0 && *v < 1.0)
                    .ok_or_else(|| {
                        syntax(d.value_line, d.value_column, "target must be a decimal in (0, 1)")
                    })?;
                if declared_targets.iter().any(|(a, _)| *a == atom) {
                    return Err(syntax(d.line, d.column, "target declared twice"));
                }
                declared_targets.push((atom, v));
                if !distinguished.contains(&atom) {
                    distinguished.push(atom);
                }
            }
        }
    }
    if distinguished.is_empty() {
        distinguished = (0..atoms.len()).map(AtomId).collect();
    }

    Ok(Specification {
        classes,
        atoms,
        axiom,
        distinguished,
        declared_weights,
        declared_targets,
    })
}

fn resolve(
    raw: &Raw,
    classes: &HashMap<String, ClassId>,
    atoms: &mut Vec<AtomDef>,
    atom_index: &mut HashMap<String, AtomId>,
) -> Result<Expr> {
    let class_ref = |name: &str, l: usize, c: usize| -> Result<ClassId> {
        classes
            .get(name)
            .copied()
            .ok_or_else(|| syntax(l, c, format!("`{name}` is not a class")))
    };
    Ok(match raw {
        Raw::Epsilon => Expr::Epsilon,
        Raw::Name(n) => match classes.get(n) {
            Some(&c) => Expr::Class(c),
            None => Expr::Atom(intern(n, atoms, atom_index)),
        },
        Raw::Quoted(q) => Expr::Atom(intern(q, atoms, atom_index)),
        Raw::Union(a, b) => Expr::Union(
            Box::new(resolve(a, classes, atoms, atom_index)?),
            Box::new(resolve(b, classes, atoms, atom_index)?),
        ),
        Raw::Product(a, b) => Expr::Product(
            Box::new(resolve(a, classes, atoms, atom_index)?),
            Box::new(resolve(b, classes, atoms, atom_index)?),
        ),
        Raw::Seq(a) => Expr::Sequence(Box::new(resolve(a, classes, atoms, atom_index)?)),
        Raw::Point(n, l, c) => Expr::Point(class_ref(n, *l, *c)?),
        Raw::Unpoint(n, l, c) => Expr::Unpoint(class_ref(n, *l, *c)?),
    })
}

fn intern(name: &str, atoms: &mut Vec<AtomDef>, index: &mut HashMap<String, AtomId>) -> AtomId {
    *index.entry(name.to_string()).or_insert_with(|| {
        atoms.push(AtomDef {
            name: name.to_string(),
            symbol: name.to_string(),
        });
        AtomId(atoms.len() - 1)
    })
}

/// Value of a rational as `p/q` (or `p` when integral).
pub fn rational_text(v: &BigRational) -> String {
    if v.denom().is_one() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err_pos(e: Error) -> (usize, usize) {
        match e {
            Error::Syntax { line, column, .. } => (line, column),
            Error::DuplicateClass { line, column, .. } => (line, column),
            Error::NotAnAtom { line, column, .. } => (line, column),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn motzkin_shape() {
        let s = parse_spec("S -> a S b S | c S | _ ;").unwrap();
        assert_eq!(s.classes().len(), 1);
        assert_eq!(s.atoms().len(), 3);
        let mut alts = 0;
        let mut e = &s.classes()[0].rhs;
        loop {
            alts += 1;
            match e {
                Expr::Union(_, r) => e = r,
                _ => break,
            }
        }
        assert_eq!(alts, 3);
    }

    #[test]
    fn epsilon_only() {
        let s = parse_spec("S -> _ ;").unwrap();
        assert_eq!(s.classes()[0].rhs, Expr::Epsilon);
        assert!(s.atoms().is_empty());
    }

    #[test]
    fn fibonacci_shape() {
        let s = parse_spec("S -> a S | b b S | _ ;").unwrap();
        assert_eq!(s.classes().len(), 1);
        assert_eq!(s.atoms().len(), 2);
    }

    #[test]
    fn declarations() {
        let s = parse_spec(
            "# c weighted\naxiom S ;\nS -> a S b S | c S | _ ;\nweight c = 3/2 ;\ntarget a = 0.25 ;\nsymbol c = \"x\" ;",
        )
        .unwrap();
        let c = s.find_atom("c").unwrap();
        let a = s.find_atom("a").unwrap();
        assert_eq!(s.declared_weights()[0], (c, BigRational::new(3.into(), 2.into())));
        assert_eq!(s.declared_targets()[0], (a, 0.25));
        assert_eq!(s.distinguished(), &[c, a]);
        assert_eq!(s.atom(c).symbol, "x");
    }

    #[test]
    fn quoted_and_symbolic_atoms() {
        let s = parse_spec("E -> + E E | - E E | N ; N -> '0' | \"1\" ;").unwrap();
        let names: Vec<_> = s.atoms().iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, vec!["+", "-", "0", "1"]);
    }

    #[test]
    fn canonical_text_reads_back() {
        let sources = [
            "S -> a\0b S | _ ;",
            "S -> 'x y' S | \"_\" | \"S\" S | ';' | \"q\\\"\" ; symbol 'x y' = \"\\t\\n\" ;",
            "S -> SEQ(a | b c) ; P -> POINT(S) UNPOINT(S) ; POINT(C) -> (a | b) S ;",
        ];
        for src in sources {
            let s = parse_spec(src).unwrap();
            let again = parse_spec(&s.canonical_text()).unwrap();
            assert_eq!(again.canonical_text(), s.canonical_text(), "{src}");
            assert_eq!(again.atoms(), s.atoms());
        }
        for reserved in ["SEQ -> a ;", "POINT -> a ;", "_ -> a ;"] {
            assert!(parse_spec(reserved).is_err(), "{reserved}");
        }
    }

    #[test]
    fn default_axiom_is_first_rule() {
        let s = parse_spec("A -> b ; B -> A ;").unwrap();
        assert_eq!(s.axiom(), ClassId(0));
        let s = parse_spec("axiom B ; A -> b ; B -> A ;").unwrap();
        assert_eq!(s.axiom(), ClassId(1));
    }

    #[test]
    fn sequence_point_and_grouping() {
        let s = parse_spec("S -> SEQ(a | b c) ; P -> POINT(S) UNPOINT(S) ; POINT(C) -> (a | b) S ;")
            .unwrap();
        assert!(matches!(s.classes()[0].rhs, Expr::Sequence(_)));
        assert!(s.classes()[2].pointed);
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(err_pos(parse_spec("S -> a ;\nS -> b ;").unwrap_err()), (2, 1));
        assert_eq!(err_pos(parse_spec("S -> a\n").unwrap_err()), (2, 1));
        assert_eq!(err_pos(parse_spec("S -> a | ;").unwrap_err()), (1, 10));
        assert_eq!(err_pos(parse_spec("S -> a ;\nweight S = 2 ;").unwrap_err()), (2, 1));
        assert_eq!(err_pos(parse_spec("S -> a ;\nweight a = -2 ;").unwrap_err()), (2, 12));
        assert_eq!(err_pos(parse_spec("S -> POINT(b) ;").unwrap_err()), (1, 12));
        assert_eq!(err_pos(parse_spec("S -> 'a ;").unwrap_err()), (1, 6));
    }

    #[test]
    fn undeclared_axiom() {
        assert_eq!(
            parse_spec("axiom T ; S -> a ;").unwrap_err(),
            Error::UndeclaredAxiom("T".into())
        );
    }

    #[test]
    fn weight_values() {
        let r = |p: i64, q: i64| BigRational::new(p.into(), q.into());
        assert_eq!(parse_weight_value("1.138626"), Some(r(1138626, 1000000)));
        assert_eq!(parse_weight_value("3.422990e-3"), Some(r(342299, 100000000)));
        assert_eq!(parse_weight_value("27/4"), Some(r(27, 4)));
        assert_eq!(parse_weight_value("2"), Some(r(2, 1)));
        assert_eq!(parse_weight_value(".5"), Some(r(1, 2)));
        assert_eq!(parse_weight_value("1e2"), Some(r(100, 1)));
        for bad in ["0", "0/3", "1/0", "-1", "x", "", "1e", "1.2.3", "1e999999999"] {
            assert_eq!(parse_weight_value(bad), None, "{bad}");
        }
    }
}
