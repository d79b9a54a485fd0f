use super::grammar::productivity;
use super::validate::validate;
use super::{AtomId, ClassDef, ClassId, Expr, Specification};
use crate::{Error, Result};
use std::collections::HashMap;

/// Structural findings about a standardized specification.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationReport {
    /// Fresh classes with a note on what they stand for.
    pub introduced_classes: Vec<(ClassId, String)>,
    pub is_regular: bool,
    pub is_context_free: bool,
    /// Strongly connected components of the class-dependency graph.
    pub scc_decomposition: Vec<Vec<ClassId>>,
    /// Gcd of the cycle lengths (in atoms) inside each component, `None`
    /// for components without a cycle.
    pub cycle_gcd_per_scc: Vec<Option<u64>>,
}

impl StandardizationReport {
    /// Components that contain at least one cycle.
    pub fn cyclic_components(&self) -> impl Iterator<Item = (&Vec<ClassId>, u64)> {
        self.scc_decomposition
            .iter()
            .zip(&self.cycle_gcd_per_scc)
            .filter_map(|(c, g)| g.map(|g| (c, g)))
    }

    pub fn is_aperiodic(&self) -> bool {
        self.cyclic_components().all(|(_, g)| g == 1)
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum Key {
    Union(ClassId, ClassId),
    Product(ClassId, ClassId),
    Seq(ClassId),
    Point(ClassId),
    Unpoint(ClassId),
}

struct Builder {
    classes: Vec<ClassDef>,
    atom_names: Vec<String>,
    memo: HashMap<Key, ClassId>,
    atom_class: HashMap<AtomId, ClassId>,
    epsilon: Option<ClassId>,
    counter: usize,
}

impl Builder {
    fn fresh(&mut self, owner: ClassId, rhs: Expr, pointed: bool, note: String) -> ClassId {
        self.counter += 1;
        let name = format!("{}#{}", self.classes[owner.0].name, self.counter);
        self.push(name, rhs, pointed, note)
    }

    fn push(&mut self, name: String, rhs: Expr, pointed: bool, note: String) -> ClassId {
        self.classes.push(ClassDef {
            name,
            rhs,
            pointed,
            provenance: Some(note),
        });
        ClassId(self.classes.len() - 1)
    }

    fn epsilon(&mut self) -> ClassId {
        if let Some(e) = self.epsilon {
            return e;
        }
        let e = self.push("#eps".into(), Expr::Epsilon, false, "empty structure".into());
        self.epsilon = Some(e);
        e
    }

    fn atom(&mut self, a: AtomId) -> ClassId {
        if let Some(&c) = self.atom_class.get(&a) {
            return c;
        }
        let name = self.atom_names[a.0].clone();
        let c = self.push(format!("#{name}"), Expr::Atom(a), false, format!("atom {name}"));
        self.atom_class.insert(a, c);
        c
    }

    fn memo(&mut self, key: Key, make: impl FnOnce(&mut Self) -> ClassId) -> ClassId {
        if let Some(&c) = self.memo.get(&key) {
            return c;
        }
        let c = make(self);
        self.memo.insert(key, c);
        c
    }

    /// A class (existing or fresh) whose language is `e`.
    fn lower(&mut self, owner: ClassId, e: &Expr) -> ClassId {
        match e {
            Expr::Epsilon => self.epsilon(),
            Expr::Atom(a) => self.atom(*a),
            Expr::Class(c) => *c,
            Expr::Union(l, r) => {
                let (l, r) = (self.lower(owner, l), self.lower(owner, r));
                self.memo(Key::Union(l, r), |b| {
                    b.fresh(owner, union(l, r), false, "union".into())
                })
            }
            Expr::Product(l, r) => {
                let (l, r) = (self.lower(owner, l), self.lower(owner, r));
                self.memo(Key::Product(l, r), |b| {
                    b.fresh(owner, product(l, r), false, "product".into())
                })
            }
            Expr::Sequence(inner) => {
                let x = self.lower(owner, inner);
                self.memo(Key::Seq(x), |b| {
                    let q = b.fresh(owner, Expr::Epsilon, false, "sequence".into());
                    b.define_sequence(owner, q, x);
                    q
                })
            }
            Expr::Point(c) => {
                let c = *c;
                self.memo(Key::Point(c), |b| {
                    b.fresh(owner, Expr::Point(c), false, "pointing".into())
                })
            }
            Expr::Unpoint(c) => {
                let c = *c;
                self.memo(Key::Unpoint(c), |b| {
                    let eps = b.epsilon();
                    b.fresh(owner, product(c, eps), true, "unpointing".into())
                })
            }
        }
    }

    /// `q = ε + x × q`
    fn define_sequence(&mut self, owner: ClassId, q: ClassId, x: ClassId) {
        let eps = self.epsilon();
        let step = self.memo(Key::Product(x, q), |b| {
            b.fresh(owner, product(x, q), false, "sequence step".into())
        });
        self.classes[q.0].rhs = union(eps, step);
    }

    /// Rewrite the source rule of `c` into one standard production.
    fn define(&mut self, c: ClassId) {
        let rhs = self.classes[c.0].rhs.clone();
        if self.classes[c.0].pointed {
            let new = match &rhs {
                Expr::Product(l, r) => product(self.lower(c, l), self.lower(c, r)),
                other => {
                    let x = self.lower(c, other);
                    product(x, self.epsilon())
                }
            };
            self.classes[c.0].rhs = new;
            return;
        }
        let new = match &rhs {
            Expr::Epsilon | Expr::Atom(_) | Expr::Point(_) => rhs.clone(),
            Expr::Class(x) => product(*x, self.epsilon()),
            Expr::Union(l, r) => union(self.lower(c, l), self.lower(c, r)),
            Expr::Product(l, r) => product(self.lower(c, l), self.lower(c, r)),
            Expr::Sequence(inner) => {
                let x = self.lower(c, inner);
                self.define_sequence(c, c, x);
                return;
            }
            Expr::Unpoint(x) => {
                let x = *x;
                self.classes[c.0].pointed = true;
                product(x, self.epsilon())
            }
        };
        self.classes[c.0].rhs = new;
    }
}

fn union(a: ClassId, b: ClassId) -> Expr {
    Expr::Union(Box::new(Expr::Class(a)), Box::new(Expr::Class(b)))
}

fn product(a: ClassId, b: ClassId) -> Expr {
    Expr::Product(Box::new(Expr::Class(a)), Box::new(Expr::Class(b)))
}

/// Rewrite every production into standard form and check that counts are
/// finite and nonzero somewhere.
///
/// Source classes keep their identifiers; fresh classes are appended.
/// Identical subexpressions share one fresh class.
pub fn standardize(spec: &Specification) -> Result<(Specification, StandardizationReport)> {
    let source = spec.classes.len();
    let mut b = Builder {
        classes: spec.classes.clone(),
        atom_names: spec.atoms.iter().map(|a| a.name.clone()).collect(),
        memo: HashMap::new(),
        atom_class: HashMap::new(),
        epsilon: None,
        counter: 0,
    };
    for c in 0..source {
        b.define(ClassId(c));
    }
    let out = Specification {
        classes: b.classes,
        ..spec.clone()
    };

    let grammar = out.grammar()?;
    let (productive, _) = productivity(&grammar.rules);
    if let Some(bad) = productive.iter().position(|p| !p) {
        return Err(Error::UnproductiveClass(out.classes[bad].name.clone()));
    }
    let report = validate(&out)?;
    Ok((out, report))
}
