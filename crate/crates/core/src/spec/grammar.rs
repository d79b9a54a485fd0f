use super::{AtomId, ClassId, Expr, Specification};
use crate::{Error, Result};

/// One production of a standardized specification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    Epsilon,
    Atom(AtomId),
    Union(ClassId, ClassId),
    Product(ClassId, ClassId),
    /// `C = ΘA`
    Point(ClassId),
    /// `ΘC = A × B`
    PointedProduct(ClassId, ClassId),
}

impl Rule {
    pub fn children(&self) -> Vec<ClassId> {
        match *self {
            Rule::Epsilon | Rule::Atom(_) => vec![],
            Rule::Point(a) => vec![a],
            Rule::Union(a, b) | Rule::Product(a, b) | Rule::PointedProduct(a, b) => vec![a, b],
        }
    }
}

/// Flat rule view of a standardized specification, with the order in
/// which classes must be evaluated within one size.
#[derive(Debug, Clone)]
pub struct Grammar {
    pub rules: Vec<Rule>,
    pub atom_count: usize,
    pub axiom: ClassId,
    /// Classes ordered so that same-size dependencies come first.
    pub order: Vec<ClassId>,
    /// Whether the class contains the empty structure.
    pub nullable: Vec<bool>,
}

fn rule_of(spec: &Specification, c: ClassId) -> Result<Rule> {
    let def = &spec.classes[c.0];
    let bad = || Error::NotStandard(def.name.clone());
    let class = |e: &Expr| match e {
        Expr::Class(x) => Ok(*x),
        _ => Err(bad()),
    };
    if def.pointed {
        return match &def.rhs {
            Expr::Product(a, b) => Ok(Rule::PointedProduct(class(a)?, class(b)?)),
            _ => Err(bad()),
        };
    }
    Ok(match &def.rhs {
        Expr::Epsilon => Rule::Epsilon,
        Expr::Atom(a) => Rule::Atom(*a),
        Expr::Union(a, b) => Rule::Union(class(a)?, class(b)?),
        Expr::Product(a, b) => Rule::Product(class(a)?, class(b)?),
        Expr::Point(a) => Rule::Point(*a),
        _ => return Err(bad()),
    })
}

impl Grammar {
    pub fn from_spec(spec: &Specification) -> Result<Self> {
        let rules = (0..spec.classes.len())
            .map(|i| rule_of(spec, ClassId(i)))
            .collect::<Result<Vec<_>>>()?;
        Grammar::new(rules, spec.atoms.len(), spec.axiom, |c| {
            spec.classes[c.0].name.clone()
        })
    }

    /// Build from raw rules. `name` labels classes in error messages.
    pub fn new(
        rules: Vec<Rule>,
        atom_count: usize,
        axiom: ClassId,
        name: impl Fn(ClassId) -> String,
    ) -> Result<Self> {
        let nullable = nullable(&rules);
        let order = same_size_order(&rules, &nullable).map_err(|cycle| {
            Error::EpsilonCycle(cycle.into_iter().map(&name).collect())
        })?;
        Ok(Grammar {
            rules,
            atom_count,
            axiom,
            order,
            nullable,
        })
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn is_context_free(&self) -> bool {
        !self
            .rules
            .iter()
            .any(|r| matches!(r, Rule::Point(_) | Rule::PointedProduct(..)))
    }

    pub fn has_pointed_product(&self) -> bool {
        self.rules.iter().any(|r| matches!(r, Rule::PointedProduct(..)))
    }

    /// Classes whose count at size n enters the count of `c` at the same size.
    pub fn same_size_deps(&self, c: ClassId) -> Vec<ClassId> {
        same_size_deps(&self.rules, &self.nullable, c)
    }

    /// Classes that contain at least one structure, and at least one
    /// structure of positive size.
    pub fn productivity(&self) -> (Vec<bool>, Vec<bool>) {
        productivity(&self.rules)
    }
}

fn nullable(rules: &[Rule]) -> Vec<bool> {
    let mut v = vec![false; rules.len()];
    loop {
        let mut changed = false;
        for (i, r) in rules.iter().enumerate() {
            let n = match *r {
                Rule::Epsilon => true,
                Rule::Atom(_) | Rule::Point(_) | Rule::PointedProduct(..) => false,
                Rule::Union(a, b) => v[a.0] || v[b.0],
                Rule::Product(a, b) => v[a.0] && v[b.0],
            };
            if n && !v[i] {
                v[i] = true;
                changed = true;
            }
        }
        if !changed {
            return v;
        }
    }
}

pub(crate) fn productivity(rules: &[Rule]) -> (Vec<bool>, Vec<bool>) {
    let mut any = vec![false; rules.len()];
    let mut positive = vec![false; rules.len()];
    loop {
        let mut changed = false;
        for (i, r) in rules.iter().enumerate() {
            let (x, y) = match *r {
                Rule::Epsilon => (true, false),
                Rule::Atom(_) => (true, true),
                Rule::Union(a, b) => (any[a.0] || any[b.0], positive[a.0] || positive[b.0]),
                Rule::Product(a, b) => {
                    let both = any[a.0] && any[b.0];
                    (both, both && (positive[a.0] || positive[b.0]))
                }
                Rule::Point(a) => (positive[a.0], positive[a.0]),
                Rule::PointedProduct(a, b) => {
                    let p = any[a.0] && any[b.0] && (positive[a.0] || positive[b.0]);
                    (p, p)
                }
            };
            if x && !any[i] {
                any[i] = true;
                changed = true;
            }
            if y && !positive[i] {
                positive[i] = true;
                changed = true;
            }
        }
        if !changed {
            return (any, positive);
        }
    }
}

fn same_size_deps(rules: &[Rule], nullable: &[bool], c: ClassId) -> Vec<ClassId> {
    match rules[c.0] {
        Rule::Epsilon | Rule::Atom(_) => vec![],
        Rule::Union(a, b) => vec![a, b],
        Rule::Point(a) => vec![a],
        Rule::Product(a, b) | Rule::PointedProduct(a, b) => {
            let mut d = Vec::new();
            if nullable[b.0] {
                d.push(a);
            }
            if nullable[a.0] {
                d.push(b);
            }
            d
        }
    }
}

/// Topological order of the same-size dependency graph (dependencies
/// first), or the classes of a cycle.
fn same_size_order(rules: &[Rule], nullable: &[bool]) -> std::result::Result<Vec<ClassId>, Vec<ClassId>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let n = rules.len();
    let deps: Vec<Vec<ClassId>> = (0..n)
        .map(|i| same_size_deps(rules, nullable, ClassId(i)))
        .collect();
    let mut mark = vec![Mark::New; n];
    let mut order = Vec::with_capacity(n);
    for root in 0..n {
        if mark[root] != Mark::New {
            continue;
        }
        // Iterative DFS: (node, next child index).
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        mark[root] = Mark::Active;
        while let Some(top) = stack.last_mut() {
            let v = top.0;
            if top.1 < deps[v].len() {
                let w = deps[v][top.1].0;
                top.1 += 1;
                match mark[w] {
                    Mark::New => {
                        mark[w] = Mark::Active;
                        stack.push((w, 0));
                    }
                    Mark::Active => {
                        let start = stack.iter().position(|&(x, _)| x == w).unwrap();
                        let mut cycle: Vec<ClassId> =
                            stack[start..].iter().map(|&(x, _)| ClassId(x)).collect();
                        cycle.push(ClassId(w));
                        return Err(cycle);
                    }
                    Mark::Done => {}
                }
            } else {
                mark[v] = Mark::Done;
                order.push(ClassId(v));
                stack.pop();
            }
        }
    }
    Ok(order)
}
