use crate::counting::build_count_table;
use crate::spec::{AtomDef, AtomId, ClassDef, ClassId, Expr, Rule, Specification};
use crate::weights::Weights;
use crate::{Error, Result};
use num_rational::BigRational;
use num_traits::Zero;

/// A specification extended with companion classes `C•` whose structures
/// are those of `C` with one occurrence of a tracked atom marked. The
/// marked occurrence is a fresh atom with the same weight.
#[derive(Debug, Clone)]
pub struct PointedSpec {
    spec: Specification,
    base_classes: usize,
    /// (tracked atom, marked copy)
    pointed: Vec<(AtomId, AtomId)>,
    /// Per tracked atom, per base class: the companion, `None` when empty.
    companions: Vec<Vec<Option<ClassId>>>,
}

impl PointedSpec {
    pub fn spec(&self) -> &Specification {
        &self.spec
    }

    pub fn base_class_count(&self) -> usize {
        self.base_classes
    }

    pub fn tracked_atoms(&self) -> impl Iterator<Item = AtomId> + '_ {
        self.pointed.iter().map(|p| p.0)
    }

    pub fn pointed_atom(&self, atom: AtomId) -> Option<AtomId> {
        self.pointed.iter().find(|p| p.0 == atom).map(|p| p.1)
    }

    /// Companion of `class` for `atom`; `None` if no structure of the class
    /// contains the atom.
    pub fn companion(&self, atom: AtomId, class: ClassId) -> Option<ClassId> {
        let i = self.pointed.iter().position(|p| p.0 == atom)?;
        self.companions[i].get(class.0).copied().flatten()
    }

    /// Base weights extended to the marked atoms.
    pub fn weights(&self, base: &Weights) -> Weights {
        let mut w = base.clone();
        for &(a, p) in &self.pointed {
            w.set(p, base.get(a)).expect("base weights are positive");
        }
        w
    }
}

pub fn point_spec(spec: &Specification, atom: AtomId) -> Result<PointedSpec> {
    point_spec_all(spec, &[atom])
}

/// Companions for several atoms at once, sharing the base classes.
pub fn point_spec_all(spec: &Specification, atoms: &[AtomId]) -> Result<PointedSpec> {
    let g = spec.grammar()?;
    if !g.is_context_free() {
        return Err(Error::NotContextFree);
    }
    let base = g.len();
    let mut out = spec.clone();
    let mut pointed = Vec::new();
    let mut companions = Vec::new();
    for &z in atoms {
        if z.0 >= spec.atoms().len() {
            return Err(Error::UnknownAtom(format!("#{}", z.0)));
        }
        let zname = spec.atom_name(z).to_string();
        let zp = AtomId(out.atoms.len());
        out.atoms.push(AtomDef {
            name: format!("{zname}#•"),
            symbol: spec.atom(z).symbol.clone(),
        });
        pointed.push((z, zp));

        // Classes with at least one structure containing z (all classes are
        // productive after standardization).
        let mut contains = vec![false; base];
        loop {
            let mut changed = false;
            for c in 0..base {
                let v = match g.rules[c] {
                    Rule::Atom(a) => a == z,
                    Rule::Union(a, b) | Rule::Product(a, b) => contains[a.0] || contains[b.0],
                    _ => false,
                };
                if v && !contains[c] {
                    contains[c] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        let provenance = format!("marked {zname}");
        let fresh = |out: &mut Specification, name: String| {
            out.classes.push(ClassDef {
                name,
                rhs: Expr::Epsilon,
                pointed: false,
                provenance: Some(provenance.clone()),
            });
            ClassId(out.classes.len() - 1)
        };
        let mut slot: Vec<Option<ClassId>> = vec![None; base];
        for c in 0..base {
            if !contains[c] {
                continue;
            }
            let own = match g.rules[c] {
                Rule::Atom(_) | Rule::Product(..) => true,
                Rule::Union(a, b) => contains[a.0] && contains[b.0],
                _ => false,
            };
            if own {
                slot[c] = Some(fresh(&mut out, format!("{}#•{zname}", spec.class_name(ClassId(c)))));
            }
        }
        // A union with one marked side is an alias of that side's companion.
        for c in 0..base {
            if !contains[c] || slot[c].is_some() {
                continue;
            }
            let mut x = c;
            while slot[x].is_none() {
                let Rule::Union(a, b) = g.rules[x] else {
                    unreachable!("only unions are aliases")
                };
                x = if contains[a.0] { a.0 } else { b.0 };
            }
            slot[c] = slot[x];
        }
        let class = |c: ClassId| Box::new(Expr::Class(c));
        for c in 0..base {
            let Some(me) = slot[c] else { continue };
            let rhs = match g.rules[c] {
                Rule::Atom(_) => Expr::Atom(zp),
                Rule::Union(a, b) if contains[a.0] && contains[b.0] => {
                    Expr::Union(class(slot[a.0].unwrap()), class(slot[b.0].unwrap()))
                }
                Rule::Union(..) => continue,
                Rule::Product(a, b) => {
                    let left = contains[a.0].then(|| Expr::Product(class(slot[a.0].unwrap()), class(b)));
                    let right = contains[b.0].then(|| Expr::Product(class(a), class(slot[b.0].unwrap())));
                    match (left, right) {
                        (Some(l), Some(r)) => {
                            let name = out.classes[me.0].name.clone();
                            let lc = fresh(&mut out, format!("{name}.l"));
                            let rc = fresh(&mut out, format!("{name}.r"));
                            out.classes[lc.0].rhs = l;
                            out.classes[rc.0].rhs = r;
                            Expr::Union(class(lc), class(rc))
                        }
                        (Some(e), None) | (None, Some(e)) => e,
                        (None, None) => unreachable!(),
                    }
                }
                _ => unreachable!(),
            };
            out.classes[me.0].rhs = rhs;
        }
        companions.push(slot);
    }
    out.grammar()?;
    Ok(PointedSpec {
        spec: out,
        base_classes: base,
        pointed,
        companions,
    })
}

/// Expected number of occurrences of `atom` at size `n`, as the ratio of
/// the marked and plain weighted counts of the axiom.
pub fn freq_via_pointing(spec: &Specification, weights: &Weights, atom: AtomId, n: usize) -> Result<BigRational> {
    let p = point_spec(spec, atom)?;
    let table = build_count_table(&p.spec, &p.weights(weights), n)?;
    let axiom = spec.axiom();
    let total = table.count(axiom, n)?;
    if total.is_zero() {
        return Err(Error::EmptyClassAtSize {
            class: spec.class_name(axiom).to_string(),
            n,
        });
    }
    Ok(match p.companion(atom, axiom) {
        Some(c) => table.count(c, n)? / total,
        None => BigRational::zero(),
    })
}
