//! Expected atom frequencies under the weighted distribution.
//!
//! Two independent routes: a recurrence over occurrence counts (works for
//! every specification) and counting in a grammar where one occurrence of
//! the atom is marked (context-free specifications only, much cheaper).

mod dp;
mod pointing;

pub use dp::{build_occurrence_table, freq_dp, OccurrenceTable};
pub use pointing::{freq_via_pointing, point_spec, point_spec_all, PointedSpec};

use crate::counting::{build_count_table, fill_table};
use crate::spec::{AtomId, ClassId, Grammar, Specification};
use crate::weights::Weights;
use crate::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

/// Frequency `f(Z, axiom, n) / n` of each requested atom.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyProfile {
    pub n: usize,
    pub entries: Vec<(AtomId, BigRational)>,
}

impl FrequencyProfile {
    pub fn get(&self, atom: AtomId) -> Option<&BigRational> {
        self.entries.iter().find(|e| e.0 == atom).map(|e| &e.1)
    }
}

/// Profile over the distinguished atoms.
pub fn frequency_profile(spec: &Specification, weights: &Weights, n: usize) -> Result<FrequencyProfile> {
    frequency_profile_of(spec, weights, spec.distinguished(), n)
}

/// Profile over every atom of the specification.
pub fn full_frequency_profile(spec: &Specification, weights: &Weights, n: usize) -> Result<FrequencyProfile> {
    let all: Vec<AtomId> = spec.atom_ids().collect();
    frequency_profile_of(spec, weights, &all, n)
}

/// Profile over `atoms`. Context-free specifications go through the marked
/// grammar, others through the occurrence recurrences.
pub fn frequency_profile_of(
    spec: &Specification,
    weights: &Weights,
    atoms: &[AtomId],
    n: usize,
) -> Result<FrequencyProfile> {
    if n == 0 {
        return Err(Error::DomainError("frequencies need a positive size".into()));
    }
    let size = BigRational::from_integer(BigInt::from(n));
    let axiom = spec.axiom();
    let mut entries = Vec::with_capacity(atoms.len());
    if spec.grammar()?.is_context_free() {
        let p = point_spec_all(spec, atoms)?;
        let table = build_count_table(p.spec(), &p.weights(weights), n)?;
        let total = table.count(axiom, n)?;
        if total.is_zero() {
            return Err(Error::EmptyClassAtSize {
                class: spec.class_name(axiom).to_string(),
                n,
            });
        }
        for &a in atoms {
            let marked = match p.companion(a, axiom) {
                Some(c) => table.count(c, n)?,
                None => BigRational::zero(),
            };
            entries.push((a, marked / &total / &size));
        }
    } else {
        for &a in atoms {
            entries.push((a, freq_dp(spec, weights, a, n)? / &size));
        }
    }
    Ok(FrequencyProfile { n, entries })
}

/// Floating-point profile evaluator reused across many weight vectors.
#[derive(Debug, Clone)]
pub struct FloatProfiler {
    grammar: Grammar,
    axiom: ClassId,
    atoms: Vec<AtomId>,
    /// Marked copy of each tracked atom, when the marked grammar is used.
    marked: Option<Vec<(AtomId, Option<ClassId>)>>,
    base_atoms: usize,
}

impl FloatProfiler {
    pub fn new(spec: &Specification, atoms: &[AtomId]) -> Result<Self> {
        let g = spec.grammar()?;
        if g.is_context_free() {
            let p = point_spec_all(spec, atoms)?;
            let marked = atoms
                .iter()
                .map(|&a| (p.pointed_atom(a).unwrap(), p.companion(a, spec.axiom())))
                .collect();
            Ok(FloatProfiler {
                grammar: p.spec().grammar()?,
                axiom: spec.axiom(),
                atoms: atoms.to_vec(),
                marked: Some(marked),
                base_atoms: spec.atoms().len(),
            })
        } else {
            Ok(FloatProfiler {
                grammar: g,
                axiom: spec.axiom(),
                atoms: atoms.to_vec(),
                marked: None,
                base_atoms: spec.atoms().len(),
            })
        }
    }

    pub fn atoms(&self) -> &[AtomId] {
        &self.atoms
    }

    /// Frequencies of the tracked atoms at size `n` for one weight per
    /// atom of the base specification. All weights are rescaled together
    /// when counts leave the floating-point range, which does not change
    /// the distribution at a fixed size.
    pub fn evaluate(&self, weights: &[f64], n: usize) -> Result<Vec<f64>> {
        assert_eq!(weights.len(), self.base_atoms);
        if n == 0 {
            return Err(Error::DomainError("frequencies need a positive size".into()));
        }
        let mut scale = 1.0f64;
        for _ in 0..8 {
            let w: Vec<f64> = weights.iter().map(|x| x * scale).collect();
            match self.try_evaluate(&w, n) {
                Ok(v) => return Ok(v),
                Err(growth) if growth.is_finite() && growth > 0.0 => scale /= growth,
                Err(_) => break,
            }
        }
        Err(Error::DomainError("counts are out of floating-point range".into()))
    }

    /// On range failure, returns an estimate of the per-size growth.
    fn try_evaluate(&self, w: &[f64], n: usize) -> std::result::Result<Vec<f64>, f64> {
        let fine = |x: f64| x.is_finite() && x > f64::MIN_POSITIVE * 1e20 && x < f64::MAX / 1e20;
        let growth = |row: &[f64]| {
            row.iter()
                .enumerate()
                .skip(1)
                .filter(|(_, &v)| fine(v))
                .last()
                .map(|(m, &v)| v.powf(1.0 / m as f64))
                .unwrap_or(f64::NAN)
        };
        match &self.marked {
            Some(marked) => {
                let mut all = w.to_vec();
                all.resize(self.grammar.atom_count, 0.0);
                for (&a, &(p, _)) in self.atoms.iter().zip(marked) {
                    all[p.0] = w[a.0];
                }
                let t = fill_table(&self.grammar, &all, n);
                let total = t[self.axiom.0][n];
                if !fine(total) {
                    return Err(growth(&t[self.axiom.0]));
                }
                Ok(marked
                    .iter()
                    .map(|&(_, c)| c.map_or(0.0, |c| t[c.0][n] / total / n as f64))
                    .collect())
            }
            None => {
                let mut out = Vec::with_capacity(self.atoms.len());
                for &a in &self.atoms {
                    let t = dp::fill_occurrences(&self.grammar, w, a, n);
                    let row = &t[self.axiom.0][n];
                    let total: f64 = row.iter().sum();
                    if !fine(total) {
                        let sums: Vec<f64> = t[self.axiom.0].iter().map(|p| p.iter().sum()).collect();
                        return Err(growth(&sums));
                    }
                    let first: f64 = row.iter().enumerate().map(|(m, v)| m as f64 * v).sum();
                    out.push(first / total / n as f64);
                }
                Ok(out)
            }
        }
    }
}
