use crate::spec::{parse_weight_value, AtomId, Specification};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed};
use std::collections::BTreeMap;

/// Positive rational weight per atom; atoms absent from the map weigh 1.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Weights {
    entries: BTreeMap<AtomId, BigRational>,
}

impl Weights {
    pub fn uniform() -> Self {
        Self::default()
    }

    /// Weights declared in the grammar file.
    pub fn declared(spec: &Specification) -> Self {
        let mut w = Self::default();
        for (a, v) in spec.declared_weights() {
            w.entries.insert(*a, v.clone());
        }
        w
    }

    pub fn set(&mut self, atom: AtomId, value: BigRational) -> Result<()> {
        if !value.is_positive() {
            return Err(Error::InvalidWeight {
                atom: format!("#{}", atom.0),
                reason: "weights must be positive".into(),
            });
        }
        if value.is_one() {
            self.entries.remove(&atom);
        } else {
            self.entries.insert(atom, value);
        }
        Ok(())
    }

    pub fn with(mut self, atom: AtomId, value: BigRational) -> Result<Self> {
        self.set(atom, value)?;
        Ok(self)
    }

    /// Parse `name=value` and set the weight.
    pub fn set_from_text(&mut self, spec: &Specification, assignment: &str) -> Result<()> {
        let (name, value) = assignment.split_once('=').ok_or_else(|| Error::InvalidWeight {
            atom: assignment.to_string(),
            reason: "expected name=value".into(),
        })?;
        let atom = spec.atom_by_name(name.trim())?;
        let v = parse_weight_value(value.trim()).ok_or_else(|| Error::InvalidWeight {
            atom: name.trim().to_string(),
            reason: format!("`{}` is not a positive decimal or p/q", value.trim()),
        })?;
        self.set(atom, v)
    }

    /// Apply every assignment of a weights file: one `name=value` or
    /// `name<TAB>value` per line, extra tab-separated fields ignored, blank
    /// lines and `#` comments skipped.
    pub fn apply_file(&mut self, spec: &Specification, text: &str) -> Result<()> {
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line.split_once('\t') {
                Some((name, rest)) => {
                    let value = rest.split('\t').next().unwrap_or("");
                    self.set_from_text(spec, &format!("{name}={value}"))?
                }
                None => self.set_from_text(spec, line)?,
            }
        }
        Ok(())
    }

    pub fn get(&self, atom: AtomId) -> BigRational {
        self.entries
            .get(&atom)
            .cloned()
            .unwrap_or_else(BigRational::one)
    }

    pub fn is_uniform(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (AtomId, &BigRational)> {
        self.entries.iter().map(|(a, v)| (*a, v))
    }

    /// Least common denominator of all weights of atoms `0..atom_count`,
    /// and the integer weights scaled by it.
    pub fn integer_scaling(&self, atom_count: usize) -> (BigInt, Vec<BigInt>) {
        let mut d = BigInt::one();
        for v in self.entries.values() {
            d = d.lcm(v.denom());
        }
        let ints = (0..atom_count)
            .map(|i| {
                let v = self.get(AtomId(i));
                v.numer() * (&d / v.denom())
            })
            .collect();
        (d, ints)
    }

    /// Canonical text over all atoms of `spec`.
    pub fn canonical_text(&self, spec: &Specification) -> String {
        spec.atom_ids()
            .map(|a| {
                let v = self.get(a);
                format!("{}={}/{}\n", spec.atom_name(a), v.numer(), v.denom())
            })
            .collect()
    }

    pub fn to_f64(&self, atom: AtomId) -> f64 {
        crate::scalar::ratio_to_f64(&self.get(atom))
    }
}
