//! Exact weighted counting tables.

mod cache;

pub use cache::{decode_cache, CacheContents, CACHE_VERSION};

use crate::scalar::Scalar;
use crate::spec::{ClassId, Grammar, Rule, Specification};
use crate::weights::Weights;
use crate::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use sha2::{Digest, Sha256};

/// Fill `table[class][n]` for `0 <= n <= n_max` with the counts of a
/// standard grammar, given one weight per atom.
pub fn fill_table<S: Scalar>(g: &Grammar, atom_weights: &[S], n_max: usize) -> Vec<Vec<S>> {
    let mut table: Vec<Vec<S>> = vec![Vec::with_capacity(n_max + 1); g.len()];
    let mut support: Vec<Vec<usize>> = vec![Vec::new(); g.len()];
    for n in 0..=n_max {
        for &c in &g.order {
            let v = entry(g, &table, &support, atom_weights, c, n);
            if !v.is_nil() {
                support[c.0].push(n);
            }
            table[c.0].push(v);
        }
    }
    table
}

fn get<S: Scalar>(table: &[Vec<S>], c: ClassId, n: usize) -> Option<&S> {
    table[c.0].get(n).filter(|v| !v.is_nil())
}

/// `Σ_k a_k b_{n-k}`, iterating over the sparser factor.
pub(crate) fn convolve<S: Scalar>(
    table: &[Vec<S>],
    support: &[Vec<usize>],
    a: ClassId,
    b: ClassId,
    n: usize,
) -> S {
    let mut acc = S::nil();
    if support[a.0].len() <= support[b.0].len() {
        for &k in support[a.0].iter().take_while(|&&k| k <= n) {
            if let Some(y) = get(table, b, n - k) {
                acc.add_mul(&table[a.0][k], y);
            }
        }
    } else {
        for &k in support[b.0].iter().take_while(|&&k| k <= n) {
            if let Some(x) = get(table, a, n - k) {
                acc.add_mul(x, &table[b.0][k]);
            }
        }
    }
    acc
}

fn entry<S: Scalar>(
    g: &Grammar,
    table: &[Vec<S>],
    support: &[Vec<usize>],
    w: &[S],
    c: ClassId,
    n: usize,
) -> S {
    match g.rules[c.0] {
        Rule::Epsilon => {
            if n == 0 {
                S::unit()
            } else {
                S::nil()
            }
        }
        Rule::Atom(a) => {
            if n == 1 {
                w[a.0].clone()
            } else {
                S::nil()
            }
        }
        Rule::Union(a, b) => {
            let mut v = table[a.0][n].clone();
            v.add_assign(&table[b.0][n]);
            v
        }
        Rule::Product(a, b) => convolve(table, support, a, b, n),
        Rule::Point(a) => table[a.0][n].mul_usize(n),
        Rule::PointedProduct(a, b) => {
            if n == 0 {
                S::nil()
            } else {
                convolve(table, support, a, b, n).div_usize(n)
            }
        }
    }
}

/// Stored entries: counts scaled by `D^n`, where `D` is the common
/// denominator of the weights. Integral unless the grammar has pointed
/// products.
#[derive(Debug, Clone)]
pub enum Entries {
    Int(Vec<Vec<BigInt>>),
    Rat(Vec<Vec<BigRational>>),
}

/// Weighted counts `c_n` of every class for `0 <= n <= n_max`.
#[derive(Debug, Clone)]
pub struct CountTable {
    pub(crate) grammar: Grammar,
    pub(crate) class_names: Vec<String>,
    pub(crate) fingerprint: String,
    pub(crate) n_max: usize,
    pub(crate) scale: BigInt,
    pub(crate) int_weights: Vec<BigInt>,
    pub(crate) weights: Weights,
    pub(crate) entries: Entries,
}

/// Hex SHA-256 over the specification and the weights of all its atoms.
pub fn table_fingerprint(spec: &Specification, weights: &Weights) -> String {
    let mut h = Sha256::new();
    h.update(spec.canonical_text().as_bytes());
    h.update(b"\n--\n");
    h.update(weights.canonical_text(spec).as_bytes());
    hex::encode(h.finalize())
}

/// Rough byte size of a table, used for budget checks before building.
pub fn estimate_table_bytes(spec: &Specification, weights: &Weights, n_max: usize) -> u128 {
    let (d, ints) = weights.integer_scaling(spec.atoms().len());
    let total: BigInt = ints.iter().sum::<BigInt>() + BigInt::one();
    let per_size_bits = total.bits() as u128 + d.bits() as u128;
    let entries = spec.classes().len() as u128 * (n_max as u128 + 1);
    entries * (48 + per_size_bits * n_max as u128 / 16)
}

pub fn build_count_table(spec: &Specification, weights: &Weights, n_max: usize) -> Result<CountTable> {
    build_count_table_with_budget(spec, weights, n_max, None)
}

/// As [`build_count_table`], refusing tables whose estimated size exceeds
/// `budget` bytes.
pub fn build_count_table_with_budget(
    spec: &Specification,
    weights: &Weights,
    n_max: usize,
    budget: Option<u128>,
) -> Result<CountTable> {
    if let Some(budget) = budget {
        let needed = estimate_table_bytes(spec, weights, n_max);
        if needed > budget {
            return Err(Error::ResourceBudget { needed, budget });
        }
    }
    let grammar = spec.grammar()?;
    let (scale, int_weights) = weights.integer_scaling(spec.atoms().len());
    let entries = if grammar.has_pointed_product() {
        let w: Vec<BigRational> = int_weights
            .iter()
            .map(|x| BigRational::from_integer(x.clone()))
            .collect();
        Entries::Rat(fill_table(&grammar, &w, n_max))
    } else {
        Entries::Int(fill_table(&grammar, &int_weights, n_max))
    };
    Ok(CountTable {
        class_names: spec.classes().iter().map(|c| c.name.clone()).collect(),
        fingerprint: table_fingerprint(spec, weights),
        grammar,
        n_max,
        scale,
        int_weights,
        weights: weights.clone(),
        entries,
    })
}

impl CountTable {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    /// Common denominator `D` of the weights; entries are stored as `c_n D^n`.
    pub fn scale(&self) -> &BigInt {
        &self.scale
    }

    /// Whether every weight is 1 (all counts are then integers).
    pub fn is_uniform(&self) -> bool {
        self.weights.is_uniform()
    }

    pub fn entries(&self) -> &Entries {
        &self.entries
    }

    pub fn class_name(&self, c: ClassId) -> &str {
        &self.class_names[c.0]
    }

    fn check(&self, c: ClassId, n: usize) -> Result<()> {
        if c.0 >= self.grammar.len() {
            return Err(Error::UnknownClass(format!("#{}", c.0)));
        }
        if n > self.n_max {
            return Err(Error::SizeOutOfRange { n, n_max: self.n_max });
        }
        Ok(())
    }

    /// Stored value `c_n D^n` as a rational.
    pub fn scaled(&self, c: ClassId, n: usize) -> Result<BigRational> {
        self.check(c, n)?;
        Ok(match &self.entries {
            Entries::Int(t) => BigRational::from_integer(t[c.0][n].clone()),
            Entries::Rat(t) => t[c.0][n].clone(),
        })
    }

    /// Weighted count `Σ_{s ∈ C_n} π(s)`.
    pub fn count(&self, c: ClassId, n: usize) -> Result<BigRational> {
        let v = self.scaled(c, n)?;
        Ok(v / BigRational::from_integer(num_traits::pow(self.scale.clone(), n)))
    }

    pub fn is_zero(&self, c: ClassId, n: usize) -> bool {
        match &self.entries {
            Entries::Int(t) => t[c.0][n].is_zero(),
            Entries::Rat(t) => t[c.0][n].is_zero(),
        }
    }

    /// Serialize to the binary cache format.
    pub fn encode_cache(&self) -> Vec<u8> {
        let rows: Vec<Vec<BigRational>> = (0..self.grammar.len())
            .map(|c| {
                (0..=self.n_max)
                    .map(|n| self.count(ClassId(c), n).expect("in range"))
                    .collect()
            })
            .collect();
        cache::encode(&self.fingerprint, self.n_max, &rows)
    }

    /// Rebuild a table from cache bytes written for the same specification
    /// and weights.
    pub fn from_cache(spec: &Specification, weights: &Weights, bytes: &[u8]) -> Result<CountTable> {
        let contents = decode_cache(bytes)?;
        let fingerprint = table_fingerprint(spec, weights);
        if contents.fingerprint != fingerprint {
            return Err(Error::Cache("fingerprint does not match specification and weights".into()));
        }
        let grammar = spec.grammar()?;
        if contents.rows.len() != grammar.len() {
            return Err(Error::Cache("class count mismatch".into()));
        }
        let (scale, int_weights) = weights.integer_scaling(spec.atoms().len());
        let n_max = contents.n_max;
        let scaled: Vec<Vec<BigRational>> = contents
            .rows
            .into_iter()
            .map(|row| {
                let mut p = BigInt::one();
                row.into_iter()
                    .map(|v| {
                        let s = v * BigRational::from_integer(p.clone());
                        p *= &scale;
                        s
                    })
                    .collect()
            })
            .collect();
        let entries = if grammar.has_pointed_product() {
            Entries::Rat(scaled)
        } else {
            let mut int = Vec::with_capacity(scaled.len());
            for row in scaled {
                let mut r = Vec::with_capacity(row.len());
                for v in row {
                    if !v.is_integer() {
                        return Err(Error::Cache("non-integral scaled entry".into()));
                    }
                    r.push(v.to_integer());
                }
                int.push(r);
            }
            Entries::Int(int)
        };
        Ok(CountTable {
            class_names: spec.classes().iter().map(|c| c.name.clone()).collect(),
            fingerprint,
            grammar,
            n_max,
            scale,
            int_weights,
            weights: weights.clone(),
            entries,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{parse_spec, standardize};

    fn table(src: &str, weights: &[(&str, &str)], n: usize) -> (Specification, CountTable) {
        let (spec, _) = standardize(&parse_spec(src).unwrap()).unwrap();
        let mut w = Weights::uniform();
        for (a, v) in weights {
            w.set_from_text(&spec, &format!("{a}={v}")).unwrap();
        }
        let t = build_count_table(&spec, &w, n).unwrap();
        (spec, t)
    }

    fn ints(t: &CountTable, c: ClassId, n: usize) -> Vec<BigRational> {
        (0..=n).map(|k| t.count(c, k).unwrap()).collect()
    }

    fn r(p: i64) -> BigRational {
        BigRational::from_integer(p.into())
    }

    #[test]
    fn epsilon_class() {
        let (s, t) = table("S -> _ ;", &[], 3);
        assert_eq!(ints(&t, s.axiom(), 3), vec![r(1), r(0), r(0), r(0)]);
    }

    #[test]
    fn motzkin_counts() {
        let (s, t) = table("S -> a S b S | c S | _ ;", &[], 6);
        let want: Vec<_> = [1, 1, 2, 4, 9, 21, 51].iter().map(|&x| r(x)).collect();
        assert_eq!(ints(&t, s.axiom(), 6), want);
        assert_eq!(t.count(s.axiom(), 5).unwrap(), r(21));
    }

    #[test]
    fn fibonacci_weighted() {
        let (s, t) = table("S -> a S | b b S | _ ;", &[("a", "2")], 3);
        assert_eq!(ints(&t, s.axiom(), 3), vec![r(1), r(2), r(5), r(12)]);
    }

    #[test]
    fn fractional_weights_scale() {
        let (s, t) = table("S -> a S | b b S | _ ;", &[("a", "1/2")], 2);
        assert_eq!(t.scale(), &BigInt::from(2));
        assert_eq!(t.count(s.axiom(), 2).unwrap(), BigRational::new(5.into(), 4.into()));
    }

    #[test]
    fn atom_class_at_one_is_zero_for_epsilon() {
        let (s, t) = table("S -> _ | a ;", &[], 2);
        let eps = s.find_class("#eps").unwrap();
        assert_eq!(t.count(eps, 1).unwrap(), r(0));
    }

    #[test]
    fn pointing_multiplies_by_size() {
        let (s, t) = table("A -> a A | b ; P -> POINT(A) ;", &[], 6);
        let a = s.find_class("A").unwrap();
        let p = s.find_class("P").unwrap();
        for n in 0..=6 {
            assert_eq!(t.count(p, n).unwrap(), t.count(a, n).unwrap() * r(n as i64));
        }
    }

    #[test]
    fn pointed_product_cycles() {
        // Cycles of atoms: ΘC = a × SEQ(a) gives c_n = 1/n... times n words.
        let (s, t) = table("POINT(C) -> a L ; L -> a L | _ ;", &[], 5);
        let c = s.find_class("C").unwrap();
        assert_eq!(t.count(c, 0).unwrap(), r(0));
        for n in 1..=5 {
            assert_eq!(t.count(c, n).unwrap(), BigRational::new(1.into(), (n as i64).into()));
        }
    }

    #[test]
    fn out_of_range() {
        let (s, t) = table("S -> a ;", &[], 2);
        assert!(matches!(t.count(s.axiom(), 3), Err(Error::SizeOutOfRange { .. })));
        assert!(matches!(t.count(ClassId(99), 0), Err(Error::UnknownClass(_))));
    }

    #[test]
    fn cache_round_trip() {
        let src = "S -> a S b S | c S | _ ; weight c = 3/2 ;";
        let (spec, _) = standardize(&parse_spec(src).unwrap()).unwrap();
        let w = Weights::declared(&spec);
        let t = build_count_table(&spec, &w, 20).unwrap();
        let bytes = t.encode_cache();
        let back = CountTable::from_cache(&spec, &w, &bytes).unwrap();
        for c in 0..spec.classes().len() {
            for n in 0..=20 {
                assert_eq!(t.count(ClassId(c), n).unwrap(), back.count(ClassId(c), n).unwrap());
            }
        }
        let other = Weights::uniform();
        assert!(CountTable::from_cache(&spec, &other, &bytes).is_err());
    }

    #[test]
    fn budget_guard() {
        let (spec, _) = standardize(&parse_spec("S -> a S b S | c S | _ ;").unwrap()).unwrap();
        let err = build_count_table_with_budget(&spec, &Weights::uniform(), 1000, Some(1000)).unwrap_err();
        assert!(matches!(err, Error::ResourceBudget { .. }));
    }
}
