//! Recursive random generation from a counting table.
//!
//! Every choice compares one exact uniform draw against exact cumulative
//! sums, so branch probabilities are realized exactly. Product splits are
//! searched from both ends inward.

mod tree;

pub use tree::{DerivationTree, Node, NodeKind};

use crate::counting::{CountTable, Entries};
use crate::rng::RandomSource;
use crate::scalar::ExactScalar;
use crate::spec::{ClassId, Grammar, Rule};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

#[derive(Debug, Clone, Default)]
pub struct SampleOptions {
    /// Multiply the probabilities of the branches actually taken instead of
    /// deriving the trace probability from the structure's weight.
    pub record_trace: bool,
}

pub fn sample_one(table: &CountTable, class: ClassId, n: usize, rng: &mut RandomSource) -> Result<DerivationTree> {
    sample_one_with(table, class, n, rng, &SampleOptions::default())
}

pub fn sample_one_with(
    table: &CountTable,
    class: ClassId,
    n: usize,
    rng: &mut RandomSource,
    options: &SampleOptions,
) -> Result<DerivationTree> {
    if class.0 >= table.grammar().len() {
        return Err(Error::UnknownClass(format!("#{}", class.0)));
    }
    if n > table.n_max() {
        return Err(Error::SizeOutOfRange { n, n_max: table.n_max() });
    }
    if table.is_zero(class, n) {
        return Err(Error::EmptyClassAtSize {
            class: table.class_name(class).to_string(),
            n,
        });
    }
    let g = table.grammar();
    let w = &table.int_weights;
    Ok(match &table.entries {
        Entries::Int(t) => generate(g, t, w, class, n, rng, options.record_trace),
        Entries::Rat(t) => generate(g, t, w, class, n, rng, options.record_trace),
    })
}

/// `m` independent draws, consuming `rng` in order.
pub fn sample_many(
    table: &CountTable,
    class: ClassId,
    n: usize,
    m: usize,
    rng: &mut RandomSource,
) -> Result<Vec<DerivationTree>> {
    (0..m).map(|_| sample_one(table, class, n, rng)).collect()
}

/// Pick `k` with probability `a_k b_{n-k} / total`, scanning
/// `k = 0, n, 1, n-1, ...`. Returns the split and its term.
fn choose_split<S: ExactScalar>(
    t: &[Vec<S>],
    a: ClassId,
    b: ClassId,
    n: usize,
    total: &S,
    rng: &mut RandomSource,
    candidates: &mut u64,
) -> (usize, S) {
    let mut draw = S::draw(total, rng);
    let mut acc = S::nil();
    let (mut lo, mut hi) = (0usize, n);
    let mut from_lo = true;
    while lo <= hi {
        let k = if from_lo {
            lo += 1;
            lo - 1
        } else {
            hi -= 1;
            hi + 1
        };
        from_lo = !from_lo;
        *candidates += 1;
        let (x, y) = (&t[a.0][k], &t[b.0][n - k]);
        if x.is_nil() || y.is_nil() {
            continue;
        }
        let term = x.mul(y);
        acc.add_assign(&term);
        if S::below(&mut draw, &acc, rng) {
            return (k, term);
        }
    }
    unreachable!("split terms do not add up to the class count");
}

fn generate<S: ExactScalar>(
    g: &Grammar,
    t: &[Vec<S>],
    int_weights: &[BigInt],
    class: ClassId,
    n: usize,
    rng: &mut RandomSource,
    record: bool,
) -> DerivationTree {
    let mut nodes = vec![Node {
        class,
        size: n,
        start: 0,
        kind: NodeKind::Epsilon,
    }];
    let mut word = Vec::with_capacity(n);
    let mut recorded = BigRational::one();
    let mut pointed_sizes = BigInt::one();
    let mut candidates = 0u64;
    let mut stack = vec![0usize];

    let child = |nodes: &mut Vec<Node>, class: ClassId, size: usize| {
        nodes.push(Node {
            class,
            size,
            start: 0,
            kind: NodeKind::Epsilon,
        });
        nodes.len() - 1
    };

    while let Some(i) = stack.pop() {
        let (c, size) = (nodes[i].class, nodes[i].size);
        nodes[i].start = word.len();
        let kind = match g.rules[c.0] {
            Rule::Epsilon => NodeKind::Epsilon,
            Rule::Atom(a) => {
                word.push(a);
                NodeKind::Atom(a)
            }
            Rule::Union(a, b) => {
                let total = &t[c.0][size];
                let left = &t[a.0][size];
                let mut draw = S::draw(total, rng);
                let go_left = !left.is_nil() && S::below(&mut draw, left, rng);
                if record {
                    let taken = if go_left { left } else { &t[b.0][size] };
                    recorded *= taken.to_ratio() / total.to_ratio();
                }
                let x = child(&mut nodes, if go_left { a } else { b }, size);
                stack.push(x);
                NodeKind::Union { right: !go_left, child: x }
            }
            Rule::Product(a, b) => {
                let total = &t[c.0][size];
                let (k, term) = choose_split(t, a, b, size, total, rng, &mut candidates);
                if record {
                    recorded *= term.to_ratio() / total.to_ratio();
                }
                let l = child(&mut nodes, a, k);
                let r = child(&mut nodes, b, size - k);
                stack.push(r);
                stack.push(l);
                NodeKind::Product { split: k, left: l, right: r }
            }
            Rule::PointedProduct(a, b) => {
                let total = t[c.0][size].mul_usize(size);
                let (k, term) = choose_split(t, a, b, size, &total, rng, &mut candidates);
                if record {
                    recorded *= term.to_ratio() / total.to_ratio();
                }
                pointed_sizes *= BigInt::from(size);
                let l = child(&mut nodes, a, k);
                let r = child(&mut nodes, b, size - k);
                stack.push(r);
                stack.push(l);
                NodeKind::PointedProduct { split: k, left: l, right: r }
            }
            Rule::Point(a) => {
                let mark = rng.below_u64(size as u64) as usize;
                if record {
                    recorded /= BigRational::from_integer(BigInt::from(size));
                }
                let x = child(&mut nodes, a, size);
                stack.push(x);
                NodeKind::Point { child: x, mark }
            }
        };
        nodes[i].kind = kind;
    }

    let trace_probability = if record {
        recorded
    } else {
        // π(s) D^n over the stored c_n D^n, one factor n per pointed product.
        let weight: BigInt = word.iter().map(|a| &int_weights[a.0]).product();
        BigRational::from_integer(weight) / (t[class.0][n].to_ratio() * BigRational::from_integer(pointed_sizes))
    };
    DerivationTree {
        nodes,
        word,
        trace_probability,
        product_candidates: candidates,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::build_count_table;
    use crate::spec::{parse_spec, standardize, Specification};
    use crate::Weights;
    use std::collections::BTreeMap;

    fn std_spec(src: &str) -> Specification {
        standardize(&parse_spec(src).unwrap()).unwrap().0
    }

    fn distribution(spec: &Specification, w: &Weights, n: usize, draws: usize) -> BTreeMap<String, BigRational> {
        let table = build_count_table(spec, w, n).unwrap();
        let mut rng = RandomSource::new(5);
        let opts = SampleOptions { record_trace: true };
        let mut seen = BTreeMap::new();
        for _ in 0..draws {
            let s = sample_one_with(&table, spec.axiom(), n, &mut rng, &opts).unwrap();
            seen.insert(spec.render_word(s.word()), s.trace_probability().clone());
        }
        seen
    }

    fn ratio(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn single_atom() {
        let spec = std_spec("Z -> z ;");
        let table = build_count_table(&spec, &Weights::uniform(), 1).unwrap();
        let s = sample_one(&table, spec.axiom(), 1, &mut RandomSource::new(1)).unwrap();
        assert_eq!(spec.render_word(s.word()), "z");
        assert!(s.trace_probability().is_one());
    }

    #[test]
    fn fibonacci_weighted_traces() {
        let spec = std_spec("S -> a S | b b S | _ ; weight a = 2 ;");
        let seen = distribution(&spec, &Weights::declared(&spec), 2, 200);
        assert_eq!(seen.len(), 2);
        assert_eq!(seen["aa"], ratio(4, 5));
        assert_eq!(seen["bb"], ratio(1, 5));
    }

    #[test]
    fn motzkin_uniform_traces() {
        let spec = std_spec("S -> a S b S | c S | _ ;");
        let seen = distribution(&spec, &Weights::uniform(), 3, 400);
        let words: Vec<&str> = seen.keys().map(|s| s.as_str()).collect();
        assert_eq!(words, ["abc", "acb", "cab", "ccc"]);
        assert!(seen.values().all(|p| *p == ratio(1, 4)));
    }

    #[test]
    fn closed_form_matches_recorded_trace() {
        let spec = std_spec("S -> a S b S | c S | _ ; weight c = 2/3 ;");
        let table = build_count_table(&spec, &Weights::declared(&spec), 9).unwrap();
        let opts = SampleOptions { record_trace: true };
        for seed in 0..30 {
            let a = sample_one(&table, spec.axiom(), 9, &mut RandomSource::new(seed)).unwrap();
            let b = sample_one_with(&table, spec.axiom(), 9, &mut RandomSource::new(seed), &opts).unwrap();
            assert_eq!(a.word(), b.word());
            assert_eq!(a.trace_probability(), b.trace_probability());
        }
    }

    #[test]
    fn pointed_classes_carry_marks() {
        let spec = std_spec("C -> a | a C ; P -> POINT(C) ; axiom P ;");
        let table = build_count_table(&spec, &Weights::uniform(), 4).unwrap();
        let opts = SampleOptions { record_trace: true };
        let mut marks = [0usize; 4];
        let mut rng = RandomSource::new(3);
        for _ in 0..400 {
            let s = sample_one_with(&table, spec.axiom(), 4, &mut rng, &opts).unwrap();
            assert_eq!(s.size(), 4);
            assert_eq!(*s.trace_probability(), ratio(1, 4));
            marks[s.marks()[0]] += 1;
        }
        assert!(marks.iter().all(|&m| m > 60), "{marks:?}");
    }

    #[test]
    fn pointed_product_trace_is_derivation_probability() {
        // Cycles of atoms: c_n = 1/n, a single derivation per size.
        let spec = std_spec("Q -> a Q | _ ; POINT(C) -> a Q ; axiom C ;");
        let table = build_count_table(&spec, &Weights::uniform(), 5).unwrap();
        for rec in [false, true] {
            let o = SampleOptions { record_trace: rec };
            let s = sample_one_with(&table, spec.axiom(), 5, &mut RandomSource::new(1), &o).unwrap();
            assert_eq!(spec.render_word(s.word()), "aaaaa");
            assert!(s.trace_probability().is_one());
        }
    }

    #[test]
    fn empty_size_is_an_error() {
        let spec = std_spec("S -> a a S | _ ;");
        let table = build_count_table(&spec, &Weights::uniform(), 5).unwrap();
        let err = sample_one(&table, spec.axiom(), 3, &mut RandomSource::new(1)).unwrap_err();
        assert!(matches!(err, Error::EmptyClassAtSize { n: 3, .. }));
        let err = sample_one(&table, spec.axiom(), 6, &mut RandomSource::new(1)).unwrap_err();
        assert!(matches!(err, Error::SizeOutOfRange { .. }));
    }

    #[test]
    fn same_seed_same_samples() {
        let spec = std_spec("S -> a S b S | c S | _ ;");
        let table = build_count_table(&spec, &Weights::uniform(), 40).unwrap();
        let a = sample_many(&table, spec.axiom(), 40, 5, &mut RandomSource::new(11)).unwrap();
        let b = sample_many(&table, spec.axiom(), 40, 5, &mut RandomSource::new(11)).unwrap();
        assert_eq!(a, b);
        assert!(sample_many(&table, spec.axiom(), 40, 0, &mut RandomSource::new(1)).unwrap().is_empty());
    }

    #[test]
    fn tree_rendering_hides_fresh_classes() {
        let spec = std_spec("S -> a S b S | c S | _ ;");
        let table = build_count_table(&spec, &Weights::uniform(), 2).unwrap();
        let s = sample_one(&table, spec.axiom(), 2, &mut RandomSource::new(2)).unwrap();
        let text = s.render_tree(&spec);
        assert!(text == "S(a S() b S())" || text == "S(c S(c S()))", "{text}");
    }
}
