//! Oracles shared by the integration tests: brute-force enumeration and a
//! few closed forms that do not go through the counting tables.
#![allow(dead_code)]

use gramfreq::spec::{AtomId, ClassId, Rule, Specification};
use num_bigint::BigInt;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::collections::HashMap;

/// Atom words of every derivation of `class` at size `n`, one entry per
/// derivation. Pointing rules are not supported.
pub fn enumerate(spec: &Specification, class: ClassId, n: usize) -> Vec<Vec<AtomId>> {
    let g = spec.grammar().unwrap();
    let mut memo: HashMap<(usize, usize), Vec<Vec<AtomId>>> = HashMap::new();
    fn go(
        g: &gramfreq::spec::Grammar,
        nullable: &[bool],
        c: usize,
        n: usize,
        memo: &mut HashMap<(usize, usize), Vec<Vec<AtomId>>>,
    ) -> Vec<Vec<AtomId>> {
        if let Some(v) = memo.get(&(c, n)) {
            return v.clone();
        }
        let out = match g.rules[c] {
            Rule::Epsilon => {
                if n == 0 {
                    vec![vec![]]
                } else {
                    vec![]
                }
            }
            Rule::Atom(a) => {
                if n == 1 {
                    vec![vec![a]]
                } else {
                    vec![]
                }
            }
            Rule::Union(a, b) => {
                let mut v = go(g, nullable, a.0, n, memo);
                v.extend(go(g, nullable, b.0, n, memo));
                v
            }
            Rule::Product(a, b) => {
                let mut v = Vec::new();
                for k in 0..=n {
                    // Same-size recursion only through a nullable factor.
                    if (k == 0 && !nullable[a.0]) || (k == n && !nullable[b.0]) {
                        continue;
                    }
                    let left = go(g, nullable, a.0, k, memo);
                    if left.is_empty() {
                        continue;
                    }
                    let right = go(g, nullable, b.0, n - k, memo);
                    for l in &left {
                        for r in &right {
                            let mut w = l.clone();
                            w.extend_from_slice(r);
                            v.push(w);
                        }
                    }
                }
                v
            }
            Rule::Point(_) | Rule::PointedProduct(..) => panic!("pointing is not enumerated"),
        };
        memo.insert((c, n), out.clone());
        out
    }
    // Classes deriving the empty structure, by fixed point.
    let mut nullable = vec![false; g.len()];
    loop {
        let mut changed = false;
        for c in 0..g.len() {
            let v = match g.rules[c] {
                Rule::Epsilon => true,
                Rule::Union(a, b) => nullable[a.0] || nullable[b.0],
                Rule::Product(a, b) => nullable[a.0] && nullable[b.0],
                _ => false,
            };
            if v && !nullable[c] {
                nullable[c] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    go(&g, &nullable, class.0, n, &mut memo)
}

/// All words of length `n` over `alphabet`.
pub fn all_words(alphabet: usize, n: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = alphabet.pow(n as u32);
    (0..total).map(move |mut x| {
        let mut w = vec![0; n];
        for slot in w.iter_mut().rev() {
            *slot = x % alphabet;
            x /= alphabet;
        }
        w
    })
}

/// Words over {a=0, b=1, c=2} where a/b are balanced like brackets.
pub fn is_motzkin(w: &[usize]) -> bool {
    let mut depth = 0i64;
    for &x in w {
        match x {
            0 => depth += 1,
            1 => {
                depth -= 1;
                if depth < 0 {
                    return false;
                }
            }
            _ => {}
        }
    }
    depth == 0
}

/// Words over {a=0, b=1} whose maximal runs of b have even length.
pub fn is_fibonacci(w: &[usize]) -> bool {
    let mut run = 0;
    for &x in w.iter().chain(std::iter::once(&0)) {
        if x == 1 {
            run += 1;
        } else {
            if run % 2 == 1 {
                return false;
            }
            run = 0;
        }
    }
    true
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::from(0);
    }
    let mut r = BigInt::from(1);
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    r
}

/// Trees where each node has up to four children in distinct quadrants,
/// counted by nodes: `C(4n, n-1) / n`, plus the empty tree.
pub fn quadtrees(n: u64) -> BigInt {
    if n == 0 {
        BigInt::from(1)
    } else {
        binomial(4 * n, n - 1) / BigInt::from(n)
    }
}

/// Upper-tail p-value of Pearson's statistic against equal expected counts.
pub fn uniform_chi_square_p(observed: &[u64]) -> f64 {
    let total: u64 = observed.iter().sum();
    let expected = total as f64 / observed.len() as f64;
    let stat: f64 = observed.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
    let dist = ChiSquared::new((observed.len() - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

/// Value of a prefix expression over `+`, `-`, `0`, `1`.
pub fn prefix_value(symbols: &[&str]) -> i64 {
    let mut stack = Vec::new();
    for s in symbols.iter().rev() {
        match *s {
            "+" | "-" => {
                let x: i64 = stack.pop().unwrap();
                let y: i64 = stack.pop().unwrap();
                stack.push(if *s == "+" { x + y } else { x - y });
            }
            "0" => stack.push(0),
            "1" => stack.push(1),
            other => panic!("unexpected symbol {other}"),
        }
    }
    assert_eq!(stack.len(), 1);
    stack[0]
}

/// Product of the weights of the atoms in `word`.
pub fn word_weight(weights: &gramfreq::Weights, word: &[AtomId]) -> num_rational::BigRational {
    word.iter().map(|a| weights.get(*a)).product()
}

/// Samples Motzkin words of size `n` until every word has been seen, and
/// checks each trace against weight / total. Returns the sum of the traces
/// of the distinct words.
pub fn motzkin_trace_coverage(
    c_weight: num_rational::BigRational,
    n: usize,
    seed: u64,
) -> Result<num_rational::BigRational, String> {
    use gramfreq::counting::build_count_table;
    use gramfreq::sampler::{sample_one_with, SampleOptions};
    use std::collections::HashMap;

    let spec = gramfreq::fixtures::load(gramfreq::fixtures::MOTZKIN);
    let c = spec.atom_by_name("c").unwrap();
    let w = gramfreq::Weights::uniform().with(c, c_weight).unwrap();
    let table = build_count_table(&spec, &w, n).unwrap();
    let total = table.count(spec.axiom(), n).unwrap();
    let expected: Vec<Vec<AtomId>> = enumerate(&spec, spec.axiom(), n);
    let mut seen: HashMap<Vec<AtomId>, num_rational::BigRational> = HashMap::new();
    let mut rng = gramfreq::RandomSource::new(seed);
    let mut draws = 0u64;
    while seen.len() < expected.len() {
        draws += 1;
        if draws > 2_000_000 {
            return Err(format!("only {} of {} words after {draws} draws", seen.len(), expected.len()));
        }
        let record = draws % 2 == 0;
        let t = sample_one_with(&table, spec.axiom(), n, &mut rng, &SampleOptions { record_trace: record }).unwrap();
        let want = word_weight(&w, t.word()) / &total;
        if *t.trace_probability() != want {
            return Err(format!("trace {} != {} (recorded: {record})", t.trace_probability(), want));
        }
        seen.entry(t.word().to_vec()).or_insert(want);
    }
    for word in &expected {
        if !seen.contains_key(word) {
            return Err("sampled a word outside the class".into());
        }
    }
    Ok(seen.values().sum())
}

/// Counts straight from the unstandardized rules by iterating the power
/// series equations to a fixpoint.
pub fn series_counts(spec: &Specification, n_max: usize) -> Vec<Vec<num_rational::BigRational>> {
    use gramfreq::spec::Expr;
    fn eval(e: &Expr, cur: &[Vec<num_rational::BigRational>], n_max: usize) -> Vec<num_rational::BigRational> {
        let mut out = vec![whole(0); n_max + 1];
        match e {
            Expr::Epsilon => out[0] = whole(1),
            Expr::Atom(_) => {
                if n_max >= 1 {
                    out[1] = whole(1)
                }
            }
            Expr::Class(c) => out = cur[c.0].clone(),
            Expr::Union(x, y) => {
                let (x, y) = (eval(x, cur, n_max), eval(y, cur, n_max));
                for n in 0..=n_max {
                    out[n] = &x[n] + &y[n];
                }
            }
            Expr::Product(x, y) => {
                let (x, y) = (eval(x, cur, n_max), eval(y, cur, n_max));
                for n in 0..=n_max {
                    for k in 0..=n {
                        out[n] += &x[k] * &y[n - k];
                    }
                }
            }
            Expr::Sequence(x) => {
                let x = eval(x, cur, n_max);
                out[0] = whole(1);
                for n in 1..=n_max {
                    for k in 1..=n {
                        let t = &x[k] * &out[n - k];
                        out[n] += t;
                    }
                }
            }
            Expr::Point(_) | Expr::Unpoint(_) => unreachable!("not generated"),
        }
        out
    }
    let classes = spec.classes().len();
    let mut cur = vec![vec![whole(0); n_max + 1]; classes];
    for _ in 0..(n_max + 2) * (classes + 2) {
        let next: Vec<_> = spec.classes().iter().map(|c| eval(&c.rhs, &cur, n_max)).collect();
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}


fn whole(n: i64) -> num_rational::BigRational {
    num_rational::BigRational::from_integer(BigInt::from(n))
}
