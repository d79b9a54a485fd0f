//! Uniform generation among the structures of a class with a prescribed
//! number of occurrences of each distinguished atom.
//!
//! Counts are indexed by occurrence vectors `(j_1, .., j_k, r)`, where `r`
//! counts the other atoms. A product picks its split one coordinate at a
//! time from partial sums of the convolution, each coordinate scanned from
//! both ends toward the middle.

use crate::rng::RandomSource;
use crate::sampler::{DerivationTree, Node, NodeKind};
use crate::spec::{AtomId, ClassId, Grammar, Rule, Specification};
use crate::{Error, Result};
use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Occurrences of each distinguished atom and of all other atoms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OccurrenceVector {
    pub counts: Vec<usize>,
    pub rest: usize,
}

impl OccurrenceVector {
    pub fn new(counts: Vec<usize>, rest: usize) -> Self {
        OccurrenceVector { counts, rest }
    }

    /// Vector of total size `n`; `None` when the counts alone exceed `n`.
    pub fn for_size(counts: Vec<usize>, n: usize) -> Option<Self> {
        let used: usize = counts.iter().sum();
        (used <= n).then(|| OccurrenceVector { counts, rest: n - used })
    }

    pub fn size(&self) -> usize {
        self.rest + self.counts.iter().sum::<usize>()
    }

    fn coords(&self) -> Vec<usize> {
        let mut v = self.counts.clone();
        v.push(self.rest);
        v
    }
}

/// Parse `a=2,b=2` into atoms and occurrence counts, in the order given.
pub fn parse_occurrences(spec: &Specification, text: &str) -> Result<Vec<(AtomId, usize)>> {
    let mut out: Vec<(AtomId, usize)> = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || Error::DomainError(format!("`{part}` is not atom=count"));
        let (name, count) = part.split_once('=').ok_or_else(bad)?;
        let atom = spec.atom_by_name(name.trim())?;
        let count: usize = count.trim().parse().map_err(|_| bad())?;
        if out.iter().any(|(a, _)| *a == atom) {
            return Err(Error::DomainError(format!("atom `{}` listed twice", name.trim())));
        }
        out.push((atom, count));
    }
    if out.is_empty() {
        return Err(Error::DomainError("no occurrences given".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactOptions {
    /// Use the one-term rule for products whose left factor is an atom.
    pub fast_path: bool,
    /// Upper bound on the estimated table size in bytes.
    pub budget: Option<u128>,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions {
            fast_path: true,
            budget: None,
        }
    }
}

/// Counts `c_j` of every class for all occurrence vectors `j` up to the
/// target, componentwise.
#[derive(Debug, Clone)]
pub struct ExactTable {
    grammar: Grammar,
    axiom: ClassId,
    distinguished: Vec<AtomId>,
    target: OccurrenceVector,
    /// Extent of each coordinate, the last one being `r`.
    extents: Vec<usize>,
    strides: Vec<usize>,
    /// Coordinate of each atom of the grammar.
    coordinate: Vec<usize>,
    counts: Vec<Vec<BigInt>>,
    fast_path: bool,
}

/// Rough byte count of a table: one big integer per class and cell.
pub fn estimate_exact_bytes(spec: &Specification, target: &OccurrenceVector) -> u128 {
    let cells: u128 = target.coords().iter().map(|&e| e as u128 + 1).product();
    let classes = spec.classes().len() as u128;
    let digits = (target.size() as u128 * 2).div_ceil(64) + 1;
    classes * cells * (32 + 8 * digits)
}

pub fn build_exact_table(spec: &Specification, distinguished: &[AtomId], target: &OccurrenceVector) -> Result<ExactTable> {
    build_exact_table_with(spec, distinguished, target, &ExactOptions::default())
}

pub fn build_exact_table_with(
    spec: &Specification,
    distinguished: &[AtomId],
    target: &OccurrenceVector,
    options: &ExactOptions,
) -> Result<ExactTable> {
    if target.counts.len() != distinguished.len() {
        return Err(Error::DomainError(format!(
            "{} counts given for {} distinguished atoms",
            target.counts.len(),
            distinguished.len()
        )));
    }
    let k = distinguished.len();
    let mut coordinate = vec![k; spec.atoms().len()];
    for (i, &a) in distinguished.iter().enumerate() {
        if a.0 >= spec.atoms().len() {
            return Err(Error::UnknownAtom(format!("#{}", a.0)));
        }
        if coordinate[a.0] != k {
            return Err(Error::DomainError(format!("atom `{}` listed twice", spec.atom_name(a))));
        }
        coordinate[a.0] = i;
    }
    if let Some(budget) = options.budget {
        let needed = estimate_exact_bytes(spec, target);
        if needed > budget {
            return Err(Error::ResourceBudget { needed, budget });
        }
    }
    let g = spec.grammar()?;
    let extents: Vec<usize> = target.coords().iter().map(|&e| e + 1).collect();
    let mut strides = vec![1; extents.len()];
    for d in (0..extents.len().saturating_sub(1)).rev() {
        strides[d] = strides[d + 1] * extents[d + 1];
    }
    let cells: usize = extents.iter().product();
    let mut table = ExactTable {
        grammar: g,
        axiom: spec.axiom(),
        distinguished: distinguished.to_vec(),
        target: target.clone(),
        extents,
        strides,
        coordinate,
        counts: Vec::new(),
        fast_path: options.fast_path,
    };

    // Cells grouped by total size.
    let mut by_size: Vec<Vec<usize>> = vec![Vec::new(); target.size() + 1];
    for flat in 0..cells {
        by_size[table.coords_of(flat).iter().sum::<usize>()].push(flat);
    }
    let mut counts = vec![vec![BigInt::zero(); cells]; table.grammar.len()];
    let order = table.grammar.order.clone();
    for (size, cells_here) in by_size.iter().enumerate() {
        for &c in &order {
            for &flat in cells_here {
                let j = table.coords_of(flat);
                let v = table.cell(&counts, c, &j, size);
                counts[c.0][flat] = v;
            }
        }
    }
    table.counts = counts;
    Ok(table)
}

impl ExactTable {
    fn coords_of(&self, mut flat: usize) -> Vec<usize> {
        self.strides
            .iter()
            .map(|&s| {
                let v = flat / s;
                flat %= s;
                v
            })
            .collect()
    }

    fn flat(&self, j: &[usize]) -> usize {
        j.iter().zip(&self.strides).map(|(a, b)| a * b).sum()
    }

    fn unit(&self, atom: AtomId) -> usize {
        self.coordinate[atom.0]
    }

    fn cell(&self, counts: &[Vec<BigInt>], c: ClassId, j: &[usize], size: usize) -> BigInt {
        match self.grammar.rules[c.0] {
            Rule::Epsilon => {
                if size == 0 {
                    BigInt::one()
                } else {
                    BigInt::zero()
                }
            }
            Rule::Atom(a) => {
                let d = self.unit(a);
                if size == 1 && j[d] == 1 {
                    BigInt::one()
                } else {
                    BigInt::zero()
                }
            }
            Rule::Union(a, b) => {
                let f = self.flat(j);
                &counts[a.0][f] + &counts[b.0][f]
            }
            Rule::Product(a, b) => self.product_cell(counts, a, b, j),
            Rule::Point(a) => &counts[a.0][self.flat(j)] * BigInt::from(size),
            Rule::PointedProduct(a, b) => {
                if size == 0 {
                    return BigInt::zero();
                }
                let s = self.product_cell(counts, a, b, j);
                let (q, r) = s.div_rem(&BigInt::from(size));
                debug_assert!(r.is_zero(), "pointed product count is not divisible by its size");
                q
            }
        }
    }

    fn product_cell(&self, counts: &[Vec<BigInt>], a: ClassId, b: ClassId, j: &[usize]) -> BigInt {
        if self.fast_path {
            if let Rule::Atom(x) = self.grammar.rules[a.0] {
                let d = self.unit(x);
                if j[d] == 0 {
                    return BigInt::zero();
                }
                let mut h = j.to_vec();
                h[d] -= 1;
                return counts[b.0][self.flat(&h)].clone();
            }
        }
        let mut sum = BigInt::zero();
        self.for_each_split(j, &[], |h, rest| {
            let x = &counts[a.0][self.flat(h)];
            if !x.is_zero() {
                let y = &counts[b.0][self.flat(rest)];
                if !y.is_zero() {
                    sum += x * y;
                }
            }
        });
        sum
    }

    /// Calls `f(h, j - h)` for every `h <= j` whose first coordinates are
    /// `prefix`.
    fn for_each_split(&self, j: &[usize], prefix: &[usize], mut f: impl FnMut(&[usize], &[usize])) {
        let dims = j.len();
        let mut h: Vec<usize> = prefix.to_vec();
        h.resize(dims, 0);
        let mut rest: Vec<usize> = j.iter().zip(&h).map(|(a, b)| a - b).collect();
        loop {
            f(&h, &rest);
            let mut d = dims;
            loop {
                if d == prefix.len() {
                    return;
                }
                d -= 1;
                if h[d] < j[d] {
                    h[d] += 1;
                    rest[d] -= 1;
                    break;
                }
                rest[d] = j[d];
                h[d] = 0;
            }
        }
    }

    pub fn distinguished(&self) -> &[AtomId] {
        &self.distinguished
    }

    pub fn target(&self) -> &OccurrenceVector {
        &self.target
    }

    pub fn uses_fast_path(&self) -> bool {
        self.fast_path
    }

    /// Number of cells per class.
    pub fn cell_count(&self) -> usize {
        self.extents.iter().product()
    }

    /// `c_j` for `class`; zero outside the table.
    pub fn count(&self, class: ClassId, v: &OccurrenceVector) -> BigInt {
        let j = v.coords();
        if j.len() != self.extents.len() || j.iter().zip(&self.extents).any(|(a, e)| a >= e) || class.0 >= self.counts.len()
        {
            return BigInt::zero();
        }
        self.counts[class.0][self.flat(&j)].clone()
    }

    /// Every occurrence vector covered by the table.
    pub fn vectors(&self) -> impl Iterator<Item = OccurrenceVector> + '_ {
        (0..self.cell_count()).map(|f| {
            let mut j = self.coords_of(f);
            let rest = j.pop().unwrap();
            OccurrenceVector { counts: j, rest }
        })
    }

    /// Sum of `a_h b_{j-h}` over the splits `h` of a product class whose
    /// first coordinates are `prefix`. The empty prefix gives the whole
    /// convolution (`c_j`, or `n c_j` for a pointed product).
    pub fn prefix_sum(&self, class: ClassId, v: &OccurrenceVector, prefix: &[usize]) -> Result<BigInt> {
        let (a, b, j) = self.product_parts(class, v, prefix)?;
        let mut sum = BigInt::zero();
        self.for_each_split(&j, prefix, |h, rest| {
            sum += &self.counts[a.0][self.flat(h)] * &self.counts[b.0][self.flat(rest)];
        });
        Ok(sum)
    }

    /// Prefix sums for each value of the next coordinate after `prefix`.
    pub fn partial_sums(&self, class: ClassId, v: &OccurrenceVector, prefix: &[usize]) -> Result<Vec<BigInt>> {
        let (_, _, j) = self.product_parts(class, v, prefix)?;
        if prefix.len() >= j.len() {
            return Err(Error::DomainError("prefix covers every coordinate".into()));
        }
        let mut p = prefix.to_vec();
        p.push(0);
        (0..=j[prefix.len()])
            .map(|h| {
                *p.last_mut().unwrap() = h;
                self.prefix_sum(class, v, &p)
            })
            .collect()
    }

    fn product_parts(&self, class: ClassId, v: &OccurrenceVector, prefix: &[usize]) -> Result<(ClassId, ClassId, Vec<usize>)> {
        let (a, b) = match self.grammar.rules.get(class.0) {
            Some(Rule::Product(a, b)) | Some(Rule::PointedProduct(a, b)) => (*a, *b),
            _ => return Err(Error::DomainError(format!("class #{} is not a product", class.0))),
        };
        let j = v.coords();
        if j.len() != self.extents.len()
            || j.iter().zip(&self.extents).any(|(x, e)| x >= e)
            || prefix.len() > j.len()
            || prefix.iter().zip(&j).any(|(h, x)| h > x)
        {
            return Err(Error::DomainError("occurrence vector outside the table".into()));
        }
        Ok((a, b, j))
    }
}

/// Number of structures of the axiom with exactly the target occurrences.
pub fn fiber_count(table: &ExactTable) -> BigInt {
    table.count(table.axiom, &table.target)
}

/// A structure drawn uniformly among those with the target occurrences.
pub fn exact_sample(table: &ExactTable, rng: &mut RandomSource) -> Result<DerivationTree> {
    let total = fiber_count(table);
    if total.is_zero() {
        return Err(Error::EmptyFiber);
    }
    let mut nodes = vec![Node {
        class: table.axiom,
        size: table.target.size(),
        start: 0,
        kind: NodeKind::Epsilon,
    }];
    let mut index: Vec<Vec<usize>> = vec![table.target.coords()];
    let mut word = Vec::with_capacity(table.target.size());
    let mut trace = BigRational::one();
    let mut candidates = 0u64;
    let mut stack = vec![0usize];
    let draw = |bound: &BigInt, rng: &mut RandomSource| {
        BigInt::from_biguint(Sign::Plus, rng.below(&bound.to_biguint().expect("positive count")))
    };
    let ratio = |num: &BigInt, den: &BigInt| BigRational::new(num.clone(), den.clone());

    while let Some(i) = stack.pop() {
        let c = nodes[i].class;
        let size = nodes[i].size;
        let j = index[i].clone();
        nodes[i].start = word.len();
        let push = |nodes: &mut Vec<Node>, index: &mut Vec<Vec<usize>>, class: ClassId, j: Vec<usize>| {
            nodes.push(Node {
                class,
                size: j.iter().sum(),
                start: 0,
                kind: NodeKind::Epsilon,
            });
            index.push(j);
            nodes.len() - 1
        };
        let kind = match table.grammar.rules[c.0] {
            Rule::Epsilon => NodeKind::Epsilon,
            Rule::Atom(a) => {
                word.push(a);
                NodeKind::Atom(a)
            }
            Rule::Union(a, b) => {
                let f = table.flat(&j);
                let whole = &table.counts[c.0][f];
                let left = &table.counts[a.0][f];
                let go_left = draw(whole, rng) < *left;
                let taken = if go_left { left } else { &table.counts[b.0][f] };
                trace *= ratio(taken, whole);
                let x = push(&mut nodes, &mut index, if go_left { a } else { b }, j);
                stack.push(x);
                NodeKind::Union { right: !go_left, child: x }
            }
            Rule::Product(a, b) | Rule::PointedProduct(a, b) => {
                let pointed = matches!(table.grammar.rules[c.0], Rule::PointedProduct(..));
                let h = choose_split(table, c, a, &j, rng, &mut candidates, &mut trace);
                let rest: Vec<usize> = j.iter().zip(&h).map(|(x, y)| x - y).collect();
                let split = h.iter().sum();
                let l = push(&mut nodes, &mut index, a, h);
                let r = push(&mut nodes, &mut index, b, rest);
                stack.push(r);
                stack.push(l);
                if pointed {
                    NodeKind::PointedProduct { split, left: l, right: r }
                } else {
                    NodeKind::Product { split, left: l, right: r }
                }
            }
            Rule::Point(a) => {
                let mark = rng.below_u64(size as u64) as usize;
                trace /= BigRational::from_integer(BigInt::from(size));
                let x = push(&mut nodes, &mut index, a, j);
                stack.push(x);
                NodeKind::Point { child: x, mark }
            }
        };
        nodes[i].kind = kind;
    }
    Ok(DerivationTree {
        nodes,
        word,
        trace_probability: trace,
        product_candidates: candidates,
    })
}

/// Chooses the left part `h` of the split of a product at `j`, coordinate
/// by coordinate, and multiplies `trace` by its probability.
fn choose_split(
    table: &ExactTable,
    c: ClassId,
    a: ClassId,
    j: &[usize],
    rng: &mut RandomSource,
    candidates: &mut u64,
    trace: &mut BigRational,
) -> Vec<usize> {
    // Only one split can be non-zero when the left factor is an atom.
    if let Rule::Atom(x) = table.grammar.rules[a.0] {
        let mut h = vec![0; j.len()];
        h[table.unit(x)] = 1;
        *candidates += 1;
        return h;
    }
    let v = OccurrenceVector {
        counts: j[..j.len() - 1].to_vec(),
        rest: j[j.len() - 1],
    };
    let mut prefix: Vec<usize> = Vec::with_capacity(j.len());
    let whole = table.prefix_sum(c, &v, &[]).expect("product class");
    let mut parent = whole.clone();
    for &extent in j {
        let u = BigInt::from_biguint(Sign::Plus, rng.below(&parent.to_biguint().expect("positive")));
        let mut acc = BigInt::zero();
        let mut picked = None;
        for x in boustrophedon(extent) {
            *candidates += 1;
            prefix.push(x);
            let part = table.prefix_sum(c, &v, &prefix).expect("product class");
            prefix.pop();
            acc += &part;
            if u < acc {
                picked = Some((x, part));
                break;
            }
        }
        let (x, part) = picked.expect("partial sums add up to their parent");
        prefix.push(x);
        parent = part;
    }
    *trace *= BigRational::new(parent, whole);
    prefix
}

/// `0, n, 1, n - 1, ...`
fn boustrophedon(n: usize) -> impl Iterator<Item = usize> {
    (0..=n).map(move |i| if i % 2 == 0 { i / 2 } else { n - i / 2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{parse_spec, standardize};

    fn std_spec(src: &str) -> Specification {
        standardize(&parse_spec(src).unwrap()).unwrap().0
    }

    #[test]
    fn occurrence_lists() {
        let spec = std_spec("S -> a S b S | c S | _ ;");
        let got = parse_occurrences(&spec, "c=2, a=1").unwrap();
        assert_eq!(got, vec![(spec.atom_by_name("c").unwrap(), 2), (spec.atom_by_name("a").unwrap(), 1)]);
        for bad in ["", "a", "a=x", "a=-1", "a=1,a=2", "q=1"] {
            assert!(parse_occurrences(&spec, bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn fibonacci_small_fiber() {
        let spec = std_spec("S -> a S | b b S | _ ;");
        let a = spec.atom_by_name("a").unwrap();
        let t = build_exact_table(&spec, &[a], &OccurrenceVector::new(vec![2], 2)).unwrap();
        assert_eq!(fiber_count(&t), BigInt::from(3));
    }

    #[test]
    fn motzkin_fiber() {
        let spec = std_spec("S -> a S b S | c S | _ ;");
        let ids: Vec<AtomId> = ["a", "b", "c"].iter().map(|n| spec.atom_by_name(n).unwrap()).collect();
        let t = build_exact_table(&spec, &ids, &OccurrenceVector::new(vec![1, 1, 2], 0)).unwrap();
        assert_eq!(fiber_count(&t), BigInt::from(6));
        let mut rng = RandomSource::new(3);
        for _ in 0..50 {
            let s = exact_sample(&t, &mut rng).unwrap();
            assert_eq!(s.trace_probability(), &BigRational::new(1.into(), 6.into()));
            assert_eq!(s.occurrences(ids[2]), 2);
        }
    }

    #[test]
    fn empty_target() {
        let spec = std_spec("S -> a S | _ ;");
        let a = spec.atom_by_name("a").unwrap();
        let t = build_exact_table(&spec, &[a], &OccurrenceVector::new(vec![0], 0)).unwrap();
        assert_eq!(fiber_count(&t), BigInt::one());
        let spec = std_spec("S -> a S | a ;");
        let a = spec.atom_by_name("a").unwrap();
        let t = build_exact_table(&spec, &[a], &OccurrenceVector::new(vec![0], 0)).unwrap();
        assert!(fiber_count(&t).is_zero());
        assert_eq!(exact_sample(&t, &mut RandomSource::new(1)).unwrap_err(), Error::EmptyFiber);
    }

    #[test]
    fn budget_guard() {
        let spec = std_spec("S -> a S | _ ;");
        let a = spec.atom_by_name("a").unwrap();
        let opts = ExactOptions {
            fast_path: true,
            budget: Some(10),
        };
        let err = build_exact_table_with(&spec, &[a], &OccurrenceVector::new(vec![5], 0), &opts).unwrap_err();
        assert!(matches!(err, Error::ResourceBudget { .. }));
    }

    #[test]
    fn duplicate_atoms_rejected() {
        let spec = std_spec("S -> a S | _ ;");
        let a = spec.atom_by_name("a").unwrap();
        assert!(build_exact_table(&spec, &[a, a], &OccurrenceVector::new(vec![1, 1], 0)).is_err());
    }
}
