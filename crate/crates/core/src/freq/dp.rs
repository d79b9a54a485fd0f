use crate::scalar::Scalar;
use crate::spec::{AtomId, ClassId, Grammar, Rule, Specification};
use crate::weights::Weights;
use crate::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

/// Polynomial in the occurrence count, trailing zeros trimmed.
type Poly<S> = Vec<S>;

fn trim<S: Scalar>(mut p: Poly<S>) -> Poly<S> {
    while p.last().is_some_and(|v| v.is_nil()) {
        p.pop();
    }
    p
}

fn add_into<S: Scalar>(acc: &mut Poly<S>, p: &Poly<S>) {
    if acc.len() < p.len() {
        acc.resize(p.len(), S::nil());
    }
    for (x, y) in acc.iter_mut().zip(p) {
        x.add_assign(y);
    }
}

fn mul_into<S: Scalar>(acc: &mut Poly<S>, p: &Poly<S>, q: &Poly<S>) {
    if p.is_empty() || q.is_empty() {
        return;
    }
    let len = p.len() + q.len() - 1;
    if acc.len() < len {
        acc.resize(len, S::nil());
    }
    for (i, x) in p.iter().enumerate() {
        if x.is_nil() {
            continue;
        }
        for (j, y) in q.iter().enumerate() {
            if !y.is_nil() {
                acc[i + j].add_mul(x, y);
            }
        }
    }
}

/// `g[class][n][m]`: total weight of the size-`n` structures with `m`
/// occurrences of the tracked atom.
pub(crate) fn fill_occurrences<S: Scalar>(g: &Grammar, w: &[S], atom: AtomId, n_max: usize) -> Vec<Vec<Poly<S>>> {
    let mut table: Vec<Vec<Poly<S>>> = vec![Vec::with_capacity(n_max + 1); g.len()];
    let mut support: Vec<Vec<usize>> = vec![Vec::new(); g.len()];
    for n in 0..=n_max {
        for &c in &g.order {
            let p = match g.rules[c.0] {
                Rule::Epsilon => {
                    if n == 0 {
                        vec![S::unit()]
                    } else {
                        vec![]
                    }
                }
                Rule::Atom(a) => match (n, a == atom) {
                    (1, true) => vec![S::nil(), w[a.0].clone()],
                    (1, false) => vec![w[a.0].clone()],
                    _ => vec![],
                },
                Rule::Union(a, b) => {
                    let mut p = table[a.0][n].clone();
                    add_into(&mut p, &table[b.0][n]);
                    p
                }
                Rule::Product(a, b) => double_convolve(&table, &support, a, b, n),
                Rule::Point(a) => table[a.0][n].iter().map(|v| v.mul_usize(n)).collect(),
                Rule::PointedProduct(a, b) => {
                    if n == 0 {
                        vec![]
                    } else {
                        double_convolve(&table, &support, a, b, n)
                            .iter()
                            .map(|v| v.div_usize(n))
                            .collect()
                    }
                }
            };
            let p = trim(p);
            if !p.is_empty() {
                support[c.0].push(n);
            }
            table[c.0].push(p);
        }
    }
    table
}

fn double_convolve<S: Scalar>(table: &[Vec<Poly<S>>], support: &[Vec<usize>], a: ClassId, b: ClassId, n: usize) -> Poly<S> {
    let mut acc = Vec::new();
    let (first, second, swap) = if support[a.0].len() <= support[b.0].len() {
        (a, b, false)
    } else {
        (b, a, true)
    };
    for &k in support[first.0].iter().take_while(|&&k| k <= n) {
        let Some(other) = table[second.0].get(n - k) else { continue };
        let this = &table[first.0][k];
        if swap {
            mul_into(&mut acc, other, this);
        } else {
            mul_into(&mut acc, this, other);
        }
    }
    acc
}

#[derive(Debug, Clone)]
enum Rows {
    Int(Vec<Vec<Poly<BigInt>>>),
    Rat(Vec<Vec<Poly<BigRational>>>),
}

/// Weighted counts split by the number of occurrences of one atom.
#[derive(Debug, Clone)]
pub struct OccurrenceTable {
    atom: AtomId,
    n_max: usize,
    scale: BigInt,
    rows: Rows,
}

pub fn build_occurrence_table(
    spec: &Specification,
    weights: &Weights,
    atom: AtomId,
    n_max: usize,
) -> Result<OccurrenceTable> {
    if atom.0 >= spec.atoms().len() {
        return Err(Error::UnknownAtom(format!("#{}", atom.0)));
    }
    let g = spec.grammar()?;
    let (scale, ints) = weights.integer_scaling(spec.atoms().len());
    let rows = if g.has_pointed_product() {
        let w: Vec<BigRational> = ints.into_iter().map(BigRational::from_integer).collect();
        Rows::Rat(fill_occurrences(&g, &w, atom, n_max))
    } else {
        Rows::Int(fill_occurrences(&g, &ints, atom, n_max))
    };
    Ok(OccurrenceTable {
        atom,
        n_max,
        scale,
        rows,
    })
}

impl OccurrenceTable {
    pub fn atom(&self) -> AtomId {
        self.atom
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Total weight of the size-`n` structures of `class` with exactly `m`
    /// occurrences of the atom.
    pub fn weight(&self, class: ClassId, n: usize, m: usize) -> Result<BigRational> {
        let (num, _) = self.moments(class, n, Some(m))?;
        Ok(num)
    }

    /// `(Σ_m g_m, Σ_m m g_m)` for `which = None`, or `(g_m, 0)`.
    fn moments(&self, class: ClassId, n: usize, which: Option<usize>) -> Result<(BigRational, BigRational)> {
        if n > self.n_max {
            return Err(Error::SizeOutOfRange { n, n_max: self.n_max });
        }
        fn sums<S: Scalar + Clone>(
            p: &[S],
            which: Option<usize>,
            to: impl Fn(&S) -> BigRational,
        ) -> (BigRational, BigRational) {
            match which {
                Some(m) => (p.get(m).map(&to).unwrap_or_else(BigRational::zero), BigRational::zero()),
                None => {
                    let mut total = BigRational::zero();
                    let mut first = BigRational::zero();
                    for (m, v) in p.iter().enumerate() {
                        let v = to(v);
                        first += &v * BigRational::from_integer(BigInt::from(m));
                        total += v;
                    }
                    (total, first)
                }
            }
        }
        let rows_len = match &self.rows {
            Rows::Int(t) => t.len(),
            Rows::Rat(t) => t.len(),
        };
        if class.0 >= rows_len {
            return Err(Error::UnknownClass(format!("#{}", class.0)));
        }
        let (a, b) = match &self.rows {
            Rows::Int(t) => sums(&t[class.0][n], which, |v| BigRational::from_integer(v.clone())),
            Rows::Rat(t) => sums(&t[class.0][n], which, |v| v.clone()),
        };
        let d = BigRational::from_integer(num_traits::pow(self.scale.clone(), n));
        Ok((a / &d, b / d))
    }

    /// `Σ_m g(class, n, m)`, the weighted count of the class.
    pub fn total(&self, class: ClassId, n: usize) -> Result<BigRational> {
        Ok(self.moments(class, n, None)?.0)
    }

    /// Expected number of occurrences in a weighted random structure.
    pub fn mean(&self, class: ClassId, n: usize, class_name: &str) -> Result<BigRational> {
        let (total, first) = self.moments(class, n, None)?;
        if total.is_zero() {
            return Err(Error::EmptyClassAtSize {
                class: class_name.to_string(),
                n,
            });
        }
        Ok(first / total)
    }
}

/// Expected number of occurrences of `atom` in a size-`n` structure of the
/// axiom, through the occurrence-count recurrences.
pub fn freq_dp(spec: &Specification, weights: &Weights, atom: AtomId, n: usize) -> Result<BigRational> {
    let table = build_occurrence_table(spec, weights, atom, n)?;
    let axiom = spec.axiom();
    table.mean(axiom, n, spec.class_name(axiom))
}
