//! Asymptotic frequencies for right-linear specifications.
//!
//! The generating function of a right-linear grammar is rational with
//! denominator `Q(t, u) = det(I - T(t, u))`, where `T` is the one-step
//! transfer matrix. Its smallest positive zero `rho` drives the growth, and
//! the limiting frequency of atom `i` is `(dQ/du_i) / (rho dQ/dt)` at
//! `(rho, 1)`. Everything is evaluated numerically at points; `Q` is never
//! expanded.

use crate::spec::{classify_regular, AtomId, Specification, Transition};
use crate::weights::Weights;
use crate::{Error, Result};
use num_integer::Integer;

/// Transfer matrix of a right-linear specification.
#[derive(Debug, Clone)]
pub struct TransferSystem {
    states: Vec<String>,
    transitions: Vec<Transition>,
    accepting: Vec<bool>,
    initial: usize,
    atom_names: Vec<String>,
    /// Largest cycle-length gcd over the strongly connected components.
    period: u64,
    has_cycle: bool,
}

pub fn build_transfer(spec: &Specification) -> Result<TransferSystem> {
    let d = classify_regular(spec)?;
    let states = d
        .states
        .iter()
        .map(|s| match s {
            crate::spec::State::Class(c) => spec.class_name(*c).to_string(),
            crate::spec::State::End => "$end".to_string(),
        })
        .collect();
    let (period, has_cycle) = transfer_period(d.states.len(), &d.transitions);
    Ok(TransferSystem {
        states,
        transitions: d.transitions,
        accepting: d.accepting,
        initial: d.initial,
        atom_names: spec.atoms().iter().map(|a| a.name.clone()).collect(),
        period,
        has_cycle,
    })
}

/// Gcd of cycle lengths per strongly connected component of the transfer
/// graph; returns the largest one, and whether any cycle exists.
fn transfer_period(n: usize, transitions: &[Transition]) -> (u64, bool) {
    let mut reach = vec![vec![false; n]; n];
    for t in transitions {
        reach[t.from][t.to] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let comp: Vec<usize> = (0..n)
        .map(|i| (0..n).find(|&j| j == i || (reach[i][j] && reach[j][i])).unwrap())
        .collect();
    let mut worst = 0u64;
    let mut any = false;
    for root in 0..n {
        if comp[root] != root || !reach[root][root] {
            continue;
        }
        any = true;
        // Breadth-first levels inside the component.
        let mut level = vec![None; n];
        level[root] = Some(0i64);
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for t in transitions.iter().filter(|t| t.from == u && comp[t.to] == root) {
                if level[t.to].is_none() {
                    level[t.to] = Some(level[u].unwrap() + 1);
                    queue.push_back(t.to);
                }
            }
        }
        let mut g = 0u64;
        for t in transitions {
            if comp[t.from] == root && comp[t.to] == root {
                let slack = level[t.from].unwrap() + 1 - level[t.to].unwrap();
                g = g.gcd(&slack.unsigned_abs());
            }
        }
        worst = worst.max(g);
    }
    (worst, any)
}

fn det(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut d = 1.0;
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        if a[p][k] == 0.0 {
            return 0.0;
        }
        if p != k {
            a.swap(p, k);
            d = -d;
        }
        d *= a[k][k];
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
            }
        }
    }
    d
}

/// For a matrix with non-positive off-diagonal entries: whether it is a
/// nonsingular M-matrix, i.e. elimination without pivoting keeps every
/// pivot positive.
fn is_m_matrix(mut a: Vec<Vec<f64>>) -> bool {
    let n = a.len();
    for k in 0..n {
        if !(a[k][k] > 0.0) {
            return false;
        }
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
            }
        }
    }
    true
}

impl TransferSystem {
    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn accepting(&self) -> &[bool] {
        &self.accepting
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    /// Largest cycle-length gcd over strongly connected components, 0 when
    /// the transfer graph is acyclic.
    pub fn period(&self) -> u64 {
        self.period
    }

    fn weight_vector(&self, weights: &Weights) -> Vec<f64> {
        (0..self.atom_names.len()).map(|i| weights.to_f64(AtomId(i))).collect()
    }

    /// `I - T(t, u)` for per-atom weights `w` and markers `u`.
    fn system(&self, t: f64, w: &[f64], u: &[f64]) -> Vec<Vec<f64>> {
        let n = self.states.len();
        let mut a = vec![vec![0.0; n]; n];
        for (i, row) in a.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for tr in &self.transitions {
            a[tr.from][tr.to] -= w[tr.atom.0] * u[tr.atom.0] * t;
        }
        a
    }

    /// `Q(t, u)`; `u` has one entry per atom.
    pub fn q(&self, weights: &Weights, t: f64, u: &[f64]) -> f64 {
        let w = self.weight_vector(weights);
        det(self.system(t, &w, u))
    }

    /// `Q(t, 1)`.
    pub fn q_at(&self, weights: &Weights, t: f64) -> f64 {
        self.q(weights, t, &vec![1.0; self.atom_names.len()])
    }

    /// Adjugate of `I - T(t, 1)` from cofactors, valid at singular points.
    fn adjugate(&self, t: f64, w: &[f64]) -> Vec<Vec<f64>> {
        let a = self.system(t, w, &vec![1.0; w.len()]);
        let n = a.len();
        let mut adj = vec![vec![0.0; n]; n];
        if n == 1 {
            adj[0][0] = 1.0;
            return adj;
        }
        for i in 0..n {
            for j in 0..n {
                let minor: Vec<Vec<f64>> = (0..n)
                    .filter(|&r| r != i)
                    .map(|r| (0..n).filter(|&c| c != j).map(|c| a[r][c]).collect())
                    .collect();
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                adj[j][i] = sign * det(minor);
            }
        }
        adj
    }

    /// `(dQ/dt, [dQ/du_i])` at `(t, 1)`, from `dQ/dx = tr(adj(A) dA/dx)`.
    pub fn gradient(&self, weights: &Weights, t: f64) -> (f64, Vec<f64>) {
        let w = self.weight_vector(weights);
        self.gradient_with(&w, t)
    }

    fn gradient_with(&self, w: &[f64], t: f64) -> (f64, Vec<f64>) {
        let adj = self.adjugate(t, w);
        let mut dt = 0.0;
        let mut du = vec![0.0; w.len()];
        for tr in &self.transitions {
            let v = w[tr.atom.0] * adj[tr.to][tr.from];
            dt -= v;
            du[tr.atom.0] -= t * v;
        }
        (dt, du)
    }

    /// Coefficients `0..=n_max` of the generating function of the initial
    /// state, by iterated matrix-vector products.
    pub fn series(&self, weights: &Weights, n_max: usize) -> Vec<f64> {
        let w = self.weight_vector(weights);
        let mut v: Vec<f64> = self.accepting.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect();
        let mut out = Vec::with_capacity(n_max + 1);
        for _ in 0..=n_max {
            out.push(v[self.initial]);
            let mut next = vec![0.0; v.len()];
            for tr in &self.transitions {
                next[tr.from] += w[tr.atom.0] * v[tr.to];
            }
            v = next;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticReport {
    pub rho: f64,
    /// `dQ/dt` does not vanish at `rho`.
    pub simple_root: bool,
    /// Limiting frequency of every atom.
    pub slopes: Vec<(AtomId, f64)>,
}

impl AsymptoticReport {
    pub fn slope(&self, atom: AtomId) -> Option<f64> {
        self.slopes.iter().find(|s| s.0 == atom).map(|s| s.1)
    }
}

/// Smallest positive zero of `Q(t, 1)`: the point where the spectral
/// radius of `T(t, 1)` reaches 1, bracketed by the M-matrix test on
/// `I - T`, bisected, then polished by Newton steps on `Q`.
pub fn dominant_root(ts: &TransferSystem, weights: &Weights) -> Result<f64> {
    if ts.period > 1 {
        return Err(Error::PeriodicSpec { gcd: ts.period });
    }
    let w = ts.weight_vector(weights);
    root_with(ts, &w)
}

fn root_with(ts: &TransferSystem, w: &[f64]) -> Result<f64> {
    if !ts.has_cycle {
        return Err(Error::NoRootInRange);
    }
    let ones = vec![1.0; w.len()];
    let below = |t: f64| is_m_matrix(ts.system(t, w, &ones));
    let mut hi = 1.0;
    let mut lo = 0.0;
    while below(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::NoRootInRange);
        }
    }
    if lo == 0.0 {
        let mut x = hi;
        while !below(x) {
            hi = x;
            x /= 2.0;
            if x < 1e-300 {
                return Err(Error::NoRootInRange);
            }
        }
        lo = x;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let mut t = 0.5 * (lo + hi);
    let width = (hi - lo).max(1e-14 * hi);
    for _ in 0..3 {
        let q = det(ts.system(t, w, &ones));
        let (dq, _) = ts.gradient_with(w, t);
        if dq == 0.0 || !dq.is_finite() {
            break;
        }
        let next = t - q / dq;
        // Stay inside the bracket; a far jump means another branch.
        if (next - t).abs() > 4.0 * width || !next.is_finite() {
            break;
        }
        t = next;
    }
    Ok(t)
}

pub fn asymptotic_frequencies(ts: &TransferSystem, weights: &Weights) -> Result<AsymptoticReport> {
    let rho = dominant_root(ts, weights)?;
    let w = ts.weight_vector(weights);
    let slopes = slopes_at(ts, &w, rho)?;
    Ok(AsymptoticReport {
        rho,
        simple_root: true,
        slopes: slopes.into_iter().enumerate().map(|(i, s)| (AtomId(i), s)).collect(),
    })
}

fn slopes_at(ts: &TransferSystem, w: &[f64], rho: f64) -> Result<Vec<f64>> {
    let (dt, du) = ts.gradient_with(w, rho);
    // Scale for the vanishing test: the same sum with absolute values.
    let adj = ts.adjugate(rho, w);
    let mag: f64 = ts
        .transitions
        .iter()
        .map(|tr| (w[tr.atom.0] * adj[tr.to][tr.from]).abs())
        .sum();
    if !(dt.abs() > 1e-12 * mag) {
        return Err(Error::DegenerateDerivative);
    }
    Ok(du.iter().map(|d| d / (rho * dt)).collect())
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub max_iterations: usize,
    pub starts: usize,
    pub damping: f64,
    /// Residual accepted as a solution.
    pub tolerance: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iterations: 200,
            starts: 16,
            damping: 0.5,
            tolerance: 1e-8,
        }
    }
}

const LOG_LIMIT: f64 = 40.0;

/// Weights for the targeted atoms whose limiting frequencies match the
/// targets. Other atoms keep their weight in `base`. When every atom is
/// targeted the first one is pinned, since scaling all weights only moves
/// `rho`.
pub fn solve_asymptotic_weights(
    ts: &TransferSystem,
    base: &Weights,
    targets: &[(AtomId, f64)],
    options: &SolveOptions,
) -> Result<Weights> {
    if ts.period > 1 {
        return Err(Error::PeriodicSpec { gcd: ts.period });
    }
    let atom_count = ts.atom_names.len();
    let mut sum = 0.0;
    for &(a, mu) in targets {
        if a.0 >= atom_count {
            return Err(Error::UnknownAtom(format!("#{}", a.0)));
        }
        if !(mu > 0.0 && mu < 1.0) {
            return Err(Error::DomainError(format!("target {mu} is not in (0,1)")));
        }
        sum += mu;
    }
    if targets.is_empty() || sum > 1.0 + 1e-12 {
        return Err(Error::DomainError("targets must be non-empty and sum to at most 1".into()));
    }
    let all_targeted = (0..atom_count).all(|i| targets.iter().any(|t| t.0 .0 == i));
    let free: Vec<AtomId> = targets
        .iter()
        .map(|t| t.0)
        .skip(usize::from(all_targeted))
        .collect();
    let mut base_w = ts.weight_vector(base);
    if all_targeted {
        base_w[targets[0].0 .0] = 1.0;
    }

    let residual = |x: &[f64]| -> Option<Vec<f64>> {
        let mut w = base_w.clone();
        for (a, v) in free.iter().zip(x) {
            w[a.0] = v.exp();
        }
        let rho = root_with(ts, &w).ok()?;
        let s = slopes_at(ts, &w, rho).ok()?;
        Some(targets.iter().map(|&(a, mu)| s[a.0] - mu).collect())
    };
    let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();

    let mut starts: Vec<Vec<f64>> = vec![free.iter().map(|a| base_w[a.0].ln()).collect()];
    let k = options.starts.max(1);
    for s in 0..k {
        let v = if k == 1 {
            0.0
        } else {
            (1e-3f64).ln() + (1e6f64).ln() * s as f64 / (k - 1) as f64
        };
        starts.push(vec![v; free.len()]);
    }

    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    for (idx, start) in starts.iter().enumerate() {
        let Some((x, r)) = newton(&residual, start.clone(), options) else { continue };
        let r = norm(&r);
        if best.as_ref().is_none_or(|b| r < b.0) {
            best = Some((r, idx, x));
        }
        if r < options.tolerance * 1e-3 {
            break;
        }
    }
    let Some((r, _, x)) = best else {
        return Err(Error::NoSolutionFound { residual: f64::INFINITY });
    };
    if r > options.tolerance {
        return Err(Error::NoSolutionFound { residual: r });
    }
    let mut out = base.clone();
    if all_targeted {
        out.set(targets[0].0, num_rational::BigRational::from_integer(1.into()))?;
    }
    for (a, v) in free.iter().zip(&x) {
        let q = num_rational::BigRational::from_float(v.exp())
            .ok_or_else(|| Error::NoSolutionFound { residual: r })?;
        out.set(*a, q)?;
    }
    // Re-check through the public route.
    let report = asymptotic_frequencies(ts, &out)?;
    let check = targets
        .iter()
        .map(|&(a, mu)| (report.slopes[a.0].1 - mu).powi(2))
        .sum::<f64>()
        .sqrt();
    if check > options.tolerance {
        return Err(Error::NoSolutionFound { residual: check });
    }
    Ok(out)
}

/// Damped Gauss-Newton on log-weights with a forward-difference Jacobian.
fn newton(
    residual: &impl Fn(&[f64]) -> Option<Vec<f64>>,
    mut x: Vec<f64>,
    options: &SolveOptions,
) -> Option<(Vec<f64>, Vec<f64>)> {
    let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut r = residual(&x)?;
    let d = x.len();
    for _ in 0..options.max_iterations {
        if norm(&r) < options.tolerance * 1e-3 {
            break;
        }
        let m = r.len();
        let mut jac = vec![vec![0.0; d]; m];
        for j in 0..d {
            let h = 1e-7 * (1.0 + x[j].abs());
            let mut xp = x.clone();
            xp[j] += h;
            let rp = residual(&xp)?;
            for i in 0..m {
                jac[i][j] = (rp[i] - r[i]) / h;
            }
        }
        // Normal equations with a tiny ridge for rank-deficient systems.
        let mut a = vec![vec![0.0; d + 1]; d];
        for p in 0..d {
            for q in 0..d {
                a[p][q] = (0..m).map(|i| jac[i][p] * jac[i][q]).sum();
            }
            a[p][p] += 1e-14 * (1.0 + a[p][p]);
            a[p][d] = -(0..m).map(|i| jac[i][p] * r[i]).sum::<f64>();
        }
        let step = solve_dense(a)?;
        let mut scale = 1.0;
        let current = norm(&r);
        let mut moved = false;
        for _ in 0..40 {
            let xn: Vec<f64> = x
                .iter()
                .zip(&step)
                .map(|(v, s)| (v + scale * s).clamp(-LOG_LIMIT, LOG_LIMIT))
                .collect();
            if let Some(rn) = residual(&xn) {
                if norm(&rn) < current {
                    x = xn;
                    r = rn;
                    moved = true;
                    break;
                }
            }
            scale *= options.damping;
        }
        if !moved {
            break;
        }
    }
    Some((x, r))
}

/// Solve a square system given as an augmented matrix.
fn solve_dense(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = a.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k] == 0.0 {
            return None;
        }
        a.swap(p, k);
        for i in 0..n {
            if i != k {
                let f = a[i][k] / a[k][k];
                for j in k..=n {
                    a[i][j] -= f * a[k][j];
                }
            }
        }
    }
    Some((0..n).map(|i| a[i][n] / a[i][i]).collect())
}
