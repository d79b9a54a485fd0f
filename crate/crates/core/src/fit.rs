//! Weights reaching prescribed frequencies at a fixed size.
//!
//! The search runs a Nelder-Mead simplex over log-weights with a cheap
//! floating-point profile; the returned weights are rounded to decimals and
//! their objective is recomputed from the exact rational profile.

use crate::freq::{frequency_profile_of, FloatProfiler};
use crate::rng::RandomSource;
use crate::scalar::ratio_to_f64;
use crate::spec::{parse_weight_value, AtomId, Specification};
use crate::weights::Weights;
use crate::{Error, Result};

/// Targeted frequency per distinguished atom at size `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetProfile {
    n: usize,
    entries: Vec<(AtomId, f64)>,
}

impl TargetProfile {
    pub fn new(n: usize, entries: Vec<(AtomId, f64)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::DomainError("targets need a positive size".into()));
        }
        let mut sum = 0.0;
        for (i, &(a, mu)) in entries.iter().enumerate() {
            if !(mu > 0.0 && mu < 1.0) {
                return Err(Error::DomainError(format!("target {mu} for atom #{} is not in (0,1)", a.0)));
            }
            if entries[..i].iter().any(|e| e.0 == a) {
                return Err(Error::DomainError(format!("atom #{} is targeted twice", a.0)));
            }
            sum += mu;
        }
        if sum > 1.0 + 1e-12 {
            return Err(Error::DomainError(format!("targets sum to {sum}, above 1")));
        }
        Ok(TargetProfile { n, entries })
    }

    /// Targets declared in the grammar file.
    pub fn declared(spec: &Specification, n: usize) -> Result<Self> {
        Self::new(n, spec.declared_targets().to_vec())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[(AtomId, f64)] {
        &self.entries
    }

    pub fn atoms(&self) -> Vec<AtomId> {
        self.entries.iter().map(|e| e.0).collect()
    }
}

fn relative_error(observed: &[f64], targets: &[(AtomId, f64)]) -> f64 {
    observed
        .iter()
        .zip(targets)
        .map(|(f, (_, mu))| ((f - mu) / f).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Root-sum-square of `(f - mu) / f` over the targeted atoms, with `f` the
/// exact frequency under `weights`.
pub fn objective(spec: &Specification, weights: &Weights, targets: &TargetProfile) -> Result<f64> {
    let profile = frequency_profile_of(spec, weights, &targets.atoms(), targets.n)?;
    let mut observed = Vec::with_capacity(targets.entries.len());
    for (a, f) in &profile.entries {
        let f = ratio_to_f64(f);
        if f == 0.0 {
            return Err(Error::ZeroObservedFrequency(spec.atom_name(*a).to_string()));
        }
        observed.push(f);
    }
    Ok(relative_error(&observed, &targets.entries))
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub tolerance: f64,
    pub max_evaluations: usize,
    /// Starting weights for the targeted atoms (all ones by default) and
    /// fixed weights for the others.
    pub initial: Weights,
    /// Atoms whose weight stays at 1.
    pub pinned: Vec<AtomId>,
    /// Randomize the simplex on restarts.
    pub restart_seed: Option<u64>,
    pub record_trajectory: bool,
    /// Significant decimal digits kept in the returned weights.
    pub digits: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tolerance: 1e-5,
            max_evaluations: 5000,
            initial: Weights::uniform(),
            pinned: Vec::new(),
            restart_seed: None,
            record_trajectory: false,
            digits: 9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub weights: Weights,
    pub objective_value: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub trajectory: Option<Vec<(Weights, f64)>>,
}

const DIAMETER_STOP: f64 = 1e-9;
const PLATEAU_WINDOW: usize = 600;
const MAX_RESTARTS: usize = 4;
const LOG_BOUND: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Stop {
    Tolerance,
    Budget,
    Collapsed,
    Plateau,
}

struct Counter<F> {
    f: F,
    evals: usize,
    budget: usize,
    best: f64,
    best_x: Vec<f64>,
    /// Best value after each evaluation.
    history: Vec<f64>,
}

impl<F: FnMut(&[f64]) -> f64> Counter<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if v < self.best {
            self.best = v;
            self.best_x = x.to_vec();
        }
        self.history.push(self.best);
        v
    }

    fn plateaued(&self) -> bool {
        let n = self.history.len();
        n > PLATEAU_WINDOW && {
            let old = self.history[n - 1 - PLATEAU_WINDOW];
            old.is_finite() && old - self.best <= 1e-7 * old
        }
    }
}

fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    c: &mut Counter<F>,
    simplex: Vec<Vec<f64>>,
    tolerance: f64,
    mut on_iter: impl FnMut(&[f64], f64),
) -> Stop {
    let d = simplex.len() - 1;
    let mut pts: Vec<(Vec<f64>, f64)> = simplex
        .into_iter()
        .map(|x| {
            let v = c.eval(&x);
            (x, v)
        })
        .collect();
    let blend = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x + t * (y - x)).clamp(-LOG_BOUND, LOG_BOUND))
            .collect()
    };
    loop {
        pts.sort_by(|a, b| a.1.total_cmp(&b.1));
        on_iter(&pts[0].0, pts[0].1);
        if pts[0].1 <= tolerance {
            return Stop::Tolerance;
        }
        if c.evals >= c.budget {
            return Stop::Budget;
        }
        let diameter = pts[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&pts[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if diameter < DIAMETER_STOP {
            return Stop::Collapsed;
        }
        if c.plateaued() {
            return Stop::Plateau;
        }
        let mut centroid = vec![0.0; d];
        for (x, _) in &pts[..d] {
            for (s, v) in centroid.iter_mut().zip(x) {
                *s += v / d as f64;
            }
        }
        let worst = pts[d].clone();
        let xr = blend(&centroid, &worst.0, -1.0);
        let fr = c.eval(&xr);
        if fr < pts[0].1 {
            let xe = blend(&centroid, &worst.0, -2.0);
            let fe = c.eval(&xe);
            pts[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < pts[d - 1].1 {
            pts[d] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let xc = blend(&centroid, &xr, 0.5);
            let fc = c.eval(&xc);
            (xc, fc)
        } else {
            let xc = blend(&centroid, &worst.0, 0.5);
            let fc = c.eval(&xc);
            (xc, fc)
        };
        if fc < fr.min(worst.1) {
            pts[d] = (xc, fc);
            continue;
        }
        let best = pts[0].0.clone();
        for p in pts.iter_mut().skip(1) {
            p.0 = blend(&best, &p.0, 0.5);
            p.1 = c.eval(&p.0);
        }
    }
}

/// Round to `digits` significant decimal digits, as an exact rational.
fn decimal_weight(x: f64, digits: usize) -> num_rational::BigRational {
    let text = format!("{:.*e}", digits.max(1) - 1, x);
    parse_weight_value(&text).expect("formatted weights parse")
}

/// Search weights for the targeted atoms so that the frequency profile at
/// `targets.n()` matches the targets. When every atom of the grammar is
/// free, the first one is pinned: scaling all weights together leaves the
/// distribution at a fixed size unchanged.
pub fn fit_weights(spec: &Specification, targets: &TargetProfile, options: &FitOptions) -> Result<FitResult> {
    let atoms = targets.atoms();
    if atoms.is_empty() {
        return Err(Error::DomainError("no target to fit".into()));
    }
    for &a in atoms.iter().chain(&options.pinned) {
        if a.0 >= spec.atoms().len() {
            return Err(Error::UnknownAtom(format!("#{}", a.0)));
        }
    }
    let mut pinned = options.pinned.clone();
    let free_all = spec.atom_ids().all(|a| atoms.contains(&a) && !pinned.contains(&a));
    if free_all {
        pinned.push(atoms[0]);
    }
    let free: Vec<AtomId> = atoms.iter().copied().filter(|a| !pinned.contains(a)).collect();
    let profiler = FloatProfiler::new(spec, &atoms)?;

    let mut base: Vec<f64> = spec.atom_ids().map(|a| options.initial.to_f64(a)).collect();
    for a in &pinned {
        base[a.0] = 1.0;
    }
    let full = |x: &[f64]| {
        let mut w = base.clone();
        for (a, v) in free.iter().zip(x) {
            w[a.0] = v.exp();
        }
        w
    };
    let n = targets.n;
    let f = |x: &[f64]| match profiler.evaluate(&full(x), n) {
        Ok(obs) if obs.iter().all(|&v| v > 0.0) => relative_error(&obs, &targets.entries),
        _ => f64::INFINITY,
    };
    let start: Vec<f64> = free.iter().map(|a| base[a.0].ln()).collect();
    let mut counter = Counter {
        f,
        evals: 0,
        budget: options.max_evaluations.max(1),
        best: f64::INFINITY,
        best_x: start.clone(),
        history: Vec::new(),
    };
    let mut trajectory: Vec<Vec<f64>> = Vec::new();
    let mut rng = options.restart_seed.map(RandomSource::new);

    if free.is_empty() {
        counter.eval(&start);
    } else {
        let mut center = start;
        let mut step = 0.5;
        let mut last_best = f64::INFINITY;
        for round in 0..=MAX_RESTARTS {
            let mut simplex = vec![center.clone()];
            for i in 0..center.len() {
                let mut x = center.clone();
                let delta = match rng.as_mut() {
                    Some(r) if round > 0 => step * (0.5 + r.unit_f64()) * if r.next_u32() & 1 == 0 { 1.0 } else { -1.0 },
                    _ => step,
                };
                x[i] += delta;
                simplex.push(x);
            }
            let mut last: Option<f64> = None;
            let stop = nelder_mead(&mut counter, simplex, options.tolerance, |x, v| {
                if options.record_trajectory && last != Some(v) {
                    trajectory.push(x.to_vec());
                    last = Some(v);
                }
            });
            match stop {
                Stop::Tolerance | Stop::Budget => break,
                Stop::Plateau => {
                    return Err(Error::InfeasibleTarget {
                        objective: counter.best,
                    })
                }
                Stop::Collapsed => {
                    if round > 0 && counter.best > last_best * (1.0 - 1e-3) {
                        return Err(Error::InfeasibleTarget {
                            objective: counter.best,
                        });
                    }
                    last_best = counter.best;
                    center = counter.best_x.clone();
                    step *= 0.5;
                }
            }
        }
    }

    let to_weights = |x: &[f64]| -> Result<Weights> {
        let w = full(x);
        let mut out = Weights::uniform();
        for a in spec.atom_ids() {
            let v = if free.contains(&a) {
                decimal_weight(w[a.0], options.digits)
            } else if pinned.contains(&a) {
                continue;
            } else {
                options.initial.get(a)
            };
            out.set(a, v)?;
        }
        Ok(out)
    };
    let weights = to_weights(&counter.best_x)?;
    let objective_value = objective(spec, &weights, targets)?;
    let trajectory = if options.record_trajectory {
        let mut t = Vec::with_capacity(trajectory.len());
        for x in &trajectory {
            t.push((to_weights(x)?, (counter.f)(x)));
        }
        Some(t)
    } else {
        None
    };
    Ok(FitResult {
        weights,
        objective_value,
        evaluations: counter.evals,
        converged: objective_value <= options.tolerance,
        trajectory,
    })
}

/// Least number of mantissa bits `b` such that weights truncated to `b`
/// bits distort every sampling probability at size `n` by a factor within
/// `1 ± epsilon`: `b >= 1 + (ln 3 + ln n - ln ln(1 + epsilon)) / ln 2`, and
/// `b >= 2`.
pub fn precision_bits(n: usize, epsilon: f64) -> Result<u32> {
    if n == 0 {
        return Err(Error::DomainError("size must be positive".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::DomainError(format!("epsilon {epsilon} is not in (0,1)")));
    }
    let bound = 1.0 + (3f64.ln() + (n as f64).ln() - epsilon.ln_1p().ln()) / 2f64.ln();
    Ok((bound.ceil() as u32).max(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freq::full_frequency_profile;
    use crate::spec::{parse_spec, standardize};

    fn std_spec(src: &str) -> Specification {
        standardize(&parse_spec(src).unwrap()).unwrap().0
    }

    const MOTZKIN: &str = "S -> a S b S | c S | _ ;";

    #[test]
    fn bits_for_quadtree_size() {
        assert_eq!(precision_bits(201, 1e-3).unwrap(), 21);
        assert!(precision_bits(1, 0.5).unwrap() >= 2);
        assert!(precision_bits(402, 1e-3).unwrap() >= 21);
        assert!(matches!(precision_bits(10, 1.0), Err(Error::DomainError(_))));
        assert!(matches!(precision_bits(10, 0.0), Err(Error::DomainError(_))));
    }

    #[test]
    fn objective_zero_at_own_profile() {
        let spec = std_spec(MOTZKIN);
        let c = spec.atom_by_name("c").unwrap();
        let p = full_frequency_profile(&spec, &Weights::uniform(), 9).unwrap();
        let mu = ratio_to_f64(p.get(c).unwrap());
        let t = TargetProfile::new(9, vec![(c, mu)]).unwrap();
        assert!(objective(&spec, &Weights::uniform(), &t).unwrap() < 1e-15);
    }

    #[test]
    fn objective_far_from_half() {
        let spec = std_spec(MOTZKIN);
        let c = spec.atom_by_name("c").unwrap();
        let t = TargetProfile::new(60, vec![(c, 0.5)]).unwrap();
        assert!(objective(&spec, &Weights::uniform(), &t).unwrap() > 0.3);
    }

    #[test]
    fn zero_observed_frequency() {
        let spec = std_spec("S -> a S | b ;");
        let b = spec.atom_by_name("b").unwrap();
        let t = TargetProfile::new(3, vec![(b, 0.5)]).unwrap();
        // With a single b per word the frequency is 1/3, never zero here.
        assert!(objective(&spec, &Weights::uniform(), &t).is_ok());
        let spec = std_spec("S -> a S | c ; T -> b ;");
        let b = spec.atom_by_name("b").unwrap();
        let t = TargetProfile::new(3, vec![(b, 0.5)]).unwrap();
        assert_eq!(
            objective(&spec, &Weights::uniform(), &t).unwrap_err(),
            Error::ZeroObservedFrequency("b".into())
        );
    }

    #[test]
    fn target_validation() {
        let a = AtomId(0);
        let b = AtomId(1);
        assert!(TargetProfile::new(5, vec![(a, 0.0)]).is_err());
        assert!(TargetProfile::new(5, vec![(a, 0.7), (b, 0.4)]).is_err());
        assert!(TargetProfile::new(5, vec![(a, 0.3), (a, 0.4)]).is_err());
        assert!(TargetProfile::new(0, vec![(a, 0.3)]).is_err());
        assert!(TargetProfile::new(5, vec![(a, 0.6), (b, 0.4)]).is_ok());
    }

    #[test]
    fn fits_motzkin_unary_frequency() {
        let spec = std_spec(MOTZKIN);
        let c = spec.atom_by_name("c").unwrap();
        let t = TargetProfile::new(40, vec![(c, 0.6)]).unwrap();
        let r = fit_weights(&spec, &t, &FitOptions::default()).unwrap();
        assert!(r.converged, "{r:?}");
        assert!(r.objective_value <= 1e-5);
        let again = objective(&spec, &r.weights, &t).unwrap();
        assert_eq!(again, r.objective_value);
    }

    #[test]
    fn uniform_target_is_a_fixed_point() {
        let spec = std_spec(MOTZKIN);
        let atoms: Vec<AtomId> = spec.atom_ids().collect();
        let p = full_frequency_profile(&spec, &Weights::uniform(), 20).unwrap();
        let t = TargetProfile::new(20, atoms.iter().map(|&a| (a, ratio_to_f64(p.get(a).unwrap()))).collect()).unwrap();
        let r = fit_weights(&spec, &t, &FitOptions::default()).unwrap();
        assert!(r.converged);
        for a in atoms {
            assert!((r.weights.to_f64(a) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn impossible_operator_share() {
        // At most (n-1)/2 operators in a size-n expression.
        let spec = std_spec("E -> p E E | N ; N -> z | o ;");
        let p = spec.atom_by_name("p").unwrap();
        let t = TargetProfile::new(21, vec![(p, 0.7)]).unwrap();
        let err = fit_weights(&spec, &t, &FitOptions::default()).unwrap_err();
        assert!(matches!(err, Error::InfeasibleTarget { .. }), "{err:?}");
    }

    #[test]
    fn trajectory_is_monotone() {
        let spec = std_spec(MOTZKIN);
        let c = spec.atom_by_name("c").unwrap();
        let t = TargetProfile::new(30, vec![(c, 0.2)]).unwrap();
        let opts = FitOptions {
            record_trajectory: true,
            ..FitOptions::default()
        };
        let r = fit_weights(&spec, &t, &opts).unwrap();
        let traj = r.trajectory.unwrap();
        assert!(traj.len() > 2);
        assert!(traj.windows(2).all(|w| w[1].1 <= w[0].1));
    }
}
