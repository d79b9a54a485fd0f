use gramfreq::asympt::{asymptotic_frequencies, build_transfer, dominant_root, solve_asymptotic_weights, SolveOptions};
use gramfreq::counting::build_count_table;
use gramfreq::fixtures;
use gramfreq::freq::frequency_profile_of;
use gramfreq::scalar::ratio_to_f64;
use gramfreq::Weights;
use num_rational::BigRational;

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
}

#[test]
fn fibonacci_slope_and_solution() {
    let spec = fixtures::load(fixtures::FIBONACCI);
    let ts = build_transfer(&spec).unwrap();
    let a = spec.atom_by_name("a").unwrap();
    let r = asymptotic_frequencies(&ts, &Weights::uniform()).unwrap();
    close(r.rho, 0.6180340, 1e-7);
    close(r.slope(a).unwrap(), 1.0 / 5f64.sqrt(), 1e-9);
    for mu in [0.1, 0.3, 0.5, 0.8] {
        let w = solve_asymptotic_weights(&ts, &Weights::uniform(), &[(a, mu)], &SolveOptions::default()).unwrap();
        let s = (1.0 - mu * mu).sqrt();
        close(w.to_f64(a), 2.0 * mu / s, 1e-8);
        close(dominant_root(&ts, &w).unwrap(), (1.0 - mu) / s, 1e-8);
        let back = asymptotic_frequencies(&ts, &w).unwrap();
        close(back.slope(a).unwrap(), mu, 1e-8);
    }
}

#[test]
fn motif_denominator_and_solutions() {
    let spec = fixtures::load(fixtures::MOTIF);
    let ts = build_transfer(&spec).unwrap();
    let g = spec.atom_by_name("gbar").unwrap();
    for pi in [1.0f64, 0.5, 3.0] {
        let w = Weights::uniform().with(g, BigRational::from_float(pi).unwrap()).unwrap();
        for t in [0.1, 0.25, 0.4] {
            close(ts.q_at(&w, t), 1.0 - 4.0 * t + (1.0 - pi) * t.powi(3), 1e-12);
        }
    }
    let r = asymptotic_frequencies(&ts, &Weights::uniform()).unwrap();
    close(r.slope(g).unwrap(), 1.0 / 64.0, 1e-9);
    let opts = SolveOptions::default();
    let w = solve_asymptotic_weights(&ts, &Weights::uniform(), &[(g, 0.1)], &opts).unwrap();
    close(w.to_f64(g), 11.148, 5e-3);
    let w = solve_asymptotic_weights(&ts, &Weights::uniform(), &[(g, 0.01)], &opts).unwrap();
    close(w.to_f64(g), 0.621, 5e-3);
}

#[test]
fn stem_loop_encoding() {
    let spec = fixtures::load(fixtures::STEM_LOOP);
    let ts = build_transfer(&spec).unwrap();
    let w = Weights::declared(&spec);
    let r = asymptotic_frequencies(&ts, &w).unwrap();
    close(r.rho, 1.0 / 3.0, 1e-10);
    close(r.slope(spec.atom_by_name("a").unwrap()).unwrap(), 0.4, 1e-9);
    close(r.slope(spec.atom_by_name("cbar").unwrap()).unwrap(), 0.1, 1e-9);
    let sum: f64 = r.slopes.iter().map(|s| s.1).sum();
    close(sum, 1.0, 1e-9);
    // And back from the targets.
    let a = spec.atom_by_name("a").unwrap();
    let cbar = spec.atom_by_name("cbar").unwrap();
    let solved =
        solve_asymptotic_weights(&ts, &Weights::uniform(), &[(a, 0.4), (cbar, 0.1)], &SolveOptions::default()).unwrap();
    close(solved.to_f64(a), 27.0 / 4.0, 1e-6);
    close(solved.to_f64(cbar), 4.0 / 9.0, 1e-6);
}

#[test]
fn transfer_series_matches_counts() {
    for text in [fixtures::FIBONACCI, fixtures::MOTIF, fixtures::STEM_LOOP] {
        let spec = fixtures::load(text);
        let ts = build_transfer(&spec).unwrap();
        let table = build_count_table(&spec, &Weights::uniform(), 12).unwrap();
        let series = ts.series(&Weights::uniform(), 12);
        for (n, s) in series.iter().enumerate() {
            assert_eq!(*s, ratio_to_f64(&table.count(spec.axiom(), n).unwrap()));
        }
    }
}

#[test]
fn finite_sizes_approach_the_slope() {
    for (text, name) in [(fixtures::FIBONACCI, "a"), (fixtures::MOTIF, "gbar")] {
        let spec = fixtures::load(text);
        let ts = build_transfer(&spec).unwrap();
        let atom = spec.atom_by_name(name).unwrap();
        let mu = asymptotic_frequencies(&ts, &Weights::uniform()).unwrap().slope(atom).unwrap();
        let mut prev = f64::INFINITY;
        let mut scaled = Vec::new();
        for n in [100usize, 200, 400, 800] {
            let p = frequency_profile_of(&spec, &Weights::uniform(), &[atom], n).unwrap();
            let dev = (ratio_to_f64(&p.entries[0].1) - mu).abs();
            assert!(dev < prev, "{name}: no improvement at {n}");
            prev = dev;
            scaled.push(dev * n as f64);
        }
        // The deviation times n stays bounded by the first one, within 5%.
        let c = scaled[0] * 1.05;
        assert!(scaled.iter().all(|&s| s <= c), "{scaled:?}");
    }
}
