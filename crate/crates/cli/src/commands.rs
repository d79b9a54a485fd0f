use crate::input::{self, count_table, load_spec, memory_budget, resolve_atoms, seed_or_fresh};
use crate::{AsymptArgs, CountArgs, ExactArgs, Failure, FitArgs, Format, FreqsArgs, Method, SampleArgs, SolveArgs, SpecArgs};
use gramfreq::asympt::{asymptotic_frequencies, build_transfer, solve_asymptotic_weights, SolveOptions};
use gramfreq::exact::{
    build_exact_table_with, estimate_exact_bytes, exact_sample as draw_exact, fiber_count, parse_occurrences,
    ExactOptions, OccurrenceVector,
};
use gramfreq::fit::{fit_weights, FitOptions, TargetProfile};
use gramfreq::freq::{freq_dp, freq_via_pointing, frequency_profile_of, FrequencyProfile};
use gramfreq::sampler::{sample_one, DerivationTree};
use gramfreq::scalar::ratio_to_f64;
use gramfreq::spec::{rational_text, AtomId, Specification};
use gramfreq::RandomSource;
use num_bigint::BigInt;
use num_rational::BigRational;
use std::io::Write;

type Out<'a> = dyn Write + 'a;

fn io(e: std::io::Error) -> Failure {
    Failure::Io(e.to_string())
}

fn join_classes(spec: &Specification, ids: impl IntoIterator<Item = gramfreq::spec::ClassId>) -> String {
    ids.into_iter().map(|c| spec.class_name(c)).collect::<Vec<_>>().join(",")
}

pub fn validate(args: &SpecArgs, out: &mut Out) -> Result<(), Failure> {
    let (spec, report) = load_spec(&args.spec)?;
    let source = spec.source_class_count();
    writeln!(out, "# fingerprint={}", spec.fingerprint()).map_err(io)?;
    writeln!(out, "axiom\t{}", spec.class_name(spec.axiom())).map_err(io)?;
    writeln!(out, "classes\t{source}").map_err(io)?;
    writeln!(out, "introduced\t{}", report.introduced_classes.len()).map_err(io)?;
    writeln!(out, "atoms\t{}", spec.atoms().len()).map_err(io)?;
    let distinguished: Vec<&str> = spec.distinguished().iter().map(|a| spec.atom_name(*a)).collect();
    writeln!(out, "distinguished\t{}", distinguished.join(",")).map_err(io)?;
    writeln!(out, "context_free\t{}", report.is_context_free).map_err(io)?;
    writeln!(out, "regular\t{}", report.is_regular).map_err(io)?;
    writeln!(out, "# component\tcycle_gcd\tclasses").map_err(io)?;
    for (i, (scc, gcd)) in report.scc_decomposition.iter().zip(&report.cycle_gcd_per_scc).enumerate() {
        let gcd = gcd.map_or("-".to_string(), |g| g.to_string());
        writeln!(out, "{i}\t{gcd}\t{}", join_classes(&spec, scc.iter().copied())).map_err(io)?;
    }
    if !report.introduced_classes.is_empty() {
        writeln!(out, "# introduced\tstands_for").map_err(io)?;
        for (c, note) in &report.introduced_classes {
            writeln!(out, "{}\t{note}", spec.class_name(*c)).map_err(io)?;
        }
    }
    Ok(())
}

pub fn count(args: &CountArgs, out: &mut Out) -> Result<(), Failure> {
    let (spec, _) = load_spec(&args.spec.spec)?;
    let w = input::weights(&spec, &args.weights)?;
    let class = match &args.class {
        Some(name) => spec.class_by_name(name)?,
        None => spec.axiom(),
    };
    let table = count_table(&spec, &w, args.size, args.cache.as_deref())?;
    if args.upto {
        writeln!(out, "# n\tcount").map_err(io)?;
        for n in 0..=args.size {
            writeln!(out, "{n}\t{}", rational_text(&table.count(class, n)?)).map_err(io)?;
        }
    } else {
        writeln!(out, "{}", rational_text(&table.count(class, args.size)?)).map_err(io)?;
    }
    Ok(())
}

fn render(spec: &Specification, t: &DerivationTree, format: Format) -> String {
    match format {
        Format::Word => spec.render_word(t.word()),
        Format::Tree => t.render_tree(spec),
    }
}

pub fn sample(args: &SampleArgs, out: &mut Out) -> Result<(), Failure> {
    let (spec, _) = load_spec(&args.spec.spec)?;
    let w = input::weights(&spec, &args.weights)?;
    let seed = seed_or_fresh(args.seed);
    writeln!(out, "# seed={seed} fingerprint={}", spec.fingerprint()).map_err(io)?;
    let table = count_table(&spec, &w, args.size, args.cache.as_deref())?;
    let axiom = spec.axiom();
    let workers = usize::from(args.workers);
    if workers == 1 {
        let mut rng = RandomSource::new(seed);
        for _ in 0..args.count {
            let t = sample_one(&table, axiom, args.size, &mut rng)?;
            writeln!(out, "{}", render(&spec, &t, args.format)).map_err(io)?;
        }
        return Ok(());
    }
    // Worker i draws its share from the sub-stream (seed, i); shares are
    // printed in worker order.
    let shares: Vec<usize> = (0..workers)
        .map(|i| args.count / workers + usize::from(i < args.count % workers))
        .collect();
    let results: Vec<Result<Vec<String>, gramfreq::Error>> = std::thread::scope(|scope| {
        let handles: Vec<_> = shares
            .iter()
            .enumerate()
            .map(|(i, &share)| {
                let (table, spec) = (&table, &spec);
                scope.spawn(move || {
                    let mut rng = RandomSource::new(RandomSource::derive_seed(seed, i as u64));
                    (0..share)
                        .map(|_| sample_one(table, axiom, args.size, &mut rng).map(|t| render(spec, &t, args.format)))
                        .collect()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    for r in results {
        for line in r? {
            writeln!(out, "{line}").map_err(io)?;
        }
    }
    Ok(())
}

fn decimal(v: &BigRational) -> String {
    format!("{:.10}", ratio_to_f64(v))
}

pub fn freqs(args: &FreqsArgs, out: &mut Out) -> Result<(), Failure> {
    let (spec, _) = load_spec(&args.spec.spec)?;
    let w = input::weights(&spec, &args.weights)?;
    let atoms: Vec<AtomId> = if args.all {
        spec.atom_ids().collect()
    } else if !args.atoms.is_empty() {
        resolve_atoms(&spec, &args.atoms)?
    } else {
        spec.distinguished().to_vec()
    };
    let n = args.size;
    let profile = match args.method {
        None => frequency_profile_of(&spec, &w, &atoms, n)?,
        Some(method) => {
            if n == 0 {
                return Err(Failure::Usage("frequencies need a positive size".into()));
            }
            let size = BigRational::from_integer(BigInt::from(n));
            let mut entries = Vec::with_capacity(atoms.len());
            for &a in &atoms {
                let occurrences = match method {
                    Method::Dp => freq_dp(&spec, &w, a, n)?,
                    Method::Pointing => freq_via_pointing(&spec, &w, a, n)?,
                };
                entries.push((a, occurrences / &size));
            }
            FrequencyProfile { n, entries }
        }
    };
    writeln!(out, "# n={n} weights={}", gramfreq::counting::table_fingerprint(&spec, &w)).map_err(io)?;
    writeln!(out, "# atom\tfrequency\tdecimal").map_err(io)?;
    for (a, f) in &profile.entries {
        writeln!(out, "{}\t{}\t{}", spec.atom_name(*a), rational_text(f), decimal(f)).map_err(io)?;
    }
    Ok(())
}

pub fn fit(args: &FitArgs, out: &mut Out) -> Result<(), Failure> {
    let (spec, _) = load_spec(&args.spec.spec)?;
    let initial = input::weights(&spec, &args.weights)?;
    let targets = TargetProfile::new(args.size, input::targets(&spec, &args.targets)?)?;
    let options = FitOptions {
        tolerance: args.tolerance,
        max_evaluations: args.max_evaluations,
        initial,
        pinned: resolve_atoms(&spec, &args.pinned)?,
        restart_seed: args.restart_seed,
        ..FitOptions::default()
    };
    let result = fit_weights(&spec, &targets, &options)?;
    writeln!(
        out,
        "# objective={:.6e} evaluations={} converged={}",
        result.objective_value, result.evaluations, result.converged
    )
    .map_err(io)?;
    writeln!(out, "# atom\tweight\tdecimal").map_err(io)?;
    for a in spec.atom_ids() {
        let v = result.weights.get(a);
        writeln!(out, "{}\t{}\t{}", spec.atom_name(a), rational_text(&v), decimal(&v)).map_err(io)?;
    }
    Ok(())
}

pub fn asympt(args: &AsymptArgs, out: &mut Out) -> Result<(), Failure> {
    let (spec, _) = load_spec(&args.spec.spec)?;
    let w = input::weights(&spec, &args.weights)?;
    let ts = build_transfer(&spec)?;
    let report = asymptotic_frequencies(&ts, &w)?;
    writeln!(out, "# rho={:.12} simple_root={}", report.rho, report.simple_root).map_err(io)?;
    writeln!(out, "# atom\tslope").map_err(io)?;
    for (a, s) in &report.slopes {
        writeln!(out, "{}\t{s:.12}", spec.atom_name(*a)).map_err(io)?;
    }
    Ok(())
}

pub fn solve(args: &SolveArgs, out: &mut Out) -> Result<(), Failure> {
    let (spec, _) = load_spec(&args.spec.spec)?;
    let base = input::weights(&spec, &args.weights)?;
    let targets = input::targets(&spec, &args.targets)?;
    let ts = build_transfer(&spec)?;
    let w = solve_asymptotic_weights(&ts, &base, &targets, &SolveOptions::default())?;
    let report = asymptotic_frequencies(&ts, &w)?;
    writeln!(out, "# rho={:.12}", report.rho).map_err(io)?;
    writeln!(out, "# atom\tweight\tslope").map_err(io)?;
    for (a, s) in &report.slopes {
        writeln!(out, "{}\t{:.10}\t{s:.10}", spec.atom_name(*a), w.to_f64(*a)).map_err(io)?;
    }
    Ok(())
}

pub fn exact_sample(args: &ExactArgs, out: &mut Out) -> Result<(), Failure> {
    let (spec, _) = load_spec(&args.spec.spec)?;
    let occurrences = parse_occurrences(&spec, &args.occurrences)?;
    let atoms: Vec<AtomId> = occurrences.iter().map(|o| o.0).collect();
    let counts: Vec<usize> = occurrences.iter().map(|o| o.1).collect();
    let used: usize = counts.iter().sum();
    let n = args.size.unwrap_or(used);
    let target = OccurrenceVector::for_size(counts, n)
        .ok_or_else(|| Failure::Usage(format!("occurrences add up to {used}, more than the size {n}")))?;
    let seed = seed_or_fresh(args.seed);
    writeln!(out, "# seed={seed} fingerprint={}", spec.fingerprint()).map_err(io)?;
    writeln!(out, "# table_bytes={}", estimate_exact_bytes(&spec, &target)).map_err(io)?;
    out.flush().map_err(io)?;
    let options = ExactOptions {
        budget: memory_budget()?,
        ..ExactOptions::default()
    };
    let table = build_exact_table_with(&spec, &atoms, &target, &options)?;
    writeln!(out, "# fiber={}", fiber_count(&table)).map_err(io)?;
    let mut rng = RandomSource::new(seed);
    for _ in 0..args.count {
        let t = draw_exact(&table, &mut rng)?;
        writeln!(out, "{}", render(&spec, &t, args.format)).map_err(io)?;
    }
    Ok(())
}
