use crate::{Failure, TargetArgs, WeightArgs};
use gramfreq::counting::{build_count_table_with_budget, CountTable};
use gramfreq::spec::{parse_spec, standardize, AtomId, Specification, StandardizationReport};
use gramfreq::Weights;
use std::hash::{BuildHasher, Hasher};
use std::path::Path;

pub const MEMORY_VAR: &str = "GRAMFREQ_TABLE_MEMORY";

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

pub fn load_spec(path: &Path) -> Result<(Specification, StandardizationReport), Failure> {
    let parsed = parse_spec(&read(path)?)?;
    Ok(standardize(&parsed)?)
}

/// Declared weights, then the weights file, then `-w` flags.
pub fn weights(spec: &Specification, args: &WeightArgs) -> Result<Weights, Failure> {
    let mut w = Weights::declared(spec);
    if let Some(path) = &args.weights_file {
        w.apply_file(spec, &read(path)?)?;
    }
    for a in &args.weights {
        w.set_from_text(spec, a)?;
    }
    Ok(w)
}

/// Declared targets with `-t` flags replacing or extending them.
pub fn targets(spec: &Specification, args: &TargetArgs) -> Result<Vec<(AtomId, f64)>, Failure> {
    let mut out: Vec<(AtomId, f64)> = spec.declared_targets().to_vec();
    for t in &args.targets {
        let (name, value) = t
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("target `{t}` is not atom=value")))?;
        let atom = spec.atom_by_name(name.trim())?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("target `{t}` has no numeric value")))?;
        match out.iter_mut().find(|e| e.0 == atom) {
            Some(e) => e.1 = value,
            None => out.push((atom, value)),
        }
    }
    if out.is_empty() {
        return Err(Failure::Usage("no targets: declare them in the grammar or pass -t".into()));
    }
    Ok(out)
}

pub fn resolve_atoms(spec: &Specification, names: &[String]) -> Result<Vec<AtomId>, Failure> {
    Ok(names.iter().map(|n| spec.atom_by_name(n.trim())).collect::<Result<_, _>>()?)
}

/// Memory cap in bytes from the environment.
pub fn memory_budget() -> Result<Option<u128>, Failure> {
    match std::env::var(MEMORY_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("{MEMORY_VAR}={v} is not a byte count"))),
        Err(_) => Ok(None),
    }
}

pub fn seed_or_fresh(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let mut h = std::collections::hash_map::RandomState::new().build_hasher();
        h.write_u128(
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_nanos())
                .unwrap_or(0),
        );
        h.finish()
    })
}

/// Count table up to `n`, reusing a cached table of at least that size
/// when `cache` is given and storing freshly built ones there.
pub fn count_table(
    spec: &Specification,
    weights: &Weights,
    n: usize,
    cache: Option<&Path>,
) -> Result<CountTable, Failure> {
    let budget = memory_budget()?;
    let Some(dir) = cache else {
        return Ok(build_count_table_with_budget(spec, weights, n, budget)?);
    };
    let file = dir.join(format!("{}.gfct", gramfreq::counting::table_fingerprint(spec, weights)));
    if let Ok(bytes) = std::fs::read(&file) {
        if let Ok(table) = CountTable::from_cache(spec, weights, &bytes) {
            if table.n_max() >= n {
                return Ok(table);
            }
        }
    }
    let table = build_count_table_with_budget(spec, weights, n, budget)?;
    std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    std::fs::write(&file, table.encode_cache()).map_err(|e| Failure::Io(format!("{}: {e}", file.display())))?;
    Ok(table)
}
