//! Rayon drivers for the core's per-attempt, per-item and per-replicate
//! functions. Results equal the sequential ones for any thread count.

use rayon::prelude::*;

use mediation_core::assumptions::AssumptionId;
use mediation_core::estimation::{bootstrap_point, summarize, BootstrapInterval, Dataset, Resampler};
use mediation_core::identification::{Formula, Rule};
use mediation_core::search::{
    aggregate, battery_item, outside_witness, sweep_item, try_attempt, Counterexample, Property,
    SweepReport, Target,
};
use mediation_core::{Error as CoreError, EPS_NUM};

use crate::error::Result;

/// Runs `f` on a pool with `threads` workers, or the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

/// Sizes the global pool; a no-op once the pool has started.
pub fn configure_global(threads: usize) {
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build_global();
}

const CHUNK: u64 = 512;

/// Parallel counterexample search; returns the lowest successful attempt.
pub fn find_counterexample(
    target: Target,
    extra_required: &[AssumptionId],
    budget: u64,
    seed: u64,
    threshold: f64,
) -> Result<Option<Counterexample>> {
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(CoreError::InvalidArgument("threshold must be positive".into()).into());
    }
    let mut start = 0;
    while start < budget {
        let end = (start + CHUNK).min(budget);
        let found: Vec<Option<Counterexample>> = (start..end)
            .into_par_iter()
            .map(|i| try_attempt(target, extra_required, seed, i, threshold))
            .collect::<mediation_core::Result<_>>()?;
        if let Some(c) = found.into_iter().flatten().next() {
            return Ok(Some(c));
        }
        start = end;
    }
    Ok(None)
}

pub fn property_sweep(property: Property, n: u64, seed: u64) -> Result<SweepReport> {
    let items = (0..n)
        .into_par_iter()
        .map(|i| sweep_item(property, seed, i))
        .collect::<mediation_core::Result<Vec<_>>>()?;
    let mut report = aggregate(Some(property), &items, EPS_NUM);
    report.outside_witness = outside_witness(property, seed, 1000, 0.01)?;
    Ok(report)
}

/// Identification battery for one rule: `n` certified premise models.
pub fn battery(rule: &Rule, n: u64, seed: u64) -> Result<SweepReport> {
    let items = (0..n)
        .into_par_iter()
        .map(|i| battery_item(rule, seed, i))
        .collect::<mediation_core::Result<Vec<_>>>()?;
    Ok(aggregate(None, &items, EPS_NUM))
}

pub fn bootstrap(
    ds: &Dataset,
    formula: Formula,
    m: Option<usize>,
    b: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapInterval> {
    if b < 100 {
        return Err(CoreError::InvalidArgument("bootstrap needs at least 100 replicates".into()).into());
    }
    let point = bootstrap_point(ds, formula, m)?;
    let rs = Resampler::new(ds, formula, m)?;
    let outcomes = (0..b as u64)
        .into_par_iter()
        .map(|r| rs.replicate(seed, r))
        .collect::<mediation_core::Result<Vec<_>>>()?;
    Ok(summarize(point, &outcomes, level, seed)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use mediation_core::fixtures;

    #[test]
    fn parallel_equals_sequential() {
        let seq = mediation_core::search::find_counterexample(Target::SeparableNull, &[], 300, 5, 0.01).unwrap();
        for threads in [1, 3] {
            let par = with_threads(Some(threads), || {
                find_counterexample(Target::SeparableNull, &[], 300, 5, 0.01).unwrap()
            });
            assert_eq!(par, seq);
        }
        let ds = mediation_core::estimation::simulate(&fixtures::noisy_chain(), 3000, 2).unwrap();
        let a = mediation_core::estimation::bootstrap(&ds, Formula::MediationIndirect, None, 150, 0.9, 4).unwrap();
        let b = with_threads(Some(2), || bootstrap(&ds, Formula::MediationIndirect, None, 150, 0.9, 4).unwrap());
        assert_eq!(a, b);
        let s = mediation_core::search::property_sweep(Property::Telescoping, 40, 1).unwrap();
        assert_eq!(property_sweep(Property::Telescoping, 40, 1).unwrap(), s);
    }
}
