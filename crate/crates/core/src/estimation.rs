//! Simulation, empirical distributions, plug-in estimates and the
//! percentile bootstrap.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::generate::attempt_rng;
use crate::identification::{Formula, ObsDistribution};
use crate::scm::{FiniteScm, Intervention, Role, Variable};
use crate::table::{Axis, JointTable};

/// Rows of support indices over columns with roles C, A, L, M and Y.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Variable>,
    rows: Vec<Vec<usize>>,
    weights: Option<Vec<f64>>,
}

const ROLES: [Role; 5] = [
    Role::Baseline,
    Role::Exposure,
    Role::Intermediate,
    Role::Mediator,
    Role::Outcome,
];

impl Dataset {
    pub fn new(columns: Vec<Variable>, rows: Vec<Vec<usize>>) -> Result<Self> {
        Dataset::build(columns, rows, None)
    }

    /// Rows carrying non-negative weights, e.g. one row per cell of an
    /// exact distribution.
    pub fn weighted(columns: Vec<Variable>, rows: Vec<Vec<usize>>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != rows.len() {
            return Err(Error::InvalidArgument(format!(
                "{} weights for {} rows",
                weights.len(),
                rows.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidArgument("weights must be finite and non-negative".into()));
        }
        if weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::EmptyDataset);
        }
        Dataset::build(columns, rows, Some(weights))
    }

    fn build(columns: Vec<Variable>, rows: Vec<Vec<usize>>, weights: Option<Vec<f64>>) -> Result<Self> {
        for (i, c) in columns.iter().enumerate() {
            if !ROLES.contains(&c.role) {
                return Err(Error::InvalidArgument(format!(
                    "column `{}` has role {}; datasets hold C, A, L, M and Y only",
                    c.name,
                    c.role.tag()
                )));
            }
            if columns[..i].iter().any(|d| d.role == c.role) {
                return Err(Error::InvalidArgument(format!("role {} appears twice", c.role.tag())));
            }
            if columns[..i].iter().any(|d| d.name == c.name) {
                return Err(Error::DuplicateVariable(c.name.clone()));
            }
            if c.labels.is_empty() {
                return Err(Error::InvalidArgument(format!("column `{}` has an empty support", c.name)));
            }
        }
        for r in [Role::Exposure, Role::Mediator, Role::Outcome] {
            if !columns.iter().any(|c| c.role == r) {
                return Err(Error::InvalidArgument(format!("dataset has no {} column", r.tag())));
            }
        }
        if let Some(a) = columns.iter().find(|c| c.role == Role::Exposure) {
            if a.size() != 2 {
                return Err(Error::InvalidArgument("exposure must be binary".into()));
            }
        }
        for row in &rows {
            if row.len() != columns.len() {
                return Err(Error::InvalidArgument(format!(
                    "row has {} values for {} columns",
                    row.len(),
                    columns.len()
                )));
            }
            for (c, &v) in columns.iter().zip(row) {
                if v >= c.size() {
                    return Err(Error::OutOfSupport {
                        column: c.name.clone(),
                        value: v.to_string(),
                    });
                }
            }
        }
        Ok(Dataset {
            columns,
            rows,
            weights,
        })
    }

    pub fn columns(&self) -> &[Variable] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    fn column(&self, role: Role) -> Option<&Variable> {
        self.columns.iter().find(|c| c.role == role)
    }

    /// Every cell of the exact observational law as one weighted row.
    pub fn from_distribution(scm: &FiniteScm) -> Result<Self> {
        let t = crate::counterfactual::observational_joint(scm, crate::counterfactual::CELL_CAP)?;
        let columns = dataset_columns(scm);
        let pick: Vec<usize> = columns
            .iter()
            .map(|c| t.axis_index(&c.name).expect("observed axis"))
            .collect();
        let mut rows = Vec::new();
        let mut weights = Vec::new();
        for (k, &p) in t.probs.iter().enumerate() {
            if p > 0.0 {
                let cell = t.cell(k);
                rows.push(pick.iter().map(|&i| cell[i]).collect());
                weights.push(p);
            }
        }
        Dataset::weighted(columns, rows, weights)
    }
}

fn dataset_columns(scm: &FiniteScm) -> Vec<Variable> {
    ROLES
        .iter()
        .filter_map(|r| scm.nodes().iter().find(|v| v.role == *r).cloned())
        .collect()
}

/// `n` independent draws from the model's observational law.
pub fn simulate(scm: &FiniteScm, n: usize, seed: u64) -> Result<Dataset> {
    scm.ensure_valid()?;
    let columns = dataset_columns(scm);
    let idx: Vec<usize> = columns
        .iter()
        .map(|c| scm.node_index(&c.name).expect("node"))
        .collect();
    let mut configs: Vec<&[usize]> = Vec::new();
    let mut cdf: Vec<f64> = Vec::new();
    let mut acc = 0.0;
    for (cfg, p) in scm.configurations() {
        acc += p;
        configs.push(cfg);
        cdf.push(acc);
    }
    let worlds: Vec<Vec<usize>> = configs
        .iter()
        .map(|cfg| {
            let w = scm.evaluate_world(cfg, &Intervention::new())?;
            Ok(idx.iter().map(|&i| w.0[i]).collect())
        })
        .collect::<Result<_>>()?;
    let mut rng = attempt_rng(seed, 0);
    let rows = (0..n)
        .map(|_| {
            let u: f64 = rng.gen::<f64>() * acc;
            let k = cdf.partition_point(|&c| c <= u).min(worlds.len() - 1);
            worlds[k].clone()
        })
        .collect();
    Dataset::new(columns, rows)
}

/// Cell indices of every row in the flattened (C, A, L, M, Y) layout, and
/// a template distribution carrying the dataset's axes.
fn cells(ds: &Dataset) -> Result<(Vec<usize>, ObsDistribution)> {
    if ds.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    let axes: Vec<Axis> = ds
        .columns
        .iter()
        .map(|c| Axis {
            name: c.name.clone(),
            labels: c.labels.clone(),
            values: c.values.clone(),
        })
        .collect();
    let mut t = JointTable::zeros(axes);
    t.probs[0] = 1.0;
    let name = |r: Role| ds.column(r).map(|c| c.name.as_str());
    let template = ObsDistribution::from_table(
        &t,
        name(Role::Baseline),
        name(Role::Exposure).expect("exposure"),
        name(Role::Intermediate),
        name(Role::Mediator).expect("mediator"),
        name(Role::Outcome).expect("outcome"),
    )?;
    let dims = template.dims();
    let pos: Vec<Option<usize>> = ROLES
        .iter()
        .map(|r| ds.columns.iter().position(|c| c.role == *r))
        .collect();
    let idx = ds
        .rows
        .iter()
        .map(|row| {
            (0..5).fold(0, |k, s| k * dims[s] + pos[s].map_or(0, |j| row[j]))
        })
        .collect();
    Ok((idx, template))
}

/// Weighted cell frequencies. Supports come from the schema, so
/// unobserved cells stay at zero.
pub fn empirical_joint(ds: &Dataset) -> Result<ObsDistribution> {
    let (idx, template) = cells(ds)?;
    let mut probs = vec![0.0; template.probs().len()];
    match &ds.weights {
        Some(w) => {
            for (&k, &wi) in idx.iter().zip(w) {
                probs[k] += wi;
            }
        }
        None => {
            for &k in &idx {
                probs[k] += 1.0;
            }
        }
    }
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    Ok(template.with_probs(probs))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PluginEstimate {
    pub formula: Formula,
    pub m: Option<usize>,
    /// NaN when a conditioning cell was empty.
    pub point: f64,
    pub n: usize,
    pub positivity_gaps: Vec<String>,
}

fn evaluate(formula: Formula, dist: &ObsDistribution, m: Option<usize>) -> Result<core::result::Result<f64, String>> {
    match formula.evaluate(dist, m) {
        Ok(v) => Ok(Ok(v)),
        Err(Error::Positivity(cell)) => Ok(Err(cell)),
        Err(e) => Err(e),
    }
}

/// Evaluates `formula` on the empirical distribution. An empty
/// conditioning cell is reported, never smoothed.
pub fn plugin(ds: &Dataset, formula: Formula, m: Option<usize>) -> Result<PluginEstimate> {
    let dist = empirical_joint(ds)?;
    let (point, positivity_gaps) = match evaluate(formula, &dist, m)? {
        Ok(v) => (v, Vec::new()),
        Err(cell) => (f64::NAN, vec![cell]),
    };
    Ok(PluginEstimate {
        formula,
        m,
        point,
        n: ds.n(),
        positivity_gaps,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapInterval {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub replicates: usize,
    pub dropped: usize,
    pub seed: u64,
    pub method: &'static str,
    /// Set when more than 1% of replicates were dropped.
    pub warning: Option<String>,
}

/// Precomputed state shared by all replicates of one bootstrap.
#[derive(Debug, Clone)]
pub struct Resampler {
    idx: Vec<usize>,
    cdf: Option<Vec<f64>>,
    template: ObsDistribution,
    formula: Formula,
    m: Option<usize>,
}

impl Resampler {
    pub fn new(ds: &Dataset, formula: Formula, m: Option<usize>) -> Result<Self> {
        let (idx, template) = cells(ds)?;
        let cdf = ds.weights.as_ref().map(|w| {
            let mut acc = 0.0;
            w.iter()
                .map(|x| {
                    acc += x;
                    acc
                })
                .collect()
        });
        Ok(Resampler {
            idx,
            cdf,
            template,
            formula,
            m,
        })
    }

    /// Replicate `r`: the estimate on a with-replacement resample of the
    /// rows, or `None` when it hits a positivity gap.
    pub fn replicate(&self, seed: u64, r: u64) -> Result<Option<f64>> {
        let mut rng = attempt_rng(seed, r);
        let n = self.idx.len();
        let mut probs = vec![0.0; self.template.probs().len()];
        match &self.cdf {
            None => {
                for _ in 0..n {
                    probs[self.idx[rng.gen_range(0..n)]] += 1.0;
                }
            }
            Some(cdf) => {
                let total = cdf[n - 1];
                for _ in 0..n {
                    let u = rng.gen::<f64>() * total;
                    let j = cdf.partition_point(|&c| c <= u).min(n - 1);
                    probs[self.idx[j]] += 1.0;
                }
            }
        }
        for p in &mut probs {
            *p /= n as f64;
        }
        Ok(evaluate(self.formula, &self.template.with_probs(probs), self.m)?.ok())
    }
}

/// Type-7 sample quantile of sorted values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn check_bootstrap_args(b: usize, level: f64) -> Result<()> {
    if b < 100 {
        return Err(Error::InvalidArgument("bootstrap needs at least 100 replicates".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument("level must lie strictly between 0 and 1".into()));
    }
    Ok(())
}

/// Percentile interval from replicate outcomes in any order.
pub fn summarize(
    point: f64,
    outcomes: &[Option<f64>],
    level: f64,
    seed: u64,
) -> Result<BootstrapInterval> {
    let b = outcomes.len();
    check_bootstrap_args(b, level)?;
    let mut kept: Vec<f64> = outcomes.iter().flatten().copied().collect();
    let dropped = b - kept.len();
    if dropped * 2 > b {
        return Err(Error::BootstrapUnstable { dropped, total: b });
    }
    kept.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    let warning = (dropped * 100 > b).then(|| {
        format!(
            "{} of {} replicates dropped for positivity gaps",
            dropped, b
        )
    });
    Ok(BootstrapInterval {
        point,
        lower: quantile(&kept, alpha),
        upper: quantile(&kept, 1.0 - alpha),
        level,
        replicates: b,
        dropped,
        seed,
        method: "percentile",
        warning,
    })
}

/// Point estimate for a bootstrap; a positivity gap in the full data is an
/// error.
pub fn bootstrap_point(ds: &Dataset, formula: Formula, m: Option<usize>) -> Result<f64> {
    let est = plugin(ds, formula, m)?;
    match est.positivity_gaps.first() {
        Some(cell) => Err(Error::Positivity(cell.clone())),
        None => Ok(est.point),
    }
}

/// Sequential percentile bootstrap with `b` replicates.
pub fn bootstrap(
    ds: &Dataset,
    formula: Formula,
    m: Option<usize>,
    b: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapInterval> {
    check_bootstrap_args(b, level)?;
    let point = bootstrap_point(ds, formula, m)?;
    let rs = Resampler::new(ds, formula, m)?;
    let outcomes: Vec<Option<f64>> = (0..b as u64)
        .map(|r| rs.replicate(seed, r))
        .collect::<Result<_>>()?;
    summarize(point, &outcomes, level, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::identification::{identify, ModelClass};

    #[test]
    fn simulation_is_deterministic_and_close() {
        let scm = fixtures::noisy_chain();
        let a = simulate(&scm, 100_000, 4).unwrap();
        assert_eq!(a, simulate(&scm, 100_000, 4).unwrap());
        let hits = a.rows().iter().filter(|r| r == &&vec![1, 1, 1]).count() as f64;
        let p = hits / 1e5;
        let se = libm::sqrt(0.405 * 0.595 / 1e5);
        assert!((p - 0.405).abs() <= 3.0 * se, "{}", p);
        assert_eq!(simulate(&scm, 1, 0).unwrap().n(), 1);
    }

    #[test]
    fn weighted_cells_reproduce_exact_formula() {
        for scm in [fixtures::noisy_chain(), fixtures::null_m(), fixtures::l_chain()] {
            let ds = Dataset::from_distribution(&scm).unwrap();
            let exact = ObsDistribution::from_scm(&scm).unwrap();
            let class = if scm.intermediate().is_some() {
                ModelClass::FfrcistgL
            } else {
                ModelClass::NpsemIe
            };
            let effect = if scm.intermediate().is_some() {
                crate::estimands::Effect::Iie
            } else {
                crate::estimands::Effect::Nie
            };
            let want = identify(&exact, effect, class, None).unwrap();
            let got = plugin(&ds, want.formula, None).unwrap();
            assert!((got.point - want.value).abs() <= 1e-9);
        }
    }

    #[test]
    fn gaps_are_reported() {
        let scm = fixtures::deterministic_chain();
        let ds = simulate(&scm, 500, 1).unwrap();
        let est = plugin(&ds, Formula::MediationIndirect, None).unwrap();
        assert!(est.point.is_nan());
        assert_eq!(est.positivity_gaps.len(), 1);
        assert!(est.positivity_gaps[0].contains("A=1"), "{:?}", est.positivity_gaps);
    }

    #[test]
    fn empty_and_out_of_support() {
        let cols = vec![
            Variable::new("A", Role::Exposure, vec!["0".into(), "1".into()]),
            Variable::new("M", Role::Mediator, vec!["0".into(), "1".into()]),
            Variable::new("Y", Role::Outcome, vec!["0".into(), "1".into()]),
        ];
        let empty = Dataset::new(cols.clone(), vec![]).unwrap();
        assert_eq!(empirical_joint(&empty), Err(Error::EmptyDataset));
        assert!(matches!(
            Dataset::new(cols.clone(), vec![vec![0, 2, 0]]),
            Err(Error::OutOfSupport { .. })
        ));
        let one = Dataset::new(cols, vec![vec![1, 0, 1]]).unwrap();
        let d = empirical_joint(&one).unwrap();
        assert_eq!(d.p(0, 1, 0, 0, 1), 1.0);
    }

    #[test]
    fn bootstrap_is_deterministic_and_degenerate_on_constant_rows() {
        let scm = fixtures::noisy_chain();
        let ds = simulate(&scm, 2000, 8).unwrap();
        let a = bootstrap(&ds, Formula::MediationIndirect, None, 200, 0.95, 3).unwrap();
        assert_eq!(a, bootstrap(&ds, Formula::MediationIndirect, None, 200, 0.95, 3).unwrap());
        assert!(a.lower <= a.point && a.point <= a.upper);

        assert!(matches!(
            bootstrap(&ds, Formula::MediationIndirect, None, 99, 0.95, 3),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn repeated_rows_give_zero_width() {
        let cols = vec![
            Variable::new("A", Role::Exposure, vec!["0".into(), "1".into()]),
            Variable::new("M", Role::Mediator, vec!["0".into(), "1".into()]),
            Variable::new("Y", Role::Outcome, vec!["0".into(), "1".into()]),
        ];
        let rows: Vec<Vec<usize>> = (0..100).map(|i| vec![i % 2; 3]).collect();
        let ds = Dataset::new(cols.clone(), rows).unwrap();
        let iv = bootstrap(&ds, Formula::MediationTotal, None, 100, 0.95, 0).unwrap();
        assert_eq!((iv.lower, iv.point, iv.upper), (1.0, 1.0, 1.0));
        let ones = Dataset::new(cols, vec![vec![1, 1, 1]; 40]).unwrap();
        let err = bootstrap(&ones, Formula::MediationIndirect, None, 100, 0.95, 0);
        assert!(matches!(err, Err(Error::Positivity(_))));
    }

    #[test]
    fn mostly_dropped_replicates_are_unstable() {
        let mut outcomes = vec![None; 60];
        outcomes.extend(vec![Some(0.1); 40]);
        assert_eq!(
            summarize(0.1, &outcomes, 0.95, 0),
            Err(Error::BootstrapUnstable { dropped: 60, total: 100 })
        );
        let mut few = vec![None; 2];
        few.extend(vec![Some(0.1); 98]);
        assert!(summarize(0.1, &few, 0.95, 0).unwrap().warning.is_some());
    }
}
