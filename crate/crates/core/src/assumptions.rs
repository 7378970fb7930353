//! Numerical checks of independence, equality and isolation assumptions,
//! and model-class membership.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::counterfactual::{compile, eval, Cf, Compiled};
use crate::error::{Error, Result};
use crate::identification::ModelClass;
use crate::scm::{ComponentKind, FiniteScm, ParentRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AssumptionId {
    A1,
    A2,
    A3,
    A4,
    A5,
    A6,
    A7,
    A8,
    A9,
    A10,
    SA1,
    SA2,
    SA3,
    /// Every d-separation of the SWIG for the L, M template with A and M
    /// split, checked numerically.
    SwigL,
    MedNull,
    /// Independent errors, each consumed by a single structural equation.
    Factorization,
    /// Independent errors with the L and M equations allowed to share one.
    FactorizationLm,
}

impl AssumptionId {
    pub const ALL: &'static [AssumptionId] = &[
        AssumptionId::A1,
        AssumptionId::A2,
        AssumptionId::A3,
        AssumptionId::A4,
        AssumptionId::A5,
        AssumptionId::A6,
        AssumptionId::A7,
        AssumptionId::A8,
        AssumptionId::A9,
        AssumptionId::A10,
        AssumptionId::SA1,
        AssumptionId::SA2,
        AssumptionId::SA3,
        AssumptionId::SwigL,
        AssumptionId::MedNull,
        AssumptionId::Factorization,
        AssumptionId::FactorizationLm,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            AssumptionId::A1 => "A1",
            AssumptionId::A2 => "A2",
            AssumptionId::A3 => "A3",
            AssumptionId::A4 => "A4",
            AssumptionId::A5 => "A5",
            AssumptionId::A6 => "A6",
            AssumptionId::A7 => "A7",
            AssumptionId::A8 => "A8",
            AssumptionId::A9 => "A9",
            AssumptionId::A10 => "A10",
            AssumptionId::SA1 => "SA1",
            AssumptionId::SA2 => "SA2",
            AssumptionId::SA3 => "SA3",
            AssumptionId::SwigL => "SWIG-L",
            AssumptionId::MedNull => "MedNull",
            AssumptionId::Factorization => "NPSEM-IE-factorization",
            AssumptionId::FactorizationLm => "NPSEM-IE-LM-factorization",
        }
    }

    pub fn parse(s: &str) -> Option<AssumptionId> {
        AssumptionId::ALL.iter().copied().find(|a| a.tag() == s)
    }

    /// Whether the check quantifies over individuals rather than laws.
    pub fn individual(self) -> bool {
        matches!(
            self,
            AssumptionId::A6
                | AssumptionId::A7
                | AssumptionId::MedNull
                | AssumptionId::Factorization
                | AssumptionId::FactorizationLm
        )
    }
}

impl fmt::Display for AssumptionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Population,
    Individual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub id: AssumptionId,
    pub holds: bool,
    pub max_violation: f64,
    /// The worst cell, or an empty string when nothing was violated.
    pub witness: String,
    pub scope: Scope,
}

/// Default tolerance for exact checks.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Default)]
struct Worst {
    value: f64,
    witness: String,
}

impl Worst {
    fn offer(&mut self, value: f64, witness: impl FnOnce() -> String) {
        if value > self.value {
            self.value = value;
            self.witness = witness();
        }
    }

    fn merge(&mut self, other: Worst) {
        if other.value > self.value {
            *self = other;
        }
    }
}

fn name(scm: &FiniteScm, i: usize) -> String {
    scm.node(i).name.clone()
}

/// Exposure settings: plain `A=a`, or every assignment of the components
/// when the exposure is separable.
fn settings(scm: &FiniteScm) -> Vec<Vec<(String, usize)>> {
    let comps = scm.components();
    if comps.is_empty() {
        let a = name(scm, scm.exposure());
        return (0..2).map(|v| vec![(a.clone(), v)]).collect();
    }
    (0..1usize << comps.len())
        .map(|mask| {
            comps
                .iter()
                .enumerate()
                .map(|(k, (i, _))| (name(scm, *i), (mask >> k) & 1))
                .collect()
        })
        .collect()
}

fn under(var: &str, setting: &[(String, usize)]) -> Cf {
    let mut cf = Cf::new(var);
    for (t, v) in setting {
        cf = cf.set(t, *v);
    }
    cf
}

/// Evaluates several counterfactual columns jointly and measures
/// `max |P(x,y|z) - P(x|z)P(y|z)|` over positive strata of the z columns.
/// `restrict` limits strata to given values of some z columns.
struct Columns<'a> {
    scm: &'a FiniteScm,
    cols: Vec<(String, Compiled, Vec<String>)>,
}

impl<'a> Columns<'a> {
    fn new(scm: &'a FiniteScm) -> Self {
        Columns {
            scm,
            cols: Vec::new(),
        }
    }

    fn push(&mut self, cf: &Cf) -> Result<usize> {
        let c = compile(self.scm, cf)?;
        let labels = self.scm.node(c.var).labels.clone();
        self.cols.push((cf.to_string(), c, labels));
        Ok(self.cols.len() - 1)
    }

    fn independence(&self, xs: &[usize], ys: &[usize], zs: &[usize], restrict: &[(usize, usize)]) -> Worst {
        let size = |set: &[usize]| set.iter().map(|&k| self.cols[k].2.len()).product::<usize>();
        let (sx, sy, sz) = (size(xs), size(ys), size(zs));
        let mut pxyz = vec![0.0; sx * sy * sz];
        let mut scratch = Vec::new();
        let mut vals = vec![0usize; self.cols.len()];
        let key = |set: &[usize], vals: &[usize]| {
            set.iter()
                .fold(0usize, |acc, &k| acc * self.cols[k].2.len() + vals[k])
        };
        for (cfg, p) in self.scm.configurations() {
            for (k, col) in self.cols.iter().enumerate() {
                vals[k] = eval(self.scm, &col.1, cfg, &mut scratch);
            }
            if restrict.iter().any(|&(k, v)| vals[k] != v) {
                continue;
            }
            pxyz[(key(zs, &vals) * sx + key(xs, &vals)) * sy + key(ys, &vals)] += p;
        }
        let decode = |set: &[usize], mut k: usize| {
            let mut out = vec![0; set.len()];
            for j in (0..set.len()).rev() {
                let n = self.cols[set[j]].2.len();
                out[j] = k % n;
                k /= n;
            }
            out
        };
        let render = |set: &[usize], k: usize| {
            let v = decode(set, k);
            set.iter()
                .zip(v)
                .map(|(&c, x)| format!("{}={}", self.cols[c].0, self.cols[c].2[x]))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let mut worst = Worst::default();
        for z in 0..sz {
            let block = &pxyz[z * sx * sy..(z + 1) * sx * sy];
            let pz: f64 = block.iter().sum();
            if pz <= 0.0 {
                continue;
            }
            for x in 0..sx {
                let px: f64 = block[x * sy..(x + 1) * sy].iter().sum::<f64>() / pz;
                for y in 0..sy {
                    let py: f64 = (0..sx).map(|xx| block[xx * sy + y]).sum::<f64>() / pz;
                    let pxy = block[x * sy + y] / pz;
                    worst.offer((pxy - px * py).abs(), || {
                        let cond = if zs.is_empty() {
                            String::new()
                        } else {
                            format!(" | {}", render(zs, z))
                        };
                        format!(
                            "P({}, {}{}) = {:.6} vs {:.6}",
                            render(xs, x),
                            render(ys, y),
                            cond,
                            pxy,
                            px * py
                        )
                    });
                }
            }
        }
        worst
    }
}

fn baseline_col(cols: &mut Columns, scm: &FiniteScm) -> Result<Vec<usize>> {
    Ok(match scm.baseline() {
        Some(c) => vec![cols.push(&Cf::new(&name(scm, c)))?],
        None => Vec::new(),
    })
}

fn need_l(scm: &FiniteScm) -> Result<usize> {
    scm.intermediate().ok_or_else(|| {
        Error::MissingStructure("assumption requires an intermediate confounder L".into())
    })
}

fn need_separable(scm: &FiniteScm) -> Result<()> {
    if scm.is_separable() {
        Ok(())
    } else {
        Err(Error::MissingStructure(
            "assumption requires a separable exposure".into(),
        ))
    }
}

fn need_two_components(scm: &FiniteScm) -> Result<(usize, usize)> {
    need_separable(scm)?;
    match (
        scm.component(ComponentKind::Mediator),
        scm.component(ComponentKind::Outcome),
        scm.component(ComponentKind::Intermediate),
    ) {
        (Some(am), Some(ay), None) => Ok((am, ay)),
        _ => Err(Error::MissingStructure(
            "isolation assumptions are defined for the two-component exposure".into(),
        )),
    }
}

/// M(s) independent of A given C, for every exposure setting s.
fn check_a1(scm: &FiniteScm) -> Result<Worst> {
    let (a, m) = (name(scm, scm.exposure()), name(scm, scm.mediator()));
    let mut worst = Worst::default();
    for s in settings(scm) {
        let mut cols = Columns::new(scm);
        let z = baseline_col(&mut cols, scm)?;
        let x = cols.push(&under(&m, &s))?;
        let y = cols.push(&Cf::new(&a))?;
        worst.merge(cols.independence(&[x], &[y], &z, &[]));
    }
    Ok(worst)
}

/// Y(s, m) independent of A given C.
fn check_a2(scm: &FiniteScm) -> Result<Worst> {
    let (a, m, yn) = (
        name(scm, scm.exposure()),
        name(scm, scm.mediator()),
        name(scm, scm.outcome()),
    );
    let mut worst = Worst::default();
    for s in settings(scm) {
        for mv in 0..scm.node(scm.mediator()).size() {
            let mut cols = Columns::new(scm);
            let z = baseline_col(&mut cols, scm)?;
            let x = cols.push(&under(&yn, &s).set(&m, mv))?;
            let y = cols.push(&Cf::new(&a))?;
            worst.merge(cols.independence(&[x], &[y], &z, &[]));
        }
    }
    Ok(worst)
}

/// Y(s, m) independent of M(s) given A and C.
fn check_a3(scm: &FiniteScm) -> Result<Worst> {
    let (a, m, yn) = (
        name(scm, scm.exposure()),
        name(scm, scm.mediator()),
        name(scm, scm.outcome()),
    );
    let mut worst = Worst::default();
    for s in settings(scm) {
        for mv in 0..scm.node(scm.mediator()).size() {
            let mut cols = Columns::new(scm);
            let mut z = baseline_col(&mut cols, scm)?;
            z.push(cols.push(&Cf::new(&a))?);
            let x = cols.push(&under(&yn, &s).set(&m, mv))?;
            let y = cols.push(&under(&m, &s))?;
            worst.merge(cols.independence(&[x], &[y], &z, &[]));
        }
    }
    Ok(worst)
}

/// Y(a', m') independent of M(a'') given C, across worlds.
fn check_a4(scm: &FiniteScm) -> Result<Worst> {
    let (a, m, yn) = (
        name(scm, scm.exposure()),
        name(scm, scm.mediator()),
        name(scm, scm.outcome()),
    );
    let mut worst = Worst::default();
    for a1 in 0..2 {
        for a2 in 0..2 {
            for mv in 0..scm.node(scm.mediator()).size() {
                let mut cols = Columns::new(scm);
                let z = baseline_col(&mut cols, scm)?;
                let x = cols.push(&Cf::new(&yn).set(&a, a1).set(&m, mv))?;
                let y = cols.push(&Cf::new(&m).set(&a, a2))?;
                worst.merge(cols.independence(&[x], &[y], &z, &[]));
            }
        }
    }
    Ok(worst)
}

/// Y(a', l', m') independent of M within strata A=a', L=l', C.
fn check_a10(scm: &FiniteScm) -> Result<Worst> {
    let l = need_l(scm)?;
    let (a, ln, m, yn) = (
        name(scm, scm.exposure()),
        name(scm, l),
        name(scm, scm.mediator()),
        name(scm, scm.outcome()),
    );
    let mut worst = Worst::default();
    for av in 0..2 {
        for lv in 0..scm.node(l).size() {
            for mv in 0..scm.node(scm.mediator()).size() {
                let mut cols = Columns::new(scm);
                let mut z = baseline_col(&mut cols, scm)?;
                let za = cols.push(&Cf::new(&a))?;
                let zl = cols.push(&Cf::new(&ln))?;
                z.push(za);
                z.push(zl);
                let x = cols.push(&Cf::new(&yn).set(&a, av).set(&ln, lv).set(&m, mv))?;
                let y = cols.push(&Cf::new(&m))?;
                worst.merge(cols.independence(&[x], &[y], &z, &[(za, av), (zl, lv)]));
            }
        }
    }
    Ok(worst)
}

/// A independent of one counterfactual family given C: L(s) for `which`
/// = 1, M(s, l') for 2, Y(s, l', m') for 3.
fn check_sa(scm: &FiniteScm, which: u8) -> Result<Worst> {
    let l = need_l(scm)?;
    let (a, ln, m, yn) = (
        name(scm, scm.exposure()),
        name(scm, l),
        name(scm, scm.mediator()),
        name(scm, scm.outcome()),
    );
    let nl = scm.node(l).size();
    let nm = scm.node(scm.mediator()).size();
    let mut targets = Vec::new();
    for s in settings(scm) {
        match which {
            1 => targets.push(under(&ln, &s)),
            2 => {
                for lv in 0..nl {
                    targets.push(under(&m, &s).set(&ln, lv));
                }
            }
            _ => {
                for lv in 0..nl {
                    for mv in 0..nm {
                        targets.push(under(&yn, &s).set(&ln, lv).set(&m, mv));
                    }
                }
            }
        }
    }
    let mut worst = Worst::default();
    for t in targets {
        let mut cols = Columns::new(scm);
        let z = baseline_col(&mut cols, scm)?;
        let x = cols.push(&t)?;
        let y = cols.push(&Cf::new(&a))?;
        worst.merge(cols.independence(&[x], &[y], &z, &[]));
    }
    Ok(worst)
}

/// Every d-separation of the SWIG obtained by splitting A and M in the
/// intermediate-confounder DAG, for every a' and m'.
fn check_swig_l(scm: &FiniteScm) -> Result<Worst> {
    use crate::graph::{structures, implied_independencies, swig_split, NodeKind, DEFAULT_POOL};
    let l = need_l(scm)?;
    let swig = swig_split(&structures::intermediate(), &["A", "M"])?;
    let statements = implied_independencies(&swig, DEFAULT_POOL);
    let role_name = |base: &str| -> Option<String> {
        match base {
            "C" => scm.baseline().map(|i| name(scm, i)),
            "A" => Some(name(scm, scm.exposure())),
            "L" => Some(name(scm, l)),
            "M" => Some(name(scm, scm.mediator())),
            "Y" => Some(name(scm, scm.outcome())),
            _ => None,
        }
    };
    let mut worst = Worst::default();
    for av in 0..2 {
        for mv in 0..scm.node(scm.mediator()).size() {
            let to_cf = |node: &str| -> Option<Cf> {
                let i = swig.index(node)?;
                let n = &swig.nodes[i];
                let mut cf = Cf::new(&role_name(&n.base)?);
                let fixed: Vec<&str> = swig
                    .nodes
                    .iter()
                    .filter(|f| f.kind == NodeKind::Fixed && n.label.contains(f.name.as_str()))
                    .map(|f| f.base.as_str())
                    .collect();
                for b in fixed {
                    let v = if b == "A" { av } else { mv };
                    cf = cf.set(&role_name(b)?, v);
                }
                Some(cf)
            };
            for st in &statements {
                let (x, y) = match (to_cf(&st.x), to_cf(&st.y)) {
                    (Some(x), Some(y)) => (x, y),
                    _ => continue,
                };
                let mut cols = Columns::new(scm);
                let xi = cols.push(&x)?;
                let yi = cols.push(&y)?;
                let mut z = Vec::new();
                for zn in &st.z {
                    if let Some(cf) = to_cf(zn) {
                        z.push(cols.push(&cf)?);
                    }
                }
                worst.merge(cols.independence(&[xi], &[yi], &z, &[]));
            }
        }
    }
    Ok(worst)
}

/// `max |E{Y(1,m') - Y(1,m'') - Y(0,m') + Y(0,m'') | M(0), C}|` over
/// strata of positive probability.
fn check_a5(scm: &FiniteScm) -> Result<Worst> {
    let (a, m, yn) = (
        name(scm, scm.exposure()),
        name(scm, scm.mediator()),
        name(scm, scm.outcome()),
    );
    let nm = scm.node(scm.mediator()).size();
    let nc = scm.baseline().map_or(1, |c| scm.node(c).size());
    let m0 = compile(scm, &Cf::new(&m).set(&a, 0))?;
    let c_col = match scm.baseline() {
        Some(c) => Some(compile(scm, &Cf::new(&name(scm, c)))?),
        None => None,
    };
    let mut ys = Vec::with_capacity(2 * nm);
    for av in 0..2 {
        for mv in 0..nm {
            ys.push(compile(scm, &Cf::new(&yn).set(&a, av).set(&m, mv))?);
        }
    }
    let yv = &scm.node(scm.outcome()).values;
    let mut pz = vec![0.0; nc * nm];
    let mut ey = vec![0.0; nc * nm * 2 * nm];
    let mut scratch = Vec::new();
    for (cfg, p) in scm.configurations() {
        let c = c_col.as_ref().map_or(0, |cc| eval(scm, cc, cfg, &mut scratch));
        let k = c * nm + eval(scm, &m0, cfg, &mut scratch);
        pz[k] += p;
        for (j, q) in ys.iter().enumerate() {
            ey[k * 2 * nm + j] += p * yv[eval(scm, q, cfg, &mut scratch)];
        }
    }
    let mut worst = Worst::default();
    for k in 0..nc * nm {
        if pz[k] <= 0.0 {
            continue;
        }
        let e = |av: usize, mv: usize| ey[k * 2 * nm + av * nm + mv] / pz[k];
        for m1 in 0..nm {
            for m2 in 0..nm {
                let v = e(1, m1) - e(1, m2) - e(0, m1) + e(0, m2);
                worst.offer(v.abs(), || {
                    format!(
                        "m'={}, m''={} | M(A=0)={}{}: interaction {:.6}",
                        m1,
                        m2,
                        k % nm,
                        if c_col.is_some() {
                            format!(", C={}", k / nm)
                        } else {
                            String::new()
                        },
                        v
                    )
                });
            }
        }
    }
    Ok(worst)
}

/// Pointwise invariance of `var` to one component with everything else
/// (the other component and `hold`) fixed.
fn check_isolation(
    scm: &FiniteScm,
    var: usize,
    vary: usize,
    fixed: usize,
    hold: Option<usize>,
) -> Result<Worst> {
    let (vn, varyn, fixedn) = (name(scm, var), name(scm, vary), name(scm, fixed));
    let holds: Vec<Option<usize>> = match hold {
        Some(h) => (0..scm.node(h).size()).map(Some).collect(),
        None => vec![None],
    };
    let values = &scm.node(var).values;
    let mut worst = Worst::default();
    let mut scratch = Vec::new();
    for f in 0..2 {
        for h in &holds {
            let mk = |v: usize| {
                let mut cf = Cf::new(&vn).set(&fixedn, f).set(&varyn, v);
                if let (Some(hn), Some(hv)) = (hold, h) {
                    cf = cf.set(&name(scm, hn), *hv);
                }
                cf
            };
            let (c0, c1) = (mk(0), mk(1));
            let (k0, k1) = (compile(scm, &c0)?, compile(scm, &c1)?);
            for (cfg, _) in scm.configurations() {
                let (v0, v1) = (eval(scm, &k0, cfg, &mut scratch), eval(scm, &k1, cfg, &mut scratch));
                worst.offer((values[v0] - values[v1]).abs(), || {
                    format!(
                        "{}: {}={} but {}={}",
                        scm.describe_config(cfg),
                        c0,
                        scm.node(var).labels[v0],
                        c1,
                        scm.node(var).labels[v1]
                    )
                });
            }
        }
    }
    Ok(worst)
}

fn check_a6(scm: &FiniteScm) -> Result<Worst> {
    let (am, ay) = need_two_components(scm)?;
    check_isolation(scm, scm.outcome(), am, ay, Some(scm.mediator()))
}

fn check_a7(scm: &FiniteScm) -> Result<Worst> {
    let (am, ay) = need_two_components(scm)?;
    check_isolation(scm, scm.mediator(), ay, am, None)
}

/// Components the structural function of `node` reads.
fn driving_component(scm: &FiniteScm, node: usize) -> Option<usize> {
    scm.components_consumed(node).first().copied()
}

fn retarget(scm: &FiniteScm, s: &[(String, usize)], from: usize) -> Vec<(String, usize)> {
    let from_name = name(scm, from);
    let v = s
        .iter()
        .find(|(n, _)| *n == from_name)
        .map(|(_, v)| *v)
        .unwrap_or(0);
    s.iter().map(|(n, _)| (n.clone(), v)).collect()
}

/// Conditional comparison used by the dismissible-component checks: for
/// each stratum of `cond` columns, compares `E{target | cond}` (or the
/// full conditional law of `target` when `law` is set) between two
/// column groups.
fn compare_conditionals(
    scm: &FiniteScm,
    left: (&Cf, &[Cf]),
    right: (&Cf, &[Cf]),
    law: bool,
) -> Result<Worst> {
    let mut cols = Columns::new(scm);
    let base = baseline_col(&mut cols, scm)?;
    let lt = cols.push(left.0)?;
    let lc: Vec<usize> = left.1.iter().map(|c| cols.push(c)).collect::<Result<_>>()?;
    let rt = cols.push(right.0)?;
    let rc: Vec<usize> = right.1.iter().map(|c| cols.push(c)).collect::<Result<_>>()?;
    let sizes: Vec<usize> = cols.cols.iter().map(|c| c.2.len()).collect();
    let strat_sizes: Vec<usize> = base.iter().chain(&lc).map(|&k| sizes[k]).collect();
    let ns: usize = strat_sizes.iter().product();
    let nt = sizes[lt];
    let tv = scm.node(cols.cols[lt].1.var).values.clone();
    let mut lp = vec![0.0; ns];
    let mut rp = vec![0.0; ns];
    let mut lj = vec![0.0; ns * nt];
    let mut rj = vec![0.0; ns * nt];
    let mut vals = vec![0; cols.cols.len()];
    let mut scratch = Vec::new();
    let key = |set: &[usize], vals: &[usize]| set.iter().fold(0, |acc, &k| acc * sizes[k] + vals[k]);
    let lkey: Vec<usize> = base.iter().chain(&lc).copied().collect();
    let rkey: Vec<usize> = base.iter().chain(&rc).copied().collect();
    for (cfg, p) in scm.configurations() {
        for (k, col) in cols.cols.iter().enumerate() {
            vals[k] = eval(scm, &col.1, cfg, &mut scratch);
        }
        let (kl, kr) = (key(&lkey, &vals), key(&rkey, &vals));
        lp[kl] += p;
        rp[kr] += p;
        lj[kl * nt + vals[lt]] += p;
        rj[kr * nt + vals[rt]] += p;
    }
    let mut worst = Worst::default();
    for s in 0..ns {
        if lp[s] <= 0.0 || rp[s] <= 0.0 {
            continue;
        }
        let stratum = || {
            let mut k = s;
            let mut parts = Vec::new();
            for (j, &col) in lkey.iter().enumerate().rev() {
                let n = strat_sizes[j];
                parts.push(format!("{}={}", cols.cols[col].0, cols.cols[col].2[k % n]));
                k /= n;
            }
            parts.reverse();
            parts.join(", ")
        };
        if law {
            for t in 0..nt {
                let (a, b) = (lj[s * nt + t] / lp[s], rj[s * nt + t] / rp[s]);
                worst.offer((a - b).abs(), || {
                    format!(
                        "P({}={} | {}) = {:.6} vs P({}) = {:.6}",
                        left.0,
                        cols.cols[lt].2[t],
                        stratum(),
                        a,
                        right.0,
                        b
                    )
                });
            }
        } else {
            let a: f64 = (0..nt).map(|t| tv[t] * lj[s * nt + t]).sum::<f64>() / lp[s];
            let b: f64 = (0..nt).map(|t| tv[t] * rj[s * nt + t]).sum::<f64>() / rp[s];
            worst.offer((a - b).abs(), || {
                format!("E{{{} | {}}} = {:.6} vs E{{{}}} = {:.6}", left.0, stratum(), a, right.0, b)
            });
        }
    }
    Ok(worst)
}

/// `E{Y(s) | Med(s), C} = E{Y(s*) | Med(s*), C}` with `s*` setting every
/// component to the value of the outcome component.
fn check_a8(scm: &FiniteScm) -> Result<Worst> {
    need_separable(scm)?;
    let ay = scm
        .component(ComponentKind::Outcome)
        .ok_or_else(|| Error::MissingStructure("no outcome component".into()))?;
    let mut meds = Vec::new();
    if let Some(l) = scm.intermediate() {
        meds.push(name(scm, l));
    }
    meds.push(name(scm, scm.mediator()));
    let yn = name(scm, scm.outcome());
    let mut worst = Worst::default();
    for s in settings(scm) {
        let star = retarget(scm, &s, ay);
        if star == s {
            continue;
        }
        let lc: Vec<Cf> = meds.iter().map(|v| under(v, &s)).collect();
        let rc: Vec<Cf> = meds.iter().map(|v| under(v, &star)).collect();
        worst.merge(compare_conditionals(
            scm,
            (&under(&yn, &s), &lc),
            (&under(&yn, &star), &rc),
            false,
        )?);
    }
    Ok(worst)
}

/// For each mediator V, `P{V(s) | earlier mediators(s), C}` equals the same
/// with every component set to the value of V's own component.
fn check_a9(scm: &FiniteScm) -> Result<Worst> {
    need_separable(scm)?;
    let mut chain = Vec::new();
    if let Some(l) = scm.intermediate() {
        chain.push(l);
    }
    chain.push(scm.mediator());
    let mut worst = Worst::default();
    for (k, &v) in chain.iter().enumerate() {
        let own = match driving_component(scm, v) {
            Some(c) => c,
            None => continue,
        };
        let vn = name(scm, v);
        let earlier: Vec<String> = chain[..k].iter().map(|&i| name(scm, i)).collect();
        for s in settings(scm) {
            let star = retarget(scm, &s, own);
            if star == s {
                continue;
            }
            let lc: Vec<Cf> = earlier.iter().map(|e| under(e, &s)).collect();
            let rc: Vec<Cf> = earlier.iter().map(|e| under(e, &star)).collect();
            worst.merge(compare_conditionals(
                scm,
                (&under(&vn, &s), &lc),
                (&under(&vn, &star), &rc),
                true,
            )?);
        }
    }
    Ok(worst)
}

/// Per individual: M(a') = M(a'') for all a', a'', or Y(a', m') = Y(a', m'')
/// for all a', m', m''.
fn check_mediation_null_worst(scm: &FiniteScm) -> Result<Worst> {
    let (a, m, yn) = (
        name(scm, scm.exposure()),
        name(scm, scm.mediator()),
        name(scm, scm.outcome()),
    );
    let nm = scm.node(scm.mediator()).size();
    let mq: Vec<Cf> = (0..2).map(|av| Cf::new(&m).set(&a, av)).collect();
    let yq: Vec<Cf> = (0..2)
        .flat_map(|av| (0..nm).map(move |mv| (av, mv)))
        .map(|(av, mv)| Cf::new(&yn).set(&a, av).set(&m, mv))
        .collect();
    let mk: Vec<Compiled> = mq.iter().map(|c| compile(scm, c)).collect::<Result<_>>()?;
    let yk: Vec<Compiled> = yq.iter().map(|c| compile(scm, c)).collect::<Result<_>>()?;
    let mut scratch = Vec::new();
    for (cfg, _) in scm.configurations() {
        let mv: Vec<usize> = mk.iter().map(|c| eval(scm, c, cfg, &mut scratch)).collect();
        if mv[0] == mv[1] {
            continue;
        }
        let yv: Vec<usize> = yk.iter().map(|c| eval(scm, c, cfg, &mut scratch)).collect();
        for av in 0..2 {
            for m1 in 0..nm {
                for m2 in 0..nm {
                    let (y1, y2) = (yv[av * nm + m1], yv[av * nm + m2]);
                    if y1 != y2 {
                        let values = &scm.node(scm.outcome()).values;
                        let mut w = Worst::default();
                        w.offer((values[y1] - values[y2]).abs().max(f64::MIN_POSITIVE), || {
                            format!(
                                "{}: {}={} but {}={}; {}={} but {}={}",
                                scm.describe_config(cfg),
                                mq[0],
                                mv[0],
                                mq[1],
                                mv[1],
                                yq[av * nm + m1],
                                y1,
                                yq[av * nm + m2],
                                y2
                            )
                        });
                        return Ok(w);
                    }
                }
            }
        }
    }
    Ok(Worst::default())
}

/// Exogenous blocks: each equation's inputs form one block, merged when an
/// exogenous variable feeds several equations. Fails when a block feeds more
/// than one equation (other than the L and M equations when `merge_lm`), or
/// when the joint pmf is not the product of the block marginals.
fn check_factorization(scm: &FiniteScm, merge_lm: bool) -> Result<Worst> {
    let n_exo = scm.exogenous().len();
    let mut parent: Vec<usize> = (0..n_exo).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    let mut consumers: Vec<Vec<usize>> = vec![Vec::new(); n_exo];
    let lm_key = |i: usize| -> usize {
        if merge_lm && Some(i) == scm.intermediate() {
            scm.mediator()
        } else {
            i
        }
    };
    for i in 0..scm.nodes().len() {
        if let Some(f) = scm.function(i) {
            let exos: Vec<usize> = f
                .parents
                .iter()
                .filter_map(|p| match p {
                    ParentRef::Exo(j) => Some(*j),
                    _ => None,
                })
                .collect();
            for w in exos.windows(2) {
                let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                parent[a] = b;
            }
            for j in exos {
                let key = lm_key(i);
                if !consumers[j].contains(&key) {
                    consumers[j].push(key);
                }
            }
        }
    }
    let mut worst = Worst::default();
    for (j, c) in consumers.iter().enumerate() {
        if c.len() > 1 {
            let names: Vec<String> = c.iter().map(|&i| name(scm, i)).collect();
            worst.offer(1.0, || {
                format!(
                    "exogenous `{}` is shared by the equations of {}",
                    scm.exogenous()[j].name,
                    names.join(", ")
                )
            });
        }
    }
    if worst.value > 0.0 {
        return Ok(worst);
    }
    let roots: Vec<usize> = (0..n_exo).map(|j| find(&mut parent, j)).collect();
    let mut blocks: Vec<usize> = roots.clone();
    blocks.sort_unstable();
    blocks.dedup();
    if blocks.len() <= 1 {
        return Ok(worst);
    }
    let sizes: Vec<usize> = scm.exogenous().iter().map(|v| v.size()).collect();
    let decode = |mut k: usize| {
        let mut out = vec![0; n_exo];
        for j in (0..n_exo).rev() {
            out[j] = k % sizes[j];
            k /= sizes[j];
        }
        out
    };
    let block_key = |cfg: &[usize], b: usize| {
        (0..n_exo)
            .filter(|&j| roots[j] == b)
            .fold(0usize, |acc, j| acc * sizes[j] + cfg[j])
    };
    let mut marg: Vec<Vec<f64>> = blocks
        .iter()
        .map(|&b| {
            let n: usize = (0..n_exo).filter(|&j| roots[j] == b).map(|j| sizes[j]).product();
            vec![0.0; n]
        })
        .collect();
    for (k, &p) in scm.pmf().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let cfg = decode(k);
        for (bi, &b) in blocks.iter().enumerate() {
            marg[bi][block_key(&cfg, b)] += p;
        }
    }
    for (k, &p) in scm.pmf().iter().enumerate() {
        let cfg = decode(k);
        let prod: f64 = blocks
            .iter()
            .enumerate()
            .map(|(bi, &b)| marg[bi][block_key(&cfg, b)])
            .product();
        worst.offer((p - prod).abs(), || {
            format!(
                "P({}) = {:.6} but the product of block marginals is {:.6}",
                scm.describe_config(&cfg),
                p,
                prod
            )
        });
    }
    Ok(worst)
}

/// Checks one assumption exactly. `holds` is `max_violation <= tol`.
pub fn check_assumption(scm: &FiniteScm, id: AssumptionId, tol: f64) -> Result<AssumptionReport> {
    scm.ensure_valid()?;
    let worst = match id {
        AssumptionId::A1 => check_a1(scm)?,
        AssumptionId::A2 => check_a2(scm)?,
        AssumptionId::A3 => check_a3(scm)?,
        AssumptionId::A4 => check_a4(scm)?,
        AssumptionId::A5 => check_a5(scm)?,
        AssumptionId::A6 => check_a6(scm)?,
        AssumptionId::A7 => check_a7(scm)?,
        AssumptionId::A8 => check_a8(scm)?,
        AssumptionId::A9 => check_a9(scm)?,
        AssumptionId::A10 => check_a10(scm)?,
        AssumptionId::SA1 => check_sa(scm, 1)?,
        AssumptionId::SA2 => check_sa(scm, 2)?,
        AssumptionId::SA3 => check_sa(scm, 3)?,
        AssumptionId::SwigL => check_swig_l(scm)?,
        AssumptionId::MedNull => check_mediation_null_worst(scm)?,
        AssumptionId::Factorization => check_factorization(scm, false)?,
        AssumptionId::FactorizationLm => {
            need_l(scm)?;
            check_factorization(scm, true)?
        }
    };
    Ok(AssumptionReport {
        id,
        holds: worst.value <= tol,
        max_violation: worst.value,
        witness: worst.witness,
        scope: if id.individual() {
            Scope::Individual
        } else {
            Scope::Population
        },
    })
}

/// Mediation null criterion: per individual, the exposure does not move the
/// mediator or the mediator does not move the outcome.
pub fn check_mediation_null(scm: &FiniteScm) -> Result<AssumptionReport> {
    check_assumption(scm, AssumptionId::MedNull, 0.0)
}

/// Whether a class's structural layout matches the model (presence of L,
/// and the exposure components its formulas refer to).
pub fn layout_matches(scm: &FiniteScm, class: ModelClass) -> bool {
    let has_l = scm.intermediate().is_some();
    if class.requires_l() != has_l {
        return false;
    }
    let kinds: Vec<ComponentKind> = scm.components().iter().map(|c| c.1).collect();
    let two = kinds.len() == 2;
    let consumes = |kind: ComponentKind| {
        scm.intermediate().is_some_and(|l| {
            scm.component(kind)
                .is_some_and(|c| scm.components_consumed(l).contains(&c))
        })
    };
    match class {
        ModelClass::PopFfrcistg | ModelClass::FfrcistgSep => two,
        ModelClass::PopSepLm => two && !consumes(ComponentKind::Outcome),
        ModelClass::PopSepLy => two && !consumes(ComponentKind::Mediator),
        ModelClass::PopSep3 => kinds.len() == 3,
        _ => true,
    }
}

/// Every class whose layout fits and whose defining assumptions all hold,
/// closed upward under class implication.
pub fn classify_model(scm: &FiniteScm, tol: f64) -> Result<Vec<ModelClass>> {
    scm.ensure_valid()?;
    let mut cache: Vec<(AssumptionId, bool)> = Vec::new();
    let mut holds = |id: AssumptionId| -> Result<bool> {
        if let Some(&(_, h)) = cache.iter().find(|(i, _)| *i == id) {
            return Ok(h);
        }
        let h = check_assumption(scm, id, tol)?.holds;
        cache.push((id, h));
        Ok(h)
    };
    let mut out: Vec<ModelClass> = Vec::new();
    for &class in ModelClass::ALL {
        if !layout_matches(scm, class) {
            continue;
        }
        let mut ok = true;
        for &id in crate::identification::class_assumptions(class) {
            if !holds(id)? {
                ok = false;
                break;
            }
        }
        if ok {
            for c in class.closure() {
                if !out.contains(&c) {
                    out.push(c);
                }
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Runs every assumption applicable to the model's structure.
pub fn check_all(scm: &FiniteScm, tol: f64) -> Result<Vec<AssumptionReport>> {
    let mut out = Vec::new();
    for &id in AssumptionId::ALL {
        match check_assumption(scm, id, tol) {
            Ok(r) => out.push(r),
            Err(Error::MissingStructure(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::scm::ScmBuilder;

    fn holds(scm: &FiniteScm, id: AssumptionId) -> bool {
        check_assumption(scm, id, DEFAULT_TOL).unwrap().holds
    }

    #[test]
    fn noisy_chain_satisfies_npsem_ie() {
        let scm = fixtures::noisy_chain();
        for id in [
            AssumptionId::A1,
            AssumptionId::A2,
            AssumptionId::A3,
            AssumptionId::A4,
            AssumptionId::A5,
            AssumptionId::Factorization,
        ] {
            let r = check_assumption(&scm, id, DEFAULT_TOL).unwrap();
            assert!(r.holds, "{} {}", id, r.witness);
            assert!(r.max_violation <= DEFAULT_TOL);
        }
        let classes = classify_model(&scm, DEFAULT_TOL).unwrap();
        for c in [ModelClass::NpsemIe, ModelClass::Ffrcistg, ModelClass::FfrcistgA5] {
            assert!(classes.contains(&c), "{:?}", classes);
        }
    }

    #[test]
    fn cross_world_breaks_only_a4() {
        let scm = fixtures::cross_world();
        for id in [AssumptionId::A1, AssumptionId::A2, AssumptionId::A3] {
            assert!(holds(&scm, id), "{}", id);
        }
        let r = check_assumption(&scm, AssumptionId::A4, DEFAULT_TOL).unwrap();
        assert!(!r.holds);
        assert!(r.witness.contains("M(A="), "{}", r.witness);
        let classes = classify_model(&scm, DEFAULT_TOL).unwrap();
        assert!(classes.contains(&ModelClass::Ffrcistg));
        assert!(!classes.contains(&ModelClass::NpsemIe));
    }

    #[test]
    fn shared_noise_fails_a4_and_factorization() {
        let scm = ScmBuilder::new()
            .exposure("A")
            .mediator("M", 2)
            .outcome("Y", 2)
            .noise("eA", vec![0.5, 0.5])
            .noise("e", vec![0.7, 0.3])
            .function("A", &["eA"], |v| v[0])
            .function("M", &["A", "e"], |v| v[0] ^ v[1])
            .function("Y", &["M", "e"], |v| v[0] ^ v[1])
            .build()
            .unwrap();
        assert!(!holds(&scm, AssumptionId::A4));
        let r = check_assumption(&scm, AssumptionId::Factorization, DEFAULT_TOL).unwrap();
        assert!(!r.holds);
        assert!(r.witness.contains("`e`"));
    }

    #[test]
    fn separable_fixture_is_isolated() {
        let scm = fixtures::separable();
        for id in [
            AssumptionId::A6,
            AssumptionId::A7,
            AssumptionId::A8,
            AssumptionId::A9,
            AssumptionId::A1,
            AssumptionId::A2,
            AssumptionId::A3,
        ] {
            assert!(holds(&scm, id), "{}", id);
        }
        let classes = classify_model(&scm, DEFAULT_TOL).unwrap();
        assert!(classes.contains(&ModelClass::FfrcistgSep));
        assert!(classes.contains(&ModelClass::PopFfrcistg));
    }

    #[test]
    fn a6_violation_is_detected() {
        let scm = ScmBuilder::new()
            .exposure("A")
            .component("A_M", ComponentKind::Mediator)
            .component("A_Y", ComponentKind::Outcome)
            .mediator("M", 2)
            .outcome("Y", 2)
            .noise("eA", vec![0.5, 0.5])
            .noise("eM", vec![0.5, 0.5])
            .function("A", &["eA"], |v| v[0])
            .function("M", &["A_M", "eM"], |v| v[0] ^ v[1])
            .function("Y", &["A_M", "A_Y", "M"], |v| v[0] & v[1] | v[2])
            .build()
            .unwrap();
        let r = check_assumption(&scm, AssumptionId::A6, DEFAULT_TOL).unwrap();
        assert!(!r.holds);
        assert_eq!(r.scope, Scope::Individual);
        assert_eq!(r.max_violation, 1.0);
    }

    #[test]
    fn mediation_null_cases() {
        assert!(check_mediation_null(&fixtures::null_m()).unwrap().holds);
        assert!(check_mediation_null(&fixtures::null_y()).unwrap().holds);
        let r = check_mediation_null(&fixtures::noisy_chain()).unwrap();
        assert!(!r.holds);
        assert!(r.witness.contains("eA="));
    }

    #[test]
    fn l_chain_classes() {
        let scm = fixtures::l_chain();
        assert!(holds(&scm, AssumptionId::SwigL));
        assert!(holds(&scm, AssumptionId::A10));
        let classes = classify_model(&scm, DEFAULT_TOL).unwrap();
        for c in [ModelClass::NpsemIeL, ModelClass::NpsemIeLm, ModelClass::FfrcistgL] {
            assert!(classes.contains(&c), "{:?}", classes);
        }
        assert!(matches!(
            check_assumption(&fixtures::noisy_chain(), AssumptionId::A10, DEFAULT_TOL),
            Err(Error::MissingStructure(_))
        ));
    }

    #[test]
    fn reports_are_deterministic() {
        let scm = fixtures::cross_world();
        let a = check_assumption(&scm, AssumptionId::A4, DEFAULT_TOL).unwrap();
        let b = check_assumption(&scm, AssumptionId::A4, DEFAULT_TOL).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tags_round_trip() {
        for id in AssumptionId::ALL {
            assert_eq!(AssumptionId::parse(id.tag()), Some(*id));
        }
    }
}
