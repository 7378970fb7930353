//! Nested counterfactual expressions and their exact joint laws.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::scm::{FiniteScm, Intervention, Role};
use crate::table::{Axis, JointTable};

/// Default cap on the number of cells in any joint table.
pub const CELL_CAP: u128 = 10_000_000;

/// The value assigned to an intervention target inside a counterfactual.
#[derive(Debug, Clone, PartialEq)]
pub enum Arg {
    /// A fixed support index.
    Value(usize),
    /// The natural value of another counterfactual for the same individual.
    Natural(Box<Cf>),
}

/// `var` evaluated in the world where each context target is set to its
/// argument, e.g. `Y(A=1, M=M(A=0))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cf {
    pub var: String,
    pub context: Vec<(String, Arg)>,
}

impl Cf {
    pub fn new(var: &str) -> Self {
        Cf {
            var: var.to_string(),
            context: Vec::new(),
        }
    }

    pub fn set(mut self, target: &str, value: usize) -> Self {
        self.context.push((target.to_string(), Arg::Value(value)));
        self
    }

    pub fn nest(mut self, target: &str, inner: Cf) -> Self {
        self.context
            .push((target.to_string(), Arg::Natural(Box::new(inner))));
        self
    }

    pub fn depth(&self) -> usize {
        1 + self
            .context
            .iter()
            .map(|(_, a)| match a {
                Arg::Value(_) => 0,
                Arg::Natural(c) => c.depth(),
            })
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Display for Cf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.var)?;
        if self.context.is_empty() {
            return Ok(());
        }
        write!(f, "(")?;
        for (i, (t, a)) in self.context.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            match a {
                Arg::Value(v) => write!(f, "{}={}", t, v)?,
                Arg::Natural(c) => write!(f, "{}={}", t, c)?,
            }
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone)]
pub(crate) enum CArg {
    Value(usize),
    Natural(Box<Compiled>),
}

/// A counterfactual with names resolved to node indices.
#[derive(Debug, Clone)]
pub(crate) struct Compiled {
    pub var: usize,
    pub context: Vec<(usize, CArg)>,
}

pub(crate) fn compile(scm: &FiniteScm, cf: &Cf) -> Result<Compiled> {
    let var = scm
        .node_index(&cf.var)
        .ok_or_else(|| Error::UnknownVariable(cf.var.clone()))?;
    let mut context = Vec::with_capacity(cf.context.len());
    for (t, a) in &cf.context {
        let ti = scm
            .node_index(t)
            .ok_or_else(|| Error::UnknownTarget(t.clone()))?;
        match scm.node(ti).role {
            Role::Outcome | Role::Baseline | Role::Exogenous => {
                return Err(Error::InvalidIntervention(format!(
                    "`{}` has role {} and cannot be intervened on",
                    t,
                    scm.node(ti).role.tag()
                )))
            }
            _ => {}
        }
        let arg = match a {
            Arg::Value(v) => {
                if *v >= scm.node(ti).size() {
                    return Err(Error::InvalidIntervention(format!(
                        "value index {} outside support of `{}`",
                        v, t
                    )));
                }
                CArg::Value(*v)
            }
            Arg::Natural(inner) => {
                let c = compile(scm, inner)?;
                if scm.node(c.var).size() != scm.node(ti).size() {
                    return Err(Error::InvalidIntervention(format!(
                        "`{}` cannot take the value of `{}`: supports differ",
                        t, inner
                    )));
                }
                CArg::Natural(Box::new(c))
            }
        };
        context.push((ti, arg));
    }
    Ok(Compiled { var, context })
}

/// Evaluates a compiled counterfactual for one individual.
pub(crate) fn eval(scm: &FiniteScm, cf: &Compiled, exo: &[usize], scratch: &mut Vec<usize>) -> usize {
    let n = scm.nodes().len();
    let mut ov = vec![None; n];
    for (t, a) in &cf.context {
        ov[*t] = Some(match a {
            CArg::Value(v) => *v,
            CArg::Natural(inner) => eval(scm, inner, exo, scratch),
        });
    }
    scratch.resize(n, 0);
    scm.eval_into(exo, &ov, scratch);
    scratch[cf.var]
}

pub(crate) fn check_cap(sizes: &[usize], cap: u128) -> Result<()> {
    let cells = sizes
        .iter()
        .fold(1u128, |acc, &s| acc.saturating_mul(s as u128));
    if cells > cap {
        return Err(Error::TableTooLarge { cells, cap });
    }
    Ok(())
}

/// Exact joint pmf of several counterfactuals, one axis per query, computed
/// by enumerating every positive-probability individual.
pub fn counterfactual_joint(scm: &FiniteScm, queries: &[Cf], cap: u128) -> Result<JointTable> {
    scm.ensure_valid()?;
    let compiled: Vec<Compiled> = queries
        .iter()
        .map(|q| compile(scm, q))
        .collect::<Result<_>>()?;
    let sizes: Vec<usize> = compiled.iter().map(|c| scm.node(c.var).size()).collect();
    check_cap(&sizes, cap)?;
    let axes = queries
        .iter()
        .zip(&compiled)
        .map(|(q, c)| {
            let v = scm.node(c.var);
            Axis {
                name: q.to_string(),
                labels: v.labels.clone(),
                values: v.values.clone(),
            }
        })
        .collect();
    let mut table = JointTable::zeros(axes);
    let mut scratch = Vec::new();
    let mut cell = vec![0; compiled.len()];
    for (cfg, p) in scm.configurations() {
        for (slot, c) in cell.iter_mut().zip(&compiled) {
            *slot = eval(scm, c, cfg, &mut scratch);
        }
        table.add(&cell, p);
    }
    Ok(table)
}

/// Exact observational joint over every non-component endogenous variable,
/// in node order.
pub fn observational_joint(scm: &FiniteScm, cap: u128) -> Result<JointTable> {
    interventional_joint(scm, &Intervention::new(), cap)
}

/// Joint of every non-component endogenous variable under an intervention.
pub fn interventional_joint(scm: &FiniteScm, iv: &Intervention, cap: u128) -> Result<JointTable> {
    scm.ensure_valid()?;
    let ov = scm.overrides(iv)?;
    let keep: Vec<usize> = (0..scm.nodes().len())
        .filter(|&i| !matches!(scm.node(i).role, Role::Component(_)))
        .collect();
    let sizes: Vec<usize> = keep.iter().map(|&i| scm.node(i).size()).collect();
    check_cap(&sizes, cap)?;
    let axes = keep
        .iter()
        .map(|&i| {
            let v = scm.node(i);
            Axis {
                name: v.name.clone(),
                labels: v.labels.clone(),
                values: v.values.clone(),
            }
        })
        .collect();
    let mut table = JointTable::zeros(axes);
    let mut out = vec![0; scm.nodes().len()];
    let mut cell = vec![0; keep.len()];
    for (cfg, p) in scm.configurations() {
        scm.eval_into(cfg, &ov, &mut out);
        for (slot, &i) in cell.iter_mut().zip(&keep) {
            *slot = out[i];
        }
        table.add(&cell, p);
    }
    Ok(table)
}

/// `E[var]` of a single counterfactual, using the numeric payload of its
/// support.
pub fn counterfactual_mean(scm: &FiniteScm, cf: &Cf) -> Result<f64> {
    scm.ensure_valid()?;
    let c = compile(scm, cf)?;
    let values = &scm.node(c.var).values;
    let mut scratch = Vec::new();
    let mut acc = 0.0;
    for (cfg, p) in scm.configurations() {
        acc += p * values[eval(scm, &c, cfg, &mut scratch)];
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn noisy_chain_observational_law() {
        let scm = fixtures::noisy_chain();
        let t = observational_joint(&scm, CELL_CAP).unwrap();
        assert!((t.prob(&[1, 1, 1]) - 0.405).abs() < 1e-12);
        let e = t.conditional_mean("Y", &[("A", 1), ("M", 1)]).unwrap().unwrap();
        assert!((e - 0.9).abs() < 1e-12);
        assert!((t.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nested_value_and_display() {
        let scm = fixtures::noisy_chain();
        let cf = Cf::new("Y").set("A", 1).nest("M", Cf::new("M").set("A", 0));
        assert_eq!(cf.to_string(), "Y(A=1, M=M(A=0))");
        assert_eq!(cf.depth(), 2);
        assert!((counterfactual_mean(&scm, &cf).unwrap() - 0.18).abs() < 1e-12);
    }

    #[test]
    fn joint_of_cross_world_pair() {
        let scm = fixtures::noisy_chain();
        let q = [Cf::new("M").set("A", 0), Cf::new("M").set("A", 1)];
        let t = counterfactual_joint(&scm, &q, CELL_CAP).unwrap();
        assert!((t.prob(&[0, 1]) - 0.9).abs() < 1e-12);
        assert!((t.prob(&[1, 0]) - 0.1).abs() < 1e-12);
        assert_eq!(t.prob(&[0, 0]), 0.0);
    }

    #[test]
    fn cap_is_enforced() {
        let scm = fixtures::noisy_chain();
        let q = [Cf::new("M"), Cf::new("Y")];
        let e = counterfactual_joint(&scm, &q, 3).unwrap_err();
        assert_eq!(e, Error::TableTooLarge { cells: 4, cap: 3 });
    }

    #[test]
    fn unknown_names_are_errors() {
        let scm = fixtures::noisy_chain();
        let e = counterfactual_mean(&scm, &Cf::new("Y").set("L", 0)).unwrap_err();
        assert_eq!(e, Error::UnknownTarget("L".into()));
        let e = counterfactual_mean(&scm, &Cf::new("Q")).unwrap_err();
        assert_eq!(e, Error::UnknownVariable("Q".into()));
    }
}
