//! Finite structural causal models.
//!
//! A model is a set of endogenous variables (C, A, optional exposure
//! components, L, M, Y), a set of exogenous variables with a joint pmf, and
//! one lookup-table structural function per non-component endogenous
//! variable. Values are stored as indices into each variable's support.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::EPS_NUM;

/// Which part of a separated exposure a component carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ComponentKind {
    /// Acts on the intermediate confounder only (`A_L*`).
    Intermediate,
    /// Acts on the mediator only (`A_M`, `A_M*`).
    Mediator,
    /// Acts on the outcome only (`A_Y`, `A_Y*`).
    Outcome,
}

impl ComponentKind {
    pub fn tag(self) -> &'static str {
        match self {
            ComponentKind::Intermediate => "L",
            ComponentKind::Mediator => "M",
            ComponentKind::Outcome => "Y",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "L" => Some(ComponentKind::Intermediate),
            "M" => Some(ComponentKind::Mediator),
            "Y" => Some(ComponentKind::Outcome),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Baseline,
    Exposure,
    Intermediate,
    Mediator,
    Outcome,
    Component(ComponentKind),
    Exogenous,
}

impl Role {
    /// Position in the causal ordering C -> A -> components -> L -> M -> Y.
    pub(crate) fn rank(self) -> u8 {
        match self {
            Role::Exogenous => 0,
            Role::Baseline => 1,
            Role::Exposure => 2,
            Role::Component(_) => 3,
            Role::Intermediate => 4,
            Role::Mediator => 5,
            Role::Outcome => 6,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Role::Baseline => "C",
            Role::Exposure => "A",
            Role::Intermediate => "L",
            Role::Mediator => "M",
            Role::Outcome => "Y",
            Role::Component(_) => "component",
            Role::Exogenous => "exo",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "C" => Some(Role::Baseline),
            "A" => Some(Role::Exposure),
            "L" => Some(Role::Intermediate),
            "M" => Some(Role::Mediator),
            "Y" => Some(Role::Outcome),
            "exo" => Some(Role::Exogenous),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub role: Role,
    /// Support labels, in order. Values are indices into this list.
    pub labels: Vec<String>,
    /// Numeric payload of each support value (the label parsed as a number,
    /// else its index). Used for expectations.
    pub values: Vec<f64>,
}

impl Variable {
    pub fn new(name: &str, role: Role, labels: Vec<String>) -> Self {
        let values = labels
            .iter()
            .enumerate()
            .map(|(i, l)| l.parse::<f64>().unwrap_or(i as f64))
            .collect();
        Variable {
            name: name.to_string(),
            role,
            labels,
            values,
        }
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ParentRef {
    Node(usize),
    Exo(usize),
}

/// A total lookup table from parent-value tuples (mixed radix, last parent
/// fastest) to an output value index.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralFunction {
    pub parents: Vec<ParentRef>,
    pub table: Vec<usize>,
}

/// Fixed values for some endogenous variables or exposure components.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Intervention {
    assignments: Vec<(String, usize)>,
}

impl Intervention {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets `name` to the support value with index `value`.
    pub fn set(mut self, name: &str, value: usize) -> Self {
        self.assignments.retain(|(n, _)| n != name);
        self.assignments.push((name.to_string(), value));
        self
    }

    pub fn assignments(&self) -> &[(String, usize)] {
        &self.assignments
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

/// Full endogenous assignment produced by evaluating one exogenous
/// configuration under an intervention.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct World(pub Vec<usize>);

impl World {
    pub fn value(&self, scm: &FiniteScm, name: &str) -> Option<usize> {
        scm.node_index(name).map(|i| self.0[i])
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteScm {
    pub(crate) nodes: Vec<Variable>,
    pub(crate) exo: Vec<Variable>,
    pub(crate) pmf: Vec<f64>,
    pub(crate) functions: Vec<Option<StructuralFunction>>,
    pub(crate) declares: Vec<String>,
    order: Vec<usize>,
    violations: Vec<String>,
    cfg_values: Vec<usize>,
    cfg_probs: Vec<f64>,
}

impl FiniteScm {
    pub fn nodes(&self) -> &[Variable] {
        &self.nodes
    }

    pub fn exogenous(&self) -> &[Variable] {
        &self.exo
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn function(&self, node: usize) -> Option<&StructuralFunction> {
        self.functions[node].as_ref()
    }

    pub fn declares(&self) -> &[String] {
        &self.declares
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|v| v.name == name)
    }

    pub fn exo_index(&self, name: &str) -> Option<usize> {
        self.exo.iter().position(|v| v.name == name)
    }

    pub fn node(&self, i: usize) -> &Variable {
        &self.nodes[i]
    }

    fn role_index(&self, role: Role) -> Option<usize> {
        self.nodes.iter().position(|v| v.role == role)
    }

    pub fn exposure(&self) -> usize {
        self.role_index(Role::Exposure).expect("validated model has an exposure")
    }

    pub fn mediator(&self) -> usize {
        self.role_index(Role::Mediator).expect("validated model has a mediator")
    }

    pub fn outcome(&self) -> usize {
        self.role_index(Role::Outcome).expect("validated model has an outcome")
    }

    pub fn baseline(&self) -> Option<usize> {
        self.role_index(Role::Baseline)
    }

    pub fn intermediate(&self) -> Option<usize> {
        self.role_index(Role::Intermediate)
    }

    pub fn component(&self, kind: ComponentKind) -> Option<usize> {
        self.role_index(Role::Component(kind))
    }

    /// Exposure components in node order.
    pub fn components(&self) -> Vec<(usize, ComponentKind)> {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(i, v)| match v.role {
                Role::Component(k) => Some((i, k)),
                _ => None,
            })
            .collect()
    }

    pub fn is_separable(&self) -> bool {
        self.nodes
            .iter()
            .any(|v| matches!(v.role, Role::Component(_)))
    }

    /// Components consumed directly by the structural function of `node`.
    pub fn components_consumed(&self, node: usize) -> Vec<usize> {
        match &self.functions[node] {
            Some(f) => f
                .parents
                .iter()
                .filter_map(|p| match p {
                    ParentRef::Node(j) if matches!(self.nodes[*j].role, Role::Component(_)) => {
                        Some(*j)
                    }
                    _ => None,
                })
                .collect(),
            None => Vec::new(),
        }
    }

    pub fn ensure_valid(&self) -> Result<()> {
        match self.violations.first() {
            None => Ok(()),
            Some(v) => Err(Error::InvalidModel(v.clone())),
        }
    }

    /// Positive-probability exogenous configurations with their probability.
    pub fn configurations(&self) -> impl Iterator<Item = (&[usize], f64)> + '_ {
        let width = self.exo.len().max(1);
        self.cfg_probs
            .iter()
            .enumerate()
            .map(move |(k, &p)| (&self.cfg_values[k * width..k * width + self.exo.len()], p))
    }

    pub fn configuration_count(&self) -> usize {
        self.cfg_probs.len()
    }

    /// Resolves an intervention to a dense per-node override vector.
    pub fn overrides(&self, iv: &Intervention) -> Result<Vec<Option<usize>>> {
        let mut ov = vec![None; self.nodes.len()];
        for (name, value) in iv.assignments() {
            let i = match self.node_index(name) {
                Some(i) => i,
                None => return Err(Error::UnknownTarget(name.clone())),
            };
            let var = &self.nodes[i];
            match var.role {
                Role::Outcome | Role::Baseline | Role::Exogenous => {
                    return Err(Error::InvalidIntervention(format!(
                        "`{}` has role {} and cannot be intervened on",
                        name,
                        var.role.tag()
                    )))
                }
                _ => {}
            }
            if *value >= var.size() {
                return Err(Error::InvalidIntervention(format!(
                    "value index {} outside support of `{}`",
                    value, name
                )));
            }
            ov[i] = Some(*value);
        }
        Ok(ov)
    }

    /// Evaluates every endogenous variable for one exogenous configuration.
    /// Components copy the (possibly intervened) exposure unless themselves
    /// overridden.
    pub(crate) fn eval_into(&self, exo: &[usize], ov: &[Option<usize>], out: &mut [usize]) {
        let a = self.exposure_idx_fast();
        for &i in &self.order {
            if let Some(v) = ov[i] {
                out[i] = v;
                continue;
            }
            match self.nodes[i].role {
                Role::Component(_) => out[i] = out[a],
                _ => {
                    let f = self.functions[i].as_ref().expect("validated");
                    let mut idx = 0usize;
                    for p in &f.parents {
                        let (size, v) = match *p {
                            ParentRef::Node(j) => (self.nodes[j].size(), out[j]),
                            ParentRef::Exo(j) => (self.exo[j].size(), exo[j]),
                        };
                        idx = idx * size + v;
                    }
                    out[i] = f.table[idx];
                }
            }
        }
    }

    fn exposure_idx_fast(&self) -> usize {
        self.nodes
            .iter()
            .position(|v| v.role == Role::Exposure)
            .unwrap_or(0)
    }

    pub fn evaluate_world(&self, exo: &[usize], iv: &Intervention) -> Result<World> {
        self.ensure_valid()?;
        if exo.len() != self.exo.len() || exo.iter().zip(&self.exo).any(|(v, e)| *v >= e.size()) {
            return Err(Error::InvalidArgument(
                "exogenous configuration outside support".into(),
            ));
        }
        let ov = self.overrides(iv)?;
        let mut out = vec![0; self.nodes.len()];
        self.eval_into(exo, &ov, &mut out);
        Ok(World(out))
    }

    /// Human-readable `name=label` listing of an exogenous configuration.
    pub fn describe_config(&self, exo: &[usize]) -> String {
        let parts: Vec<String> = self
            .exo
            .iter()
            .zip(exo)
            .map(|(v, &x)| format!("{}={}", v.name, v.labels[x]))
            .collect();
        parts.join(", ")
    }
}

/// Reports every violated invariant, plus positivity warnings for empty
/// (A, M) or (A, L, M) cells of the observational law.
pub fn validate_scm(scm: &FiniteScm) -> ValidationReport {
    let mut report = ValidationReport {
        violations: scm.violations.clone(),
        warnings: Vec::new(),
    };
    if !report.is_valid() {
        return report;
    }
    let a = scm.exposure();
    let m = scm.mediator();
    let l = scm.intermediate();
    let ov = vec![None; scm.nodes.len()];
    let mut out = vec![0; scm.nodes.len()];
    let nl = l.map_or(1, |l| scm.nodes[l].size());
    let nm = scm.nodes[m].size();
    let mut cells = vec![0.0; 2 * nl * nm];
    for (cfg, p) in scm.configurations() {
        scm.eval_into(cfg, &ov, &mut out);
        let lv = l.map_or(0, |l| out[l]);
        cells[(out[a] * nl + lv) * nm + out[m]] += p;
    }
    let name = |i: usize| scm.nodes[i].name.as_str();
    let label = |i: usize, v: usize| scm.nodes[i].labels[v].as_str();
    for av in 0..2 {
        for mv in 0..nm {
            let pam: f64 = (0..nl).map(|lv| cells[(av * nl + lv) * nm + mv]).sum();
            if pam <= 0.0 {
                report.warnings.push(format!(
                    "P({}={}, {}={}) = 0",
                    name(a),
                    label(a, av),
                    name(m),
                    label(m, mv)
                ));
            } else if let Some(l) = l {
                for lv in 0..nl {
                    if cells[(av * nl + lv) * nm + mv] <= 0.0 {
                        report.warnings.push(format!(
                            "P({}={}, {}={}, {}={}) = 0",
                            name(a),
                            label(a, av),
                            name(l),
                            label(l, lv),
                            name(m),
                            label(m, mv)
                        ));
                    }
                }
            }
        }
    }
    report
}

/// Incremental constructor for [`FiniteScm`]. Variables must be declared
/// before the functions that reference them.
#[derive(Debug, Default, Clone)]
pub struct ScmBuilder {
    nodes: Vec<Variable>,
    exo: Vec<Variable>,
    marginals: Vec<Option<Vec<f64>>>,
    pmf: Option<Vec<f64>>,
    functions: Vec<(String, Vec<String>, Vec<usize>)>,
    declares: Vec<String>,
    errors: Vec<Error>,
}

fn index_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

impl ScmBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn name_taken(&self, name: &str) -> bool {
        self.nodes.iter().chain(&self.exo).any(|v| v.name == name)
    }

    pub fn variable(mut self, name: &str, role: Role, labels: Vec<String>) -> Self {
        if self.name_taken(name) {
            self.errors.push(Error::DuplicateVariable(name.to_string()));
            return self;
        }
        let var = Variable::new(name, role, labels);
        if role == Role::Exogenous {
            self.exo.push(var);
            self.marginals.push(None);
        } else {
            self.nodes.push(var);
        }
        self
    }

    pub fn baseline(self, name: &str, n: usize) -> Self {
        self.variable(name, Role::Baseline, index_labels(n))
    }

    pub fn exposure(self, name: &str) -> Self {
        self.variable(name, Role::Exposure, index_labels(2))
    }

    pub fn intermediate(self, name: &str, n: usize) -> Self {
        self.variable(name, Role::Intermediate, index_labels(n))
    }

    pub fn mediator(self, name: &str, n: usize) -> Self {
        self.variable(name, Role::Mediator, index_labels(n))
    }

    pub fn outcome(self, name: &str, n: usize) -> Self {
        self.variable(name, Role::Outcome, index_labels(n))
    }

    pub fn component(self, name: &str, kind: ComponentKind) -> Self {
        self.variable(name, Role::Component(kind), index_labels(2))
    }

    /// Declares an exogenous variable with its own marginal. When no full
    /// joint pmf is supplied, the joint is the product of these marginals.
    pub fn noise(mut self, name: &str, marginal: Vec<f64>) -> Self {
        let n = marginal.len();
        self = self.variable(name, Role::Exogenous, index_labels(n));
        if let Some(last) = self.marginals.last_mut() {
            if self.exo.last().map(|v| v.name.as_str()) == Some(name) {
                *last = Some(marginal);
            }
        }
        self
    }

    /// Declares an exogenous variable whose law is given by [`Self::joint_pmf`].
    pub fn exogenous(self, name: &str, n: usize) -> Self {
        self.variable(name, Role::Exogenous, index_labels(n))
    }

    /// Full joint pmf over all exogenous variables (mixed radix, last
    /// variable fastest).
    pub fn joint_pmf(mut self, pmf: Vec<f64>) -> Self {
        self.pmf = Some(pmf);
        self
    }

    pub fn declare(mut self, tag: &str) -> Self {
        self.declares.push(tag.to_string());
        self
    }

    fn size_of(&self, name: &str) -> Option<usize> {
        self.nodes
            .iter()
            .chain(&self.exo)
            .find(|v| v.name == name)
            .map(Variable::size)
    }

    /// Adds a structural function defined pointwise by `f` over parent value
    /// indices.
    pub fn function<F>(mut self, output: &str, parents: &[&str], f: F) -> Self
    where
        F: Fn(&[usize]) -> usize,
    {
        let mut sizes = Vec::with_capacity(parents.len());
        for p in parents {
            match self.size_of(p) {
                Some(s) => sizes.push(s),
                None => {
                    self.errors.push(Error::UnknownVariable((*p).to_string()));
                    return self;
                }
            }
        }
        let total: usize = sizes.iter().product();
        let mut table = Vec::with_capacity(total);
        let mut args = vec![0usize; sizes.len()];
        for mut k in 0..total {
            for j in (0..sizes.len()).rev() {
                args[j] = k % sizes[j];
                k /= sizes[j];
            }
            table.push(f(&args));
        }
        self.functions.push((
            output.to_string(),
            parents.iter().map(|s| s.to_string()).collect(),
            table,
        ));
        self
    }

    pub fn function_table(mut self, output: &str, parents: &[&str], table: Vec<usize>) -> Self {
        self.functions.push((
            output.to_string(),
            parents.iter().map(|s| s.to_string()).collect(),
            table,
        ));
        self
    }

    pub fn build(self) -> Result<FiniteScm> {
        if let Some(e) = self.errors.into_iter().next() {
            return Err(e);
        }
        let pmf = match self.pmf {
            Some(p) => p,
            None => {
                let mut pmf = vec![1.0];
                for (v, m) in self.exo.iter().zip(&self.marginals) {
                    let m = match m {
                        Some(m) => m.clone(),
                        None => {
                            return Err(Error::InvalidModel(format!(
                                "exogenous `{}` has no marginal and no joint pmf was given",
                                v.name
                            )))
                        }
                    };
                    let mut next = Vec::with_capacity(pmf.len() * m.len());
                    for p in &pmf {
                        for q in &m {
                            next.push(p * q);
                        }
                    }
                    pmf = next;
                }
                pmf
            }
        };
        let mut functions: Vec<Option<StructuralFunction>> = vec![None; self.nodes.len()];
        let mut violations = Vec::new();
        for (out, parents, table) in self.functions {
            let i = self
                .nodes
                .iter()
                .position(|v| v.name == out)
                .ok_or_else(|| Error::UnknownVariable(out.clone()))?;
            let mut refs = Vec::with_capacity(parents.len());
            for p in &parents {
                if let Some(j) = self.nodes.iter().position(|v| &v.name == p) {
                    refs.push(ParentRef::Node(j));
                } else if let Some(j) = self.exo.iter().position(|v| &v.name == p) {
                    refs.push(ParentRef::Exo(j));
                } else {
                    return Err(Error::UnknownVariable(p.clone()));
                }
            }
            if functions[i].is_some() {
                violations.push(format!("`{}` has more than one structural function", out));
            }
            functions[i] = Some(StructuralFunction {
                parents: refs,
                table,
            });
        }
        Ok(FiniteScm::assemble(
            self.nodes,
            self.exo,
            pmf,
            functions,
            self.declares,
            violations,
        ))
    }
}

impl FiniteScm {
    pub(crate) fn assemble(
        nodes: Vec<Variable>,
        exo: Vec<Variable>,
        pmf: Vec<f64>,
        functions: Vec<Option<StructuralFunction>>,
        declares: Vec<String>,
        mut violations: Vec<String>,
    ) -> FiniteScm {
        structural_violations(&nodes, &exo, &pmf, &functions, &mut violations);
        let mut order: Vec<usize> = (0..nodes.len()).collect();
        order.sort_by_key(|&i| (nodes[i].role.rank(), i));
        let mut cfg_values = Vec::new();
        let mut cfg_probs = Vec::new();
        let expected: Option<usize> = exo
            .iter()
            .try_fold(1usize, |acc, v| acc.checked_mul(v.size()));
        if expected == Some(pmf.len()) {
            let sizes: Vec<usize> = exo.iter().map(Variable::size).collect();
            let mut cfg = vec![0usize; sizes.len()];
            for (k, &p) in pmf.iter().enumerate() {
                if p > 0.0 {
                    let mut r = k;
                    for j in (0..sizes.len()).rev() {
                        cfg[j] = r % sizes[j];
                        r /= sizes[j];
                    }
                    cfg_values.extend_from_slice(&cfg);
                    if cfg.is_empty() {
                        cfg_values.push(0);
                    }
                    cfg_probs.push(p);
                }
            }
        }
        FiniteScm {
            nodes,
            exo,
            pmf,
            functions,
            declares,
            order,
            violations,
            cfg_values,
            cfg_probs,
        }
    }
}

fn structural_violations(
    nodes: &[Variable],
    exo: &[Variable],
    pmf: &[f64],
    functions: &[Option<StructuralFunction>],
    out: &mut Vec<String>,
) {
    for v in nodes.iter().chain(exo) {
        if v.labels.is_empty() {
            out.push(format!("`{}` has an empty support", v.name));
        }
        let distinct: BTreeSet<&String> = v.labels.iter().collect();
        if distinct.len() != v.labels.len() {
            out.push(format!("`{}` has repeated support values", v.name));
        }
    }
    let count = |r: Role| nodes.iter().filter(|v| v.role == r).count();
    for (role, what) in [
        (Role::Exposure, "exposure"),
        (Role::Mediator, "mediator"),
        (Role::Outcome, "outcome"),
    ] {
        if count(role) != 1 {
            out.push(format!("model needs exactly one {} variable", what));
        }
    }
    for (role, what) in [
        (Role::Baseline, "baseline"),
        (Role::Intermediate, "intermediate-confounder"),
    ] {
        if count(role) > 1 {
            out.push(format!("model allows at most one {} variable", what));
        }
    }
    if let Some(a) = nodes.iter().find(|v| v.role == Role::Exposure) {
        if a.size() != 2 {
            out.push(format!("exposure `{}` must be binary", a.name));
        }
    }
    let kinds: Vec<ComponentKind> = nodes
        .iter()
        .filter_map(|v| match v.role {
            Role::Component(k) => Some(k),
            _ => None,
        })
        .collect();
    if !kinds.is_empty() {
        let mut sorted = kinds.clone();
        sorted.sort();
        let ok = sorted == [ComponentKind::Mediator, ComponentKind::Outcome]
            || sorted
                == [
                    ComponentKind::Intermediate,
                    ComponentKind::Mediator,
                    ComponentKind::Outcome,
                ];
        if !ok {
            out.push("separable exposure must have components {M, Y} or {L, M, Y}".into());
        }
        for v in nodes.iter().filter(|v| matches!(v.role, Role::Component(_))) {
            if v.size() != 2 {
                out.push(format!("component `{}` must be binary", v.name));
            }
        }
    }
    let separable = !kinds.is_empty();
    for (i, v) in nodes.iter().enumerate() {
        let f = match (&functions[i], v.role) {
            (Some(_), Role::Component(_)) => {
                out.push(format!(
                    "component `{}` is determined by the exposure and takes no function",
                    v.name
                ));
                continue;
            }
            (None, Role::Component(_)) => continue,
            (None, _) => {
                out.push(format!("`{}` has no structural function", v.name));
                continue;
            }
            (Some(f), _) => f,
        };
        let mut total = 1usize;
        for p in &f.parents {
            let (pv, size) = match *p {
                ParentRef::Node(j) => (&nodes[j], nodes[j].size()),
                ParentRef::Exo(j) => (&exo[j], exo[j].size()),
            };
            if pv.role.rank() >= v.role.rank() && pv.role != Role::Exogenous {
                out.push(format!(
                    "`{}` -> `{}` violates the causal ordering (cycle or wrong direction)",
                    pv.name, v.name
                ));
            }
            if separable
                && pv.role == Role::Exposure
                && matches!(v.role, Role::Intermediate | Role::Mediator | Role::Outcome)
            {
                out.push(format!(
                    "`{}` must consume exposure components, not the exposure itself",
                    v.name
                ));
            }
            if !separable && matches!(pv.role, Role::Component(_)) {
                out.push(format!("`{}` consumes a component without separable exposure", v.name));
            }
            total = total.saturating_mul(size);
        }
        if f.table.len() != total {
            out.push(format!(
                "function for `{}` is not total: {} rows for {} parent configurations",
                v.name,
                f.table.len(),
                total
            ));
        }
        if let Some(bad) = f.table.iter().find(|&&x| x >= v.size()) {
            out.push(format!(
                "function for `{}` outputs value index {} outside its support",
                v.name, bad
            ));
        }
    }
    let expected = exo
        .iter()
        .try_fold(1usize, |acc, v| acc.checked_mul(v.size()));
    if expected != Some(pmf.len()) {
        out.push(format!(
            "exogenous pmf has {} entries, expected {:?}",
            pmf.len(),
            expected
        ));
    }
    if pmf.iter().any(|p| !p.is_finite() || *p < 0.0) {
        out.push("exogenous pmf has a negative or non-finite entry".into());
    }
    let sum: f64 = pmf.iter().sum();
    if (sum - 1.0).abs() > EPS_NUM {
        out.push(format!("pmf sums to {}", round_display(sum)));
    }
}

pub(crate) fn round_display(x: f64) -> f64 {
    libm::round(x * 1e9) / 1e9
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn noisy_chain_worlds() {
        let scm = fixtures::noisy_chain();
        let w = scm.evaluate_world(&[1, 0, 0], &Intervention::new()).unwrap();
        assert_eq!(w.value(&scm, "M"), Some(1));
        assert_eq!(w.value(&scm, "Y"), Some(1));
        let w = scm
            .evaluate_world(&[1, 1, 0], &Intervention::new().set("A", 0))
            .unwrap();
        assert_eq!(w.value(&scm, "A"), Some(0));
        assert_eq!(w.value(&scm, "M"), Some(1));
        assert_eq!(scm.configuration_count(), 8);
    }

    #[test]
    fn pmf_sum_is_reported() {
        let scm = ScmBuilder::new()
            .exposure("A")
            .mediator("M", 2)
            .outcome("Y", 2)
            .exogenous("e", 2)
            .joint_pmf(vec![0.5, 0.6])
            .function("A", &["e"], |v| v[0])
            .function("M", &["A"], |v| v[0])
            .function("Y", &["M"], |v| v[0])
            .build()
            .unwrap();
        let report = validate_scm(&scm);
        assert!(!report.is_valid());
        assert!(report.violations.iter().any(|v| v.contains("pmf sums to 1.1")));
        assert!(matches!(scm.ensure_valid(), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn deterministic_chain_warns_on_empty_cells() {
        let report = validate_scm(&fixtures::deterministic_chain());
        assert!(report.is_valid());
        assert!(report.warnings.iter().any(|w| w == "P(A=1, M=0) = 0"));
        assert!(report.warnings.iter().any(|w| w == "P(A=0, M=1) = 0"));
    }

    #[test]
    fn unknown_target_is_rejected() {
        let scm = fixtures::noisy_chain();
        let err = scm
            .evaluate_world(&[0, 0, 0], &Intervention::new().set("Z", 1))
            .unwrap_err();
        assert_eq!(err, Error::UnknownTarget("Z".into()));
        assert!(err.to_string().contains("unknown intervention target"));
        let err = scm
            .evaluate_world(&[0, 0, 0], &Intervention::new().set("Y", 1))
            .unwrap_err();
        assert!(matches!(err, Error::InvalidIntervention(_)));
    }

    #[test]
    fn structural_problems_are_listed() {
        let scm = ScmBuilder::new()
            .exposure("A")
            .mediator("M", 2)
            .outcome("Y", 2)
            .noise("e", vec![0.5, 0.5])
            .function("A", &["e"], |v| v[0])
            .function("M", &["Y"], |v| v[0])
            .function_table("Y", &["M"], vec![0])
            .build()
            .unwrap();
        let v = validate_scm(&scm).violations;
        assert!(v.iter().any(|s| s.contains("causal ordering")));
        assert!(v.iter().any(|s| s.contains("not total")));
    }

    #[test]
    fn duplicate_and_unknown_names() {
        let e = ScmBuilder::new().exposure("A").exposure("A").build().unwrap_err();
        assert_eq!(e, Error::DuplicateVariable("A".into()));
        let e = ScmBuilder::new()
            .exposure("A")
            .function("A", &["q"], |v| v[0])
            .build()
            .unwrap_err();
        assert_eq!(e, Error::UnknownVariable("q".into()));
    }

    #[test]
    fn zero_probability_configurations_are_skipped() {
        let scm = ScmBuilder::new()
            .exposure("A")
            .mediator("M", 2)
            .outcome("Y", 2)
            .noise("e", vec![0.0, 1.0])
            .function("A", &["e"], |v| v[0])
            .function("M", &["A"], |v| v[0])
            .function("Y", &["M"], |v| v[0])
            .build()
            .unwrap();
        assert_eq!(scm.configuration_count(), 1);
    }

    #[test]
    fn separable_components_follow_exposure() {
        let scm = fixtures::separable();
        assert!(validate_scm(&scm).is_valid());
        let w = scm
            .evaluate_world(&[1, 0, 0], &Intervention::new().set("A_M", 0))
            .unwrap();
        assert_eq!(w.value(&scm, "A_Y"), Some(1));
        assert_eq!(w.value(&scm, "M"), Some(0));
    }

    #[test]
    fn every_fixture_is_valid() {
        for name in fixtures::NAMES {
            let scm = fixtures::by_name(name).unwrap();
            assert!(validate_scm(&scm).is_valid(), "{}", name);
        }
    }
}
