//! Observational identification functionals and the dispatch from
//! (effect, model class) to formula.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::assumptions::AssumptionId;
use crate::counterfactual::{observational_joint, CELL_CAP};
use crate::error::{Error, Result};
use crate::estimands::Effect;
use crate::scm::FiniteScm;
use crate::table::JointTable;
use crate::EPS_NUM;

/// Observational law over (C, A, L, M, Y). Absent C or L are stored as a
/// single-valued axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsDistribution {
    names: [Option<String>; 5],
    labels: [Vec<String>; 5],
    y_values: Vec<f64>,
    dims: [usize; 5],
    probs: Vec<f64>,
}

const C: usize = 0;
const A: usize = 1;
const L: usize = 2;
const M: usize = 3;
const Y: usize = 4;

impl ObsDistribution {
    /// Builds from a joint table, marginalizing every axis not named.
    pub fn from_table(
        table: &JointTable,
        c: Option<&str>,
        a: &str,
        l: Option<&str>,
        m: &str,
        y: &str,
    ) -> Result<Self> {
        let total = table.total();
        if (total - 1.0).abs() > EPS_NUM {
            return Err(Error::InvalidArgument(format!(
                "observational table is not normalized (total {})",
                total
            )));
        }
        let slots = [c, Some(a), l, Some(m), Some(y)];
        let mut names: [Option<String>; 5] = Default::default();
        let mut labels: [Vec<String>; 5] = Default::default();
        let mut axis_of = [None; 5];
        let mut dims = [1usize; 5];
        for (k, s) in slots.iter().enumerate() {
            if let Some(n) = s {
                let i = table
                    .axis_index(n)
                    .ok_or_else(|| Error::UnknownVariable((*n).to_string()))?;
                names[k] = Some((*n).to_string());
                labels[k] = table.axes[i].labels.clone();
                dims[k] = table.axes[i].size();
                axis_of[k] = Some(i);
            } else {
                labels[k] = vec!["*".into()];
            }
        }
        if dims[A] != 2 {
            return Err(Error::InvalidArgument("exposure must be binary".into()));
        }
        let yi = axis_of[Y].expect("outcome axis");
        let y_values = table.axes[yi].values.clone();
        let n: usize = dims.iter().product();
        let mut probs = vec![0.0; n];
        for (k, &p) in table.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let cell = table.cell(k);
            let mut idx = 0;
            for s in 0..5 {
                idx = idx * dims[s] + axis_of[s].map_or(0, |i| cell[i]);
            }
            probs[idx] += p;
        }
        Ok(ObsDistribution {
            names,
            labels,
            y_values,
            dims,
            probs,
        })
    }

    /// Exact observational law of a model.
    pub fn from_scm(scm: &FiniteScm) -> Result<Self> {
        let t = observational_joint(scm, CELL_CAP)?;
        let name = |i: usize| scm.node(i).name.clone();
        let c = scm.baseline().map(name);
        let l = scm.intermediate().map(name);
        ObsDistribution::from_table(
            &t,
            c.as_deref(),
            &name(scm.exposure()),
            l.as_deref(),
            &name(scm.mediator()),
            &name(scm.outcome()),
        )
    }

    /// Cell probabilities, C slowest and Y fastest.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// The same axes with new cell probabilities.
    pub(crate) fn with_probs(&self, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), self.probs.len());
        ObsDistribution {
            probs,
            ..self.clone()
        }
    }

    pub fn has_l(&self) -> bool {
        self.names[L].is_some()
    }

    pub fn dims(&self) -> [usize; 5] {
        self.dims
    }

    /// `P(C=c, A=a, L=l, M=m, Y=y)`.
    pub fn p(&self, c: usize, a: usize, l: usize, m: usize, y: usize) -> f64 {
        let d = &self.dims;
        self.probs[(((c * d[A] + a) * d[L] + l) * d[M] + m) * d[Y] + y]
    }

    /// Sum of `P` over every axis left as `None`.
    fn marg(&self, fix: [Option<usize>; 4]) -> f64 {
        let d = &self.dims;
        let range = |k: usize| match fix[k] {
            Some(v) => v..v + 1,
            None => 0..d[k],
        };
        let mut s = 0.0;
        for c in range(C) {
            for a in range(A) {
                for l in range(L) {
                    for m in range(M) {
                        for y in 0..d[Y] {
                            s += self.p(c, a, l, m, y);
                        }
                    }
                }
            }
        }
        s
    }

    /// `E(Y | C=c, A=a, L=l, M=m)` where `None` axes are marginalized.
    fn ey(&self, fix: [Option<usize>; 4]) -> Result<f64> {
        let den = self.marg(fix);
        if den <= 0.0 {
            return Err(self.gap(fix));
        }
        let d = &self.dims;
        let range = |k: usize| match fix[k] {
            Some(v) => v..v + 1,
            None => 0..d[k],
        };
        let mut s = 0.0;
        for c in range(C) {
            for a in range(A) {
                for l in range(L) {
                    for m in range(M) {
                        for y in 0..d[Y] {
                            s += self.y_values[y] * self.p(c, a, l, m, y);
                        }
                    }
                }
            }
        }
        Ok(s / den)
    }

    /// `P(event | given)`, failing with a positivity error naming the
    /// conditioning cell if it is empty.
    fn cond(&self, event: [Option<usize>; 4], given: [Option<usize>; 4]) -> Result<f64> {
        let den = self.marg(given);
        if den <= 0.0 {
            return Err(self.gap(given));
        }
        let mut both = given;
        for k in 0..4 {
            if event[k].is_some() {
                both[k] = event[k];
            }
        }
        Ok(self.marg(both) / den)
    }

    fn gap(&self, fix: [Option<usize>; 4]) -> Error {
        let parts: Vec<String> = (0..4)
            .filter_map(|k| {
                let v = fix[k]?;
                let name = self.names[k].as_ref()?;
                Some(format!("{}={}", name, self.labels[k][v]))
            })
            .collect();
        Error::Positivity(format!("P({}) = 0", parts.join(", ")))
    }

    fn nc(&self) -> usize {
        self.dims[C]
    }
    fn nl(&self) -> usize {
        self.dims[L]
    }
    fn nm(&self) -> usize {
        self.dims[M]
    }

    fn pc(&self, c: usize) -> f64 {
        self.marg([Some(c), None, None, None])
    }
}

fn check_a(vals: &[usize]) -> Result<()> {
    if vals.iter().any(|&a| a > 1) {
        return Err(Error::InvalidArgument("exposure values must be 0 or 1".into()));
    }
    Ok(())
}

fn need_l(dist: &ObsDistribution) -> Result<()> {
    if !dist.has_l() {
        return Err(Error::MissingStructure(
            "formula requires an intermediate confounder L".into(),
        ));
    }
    Ok(())
}

/// `sum_c P(c) sum_m P(m | a2, c) E(Y | a1, m, c)`, with L marginalized.
pub fn q_mediation(dist: &ObsDistribution, a1: usize, a2: usize) -> Result<f64> {
    check_a(&[a1, a2])?;
    let mut total = 0.0;
    for c in 0..dist.nc() {
        let pc = dist.pc(c);
        if pc <= 0.0 {
            continue;
        }
        for m in 0..dist.nm() {
            let w = dist.cond([None, None, None, Some(m)], [Some(c), Some(a2), None, None])?;
            if w <= 0.0 {
                continue;
            }
            total += pc * w * dist.ey([Some(c), Some(a1), None, Some(m)])?;
        }
    }
    Ok(total)
}

/// `sum_c P(c) sum_m P(m | a2, c) sum_l P(l | a1, c) E(Y | a1, l, m, c)`.
pub fn q_l(dist: &ObsDistribution, a1: usize, a2: usize) -> Result<f64> {
    need_l(dist)?;
    check_a(&[a1, a2])?;
    let mut total = 0.0;
    for c in 0..dist.nc() {
        let pc = dist.pc(c);
        if pc <= 0.0 {
            continue;
        }
        for m in 0..dist.nm() {
            let wm = dist.cond([None, None, None, Some(m)], [Some(c), Some(a2), None, None])?;
            if wm <= 0.0 {
                continue;
            }
            for l in 0..dist.nl() {
                let wl = dist.cond([None, None, Some(l), None], [Some(c), Some(a1), None, None])?;
                if wl <= 0.0 {
                    continue;
                }
                total += pc * wm * wl * dist.ey([Some(c), Some(a1), Some(l), Some(m)])?;
            }
        }
    }
    Ok(total)
}

/// `sum_c P(c) sum_l P(l | a, c) sum_m P(m | l, a, c) E(Y | m, l, a, c)`.
pub fn q_te(dist: &ObsDistribution, a: usize) -> Result<f64> {
    check_a(&[a])?;
    let mut total = 0.0;
    for c in 0..dist.nc() {
        let pc = dist.pc(c);
        if pc <= 0.0 {
            continue;
        }
        for l in 0..dist.nl() {
            let wl = dist.cond([None, None, Some(l), None], [Some(c), Some(a), None, None])?;
            if wl <= 0.0 {
                continue;
            }
            for m in 0..dist.nm() {
                let wm = dist.cond([None, None, None, Some(m)], [Some(c), Some(a), Some(l), None])?;
                if wm <= 0.0 {
                    continue;
                }
                total += pc * wl * wm * dist.ey([Some(c), Some(a), Some(l), Some(m)])?;
            }
        }
    }
    Ok(total)
}

/// `sum_c P(c) sum_l P(l | a, c) E(Y | m, l, a, c)`.
pub fn q_cde(dist: &ObsDistribution, a: usize, m: usize) -> Result<f64> {
    check_a(&[a])?;
    if m >= dist.nm() {
        return Err(Error::InvalidArgument(format!(
            "mediator value index {} outside its support",
            m
        )));
    }
    let mut total = 0.0;
    for c in 0..dist.nc() {
        let pc = dist.pc(c);
        if pc <= 0.0 {
            continue;
        }
        for l in 0..dist.nl() {
            let wl = dist.cond([None, None, Some(l), None], [Some(c), Some(a), None, None])?;
            if wl <= 0.0 {
                continue;
            }
            total += pc * wl * dist.ey([Some(c), Some(a), Some(l), Some(m)])?;
        }
    }
    Ok(total)
}

/// `Q_TE(1) - Q_TE(0) - Q_CDE(1, m) + Q_CDE(0, m)`.
pub fn formula5(dist: &ObsDistribution, m: usize) -> Result<f64> {
    Ok(q_te(dist, 1)? - q_te(dist, 0)? - q_cde(dist, 1, m)? + q_cde(dist, 0, m)?)
}

/// Separable-effect functionals. Variant 1 uses the joint (L, M) law given
/// `A=a2`; variant 2 draws L under `A=a1` and M under `A=a2`; variant 3
/// draws L under `A=a3` and M under `A=a2`.
pub fn q_separable(dist: &ObsDistribution, variant: u8, args: &[usize]) -> Result<f64> {
    need_l(dist)?;
    check_a(args)?;
    let (a1, a_m, a_l, joint) = match (variant, args) {
        (1, [a1, a2]) => (*a1, *a2, *a2, true),
        (2, [a1, a2]) => (*a1, *a2, *a1, false),
        (3, [a1, a2, a3]) => (*a1, *a2, *a3, false),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "separable formula variant {} with {} arguments",
                variant,
                args.len()
            )))
        }
    };
    let mut total = 0.0;
    for c in 0..dist.nc() {
        let pc = dist.pc(c);
        if pc <= 0.0 {
            continue;
        }
        for l in 0..dist.nl() {
            for m in 0..dist.nm() {
                let w = if joint {
                    dist.cond([None, None, Some(l), Some(m)], [Some(c), Some(a_m), None, None])?
                } else {
                    let wl = dist.cond([None, None, Some(l), None], [Some(c), Some(a_l), None, None])?;
                    if wl <= 0.0 {
                        continue;
                    }
                    wl * dist.cond([None, None, None, Some(m)], [Some(c), Some(a_m), Some(l), None])?
                };
                if w <= 0.0 {
                    continue;
                }
                total += pc * w * dist.ey([Some(c), Some(a1), Some(l), Some(m)])?;
            }
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelClass {
    NpsemIe,
    Ffrcistg,
    FfrcistgA5,
    PopFfrcistg,
    FfrcistgSep,
    FfrcistgL,
    FfrcistgLA5,
    NpsemIeL,
    NpsemIeLm,
    /// Population model with components A_M, A_Y and L driven by A_M.
    PopSepLm,
    /// Population model with components A_M, A_Y and L driven by A_Y.
    PopSepLy,
    /// Population model with components A_L, A_M, A_Y.
    PopSep3,
}

impl ModelClass {
    pub const ALL: &'static [ModelClass] = &[
        ModelClass::NpsemIe,
        ModelClass::Ffrcistg,
        ModelClass::FfrcistgA5,
        ModelClass::PopFfrcistg,
        ModelClass::FfrcistgSep,
        ModelClass::FfrcistgL,
        ModelClass::FfrcistgLA5,
        ModelClass::NpsemIeL,
        ModelClass::NpsemIeLm,
        ModelClass::PopSepLm,
        ModelClass::PopSepLy,
        ModelClass::PopSep3,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ModelClass::NpsemIe => "NPSEM-IE",
            ModelClass::Ffrcistg => "FFRCISTG",
            ModelClass::FfrcistgA5 => "FFRCISTG+A5",
            ModelClass::PopFfrcistg => "popFFRCISTG",
            ModelClass::FfrcistgSep => "FFRCISTG-sep",
            ModelClass::FfrcistgL => "FFRCISTG-L",
            ModelClass::FfrcistgLA5 => "FFRCISTG-L+A5",
            ModelClass::NpsemIeL => "NPSEM-IE-L",
            ModelClass::NpsemIeLm => "NPSEM-IE-LM",
            ModelClass::PopSepLm => "popFFRCISTG-LM",
            ModelClass::PopSepLy => "popFFRCISTG-LY",
            ModelClass::PopSep3 => "popFFRCISTG-3",
        }
    }

    pub fn parse(s: &str) -> Option<ModelClass> {
        ModelClass::ALL.iter().copied().find(|c| c.tag() == s)
    }

    pub fn requires_l(self) -> bool {
        matches!(
            self,
            ModelClass::FfrcistgL
                | ModelClass::FfrcistgLA5
                | ModelClass::NpsemIeL
                | ModelClass::NpsemIeLm
                | ModelClass::PopSepLm
                | ModelClass::PopSepLy
                | ModelClass::PopSep3
        )
    }

    /// Classes this one directly implies.
    pub fn implies(self) -> &'static [ModelClass] {
        match self {
            ModelClass::NpsemIe => &[ModelClass::Ffrcistg],
            ModelClass::FfrcistgA5 => &[ModelClass::Ffrcistg],
            ModelClass::FfrcistgSep => &[ModelClass::PopFfrcistg],
            ModelClass::PopFfrcistg => &[ModelClass::Ffrcistg],
            ModelClass::NpsemIeL => &[ModelClass::NpsemIeLm],
            ModelClass::NpsemIeLm => &[ModelClass::FfrcistgL],
            ModelClass::FfrcistgLA5 => &[ModelClass::FfrcistgL],
            _ => &[],
        }
    }

    /// This class and every class it implies, transitively.
    pub fn closure(self) -> Vec<ModelClass> {
        let mut out = vec![self];
        let mut k = 0;
        while k < out.len() {
            for &n in out[k].implies() {
                if !out.contains(&n) {
                    out.push(n);
                }
            }
            k += 1;
        }
        out
    }
}

impl fmt::Display for ModelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Contrasts of the identification functionals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formula {
    /// `Q(1,1) - Q(1,0)`.
    MediationIndirect,
    /// `Q(1,0) - Q(0,0)`.
    MediationDirect,
    /// `Q(1,1) - Q(0,0)`.
    MediationTotal,
    /// `QL(1,1) - QL(1,0)`.
    InterventionalIndirectL,
    /// `QL(1,0) - QL(0,0)`.
    InterventionalDirectL,
    /// `QTE(1) - QTE(0)`.
    TotalL,
    /// `QTE(1) - QTE(0) - QCDE(1,m) + QCDE(0,m)`.
    PortionEliminated,
    /// `QCDE(1,m) - QCDE(0,m)`.
    ControlledDirect,
    /// `Q1(1,1) - Q1(1,0)`.
    Q1Indirect,
    /// `Q1(1,0) - Q1(0,0)`.
    Q1Direct,
    /// `Q2(1,1) - Q2(1,0)`.
    Q2Indirect,
    /// `Q2(1,0) - Q2(0,0)`.
    Q2Direct,
    /// `Q3(1,0,0) - Q3(0,0,0)`.
    Q3Direct,
    /// `Q3(1,1,1) - Q3(1,1,0)`.
    Q3ViaL,
    /// `Q3(1,1,0) - Q3(1,0,0)`.
    Q3ViaM,
}

impl Formula {
    pub const ALL: &'static [Formula] = &[
        Formula::MediationIndirect,
        Formula::MediationDirect,
        Formula::MediationTotal,
        Formula::InterventionalIndirectL,
        Formula::InterventionalDirectL,
        Formula::TotalL,
        Formula::PortionEliminated,
        Formula::ControlledDirect,
        Formula::Q1Indirect,
        Formula::Q1Direct,
        Formula::Q2Indirect,
        Formula::Q2Direct,
        Formula::Q3Direct,
        Formula::Q3ViaL,
        Formula::Q3ViaM,
    ];

    /// Stable identifier used on the command line.
    pub fn tag(self) -> &'static str {
        match self {
            Formula::MediationIndirect => "mediation-indirect",
            Formula::MediationDirect => "mediation-direct",
            Formula::MediationTotal => "mediation-total",
            Formula::InterventionalIndirectL => "interventional-indirect",
            Formula::InterventionalDirectL => "interventional-direct",
            Formula::TotalL => "total",
            Formula::PortionEliminated => "portion-eliminated",
            Formula::ControlledDirect => "controlled-direct",
            Formula::Q1Indirect => "q1-indirect",
            Formula::Q1Direct => "q1-direct",
            Formula::Q2Indirect => "q2-indirect",
            Formula::Q2Direct => "q2-direct",
            Formula::Q3Direct => "q3-direct",
            Formula::Q3ViaL => "q3-via-l",
            Formula::Q3ViaM => "q3-via-m",
        }
    }

    pub fn parse(s: &str) -> Option<Formula> {
        Formula::ALL.iter().copied().find(|f| f.tag() == s.trim())
    }

    pub fn needs_m(self) -> bool {
        matches!(self, Formula::PortionEliminated | Formula::ControlledDirect)
    }

    pub fn evaluate(self, dist: &ObsDistribution, m: Option<usize>) -> Result<f64> {
        let q3 = |a, b, c| q_separable(dist, 3, &[a, b, c]);
        let need_m = || {
            m.ok_or_else(|| Error::InvalidArgument("formula needs a reference mediator value m'".into()))
        };
        Ok(match self {
            Formula::MediationIndirect => q_mediation(dist, 1, 1)? - q_mediation(dist, 1, 0)?,
            Formula::MediationDirect => q_mediation(dist, 1, 0)? - q_mediation(dist, 0, 0)?,
            Formula::MediationTotal => q_mediation(dist, 1, 1)? - q_mediation(dist, 0, 0)?,
            Formula::InterventionalIndirectL => q_l(dist, 1, 1)? - q_l(dist, 1, 0)?,
            Formula::InterventionalDirectL => q_l(dist, 1, 0)? - q_l(dist, 0, 0)?,
            Formula::TotalL => q_te(dist, 1)? - q_te(dist, 0)?,
            Formula::PortionEliminated => formula5(dist, need_m()?)?,
            Formula::ControlledDirect => {
                let m = need_m()?;
                q_cde(dist, 1, m)? - q_cde(dist, 0, m)?
            }
            Formula::Q1Indirect => q_separable(dist, 1, &[1, 1])? - q_separable(dist, 1, &[1, 0])?,
            Formula::Q1Direct => q_separable(dist, 1, &[1, 0])? - q_separable(dist, 1, &[0, 0])?,
            Formula::Q2Indirect => q_separable(dist, 2, &[1, 1])? - q_separable(dist, 2, &[1, 0])?,
            Formula::Q2Direct => q_separable(dist, 2, &[1, 0])? - q_separable(dist, 2, &[0, 0])?,
            Formula::Q3Direct => q3(1, 0, 0)? - q3(0, 0, 0)?,
            Formula::Q3ViaL => q3(1, 1, 1)? - q3(1, 1, 0)?,
            Formula::Q3ViaM => q3(1, 1, 0)? - q3(1, 0, 0)?,
        })
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Formula::MediationIndirect => "Q(1,1) - Q(1,0)",
            Formula::MediationDirect => "Q(1,0) - Q(0,0)",
            Formula::MediationTotal => "Q(1,1) - Q(0,0)",
            Formula::InterventionalIndirectL => "QL(1,1) - QL(1,0)",
            Formula::InterventionalDirectL => "QL(1,0) - QL(0,0)",
            Formula::TotalL => "QTE(1) - QTE(0)",
            Formula::PortionEliminated => "QTE(1) - QTE(0) - QCDE(1,m') + QCDE(0,m')",
            Formula::ControlledDirect => "QCDE(1,m') - QCDE(0,m')",
            Formula::Q1Indirect => "Q1(1,1) - Q1(1,0)",
            Formula::Q1Direct => "Q1(1,0) - Q1(0,0)",
            Formula::Q2Indirect => "Q2(1,1) - Q2(1,0)",
            Formula::Q2Direct => "Q2(1,0) - Q2(0,0)",
            Formula::Q3Direct => "Q3(1,0,0) - Q3(0,0,0)",
            Formula::Q3ViaL => "Q3(1,1,1) - Q3(1,1,0)",
            Formula::Q3ViaM => "Q3(1,1,0) - Q3(1,0,0)",
        })
    }
}

/// Which effect a rule identifies. Parameterized effects match any m'.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EffectKey {
    Plain(Effect),
    Cde,
}

impl EffectKey {
    pub fn of(e: Effect) -> EffectKey {
        match e {
            Effect::Cde(_) => EffectKey::Cde,
            other => EffectKey::Plain(other),
        }
    }
}

impl fmt::Display for EffectKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EffectKey::Plain(e) => write!(f, "{}", e),
            EffectKey::Cde => f.write_str("CDE(m')"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rule {
    pub effect: EffectKey,
    pub class: ModelClass,
    pub formula: Formula,
}

const fn rule(effect: Effect, class: ModelClass, formula: Formula) -> Rule {
    Rule {
        effect: EffectKey::Plain(effect),
        class,
        formula,
    }
}

/// The supported (effect, class) pairs.
pub const DISPATCH: &[Rule] = &[
    rule(Effect::Nie, ModelClass::NpsemIe, Formula::MediationIndirect),
    rule(Effect::Nde, ModelClass::NpsemIe, Formula::MediationDirect),
    rule(Effect::Iie, ModelClass::Ffrcistg, Formula::MediationIndirect),
    rule(Effect::Ide, ModelClass::Ffrcistg, Formula::MediationDirect),
    rule(Effect::Te, ModelClass::Ffrcistg, Formula::MediationTotal),
    rule(Effect::Nie, ModelClass::FfrcistgA5, Formula::MediationIndirect),
    rule(Effect::Nde, ModelClass::FfrcistgA5, Formula::MediationDirect),
    rule(Effect::Sie, ModelClass::PopFfrcistg, Formula::MediationIndirect),
    rule(Effect::Sde, ModelClass::PopFfrcistg, Formula::MediationDirect),
    rule(Effect::Sie, ModelClass::FfrcistgSep, Formula::MediationIndirect),
    rule(Effect::Sde, ModelClass::FfrcistgSep, Formula::MediationDirect),
    rule(Effect::Iie, ModelClass::FfrcistgL, Formula::InterventionalIndirectL),
    rule(Effect::Ide, ModelClass::FfrcistgL, Formula::InterventionalDirectL),
    rule(Effect::Te, ModelClass::FfrcistgL, Formula::TotalL),
    Rule {
        effect: EffectKey::Cde,
        class: ModelClass::FfrcistgL,
        formula: Formula::ControlledDirect,
    },
    rule(Effect::Nie, ModelClass::FfrcistgLA5, Formula::PortionEliminated),
    rule(Effect::Nde, ModelClass::FfrcistgLA5, Formula::ControlledDirect),
    rule(Effect::Sie, ModelClass::PopSepLm, Formula::Q1Indirect),
    rule(Effect::Sde, ModelClass::PopSepLm, Formula::Q1Direct),
    rule(Effect::Sie, ModelClass::PopSepLy, Formula::Q2Indirect),
    rule(Effect::Sde, ModelClass::PopSepLy, Formula::Q2Direct),
    rule(Effect::SeDirect, ModelClass::PopSep3, Formula::Q3Direct),
    rule(Effect::SeL, ModelClass::PopSep3, Formula::Q3ViaL),
    rule(Effect::SeM, ModelClass::PopSep3, Formula::Q3ViaM),
    rule(Effect::JmDirect, ModelClass::NpsemIeLm, Formula::Q1Direct),
    rule(Effect::JmLm, ModelClass::NpsemIeLm, Formula::Q1Indirect),
    rule(Effect::PseDirect, ModelClass::NpsemIeL, Formula::Q3Direct),
    rule(Effect::PseL, ModelClass::NpsemIeL, Formula::Q3ViaL),
    rule(Effect::PseM, ModelClass::NpsemIeL, Formula::Q3ViaM),
];

/// Assumption ids a class is defined by.
pub fn class_assumptions(class: ModelClass) -> &'static [AssumptionId] {
    use AssumptionId::*;
    match class {
        ModelClass::NpsemIe => &[Factorization, A1, A2, A3, A4],
        ModelClass::Ffrcistg => &[A1, A2, A3],
        ModelClass::FfrcistgA5 => &[A1, A2, A3, A5],
        ModelClass::PopFfrcistg => &[A1, A2, A3, A8, A9],
        ModelClass::FfrcistgSep => &[A1, A2, A3, A6, A7],
        ModelClass::FfrcistgL => &[A1, A2, A10, SA1, SA2, SA3, SwigL],
        ModelClass::FfrcistgLA5 => &[A1, A2, A10, SA1, SA2, SA3, SwigL, A5],
        ModelClass::NpsemIeL => &[Factorization],
        ModelClass::NpsemIeLm => &[FactorizationLm],
        ModelClass::PopSepLm | ModelClass::PopSepLy | ModelClass::PopSep3 => {
            &[SA1, SA2, SA3, A8, A9]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentifiedValue {
    pub effect: Effect,
    pub class: ModelClass,
    /// The class of the rule used, which the declared class implies.
    pub via: ModelClass,
    pub value: f64,
    pub formula: Formula,
    pub assumptions: Vec<AssumptionId>,
}

/// The rule used for `effect` under `class`, searching the classes `class`
/// implies when no rule names it directly.
pub fn find_rule(effect: Effect, class: ModelClass) -> Option<Rule> {
    let key = EffectKey::of(effect);
    class
        .closure()
        .into_iter()
        .find_map(|c| DISPATCH.iter().find(|r| r.effect == key && r.class == c).copied())
}

/// Evaluates the formula registered for `effect` under `class`.
pub fn identify(
    dist: &ObsDistribution,
    effect: Effect,
    class: ModelClass,
    m_ref: Option<usize>,
) -> Result<IdentifiedValue> {
    if class.requires_l() && !dist.has_l() {
        return Err(Error::MissingStructure(format!(
            "class {} requires an intermediate confounder L",
            class
        )));
    }
    if !class.requires_l() && dist.has_l() {
        return Err(Error::InvalidArgument(format!(
            "class {} applies to models without an intermediate confounder",
            class
        )));
    }
    let r = find_rule(effect, class).ok_or_else(|| {
        let reason = match (effect, class) {
            (Effect::Nie | Effect::Nde, ModelClass::Ffrcistg) => {
                "only upper and lower bounds are identified under this class; bounds are out of scope"
                    .to_string()
            }
            _ => "no identification formula is registered for this pair".to_string(),
        };
        Error::NotIdentified {
            effect: effect.to_string(),
            class: class.to_string(),
            reason,
        }
    })?;
    let m = match effect {
        Effect::Cde(m) => Some(m),
        _ => m_ref,
    };
    let value = r.formula.evaluate(dist, m)?;
    Ok(IdentifiedValue {
        effect,
        class,
        via: r.class,
        value,
        formula: r.formula,
        assumptions: class_assumptions(r.class).to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn noisy_chain_mediation_formula() {
        let d = ObsDistribution::from_scm(&fixtures::noisy_chain()).unwrap();
        assert!(close(q_mediation(&d, 1, 1).unwrap(), 0.82));
        assert!(close(q_mediation(&d, 1, 0).unwrap(), 0.18));
        let v = identify(&d, Effect::Nie, ModelClass::NpsemIe, None).unwrap();
        assert!(close(v.value, 0.64));
        assert_eq!(v.formula, Formula::MediationIndirect);
    }

    #[test]
    fn deterministic_chain_positivity() {
        let d = ObsDistribution::from_scm(&fixtures::deterministic_chain()).unwrap();
        let e = q_mediation(&d, 1, 0).unwrap_err();
        assert_eq!(e, Error::Positivity("P(A=1, M=0) = 0".into()));
    }

    #[test]
    fn nie_not_identified_under_ffrcistg() {
        let d = ObsDistribution::from_scm(&fixtures::noisy_chain()).unwrap();
        let e = identify(&d, Effect::Nie, ModelClass::Ffrcistg, None).unwrap_err();
        match e {
            Error::NotIdentified { reason, .. } => assert!(reason.contains("bounds")),
            other => panic!("{:?}", other),
        }
        let v = identify(&d, Effect::Iie, ModelClass::NpsemIe, None).unwrap();
        assert_eq!(v.via, ModelClass::Ffrcistg);
    }

    #[test]
    fn substitution_identities() {
        let d = ObsDistribution::from_scm(&fixtures::l_chain()).unwrap();
        for a1 in 0..2 {
            for a2 in 0..2 {
                let q2 = q_separable(&d, 2, &[a1, a2]).unwrap();
                let q3 = q_separable(&d, 3, &[a1, a2, a1]).unwrap();
                assert!(close(q2, q3));
            }
            let te = q_te(&d, a1).unwrap();
            let mut direct = 0.0;
            for c in 0..2 {
                direct += d.pc(c) * d.ey([Some(c), Some(a1), None, None]).unwrap();
            }
            assert!(close(te, direct));
        }
    }

    #[test]
    fn l_chain_matches_estimands() {
        use crate::estimands::effect;
        let scm = fixtures::l_chain();
        let d = ObsDistribution::from_scm(&scm).unwrap();
        let te = q_te(&d, 1).unwrap() - q_te(&d, 0).unwrap();
        assert!(close(te, effect(&scm, Effect::Te).unwrap().value));
        let iie = identify(&d, Effect::Iie, ModelClass::FfrcistgL, None).unwrap().value;
        assert!(close(iie, effect(&scm, Effect::Iie).unwrap().value));
        for e in [Effect::PseDirect, Effect::PseL, Effect::PseM, Effect::JmDirect, Effect::JmLm] {
            let v = identify(&d, e, ModelClass::NpsemIeL, None).unwrap().value;
            assert!(close(v, effect(&scm, e).unwrap().value), "{}", e);
        }
    }

    #[test]
    fn null_y_formula5_vanishes() {
        let d = ObsDistribution::from_scm(&fixtures::null_y()).unwrap();
        for m in 0..2 {
            assert!(formula5(&d, m).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn class_structure_is_checked() {
        let d = ObsDistribution::from_scm(&fixtures::noisy_chain()).unwrap();
        assert!(matches!(
            identify(&d, Effect::Iie, ModelClass::FfrcistgL, None),
            Err(Error::MissingStructure(_))
        ));
        assert!(matches!(q_l(&d, 1, 1), Err(Error::MissingStructure(_))));
    }

    #[test]
    fn closure_follows_implications() {
        assert_eq!(
            ModelClass::FfrcistgSep.closure(),
            vec![ModelClass::FfrcistgSep, ModelClass::PopFfrcistg, ModelClass::Ffrcistg]
        );
        for c in ModelClass::ALL {
            assert_eq!(ModelClass::parse(c.tag()), Some(*c));
            for n in c.implies() {
                assert_eq!(c.requires_l(), n.requires_l());
            }
        }
    }
}
