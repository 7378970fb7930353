//! Constrained model generation, counterexample search and property sweeps.
//!
//! Attempt `i` under master seed `s` always draws from stream `i` of
//! `ChaCha8Rng::seed_from_u64(s)`, so any driver that keeps the lowest
//! successful index reproduces the sequential result.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::assumptions::{check_assumption, AssumptionId, AssumptionReport, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::estimands::{effect, interventional_expectation, nested_expectation, y_total, Effect};
use crate::generate::{
    attempt_rng, generate, premise_family, CrossWorldOptions, Family, IndependentOptions, Layout,
    NullKind,
};
use crate::identification::{
    class_assumptions, formula5, identify, ModelClass, ObsDistribution, Rule, DISPATCH,
};
use crate::scm::{ComponentKind, FiniteScm};
use crate::EPS_NUM;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructuralFamily {
    NoL,
    WithL,
    Separable2,
    Separable3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScmConstraints {
    pub family: StructuralFamily,
    pub with_c: bool,
    pub m_size: usize,
    pub required: Vec<AssumptionId>,
    pub forbidden: Vec<AssumptionId>,
    pub require_mediation_null: bool,
    pub budget: u64,
}

impl Default for ScmConstraints {
    fn default() -> Self {
        ScmConstraints {
            family: StructuralFamily::NoL,
            with_c: false,
            m_size: 2,
            required: Vec::new(),
            forbidden: Vec::new(),
            require_mediation_null: false,
            budget: 10_000,
        }
    }
}

fn candidate_families(c: &ScmConstraints) -> Vec<Family> {
    let base = IndependentOptions {
        with_c: c.with_c,
        m_size: c.m_size,
        ..IndependentOptions::default()
    };
    let nulls: Vec<Option<NullKind>> = if c.require_mediation_null {
        vec![Some(NullKind::MIgnoresA), Some(NullKind::YIgnoresM)]
    } else {
        vec![None, Some(NullKind::MIgnoresA), Some(NullKind::YIgnoresM)]
    };
    let mut out = Vec::new();
    let push_layouts = |layouts: &[Layout], with_l: bool, out: &mut Vec<Family>| {
        for &layout in layouts {
            for &null in &nulls {
                for a5 in [false, true] {
                    out.push(Family::Independent(IndependentOptions {
                        with_l,
                        layout,
                        null,
                        a5,
                        ..base
                    }));
                }
            }
        }
    };
    match c.family {
        StructuralFamily::NoL => {
            push_layouts(&[Layout::Plain], false, &mut out);
            for a5 in [false, true] {
                out.push(Family::CrossWorld(CrossWorldOptions {
                    with_c: c.with_c,
                    mediation_null: false,
                    a5,
                    m_size: c.m_size,
                }));
            }
            out.push(Family::CrossWorld(CrossWorldOptions {
                with_c: c.with_c,
                mediation_null: true,
                a5: false,
                m_size: c.m_size,
            }));
        }
        StructuralFamily::WithL => {
            push_layouts(&[Layout::Plain], true, &mut out);
            if !c.with_c && c.m_size == 2 {
                out.push(Family::IntermediateNull);
            }
        }
        StructuralFamily::Separable2 => {
            push_layouts(&[Layout::Separable2 { l_reads: ComponentKind::Mediator }], false, &mut out);
            if !c.with_c {
                out.push(Family::SeparableNull { m_size: c.m_size });
            }
        }
        StructuralFamily::Separable3 => push_layouts(&[Layout::Separable3], true, &mut out),
    }
    if c.require_mediation_null {
        out.retain(|f| match f {
            Family::Independent(o) => o.null.is_some(),
            Family::CrossWorld(o) => o.mediation_null,
            _ => true,
        });
    }
    out
}

/// Whether `scm` meets every required, forbidden and null constraint.
pub fn satisfies(scm: &FiniteScm, c: &ScmConstraints, tol: f64) -> Result<bool> {
    for &id in &c.required {
        if !check_assumption(scm, id, tol)?.holds {
            return Ok(false);
        }
    }
    for &id in &c.forbidden {
        if check_assumption(scm, id, tol)?.holds {
            return Ok(false);
        }
    }
    if c.require_mediation_null && !check_assumption(scm, AssumptionId::MedNull, 0.0)?.holds {
        return Ok(false);
    }
    Ok(true)
}

/// The first model, in attempt order, that meets the constraints.
pub fn random_scm(c: &ScmConstraints, seed: u64) -> Result<FiniteScm> {
    if let Some(id) = c.required.iter().find(|id| c.forbidden.contains(id)) {
        return Err(Error::InvalidArgument(format!(
            "{} is both required and forbidden",
            id.tag()
        )));
    }
    if c.m_size < 2 {
        return Err(Error::InvalidArgument("mediator support needs at least two values".into()));
    }
    let families = candidate_families(c);
    for i in 0..c.budget {
        let family = &families[(i % families.len() as u64) as usize];
        let scm = generate(family, &mut attempt_rng(seed, i));
        if satisfies(&scm, c, DEFAULT_TOL)? {
            return Ok(scm);
        }
    }
    Err(Error::Infeasible(format!("no model met them in {} attempts", c.budget)))
}

/// Counterexamples to the mediation null criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// Separable model under the population dismissible-component
    /// conditions with a non-zero separable indirect effect.
    SeparableNull,
    /// Model with an intermediate confounder under the single-world
    /// independences and no interaction, with a non-zero IIE.
    IntermediateNull,
}

impl Target {
    pub fn tag(self) -> &'static str {
        match self {
            Target::SeparableNull => "separable-null",
            Target::IntermediateNull => "intermediate-null",
        }
    }

    /// Accepts the tags and the short names `theorem2` and `theorem3`.
    pub fn parse(s: &str) -> Option<Target> {
        match s.trim() {
            "separable-null" | "theorem2" => Some(Target::SeparableNull),
            "intermediate-null" | "theorem3" => Some(Target::IntermediateNull),
            _ => None,
        }
    }

    /// Assumptions every counterexample must satisfy, besides the null.
    pub fn premise(self) -> &'static [AssumptionId] {
        use AssumptionId::*;
        match self {
            Target::SeparableNull => &[A1, A2, A3, A8, A9],
            Target::IntermediateNull => &[A1, A2, A10, SA1, SA2, SA3, SwigL, A5],
        }
    }

    pub fn effect(self) -> Effect {
        match self {
            Target::SeparableNull => Effect::Sie,
            Target::IntermediateNull => Effect::Iie,
        }
    }

    fn structured(self, index: u64) -> Family {
        match self {
            Target::SeparableNull => Family::SeparableNull {
                m_size: 2 + (index / 16 % 2) as usize,
            },
            Target::IntermediateNull => Family::IntermediateNull,
        }
    }

    fn blind(self, index: u64) -> Family {
        let null = if index.is_multiple_of(2) {
            NullKind::MIgnoresA
        } else {
            NullKind::YIgnoresM
        };
        match self {
            Target::SeparableNull => Family::Independent(IndependentOptions {
                layout: Layout::Separable2 { l_reads: ComponentKind::Mediator },
                null: Some(null),
                ..IndependentOptions::default()
            }),
            Target::IntermediateNull => Family::Independent(IndependentOptions {
                with_l: true,
                a5: true,
                null: Some(null),
                ..IndependentOptions::default()
            }),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub target: Target,
    pub scm: FiniteScm,
    /// The value compared against the threshold: the exact SIE for the
    /// separable target, the interventional formula value for the other.
    pub effect_value: f64,
    pub estimand_value: f64,
    pub formula_value: f64,
    pub certificate: Vec<AssumptionReport>,
    pub attempt: u64,
}

/// Reports for the target's premise, any extra ids and the null, in that
/// order. `None` as soon as one fails.
pub fn certify(
    scm: &FiniteScm,
    target: Target,
    extra_required: &[AssumptionId],
    tol: f64,
) -> Result<Option<Vec<AssumptionReport>>> {
    let mut reports = Vec::new();
    let mut ids: Vec<AssumptionId> = target.premise().to_vec();
    for id in extra_required {
        if !ids.contains(id) {
            ids.push(*id);
        }
    }
    for id in ids {
        let r = check_assumption(scm, id, tol)?;
        if !r.holds {
            return Ok(None);
        }
        reports.push(r);
    }
    let null = check_assumption(scm, AssumptionId::MedNull, 0.0)?;
    if !null.holds {
        return Ok(None);
    }
    reports.push(null);
    Ok(Some(reports))
}

/// Effect values `(effect_value, estimand_value, formula_value)`.
pub fn target_values(scm: &FiniteScm, target: Target) -> Result<(f64, f64, f64)> {
    let dist = ObsDistribution::from_scm(scm)?;
    let exact = effect(scm, target.effect())?.value;
    Ok(match target {
        Target::SeparableNull => {
            let f = identify(&dist, Effect::Nie, ModelClass::NpsemIe, None)?.value;
            (exact, exact, f)
        }
        Target::IntermediateNull => {
            let f = identify(&dist, Effect::Iie, ModelClass::FfrcistgL, None)?.value;
            (f, exact, f)
        }
    })
}

/// One search attempt. Every sixteenth attempt draws from an unstructured
/// family instead of the structured one.
pub fn try_attempt(
    target: Target,
    extra_required: &[AssumptionId],
    seed: u64,
    index: u64,
    threshold: f64,
) -> Result<Option<Counterexample>> {
    let family = if index % 16 == 15 {
        target.blind(index)
    } else {
        target.structured(index)
    };
    let scm = generate(&family, &mut attempt_rng(seed, index));
    let certificate = match certify(&scm, target, extra_required, DEFAULT_TOL)? {
        Some(c) => c,
        None => return Ok(None),
    };
    let (effect_value, estimand_value, formula_value) = match target_values(&scm, target) {
        Ok(v) => v,
        Err(Error::Positivity(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    if libm::fabs(effect_value) < threshold {
        return Ok(None);
    }
    Ok(Some(Counterexample {
        target,
        scm,
        effect_value,
        estimand_value,
        formula_value,
        certificate,
        attempt: index,
    }))
}

/// Sequential search returning the lowest successful attempt.
pub fn find_counterexample(
    target: Target,
    extra_required: &[AssumptionId],
    budget: u64,
    seed: u64,
    threshold: f64,
) -> Result<Option<Counterexample>> {
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::InvalidArgument("threshold must be positive".into()));
    }
    for i in 0..budget {
        if let Some(c) = try_attempt(target, extra_required, seed, i, threshold)? {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

/// Equalities and nullities checked by [`property_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Property {
    /// NIE vanishes whenever the mediation null holds.
    NullImpliesNieZero,
    /// SIE equals NIE under the individual isolation conditions.
    SieEqualsNie,
    /// `Q(1,1) - Q(1,0)` equals NIE under independent errors.
    MediationFormulaNie,
    /// `Q(1,1) - Q(1,0)` equals IIE under the single-world model.
    MediationFormulaIie,
    /// `QL(1,1) - QL(1,0)` equals IIE with an intermediate confounder.
    InterventionalFormulaIie,
    /// The portion-eliminated formula equals NIE under no interaction.
    PortionEliminatedNie,
    /// The portion-eliminated formula does not depend on m'.
    PortionEliminatedInvariance,
    /// `Q1` contrasts equal SIE when L consumes A_M.
    SeparableLmSie,
    /// `Q2` contrasts equal SIE when L consumes A_Y.
    SeparableLySie,
    /// `Q3` contrasts equal the three-component effects.
    SeparableThreeSe,
    /// JM effects equal their formulas, and PSE effects too when the
    /// errors are fully independent.
    JointPathFormulas,
    /// Every decomposition sums to its total effect.
    Telescoping,
}

impl Property {
    pub const ALL: &'static [Property] = &[
        Property::NullImpliesNieZero,
        Property::SieEqualsNie,
        Property::MediationFormulaNie,
        Property::MediationFormulaIie,
        Property::InterventionalFormulaIie,
        Property::PortionEliminatedNie,
        Property::PortionEliminatedInvariance,
        Property::SeparableLmSie,
        Property::SeparableLySie,
        Property::SeparableThreeSe,
        Property::JointPathFormulas,
        Property::Telescoping,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Property::NullImpliesNieZero => "null-implies-nie-zero",
            Property::SieEqualsNie => "sie-equals-nie",
            Property::MediationFormulaNie => "mediation-formula-nie",
            Property::MediationFormulaIie => "mediation-formula-iie",
            Property::InterventionalFormulaIie => "interventional-formula-iie",
            Property::PortionEliminatedNie => "portion-eliminated-nie",
            Property::PortionEliminatedInvariance => "portion-eliminated-invariance",
            Property::SeparableLmSie => "separable-lm-sie",
            Property::SeparableLySie => "separable-ly-sie",
            Property::SeparableThreeSe => "separable-three-se",
            Property::JointPathFormulas => "joint-path-formulas",
            Property::Telescoping => "telescoping",
        }
    }

    pub fn parse(s: &str) -> Option<Property> {
        Property::ALL.iter().copied().find(|p| p.tag() == s.trim())
    }

    /// Class every premise model must belong to, if any.
    pub fn premise_class(self) -> Option<ModelClass> {
        Some(match self {
            Property::NullImpliesNieZero | Property::Telescoping => return None,
            Property::SieEqualsNie => ModelClass::FfrcistgSep,
            Property::MediationFormulaNie => ModelClass::NpsemIe,
            Property::MediationFormulaIie => ModelClass::Ffrcistg,
            Property::InterventionalFormulaIie => ModelClass::FfrcistgL,
            Property::PortionEliminatedNie | Property::PortionEliminatedInvariance => {
                ModelClass::FfrcistgLA5
            }
            Property::SeparableLmSie => ModelClass::PopSepLm,
            Property::SeparableLySie => ModelClass::PopSepLy,
            Property::SeparableThreeSe => ModelClass::PopSep3,
            Property::JointPathFormulas => ModelClass::NpsemIeLm,
        })
    }

    /// The family model `i` of a sweep is drawn from.
    pub fn family(self, i: u64) -> Family {
        match self.premise_class() {
            Some(class) => premise_family(class, i),
            None if self == Property::NullImpliesNieZero => null_family(i),
            None => {
                let k = (i / 2) as usize % (ModelClass::ALL.len() + 1);
                if k == ModelClass::ALL.len() {
                    null_family(i / 2)
                } else {
                    premise_family(ModelClass::ALL[k], i)
                }
            }
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

fn null_family(i: u64) -> Family {
    let with_c = i % 2 == 1;
    let null = if (i / 2).is_multiple_of(2) {
        NullKind::MIgnoresA
    } else {
        NullKind::YIgnoresM
    };
    match (i / 4) % 6 {
        0 => Family::Independent(IndependentOptions {
            with_c,
            null: Some(null),
            ..IndependentOptions::default()
        }),
        1 => Family::Independent(IndependentOptions {
            with_c,
            with_l: true,
            null: Some(NullKind::YIgnoresM),
            ..IndependentOptions::default()
        }),
        2 => Family::Independent(IndependentOptions {
            with_c,
            layout: Layout::Separable2 { l_reads: ComponentKind::Mediator },
            null: Some(null),
            ..IndependentOptions::default()
        }),
        3 => Family::CrossWorld(CrossWorldOptions {
            with_c,
            mediation_null: true,
            a5: false,
            m_size: 2 + (i / 2 % 2) as usize,
        }),
        4 => Family::SeparableNull { m_size: 2 },
        _ => Family::IntermediateNull,
    }
}

/// Outcome of one sweep model.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepItem {
    pub index: u64,
    /// Whether the model was certified to lie in the premise.
    pub certified: bool,
    pub deviation: f64,
    /// Property-specific secondary quantity.
    pub extra: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub index: u64,
    pub deviation: f64,
    pub scm: FiniteScm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// `None` for an identification battery.
    pub property: Option<Property>,
    pub n: u64,
    pub passed: u64,
    pub uncertified: u64,
    pub max_deviation: f64,
    pub worst_index: Option<u64>,
    /// Label and maximum of the property's secondary quantity, if any.
    pub extra: Option<(String, f64)>,
    /// A model outside the premise on which the property fails.
    pub outside_witness: Option<Witness>,
}

fn in_class(scm: &FiniteScm, class: ModelClass) -> Result<bool> {
    if !crate::assumptions::layout_matches(scm, class) {
        return Ok(false);
    }
    for &id in class_assumptions(class) {
        if !check_assumption(scm, id, DEFAULT_TOL)?.holds {
            return Ok(false);
        }
    }
    Ok(true)
}

fn ident(dist: &ObsDistribution, e: Effect, class: ModelClass) -> Result<f64> {
    Ok(identify(dist, e, class, None)?.value)
}

fn gap(a: f64, b: f64) -> f64 {
    libm::fabs(a - b)
}

fn exact(scm: &FiniteScm, e: Effect) -> Result<f64> {
    Ok(effect(scm, e)?.value)
}

fn invariance_gap(dist: &ObsDistribution, m_size: usize) -> Result<f64> {
    let vals: Vec<f64> = (0..m_size).map(|m| formula5(dist, m)).collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for x in &vals {
        for y in &vals {
            worst = worst.max(gap(*x, *y));
        }
    }
    Ok(worst)
}

/// Every decomposition of `scm` against its total effect.
pub fn telescoping_gap(scm: &FiniteScm) -> Result<f64> {
    let te = nested_expectation(scm, &y_total(scm, 1))? - nested_expectation(scm, &y_total(scm, 0))?;
    let mut worst = gap(exact(scm, Effect::Nde)? + exact(scm, Effect::Nie)?, te);
    let it = interventional_expectation(scm, 1, 1)? - interventional_expectation(scm, 0, 0)?;
    worst = worst.max(gap(exact(scm, Effect::Ide)? + exact(scm, Effect::Iie)?, it));
    let m_size = scm.node(scm.mediator()).size();
    for m in 0..m_size {
        worst = worst.max(gap(exact(scm, Effect::Cde(m))? + exact(scm, Effect::Pe(m))?, te));
    }
    let has_l = scm.intermediate().is_some();
    let kinds = scm.components().len();
    if kinds == 2 {
        worst = worst.max(gap(exact(scm, Effect::Sde)? + exact(scm, Effect::Sie)?, te));
    }
    if kinds == 3 && has_l {
        let s = exact(scm, Effect::SeDirect)? + exact(scm, Effect::SeL)? + exact(scm, Effect::SeM)?;
        worst = worst.max(gap(s, te));
    }
    if has_l {
        let jm = exact(scm, Effect::JmDirect)? + exact(scm, Effect::JmLm)?;
        let pse =
            exact(scm, Effect::PseDirect)? + exact(scm, Effect::PseL)? + exact(scm, Effect::PseM)?;
        worst = worst.max(gap(jm, te)).max(gap(pse, te));
    }
    Ok(worst)
}

/// Evaluates `property` on model `index` of the sweep seeded by `seed`.
pub fn sweep_item(property: Property, seed: u64, index: u64) -> Result<SweepItem> {
    let scm = generate(&property.family(index), &mut attempt_rng(seed, index));
    let certified = match property.premise_class() {
        Some(class) => in_class(&scm, class)?,
        None if property == Property::NullImpliesNieZero => {
            check_assumption(&scm, AssumptionId::MedNull, 0.0)?.holds
        }
        None => true,
    };
    let dist = ObsDistribution::from_scm(&scm)?;
    let m_size = scm.node(scm.mediator()).size();
    let mut extra = 0.0;
    let deviation = match property {
        Property::NullImpliesNieZero => {
            if scm.intermediate().is_none() && in_class(&scm, ModelClass::Ffrcistg)? {
                extra = libm::fabs(exact(&scm, Effect::Iie)?);
            }
            libm::fabs(exact(&scm, Effect::Nie)?)
        }
        Property::SieEqualsNie => gap(exact(&scm, Effect::Sie)?, exact(&scm, Effect::Nie)?),
        Property::MediationFormulaNie => gap(
            ident(&dist, Effect::Nie, ModelClass::NpsemIe)?,
            exact(&scm, Effect::Nie)?,
        ),
        Property::MediationFormulaIie => gap(
            ident(&dist, Effect::Iie, ModelClass::Ffrcistg)?,
            exact(&scm, Effect::Iie)?,
        ),
        Property::InterventionalFormulaIie => gap(
            ident(&dist, Effect::Iie, ModelClass::FfrcistgL)?,
            exact(&scm, Effect::Iie)?,
        ),
        Property::PortionEliminatedNie => {
            let nie = exact(&scm, Effect::Nie)?;
            let mut w = 0.0f64;
            for m in 0..m_size {
                w = w.max(gap(formula5(&dist, m)?, nie));
            }
            w
        }
        Property::PortionEliminatedInvariance => {
            let nie = exact(&scm, Effect::Nie)?;
            for m in 0..m_size {
                extra = f64::max(extra, gap(formula5(&dist, m)?, nie));
            }
            invariance_gap(&dist, m_size)?
        }
        Property::SeparableLmSie | Property::SeparableLySie | Property::SeparableThreeSe => {
            let class = property.premise_class().expect("class");
            let mut w = 0.0f64;
            for rule in DISPATCH.iter().filter(|r| r.class == class) {
                w = w.max(rule_gap(&scm, &dist, rule)?);
            }
            w
        }
        Property::JointPathFormulas => {
            let mut w = 0.0f64;
            for rule in DISPATCH
                .iter()
                .filter(|r| r.class == ModelClass::NpsemIeL || r.class == ModelClass::NpsemIeLm)
            {
                if rule.class == ModelClass::NpsemIeL && !in_class(&scm, ModelClass::NpsemIeL)? {
                    continue;
                }
                w = w.max(rule_gap(&scm, &dist, rule)?);
            }
            w
        }
        Property::Telescoping => telescoping_gap(&scm)?,
    };
    Ok(SweepItem {
        index,
        certified,
        deviation,
        extra,
    })
}

/// `|formula - exact|` for one dispatch rule, over every m' it takes.
pub fn rule_gap(scm: &FiniteScm, dist: &ObsDistribution, rule: &Rule) -> Result<f64> {
    use crate::identification::EffectKey;
    match rule.effect {
        EffectKey::Plain(e) if rule.formula.needs_m() => {
            let target = exact(scm, e)?;
            let mut w = 0.0f64;
            for m in 0..scm.node(scm.mediator()).size() {
                w = w.max(gap(rule.formula.evaluate(dist, Some(m))?, target));
            }
            Ok(w)
        }
        EffectKey::Plain(e) => Ok(gap(rule.formula.evaluate(dist, None)?, exact(scm, e)?)),
        EffectKey::Cde => {
            let mut w = 0.0f64;
            for m in 0..scm.node(scm.mediator()).size() {
                w = w.max(gap(rule.formula.evaluate(dist, Some(m))?, exact(scm, Effect::Cde(m))?));
            }
            Ok(w)
        }
    }
}

/// Model `index` of the identification battery for one dispatch rule:
/// drawn from the rule's premise family and certified against its class.
pub fn battery_item(rule: &Rule, seed: u64, index: u64) -> Result<SweepItem> {
    let scm = generate(&premise_family(rule.class, index), &mut attempt_rng(seed, index));
    let certified = in_class(&scm, rule.class)?;
    let dist = ObsDistribution::from_scm(&scm)?;
    Ok(SweepItem {
        index,
        certified,
        deviation: rule_gap(&scm, &dist, rule)?,
        extra: 0.0,
    })
}

fn extra_label(property: Property) -> Option<&'static str> {
    match property {
        Property::NullImpliesNieZero => Some("max |IIE| on single-world models"),
        Property::PortionEliminatedInvariance => Some("max |formula - NIE|"),
        _ => None,
    }
}

/// Aggregates items, in index order, into a report.
pub fn aggregate(property: Option<Property>, items: &[SweepItem], tol: f64) -> SweepReport {
    let mut report = SweepReport {
        property,
        n: items.len() as u64,
        passed: 0,
        uncertified: 0,
        max_deviation: 0.0,
        worst_index: None,
        extra: property.and_then(extra_label).map(|l| (l.to_string(), 0.0)),
        outside_witness: None,
    };
    for it in items {
        if !it.certified {
            report.uncertified += 1;
            continue;
        }
        if it.deviation <= tol {
            report.passed += 1;
        }
        if report.worst_index.is_none() || it.deviation > report.max_deviation {
            report.max_deviation = it.deviation;
            report.worst_index = Some(it.index);
        }
        if let Some((_, v)) = report.extra.as_mut() {
            *v = v.max(it.extra);
        }
    }
    report
}

/// Searches models outside the premise for one violating the property by
/// at least `min_gap`. Only the invariance property has such a search.
pub fn outside_witness(property: Property, seed: u64, budget: u64, min_gap: f64) -> Result<Option<Witness>> {
    if property != Property::PortionEliminatedInvariance {
        return Ok(None);
    }
    for i in 0..budget {
        let family = Family::Independent(IndependentOptions {
            with_c: i % 2 == 1,
            with_l: true,
            ..IndependentOptions::default()
        });
        let scm = generate(&family, &mut attempt_rng(seed ^ 0x5eed, i));
        let dist = ObsDistribution::from_scm(&scm)?;
        let d = invariance_gap(&dist, scm.node(scm.mediator()).size())?;
        if d >= min_gap && !in_class(&scm, ModelClass::FfrcistgLA5)? {
            return Ok(Some(Witness {
                index: i,
                deviation: d,
                scm,
            }));
        }
    }
    Ok(None)
}

/// Sequential sweep over `n` models.
pub fn property_sweep(property: Property, n: u64, seed: u64) -> Result<SweepReport> {
    let items: Vec<SweepItem> = (0..n)
        .map(|i| sweep_item(property, seed, i))
        .collect::<Result<_>>()?;
    let mut report = aggregate(Some(property), &items, EPS_NUM);
    report.outside_witness = outside_witness(property, seed, 1000, 0.01)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constraints_reject_overlap() {
        let c = ScmConstraints {
            required: vec![AssumptionId::A1],
            forbidden: vec![AssumptionId::A1],
            ..Default::default()
        };
        assert!(matches!(random_scm(&c, 1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn generated_models_are_certified() {
        let c = ScmConstraints {
            family: StructuralFamily::Separable2,
            required: vec![AssumptionId::A8, AssumptionId::A9],
            forbidden: vec![AssumptionId::A6],
            budget: 200,
            ..Default::default()
        };
        let scm = random_scm(&c, 5).unwrap();
        assert!(check_assumption(&scm, AssumptionId::A8, DEFAULT_TOL).unwrap().holds);
        assert!(!check_assumption(&scm, AssumptionId::A6, DEFAULT_TOL).unwrap().holds);

        let null = ScmConstraints {
            require_mediation_null: true,
            with_c: true,
            ..Default::default()
        };
        let scm = random_scm(&null, 2).unwrap();
        assert!(check_assumption(&scm, AssumptionId::MedNull, 0.0).unwrap().holds);
        assert_eq!(scm, random_scm(&null, 2).unwrap());
    }

    #[test]
    fn impossible_constraints_exhaust_budget() {
        let c = ScmConstraints {
            required: vec![AssumptionId::A6],
            budget: 5,
            ..Default::default()
        };
        assert!(matches!(random_scm(&c, 0), Err(Error::MissingStructure(_)) | Err(Error::Infeasible(_))));
    }

    #[test]
    fn separable_counterexample_found() {
        let c = find_counterexample(Target::SeparableNull, &[], 200, 42, 0.01)
            .unwrap()
            .expect("found");
        assert!(libm::fabs(c.effect_value) >= 0.01);
        assert!(libm::fabs(c.estimand_value - c.formula_value) <= EPS_NUM);
        assert!(c.certificate.iter().all(|r| r.holds));
        let again = find_counterexample(Target::SeparableNull, &[], 200, 42, 0.01).unwrap().unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn isolation_rules_out_counterexamples() {
        let none = find_counterexample(
            Target::SeparableNull,
            &[AssumptionId::A6, AssumptionId::A7],
            64,
            1,
            0.01,
        )
        .unwrap();
        assert!(none.is_none());
    }

    #[test]
    fn intermediate_counterexample_found() {
        let c = find_counterexample(Target::IntermediateNull, &[], 500, 9, 0.01)
            .unwrap()
            .expect("found");
        assert!(libm::fabs(c.formula_value) >= 0.01);
        assert!(libm::fabs(c.estimand_value - c.formula_value) <= EPS_NUM);
    }

    #[test]
    fn small_sweeps_pass() {
        for &p in Property::ALL {
            let r = property_sweep(p, 24, 3).unwrap();
            assert_eq!(r.uncertified, 0, "{}", p);
            assert_eq!(r.passed, r.n, "{} max {}", p, r.max_deviation);
        }
    }

    #[test]
    fn target_and_property_tags_round_trip() {
        for t in [Target::SeparableNull, Target::IntermediateNull] {
            assert_eq!(Target::parse(t.tag()), Some(t));
        }
        assert_eq!(Target::parse("theorem2"), Some(Target::SeparableNull));
        for &p in Property::ALL {
            assert_eq!(Property::parse(p.tag()), Some(p));
        }
    }
}
