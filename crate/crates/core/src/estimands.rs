//! Exact ground-truth effect measures.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::counterfactual::{compile, counterfactual_mean, eval, Cf};
use crate::error::{Error, Result};
use crate::scm::{ComponentKind, FiniteScm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Effect {
    Te,
    Nde,
    Nie,
    Ide,
    Iie,
    /// Controlled direct effect at the mediator value with this index.
    Cde(usize),
    /// Portion eliminated, `TE - CDE(m')`.
    Pe(usize),
    Sde,
    Sie,
    SeDirect,
    SeL,
    SeM,
    JmDirect,
    JmLm,
    PseDirect,
    PseL,
    PseM,
}

impl Effect {
    /// Every effect that takes no parameter.
    pub const PLAIN: &'static [Effect] = &[
        Effect::Te,
        Effect::Nde,
        Effect::Nie,
        Effect::Ide,
        Effect::Iie,
        Effect::Sde,
        Effect::Sie,
        Effect::SeDirect,
        Effect::SeL,
        Effect::SeM,
        Effect::JmDirect,
        Effect::JmLm,
        Effect::PseDirect,
        Effect::PseL,
        Effect::PseM,
    ];

    pub fn parse(s: &str) -> Option<Effect> {
        let s = s.trim();
        let param = |prefix: &str| -> Option<usize> {
            s.strip_prefix(prefix)?.strip_suffix(')')?.trim().parse().ok()
        };
        if let Some(m) = param("CDE(") {
            return Some(Effect::Cde(m));
        }
        if let Some(m) = param("PE(") {
            return Some(Effect::Pe(m));
        }
        Effect::PLAIN.iter().copied().find(|e| e.to_string() == s)
    }

    pub fn needs_intermediate(self) -> bool {
        matches!(
            self,
            Effect::SeDirect
                | Effect::SeL
                | Effect::SeM
                | Effect::JmDirect
                | Effect::JmLm
                | Effect::PseDirect
                | Effect::PseL
                | Effect::PseM
        )
    }

    pub fn needs_separable(self) -> bool {
        matches!(
            self,
            Effect::Sde | Effect::Sie | Effect::SeDirect | Effect::SeL | Effect::SeM
        )
    }
}

impl fmt::Display for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Effect::Te => "TE",
            Effect::Nde => "NDE",
            Effect::Nie => "NIE",
            Effect::Ide => "IDE",
            Effect::Iie => "IIE",
            Effect::Cde(m) => return write!(f, "CDE({})", m),
            Effect::Pe(m) => return write!(f, "PE({})", m),
            Effect::Sde => "SDE",
            Effect::Sie => "SIE",
            Effect::SeDirect => "SE_direct",
            Effect::SeL => "SE_L",
            Effect::SeM => "SE_M",
            Effect::JmDirect => "JM_direct",
            Effect::JmLm => "JM_LM",
            Effect::PseDirect => "PSE_direct",
            Effect::PseL => "PSE_L",
            Effect::PseM => "PSE_M",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimandResult {
    pub name: String,
    pub value: f64,
    /// Each sub-expectation used, by display name.
    pub components: Vec<(String, f64)>,
}

fn name_of(scm: &FiniteScm, i: usize) -> String {
    scm.node(i).name.clone()
}

fn need_l(scm: &FiniteScm) -> Result<String> {
    scm.intermediate()
        .map(|i| name_of(scm, i))
        .ok_or_else(|| Error::MissingStructure("effect requires an intermediate confounder L".into()))
}

fn need_component(scm: &FiniteScm, kind: ComponentKind) -> Result<String> {
    scm.component(kind).map(|i| name_of(scm, i)).ok_or_else(|| {
        Error::MissingStructure(format!(
            "effect requires a separable exposure with an A_{} component",
            kind.tag()
        ))
    })
}

/// `Y(A=a1, M=M(A=a2))`.
pub fn y_nested(scm: &FiniteScm, a1: usize, a2: usize) -> Cf {
    let a = name_of(scm, scm.exposure());
    let m = name_of(scm, scm.mediator());
    Cf::new(&name_of(scm, scm.outcome()))
        .set(&a, a1)
        .nest(&m, Cf::new(&m).set(&a, a2))
}

/// `Y(A=a)`.
pub fn y_total(scm: &FiniteScm, a1: usize) -> Cf {
    Cf::new(&name_of(scm, scm.outcome())).set(&name_of(scm, scm.exposure()), a1)
}

/// `Y(A=a, M=m)`.
pub fn y_controlled(scm: &FiniteScm, a1: usize, m: usize) -> Cf {
    y_total(scm, a1).set(&name_of(scm, scm.mediator()), m)
}

/// `Y_S(a1, a2) = Y(A_Y=a1, A_M=a2)`.
pub fn y_s(scm: &FiniteScm, a1: usize, a2: usize) -> Result<Cf> {
    let ay = need_component(scm, ComponentKind::Outcome)?;
    let am = need_component(scm, ComponentKind::Mediator)?;
    Ok(Cf::new(&name_of(scm, scm.outcome())).set(&ay, a1).set(&am, a2))
}

/// `Y_SL(a1, a2, a3) = Y(A_Y*=a1, A_L*=a2, A_M*=a3)`.
pub fn y_sl(scm: &FiniteScm, a1: usize, a2: usize, a3: usize) -> Result<Cf> {
    let ay = need_component(scm, ComponentKind::Outcome)?;
    let al = need_component(scm, ComponentKind::Intermediate)?;
    let am = need_component(scm, ComponentKind::Mediator)?;
    Ok(Cf::new(&name_of(scm, scm.outcome()))
        .set(&ay, a1)
        .set(&al, a2)
        .set(&am, a3))
}

/// `Y(A=a1, L=L(a2), M=M(a2))`.
pub fn phi_jm_cf(scm: &FiniteScm, a1: usize, a2: usize) -> Result<Cf> {
    let l = need_l(scm)?;
    let a = name_of(scm, scm.exposure());
    let m = name_of(scm, scm.mediator());
    Ok(y_total(scm, a1)
        .nest(&l, Cf::new(&l).set(&a, a2))
        .nest(&m, Cf::new(&m).set(&a, a2)))
}

/// `Y(A=a1, L=L(a2), M=M(A=a3, L=L(a2)))`.
pub fn phi_pse_cf(scm: &FiniteScm, a1: usize, a2: usize, a3: usize) -> Result<Cf> {
    let l = need_l(scm)?;
    let a = name_of(scm, scm.exposure());
    let m = name_of(scm, scm.mediator());
    let l_inner = Cf::new(&l).set(&a, a2);
    Ok(y_total(scm, a1)
        .nest(&l, l_inner.clone())
        .nest(&m, Cf::new(&m).set(&a, a3).nest(&l, l_inner)))
}

/// Exact expectation of a nested counterfactual by enumeration.
pub fn nested_expectation(scm: &FiniteScm, spec: &Cf) -> Result<f64> {
    counterfactual_mean(scm, spec)
}

/// `E_C sum_m P(M(a_draw)=m | C) E{Y(a_outer, m) | C}`: the mediator is a
/// random draw from its counterfactual law within baseline strata,
/// independent of the individual.
pub fn interventional_expectation(scm: &FiniteScm, a_outer: usize, a_draw: usize) -> Result<f64> {
    scm.ensure_valid()?;
    if a_outer > 1 || a_draw > 1 {
        return Err(Error::InvalidArgument("exposure values must be 0 or 1".into()));
    }
    let m_node = scm.mediator();
    let nm = scm.node(m_node).size();
    let c_node = scm.baseline();
    let nc = c_node.map_or(1, |c| scm.node(c).size());
    let draw = compile(scm, &Cf::new(&name_of(scm, m_node)).set(&name_of(scm, scm.exposure()), a_draw))?;
    let outer: Vec<_> = (0..nm)
        .map(|m| compile(scm, &y_controlled(scm, a_outer, m)))
        .collect::<Result<_>>()?;
    let yv = scm.node(scm.outcome()).values.clone();
    let mut pc = vec![0.0; nc];
    let mut pm = vec![0.0; nc * nm];
    let mut ey = vec![0.0; nc * nm];
    let mut scratch = Vec::new();
    let mut natural = vec![0; scm.nodes().len()];
    let none = vec![None; scm.nodes().len()];
    for (cfg, p) in scm.configurations() {
        let c = match c_node {
            Some(ci) => {
                scm.eval_into(cfg, &none, &mut natural);
                natural[ci]
            }
            None => 0,
        };
        pc[c] += p;
        pm[c * nm + eval(scm, &draw, cfg, &mut scratch)] += p;
        for (m, q) in outer.iter().enumerate() {
            ey[c * nm + m] += p * yv[eval(scm, q, cfg, &mut scratch)];
        }
    }
    let mut total = 0.0;
    for c in 0..nc {
        if pc[c] <= 0.0 {
            continue;
        }
        for m in 0..nm {
            total += pm[c * nm + m] * ey[c * nm + m] / pc[c];
        }
    }
    Ok(total)
}

struct Acc<'a> {
    scm: &'a FiniteScm,
    parts: Vec<(String, f64)>,
}

impl Acc<'_> {
    fn nested(&mut self, cf: Cf) -> Result<f64> {
        let v = nested_expectation(self.scm, &cf)?;
        self.parts.push((format!("E{{{}}}", cf), v));
        Ok(v)
    }

    fn interventional(&mut self, a_outer: usize, a_draw: usize) -> Result<f64> {
        let v = interventional_expectation(self.scm, a_outer, a_draw)?;
        let y = name_of(self.scm, self.scm.outcome());
        self.parts.push((format!("E{{{}({}, G({}))}}", y, a_outer, a_draw), v));
        Ok(v)
    }
}

/// Computes a named effect exactly, recording every sub-expectation used.
pub fn effect(scm: &FiniteScm, id: Effect) -> Result<EstimandResult> {
    scm.ensure_valid()?;
    if id.needs_intermediate() {
        need_l(scm)?;
    }
    if let Effect::Cde(m) | Effect::Pe(m) = id {
        if m >= scm.node(scm.mediator()).size() {
            return Err(Error::InvalidArgument(format!(
                "mediator value index {} outside its support",
                m
            )));
        }
    }
    let mut acc = Acc {
        scm,
        parts: Vec::new(),
    };
    let value = match id {
        Effect::Te => acc.nested(y_total(scm, 1))? - acc.nested(y_total(scm, 0))?,
        Effect::Nde => acc.nested(y_nested(scm, 1, 0))? - acc.nested(y_nested(scm, 0, 0))?,
        Effect::Nie => acc.nested(y_nested(scm, 1, 1))? - acc.nested(y_nested(scm, 1, 0))?,
        Effect::Ide => acc.interventional(1, 0)? - acc.interventional(0, 0)?,
        Effect::Iie => acc.interventional(1, 1)? - acc.interventional(1, 0)?,
        Effect::Cde(m) => {
            acc.nested(y_controlled(scm, 1, m))? - acc.nested(y_controlled(scm, 0, m))?
        }
        Effect::Pe(m) => {
            let te = acc.nested(y_total(scm, 1))? - acc.nested(y_total(scm, 0))?;
            te - (acc.nested(y_controlled(scm, 1, m))? - acc.nested(y_controlled(scm, 0, m))?)
        }
        Effect::Sde => acc.nested(y_s(scm, 1, 0)?)? - acc.nested(y_s(scm, 0, 0)?)?,
        Effect::Sie => acc.nested(y_s(scm, 1, 1)?)? - acc.nested(y_s(scm, 1, 0)?)?,
        Effect::SeDirect => acc.nested(y_sl(scm, 1, 0, 0)?)? - acc.nested(y_sl(scm, 0, 0, 0)?)?,
        Effect::SeL => acc.nested(y_sl(scm, 1, 1, 1)?)? - acc.nested(y_sl(scm, 1, 0, 1)?)?,
        Effect::SeM => acc.nested(y_sl(scm, 1, 0, 1)?)? - acc.nested(y_sl(scm, 1, 0, 0)?)?,
        Effect::JmDirect => {
            acc.nested(phi_jm_cf(scm, 1, 0)?)? - acc.nested(phi_jm_cf(scm, 0, 0)?)?
        }
        Effect::JmLm => acc.nested(phi_jm_cf(scm, 1, 1)?)? - acc.nested(phi_jm_cf(scm, 1, 0)?)?,
        Effect::PseDirect => {
            acc.nested(phi_pse_cf(scm, 1, 0, 0)?)? - acc.nested(phi_pse_cf(scm, 0, 0, 0)?)?
        }
        Effect::PseL => {
            acc.nested(phi_pse_cf(scm, 1, 1, 1)?)? - acc.nested(phi_pse_cf(scm, 1, 0, 1)?)?
        }
        Effect::PseM => {
            acc.nested(phi_pse_cf(scm, 1, 0, 1)?)? - acc.nested(phi_pse_cf(scm, 1, 0, 0)?)?
        }
    };
    Ok(EstimandResult {
        name: id.to_string(),
        value,
        components: acc.parts,
    })
}

/// Effects whose structural requirements the model meets.
pub fn applicable_effects(scm: &FiniteScm) -> Vec<Effect> {
    let has_l = scm.intermediate().is_some();
    let has = |k| scm.component(k).is_some();
    let mut out: Vec<Effect> = Effect::PLAIN
        .iter()
        .copied()
        .filter(|e| {
            let l_ok = !e.needs_intermediate() || has_l;
            let s_ok = match e {
                Effect::Sde | Effect::Sie => {
                    has(ComponentKind::Mediator) && has(ComponentKind::Outcome)
                }
                Effect::SeDirect | Effect::SeL | Effect::SeM => {
                    has(ComponentKind::Intermediate)
                        && has(ComponentKind::Mediator)
                        && has(ComponentKind::Outcome)
                }
                _ => true,
            };
            l_ok && s_ok
        })
        .collect();
    for m in 0..scm.node(scm.mediator()).size() {
        out.push(Effect::Cde(m));
        out.push(Effect::Pe(m));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn val(scm: &FiniteScm, e: Effect) -> f64 {
        effect(scm, e).unwrap().value
    }

    #[test]
    fn noisy_chain_effects() {
        let scm = fixtures::noisy_chain();
        assert!((val(&scm, Effect::Te) - 0.64).abs() < 1e-12);
        assert!((val(&scm, Effect::Nie) - 0.64).abs() < 1e-12);
        assert!(val(&scm, Effect::Nde).abs() < 1e-12);
        let y10 = nested_expectation(&scm, &y_nested(&scm, 1, 0)).unwrap();
        assert!((y10 - 0.18).abs() < 1e-12);
        assert!((interventional_expectation(&scm, 1, 0).unwrap() - 0.18).abs() < 1e-12);
    }

    #[test]
    fn composition_and_nulls() {
        for name in fixtures::NAMES {
            let scm = fixtures::by_name(name).unwrap();
            for a in 0..2 {
                let n = nested_expectation(&scm, &y_nested(&scm, a, a)).unwrap();
                let t = nested_expectation(&scm, &y_total(&scm, a)).unwrap();
                assert!((n - t).abs() < 1e-12, "{}", name);
            }
        }
        assert!(val(&fixtures::null_m(), Effect::Nie).abs() < 1e-12);
        let ny = fixtures::null_y();
        assert!(val(&ny, Effect::Nie).abs() < 1e-12);
        assert!((val(&ny, Effect::Cde(0)) - val(&ny, Effect::Cde(1))).abs() < 1e-12);
    }

    #[test]
    fn separable_fixture_matches_natural_effects() {
        let scm = fixtures::separable();
        assert!((val(&scm, Effect::Sie) - val(&scm, Effect::Nie)).abs() < 1e-12);
        assert!((val(&scm, Effect::Sde) - val(&scm, Effect::Nde)).abs() < 1e-12);
    }

    #[test]
    fn decompositions_telescope_with_l() {
        let scm = fixtures::l_chain();
        let te = val(&scm, Effect::Te);
        let jm = val(&scm, Effect::JmDirect) + val(&scm, Effect::JmLm);
        let pse = val(&scm, Effect::PseDirect) + val(&scm, Effect::PseL) + val(&scm, Effect::PseM);
        assert!((jm - te).abs() < 1e-12);
        assert!((pse - te).abs() < 1e-12);
        let pe = val(&scm, Effect::Pe(1));
        assert!((pe - (te - val(&scm, Effect::Cde(1)))).abs() < 1e-12);
    }

    #[test]
    fn missing_structure_is_reported() {
        let scm = fixtures::noisy_chain();
        assert!(matches!(effect(&scm, Effect::JmLm), Err(Error::MissingStructure(_))));
        assert!(matches!(effect(&scm, Effect::Sie), Err(Error::MissingStructure(_))));
        assert!(matches!(effect(&scm, Effect::Cde(5)), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn names_round_trip() {
        for e in Effect::PLAIN.iter().copied().chain([Effect::Cde(2), Effect::Pe(0)]) {
            assert_eq!(Effect::parse(&e.to_string()), Some(e));
        }
        assert_eq!(Effect::parse("XYZ"), None);
    }
}
