//! Decision tree recommending an effect measure and its identifying
//! formula from answers about the study design.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::assumptions::AssumptionId;
use crate::error::{Error, Result};
use crate::estimands::Effect;
use crate::identification::{class_assumptions, Formula, ModelClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Next {
    Ask(&'static str),
    Done(&'static str),
    /// Nothing is identified on this branch.
    Stop(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decision {
    pub id: &'static str,
    pub question: &'static str,
    pub options: &'static [(&'static str, Next)],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Terminal {
    pub id: &'static str,
    pub effect: Effect,
    pub class: ModelClass,
    pub formula: Formula,
    pub mediational: bool,
    pub note: &'static str,
    pub caveats: &'static [&'static str],
}

pub const ROOT: &str = "l-present";

pub const DECISIONS: &[Decision] = &[
    Decision {
        id: "l-present",
        question: "Is there an intermediate confounder L, affected by A and affecting both M and Y?",
        options: &[("yes", Next::Ask("confounding")), ("no", Next::Ask("cross-world"))],
    },
    Decision {
        id: "cross-world",
        question: "Is independence between counterfactuals of different exposure worlds (NPSEM-IE) plausible?",
        options: &[("plausible", Next::Done("nie-npsem")), ("implausible", Next::Ask("interaction"))],
    },
    Decision {
        id: "interaction",
        question: "Is there no mean causal interaction between A and M on Y given M(0) and C (A5)?",
        options: &[("holds", Next::Done("nie-a5")), ("fails", Next::Ask("separable"))],
    },
    Decision {
        id: "separable",
        question: "Can A be split into components A_M and A_Y meeting the dismissible-component conditions (A8, A9)?",
        options: &[("yes", Next::Done("sie-population")), ("no", Next::Done("iie-single-world"))],
    },
    Decision {
        id: "confounding",
        question: "Is there no unmeasured exposure-mediator (A1), exposure-outcome (A2) or mediator-outcome (A10) confounding?",
        options: &[
            ("hold", Next::Ask("target")),
            ("violated-lm", Next::Done("jm-joint")),
            ("violated-ly", Next::Done("jm-joint")),
            ("violated-both", Next::Done("jm-joint")),
            ("violated-exposure", Next::Stop("unmeasured confounding of the exposure")),
        ],
    },
    Decision {
        id: "target",
        question: "Is the aim a single indirect effect, or a decomposition along the paths through L and M?",
        options: &[("indirect", Next::Ask("l-interaction")), ("decomposition", Next::Done("pse-paths"))],
    },
    Decision {
        id: "l-interaction",
        question: "Is there no mean causal interaction between A and M on Y given M(0) and C (A5)?",
        options: &[("holds", Next::Done("nie-portion-eliminated")), ("fails", Next::Done("iie-l"))],
    },
];

pub const TERMINALS: &[Terminal] = &[
    Terminal {
        id: "nie-npsem",
        effect: Effect::Nie,
        class: ModelClass::NpsemIe,
        formula: Formula::MediationIndirect,
        mediational: true,
        note: "NIE by the mediation formula; it satisfies the mediation null criterion",
        caveats: &["the cross-world independence cannot be tested experimentally"],
    },
    Terminal {
        id: "nie-a5",
        effect: Effect::Nie,
        class: ModelClass::FfrcistgA5,
        formula: Formula::MediationIndirect,
        mediational: true,
        note: "NIE by the mediation formula under the single-world model with no interaction",
        caveats: &[],
    },
    Terminal {
        id: "nie-portion-eliminated",
        effect: Effect::Nie,
        class: ModelClass::FfrcistgLA5,
        formula: Formula::PortionEliminated,
        mediational: true,
        note: "NIE by the portion-eliminated formula, which holds for any reference value m'",
        caveats: &["requires every (A, M) cell to have positive probability in each baseline stratum"],
    },
    Terminal {
        id: "sie-population",
        effect: Effect::Sie,
        class: ModelClass::PopFfrcistg,
        formula: Formula::MediationIndirect,
        mediational: false,
        note: "SIE by the mediation formula; read it as the effect of the mediator-affecting component",
        caveats: &["under population-level conditions alone SIE can be non-zero when no individual has an indirect path"],
    },
    Terminal {
        id: "iie-single-world",
        effect: Effect::Iie,
        class: ModelClass::Ffrcistg,
        formula: Formula::MediationIndirect,
        mediational: false,
        note: "IIE by the mediation formula; interpret it as the effect of shifting the mediator distribution",
        caveats: &["IIE can be non-zero when no individual has an indirect path"],
    },
    Terminal {
        id: "iie-l",
        effect: Effect::Iie,
        class: ModelClass::FfrcistgL,
        formula: Formula::InterventionalIndirectL,
        mediational: false,
        note: "only the interventional reading of IIE is available, identified by the L-adjusted formula",
        caveats: &["IIE can be non-zero when no individual has an indirect path"],
    },
    Terminal {
        id: "pse-paths",
        effect: Effect::PseM,
        class: ModelClass::NpsemIeL,
        formula: Formula::Q3ViaM,
        mediational: false,
        note: "path-specific effects through L and M, or the three-component separable effects SE, both by Q3",
        caveats: &["SE_direct, SE_L and SE_M are identified by the same Q3 contrasts under popFFRCISTG-3"],
    },
    Terminal {
        id: "jm-joint",
        effect: Effect::JmLm,
        class: ModelClass::NpsemIeLm,
        formula: Formula::Q1Indirect,
        mediational: false,
        note: "cannot identify the indirect effect; treat (L, M) as joint mediators (JM) or use SIE with L consuming A_M, both by Q1",
        caveats: &["SIE under popFFRCISTG-LM shares the Q1 contrast"],
    },
];

#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    pub terminal: &'static str,
    pub estimand: Effect,
    pub class: ModelClass,
    pub formula: Formula,
    pub assumptions: Vec<AssumptionId>,
    pub mediational: bool,
    pub note: &'static str,
    pub caveats: Vec<&'static str>,
    /// Decisions visited, with the answers given.
    pub path: Vec<(&'static str, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Advice {
    Question(&'static Decision),
    Done(Recommendation),
}

pub fn decision(id: &str) -> Option<&'static Decision> {
    DECISIONS.iter().find(|d| d.id == id)
}

pub fn terminal(id: &str) -> Option<&'static Terminal> {
    TERMINALS.iter().find(|t| t.id == id)
}

fn subtree_asks(from: Next, key: &str, depth: usize) -> bool {
    match from {
        Next::Ask(id) if depth < 16 => {
            id == key
                || decision(id).is_some_and(|d| {
                    d.options.iter().any(|(_, n)| subtree_asks(*n, key, depth + 1))
                })
        }
        _ => false,
    }
}

/// Walks the tree with `answers` (any order). Returns the next unanswered
/// question or the recommendation at the leaf.
pub fn advise(answers: &[(String, String)]) -> Result<Advice> {
    for (i, (k, _)) in answers.iter().enumerate() {
        if decision(k).is_none() {
            return Err(Error::InvalidArgument(format!("unknown decision `{}`", k)));
        }
        if answers[..i].iter().any(|(j, _)| j == k) {
            return Err(Error::InvalidArgument(format!("decision `{}` answered twice", k)));
        }
    }
    let get = |k: &str| answers.iter().find(|(j, _)| j == k).map(|(_, v)| v.as_str());
    let mut path: Vec<(&'static str, String)> = Vec::new();
    let mut taken: Vec<(&'static Decision, &'static str)> = Vec::new();
    let mut at = decision(ROOT).expect("root");
    let leaf = loop {
        let answer = match get(at.id) {
            Some(a) => a,
            None => return Ok(Advice::Question(at)),
        };
        let (label, next) = at
            .options
            .iter()
            .find(|(o, _)| *o == answer)
            .copied()
            .ok_or_else(|| {
                let allowed: Vec<&str> = at.options.iter().map(|o| o.0).collect();
                Error::InvalidArgument(format!(
                    "`{}` is not an answer to `{}` (expected one of {})",
                    answer,
                    at.id,
                    allowed.join(", ")
                ))
            })?;
        path.push((at.id, label.to_string()));
        taken.push((at, label));
        match next {
            Next::Ask(id) => at = decision(id).expect("tree is closed"),
            other => break other,
        }
    };
    for (k, v) in answers {
        if path.iter().any(|(p, _)| p == k) {
            continue;
        }
        let culprit = taken.iter().rev().find(|(d, chosen)| {
            d.options
                .iter()
                .any(|(o, n)| o != chosen && subtree_asks(*n, k, 0))
        });
        let (d, chosen) = culprit.copied().unwrap_or(taken[0]);
        return Err(Error::InconsistentAnswers(format!(
            "{}={} conflicts with {}={}",
            d.id, chosen, k, v
        )));
    }
    match leaf {
        Next::Done(id) => {
            let t = terminal(id).expect("tree is closed");
            Ok(Advice::Done(Recommendation {
                terminal: t.id,
                estimand: t.effect,
                class: t.class,
                formula: t.formula,
                assumptions: class_assumptions(t.class).to_vec(),
                mediational: t.mediational,
                note: t.note,
                caveats: t.caveats.to_vec(),
                path,
            }))
        }
        Next::Stop(reason) => Err(Error::NotIdentified {
            effect: "a mediation effect".into(),
            class: "this design".into(),
            reason: reason.into(),
        }),
        Next::Ask(_) => unreachable!(),
    }
}

/// Parses `key=value,key=value`.
pub fn parse_answers(s: &str) -> Result<Vec<(String, String)>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("answer `{}` is not key=value", p)))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

/// Static checks: every decision is reachable, every reference resolves,
/// no path asks more than eight questions, and every terminal pair is a
/// registered identification rule.
pub fn check_tree() -> Result<()> {
    fn walk(id: &'static str, depth: usize, seen: &mut Vec<&'static str>, used: &mut Vec<&'static str>) -> Result<()> {
        if depth > 8 {
            return Err(Error::InvalidModel(format!("path through `{}` asks more than eight questions", id)));
        }
        let d = decision(id).ok_or_else(|| Error::InvalidModel(format!("unknown decision `{}`", id)))?;
        if !seen.contains(&id) {
            seen.push(id);
        }
        for (_, n) in d.options {
            match *n {
                Next::Ask(next) => walk(next, depth + 1, seen, used)?,
                Next::Done(t) => {
                    terminal(t).ok_or_else(|| Error::InvalidModel(format!("unknown terminal `{}`", t)))?;
                    if !used.contains(&t) {
                        used.push(t);
                    }
                }
                Next::Stop(_) => {}
            }
        }
        Ok(())
    }
    let mut seen = Vec::new();
    let mut used = Vec::new();
    walk(ROOT, 1, &mut seen, &mut used)?;
    if let Some(d) = DECISIONS.iter().find(|d| !seen.contains(&d.id)) {
        return Err(Error::InvalidModel(format!("decision `{}` is unreachable", d.id)));
    }
    if let Some(t) = TERMINALS.iter().find(|t| !used.contains(&t.id)) {
        return Err(Error::InvalidModel(format!("terminal `{}` is unreachable", t.id)));
    }
    for t in TERMINALS {
        match crate::identification::find_rule(t.effect, t.class) {
            Some(r) if r.formula == t.formula => {}
            _ => {
                return Err(Error::InvalidModel(format!(
                    "terminal `{}` names an unregistered pair",
                    t.id
                )))
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(s: &str) -> Result<Advice> {
        advise(&parse_answers(s).unwrap())
    }

    fn done(s: &str) -> Recommendation {
        match run(s).unwrap() {
            Advice::Done(r) => r,
            Advice::Question(q) => panic!("pending {}", q.id),
        }
    }

    #[test]
    fn tree_is_well_formed() {
        check_tree().unwrap();
    }

    #[test]
    fn worked_example_branches() {
        let r = done("l-present=yes,target=indirect,confounding=hold,l-interaction=holds");
        assert_eq!((r.estimand, r.formula), (Effect::Nie, Formula::PortionEliminated));
        assert!(r.mediational);
        let r = done("l-present=yes,target=indirect,confounding=hold,l-interaction=fails");
        assert_eq!((r.estimand, r.formula), (Effect::Iie, Formula::InterventionalIndirectL));
        assert!(!r.mediational);
        let r = done("l-present=yes,confounding=violated-both");
        assert_eq!(r.estimand, Effect::JmLm);
        assert!(!r.mediational);
        assert!(r.note.contains("cannot identify the indirect effect"));
    }

    #[test]
    fn pending_and_errors() {
        match run("l-present=no").unwrap() {
            Advice::Question(q) => assert_eq!(q.id, "cross-world"),
            _ => panic!(),
        }
        assert!(matches!(run("l-present=maybe"), Err(Error::InvalidArgument(_))));
        assert!(matches!(run("colour=red"), Err(Error::InvalidArgument(_))));
        match run("l-present=no,cross-world=plausible,confounding=violated-both") {
            Err(Error::InconsistentAnswers(m)) => {
                assert_eq!(m, "l-present=no conflicts with confounding=violated-both")
            }
            other => panic!("{:?}", other),
        }
        assert!(matches!(
            run("l-present=yes,confounding=violated-exposure"),
            Err(Error::NotIdentified { .. })
        ));
    }

    #[test]
    fn mediational_only_where_equal_to_nie() {
        for t in TERMINALS {
            assert_eq!(t.mediational, t.effect == Effect::Nie, "{}", t.id);
        }
    }
}
