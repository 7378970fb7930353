//! Text format for finite SCMs.
//!
//! ```text
//! [variables]
//! A : A : 0, 1
//! M : M : 0, 1
//! Y : Y : 0, 1
//!
//! [exogenous]
//! eA : 0, 1
//! eM : 0, 1
//! 0, 0 = 0.25
//! 0, 1 = 0.25
//! 1, 0 = 0.25
//! 1, 1 = 0.25
//!
//! [functions]
//! A <- eA
//! 0 -> 0
//! 1 -> 1
//! M <- A, eM
//! 0, 0 -> 0
//! ...
//!
//! [declares]
//! NPSEM-IE
//! ```
//!
//! Roles are `C`, `A`, `L`, `M`, `Y` or `component`; every component also
//! appears in `[separable]` as `name : kind -> consumers`. Exogenous rows
//! give the joint pmf; omitted configurations have probability zero.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use mediation_core::scm::{ComponentKind, ParentRef, Variable};
use mediation_core::{FiniteScm, Role, ScmBuilder};

use crate::error::{parse_err, read, write, Error, Result};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Variables,
    Separable,
    Exogenous,
    Functions,
    Declares,
}

fn valid_name(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_alphanumeric() || matches!(c, '_' | '\'' | '.' | '-'))
}

fn list(s: &str) -> Vec<String> {
    if s.trim().is_empty() {
        return Vec::new();
    }
    s.split(',').map(|x| x.trim().to_string()).collect()
}

struct FunctionDraft {
    line: usize,
    output: String,
    parents: Vec<String>,
    rows: Vec<(usize, Vec<String>, String)>,
}

/// Parses a model file.
pub fn parse_model(text: &str) -> Result<FiniteScm> {
    let mut section = Section::None;
    let mut nodes: Vec<(usize, String, String, Vec<String>)> = Vec::new();
    let mut separable: Vec<(usize, String, ComponentKind, Vec<String>)> = Vec::new();
    let mut exo: Vec<(String, Vec<String>)> = Vec::new();
    let mut rows: Vec<(usize, Vec<String>, f64)> = Vec::new();
    let mut functions: Vec<FunctionDraft> = Vec::new();
    let mut declares: Vec<String> = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = match name.trim() {
                "variables" => Section::Variables,
                "separable" => Section::Separable,
                "exogenous" => Section::Exogenous,
                "functions" => Section::Functions,
                "declares" => Section::Declares,
                other => return parse_err(line_no, format!("unknown section [{}]", other)),
            };
            continue;
        }
        match section {
            Section::None => return parse_err(line_no, "content before the first section"),
            Section::Variables => {
                let parts: Vec<&str> = line.splitn(3, ':').map(str::trim).collect();
                if parts.len() != 3 {
                    return parse_err(line_no, "expected `name : role : labels`");
                }
                if !valid_name(parts[0]) {
                    return parse_err(line_no, format!("invalid variable name `{}`", parts[0]));
                }
                nodes.push((line_no, parts[0].into(), parts[1].into(), list(parts[2])));
            }
            Section::Separable => {
                let (head, consumers) = match line.split_once("->") {
                    Some(x) => x,
                    None => return parse_err(line_no, "expected `component : kind -> consumers`"),
                };
                let (name, kind) = match head.split_once(':') {
                    Some(x) => x,
                    None => return parse_err(line_no, "expected `component : kind -> consumers`"),
                };
                let kind = match ComponentKind::from_tag(kind.trim()) {
                    Some(k) => k,
                    None => return parse_err(line_no, format!("unknown component kind `{}`", kind.trim())),
                };
                separable.push((line_no, name.trim().into(), kind, list(consumers)));
            }
            Section::Exogenous => {
                if let Some((config, p)) = line.split_once('=') {
                    let p: f64 = match p.trim().parse() {
                        Ok(p) => p,
                        Err(_) => return parse_err(line_no, format!("invalid probability `{}`", p.trim())),
                    };
                    rows.push((line_no, list(config), p));
                } else if let Some((name, labels)) = line.split_once(':') {
                    if !rows.is_empty() {
                        return parse_err(line_no, "exogenous declarations must precede pmf rows");
                    }
                    if !valid_name(name.trim()) {
                        return parse_err(line_no, format!("invalid variable name `{}`", name.trim()));
                    }
                    exo.push((name.trim().into(), list(labels)));
                } else {
                    return parse_err(line_no, "expected `name : labels` or `config = probability`");
                }
            }
            Section::Functions => {
                if let Some((out, parents)) = line.split_once("<-") {
                    functions.push(FunctionDraft {
                        line: line_no,
                        output: out.trim().into(),
                        parents: list(parents),
                        rows: Vec::new(),
                    });
                } else if let Some((args, value)) = line.split_once("->") {
                    match functions.last_mut() {
                        Some(f) => f.rows.push((line_no, list(args), value.trim().into())),
                        None => return parse_err(line_no, "table row before any `output <- parents` header"),
                    }
                } else {
                    return parse_err(line_no, "expected `output <- parents` or `values -> value`");
                }
            }
            Section::Declares => declares.push(line.to_string()),
        }
    }

    let mut b = ScmBuilder::new();
    let mut labels_of: HashMap<String, Vec<String>> = HashMap::new();
    for (line, name, role, labels) in &nodes {
        let role = if role == "component" {
            match separable.iter().find(|s| &s.1 == name) {
                Some(s) => Role::Component(s.2),
                None => return parse_err(*line, format!("component `{}` is missing from [separable]", name)),
            }
        } else {
            match Role::from_tag(role) {
                Some(r) if r != Role::Exogenous && !matches!(r, Role::Component(_)) => r,
                _ => return parse_err(*line, format!("unknown role `{}`", role)),
            }
        };
        labels_of.insert(name.clone(), labels.clone());
        b = b.variable(name, role, labels.clone());
    }
    for (line, name, _, _) in &separable {
        if !nodes.iter().any(|n| &n.1 == name && n.2 == "component") {
            return parse_err(*line, format!("`{}` is not declared as a component in [variables]", name));
        }
    }
    let mut radix = Vec::new();
    for (name, labels) in &exo {
        labels_of.insert(name.clone(), labels.clone());
        radix.push(labels.len());
        b = b.variable(name, Role::Exogenous, labels.clone());
    }
    let total: usize = radix.iter().product();
    let mut pmf = vec![0.0; total];
    let mut seen = vec![false; total];
    for (line, config, p) in &rows {
        if config.len() != exo.len() {
            return parse_err(*line, format!("expected {} values, got {}", exo.len(), config.len()));
        }
        let mut idx = 0;
        for ((name, labels), v) in exo.iter().zip(config) {
            match labels.iter().position(|l| l == v) {
                Some(j) => idx = idx * labels.len() + j,
                None => return parse_err(*line, format!("`{}` is not in the support of `{}`", v, name)),
            }
        }
        if seen[idx] {
            return parse_err(*line, "configuration listed twice");
        }
        seen[idx] = true;
        pmf[idx] = *p;
    }
    b = b.joint_pmf(pmf);

    for f in &functions {
        let mut sizes = Vec::new();
        for p in &f.parents {
            match labels_of.get(p) {
                Some(l) => sizes.push(l.len()),
                None => return parse_err(f.line, format!("unknown parent `{}`", p)),
            }
        }
        let out_labels = match labels_of.get(&f.output) {
            Some(l) => l,
            None => return parse_err(f.line, format!("unknown variable `{}`", f.output)),
        };
        let cells: usize = sizes.iter().product();
        let mut table: Vec<Option<usize>> = vec![None; cells];
        for (line, args, value) in &f.rows {
            if args.len() != f.parents.len() {
                return parse_err(*line, format!("expected {} parent values, got {}", f.parents.len(), args.len()));
            }
            let mut idx = 0;
            for (p, v) in f.parents.iter().zip(args) {
                let l = &labels_of[p];
                match l.iter().position(|x| x == v) {
                    Some(j) => idx = idx * l.len() + j,
                    None => return parse_err(*line, format!("`{}` is not in the support of `{}`", v, p)),
                }
            }
            let out = match out_labels.iter().position(|x| x == value) {
                Some(j) => j,
                None => return parse_err(*line, format!("`{}` is not in the support of `{}`", value, f.output)),
            };
            if table[idx].is_some() {
                return parse_err(*line, "parent values listed twice");
            }
            table[idx] = Some(out);
        }
        if let Some(missing) = table.iter().position(Option::is_none) {
            let mut k = missing;
            let mut args = vec![String::new(); sizes.len()];
            for j in (0..sizes.len()).rev() {
                args[j] = labels_of[&f.parents[j]][k % sizes[j]].clone();
                k /= sizes[j];
            }
            return parse_err(f.line, format!("`{}` has no row for ({})", f.output, args.join(", ")));
        }
        let parents: Vec<&str> = f.parents.iter().map(String::as_str).collect();
        b = b.function_table(&f.output, &parents, table.into_iter().map(Option::unwrap).collect());
    }
    for d in &declares {
        b = b.declare(d);
    }
    let scm = b.build()?;
    for (line, name, _, consumers) in &separable {
        let c = scm.node_index(name).expect("declared");
        let mut actual: Vec<String> = (0..scm.nodes().len())
            .filter(|&i| scm.components_consumed(i).contains(&c))
            .map(|i| scm.node(i).name.clone())
            .collect();
        let mut listed = consumers.clone();
        actual.sort();
        listed.sort();
        if actual != listed {
            return parse_err(
                *line,
                format!(
                    "component `{}` lists consumers [{}] but is read by [{}]",
                    name,
                    listed.join(", "),
                    actual.join(", ")
                ),
            );
        }
    }
    Ok(scm)
}

fn role_token(v: &Variable) -> &'static str {
    match v.role {
        Role::Component(_) => "component",
        r => r.tag(),
    }
}

/// Serializes a model; `parse_model(&write_model(m)) == m`.
pub fn write_model(scm: &FiniteScm) -> String {
    let mut s = String::new();
    s.push_str("[variables]\n");
    for v in scm.nodes() {
        let _ = writeln!(s, "{} : {} : {}", v.name, role_token(v), v.labels.join(", "));
    }
    let comps = scm.components();
    if !comps.is_empty() {
        s.push_str("\n[separable]\n");
        for (c, kind) in comps {
            let consumers: Vec<&str> = (0..scm.nodes().len())
                .filter(|&i| scm.components_consumed(i).contains(&c))
                .map(|i| scm.node(i).name.as_str())
                .collect();
            let _ = writeln!(s, "{} : {} -> {}", scm.node(c).name, kind.tag(), consumers.join(", "));
        }
    }
    s.push_str("\n[exogenous]\n");
    for v in scm.exogenous() {
        let _ = writeln!(s, "{} : {}", v.name, v.labels.join(", "));
    }
    let sizes: Vec<usize> = scm.exogenous().iter().map(Variable::size).collect();
    for (k, p) in scm.pmf().iter().enumerate() {
        let _ = writeln!(s, "{} = {:?}", tuple(scm.exogenous(), &sizes, k), p);
    }
    s.push_str("\n[functions]\n");
    for i in 0..scm.nodes().len() {
        let f = match scm.function(i) {
            Some(f) => f,
            None => continue,
        };
        let parents: Vec<&Variable> = f
            .parents
            .iter()
            .map(|p| match *p {
                ParentRef::Node(j) => scm.node(j),
                ParentRef::Exo(j) => &scm.exogenous()[j],
            })
            .collect();
        let names: Vec<&str> = parents.iter().map(|v| v.name.as_str()).collect();
        let _ = writeln!(s, "{} <- {}", scm.node(i).name, names.join(", "));
        let psizes: Vec<usize> = parents.iter().map(|v| v.size()).collect();
        let owned: Vec<Variable> = parents.iter().map(|v| (*v).clone()).collect();
        for (k, &out) in f.table.iter().enumerate() {
            let _ = writeln!(s, "{} -> {}", tuple(&owned, &psizes, k), scm.node(i).labels[out]);
        }
    }
    if !scm.declares().is_empty() {
        s.push_str("\n[declares]\n");
        for d in scm.declares() {
            let _ = writeln!(s, "{}", d);
        }
    }
    s
}

fn tuple(vars: &[Variable], sizes: &[usize], mut k: usize) -> String {
    let mut parts = vec![""; sizes.len()];
    for j in (0..sizes.len()).rev() {
        parts[j] = &vars[j].labels[k % sizes[j]];
        k /= sizes[j];
    }
    parts.join(", ")
}

pub fn load_model(path: &Path) -> Result<FiniteScm> {
    parse_model(&read(path)?).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {}", path.display(), message),
        },
        other => other,
    })
}

pub fn save_model(path: &Path, scm: &FiniteScm) -> Result<()> {
    write(path, &write_model(scm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use mediation_core::fixtures;
    use mediation_core::generate::{attempt_rng, generate, premise_family};
    use mediation_core::identification::ModelClass;

    #[test]
    fn fixtures_round_trip() {
        for name in fixtures::NAMES {
            let scm = fixtures::by_name(name).unwrap();
            let text = write_model(&scm);
            assert_eq!(parse_model(&text).unwrap(), scm, "{}", name);
        }
    }

    #[test]
    fn generated_models_round_trip() {
        for &class in ModelClass::ALL {
            for i in 0..4 {
                let scm = generate(&premise_family(class, i), &mut attempt_rng(17, i));
                assert_eq!(parse_model(&write_model(&scm)).unwrap(), scm);
            }
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "[variables]\nA : A : 0, 1\nM : M : 0, 1\nY : Q : 0, 1\n";
        match parse_model(text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("unknown role"));
            }
            other => panic!("{:?}", other.map(|_| ())),
        }
        let missing = "[variables]\nA : A : 0, 1\n[exogenous]\ne : 0, 1\n0 = 1.0\n[functions]\nA <- e\n0 -> 1\n";
        match parse_model(missing) {
            Err(Error::Parse { line: 7, message }) => assert!(message.contains("no row for (1)"), "{}", message),
            other => panic!("{:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn invalid_models_still_parse() {
        let text = "[variables]\nA : A : 0, 1\nM : M : 0, 1\nY : Y : 0, 1\n[exogenous]\ne : 0, 1\n0 = 0.6\n1 = 0.5\n[functions]\nA <- e\n0 -> 0\n1 -> 1\nM <- A\n0 -> 0\n1 -> 1\nY <- M\n0 -> 0\n1 -> 1\n";
        let scm = parse_model(text).unwrap();
        let report = mediation_core::scm::validate_scm(&scm);
        assert!(report.violations.iter().any(|v| v.contains("pmf sums to 1.1")));
    }
}
