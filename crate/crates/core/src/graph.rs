//! Causal DAGs, single-world intervention graphs and d-separation.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::assumptions::AssumptionId;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Random,
    /// The fixed half of a split node. Has no parents.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    /// Unique identifier within the graph.
    pub name: String,
    /// Name of the DAG node this node came from.
    pub base: String,
    pub kind: NodeKind,
    /// Counterfactual label, e.g. `Y(a', m')`.
    pub label: String,
}

/// A DAG or a SWIG. Thick edges mark deterministic exposure components and
/// behave like ordinary edges for separation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Graph {
    pub nodes: Vec<Node>,
    pub edges: Vec<(usize, usize)>,
    pub thick: Vec<(usize, usize)>,
}

pub type Dag = Graph;
pub type Swig = Graph;

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a DAG from node names and directed edges.
    pub fn dag(nodes: &[&str], edges: &[(&str, &str)]) -> Result<Graph> {
        let mut g = Graph::new();
        for n in nodes {
            g.add_node(n);
        }
        for (a, b) in edges {
            g.add_edge(a, b, false)?;
        }
        g.check_acyclic()?;
        Ok(g)
    }

    pub fn add_node(&mut self, name: &str) -> usize {
        if let Some(i) = self.index(name) {
            return i;
        }
        self.nodes.push(Node {
            name: name.to_string(),
            base: name.to_string(),
            kind: NodeKind::Random,
            label: name.to_string(),
        });
        self.nodes.len() - 1
    }

    pub fn add_edge(&mut self, from: &str, to: &str, thick: bool) -> Result<()> {
        let a = self.index(from).ok_or_else(|| Error::UnknownNode(from.into()))?;
        let b = self.index(to).ok_or_else(|| Error::UnknownNode(to.into()))?;
        if !self.edges.contains(&(a, b)) {
            self.edges.push((a, b));
        }
        if thick && !self.thick.contains(&(a, b)) {
            self.thick.push((a, b));
        }
        Ok(())
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    /// Finds a node by name, or failing that by counterfactual label.
    pub fn lookup(&self, key: &str) -> Result<usize> {
        let squash = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
        self.index(key)
            .or_else(|| {
                let k = squash(key).replace('′', "'");
                self.nodes.iter().position(|n| squash(&n.label) == k)
            })
            .ok_or_else(|| Error::UnknownNode(key.into()))
    }

    pub fn parents(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.1 == v).map(|e| e.0)
    }

    pub fn children(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.0 == v).map(|e| e.1)
    }

    /// Topological order, or [`Error::Cyclic`].
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.nodes.len();
        let mut indeg = vec![0usize; n];
        for &(_, b) in &self.edges {
            indeg[b] += 1;
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for c in self.children(v).collect::<Vec<_>>() {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        if order.len() != n {
            return Err(Error::Cyclic);
        }
        Ok(order)
    }

    pub fn check_acyclic(&self) -> Result<()> {
        self.topological_order().map(|_| ())
    }

    fn ancestors_of(&self, set: &[bool]) -> Vec<bool> {
        let mut anc = set.to_vec();
        let mut stack: Vec<usize> = (0..set.len()).filter(|&i| set[i]).collect();
        while let Some(v) = stack.pop() {
            for p in self.parents(v) {
                if !anc[p] {
                    anc[p] = true;
                    stack.push(p);
                }
            }
        }
        anc
    }

    fn resolve_sets(&self, sets: [&[&str]; 3]) -> Result<[Vec<usize>; 3]> {
        let mut out: [Vec<usize>; 3] = Default::default();
        let mut seen = BTreeSet::new();
        for (k, set) in sets.iter().enumerate() {
            for name in set.iter() {
                let i = self.lookup(name)?;
                if !seen.insert(i) {
                    return Err(Error::OverlappingSets(self.nodes[i].label.clone()));
                }
                out[k].push(i);
            }
        }
        Ok(out)
    }

    /// Whether `xs` and `ys` are d-separated given `zs`. Fixed nodes block
    /// every path through them.
    pub fn d_separated(&self, xs: &[&str], ys: &[&str], zs: &[&str]) -> Result<bool> {
        let [x, y, z] = self.resolve_sets([xs, ys, zs])?;
        Ok(self.d_separated_idx(&x, &y, &z))
    }

    pub fn d_separated_idx(&self, xs: &[usize], ys: &[usize], zs: &[usize]) -> bool {
        let n = self.nodes.len();
        let mut blocked = vec![false; n];
        let mut observed = vec![false; n];
        for &z in zs {
            blocked[z] = true;
            observed[z] = true;
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if node.kind == NodeKind::Fixed {
                blocked[i] = true;
            }
        }
        let opens_collider = self.ancestors_of(&observed);
        let mut target = vec![false; n];
        for &y in ys {
            target[y] = true;
        }
        // (node, arrived from a child)
        let mut visited = vec![[false; 2]; n];
        let mut queue: VecDeque<(usize, bool)> = xs.iter().map(|&x| (x, true)).collect();
        while let Some((v, up)) = queue.pop_front() {
            if visited[v][up as usize] {
                continue;
            }
            visited[v][up as usize] = true;
            if target[v] && !blocked[v] {
                return false;
            }
            if up {
                if !blocked[v] {
                    for p in self.parents(v) {
                        queue.push_back((p, true));
                    }
                    for c in self.children(v) {
                        queue.push_back((c, false));
                    }
                }
            } else {
                if !blocked[v] {
                    for c in self.children(v) {
                        queue.push_back((c, false));
                    }
                }
                if opens_collider[v] {
                    for p in self.parents(v) {
                        queue.push_back((p, true));
                    }
                }
            }
        }
        true
    }
}

/// Splits each target into a random half (keeps incoming edges) and a fixed
/// half named `lowercase(target)'` (takes outgoing edges), then relabels
/// random nodes with their fixed ancestors.
pub fn swig_split(dag: &Dag, targets: &[&str]) -> Result<Swig> {
    let mut g = dag.clone();
    for t in targets {
        let i = g.index(t).ok_or_else(|| Error::UnknownNode((*t).into()))?;
        if g.children(i).next().is_none() {
            return Err(Error::InvalidArgument(format!(
                "cannot split `{}`: it has no children",
                t
            )));
        }
        let fixed_name = format!("{}'", t.to_lowercase());
        g.nodes.push(Node {
            name: fixed_name.clone(),
            base: (*t).to_string(),
            kind: NodeKind::Fixed,
            label: fixed_name,
        });
        let f = g.nodes.len() - 1;
        for e in g.edges.iter_mut().chain(g.thick.iter_mut()) {
            if e.0 == i {
                e.0 = f;
            }
        }
    }
    let order = g.topological_order()?;
    let mut fixed_anc: Vec<Vec<usize>> = vec![Vec::new(); g.nodes.len()];
    for &v in &order {
        let mut acc: BTreeSet<usize> = BTreeSet::new();
        for p in g.parents(v) {
            if g.nodes[p].kind == NodeKind::Fixed {
                acc.insert(p);
            }
            acc.extend(fixed_anc[p].iter().copied());
        }
        fixed_anc[v] = acc.into_iter().collect();
    }
    let rank: Vec<usize> = {
        let mut r = vec![0; g.nodes.len()];
        for (k, &v) in order.iter().enumerate() {
            r[v] = k;
        }
        r
    };
    for (v, fa) in fixed_anc.iter().enumerate() {
        if g.nodes[v].kind == NodeKind::Fixed || fa.is_empty() {
            continue;
        }
        let mut anc = fa.clone();
        anc.sort_by_key(|&a| (dag.index(&g.nodes[a].base).unwrap_or(usize::MAX), rank[a]));
        let inner: Vec<&str> = anc.iter().map(|&a| g.nodes[a].label.as_str()).collect();
        g.nodes[v].label = format!("{}({})", g.nodes[v].name, inner.join(", "));
    }
    Ok(g)
}

/// `x ⫫ y | z`, stored with node names and rendered with labels.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Independence {
    pub x: String,
    pub y: String,
    pub z: Vec<String>,
    pub x_label: String,
    pub y_label: String,
}

impl fmt::Display for Independence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ⫫ {} | {{{}}}", self.x_label, self.y_label, self.z.join(", "))
    }
}

pub const DEFAULT_POOL: &[&str] = &["C", "A", "L"];

/// All d-separations between pairs of random nodes given subsets of the
/// random nodes whose base name is in `pool`.
pub fn implied_independencies(g: &Graph, pool: &[&str]) -> Vec<Independence> {
    let random: Vec<usize> = (0..g.nodes.len())
        .filter(|&i| g.nodes[i].kind == NodeKind::Random)
        .collect();
    let pool_idx: Vec<usize> = random
        .iter()
        .copied()
        .filter(|&i| pool.contains(&g.nodes[i].base.as_str()))
        .collect();
    let mut out = BTreeSet::new();
    for (k, &x) in random.iter().enumerate() {
        for &y in &random[k + 1..] {
            let cand: Vec<usize> = pool_idx.iter().copied().filter(|&p| p != x && p != y).collect();
            for mask in 0u32..(1 << cand.len()) {
                let z: Vec<usize> = (0..cand.len())
                    .filter(|b| mask >> b & 1 == 1)
                    .map(|b| cand[b])
                    .collect();
                if g.d_separated_idx(&[x], &[y], &z) {
                    let mut zn: Vec<String> = z.iter().map(|&i| g.nodes[i].name.clone()).collect();
                    zn.sort();
                    let (a, b) = if g.nodes[x].name <= g.nodes[y].name { (x, y) } else { (y, x) };
                    out.insert(Independence {
                        x: g.nodes[a].name.clone(),
                        y: g.nodes[b].name.clone(),
                        z: zn,
                        x_label: g.nodes[a].label.clone(),
                        y_label: g.nodes[b].label.clone(),
                    });
                }
            }
        }
    }
    out.into_iter().collect()
}

/// Maps a graphical independence to the assumption it states, if any.
/// Statements are read by base name with C conditioned on whenever the graph
/// has it.
pub fn recognize(g: &Graph, s: &Independence) -> Option<AssumptionId> {
    let base = |n: &str| g.index(n).map(|i| g.nodes[i].base.clone()).unwrap_or_default();
    let mut pair = [base(&s.x), base(&s.y)];
    pair.sort();
    let mut z: Vec<String> = s.z.iter().map(|n| base(n)).collect();
    z.sort();
    let has_c = g.index("C").is_some();
    let with_c = |extra: &[&str]| -> Vec<String> {
        let mut v: Vec<String> = extra.iter().map(|s| s.to_string()).collect();
        if has_c {
            v.push("C".into());
        }
        v.sort();
        v
    };
    let p = [pair[0].as_str(), pair[1].as_str()];
    match p {
        ["A", "M"] if z == with_c(&[]) => Some(AssumptionId::A1),
        ["A", "Y"] if z == with_c(&[]) => Some(AssumptionId::A2),
        ["M", "Y"] if z == with_c(&["A"]) => Some(AssumptionId::A3),
        ["M", "Y"] if z == with_c(&["A", "L"]) => Some(AssumptionId::A10),
        ["A", "L"] if z == with_c(&[]) => Some(AssumptionId::SA1),
        _ => None,
    }
}

/// The distinct assumptions recognized among a graph's implied
/// independencies.
pub fn implied_assumptions(g: &Graph, pool: &[&str]) -> Vec<AssumptionId> {
    let set: BTreeSet<AssumptionId> = implied_independencies(g, pool)
        .iter()
        .filter_map(|s| recognize(g, s))
        .collect();
    set.into_iter().collect()
}

/// Parses the text format: `node <name>`, `edge <a> <b>`, `thick <a> <b>`,
/// with `#` comments.
pub fn parse_graph(text: &str) -> Result<Dag> {
    let mut g = Graph::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.as_slice() {
            ["node", name] => {
                g.add_node(name);
            }
            ["edge", a, b] => g.add_edge(a, b, false)?,
            ["thick", a, b] => g.add_edge(a, b, true)?,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "line {}: expected `node`, `edge` or `thick`, got `{}`",
                    lineno + 1,
                    line
                )))
            }
        }
    }
    g.check_acyclic()?;
    Ok(g)
}

pub fn write_graph(g: &Dag) -> String {
    let mut out = String::new();
    for n in &g.nodes {
        out.push_str(&format!("node {}\n", n.name));
    }
    for &(a, b) in &g.edges {
        let kw = if g.thick.contains(&(a, b)) { "thick" } else { "edge" };
        out.push_str(&format!("{} {} {}\n", kw, g.nodes[a].name, g.nodes[b].name));
    }
    out
}

/// Reference DAGs for the standard mediation structures.
pub mod structures {
    use super::*;

    /// C, A, M, Y with every forward arrow.
    pub fn mediation() -> Dag {
        Graph::dag(
            &["C", "A", "M", "Y"],
            &[("C", "A"), ("C", "M"), ("C", "Y"), ("A", "M"), ("A", "Y"), ("M", "Y")],
        )
        .expect("acyclic")
    }

    /// Mediation DAG with the exposure split into A_M and A_Y.
    pub fn separable() -> Dag {
        let mut g = Graph::dag(
            &["C", "A", "A_M", "A_Y", "M", "Y"],
            &[("C", "A"), ("C", "M"), ("C", "Y"), ("A_M", "M"), ("A_Y", "Y"), ("M", "Y")],
        )
        .expect("acyclic");
        g.add_edge("A", "A_M", true).expect("nodes exist");
        g.add_edge("A", "A_Y", true).expect("nodes exist");
        g
    }

    /// Mediation DAG with an exposure-induced intermediate confounder L.
    pub fn intermediate() -> Dag {
        Graph::dag(
            &["C", "A", "L", "M", "Y"],
            &[
                ("C", "A"),
                ("C", "L"),
                ("C", "M"),
                ("C", "Y"),
                ("A", "L"),
                ("A", "M"),
                ("A", "Y"),
                ("L", "M"),
                ("L", "Y"),
                ("M", "Y"),
            ],
        )
        .expect("acyclic")
    }

    /// L and M treated jointly as mediators.
    pub fn joint_mediators() -> Dag {
        intermediate()
    }

    fn with_components(kinds: &[(&str, &[&str])]) -> Dag {
        let mut g = Graph::new();
        for n in ["C", "A"] {
            g.add_node(n);
        }
        for (comp, _) in kinds {
            g.add_node(comp);
        }
        for n in ["L", "M", "Y"] {
            g.add_node(n);
        }
        for (a, b) in [
            ("C", "A"),
            ("C", "L"),
            ("C", "M"),
            ("C", "Y"),
            ("L", "M"),
            ("L", "Y"),
            ("M", "Y"),
        ] {
            g.add_edge(a, b, false).expect("nodes exist");
        }
        for (comp, targets) in kinds {
            g.add_edge("A", comp, true).expect("nodes exist");
            for t in targets.iter() {
                g.add_edge(comp, t, false).expect("nodes exist");
            }
        }
        g
    }

    /// Two components with L affected by the mediator component.
    pub fn separable_l_via_m() -> Dag {
        with_components(&[("A_M", &["L", "M"]), ("A_Y", &["Y"])])
    }

    /// Two components with L affected by the outcome component.
    pub fn separable_l_via_y() -> Dag {
        with_components(&[("A_M", &["M"]), ("A_Y", &["L", "Y"])])
    }

    /// Three components, one per downstream variable.
    pub fn separable_three() -> Dag {
        with_components(&[("A_L", &["L"]), ("A_M", &["M"]), ("A_Y", &["Y"])])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_and_collider() {
        let chain = Graph::dag(&["A", "M", "Y"], &[("A", "M"), ("M", "Y")]).unwrap();
        assert!(chain.d_separated(&["A"], &["Y"], &["M"]).unwrap());
        assert!(!chain.d_separated(&["A"], &["Y"], &[]).unwrap());
        let col = Graph::dag(&["A", "M", "Y"], &[("A", "Y"), ("M", "Y")]).unwrap();
        assert!(col.d_separated(&["A"], &["M"], &[]).unwrap());
        assert!(!col.d_separated(&["A"], &["M"], &["Y"]).unwrap());
    }

    #[test]
    fn overlapping_and_unknown() {
        let g = structures::mediation();
        assert_eq!(
            g.d_separated(&["A"], &["A"], &[]).unwrap_err(),
            Error::OverlappingSets("A".into())
        );
        assert_eq!(
            g.d_separated(&["Q"], &["A"], &[]).unwrap_err(),
            Error::UnknownNode("Q".into())
        );
    }

    #[test]
    fn swig_labels_and_assumption_two() {
        let s = swig_split(&structures::mediation(), &["A", "M"]).unwrap();
        let labels: Vec<&str> = s.nodes.iter().map(|n| n.label.as_str()).collect();
        assert!(labels.contains(&"M(a')"));
        assert!(labels.contains(&"Y(a', m')"));
        assert!(labels.contains(&"a'") && labels.contains(&"m'"));
        assert!(s.d_separated(&["A"], &["Y(a′, m′)"], &["C"]).unwrap());
        assert!(s.index("a'").map(|i| s.parents(i).count()) == Some(0));
    }

    #[test]
    fn empty_split_is_identity() {
        let g = structures::mediation();
        assert_eq!(swig_split(&g, &[]).unwrap(), g);
        assert!(matches!(swig_split(&g, &["Y"]), Err(Error::InvalidArgument(_))));
        assert!(matches!(swig_split(&g, &["Z"]), Err(Error::UnknownNode(_))));
    }

    #[test]
    fn recognized_assumption_lists() {
        let s = swig_split(&structures::mediation(), &["A", "M"]).unwrap();
        assert_eq!(
            implied_assumptions(&s, DEFAULT_POOL),
            vec![AssumptionId::A1, AssumptionId::A2, AssumptionId::A3]
        );
        let s = swig_split(&structures::intermediate(), &["A", "M"]).unwrap();
        let got = implied_assumptions(&s, DEFAULT_POOL);
        for a in [AssumptionId::A1, AssumptionId::A2, AssumptionId::A10] {
            assert!(got.contains(&a), "{:?}", got);
        }
        assert!(s.nodes.iter().any(|n| n.label == "L(a')"));
    }

    #[test]
    fn complete_dag_has_no_independencies() {
        let g = Graph::dag(
            &["A", "B", "C"],
            &[("A", "B"), ("A", "C"), ("B", "C")],
        )
        .unwrap();
        assert!(implied_independencies(&g, &["A", "B", "C"]).is_empty());
    }

    #[test]
    fn text_format_round_trip() {
        let g = structures::separable();
        let back = parse_graph(&write_graph(&g)).unwrap();
        assert_eq!(back, g);
        assert_eq!(parse_graph("node A\nedge A B\n").unwrap_err(), Error::UnknownNode("B".into()));
        assert_eq!(
            parse_graph("node A\nnode B\nedge A B\nedge B A\n").unwrap_err(),
            Error::Cyclic
        );
    }
}
