//! Random model families used by searches and property sweeps.
//!
//! Every family enforces its structural constraints by construction and
//! keeps all observational cells positive: exogenous pmfs are strictly
//! positive and each response table maps the noise onto every output value.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::identification::ModelClass;
use crate::scm::{ComponentKind, FiniteScm, ScmBuilder};

/// Which exposure-like variable each downstream equation reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Every equation reads A.
    Plain,
    /// Components A_M and A_Y; when L is present it reads the given one.
    Separable2 { l_reads: ComponentKind },
    /// Components A_L, A_M and A_Y.
    Separable3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NullKind {
    MIgnoresA,
    YIgnoresM,
}

/// Independent per-equation noise (response-type models).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndependentOptions {
    pub with_c: bool,
    pub with_l: bool,
    pub layout: Layout,
    /// Outcome noise is a mixture of types that read only (C, exposure, L)
    /// or only (C, M), so no exposure-mediator interaction exists.
    pub a5: bool,
    pub null: Option<NullKind>,
    /// L and M share one exogenous variable with a non-product law.
    pub shared_lm: bool,
    pub m_size: usize,
}

impl Default for IndependentOptions {
    fn default() -> Self {
        IndependentOptions {
            with_c: false,
            with_l: false,
            layout: Layout::Plain,
            a5: false,
            null: None,
            shared_lm: false,
            m_size: 2,
        }
    }
}

/// No-L models with M = U_A and an outcome reading the other world's U.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CrossWorldOptions {
    pub with_c: bool,
    /// Outcome responds to M only when U_0 = U_1, with U_0 uniform.
    pub mediation_null: bool,
    pub a5: bool,
    pub m_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Independent(IndependentOptions),
    CrossWorld(CrossWorldOptions),
    /// Separable no-L model satisfying the population dismissible-component
    /// conditions and the mediation null with a non-zero SIE.
    SeparableNull { m_size: usize },
    /// Model with L satisfying the single-world independences, no
    /// interaction and the mediation null with a non-zero IIE.
    IntermediateNull,
}

fn simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n)
        .map(|_| loop {
            let u: f64 = rng.gen();
            if u > 0.0 {
                break -libm::log(u);
            }
        })
        .collect();
    let s: f64 = w.iter().sum();
    for x in &mut w {
        *x /= s;
    }
    w
}

/// A table over (other parents..., noise) whose noise slice is onto the
/// output support for every configuration of the other parents.
fn onto_table(rng: &mut ChaCha8Rng, other: usize, noise: usize, out: usize) -> Vec<usize> {
    let mut table = Vec::with_capacity(other * noise);
    let mut perm: Vec<usize> = (0..out).collect();
    for _ in 0..other {
        perm.shuffle(rng);
        table.extend(perm.iter().copied().take(noise));
        for _ in out..noise {
            table.push(rng.gen_range(0..out));
        }
    }
    table
}

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{}", i)).collect()
}

/// Incremental helper collecting variables and tables in builder order.
struct Draft {
    b: ScmBuilder,
    sizes: Vec<(String, usize)>,
}

impl Draft {
    fn new() -> Self {
        Draft {
            b: ScmBuilder::new(),
            sizes: Vec::new(),
        }
    }

    fn size(&self, n: &str) -> usize {
        self.sizes.iter().find(|(k, _)| k == n).map(|(_, s)| *s).expect("declared")
    }

    fn node(&mut self, name: &str, role: crate::scm::Role, n: usize) {
        self.b = core::mem::take(&mut self.b).variable(name, role, labels(n));
        self.sizes.push((name.into(), n));
    }

    fn noise(&mut self, name: &str, pmf: Vec<f64>) {
        self.sizes.push((name.into(), pmf.len()));
        self.b = core::mem::take(&mut self.b).noise(name, pmf);
    }

    /// Random onto response of `out` to `parents` through its own noise.
    fn respond(&mut self, rng: &mut ChaCha8Rng, out: &str, parents: &[&str], noise: &str) {
        let other: usize = parents.iter().map(|p| self.size(p)).product();
        let table = onto_table(rng, other, self.size(noise), self.size(out));
        let mut all: Vec<&str> = parents.to_vec();
        all.push(noise);
        self.b = core::mem::take(&mut self.b).function_table(out, &all, table);
    }

    fn table(&mut self, out: &str, parents: &[&str], table: Vec<usize>) {
        self.b = core::mem::take(&mut self.b).function_table(out, parents, table);
    }

    fn finish(self) -> FiniteScm {
        self.b.build().expect("generated model builds")
    }
}

fn independent(o: &IndependentOptions, rng: &mut ChaCha8Rng) -> FiniteScm {
    use crate::scm::Role;
    let mut d = Draft::new();
    let noise_size = |n: usize| n + 1;
    if o.with_c {
        d.node("C", Role::Baseline, 2);
    }
    d.node("A", Role::Exposure, 2);
    let (expo_l, expo_m, expo_y) = match o.layout {
        Layout::Plain => ("A", "A", "A"),
        Layout::Separable2 { l_reads } => {
            d.node("A_M", Role::Component(ComponentKind::Mediator), 2);
            d.node("A_Y", Role::Component(ComponentKind::Outcome), 2);
            let l = if l_reads == ComponentKind::Outcome { "A_Y" } else { "A_M" };
            (l, "A_M", "A_Y")
        }
        Layout::Separable3 => {
            d.node("A_L", Role::Component(ComponentKind::Intermediate), 2);
            d.node("A_M", Role::Component(ComponentKind::Mediator), 2);
            d.node("A_Y", Role::Component(ComponentKind::Outcome), 2);
            ("A_L", "A_M", "A_Y")
        }
    };
    if o.with_l {
        d.node("L", Role::Intermediate, 2);
    }
    d.node("M", Role::Mediator, o.m_size);
    d.node("Y", Role::Outcome, 2);
    let c: Vec<&str> = if o.with_c { vec!["C"] } else { vec![] };
    if o.with_c {
        d.noise("eC", simplex(rng, 2));
    }
    d.noise("eA", simplex(rng, 3));
    if o.with_l && o.shared_lm {
        d.noise("eLM", simplex(rng, 9));
    } else {
        if o.with_l {
            d.noise("eL", simplex(rng, noise_size(2)));
        }
        d.noise("eM", simplex(rng, noise_size(o.m_size)));
    }
    let ey_size = if o.a5 { 6 } else { 3 };
    d.noise("eY", simplex(rng, ey_size));

    if o.with_c {
        d.respond(rng, "C", &[], "eC");
    }
    d.respond(rng, "A", &c, "eA");

    let mut l_parents = c.clone();
    l_parents.push(expo_l);
    let mut m_parents = c.clone();
    if o.null != Some(NullKind::MIgnoresA) {
        m_parents.push(expo_m);
    }
    if o.with_l {
        m_parents.push("L");
    }
    if o.with_l && o.shared_lm {
        let lt = onto_table(rng, l_parents.iter().map(|p| d.size(p)).product(), 3, 2);
        let mt = onto_table(rng, m_parents.iter().map(|p| d.size(p)).product(), 3, o.m_size);
        let mut lp = l_parents.clone();
        lp.push("eLM");
        let mut mp = m_parents.clone();
        mp.push("eLM");
        let ltab: Vec<usize> = (0..lt.len() * 3).map(|k| lt[(k / 9) * 3 + (k % 9) / 3]).collect();
        let mtab: Vec<usize> = (0..mt.len() * 3).map(|k| mt[(k / 9) * 3 + k % 3]).collect();
        d.table("L", &lp, ltab);
        d.table("M", &mp, mtab);
    } else {
        if o.with_l {
            d.respond(rng, "L", &l_parents, "eL");
        }
        d.respond(rng, "M", &m_parents, "eM");
    }

    let mut y_parents = c.clone();
    y_parents.push(expo_y);
    if o.with_l {
        y_parents.push("L");
    }
    if o.null != Some(NullKind::YIgnoresM) {
        y_parents.push("M");
    }
    if o.a5 {
        // eY = (type, noise): type 0 reads (C, exposure, L), type 1 reads (C, M).
        let sizes: Vec<usize> = y_parents.iter().map(|p| d.size(p)).collect();
        let m_pos = y_parents.iter().position(|p| *p == "M");
        let keep0: Vec<usize> = (0..y_parents.len()).filter(|&i| Some(i) != m_pos).collect();
        let keep1: Vec<usize> = (0..y_parents.len())
            .filter(|&i| y_parents[i] == "C" || y_parents[i] == "M")
            .collect();
        let sub = |keep: &[usize]| keep.iter().map(|&i| sizes[i]).product::<usize>();
        let t0 = onto_table(rng, sub(&keep0), 3, 2);
        let t1 = onto_table(rng, sub(&keep1), 3, 2);
        let total: usize = sizes.iter().product();
        let mut table = Vec::with_capacity(total * 6);
        let mut v = vec![0usize; sizes.len()];
        for k in 0..total {
            let mut r = k;
            for j in (0..sizes.len()).rev() {
                v[j] = r % sizes[j];
                r /= sizes[j];
            }
            let key = |keep: &[usize]| keep.iter().fold(0, |a, &i| a * sizes[i] + v[i]);
            for e in 0..6 {
                let (ty, n) = (e / 3, e % 3);
                table.push(if ty == 0 {
                    t0[key(&keep0) * 3 + n]
                } else {
                    t1[key(&keep1) * 3 + n]
                });
            }
        }
        let mut all = y_parents.clone();
        all.push("eY");
        d.table("Y", &all, table);
    } else {
        d.respond(rng, "Y", &y_parents, "eY");
    }
    d.finish()
}

fn cross_world(o: &CrossWorldOptions, rng: &mut ChaCha8Rng) -> FiniteScm {
    use crate::scm::Role;
    let n = o.m_size.max(2);
    let nr = 3;
    let mut d = Draft::new();
    if o.with_c {
        d.node("C", Role::Baseline, 2);
    }
    d.node("A", Role::Exposure, 2);
    d.node("M", Role::Mediator, n);
    d.node("Y", Role::Outcome, 2);
    let c: Vec<&str> = if o.with_c { vec!["C"] } else { vec![] };
    let nc = if o.with_c { 2 } else { 1 };
    if o.with_c {
        d.noise("eC", simplex(rng, 2));
    }
    d.noise("eA", simplex(rng, 3));
    let u0 = if o.mediation_null {
        vec![1.0 / n as f64; n]
    } else {
        simplex(rng, n)
    };
    d.noise("U0", u0);
    d.noise("U1", simplex(rng, n));
    d.noise("R", simplex(rng, nr));
    if o.a5 {
        d.noise("T", simplex(rng, 2));
    }
    if o.with_c {
        d.respond(rng, "C", &[], "eC");
    }
    d.respond(rng, "A", &c, "eA");

    // M = perm_c(U_A)
    let perms: Vec<Vec<usize>> = (0..nc)
        .map(|_| {
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(rng);
            p
        })
        .collect();
    let mut mp = c.clone();
    mp.extend(["A", "U0", "U1"]);
    let mut mtab = Vec::new();
    for perm in perms.iter().take(nc) {
        for a in 0..2 {
            for x0 in 0..n {
                for x1 in 0..n {
                    mtab.push(perm[if a == 0 { x0 } else { x1 }]);
                }
            }
        }
    }
    d.table("M", &mp, mtab);

    // Outcome tables, each onto in R.
    let g: Vec<Vec<usize>> = (0..2).map(|_| onto_table(rng, nc * n * n, nr, 2)).collect();
    let k = onto_table(rng, nc * n, nr, 2);
    let h: Vec<Vec<usize>> = (0..2).map(|_| onto_table(rng, nc, nr, 2)).collect();
    let gm = onto_table(rng, nc * n, nr, 2);
    let ga: Vec<Vec<usize>> = (0..2).map(|_| onto_table(rng, nc * n, nr, 2)).collect();
    let mut yp = c.clone();
    yp.extend(["A", "M", "U0", "U1", "R"]);
    if o.a5 {
        yp.push("T");
    }
    let nt = if o.a5 { 2 } else { 1 };
    let mut ytab = Vec::new();
    for cv in 0..nc {
        for a in 0..2 {
            for m in 0..n {
                for x0 in 0..n {
                    for x1 in 0..n {
                        for r in 0..nr {
                            for t in 0..nt {
                                let other = if a == 0 { x1 } else { x0 };
                                let y = if o.mediation_null {
                                    if a == 1 {
                                        if x0 == x1 {
                                            k[(cv * n + m) * nr + r]
                                        } else {
                                            h[1][cv * nr + r]
                                        }
                                    } else {
                                        h[0][cv * nr + r]
                                    }
                                } else if o.a5 {
                                    if t == 0 {
                                        ga[a][(cv * n + other) * nr + r]
                                    } else {
                                        gm[(cv * n + m) * nr + r]
                                    }
                                } else {
                                    g[a][((cv * n + m) * n + other) * nr + r]
                                };
                                ytab.push(y);
                            }
                        }
                    }
                }
            }
        }
    }
    d.table("Y", &yp, ytab);
    d.finish()
}

fn separable_null(m_size: usize, rng: &mut ChaCha8Rng) -> FiniteScm {
    use crate::scm::Role;
    let n = m_size.max(2);
    let nr = 3;
    let mut d = Draft::new();
    d.node("A", Role::Exposure, 2);
    d.node("A_M", Role::Component(ComponentKind::Mediator), 2);
    d.node("A_Y", Role::Component(ComponentKind::Outcome), 2);
    d.node("M", Role::Mediator, n);
    d.node("Y", Role::Outcome, 2);
    d.noise("eA", simplex(rng, 3));
    d.noise("U0", vec![1.0 / n as f64; n]);
    d.noise("U1", simplex(rng, n));
    let mut t = vec![(1.0 - 1.0 / n as f64) / (n - 1) as f64; n];
    t[0] = 1.0 / n as f64;
    d.noise("T", t);
    d.noise("R", simplex(rng, nr));
    d.respond(rng, "A", &[], "eA");
    let mut mtab = Vec::new();
    for am in 0..2 {
        for x0 in 0..n {
            for x1 in 0..n {
                mtab.push(if am == 0 { x0 } else { x1 });
            }
        }
    }
    d.table("M", &["A_M", "U0", "U1"], mtab);
    let k = onto_table(rng, n, nr, 2);
    let h0 = onto_table(rng, 1, nr, 2);
    let h1 = onto_table(rng, 1, nr, 2);
    let mut ytab = Vec::new();
    for ay in 0..2 {
        for am in 0..2 {
            for m in 0..n {
                for x0 in 0..n {
                    for x1 in 0..n {
                        for tv in 0..n {
                            for r in 0..nr {
                                let y = match (ay, am) {
                                    (0, _) => h0[r],
                                    (1, 1) if x0 == x1 => k[m * nr + r],
                                    (1, 0) if tv == 0 => k[m * nr + r],
                                    _ => h1[r],
                                };
                                ytab.push(y);
                            }
                        }
                    }
                }
            }
        }
    }
    d.table("Y", &["A_Y", "A_M", "M", "U0", "U1", "T", "R"], ytab);
    d.finish()
}

fn intermediate_null(rng: &mut ChaCha8Rng) -> FiniteScm {
    use crate::scm::Role;
    let nr = 3;
    let mut d = Draft::new();
    d.node("A", Role::Exposure, 2);
    d.node("L", Role::Intermediate, 2);
    d.node("M", Role::Mediator, 2);
    d.node("Y", Role::Outcome, 2);
    d.noise("eA", simplex(rng, 3));
    d.noise("U0", simplex(rng, 2));
    d.noise("U1", simplex(rng, 2));
    d.noise("N", simplex(rng, 2));
    d.noise("R", simplex(rng, nr));
    d.respond(rng, "A", &[], "eA");
    let mut ltab = Vec::new();
    for a in 0..2 {
        for x0 in 0..2 {
            for x1 in 0..2 {
                ltab.push(if a == 0 { x0 } else { x1 });
            }
        }
    }
    d.table("L", &["A", "U0", "U1"], ltab);
    let mut mtab = Vec::new();
    for l in 0..2 {
        for nv in 0..2 {
            mtab.push(l ^ nv);
        }
    }
    d.table("M", &["L", "N"], mtab);
    let k = onto_table(rng, 2, nr, 2);
    let h = onto_table(rng, 1, nr, 2);
    let mut ytab = Vec::new();
    for m in 0..2 {
        for x0 in 0..2 {
            for x1 in 0..2 {
                for r in 0..nr {
                    ytab.push(if x0 == x1 { k[m * nr + r] } else { h[r] });
                }
            }
        }
    }
    d.table("Y", &["M", "U0", "U1", "R"], ytab);
    d.finish()
}

/// Draws one model from a family.
pub fn generate(family: &Family, rng: &mut ChaCha8Rng) -> FiniteScm {
    match family {
        Family::Independent(o) => independent(o, rng),
        Family::CrossWorld(o) => cross_world(o, rng),
        Family::SeparableNull { m_size } => separable_null(*m_size, rng),
        Family::IntermediateNull => intermediate_null(rng),
    }
}

/// A family whose members all belong to `class`, varied by `i` over
/// baseline presence and the available constructions.
pub fn premise_family(class: ModelClass, i: u64) -> Family {
    let with_c = i % 2 == 1;
    let alt = (i / 2) % 2 == 1;
    let base = IndependentOptions {
        with_c,
        ..IndependentOptions::default()
    };
    let sep2 = |l_reads| Layout::Separable2 { l_reads };
    match class {
        ModelClass::NpsemIe => Family::Independent(base),
        ModelClass::Ffrcistg => Family::CrossWorld(CrossWorldOptions {
            with_c,
            m_size: 2,
            ..Default::default()
        }),
        ModelClass::FfrcistgA5 => Family::CrossWorld(CrossWorldOptions {
            with_c,
            a5: true,
            m_size: 2,
            ..Default::default()
        }),
        ModelClass::PopFfrcistg => {
            if alt {
                Family::SeparableNull { m_size: 2 }
            } else {
                Family::Independent(IndependentOptions {
                    layout: sep2(ComponentKind::Mediator),
                    ..base
                })
            }
        }
        ModelClass::FfrcistgSep => Family::Independent(IndependentOptions {
            layout: sep2(ComponentKind::Mediator),
            ..base
        }),
        ModelClass::FfrcistgL => {
            if alt {
                Family::IntermediateNull
            } else {
                Family::Independent(IndependentOptions {
                    with_l: true,
                    ..base
                })
            }
        }
        ModelClass::FfrcistgLA5 => {
            if alt {
                Family::IntermediateNull
            } else {
                Family::Independent(IndependentOptions {
                    with_l: true,
                    a5: true,
                    ..base
                })
            }
        }
        ModelClass::NpsemIeL => Family::Independent(IndependentOptions {
            with_l: true,
            ..base
        }),
        ModelClass::NpsemIeLm => Family::Independent(IndependentOptions {
            with_l: true,
            shared_lm: alt,
            ..base
        }),
        ModelClass::PopSepLm => Family::Independent(IndependentOptions {
            with_l: true,
            layout: sep2(ComponentKind::Mediator),
            ..base
        }),
        ModelClass::PopSepLy => Family::Independent(IndependentOptions {
            with_l: true,
            layout: sep2(ComponentKind::Outcome),
            ..base
        }),
        ModelClass::PopSep3 => Family::Independent(IndependentOptions {
            with_l: true,
            layout: Layout::Separable3,
            ..base
        }),
    }
}

/// Per-attempt generator: stream `index` of the master seed.
pub fn attempt_rng(seed: u64, index: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assumptions::{check_assumption, classify_model, AssumptionId, DEFAULT_TOL};
    use crate::scm::validate_scm;

    #[test]
    fn families_are_deterministic_and_valid() {
        for class in ModelClass::ALL {
            for i in 0..4 {
                let f = premise_family(*class, i);
                let a = generate(&f, &mut attempt_rng(7, i));
                let b = generate(&f, &mut attempt_rng(7, i));
                assert_eq!(a, b);
                let r = validate_scm(&a);
                assert!(r.is_valid(), "{:?}", r.violations);
                assert!(r.warnings.is_empty(), "{} {:?}", class, r.warnings);
            }
        }
    }

    #[test]
    fn premise_families_belong_to_their_class() {
        for class in ModelClass::ALL {
            for i in 0..4 {
                let scm = generate(&premise_family(*class, i), &mut attempt_rng(11, i));
                let classes = classify_model(&scm, DEFAULT_TOL).unwrap();
                assert!(classes.contains(class), "{} variant {}: {:?}", class, i, classes);
            }
        }
    }

    #[test]
    fn structured_families_meet_the_null() {
        for i in 0..5 {
            let t2 = generate(&Family::SeparableNull { m_size: 2 }, &mut attempt_rng(3, i));
            assert!(check_assumption(&t2, AssumptionId::MedNull, 0.0).unwrap().holds);
            let t3 = generate(&Family::IntermediateNull, &mut attempt_rng(3, i));
            assert!(check_assumption(&t3, AssumptionId::MedNull, 0.0).unwrap().holds);
            let cw = generate(
                &Family::CrossWorld(CrossWorldOptions {
                    mediation_null: true,
                    with_c: i % 2 == 0,
                    m_size: 3,
                    ..Default::default()
                }),
                &mut attempt_rng(3, i),
            );
            assert!(check_assumption(&cw, AssumptionId::MedNull, 0.0).unwrap().holds);
            assert!(check_assumption(&cw, AssumptionId::A3, DEFAULT_TOL).unwrap().holds);
        }
    }
}
