//! Small named models used by tests, examples and the command-line tool.

use alloc::vec;
use alloc::vec::Vec;

use crate::scm::{ComponentKind, FiniteScm, ScmBuilder};

fn bern(p: f64) -> Vec<f64> {
    vec![1.0 - p, p]
}

/// A = eA, M = A xor eM, Y = M xor eY with eA ~ Bern(0.5), eM, eY ~ Bern(0.1).
pub fn noisy_chain() -> FiniteScm {
    ScmBuilder::new()
        .exposure("A")
        .mediator("M", 2)
        .outcome("Y", 2)
        .noise("eA", bern(0.5))
        .noise("eM", bern(0.1))
        .noise("eY", bern(0.1))
        .function("A", &["eA"], |v| v[0])
        .function("M", &["A", "eM"], |v| v[0] ^ v[1])
        .function("Y", &["M", "eY"], |v| v[0] ^ v[1])
        .build()
        .expect("fixture builds")
}

/// M = A, Y = M. Leaves (A=1, M=0) and (A=0, M=1) empty.
pub fn deterministic_chain() -> FiniteScm {
    ScmBuilder::new()
        .exposure("A")
        .mediator("M", 2)
        .outcome("Y", 2)
        .noise("eA", bern(0.5))
        .function("A", &["eA"], |v| v[0])
        .function("M", &["A"], |v| v[0])
        .function("Y", &["M"], |v| v[0])
        .build()
        .expect("fixture builds")
}

/// The mediator ignores the exposure.
pub fn null_m() -> FiniteScm {
    ScmBuilder::new()
        .baseline("C", 2)
        .exposure("A")
        .mediator("M", 2)
        .outcome("Y", 2)
        .noise("eC", bern(0.4))
        .noise("eA", bern(0.3))
        .noise("eM", bern(0.3))
        .noise("eY", bern(0.2))
        .function("C", &["eC"], |v| v[0])
        .function("A", &["C", "eA"], |v| v[0] ^ v[1])
        .function("M", &["C", "eM"], |v| v[0] ^ v[1])
        .function("Y", &["A", "M", "eY"], |v| (v[0] | v[1]) ^ v[2])
        .build()
        .expect("fixture builds")
}

/// The outcome ignores the mediator.
pub fn null_y() -> FiniteScm {
    ScmBuilder::new()
        .exposure("A")
        .mediator("M", 2)
        .outcome("Y", 2)
        .noise("eA", bern(0.5))
        .noise("eM", bern(0.25))
        .noise("eY", bern(0.15))
        .function("A", &["eA"], |v| v[0])
        .function("M", &["A", "eM"], |v| v[0] ^ v[1])
        .function("Y", &["A", "eY"], |v| v[0] ^ v[1])
        .build()
        .expect("fixture builds")
}

/// Exposure separated into A_M (acting on M) and A_Y (acting on Y).
pub fn separable() -> FiniteScm {
    ScmBuilder::new()
        .exposure("A")
        .component("A_M", ComponentKind::Mediator)
        .component("A_Y", ComponentKind::Outcome)
        .mediator("M", 2)
        .outcome("Y", 2)
        .noise("eA", bern(0.5))
        .noise("eM", bern(0.2))
        .noise("eY", bern(0.1))
        .function("A", &["eA"], |v| v[0])
        .function("M", &["A_M", "eM"], |v| v[0] ^ v[1])
        .function("Y", &["A_Y", "M", "eY"], |v| (v[0] & v[1]) ^ v[2])
        .build()
        .expect("fixture builds")
}

/// C -> A -> L -> M -> Y with direct arrows A -> M, L -> Y, A -> Y and
/// independent noise throughout.
pub fn l_chain() -> FiniteScm {
    ScmBuilder::new()
        .baseline("C", 2)
        .exposure("A")
        .intermediate("L", 2)
        .mediator("M", 2)
        .outcome("Y", 2)
        .noise("eC", bern(0.5))
        .noise("eA", bern(0.3))
        .noise("eL", bern(0.2))
        .noise("eM", bern(0.25))
        .noise("eY", bern(0.1))
        .function("C", &["eC"], |v| v[0])
        .function("A", &["C", "eA"], |v| v[0] ^ v[1])
        .function("L", &["A", "eL"], |v| v[0] ^ v[1])
        .function("M", &["A", "L", "eM"], |v| (v[0] & v[1]) ^ v[2])
        .function("Y", &["A", "L", "M", "eY"], |v| (v[0] | v[2]) & (v[1] | v[0]) ^ v[3])
        .build()
        .expect("fixture builds")
}

/// M = U_A and Y = M xor U_{1-A}: the mediator and outcome noise are
/// shared across exposure worlds, so cross-world independence fails while
/// all single-world independences hold.
pub fn cross_world() -> FiniteScm {
    ScmBuilder::new()
        .exposure("A")
        .mediator("M", 2)
        .outcome("Y", 2)
        .noise("eA", bern(0.5))
        .noise("U0", bern(0.3))
        .noise("U1", bern(0.6))
        .function("A", &["eA"], |v| v[0])
        .function("M", &["A", "U0", "U1"], |v| if v[0] == 0 { v[1] } else { v[2] })
        .function("Y", &["A", "M", "U0", "U1"], |v| {
            let other = if v[0] == 0 { v[3] } else { v[2] };
            v[1] ^ other
        })
        .build()
        .expect("fixture builds")
}

pub const NAMES: &[&str] = &[
    "noisy-chain",
    "deterministic-chain",
    "null-m",
    "null-y",
    "separable",
    "l-chain",
    "cross-world",
];

pub fn by_name(name: &str) -> Option<FiniteScm> {
    Some(match name {
        "noisy-chain" => noisy_chain(),
        "deterministic-chain" => deterministic_chain(),
        "null-m" => null_m(),
        "null-y" => null_y(),
        "separable" => separable(),
        "l-chain" => l_chain(),
        "cross-world" => cross_world(),
        _ => return None,
    })
}
