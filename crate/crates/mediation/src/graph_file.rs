//! Graph files and the bundled reference structures.

use std::path::Path;

use mediation_core::graph::{parse_graph, structures, write_graph, Dag};

use crate::error::{read, write, Result};

/// Names accepted by [`builtin`].
pub const BUILTIN: &[&str] = &[
    "mediation",
    "separable",
    "intermediate",
    "joint-mediators",
    "separable-l-via-m",
    "separable-l-via-y",
    "separable-three",
];

pub fn builtin(name: &str) -> Option<Dag> {
    Some(match name {
        "mediation" => structures::mediation(),
        "separable" => structures::separable(),
        "intermediate" => structures::intermediate(),
        "joint-mediators" => structures::joint_mediators(),
        "separable-l-via-m" => structures::separable_l_via_m(),
        "separable-l-via-y" => structures::separable_l_via_y(),
        "separable-three" => structures::separable_three(),
        _ => return None,
    })
}

pub fn load_graph(path: &Path) -> Result<Dag> {
    Ok(parse_graph(&read(path)?)?)
}

pub fn save_graph(path: &Path, g: &Dag) -> Result<()> {
    write(path, &write_graph(g))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_files_match_builtins() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
        for name in BUILTIN {
            let g = load_graph(&dir.join(format!("{}.graph", name))).unwrap();
            assert_eq!(write_graph(&g), write_graph(&builtin(name).unwrap()), "{}", name);
        }
    }
}
