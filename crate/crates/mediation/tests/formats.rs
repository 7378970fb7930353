use mediation::core::estimation::{simulate, Dataset};
use mediation::core::generate::{attempt_rng, generate, premise_family};
use mediation::core::identification::ModelClass;
use mediation::dataset_csv::{read_dataset, write_dataset};
use mediation::graph_file::{builtin, BUILTIN};
use mediation::core::graph::{parse_graph, swig_split, write_graph};
use mediation::model_file::{parse_model, write_model};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn models_round_trip(class in 0..ModelClass::ALL.len(), i in 0u64..64, seed in any::<u64>()) {
        let scm = generate(&premise_family(ModelClass::ALL[class], i), &mut attempt_rng(seed, i));
        let text = write_model(&scm);
        let back = parse_model(&text).unwrap();
        prop_assert_eq!(write_model(&back), text);
        prop_assert_eq!(back, scm);
    }

    #[test]
    fn datasets_round_trip(i in 0u64..32, seed in any::<u64>(), n in 1usize..200) {
        let scm = generate(&premise_family(ModelClass::FfrcistgL, i), &mut attempt_rng(seed, i));
        let ds = simulate(&scm, n, seed).unwrap();
        prop_assert_eq!(read_dataset(write_dataset(&ds).unwrap().as_bytes()).unwrap(), ds);
        let exact = Dataset::from_distribution(&scm).unwrap();
        prop_assert_eq!(read_dataset(write_dataset(&exact).unwrap().as_bytes()).unwrap(), exact);
    }

    #[test]
    fn split_graphs_round_trip(k in 0..BUILTIN.len(), mask in 0u32..16) {
        let g = builtin(BUILTIN[k]).unwrap();
        let names: Vec<&str> = g.nodes.iter().map(|n| n.name.as_str()).collect();
        let chosen: Vec<&str> = names.iter().take(4).enumerate().filter(|(j, _)| mask >> j & 1 == 1).map(|(_, n)| *n).collect();
        let Ok(s) = swig_split(&g, &chosen) else { return Ok(()) };
        let text = write_graph(&s);
        prop_assert_eq!(write_graph(&parse_graph(&text).unwrap()), text);
    }
}
