use proptest::prelude::*;
use specdec::graph::{build_window_graph, sample_errors, BufferSpec, DecodingGraph, Syndrome};
use specdec::matching::{decode, decode_auto, DecodeMode};

fn graphs() -> Vec<DecodingGraph> {
    vec![
        build_window_graph(5, 5, &[]).unwrap(),
        build_window_graph(5, 5, &[BufferSpec::FUTURE]).unwrap(),
        build_window_graph(3, 6, &[BufferSpec::PAST, BufferSpec::FUTURE, BufferSpec::LEFT]).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_decoder_clears_the_syndrome(which in 0usize..3, seed in any::<u64>(), p in 0.0f64..0.04) {
        let g = &graphs()[which];
        let (_, s) = sample_errors(g, p, seed);
        let auto = decode_auto(g, &s, 12);
        prop_assert!(auto.clears(g, &s));
        let greedy = decode(g, &s, DecodeMode::Greedy).unwrap();
        prop_assert!(greedy.clears(g, &s));
        if s.weight() <= 12 {
            let exact = decode(g, &s, DecodeMode::Exact).unwrap();
            prop_assert!(exact.clears(g, &s));
            prop_assert!(exact.weight <= greedy.weight);
            prop_assert!(exact.weight <= auto.weight);
        }
    }
}

#[test]
fn empty_syndrome_decodes_to_nothing() {
    for g in graphs() {
        let s = Syndrome::zeros(g.num_nodes());
        let m = decode(&g, &s, DecodeMode::Exact).unwrap();
        assert!(m.pairs.is_empty());
        assert_eq!(m.weight, 0);
    }
}

#[test]
fn single_defect_goes_to_the_boundary() {
    let g = build_window_graph(5, 5, &[]).unwrap();
    let mut s = Syndrome::zeros(g.num_nodes());
    let u = g.num_nodes() / 2;
    s.bits[u] = 1;
    let m = decode(&g, &s, DecodeMode::Exact).unwrap();
    assert_eq!(m.pairs, vec![(u, None)]);
    assert_eq!(m.weight, g.boundary_dist(u));
}
