use specdec::program::{builtin_program, Builtin, BuiltinParams, Program};
use specdec::sim::{simulate, LatencyModel, Recovery, SimConfig, SpeculationMode};
use specdec::windowing::Strategy;

fn repeated_t(n: usize) -> Program {
    builtin_program(Builtin::RepeatedT, BuiltinParams::new(5, n)).unwrap()
}

#[test]
fn perfect_speculation_wastes_no_compute() {
    let p = repeated_t(15);
    for strategy in Strategy::ALL {
        let cfg = SimConfig {
            strategy,
            speculation: SpeculationMode::Stochastic,
            accuracy: 1.0,
            accuracy_adjacent: 1.0,
            latency: LatencyModel::Linear(1.0),
            ..SimConfig::default()
        };
        let r = simulate(&p, &cfg).unwrap();
        assert_eq!(r.wasted_compute, 0, "{strategy}");
        assert_eq!(r.restarts, 0);
        assert_eq!(r.total_compute, r.valid_compute);
    }
}

#[test]
fn processor_limit_bounds_occupancy() {
    let p = repeated_t(15);
    for limit in [1, 2, 3] {
        let cfg = SimConfig {
            strategy: Strategy::Parallel,
            latency: LatencyModel::Linear(2.0),
            processors: Some(limit),
            ..SimConfig::default()
        };
        let r = simulate(&p, &cfg).unwrap();
        assert!(r.occupancy.iter().all(|&o| o as usize <= limit));
        assert!(r.p_max as usize <= limit);
    }
}

#[test]
fn same_seed_same_result() {
    let p = builtin_program(Builtin::Msd15To1, BuiltinParams::new(5, 0)).unwrap();
    let cfg = SimConfig {
        strategy: Strategy::Aligned,
        speculation: SpeculationMode::Stochastic,
        accuracy: 0.8,
        accuracy_adjacent: 0.7,
        recovery: Recovery::Pessimistic,
        latency: LatencyModel::Linear(1.0),
        seed: 3,
        ..SimConfig::default()
    };
    let a = simulate(&p, &cfg).unwrap();
    let b = simulate(&p, &cfg).unwrap();
    assert_eq!(a.timeline(), b.timeline());
    assert_eq!(a.wasted_compute, b.wasted_compute);
}

#[test]
fn speculation_shortens_slow_decoding() {
    let p = repeated_t(20);
    let off = SimConfig { strategy: Strategy::Aligned, latency: LatencyModel::Linear(1.0), ..SimConfig::default() };
    let on = SimConfig { speculation: SpeculationMode::Stochastic, accuracy: 1.0, accuracy_adjacent: 1.0, ..off.clone() };
    let (x, y) = (simulate(&p, &off).unwrap(), simulate(&p, &on).unwrap());
    assert!(y.runtime_rounds < x.runtime_rounds, "{} vs {}", y.runtime_rounds, x.runtime_rounds);
}

#[test]
fn horizon_truncates_backlogged_runs() {
    let p = repeated_t(30);
    let cfg = SimConfig {
        strategy: Strategy::Sliding,
        latency: LatencyModel::Linear(2.0),
        max_rounds: 400,
        ..SimConfig::default()
    };
    let r = simulate(&p, &cfg).unwrap();
    assert!(r.truncated);
    assert!(!r.unresolved_ops.is_empty());
}
