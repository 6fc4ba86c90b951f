use entsched_qmcs::{run_bk, AtomCavityParams, BkConfig, NodeParams, QmcsError};

fn config(node: NodeParams, n: usize, seed: u64) -> BkConfig {
    BkConfig { params: AtomCavityParams::symmetric(node), n_traj: n, n_traj2: n, seed, ..BkConfig::default() }
}

#[test]
fn ideal_limit_heralds_bell_pairs() {
    let r = run_bk(&config(NodeParams::ideal(), 200, 1)).unwrap();
    assert!(r.fidelity() >= 0.98, "{r:?}");
    assert!(r.total_rate() <= 0.5, "{r:?}");
    assert!(r.counts.iter().sum::<usize>() <= r.n_traj * r.n_traj2);
}

#[test]
fn weak_cyclicity_degrades_fidelity() {
    let ideal = run_bk(&config(NodeParams::ideal(), 150, 2)).unwrap();
    let lossy = run_bk(&config(NodeParams { chi: 2.0, ..NodeParams::ideal() }, 150, 2)).unwrap();
    assert!(lossy.fidelity() < ideal.fidelity(), "{} vs {}", lossy.fidelity(), ideal.fidelity());
}

#[test]
fn same_seed_same_result() {
    let c = config(NodeParams::default(), 60, 9);
    let a = run_bk(&c).unwrap();
    let b = run_bk(&c).unwrap();
    assert_eq!(a, b);
    let other = run_bk(&BkConfig { seed: 10, ..c }).unwrap();
    assert_ne!(a.counts, other.counts);
}

#[test]
fn cost_matches_chosen_branch() {
    let r = run_bk(&config(NodeParams::default(), 60, 4)).unwrap();
    let (c, b) = entsched_qmcs::bk_cost(&r.branch_fidelities, &r.branch_rates, 1000.0);
    assert_eq!(c, r.cost);
    assert_eq!(b, r.chosen_branch);
    for k in 0..4 {
        assert!((0.0..=1.0).contains(&r.branch_fidelities[k]));
        assert!((0.0..=1.0).contains(&r.branch_rates[k]));
    }
}

#[test]
fn no_clicks_is_degenerate() {
    // the optical pulse has not arrived before the window closes
    let c = BkConfig { t_wait: 0.01, t_relax: 0.0, ..config(NodeParams::default(), 20, 1) };
    assert!(matches!(run_bk(&c), Err(QmcsError::Degenerate { .. })));
}
