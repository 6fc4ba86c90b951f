//! Acceptance checks. Prints one PASS/FAIL line per criterion.
//!
//! `ACCEPTANCE_ONLY=3,4` runs a subset. Criteria listed in `KNOWN_RED` are
//! reported as FAIL but do not fail the process.

use std::collections::VecDeque;
use std::path::PathBuf;
use std::time::Instant;

use entsched_core::agents::train::{masked_mse, Sample};
use entsched_core::agents::{load_checkpoint, read_checkpoint, write_checkpoint, Encoder, EncoderDims, Model, Net, TokenSequence, N_DIM};
use entsched_core::dsu::DisjointSet;
use entsched_core::grid::Grid;
use entsched_core::harness::{
    build_policy, paired_test, run_batch, run_episode, run_sweep, summarize_results, write_results_csv,
    write_sweep_csv, BatchSpec, EpisodeFactory, EpisodeOptions, Policy, PreinfoSource, StatsSummary, SweepAxis,
    SweepSpec,
};
use entsched_core::metrics::trajectory_point;
use entsched_core::rng::stream;
use entsched_core::schedulers::mst_plan;
use entsched_core::{Action, ActionMatrix, EnvState, GenParams, PreInfo, SimConfig, StrategyConfig, StrategyKind};
use entsched_qmcs::benchmarks::{atom_cavity, two_level_decay};
use entsched_qmcs::hamiltonian::TimeDependentOp;
use entsched_qmcs::jump::{mc_trajectory, TrajectoryOptions};
use entsched_qmcs::linalg::projector;
use entsched_qmcs::master::evolve_master_equation;
use entsched_qmcs::{run_bk, AtomCavityParams, BkConfig, CMatrix, CVector, NodeParams, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KNOWN_RED: &[u32] = &[3, 6];

/// Environments used for evaluation; disjoint from the training seeds.
const EVAL_SEED: u64 = 2026;

type Verdict = (bool, String);

fn main() {
    let only: Option<Vec<u32>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let criteria: [(u32, &str, fn() -> Verdict); 10] = [
        (1, "metric correctness", c1_metric),
        (2, "dsu and mst oracles", c2_oracles),
        (3, "homogeneous equivalence", c3_homogeneous),
        (4, "strategy ordering", c4_ordering),
        (5, "learned improvement", c5_learned),
        (6, "trends", c6_trends),
        (7, "model numerics", c7_model),
        (8, "quantum-jump validity", c8_jump),
        (9, "barrett-kok ideal limit", c9_bk),
        (10, "sweep reproducibility", c10_reproducible),
    ];
    let mut unexpected = Vec::new();
    for (id, name, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = run();
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id:>2} ({name}): {detail} [{:.1}s]", start.elapsed().as_secs_f64());
        if !pass && !KNOWN_RED.contains(&id) {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}

fn checkpoint(name: &str) -> Model {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "checkpoints", name].iter().collect();
    load_checkpoint(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn batch(factory: &EpisodeFactory, kind: StrategyKind, model: Option<&Model>, n: usize) -> StatsSummary {
    let spec = BatchSpec {
        factory,
        strategy: StrategyConfig::of(kind),
        model,
        mixing_weight: 0.1,
        n_episodes: n,
        base_seed: EVAL_SEED,
        parallel: true,
    };
    summarize_results(&run_batch(&spec).unwrap(), factory.sim.stop_fraction).unwrap()
}

fn fmt(s: &StatsSummary) -> String {
    format!("{:.3}±{:.3}", s.mean_mu, s.sigma_mu)
}

// ---------------------------------------------------------------- 1

/// Largest component by BFS over the recorded links; the lowest-indexed
/// qubit wins ties between equal sizes.
fn bfs_largest(n: usize, edges: &[(usize, usize)]) -> Vec<bool> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut label = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut count = 0;
        let mut queue = VecDeque::from([s]);
        label[s] = id;
        while let Some(v) = queue.pop_front() {
            count += 1;
            for &w in &adj[v] {
                if label[w] == usize::MAX {
                    label[w] = id;
                    queue.push_back(w);
                }
            }
        }
        sizes.push(count);
    }
    let best = (0..sizes.len()).fold(0, |b, k| if sizes[k] > sizes[b] { k } else { b });
    label.iter().map(|&l| l == best).collect()
}

fn direct_point(state: &EnvState, t_mem: f64) -> (usize, f64, f64) {
    let n = state.n_qubits();
    let edges: Vec<(usize, usize)> = state.progress.iter().map(|e| (e.qubit_i, e.qubit_j)).collect();
    let inside = bfs_largest(n, &edges);
    let size = inside.iter().filter(|&&x| x).count();
    let mut eps = 0.0;
    for e in &state.progress {
        if inside[e.qubit_i] && inside[e.qubit_j] {
            let elapsed = (state.step - e.success_step) as f64;
            eps += 1.0 - state.preinfo.f(e.qubit_i, e.qubit_j) * (-elapsed / t_mem).exp();
        }
    }
    let mu = (size as f64).min(if eps > 0.0 { 1.0 / (size as f64 * eps) } else { f64::INFINITY });
    (size, eps, mu)
}

/// Forwards to a policy and records an independent evaluation of the state
/// at every scheduling event.
struct Audit {
    inner: Box<dyn Policy>,
    t_mem: f64,
    seen: Vec<(u64, usize, f64, f64)>,
}

impl Policy for Audit {
    fn action_matrix(&mut self, state: &EnvState) -> entsched_core::Result<ActionMatrix> {
        let (n, eps, mu) = direct_point(state, self.t_mem);
        self.seen.push((state.step, n, eps, mu));
        self.inner.action_matrix(state)
    }
}

fn c1_metric() -> Verdict {
    let factory = EpisodeFactory::new(SimConfig::default(), PreinfoSource::Generate(GenParams::default()));
    let kinds = [StrategyKind::Random, StrategyKind::Greedy, StrategyKind::StaticMst];
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    let mut peak_ok = true;

    // Episodes driven by the harness, audited at each scheduling event.
    for k in 0..50u64 {
        let strategy = StrategyConfig::of(kinds[k as usize % 3]);
        let setup = factory.setup(EVAL_SEED, k).unwrap();
        let t_mem = setup.config.t_mem_steps;
        let inner = build_policy(&strategy, &setup.preinfo, t_mem, None, 0.1, setup.policy_seed).unwrap();
        let mut audit = Audit { inner, t_mem, seen: Vec::new() };
        let ep = run_episode(setup.config, setup.preinfo, &strategy, &mut audit, EpisodeOptions::default()).unwrap();
        for &(step, n, eps, mu) in &audit.seen {
            let p = ep.trajectory.iter().find(|p| p.step == step).expect("every step is recorded");
            if p.n_max != n {
                return (false, format!("episode {k} step {step}: n_max {} vs {n}", p.n_max));
            }
            worst = worst.max((p.epsilon - eps).abs()).max((p.mu - mu).abs());
            checked += 1;
        }
        // brute-force peak over all recorded points, earliest step on ties
        let mut best = (f64::NEG_INFINITY, 0);
        for p in &ep.trajectory {
            if p.mu > best.0 {
                best = (p.mu, p.step);
            }
        }
        peak_ok &= ep.result.mu_peak == best.0 && ep.result.step_at_peak == best.1;
    }

    // Episodes driven step by step, audited at every step.
    for k in 0..50u64 {
        let setup = factory.setup(EVAL_SEED + 1, k).unwrap();
        let t_mem = setup.config.t_mem_steps;
        let mut s = EnvState::new(setup.config, setup.preinfo).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(k);
        while !s.is_terminal() {
            let idle = s.idle_qubits();
            let mut acts = Vec::new();
            let mut used = vec![false; s.n_qubits()];
            for _ in 0..4 * idle.len() {
                if acts.len() >= s.free_workers() {
                    break;
                }
                let (a, b) = (idle[rng.random_range(0..idle.len())], idle[rng.random_range(0..idle.len())]);
                if a != b && !used[a] && !used[b] && s.is_assignable(a, b) {
                    used[a] = true;
                    used[b] = true;
                    acts.push(Action::pair(a, b));
                }
            }
            s.assign_actions(&acts).unwrap();
            s.step();
            let p = trajectory_point(&s, t_mem);
            let (n, eps, mu) = direct_point(&s, t_mem);
            if p.n_max != n {
                return (false, format!("stepped episode {k}: n_max {} vs {n}", p.n_max));
            }
            worst = worst.max((p.epsilon - eps).abs()).max((p.mu - mu).abs());
            checked += 1;
        }
    }
    let pass = worst <= 1e-12 && peak_ok && checked > 0;
    (pass, format!("{checked} points, max deviation {worst:.1e}, peaks {}", if peak_ok { "exact" } else { "differ" }))
}

// ---------------------------------------------------------------- 2

fn bfs_labels(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut label = vec![usize::MAX; n];
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        label[s] = s;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if label[w] == usize::MAX {
                    label[w] = s;
                    stack.push(w);
                }
            }
        }
    }
    label
}

fn same_partition(a: &[usize], b: &[usize]) -> bool {
    (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

/// Minimum spanning tree weight by enumerating every (n−1)-edge subset.
fn exhaustive_mst(n: usize, w: &[f64]) -> f64 {
    let edges: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let m = edges.len();
    let k = n - 1;
    let mut idx: Vec<usize> = (0..k).collect();
    let mut best = f64::INFINITY;
    loop {
        let mut parent: Vec<usize> = (0..n).collect();
        let find = |p: &mut Vec<usize>, mut x: usize| {
            while p[x] != x {
                x = p[x];
            }
            x
        };
        let mut tree = true;
        let mut total = 0.0;
        for &e in &idx {
            let (a, b) = edges[e];
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                tree = false;
                break;
            }
            parent[ra] = rb;
            total += w[a * n + b];
        }
        if tree && total < best {
            best = total;
        }
        // next combination in lexicographic order
        let mut i = k;
        while i > 0 && idx[i - 1] == i - 1 + m - k {
            i -= 1;
        }
        if i == 0 {
            return best;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn c2_oracles() -> Verdict {
    let mut rng = stream(5, "acceptance-dsu", 0);
    for seq in 0..200 {
        let n = rng.random_range(1..=10);
        let mut d = DisjointSet::new(n);
        let mut edges = Vec::new();
        for _ in 0..rng.random_range(0..30) {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            d.union(a, b);
            edges.push((a, b));
            if !same_partition(&d.labels(), &bfs_labels(n, &edges)) {
                return (false, format!("sequence {seq} diverges from BFS"));
            }
        }
    }
    let mut rng = stream(5, "acceptance-mst", 0);
    let mut sets = 0;
    let mut worst = 0.0f64;
    for set in 0..60 {
        let n = 2 + set % 7;
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                // a coarse grid forces ties
                let v = if set % 3 == 0 { rng.random_range(1..4) as f64 * 0.01 } else { rng.random::<f64>() * 0.1 };
                w[i * n + j] = v;
                w[j * n + i] = v;
            }
        }
        let f = Grid::from_fn(n, |i, j| if i == j { 1.0 } else { 1.0 - w[i * n + j] });
        let pre = PreInfo::new(f, Grid::filled(n, 1.0)).unwrap();
        let plan = mst_plan(&pre, f64::INFINITY);
        let edges: Vec<(usize, usize)> = plan.iter().map(|e| (e.i, e.j)).collect();
        let spanning = plan.len() == n - 1 && bfs_labels(n, &edges).iter().all(|&l| l == 0);
        let total: f64 = plan.iter().map(|e| w[e.i * n + e.j]).sum();
        let gap = (total - exhaustive_mst(n, &w)).abs();
        if !spanning || gap > 1e-12 {
            return (false, format!("set {set} (n={n}): spanning {spanning}, weight gap {gap:.2e}"));
        }
        worst = worst.max(gap);
        sets += 1;
    }
    (true, format!("200 sequences match BFS; {sets} weight sets, max MST gap {worst:.1e}"))
}

// ---------------------------------------------------------------- 3

fn within_noise(a: &StatsSummary, r: &StatsSummary) -> bool {
    (a.mean_mu - r.mean_mu).abs() <= 2.0 * (a.sigma_mu + r.sigma_mu)
}

fn c3_homogeneous() -> Verdict {
    let gen = GenParams { sigma_fidelity: 0.0, sigma_rate: 0.0, ..GenParams::default() };
    let factory = EpisodeFactory::new(SimConfig::default(), PreinfoSource::Generate(gen));
    let model = checkpoint("transformer_n40.ckpt");
    let random = batch(&factory, StrategyKind::Random, None, 100);
    let mut pass = true;
    let mut parts = vec![format!("random {}", fmt(&random))];
    for (kind, m) in
        [(StrategyKind::StaticMst, None), (StrategyKind::Greedy, None), (StrategyKind::TransformerQuPairs, Some(&model))]
    {
        let s = batch(&factory, kind, m, 100);
        let ok = within_noise(&s, &random);
        pass &= ok;
        parts.push(format!("{} {}{}", kind.name(), fmt(&s), if ok { "" } else { " (outside)" }));
    }
    (pass, parts.join(", "))
}

// ---------------------------------------------------------------- 4

fn c4_ordering() -> Verdict {
    let factory = EpisodeFactory::new(SimConfig::default(), PreinfoSource::Generate(GenParams::default()));
    let r = batch(&factory, StrategyKind::Random, None, 100);
    let m = batch(&factory, StrategyKind::StaticMst, None, 100);
    let g = batch(&factory, StrategyKind::Greedy, None, 100);
    let gap = |lo: &StatsSummary, hi: &StatsSummary| hi.mean_mu - lo.mean_mu > lo.two_sigma_halfwidth + hi.two_sigma_halfwidth;
    let pass = gap(&r, &m) && gap(&m, &g) && g.mean_mu >= 2.0 * r.mean_mu;
    (pass, format!("random {}, mst {}, greedy {}, greedy/random {:.2}", fmt(&r), fmt(&m), fmt(&g), g.mean_mu / r.mean_mu))
}

// ---------------------------------------------------------------- 5

fn c5_learned() -> Verdict {
    let model = checkpoint("transformer_n20.ckpt");
    let factory = EpisodeFactory::new(SimConfig::with_qubits(20), PreinfoSource::Generate(GenParams::default()));
    let spec = |kind, model| BatchSpec {
        factory: &factory,
        strategy: StrategyConfig::of(kind),
        model,
        mixing_weight: 0.1,
        n_episodes: 100,
        base_seed: EVAL_SEED,
        parallel: true,
    };
    let learned = run_batch(&spec(StrategyKind::TransformerQuPairs, Some(&model))).unwrap();
    let greedy = run_batch(&spec(StrategyKind::Greedy, None)).unwrap();
    let a: Vec<f64> = greedy.iter().map(|r| r.mu_peak).collect();
    let b: Vec<f64> = learned.iter().map(|r| r.mu_peak).collect();
    let t = paired_test(&a, &b).unwrap();
    let pass = t.mean_diff > 0.0 && t.p_value < 0.05;
    let stretch = 2f64.powf(t.mean_diff);
    (
        pass,
        format!(
            "Δμ̄ {:.3} (se {:.3}), one-sided p {:.4}, 2^Δμ̄ {:.2} (stretch ≥ 1.2 {})",
            t.mean_diff,
            t.std_err,
            t.p_value,
            stretch,
            if stretch >= 1.2 { "met" } else { "not met" }
        ),
    )
}

// ---------------------------------------------------------------- 6

fn sweep_means(axis: SweepAxis, values: Vec<f64>, n_episodes: usize) -> Vec<(f64, StrategyKind, StatsSummary)> {
    let strategies = vec![StrategyKind::Random, StrategyKind::Greedy];
    let spec = SweepSpec {
        axis,
        values: values.clone(),
        strategies: strategies.clone(),
        sim: SimConfig::default(),
        gen: GenParams::default(),
        strategy: StrategyConfig::default(),
        n_episodes,
        base_seed: EVAL_SEED,
        model: None,
        mixing_weight: 0.1,
    };
    let (results, _) = run_sweep(&spec).unwrap();
    let stop = spec.sim.stop_fraction;
    let mut out = Vec::new();
    for &v in &values {
        for &kind in &strategies {
            let rows: Vec<_> = results
                .iter()
                .filter(|r| {
                    r.strategy == kind.name()
                        && match axis {
                            SweepAxis::SigmaFidelity => r.sigma_f == v,
                            SweepAxis::NQubits => r.n_qubits as f64 == v,
                        }
                })
                .cloned()
                .collect();
            out.push((v, kind, summarize_results(&rows, stop).unwrap()));
        }
    }
    out
}

fn series(rows: &[(f64, StrategyKind, StatsSummary)], kind: StrategyKind) -> Vec<f64> {
    rows.iter().filter(|r| r.1 == kind).map(|r| r.2.mean_mu).collect()
}

fn c6_trends() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();

    let sigma = sweep_means(SweepAxis::SigmaFidelity, vec![0.0, 0.03, 0.06, 0.09], 100);
    let rand_s = series(&sigma, StrategyKind::Random);
    let greedy_s = series(&sigma, StrategyKind::Greedy);
    let ok_r = rand_s.windows(2).all(|w| w[1] <= w[0]);
    let ok_g = greedy_s.windows(2).all(|w| w[1] >= w[0]);
    pass &= ok_r && ok_g;
    parts.push(format!("σ(F) sweep random {rand_s:.2?} {}, greedy {greedy_s:.2?} {}", ok(ok_r), ok(ok_g)));

    let nq = sweep_means(SweepAxis::NQubits, vec![40.0, 80.0], 100);
    let rand_n = series(&nq, StrategyKind::Random);
    let greedy_n = series(&nq, StrategyKind::Greedy);
    let ok_r = rand_n[1] < rand_n[0];
    let ok_g = greedy_n[1] > greedy_n[0];
    pass &= ok_r && ok_g;
    parts.push(format!("N_q 40→80 random {rand_n:.2?} {}, greedy {greedy_n:.2?} {}", ok(ok_r), ok(ok_g)));

    let transfer = transfer_inference();
    pass &= transfer.is_ok();
    parts.push(match transfer {
        Ok(n) => format!("N_q=40 checkpoint scores {n} pairs at N_q=80"),
        Err(e) => format!("transfer failed: {e}"),
    });
    (pass, parts.join("; "))
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "violated"
    }
}

fn transfer_inference() -> entsched_core::Result<usize> {
    let model = checkpoint("transformer_n40.ckpt");
    let factory = EpisodeFactory::new(SimConfig::with_qubits(80), PreinfoSource::Generate(GenParams::default()));
    let setup = factory.setup(EVAL_SEED, 0)?;
    let t_mem = setup.config.t_mem_steps;
    let strategy = StrategyConfig::of(StrategyKind::TransformerQuPairs);
    let mut policy = build_policy(&strategy, &setup.preinfo, t_mem, Some(&model), 0.1, setup.policy_seed)?;
    let mut s = EnvState::new(setup.config, setup.preinfo.clone())?;
    let mut scored = 0;
    for _ in 0..3 {
        let m = policy.action_matrix(&s)?;
        scored = scored.max(m.finite_entries());
        let pred = model.predict_pairs(&s, &s.preinfo, t_mem)?;
        if pred.len() != 80 * 80 || pred.iter().any(|v| !v.is_finite()) {
            return Err(entsched_core::Error::Config("bad prediction shape".into()));
        }
        let acts = entsched_core::schedulers::select_below(&m, &s, f64::INFINITY);
        s.assign_actions(&acts)?;
        for _ in 0..50 {
            s.step();
        }
    }
    Ok(scored)
}

// ---------------------------------------------------------------- 7

fn c7_model() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let dims = EncoderDims { input_dim: N_DIM, blocks: 2, embed_dim: 8, heads: 2, ff_dim: 12 };
    let mut net = Net::Transformer(Encoder::new(dims, &mut rng).unwrap());
    let len = 9;
    let tokens = TokenSequence { len, dim: N_DIM, data: (0..len * N_DIM).map(|_| rng.random::<f64>()).collect() };
    let target: Vec<f64> = (0..len).map(|_| rng.random::<f64>() * 0.1).collect();
    let mask: Vec<bool> = (0..len).map(|k| k % 3 != 1).collect();
    let sample = Sample { tokens, target, mask };
    let loss = |net: &Net, s: &Sample| masked_mse(&net.predict(&s.tokens).unwrap(), &s.target, &s.mask).unwrap().0;

    let mut grad = vec![0.0; net.params().len()];
    net.loss_grad(&sample, &mut grad).unwrap();
    let h = 1e-5;
    let mut worst = 0.0f64;
    for k in 0..grad.len() {
        let orig = net.params()[k];
        net.params_mut()[k] = orig + h;
        let up = loss(&net, &sample);
        net.params_mut()[k] = orig - h;
        let down = loss(&net, &sample);
        net.params_mut()[k] = orig;
        let numeric = (up - down) / (2.0 * h);
        // relative 1e-4, with an absolute floor for gradients that vanish exactly
        worst = worst.max((grad[k] - numeric).abs() / (1e-4 * grad[k].abs().max(numeric.abs()) + 1e-8));
    }
    let grads_ok = worst <= 1.0;

    let mut scrambled = sample.clone();
    for k in 0..len {
        if !scrambled.mask[k] {
            scrambled.target[k] = 1e3 * (k as f64 + 1.0);
        }
    }
    let mut g2 = vec![0.0; grad.len()];
    net.loss_grad(&scrambled, &mut g2).unwrap();
    let mask_ok = loss(&net, &scrambled) == loss(&net, &sample) && g2 == grad;

    let model = net.to_model();
    let mut bytes = Vec::new();
    write_checkpoint(&model, &mut bytes).unwrap();
    let back = read_checkpoint(&bytes[..]).unwrap();
    let mut ckpt_ok = true;
    for _ in 0..100 {
        let len = rng.random_range(1..40);
        let t = TokenSequence { len, dim: N_DIM, data: (0..len * N_DIM).map(|_| rng.random()).collect() };
        let a = model.forward(&t).unwrap();
        let b = back.forward(&t).unwrap();
        ckpt_ok &= a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()) && a.len() == b.len();
    }
    (
        grads_ok && mask_ok && ckpt_ok,
        format!(
            "{} params, worst gradient ratio {worst:.3}, masking {}, checkpoint {}",
            grad.len(),
            if mask_ok { "invariant" } else { "leaks" },
            if ckpt_ok { "bit-exact" } else { "differs" }
        ),
    )
}

// ---------------------------------------------------------------- 8

fn c8_jump() -> Verdict {
    // (a) jump times
    let gamma = 1.3;
    let b = two_level_decay(gamma);
    let problem = b.problem().unwrap();
    let opts = TrajectoryOptions::with_dt(b.default_dt().unwrap());
    let n = 10_000;
    let mut sum = 0.0;
    for k in 0..n {
        let mut rng = entsched_qmcs::rng::stream(EVAL_SEED, "acceptance-decay", k);
        let traj = mc_trajectory(&problem, &b.psi0, (0.0, 40.0 / gamma), &opts, &mut rng).unwrap();
        sum += traj.jumps.first().map_or(f64::INFINITY, |j| j.time);
    }
    let rel = (sum / n as f64 * gamma - 1.0).abs();
    let ok_a = rel <= 0.05;

    // (b) ensemble vs master equation on the dim-8 benchmark
    let ac = atom_cavity();
    let (d400, d1600) = (ac.ensemble_distance(400, 1.5, EVAL_SEED).unwrap(), ac.ensemble_distance(1600, 1.5, EVAL_SEED).unwrap());
    let reps = 8;
    let mean = |n: usize| (0..reps).map(|r| ac.ensemble_distance(n, 1.5, 500 + r).unwrap()).sum::<f64>() / reps as f64;
    let ratio = mean(400) / mean(1600);
    let ok_b = ac.dim() == 8 && d400 <= 5.0 / 20.0 && d1600 <= 5.0 / 40.0 && (ratio - 2.0).abs() <= 0.5;

    // (c) closed evolution vs an independent matrix exponential
    let dim = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut h = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        h[(i, i)] = C64::new(rng.random_range(-1.0..1.0), 0.0);
        for j in i + 1..dim {
            let z = C64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    let mut psi = CVector::from_fn(dim, |_, _| C64::new(rng.random(), rng.random()));
    psi /= C64::new(psi.norm(), 0.0);
    let rho0 = projector(&psi);
    let t = 2.5;
    let rho = evolve_master_equation(&TimeDependentOp::constant(h.clone()), &[], &[], &rho0, (0.0, t), 1e-3).unwrap();
    let u = (h * C64::new(0.0, -t)).exp();
    let exact = &u * &rho0 * u.adjoint();
    let dev = (rho - exact).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let ok_c = dev <= 1e-8;
    (
        ok_a && ok_b && ok_c,
        format!(
            "mean jump time off by {:.2}%, distances {d400:.4}/{d1600:.4} ratio {ratio:.2}, unitary deviation {dev:.1e}",
            100.0 * rel
        ),
    )
}

// ---------------------------------------------------------------- 9

fn c9_bk() -> Verdict {
    let cfg = BkConfig {
        params: AtomCavityParams::symmetric(NodeParams::ideal()),
        n_traj: 2000,
        n_traj2: 2000,
        seed: EVAL_SEED,
        ..BkConfig::default()
    };
    match run_bk(&cfg) {
        Ok(r) => (
            r.fidelity() >= 0.98 && r.total_rate() <= 0.5,
            format!("branch {:?} fidelity {:.4}, heralded probability {:.4}", r.chosen_branch, r.fidelity(), r.total_rate()),
        ),
        Err(e) => (false, format!("run failed: {e}")),
    }
}

// ---------------------------------------------------------------- 10

fn c10_reproducible() -> Verdict {
    let spec = SweepSpec {
        axis: SweepAxis::SigmaFidelity,
        values: vec![0.0, 0.09],
        strategies: vec![StrategyKind::Random, StrategyKind::StaticMst, StrategyKind::Greedy],
        sim: SimConfig::with_qubits(20),
        gen: GenParams::default(),
        strategy: StrategyConfig::default(),
        n_episodes: 20,
        base_seed: EVAL_SEED,
        model: None,
        mixing_weight: 0.1,
    };
    let render = || {
        let (results, rows) = run_sweep(&spec).unwrap();
        let mut out = Vec::new();
        write_results_csv(&results, false, &mut out).unwrap();
        write_sweep_csv(&rows, &mut out).unwrap();
        out
    };
    let (a, b) = (render(), render());
    (a == b, format!("{} bytes, {}", a.len(), if a == b { "identical" } else { "differ" }))
}
