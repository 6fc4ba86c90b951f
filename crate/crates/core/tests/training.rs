use entsched_core::agents::{train, ModelConfig, Net, TrainConfig, Variant};
use entsched_core::harness::{run_batch, summarize_results, BatchSpec, EpisodeFactory, PreinfoSource};
use entsched_core::{GenParams, SimConfig, StrategyConfig, StrategyKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn toy_training_keeps_up_with_greedy() {
    let n = 6;
    let factory = EpisodeFactory::new(SimConfig::with_qubits(n), PreinfoSource::Generate(GenParams::default()));
    let model = ModelConfig { blocks: 1, embed_dim: 16, ff_dim: 32, ..ModelConfig::default() };
    let net = Net::new(&model, n, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let cfg = TrainConfig { epochs: 200, ..TrainConfig::default() };
    let mut epochs = 0;
    let out = train(&factory, &StrategyConfig::default(), net, &cfg, &mut |_| epochs += 1).unwrap();
    assert_eq!(epochs, 200);
    assert_eq!(out.history.len(), 200);
    assert!(out.history.iter().all(|h| h.loss.is_finite()));
    assert_eq!(out.best.variant(), Variant::QuPairs);

    let learned = out.best.to_model();
    let spec = |kind, model| BatchSpec {
        factory: &factory,
        strategy: StrategyConfig::of(kind),
        model,
        mixing_weight: cfg.mixing_weight,
        n_episodes: 100,
        base_seed: 777,
        parallel: true,
    };
    let agent = summarize_results(&run_batch(&spec(StrategyKind::TransformerQuPairs, Some(&learned))).unwrap(), 0.75).unwrap();
    let greedy = summarize_results(&run_batch(&spec(StrategyKind::Greedy, None)).unwrap(), 0.75).unwrap();
    assert!(
        agent.mean_mu >= greedy.mean_mu - greedy.sigma_mu,
        "agent {:.3} vs greedy {:.3} ± {:.3}",
        agent.mean_mu,
        greedy.mean_mu,
        greedy.sigma_mu
    );
}

#[test]
fn every_variant_trains_a_few_epochs() {
    let n = 6;
    let factory = EpisodeFactory::new(SimConfig::with_qubits(n), PreinfoSource::Generate(GenParams::default()));
    for variant in [Variant::QuPairs, Variant::Qubit, Variant::Fc] {
        let model = ModelConfig {
            blocks: 1,
            embed_dim: 8,
            ff_dim: 16,
            qubit_variant_embed: 8,
            fc_hidden: 16,
            variant,
            ..ModelConfig::default()
        };
        let net = Net::new(&model, n, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let cfg = TrainConfig { epochs: 5, ..TrainConfig::default() };
        let out = train(&factory, &StrategyConfig::default(), net, &cfg, &mut |_| {}).unwrap();
        assert_eq!(out.best.variant(), variant);
        assert!(out.best_running_mu >= 1.0);
    }
}
