use kge_core::graph::{KnowledgeGraph, Triple};
use kge_core::models::{ModelKind, ModelSpec, ScoringModel};
use kge_core::rng::stream;
use kge_core::synthetic::{generate, SyntheticConfig};
use kge_core::training::{log_sigmoid, self_adversarial_loss, write_checkpoint, KgeTrainer, TrainConfig};
use rand::Rng;

fn toy() -> KnowledgeGraph {
    generate(&SyntheticConfig {
        entities: 200,
        relations: 8,
        ..SyntheticConfig::default()
    })
    .unwrap()
    .graph
}

fn model(kg: &KnowledgeGraph, spec: &ModelSpec, seed: u64) -> ScoringModel {
    ScoringModel::new(spec, kg.entity_count(), kg.relation_count(), &mut stream(seed, "init")).unwrap()
}

fn config(lr: f64) -> TrainConfig {
    TrainConfig {
        batch_size: 128,
        negatives: 16,
        learning_rate: lr,
        seed: 4,
        ..TrainConfig::default()
    }
}

/// Relative error below 1e-4, or both values within finite-difference
/// round-off of zero.
fn close(fd: f64, g: f64) -> bool {
    (fd - g).abs() < 1e-8 || (fd - g).abs() / (fd.abs() + g.abs()) < 1e-4
}

#[test]
fn adversarial_gradient_matches_differences_with_frozen_weights() {
    let mut rng = stream(1, "adv");
    for _ in 0..200 {
        let pos = rng.gen_range(-6.0..6.0);
        let negs: Vec<f64> = (0..rng.gen_range(1..8)).map(|_| rng.gen_range(-6.0..6.0)).collect();
        let alpha = rng.gen_range(0.0..2.0);
        let out = self_adversarial_loss(pos, &negs, alpha).unwrap();
        assert!((out.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // loss with the weights held at their current values
        let frozen = |p: f64, n: &[f64]| -log_sigmoid(p) - n.iter().zip(&out.weights).map(|(s, w)| w * log_sigmoid(-s)).sum::<f64>();
        assert!((frozen(pos, &negs) - out.loss).abs() < 1e-12);
        let eps = 1e-5;
        let fd = (frozen(pos + eps, &negs) - frozen(pos - eps, &negs)) / (2.0 * eps);
        assert!(close(fd, out.d_positive));
        for i in 0..negs.len() {
            let mut up = negs.clone();
            up[i] += eps;
            let mut dn = negs.clone();
            dn[i] -= eps;
            let fd = (frozen(pos, &up) - frozen(pos, &dn)) / (2.0 * eps);
            let g = out.d_negatives[i];
            assert!(close(fd, g), "fd {fd} g {g}");
        }
    }
}

#[test]
fn toy_loss_decreases_over_ten_epochs() {
    let kg = toy();
    for kind in ModelKind::ALL {
        let mut m = model(&kg, &ModelSpec::new(kind, 16, 6.0), 0);
        let mut t = KgeTrainer::new(&m, config(0.1)).unwrap();
        let losses: Vec<f64> = (0..10).map(|_| t.train_epoch(&mut m, &kg).unwrap().loss).collect();
        assert!(losses[9] < losses[0], "{kind}: {losses:?}");
    }
}

#[test]
fn low_rank_training_updates_factors_and_basis() {
    let kg = toy();
    let mut m = model(&kg, &ModelSpec::new(ModelKind::TransE, 16, 6.0).with_rank(4), 0);
    let basis = m.entity_table().basis().unwrap().to_vec();
    let mut t = KgeTrainer::new(&m, config(0.1)).unwrap();
    let first = t.train_epoch(&mut m, &kg).unwrap().loss;
    let mut last = first;
    for _ in 0..9 {
        last = t.train_epoch(&mut m, &kg).unwrap().loss;
    }
    assert!(last < first);
    assert_ne!(m.entity_table().basis().unwrap(), &basis[..]);
}

#[test]
fn ten_triples_are_memorized() {
    let train: Vec<Triple> = (0..10u32).map(|i| Triple::new(i, i % 2, 10 + (i * 3) % 10)).collect();
    let kg = KnowledgeGraph::from_id_triples(20, 2, train, vec![], vec![]).unwrap();
    for kind in ModelKind::ALL {
        let mut m = model(&kg, &ModelSpec::new(kind, 16, 12.0), 1);
        let cfg = TrainConfig {
            batch_size: 10,
            negatives: 8,
            learning_rate: 0.2,
            seed: 2,
            ..TrainConfig::default()
        };
        let mut t = KgeTrainer::new(&m, cfg).unwrap();
        let mut best = f64::INFINITY;
        for _ in 0..500 {
            best = best.min(t.train_epoch(&mut m, &kg).unwrap().loss);
            if best < 0.1 {
                break;
            }
        }
        assert!(best < 0.1, "{kind}: best loss {best}");
    }
}

#[test]
fn zero_learning_rate_keeps_parameters() {
    let kg = toy();
    for spec in [ModelSpec::new(ModelKind::RotatE, 8, 6.0), ModelSpec::new(ModelKind::ComplEx, 8, 6.0).with_rank(2)] {
        let mut m = model(&kg, &spec, 0);
        let before = write_checkpoint(&m);
        for opt in ["sgd", "adagrad", "adam"] {
            let mut t = KgeTrainer::new(&m, TrainConfig { optimizer: opt.into(), ..config(0.0) }).unwrap();
            t.train_epoch(&mut m, &kg).unwrap();
        }
        assert_eq!(write_checkpoint(&m), before);
    }
}

#[test]
fn fixed_seed_reproduces_checkpoint_bytes() {
    let kg = toy();
    let run = |seed: u64| {
        let mut m = model(&kg, &ModelSpec::new(ModelKind::PairRE, 8, 6.0).with_rank(4), 0);
        let mut t = KgeTrainer::new(&m, TrainConfig { seed, ..config(0.05) }).unwrap();
        for _ in 0..3 {
            t.train_epoch(&mut m, &kg).unwrap();
        }
        write_checkpoint(&m)
    };
    assert_eq!(run(7), run(7));
    assert_ne!(run(7), run(8));
}

#[test]
fn invalid_training_configs_are_rejected() {
    let kg = toy();
    let m = model(&kg, &ModelSpec::new(ModelKind::TransE, 8, 6.0), 0);
    for bad in [
        TrainConfig { negatives: 0, ..config(0.1) },
        TrainConfig { batch_size: 0, ..config(0.1) },
        TrainConfig { learning_rate: -1.0, ..config(0.1) },
        TrainConfig { optimizer: "lbfgs".into(), ..config(0.1) },
    ] {
        assert!(KgeTrainer::new(&m, bad).is_err());
    }
}
