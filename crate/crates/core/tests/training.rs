use physml_core::io::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use physml_core::models::{
    build, make_pendulum_features, train, FeatureTable, ModelKind, NetworkSpec, Scaling,
    Standardizer, Supervised, TrainConfig,
};
use physml_core::nn::{AdamConfig, Dense, Layer, Network, Tensor};
use physml_core::{simulate, PendulumParams, PendulumState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn line_data(n: usize, seed: u64) -> Supervised {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Supervised {
        targets: xs.iter().map(|x| 2.0 * x).collect(),
        inputs: Tensor::new(vec![n, 1], xs).unwrap(),
    }
}

fn single_dense(seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Network::new(vec![Layer::Dense(Dense::new(1, 1, &mut rng))])
}

#[test]
fn learns_a_line() {
    let cfg = TrainConfig {
        lr: 0.05,
        max_epochs: 300,
        ..Default::default()
    };
    let (net, history) = train(single_dense(0), &line_data(128, 1), &line_data(32, 2), &cfg).unwrap();
    let w = net.params()[0].data()[0];
    let b = net.params()[1].data()[0];
    assert!((w - 2.0).abs() < 5e-3, "w = {w}");
    assert!(b.abs() < 5e-3, "b = {b}");
    assert!(history.val_loss[history.best_epoch - 1] < 1e-5);
}

#[test]
fn same_seed_same_run() {
    let cfg = TrainConfig {
        max_epochs: 20,
        seed: 9,
        ..Default::default()
    };
    let spec = NetworkSpec::PendulumAnn {
        inputs: 1,
        hidden: vec![8, 4],
    };
    let run = || {
        let net = build(&spec, 3).unwrap();
        train(net, &line_data(64, 4), &line_data(16, 5), &cfg).unwrap()
    };
    let (a, ha) = run();
    let (b, hb) = run();
    assert_eq!(ha, hb);
    assert_eq!(a.flat_params(), b.flat_params());
}

#[test]
fn returned_network_is_the_best_one() {
    let cfg = TrainConfig {
        lr: 0.5,
        max_epochs: 40,
        early_stop_patience: 3,
        ..Default::default()
    };
    let (net, history) = train(single_dense(1), &line_data(64, 6), &line_data(16, 7), &cfg).unwrap();
    let val = line_data(16, 7);
    let pred = net.forward(&val.inputs).unwrap();
    let mse: f64 = pred
        .data()
        .iter()
        .zip(&val.targets)
        .map(|(p, y)| (p - y).powi(2))
        .sum::<f64>()
        / 16.0;
    let best = history.val_loss[history.best_epoch - 1];
    assert!((mse - best).abs() <= 1e-12 * best.max(1.0), "{mse} vs {best}");
    assert!(history.stopped_epoch - history.best_epoch <= cfg.early_stop_patience);
}

#[test]
fn pendulum_features_line_up_with_trajectory() {
    let traj = simulate(&PendulumParams::default(), PendulumState::default(), 1.0, 0.01).unwrap();
    let table: FeatureTable = make_pendulum_features(&traj).unwrap();
    assert_eq!(table.len(), 101);
    assert_eq!(table.columns.len(), 7);
    for i in [0, 50, 100] {
        let row = &table.rows[i];
        assert_eq!(row[0], traj.t[i]);
        assert_eq!(row[1], traj.omega[i]);
        assert_eq!(&row[2..], &traj.torques[i].as_array());
        assert_eq!(table.targets[i], traj.theta[i]);
    }
    let std = Standardizer::fit(&table, Scaling::PerColumn).unwrap();
    let set = std.transform(&table, &[7]).unwrap();
    for c in 0..7 {
        let col: Vec<f64> = (0..101).map(|r| set.inputs.row(r)[c]).collect();
        let mean = col.iter().sum::<f64>() / 101.0;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 101.0;
        assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-9, "column {c}");
    }
}

#[test]
fn checkpoints_restore_every_architecture() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for kind in ModelKind::ALL {
        let spec = NetworkSpec::default_for(kind);
        let mut net = build(&spec, 2).unwrap();
        // Move away from the seeded initialization so restore must read values.
        for p in net.params_mut() {
            p.data_mut().iter_mut().for_each(|v| *v += rng.gen_range(-0.1..0.1));
        }
        let path = dir.path().join(format!("{kind}.json"));
        save_checkpoint(&path, &Checkpoint::capture(&net, &spec, 2, "abc", AdamConfig::default())).unwrap();
        let back = load_checkpoint(&path).unwrap().restore(Some(&spec)).unwrap();
        assert_eq!(back.flat_params(), net.flat_params(), "{kind}");
    }
}
