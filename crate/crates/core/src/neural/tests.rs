use ndarray::{array, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::checkpoint::Checkpoint;
use super::*;
use crate::error::Error;
use crate::series::make_windows;

fn random_matrix(rows: usize, cols: usize, sd: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let d = Normal::new(0.0, sd).unwrap();
    Array2::from_shape_simple_fn((rows, cols), || d.sample(rng))
}

fn random_mlp(dims: &[usize], rng: &mut ChaCha8Rng) -> Mlp {
    let layers = dims
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let act = if i + 2 == dims.len() {
                Activation::Identity
            } else {
                Activation::Relu
            };
            let bias = random_matrix(1, w[1], 0.1, rng).row(0).to_owned();
            DenseLayer::new(random_matrix(w[1], w[0], 0.1, rng), bias, act).unwrap()
        })
        .collect();
    Mlp::new(layers).unwrap()
}

#[test]
fn zero_network_has_zero_loss_and_gradients() {
    let net = Mlp::new(vec![DenseLayer::zeros(3, 2, Activation::Identity)]).unwrap();
    let x = array![[1.0, 2.0, 3.0], [-1.0, 0.0, 4.0]];
    let (loss, grads) = backward(&net, &x, &Array2::zeros((2, 2)), Loss::Mse).unwrap();
    assert_eq!(loss, 0.0);
    assert!(grads.flatten().iter().all(|g| *g == 0.0));
}

#[test]
fn two_layer_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut net = random_mlp(&[5, 8, 3], &mut rng);
    let x = random_matrix(4, 5, 1.0, &mut rng);
    let y = random_matrix(4, 3, 1.0, &mut rng);
    for loss in [Loss::Mse, Loss::Mae] {
        let (_, grads) = backward(&net, &x, &y, loss).unwrap();
        let numeric = numeric_gradient(&mut net, &x, &y, loss, 1e-5).unwrap();
        let err = max_relative_error(&grads.flatten(), &numeric, 1e-6);
        assert!(err < 1e-4, "{loss:?}: relative error {err}");
    }
}

#[test]
fn scaling_the_loss_scales_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let net = random_mlp(&[4, 6, 2], &mut rng);
    let x = random_matrix(3, 4, 1.0, &mut rng);
    let y = random_matrix(3, 2, 1.0, &mut rng);
    let (out, cache) = net.forward_cached(&x).unwrap();
    let (_, d_out) = Loss::Mse.evaluate(&out, &y);
    let once = net.backward_cached(&cache, &d_out);
    let twice = net.backward_cached(&cache, &(&d_out * 2.0));
    for (a, b) in once.flatten().iter().zip(twice.flatten()) {
        assert!((2.0 * a - b).abs() <= 1e-15 * b.abs().max(1.0));
    }
}

#[test]
fn backward_rejects_bad_shapes_and_non_finite_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let net = random_mlp(&[3, 2], &mut rng);
    let x = random_matrix(2, 3, 1.0, &mut rng);
    assert!(matches!(
        backward(&net, &x, &Array2::zeros((2, 5)), Loss::Mse),
        Err(Error::ShapeMismatch(_))
    ));
    let y = array![[f64::INFINITY, 0.0], [0.0, 0.0]];
    assert!(matches!(backward(&net, &x, &y, Loss::Mse), Err(Error::NonFiniteLoss)));
}

fn small_config() -> TrainConfig {
    TrainConfig {
        learning_rate: 1e-2,
        max_epochs: 500,
        batch_size: 8,
        patience: 500,
        ..TrainConfig::default()
    }
}

#[test]
fn memorises_a_single_window() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut net = random_mlp(&[6, 16, 3], &mut rng);
    let w = make_windows(&[0.1, -0.4, 0.9, 0.3, -0.2, 0.5, 0.7, -0.6, 0.2], 6, 3, 1).unwrap();
    assert_eq!(w.len(), 1);
    let hist = train(&mut net, &w, &small_config()).unwrap();
    assert!(hist.epochs() <= 500);
    assert!(hist.best_val_loss() < 1e-6, "loss {}", hist.best_val_loss());
}

#[test]
fn patience_one_stops_at_second_epoch() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut net = random_mlp(&[4, 8, 2], &mut rng);
    let series: Vec<f64> = (0..40).map(|t| (t as f64 * 0.3).sin()).collect();
    let w = make_windows(&series, 4, 2, 1).unwrap();
    let config = TrainConfig {
        learning_rate: 0.0,
        patience: 1,
        ..small_config()
    };
    let hist = train(&mut net, &w, &config).unwrap();
    assert_eq!(hist.epochs(), 2);
    assert!(hist.stopped_early);
    assert_eq!(hist.best_epoch, 1);
}

#[test]
fn training_is_deterministic_and_restores_best() {
    let series: Vec<f64> = (0..120).map(|t| (t as f64 * 0.2).sin() + 0.01 * t as f64).collect();
    let w = make_windows(&series, 10, 3, 1).unwrap();
    let config = TrainConfig {
        max_epochs: 40,
        patience: 5,
        ..small_config()
    };
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut net = random_mlp(&[10, 16, 3], &mut rng);
        let hist = train(&mut net, &w, &config).unwrap();
        (net, hist)
    };
    let (net_a, hist_a) = run();
    let (net_b, hist_b) = run();
    assert_eq!(hist_a, hist_b);
    assert_eq!(net_a, net_b);

    let n_val = (w.len() as f64 * config.validation_fraction).floor() as usize;
    let val = w.rows(w.len() - n_val..w.len());
    let restored = config.loss.value(&net_a.predict_batch(&val.inputs).unwrap(), &val.targets);
    assert_eq!(restored, hist_a.best_val_loss());
}

#[test]
fn training_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut net = random_mlp(&[4, 2], &mut rng);
    let w = make_windows(&[1.0; 10], 4, 2, 1).unwrap();
    let empty = w.rows(0..0);
    assert!(matches!(
        train(&mut net, &empty, &small_config()),
        Err(Error::EmptyWindows)
    ));
    let diverging = TrainConfig {
        learning_rate: 1e300,
        optimizer: OptimizerKind::Sgd,
        ..small_config()
    };
    let w = make_windows(&(0..30).map(f64::from).collect::<Vec<_>>(), 4, 2, 1).unwrap();
    assert!(matches!(
        train(&mut net, &w, &diverging),
        Err(Error::DivergedLoss(_))
    ));
    let bad = TrainConfig {
        validation_fraction: 0.9,
        ..small_config()
    };
    assert!(matches!(train(&mut net, &w, &bad), Err(Error::Config(_))));
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let net = random_mlp(&[7, 5, 3], &mut rng);
    let names: Vec<String> = (0..net.layers.len()).map(|i| format!("layer{i}")).collect();
    let ckpt = Checkpoint::from_layers("{\"kind\":\"mlp\"}".into(), &names, net.layers());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.ckpt");
    ckpt.save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(back, ckpt);

    let mut other = random_mlp(&[7, 5, 3], &mut rng);
    back.load_into(&names, other.layers_mut()).unwrap();
    for (a, b) in net.layers.iter().zip(&other.layers) {
        assert!(a.weights.iter().zip(&b.weights).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!(a.bias.iter().zip(&b.bias).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    let mut wrong = random_mlp(&[7, 4, 3], &mut rng);
    assert!(back.load_into(&names, wrong.layers_mut()).is_err());
    assert!(Checkpoint::parse("garbage").is_err());
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn checkpoint_values_round_trip(values in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 1..64)) {
            let layer = DenseLayer::new(
                Array2::from_shape_vec((1, values.len()), values.clone()).unwrap(),
                ndarray::Array1::from(vec![values[0]]),
                Activation::Relu,
            ).unwrap();
            let names = vec!["l".to_string()];
            let ckpt = Checkpoint::from_layers("{}".into(), &names, [&layer]);
            let back = Checkpoint::parse(&ckpt.to_text()).unwrap();
            for (a, b) in back.tensors[0].data.iter().zip(&values) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
