use ema_sim::dataset::gaussian_blobs;
use ema_sim::{Dataset, LossKind, Model, ModelKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_params(model: &Model, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..model.param_count()).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn finite_difference(model: &Model, params: &[f64], data: &Dataset, batch: &[usize]) -> Vec<f64> {
    let h = 1e-5;
    (0..params.len())
        .map(|j| {
            let mut plus = params.to_vec();
            let mut minus = params.to_vec();
            plus[j] += h;
            minus[j] -= h;
            (model.loss(&plus, data, batch) - model.loss(&minus, data, batch)) / (2.0 * h)
        })
        .collect()
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = a.iter().chain(b).map(|x| x * x).sum::<f64>().sqrt();
    diff / scale.max(1e-12)
}

#[test]
fn analytic_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..20u64 {
        let classes = 2 + (trial % 3) as usize;
        let dim = 1 + (trial % 5) as usize;
        let data = gaussian_blobs(classes, dim.max(2), 1.5, 12, trial);
        let batch: Vec<usize> = (0..data.len()).filter(|i| i % 2 == 0 || trial % 2 == 0).collect();
        for kind in [ModelKind::LogisticRegression, ModelKind::Mlp { hidden_units: 3 }] {
            for loss in [LossKind::CrossEntropy, LossKind::MseOneHot] {
                let model = Model::new(kind, data.dim(), classes, loss, trial).unwrap();
                let params = random_params(&model, &mut rng);
                let (value, grad) = model.loss_and_gradient(&params, &data, &batch);
                assert!((value - model.loss(&params, &data, &batch)).abs() < 1e-12);
                let fd = finite_difference(&model, &params, &data, &batch);
                let err = relative_error(&grad, &fd);
                assert!(err < 1e-5, "{kind:?} {loss:?} trial {trial}: relative error {err}");
            }
        }
    }
}

#[test]
fn zero_weights_on_symmetric_balanced_batch_give_zero_bias_gradient() {
    let features = vec![vec![1.0, 2.0], vec![-1.0, -2.0], vec![3.0, -0.5], vec![-3.0, 0.5]];
    let data = Dataset::new(features, vec![0, 1, 0, 1], 2).unwrap();
    let model = Model::new(ModelKind::LogisticRegression, 2, 2, LossKind::CrossEntropy, 0).unwrap();
    let (_, grad) = model.loss_and_gradient(model.params(), &data, &[0, 1, 2, 3]);
    assert_eq!(&grad[4..], &[0.0, 0.0]);
}

#[test]
fn duplicating_the_batch_leaves_the_gradient_unchanged() {
    let data = gaussian_blobs(3, 4, 2.0, 30, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for kind in [ModelKind::LogisticRegression, ModelKind::Mlp { hidden_units: 5 }] {
        let model = Model::new(kind, 4, 3, LossKind::CrossEntropy, 1).unwrap();
        let params = random_params(&model, &mut rng);
        let batch: Vec<usize> = (0..10).collect();
        let doubled: Vec<usize> = batch.iter().chain(&batch).copied().collect();
        let (l1, g1) = model.loss_and_gradient(&params, &data, &batch);
        let (l2, g2) = model.loss_and_gradient(&params, &data, &doubled);
        assert!((l1 - l2).abs() < 1e-12);
        assert!(g1.iter().zip(&g2).all(|(a, b)| (a - b).abs() < 1e-12));
    }
}

#[test]
fn gradient_descent_lowers_the_loss() {
    let data = gaussian_blobs(3, 4, 3.0, 90, 5);
    let mut model = Model::new(ModelKind::Mlp { hidden_units: 6 }, 4, 3, LossKind::CrossEntropy, 2).unwrap();
    let rows: Vec<usize> = (0..data.len()).collect();
    let before = model.loss(model.params(), &data, &rows);
    for _ in 0..50 {
        let (_, g) = model.loss_and_gradient(model.params(), &data, &rows);
        model.step(&g, 0.5);
    }
    assert!(model.loss(model.params(), &data, &rows) < 0.5 * before);
}
