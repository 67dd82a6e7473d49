use nodeflow::approx::{fit_field, AxisBox, TrainConfig};
use nodeflow::linalg::distance;
use nodeflow::{AffineMap, FlowEndpoint, InnModel, Matrix, VectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
fn jacobi_max_eigenvalue(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn op_norm_matches_jacobi_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..5 {
        let rows: Vec<Vec<f64>> = (0..5).map(|_| (0..5).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let m = Matrix::from_rows(&rows).unwrap();
        let ata = m.transpose().matmul(&m);
        let oracle = jacobi_max_eigenvalue(ata.to_rows()).sqrt();
        let affine = AffineMap::new(m, vec![0.0; 5]).unwrap();
        assert!((affine.op_norm() - oracle).abs() <= 1e-6 * oracle, "{} vs {oracle}", affine.op_norm());
    }
}

fn grid_points(dim: usize, per_axis: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    AxisBox::cube(dim, lo, hi).unwrap().grid(per_axis).unwrap()
}

fn max_roundtrip(model: &InnModel, points: &[Vec<f64>]) -> f64 {
    points.iter().map(|x| distance(&model.inverse(&model.forward(x).unwrap()).unwrap(), x)).fold(0.0, f64::max)
}

#[test]
fn analytic_model_roundtrip() {
    let endpoints = vec![
        FlowEndpoint::new(VectorField::radial_rotation(Matrix::unit_skew(3), 0.5, 1.8).unwrap()),
        FlowEndpoint::new(VectorField::constant(vec![0.3, -0.2, 0.1]).unwrap()),
        FlowEndpoint::new(VectorField::linear(Matrix::from_rows(&[vec![0.1, 0.5, 0.0], vec![-0.5, 0.0, 0.2], vec![0.0, -0.2, -0.1]]).unwrap()).unwrap()),
    ];
    let w = AffineMap::new(Matrix::from_rows(&[vec![2.0, 0.1, 0.0], vec![0.0, 1.0, 0.3], vec![0.2, 0.0, 0.5]]).unwrap(), vec![1.0, 0.0, -1.0]).unwrap();
    let model = InnModel::new(endpoints, w).unwrap();
    let points = grid_points(3, 10, -1.5, 1.5);
    assert_eq!(points.len(), 1000);
    assert!(max_roundtrip(&model, &points) <= 1e-5);
}

#[test]
fn trained_model_roundtrip_and_json() {
    let target = VectorField::linear(Matrix::from_rows(&[vec![0.0, 0.8], vec![-0.8, 0.0]]).unwrap()).unwrap();
    let region = AxisBox::cube(2, -3.0, 3.0).unwrap();
    let tc = TrainConfig { sample_count: 1024, epoch_count: 60, hidden_widths: vec![16, 16], ..TrainConfig::default() };
    let (field, _) = fit_field(&target, &region, &tc).unwrap();
    let model = InnModel::new(
        vec![FlowEndpoint::new(field), FlowEndpoint::new(VectorField::radial_rotation(Matrix::unit_skew(2), 0.5, 1.5).unwrap())],
        AffineMap::new(Matrix::diag(&[2.0, 1.0]), vec![0.5, 0.0]).unwrap(),
    )
    .unwrap();
    let points: Vec<Vec<f64>> = grid_points(2, 32, -1.5, 1.5).into_iter().take(1000).collect();
    assert_eq!(points.len(), 1000);
    assert!(max_roundtrip(&model, &points) <= 1e-4);

    let json = model.to_json().unwrap();
    let back = InnModel::from_json(&json).unwrap();
    assert_eq!(back, model);
    for x in points.iter().step_by(97) {
        assert_eq!(back.forward(x).unwrap(), model.forward(x).unwrap());
    }
    assert_eq!(back.to_json().unwrap(), json);
}

#[test]
fn composition_transport_inequality() {
    // Perturbing every stage field: the final deviation is bounded by
    // ‖W‖·Σ_j (Π_{i>j} e^{L_i})·e_j with e_j the stage errors on the
    // perturbed model's own points.
    let stages = [
        VectorField::linear(Matrix::from_rows(&[vec![0.0, 0.7], vec![-0.7, 0.1]]).unwrap()).unwrap(),
        VectorField::radial_rotation(Matrix::unit_skew(2), 0.5, 2.0).unwrap(),
    ];
    let approx = [
        VectorField::linear(Matrix::from_rows(&[vec![0.01, 0.7], vec![-0.69, 0.1]]).unwrap()).unwrap(),
        VectorField::scaled(1.02, stages[1].clone()).unwrap(),
    ];
    let w = AffineMap::new(Matrix::diag(&[1.5, -0.5]), vec![0.0, 0.0]).unwrap();
    let exact = InnModel::new(stages.iter().cloned().map(FlowEndpoint::new).collect(), w.clone()).unwrap();
    let model = InnModel::new(approx.iter().cloned().map(FlowEndpoint::new).collect(), w.clone()).unwrap();
    let points = grid_points(2, 15, -1.0, 1.0);
    let mut e = [0.0f64; 2];
    let mut final_err = 0.0f64;
    for x in &points {
        let mut z = x.clone();
        for j in 0..2 {
            let next = model.endpoints()[j].apply(&z).unwrap();
            e[j] = e[j].max(distance(&next, &exact.endpoints()[j].apply(&z).unwrap()));
            z = next;
        }
        final_err = final_err.max(distance(&model.forward(x).unwrap(), &exact.forward(x).unwrap()));
    }
    let l2 = stages[1].lipschitz_bound().exp();
    let bound = w.op_norm() * (l2 * e[0] + e[1]);
    assert!(final_err > 0.0);
    assert!(final_err <= bound * (1.0 + 1e-9));
}
