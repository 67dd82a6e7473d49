use nodeflow::approx::{sup_distance, AxisBox};
use nodeflow::flow::{group_law_residual, rescale_residual};
use nodeflow::linalg::distance;
use nodeflow::ode::integrate;
use nodeflow::{FlowEndpoint, Matrix, SolverConfig, VectorField};
use proptest::prelude::*;

fn analytic_fields() -> Vec<VectorField> {
    let skew3 = Matrix::from_rows(&[vec![0.0, 1.0, -0.5], vec![-1.0, 0.0, 0.3], vec![0.5, -0.3, 0.0]]).unwrap();
    vec![
        VectorField::zero(1),
        VectorField::zero(3),
        VectorField::constant(vec![0.4]).unwrap(),
        VectorField::constant(vec![-1.0, 0.5, 2.0]).unwrap(),
        VectorField::linear(Matrix::from_rows(&[vec![0.3]]).unwrap()).unwrap(),
        VectorField::linear(Matrix::from_rows(&[vec![-0.2, 1.0], vec![-1.0, 0.1]]).unwrap()).unwrap(),
        VectorField::bump_1d(1.0, 1.0, 1.0).unwrap(),
        VectorField::radial_rotation(Matrix::unit_skew(2), 0.5, 1.5).unwrap(),
        VectorField::radial_rotation(skew3, 1.0, 2.0).unwrap(),
    ]
}

fn point(dim: usize, raw: &[f64]) -> Vec<f64> {
    raw[..dim].to_vec()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn group_law(idx in 0usize..9, raw in prop::array::uniform3(-2.0f64..2.0), s in -1.0f64..1.0, t in -1.0f64..1.0) {
        let field = &analytic_fields()[idx];
        let x = point(field.dim(), &raw);
        let r = group_law_residual(field, &x, s, t, &SolverConfig::default()).unwrap();
        prop_assert!(r <= 1e-6, "{} residual {r}", field.kind_name());
    }

    #[test]
    fn inverse_roundtrip(idx in 0usize..9, raw in prop::array::uniform3(-2.0f64..2.0)) {
        let field = &analytic_fields()[idx];
        let ep = FlowEndpoint::new(field.clone());
        let x = point(field.dim(), &raw);
        let back = ep.apply_inverse(&ep.apply(&x).unwrap()).unwrap();
        prop_assert!(distance(&back, &x) <= 1e-6);
    }

    #[test]
    fn identity_at_time_zero(idx in 0usize..9, raw in prop::array::uniform3(-2.0f64..2.0)) {
        let field = &analytic_fields()[idx];
        let x = point(field.dim(), &raw);
        prop_assert_eq!(integrate(field, &x, 0.0, &SolverConfig::default()).unwrap(), x);
    }

    #[test]
    fn rescaling(idx in 0usize..9, raw in prop::array::uniform3(-2.0f64..2.0), time in -3.0f64..3.0) {
        let field = &analytic_fields()[idx];
        let x = point(field.dim(), &raw);
        prop_assert!(rescale_residual(field, &x, time, &SolverConfig::default()).unwrap() <= 1e-6);
    }

    #[test]
    fn sup_distance_refinement_is_monotone(
        shift in -1.0f64..1.0,
        freq in 0.5f64..6.0,
        lo in -2.0f64..0.0,
        width in 0.1f64..3.0,
        n in 2usize..40,
    ) {
        let k = AxisBox::new(vec![lo, lo], vec![lo + width, lo + 0.5 * width]).unwrap();
        let f = |x: &[f64]| Ok(vec![(freq * x[0]).sin() + shift, x[0] * x[1]]);
        let g = |x: &[f64]| Ok(vec![0.0, (freq * x[1]).cos()]);
        let coarse = sup_distance(f, g, &k, n).unwrap();
        let fine = sup_distance(f, g, &k, 2 * n - 1).unwrap();
        prop_assert!(fine >= coarse);
    }

    #[test]
    fn field_json_roundtrip(
        entries in prop::collection::vec(-1e3f64..1e3, 4),
        c in -5.0f64..5.0,
        w in 0.01f64..3.0,
        amp in 0.0f64..4.0,
        factor in -10.0f64..10.0,
    ) {
        let lin = VectorField::linear(Matrix::from_row_major(2, 2, entries).unwrap()).unwrap();
        let bump = VectorField::bump_1d(c.abs() + w / 2.0, w, amp).unwrap();
        for field in [VectorField::scaled(factor, lin).unwrap(), bump] {
            let json = serde_json::to_string(&field).unwrap();
            let back: VectorField = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(&back, &field);
        }
    }

    #[test]
    fn compact_support_is_fixed(r in 1.5001f64..50.0, angle in 0.0f64..std::f64::consts::TAU) {
        let rot = FlowEndpoint::new(VectorField::radial_rotation(Matrix::unit_skew(2), 0.5, 1.5).unwrap());
        let x = vec![r * angle.cos(), r * angle.sin()];
        prop_assert_eq!(rot.apply(&x).unwrap(), x.clone());
        let bump = FlowEndpoint::new(VectorField::bump_1d(1.0, 1.0, 1.0).unwrap());
        let y = vec![if angle < 3.0 { r } else { -r }];
        prop_assert_eq!(bump.apply(&y).unwrap(), y.clone());
    }
}

#[test]
fn rotation_preserves_norm() {
    let field = VectorField::radial_rotation(Matrix::unit_skew(2), 1.0, 2.0).unwrap();
    for i in 0..50 {
        let r = 0.9 + 1.2 * i as f64 / 49.0;
        let x = [r * 0.6, r * 0.8];
        for t in [0.25, 1.0, 3.0] {
            let y = field.closed_form_flow(&x, t).unwrap();
            assert!((nodeflow::linalg::norm(&y) - r).abs() <= 1e-9);
            let z = integrate(&field, &x, t, &SolverConfig::default()).unwrap();
            assert!((nodeflow::linalg::norm(&z) - r).abs() <= 1e-9);
        }
    }
}
