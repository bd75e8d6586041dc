use envest_core::linalg::{self, Basis, SymmetricMatrix};
use envest_core::objective::{self, ObjectivePair};
use envest_core::simulate;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn pair(d: usize) -> impl Strategy<Value = ObjectivePair> {
    (prop::collection::vec(-1.5..1.5f64, d * d), prop::collection::vec(-1.5..1.5f64, d * 2)).prop_map(move |(a, b)| {
        let a = DMatrix::from_vec(d, d, a);
        let m = SymmetricMatrix::symmetrized(&a * a.transpose() + DMatrix::identity(d, d) * 0.2).unwrap();
        let b = DMatrix::from_vec(d, 2, b);
        let u = SymmetricMatrix::symmetrized(&b * b.transpose()).unwrap();
        ObjectivePair::new(m, &u).unwrap()
    })
}

fn unit(d: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-1.0..1.0f64, d)
        .prop_map(DVector::from_vec)
        .prop_filter("near zero", |v| v.norm() > 0.1)
        .prop_map(|v| v.normalize())
}

fn relative(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gradient_matches_central_differences((obj, w) in (2usize..=8).prop_flat_map(|d| (pair(d), unit(d)))) {
        let g = objective::d_tilde_gradient(&obj, &w).unwrap();
        let h = 1e-6;
        let fd = DVector::from_fn(w.len(), |i, _| {
            let mut e = DVector::zeros(w.len());
            e[i] = h;
            (objective::d_tilde_value(&obj, &(&w + &e)).unwrap() - objective::d_tilde_value(&obj, &(&w - &e)).unwrap()) / (2.0 * h)
        });
        prop_assert!(relative(&g, &fd) < 1e-6, "gradient error {}", relative(&g, &fd));
    }

    #[test]
    fn hessian_matches_differenced_gradients((obj, w) in (2usize..=8).prop_flat_map(|d| (pair(d), unit(d)))) {
        let hess = objective::d_tilde_hessian(&obj, &w).unwrap();
        let h = 1e-5;
        let mut fd = DMatrix::zeros(w.len(), w.len());
        for i in 0..w.len() {
            let mut e = DVector::zeros(w.len());
            e[i] = h;
            let col = (objective::d_tilde_gradient(&obj, &(&w + &e)).unwrap() - objective::d_tilde_gradient(&obj, &(&w - &e)).unwrap()) / (2.0 * h);
            fd.set_column(i, &col);
        }
        let err = (hess.matrix() - &fd).norm() / hess.frobenius_norm().max(1e-3);
        prop_assert!(err < 1e-5, "hessian error {err}");
    }

    #[test]
    fn envelope_gradient_matches_differences((obj, g) in (3usize..=7).prop_flat_map(|d| (pair(d), (1..d).prop_flat_map(move |k| prop::collection::vec(-1.0..1.0f64, d * k).prop_map(move |v| DMatrix::from_vec(d, k, v)))))) {
        let Ok(gamma) = Basis::orthonormalize(&g) else { return Ok(()) };
        let grad = objective::j_gradient(&obj, &gamma).unwrap();
        let h = 1e-6;
        let value = |m: &DMatrix<f64>| {
            let gm = m.clone();
            linalg::gram_logdet(obj.m(), &gm).unwrap() + linalg::gram_logdet(obj.m_plus_u_inv(), &gm).unwrap()
        };
        let (d, k) = g.shape();
        let mut fd = DMatrix::zeros(d, k);
        for i in 0..d {
            for j in 0..k {
                let mut e = DMatrix::zeros(d, k);
                e[(i, j)] = h;
                fd[(i, j)] = (value(&(gamma.matrix() + &e)) - value(&(gamma.matrix() - &e))) / (2.0 * h);
            }
        }
        prop_assert!((&grad - &fd).norm() / grad.norm().max(1e-3) < 1e-6);
    }

    #[test]
    fn objective_is_invariant_to_rotation((obj, g, o) in (3usize..=8).prop_flat_map(|d| (1..d).prop_flat_map(move |k| (pair(d), prop::collection::vec(-1.0..1.0f64, d * k), prop::collection::vec(-1.0..1.0f64, k * k)).prop_map(move |(p, g, o)| (p, DMatrix::from_vec(d, k, g), DMatrix::from_vec(k, k, o)))))) {
        let (Ok(gamma), Ok(o)) = (Basis::orthonormalize(&g), Basis::orthonormalize(&o)) else { return Ok(()) };
        let a = objective::j_value(&obj, &gamma).unwrap();
        let b = objective::j_value(&obj, &gamma.rotate(o.matrix()).unwrap()).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn decomposition_sums_and_gap_is_nonnegative((obj, g) in (3usize..=8).prop_flat_map(|d| (1..d).prop_flat_map(move |k| (pair(d), prop::collection::vec(-1.0..1.0f64, d * k).prop_map(move |v| DMatrix::from_vec(d, k, v)))))) {
        let Ok(gamma) = Basis::orthonormalize(&g) else { return Ok(()) };
        let (j1, j2) = objective::j_decomposition(&obj, &gamma).unwrap();
        let j = objective::j_value(&obj, &gamma).unwrap();
        prop_assert!((j - j1 - j2).abs() < 1e-9);
        prop_assert!(objective::containment_gap(&obj, &gamma).unwrap() >= -1e-9);
        // J⁽¹⁾ is bounded below by log|M|
        let (_, logdet_m) = linalg::pd_inverse_logdet(obj.m(), 0.0).unwrap();
        prop_assert!(j1 >= logdet_m - 1e-9);
    }
}

#[test]
fn true_envelope_has_no_containment_gap() {
    for seed in 0..20 {
        let inst = simulate::generate_instance(6, 2, seed).unwrap();
        let gap = objective::containment_gap(&inst.pair().unwrap(), &inst.gamma).unwrap();
        assert!(gap.abs() < 1e-9, "seed {seed}: {gap}");
    }
}

#[test]
fn step_objective_is_scale_invariant() {
    let inst = simulate::generate_instance(5, 2, 3).unwrap();
    let obj = inst.pair().unwrap();
    let w = DVector::from_vec(vec![0.3, -1.0, 0.5, 0.2, 0.9]);
    let a = objective::d_tilde_value(&obj, &w).unwrap();
    let b = objective::d_tilde_value(&obj, &(&w * 7.5)).unwrap();
    assert!((a - b).abs() < 1e-12);
}

/// `min_h log(hᵀΦh/hᵀh) + log(hᵀΩ⁻¹h/hᵀh)` with `Φ = ΓᵀMΓ`, `Ω = Γᵀ(M+U)Γ`,
/// evaluated at the unit eigenvectors of `Ω`, where it is strictly negative.
#[test]
fn phi_omega_inequality_holds_at_omega_eigenvectors() {
    for (d, u) in [(4, 1), (5, 2), (8, 5), (9, 8), (10, 6), (8, 7)] {
        for seed in 0..10 {
            let inst = simulate::generate_instance(d, u, 500 + seed).unwrap();
            let phi = inst.m.congruence(inst.gamma.matrix());
            let omega = inst.m.add(&inst.u_mat).congruence(inst.gamma.matrix());
            let (omega_inv, _) = linalg::pd_inverse_logdet(&omega, 0.0).unwrap();
            let spec = linalg::sym_eig(&omega, 0.0).unwrap();
            let best = (0..u)
                .map(|k| {
                    let h = spec.eigenvectors.matrix().column(k).into_owned();
                    phi.quad_form(&h).ln() + omega_inv.quad_form(&h).ln()
                })
                .fold(f64::INFINITY, f64::min);
            assert!(best < -1e-8, "(d, u, seed) = ({d}, {u}, {seed}): {best}");
        }
    }
}
