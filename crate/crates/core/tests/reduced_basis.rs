use widthlab::rbelliptic::{galerkin_in_span, greedy_basis, offline, online, uniform_training, AffineEllipticProblem};

#[test]
fn online_matches_span_solve_and_stores_affine_terms() {
    let p = AffineEllipticProblem::default_instance(256).unwrap();
    let basis = greedy_basis(&p, &uniform_training(65), 4).unwrap();
    let data = offline(&p, &basis);
    assert_eq!(data.n_store(), 2 * 16 + 2 * 4);
    for k in 0..41 {
        let mu = [-1.0 + k as f64 / 20.0];
        let a = online(&data, &mu).unwrap();
        let b = galerkin_in_span(&p, &basis, &mu).unwrap().qoi;
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn reduced_qoi_never_exceeds_truth_for_compliant_output() {
    // ℓ = f: the Galerkin output underestimates the energy, error = ‖u - u_rb‖²
    let p = AffineEllipticProblem::default_instance(256).unwrap();
    let basis = greedy_basis(&p, &uniform_training(65), 2).unwrap();
    let data = offline(&p, &basis);
    for k in 0..21 {
        let mu = [-1.0 + k as f64 / 10.0];
        let truth = p.qoi(&p.hifi_solve(&mu).unwrap());
        assert!(online(&data, &mu).unwrap() <= truth + 1e-15);
    }
}

#[test]
fn greedy_error_sequence_is_monotone_and_decays() {
    let p = AffineEllipticProblem::default_instance(512).unwrap();
    let basis = greedy_basis(&p, &uniform_training(101), 6).unwrap();
    assert!(basis.errors.windows(2).all(|w| w[1] <= w[0]));
    for w in basis.errors[..6].windows(2) {
        assert!(w[0] / w[1] >= 2.0, "{:?}", basis.errors);
    }
}
