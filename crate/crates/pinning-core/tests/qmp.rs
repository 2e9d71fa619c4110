use nalgebra::DMatrix;
use num_complex::Complex64;
use pinning_core::error::Error;
use pinning_core::qmp::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn haar_unitary(rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let z = DMatrix::from_fn(4, 4, |_, _| gaussian(rng));
    let qr = z.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = DMatrix::from_fn(4, 4, |i, j| if i == j { r[(i, i)] / r[(i, i)].norm() } else { Complex64::from(0.0) });
    q * phases
}

fn triple(a: [f64; 2], b: [f64; 2], ab: [f64; 4]) -> MarginalTriple {
    MarginalTriple::new(a, b, ab, Mode::ABAb).unwrap()
}

#[test]
fn bell_state_is_compatible() {
    let c = check(&triple([0.5, 0.5], [0.5, 0.5], [1.0, 0.0, 0.0, 0.0]));
    assert!(c.compatible);
    assert_eq!(c.inequalities.len(), 4);
}

#[test]
fn pure_product_mismatch_violates_fourth_inequality() {
    let c = check(&triple([1.0, 0.0], [0.5, 0.5], [1.0, 0.0, 0.0, 0.0]));
    assert!(!c.compatible);
    assert!((c.inequalities[3].violation - 0.5).abs() < 1e-15);
    assert!(c.inequalities[..3].iter().all(|i| i.holds));
}

#[test]
fn classical_mixture_is_compatible_and_realized() {
    let mut rho = DMatrix::<Complex64>::zeros(4, 4);
    rho[(0, 0)] = 0.5.into();
    rho[(3, 3)] = 0.5.into();
    let t = marginal_spectra(&rho, Mode::ABAb).unwrap();
    assert_eq!(t, triple([0.5, 0.5], [0.5, 0.5], [0.5, 0.5, 0.0, 0.0]));
    assert!(check(&t).compatible);
}

#[test]
fn single_marginal_mode() {
    let t = MarginalTriple::new([0.9, 0.1], [0.5, 0.5], [0.6, 0.2, 0.2, 0.0], Mode::AAb).unwrap();
    let c = check(&t);
    assert_eq!(c.inequalities.len(), 1);
    assert!(!c.compatible);
    assert!((c.inequalities[0].violation - 0.1).abs() < 1e-12);
}

#[test]
fn malformed_spectra_are_rejected() {
    let bad = [
        MarginalTriple::new([0.4, 0.6], [0.5, 0.5], [1.0, 0.0, 0.0, 0.0], Mode::ABAb),
        MarginalTriple::new([0.5, 0.6], [0.5, 0.5], [1.0, 0.0, 0.0, 0.0], Mode::ABAb),
        MarginalTriple::new([1.2, -0.2], [0.5, 0.5], [1.0, 0.0, 0.0, 0.0], Mode::ABAb),
        MarginalTriple::new([0.5, 0.5], [0.5, 0.5], [f64::NAN, 0.0, 0.0, 0.0], Mode::ABAb),
        MarginalTriple::from_slices(&[0.5, 0.5], &[1.0], &[1.0, 0.0, 0.0, 0.0], Mode::ABAb),
    ];
    for b in bad {
        assert!(matches!(b, Err(Error::Argument(_))));
    }
    assert!(Mode::parse("a_b").is_err());
    assert_eq!(Mode::parse("a_b_ab").unwrap(), Mode::ABAb);
}

#[test]
fn random_pure_states_pass() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let psi: Vec<Complex64> = (0..4).map(|_| gaussian(&mut rng)).collect();
        let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
        let rho = DMatrix::from_fn(4, 4, |i, j| psi[i] * psi[j].conj() / norm);
        for mode in [Mode::AAb, Mode::ABAb] {
            let t = marginal_spectra(&rho, mode).unwrap();
            assert!(check(&t).compatible, "{t:?}");
            assert!((t.spec_a[0] - t.spec_b[0]).abs() < 1e-10);
        }
    }
}

#[test]
fn random_mixed_states_pass() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..1000 {
        let mut p: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..1.0f64)).collect();
        if rng.random_bool(0.3) {
            p[3] = 0.0;
        }
        let total: f64 = p.iter().sum();
        let u = haar_unitary(&mut rng);
        let diag = DMatrix::from_fn(4, 4, |i, j| if i == j { Complex64::from(p[i] / total) } else { 0.0.into() });
        let rho = &u * diag * u.adjoint();
        for mode in [Mode::AAb, Mode::ABAb] {
            let t = marginal_spectra(&rho, mode).unwrap();
            assert!(check(&t).compatible, "{t:?}");
        }
    }
}
