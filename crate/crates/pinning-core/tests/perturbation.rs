use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use pinning_core::perturbation::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Mat<BigRational> {
    let mut m = Mat::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let v = q(rng.random_range(-5..=5), rng.random_range(1..=4));
            m.set(i, j, v.clone());
            m.set(j, i, v);
        }
    }
    m
}

fn random_symmetric_f64(rng: &mut ChaCha8Rng, n: usize) -> Mat<f64> {
    let mut m = Mat::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = rng.random_range(-1.0..1.0);
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    m
}

#[test]
fn ad_inverse_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let split = BlockSplit::new(vec![0, 2], 5).unwrap();
    let h0 = [q(3, 1), q(-1, 2), q(3, 1), q(1, 1), q(0, 1)];
    for _ in 0..20 {
        let mut b = random_symmetric(&mut rng, 5);
        for i in 0..5 {
            for j in 0..5 {
                if split.contains(i) == split.contains(j) {
                    b.set(i, j, q(0, 1));
                }
            }
        }
        let s = ad_inverse_with_gaps(&b, &h0, &split).unwrap();
        assert_eq!(Mat::diagonal(&h0).commutator(&s), b);
        assert_eq!(s.transpose(), s.scale(&q(-1, 1)));
    }
    let same = [q(1, 1), q(1, 1), q(1, 1), q(0, 1), q(0, 1)];
    let mut b = Mat::zeros(5);
    b.set(0, 1, q(1, 1));
    b.set(1, 0, q(1, 1));
    assert!(ad_inverse_with_gaps(&b, &same, &split).is_err());
}

#[test]
fn two_level_series_matches_closed_form() {
    let mut terms = vec![
        Mat::diagonal(&[q(1, 1), q(0, 1)]),
        Mat::from_rows(vec![vec![q(0, 1), q(1, 1)], vec![q(1, 1), q(0, 1)]]).unwrap(),
    ];
    terms.extend((2..=8).map(|_| Mat::zeros(2)));
    let ev = eigenvalue_series(&MatrixSeries::new(terms).unwrap(), 8).unwrap();
    for delta in [1e-2f64, 3e-2] {
        let root = (1.0f64 + 4.0 * delta * delta).sqrt();
        let exact = [(1.0 + root) / 2.0, (1.0 - root) / 2.0];
        for (e, x) in ev.iter().zip(exact) {
            assert!((e.eval_f64(delta) - x).abs() < 1e-14);
        }
    }
}

#[test]
fn trace_is_conserved_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..5 {
        let n = 4;
        let mut terms = vec![Mat::diagonal(&[q(1, 1), q(1, 1), q(0, 1), q(0, 1)])];
        for _ in 0..4 {
            terms.push(random_symmetric(&mut rng, n));
        }
        let series = MatrixSeries::new(terms).unwrap();
        let ev = eigenvalue_series(&series, 4).unwrap();
        for k in 0..=4 {
            let total = ev.iter().fold(q(0, 1), |acc, e| {
                acc + e.coeffs[k].clone() * BigRational::from_integer(BigInt::from(e.multiplicity))
            });
            assert_eq!(total, series.term(k).trace(), "order {k}");
        }
    }
}

fn to_dmatrix(m: &Mat<f64>) -> DMatrix<f64> {
    m.to_f64()
}

fn expm(s: &DMatrix<f64>) -> DMatrix<f64> {
    let n = s.nrows();
    let mut out = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..20 {
        term = &term * s / k as f64;
        out += &term;
    }
    out
}

#[test]
fn transformation_is_unitary_order_by_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let order = 4;
    let delta: f64 = 1e-3;
    for _ in 0..5 {
        let mut terms = vec![Mat::diagonal(&[1.0, 1.0, 0.0, 0.0, 0.0])];
        for _ in 0..order {
            terms.push(random_symmetric_f64(&mut rng, 5));
        }
        let series = MatrixSeries::new(terms).unwrap();
        let split = BlockSplit::new(vec![0, 1], 5).unwrap();
        let bd = block_diagonalize(&series, &split, order).unwrap();
        let mut s = DMatrix::<f64>::zeros(5, 5);
        for (k, g) in bd.generators.iter().enumerate() {
            s += to_dmatrix(g) * delta.powi(k as i32 + 1);
            assert!((to_dmatrix(g) + to_dmatrix(g).transpose()).amax() < 1e-14);
        }
        let u = expm(&s);
        let u_inv = expm(&(-s));
        let conj = &u * series.eval_f64(delta) * &u_inv;
        let want = bd.transformed.eval_f64(delta);
        assert!((conj - want).amax() < 1e-12);
        for t in bd.transformed.terms() {
            for i in 0..5 {
                for j in 0..5 {
                    if split.contains(i) != split.contains(j) {
                        assert!(t.get(i, j).abs() < 1e-13);
                    }
                }
            }
        }
    }
}

#[test]
fn order_beyond_series_is_rejected() {
    let series = MatrixSeries::new(vec![Mat::diagonal(&[q(1, 1), q(0, 1)])]).unwrap();
    let split = BlockSplit::new(vec![0], 2).unwrap();
    assert!(block_diagonalize(&series, &split, 1).is_err());
    assert!(eigenvalue_series(&series, 2).is_err());
    assert!(BlockSplit::new(vec![0, 1], 2).is_err());
}
