use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use pinning_core::harmonium::*;
use pinning_core::perturbation::EigenKind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn closed_form_f3(a: f64, b: f64) -> [f64; 7] {
    let c1 = (96.0 * a.powi(4) * b * b - 480.0 * a.powi(3) * b.powi(3) + 600.0 * a * a * b.powi(4)) / 24.0;
    let c2 = (-96.0 * a.powi(5) * b + 720.0 * a.powi(4) * b * b - 1824.0 * a.powi(3) * b.powi(3)
        + 1560.0 * a * a * b.powi(4))
        / 6.0;
    let c3 = (64.0 * a.powi(6) - 640.0 * a.powi(5) * b + 2464.0 * a.powi(4) * b * b - 4320.0 * a.powi(3) * b.powi(3)
        + 2904.0 * a * a * b.powi(4))
        / 4.0;
    let c4 = (-8.0 * a.powi(5) + 72.0 * a.powi(4) * b - 264.0 * a.powi(3) * b * b + 460.0 * a * a * b.powi(3)
        - 312.0 * a * b.powi(4))
        / 2.0;
    let c5 = 8.0 * a.powi(5) - 48.0 * a.powi(4) * b + 72.0 * a.powi(3) * b * b + 44.0 * a * a * b.powi(3)
        - 120.0 * a * b.powi(4);
    let c6 = 3.0 * a.powi(4) - 24.0 * a.powi(3) * b + 75.0 * a * a * b * b - 108.0 * a * b.powi(3) + 60.0 * b.powi(4);
    let d3 = (a * a - 3.0 * a * b).sqrt() / ((2.0 * std::f64::consts::PI).sqrt() * (a - 2.0 * b).powf(4.5));
    [c1, c2, c3, c4, c5, c6, d3]
}

#[test]
fn three_particle_polynomial_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..10 {
        let a: f64 = rng.random_range(0.2..3.0);
        let b: f64 = rng.random_range(-1.0..0.32) * a;
        let p = fermion_polynomial_ab(3, a, b).unwrap();
        let [c1, c2, c3, c4, c5, c6, d3] = closed_form_f3(a, b);
        let pairs = [
            (p.c(2, 0), c1),
            (p.c(2, 4), c1),
            (p.c(2, 1), c2),
            (p.c(2, 3), c2),
            (p.c(2, 2), c3),
            (p.c(1, 0), c4),
            (p.c(1, 2), c4),
            (p.c(1, 1), c5),
            (p.c(0, 0), c6),
        ];
        for (got, want) in pairs {
            let want = d3 * want;
            assert!((got - want).abs() <= 1e-10 * (1.0 + want.abs()), "A={a} B={b}: {got} vs {want}");
        }
    }
}

fn two_particle_kernel(a: f64, b: f64, x: f64, y: f64) -> f64 {
    let psi = |u: f64, v: f64| (u - v) * (-a * (u * u + v * v) + b * (u + v) * (u + v)).exp();
    let h = 0.01;
    let grid: Vec<f64> = (-1200..=1200).map(|i| i as f64 * h).collect();
    let cross: f64 = grid.iter().map(|&z| psi(x, z) * psi(y, z)).sum::<f64>() * h;
    let mut norm = 0.0;
    for &u in &grid {
        for &v in grid.iter().step_by(4) {
            norm += psi(u, v).powi(2);
        }
    }
    norm *= h * 4.0 * h;
    2.0 * cross / norm
}

#[test]
fn two_particle_kernel_matches_quadrature() {
    for (a, b) in [(0.5, 0.1), (1.3, -0.4), (0.8, 0.35)] {
        let p = fermion_polynomial_ab(2, a, b).unwrap();
        assert_eq!(p.degree(), 2);
        for (x, y) in [(0.0, 0.0), (0.3, -0.7), (1.1, 0.4), (-0.9, -1.6)] {
            let want = two_particle_kernel(a, b, x, y);
            let got = p.density(x, y);
            assert!((got - want).abs() < 1e-8, "A={a} B={b} ({x},{y}): {got} vs {want}");
            assert!((p.density(y, x) - got).abs() < 1e-14);
        }
    }
}

#[test]
fn polynomial_symmetry() {
    for n in 2..=MAX_PARTICLES {
        let p = fermion_polynomial(&from_delta(n, 0.3).unwrap()).unwrap();
        for nu in 0..n {
            for mu in 0..=2 * nu {
                let (l, r) = (p.c(nu, mu), p.c(nu, 2 * nu - mu));
                assert!((l - r).abs() <= 1e-12 * (1.0 + l.abs()), "N={n}");
            }
        }
    }
    assert!(fermion_polynomial(&from_delta(9, 0.3).unwrap()).is_err());
    assert!(fermion_polynomial_ab(3, 1.0, 0.34).is_err());
}

#[test]
fn derived_parameter_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let n = rng.random_range(2..=8usize);
        let ratio: f64 = rng.random_range(0.05..20.0);
        let p = derive_params(n, ratio).unwrap();
        let nm1 = n as f64 - 1.0;
        let b = nm1 * p.big_b * p.big_b / (p.big_a - nm1 * p.big_b);
        assert!((p.b - b).abs() <= 1e-12 * (1.0 + b.abs()));
        assert!((p.a - (p.big_a - p.big_b - p.b / 2.0)).abs() <= 1e-12 * (1.0 + p.a.abs()));
        assert!((0.0..1.0).contains(&p.q));
        let dual = derive_params(n, 1.0 / ratio).unwrap();
        assert!((p.beta_omega - dual.beta_omega).abs() <= 1e-10 * p.beta_omega);
    }
    assert!(derive_params(3, 0.0).is_err());
    assert!(derive_params(3, -1.0).is_err());
}

#[test]
fn bosonic_duality_and_normalization() {
    let strong = bosonic_spectrum(&derive_params(4, 0.03).unwrap(), 400);
    let weak = bosonic_spectrum(&derive_params(4, 100.0 / 3.0).unwrap(), 400);
    for (x, y) in strong.occupations.iter().zip(&weak.occupations) {
        assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
    }
    let total: f64 = strong.occupations.iter().sum::<f64>() + strong.tail;
    assert!((total - 4.0).abs() < 1e-12);
    let free = bosonic_spectrum(&derive_params(4, 1.0).unwrap(), 5);
    assert_eq!(free.occupations, vec![4.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    assert_eq!(free.entropy, 0.0);
}

#[test]
fn fermionic_duality() {
    for n in [2, 3, 5] {
        for delta in [0.2, 0.6, 1.0] {
            let up = fermionic_nons(&from_delta(n, delta).unwrap(), 120).unwrap();
            let down = fermionic_nons(&from_delta(n, -delta).unwrap(), 120).unwrap();
            for (x, y) in up.values().iter().zip(down.values()) {
                assert!((x - y).abs() < 1e-10, "N={n} δ={delta}");
            }
        }
    }
}

#[test]
fn fermionic_nons_sum_to_particle_number() {
    for n in 1..=MAX_PARTICLES {
        for delta in [0.05, 0.5, 1.0] {
            let s = fermionic_nons(&from_delta(n, delta).unwrap(), DEFAULT_M_MAX).unwrap();
            let sum: f64 = s.values().iter().sum();
            assert!((sum - n as f64).abs() < 1e-9, "N={n} δ={delta}: {sum}");
            assert!(s.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }
}

#[test]
fn cutoff_stability() {
    let p = from_delta(3, 0.8).unwrap();
    let coarse = fermionic_nons(&p, 100).unwrap();
    let fine = fermionic_nons(&p, 200).unwrap();
    for k in 0..20 {
        assert!((coarse.values()[k] - fine.values()[k]).abs() < 1e-12);
    }
    assert!(rdm_matrix(&p, 3).is_err());
}

#[test]
fn series_against_numerics() {
    let delta = 1e-2;
    let series = weak_coupling_series(3, 10).unwrap();
    let mut approx: Vec<f64> = series
        .iter()
        .flat_map(|s| std::iter::repeat(s.eval_f64(delta)).take(s.multiplicity))
        .collect();
    approx.sort_by(|a, b| b.total_cmp(a));
    let numeric = fermionic_nons(&from_delta(3, delta).unwrap(), 60).unwrap();
    for k in 0..9 {
        assert!((approx[k] - numeric.values()[k]).abs() <= 1e-14, "λ{}", k + 1);
    }
}

#[test]
fn series_is_trace_preserving() {
    let series = weak_coupling_series(3, 10).unwrap();
    for order in 0..=10 {
        let total = series.iter().fold(BigRational::zero(), |acc, s| {
            acc + &s.coeffs[order] * BigRational::from_integer(s.multiplicity.into())
        });
        let want = if order == 0 { BigRational::from_integer(3.into()) } else { BigRational::zero() };
        assert_eq!(total, want, "order {order}");
    }
    assert!(series.iter().filter(|s| s.multiplicity == 1).all(|s| s.kind == EigenKind::Simple));
    assert_eq!(series[0].coeffs[0], BigRational::one());
    assert!(weak_coupling_series(3, 12).is_err());
}

#[test]
fn series_leading_coefficients() {
    let series = weak_coupling_series(3, 10).unwrap();
    let q = |n: i64, d: i64| BigRational::new(n.into(), d.into());
    assert_eq!(-&series[1].coeffs[4], q(2, 9));
    assert_eq!(-&series[0].coeffs[6], q(40, 729));
    assert_eq!(-&series[0].coeffs[8], q(-1390, 59049));
    assert_eq!(series[6].coeffs[8], q(80, 2187));
    assert!((series[7].coeffs[10].to_f64().unwrap() - 224.0 / 19683.0).abs() < 1e-15);
}

#[test]
fn decay_constants_three_particles() {
    let p = derive_params(3, 0.8).unwrap();
    let cfg = DecayConfig {
        m_max: 300,
        orbitals: vec![60, 100],
        gaussian_window: (10, 40),
    };
    let r = decay_diagnostics(&p, &cfg).unwrap();
    let fit = r.non_fit.unwrap();
    assert!((fit.slope - 4.51).abs() < 0.05, "{}", fit.slope);
    for &(k, g) in &r.gaussian {
        assert!((g - p.beta_omega / 8.0).abs() < 0.01, "k={k}: {g}");
    }
    let (_, slope) = r.exponential.unwrap();
    assert!(slope > 0.0);
}

#[test]
fn decay_rejects_free_system() {
    let p = derive_params(3, 1.0).unwrap();
    assert!(decay_diagnostics(&p, &DecayConfig::default()).is_err());
}
