use nalgebra::DMatrix;
use num_complex::Complex64;
use pinning_core::constraints::catalog;
use pinning_core::fock::{self, FermionState, Setting, Spectrum};
use pinning_core::harmonium::{fermionic_nons, from_delta};
use pinning_core::pinning::{structure_bounds, StructureCheck};
use pinning_core::qmp;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const TOL: f64 = 1e-9;

fn config() -> Config {
    Config {
        cases: 500,
        rng_seed: RngSeed::Fixed(0),
        failure_persistence: None,
        ..Config::default()
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn random_state(rng: &mut ChaCha8Rng, setting: Setting, support: usize) -> FermionState {
    let dets = setting.determinants();
    let mut terms = std::collections::BTreeMap::new();
    for _ in 0..support {
        terms.insert(dets[rng.random_range(0..dets.len())], gaussian(rng));
    }
    FermionState::normalized(setting, terms).unwrap()
}

fn spectrum_of(state: &FermionState) -> Spectrum {
    fock::natural_occupations(&fock::one_rdm(state)).unwrap().0
}

/// A descending vector in `[0, 1]^d` summing to `n`, not necessarily
/// pure-state representable.
fn random_ordered(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<f64> {
    let mut x: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
    x.sort_by(|a, b| b.total_cmp(a));
    let total = |t: f64| x.iter().map(|v| (v + t).clamp(0.0, 1.0)).sum::<f64>();
    let (mut lo, mut hi) = (-1.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) < n as f64 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    x.iter().map(|v| (v + hi).clamp(0.0, 1.0)).collect()
}

const SETTINGS: [(usize, usize); 8] = [(2, 5), (2, 6), (2, 8), (3, 6), (3, 7), (3, 8), (4, 7), (5, 8)];

proptest! {
    #![proptest_config(config())]

    #[test]
    fn pure_state_spectra_lie_in_the_polytope(seed in any::<u64>(), which in 0..SETTINGS.len(), support in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, d) = SETTINGS[which];
        let setting = Setting::new(n, d).unwrap();
        let psi = random_state(&mut rng, setting, support);
        let rho = fock::one_rdm(&psi);
        let m = rho.matrix();
        prop_assert!((m - m.adjoint()).camax() < 1e-12);
        prop_assert!((m.trace().re - n as f64).abs() < 1e-10);
        let spec = spectrum_of(&psi);
        let member = catalog(setting).unwrap().membership(spec.values(), TOL).unwrap();
        prop_assert!(member.inside, "{:?} {:?}", spec.values(), member);
    }

    #[test]
    fn two_fermion_spectra_pair_up(seed in any::<u64>(), d in 3usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = random_state(&mut rng, Setting::new(2, d).unwrap(), 30);
        let l = spectrum_of(&psi).into_values();
        for i in 0..d / 2 {
            prop_assert!((l[2 * i] - l[2 * i + 1]).abs() < 1e-10);
        }
        if d % 2 == 1 {
            prop_assert!(l[d - 1].abs() < 1e-10);
        }
    }

    #[test]
    fn ky_fan_bounds_projected_traces(seed in any::<u64>(), k in 0usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(6, 6, |_, _| gaussian(&mut rng));
        let mut rho = &a * a.adjoint();
        let tr = rho.trace().re;
        rho /= Complex64::from(tr / 3.0);
        let spec = Spectrum::with_tolerance(
            {
                let mut v: Vec<f64> = rho.clone().symmetric_eigenvalues().iter().map(|x| x.max(0.0)).collect();
                v.sort_by(|a, b| b.total_cmp(a));
                v
            },
            3,
            f64::INFINITY,
        ).unwrap();
        let q = DMatrix::from_fn(6, 6, |_, _| gaussian(&mut rng)).qr().q();
        let v = q.columns(0, k).into_owned();
        let projected = (v.adjoint() * &rho * &v).trace().re;
        prop_assert!(projected <= fock::ky_fan_sum(&spec, k).unwrap() + 1e-10);
    }

    #[test]
    fn hartree_fock_overlap_sandwich(seed in any::<u64>(), which in 0..SETTINGS.len(), scale in 0.0f64..1.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, d) = SETTINGS[which];
        let setting = Setting::new(n, d).unwrap();
        let noise = random_state(&mut rng, setting, 10);
        let hf = setting.determinants()[rng.random_range(0..setting.determinants().len())];
        let mut terms = noise.amplitudes().clone();
        *terms.entry(hf).or_default() += Complex64::from(1.0 / scale.max(1e-3));
        let psi = FermionState::normalized(setting, terms).unwrap();
        let r = structure_bounds(&psi, StructureCheck::Hf).unwrap();
        prop_assert!(r.holds, "{r:?}");
    }

    #[test]
    fn borland_dennis_stability_sandwich(seed in any::<u64>(), scale in 0.0f64..0.6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let setting = Setting::new(3, 6).unwrap();
        let noise = random_state(&mut rng, setting, 20);
        let mut terms: std::collections::BTreeMap<_, _> =
            noise.amplitudes().iter().map(|(d, c)| (*d, c * scale)).collect();
        let hf = fock::SlaterDeterminant::from_orbitals(&[1, 2, 3], setting).unwrap();
        *terms.entry(hf).or_default() += Complex64::from(1.0);
        let psi = FermionState::normalized(setting, terms).unwrap();
        let l = spectrum_of(&psi).into_values();
        prop_assume!(3.0 - l[0] - l[1] - l[2] <= 0.25);
        let r = structure_bounds(&psi, StructureCheck::BorlandDennis).unwrap();
        prop_assert!(r.holds, "{r:?}");
    }

    #[test]
    fn harmonium_spectrum_is_even_in_delta(n in 2usize..=4, delta in 0.05f64..1.0) {
        let up = fermionic_nons(&from_delta(n, delta).unwrap(), 60).unwrap();
        let down = fermionic_nons(&from_delta(n, -delta).unwrap(), 60).unwrap();
        for (x, y) in up.values().iter().zip(down.values()) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn padding_preserves_membership(seed in any::<u64>(), case in 0usize..7, pure in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // (small setting, r, s)
        let cases = [((2, 5), 1, 0), ((2, 6), 1, 0), ((2, 6), 1, 1), ((3, 6), 0, 1), ((3, 6), 0, 2), ((3, 6), 1, 0), ((3, 7), 0, 1)];
        let ((n, d), r, s) = cases[case];
        let small = Setting::new(n, d).unwrap();
        let big = Setting::new(n + r, d + r + s).unwrap();
        let lam = if pure {
            spectrum_of(&random_state(&mut rng, small, 25)).into_values()
        } else {
            random_ordered(&mut rng, n, d)
        };
        let mut padded = vec![1.0; r];
        padded.extend(&lam);
        padded.extend(std::iter::repeat_n(0.0, s));
        let a = catalog(small).unwrap().membership(&lam, TOL).unwrap().inside;
        let b = catalog(big).unwrap().membership(&padded, TOL).unwrap().inside;
        prop_assert_eq!(a, b, "{:?}", lam);
        if pure {
            prop_assert!(a);
        }
    }

    #[test]
    fn two_qubit_marginals_are_compatible(seed in any::<u64>(), rank in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(4, rank, |_, _| gaussian(&mut rng));
        let mut rho = &a * a.adjoint();
        let tr = rho.trace();
        rho /= tr;
        for mode in [qmp::Mode::AAb, qmp::Mode::ABAb] {
            let t = qmp::marginal_spectra(&rho, mode).unwrap();
            prop_assert!(qmp::check(&t).compatible, "{t:?}");
        }
    }
}
