use pinning_core::constraints::*;
use pinning_core::error::Error;
use pinning_core::fock::{Setting, Spectrum};
use pinning_core::harmonium::{fermionic_nons, from_delta};

fn setting(n: usize, d: usize) -> Setting {
    Setting::new(n, d).unwrap()
}

#[test]
fn catalog_sizes() {
    let c36 = catalog(setting(3, 6)).unwrap();
    assert_eq!((c36.inequalities().count(), c36.equalities().count()), (1, 3));
    assert_eq!(catalog(setting(3, 7)).unwrap().inequalities().count(), 4);
    let c38 = catalog(setting(3, 8)).unwrap();
    assert_eq!(c38.inequalities().count(), 31);
    assert_eq!(c38.constraints[0].kappa0, 2);
    assert_eq!(c38.constraints[0].kappas, vec![0, -1, -1, -1, -1, 0, 0, 0]);
    let d = c36.get("D^{(3,6)}").unwrap();
    assert_eq!((d.kappa0, d.kappas.clone()), (2, vec![-1, -1, 0, -1, 0, 0]));
}

#[test]
fn dual_catalog_is_generated() {
    let native = catalog(setting(3, 8)).unwrap();
    let dual = catalog(setting(5, 8)).unwrap();
    assert_eq!(dual.provenance, Provenance::DualOf(setting(3, 8)));
    assert_eq!(dual.inequalities().count(), 31);
    let lam = [0.97, 0.9, 0.85, 0.4, 0.3, 0.3, 0.2, 0.08];
    let holes: Vec<f64> = lam.iter().rev().map(|x| 1.0 - x).collect();
    for (c, e) in native.constraints.iter().zip(&dual.constraints) {
        let a = c.evaluate_values(&holes).unwrap();
        let b = e.evaluate_values(&lam).unwrap();
        assert!((a - b).abs() < 1e-14, "{}", e.label);
        let back = e.dual(c.label.clone());
        assert_eq!(&back, c);
    }
}

#[test]
fn saturation_forms_agree_on_equality_surface() {
    let cat = catalog(setting(3, 6)).unwrap();
    let d = cat.get("D^{(3,6)}").unwrap();
    // λ5 + λ6 − λ4 expressed with the three equalities: the difference of
    // the two functionals is a combination of them
    let alt = [0, 0, 0, -1, 1, 1];
    let mut diff: Vec<i64> = d.kappas.iter().zip(alt).map(|(a, b)| a - b).collect();
    let mut k0 = d.kappa0;
    for e in cat.equalities() {
        let i = e.kappas.iter().position(|&k| k != 0).unwrap();
        let coef = diff[i] / e.kappas[i];
        for (x, y) in diff.iter_mut().zip(&e.kappas) {
            *x -= coef * y;
        }
        k0 -= coef * e.kappa0;
    }
    assert_eq!(diff, vec![0; 6]);
    assert_eq!(k0, 0);
}

#[test]
fn measures_of_borland_dennis_constraint() {
    let cat = catalog(setting(3, 6)).unwrap();
    let d = cat.get("D^{(3,6)}").unwrap();
    let s = Spectrum::new(vec![0.9, 0.7, 0.7, 0.3, 0.3, 0.1], 3).unwrap();
    let v = d.measure(&s, Measure::D).unwrap();
    assert!((v - 0.1).abs() < 1e-15);
    assert!((d.measure(&s, Measure::L2).unwrap() - v / 3f64.sqrt()).abs() < 1e-15);
    assert_eq!(d.measure(&s, Measure::L1).unwrap(), v);
    let hf = Spectrum::new(vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0], 3).unwrap();
    let (m, c) = min_distance(&hf, setting(3, 6), Measure::D).unwrap();
    assert_eq!((m, c.label.as_str()), (0.0, "D^{(3,6)}"));
    assert!(d.evaluate_values(&[1.0; 5]).is_err());
}

#[test]
fn harmonium_seven_orbital_distances() {
    for (delta, want, rel) in [(0.2, [2.4e-8, 9.8e-8, 5.6e-8, 1.19e-7], 0.1), (0.4, [6.565e-6, 2.034e-5, 1.22e-5, 2.613e-5], 0.005)] {
        let nons = fermionic_nons(&from_delta(3, delta).unwrap(), 200).unwrap();
        let head = nons.values()[..7].to_vec();
        let cat = catalog(setting(3, 7)).unwrap();
        for (c, w) in cat.inequalities().zip(want) {
            let v = c.evaluate_values(&head).unwrap();
            assert!(((v - w) / w).abs() < rel, "δ={delta} {}: {v}", c.label);
        }
        let (m, c) = cat.min_distance_values(&head, Measure::D).unwrap();
        assert_eq!(c.label, "D^{(3,7)}_1");
        assert!(((m - want[0]) / want[0]).abs() < rel);
    }
}

#[test]
fn unsupported_settings_name_a_truncation() {
    match catalog(setting(4, 10)) {
        Err(Error::UnsupportedSetting { nearest: Some(t), .. }) => assert!(is_supported(t)),
        other => panic!("{other:?}"),
    }
    assert!(is_supported(setting(2, 9)));
    assert!(is_supported(setting(4, 7)));
    assert!(!is_supported(setting(3, 9)));
}
