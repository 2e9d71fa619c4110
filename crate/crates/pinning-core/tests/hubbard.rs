use nalgebra::DMatrix;
use num_complex::Complex64;
use pinning_core::error::Error;
use pinning_core::fock::{self, SlaterDeterminant};
use pinning_core::hubbard::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn parity_below(mask: u64, bit: usize) -> f64 {
    if (mask & ((1u64 << bit) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Full-space Hamiltonian in the site basis, orbital `2j + σ` for site `j`.
fn real_space_spectrum(sites: usize, electrons: usize, u: f64) -> Vec<f64> {
    let orbitals = 2 * sites;
    let dets: Vec<u64> = (0u64..1 << orbitals)
        .filter(|m| m.count_ones() as usize == electrons)
        .collect();
    let index = |m: u64| dets.binary_search(&m).unwrap();
    let mut h = DMatrix::<f64>::zeros(dets.len(), dets.len());
    for (col, &m) in dets.iter().enumerate() {
        for j in 0..sites {
            if m >> (2 * j) & 1 == 1 && m >> (2 * j + 1) & 1 == 1 {
                h[(col, col)] += u;
            }
            for spin in 0..2 {
                let a = 2 * j + spin;
                let b = 2 * ((j + 1) % sites) + spin;
                for (from, to) in [(a, b), (b, a)] {
                    if m >> from & 1 == 0 {
                        continue;
                    }
                    let s1 = parity_below(m, from);
                    let m1 = m ^ (1 << from);
                    if m1 >> to & 1 == 1 {
                        continue;
                    }
                    let s2 = parity_below(m1, to);
                    h[(index(m1 | 1 << to), col)] -= s1 * s2;
                }
            }
        }
    }
    sorted(h.symmetric_eigen().eigenvalues.iter().copied().collect())
}

fn block_union_spectrum(sites: usize, electrons: usize, u: f64) -> Vec<f64> {
    let setting = LatticeSetting::new(sites, electrons, u).unwrap();
    let blocks = build_blocks(&setting);
    let mut all = Vec::new();
    for b in &blocks {
        assert_eq!(b.matrix, b.matrix.transpose());
        for d in &b.basis {
            assert_eq!(momentum(*d, sites), b.k);
            assert_eq!(two_m(*d), b.two_m);
        }
        all.extend(b.matrix.clone().symmetric_eigen().eigenvalues.iter().copied());
    }
    sorted(all)
}

#[test]
fn block_spectra_match_real_space_diagonalization() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (sites, electrons) in [(3, 3), (4, 3), (4, 4), (5, 3)] {
        for _ in 0..3 {
            let u: f64 = rng.random_range(-10.0..10.0);
            let want = real_space_spectrum(sites, electrons, u);
            let got = block_union_spectrum(sites, electrons, u);
            assert_eq!(want.len(), got.len());
            for (x, y) in want.iter().zip(&got) {
                assert!((x - y).abs() < 1e-10, "d={sites} N={electrons} u={u}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn three_site_levels_have_multiplicity_four() {
    let u = 2.7;
    let spectrum = real_space_spectrum(3, 3, u);
    for e in three_site_energies(u) {
        let count = spectrum.iter().filter(|&&x| (x - e).abs() < 1e-9).count();
        assert_eq!(count, 4, "E={e}");
    }
}

#[test]
fn three_site_layout() {
    let layout = sector_layout(3, 3).unwrap();
    let dims: Vec<usize> = layout.iter().filter(|s| s.two_m == 1 && s.k == 1).map(|s| s.dim).collect();
    assert_eq!(dims.iter().sum::<usize>(), 3);
    let setting = LatticeSetting::new(3, 3, 1.0).unwrap();
    for b in build_blocks(&setting).iter().filter(|b| b.two_m == 1) {
        assert_eq!(b.basis.len(), 3);
    }
    let zero = LatticeSetting::new(3, 3, 0.0).unwrap();
    for b in build_blocks(&zero) {
        let off = DMatrix::from_fn(b.basis.len(), b.basis.len(), |i, j| if i == j { 0.0 } else { b.matrix[(i, j)] });
        assert_eq!(off.amax(), 0.0, "K={} 2M={}", b.k, b.two_m);
    }
}

#[test]
fn cubic_roots_are_accurate() {
    for i in 0..=1000 {
        let u = -50.0 + 0.1 * i as f64;
        let e = three_site_energies(u);
        for x in e {
            assert!(three_site_characteristic(u, x).abs() < 1e-10, "u={u} E={x}");
        }
        assert!(e[0] < e[2] && e[2] < e[1]);
        let m = three_site_energies(-u);
        assert!((m[0] + e[1]).abs() < 1e-10);
        assert!((m[2] + e[2]).abs() < 1e-10);
    }
    assert_eq!(three_site_energies(0.0)[0], -3.0);
}

#[test]
fn three_site_solution_matches_block_diagonalization() {
    let setting = LatticeSetting::new(3, 3, 0.0).unwrap();
    for u in [-7.0, -0.5, 0.0, 1e-6, 3.0, 12.0, 40.0] {
        let sol = solve_three_site(u);
        let ed = sector_ground_state(&setting.with_u(u), 1, 1).unwrap();
        assert!((ed.energy - sol.energies[0]).abs() < 1e-10, "u={u}");
        for (x, y) in ed.occupations.iter().zip(&sol.occupations) {
            assert!((x - y).abs() < 1e-10, "u={u}");
        }
        let psi = three_site_state(u);
        let rdm = fock::one_rdm(&psi);
        for (i, &occ) in sol.occupations.iter().enumerate() {
            assert!((rdm.matrix()[(i, i)].re - occ).abs() < 1e-12);
        }
    }
    let zero = solve_three_site(0.0);
    assert_eq!(zero.alpha, 1.0);
    assert_eq!(zero.nons, vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
}

#[test]
fn borland_dennis_equalities_hold_for_three_site_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let setting = LatticeSetting::new(3, 3, 0.0).unwrap();
    for _ in 0..20 {
        let u = rng.random_range(-30.0..30.0);
        for b in build_blocks(&setting.with_u(u)).iter().filter(|b| b.two_m == 1) {
            let eig = b.matrix.clone().symmetric_eigen();
            for col in 0..b.basis.len() {
                let terms: Vec<(SlaterDeterminant, Complex64)> = b
                    .basis
                    .iter()
                    .enumerate()
                    .map(|(i, d)| (*d, Complex64::new(eig.eigenvectors[(i, col)], 0.0)))
                    .collect();
                let psi = fock::FermionState::normalized(setting.fock(), terms).unwrap();
                let (spec, _) = fock::natural_occupations(&fock::one_rdm(&psi)).unwrap();
                let l = spec.values();
                for (i, j) in [(0, 5), (1, 4), (2, 3)] {
                    assert!((l[i] + l[j] - 1.0).abs() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn three_site_pinning_regime() {
    for i in 0..=100 {
        let u = -40.0 + 0.52 * i as f64;
        assert!(solve_three_site(u).d36.abs() < 1e-12, "u={u}");
    }
    let up = find_transition(3, 3, (5.0, 20.0)).unwrap();
    assert!((12.85..=12.87).contains(&up), "{up}");
    let far = solve_three_site(100.0).d36;
    assert!((far - (1.0 / 3.0 - 0.04 - 0.0006)).abs() < 1e-3, "{far}");
    let s = solve_three_site(1e4);
    assert!((s.energies[1] - s.energies[2] - 2.0 * 3f64.sqrt()).abs() < 1e-3);
    assert!(matches!(find_transition(3, 3, (0.0, 5.0)), Err(Error::NotFound { .. })));
}

/// The 3×3 blocks written out in closed form from the three amplitudes.
fn closed_form_blocks(u: f64, zeta: Complex64, xi: Complex64) -> (Vec<f64>, Vec<f64>) {
    let s = solve_three_site(u);
    let (a, b, g) = (Complex64::from(s.alpha), Complex64::from(s.beta), Complex64::from(s.gamma));
    let (a2, b2, g2) = (a.norm_sqr(), b.norm_sqr(), g.norm_sqr());
    let (z2, x2) = (zeta.norm_sqr(), xi.norm_sqr());
    let zx = zeta * xi.conj();
    let up = DMatrix::from_row_slice(
        3,
        3,
        &[
            (a2 + g2).into(),
            zx * g * b.conj(),
            zx.conj() * b.conj() * g,
            zx.conj() * g.conj() * b,
            (z2 * a2 + x2 * g2 + b2).into(),
            zx * a2,
            zx * b * g.conj(),
            zx.conj() * a2,
            (z2 * g2 + x2 * a2 + b2).into(),
        ],
    );
    let down = DMatrix::from_row_slice(
        3,
        3,
        &[
            a2.into(),
            -zx * a * g.conj(),
            -zx.conj() * g.conj() * a,
            -zx.conj() * a.conj() * g,
            (z2 * b2 + x2 * g2).into(),
            -zx * b2,
            -zx * g * a.conj(),
            -zx.conj() * b2,
            (z2 * g2 + x2 * b2).into(),
        ],
    );
    let eig = |m: DMatrix<Complex64>| sorted(m.symmetric_eigenvalues().iter().copied().collect());
    (eig(up), eig(down))
}

#[test]
fn superposition_blocks_match_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..30 {
        let u = rng.random_range(-30.0..60.0);
        let t: f64 = rng.random_range(0.0..1.0);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let zeta = Complex64::new(t.sqrt(), 0.0);
        let xi = Complex64::from_polar((1.0 - t).sqrt(), phase);
        let sup = superposed_state(u, zeta, xi).unwrap();
        let (up, down) = closed_form_blocks(u, zeta, xi);
        for (x, y) in sorted(sup.up.to_vec()).iter().zip(&up) {
            assert!((x - y).abs() < 1e-10, "u={u}");
        }
        for (x, y) in sorted(sup.down.to_vec()).iter().zip(&down) {
            assert!((x - y).abs() < 1e-10, "u={u}");
        }
        assert!((sup.up.iter().sum::<f64>() - 2.0).abs() < 1e-10);
        assert!((sup.down.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!(sup.pairing_residual < 1e-10);
        assert_eq!(sup.case == PinCase::Pinned, sup.d36.abs() < 1e-10);
        let swapped = superposed_state(u, xi, zeta).unwrap();
        for (x, y) in sup.nons.values().iter().zip(swapped.nons.values()) {
            assert!((x - y).abs() < 1e-10);
        }
        let rotated = superposed_state(u, zeta, xi * Complex64::from_polar(1.0, std::f64::consts::TAU / 3.0)).unwrap();
        for (x, y) in sup.nons.values().iter().zip(rotated.nons.values()) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}

#[test]
fn superposition_limits() {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for u in [-20.0, 0.0, 5.0, 20.0, 100.0] {
        let sup = superposed_state(u, Complex64::new(h, 0.0), Complex64::new(0.0, h)).unwrap();
        assert!(sup.d36.abs() < 1e-10, "u={u}: {}", sup.d36);
        assert_eq!(sup.case, PinCase::Pinned);
        let single = superposed_state(u, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)).unwrap();
        let sol = solve_three_site(u);
        for (x, y) in single.nons.values().iter().zip(&sol.nons) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((single.d36 - sol.d36).abs() < 1e-12);
    }
    assert!(matches!(
        superposed_state(1.0, Complex64::new(1.0, 0.0), Complex64::new(0.1, 0.0)),
        Err(Error::Argument(_))
    ));
}

#[test]
fn four_site_vectors() {
    let printed = [
        (2.0, [0.981, 0.974, 0.955, 0.029, 0.017, 0.016, 0.015, 0.012]),
        (3.0, [0.962, 0.951, 0.913, 0.0583, 0.0333, 0.0314, 0.0291, 0.0224]),
        (12.0, [0.826, 0.826, 0.659, 0.253, 0.146, 0.127, 0.095, 0.067]),
    ];
    for (u, want) in printed {
        let g = ground_state(&LatticeSetting::new(4, 3, u).unwrap(), SectorChoice::default_for(3)).unwrap();
        assert!(!g.degenerate());
        for (x, y) in g.nons().iter().zip(want) {
            assert!((x - y).abs() < 1e-3, "u={u}: {x} vs {y}");
        }
    }
}

#[test]
fn four_site_pinning_and_transition() {
    let grid: Vec<f64> = (0..=161).map(|i| 2.4 + 0.1 * i as f64).collect();
    let scan = ground_scan(4, 3, SectorChoice::default_for(3), &grid).unwrap();
    for p in &scan {
        let d2 = 2.0 - (p.nons[0] + p.nons[1] + p.nons[3] + p.nons[6]);
        assert!(d2.abs() < 1e-9, "u={}: {d2}", p.u);
        assert!(p.pinned);
    }
    let low = ground_scan(4, 3, SectorChoice::default_for(3), &[1.0, 2.0]).unwrap();
    assert!(low.iter().all(|p| !p.pinned));
    let up = find_transition(4, 3, (1.0, 5.0)).unwrap();
    let occ = |u: f64| {
        ground_state(&LatticeSetting::new(4, 3, u).unwrap(), SectorChoice::default_for(3))
            .unwrap()
            .occupations
    };
    // the two occupations swap order at the transition
    let (below, above) = (occ(up - 1e-4), occ(up + 1e-4));
    assert!((below[3] - below[4]) * (above[3] - above[4]) < 0.0);
    assert!((2.12..2.14).contains(&up), "{up}");
}

#[test]
fn four_sites_five_electrons_are_particle_hole_images() {
    for u in [1.0, 2.5, 8.0] {
        let three = ground_state(&LatticeSetting::new(4, 3, u).unwrap(), SectorChoice::default_for(3)).unwrap();
        let five = ground_state(&LatticeSetting::new(4, 5, u).unwrap(), SectorChoice::default_for(5)).unwrap();
        let holes: Vec<f64> = three.nons().iter().rev().map(|x| 1.0 - x).collect();
        for (x, y) in five.nons().iter().zip(&holes) {
            assert!((x - y).abs() < 1e-10, "u={u}");
        }
        assert!((five.energy - (three.energy + u)).abs() < 1e-10);
    }
}

#[test]
fn rejects_out_of_range_settings() {
    assert!(matches!(LatticeSetting::new(6, 3, 1.0), Err(Error::Precondition(_))));
    assert!(matches!(LatticeSetting::new(3, 2, 1.0), Err(Error::Precondition(_))));
    assert!(LatticeSetting::new(3, 3, f64::NAN).is_err());
}
