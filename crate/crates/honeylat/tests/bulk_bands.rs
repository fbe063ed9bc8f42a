use honeylat::bloch::{band_energies, find_dirac_point};
use honeylat::geometry::TriangularLattice;
use honeylat::potential::builtin_potentials;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_k(rng: &mut ChaCha8Rng, lat: &TriangularLattice) -> [f64; 2] {
    let (a, b) = (rng.gen::<f64>(), rng.gen::<f64>());
    [a * lat.k1[0] + b * lat.k2[0], a * lat.k1[1] + b * lat.k2[1]]
}

#[test]
fn low_bands_converge_in_the_cutoff() {
    let lat = TriangularLattice::unit();
    let (v, _) = builtin_potentials(lat);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for eps in [10.0, -10.0] {
        let ve = v.scaled(eps);
        for _ in 0..4 {
            let k = random_k(&mut rng, &lat);
            let lo = band_energies(&ve, k, 8, 5).unwrap();
            let hi = band_energies(&ve, k, 10, 5).unwrap();
            for (a, b) in lo.iter().zip(&hi) {
                assert!((a - b).abs() < 1e-8, "eps {eps}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn bands_are_even_in_k() {
    let lat = TriangularLattice::unit();
    let (v, _) = builtin_potentials(lat);
    let ve = v.scaled(10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..5 {
        let k = random_k(&mut rng, &lat);
        let a = band_energies(&ve, k, 6, 6).unwrap();
        let b = band_energies(&ve, [-k[0], -k[1]], 6, 6).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}

#[test]
fn dirac_energy_is_a_band_touching() {
    let lat = TriangularLattice::unit();
    let (v, _) = builtin_potentials(lat);
    let dp = find_dirac_point(&v, 10.0, 10, None).unwrap();
    let e = band_energies(&v.scaled(10.0), lat.k_point(), 10, 4).unwrap();
    let b = dp.b_star;
    assert!((e[b - 1] - dp.e_star).abs() < 1e-8);
    assert!((e[b] - dp.e_star).abs() < 1e-8);
    // the energy grows linearly off the vertex
    let k = lat.k_point();
    let h = 1e-4;
    let e1 = band_energies(&v.scaled(10.0), [k[0] + h, k[1]], 10, 4).unwrap();
    let slope = (e1[b] - e1[b - 1]) / (2.0 * h);
    assert!((slope - dp.lambda.fourier_abs()).abs() < 1e-3 * slope, "{slope}");
}
