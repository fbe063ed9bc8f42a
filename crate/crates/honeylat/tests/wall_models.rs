use honeylat::bloch::find_dirac_point;
use honeylat::effective::{dirac_spectrum, e2_coefficient, zero_mode_exact, Discretization, DiracOperator1D};
use honeylat::geometry::{EdgeFrame, TriangularLattice};
use honeylat::potential::{builtin_potentials, CompactBump, DomainWall};

#[test]
fn second_order_energy_is_real_and_stable_in_the_cutoff() {
    let lat = TriangularLattice::unit();
    let (v, w) = builtin_potentials(lat);
    let zigzag = EdgeFrame::zigzag(&lat);
    let wall = DomainWall::tanh(4.0, 1.0).unwrap();
    let eps = 0.5;
    let e2 = |m: usize| {
        let dp = find_dirac_point(&v, eps, m, None).unwrap().with_theta(&w).unwrap();
        e2_coefficient(&dp, &v.scaled(eps), &w, &zigzag, &wall).unwrap()
    };
    let (a, b) = (e2(8), e2(10));
    assert!(a.imag_part.abs() < 1e-10);
    assert!(a.e2.is_finite() && a.e2 != 0.0);
    assert!((a.e2 - b.e2).abs() < 1e-6 * a.e2.abs(), "{} vs {}", a.e2, b.e2);
}

#[test]
fn second_order_energy_varies_smoothly_with_wall_width() {
    let lat = TriangularLattice::unit();
    let (v, w) = builtin_potentials(lat);
    let zigzag = EdgeFrame::zigzag(&lat);
    let dp = find_dirac_point(&v, 0.5, 8, None).unwrap().with_theta(&w).unwrap();
    let vs = v.scaled(0.5);
    let at = |s: f64| {
        e2_coefficient(&dp, &vs, &w, &zigzag, &DomainWall::tanh(4.0, s).unwrap())
            .unwrap()
            .e2
    };
    let widths = [0.5, 0.9, 1.0, 1.1, 2.0];
    let vals: Vec<f64> = widths.iter().map(|&s| at(s)).collect();
    assert!(vals.iter().all(|x| x.is_finite()));
    assert!((vals[1] - vals[2]).abs() < 0.2 * vals[2].abs());
    assert!((vals[3] - vals[2]).abs() < 0.2 * vals[2].abs());
}

#[test]
fn zero_mode_survives_a_local_wall_perturbation() {
    let tanh = DomainWall::tanh(1.0, 1.0).unwrap();
    let bumped = tanh
        .with_bumps(vec![
            CompactBump { center: 0.5, radius: 3.0, amplitude: 0.8 },
            CompactBump { center: -3.0, radius: 2.5, amplitude: -0.5 },
        ])
        .unwrap();
    for wall in [tanh, bumped] {
        let d = DiracOperator1D::new(1.0, 1.0, wall.clone(), 20.0, 1023, Discretization::FourierSpectral).unwrap();
        let spec = dirac_spectrum(&d, 4).unwrap();
        assert!(spec.zero_value.abs() < 1e-8, "{}", spec.zero_value);
        assert!(spec.mode_error < 1e-6, "{}", spec.mode_error);
        // the periodized domain carries the wall and its mirror, one zero mode each, and
        // nothing else inside the bulk gap
        let gap = 1.0 - 0.05;
        let inside: Vec<f64> = spec.values.iter().copied().filter(|e| e.abs() < gap).collect();
        assert_eq!(inside.len(), 2, "{:?}", spec.values);
        assert!(inside.iter().all(|e| e.abs() < 1e-8));
        assert!(zero_mode_exact(1.0, 1.0, &wall).is_ok());
    }
}
