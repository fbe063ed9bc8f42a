use honeylat::bloch::find_dirac_point;
use honeylat::edge::{assemble_edge, reference_dirac_energy, solve_near, SupercellConfig};
use honeylat::geometry::{EdgeFrame, TriangularLattice};
use honeylat::potential::{builtin_potentials, CompactBump, DomainWall};

fn config(lat: &TriangularLattice, delta: f64, wall: DomainWall) -> SupercellConfig {
    let mut c = SupercellConfig::new(EdgeFrame::zigzag(lat), 32, 10.0, delta, wall)
        .with_grid(16, 8)
        .aligned_with_k(lat);
    c.m1 = 4;
    c
}

#[test]
fn no_edge_states_without_the_wall_coupling() {
    let lat = TriangularLattice::unit();
    let (v, w) = builtin_potentials(lat);
    let dp = find_dirac_point(&v, 10.0, 8, None).unwrap();
    let cfg = config(&lat, 0.0, DomainWall::tanh(50.0, 1.0).unwrap());
    let target = reference_dirac_energy(&v, &cfg, dp.e_star).unwrap();
    let states = solve_near(&assemble_edge(&v, &w, &cfg).unwrap(), target, 12).unwrap();
    assert_eq!(states.len(), 12);
    assert!(states.iter().all(|s| !s.is_localized));
    assert!(states.iter().all(|s| s.residual < 1e-8 * (1.0 + target.abs())));
}

#[test]
fn edge_state_persists_under_a_local_wall_perturbation() {
    let lat = TriangularLattice::unit();
    let (v, w) = builtin_potentials(lat);
    let dp = find_dirac_point(&v, 10.0, 8, None).unwrap().with_theta(&w).unwrap();
    let tanh = DomainWall::tanh(50.0, 1.0).unwrap();
    let bumped = tanh
        .with_bumps(vec![CompactBump { center: 0.3, radius: 1.5, amplitude: 25.0 }])
        .unwrap();
    let target = reference_dirac_energy(&v, &config(&lat, 0.2, tanh.clone()), dp.e_star).unwrap();
    let wall_state = |wall: DomainWall| {
        let cfg = config(&lat, 0.2, wall);
        let states = solve_near(&assemble_edge(&v, &w, &cfg).unwrap(), target, 16).unwrap();
        states
            .into_iter()
            .filter(|s| s.is_localized)
            .min_by(|a, b| {
                let d = |c: f64| c.min(32.0 - c);
                d(a.transverse_center).total_cmp(&d(b.transverse_center))
            })
            .expect("a localized state at the wall")
    };
    let plain = wall_state(tanh);
    let moved = wall_state(bumped);
    assert!(moved.transverse_center.min(32.0 - moved.transverse_center) < 4.0);
    // only the leading order is protected; the shift is recorded, the state must stay in the gap
    let gap = 0.2 * dp.theta_sharp.unwrap().abs() * 50.0;
    println!("energy shift from the bump: {:.6e}", moved.energy - plain.energy);
    for s in [&plain, &moved] {
        assert!((s.energy - target).abs() < gap, "{} outside the gap {gap}", s.energy - target);
    }
}
