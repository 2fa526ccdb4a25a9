use horomap_energy::{BoundaryData, MapField};
use horomap_geometry::{busemann_plus, n_translation, Family, HoroPoint, ModelParams};
use horomap_potentials::{Lattice, SingularComponent};
use horomap_solver::{
    minimize, oracle_match, setup, truncate_u, truncate_ubar, uniqueness_check, Problem, SolveStatus, SolverOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn square(h: f64) -> Lattice {
    Lattice::new(&[-1.0, -1.0], &[1.0, 1.0], h).unwrap()
}

fn point_problem(fam: Family, h: f64, w: Vec<f64>, psi: impl Fn(&[f64]) -> HoroPoint) -> Problem {
    let params = ModelParams::new(fam, 2).unwrap();
    let c = SingularComponent::point(&[0.0, 0.0], 1.0, w).unwrap();
    let b = BoundaryData::sample(&square(h), params.vdim(), psi).unwrap();
    Problem::new(params, &[-1.0, -1.0], &[1.0, 1.0], h, vec![c], b).unwrap()
}

#[test]
fn geodesic_data_reduce_to_the_laplace_equation() {
    let p = point_problem(Family::R, 1.0 / 16.0, vec![0.0], |x| HoroPoint::new(x[0] * x[0] - 0.5 * x[1], vec![0.0]));
    let (f, rep) = minimize(&p).unwrap();
    assert_eq!(rep.status, SolveStatus::Converged);
    assert_eq!(rep.geodesic_oracle_match, Some(true));
    assert!(f.v.iter().all(|x| x.abs() <= 1e-8));
    let s = setup(&p).unwrap();
    let m = oracle_match(&s, &f).unwrap().unwrap();
    assert!(m.max_u_error <= 1e-8, "{m:?}");
}

#[test]
fn oracle_is_skipped_for_non_geodesic_data() {
    let p = point_problem(Family::R, 0.25, vec![0.0], |x| HoroPoint::new(0.0, vec![x[0]]));
    let (_, rep) = minimize(&p).unwrap();
    assert_eq!(rep.geodesic_oracle_match, None);
}

#[test]
fn real_uniqueness_spread_is_tiny() {
    let p = point_problem(Family::R, 1.0 / 16.0, vec![0.0], |x| HoroPoint::new(0.3 * x[0], vec![0.2 * x[1]]));
    let u = uniqueness_check(&p, 3, 11).unwrap();
    assert!(u.spread <= 1e-7, "{u:?}");
    assert!(u.min_laplacian >= -1e-6, "{u:?}");
}

#[test]
fn trivial_solution_sits_inside_the_apriori_ball() {
    let p = point_problem(Family::H, 0.125, vec![0.2; 7], |_| HoroPoint::new(0.0, vec![0.2; 7]));
    let (_, rep) = minimize(&p).unwrap();
    assert_eq!(rep.observed_max_distance, vec![0.0]);
    assert!((rep.apriori[0].radius - (1.0 + std::f64::consts::LN_2)).abs() < 1e-14);
}

#[test]
fn symmetric_pair_has_equal_charges() {
    let params = ModelParams::new(Family::R, 2).unwrap();
    let h = 1.0 / 16.0;
    let comps = vec![
        SingularComponent::point(&[-0.5, 0.0], 1.0, vec![0.0]).unwrap(),
        SingularComponent::point(&[0.5, 0.0], 1.0, vec![0.0]).unwrap(),
    ];
    let b = BoundaryData::sample(&square(h), 1, |x| HoroPoint::new(0.1 * x[1] * x[1], vec![0.0])).unwrap();
    let p = Problem::new(params, &[-1.0, -1.0], &[1.0, 1.0], h, comps, b).unwrap();
    let (_, rep) = minimize(&p).unwrap();
    assert_eq!(rep.status, SolveStatus::Converged);
    let (a, c) = (&rep.components[0], &rep.components[1]);
    assert!((a.charge - c.charge).abs() <= 1e-9 && (a.charge - 1.0).abs() <= 1e-6, "{} {}", a.charge, c.charge);
    assert_eq!((a.d, c.d), (None, None));
    assert!((rep.observed_max_distance[0] - rep.observed_max_distance[1]).abs() <= 1e-8);
}

#[test]
fn offsets_give_finite_busemann_limits() {
    let params = ModelParams::new(Family::R, 2).unwrap();
    let h = 1.0 / 16.0;
    let comps = vec![
        SingularComponent::point(&[-0.5, 0.0], 1.0, vec![0.0]).unwrap(),
        SingularComponent::point(&[0.5, 0.0], 1.0, vec![0.5]).unwrap(),
    ];
    let b = BoundaryData::sample(&square(h), 1, |x| HoroPoint::new(0.0, vec![0.25 * (x[0] + 1.0)])).unwrap();
    let p = Problem::new(params, &[-1.0, -1.0], &[1.0, 1.0], h, comps, b).unwrap();
    let (_, rep) = minimize(&p).unwrap();
    let d = rep.components[1].d.unwrap();
    assert!((d + 0.25f64.ln()).abs() < 1e-10);
    assert!(rep.components[1].d_tail.unwrap() <= 1e-6);
    assert!(!rep.apriori_violated, "{:?} vs {:?}", rep.observed_max_distance, rep.apriori);
}

/// Random fields with boundary values from `ψ` and the truncation levels of the problem.
#[test]
fn truncations_never_raise_the_energy() {
    for fam in Family::ALL {
        let params = ModelParams::new(fam, 2).unwrap();
        let vd = params.vdim();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w: Vec<f64> = (0..vd).map(|_| rng.random_range(-0.5..0.5)).collect();
        let w2 = w.clone();
        let p = point_problem(fam, 0.125, w.clone(), move |x| {
            HoroPoint::new(0.3 * x[0], w2.iter().map(|c| c + 0.2 * x[1]).collect())
        });
        let s = setup(&p).unwrap();
        let back = n_translation(&params, &w).unwrap().inverse();
        let mut active = 0;
        for _ in 0..20 {
            let amp = rng.random_range(0.5..3.0);
            let mut f: MapField = s.initial.clone();
            for &i in s.grid.free_nodes() {
                let i = i as usize;
                f.uhat[i] += rng.random_range(-amp..amp);
                for c in f.v_at_mut(i) {
                    *c += rng.random_range(-amp..amp);
                }
            }
            let before = s.energy.value(&f).unwrap();
            let tu = truncate_u(&s.grid, &f, s.levels.t);
            let tb = truncate_ubar(&s.energy, &f, &s.levels).unwrap();
            assert!(s.energy.value(&tu).unwrap() <= before);
            assert!(s.energy.value(&tb).unwrap() <= before);
            for &i in s.grid.free_nodes() {
                let i = i as usize;
                let q = back.apply(&HoroPoint::new(s.energy.u0()[i] + tb.uhat[i], tb.v_at(i).to_vec()));
                let ubar = busemann_plus(&params, &q);
                assert!(ubar - s.levels.ubar0[i] <= s.levels.t_bar + 1e-9);
            }
            active += usize::from(tb != f) + usize::from(tu != f);
        }
        assert!(active > 20, "{fam}: truncations were rarely active ({active})");
    }
}

#[test]
fn complex_solve_is_monotone_and_converges() {
    let p = point_problem(Family::C, 1.0 / 16.0, vec![0.0; 3], |x| {
        HoroPoint::new(0.2 * x[0] * x[1], vec![0.1 * x[0], -0.1 * x[1], 0.05 * (x[0] + x[1])])
    })
    .with_options(SolverOptions { workers: 2, ..Default::default() });
    let (_, rep) = minimize(&p).unwrap();
    assert_eq!(rep.status, SolveStatus::Converged);
    assert!(rep.final_residual <= 1e-8);
    assert!(rep.energy_history.windows(2).all(|w| w[1] <= w[0]));
    let json = rep.to_json().unwrap();
    assert!(json.contains("\"energy_history\"") && !json.contains("wall"));
}
