use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rydbroad_core::meanfield::{
    build_coupling_table, random_init, CouplingTable, LatticeConfig, Level, MeanField, Rates, SiteState,
    SteadyStateOptions,
};
use rydbroad_core::units::DriveParams;
use rydbroad_oracle as oracle;

fn to_dense(s: &SiteState) -> oracle::CMat {
    DMatrix::from_fn(3, 3, |r, c| s.0[(r, c)])
}

fn max_diff(a: &oracle::CMat, s: &SiteState) -> f64 {
    (0..3)
        .flat_map(|r| (0..3).map(move |c| (r, c)))
        .map(|(r, c)| (a[(r, c)] - s.0[(r, c)]).norm())
        .fold(0.0, f64::max)
}

fn decays(r: &Rates) -> oracle::Decays {
    oracle::Decays {
        gamma_s: r.gamma_s,
        gamma_p: r.gamma_p,
        gamma_r: r.gamma_r,
    }
}

#[test]
fn rk4_is_fourth_order_against_exact_propagator() {
    let drive = DriveParams::effective(2.0, 0.7).unwrap();
    let rates = Rates::new(0.9, 0.4, 0.3).unwrap();
    let table = CouplingTable::empty(1);
    let mf = MeanField::new(drive, &table, rates).unwrap();
    let rho0 = random_init(1, 11);

    let l = oracle::liouvillian(
        &oracle::hamiltonian(2.0, 0.7, Complex64::new(0.0, 0.0)),
        &decays(&rates),
    );
    let t_end = 1.0;
    let exact = oracle::propagate(&l, &to_dense(&rho0[0]), t_end);

    let error = |steps: usize| {
        let dt = t_end / steps as f64;
        let mut s = rho0.clone();
        for _ in 0..steps {
            s = mf.step(&s, dt).unwrap();
        }
        max_diff(&exact, &s[0])
    };
    let e1 = error(20);
    let e2 = error(40);
    let ratio = e1 / e2;
    assert!(e1 < 1e-5, "coarse error {e1}");
    assert!((12.0..20.0).contains(&ratio), "error ratio {ratio} ({e1} -> {e2})");
}

#[test]
fn single_site_steady_state_matches_null_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let omega = rng.random_range(0.1..3.0);
        let delta = rng.random_range(-2.0..2.0);
        let rates = Rates::new(
            rng.random_range(0.2..2.0),
            rng.random_range(0.2..2.0),
            rng.random_range(0.0..1.0),
        )
        .unwrap();
        let table = CouplingTable::empty(1);
        let mf = MeanField::new(DriveParams::effective(omega, delta).unwrap(), &table, rates).unwrap();
        let opts = SteadyStateOptions {
            tol: 1e-11,
            t_max: 400.0,
            ..Default::default()
        };
        let run = mf.evolve(random_init(1, rng.random()), &opts).unwrap();
        assert!(run.report.converged);
        let l = oracle::liouvillian(
            &oracle::hamiltonian(omega, delta, Complex64::new(0.0, 0.0)),
            &decays(&rates),
        );
        let want = oracle::null_space_steady_state(&l);
        assert!(
            max_diff(&want, &run.states[0]) < 1e-8,
            "{}",
            max_diff(&want, &run.states[0])
        );
    }
}

fn compare_with_self_consistent(dims: [usize; 3], c3: f64) {
    let omega = 1.1;
    let delta = 0.4;
    let rates = Rates::new(0.8, 0.5, 0.3).unwrap();
    let mut lattice = LatticeConfig::cubic(dims, 1.0).unwrap();
    lattice.quantization_axis = [0.0, 0.0, 1.0];
    let table = build_coupling_table(&lattice, c3).unwrap();
    let n = table.n_sites();
    let dense = DMatrix::from_fn(n, n, |i, j| table.get(i, j).unwrap_or(0.0));

    let want = oracle::self_consistent_mean_field(
        omega,
        delta,
        &decays(&rates),
        &dense,
        Complex64::new(0.05, -0.02),
        1e-13,
        10_000,
    )
    .expect("fixed-point iteration converges");

    let mf = MeanField::new(DriveParams::effective(omega, delta).unwrap(), &table, rates).unwrap();
    let opts = SteadyStateOptions {
        tol: 1e-11,
        t_max: 400.0,
        ..Default::default()
    };
    let run = mf.evolve(random_init(n, 3), &opts).unwrap();
    assert!(run.report.converged);
    for (w, got) in want.iter().zip(&run.states) {
        assert!(max_diff(w, got) < 1e-8, "{}", max_diff(w, got));
    }
}

#[test]
fn one_site_matches_self_consistent_fixed_point() {
    compare_with_self_consistent([1, 1, 1], 2.0);
}

#[test]
fn two_sites_match_self_consistent_fixed_point() {
    compare_with_self_consistent([2, 1, 1], 2.0);
    compare_with_self_consistent([1, 1, 2], 0.7);
}

#[test]
fn ground_start_lattice_relaxes_to_single_atom_state() {
    let rates = Rates::new(0.8, 0.5, 0.3).unwrap();
    let table = build_coupling_table(&LatticeConfig::cubic([3, 3, 1], 1.0).unwrap(), 5.0).unwrap();
    let mf = MeanField::new(DriveParams::effective(1.0, 0.0).unwrap(), &table, rates).unwrap();
    let opts = SteadyStateOptions {
        tol: 1e-11,
        t_max: 400.0,
        ..Default::default()
    };
    let run = mf.evolve(vec![SiteState::pure(Level::Ground); 9], &opts).unwrap();
    let l = oracle::liouvillian(
        &oracle::hamiltonian(1.0, 0.0, Complex64::new(0.0, 0.0)),
        &decays(&rates),
    );
    let want = oracle::null_space_steady_state(&l);
    for s in &run.states {
        assert!(max_diff(&want, s) < 1e-8);
    }
}
