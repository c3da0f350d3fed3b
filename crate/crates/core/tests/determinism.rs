use rydbroad_core::meanfield::{
    build_coupling_table, random_init, LatticeConfig, MeanField, Rates, SteadyStateOptions,
};
use rydbroad_core::units::DriveParams;

fn run_with_threads(threads: usize) -> rydbroad_core::meanfield::SteadyStateRun {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| {
        let mut lattice = LatticeConfig::cubic([4, 3, 3], 0.5).unwrap();
        lattice.quantization_axis = [0.3, 0.1, 1.0];
        let table = build_coupling_table(&lattice, 0.4).unwrap();
        let mf = MeanField::new(
            DriveParams::effective(0.9, 0.2).unwrap(),
            &table,
            Rates::new(0.28, 0.16, 0.07).unwrap(),
        )
        .unwrap();
        let opts = SteadyStateOptions {
            t_max: 2.0,
            dt: Some(2e-3),
            ..Default::default()
        };
        mf.evolve(random_init(table.n_sites(), 42), &opts).unwrap()
    })
}

#[test]
fn trajectories_do_not_depend_on_thread_count() {
    let one = run_with_threads(1);
    for threads in [2, 3, 8] {
        let other = run_with_threads(threads);
        assert_eq!(one.states, other.states, "{threads} threads");
        assert_eq!(one.series, other.series);
        assert_eq!(one.report, other.report);
    }
}

#[test]
fn same_seed_same_trajectory() {
    let a = run_with_threads(2);
    let b = run_with_threads(2);
    assert_eq!(a.states, b.states);
}
