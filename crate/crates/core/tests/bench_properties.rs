use gcnmtr::bench::{run_one, run_suite, to_csv, RunConfig, SolverChoice};
use gcnmtr::outcome::Method;

fn without_time(csv: &str) -> Vec<String> {
    csv.lines()
        .map(|l| {
            let mut cells: Vec<&str> = l.split(',').collect();
            cells.remove(6);
            cells.join(",")
        })
        .collect()
}

#[test]
fn reruns_match_outside_the_time_column() {
    let config = RunConfig::new(
        &["trid", "dixon-price", "wood"],
        &[(4, 8), (8, 8)],
        SolverChoice::Both,
    );
    let a = to_csv(&run_suite(&config).unwrap()).unwrap();
    let b = to_csv(&run_suite(&config).unwrap()).unwrap();
    assert_eq!(without_time(&a), without_time(&b));
}

#[test]
fn a_failing_run_does_not_affect_its_neighbours() {
    let mut config = RunConfig::new(
        &["trid", "rosenbrock", "wood"],
        &[(10, 20)],
        SolverChoice::Gcnmtr,
    );
    config.maxit = Some(5);
    let report = run_suite(&config).unwrap();
    assert_eq!(report.rows.len(), 3);
    assert_eq!(report.rows[1].status, "failed");
    for (i, name) in [(0, "trid"), (2, "wood")] {
        let alone = run_one(name, 10, 20, Method::Gcnmtr, &config);
        let row = &report.rows[i];
        assert_eq!(
            (row.nj, row.iterations, row.final_res_inf, &row.status),
            (
                alone.nj,
                alone.iterations,
                alone.final_res_inf,
                &alone.status
            )
        );
    }
}
