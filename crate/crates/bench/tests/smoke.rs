use std::time::Duration;

use criterion::Criterion;

#[test]
fn every_benchmark_runs() {
    let mut c = Criterion::default()
        .sample_size(10)
        .warm_up_time(Duration::from_millis(1))
        .measurement_time(Duration::from_millis(1))
        .without_plots();
    cascade_bench::benchmarks(&mut c);
}
