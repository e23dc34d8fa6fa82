//! Fixtures shared by the benchmarks.

use physml_core::quantum::{eval_potential, make_grid, PotentialSpec};
use physml_core::Tensor;

/// A batch of anharmonic potentials shaped `[batch, n_points, 1]`.
pub fn potential_batch(batch: usize, n_points: usize) -> Tensor {
    let grid = make_grid(5.0, n_points).expect("valid grid");
    let mut data = Vec::with_capacity(batch * n_points);
    for b in 0..batch {
        let spec = PotentialSpec::default().with_lambda(b as f64 / batch as f64);
        data.extend(eval_potential(&grid, &spec));
    }
    Tensor::new(vec![batch, n_points, 1], data).expect("consistent shape")
}
