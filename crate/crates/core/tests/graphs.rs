use fiid_core::{seed, RegularMultigraph};

#[test]
fn triangle_count_is_near_poisson_mean() {
    // (d-1)^3 / 6 triangles on average for d = 3.
    let mean_target = 4.0 / 3.0;
    let seeds = 200u64;
    let counts: Vec<f64> = (0..seeds)
        .map(|s| {
            let g = RegularMultigraph::sample(10_000, 3, seed::derive(7, "triangles", s)).unwrap();
            g.count_cycles_up_to(3).unwrap()[2] as f64
        })
        .collect();
    let mean = counts.iter().sum::<f64>() / seeds as f64;
    let sigma = (mean_target / seeds as f64).sqrt();
    assert!((mean - mean_target).abs() <= 3.0 * sigma, "mean {mean}, sigma {sigma}");
}
