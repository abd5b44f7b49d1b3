//! Fitness on a perfectly nested matrix: more diversified countries come
//! out fitter, and sorting by fitness and complexity gives a staircase.

use econfit::fitness::{
    compute_fitness, is_lower_staircase, rank_countries, triangular_order, FitnessConfig,
};
use econfit::rca::prune;
use econfit::synthetic::generate_nested;

fn main() -> econfit::Result<()> {
    let (m, _) = prune(&generate_nested(12, 20, 42)?)?;
    let res = compute_fitness(&m, &FitnessConfig::default())?;
    println!(
        "stopped by {:?} after {} sweeps",
        res.converged_by, res.iterations_run
    );

    let sums = m.row_sums();
    for e in &rank_countries(&res).entries {
        let c = m.country_index(&e.label).unwrap();
        println!("{:>4} {:>3} products  F = {:.4}", e.label, sums[c], e.value);
    }

    let sorted = triangular_order(&m, &res)?;
    for row in sorted.rows() {
        let line: String = row.iter().map(|&b| if b { '#' } else { '.' }).collect();
        println!("{line}");
    }
    println!("lower staircase: {}", is_lower_staircase(&sorted));
    Ok(())
}
