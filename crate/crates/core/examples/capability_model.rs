//! Countries hold hidden capabilities and can export a product only when
//! they hold everything it requires. Fitness computed from the observed
//! exports should track the hidden capability counts.

use econfit::fitness::{compute_fitness, FitnessConfig};
use econfit::stats::median;
use econfit::synthetic::{capability_fitness_spearman, generate_tripartite, LinkDensities};

fn main() -> econfit::Result<()> {
    let mut rhos = Vec::new();
    for seed in 0..20 {
        let (model, m) = generate_tripartite(20, 10, 50, LinkDensities::default(), seed)?;
        let res = compute_fitness(&m, &FitnessConfig::default())?;
        if let Some(rho) = capability_fitness_spearman(&model, &res) {
            println!(
                "seed {seed:>2}: {}x{} matrix, spearman {rho:.3}",
                m.n_countries(),
                m.n_products()
            );
            rhos.push(rho);
        }
    }
    println!("median spearman {:.3}", median(&rhos));
    Ok(())
}
