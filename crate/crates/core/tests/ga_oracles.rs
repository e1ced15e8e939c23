use gftlqr_core::evo::{run_ga, GFT_GENOME_LEN};
use gftlqr_core::{Chromosome, GaConfig};
use rand::{Rng, SeedableRng};

fn config(seed: u64) -> GaConfig {
    GaConfig {
        population_size: 112,
        n_islands: 4,
        n_generations: 200,
        seed,
        ..GaConfig::default()
    }
}

fn byte_sum(c: &Chromosome) -> f64 {
    c.genes.iter().map(|&g| g as f64).sum()
}

#[test]
fn byte_sum_reaches_zero_on_four_genes() {
    for seed in 0..10 {
        let out = run_ga(&config(seed), 4, &[], byte_sum, |_| {}).unwrap();
        assert_eq!(out.best_cost, 0.0, "seed {seed}");
        assert_eq!(out.best.genes, vec![0; 4]);
        assert_eq!(out.history.len(), 200);
    }
}

#[test]
fn hamming_to_hidden_target_improves() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    let target: Vec<u8> = (0..GFT_GENOME_LEN).map(|_| rng.random()).collect();
    let hamming = |c: &Chromosome| {
        c.genes
            .iter()
            .zip(&target)
            .map(|(a, b)| (a ^ b).count_ones() as f64)
            .sum::<f64>()
    };
    let mut first = None;
    let out = run_ga(&config(3), GFT_GENOME_LEN, &[], hamming, |r| {
        first.get_or_insert(r.best_cost);
    })
    .unwrap();
    assert!(out.best_cost < first.unwrap());
    assert_eq!(out.best.genes.len(), GFT_GENOME_LEN);
    assert_eq!(hamming(&out.best), out.best_cost);
    for w in out.history.windows(2) {
        assert!(w[1].best_cost <= w[0].best_cost);
        assert!(w[1].generation == w[0].generation + 1);
    }
}

#[test]
fn same_seed_same_history() {
    let a = run_ga(&config(7), 16, &[], byte_sum, |_| {}).unwrap();
    let b = run_ga(&config(7), 16, &[], byte_sum, |_| {}).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(a.best, b.best);
    let c = run_ga(&config(8), 16, &[], byte_sum, |_| {}).unwrap();
    assert_ne!(a.history, c.history);
}
