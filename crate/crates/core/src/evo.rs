//! Island-model genetic algorithm over byte genomes, plus the decoders that
//! turn genomes into fuzzy-tree controllers and static LQR weights.
//!
//! Each island evolves with tournament selection, one-point crossover,
//! uniform per-gene mutation and elitism. Every `migration_interval`
//! generations the best `migration_count` individuals of each island replace
//! the worst of the next island around a ring.
//!
//! All randomness derives from the master seed through per-(island,
//! generation) streams, and fitness values are gathered by index, so the
//! search is reproducible regardless of how many worker threads evaluate it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::FisSpec;
use crate::gft::{GftController, NormScales, BID_SETS, QGAIN_SETS};
use crate::riccati::{LqrWeights, DEFAULT_R};

const BID_RULES: usize = BID_SETS * BID_SETS;
const QGAIN_RULES: usize = QGAIN_SETS * QGAIN_SETS;
const QGAIN_RULES_START: usize = 2 * BID_RULES;
const BOUNDS_START: usize = QGAIN_RULES_START + 4 * QGAIN_RULES;

/// Genes per fuzzy-tree chromosome: 2×9 bid rules, 4×49 q-gain rules, 4 bound pairs.
pub const GFT_GENOME_LEN: usize = BOUNDS_START + 8;
/// Genes per static-LQR chromosome: one per state weight.
pub const BASELINE_GENOME_LEN: usize = 4;

/// `log10` range of a q-gain FIS's lower bound.
pub const QGAIN_LO_LOG10: (f64, f64) = (-2.0, 3.0);
/// `log10` range of the multiplicative span `out_hi / out_lo`.
pub const QGAIN_SPAN_LOG10: (f64, f64) = (1.0, 5.0);
/// `log10` range of the baseline state weights.
pub const BASELINE_Q_LOG10: (f64, f64) = (-2.0, 6.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaError {
    #[error("invalid GA configuration: {0}")]
    Config(String),
    #[error("seed chromosome has {got} genes, expected {expected}")]
    SeedLength { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Chromosome {
    pub genes: Vec<u8>,
}

impl Chromosome {
    pub fn new(genes: Vec<u8>) -> Self {
        Self { genes }
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }
}

fn unit(gene: u8) -> f64 {
    gene as f64 / 255.0
}

fn log_lerp(gene: u8, (lo, hi): (f64, f64)) -> f64 {
    10f64.powf(lo + (hi - lo) * unit(gene))
}

/// Closest gene to `value` under [`log_lerp`].
fn nearest_log_gene(value: f64, (lo, hi): (f64, f64)) -> u8 {
    let t = (value.log10() - lo) / (hi - lo);
    (t * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Builds the fuzzy-tree controller a GFT chromosome encodes.
///
/// Consequent genes map linearly onto `[0, 1]`. Each q-gain FIS takes
/// `out_lo = 10^lerp(g₀, −2, 3)` and `out_hi = out_lo · 10^(1 + 4·g₁/255)`,
/// so the bounds are ordered for every genome.
pub fn decode_gft(chromosome: &Chromosome) -> GftController {
    assert_eq!(chromosome.len(), GFT_GENOME_LEN, "not a GFT chromosome");
    let g = &chromosome.genes;
    let cons = |range: std::ops::Range<usize>| g[range].iter().map(|&x| unit(x)).collect::<Vec<_>>();

    let bid = |i: usize| {
        let start = i * BID_RULES;
        FisSpec::square(BID_SETS, cons(start..start + BID_RULES), -1.0, 1.0)
            .expect("bid FIS from genes is valid")
    };
    let qgain = |i: usize| {
        let start = QGAIN_RULES_START + i * QGAIN_RULES;
        let lo = log_lerp(g[BOUNDS_START + 2 * i], QGAIN_LO_LOG10);
        let hi = lo * log_lerp(g[BOUNDS_START + 2 * i + 1], QGAIN_SPAN_LOG10);
        FisSpec::square(QGAIN_SETS, cons(start..start + QGAIN_RULES), lo, hi)
            .expect("q-gain FIS from genes is valid")
    };
    GftController::new(
        [bid(0), bid(1)],
        [qgain(0), qgain(1), qgain(2), qgain(3)],
        NormScales::default(),
        DEFAULT_R,
    )
    .expect("decoded controller is valid")
}

/// GFT chromosome whose q-gain FISs output (approximately) constant `q`:
/// every consequent at zero and each lower bound at the gene nearest `q`.
pub fn encode_constant_gft(q: [f64; 4]) -> Chromosome {
    let mut genes = vec![128u8; GFT_GENOME_LEN];
    genes[QGAIN_RULES_START..BOUNDS_START].fill(0);
    for (i, &qi) in q.iter().enumerate() {
        genes[BOUNDS_START + 2 * i] = nearest_log_gene(qi, QGAIN_LO_LOG10);
        genes[BOUNDS_START + 2 * i + 1] = 0;
    }
    Chromosome::new(genes)
}

/// `q_i = 10^lerp(g_i/255, −2, 6)`, `r = 1e-4`.
pub fn decode_baseline(chromosome: &Chromosome) -> LqrWeights {
    assert_eq!(chromosome.len(), BASELINE_GENOME_LEN, "not a baseline chromosome");
    let g = &chromosome.genes;
    LqrWeights::new(
        [0, 1, 2, 3].map(|i| log_lerp(g[i], BASELINE_Q_LOG10)),
        DEFAULT_R,
    )
}

/// Baseline chromosome whose decoded weights are nearest `q`.
pub fn encode_baseline(q: [f64; 4]) -> Chromosome {
    Chromosome::new(q.iter().map(|&v| nearest_log_gene(v, BASELINE_Q_LOG10)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaConfig {
    pub population_size: usize,
    pub n_islands: usize,
    pub n_generations: usize,
    pub migration_interval: usize,
    pub migration_count: usize,
    pub tournament_k: usize,
    pub crossover_rate: f64,
    /// Per-gene probability; `None` means one over the genome length.
    pub mutation_rate: Option<f64>,
    /// Elites kept per island.
    pub elitism_count: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 48,
            n_islands: 4,
            n_generations: 150,
            migration_interval: 25,
            migration_count: 2,
            tournament_k: 3,
            crossover_rate: 0.9,
            mutation_rate: None,
            elitism_count: 2,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), GaError> {
        let err = |msg: &str| Err(GaError::Config(msg.to_string()));
        if self.population_size == 0 || self.n_islands == 0 || self.n_generations == 0 {
            return err("population_size, n_islands and n_generations must be at least 1");
        }
        if self.population_size % self.n_islands != 0 {
            return err("population_size must be divisible by n_islands");
        }
        let per_island = self.population_size / self.n_islands;
        if self.elitism_count >= per_island {
            return err("elitism_count must be smaller than the island population");
        }
        if self.migration_interval == 0 || self.tournament_k == 0 {
            return err("migration_interval and tournament_k must be at least 1");
        }
        if self.migration_count >= per_island {
            return err("migration_count must be smaller than the island population");
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return err("crossover_rate must lie in [0, 1]");
        }
        if let Some(m) = self.mutation_rate {
            if !(0.0..=1.0).contains(&m) {
                return err("mutation_rate must lie in [0, 1]");
            }
        }
        Ok(())
    }

    pub fn island_size(&self) -> usize {
        self.population_size / self.n_islands
    }
}

/// Per-generation summary streamed to the report sink.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    /// Best cost found so far.
    pub best_cost: f64,
    /// Mean cost of the current populations.
    pub mean_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaOutcome {
    pub best: Chromosome,
    pub best_cost: f64,
    pub history: Vec<GenerationRecord>,
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
struct Individual {
    genes: Vec<u8>,
    cost: Option<f64>,
}

impl Individual {
    fn cost(&self) -> f64 {
        self.cost.expect("individual evaluated")
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent RNG stream for a tuple of indices under a master seed.
pub fn derived_rng(seed: u64, stream: &[u64]) -> ChaCha8Rng {
    let mut h = splitmix64(seed);
    for &s in stream {
        h = splitmix64(h ^ splitmix64(s));
    }
    ChaCha8Rng::seed_from_u64(h)
}

fn sanitize(cost: f64) -> f64 {
    if cost.is_nan() {
        f64::MAX
    } else {
        cost.max(0.0)
    }
}

fn evaluate<F>(islands: &mut [Vec<Individual>], cost_fn: &F) -> usize
where
    F: Fn(&Chromosome) -> f64 + Sync,
{
    let pending: Vec<(usize, usize)> = islands
        .iter()
        .enumerate()
        .flat_map(|(i, pop)| {
            pop.iter()
                .enumerate()
                .filter(|(_, ind)| ind.cost.is_none())
                .map(move |(j, _)| (i, j))
        })
        .collect();
    let costs: Vec<f64> = pending
        .par_iter()
        .map(|&(i, j)| sanitize(cost_fn(&Chromosome::new(islands[i][j].genes.clone()))))
        .collect();
    for (&(i, j), cost) in pending.iter().zip(costs) {
        islands[i][j].cost = Some(cost);
    }
    pending.len()
}

fn sort_by_cost(pop: &mut [Individual]) {
    pop.sort_by(|a, b| a.cost().total_cmp(&b.cost()));
}

fn tournament<'a>(pop: &'a [Individual], k: usize, rng: &mut ChaCha8Rng) -> &'a Individual {
    let mut best = &pop[rng.random_range(0..pop.len())];
    for _ in 1..k {
        let cand = &pop[rng.random_range(0..pop.len())];
        if cand.cost() < best.cost() {
            best = cand;
        }
    }
    best
}

fn mutate(genes: &mut [u8], rate: f64, rng: &mut ChaCha8Rng) {
    for g in genes.iter_mut() {
        if rng.random::<f64>() < rate {
            *g = rng.random();
        }
    }
}

fn breed(pop: &mut Vec<Individual>, config: &GaConfig, rate: f64, rng: &mut ChaCha8Rng) {
    sort_by_cost(pop);
    let size = pop.len();
    let mut next: Vec<Individual> = pop[..config.elitism_count].to_vec();
    while next.len() < size {
        let mut a = tournament(pop, config.tournament_k, rng).genes.clone();
        let mut b = tournament(pop, config.tournament_k, rng).genes.clone();
        if a.len() > 1 && rng.random::<f64>() < config.crossover_rate {
            let cut = rng.random_range(1..a.len());
            a[cut..].swap_with_slice(&mut b[cut..]);
        }
        for mut child in [a, b] {
            if next.len() == size {
                break;
            }
            mutate(&mut child, rate, rng);
            next.push(Individual {
                genes: child,
                cost: None,
            });
        }
    }
    *pop = next;
}

/// Ring migration: island `i`'s best replace island `i + 1`'s worst.
fn migrate(islands: &mut [Vec<Individual>], count: usize) {
    let n = islands.len();
    if n < 2 || count == 0 {
        return;
    }
    let emigrants: Vec<Vec<Individual>> = islands
        .iter_mut()
        .map(|pop| {
            sort_by_cost(pop);
            pop[..count].to_vec()
        })
        .collect();
    for (i, group) in emigrants.into_iter().enumerate() {
        let dest = &mut islands[(i + 1) % n];
        let len = dest.len();
        for (slot, ind) in dest[len - count..].iter_mut().zip(group) {
            *slot = ind;
        }
    }
}

fn summarize(
    islands: &[Vec<Individual>],
    best: &mut Option<(f64, Vec<u8>)>,
    generation: usize,
) -> GenerationRecord {
    let mut total = 0.0;
    let mut count = 0usize;
    for ind in islands.iter().flatten() {
        let c = ind.cost();
        total += c;
        count += 1;
        if best.as_ref().is_none_or(|(bc, _)| c < *bc) {
            *best = Some((c, ind.genes.clone()));
        }
    }
    GenerationRecord {
        generation,
        best_cost: best.as_ref().map(|b| b.0).unwrap_or(f64::MAX),
        mean_cost: total / count.max(1) as f64,
    }
}

/// Minimizes `cost_fn` over genomes of `genome_len` bytes.
///
/// `seeds` replace random members of the initial populations, dealt
/// round-robin across islands. `sink` receives one record per generation.
pub fn run_ga<F>(
    config: &GaConfig,
    genome_len: usize,
    seeds: &[Chromosome],
    cost_fn: F,
    mut sink: impl FnMut(&GenerationRecord),
) -> Result<GaOutcome, GaError>
where
    F: Fn(&Chromosome) -> f64 + Sync,
{
    config.validate()?;
    if genome_len == 0 {
        return Err(GaError::Config("genome length must be at least 1".into()));
    }
    if let Some(bad) = seeds.iter().find(|s| s.len() != genome_len) {
        return Err(GaError::SeedLength {
            expected: genome_len,
            got: bad.len(),
        });
    }
    let rate = config.mutation_rate.unwrap_or(1.0 / genome_len as f64);
    let per_island = config.island_size();

    let mut islands: Vec<Vec<Individual>> = (0..config.n_islands)
        .map(|i| {
            let mut rng = derived_rng(config.seed, &[i as u64, 0]);
            (0..per_island)
                .map(|_| Individual {
                    genes: (0..genome_len).map(|_| rng.random()).collect(),
                    cost: None,
                })
                .collect()
        })
        .collect();
    for (k, seed) in seeds.iter().take(config.population_size).enumerate() {
        islands[k % config.n_islands][k / config.n_islands] = Individual {
            genes: seed.genes.clone(),
            cost: None,
        };
    }

    let mut evaluations = evaluate(&mut islands, &cost_fn);
    let mut best = None;
    let mut history = Vec::with_capacity(config.n_generations);
    let rec = summarize(&islands, &mut best, 0);
    sink(&rec);
    history.push(rec);

    for generation in 1..config.n_generations {
        if generation % config.migration_interval == 0 {
            migrate(&mut islands, config.migration_count);
        }
        for (i, pop) in islands.iter_mut().enumerate() {
            let mut rng = derived_rng(config.seed, &[i as u64, generation as u64]);
            breed(pop, config, rate, &mut rng);
        }
        evaluations += evaluate(&mut islands, &cost_fn);
        let rec = summarize(&islands, &mut best, generation);
        sink(&rec);
        history.push(rec);
    }

    let (best_cost, genes) = best.expect("at least one evaluation");
    Ok(GaOutcome {
        best: Chromosome::new(genes),
        best_cost,
        history,
        evaluations,
    })
}
