//! Maximum sum throughput by a real-coded genetic algorithm.
//!
//! Individuals are gene vectors in `[0, 1]^K` mapped to powers either
//! linearly (`P = g P_T`) or on a dB scale spanning [`LOG_SPAN_DB`] below
//! `P_T`, with `g = 0` meaning silence in both cases. The initial population
//! contains all corner allocations (everyone at full power, everyone silent,
//! each pair alone at full power) so elitism guarantees the result is never
//! worse than the best corner.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::network::{Network, PowerAllocation};
use crate::rng::{stream, Purpose};

/// Dynamic range of the log-domain power mapping.
pub const LOG_SPAN_DB: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaParams {
    /// Population size; `None` means `4 K`.
    pub population: Option<usize>,
    pub generations: usize,
    pub crossover_rate: f64,
    /// Per-gene mutation probability; `None` means `1 / K`.
    pub mutation_rate: Option<f64>,
    /// Mutation step as a fraction of the gene range.
    pub mutation_sigma: f64,
    pub blend_alpha: f64,
    pub tournament: usize,
    pub elitism: usize,
    pub log_domain: bool,
    pub seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population: None,
            generations: 100,
            crossover_rate: 0.8,
            mutation_rate: None,
            mutation_sigma: 0.1,
            blend_alpha: 0.5,
            tournament: 2,
            elitism: 2,
            log_domain: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaResult {
    pub allocation: PowerAllocation,
    pub mst_bps: f64,
    pub evaluations: usize,
}

fn to_power(g: f64, p_t: f64, log: bool) -> f64 {
    if g <= 0.0 {
        0.0
    } else if log {
        p_t * 10f64.powf(-LOG_SPAN_DB * (1.0 - g) / 10.0)
    } else {
        g * p_t
    }
}

struct Individual {
    genes: Vec<f64>,
    fitness: f64,
}

pub fn maximize_sum_throughput(net: &Network, ga: &GaParams) -> GaResult {
    let k = net.k();
    assert!(k >= 1, "need at least one pair");
    let pop_size = ga.population.unwrap_or(4 * k).max(2);
    let mut_rate = ga.mutation_rate.unwrap_or(1.0 / k as f64);
    let elite = ga.elitism.clamp(1, pop_size);
    let mut rng = stream(ga.seed, Purpose::Genetic, k as u64);
    let mutation = Normal::new(0.0, ga.mutation_sigma).expect("finite mutation sigma");

    let mut powers = vec![0.0; k];
    let mut evaluations = 0usize;
    let mut eval = |genes: &[f64], evaluations: &mut usize| {
        for (p, &g) in powers.iter_mut().zip(genes) {
            *p = to_power(g, net.p_t, ga.log_domain);
        }
        *evaluations += 1;
        net.sum_throughput(&powers)
    };

    let mut seeds: Vec<Vec<f64>> = vec![vec![1.0; k], vec![0.0; k]];
    seeds.extend((0..k).map(|j| {
        let mut g = vec![0.0; k];
        g[j] = 1.0;
        g
    }));
    seeds.truncate(pop_size);
    while seeds.len() < pop_size {
        seeds.push((0..k).map(|_| rng.random::<f64>()).collect());
    }
    let mut pop: Vec<Individual> = seeds
        .into_iter()
        .map(|genes| {
            let fitness = eval(&genes, &mut evaluations);
            Individual { genes, fitness }
        })
        .collect();

    let tournament = |pop: &[Individual], rng: &mut crate::rng::SimRng| -> usize {
        let mut best = rng.random_range(0..pop.len());
        for _ in 1..ga.tournament.max(1) {
            let c = rng.random_range(0..pop.len());
            if pop[c].fitness > pop[best].fitness {
                best = c;
            }
        }
        best
    };

    for _ in 0..ga.generations {
        // stable sort keeps earlier individuals ahead on ties
        pop.sort_by(|a, b| b.fitness.partial_cmp(&a.fitness).unwrap());
        let mut next: Vec<Vec<f64>> = pop[..elite].iter().map(|i| i.genes.clone()).collect();
        while next.len() < pop_size {
            let a = &pop[tournament(&pop, &mut rng)].genes;
            let b = &pop[tournament(&pop, &mut rng)].genes;
            let (mut c1, mut c2) = (a.clone(), b.clone());
            if rng.random::<f64>() < ga.crossover_rate {
                for j in 0..k {
                    let (lo, hi) = if a[j] < b[j] { (a[j], b[j]) } else { (b[j], a[j]) };
                    let span = hi - lo;
                    let (l, h) = (lo - ga.blend_alpha * span, hi + ga.blend_alpha * span);
                    c1[j] = rng.random_range(l..=h).clamp(0.0, 1.0);
                    c2[j] = rng.random_range(l..=h).clamp(0.0, 1.0);
                }
            }
            for c in [&mut c1, &mut c2] {
                for g in c.iter_mut() {
                    if rng.random::<f64>() < mut_rate {
                        *g = (*g + mutation.sample(&mut rng)).clamp(0.0, 1.0);
                    }
                }
            }
            next.push(c1);
            if next.len() < pop_size {
                next.push(c2);
            }
        }
        let carried: Vec<f64> = pop[..elite].iter().map(|i| i.fitness).collect();
        pop = next
            .into_iter()
            .enumerate()
            .map(|(i, genes)| {
                let fitness = if i < elite {
                    carried[i]
                } else {
                    eval(&genes, &mut evaluations)
                };
                Individual { genes, fitness }
            })
            .collect();
    }

    let best = pop
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| a.fitness.partial_cmp(&b.fitness).unwrap().then(ib.cmp(ia)))
        .map(|(_, i)| i)
        .unwrap();
    GaResult {
        allocation: PowerAllocation {
            p: best
                .genes
                .iter()
                .map(|&g| to_power(g, net.p_t, ga.log_domain))
                .collect(),
        },
        mst_bps: best.fitness,
        evaluations,
    }
}
