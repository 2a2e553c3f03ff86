// SPDX-License-Identifier: Apache-2.0

//! NSGA-II over fixed-length bit strings, and its use for choosing which
//! neurons become single-cycle.
//!
//! Both objectives are maximized. Constraints use constrained domination:
//! a feasible solution dominates every infeasible one, and among infeasible
//! solutions the smaller violation wins.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::approx::{plan_candidates, HybridEvaluator, HybridPlan, NeuronApproxPlan};
use crate::quant::QuantizedModel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub objectives: [f64; 2],
    /// 0 when feasible.
    pub violation: f64,
}

impl Evaluation {
    pub fn feasible(&self) -> bool {
        self.violation <= 0.0
    }
}

pub fn constrained_dominates(a: &Evaluation, b: &Evaluation) -> bool {
    match (a.feasible(), b.feasible()) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => a.violation < b.violation,
        (true, true) => {
            let ge = a.objectives.iter().zip(&b.objectives).all(|(x, y)| x >= y);
            let gt = a.objectives.iter().zip(&b.objectives).any(|(x, y)| x > y);
            ge && gt
        }
    }
}

/// Fronts of indices into `evals`, best first.
pub fn non_dominated_sort(evals: &[Evaluation]) -> Vec<Vec<usize>> {
    let n = evals.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominates: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if constrained_dominates(&evals[i], &evals[j]) {
                dominates[i].push(j);
                dominated_by[j] += 1;
            } else if constrained_dominates(&evals[j], &evals[i]) {
                dominates[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of `front` (same order).
pub fn crowding_distance(evals: &[Evaluation], front: &[usize]) -> Vec<f64> {
    let mut dist = vec![0.0; front.len()];
    if front.len() <= 2 {
        return vec![f64::INFINITY; front.len()];
    }
    for m in 0..2 {
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| {
            evals[front[a]].objectives[m].total_cmp(&evals[front[b]].objectives[m])
        });
        let lo = evals[front[order[0]]].objectives[m];
        let hi = evals[front[*order.last().unwrap()]].objectives[m];
        dist[order[0]] = f64::INFINITY;
        dist[*order.last().unwrap()] = f64::INFINITY;
        if hi > lo {
            for k in 1..order.len() - 1 {
                let prev = evals[front[order[k - 1]]].objectives[m];
                let next = evals[front[order[k + 1]]].objectives[m];
                dist[order[k]] += (next - prev) / (hi - lo);
            }
        }
    }
    dist
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genes: Vec<bool>,
    pub eval: Evaluation,
    pub rank: usize,
    pub crowding: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nsga2Params {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub seed: u64,
}

fn rank_and_truncate(mut pool: Vec<Individual>, keep: usize) -> Vec<Individual> {
    let evals: Vec<Evaluation> = pool.iter().map(|i| i.eval).collect();
    let fronts = non_dominated_sort(&evals);
    let mut order = Vec::with_capacity(pool.len());
    for (rank, front) in fronts.iter().enumerate() {
        let d = crowding_distance(&evals, front);
        for (k, &i) in front.iter().enumerate() {
            pool[i].rank = rank;
            pool[i].crowding = d[k];
        }
        let mut f = front.clone();
        f.sort_by(|&a, &b| pool[b].crowding.total_cmp(&pool[a].crowding));
        order.extend(f);
    }
    order.truncate(keep);
    let mut slots: Vec<Option<Individual>> = pool.into_iter().map(Some).collect();
    order.into_iter().map(|i| slots[i].take().unwrap()).collect()
}

fn crowded_better(a: &Individual, b: &Individual) -> bool {
    match a.rank.cmp(&b.rank) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => a.crowding > b.crowding,
    }
}

/// Run NSGA-II from `initial`. Genes flagged in `frozen` are held at
/// `false`. `observe` sees the surviving population after every generation
/// (generation 0 is the ranked initial population).
pub fn run<E, O>(
    params: &Nsga2Params,
    initial: Vec<Vec<bool>>,
    frozen: &[bool],
    mut evaluate: E,
    mut observe: O,
) -> Result<Vec<Individual>>
where
    E: FnMut(&[bool]) -> Evaluation,
    O: FnMut(usize, &[Individual]),
{
    if params.population < 2 {
        return Err(Error::InvalidConfig("population must be at least 2".into()));
    }
    if !(0.0..=1.0).contains(&params.crossover_rate) || !(0.0..=1.0).contains(&params.mutation_rate) {
        return Err(Error::InvalidConfig("rates must lie in [0, 1]".into()));
    }
    let len = frozen.len();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let make = |genes: Vec<bool>, evaluate: &mut E| Individual {
        eval: evaluate(&genes),
        genes,
        rank: 0,
        crowding: 0.0,
    };

    let pool: Vec<Individual> = initial
        .into_iter()
        .map(|mut g| {
            g.iter_mut().zip(frozen).for_each(|(b, &f)| *b &= !f);
            make(g, &mut evaluate)
        })
        .collect();
    let mut population = rank_and_truncate(pool, params.population);
    observe(0, &population);

    for generation in 1..=params.generations {
        let mut offspring = Vec::with_capacity(params.population);
        while offspring.len() < params.population {
            let mut pick = || {
                let a = rng.random_range(0..population.len());
                let b = rng.random_range(0..population.len());
                if crowded_better(&population[b], &population[a]) {
                    b
                } else {
                    a
                }
            };
            let (pa, pb) = (pick(), pick());
            let mut c1 = population[pa].genes.clone();
            let mut c2 = population[pb].genes.clone();
            if len > 1 && rng.random_bool(params.crossover_rate) {
                let cut = rng.random_range(1..len);
                c1[cut..].swap_with_slice(&mut c2[cut..]);
            }
            for child in [&mut c1, &mut c2] {
                for (bit, &f) in child.iter_mut().zip(frozen) {
                    if rng.random_bool(params.mutation_rate) {
                        *bit = !*bit;
                    }
                    *bit &= !f;
                }
            }
            offspring.push(make(c1, &mut evaluate));
            if offspring.len() < params.population {
                offspring.push(make(c2, &mut evaluate));
            }
        }
        let mut pool = population;
        pool.extend(offspring);
        population = rank_and_truncate(pool, params.population);
        observe(generation, &population);
    }
    Ok(population)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    /// Per-bit flip probability; `None` means `1 / mask length`.
    pub mutation_rate: Option<f64>,
    pub seed: u64,
    /// Tolerated accuracy loss as a fraction, e.g. `0.01`.
    pub max_drop: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 50,
            generations: 100,
            crossover_rate: 0.9,
            mutation_rate: None,
            seed: 0,
            max_drop: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaOutcome {
    /// Non-dominated feasible plans of the final population, by count.
    pub front: Vec<HybridPlan>,
    pub chosen: HybridPlan,
    /// Set when no feasible plan approximates any neuron.
    pub warning: bool,
    /// Largest feasible approximated count in the population, per generation.
    pub best_count_history: Vec<usize>,
    pub evaluations: usize,
    pub candidates: Vec<Option<NeuronApproxPlan>>,
}

fn count(mask: &[bool]) -> usize {
    mask.iter().filter(|&&b| b).count()
}

/// Minimum number of correct samples that still satisfies the drop bound.
fn required_correct(baseline_correct: usize, max_drop: f64, n: usize) -> usize {
    let need = baseline_correct as f64 - max_drop * n as f64;
    libm::ceil(need - 1e-9).max(0.0) as usize
}

/// Choose approximated neurons. `samples` are circuit-input rows of the
/// split the accuracy constraint is measured on (the train split).
pub fn nsga2_select(
    qmodel: &QuantizedModel,
    samples: &[Vec<u8>],
    labels: &[usize],
    config: &GaConfig,
) -> Result<GaOutcome> {
    if !(0.0..=1.0).contains(&config.max_drop) {
        return Err(Error::InvalidConfig("max_drop must lie in [0, 1]".into()));
    }
    let candidates = plan_candidates(qmodel, samples)?;
    let evaluator = HybridEvaluator::new(qmodel, &candidates, samples, labels)?;
    let n = evaluator.n_samples();
    let len = candidates.len();
    let frozen: Vec<bool> = candidates.iter().map(Option::is_none).collect();
    let eligible: Vec<usize> = (0..len).filter(|&i| !frozen[i]).collect();

    let baseline_correct = evaluator.correct(&vec![false; len]);
    let baseline = baseline_correct as f64 / n as f64;
    let required = required_correct(baseline_correct, config.max_drop, n);

    let mut cache: BTreeMap<Vec<bool>, usize> = BTreeMap::new();
    let mut evaluate = |mask: &[bool]| -> Evaluation {
        let correct = *cache
            .entry(mask.to_vec())
            .or_insert_with(|| evaluator.correct(mask));
        Evaluation {
            objectives: [count(mask) as f64, correct as f64 / n as f64],
            violation: required.saturating_sub(correct) as f64,
        }
    };

    let mut history = Vec::new();
    let finalize = |mask: Vec<bool>, correct: usize| -> Result<HybridPlan> {
        let mut p = HybridPlan::from_mask(&mask, &candidates)?;
        p.accuracy = correct as f64 / n as f64;
        p.baseline_accuracy = baseline;
        p.max_drop = config.max_drop;
        Ok(p)
    };

    let mut front_masks: Vec<Vec<bool>> = Vec::new();
    if !eligible.is_empty() && config.population >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
        let one_hot = |i: usize| {
            let mut m = vec![false; len];
            m[i] = true;
            m
        };
        let mut initial: Vec<Vec<bool>> = if config.population >= eligible.len() {
            let mut v: Vec<Vec<bool>> = eligible.iter().map(|&i| one_hot(i)).collect();
            while v.len() < config.population {
                v.push(one_hot(eligible[rng.random_range(0..eligible.len())]));
            }
            v
        } else {
            let mut e = eligible.clone();
            e.shuffle(&mut rng);
            e[..config.population].iter().map(|&i| one_hot(i)).collect()
        };
        initial.truncate(config.population);

        let params = Nsga2Params {
            population: config.population,
            generations: config.generations,
            crossover_rate: config.crossover_rate,
            mutation_rate: config.mutation_rate.unwrap_or(1.0 / len as f64),
            seed: config.seed,
        };
        let population = run(&params, initial, &frozen, &mut evaluate, |_, pop| {
            let best = pop
                .iter()
                .filter(|i| i.eval.feasible())
                .map(|i| count(&i.genes))
                .max()
                .unwrap_or(0);
            history.push(best);
        })?;
        for ind in population.iter().filter(|i| i.rank == 0 && i.eval.feasible()) {
            if !front_masks.contains(&ind.genes) {
                front_masks.push(ind.genes.clone());
            }
        }
    }

    // best feasible mask seen by the search: max count, then accuracy,
    // then the lexicographically smallest mask
    let all_false = vec![false; len];
    cache.entry(all_false.clone()).or_insert(baseline_correct);
    let (mask, correct) = cache
        .iter()
        .filter(|(_, &c)| c >= required)
        .max_by(|(ma, ca), (mb, cb)| {
            count(ma)
                .cmp(&count(mb))
                .then(ca.cmp(cb))
                .then(mb.cmp(ma))
        })
        .map(|(m, &c)| (m.clone(), c))
        .unwrap_or((all_false, baseline_correct));
    let evaluations = cache.len();

    front_masks.sort_by(|a, b| count(a).cmp(&count(b)).then(a.cmp(b)));
    let front = front_masks
        .into_iter()
        .map(|m| {
            let c = cache[&m];
            finalize(m, c)
        })
        .collect::<Result<Vec<_>>>()?;
    let warning = count(&mask) == 0;
    let chosen = finalize(mask, correct)?;
    Ok(GaOutcome {
        front,
        chosen,
        warning,
        best_count_history: history,
        evaluations,
        candidates,
    })
}
