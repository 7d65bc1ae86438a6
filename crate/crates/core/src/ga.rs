//! Genetic algorithm over per-task CPU/drop codes.
//!
//! A chromosome stores, for every task in [`TaskSet`] order, a
//! `bits_per_task(M)`-bit big-endian code: 0 drops the task, `1..=M` names its
//! CPU, larger codes also drop it. Decoding sequences each CPU's tasks twice,
//! once in arrival order and once shortest-first among ready tasks, starts
//! every task as early as possible, drops tasks that would miss their deadline
//! and keeps the cheaper sequence for that CPU. Both greedy baselines encode
//! to chromosomes that decode back to (at most) their own cost.
//!
//! The search is generational: tournament selection, two-point crossover of
//! consecutive pairs, per-bit flip mutation, and a size-one hall of fame that
//! is what [`run_ga`] returns.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::greedy::{schedule_fcfs, schedule_stf};
use crate::model::{ObjectiveWeights, Schedule, Slot, TaskSet};
use crate::objective::{schedule_cost, Cost};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaParams {
    pub population: usize,
    pub generations: usize,
    /// Per-bit flip probability.
    pub mutation_rate: f64,
    pub tournament_size: usize,
    pub seed: u64,
    /// Put the FCFS and STF schedules into the initial population.
    pub seed_with_greedy: bool,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            population: 100,
            generations: 100,
            mutation_rate: 0.01,
            tournament_size: 3,
            seed: 0,
            seed_with_greedy: true,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::InvalidParameter("population must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(Error::InvalidParameter("mutation_rate must lie in [0, 1]".into()));
        }
        if self.tournament_size == 0 {
            return Err(Error::InvalidParameter("tournament_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// `ceil(log2(M + 1))`.
pub fn bits_per_task(m_cpus: u32) -> usize {
    (u32::BITS - m_cpus.leading_zeros()) as usize
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chromosome {
    bits: Vec<bool>,
}

impl Chromosome {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Chromosome { bits }
    }

    /// Packs one code per task.
    pub fn from_codes(codes: &[u32], m_cpus: u32) -> Self {
        let width = bits_per_task(m_cpus);
        let mut bits = Vec::with_capacity(codes.len() * width);
        for &code in codes {
            for b in (0..width).rev() {
                bits.push(code >> b & 1 == 1);
            }
        }
        Chromosome { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn code(&self, task_index: usize, m_cpus: u32) -> u32 {
        let width = bits_per_task(m_cpus);
        self.bits[task_index * width..(task_index + 1) * width].iter().fold(0, |acc, &b| acc << 1 | b as u32)
    }
}

/// The chromosome whose codes are the CPUs of `schedule` (0 for dropped tasks).
pub fn encode(schedule: &Schedule, tasks: &TaskSet) -> Result<Chromosome> {
    let codes: Vec<u32> = schedule.decisions(tasks)?.iter().map(|d| d.map_or(0, |(cpu, _)| cpu)).collect();
    Ok(Chromosome::from_codes(&codes, schedule.m_cpus))
}

pub struct Decoded {
    pub schedule: Schedule,
    pub cost: Cost,
}

pub fn decode(chromosome: &Chromosome, tasks: &TaskSet, m_cpus: u32, weights: ObjectiveWeights) -> Result<Decoded> {
    let expected = tasks.len() * bits_per_task(m_cpus);
    if chromosome.len() != expected {
        return Err(Error::ChromosomeLength { expected, got: chromosome.len() });
    }
    let mut per_cpu: Vec<Vec<usize>> = vec![Vec::new(); m_cpus as usize];
    let mut cost = Cost::zero(weights, tasks.len());
    for idx in 0..tasks.len() {
        match chromosome.code(idx, m_cpus) {
            code @ 1.. if code <= m_cpus => per_cpu[code as usize - 1].push(idx),
            _ => cost.push_drop(),
        }
    }

    let mut decisions: Vec<Option<(u32, Slot)>> = vec![None; tasks.len()];
    let mut scratch = vec![None; tasks.len()];
    for (j, members) in per_cpu.iter().enumerate() {
        let cpu = j as u32 + 1;
        let in_order = sequence_in_order(tasks, members, cpu, &mut decisions);
        let mut best = Cost::zero(weights, tasks.len());
        accumulate(tasks, members, &decisions, &mut best)?;
        if in_order {
            // nobody waits in arrival order, the other sequence cannot do better
            cost = merge(cost, &best);
            continue;
        }
        sequence_shortest_first(tasks, members, cpu, &mut scratch);
        let mut alt = Cost::zero(weights, tasks.len());
        accumulate(tasks, members, &scratch, &mut alt)?;
        if alt.is_better_than(&best) {
            for &i in members {
                decisions[i] = scratch[i];
            }
            best = alt;
        }
        cost = merge(cost, &best);
    }
    Ok(Decoded { schedule: Schedule::from_decisions(tasks, m_cpus, &decisions), cost })
}

fn merge(mut into: Cost, part: &Cost) -> Cost {
    into.absorb(part);
    into
}

fn accumulate(tasks: &TaskSet, members: &[usize], decisions: &[Option<(u32, Slot)>], cost: &mut Cost) -> Result<()> {
    for &i in members {
        let t = &tasks.tasks()[i];
        match decisions[i] {
            Some((_, start)) => cost.push_wait(t.id, start - t.arrival, t.slack())?,
            None => cost.push_drop(),
        }
    }
    Ok(())
}

/// Arrival-order sequencing. Returns true when no task waited or was dropped.
fn sequence_in_order(tasks: &TaskSet, members: &[usize], cpu: u32, out: &mut [Option<(u32, Slot)>]) -> bool {
    let mut free = Slot::MIN;
    let mut clean = true;
    for &i in members {
        let t = &tasks.tasks()[i];
        let start = free.max(t.arrival);
        if start > t.latest_start() {
            out[i] = None;
            clean = false;
        } else {
            clean &= start == t.arrival;
            out[i] = Some((cpu, start));
            free = start + t.proc_time;
        }
    }
    clean
}

/// Non-delay list scheduling, shortest ready task first.
fn sequence_shortest_first(tasks: &TaskSet, members: &[usize], cpu: u32, out: &mut [Option<(u32, Slot)>]) {
    let list = tasks.tasks();
    let mut ready: BTreeSet<(Slot, Slot, u32, usize)> = BTreeSet::new();
    let mut next = 0;
    let mut now = Slot::MIN;
    loop {
        if ready.is_empty() {
            match members.get(next) {
                Some(&i) => now = now.max(list[i].arrival),
                None => break,
            }
        }
        while let Some(&i) = members.get(next) {
            if list[i].arrival > now {
                break;
            }
            ready.insert((list[i].proc_time, list[i].arrival, list[i].id, i));
            next += 1;
        }
        let (_, _, _, i) = ready.pop_first().expect("at least one ready task");
        let t = &list[i];
        if now > t.latest_start() {
            out[i] = None;
        } else {
            out[i] = Some((cpu, now));
            now += t.proc_time;
        }
    }
}

#[derive(Debug, Clone)]
pub struct GaOutcome {
    pub schedule: Schedule,
    pub objective: f64,
    pub cost: Cost,
    /// Best-ever objective after the initial population and after each generation.
    pub fitness_history: Vec<f64>,
}

pub fn run_ga(tasks: &TaskSet, m_cpus: u32, weights: ObjectiveWeights, params: &GaParams) -> Result<GaOutcome> {
    params.validate()?;
    if m_cpus == 0 {
        return Err(Error::InvalidParameter("m_cpus must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let genome_len = tasks.len() * bits_per_task(m_cpus);

    let mut population: Vec<Chromosome> = Vec::with_capacity(params.population);
    if params.seed_with_greedy {
        population.push(encode(&schedule_fcfs(tasks, m_cpus), tasks)?);
        population.push(encode(&schedule_stf(tasks, m_cpus), tasks)?);
    }
    while population.len() < params.population {
        population.push(Chromosome::from_bits((0..genome_len).map(|_| rng.random::<bool>()).collect()));
    }

    let mut fitness = evaluate_all(&population, tasks, m_cpus, weights)?;
    let mut hall = update_hall(None, &population, &fitness, tasks, weights)?;
    let mut history = Vec::with_capacity(params.generations + 1);
    history.push(hall.cost.value());

    for _ in 0..params.generations {
        let mut offspring: Vec<Chromosome> = (0..params.population)
            .map(|_| population[tournament(&fitness, params.tournament_size, &mut rng)].clone())
            .collect();
        for pair in offspring.chunks_exact_mut(2) {
            let (left, right) = pair.split_at_mut(1);
            two_point_crossover(&mut left[0], &mut right[0], &mut rng);
        }
        for child in &mut offspring {
            mutate(child, params.mutation_rate, &mut rng);
        }
        population = offspring;
        fitness = evaluate_all(&population, tasks, m_cpus, weights)?;
        hall = update_hall(Some(hall), &population, &fitness, tasks, weights)?;
        history.push(hall.cost.value());
    }

    Ok(GaOutcome { objective: hall.cost.value(), schedule: hall.schedule, cost: hall.cost, fitness_history: history })
}

struct Hall {
    chromosome: Chromosome,
    schedule: Schedule,
    /// Recomputed in task order, so it matches `evaluate_objective` bit for bit.
    cost: Cost,
}

fn evaluate_all(population: &[Chromosome], tasks: &TaskSet, m: u32, w: ObjectiveWeights) -> Result<Vec<Decoded>> {
    population.iter().map(|c| decode(c, tasks, m, w)).collect()
}

fn update_hall(
    hall: Option<Hall>,
    population: &[Chromosome],
    fitness: &[Decoded],
    tasks: &TaskSet,
    weights: ObjectiveWeights,
) -> Result<Hall> {
    let mut best: Option<usize> = None;
    for (i, d) in fitness.iter().enumerate() {
        let better = match (best, &hall) {
            (Some(b), _) => d.cost.is_better_than(&fitness[b].cost),
            (None, None) => true,
            (None, Some(h)) => {
                let (a, b) = (d.cost.value(), h.cost.value());
                // cheap float filter before the exact comparison
                a <= b + 1e-9 * (1.0 + b.abs()) && population[i] != h.chromosome && d.cost.is_better_than(&h.cost)
            }
        };
        if better {
            best = Some(i);
        }
    }
    match (best, hall) {
        (Some(i), _) => {
            let schedule = fitness[i].schedule.clone();
            let cost = schedule_cost(&schedule, tasks, weights)?;
            Ok(Hall { chromosome: population[i].clone(), schedule, cost })
        }
        (None, Some(h)) => Ok(h),
        (None, None) => Err(Error::InvalidParameter("empty population".into())),
    }
}

fn tournament<R: Rng>(fitness: &[Decoded], size: usize, rng: &mut R) -> usize {
    let value = |i: usize| fitness[i].cost.value();
    let mut winner = rng.random_range(0..fitness.len());
    for _ in 1..size {
        let challenger = rng.random_range(0..fitness.len());
        if value(challenger) < value(winner) {
            winner = challenger;
        }
    }
    winner
}

/// Swaps the segment between two random cut points.
pub fn two_point_crossover<R: Rng>(a: &mut Chromosome, b: &mut Chromosome, rng: &mut R) {
    let size = a.bits.len().min(b.bits.len());
    if size < 2 {
        return;
    }
    let mut lo = rng.random_range(1..=size);
    let mut hi = rng.random_range(1..size);
    if hi >= lo {
        hi += 1;
    } else {
        core::mem::swap(&mut lo, &mut hi);
    }
    a.bits[lo..hi].swap_with_slice(&mut b.bits[lo..hi]);
}

pub fn mutate<R: Rng>(c: &mut Chromosome, rate: f64, rng: &mut R) {
    for bit in &mut c.bits {
        if rng.random::<f64>() < rate {
            *bit = !*bit;
        }
    }
}
