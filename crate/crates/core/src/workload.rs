//! Seeded workload generation.
//!
//! Each user emits `tasks_per_user` tasks with exponential inter-generation
//! gaps. A task reaches the server after the packet transmission delay; its
//! processing time and a multiplicative slack factor are drawn from
//! configurable distributions, and its deadline is
//! `arrival + proc_time * slack_factor`. All times are rounded to the slot
//! resolution: arrival and processing time up, the deadline offset down.
//!
//! Every user draws from its own ChaCha stream keyed by `(seed, user_id)`, so
//! the output is bit-identical across platforms for a given configuration.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{Slot, SlotDuration, Task, TaskSet, MAX_HORIZON};
use crate::{Error, Result};

/// A scalar distribution, parameters in the unit of the sampled quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Distribution {
    Constant { value: f64 },
    Uniform { low: f64, high: f64 },
}

impl Distribution {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Distribution::Constant { value } => value,
            Distribution::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
        }
    }

    fn support(&self) -> (f64, f64) {
        match *self {
            Distribution::Constant { value } => (value, value),
            Distribution::Uniform { low, high } => (low, high),
        }
    }

    fn check(&self, what: &str, min: f64, strict: bool) -> Result<()> {
        let (lo, hi) = self.support();
        let ok = lo.is_finite() && hi.is_finite() && lo <= hi && if strict { lo > min } else { lo >= min };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("{what} distribution {self:?} must lie above {min}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadConfig {
    pub n_users: u32,
    pub tasks_per_user: u32,
    /// Poisson rate per user, tasks per ms.
    pub arrival_rate_per_ms: f64,
    pub packet_bits: u64,
    pub datarate_bits_per_ms: u64,
    /// Processing time, ms.
    pub proc_time_ms: Distribution,
    /// Deadline offset as a multiple of the processing time (≥ 1).
    pub slack_factor: Distribution,
    /// Slot resolution, µs.
    pub slot_us: u64,
    pub seed: u64,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig {
            n_users: 20,
            tasks_per_user: 5,
            arrival_rate_per_ms: 0.005,
            packet_bits: 1000,
            datarate_bits_per_ms: 50_000,
            proc_time_ms: Distribution::Uniform { low: 10.0, high: 100.0 },
            slack_factor: Distribution::Uniform { low: 1.5, high: 4.0 },
            slot_us: 1000,
            seed: 0,
        }
    }
}

impl WorkloadConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.n_users == 0 || self.tasks_per_user == 0 {
            return bad("n_users and tasks_per_user must be at least 1");
        }
        if !(self.arrival_rate_per_ms.is_finite() && self.arrival_rate_per_ms > 0.0) {
            return bad("arrival_rate_per_ms must be positive");
        }
        if self.packet_bits == 0 || self.datarate_bits_per_ms == 0 {
            return bad("packet_bits and datarate_bits_per_ms must be positive");
        }
        self.slot()?;
        self.proc_time_ms.check("proc_time_ms", 0.0, true)?;
        self.slack_factor.check("slack_factor", 1.0, false)
    }

    pub fn slot(&self) -> Result<SlotDuration> {
        SlotDuration::from_micros(self.slot_us)
    }

    pub fn n_tasks(&self) -> usize {
        self.n_users as usize * self.tasks_per_user as usize
    }
}

/// Packet transmission time in slots, rounded up to the slot resolution.
pub fn transmission_delay(packet_bits: u64, datarate_bits_per_ms: u64, slot: SlotDuration) -> Slot {
    assert!(datarate_bits_per_ms > 0, "datarate must be positive");
    let num = packet_bits as u128 * 1000;
    let den = datarate_bits_per_ms as u128 * slot.as_micros() as u128;
    num.div_ceil(den) as Slot
}

/// Generation instants (ms) of a Poisson process.
pub struct PoissonArrivals<R> {
    rng: R,
    rate_per_ms: f64,
    clock_ms: f64,
}

impl<R: Rng> PoissonArrivals<R> {
    pub fn new(rng: R, rate_per_ms: f64) -> Self {
        PoissonArrivals { rng, rate_per_ms, clock_ms: 0.0 }
    }

    pub fn rng(&mut self) -> &mut R {
        &mut self.rng
    }
}

impl<R: Rng> Iterator for PoissonArrivals<R> {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let u: f64 = self.rng.random();
        self.clock_ms += -libm::log1p(-u) / self.rate_per_ms;
        Some(self.clock_ms)
    }
}

/// RNG stream for one user.
pub fn user_rng(seed: u64, user_id: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(user_id as u64);
    rng
}

pub fn generate_workload(config: &WorkloadConfig) -> Result<TaskSet> {
    config.validate()?;
    let slot = config.slot()?;
    let tx = transmission_delay(config.packet_bits, config.datarate_bits_per_ms, slot);
    let mut tasks = Vec::with_capacity(config.n_tasks());

    for user in 0..config.n_users {
        let mut arrivals = PoissonArrivals::new(user_rng(config.seed, user), config.arrival_rate_per_ms);
        for k in 0..config.tasks_per_user {
            let generated_ms = arrivals.next().expect("infinite process");
            let proc_ms = config.proc_time_ms.sample(arrivals.rng());
            let factor = config.slack_factor.sample(arrivals.rng());

            let arrival = slot.ceil_slots(generated_ms) + tx as f64;
            let proc_time = slot.ceil_slots(proc_ms).max(1.0);
            let deadline = arrival + libm::floor(proc_time * factor).max(proc_time);
            // also rejects NaN
            if deadline.partial_cmp(&(MAX_HORIZON as f64)) != Some(core::cmp::Ordering::Less) {
                return Err(Error::HorizonOverflow(deadline as u64));
            }
            tasks.push(Task {
                id: user * config.tasks_per_user + k,
                user_id: user,
                arrival: arrival as Slot,
                proc_time: proc_time as Slot,
                deadline: deadline as Slot,
            });
        }
    }
    Ok(TaskSet::new(tasks, slot)?.with_config(config.clone()))
}
