//! Event-driven simulation of the M/G/1 queue.
//!
//! [`run_queue`] drives one of four work-conserving disciplines over a
//! seeded Poisson arrival trace and records per-customer sojourns plus busy
//! periods. The free-standing samplers generate busy periods directly
//! (optionally conditioning the first service), residual busy-period lives,
//! and sojourns of tagged customers injected into a warmed-up queue --
//! the raw material for the distributional checks in [`crate::validate`].
//!
//! Replications are fanned out over threads with one random stream per
//! replication index, so results do not depend on the thread count.

mod engine;

use serde::Serialize;

use crate::analytic::QueueModel;
use crate::error::{Error, Result};
use crate::rng::{exp_draw, par_map_indexed, stream_rng, Purpose, SimRng};
use engine::{Departure, Engine, FbEngine, FifoEngine, LifoEngine, PsEngine};

/// Abort a run if the in-system count ever exceeds this (misconfigured
/// loads should fail loudly, not thrash).
pub const DEFAULT_BACKLOG_GUARD: usize = 1_000_000;

/// The four scheduling disciplines. All are work-conserving, so the
/// workload process and the busy-period boundaries agree across them on a
/// common arrival trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Discipline {
    /// Foreground-background: the customers with least attained service
    /// share the server equally.
    Fb,
    /// First-in-first-out, nonpreemptive.
    Fifo,
    /// Preemptive last-in-first-out: the newest arrival always holds the
    /// server.
    LifoPreemptive,
    /// Processor sharing among all present customers.
    Ps,
}

impl Discipline {
    pub const ALL: [Discipline; 4] = [
        Discipline::Fb,
        Discipline::Fifo,
        Discipline::LifoPreemptive,
        Discipline::Ps,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Discipline::Fb => "fb",
            Discipline::Fifo => "fifo",
            Discipline::LifoPreemptive => "lifo",
            Discipline::Ps => "ps",
        }
    }
}

impl std::str::FromStr for Discipline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fb" => Ok(Discipline::Fb),
            "fifo" => Ok(Discipline::Fifo),
            "lifo" => Ok(Discipline::LifoPreemptive),
            "ps" => Ok(Discipline::Ps),
            other => Err(Error::InvalidParameter(format!(
                "unknown discipline {other:?} (expected fb, fifo, lifo or ps)"
            ))),
        }
    }
}

fn make_engine(d: Discipline) -> Box<dyn Engine> {
    match d {
        Discipline::Fb => Box::<FbEngine>::default(),
        Discipline::Fifo => Box::<FifoEngine>::default(),
        Discipline::LifoPreemptive => Box::<LifoEngine>::default(),
        Discipline::Ps => Box::<PsEngine>::default(),
    }
}

/// One completed customer.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SojournRecord {
    pub arrival: f64,
    pub service: f64,
    pub departure: f64,
}

impl SojournRecord {
    pub fn sojourn(&self) -> f64 {
        self.departure - self.arrival
    }
}

/// Output of [`run_queue`]: everything downstream statistics need.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationRun {
    pub seed: u64,
    pub discipline: Discipline,
    pub warmup: usize,
    /// Completed post-warmup customers, in arrival order.
    pub records: Vec<SojournRecord>,
    /// (start, end) of each completed post-warmup busy period.
    pub busy_spans: Vec<(f64, f64)>,
    /// All customers pushed through the system, warmup included.
    pub customers_served: u64,
    /// Peak number in system over the whole run.
    pub max_backlog: usize,
}

impl SimulationRun {
    pub fn sojourns(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.sojourn()).collect()
    }

    pub fn busy_period_lengths(&self) -> Vec<f64> {
        self.busy_spans.iter().map(|(s, e)| e - s).collect()
    }

    pub fn service_sojourn_pairs(&self) -> Vec<(f64, f64)> {
        self.records
            .iter()
            .map(|r| (r.service, r.sojourn()))
            .collect()
    }
}

/// Simulates `n_customers` Poisson arrivals under the given discipline and
/// drains the system. Statistics start at the first busy period opened by an
/// arrival with index >= `warmup`; everything before is discarded. Two calls
/// with equal arguments produce identical output, and all disciplines share
/// the arrival/service trace for a given seed.
pub fn run_queue(
    model: &QueueModel,
    discipline: Discipline,
    n_customers: usize,
    warmup: usize,
    seed: u64,
) -> Result<SimulationRun> {
    run_queue_guarded(
        model,
        discipline,
        n_customers,
        warmup,
        seed,
        DEFAULT_BACKLOG_GUARD,
    )
}

/// [`run_queue`] with an explicit backlog guard.
pub fn run_queue_guarded(
    model: &QueueModel,
    discipline: Discipline,
    n_customers: usize,
    warmup: usize,
    seed: u64,
    guard: usize,
) -> Result<SimulationRun> {
    if n_customers == 0 {
        return Err(Error::Precondition("need at least one customer".into()));
    }
    if warmup > n_customers {
        return Err(Error::Precondition(format!(
            "warmup ({warmup}) exceeds the customer count ({n_customers})"
        )));
    }
    let lambda = model.lambda();
    let mut rng = stream_rng(seed, Purpose::Trace, 0);
    let mut engine = make_engine(discipline);

    let mut next_arrival = exp_draw(&mut rng, lambda);
    let mut next_service = model.service().sample(&mut rng);
    let mut arrived = 0usize;
    let mut info: Vec<(f64, f64)> = Vec::with_capacity(n_customers);
    let mut recording = false;
    let mut first_recorded_id = u64::MAX;
    let mut open_span: Option<(f64, bool)> = None;

    let mut records = Vec::new();
    let mut busy_spans = Vec::new();
    let mut departures: Vec<Departure> = Vec::new();
    let mut served = 0u64;
    let mut max_backlog = 0usize;

    loop {
        let te = engine.next_event();
        let more = arrived < n_customers;
        match (te, more) {
            (Some(t), true) if t <= next_arrival => engine.fire_next(&mut departures),
            (_, true) => {
                engine.progress_to(next_arrival);
                if engine.in_system() == 0 {
                    if !recording && arrived >= warmup {
                        recording = true;
                        first_recorded_id = arrived as u64;
                    }
                    open_span = Some((next_arrival, recording));
                }
                engine.arrive(arrived as u64, next_service);
                info.push((next_arrival, next_service));
                arrived += 1;
                let backlog = engine.in_system();
                max_backlog = max_backlog.max(backlog);
                if backlog > guard {
                    return Err(Error::InstabilityGuard {
                        in_system: backlog,
                        guard,
                        time: next_arrival,
                    });
                }
                next_arrival += exp_draw(&mut rng, lambda);
                next_service = model.service().sample(&mut rng);
            }
            (Some(_), false) => engine.fire_next(&mut departures),
            (None, false) => break,
        }
        if !departures.is_empty() {
            for d in departures.drain(..) {
                served += 1;
                if d.id >= first_recorded_id {
                    let (arrival, service) = info[d.id as usize];
                    records.push(SojournRecord {
                        arrival,
                        service,
                        departure: d.time,
                    });
                }
            }
            if engine.in_system() == 0 {
                if let Some((start, recorded)) = open_span.take() {
                    if recorded {
                        // the epoch of the departure that emptied the system
                        let end = records
                            .last()
                            .map(|r| r.departure)
                            .expect("recorded span implies recorded departures");
                        busy_spans.push((start, end));
                    }
                }
            }
        }
    }
    // departure order -> arrival order
    records.sort_by(|a, b| a.arrival.partial_cmp(&b.arrival).unwrap());
    Ok(SimulationRun {
        seed,
        discipline,
        warmup,
        records,
        busy_spans,
        customers_served: served,
        max_backlog,
    })
}

/// How the first service of a sampled busy period is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FirstService {
    /// Draw from the service law.
    Generic,
    /// Force the first service to the given value.
    Exactly(f64),
    /// Condition the draw on being at least the given value (rejection).
    AtLeast(f64),
}

/// Draws `n` independent busy-period lengths. A busy period starts with one
/// service (per `first`) and lasts until the backlog, fed by Poisson
/// arrivals, first drains to zero.
pub fn sample_busy_periods(
    model: &QueueModel,
    n: usize,
    seed: u64,
    first: FirstService,
    threads: usize,
) -> Result<Vec<f64>> {
    busy_periods_with_purpose(model, n, seed, Purpose::BusyPeriod, first, threads)
}

fn busy_periods_with_purpose(
    model: &QueueModel,
    n: usize,
    seed: u64,
    purpose: Purpose,
    first: FirstService,
    threads: usize,
) -> Result<Vec<f64>> {
    use std::sync::atomic::{AtomicU64, Ordering};
    if n == 0 {
        return Err(Error::Precondition("need at least one busy period".into()));
    }
    let attempts = AtomicU64::new(0);
    let accepts = AtomicU64::new(0);
    let results = par_map_indexed(n as u32, threads, |i| -> Result<f64> {
        let mut rng = stream_rng(seed, purpose, i);
        let b1 = match first {
            FirstService::Generic => model.service().sample(&mut rng),
            FirstService::Exactly(tau) => tau,
            FirstService::AtLeast(tau) => loop {
                let draw = model.service().sample(&mut rng);
                let total = attempts.fetch_add(1, Ordering::Relaxed) + 1;
                if draw >= tau {
                    accepts.fetch_add(1, Ordering::Relaxed);
                    break draw;
                }
                if total >= 1_000_000 && total % 4096 == 0 {
                    let ok = accepts.load(Ordering::Relaxed);
                    if (ok as f64) < (total as f64) * 1e-6 {
                        return Err(Error::RejectionTooRare {
                            rate: ok as f64 / total as f64,
                            attempts: total,
                        });
                    }
                }
            },
        };
        Ok(one_busy_period(model, b1, &mut rng))
    });
    results.into_iter().collect()
}

/// Length of a busy period begun by `first_service` at time 0.
fn one_busy_period(model: &QueueModel, first_service: f64, rng: &mut SimRng) -> f64 {
    let lambda = model.lambda();
    let mut end = first_service;
    let mut t = 0.0;
    loop {
        t += exp_draw(rng, lambda);
        if t >= end {
            return end;
        }
        end += model.service().sample(rng);
    }
}

/// Draws from the residual life of a busy period: generate `n` busy periods,
/// resample them with probability proportional to length, and take an
/// independent uniform fraction of the chosen length.
pub fn sample_residual_busy(
    model: &QueueModel,
    n: usize,
    seed: u64,
    threads: usize,
) -> Result<Vec<f64>> {
    use rand::Rng;
    let lengths = busy_periods_with_purpose(
        model,
        n,
        seed,
        Purpose::Residual,
        FirstService::Generic,
        threads,
    )?;
    let mut cumulative = Vec::with_capacity(n);
    let mut total = 0.0;
    for &len in &lengths {
        total += len;
        cumulative.push(total);
    }
    let mut rng = stream_rng(seed, Purpose::ResidualPick, 0);
    let out = (0..n)
        .map(|_| {
            let target: f64 = rng.random::<f64>() * total;
            let j = cumulative.partition_point(|&c| c <= target);
            let frac: f64 = rng.random();
            lengths[j.min(n - 1)] * frac
        })
        .collect();
    Ok(out)
}

/// What a tagged customer carries into the queue.
#[derive(Debug, Clone, Copy)]
enum TagService {
    Fixed(f64),
    Drawn,
}

/// Sojourn samples of tagged customers plus how often they found customers
/// still below the tagging level.
#[derive(Debug, Clone, Serialize)]
pub struct TaggedSojourns {
    pub sojourns: Vec<f64>,
    /// Fraction of tagged arrivals that found a customer with attained
    /// service below the tag's requirement (i.e. a busy clipped queue).
    pub busy_fraction: f64,
}

/// Sojourns of customers with service requirement exactly `tau` injected
/// into the stationary FB queue.
///
/// Each of the `n` replications warms an independent copy of the queue with
/// `warmup` ordinary arrivals and tags the next one (a Poisson epoch, so it
/// sees time averages). Under FB the tagged sojourn ends exactly when no
/// customer with attained service below `tau` remains.
pub fn conditional_sojourn_fb(
    model: &QueueModel,
    tau: f64,
    n: usize,
    seed: u64,
    warmup: usize,
    threads: usize,
) -> Result<TaggedSojourns> {
    if !(tau > 0.0) || tau > model.service().endpoint() {
        return Err(Error::Precondition(format!(
            "tag requirement {tau} must lie in (0, {}]",
            model.service().endpoint()
        )));
    }
    tagged_replications(model, TagService::Fixed(tau), n, seed, warmup, threads)
}

/// Sojourns of tagged customers whose requirement is drawn from the service
/// law: the stationary sojourn sampled one independent replication at a
/// time. This is the mixture of the fixed-requirement sojourns over the
/// service distribution.
pub fn stationary_sojourn_replications(
    model: &QueueModel,
    n: usize,
    seed: u64,
    warmup: usize,
    threads: usize,
) -> Result<Vec<f64>> {
    tagged_replications(model, TagService::Drawn, n, seed, warmup, threads)
        .map(|t| t.sojourns)
}

fn tagged_replications(
    model: &QueueModel,
    tag: TagService,
    n: usize,
    seed: u64,
    warmup: usize,
    threads: usize,
) -> Result<TaggedSojourns> {
    if n == 0 {
        return Err(Error::Precondition("need at least one replication".into()));
    }
    let results = par_map_indexed(n as u32, threads, |i| {
        let mut rng = stream_rng(seed, Purpose::Tagged, i);
        one_tagged_fb(model, tag, warmup, DEFAULT_BACKLOG_GUARD, &mut rng)
    });
    let mut sojourns = Vec::with_capacity(n);
    let mut busy = 0usize;
    for r in results {
        let (v, saw) = r?;
        sojourns.push(v);
        busy += usize::from(saw);
    }
    Ok(TaggedSojourns {
        sojourns,
        busy_fraction: busy as f64 / n as f64,
    })
}

/// Runs an FB queue until the tagged customer (arrival index `warmup`)
/// departs; returns its sojourn and whether it found attained service below
/// its own requirement.
fn one_tagged_fb(
    model: &QueueModel,
    tag: TagService,
    warmup: usize,
    guard: usize,
    rng: &mut SimRng,
) -> Result<(f64, bool)> {
    let lambda = model.lambda();
    let mut engine = FbEngine::default();
    let mut next_arrival = exp_draw(rng, lambda);
    let mut arrived = 0usize;
    let tagged_id = warmup as u64;
    let mut tagged_arrival = 0.0;
    let mut saw_busy_below = false;
    let mut departures: Vec<Departure> = Vec::new();

    loop {
        let te = engine.next_event();
        match te {
            Some(t) if t <= next_arrival => engine.fire_next(&mut departures),
            _ => {
                engine.progress_to(next_arrival);
                let id = arrived as u64;
                let service = match (id == tagged_id, tag) {
                    (true, TagService::Fixed(tau)) => {
                        // discard the trace draw so the downstream stream
                        // does not depend on the tag mode
                        let _ = model.service().sample(rng);
                        tau
                    }
                    _ => model.service().sample(rng),
                };
                if id == tagged_id {
                    tagged_arrival = next_arrival;
                    let req = service;
                    saw_busy_below = engine.min_attained().is_some_and(|a| a < req);
                }
                engine.arrive(id, service);
                arrived += 1;
                if engine.in_system() > guard {
                    return Err(Error::InstabilityGuard {
                        in_system: engine.in_system(),
                        guard,
                        time: next_arrival,
                    });
                }
                next_arrival += exp_draw(rng, lambda);
            }
        }
        for d in departures.drain(..) {
            if d.id == tagged_id {
                return Ok((d.time - tagged_arrival, saw_busy_below));
            }
        }
    }
}

/// Time from a (tagged) Poisson arrival until the system first empties,
/// plus whether the arrival found the system busy. Discipline-independent,
/// so it is computed on the workload process directly.
#[derive(Debug, Clone, Serialize)]
pub struct EmptyingTimes {
    pub samples: Vec<f64>,
    pub busy_fraction: f64,
}

pub fn sample_time_to_empty(
    model: &QueueModel,
    n: usize,
    seed: u64,
    warmup: usize,
    threads: usize,
) -> Result<EmptyingTimes> {
    if n == 0 {
        return Err(Error::Precondition("need at least one replication".into()));
    }
    let results: Vec<(f64, bool)> = par_map_indexed(n as u32, threads, |i| {
        let mut rng = stream_rng(seed, Purpose::Tagged, i);
        one_time_to_empty(model, warmup, &mut rng)
    });
    let mut samples = Vec::with_capacity(n);
    let mut busy = 0usize;
    for (d, saw) in results {
        samples.push(d);
        busy += usize::from(saw);
    }
    Ok(EmptyingTimes {
        samples,
        busy_fraction: busy as f64 / n as f64,
    })
}

fn one_time_to_empty(model: &QueueModel, warmup: usize, rng: &mut SimRng) -> (f64, bool) {
    let lambda = model.lambda();
    // Lindley recursion on the workload seen at arrival epochs
    let mut w = 0.0f64;
    for _ in 0..warmup {
        let gap = exp_draw(rng, lambda);
        w = (w - gap).max(0.0) + model.service().sample(rng);
    }
    let gap = exp_draw(rng, lambda);
    let w_pre = (w - gap).max(0.0);
    let busy = w_pre > 0.0;
    // first passage of the workload to zero, counting future arrivals
    let mut end = w_pre + model.service().sample(rng);
    let mut t = 0.0;
    loop {
        t += exp_draw(rng, lambda);
        if t >= end {
            return (end, busy);
        }
        end += model.service().sample(rng);
    }
}

/// Replication warmup long enough for the queue state to forget the empty
/// start: 16 relaxation times of the busy-period decay rate, in customers.
pub fn default_injection_warmup(model: &QueueModel) -> usize {
    let c = crate::analytic::busy_period_decay(model)
        .map(|s| s.rate)
        .unwrap_or(0.1);
    let time = 16.0 / c.max(1e-6);
    ((model.lambda() * time).ceil() as usize).clamp(64, 100_000)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::ServiceDistribution;

    fn mm1_half() -> QueueModel {
        QueueModel::new(0.5, ServiceDistribution::exponential(1.0).unwrap()).unwrap()
    }

    fn md1_half() -> QueueModel {
        QueueModel::new(0.5, ServiceDistribution::deterministic(1.0).unwrap()).unwrap()
    }

    #[test]
    fn identical_seeds_give_identical_runs() {
        let m = mm1_half();
        let a = run_queue(&m, Discipline::Fb, 5_000, 100, 42).unwrap();
        let b = run_queue(&m, Discipline::Fb, 5_000, 100, 42).unwrap();
        assert_eq!(a.records.len(), b.records.len());
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.arrival, y.arrival);
            assert_eq!(x.departure, y.departure);
        }
        let c = run_queue(&m, Discipline::Fb, 5_000, 100, 43).unwrap();
        assert_ne!(a.records[0].arrival, c.records[0].arrival);
    }

    #[test]
    fn sojourns_dominate_service_times() {
        let m = mm1_half();
        for d in Discipline::ALL {
            let run = run_queue(&m, d, 20_000, 1_000, 7).unwrap();
            assert!(!run.records.is_empty());
            for r in &run.records {
                // slack for roundoff: epochs live at magnitude ~ t
                let slack = 1e-12 * (1.0 + r.departure.abs());
                assert!(
                    r.sojourn() >= r.service - slack,
                    "{d:?}: sojourn {} below service {}",
                    r.sojourn(),
                    r.service
                );
            }
        }
    }

    #[test]
    fn busy_period_boundaries_agree_across_disciplines() {
        let m = mm1_half();
        let runs: Vec<SimulationRun> = Discipline::ALL
            .iter()
            .map(|&d| run_queue(&m, d, 20_000, 1_000, 11).unwrap())
            .collect();
        let reference = &runs[0].busy_spans;
        for run in &runs[1..] {
            assert_eq!(run.busy_spans.len(), reference.len(), "{:?}", run.discipline);
            for (a, b) in reference.iter().zip(&run.busy_spans) {
                assert_eq!(a.0, b.0, "busy periods start at arrival epochs");
                assert!(
                    (a.1 - b.1).abs() < 1e-6 * (1.0 + a.1.abs()),
                    "{:?}: span end {} vs {}",
                    run.discipline,
                    b.1,
                    a.1
                );
            }
        }
    }

    #[test]
    fn work_conservation_accounting_per_busy_period() {
        let m = mm1_half();
        for d in Discipline::ALL {
            let run = run_queue(&m, d, 20_000, 0, 13).unwrap();
            // group served work by busy span
            let mut span_work = vec![0.0f64; run.busy_spans.len()];
            'outer: for r in &run.records {
                for (k, &(s, e)) in run.busy_spans.iter().enumerate() {
                    if r.arrival >= s && r.departure <= e + 1e-9 {
                        span_work[k] += r.service;
                        continue 'outer;
                    }
                }
            }
            for (k, &(s, e)) in run.busy_spans.iter().enumerate() {
                let busy_time = e - s;
                assert!(
                    (span_work[k] - busy_time).abs() < 1e-9 * (1.0 + busy_time),
                    "{d:?}: span {k} work {} vs busy time {}",
                    span_work[k],
                    busy_time
                );
            }
        }
    }

    #[test]
    fn deterministic_fb_departures_end_with_the_busy_period() {
        let m = md1_half();
        let run = run_queue(&m, Discipline::Fb, 50_000, 1_000, 3).unwrap();
        assert!(run.busy_spans.len() > 1_000);
        for r in &run.records {
            let span = run
                .busy_spans
                .iter()
                .find(|&&(s, e)| r.arrival >= s && r.arrival <= e)
                .expect("every recorded customer belongs to a recorded span");
            assert_eq!(
                r.departure, span.1,
                "FB with deterministic service must hold every customer to the end"
            );
        }
    }

    #[test]
    fn fifo_mean_sojourn_matches_the_mm1_formula() {
        // E V = 1 / (mu - lambda) = 2 for lambda = 1/2, mu = 1
        let m = mm1_half();
        let run = run_queue(&m, Discipline::Fifo, 1_000_000, 10_000, 5).unwrap();
        let sojourns = run.sojourns();
        let mean = sojourns.iter().sum::<f64>() / sojourns.len() as f64;
        assert!(
            (mean - 2.0).abs() / 2.0 < 0.02,
            "mean FIFO sojourn {mean} vs 2.0"
        );
    }

    #[test]
    fn instability_guard_trips() {
        let m = mm1_half();
        let err = run_queue_guarded(&m, Discipline::Fifo, 100_000, 0, 1, 4);
        assert!(matches!(err, Err(Error::InstabilityGuard { .. })));
    }

    #[test]
    fn run_preconditions() {
        let m = mm1_half();
        assert!(run_queue(&m, Discipline::Fb, 0, 0, 1).is_err());
        assert!(run_queue(&m, Discipline::Fb, 10, 11, 1).is_err());
    }

    #[test]
    fn busy_period_mean_matches_renewal_identity() {
        // E L = E B / (1 - rho) = 2 for the M/M/1 at rho = 1/2
        let m = mm1_half();
        let lens = sample_busy_periods(&m, 1_000_000, 9, FirstService::Generic, 0).unwrap();
        let mean = lens.iter().sum::<f64>() / lens.len() as f64;
        assert!((mean - 2.0).abs() / 2.0 < 0.02, "mean busy period {mean}");
    }

    #[test]
    fn busy_periods_with_negligible_arrivals_reduce_to_one_service() {
        let m = QueueModel::new(1e-6, ServiceDistribution::exponential(1.0).unwrap()).unwrap();
        let lens = sample_busy_periods(&m, 50_000, 2, FirstService::Generic, 0).unwrap();
        let mean = lens.iter().sum::<f64>() / lens.len() as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean} should be ~ E B");
    }

    #[test]
    fn conditioned_first_service_dominates_generic() {
        // in the clipped queue, starting at the ceiling can only stretch
        // the busy period
        let m = mm1_half().truncate_service(1.0).unwrap();
        let generic = sample_busy_periods(&m, 100_000, 4, FirstService::Generic, 0).unwrap();
        let forced = sample_busy_periods(&m, 100_000, 4, FirstService::Exactly(1.0), 0).unwrap();
        let sg = crate::tail::EmpiricalSurvival::new(&generic).unwrap();
        let sf = crate::tail::EmpiricalSurvival::new(&forced).unwrap();
        for i in 1..=18 {
            let x = 0.5 * i as f64;
            assert!(
                sf.query(x) >= sg.query(x) - 0.01,
                "survival ordering broken at {x}: {} vs {}",
                sf.query(x),
                sg.query(x)
            );
        }
    }

    #[test]
    fn at_least_conditioning_matches_exact_at_the_cutoff() {
        // in a clipped queue, "at least tau" and "exactly tau" coincide
        let m = mm1_half().truncate_service(1.5).unwrap();
        let a = sample_busy_periods(&m, 5_000, 8, FirstService::AtLeast(1.5), 0).unwrap();
        assert!(a.iter().all(|&l| l >= 1.5));
    }

    #[test]
    fn rejection_guard_aborts_on_vanishing_acceptance() {
        let m = mm1_half();
        // P(B >= 40) = e^{-40} ~ 4e-18: the guard has to fire
        let err = sample_busy_periods(&m, 10, 1, FirstService::AtLeast(40.0), 1);
        assert!(matches!(err, Err(Error::RejectionTooRare { .. })));
    }

    #[test]
    fn residual_of_constant_busy_periods_is_uniform() {
        // nearly no interference: busy periods are one deterministic service,
        // so the residual life is uniform on (0, 1)
        let m = QueueModel::new(1e-9, ServiceDistribution::deterministic(1.0).unwrap()).unwrap();
        let res = sample_residual_busy(&m, 200_000, 6, 0).unwrap();
        let mean = res.iter().sum::<f64>() / res.len() as f64;
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
        let below_quarter = res.iter().filter(|&&x| x < 0.25).count() as f64 / res.len() as f64;
        assert!((below_quarter - 0.25).abs() < 0.01);
    }

    #[test]
    fn residual_mean_matches_the_renewal_moment_ratio() {
        // E residual = E L^2 / (2 E L), checked against the same run's moments
        let m = mm1_half();
        let n = 400_000;
        let lens = busy_periods_with_purpose(
            &m,
            n,
            21,
            Purpose::Residual,
            FirstService::Generic,
            0,
        )
        .unwrap();
        let res = sample_residual_busy(&m, n, 21, 0).unwrap();
        let el = lens.iter().sum::<f64>() / n as f64;
        let el2 = lens.iter().map(|l| l * l).sum::<f64>() / n as f64;
        let want = el2 / (2.0 * el);
        let got = res.iter().sum::<f64>() / n as f64;
        assert!(
            (got - want).abs() / want < 0.03,
            "residual mean {got} vs moment ratio {want}"
        );
    }

    #[test]
    fn tagged_customer_alone_keeps_its_own_service_time() {
        // warmup 0 and a near-zero arrival rate: the tag enters an empty
        // system and stays exactly tau
        let m = QueueModel::new(1e-9, ServiceDistribution::exponential(1.0).unwrap()).unwrap();
        let t = conditional_sojourn_fb(&m, 0.75, 200, 3, 0, 0).unwrap();
        for &v in &t.sojourns {
            assert!((v - 0.75).abs() < 1e-9, "sojourn {v}");
        }
        assert_eq!(t.busy_fraction, 0.0);
    }

    #[test]
    fn tagged_busy_fraction_matches_clipped_load() {
        // P(find a busy clipped queue) = lambda E min(B, tau)
        let m = mm1_half();
        let tau = 1.0;
        let expect = 0.5 * (1.0 - (-1.0f64).exp());
        let t = conditional_sojourn_fb(&m, tau, 40_000, 17, 94, 0).unwrap();
        assert!(
            (t.busy_fraction - expect).abs() < 0.01,
            "busy fraction {} vs {expect}",
            t.busy_fraction
        );
    }

    #[test]
    fn time_to_empty_busy_fraction_matches_rho() {
        let m = mm1_half();
        let d = sample_time_to_empty(&m, 40_000, 19, 94, 0).unwrap();
        assert!(
            (d.busy_fraction - 0.5).abs() < 0.01,
            "busy fraction {}",
            d.busy_fraction
        );
    }

    #[test]
    fn threaded_and_sequential_sampling_agree() {
        let m = mm1_half();
        let a = sample_busy_periods(&m, 10_000, 23, FirstService::Generic, 1).unwrap();
        let b = sample_busy_periods(&m, 10_000, 23, FirstService::Generic, 4).unwrap();
        assert_eq!(a, b);
        let ta = conditional_sojourn_fb(&m, 1.0, 2_000, 23, 64, 1).unwrap();
        let tb = conditional_sojourn_fb(&m, 1.0, 2_000, 23, 64, 4).unwrap();
        assert_eq!(ta.sojourns, tb.sojourns);
    }
}
