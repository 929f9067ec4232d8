//! Event-driven M/G/1 simulation of a rank-based policy.
//!
//! The server always holds the job of minimal rank. Waiting jobs keep their
//! rank, so only the served job moves, and it runs until it completes, leaves
//! its current rank piece, a job arrives, or its rank crosses that of the best
//! waiting job. Crossings are solved exactly on the affine piece. When the
//! served job would be overtaken immediately (jobs tied on an increasing
//! rank), it runs for one quantum instead, which emulates processor sharing
//! among the tied jobs.

use crate::analysis::{mean_response, range_mean, SystemSpec};
use crate::distributions::SizeRange;
use crate::error::{Result, SoapError};
use crate::exec::Execution;
use crate::rank::{first_age, Piece, Rank, RankBound, Relation, Tiebreak, Trend};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

pub const DEFAULT_QUANTUM: f64 = 0.01;
const BATCHES: usize = 50;

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub spec: SystemSpec,
    /// Number of arrivals; the run ends once all of them have departed.
    pub horizon: usize,
    /// Leading arrivals left out of [`estimate`].
    pub warmup: usize,
    pub seed: u64,
    pub ps_quantum: f64,
    /// Bin edges for per-size aggregation, applied within each family.
    pub size_bins: Option<Vec<f64>>,
    pub record_events: bool,
}

impl SimConfig {
    pub fn new(spec: SystemSpec, horizon: usize, seed: u64) -> Self {
        SimConfig {
            spec,
            horizon,
            warmup: horizon / 10,
            seed,
            ps_quantum: DEFAULT_QUANTUM,
            size_bins: None,
            record_events: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SoapError::ConfigInvalid(m));
        if self.horizon == 0 {
            return bad("horizon must be positive".into());
        }
        if self.warmup >= self.horizon {
            return bad(format!("warmup {} is not below horizon {}", self.warmup, self.horizon));
        }
        if !(self.ps_quantum > 0.0 && self.ps_quantum.is_finite()) {
            return bad(format!("ps_quantum must be positive, got {}", self.ps_quantum));
        }
        if let Some(edges) = &self.size_bins {
            if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) || edges[0] < 0.0 || edges[0].is_nan() {
                return bad("size_bins must be at least two increasing edges from 0 or above".into());
            }
        }
        if !(self.spec.lambda > 0.0) {
            return bad("simulation needs a positive arrival rate".into());
        }
        self.spec.check()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JobRecord {
    pub family: usize,
    pub size: f64,
    pub arrival: f64,
    pub departure: f64,
    pub response: f64,
    pub arrival_seq: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Event {
    Arrival { time: f64, seq: usize },
    /// The job was served throughout `[start, end)`.
    Service { start: f64, end: f64, seq: usize },
    Departure { time: f64, seq: usize },
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    /// In arrival order.
    pub records: Vec<JobRecord>,
    pub events: Option<Vec<Event>>,
    pub end_time: f64,
}

struct Job {
    family: usize,
    size: f64,
    arrival: f64,
    seq: usize,
    age: f64,
    cursor: usize,
    pieces: Arc<Vec<Piece>>,
}

impl Job {
    fn piece(&self) -> &Piece {
        &self.pieces[self.cursor]
    }

    fn settle(&mut self) {
        while self.cursor + 1 < self.pieces.len() && self.age >= self.pieces[self.cursor].end {
            self.cursor += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Key {
    rank: Rank,
    /// Increasing pieces lose exact ties.
    increasing: bool,
    order: usize,
}

impl Key {
    fn of(job: &Job, tiebreak: Tiebreak) -> Key {
        let p = job.piece();
        Key {
            rank: p.eval(job.age),
            increasing: p.trend() == Trend::Increasing,
            order: match tiebreak {
                Tiebreak::Fcfs => job.seq,
                Tiebreak::Lcfs => usize::MAX - job.seq,
            },
        }
    }

    fn cmp_tie(&self, other: &Key) -> Ordering {
        (self.increasing, self.order).cmp(&(other.increasing, other.order))
    }
}

struct Waiting(Key, Job);

impl PartialEq for Waiting {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Waiting {}

impl PartialOrd for Waiting {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Waiting {
    // reversed: BinaryHeap pops the minimal key
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.rank.lex(&self.0.rank).then_with(|| other.0.cmp_tie(&self.0))
    }
}

#[allow(clippy::large_enum_variant)]
enum Source<'a> {
    Random {
        rng: ChaCha8Rng,
        lambda: f64,
        cumulative: Vec<f64>,
    },
    /// `(time, family, size)` in time order.
    Scripted(&'a [(f64, usize, f64)]),
}

struct Arrivals<'a> {
    source: Source<'a>,
    made: usize,
    horizon: usize,
    next: f64,
}

impl Arrivals<'_> {
    fn pending(&self) -> bool {
        self.made < self.horizon
    }

    /// Time of the next arrival after one at `t`.
    fn schedule(&mut self, t: f64) {
        self.next = if !self.pending() {
            f64::INFINITY
        } else {
            match &mut self.source {
                Source::Random { rng, lambda, .. } => {
                    let u: f64 = rng.gen();
                    t - (-u).ln_1p() / *lambda
                }
                Source::Scripted(jobs) => jobs[self.made].0,
            }
        };
    }

    fn draw(&mut self, policy: &crate::rank::Policy) -> (usize, f64) {
        match &mut self.source {
            Source::Random { rng, cumulative, .. } => {
                let u: f64 = rng.gen();
                let family = cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len() - 1);
                (family, policy.families[family].law.sample(rng))
            }
            Source::Scripted(jobs) => (jobs[self.made].1, jobs[self.made].2),
        }
    }
}

/// Pieces shared by all jobs of an unsized family, valid up to `ceiling`.
struct SharedPieces {
    ceiling: f64,
    pieces: Option<Arc<Vec<Piece>>>,
}

pub fn run(config: &SimConfig) -> Result<SimOutput> {
    config.validate()?;
    let mut acc = 0.0;
    let cumulative: Vec<f64> = config
        .spec
        .policy
        .families
        .iter()
        .map(|f| {
            acc += f.prob;
            acc
        })
        .collect();
    let source = Source::Random {
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        lambda: config.spec.lambda,
        cumulative,
    };
    simulate(config, source, config.horizon)
}

/// Runs a fixed trace of `(arrival time, family, size)`; the config's
/// horizon, seed and arrival rate are ignored.
pub fn run_trace(config: &SimConfig, jobs: &[(f64, usize, f64)]) -> Result<SimOutput> {
    let mut clock = 0.0;
    for &(t, family, size) in jobs {
        if !(t >= clock) || !t.is_finite() {
            return Err(SoapError::ConfigInvalid("trace times must be finite and nondecreasing".into()));
        }
        let f = config.spec.policy.family(family)?;
        if !(size > 0.0) || !size.is_finite() {
            return Err(SoapError::SizeOutOfSupport {
                size,
                family: f.name.clone(),
            });
        }
        clock = t;
    }
    if !(config.ps_quantum > 0.0 && config.ps_quantum.is_finite()) {
        return Err(SoapError::ConfigInvalid(format!("ps_quantum must be positive, got {}", config.ps_quantum)));
    }
    simulate(config, Source::Scripted(jobs), jobs.len())
}

fn simulate(config: &SimConfig, source: Source, horizon: usize) -> Result<SimOutput> {
    let policy = &config.spec.policy;
    let tiebreak = policy.tiebreak;
    let shared: Vec<SharedPieces> = policy
        .families
        .iter()
        .map(|f| {
            let ceiling = f.age_ceiling();
            SharedPieces {
                ceiling,
                pieces: (!f.sized && ceiling.is_finite()).then(|| Arc::new(f.pieces(0.0, ceiling))),
            }
        })
        .collect();
    let mut arrivals = Arrivals {
        source,
        made: 0,
        horizon,
        next: 0.0,
    };
    arrivals.schedule(0.0);

    let mut records: Vec<Option<JobRecord>> = vec![None; horizon];
    let mut events = config.record_events.then(Vec::new);
    let mut heap: BinaryHeap<Waiting> = BinaryHeap::new();
    let mut current: Option<Job> = None;
    let mut t = 0.0;

    let admit = |t: f64, arrivals: &mut Arrivals, heap: &mut BinaryHeap<Waiting>, events: &mut Option<Vec<Event>>| -> Result<()> {
        let (family, size) = arrivals.draw(policy);
        let pieces = match &shared[family].pieces {
            Some(p) if size <= shared[family].ceiling => p.clone(),
            _ => Arc::new(policy.job_pieces(family, size)?),
        };
        if pieces.is_empty() || pieces[0].start > 0.0 || pieces[pieces.len() - 1].end < size {
            return Err(SoapError::AgeOutOfRange {
                age: size,
                ceiling: pieces.last().map_or(0.0, |p| p.end),
            });
        }
        let seq = arrivals.made;
        arrivals.made += 1;
        if let Some(ev) = events {
            ev.push(Event::Arrival { time: t, seq });
        }
        let job = Job {
            family,
            size,
            arrival: t,
            seq,
            age: 0.0,
            cursor: 0,
            pieces,
        };
        heap.push(Waiting(Key::of(&job, tiebreak), job));
        arrivals.schedule(t);
        Ok(())
    };

    loop {
        if current.is_none() && heap.is_empty() {
            if !arrivals.pending() {
                break;
            }
            t = arrivals.next;
            admit(t, &mut arrivals, &mut heap, &mut events)?;
        }
        if let Some(mut job) = current.take() {
            job.settle();
            heap.push(Waiting(Key::of(&job, tiebreak), job));
        }
        let Waiting(key, mut job) = heap.pop().expect("system is nonempty");
        let piece_end = job.piece().end.min(job.size);
        let to_arrival = arrivals.next - t;
        let cross = match heap.peek() {
            Some(Waiting(w, _)) => {
                let relation = if w.cmp_tie(&key) == Ordering::Less {
                    Relation::AtLeast
                } else {
                    Relation::Above
                };
                let bound = RankBound::closed(w.rank.clone());
                first_age(
                    std::slice::from_ref(job.piece()),
                    job.age,
                    false,
                    piece_end,
                    &bound,
                    relation,
                )
            }
            None => f64::INFINITY,
        };
        // the age to stop at, and whether it is reached exactly
        let (mut stop, exact) = if cross <= job.age {
            ((job.age + config.ps_quantum).min(piece_end), false)
        } else if cross < piece_end {
            (cross, true)
        } else {
            (piece_end, true)
        };
        let mut dt = stop - job.age;
        let mut arrived = false;
        if to_arrival <= dt {
            dt = to_arrival;
            stop = job.age + dt;
            arrived = true;
        }
        let start = t;
        t = if arrived { arrivals.next } else { t + dt };
        job.age = if exact && !arrived { stop } else { (job.age + dt).min(piece_end) };
        if stop >= piece_end {
            job.age = piece_end;
        }
        if let Some(ev) = &mut events {
            if t > start {
                ev.push(Event::Service {
                    start,
                    end: t,
                    seq: job.seq,
                });
            }
        }
        if job.age >= job.size {
            if let Some(ev) = &mut events {
                ev.push(Event::Departure { time: t, seq: job.seq });
            }
            records[job.seq] = Some(JobRecord {
                family: job.family,
                size: job.size,
                arrival: job.arrival,
                departure: t,
                response: t - job.arrival,
                arrival_seq: job.seq,
            });
        } else {
            current = Some(job);
        }
        if arrived {
            admit(t, &mut arrivals, &mut heap, &mut events)?;
        }
    }
    let records = records
        .into_iter()
        .map(|r| r.expect("every admitted job departs"))
        .collect();
    Ok(SimOutput {
        records,
        events,
        end_time: t,
    })
}

/// Independent runs, returned in input order.
pub fn run_many(configs: &[SimConfig], exec: Execution) -> Vec<Result<SimOutput>> {
    exec.map(configs, run)
}

/// Checks an event log for preempt-resume work conservation: the server is
/// busy exactly when a job is present, serves one job at a time, and every
/// job departs once its service adds up to its size.
pub fn check_work_conservation(events: &[Event], records: &[JobRecord]) -> Result<()> {
    let fail = |m: String| Err(SoapError::ConfigInvalid(format!("event log: {m}")));
    let tol = |x: f64| 1e-9 * x.abs().max(1.0);
    let mut served = vec![0.0; records.len()];
    let mut present = 0usize;
    let mut clock = 0.0f64;
    for ev in events {
        match *ev {
            Event::Arrival { time, .. } => {
                if present > 0 && time > clock + tol(time) {
                    return fail(format!("idle at {clock} with {present} jobs present"));
                }
                clock = clock.max(time);
                present += 1;
            }
            Event::Service { start, end, seq } => {
                if present == 0 {
                    return fail(format!("service at {start} in an empty system"));
                }
                if (start - clock).abs() > tol(start) {
                    return fail(format!("gap or overlap at {clock}..{start} with {present} jobs present"));
                }
                served[seq] += end - start;
                clock = end;
            }
            Event::Departure { time, seq } => {
                let r = &records[seq];
                if (served[seq] - r.size).abs() > tol(r.size) {
                    return fail(format!("job {seq} left with service {} of {}", served[seq], r.size));
                }
                if (time - r.departure).abs() > 0.0 {
                    return fail(format!("job {seq} departure mismatch"));
                }
                present -= 1;
            }
        }
    }
    if present != 0 {
        return fail(format!("{present} jobs never departed"));
    }
    Ok(())
}

/// Aggregated response times of one family over one size bin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinEstimate {
    pub family: usize,
    pub label: String,
    pub range: (f64, f64),
    /// Bin holds a single atom of the size law.
    pub point: bool,
    pub count: usize,
    pub mean: f64,
    /// Batch-means standard error.
    pub std_err: f64,
}

impl BinEstimate {
    /// Analytic mean response over the same jobs.
    pub fn analytic(&self, spec: &SystemSpec) -> Result<f64> {
        if self.point {
            Ok(mean_response(spec, self.family, self.range.0)?.mean_total)
        } else {
            range_mean(
                spec,
                self.family,
                &SizeRange::half_open(self.range.0, self.range.1),
                Execution::Sequential,
            )
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub bins: Vec<BinEstimate>,
    pub overall_mean: f64,
    pub overall_std_err: f64,
    /// Labels of bins that received no jobs.
    pub empty_bins: Vec<String>,
}

/// Mean and batch-means standard error of a sequence in arrival order.
fn batch_means(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let (groups, size) = if n >= 20 * BATCHES { (BATCHES, n / BATCHES) } else { (n, 1) };
    let used = groups * size;
    let bm: Vec<f64> = values[n - used..]
        .chunks(size)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let m = bm.iter().sum::<f64>() / groups as f64;
    let var = bm.iter().map(|b| (b - m) * (b - m)).sum::<f64>() / (groups - 1) as f64;
    (mean, (var / groups as f64).sqrt())
}

fn fmt_edge(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "inf".into()
    }
}

/// Per-family, per-bin means of the records after warmup. Without bin
/// edges, discrete laws get one bin per atom and others one bin overall.
pub fn estimate(config: &SimConfig, records: &[JobRecord]) -> Result<Estimate> {
    let kept: Vec<&JobRecord> = records.iter().filter(|r| r.arrival_seq >= config.warmup).collect();
    if kept.is_empty() {
        return Err(SoapError::ConfigInvalid("no records after warmup".into()));
    }
    let policy = &config.spec.policy;
    let mut bins = Vec::new();
    let mut empty_bins = Vec::new();
    for (fi, f) in policy.families.iter().enumerate() {
        let name = &f.name;
        let specs: Vec<(f64, f64, bool)> = match &config.size_bins {
            Some(edges) => edges.windows(2).map(|w| (w[0], w[1], false)).collect(),
            None if f.law.continuous_mass() == 0.0 => {
                f.law.atoms().into_iter().filter(|a| a.1 > 0.0).map(|a| (a.0, a.0, true)).collect()
            }
            None => vec![(0.0, f64::INFINITY, false)],
        };
        for (lo, hi, point) in specs {
            let label = if point {
                format!("{name} x={lo}")
            } else {
                format!("{name} [{}, {})", fmt_edge(lo), fmt_edge(hi))
            };
            let values: Vec<f64> = kept
                .iter()
                .filter(|r| r.family == fi && if point { r.size == lo } else { r.size >= lo && r.size < hi })
                .map(|r| r.response)
                .collect();
            if values.is_empty() {
                empty_bins.push(label);
                continue;
            }
            let (mean, std_err) = batch_means(&values);
            bins.push(BinEstimate {
                family: fi,
                label,
                range: (lo, hi),
                point,
                count: values.len(),
                mean,
                std_err,
            });
        }
    }
    let all: Vec<f64> = kept.iter().map(|r| r.response).collect();
    let (overall_mean, overall_std_err) = batch_means(&all);
    Ok(Estimate {
        bins,
        overall_mean,
        overall_std_err,
        empty_bins,
    })
}
