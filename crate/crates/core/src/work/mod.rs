//! New and old work with respect to a rank bound.
//!
//! For a bound `r`, the new `r`-work of a job is the service it receives
//! after arrival until it completes or first reaches a rank at or above `r`
//! (its cutoff age). Its `i`-old `r`-work is the service it receives during
//! the `i`-th age interval in which it sits at or below `r`, counting from
//! the interval that starts at age 0.

mod sized;

use crate::distributions::{ClippedWork, WorkLaw};
use crate::error::{Result, SoapError};
use crate::rank::{first_age, Family, Piece, Policy, RankBound, Tiebreak};

/// Recycle intervals allowed per job before giving up.
pub const DEFAULT_MAX_INTERVALS: usize = 100_000;

/// Busy-period fixed point settings.
const BUSY_TOL: f64 = 1e-13;
const BUSY_MAX_ITER: usize = 100_000;

/// Cutoff age and old intervals of one job against a bound.
#[derive(Debug, Clone, PartialEq)]
pub struct JobWork {
    pub cutoff: f64,
    /// `(i, b_i, c_i)` for nonempty intervals only.
    pub intervals: Vec<(usize, f64, f64)>,
}

impl JobWork {
    /// Work amounts `[new, old_0, old_1, ...]` for a job of size `x`.
    pub(crate) fn amounts(&self, x: f64, width: usize) -> Vec<f64> {
        let mut v = vec![0.0; width.max(1)];
        v[0] = x.min(self.cutoff);
        for &(i, b, c) in &self.intervals {
            if x > b && i + 1 < v.len() {
                v[i + 1] = x.min(c) - b;
            }
        }
        v
    }

    pub(crate) fn width(&self) -> usize {
        1 + self.intervals.last().map_or(0, |&(i, _, _)| i + 1)
    }
}

/// Walks the pieces of one job over ages `[0, end)`.
pub(crate) fn job_work(
    pieces: &[Piece],
    end: f64,
    bound: &RankBound,
    tiebreak: Tiebreak,
    max_intervals: usize,
) -> Result<JobWork> {
    let above = tiebreak.old_cutoff();
    let below = above.negate();
    let cutoff = first_age(pieces, 0.0, true, end, bound, tiebreak.new_cutoff());
    let mut intervals = Vec::new();
    let c0 = first_age(pieces, 0.0, true, end, bound, above);
    if c0 > 0.0 {
        intervals.push((0, 0.0, c0));
    }
    let mut prev = c0;
    let mut i = 0usize;
    while prev.is_finite() {
        let b = first_age(pieces, prev, false, end, bound, below);
        if !b.is_finite() {
            break;
        }
        i += 1;
        if i > max_intervals {
            return Err(SoapError::TruncationExceeded { limit: max_intervals });
        }
        let c = first_age(pieces, b, false, end, bound, above);
        if c > b {
            intervals.push((i, b, c));
        }
        if c <= prev {
            // no progress is impossible for well-formed pieces
            return Err(SoapError::InvalidPolicy(format!(
                "rank function stalls at age {prev} against bound {bound}"
            )));
        }
        prev = c;
    }
    Ok(JobWork { cutoff, intervals })
}

fn family_end(f: &Family, x: Option<f64>) -> f64 {
    match x {
        Some(x) => x,
        None => f.age_ceiling(),
    }
}

/// Age-ordered pieces and the age horizon for one job.
fn job_pieces(f: &Family, x: Option<f64>) -> (Vec<Piece>, f64) {
    let end = family_end(f, x);
    (f.pieces(x.unwrap_or(0.0), end), end)
}

fn check_descriptor(f: &Family, x: Option<f64>) -> Result<()> {
    if f.sized != x.is_some() {
        return Err(SoapError::InvalidPolicy(format!(
            "family `{}` {} a size",
            f.name,
            if f.sized { "requires" } else { "does not take" }
        )));
    }
    Ok(())
}

/// First age at which the job's rank reaches the bound (`inf` if never).
pub fn cutoff_age(policy: &Policy, family: usize, x: Option<f64>, bound: &RankBound) -> Result<f64> {
    let f = policy.family(family)?;
    check_descriptor(f, x)?;
    let (pieces, end) = job_pieces(f, x);
    Ok(first_age(&pieces, 0.0, true, end, bound, policy.tiebreak.new_cutoff()))
}

/// Nonempty old intervals `(i, b_i, c_i)` of a job against the bound.
pub fn old_intervals(
    policy: &Policy,
    family: usize,
    x: Option<f64>,
    bound: &RankBound,
    max_intervals: usize,
) -> Result<Vec<(usize, f64, f64)>> {
    let f = policy.family(family)?;
    check_descriptor(f, x)?;
    let (pieces, end) = job_pieces(f, x);
    Ok(job_work(&pieces, end, bound, policy.tiebreak, max_intervals)?.intervals)
}

/// Per-family work laws, unweighted.
struct FamilyWork {
    new: WorkLaw,
    old: Vec<WorkLaw>,
}

fn family_work(
    f: &Family,
    bound: &RankBound,
    tiebreak: Tiebreak,
    with_old: bool,
    max_intervals: usize,
) -> Result<FamilyWork> {
    if f.sized {
        return sized::family_work(f, bound, tiebreak, with_old, max_intervals)
            .map(|(new, old)| FamilyWork { new, old });
    }
    let (pieces, end) = job_pieces(f, None);
    let jw = job_work(&pieces, end, bound, tiebreak, max_intervals)?;
    let new = ClippedWork::new(f.law.clone(), 0.0, jw.cutoff)?.law();
    let mut old = Vec::new();
    if with_old {
        old = vec![WorkLaw::zero(); jw.width() - 1];
        for &(i, b, c) in &jw.intervals {
            old[i] = ClippedWork::new(f.law.clone(), b, c)?.law();
        }
    }
    Ok(FamilyWork { new, old })
}

/// New `bound`-work of a random arrival, mixed over families.
pub fn new_work(policy: &Policy, bound: &RankBound) -> Result<WorkLaw> {
    let mut parts = Vec::with_capacity(policy.families.len());
    for f in &policy.families {
        let fw = family_work(f, bound, policy.tiebreak, false, DEFAULT_MAX_INTERVALS)?;
        parts.push((f.prob, fw.new));
    }
    Ok(WorkLaw::mixture(parts))
}

fn old_works(policy: &Policy, bound: &RankBound, max_intervals: usize) -> Result<(WorkLaw, Vec<WorkLaw>)> {
    let mut new_parts = Vec::new();
    let mut old_parts: Vec<Vec<(f64, WorkLaw)>> = Vec::new();
    for f in &policy.families {
        let fw = family_work(f, bound, policy.tiebreak, true, max_intervals)?;
        new_parts.push((f.prob, fw.new));
        for (i, law) in fw.old.into_iter().enumerate() {
            if old_parts.len() <= i {
                old_parts.resize_with(i + 1, Vec::new);
            }
            old_parts[i].push((f.prob, law));
        }
    }
    let old = old_parts.into_iter().map(WorkLaw::mixture).collect();
    Ok((WorkLaw::mixture(new_parts), old))
}

/// `i`-old `bound`-work of a random job, mixed over families; zero when no
/// job has an `i`-th interval.
pub fn old_work(policy: &Policy, bound: &RankBound, i: usize) -> Result<WorkLaw> {
    let (_, old) = old_works(policy, bound, DEFAULT_MAX_INTERVALS)?;
    Ok(old.into_iter().nth(i).unwrap_or_default())
}

/// How the recycle index sequence was truncated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    /// Number of indices kept.
    pub indices: usize,
    /// Largest tail mass of any family beyond the ages that were scanned.
    pub residual_mass: f64,
}

/// Work laws and loads for one rank bound.
#[derive(Debug, Clone)]
pub struct WorkProfile {
    pub bound: RankBound,
    pub lambda: f64,
    pub new_work: WorkLaw,
    pub new_mean: f64,
    pub rho_new: f64,
    pub old_work: Vec<WorkLaw>,
    /// `(E[X_old,i], E[X_old,i^2])`.
    pub old_moments: Vec<(f64, f64)>,
    pub rho_old: Vec<f64>,
    pub rho_old_sum: f64,
    pub truncation: Truncation,
}

impl WorkProfile {
    pub fn new(policy: &Policy, bound: &RankBound, lambda: f64) -> Result<Self> {
        Self::with_limit(policy, bound, lambda, DEFAULT_MAX_INTERVALS)
    }

    pub fn with_limit(policy: &Policy, bound: &RankBound, lambda: f64, max_intervals: usize) -> Result<Self> {
        let (new_work, old_work) = old_works(policy, bound, max_intervals)?;
        let new_mean = new_work.mean()?;
        let mut old_moments = Vec::with_capacity(old_work.len());
        for law in &old_work {
            old_moments.push(law.moments()?);
        }
        let rho_old: Vec<f64> = old_moments.iter().map(|m| lambda * m.0).collect();
        let rho_old_sum = rho_old.iter().sum();
        let residual_mass = policy
            .families
            .iter()
            .filter(|f| !f.sized)
            .map(|f| f.law.tail(f.age_ceiling()))
            .fold(0.0, f64::max);
        Ok(WorkProfile {
            bound: bound.clone(),
            lambda,
            new_work,
            new_mean,
            rho_new: lambda * new_mean,
            truncation: Truncation {
                indices: old_work.len(),
                residual_mass,
            },
            old_work,
            old_moments,
            rho_old,
            rho_old_sum,
        })
    }

    pub fn rho_old(&self, i: usize) -> f64 {
        self.rho_old.get(i).copied().unwrap_or(0.0)
    }

    /// `sum_i E[X_old,i^2]`.
    pub fn old_second_moment_sum(&self) -> f64 {
        self.old_moments.iter().map(|m| m.1).sum()
    }

    pub fn busy_period_lst(&self, s: f64) -> Result<f64> {
        busy_period_lst(&self.new_work, self.lambda, s)
    }
}

/// Transform of the busy period started by new work `new`, from below.
pub fn busy_period_lst(new: &WorkLaw, lambda: f64, s: f64) -> Result<f64> {
    busy_period_lst_from(new, lambda, s, 0.0)
}

/// Fixed point of `B = X(s + lambda (1 - B))` iterated from `start`.
pub fn busy_period_lst_from(new: &WorkLaw, lambda: f64, s: f64, start: f64) -> Result<f64> {
    let load = lambda * new.mean()?;
    if load >= 1.0 {
        return Err(SoapError::Unstable { load });
    }
    if s == 0.0 || new.is_zero() {
        return Ok(1.0);
    }
    let mut b = start;
    for _ in 0..BUSY_MAX_ITER {
        let next = new.lst(s + lambda * (1.0 - b))?;
        if (next - b).abs() <= BUSY_TOL {
            return Ok(next);
        }
        b = next;
    }
    Err(SoapError::NoConvergence {
        iterations: BUSY_MAX_ITER,
    })
}
