//! Property suites shared by `properties` and `acceptance`. Each suite runs a
//! deterministic proptest runner for the requested number of cases.

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use soap_core::distributions::ClippedWork;
use soap_core::rank::{builtin_policy, worst_future_rank, FamilySpec, PolicyParams};
use soap_core::work::{new_work, old_intervals, DEFAULT_MAX_INTERVALS};
use soap_core::{Policy, Rank, RankBound, SizeDistribution};
use std::cmp::Ordering;
use std::sync::Arc;

pub const SUITES: &[&str] = &[
    "rank_order",
    "worst_rank_monotone",
    "recycle_counts",
    "busy_period_bracketing",
    "clip_partition",
    "new_load_monotone",
];

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn law() -> impl Strategy<Value = SizeDistribution> {
    prop_oneof![
        (0.3f64..3.0).prop_map(|r| SizeDistribution::exponential(r).unwrap()),
        (0.0f64..1.0, 0.5f64..4.0).prop_map(|(lo, w)| SizeDistribution::uniform(lo, lo + w).unwrap()),
        (0.5f64..3.0, 3.5f64..15.0).prop_map(|(a, b)| SizeDistribution::coin_flip(a, b).unwrap()),
        (0.05f64..0.95, 0.2f64..1.0, 1.5f64..6.0)
            .prop_map(|(p, r1, r2)| SizeDistribution::hyperexponential(vec![(p, r1), (1.0 - p, r2)]).unwrap()),
        (2.2f64..4.0, 0.5f64..2.0).prop_map(|(a, b)| SizeDistribution::pareto(a, b).unwrap()),
    ]
}

fn policy(name: &str, law: SizeDistribution) -> Policy {
    let mut params = PolicyParams {
        families: vec![FamilySpec::new(1.0, law)],
        ..Default::default()
    };
    params.spacing = Some(1.0);
    builtin_policy(name, &params).unwrap()
}

fn bound() -> impl Strategy<Value = RankBound> {
    // small integer grid so that ties are common
    (prop::collection::vec(-3i32..3, 2), any::<bool>()).prop_map(|(v, open)| RankBound {
        rank: Rank::new(v.into_iter().map(f64::from).collect()),
        open,
    })
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg()))
    }
}

fn rank_order(cases: u32) -> Result<(), String> {
    runner(cases)
        .run(&(bound(), bound(), bound()), |(a, b, c)| {
            let ab = a.lex(&b);
            check(a.lex(&a) == Ordering::Equal, || format!("{a:?} not equal to itself"))?;
            check(b.lex(&a) == ab.reverse(), || format!("asymmetric on {a:?} {b:?}"))?;
            if ab != Ordering::Greater && b.lex(&c) != Ordering::Greater {
                check(a.lex(&c) != Ordering::Greater, || format!("intransitive on {a:?} {b:?} {c:?}"))?;
            }
            check(
                ab != Ordering::Equal || (a.rank == b.rank && a.open == b.open),
                || format!("distinct bounds {a:?} {b:?} tie"),
            )
        })
        .map_err(|e| e.to_string())
}

fn worst_rank_monotone(cases: u32) -> Result<(), String> {
    let names = prop::sample::select(vec!["srpt", "fb", "fcfs", "serpt", "gittins", "discretized_fb", "psjf"]);
    runner(cases)
        .run(&(names, law(), 0.05f64..0.95, 0.0f64..1.0, 0.0f64..1.0), |(name, law, q, u, v)| {
            let p = policy(name, law.clone());
            let x = law.quantile(q).max(1e-3);
            let (a1, a2) = (u.min(v) * x, u.max(v) * x);
            prop_assume!(a2 < x);
            let w1 = worst_future_rank(&p, 0, x, a1).unwrap();
            let w2 = worst_future_rank(&p, 0, x, a2).unwrap();
            check(w1.lex(&w2) != Ordering::Less, || {
                format!("{name} on {law:?}: worst rank rises from {w1:?} at {a1} to {w2:?} at {a2}")
            })
        })
        .map_err(|e| e.to_string())
}

fn recycle_counts(cases: u32) -> Result<(), String> {
    runner(cases)
        .run(&(law(), -2.0f64..8.0, any::<bool>(), 0.05f64..0.95), |(law, r, open, q)| {
            let b = RankBound {
                rank: Rank::scalar(r),
                open,
            };
            let fb = policy("fb", law.clone());
            let ivs = old_intervals(&fb, 0, None, &b, DEFAULT_MAX_INTERVALS).unwrap();
            check(ivs.iter().all(|iv| iv.0 == 0), || format!("fb recycles: {ivs:?}"))?;
            let fcfs = policy("fcfs", law.clone());
            let ivs = old_intervals(&fcfs, 0, None, &RankBound { rank: Rank::scalar(-r), open }, DEFAULT_MAX_INTERVALS)
                .unwrap();
            check(ivs.iter().all(|iv| iv.0 <= 1), || format!("fcfs recycles twice: {ivs:?}"))?;
            let srpt = policy("srpt", law.clone());
            let x = law.quantile(q).max(1e-3);
            let ivs = old_intervals(&srpt, 0, Some(x), &b, DEFAULT_MAX_INTERVALS).unwrap();
            check(ivs.iter().all(|iv| iv.0 <= 1), || format!("srpt recycles twice: {ivs:?}"))
        })
        .map_err(|e| e.to_string())
}

fn busy_period_bracketing(cases: u32) -> Result<(), String> {
    runner(cases)
        .run(&(law(), 0.05f64..0.9, 0.01f64..5.0, 0.05f64..0.95), |(law, rho, s, q)| {
            let p = policy("srpt", law.clone());
            let r = law.quantile(q);
            let new = new_work(&p, &RankBound::closed(Rank::scalar(r))).unwrap();
            let m = new.mean().unwrap();
            prop_assume!(m > 0.0);
            let lambda = rho / law.mean();
            let b = soap_core::work::busy_period_lst(&new, lambda, s).unwrap();
            let phi = |b: f64| new.lst(s + lambda * (1.0 - b)).unwrap();
            check((phi(b) - b).abs() < 1e-11, || format!("not a fixed point: {b} vs {}", phi(b)))?;
            let (mut lo, mut hi) = (0.0, 1.0);
            for k in 0..30 {
                check(
                    lo <= b + 1e-12 && b <= hi + 1e-12,
                    || format!("step {k}: {b} outside [{lo}, {hi}]"),
                )?;
                let (nlo, nhi) = (phi(lo), phi(hi));
                check(nlo >= lo - 1e-15 && nhi <= hi + 1e-15, || format!("step {k}: iterates not monotone"))?;
                lo = nlo;
                hi = nhi;
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn clip_partition(cases: u32) -> Result<(), String> {
    runner(cases)
        .run(&(law(), prop::collection::vec(0.0f64..12.0, 0..6)), |(law, mut cuts)| {
            cuts.push(0.0);
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            cuts.push(f64::INFINITY);
            let src = Arc::new(law.clone());
            let mut sum = 0.0;
            for w in cuts.windows(2) {
                let cw = ClippedWork::new(src.clone(), w[0], w[1]).unwrap();
                sum += cw.clipped_moments().unwrap().0;
            }
            let mean = law.mean();
            check((sum - mean).abs() <= 1e-9 * mean, || format!("clips of {law:?} at {cuts:?} sum to {sum}, mean {mean}"))
        })
        .map_err(|e| e.to_string())
}

fn new_load_monotone(cases: u32) -> Result<(), String> {
    let names = prop::sample::select(vec!["srpt", "fb", "fcfs", "serpt", "gittins", "psjf"]);
    runner(cases)
        .run(&(names, law(), 0.02f64..0.98, 0.02f64..0.98), |(name, law, q1, q2)| {
            let p = policy(name, law.clone());
            let (x1, x2) = (law.quantile(q1.min(q2)), law.quantile(q1.max(q2)));
            // realistic bounds: worst ranks of two jobs at arrival
            let b1 = worst_future_rank(&p, 0, x1.max(1e-3), 0.0).unwrap();
            let b2 = worst_future_rank(&p, 0, x2.max(1e-3), 0.0).unwrap();
            let (lo, hi) = if b1.lex(&b2) == Ordering::Greater { (b2, b1) } else { (b1, b2) };
            let m_lo = new_work(&p, &lo).unwrap().mean().unwrap();
            let m_hi = new_work(&p, &hi).unwrap().mean().unwrap();
            check(m_lo <= m_hi * (1.0 + 1e-12) + 1e-15, || {
                format!("{name} on {law:?}: new load falls from {m_lo} at {lo:?} to {m_hi} at {hi:?}")
            })
        })
        .map_err(|e| e.to_string())
}

pub fn run_suite(name: &str, cases: u32) -> Result<(), String> {
    match name {
        "rank_order" => rank_order(cases),
        "worst_rank_monotone" => worst_rank_monotone(cases),
        "recycle_counts" => recycle_counts(cases),
        "busy_period_bracketing" => busy_period_bracketing(cases),
        "clip_partition" => clip_partition(cases),
        "new_load_monotone" => new_load_monotone(cases),
        _ => Err(format!("unknown suite {name}")),
    }
}
