//! Acceptance checks. Each criterion prints one PASS/FAIL line.
//!
//! Two criteria compare the engine against displayed closed forms that do
//! not follow from the rank functions they describe. Those print FAIL, and
//! the run additionally requires the engine to agree with the corrected
//! closed form and with simulation, so a red line stays a meaningful one.

mod props;

use soap_core::analysis::reference::{reference_mean, OracleParams};
use soap_core::analysis::{mean_response, ResponseTransform, SystemSpec};
use soap_core::rank::{builtin_policy, FamilySpec, PolicyParams};
use soap_core::simulator::{estimate, run, SimConfig};
use soap_core::{Execution, SizeDistribution};
use std::time::Instant;

/// Criteria whose displayed formula is known not to match its own
/// definitions; see README.
const KNOWN_RED: &[u32] = &[3, 4];

struct Outcome {
    id: u32,
    pass: bool,
    detail: String,
    /// For known reds: whether the corrected comparison holds.
    corrected: Option<bool>,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn params(families: Vec<FamilySpec>) -> PolicyParams {
    PolicyParams {
        families,
        ..Default::default()
    }
}

fn single(name: &str, law: SizeDistribution, lambda: f64) -> SystemSpec {
    let p = builtin_policy(name, &params(vec![FamilySpec::new(1.0, law)])).unwrap();
    SystemSpec::new(p, lambda).unwrap()
}

fn coin() -> SizeDistribution {
    SizeDistribution::coin_flip(2.0, 14.0).unwrap()
}

fn exp1() -> SizeDistribution {
    SizeDistribution::exponential(1.0).unwrap()
}

fn chunks() -> SizeDistribution {
    SizeDistribution::finite(vec![(1.5, 0.5), (4.5, 0.5)]).unwrap()
}

fn with_law(law: SizeDistribution, lambda: f64, x: f64) -> OracleParams {
    OracleParams {
        lambda,
        x,
        law: Some(law),
        ..Default::default()
    }
}

fn discretized_fb(lambda: f64) -> SystemSpec {
    let mut pr = params(vec![FamilySpec::new(1.0, chunks())]);
    pr.spacing = Some(1.0);
    SystemSpec::new(builtin_policy("discretized_fb", &pr).unwrap(), lambda).unwrap()
}

fn humans_robots(lambda: f64) -> SystemSpec {
    let mut pr = params(vec![
        FamilySpec::new(0.5, exp1()),
        FamilySpec::new(0.5, SizeDistribution::uniform(0.0, 2.0).unwrap()),
    ]);
    pr.human_threshold = Some(1.0);
    SystemSpec::new(builtin_policy("humans_robots", &pr).unwrap(), lambda).unwrap()
}

fn hr_params(lambda: f64, x: f64) -> OracleParams {
    OracleParams {
        lambda,
        x,
        human: Some(exp1()),
        robot: Some(SizeDistribution::uniform(0.0, 2.0).unwrap()),
        p_human: Some(0.5),
        human_threshold: Some(1.0),
        ..Default::default()
    }
}

fn gittins_pareto(lambda: f64) -> SystemSpec {
    let pr = params(vec![
        FamilySpec::new(0.5, SizeDistribution::pareto(2.5, 1.0).unwrap()),
        FamilySpec::new(0.5, SizeDistribution::pareto(3.0, 2.0).unwrap()),
    ]);
    SystemSpec::new(builtin_policy("gittins", &pr).unwrap(), lambda).unwrap()
}

fn gp_params(lambda: f64, x: f64) -> OracleParams {
    OracleParams {
        lambda,
        x,
        pareto_a: Some((2.5, 1.0)),
        pareto_b: Some((3.0, 2.0)),
        p_a: Some(0.5),
        ..Default::default()
    }
}

fn engine(spec: &SystemSpec, family: usize, x: f64) -> f64 {
    mean_response(spec, family, x).unwrap().mean_total
}

const COIN_GRID: [f64; 4] = [0.01, 0.05, 0.1, 0.12];

fn criterion_coin_flip(id: u32, policy: &str, oracle: &str, spots: (f64, f64)) -> Outcome {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    let mut spot = (0.0, 0.0);
    for &l in &COIN_GRID {
        let spec = single(policy, coin(), l);
        for &x in &[2.0, 14.0] {
            let e = engine(&spec, 0, x);
            let o = reference_mean(oracle, &OracleParams { lambda: l, x, ..Default::default() }).unwrap();
            worst = worst.max(rel(e, o));
            if l == 0.1 {
                if x == 2.0 {
                    spot.0 = e;
                } else {
                    spot.1 = e;
                }
            }
        }
    }
    let ms = t0.elapsed().as_secs_f64() * 1e3;
    let spot_ok = rel(spot.0, spots.0) < 1e-9 && rel(spot.1, spots.1) < 1e-9;
    let mut pass = worst < 1e-9 && spot_ok && ms < 1000.0;
    let mut detail = format!(
        "max rel err {worst:.2e}; at lambda=0.1 sizes 2/14 give {:.6}/{:.6}; {ms:.0} ms",
        spot.0, spot.1
    );
    if id == 2 {
        let mut dworst: f64 = 0.0;
        for &l in &COIN_GRID {
            let s = single("serpt", coin(), l);
            let g = single("gittins", coin(), l);
            let d2 = engine(&s, 0, 2.0) - engine(&g, 0, 2.0);
            let d14 = engine(&s, 0, 14.0) - engine(&g, 0, 14.0);
            dworst = dworst
                .max(rel(d2, 12.0 * l / (1.0 - 2.0 * l)))
                .max(rel(d14, -8.0 * l / (1.0 - 2.0 * l)));
        }
        pass &= dworst < 1e-9;
        detail.push_str(&format!("; delta vs serpt max rel err {dworst:.2e}"));
    }
    Outcome {
        id,
        pass,
        detail,
        corrected: None,
    }
}

fn criterion_3() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_corrected: f64 = 0.0;
    let mut cells = Vec::new();
    for &l in &[0.05, 0.1, 0.2] {
        let spec = discretized_fb(l);
        for &x in &[1.5, 4.5] {
            let e = engine(&spec, 0, x);
            let printed = reference_mean("discretized_fb", &with_law(chunks(), l, x)).unwrap();
            let corrected = reference_mean("discretized_fb_recycled", &with_law(chunks(), l, x)).unwrap();
            worst = worst.max(rel(e, printed));
            worst_corrected = worst_corrected.max(rel(e, corrected));
            if rel(e, printed) >= 1e-9 {
                cells.push(format!("(lambda={l}, x={x}: engine {e:.6}, displayed {printed:.6})"));
            }
        }
    }
    let mut detail = format!("max rel err vs displayed form {worst:.2e}");
    if !cells.is_empty() {
        detail.push_str(&format!(" off at {}", cells.join(", ")));
    }
    detail.push_str(&format!("; vs form with recycled chunks {worst_corrected:.2e}"));
    Outcome {
        id: 3,
        pass: worst < 1e-9,
        detail,
        corrected: Some(worst_corrected < 1e-9),
    }
}

fn criterion_4() -> Outcome {
    let mut worst_h: f64 = 0.0;
    let mut worst_r: f64 = 0.0;
    let mut worst_rc: f64 = 0.0;
    let mut fam_worst: f64 = 0.0;
    for &l in &[0.2, 0.4] {
        let spec = humans_robots(l);
        let th = reference_mean("humans", &hr_params(l, 0.0)).unwrap();
        // the displayed human mean averages over sizes; per size it is wait + x
        for &x in &[0.5, 1.5] {
            let h = engine(&spec, 0, x);
            worst_h = worst_h.max(rel(h, th - 1.0 + x));
            let r = engine(&spec, 1, x);
            worst_r = worst_r.max(rel(r, reference_mean("robots", &hr_params(l, x)).unwrap()));
            worst_rc = worst_rc.max(rel(r, reference_mean("robots_corrected", &hr_params(l, x)).unwrap()));
        }
        let fam = soap_core::analysis::family_mean(&spec, 0, Execution::Sequential).unwrap();
        fam_worst = fam_worst.max(rel(fam, th));
    }
    Outcome {
        id: 4,
        pass: worst_h < 1e-8 && fam_worst < 1e-8 && worst_r < 1e-8,
        detail: format!(
            "humans max rel err {worst_h:.2e} per size, {fam_worst:.2e} over sizes; robots vs displayed form {worst_r:.2e}; robots vs form with the new-work load {worst_rc:.2e}"
        ),
        corrected: Some(worst_h < 1e-8 && fam_worst < 1e-8 && worst_rc < 1e-8),
    }
}

fn criterion_5() -> Outcome {
    let spec = gittins_pareto(0.3);
    let mut worst: f64 = 0.0;
    let mut vals = Vec::new();
    for &x in &[0.5, 2.0, 5.0] {
        let e = engine(&spec, 0, x);
        let o = reference_mean("gittins_pareto", &gp_params(0.3, x)).unwrap();
        worst = worst.max(rel(e, o));
        vals.push(format!("{e:.6}"));
    }
    Outcome {
        id: 5,
        pass: worst < 1e-8,
        detail: format!("max rel err {worst:.2e}; sizes 0.5/2/5 give {}", vals.join("/")),
        corrected: None,
    }
}

fn criterion_6() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (policy, oracle) in [("fcfs", "pk"), ("srpt", "srpt"), ("fb", "fb")] {
        let mut w: f64 = 0.0;
        for &l in &[0.3, 0.6, 0.9] {
            let spec = single(policy, exp1(), l);
            for &x in &[0.5, 1.0, 3.0] {
                let e = engine(&spec, 0, x);
                let o = reference_mean(oracle, &with_law(exp1(), l, x)).unwrap();
                w = w.max(rel(e, o));
            }
        }
        parts.push(format!("{policy} {w:.2e}"));
        worst = worst.max(w);
    }
    Outcome {
        id: 6,
        pass: worst < 1e-9,
        detail: format!("max rel err {}", parts.join(", ")),
        corrected: None,
    }
}

/// `-T'(0)` by forward differences with two Richardson steps.
fn lst_slope(t: &ResponseTransform, mean: f64) -> f64 {
    let h = 1e-2 / mean;
    let d = |h: f64| (1.0 - t.eval(h).unwrap()) / h;
    let (d1, d2, d4) = (d(h), d(h / 2.0), d(h / 4.0));
    (8.0 * d4 - 6.0 * d2 + d1) / 3.0
}

fn criterion_7() -> Outcome {
    let cases: Vec<(&str, SystemSpec, usize, f64)> = vec![
        ("serpt", single("serpt", coin(), 0.1), 0, 14.0),
        ("serpt", single("serpt", coin(), 0.1), 0, 2.0),
        ("gittins", single("gittins", coin(), 0.1), 0, 14.0),
        ("discretized_fb", discretized_fb(0.2), 0, 1.5),
        ("discretized_fb", discretized_fb(0.2), 0, 4.5),
        ("human", humans_robots(0.4), 0, 1.5),
        ("robot", humans_robots(0.4), 1, 1.5),
        ("gittins_pareto", gittins_pareto(0.3), 0, 2.0),
        ("fcfs", single("fcfs", exp1(), 0.6), 0, 1.0),
        ("srpt", single("srpt", exp1(), 0.6), 0, 1.0),
        ("fb", single("fb", exp1(), 0.6), 0, 1.0),
    ];
    let mut worst: f64 = 0.0;
    let mut at_zero = true;
    let mut name = "";
    for (n, spec, fam, x) in &cases {
        let t = ResponseTransform::new(spec, *fam, *x).unwrap();
        at_zero &= t.eval(0.0).unwrap() == 1.0;
        let mean = engine(spec, *fam, *x);
        let e = rel(lst_slope(&t, mean), mean);
        if e > worst {
            worst = e;
            name = n;
        }
    }
    Outcome {
        id: 7,
        pass: at_zero && worst < 1e-4,
        detail: format!(
            "{} cases; T(0) = 1 exactly: {at_zero}; max rel err of -T'(0) {worst:.2e} ({name})",
            cases.len()
        ),
        corrected: None,
    }
}

fn criterion_8() -> Outcome {
    let t0 = Instant::now();
    let arrivals = 1_000_000;
    let cases: Vec<(&str, SystemSpec, Option<Vec<f64>>)> = vec![
        ("fcfs", single("fcfs", exp1(), 0.5), Some(vec![0.0, 0.5, 1.0, 2.0, 4.0, f64::INFINITY])),
        ("srpt", single("srpt", exp1(), 0.5), Some(vec![0.0, 0.5, 1.0, 2.0, 4.0, f64::INFINITY])),
        ("serpt", single("serpt", coin(), 0.1), None),
        ("gittins", single("gittins", coin(), 0.1), None),
        ("discretized_fb", discretized_fb(0.2), None),
        ("humans_robots", humans_robots(0.4), Some(vec![0.0, 0.5, 1.0, 1.5, 2.0, f64::INFINITY])),
    ];
    let configs: Vec<SimConfig> = cases
        .iter()
        .enumerate()
        .map(|(i, (_, spec, bins))| {
            let mut c = SimConfig::new(spec.clone(), arrivals, 20_241_014 + i as u64);
            c.size_bins = bins.clone();
            c
        })
        .collect();
    let runs = Execution::Parallel.map(&configs, |c| {
        let out = run(c).unwrap();
        estimate(c, &out.records).unwrap()
    });
    let mut worst_z: f64 = 0.0;
    let mut worst_at = String::new();
    let mut bins = 0;
    for ((name, spec, _), est) in cases.iter().zip(&runs) {
        for b in &est.bins {
            if b.count < 1000 {
                continue;
            }
            let analytic = b.analytic(spec).unwrap();
            let z = (b.mean - analytic).abs() / b.std_err;
            if std::env::var_os("SOAP_ACCEPTANCE_VERBOSE").is_some() {
                println!("  {name} {}: n={} sim {:.6} se {:.2e} analytic {analytic:.6} z {z:.2}", b.label, b.count, b.mean, b.std_err);
            }
            bins += 1;
            if z > worst_z {
                worst_z = z;
                worst_at = format!("{name} {}: sim {:.4} vs {analytic:.4}", b.label, b.mean);
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    Outcome {
        id: 8,
        pass: worst_z < 3.0 && secs < 600.0,
        detail: format!("{bins} bins; worst |z| {worst_z:.2} ({worst_at}); {secs:.1} s"),
        corrected: None,
    }
}

fn criterion_9() -> Outcome {
    let results: Vec<(&str, Result<(), String>)> =
        props::SUITES.iter().map(|&n| (n, props::run_suite(n, 64))).collect();
    for (n, r) in &results {
        if let Err(e) = r {
            println!("  {n}: {e}");
        }
    }
    Outcome {
        id: 9,
        pass: results.iter().all(|r| r.1.is_ok()),
        detail: results
            .iter()
            .map(|(n, r)| format!("{n} {}", if r.is_ok() { "ok" } else { "broken" }))
            .collect::<Vec<_>>()
            .join(", "),
        corrected: None,
    }
}

#[test]
fn acceptance_criteria() {
    let outcomes = vec![
        criterion_coin_flip(1, "serpt", "serpt_coin_flip", (4.25, 46.75)),
        criterion_coin_flip(2, "gittins", "gittins_coin_flip", (2.75, 47.75)),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
    ];
    for o in &outcomes {
        println!("criterion {}: {} ({})", o.id, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    for o in &outcomes {
        if !o.pass {
            assert!(KNOWN_RED.contains(&o.id), "criterion {} failed", o.id);
            assert_eq!(o.corrected, Some(true), "criterion {} fails its corrected form too", o.id);
        }
    }
}
