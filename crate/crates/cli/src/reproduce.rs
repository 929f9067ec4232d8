//! Case studies: engine values against closed forms, and simulation against
//! the engine.

use crate::error::CliError;
use crate::table::{Cell, Table};
use soap_core::analysis::reference::{reference_mean, OracleParams};
use soap_core::analysis::{family_mean, mean_response, SystemSpec};
use soap_core::rank::{builtin_policy, FamilySpec, PolicyParams};
use soap_core::simulator::{estimate, run, SimConfig};
use soap_core::{Execution, SizeDistribution};

pub const CASES: &[&str] = &[
    "serpt_vs_gittins",
    "discretized_fb",
    "humans_robots",
    "gittins_pareto",
    "classical",
    "simulation",
];

const ANALYSIS_TOL: f64 = 1e-9;
const QUADRATURE_TOL: f64 = 1e-8;
const SIM_Z: f64 = 3.0;
const SIM_ARRIVALS: usize = 1_000_000;

struct Check {
    quantity: String,
    lambda: f64,
    size: f64,
    value: f64,
    reference: f64,
    /// Relative error, or |z| for simulation rows.
    error: f64,
    tolerance: f64,
}

impl Check {
    fn relative(quantity: impl Into<String>, lambda: f64, size: f64, value: f64, reference: f64, tolerance: f64) -> Self {
        Check {
            quantity: quantity.into(),
            lambda,
            size,
            value,
            reference,
            error: (value - reference).abs() / reference.abs(),
            tolerance,
        }
    }

    fn pass(&self) -> bool {
        self.error < self.tolerance
    }
}

fn system(name: &str, params: PolicyParams, lambda: f64) -> Result<SystemSpec, CliError> {
    Ok(SystemSpec::new(builtin_policy(name, &params)?, lambda)?)
}

fn one(law: &SizeDistribution) -> PolicyParams {
    PolicyParams {
        families: vec![FamilySpec::new(1.0, law.clone())],
        ..Default::default()
    }
}

fn total(spec: &SystemSpec, family: usize, x: f64) -> Result<f64, CliError> {
    Ok(mean_response(spec, family, x)?.mean_total)
}

fn oracle(id: &str, p: &OracleParams) -> Result<f64, CliError> {
    Ok(reference_mean(id, p)?)
}

fn coin() -> SizeDistribution {
    SizeDistribution::coin_flip(2.0, 14.0).expect("valid law")
}

fn exp1() -> SizeDistribution {
    SizeDistribution::exponential(1.0).expect("valid law")
}

fn serpt_vs_gittins() -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    for &l in &[0.01, 0.05, 0.1, 0.12] {
        let s = system("serpt", one(&coin()), l)?;
        let g = system("gittins", one(&coin()), l)?;
        for &x in &[2.0, 14.0] {
            let p = OracleParams { lambda: l, x, ..Default::default() };
            let (vs, vg) = (total(&s, 0, x)?, total(&g, 0, x)?);
            out.push(Check::relative("serpt", l, x, vs, oracle("serpt_coin_flip", &p)?, ANALYSIS_TOL));
            out.push(Check::relative("gittins", l, x, vg, oracle("gittins_coin_flip", &p)?, ANALYSIS_TOL));
            let delta = if x == 2.0 { 12.0 } else { -8.0 } * l / (1.0 - 2.0 * l);
            out.push(Check::relative("delta", l, x, vs - vg, delta, ANALYSIS_TOL));
        }
    }
    Ok(out)
}

fn discretized_fb() -> Result<Vec<Check>, CliError> {
    let law = SizeDistribution::finite(vec![(1.5, 0.5), (4.5, 0.5)])?;
    let mut params = one(&law);
    params.spacing = Some(1.0);
    let mut out = Vec::new();
    for &l in &[0.05, 0.1, 0.2] {
        let spec = system("discretized_fb", params.clone(), l)?;
        for &x in &[1.5, 4.5] {
            let v = total(&spec, 0, x)?;
            let p = OracleParams { lambda: l, x, law: Some(law.clone()), ..Default::default() };
            out.push(Check::relative("displayed", l, x, v, oracle("discretized_fb", &p)?, ANALYSIS_TOL));
            out.push(Check::relative("recycled", l, x, v, oracle("discretized_fb_recycled", &p)?, ANALYSIS_TOL));
        }
    }
    Ok(out)
}

fn humans_robots() -> Result<Vec<Check>, CliError> {
    let robot = SizeDistribution::uniform(0.0, 2.0)?;
    let mut params = PolicyParams {
        families: vec![FamilySpec::new(0.5, exp1()), FamilySpec::new(0.5, robot.clone())],
        ..Default::default()
    };
    params.human_threshold = Some(1.0);
    let mut out = Vec::new();
    for &l in &[0.2, 0.4] {
        let spec = system("humans_robots", params.clone(), l)?;
        let p = |x: f64| OracleParams {
            lambda: l,
            x,
            human: Some(exp1()),
            robot: Some(robot.clone()),
            p_human: Some(0.5),
            human_threshold: Some(1.0),
            ..Default::default()
        };
        let th = oracle("humans", &p(0.0))?;
        let fam = family_mean(&spec, 0, Execution::Sequential)?;
        out.push(Check::relative("human_mean", l, 0.0, fam, th, QUADRATURE_TOL));
        for &x in &[0.5, 1.5] {
            // human response is the common wait plus the size itself
            out.push(Check::relative("human", l, x, total(&spec, 0, x)?, th - exp1().mean() + x, QUADRATURE_TOL));
            let r = total(&spec, 1, x)?;
            out.push(Check::relative("robot_displayed", l, x, r, oracle("robots", &p(x))?, QUADRATURE_TOL));
            out.push(Check::relative("robot_corrected", l, x, r, oracle("robots_corrected", &p(x))?, QUADRATURE_TOL));
        }
    }
    Ok(out)
}

fn gittins_pareto() -> Result<Vec<Check>, CliError> {
    let (a, b) = (SizeDistribution::pareto(2.5, 1.0)?, SizeDistribution::pareto(3.0, 2.0)?);
    let two = |pa: f64| PolicyParams {
        families: vec![FamilySpec::new(pa, a.clone()), FamilySpec::new(1.0 - pa, b.clone())],
        ..Default::default()
    };
    let p = |pa: f64, x: f64| OracleParams {
        lambda: 0.3,
        x,
        pareto_a: Some((2.5, 1.0)),
        pareto_b: Some((3.0, 2.0)),
        p_a: Some(pa),
        ..Default::default()
    };
    let spec = system("gittins", two(0.5), 0.3)?;
    let alone = system("gittins", two(1.0), 0.3)?;
    let single = system("gittins", one(&a), 0.3)?;
    let mut out = Vec::new();
    for &x in &[0.5, 2.0, 5.0] {
        out.push(Check::relative("class_a", 0.3, x, total(&spec, 0, x)?, oracle("gittins_pareto", &p(0.5, x))?, QUADRATURE_TOL));
        let v = total(&alone, 0, x)?;
        out.push(Check::relative("no_class_b", 0.3, x, v, oracle("gittins_pareto", &p(1.0, x))?, QUADRATURE_TOL));
        out.push(Check::relative("no_class_b_vs_single", 0.3, x, v, total(&single, 0, x)?, ANALYSIS_TOL));
    }
    Ok(out)
}

fn classical() -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    for (policy, id) in [("fcfs", "pk"), ("srpt", "srpt"), ("fb", "fb")] {
        for &l in &[0.3, 0.6, 0.9] {
            let spec = system(policy, one(&exp1()), l)?;
            for &x in &[0.5, 1.0, 3.0] {
                let p = OracleParams { lambda: l, x, law: Some(exp1()), ..Default::default() };
                out.push(Check::relative(policy, l, x, total(&spec, 0, x)?, oracle(id, &p)?, ANALYSIS_TOL));
            }
        }
    }
    Ok(out)
}

fn simulation(seed: u64, exec: Execution) -> Result<Vec<Check>, CliError> {
    let edges = |v: &[f64]| Some(v.iter().copied().chain([f64::INFINITY]).collect::<Vec<f64>>());
    let mut dfb = one(&SizeDistribution::finite(vec![(1.5, 0.5), (4.5, 0.5)])?);
    dfb.spacing = Some(1.0);
    let mut hr = PolicyParams {
        families: vec![FamilySpec::new(0.5, exp1()), FamilySpec::new(0.5, SizeDistribution::uniform(0.0, 2.0)?)],
        ..Default::default()
    };
    hr.human_threshold = Some(1.0);
    let cases = vec![
        (system("fcfs", one(&exp1()), 0.5)?, edges(&[0.0, 0.5, 1.0, 2.0, 4.0])),
        (system("srpt", one(&exp1()), 0.5)?, edges(&[0.0, 0.5, 1.0, 2.0, 4.0])),
        (system("serpt", one(&coin()), 0.1)?, None),
        (system("gittins", one(&coin()), 0.1)?, None),
        (system("discretized_fb", dfb, 0.2)?, None),
        (system("humans_robots", hr, 0.4)?, edges(&[0.0, 0.5, 1.0, 1.5, 2.0])),
    ];
    let configs: Vec<SimConfig> = cases
        .into_iter()
        .enumerate()
        .map(|(i, (spec, bins))| {
            let mut c = SimConfig::new(spec, SIM_ARRIVALS, seed.wrapping_add(i as u64));
            c.size_bins = bins;
            c
        })
        .collect();
    let estimates = exec.try_map(&configs, |c| -> Result<_, CliError> { Ok(estimate(c, &run(c)?.records)?) })?;
    let mut out = Vec::new();
    for (c, est) in configs.iter().zip(estimates) {
        for b in est.bins.iter().filter(|b| b.count >= 1000) {
            let analytic = b.analytic(&c.spec)?;
            out.push(Check {
                quantity: format!("{} {}", c.spec.policy.name, b.label),
                lambda: c.spec.lambda,
                size: if b.point { b.range.0 } else { f64::NAN },
                value: b.mean,
                reference: analytic,
                error: (b.mean - analytic).abs() / b.std_err,
                tolerance: SIM_Z,
            });
        }
    }
    Ok(out)
}

/// Table of checks; the error carries the failures once the table is
/// written.
pub fn reproduce(case: &str, seed: u64, exec: Execution) -> Result<(Table, Option<CliError>), CliError> {
    let checks = match case {
        "serpt_vs_gittins" => serpt_vs_gittins()?,
        "discretized_fb" => discretized_fb()?,
        "humans_robots" => humans_robots()?,
        "gittins_pareto" => gittins_pareto()?,
        "classical" => classical()?,
        "simulation" => simulation(seed, exec)?,
        _ => {
            return Err(CliError::Config(format!(
                "unknown case `{case}`; known cases: {}",
                CASES.join(", ")
            )))
        }
    };
    let mut table = Table::new([
        "case", "quantity", "lambda", "size", "value", "reference", "error", "tolerance", "status",
    ]);
    let mut failed = Vec::new();
    for c in &checks {
        let status = if c.pass() { "pass" } else { "fail" };
        if !c.pass() {
            failed.push(format!("{} (lambda {}, size {})", c.quantity, c.lambda, c.size));
        }
        // binned simulation rows have no single size
        let size: Cell = if c.size.is_nan() { "".into() } else { c.size.into() };
        table.push(vec![
            case.into(),
            c.quantity.as_str().into(),
            c.lambda.into(),
            size,
            c.value.into(),
            c.reference.into(),
            c.error.into(),
            c.tolerance.into(),
            status.into(),
        ])?;
    }
    let summary = format!("{case}: {} of {} checks passed", checks.len() - failed.len(), checks.len());
    eprintln!("{summary}");
    let err = (!failed.is_empty()).then(|| CliError::Check(format!("{summary}; failing: {}", failed.join(", "))));
    Ok((table, err))
}
