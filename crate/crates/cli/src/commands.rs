use crate::config::RunConfig;
use crate::error::CliError;
use crate::table::{Cell, Table};
use soap_core::analysis::{mean_response, response_lst, SystemSpec};
use soap_core::simulator::{estimate, run, SimConfig};
use soap_core::{Execution, Policy};

/// Stability is checked for every λ before anything runs.
pub fn systems(policy: &Policy, lambdas: &[f64]) -> Result<Vec<SystemSpec>, CliError> {
    let mean = policy.mean_size();
    lambdas
        .iter()
        .map(|&l| {
            let load = l * mean;
            if load >= 1.0 {
                return Err(CliError::Unstable { lambda: l, load });
            }
            SystemSpec::new(policy.clone(), l).map_err(CliError::from)
        })
        .collect()
}

/// `(family, size)` pairs in config order.
fn targets(cfg: &RunConfig, policy: &Policy) -> Result<Vec<(usize, f64)>, CliError> {
    let mut out = Vec::new();
    for (i, f) in policy.families.iter().enumerate() {
        for x in cfg.sizes_for(&f.law)? {
            out.push((i, x));
        }
    }
    Ok(out)
}

struct Row {
    family: usize,
    size: f64,
    wait: f64,
    residence: f64,
    total: f64,
    lst: Vec<f64>,
}

fn evaluate(spec: &SystemSpec, targets: &[(usize, f64)], lst: &[f64]) -> Result<Vec<Row>, CliError> {
    targets
        .iter()
        .map(|&(family, size)| {
            let r = mean_response(spec, family, size)?;
            let lst = lst
                .iter()
                .map(|&s| response_lst(spec, family, size, s))
                .collect::<soap_core::Result<Vec<f64>>>()?;
            Ok(Row {
                family,
                size,
                wait: r.mean_wait,
                residence: r.mean_residence,
                total: r.mean_total,
                lst,
            })
        })
        .collect()
}

pub fn analyze(cfg: &RunConfig, exec: Execution) -> Result<Table, CliError> {
    cfg.expect_mode("analyze")?;
    let policy = cfg.single_policy()?.build(&cfg.families)?;
    let specs = systems(&policy, &cfg.lambda.values())?;
    let targets = targets(cfg, &policy)?;
    let mut header: Vec<String> = ["lambda", "family", "size", "mean_wait", "mean_residence", "mean_total"]
        .map(String::from)
        .to_vec();
    header.extend(cfg.lst.iter().map(|s| format!("lst_{}", crate::table::fmt_float(*s))));
    let mut table = Table::new(header);
    let results = exec.try_map(&specs, |s| evaluate(s, &targets, &cfg.lst))?;
    for (spec, rows) in specs.iter().zip(results) {
        for r in rows {
            let mut cells: Vec<Cell> = vec![
                spec.lambda.into(),
                policy.families[r.family].name.as_str().into(),
                r.size.into(),
                r.wait.into(),
                r.residence.into(),
                r.total.into(),
            ];
            cells.extend(r.lst.into_iter().map(Cell::from));
            table.push(cells)?;
        }
    }
    Ok(table)
}

pub fn compare(cfg: &RunConfig, exec: Execution) -> Result<Table, CliError> {
    cfg.expect_mode("compare")?;
    let configs = cfg.all_policies();
    if configs.len() < 2 {
        return Err(CliError::Config("compare needs at least two policies".into()));
    }
    let policies = configs
        .iter()
        .map(|p| p.build(&cfg.families))
        .collect::<Result<Vec<_>, _>>()?;
    let lambdas = cfg.lambda.values();
    let specs = policies
        .iter()
        .map(|p| systems(p, &lambdas))
        .collect::<Result<Vec<_>, _>>()?;
    let targets = targets(cfg, &policies[0])?;
    let mut labels: Vec<String> = Vec::new();
    for p in &configs {
        let base = p.name().to_string();
        let n = labels.iter().filter(|l| l.split('#').next() == Some(base.as_str())).count();
        labels.push(if n == 0 { base } else { format!("{base}#{}", n + 1) });
    }
    let mut header: Vec<String> = vec!["lambda".into(), "family".into(), "size".into()];
    header.extend(labels.iter().cloned());
    header.extend(labels[1..].iter().map(|l| format!("delta_{}_minus_{l}", labels[0])));
    let mut table = Table::new(header);
    let jobs: Vec<(usize, usize)> = (0..lambdas.len())
        .flat_map(|li| (0..policies.len()).map(move |pi| (li, pi)))
        .collect();
    let values = exec.try_map(&jobs, |&(li, pi)| {
        targets
            .iter()
            .map(|&(f, x)| Ok(mean_response(&specs[pi][li], f, x)?.mean_total))
            .collect::<Result<Vec<f64>, CliError>>()
    })?;
    for (li, &l) in lambdas.iter().enumerate() {
        for (ti, &(f, x)) in targets.iter().enumerate() {
            let means: Vec<f64> = (0..policies.len()).map(|pi| values[li * policies.len() + pi][ti]).collect();
            let mut cells: Vec<Cell> = vec![l.into(), policies[0].families[f].name.as_str().into(), x.into()];
            cells.extend(means.iter().map(|&m| Cell::from(m)));
            cells.extend(means[1..].iter().map(|&m| Cell::from(means[0] - m)));
            table.push(cells)?;
        }
    }
    Ok(table)
}

pub fn sim_config(cfg: &RunConfig, spec: SystemSpec, seed: Option<u64>) -> SimConfig {
    let mut sc = SimConfig::new(spec, cfg.sim.horizon, seed.unwrap_or(cfg.sim.seed));
    if let Some(w) = cfg.sim.warmup {
        sc.warmup = w;
    }
    sc.ps_quantum = cfg.sim.quantum;
    sc.size_bins = cfg.sim.bins.clone();
    sc
}

/// Job records of one run. Bin estimates go to stderr.
pub fn simulate(cfg: &RunConfig, seed: Option<u64>) -> Result<Table, CliError> {
    cfg.expect_mode("simulate")?;
    let policy = cfg.single_policy()?.build(&cfg.families)?;
    let lambdas = cfg.lambda.values();
    if lambdas.len() != 1 {
        return Err(CliError::Config("simulate takes a single lambda".into()));
    }
    let spec = systems(&policy, &lambdas)?.remove(0);
    let sc = sim_config(cfg, spec, seed);
    let out = run(&sc)?;
    let est = estimate(&sc, &out.records)?;
    eprintln!(
        "overall mean {} (s.e. {})",
        crate::table::fmt_float(est.overall_mean),
        crate::table::fmt_float(est.overall_std_err)
    );
    for b in &est.bins {
        eprintln!(
            "{}: n={} mean {} (s.e. {})",
            b.label,
            b.count,
            crate::table::fmt_float(b.mean),
            crate::table::fmt_float(b.std_err)
        );
    }
    for label in &est.empty_bins {
        eprintln!("{label}: empty");
    }
    let mut table = Table::new(["family", "size", "arrival", "departure", "response"]);
    for r in &out.records {
        table.push(vec![
            policy.families[r.family].name.as_str().into(),
            r.size.into(),
            r.arrival.into(),
            r.departure.into(),
            r.response.into(),
        ])?;
    }
    Ok(table)
}
