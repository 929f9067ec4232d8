//! Run configuration file.

use crate::error::CliError;
use serde::Deserialize;
use soap_core::rank::{builtin_policy, CurveOptions, FamilySpec, PolicyParams};
use soap_core::{Policy, SizeDistribution, Tiebreak};
use std::path::Path;

pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default)]
    pub mode: Option<String>,
    #[serde(default)]
    pub policy: Option<PolicyConfig>,
    /// Policies side by side, for `compare`.
    #[serde(default)]
    pub policies: Vec<PolicyConfig>,
    pub families: Vec<FamilySpec>,
    pub lambda: Lambdas,
    #[serde(default)]
    pub sizes: Option<Sizes>,
    /// Transform arguments reported as extra `analyze` columns.
    #[serde(default)]
    pub lst: Vec<f64>,
    #[serde(default)]
    pub sim: SimOptions,
    #[serde(default)]
    pub output: Option<String>,
}

/// A catalog name, either bare or with its parameters.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PolicyConfig {
    Name(String),
    Full {
        name: String,
        #[serde(default)]
        spacing: Option<f64>,
        #[serde(default)]
        human_threshold: Option<f64>,
        #[serde(default)]
        tiebreak: Option<Tiebreak>,
        #[serde(default)]
        curve: Option<CurveOptions>,
    },
}

impl PolicyConfig {
    pub fn name(&self) -> &str {
        match self {
            PolicyConfig::Name(n) | PolicyConfig::Full { name: n, .. } => n,
        }
    }

    pub fn build(&self, families: &[FamilySpec]) -> Result<Policy, CliError> {
        let mut params = PolicyParams {
            families: families.to_vec(),
            ..Default::default()
        };
        if let PolicyConfig::Full {
            spacing,
            human_threshold,
            tiebreak,
            curve,
            ..
        } = self
        {
            params.spacing = *spacing;
            params.human_threshold = *human_threshold;
            params.tiebreak = *tiebreak;
            params.curve = *curve;
        }
        builtin_policy(self.name(), &params).map_err(CliError::from)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Lambdas {
    One(f64),
    Sweep(Vec<f64>),
}

impl Lambdas {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Lambdas::One(l) => vec![*l],
            Lambdas::Sweep(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Sizes {
    List(Vec<f64>),
    Quantiles { quantiles: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimOptions {
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub warmup: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_quantum")]
    pub quantum: f64,
    #[serde(default)]
    pub bins: Option<Vec<f64>>,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            horizon: default_horizon(),
            warmup: None,
            seed: 0,
            quantum: default_quantum(),
            bins: None,
        }
    }
}

fn default_horizon() -> usize {
    100_000
}

fn default_quantum() -> f64 {
    soap_core::simulator::DEFAULT_QUANTUM
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        if cfg.version != VERSION {
            return Err(CliError::Config(format!(
                "config version {} is not supported (expected {VERSION})",
                cfg.version
            )));
        }
        if cfg.families.is_empty() {
            return Err(CliError::Config("config needs at least one family".into()));
        }
        let lambdas = cfg.lambda.values();
        if lambdas.is_empty() || lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(CliError::Config("lambda must be one or more finite values >= 0".into()));
        }
        for &s in &cfg.lst {
            if !(s.is_finite() && s >= 0.0) {
                return Err(CliError::Config(format!("lst argument {s} must be finite and >= 0")));
            }
        }
        Ok(cfg)
    }

    pub fn expect_mode(&self, mode: &str) -> Result<(), CliError> {
        match &self.mode {
            Some(m) if m != mode => Err(CliError::Config(format!(
                "config is for mode `{m}` but `{mode}` was requested"
            ))),
            _ => Ok(()),
        }
    }

    pub fn single_policy(&self) -> Result<&PolicyConfig, CliError> {
        match (&self.policy, self.policies.as_slice()) {
            (Some(p), []) => Ok(p),
            (None, [p]) => Ok(p),
            _ => Err(CliError::Config("exactly one policy is required".into())),
        }
    }

    pub fn all_policies(&self) -> Vec<&PolicyConfig> {
        self.policy.iter().chain(self.policies.iter()).collect()
    }

    /// Sizes to report for one family.
    pub fn sizes_for(&self, law: &SizeDistribution) -> Result<Vec<f64>, CliError> {
        let sizes = match &self.sizes {
            Some(Sizes::List(v)) => v.clone(),
            Some(Sizes::Quantiles { quantiles }) => {
                if quantiles.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
                    return Err(CliError::Config("quantiles must lie in (0, 1)".into()));
                }
                quantiles.iter().map(|&q| law.quantile(q)).collect()
            }
            None => {
                let atoms: Vec<f64> = law.atoms().into_iter().filter(|a| a.1 > 0.0).map(|a| a.0).collect();
                if law.continuous_mass() == 0.0 {
                    atoms
                } else {
                    [0.1, 0.25, 0.5, 0.75, 0.9, 0.99].iter().map(|&q| law.quantile(q)).collect()
                }
            }
        };
        if sizes.is_empty() || sizes.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(CliError::Config("sizes must be finite and positive".into()));
        }
        Ok(sizes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SERPT: &str = r#"{
        "version": 1,
        "policy": "serpt",
        "families": [{"prob": 1, "law": {"kind": "finite", "atoms": [[2, 0.5], [14, 0.5]]}}],
        "lambda": [0.05, 0.1],
        "sizes": [2, 14]
    }"#;

    #[test]
    fn parses_a_sweep() {
        let c = RunConfig::parse(SERPT).unwrap();
        assert_eq!(c.lambda.values(), vec![0.05, 0.1]);
        assert_eq!(c.single_policy().unwrap().name(), "serpt");
        let law = &c.families[0].law;
        assert_eq!(c.sizes_for(law).unwrap(), vec![2.0, 14.0]);
    }

    #[test]
    fn rejects_wrong_version_and_unknown_fields() {
        let v2 = SERPT.replace("\"version\": 1", "\"version\": 2");
        assert!(matches!(RunConfig::parse(&v2), Err(CliError::Config(_))));
        let extra = SERPT.replace("\"lambda\"", "\"lamda\": 1, \"lambda\"");
        assert!(matches!(RunConfig::parse(&extra), Err(CliError::Config(_))));
    }

    #[test]
    fn policy_with_parameters() {
        let text = SERPT.replace("\"serpt\"", r#"{"name": "discretized_fb", "spacing": 1.0}"#);
        let c = RunConfig::parse(&text).unwrap();
        let p = c.single_policy().unwrap().build(&c.families).unwrap();
        assert_eq!(p.name, "discretized_fb");
    }

    #[test]
    fn quantile_sizes() {
        let text = SERPT
            .replace(r#"{"kind": "finite", "atoms": [[2, 0.5], [14, 0.5]]}"#, r#"{"kind": "exponential", "rate": 1}"#)
            .replace("[2, 14]", r#"{"quantiles": [0.5]}"#);
        let c = RunConfig::parse(&text).unwrap();
        let x = c.sizes_for(&c.families[0].law).unwrap()[0];
        assert!((x - std::f64::consts::LN_2).abs() < 1e-12);
    }
}
