use super::curves::{gittins_pieces, serpt_pieces, CurveOptions};
use super::{Affine, Family, Policy, RankFunction, Tiebreak};
use crate::distributions::SizeDistribution;
use crate::error::{Result, SoapError};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Names accepted by [`builtin_policy`].
pub const CATALOG: &[&str] = &[
    "fcfs",
    "lcfs",
    "plcfs",
    "fb",
    "nonpreemptive_priority",
    "preemptive_priority",
    "sjf",
    "psjf",
    "srpt",
    "sept",
    "psept",
    "serpt",
    "gittins",
    "discretized_fb",
    "discretized_srpt",
    "humans_robots",
    "custom",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    #[serde(default)]
    pub name: Option<String>,
    pub prob: f64,
    pub law: SizeDistribution,
    /// Priority class for the class-based policies.
    #[serde(default)]
    pub class: Option<f64>,
    /// Only read by `custom` policies.
    #[serde(default)]
    pub sized: Option<bool>,
    /// Only read by `custom` policies.
    #[serde(default)]
    pub rank: Option<RankFunction>,
}

impl FamilySpec {
    pub fn new(prob: f64, law: SizeDistribution) -> Self {
        FamilySpec {
            name: None,
            prob,
            law,
            class: None,
            sized: None,
            rank: None,
        }
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = Some(name.to_string());
        self
    }

    pub fn with_class(mut self, class: f64) -> Self {
        self.class = Some(class);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PolicyParams {
    pub families: Vec<FamilySpec>,
    /// Checkpoint spacing for the discretized policies.
    #[serde(default)]
    pub spacing: Option<f64>,
    /// Constant secondary rank of human jobs in `humans_robots`.
    #[serde(default)]
    pub human_threshold: Option<f64>,
    #[serde(default)]
    pub tiebreak: Option<Tiebreak>,
    #[serde(default)]
    pub curve: Option<CurveOptions>,
}

fn missing(policy: &str, param: &str) -> SoapError {
    SoapError::MissingParam {
        policy: policy.to_string(),
        param: param.to_string(),
    }
}

fn family_name(spec: &FamilySpec, i: usize) -> String {
    spec.name.clone().unwrap_or_else(|| format!("class{}", i + 1))
}

/// Builds a catalog policy. Families come from `params.families` in order;
/// `humans_robots` reads humans first and robots second.
pub fn builtin_policy(name: &str, params: &PolicyParams) -> Result<Policy> {
    if !CATALOG.contains(&name) {
        return Err(SoapError::UnknownPolicy(name.to_string()));
    }
    if params.families.is_empty() {
        return Err(missing(name, "families"));
    }
    let curve = params.curve.unwrap_or_default();
    let default_tiebreak = match name {
        "lcfs" | "plcfs" => Tiebreak::Lcfs,
        _ => Tiebreak::Fcfs,
    };
    let tiebreak = params.tiebreak.unwrap_or(default_tiebreak);
    let mut families = Vec::with_capacity(params.families.len());
    for (i, spec) in params.families.iter().enumerate() {
        spec.law.validate()?;
        let class = || spec.class.ok_or_else(|| missing(name, "class"));
        let spacing = || params.spacing.ok_or_else(|| missing(name, "spacing"));
        let mean = spec.law.mean();
        let (sized, rank) = match name {
            "fcfs" | "lcfs" => (false, RankFunction::uniform(vec![Affine::of_age(-1.0, 0.0)])),
            "plcfs" => (false, RankFunction::uniform(vec![Affine::constant(0.0)])),
            "fb" => (false, RankFunction::uniform(vec![Affine::of_age(1.0, 0.0)])),
            "nonpreemptive_priority" => (
                false,
                RankFunction::uniform(vec![Affine::of_age(-1.0, 0.0), Affine::constant(class()?)]),
            ),
            "preemptive_priority" => (
                false,
                RankFunction::uniform(vec![Affine::constant(class()?), Affine::of_age(-1.0, 0.0)]),
            ),
            "sjf" => (
                true,
                RankFunction::uniform(vec![Affine::of_age(-1.0, 0.0), Affine::size_only()]),
            ),
            "psjf" => (
                true,
                RankFunction::uniform(vec![Affine::size_only(), Affine::of_age(-1.0, 0.0)]),
            ),
            "srpt" => (true, RankFunction::uniform(vec![Affine::remaining()])),
            "sept" => (
                false,
                RankFunction::uniform(vec![Affine::of_age(-1.0, 0.0), Affine::constant(mean)]),
            ),
            "psept" => (
                false,
                RankFunction::uniform(vec![Affine::constant(mean), Affine::of_age(-1.0, 0.0)]),
            ),
            "serpt" => (false, RankFunction::pieces(serpt_pieces(&spec.law, curve)?)),
            "gittins" => (false, RankFunction::pieces(gittins_pieces(&spec.law, curve)?)),
            "discretized_fb" => (
                false,
                RankFunction::discretized(
                    spacing()?,
                    RankFunction::uniform(vec![Affine::of_age(1.0, 0.0)]),
                ),
            ),
            "discretized_srpt" => (
                true,
                RankFunction::discretized(spacing()?, RankFunction::uniform(vec![Affine::remaining()])),
            ),
            "humans_robots" => {
                if params.families.len() != 2 {
                    return Err(SoapError::InvalidPolicy(
                        "humans_robots takes exactly two families: humans then robots".into(),
                    ));
                }
                let threshold = params
                    .human_threshold
                    .ok_or_else(|| missing(name, "human_threshold"))?;
                if i == 0 {
                    (
                        false,
                        RankFunction::uniform(vec![
                            Affine::of_age(-1.0, 0.0),
                            Affine::constant(threshold),
                        ]),
                    )
                } else {
                    (
                        true,
                        RankFunction::uniform(vec![Affine::constant(0.0), Affine::remaining()]),
                    )
                }
            }
            "custom" => (
                spec.sized.unwrap_or(false),
                spec.rank.clone().ok_or_else(|| missing(name, "rank"))?,
            ),
            _ => unreachable!("catalog membership checked above"),
        };
        let default_name = match (name, i) {
            ("humans_robots", 0) => "human".to_string(),
            ("humans_robots", _) => "robot".to_string(),
            _ => family_name(spec, i),
        };
        families.push(Family {
            name: spec.name.clone().unwrap_or(default_name),
            prob: spec.prob,
            law: Arc::new(spec.law.clone()),
            sized,
            rank,
        });
    }
    Policy::new(name, families, tiebreak)
}
