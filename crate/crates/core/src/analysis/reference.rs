//! Closed-form mean response times for specific systems.
//!
//! These evaluate known formulas directly from the size laws with their own
//! adaptive Simpson quadrature, sharing nothing with the engine beyond tail
//! functions and full moments of the input laws.

use crate::distributions::SizeDistribution;
use crate::error::{Result, SoapError};
use serde::{Deserialize, Serialize};

/// Oracle identifiers accepted by [`reference_mean`].
pub const ORACLES: &[&str] = &[
    "pk",
    "srpt",
    "fb",
    "discretized_fb",
    "discretized_fb_recycled",
    "humans",
    "robots",
    "robots_corrected",
    "gittins_pareto",
    "serpt_coin_flip",
    "gittins_coin_flip",
];

/// Inputs for the oracles; each oracle reads the fields it needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleParams {
    pub lambda: f64,
    pub x: f64,
    #[serde(default)]
    pub law: Option<SizeDistribution>,
    /// Human and robot size laws.
    #[serde(default)]
    pub human: Option<SizeDistribution>,
    #[serde(default)]
    pub robot: Option<SizeDistribution>,
    #[serde(default)]
    pub p_human: Option<f64>,
    #[serde(default)]
    pub human_threshold: Option<f64>,
    /// `(alpha, beta)` of the two Pareto classes.
    #[serde(default)]
    pub pareto_a: Option<(f64, f64)>,
    #[serde(default)]
    pub pareto_b: Option<(f64, f64)>,
    #[serde(default)]
    pub p_a: Option<f64>,
}

fn need<T: Clone>(v: &Option<T>, oracle: &str, param: &str) -> Result<T> {
    v.clone().ok_or_else(|| SoapError::MissingParam {
        policy: oracle.to_string(),
        param: param.to_string(),
    })
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64, m: f64, fm: f64, whole: f64, eps: f64, depth: u32) -> f64 {
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * eps, depth - 1)
        + simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * eps, depth - 1)
}

/// Adaptive Simpson on a finite interval.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, eps: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fb, fm) = (f(a), f(b), f(m));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, fa, b, fb, m, fm, whole, eps, 48)
}

const EPS: f64 = 1e-15;

/// `E[(min(X, hi) - lo)^k ; X > lo]` for `k` in 1..=2 and finite `hi`.
fn band_moment(d: &SizeDistribution, lo: f64, hi: f64, k: i32) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if d.continuous_mass() == 0.0 {
        return d
            .atoms()
            .iter()
            .filter(|a| a.0 > lo)
            .map(|&(v, p)| p * (v.min(hi) - lo).powi(k))
            .sum();
    }
    // k (t - lo)^(k-1) P(X > t), split where the tail jumps or kinks
    let mut cuts = vec![lo, hi];
    cuts.extend(d.atoms().iter().map(|a| a.0).filter(|&v| v > lo && v < hi));
    cuts.extend(d.smooth_breaks().into_iter().filter(|&v| v > lo && v < hi));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2)
        .map(|w| {
            // midpoints avoid evaluating the tail exactly at a jump
            let (a, b) = (w[0], w[1]);
            let g = |t: f64| {
                let t = t.clamp(a + (b - a) * 1e-15, b - (b - a) * 1e-15);
                k as f64 * (t - lo).powi(k - 1) * d.tail(t)
            };
            simpson(g, a, b, EPS)
        })
        .sum()
}

/// `E[min(X, c)^k]`.
fn capped(d: &SizeDistribution, c: f64, k: i32) -> Result<f64> {
    if c.is_infinite() {
        let (m1, m2) = d.moments()?;
        return Ok(if k == 1 { m1 } else { m2 });
    }
    Ok(band_moment(d, 0.0, c, k))
}

/// `E[X^k ; X < x]`.
fn below(d: &SizeDistribution, x: f64, k: i32) -> f64 {
    band_moment(d, 0.0, x, k) - x.powi(k) * d.tail_incl(x)
}

/// `E[X^k ; X <= x]`.
fn at_most(d: &SizeDistribution, x: f64, k: i32) -> f64 {
    band_moment(d, 0.0, x, k) - x.powi(k) * d.tail(x)
}

fn pk(d: &SizeDistribution, lambda: f64, x: f64) -> Result<f64> {
    let (m1, m2) = d.moments()?;
    Ok(lambda * m2 / (2.0 * (1.0 - lambda * m1)) + x)
}

fn srpt(d: &SizeDistribution, lambda: f64, x: f64) -> Result<f64> {
    let rho = |t: f64| lambda * at_most(d, t, 1);
    let wait = lambda * capped(d, x, 2)? / (2.0 * (1.0 - rho(x)).powi(2));
    let res = simpson(|t| 1.0 / (1.0 - lambda * below(d, t, 1)), 0.0, x, 1e-13);
    Ok(wait + res)
}

fn fb(d: &SizeDistribution, lambda: f64, x: f64) -> Result<f64> {
    let rho = lambda * capped(d, x, 1)?;
    Ok(lambda * capped(d, x, 2)? / (2.0 * (1.0 - rho).powi(2)) + x / (1.0 - rho))
}

fn discretized_fb(d: &SizeDistribution, lambda: f64, x: f64, recycled: bool) -> Result<f64> {
    let (fl, ce) = (x.floor(), x.ceil());
    let rho_fl = lambda * capped(d, fl, 1)?;
    let rho_ce = lambda * capped(d, ce, 1)?;
    let mut m2 = capped(d, ce, 2)?;
    if recycled {
        // old jobs caught inside a later unit chunk finish that chunk first
        let top = d.negligible_beyond(1e-16);
        let mut k = ce;
        while k < top {
            m2 += band_moment(d, k, k + 1.0, 2);
            k += 1.0;
        }
    }
    Ok(lambda * m2 / (2.0 * (1.0 - rho_ce) * (1.0 - rho_fl)) + fl / (1.0 - rho_fl) + x - fl)
}

struct HumansRobots {
    lambda_h: f64,
    lambda_r: f64,
    human: SizeDistribution,
    robot: SizeDistribution,
    x_h: f64,
}

impl HumansRobots {
    fn new(p: &OracleParams, id: &str) -> Result<Self> {
        let p_h = need(&p.p_human, id, "p_human")?;
        Ok(HumansRobots {
            lambda_h: p.lambda * p_h,
            lambda_r: p.lambda * (1.0 - p_h),
            human: need(&p.human, id, "human")?,
            robot: need(&p.robot, id, "robot")?,
            x_h: need(&p.human_threshold, id, "human_threshold")?,
        })
    }

    fn rho_h(&self) -> f64 {
        self.lambda_h * self.human.mean()
    }

    fn rho_r_below(&self, x: f64) -> f64 {
        self.lambda_r * below(&self.robot, x, 1)
    }

    fn rho_r_at_most(&self, x: f64) -> f64 {
        self.lambda_r * at_most(&self.robot, x, 1)
    }

    fn humans(&self) -> Result<f64> {
        let num = self.lambda_h * self.human.moments()?.1 + self.lambda_r * capped(&self.robot, self.x_h, 2)?;
        let den = 2.0 * (1.0 - self.rho_h() - self.rho_r_at_most(self.x_h)) * (1.0 - self.rho_r_below(self.x_h));
        Ok(num / den + self.human.mean())
    }

    fn robots(&self, x: f64, corrected: bool) -> Result<f64> {
        let ind = |c: bool| if c { 1.0 } else { 0.0 };
        let num = self.lambda_h * self.human.moments()?.1 + self.lambda_r * capped(&self.robot, x, 2)?;
        let first = 1.0 - self.rho_h() * ind(self.x_h <= x) - self.rho_r_at_most(x);
        let second = if corrected {
            1.0 - self.rho_h() * ind(self.x_h < x) - self.rho_r_below(x)
        } else {
            1.0 - self.rho_r_below(self.x_h)
        };
        let g = |t: f64| 1.0 / (1.0 - self.rho_h() * ind(self.x_h <= t) - self.rho_r_below(t));
        let res = if self.x_h > 0.0 && self.x_h < x {
            simpson(g, 0.0, self.x_h, 1e-13)
                + simpson(|t| g(t.max(self.x_h + 1e-300)), self.x_h, x, 1e-13)
        } else {
            simpson(g, 0.0, x, 1e-13)
        };
        Ok(num / (2.0 * first * second) + res)
    }
}

fn gittins_pareto(p: &OracleParams, id: &str) -> Result<f64> {
    let (aa, ba) = need(&p.pareto_a, id, "pareto_a")?;
    let (ab, bb) = need(&p.pareto_b, id, "pareto_b")?;
    let p_a = need(&p.p_a, id, "p_a")?;
    let (la, lb) = (p.lambda * p_a, p.lambda * (1.0 - p_a));
    let xa = SizeDistribution::pareto(aa, ba)?;
    let xb = SizeDistribution::pareto(ab, bb)?;
    let x = p.x;
    let y = (ab * (ba + x) / aa - bb).max(0.0);
    let rho = la * capped(&xa, x, 1)? + lb * capped(&xb, y, 1)?;
    let num = la * capped(&xa, x, 2)? + lb * capped(&xb, y, 2)?;
    Ok(num / (2.0 * (1.0 - rho).powi(2)) + x / (1.0 - rho))
}

fn coin_flip(lambda: f64, x: f64, gittins: bool, id: &str) -> Result<f64> {
    let l = lambda;
    let (small, large) = if gittins {
        (6.0 * l / (1.0 - 2.0 * l) + 2.0, 50.0 * l / ((1.0 - 8.0 * l) * (1.0 - 2.0 * l)) + 10.0 / (1.0 - 2.0 * l) + 4.0)
    } else {
        (18.0 * l / (1.0 - 2.0 * l) + 2.0, 50.0 * l / ((1.0 - 8.0 * l) * (1.0 - 2.0 * l)) + 6.0 / (1.0 - 2.0 * l) + 8.0)
    };
    match x {
        2.0 => Ok(small),
        14.0 => Ok(large),
        _ => Err(SoapError::ConfigInvalid(format!("{id} is defined for sizes 2 and 14, not {x}"))),
    }
}

/// Evaluates the named closed form.
pub fn reference_mean(id: &str, p: &OracleParams) -> Result<f64> {
    let law = || need(&p.law, id, "law");
    match id {
        "pk" => pk(&law()?, p.lambda, p.x),
        "srpt" => srpt(&law()?, p.lambda, p.x),
        "fb" => fb(&law()?, p.lambda, p.x),
        "discretized_fb" => discretized_fb(&law()?, p.lambda, p.x, false),
        "discretized_fb_recycled" => discretized_fb(&law()?, p.lambda, p.x, true),
        "humans" => HumansRobots::new(p, id)?.humans(),
        "robots" => HumansRobots::new(p, id)?.robots(p.x, false),
        "robots_corrected" => HumansRobots::new(p, id)?.robots(p.x, true),
        "gittins_pareto" => gittins_pareto(p, id),
        "serpt_coin_flip" => coin_flip(p.lambda, p.x, false, id),
        "gittins_coin_flip" => coin_flip(p.lambda, p.x, true, id),
        _ => Err(SoapError::UnknownOracle(id.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp1() -> SizeDistribution {
        SizeDistribution::exponential(1.0).unwrap()
    }

    fn with_law(law: SizeDistribution, lambda: f64, x: f64) -> OracleParams {
        OracleParams {
            lambda,
            x,
            law: Some(law),
            ..Default::default()
        }
    }

    #[test]
    fn simpson_polynomial_and_exponential() {
        assert!((simpson(|t| t * t, 0.0, 3.0, 1e-14) - 9.0).abs() < 1e-13);
        assert!((simpson(|t: f64| (-t).exp(), 0.0, 1.0, 1e-14) - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
    }

    #[test]
    fn capped_exponential_moments() {
        // E[min(X, c)] = 1 - e^-c ; E[min(X, c)^2] = 2 - 2(1 + c) e^-c
        let c: f64 = 1.7;
        assert!((capped(&exp1(), c, 1).unwrap() - (1.0 - (-c).exp())).abs() < 1e-14);
        assert!((capped(&exp1(), c, 2).unwrap() - (2.0 - 2.0 * (1.0 + c) * (-c).exp())).abs() < 1e-13);
    }

    #[test]
    fn printed_discretized_fb_value() {
        let d = SizeDistribution::finite(vec![(1.5, 0.5), (4.5, 0.5)]).unwrap();
        let v = reference_mean("discretized_fb", &with_law(d, 0.2, 1.5)).unwrap();
        assert!((v - 2.3510).abs() < 5e-5, "{v}");
    }

    #[test]
    fn coin_flip_spot_values() {
        let p = OracleParams {
            lambda: 0.1,
            x: 2.0,
            ..Default::default()
        };
        assert!((reference_mean("serpt_coin_flip", &p).unwrap() - 4.25).abs() < 1e-12);
        assert!((reference_mean("gittins_coin_flip", &p).unwrap() - 2.75).abs() < 1e-12);
    }

    #[test]
    fn fb_and_srpt_at_light_load_approach_size() {
        for id in ["fb", "srpt", "pk"] {
            let v = reference_mean(id, &with_law(exp1(), 1e-9, 2.0)).unwrap();
            assert!((v - 2.0).abs() < 1e-7, "{id}: {v}");
        }
    }

    #[test]
    fn gittins_pareto_without_second_class() {
        // with p_a = 1 the formula is single-class FB on a Pareto law
        let p = OracleParams {
            lambda: 0.3,
            x: 2.0,
            pareto_a: Some((2.5, 1.0)),
            pareto_b: Some((3.0, 2.0)),
            p_a: Some(1.0),
            ..Default::default()
        };
        let law = SizeDistribution::pareto(2.5, 1.0).unwrap();
        let g = reference_mean("gittins_pareto", &p).unwrap();
        let f = reference_mean("fb", &with_law(law, 0.3, 2.0)).unwrap();
        assert!((g - f).abs() < 1e-13);
    }

    #[test]
    fn unknown_oracle() {
        assert_eq!(
            reference_mean("ps", &OracleParams::default()),
            Err(SoapError::UnknownOracle("ps".into()))
        );
    }
}
