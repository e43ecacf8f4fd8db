//! Re-verification of the upper-model inequalities on an input grid.

use serde::Serialize;

use super::gaussian::gaussian_bc_joint_information;
use super::ic::{ic_margins, IcVariant};
use super::mac::mac_margins;
use super::{bc_informations, AuxSearch, BitPipeModel, Side};
use crate::capacity::half_log1p;
use crate::error::{invalid, Result};
use crate::grid::simplex_grid;
use crate::info::{Channel, Dmc, GaussianChannelSpec, Role};
use crate::rate::Rate;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityMargin {
    pub name: String,
    /// Minimum over the grid of left side minus right side. Positive
    /// infinity when an infinite rate is involved.
    pub min_slack: f64,
    /// Input distribution at which the minimum occurs (empty for closed
    /// forms).
    pub at: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginReport {
    pub inequalities: Vec<InequalityMargin>,
    /// Points per simplex dimension; 0 for closed forms.
    pub grid: usize,
    pub points: usize,
}

impl MarginReport {
    pub fn worst(&self) -> f64 {
        self.inequalities
            .iter()
            .map(|m| m.min_slack)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn holds(&self) -> bool {
        self.worst() >= 0.0
    }
}

fn margin(name: &str, min_slack: f64, at: Vec<f64>) -> InequalityMargin {
    InequalityMargin {
        name: name.to_string(),
        min_slack,
        at,
    }
}

fn slack(lhs: Rate, rhs: f64) -> f64 {
    match lhs {
        Rate::Infinite => f64::INFINITY,
        Rate::Finite(v) => v - rhs,
    }
}

fn min_over<'a>(it: impl Iterator<Item = (f64, &'a Vec<f64>)>) -> (f64, Vec<f64>) {
    let mut best = (f64::INFINITY, Vec::new());
    for (s, at) in it {
        if best.1.is_empty() || s < best.0 {
            best = (s, at.clone());
        }
    }
    best
}

fn discrete(ch: &Dmc, model: &BitPipeModel, res: usize, aux: &AuxSearch) -> Result<Vec<InequalityMargin>> {
    Ok(match ch.role() {
        Role::P2p => {
            let r = model.rate(&[1], &[1]);
            let pts: Vec<(f64, Vec<f64>)> = simplex_grid(ch.n_in(), res)
                .into_iter()
                .map(|p| (slack(r, ch.mutual_information(&p)), p))
                .collect();
            let (s, at) = min_over(pts.iter().map(|(s, p)| (*s, p)));
            vec![margin("R[{1}->{1}] > I(X;Y)", s, at)]
        }
        Role::Bc => {
            let r0 = model.rate(&[1], &[1, 2]);
            let r01 = r0 + model.rate(&[1], &[1]);
            let info = bc_informations(ch, res);
            let (s0, at0) = min_over(info.iter().map(|(p, i2, _)| (slack(r0, *i2), p)));
            let (s1, at1) = min_over(info.iter().map(|(p, _, i12)| (slack(r01, *i12), p)));
            vec![
                margin("R[{1}->{1,2}] > I(X;Y2)", s0, at0),
                margin("R[{1}->{1,2}] + R[{1}->{1}] > I(X;Y1,Y2)", s1, at1),
            ]
        }
        Role::Mac => {
            let describer = if model.rate(&[2], &[1]).is_zero() { 1 } else { 2 };
            if !model.rate(&[1], &[1]).is_zero() && describer == 2 {
                return invalid("MAC upper models describe only one transmitter");
            }
            let ra = model.rate(&[describer], &[1]);
            let rm = model.rate(&[1, 2], &[1]);
            if ra.is_infinite() || rm.is_infinite() {
                return invalid("discrete MAC upper models have finite rates");
            }
            let boundary = (ra.to_f64() - model.slack).max(0.0);
            let boundary = if ra.is_zero() { 0.0 } else { boundary };
            let (s1, s2, at) = mac_margins(ch, describer, ra.to_f64(), boundary, rm.to_f64(), res, aux);
            vec![
                margin(&format!("R[{{{describer}}}->{{1}}] > I(X{describer};U)"), s1, Vec::new()),
                margin(&format!("R[{{1,2}}->{{1}}] > I(X1,X2;Y|U)"), s2, at),
            ]
        }
        Role::Ic => {
            let variant = IcVariant::infer(&model.rates);
            let names = variant.inequality_names();
            ic_margins(ch, variant, &model.rates, res, aux)?
                .into_iter()
                .zip(names)
                .map(|((s, at), name)| margin(name, s, at))
                .collect()
        }
    })
}

/// Minimum slack of every inequality an upper model must satisfy, over an
/// input grid of `res` points per dimension. Closed-form Gaussian models
/// are checked at the optimizing input.
pub fn check_upper_conditions(
    channel: &Channel,
    model: &BitPipeModel,
    res: usize,
    aux: &AuxSearch,
) -> Result<MarginReport> {
    if model.side != Side::Upper {
        return invalid("the condition checker applies to upper models");
    }
    match channel {
        Channel::Discrete(d) => {
            let inequalities = discrete(d, model, res, aux)?;
            Ok(MarginReport {
                inequalities,
                grid: res,
                points: simplex_grid(d.n_in(), res).len(),
            })
        }
        Channel::Gaussian(GaussianChannelSpec::Bc(s)) => {
            let r0 = model.rate(&[1], &[1, 2]);
            let r01 = r0 + model.rate(&[1], &[1]);
            let s1 = match gaussian_bc_joint_information(s) {
                Rate::Infinite if !r01.is_infinite() => f64::NEG_INFINITY,
                Rate::Infinite => f64::INFINITY,
                Rate::Finite(v) => slack(r01, v),
            };
            Ok(MarginReport {
                inequalities: vec![
                    margin("R[{1}->{1,2}] > I(X;Y2)", slack(r0, half_log1p(s.power / s.eff_noise2())), Vec::new()),
                    margin("R[{1}->{1,2}] + R[{1}->{1}] > I(X;Y1,Y2)", s1, Vec::new()),
                ],
                grid: 0,
                points: 1,
            })
        }
        Channel::Gaussian(GaussianChannelSpec::Mac(s)) => {
            let describer = if model.rate(&[2], &[1]).is_zero() { 1 } else { 2 };
            let own = if describer == 1 { s.p1 } else { s.p2 };
            let total = (s.p1.sqrt() + s.p2.sqrt()).powi(2) + s.noise;
            Ok(MarginReport {
                inequalities: vec![
                    margin(
                        &format!("R[{{{describer}}}->{{1}}] > I(X{describer};U)"),
                        slack(model.rate(&[describer], &[1]), half_log1p(own / s.noise)),
                        Vec::new(),
                    ),
                    margin(
                        "R[{1,2}->{1}] > I(X1,X2;Y|U)",
                        slack(model.rate(&[1, 2], &[1]), 0.5 * (total / (own + s.noise)).log2()),
                        Vec::new(),
                    ),
                ],
                grid: 0,
                points: 1,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;
    use crate::grid::refined;
    use crate::info::{GaussianBc, GaussianMac};

    const FAST: AuxSearch = AuxSearch { starts: 2, seed: 11 };

    #[test]
    fn p2p_slack_at_least_delta() {
        let ch = Dmc::bsc(0.1);
        let m = upper_model_p2p(&ch, 1e-4, 1e-12).unwrap();
        let r = check_upper_conditions(&Channel::Discrete(ch), &m, 33, &FAST).unwrap();
        assert!(r.worst() >= 1e-4 - 1e-10);
    }

    #[test]
    fn bc_family_passes_and_infeasible_rate_fails() {
        let ch = Dmc::bsc_bc(0.1, 0.1, false);
        let fam = upper_model_bc(&ch, 33, 1e-4).unwrap();
        let c = Channel::Discrete(ch.clone());
        for m in fam.members(4) {
            let r = check_upper_conditions(&c, &m, refined(33), &FAST).unwrap();
            assert!(r.worst() >= 0.5e-4, "{r:?}");
        }
        let bad = RateVector::new()
            .with(&[1], &[1, 2], Rate::Finite(fam.c2 - 0.01))
            .with(&[1], &[1], Rate::Finite(1.0));
        let m = build_model("bad", Side::Upper, &fam.geometry, &bad, 1e-4).unwrap();
        let r = check_upper_conditions(&c, &m, 33, &FAST).unwrap();
        assert!(!r.holds());
        assert!((r.inequalities[0].min_slack + 0.01).abs() < 1e-9);
    }

    #[test]
    fn mac_upper_passes_on_refined_grid() {
        let ch = Dmc::adder_mac(0.1);
        let up = upper_model_mac(&ch, 0.0, 9, &FAST, 1e-4).unwrap();
        let r = check_upper_conditions(&Channel::Discrete(ch), &up.model, refined(9), &FAST).unwrap();
        assert!(r.worst() >= 0.5e-4, "{r:?}");
    }

    #[test]
    fn gaussian_models_pass() {
        let s = GaussianMac::new(2.0, 1.0, 1.0).unwrap();
        let (_, uppers) = gaussian_mac_candidates(&s, 1e-4).unwrap();
        for u in uppers {
            let r = check_upper_conditions(&Channel::Gaussian(GaussianChannelSpec::Mac(s)), &u, 0, &FAST).unwrap();
            assert!((r.worst() - 1e-4).abs() < 1e-12);
        }
        let b = GaussianBc::new(2.0, 1.0, 1.0, 1.0, 2.0, 0.3).unwrap();
        let pair = gaussian_bc_models(&b, 1e-4).unwrap();
        let r = check_upper_conditions(&Channel::Gaussian(GaussianChannelSpec::Bc(b)), &pair.upper, 0, &FAST).unwrap();
        assert!(r.worst() >= 1e-4 - 1e-12, "{r:?}");
    }

    #[test]
    fn lower_models_rejected() {
        let ch = Dmc::bsc(0.1);
        let c = Channel::Discrete(ch.clone());
        let lo = lower_model(&c, &crate::capacity::p2p_lower_point(&ch, 1e-9).unwrap()).unwrap();
        assert!(check_upper_conditions(&c, &lo, 5, &FAST).is_err());
    }
}
