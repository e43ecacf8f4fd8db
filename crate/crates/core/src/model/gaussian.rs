//! Closed-form models for the Gaussian broadcast and multiple access channels.

use super::{build_model, lower_model, Geometry, ModelPair, RateVector, Side, BitPipeModel};
use crate::capacity::{gaussian_bc_lower_point, gaussian_mac_lower_corner, gaussian_mac_other_corner, half_log1p};
use crate::error::{invalid, Result};
use crate::info::{Channel, GaussianBc, GaussianChannelSpec, GaussianMac};
use crate::rate::Rate;

/// Private-layer power fraction `1 - alpha` at which the lower and upper
/// private rates coincide. `None` when the noises are perfectly correlated
/// and the fraction is unbounded.
pub(crate) fn private_fraction(spec: &GaussianBc) -> Result<Option<f64>> {
    let (s, t) = (spec.eff_noise2(), spec.eff_noise1());
    let c = (s.sqrt() - spec.rho * t.sqrt()).powi(2);
    let denom = 1.0 - spec.rho * spec.rho;
    if denom <= 0.0 {
        if c == 0.0 {
            return invalid("rho = 1 with equal effective noises makes the power split undefined");
        }
        return Ok(None);
    }
    Ok(Some(c / (denom * (spec.power + s))))
}

/// I(X;Y1,Y2) for the Gaussian broadcast channel with correlated noises.
pub(crate) fn gaussian_bc_joint_information(spec: &GaussianBc) -> Rate {
    let (s, t, r) = (spec.eff_noise2(), spec.eff_noise1(), spec.rho);
    let denom = t * s * (1.0 - r * r);
    let num = s + t - 2.0 * r * (s * t).sqrt();
    if denom <= 0.0 {
        if num <= 0.0 {
            return Rate::Finite(half_log1p(spec.power / s));
        }
        return Rate::Infinite;
    }
    Rate::Finite(half_log1p(spec.power * num / denom))
}

/// Lower and upper models for the Gaussian broadcast channel. Receiver 1 is
/// the stronger receiver. The common edge `{1}->{1,2}` carries the cloud
/// layer and `{1}->{1}` the private layer; both sides share the private rate.
pub fn gaussian_bc_models(spec: &GaussianBc, delta: f64) -> Result<ModelPair> {
    spec.validate()?;
    if !(delta > 0.0) {
        return invalid("delta must be positive");
    }
    let channel = Channel::Gaussian(GaussianChannelSpec::Bc(*spec));
    let frac = private_fraction(spec)?;
    let alpha = 1.0 - frac.unwrap_or(1.0).clamp(0.0, 1.0);
    let lower = lower_model(&channel, &gaussian_bc_lower_point(spec, alpha)?)?;
    let common = half_log1p(spec.power / spec.eff_noise2()) + delta;
    let private = match frac {
        Some(f) => Rate::Finite(half_log1p(f * spec.power / spec.eff_noise1()) + delta),
        None => Rate::Infinite,
    };
    let rates = RateVector::new()
        .with(&[1], &[1, 2], Rate::Finite(common))
        .with(&[1], &[1], private);
    let upper = build_model("gaussian_bc", Side::Upper, &Geometry::of(&channel), &rates, delta)?;
    let mut pair = ModelPair::new(lower, upper)?;
    pair.notes.push(format!("power split alpha = {alpha}"));
    Ok(pair)
}

/// Common-rate gap `R0' - R0` between the Gaussian broadcast models, without
/// the strictness margin.
pub fn gaussian_bc_common_gap(spec: &GaussianBc) -> Result<f64> {
    let pair = gaussian_bc_models(spec, 1.0)?;
    let upper = half_log1p(spec.power / spec.eff_noise2());
    Ok(upper - pair.lower.rate(&[1], &[1, 2]).to_f64())
}

fn mac_upper(spec: &GaussianMac, delta: f64, describer: usize) -> Result<BitPipeModel> {
    let channel = Channel::Gaussian(GaussianChannelSpec::Mac(*spec));
    let (p1, p2, n) = (spec.p1, spec.p2, spec.noise);
    let total = (p1.sqrt() + p2.sqrt()).powi(2) + n;
    let own = if describer == 1 { p1 } else { p2 };
    let rates = RateVector::new()
        .with(&[describer], &[1], Rate::Finite(half_log1p(own / n) + delta))
        .with(&[1, 2], &[1], Rate::Finite(0.5 * (total / (own + n)).log2() + delta));
    Ok(build_model("gaussian_mac", Side::Upper, &Geometry::of(&channel), &rates, delta)?
        .with_note(format!("transmitter {describer} describes its input at distortion matched to its power")))
}

/// Lower corner model and upper model for the Gaussian MAC, with
/// transmitter 1 decoded last on the lower side and described separately on
/// the upper side. Feed edges into the merged node are infinite.
pub fn gaussian_mac_models(spec: &GaussianMac, delta: f64) -> Result<ModelPair> {
    spec.validate()?;
    if !(delta > 0.0) {
        return invalid("delta must be positive");
    }
    let channel = Channel::Gaussian(GaussianChannelSpec::Mac(*spec));
    let lower = lower_model(&channel, &gaussian_mac_lower_corner(spec)?)?;
    ModelPair::new(lower, mac_upper(spec, delta, 1)?)
}

/// Both corner models and both orientations of the upper model.
pub fn gaussian_mac_candidates(
    spec: &GaussianMac,
    delta: f64,
) -> Result<(Vec<BitPipeModel>, Vec<BitPipeModel>)> {
    let pair = gaussian_mac_models(spec, delta)?;
    let channel = Channel::Gaussian(GaussianChannelSpec::Mac(*spec));
    let other = lower_model(&channel, &gaussian_mac_other_corner(spec)?)?;
    Ok((
        vec![pair.lower, other],
        vec![pair.upper, mac_upper(spec, delta, 2)?],
    ))
}

/// Merged-edge gap `½ log(((√P1+√P2)² + N)/(P1 + P2 + N))`.
pub fn gaussian_mac_gap(spec: &GaussianMac) -> f64 {
    let total = (spec.p1.sqrt() + spec.p2.sqrt()).powi(2) + spec.noise;
    0.5 * (total / (spec.p1 + spec.p2 + spec.noise)).log2()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn bc_unit_example() {
        let s = GaussianBc::new(1.0, 1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        let pair = gaussian_bc_models(&s, 1e-9).unwrap();
        close(pair.upper.rate(&[1], &[1, 2]).to_f64(), 0.5, 1e-8);
        close(
            pair.upper.rate(&[1], &[1]).to_f64() - 1e-9,
            pair.lower.rate(&[1], &[1]).to_f64(),
            1e-12,
        );
        close(gaussian_bc_common_gap(&s).unwrap(), half_log1p(1.0 / 2.0), 1e-12);
    }

    #[test]
    fn bc_gap_matches_formula_for_independent_noise() {
        for (p, n1, n2) in [(3.0, 0.5, 2.0), (0.01, 1.0, 1.0), (100.0, 0.2, 0.3)] {
            let s = GaussianBc::new(p, 1.0, 1.0, n1, n2, 0.0).unwrap();
            close(gaussian_bc_common_gap(&s).unwrap(), half_log1p(p / (p + n2)), 1e-12);
        }
    }

    #[test]
    fn bc_upper_meets_joint_information() {
        for rho in [-0.9, -0.3, 0.0, 0.4, 0.95] {
            let s = GaussianBc::new(2.0, 1.3, 0.8, 0.7, 1.1, rho).unwrap();
            let pair = gaussian_bc_models(&s, 1e-6).unwrap();
            let sum = pair.upper.rate(&[1], &[1, 2]) + pair.upper.rate(&[1], &[1]);
            let need = gaussian_bc_joint_information(&s);
            assert!(sum.to_f64() >= need.to_f64() + 1e-6 - 1e-12, "rho {rho}");
        }
    }

    #[test]
    fn bc_perfect_correlation() {
        let s = GaussianBc::new(1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!(gaussian_bc_models(&s, 1e-4).is_err());
        let s = GaussianBc::new(1.0, 1.0, 1.0, 1.0, 1.0, -1.0).unwrap();
        let pair = gaussian_bc_models(&s, 1e-4).unwrap();
        assert_eq!(pair.upper.rate(&[1], &[1]), Rate::Infinite);
        close(pair.lower.rate(&[1], &[1]).to_f64(), 0.5, 1e-12);
    }

    #[test]
    fn mac_examples() {
        let s = GaussianMac::new(1.0, 1.0, 1.0).unwrap();
        close(gaussian_mac_gap(&s), 0.5 * (5.0f64 / 3.0).log2(), 1e-15);
        close(gaussian_mac_gap(&s), 0.368_482_797_083_092_3, 1e-12);
        let s = GaussianMac::new(2.0, 1e-14, 1.0).unwrap();
        assert!(gaussian_mac_gap(&s) < 1e-6);
        let pair = gaussian_mac_models(&s, 1e-4).unwrap();
        close(pair.upper.rate(&[1, 2], &[1]).to_f64() - 1e-4, 0.0, 1e-6);
        assert!(pair
            .upper
            .edges
            .iter()
            .filter(|e| matches!(e.id, super::super::EdgeId::Feed { .. }))
            .all(|e| e.cap == Rate::Infinite));
        for p in [0.01, 1.0, 100.0, 1e4] {
            let s = GaussianMac::new(p, p, 1.0).unwrap();
            close(gaussian_mac_gap(&s), 0.5 * ((4.0 * p + 1.0) / (2.0 * p + 1.0)).log2(), 1e-12);
            assert!(gaussian_mac_gap(&s) < 0.5);
        }
    }
}
