//! Noise calibration and release. The main mechanism adds general Cauchy
//! noise (density proportional to 1 / (1 + z^4)) scaled by a smooth
//! sensitivity bound; a Laplace variant scaled by the worst-case bound is
//! kept for comparison in the relaxed setting.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MechanismKind {
    #[serde(rename = "cauchy-rs")]
    CauchyRs,
    #[serde(rename = "cauchy-ss-oracle")]
    CauchySsOracle,
    #[serde(rename = "laplace-gs")]
    LaplaceGs,
}

impl MechanismKind {
    pub fn parse(s: &str) -> Result<MechanismKind> {
        match s {
            "cauchy-rs" => Ok(MechanismKind::CauchyRs),
            "cauchy-ss-oracle" => Ok(MechanismKind::CauchySsOracle),
            "laplace-gs" => Ok(MechanismKind::LaplaceGs),
            other => Err(Error::Data(format!("unknown mechanism '{other}'"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            MechanismKind::CauchyRs => "cauchy-rs",
            MechanismKind::CauchySsOracle => "cauchy-ss-oracle",
            MechanismKind::LaplaceGs => "laplace-gs",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReleaseRecord {
    /// Present only when the caller asked to reveal it.
    pub true_count: Option<u64>,
    pub sensitivity: f64,
    pub scale: f64,
    /// Present only when the caller asked to reveal it.
    pub noise: Option<f64>,
    pub released: f64,
    pub epsilon: f64,
    pub beta: f64,
    pub mechanism: MechanismKind,
    pub seed: u64,
    pub rng_algorithm: String,
}

impl ReleaseRecord {
    /// Strip the fields that would leak the exact answer.
    pub fn redacted(mut self) -> ReleaseRecord {
        self.true_count = None;
        self.noise = None;
        self
    }
}

/// Rejection-sampling bound: max over z of (1 + z^2) / (1 + z^4),
/// attained at z^2 = sqrt(2) - 1.
const REJECT_M: f64 = (1.0 + SQRT_2) / 2.0;

/// Draw from the density (sqrt(2)/pi) / (1 + z^4): zero mean, unit variance,
/// heavy tails but finite second moment. Proposals come from the standard
/// Cauchy via inverse CDF; acceptance ratio (1 + z^2) / ((1 + z^4) M).
pub fn sample_general_cauchy<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.gen();
        let z = (PI * (u - 0.5)).tan();
        if !z.is_finite() {
            continue;
        }
        let z2 = z * z;
        let accept = (1.0 + z2) / ((1.0 + z2 * z2) * REJECT_M);
        if rng.gen::<f64>() < accept {
            return z;
        }
    }
}

/// Draw unit-scale Laplace noise via the inverse CDF.
pub fn sample_laplace<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.gen::<f64>() - 0.5;
        if u == 0.0 || u.abs() >= 0.5 {
            continue;
        }
        return -u.signum() * (1.0 - 2.0 * u.abs()).ln();
    }
}

/// Add calibrated noise to a count. `sensitivity` must already be the bound
/// appropriate for the mechanism: a smooth bound at smoothing rate `beta`
/// for the Cauchy variants, a worst-case bound for Laplace. `beta` defaults
/// to epsilon / 10.
pub fn release(
    true_count: u64,
    sensitivity: f64,
    epsilon: f64,
    beta: Option<f64>,
    mechanism: MechanismKind,
    seed: u64,
) -> Result<ReleaseRecord> {
    if !(epsilon > 0.0) {
        return Err(Error::Data(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let beta = beta.unwrap_or(epsilon / 10.0);
    if !(beta > 0.0) {
        return Err(Error::Data(format!("beta must be positive, got {beta}")));
    }
    if !sensitivity.is_finite() || sensitivity < 0.0 {
        return Err(Error::Data(
            "sensitivity is not a finite nonnegative number; note that the \
             worst-case (global) sensitivity of a join is infinite under \
             strict differential privacy"
                .into(),
        ));
    }
    let scale = match mechanism {
        MechanismKind::CauchyRs | MechanismKind::CauchySsOracle => sensitivity / beta,
        MechanismKind::LaplaceGs => sensitivity / epsilon,
    };
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let noise = if sensitivity == 0.0 {
        0.0
    } else {
        let z = match mechanism {
            MechanismKind::LaplaceGs => sample_laplace(&mut rng),
            _ => sample_general_cauchy(&mut rng),
        };
        scale * z
    };
    Ok(ReleaseRecord {
        true_count: Some(true_count),
        sensitivity,
        scale,
        noise: Some(noise),
        released: true_count as f64 + noise,
        epsilon,
        beta,
        mechanism,
        seed,
        rng_algorithm: "chacha20".to_string(),
    })
}
