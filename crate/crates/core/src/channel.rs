//! Channel model: dual-slope path loss, log-normal shadowing and
//! sum-of-sinusoids Rayleigh fading, composed as `h_ji(t) = H_ji * h~_ji(t)`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::topology::Placement;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("distance must be positive, got {0} m")]
    NonPositiveDistance(f64),
    #[error("invalid path-loss parameters: {0}")]
    InvalidParams(String),
    #[error("long-term gain for UE {ue} / AP {ap} must be positive and finite, got {value}")]
    InvalidGain { ue: usize, ap: usize, value: f64 },
    #[error("link ({ue}, {ap}) outside a {num_ues}x{num_aps} channel")]
    LinkOutOfRange {
        ue: usize,
        ap: usize,
        num_ues: usize,
        num_aps: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathLossParams {
    /// Loss at 1 m.
    pub k0_db: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// Break-point distance in meters.
    pub d_bp: f64,
}

impl Default for PathLossParams {
    fn default() -> Self {
        Self {
            k0_db: 39.0,
            alpha1: 2.0,
            alpha2: 4.0,
            d_bp: 100.0,
        }
    }
}

impl PathLossParams {
    pub fn validate(&self) -> Result<(), ChannelError> {
        if !(self.d_bp > 0.0) {
            return Err(ChannelError::InvalidParams(format!(
                "break-point distance must be positive, got {}",
                self.d_bp
            )));
        }
        if self.alpha1 > self.alpha2 {
            return Err(ChannelError::InvalidParams(format!(
                "alpha1 ({}) must not exceed alpha2 ({})",
                self.alpha1, self.alpha2
            )));
        }
        Ok(())
    }
}

/// Dual-slope path loss in dB.
pub fn path_loss_db(d: f64, params: &PathLossParams) -> Result<f64, ChannelError> {
    if !(d > 0.0) {
        return Err(ChannelError::NonPositiveDistance(d));
    }
    let PathLossParams {
        k0_db,
        alpha1,
        alpha2,
        d_bp,
    } = *params;
    Ok(if d <= d_bp {
        k0_db + 10.0 * alpha1 * d.log10()
    } else {
        k0_db + 10.0 * alpha2 * d.log10() - 10.0 * (alpha2 - alpha1) * d_bp.log10()
    })
}

/// Long-term (path loss and shadowing) amplitude gains, row-major `[ue][ap]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongTermGains {
    pub num_ues: usize,
    pub num_aps: usize,
    pub amplitude: Vec<f64>,
    pub shadowing_db: Vec<f64>,
}

impl LongTermGains {
    /// Builds gains from linear power values (`H^2`), rejecting zero,
    /// negative or non-finite entries.
    pub fn from_power(
        num_ues: usize,
        num_aps: usize,
        power: &[f64],
        shadowing_db: Vec<f64>,
    ) -> Result<Self, ChannelError> {
        assert_eq!(power.len(), num_ues * num_aps);
        assert_eq!(shadowing_db.len(), num_ues * num_aps);
        for (idx, &p) in power.iter().enumerate() {
            if !(p > 0.0 && p.is_finite()) {
                return Err(ChannelError::InvalidGain {
                    ue: idx / num_aps,
                    ap: idx % num_aps,
                    value: p,
                });
            }
        }
        Ok(Self {
            num_ues,
            num_aps,
            amplitude: power.iter().map(|p| p.sqrt()).collect(),
            shadowing_db,
        })
    }

    #[inline]
    pub fn amplitude(&self, ue: usize, ap: usize) -> f64 {
        self.amplitude[ue * self.num_aps + ap]
    }

    #[inline]
    pub fn power(&self, ue: usize, ap: usize) -> f64 {
        let h = self.amplitude(ue, ap);
        h * h
    }

    pub fn power_matrix(&self) -> Vec<f64> {
        self.amplitude.iter().map(|h| h * h).collect()
    }
}

/// Draws path loss plus i.i.d. Gaussian shadowing (in dB) for every UE-AP link.
pub fn draw_long_term_gains<R: Rng + ?Sized>(
    placement: &Placement,
    params: &PathLossParams,
    shadow_std_db: f64,
    rng: &mut R,
) -> Result<LongTermGains, ChannelError> {
    params.validate()?;
    let shadow = Normal::new(0.0, shadow_std_db)
        .map_err(|e| ChannelError::InvalidParams(format!("shadowing std: {e}")))?;
    let num_ues = placement.ue_positions.len();
    let num_aps = placement.ap_positions.len();
    let distances = placement.ue_ap_distances();
    let mut power = Vec::with_capacity(distances.len());
    let mut shadowing = Vec::with_capacity(distances.len());
    for d in distances {
        let pl = path_loss_db(d, params)?;
        let s = shadow.sample(rng);
        shadowing.push(s);
        power.push(10f64.powf(-(pl + s) / 10.0));
    }
    LongTermGains::from_power(num_ues, num_aps, &power, shadowing)
}

/// Maximum Doppler shift for a receiver moving at `speed_mps`.
pub fn doppler_hz(speed_mps: f64, carrier_hz: f64) -> f64 {
    speed_mps * carrier_hz / SPEED_OF_LIGHT
}

/// Per-link sum-of-sinusoids Rayleigh fading with random arrival angles,
/// path gains and phase (the improved Clarke model). Each link `l` is
///
/// ```text
/// h(t) = sqrt(2/M) * sum_n (cos psi_n + j sin psi_n) cos(w_d t cos a_n + phi)
/// a_n  = (2 pi n - pi + theta) / (4M)
/// ```
///
/// with `psi_n`, `phi`, `theta` uniform on `[-pi, pi)`, giving unit average
/// power and a Rayleigh envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FadingProcess {
    pub doppler_hz: f64,
    pub interval_s: f64,
    pub num_sinusoids: usize,
    num_links: usize,
    /// Angular frequency per interval, `[link][n]`.
    omega: Vec<f64>,
    cos_psi: Vec<f64>,
    sin_psi: Vec<f64>,
    phi: Vec<f64>,
}

impl FadingProcess {
    pub fn new<R: Rng + ?Sized>(
        num_links: usize,
        doppler_hz: f64,
        interval_s: f64,
        num_sinusoids: usize,
        rng: &mut R,
    ) -> Self {
        assert!(num_sinusoids > 0, "at least one sinusoid per link");
        let m = num_sinusoids;
        let w_d = 2.0 * PI * doppler_hz * interval_s;
        let mut omega = Vec::with_capacity(num_links * m);
        let mut cos_psi = Vec::with_capacity(num_links * m);
        let mut sin_psi = Vec::with_capacity(num_links * m);
        let mut phi = Vec::with_capacity(num_links);
        let uniform_angle = |rng: &mut R| PI * (2.0 * rng.random::<f64>() - 1.0);
        for _ in 0..num_links {
            let theta = uniform_angle(rng);
            phi.push(uniform_angle(rng));
            for n in 1..=m {
                let alpha = (2.0 * PI * n as f64 - PI + theta) / (4.0 * m as f64);
                omega.push(w_d * alpha.cos());
                let psi = uniform_angle(rng);
                cos_psi.push(psi.cos());
                sin_psi.push(psi.sin());
            }
        }
        Self {
            doppler_hz,
            interval_s,
            num_sinusoids: m,
            num_links,
            omega,
            cos_psi,
            sin_psi,
            phi,
        }
    }

    pub fn num_links(&self) -> usize {
        self.num_links
    }

    /// Complex fading coefficient of `link` at interval `t`.
    pub fn sample(&self, link: usize, t: u64) -> Complex64 {
        let m = self.num_sinusoids;
        let base = link * m;
        let phi = self.phi[link];
        let tf = t as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for n in base..base + m {
            let c = (self.omega[n] * tf + phi).cos();
            re += self.cos_psi[n] * c;
            im += self.sin_psi[n] * c;
        }
        let scale = (2.0 / m as f64).sqrt();
        Complex64::new(scale * re, scale * im)
    }
}

/// Long-term gains plus fading state for one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub long_term: LongTermGains,
    pub fading: FadingProcess,
}

impl ChannelModel {
    pub fn new(long_term: LongTermGains, fading: FadingProcess) -> Self {
        assert_eq!(fading.num_links(), long_term.num_ues * long_term.num_aps);
        Self { long_term, fading }
    }

    pub fn num_ues(&self) -> usize {
        self.long_term.num_ues
    }

    pub fn num_aps(&self) -> usize {
        self.long_term.num_aps
    }

    pub fn gain(&self, ue: usize, ap: usize, t: u64) -> Result<Complex64, ChannelError> {
        if ue >= self.num_ues() || ap >= self.num_aps() {
            return Err(ChannelError::LinkOutOfRange {
                ue,
                ap,
                num_ues: self.num_ues(),
                num_aps: self.num_aps(),
            });
        }
        Ok(channel_gain(&self.long_term, &self.fading, ue, ap, t))
    }

    /// `|h_ji(t)|^2` for every link, row-major `[ue][ap]`.
    pub fn power_gains(&self, t: u64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.long_term.amplitude.len());
        self.power_gains_into(t, &mut out);
        out
    }

    pub fn power_gains_into(&self, t: u64, out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.long_term
                .amplitude
                .iter()
                .enumerate()
                .map(|(link, h)| h * h * self.fading.sample(link, t).norm_sqr()),
        );
    }
}

/// `h_ji(t) = H_ji * h~_ji(t)`.
pub fn channel_gain(
    long_term: &LongTermGains,
    fading: &FadingProcess,
    ue: usize,
    ap: usize,
    t: u64,
) -> Complex64 {
    fading.sample(ue * long_term.num_aps + ap, t) * long_term.amplitude(ue, ap)
}
