//! Propagation channels between the base station and the target UE.
//!
//! The downlink channel seen by the base station is the sum of a far-field
//! scatterer channel and a far-field RIS cascade channel, `g = s + h`. Both
//! are superpositions of plane-wave steering vectors across the BS array,
//!
//! ```text
//! s_m = Σ_n α_n · exp(j2π u_n · v_m)
//! h_m = Σ_k δ_k · exp(j2π a_k · v_m)
//! ```
//!
//! where `v_m` is the offset of BS element `m` from the first element and the
//! RIS effective gain `δ_k` coherently combines the `P` RIS elements:
//!
//! ```text
//! δ_k = (β_k / P) · Σ_p w_kp · exp(j(φ_kp + ψ_kp))
//! φ_kp = 2π a_k · c_kp        ψ_kp = 2π b_k · c_kp
//! ```
//!
//! Close to the base station the plane-wave model breaks down, so exposure is
//! evaluated with a spherical-wave free-space channel, `q_m(Q) =
//! exp(j2π d_m) / (4π d_m)` with `d_m` the distance from element `m` to `Q`.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::beamforming::EqualizationMode;
use crate::error::{invalid, Error, Result};
use crate::geometry::{linear_array, ArrayLayout, LimitCircle, Vec2, HALF_WAVELENGTH};

/// Distances at or below this (in wavelengths) are treated as landing on an
/// antenna element.
pub const SINGULAR_DISTANCE: f64 = 1e-9;

/// Minimum angular separation between departure directions of one sample.
pub const MIN_DIRECTION_SEPARATION: f64 = 1e-6;

/// Static experiment configuration.
///
/// Powers are normalized by the maximum transmit power, so `max_power` is 1
/// unless a caller deliberately rescales.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    pub antenna_count: usize,
    pub scatterer_count: usize,
    pub ris_count: usize,
    pub ris_element_count: usize,
    /// Limit-circle radius in wavelengths.
    pub circle_radius: f64,
    /// Exposure threshold over maximum transmit power, linear.
    pub threshold_ratio: f64,
    pub max_power: f64,
    /// Element spacing of both the BS array and every RIS.
    pub element_spacing: f64,
    /// Departure and RIS-to-UE angles are drawn from the open interval
    /// `(direction_range.0, direction_range.1)`.
    pub direction_range: (f64, f64),
    /// RIS rotation away from broadside to its BS direction, in radians.
    pub ris_tilt: f64,
    pub equalization: EqualizationMode,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            antenna_count: 64,
            scatterer_count: 3,
            ris_count: 3,
            ris_element_count: 16,
            circle_radius: 650.0,
            threshold_ratio: 1e-7,
            max_power: 1.0,
            element_spacing: HALF_WAVELENGTH,
            direction_range: (0.0, PI),
            ris_tilt: 0.0,
            equalization: EqualizationMode::default(),
        }
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        if self.antenna_count == 0 {
            return Err(invalid("antenna_count", "must be at least 1"));
        }
        if self.scatterer_count == 0 {
            return Err(invalid("scatterer_count", "must be at least 1"));
        }
        if self.ris_element_count == 0 {
            return Err(invalid("ris_element_count", "must be at least 1"));
        }
        if !(self.circle_radius > 0.0 && self.circle_radius.is_finite()) {
            return Err(invalid("circle_radius", "must be positive"));
        }
        if !(self.threshold_ratio > 0.0 && self.threshold_ratio.is_finite()) {
            return Err(invalid("threshold_ratio", "must be positive"));
        }
        if !(self.max_power > 0.0 && self.max_power.is_finite()) {
            return Err(invalid("max_power", "must be positive"));
        }
        if !(self.element_spacing > 0.0 && self.element_spacing.is_finite()) {
            return Err(invalid("element_spacing", "must be positive"));
        }
        let (lo, hi) = self.direction_range;
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(invalid(
                "direction_range",
                "must be a non-empty finite interval",
            ));
        }
        if !self.ris_tilt.is_finite() {
            return Err(invalid("ris_tilt", "must be finite"));
        }
        Ok(())
    }

    /// The BS array: `antenna_count` elements along +x from the origin.
    pub fn bs_array(&self) -> Result<ArrayLayout> {
        linear_array(
            self.antenna_count,
            self.element_spacing,
            Vec2::new(1.0, 0.0),
            Vec2::ZERO,
        )
    }

    /// Limit circle centered on the first BS element.
    pub fn limit_circle(&self, sample_count: usize) -> Result<LimitCircle> {
        LimitCircle::new(self.circle_radius, Vec2::ZERO, sample_count)
    }

    /// Exposure threshold in the same normalized units as received power.
    pub fn threshold(&self) -> f64 {
        self.threshold_ratio * self.max_power
    }
}

/// One far-field path via a scatterer.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPath {
    /// BS-to-scatterer unit direction.
    pub direction: Vec2,
    pub gain: Complex64,
}

/// One BS → RIS → UE cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct RisPath {
    /// BS-to-RIS unit direction.
    pub bs_direction: Vec2,
    /// RIS-to-UE unit direction.
    pub ue_direction: Vec2,
    /// Cascade gain over the whole surface (unit mean power).
    pub gain: Complex64,
    /// Element offsets of the RIS relative to its first element.
    pub layout: ArrayLayout,
    /// Per-element phase-shift weights; `None` until the RIS configures itself.
    pub weights: Option<Vec<Complex64>>,
}

impl RisPath {
    pub fn element_count(&self) -> usize {
        self.layout.element_count()
    }
}

/// One random channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSample {
    pub scatterers: Vec<ScatterPath>,
    pub ris: Vec<RisPath>,
}

impl ScenarioSample {
    /// The same scatterer draws with every RIS removed.
    pub fn without_ris(&self) -> ScenarioSample {
        ScenarioSample {
            scatterers: self.scatterers.clone(),
            ris: Vec::new(),
        }
    }

    pub fn is_configured(&self) -> bool {
        self.ris.iter().all(|r| r.weights.is_some())
    }

    /// Multiplies every path gain by `factor`.
    pub fn scale_gains(&self, factor: Complex64) -> ScenarioSample {
        let mut out = self.clone();
        out.scatterers.iter_mut().for_each(|p| p.gain *= factor);
        out.ris.iter_mut().for_each(|r| r.gain *= factor);
        out
    }
}

/// A length-`M` complex row vector: one coefficient per BS element.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector(pub Vec<Complex64>);

impl ChannelVector {
    pub fn zeros(len: usize) -> Self {
        ChannelVector(vec![Complex64::new(0.0, 0.0); len])
    }

    /// Plane-wave steering vector `exp(j2π direction · v_m)` across `array`.
    pub fn steering(direction: Vec2, array: &ArrayLayout) -> Self {
        ChannelVector(
            array
                .element_offsets
                .iter()
                .map(|&v| Complex64::cis(TAU * direction.dot(v)))
                .collect(),
        )
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Row-times-column product `Σ_m self_m · column_m` (no conjugation).
    pub fn apply(&self, column: &[Complex64]) -> Result<Complex64> {
        if self.len() != column.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: column.len(),
            });
        }
        Ok(self.0.iter().zip(column).map(|(a, b)| a * b).sum())
    }

    fn add_scaled(&mut self, other: &ChannelVector, factor: Complex64) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b * factor;
        }
    }
}

/// Scatterer channel `s`.
pub fn scatterer_channel(sample: &ScenarioSample, bs: &ArrayLayout) -> ChannelVector {
    let mut s = ChannelVector::zeros(bs.element_count());
    for path in &sample.scatterers {
        s.add_scaled(&ChannelVector::steering(path.direction, bs), path.gain);
    }
    s
}

fn ris_at(sample: &ScenarioSample, k: usize) -> Result<&RisPath> {
    sample.ris.get(k).ok_or(Error::RisIndexOutOfRange {
        index: k,
        count: sample.ris.len(),
    })
}

/// Incidence phases `φ_kp = 2π a_k · c_kp` and reflection phases
/// `ψ_kp = 2π b_k · c_kp` of RIS `k` (zero-based).
pub fn ris_phase_terms(sample: &ScenarioSample, k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let ris = ris_at(sample, k)?;
    let offsets = &ris.layout.element_offsets;
    let phi = offsets
        .iter()
        .map(|&c| TAU * ris.bs_direction.dot(c))
        .collect();
    let psi = offsets
        .iter()
        .map(|&c| TAU * ris.ue_direction.dot(c))
        .collect();
    Ok((phi, psi))
}

/// Self-configuration: every RIS element sets `w_kp = exp(−jψ_kp)`, steering
/// the surface toward the target UE.
pub fn configure_ris(sample: &ScenarioSample) -> ScenarioSample {
    let mut out = sample.clone();
    for ris in &mut out.ris {
        let weights = ris
            .layout
            .element_offsets
            .iter()
            .map(|&c| Complex64::cis(-TAU * ris.ue_direction.dot(c)))
            .collect();
        ris.weights = Some(weights);
    }
    out
}

/// Effective cascade gain `δ_k` of RIS `k` (zero-based).
pub fn ris_effective_gain(sample: &ScenarioSample, k: usize) -> Result<Complex64> {
    let ris = ris_at(sample, k)?;
    let weights = ris
        .weights
        .as_ref()
        .ok_or(Error::RisNotConfigured { index: k })?;
    let (phi, psi) = ris_phase_terms(sample, k)?;
    if weights.len() != phi.len() {
        return Err(Error::LengthMismatch {
            left: weights.len(),
            right: phi.len(),
        });
    }
    let sum: Complex64 = weights
        .iter()
        .zip(phi.iter().zip(&psi))
        .map(|(w, (f, p))| w * Complex64::cis(f + p))
        .sum();
    Ok(ris.gain * sum / ris.element_count() as f64)
}

/// RIS cascade channel `h`; the zero vector when there is no RIS.
pub fn ris_channel(sample: &ScenarioSample, bs: &ArrayLayout) -> Result<ChannelVector> {
    let mut h = ChannelVector::zeros(bs.element_count());
    for (k, ris) in sample.ris.iter().enumerate() {
        let delta = ris_effective_gain(sample, k)?;
        h.add_scaled(&ChannelVector::steering(ris.bs_direction, bs), delta);
    }
    Ok(h)
}

/// `g = s + h`.
pub fn composite_channel(s: &ChannelVector, h: &ChannelVector) -> Result<ChannelVector> {
    if s.len() != h.len() {
        return Err(Error::LengthMismatch {
            left: s.len(),
            right: h.len(),
        });
    }
    Ok(ChannelVector(
        s.0.iter().zip(&h.0).map(|(a, b)| a + b).collect(),
    ))
}

/// The channel the BS measures after RIS configuration.
pub fn true_channel(sample: &ScenarioSample, bs: &ArrayLayout) -> Result<ChannelVector> {
    composite_channel(&scatterer_channel(sample, bs), &ris_channel(sample, bs)?)
}

#[inline]
fn friis(distance: f64) -> Complex64 {
    Complex64::cis(TAU * distance) / (4.0 * PI * distance)
}

fn element_distance(q: Vec2, bs: &ArrayLayout, m: usize) -> Result<f64> {
    let p = bs.position(m);
    let d = q.distance(p);
    if d <= SINGULAR_DISTANCE {
        return Err(Error::SingularPoint {
            x: q.x,
            y: q.y,
            element: m,
        });
    }
    Ok(d)
}

/// Spherical-wave free-space channel `q(Q)` from each BS element to `q`.
pub fn near_field_channel(q: Vec2, bs: &ArrayLayout) -> Result<ChannelVector> {
    (0..bs.element_count())
        .map(|m| element_distance(q, bs, m).map(friis))
        .collect::<Result<Vec<_>>>()
        .map(ChannelVector)
}

/// `q(Q) · b` without materializing `q(Q)`.
pub fn near_field_response(q: Vec2, bs: &ArrayLayout, weights: &[Complex64]) -> Result<Complex64> {
    if weights.len() != bs.element_count() {
        return Err(Error::LengthMismatch {
            left: bs.element_count(),
            right: weights.len(),
        });
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (m, w) in weights.iter().enumerate() {
        acc += friis(element_distance(q, bs, m)?) * w;
    }
    Ok(acc)
}

fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * FRAC_1_SQRT_2
}

fn open_uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    loop {
        let t = lo + (hi - lo) * rng.random::<f64>();
        if t > lo && t < hi {
            return t;
        }
    }
}

/// Draws one channel realization, deterministically from `seed`.
///
/// Path gains are unit-power circularly-symmetric complex Gaussians and all
/// angles are uniform over `params.direction_range`. The departure angles of
/// all scatterer and RIS paths are pairwise at least
/// [`MIN_DIRECTION_SEPARATION`] apart. RIS weights are left unset.
pub fn sample_scenario(params: &ScenarioParams, seed: u64) -> Result<ScenarioSample> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let paths = params.scatterer_count + params.ris_count;

    let mut angles: Vec<f64> = Vec::with_capacity(paths);
    while angles.len() < paths {
        let t = open_uniform(&mut rng, params.direction_range);
        if angles
            .iter()
            .all(|&a| (a - t).abs() >= MIN_DIRECTION_SEPARATION)
        {
            angles.push(t);
        }
    }
    let alphas: Vec<Complex64> = (0..params.scatterer_count)
        .map(|_| complex_gaussian(&mut rng))
        .collect();
    let betas: Vec<Complex64> = (0..params.ris_count)
        .map(|_| complex_gaussian(&mut rng))
        .collect();
    let ue_angles: Vec<f64> = (0..params.ris_count)
        .map(|_| open_uniform(&mut rng, params.direction_range))
        .collect();

    let scatterers = angles[..params.scatterer_count]
        .iter()
        .zip(alphas)
        .map(|(&t, gain)| ScatterPath {
            direction: Vec2::from_angle(t),
            gain,
        })
        .collect();

    let ris = angles[params.scatterer_count..]
        .iter()
        .zip(betas.into_iter().zip(ue_angles))
        .map(|(&t, (gain, ue))| {
            let bs_direction = Vec2::from_angle(t);
            let orientation = bs_direction.perp().rotate(params.ris_tilt);
            let layout = linear_array(
                params.ris_element_count,
                params.element_spacing,
                orientation,
                Vec2::ZERO,
            )?;
            Ok(RisPath {
                bs_direction,
                ue_direction: Vec2::from_angle(ue),
                gain,
                layout,
                weights: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ScenarioSample { scatterers, ris })
}
