//! Precoders and exposure-compliant transmit power.
//!
//! All three schemes are maximum-ratio transmission applied to some channel:
//!
//! * **MRT** uses the measured channel `g` at full power.
//! * **Reduced** keeps the MRT weights and scales power down until the
//!   strongest point of the limit circle sits exactly at the threshold.
//! * **Equalized** applies MRT to a virtual channel with the true departure
//!   directions but every path strength set to one, then scales power the
//!   same way as Reduced.
//!
//! The transmit power of the constrained schemes is
//! `χ = min(threshold / ω_max, 1) · χ_max`, where `ω_max` is the largest
//! per-unit-power gain `|q(Q)·b|²` over the limit circle.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::channel::{
    near_field_response, ris_effective_gain, true_channel, ChannelVector, ScenarioParams,
    ScenarioSample,
};
use crate::error::{Error, Result};
use crate::geometry::{ArrayLayout, LimitCircle, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Mrt,
    Reduced,
    Equalized,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Mrt, Scheme::Reduced, Scheme::Equalized];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Mrt => "mrt",
            Scheme::Reduced => "reduced",
            Scheme::Equalized => "equalized",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mrt" => Ok(Scheme::Mrt),
            "reduced" | "red" => Ok(Scheme::Reduced),
            "equalized" | "eq" => Ok(Scheme::Equalized),
            other => Err(format!(
                "unknown scheme `{other}` (expected mrt, reduced or equalized)"
            )),
        }
    }
}

/// How the Equalized scheme sets the strength of each virtual path.
///
/// `UnitModulus` replaces every path gain by its phase `γ/|γ|`, so all paths
/// have unit strength but still add coherently at the target.
/// `UnitGain` replaces every path gain by exactly `1`, discarding phase too;
/// the resulting precoder depends on the departure directions alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EqualizationMode {
    #[default]
    UnitModulus,
    UnitGain,
}

impl EqualizationMode {
    pub fn name(self) -> &'static str {
        match self {
            EqualizationMode::UnitModulus => "unit_modulus",
            EqualizationMode::UnitGain => "unit_gain",
        }
    }

    fn equalize(self, gain: Complex64) -> Complex64 {
        match self {
            EqualizationMode::UnitGain => Complex64::new(1.0, 0.0),
            EqualizationMode::UnitModulus => {
                let r = gain.norm();
                if r > 0.0 {
                    gain / r
                } else {
                    Complex64::new(1.0, 0.0)
                }
            }
        }
    }
}

impl fmt::Display for EqualizationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EqualizationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "unit_modulus" => Ok(EqualizationMode::UnitModulus),
            "unit_gain" => Ok(EqualizationMode::UnitGain),
            other => Err(format!(
                "unknown equalization `{other}` (expected unit_modulus or unit_gain)"
            )),
        }
    }
}

/// A unit-norm beamforming column vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    pub weights: Vec<Complex64>,
    pub scheme: Scheme,
}

impl Precoder {
    pub fn norm(&self) -> f64 {
        self.weights
            .iter()
            .map(|w| w.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

fn matched_filter(channel: &ChannelVector, scheme: Scheme) -> Result<Precoder> {
    let norm = channel.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroChannel);
    }
    Ok(Precoder {
        weights: channel.entries().iter().map(|c| c.conj() / norm).collect(),
        scheme,
    })
}

/// `b = g† / ‖g‖`.
pub fn mrt_precoder(g: &ChannelVector) -> Result<Precoder> {
    matched_filter(g, Scheme::Mrt)
}

/// Virtual channel with the true departure directions and equalized strengths.
///
/// In [`EqualizationMode::UnitModulus`] the RIS paths need their effective
/// gains, so the sample must be configured.
pub fn equalized_virtual_channel(
    sample: &ScenarioSample,
    bs: &ArrayLayout,
    mode: EqualizationMode,
) -> Result<ChannelVector> {
    let mut g = ChannelVector::zeros(bs.element_count());
    let mut accumulate = |direction: Vec2, coefficient: Complex64| {
        for (acc, s) in g.0.iter_mut().zip(ChannelVector::steering(direction, bs).0) {
            *acc += s * coefficient;
        }
    };
    for path in &sample.scatterers {
        accumulate(path.direction, mode.equalize(path.gain));
    }
    for (k, ris) in sample.ris.iter().enumerate() {
        let coefficient = match mode {
            EqualizationMode::UnitGain => Complex64::new(1.0, 0.0),
            EqualizationMode::UnitModulus => mode.equalize(ris_effective_gain(sample, k)?),
        };
        accumulate(ris.bs_direction, coefficient);
    }
    Ok(g)
}

/// `b = g′† / ‖g′‖`.
pub fn equalized_precoder(g_prime: &ChannelVector) -> Result<Precoder> {
    matched_filter(g_prime, Scheme::Equalized)
}

/// Largest per-unit-power gain found on the limit circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleMax {
    pub gain: f64,
    pub point: Vec2,
}

/// Maximum of `|q(Q)·b|²` over the given points; the first maximizer wins ties.
pub fn circle_max_gain(b: &Precoder, points: &[Vec2], bs: &ArrayLayout) -> Result<CircleMax> {
    let mut best: Option<CircleMax> = None;
    for &point in points {
        let gain = near_field_response(point, bs, &b.weights)?.norm_sqr();
        if best.is_none_or(|m| gain > m.gain) {
            best = Some(CircleMax { gain, point });
        }
    }
    best.ok_or(Error::EmptyCircle)
}

/// Numerical search for the maximum gain on a limit circle.
///
/// The circle is first sampled uniformly at `circle.sample_count` angles.
/// Every coarse local maximum within `candidate_ratio` of the coarse maximum is
/// then refined by golden-section search over ±1 coarse step, down to
/// `angle_tolerance` radians. Refining several candidates matters when two
/// lobes are nearly equal and the coarse grid ranks them wrongly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleSearch {
    pub angle_tolerance: f64,
    pub candidate_ratio: f64,
}

impl Default for CircleSearch {
    fn default() -> Self {
        CircleSearch {
            angle_tolerance: 1e-10,
            candidate_ratio: 0.99,
        }
    }
}

impl CircleSearch {
    pub fn search(
        &self,
        b: &Precoder,
        circle: &LimitCircle,
        bs: &ArrayLayout,
    ) -> Result<CircleMax> {
        let n = circle.sample_count;
        if n == 0 {
            return Err(Error::EmptyCircle);
        }
        let gain_at = |angle: f64| -> Result<f64> {
            Ok(near_field_response(circle.point_at(angle), bs, &b.weights)?.norm_sqr())
        };
        let coarse = (0..n)
            .map(|i| gain_at(circle.sample_angle(i)))
            .collect::<Result<Vec<f64>>>()?;

        let (mut best_index, mut best_gain) = (0, coarse[0]);
        for (i, &g) in coarse.iter().enumerate().skip(1) {
            if g > best_gain {
                best_index = i;
                best_gain = g;
            }
        }
        let mut best = CircleMax {
            gain: best_gain,
            point: circle.point_at(circle.sample_angle(best_index)),
        };

        let step = circle.sample_angle(1);
        let floor = best_gain * self.candidate_ratio;
        for i in 0..n {
            let g = coarse[i];
            let prev = coarse[(i + n - 1) % n];
            let next = coarse[(i + 1) % n];
            if g < floor || g < prev || g < next {
                continue;
            }
            let center = circle.sample_angle(i);
            let (angle, gain) =
                golden_max(&gain_at, center - step, center + step, self.angle_tolerance)?;
            if gain > best.gain {
                best = CircleMax {
                    gain,
                    point: circle.point_at(angle),
                };
            }
        }
        Ok(best)
    }
}

/// Golden-section maximization of `f` on `[lo, hi]`.
fn golden_max<F>(f: &F, mut lo: f64, mut hi: f64, tolerance: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while hi - lo > tolerance {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d)?;
        }
    }
    let mid = 0.5 * (lo + hi);
    let fm = f(mid)?;
    // Return the best point actually evaluated, so the reported gain is
    // exactly the gain at the reported angle.
    Ok([(mid, fm), (c, fc), (d, fd)]
        .into_iter()
        .fold((mid, fm), |acc, x| if x.1 > acc.1 { x } else { acc }))
}

/// Transmit power setting for a constrained scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmitPower {
    /// Normalized transmit power, `0 < power ≤ max_power`.
    pub power: f64,
    /// The `max_power` bound was active.
    pub clamped: bool,
    /// The pattern has no gain anywhere on the circle; the power is
    /// unconstrained and set to `max_power`.
    pub null_pattern: bool,
}

/// `χ = min(threshold_ratio / ω_max, 1) · χ_max`.
pub fn compliant_power(omega_max: f64, params: &ScenarioParams) -> TransmitPower {
    if omega_max <= 0.0 {
        return TransmitPower {
            power: params.max_power,
            clamped: true,
            null_pattern: true,
        };
    }
    let ratio = params.threshold_ratio / omega_max;
    TransmitPower {
        power: ratio.min(1.0) * params.max_power,
        clamped: ratio >= 1.0,
        null_pattern: false,
    }
}

/// A precoder with its transmit power and circle diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderResult {
    pub precoder: Precoder,
    pub transmit_power: f64,
    /// Per-unit-power maximum gain on the limit circle.
    pub circle_max_gain: f64,
    pub argmax_point: Vec2,
    /// Transmit power sits at `max_power`. Always true for MRT, which never
    /// reduces its power.
    pub clamped: bool,
}

impl PrecoderResult {
    pub fn scheme(&self) -> Scheme {
        self.precoder.scheme
    }

    /// Peak received power on the limit circle at the chosen transmit power.
    pub fn circle_peak_power(&self) -> f64 {
        self.circle_max_gain * self.transmit_power
    }
}

fn constrained(precoder: Precoder, peak: CircleMax, params: &ScenarioParams) -> PrecoderResult {
    let power = compliant_power(peak.gain, params);
    PrecoderResult {
        precoder,
        transmit_power: power.power,
        circle_max_gain: peak.gain,
        argmax_point: peak.point,
        clamped: power.clamped,
    }
}

fn check_dimensions(bs: &ArrayLayout, params: &ScenarioParams) -> Result<()> {
    if bs.element_count() != params.antenna_count {
        return Err(Error::LengthMismatch {
            left: bs.element_count(),
            right: params.antenna_count,
        });
    }
    Ok(())
}

/// Builds one scheme for a configured sample.
pub fn build_scheme(
    scheme: Scheme,
    sample: &ScenarioSample,
    bs: &ArrayLayout,
    circle: &LimitCircle,
    params: &ScenarioParams,
) -> Result<PrecoderResult> {
    Ok(build_schemes(&[scheme], sample, bs, circle, params)?.remove(0))
}

/// Builds several schemes for one sample, in the order given. MRT and
/// Reduced share weights, so their circle search runs once.
pub fn build_schemes(
    schemes: &[Scheme],
    sample: &ScenarioSample,
    bs: &ArrayLayout,
    circle: &LimitCircle,
    params: &ScenarioParams,
) -> Result<Vec<PrecoderResult>> {
    check_dimensions(bs, params)?;
    let search = CircleSearch::default();
    let mut mrt: Option<(Precoder, CircleMax)> = None;
    let mut mrt_parts = || -> Result<(Precoder, CircleMax)> {
        if let Some(parts) = &mrt {
            return Ok(parts.clone());
        }
        let b = mrt_precoder(&true_channel(sample, bs)?)?;
        let peak = search.search(&b, circle, bs)?;
        mrt = Some((b.clone(), peak));
        Ok((b, peak))
    };

    let mut out = Vec::with_capacity(schemes.len());
    for &scheme in schemes {
        let result = match scheme {
            Scheme::Mrt => {
                let (b, peak) = mrt_parts()?;
                PrecoderResult {
                    precoder: b,
                    transmit_power: params.max_power,
                    circle_max_gain: peak.gain,
                    argmax_point: peak.point,
                    clamped: true,
                }
            }
            Scheme::Reduced => {
                let (mut b, peak) = mrt_parts()?;
                b.scheme = Scheme::Reduced;
                constrained(b, peak, params)
            }
            Scheme::Equalized => {
                let g_prime = equalized_virtual_channel(sample, bs, params.equalization)?;
                let b = equalized_precoder(&g_prime)?;
                let peak = search.search(&b, circle, bs)?;
                constrained(b, peak, params)
            }
        };
        out.push(result);
    }
    Ok(out)
}

/// `ρ = |g·b|² χ`.
pub fn received_power_target(g: &ChannelVector, result: &PrecoderResult) -> Result<f64> {
    Ok(g.apply(&result.precoder.weights)?.norm_sqr() * result.transmit_power)
}
