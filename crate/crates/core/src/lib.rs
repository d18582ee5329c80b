//! Downlink massive-MIMO simulation under an electromagnetic-field exposure
//! limit.
//!
//! A base station with a uniform linear array serves one user through a few
//! far-field scatterers and, optionally, self-configuring reconfigurable
//! intelligent surfaces (RIS). Anyone standing on or outside a circle around
//! the array must receive no more than a threshold power. Three precoders are
//! compared:
//!
//! - [`Scheme::Mrt`]: maximum-ratio transmission at full power, ignoring the limit.
//! - [`Scheme::Reduced`]: the same beam, power backed off until the limit holds.
//! - [`Scheme::Equalized`]: a beam toward every path with equalized gains,
//!   spreading energy so less back-off is needed.
//!
//! All lengths are in wavelengths.
//!
//! ```
//! use emfe_core::{sample_scenario, snapshot_report, scan_grid, ScenarioParams, Scheme};
//!
//! let params = ScenarioParams::default();
//! let bs = params.bs_array()?;
//! let circle = params.limit_circle(720)?;
//! let grid = scan_grid(700.0, 50.0, &circle)?;
//! let sample = sample_scenario(&params, 7)?;
//! let report = snapshot_report(&sample, &params, &grid, &circle, &bs, false)?;
//! let mrt = report.row(true, Scheme::Mrt).unwrap();
//! let reduced = report.row(true, Scheme::Reduced).unwrap();
//! assert!(mrt.received_power_db > reduced.received_power_db);
//! # Ok::<(), emfe_core::Error>(())
//! ```

pub mod beamforming;
pub mod channel;
pub mod cli;
pub mod error;
pub mod exposure;
pub mod geometry;
pub mod montecarlo;

pub use beamforming::{
    build_scheme, build_schemes, circle_max_gain, compliant_power, equalized_precoder,
    equalized_virtual_channel, mrt_precoder, received_power_target, CircleMax, CircleSearch,
    EqualizationMode, Precoder, PrecoderResult, Scheme, TransmitPower,
};
pub use channel::{
    composite_channel, configure_ris, near_field_channel, near_field_response, ris_channel,
    ris_effective_gain, sample_scenario, scatterer_channel, true_channel, ChannelVector, RisPath,
    ScatterPath, ScenarioParams, ScenarioSample,
};
pub use error::{Error, Result};
pub use exposure::{
    exposure_map, snapshot, snapshot_report, to_db, violation_percentage, violation_percentage_for,
    ExposureMap, SnapshotReport, SnapshotRow,
};
pub use geometry::{
    circle_points, circle_samples, linear_array, scan_grid, ArrayLayout, LimitCircle, ScanGrid,
    Vec2,
};
pub use montecarlo::{
    empirical_cdf, run_batch, sub_seed, BatchConfig, BatchResult, CdfSeries, Metric, MetricSeries,
    Summary,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/beamforming.md")]
    mod beamforming {}
    #[doc = include_str!("../../../book/src/exposure.md")]
    mod exposure {}
    #[doc = include_str!("../../../book/src/montecarlo.md")]
    mod montecarlo {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
