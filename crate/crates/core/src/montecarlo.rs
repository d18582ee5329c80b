//! Seeded Monte Carlo batches and empirical CDFs.
//!
//! Sample `i` of a batch is drawn from its own generator seeded with
//! [`sub_seed`]`(master_seed, i)`, so a batch gives the same numbers whether
//! it runs on one thread or many, and any single sample can be replayed in
//! isolation.

use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::beamforming::{build_schemes, received_power_target, Scheme};
use crate::channel::{configure_ris, sample_scenario, true_channel, ScenarioParams};
use crate::error::{invalid, Error, Result};
use crate::exposure::{to_db, violation_percentage_for};
use crate::geometry::scan_grid;

/// SplitMix64 increment.
const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The `index + 1`-th output of a SplitMix64 generator whose state starts at
/// `master_seed`.
pub fn sub_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed.wrapping_add(GOLDEN_GAMMA.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    /// Percent of scanned positions beyond the limit circle above threshold.
    ViolationPercentage,
    /// `10·log10(χ / χ_max)`.
    TransmitPowerDb,
    /// `10·log10(ρ / χ_max)` at the target UE.
    ReceivedPowerDb,
}

impl Metric {
    pub const ALL: [Metric; 3] = [
        Metric::ViolationPercentage,
        Metric::TransmitPowerDb,
        Metric::ReceivedPowerDb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::ViolationPercentage => "violation_percentage",
            Metric::TransmitPowerDb => "transmit_power_db",
            Metric::ReceivedPowerDb => "received_power_db",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchConfig {
    pub params: ScenarioParams,
    pub sample_count: usize,
    pub master_seed: u64,
    pub schemes: Vec<Scheme>,
    /// When false every sample is stripped of its RIS paths after drawing, so
    /// scatterer draws match a RIS-enabled batch with the same seed.
    pub ris_enabled: bool,
    pub grid_half_extent: f64,
    pub grid_step: f64,
    pub circle_samples: usize,
    /// Size of a dedicated thread pool; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            params: ScenarioParams::default(),
            sample_count: 1000,
            master_seed: 1,
            schemes: Scheme::ALL.to_vec(),
            ris_enabled: true,
            grid_half_extent: 700.0,
            grid_step: 5.0,
            circle_samples: 3600,
            workers: None,
        }
    }
}

/// Values of one metric for one scheme, one per sample in sample order.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub metric: Metric,
    pub scheme: Scheme,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub series: Vec<MetricSeries>,
}

impl BatchResult {
    pub fn get(&self, metric: Metric, scheme: Scheme) -> Option<&MetricSeries> {
        self.series
            .iter()
            .find(|s| s.metric == metric && s.scheme == scheme)
    }
}

/// `[violation %, transmit dB, received dB]` per requested scheme.
type SampleMetrics = Vec<[f64; 3]>;

/// Runs the batch. A failing sample aborts with its index; when several fail
/// the lowest index is reported.
pub fn run_batch(config: &BatchConfig) -> Result<BatchResult> {
    if config.sample_count == 0 {
        return Err(invalid("sample_count", "must be at least 1"));
    }
    if config.schemes.is_empty() {
        return Err(invalid("schemes", "at least one scheme is required"));
    }
    config.params.validate()?;
    match config.workers {
        None => run_samples(config),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| invalid("workers", e.to_string()))?
            .install(|| run_samples(config)),
    }
}

fn run_samples(config: &BatchConfig) -> Result<BatchResult> {
    let params = &config.params;
    let bs = params.bs_array()?;
    let circle = params.limit_circle(config.circle_samples)?;
    let grid = scan_grid(config.grid_half_extent, config.grid_step, &circle)?;
    let threshold = params.threshold();

    let evaluate = |index: usize| -> Result<SampleMetrics> {
        let drawn = sample_scenario(params, sub_seed(config.master_seed, index as u64))?;
        let mut sample = configure_ris(&drawn);
        if !config.ris_enabled {
            sample = sample.without_ris();
        }
        let g = true_channel(&sample, &bs)?;
        build_schemes(&config.schemes, &sample, &bs, &circle, params)?
            .iter()
            .map(|r| {
                Ok([
                    violation_percentage_for(r, &grid, &bs, threshold)?,
                    to_db(r.transmit_power),
                    to_db(received_power_target(&g, r)?),
                ])
            })
            .collect()
    };

    let per_sample: Vec<Result<SampleMetrics>> = (0..config.sample_count)
        .into_par_iter()
        .map(evaluate)
        .collect();

    let mut rows = Vec::with_capacity(per_sample.len());
    for (index, r) in per_sample.into_iter().enumerate() {
        rows.push(r.map_err(|e| Error::Sample {
            index,
            source: Box::new(e),
        })?);
    }

    let mut series = Vec::new();
    for (slot, &scheme) in config.schemes.iter().enumerate() {
        for (m, metric) in Metric::ALL.into_iter().enumerate() {
            series.push(MetricSeries {
                metric,
                scheme,
                values: rows.iter().map(|r| r[slot][m]).collect(),
            });
        }
    }
    Ok(BatchResult { series })
}

/// Empirical CDF as a step function: distinct sorted values and the fraction
/// of samples at or below each.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfSeries {
    pub sorted_values: Vec<f64>,
    pub cumulative_fractions: Vec<f64>,
}

impl CdfSeries {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mut sorted_values = Vec::new();
        let mut cumulative_fractions = Vec::new();
        for (i, &v) in sorted.iter().enumerate() {
            // Ties collapse onto their last order statistic.
            if sorted
                .get(i + 1)
                .is_some_and(|next| next.total_cmp(&v).is_eq())
            {
                continue;
            }
            sorted_values.push(v);
            cumulative_fractions.push((i + 1) as f64 / n);
        }
        Ok(CdfSeries {
            sorted_values,
            cumulative_fractions,
        })
    }

    /// `P(X ≤ x)`.
    pub fn evaluate(&self, x: f64) -> f64 {
        let idx = self.sorted_values.partition_point(|&v| v <= x);
        if idx == 0 {
            0.0
        } else {
            self.cumulative_fractions[idx - 1]
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "value,cdf")?;
        for (v, f) in self.sorted_values.iter().zip(&self.cumulative_fractions) {
            writeln!(w, "{v},{f}")?;
        }
        Ok(())
    }
}

pub fn empirical_cdf(series: &MetricSeries) -> Result<CdfSeries> {
    CdfSeries::from_values(&series.values)
}

/// Minimum, median and maximum of a non-empty sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        };
        Ok(Summary {
            min: v[0],
            median,
            max: v[n - 1],
        })
    }
}

pub fn median(values: &[f64]) -> Result<f64> {
    Summary::of(values).map(|s| s.median)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exposure::snapshot_report;
    use crate::geometry::LimitCircle;
    use proptest::prelude::*;

    fn small_config(samples: usize) -> BatchConfig {
        BatchConfig {
            params: ScenarioParams {
                antenna_count: 16,
                ..ScenarioParams::default()
            },
            sample_count: samples,
            master_seed: 99,
            grid_step: 50.0,
            circle_samples: 720,
            ..BatchConfig::default()
        }
    }

    #[test]
    fn sub_seeds_are_distinct_and_stable() {
        let seeds: std::collections::HashSet<u64> = (0..10_000).map(|i| sub_seed(7, i)).collect();
        assert_eq!(seeds.len(), 10_000);
        assert_ne!(sub_seed(7, 0), sub_seed(8, 0));
        // SplitMix64 seeded with 0: first output.
        assert_eq!(sub_seed(0, 0), 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn cdf_examples() {
        let c = CdfSeries::from_values(&[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(c.sorted_values, vec![5.0]);
        assert_eq!(c.cumulative_fractions, vec![1.0]);

        let c = CdfSeries::from_values(&[3.0, 1.0, 4.0, 2.0]).unwrap();
        assert_eq!(c.sorted_values, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(c.cumulative_fractions, vec![0.25, 0.5, 0.75, 1.0]);
        assert_eq!(c.evaluate(0.5), 0.0);
        assert_eq!(c.evaluate(2.5), 0.5);
        assert_eq!(c.evaluate(9.0), 1.0);

        assert!(matches!(
            CdfSeries::from_values(&[]),
            Err(Error::EmptySeries)
        ));
    }

    #[test]
    fn cdf_csv() {
        let mut buf = Vec::new();
        CdfSeries::from_values(&[0.1, 0.2])
            .unwrap()
            .write_csv(&mut buf)
            .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "value,cdf\n0.1,0.5\n0.2,1\n"
        );
    }

    #[test]
    fn summary_median() {
        assert_eq!(Summary::of(&[3.0, 1.0, 2.0]).unwrap().median, 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]).unwrap(), 2.5);
    }

    #[test]
    fn batch_layout_and_determinism() {
        let cfg = small_config(6);
        let a = run_batch(&cfg).unwrap();
        assert_eq!(a.series.len(), 9);
        assert!(a.series.iter().all(|s| s.values.len() == 6));
        assert_eq!(a, run_batch(&cfg).unwrap());
        let one = run_batch(&BatchConfig {
            workers: Some(1),
            ..cfg.clone()
        })
        .unwrap();
        let four = run_batch(&BatchConfig {
            workers: Some(4),
            ..cfg
        })
        .unwrap();
        assert_eq!(one, four);
        assert_eq!(a, one);
    }

    #[test]
    fn single_sample_matches_snapshot() {
        let cfg = small_config(1);
        let batch = run_batch(&cfg).unwrap();
        let p = &cfg.params;
        let circle = LimitCircle::new(p.circle_radius, crate::geometry::Vec2::ZERO, 720).unwrap();
        let grid = scan_grid(700.0, 50.0, &circle).unwrap();
        let sample = sample_scenario(p, sub_seed(99, 0)).unwrap();
        let report =
            snapshot_report(&sample, p, &grid, &circle, &p.bs_array().unwrap(), false).unwrap();
        for scheme in Scheme::ALL {
            let row = report.row(true, scheme).unwrap();
            let get = |m| batch.get(m, scheme).unwrap().values[0];
            assert_eq!(get(Metric::ViolationPercentage), row.violation_percentage);
            assert_eq!(get(Metric::TransmitPowerDb), row.transmit_power_db);
            assert_eq!(get(Metric::ReceivedPowerDb), row.received_power_db);
        }
    }

    #[test]
    fn power_ordering_per_sample() {
        let b = run_batch(&small_config(12)).unwrap();
        let tx = |s| &b.get(Metric::TransmitPowerDb, s).unwrap().values;
        let rx = |s| &b.get(Metric::ReceivedPowerDb, s).unwrap().values;
        for i in 0..12 {
            assert!(tx(Scheme::Reduced)[i] <= 0.0 && tx(Scheme::Equalized)[i] <= 0.0);
            assert!(rx(Scheme::Mrt)[i] >= rx(Scheme::Reduced)[i]);
        }
    }

    #[test]
    fn invalid_batches() {
        assert!(run_batch(&BatchConfig {
            sample_count: 0,
            ..small_config(1)
        })
        .is_err());
        assert!(run_batch(&BatchConfig {
            schemes: vec![],
            ..small_config(1)
        })
        .is_err());
    }

    #[test]
    fn scheme_subset() {
        let b = run_batch(&BatchConfig {
            schemes: vec![Scheme::Equalized],
            ..small_config(2)
        })
        .unwrap();
        assert_eq!(b.series.len(), 3);
        assert!(b.get(Metric::ReceivedPowerDb, Scheme::Mrt).is_none());
    }

    proptest! {
        #[test]
        fn cdf_is_valid(values in prop::collection::vec(-1e3f64..1e3, 1..200)) {
            let c = CdfSeries::from_values(&values).unwrap();
            prop_assert_eq!(*c.cumulative_fractions.last().unwrap(), 1.0);
            prop_assert!(c.sorted_values.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(c.cumulative_fractions.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(c.cumulative_fractions.iter().all(|&f| f > 0.0 && f <= 1.0));
            for &v in &values {
                let below = values.iter().filter(|&&x| x <= v).count() as f64 / values.len() as f64;
                prop_assert_eq!(c.evaluate(v), below);
            }
        }
    }
}
