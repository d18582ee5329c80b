//! Run configuration and the `snapshot`, `montecarlo` and `validate` commands.
//!
//! Configuration files are flat `key = value` text; `#` starts a comment.
//! Absent keys take the defaults below, unknown keys are rejected.
//!
//! | key                 | default                    |
//! |---------------------|----------------------------|
//! | `antenna_count`     | 64                         |
//! | `scatterer_count`   | 3                          |
//! | `ris_count`         | 3                          |
//! | `ris_element_count` | 16                         |
//! | `circle_radius`     | 650                        |
//! | `threshold_db`      | -70                        |
//! | `grid_half_extent`  | 700                        |
//! | `grid_step`         | 5                          |
//! | `circle_samples`    | 3600                       |
//! | `sample_count`      | 1000                       |
//! | `seed`              | 1                          |
//! | `schemes`           | `mrt,reduced,equalized`    |
//! | `ris_enabled`       | true                       |
//! | `out_dir`           | `out`                      |
//! | `equalization`      | `unit_modulus`             |
//! | `ris_tilt_deg`      | 0                          |

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::beamforming::Scheme;
use crate::channel::{sample_scenario, ScenarioParams};
use crate::exposure::{snapshot, write_exposure_csv, write_mask_csv, write_pgm, SnapshotReport};
use crate::geometry::{scan_grid, LimitCircle};
use crate::montecarlo::{empirical_cdf, run_batch, BatchConfig, BatchResult, Metric, Summary};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}", format_config_error(.line, .key, .message))]
    Config {
        line: Option<usize>,
        key: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Simulation(#[from] crate::error::Error),
}

fn format_config_error(line: &Option<usize>, key: &str, message: &str) -> String {
    match line {
        Some(l) => format!("config line {l}: `{key}`: {message}"),
        None => format!("config `{key}`: {message}"),
    }
}

impl CliError {
    /// Process exit code: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 2,
            _ => 1,
        }
    }
}

fn config_error(line: Option<usize>, key: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        line,
        key: key.to_string(),
        message: message.into(),
    }
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// A fully validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ScenarioParams,
    pub threshold_db: f64,
    pub ris_tilt_deg: f64,
    pub grid_half_extent: f64,
    pub grid_step: f64,
    pub circle_samples: usize,
    pub seed: u64,
    pub sample_count: usize,
    pub schemes: Vec<Scheme>,
    pub ris_enabled: bool,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: ScenarioParams::default(),
            threshold_db: -70.0,
            ris_tilt_deg: 0.0,
            grid_half_extent: 700.0,
            grid_step: 5.0,
            circle_samples: 3600,
            seed: 1,
            sample_count: 1000,
            schemes: Scheme::ALL.to_vec(),
            ris_enabled: true,
            out_dir: PathBuf::from("out"),
        }
    }
}

pub const KEYS: [&str; 16] = [
    "antenna_count",
    "scatterer_count",
    "ris_count",
    "ris_element_count",
    "circle_radius",
    "threshold_db",
    "grid_half_extent",
    "grid_step",
    "circle_samples",
    "sample_count",
    "seed",
    "schemes",
    "ris_enabled",
    "out_dir",
    "equalization",
    "ris_tilt_deg",
];

fn parse_value<T: FromStr>(line: Option<usize>, key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| config_error(line, key, format!("cannot parse `{value}`: {e}")))
}

fn parse_bool(line: Option<usize>, key: &str, value: &str) -> Result<bool, CliError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(config_error(
            line,
            key,
            format!("expected a boolean, got `{value}`"),
        )),
    }
}

pub fn parse_schemes(value: &str) -> Result<Vec<Scheme>, String> {
    let mut out = Vec::new();
    for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let s = part.parse::<Scheme>()?;
        if !out.contains(&s) {
            out.push(s);
        }
    }
    if out.is_empty() {
        return Err("at least one scheme is required".into());
    }
    Ok(out)
}

impl RunConfig {
    /// Sets one key from its textual value. `line` is only used in errors.
    pub fn set(&mut self, key: &str, value: &str, line: Option<usize>) -> Result<(), CliError> {
        let p = &mut self.params;
        match key {
            "antenna_count" => p.antenna_count = parse_value(line, key, value)?,
            "scatterer_count" => p.scatterer_count = parse_value(line, key, value)?,
            "ris_count" => p.ris_count = parse_value(line, key, value)?,
            "ris_element_count" => p.ris_element_count = parse_value(line, key, value)?,
            "circle_radius" => p.circle_radius = parse_value(line, key, value)?,
            "threshold_db" => self.threshold_db = parse_value(line, key, value)?,
            "ris_tilt_deg" => self.ris_tilt_deg = parse_value(line, key, value)?,
            "grid_half_extent" => self.grid_half_extent = parse_value(line, key, value)?,
            "grid_step" => self.grid_step = parse_value(line, key, value)?,
            "circle_samples" => self.circle_samples = parse_value(line, key, value)?,
            "sample_count" => self.sample_count = parse_value(line, key, value)?,
            "seed" => self.seed = parse_value(line, key, value)?,
            "schemes" => {
                self.schemes = parse_schemes(value).map_err(|e| config_error(line, key, e))?
            }
            "ris_enabled" => self.ris_enabled = parse_bool(line, key, value)?,
            "out_dir" => {
                if value.is_empty() {
                    return Err(config_error(line, key, "must not be empty"));
                }
                self.out_dir = PathBuf::from(value)
            }
            "equalization" => p.equalization = parse_value(line, key, value)?,
            _ => return Err(config_error(line, key, "unknown key")),
        }
        self.sync_derived();
        Ok(())
    }

    fn sync_derived(&mut self) {
        self.params.threshold_ratio = 10f64.powf(self.threshold_db / 10.0);
        self.params.ris_tilt = self.ris_tilt_deg.to_radians();
    }

    /// Checks every value; `lines` maps keys to the line they were set on.
    pub fn validate(&self, lines: &dyn Fn(&str) -> Option<usize>) -> Result<(), CliError> {
        let positive_int = |key: &str, v: usize| {
            if v == 0 {
                Err(config_error(lines(key), key, "must be at least 1"))
            } else {
                Ok(())
            }
        };
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config_error(
                    lines(key),
                    key,
                    format!("must be positive, got {v}"),
                ))
            }
        };
        let p = &self.params;
        positive_int("antenna_count", p.antenna_count)?;
        positive_int("scatterer_count", p.scatterer_count)?;
        positive_int("ris_element_count", p.ris_element_count)?;
        positive_int("sample_count", self.sample_count)?;
        positive("circle_radius", p.circle_radius)?;
        positive("grid_half_extent", self.grid_half_extent)?;
        positive("grid_step", self.grid_step)?;
        if self.grid_step > self.grid_half_extent {
            return Err(config_error(
                lines("grid_step"),
                "grid_step",
                "must not exceed grid_half_extent",
            ));
        }
        if self.circle_samples < LimitCircle::MIN_SAMPLES {
            return Err(config_error(
                lines("circle_samples"),
                "circle_samples",
                format!("must be at least {}", LimitCircle::MIN_SAMPLES),
            ));
        }
        if !self.threshold_db.is_finite() {
            return Err(config_error(
                lines("threshold_db"),
                "threshold_db",
                "must be finite",
            ));
        }
        if !self.ris_tilt_deg.is_finite() {
            return Err(config_error(
                lines("ris_tilt_deg"),
                "ris_tilt_deg",
                "must be finite",
            ));
        }
        Ok(())
    }

    /// Serializes every key in a form [`parse_config`] reads back exactly.
    pub fn to_config_string(&self) -> String {
        let p = &self.params;
        let schemes: Vec<&str> = self.schemes.iter().map(|s| s.name()).collect();
        let mut out = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("antenna_count", &p.antenna_count);
        kv("scatterer_count", &p.scatterer_count);
        kv("ris_count", &p.ris_count);
        kv("ris_element_count", &p.ris_element_count);
        kv("circle_radius", &p.circle_radius);
        kv("threshold_db", &self.threshold_db);
        kv("grid_half_extent", &self.grid_half_extent);
        kv("grid_step", &self.grid_step);
        kv("circle_samples", &self.circle_samples);
        kv("sample_count", &self.sample_count);
        kv("seed", &self.seed);
        kv("schemes", &schemes.join(","));
        kv("ris_enabled", &self.ris_enabled);
        kv("out_dir", &self.out_dir.display());
        kv("equalization", &p.equalization);
        kv("ris_tilt_deg", &self.ris_tilt_deg);
        out
    }

    pub fn batch_config(&self, workers: Option<usize>) -> BatchConfig {
        BatchConfig {
            params: self.params.clone(),
            sample_count: self.sample_count,
            master_seed: self.seed,
            schemes: self.schemes.clone(),
            ris_enabled: self.ris_enabled,
            grid_half_extent: self.grid_half_extent,
            grid_step: self.grid_step,
            circle_samples: self.circle_samples,
            workers,
        }
    }
}

/// Parses configuration text, then applies `overrides` (as if they were
/// extra lines at the end of the file) and validates the result.
pub fn parse_config_with(text: &str, overrides: &[(&str, String)]) -> Result<RunConfig, CliError> {
    let mut config = RunConfig::default();
    let mut seen: Vec<(String, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| config_error(Some(line), content, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(config_error(Some(line), key, "unknown key"));
        }
        if let Some((_, first)) = seen.iter().find(|(k, _)| k == key) {
            return Err(config_error(
                Some(line),
                key,
                format!("duplicate key (first set on line {first})"),
            ));
        }
        seen.push((key.to_string(), line));
        config.set(key, value, Some(line))?;
    }
    for (key, value) in overrides {
        config.set(key, value, None)?;
        seen.retain(|(k, _)| k != key);
    }
    let lines = |key: &str| seen.iter().find(|(k, _)| k == key).map(|(_, l)| *l);
    config.validate(&lines)?;
    Ok(config)
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    parse_config_with(text, &[])
}

/// Reads and parses a configuration file; `None` means all defaults.
pub fn load_config(
    path: Option<&Path>,
    overrides: &[(&str, String)],
) -> Result<RunConfig, CliError> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(io_error(p))?,
        None => String::new(),
    };
    parse_config_with(&text, overrides)
}

fn create_file(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(io_error(path))
}

fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
) -> Result<(), CliError> {
    let mut w = create_file(path)?;
    body(&mut w).and_then(|_| w.flush()).map_err(io_error(path))
}

fn prepare_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_error(dir))
}

/// Files written by [`cmd_snapshot`] and the table it printed.
#[derive(Debug)]
pub struct SnapshotOutput {
    pub report: SnapshotReport,
    pub files: Vec<PathBuf>,
}

/// One channel sample drawn from `config.seed`, every selected scheme with
/// and (when enabled) without RIS assistance.
pub fn cmd_snapshot(config: &RunConfig, emit_maps: bool) -> Result<SnapshotOutput, CliError> {
    let params = &config.params;
    let bs = params.bs_array()?;
    let circle = params.limit_circle(config.circle_samples)?;
    let grid = scan_grid(config.grid_half_extent, config.grid_step, &circle)?;
    let mut sample = sample_scenario(params, config.seed)?;
    if !config.ris_enabled {
        sample = sample.without_ris();
    }
    let entries = snapshot(&sample, params, &grid, &circle, &bs, &config.schemes, true)?;
    let threshold = params.threshold();
    let report = SnapshotReport::from_entries(&entries, threshold)?;

    prepare_out_dir(&config.out_dir)?;
    let mut files = Vec::new();
    for e in &entries {
        let tag = format!(
            "{}_{}",
            if e.ris { "ris" } else { "noris" },
            e.result.scheme()
        );
        let path = config.out_dir.join(format!("exposure_{tag}.csv"));
        write_file(&path, |w| write_exposure_csv(&e.map, threshold, w))?;
        files.push(path);
        let path = config.out_dir.join(format!("overexposed_{tag}.csv"));
        write_file(&path, |w| write_mask_csv(&e.map, threshold, w))?;
        files.push(path);
        if emit_maps {
            let path = config.out_dir.join(format!("map_{tag}.pgm"));
            write_file(&path, |w| {
                write_pgm(
                    &e.map,
                    config.threshold_db - 40.0,
                    config.threshold_db + 20.0,
                    w,
                )
            })?;
            files.push(path);
        }
    }
    let path = config.out_dir.join("table.csv");
    write_file(&path, |w| report.write_csv(w))?;
    files.push(path);
    Ok(SnapshotOutput { report, files })
}

/// Files written by [`cmd_montecarlo`] and the batch they came from.
#[derive(Debug)]
pub struct MonteCarloOutput {
    pub batch: BatchResult,
    pub files: Vec<PathBuf>,
}

/// The manifest: the configuration as re-parseable `key = value` lines,
/// followed by per-series summary statistics as comments.
pub fn manifest(config: &RunConfig, batch: &BatchResult) -> Result<String, CliError> {
    let mut out = String::from("# emfe montecarlo manifest\n");
    out.push_str(&config.to_config_string());
    out.push_str("#\n# series: min median max\n");
    for s in &batch.series {
        let sum = Summary::of(&s.values)?;
        let _ = writeln!(
            out,
            "# {} {}: {} {} {}",
            s.scheme, s.metric, sum.min, sum.median, sum.max
        );
    }
    Ok(out)
}

pub fn cmd_montecarlo(
    config: &RunConfig,
    workers: Option<usize>,
) -> Result<MonteCarloOutput, CliError> {
    let batch = run_batch(&config.batch_config(workers))?;
    prepare_out_dir(&config.out_dir)?;
    let mut files = Vec::new();
    for s in &batch.series {
        let cdf = empirical_cdf(s)?;
        let path = config
            .out_dir
            .join(format!("cdf_{}_{}.csv", s.metric, s.scheme));
        write_file(&path, |w| cdf.write_csv(w))?;
        files.push(path);
    }
    let path = config.out_dir.join("manifest.txt");
    let text = manifest(config, &batch)?;
    write_file(&path, |w| w.write_all(text.as_bytes()))?;
    files.push(path);
    Ok(MonteCarloOutput { batch, files })
}

/// One line per (scheme, metric): `scheme metric min median max`.
pub fn summary_lines(batch: &BatchResult) -> Result<Vec<String>, CliError> {
    batch
        .series
        .iter()
        .filter(|s| Metric::ALL.contains(&s.metric))
        .map(|s| {
            let sum = Summary::of(&s.values)?;
            Ok(format!(
                "{:<10} {:<22} min {:>10.3}  median {:>10.3}  max {:>10.3}",
                s.scheme.name(),
                s.metric.name(),
                sum.min,
                sum.median,
                sum.max
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamforming::EqualizationMode;
    use proptest::prelude::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.params.antenna_count, 64);
        assert_eq!(c.params.scatterer_count, 3);
        assert_eq!(c.params.ris_count, 3);
        assert_eq!(c.params.ris_element_count, 16);
        assert_eq!(c.params.circle_radius, 650.0);
        assert_eq!(c.grid_half_extent * 2.0, 1400.0);
        assert_eq!(c.sample_count, 1000);
        assert!((c.params.threshold_ratio - 1e-7).abs() < 1e-22);
    }

    #[test]
    fn threshold_db_conversion() {
        let c = parse_config("threshold_db = -70\n").unwrap();
        assert!((c.params.threshold_ratio - 1e-7).abs() <= 1e-7 * 1e-14);
        let c = parse_config("threshold_db = -30 # stricter\n").unwrap();
        assert!((c.params.threshold_ratio - 1e-3).abs() <= 1e-3 * 1e-14);
    }

    #[test]
    fn errors_name_key_and_line() {
        let err = parse_config("# comment\nantenna_count = 0\n").unwrap_err();
        assert!(
            matches!(&err, CliError::Config { line: Some(2), key, .. } if key == "antenna_count")
        );
        assert!(err.to_string().contains("antenna_count"));
        assert_eq!(err.exit_code(), 2);

        let err = parse_config("\n\nbogus = 3\n").unwrap_err();
        assert!(matches!(&err, CliError::Config { line: Some(3), key, .. } if key == "bogus"));

        let err = parse_config("seed 12\n").unwrap_err();
        assert!(matches!(err, CliError::Config { line: Some(1), .. }));

        let err = parse_config("grid_step = -1\n").unwrap_err();
        assert!(matches!(&err, CliError::Config { key, .. } if key == "grid_step"));

        let err = parse_config("schemes = mrt,truncated\n").unwrap_err();
        assert!(matches!(&err, CliError::Config { key, .. } if key == "schemes"));

        let err = parse_config("seed = 1\nseed = 2\n").unwrap_err();
        assert!(matches!(err, CliError::Config { line: Some(2), .. }));

        let err = parse_config("circle_samples = 4\n").unwrap_err();
        assert!(matches!(&err, CliError::Config { key, .. } if key == "circle_samples"));
    }

    #[test]
    fn overrides_apply_last() {
        let c = parse_config_with(
            "seed = 5\nris_enabled = true\n",
            &[
                ("seed", "9".into()),
                ("ris_enabled", "false".into()),
                ("schemes", "mrt".into()),
            ],
        )
        .unwrap();
        assert_eq!(c.seed, 9);
        assert!(!c.ris_enabled);
        assert_eq!(c.schemes, vec![Scheme::Mrt]);
    }

    #[test]
    fn scheme_list_parsing() {
        assert_eq!(
            parse_schemes("equalized, mrt,mrt").unwrap(),
            vec![Scheme::Equalized, Scheme::Mrt]
        );
        assert!(parse_schemes(" , ").is_err());
    }

    fn arb_config() -> impl Strategy<Value = RunConfig> {
        (
            (1usize..256, 1usize..10, 0usize..6, 1usize..64),
            (1.0f64..5000.0, -150.0f64..0.0, -90.0f64..90.0),
            (10.0f64..2000.0, 0.01f64..1.0, 8usize..100_000),
            (any::<u64>(), 1usize..100_000, any::<bool>(), any::<bool>()),
            prop::sample::subsequence(Scheme::ALL.to_vec(), 1..=3),
        )
            .prop_map(
                |(
                    (m, n, k, p),
                    (r, tdb, tilt),
                    (half, frac, cs),
                    (seed, sc, ris, eqm),
                    schemes,
                )| {
                    let mut c = RunConfig::default();
                    c.params.antenna_count = m;
                    c.params.scatterer_count = n;
                    c.params.ris_count = k;
                    c.params.ris_element_count = p;
                    c.params.circle_radius = r;
                    c.params.equalization = if eqm {
                        EqualizationMode::UnitGain
                    } else {
                        EqualizationMode::UnitModulus
                    };
                    c.threshold_db = tdb;
                    c.ris_tilt_deg = tilt;
                    c.grid_half_extent = half;
                    c.grid_step = half * frac;
                    c.circle_samples = cs;
                    c.seed = seed;
                    c.sample_count = sc;
                    c.ris_enabled = ris;
                    c.schemes = schemes;
                    c.out_dir = PathBuf::from("results/run 1");
                    c.sync_derived();
                    c
                },
            )
    }

    proptest! {
        #[test]
        fn config_round_trips(c in arb_config()) {
            let text = c.to_config_string();
            prop_assert_eq!(parse_config(&text).unwrap(), c);
        }
    }
}
