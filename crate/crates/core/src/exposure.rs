//! Exposure maps around the base station and the snapshot comparison table.

use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::beamforming::{build_schemes, received_power_target, PrecoderResult, Scheme};
use crate::channel::{
    configure_ris, near_field_response, true_channel, ScenarioParams, ScenarioSample,
};
use crate::error::{Error, Result};
use crate::geometry::{ArrayLayout, LimitCircle, ScanGrid};

/// `10·log10(x)`.
pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Received power `ω(Q) = |q(Q)·b|² χ` at every grid point, normalized by the
/// maximum transmit power. Points that land on an antenna element are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureMap<'g> {
    pub grid: &'g ScanGrid,
    pub scheme: Scheme,
    pub transmit_power: f64,
    pub values: Vec<Option<f64>>,
}

impl ExposureMap<'_> {
    pub fn valid_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }
}

fn point_power(result: &PrecoderResult, bs: &ArrayLayout, q: crate::geometry::Vec2) -> Option<f64> {
    near_field_response(q, bs, &result.precoder.weights)
        .ok()
        .map(|r| r.norm_sqr() * result.transmit_power)
}

/// Evaluates the exposure map; the work is split across the rayon pool and the
/// result does not depend on how it is split.
pub fn exposure_map<'g>(
    result: &PrecoderResult,
    grid: &'g ScanGrid,
    bs: &ArrayLayout,
) -> ExposureMap<'g> {
    let values = grid
        .points
        .par_iter()
        .map(|&q| point_power(result, bs, q))
        .collect();
    ExposureMap {
        grid,
        scheme: result.scheme(),
        transmit_power: result.transmit_power,
        values,
    }
}

/// Percentage of valid outside-circle grid points with `ω > threshold`.
pub fn violation_percentage(map: &ExposureMap<'_>, threshold: f64) -> Result<f64> {
    let (mut total, mut over) = (0usize, 0usize);
    for (value, &outside) in map.values.iter().zip(&map.grid.outside_circle_mask) {
        if let (true, Some(w)) = (outside, value) {
            total += 1;
            if *w > threshold {
                over += 1;
            }
        }
    }
    percentage(over, total)
}

/// Same as [`violation_percentage`] on a full [`exposure_map`], but only
/// evaluates points outside the limit circle.
pub fn violation_percentage_for(
    result: &PrecoderResult,
    grid: &ScanGrid,
    bs: &ArrayLayout,
    threshold: f64,
) -> Result<f64> {
    let (over, total) = grid
        .points
        .par_iter()
        .zip(&grid.outside_circle_mask)
        .filter(|(_, &outside)| outside)
        .filter_map(|(&q, _)| point_power(result, bs, q))
        .map(|w| (usize::from(w > threshold), 1usize))
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    percentage(over, total)
}

fn percentage(over: usize, total: usize) -> Result<f64> {
    if total == 0 {
        return Err(Error::NoOutsidePoints);
    }
    Ok(100.0 * over as f64 / total as f64)
}

/// `ω > threshold` for every grid point, inside the circle or not.
pub fn overexposed_mask(map: &ExposureMap<'_>, threshold: f64) -> Vec<bool> {
    map.values
        .iter()
        .map(|v| v.is_some_and(|w| w > threshold))
        .collect()
}

/// One scheme evaluated on one sample.
#[derive(Debug, Clone)]
pub struct SnapshotEntry<'g> {
    /// The sample had at least one RIS.
    pub ris: bool,
    pub result: PrecoderResult,
    /// `ρ`, normalized by the maximum transmit power.
    pub received_power: f64,
    pub map: ExposureMap<'g>,
}

/// Evaluates `schemes` on `sample` and, when `include_no_ris` is set and the
/// sample has RIS paths, on the same sample with the RIS removed. Entries
/// without RIS come first.
pub fn snapshot<'g>(
    sample: &ScenarioSample,
    params: &ScenarioParams,
    grid: &'g ScanGrid,
    circle: &LimitCircle,
    bs: &ArrayLayout,
    schemes: &[Scheme],
    include_no_ris: bool,
) -> Result<Vec<SnapshotEntry<'g>>> {
    let configured = configure_ris(sample);
    let mut variants = Vec::new();
    if configured.ris.is_empty() {
        variants.push(configured);
    } else {
        if include_no_ris {
            variants.push(configured.without_ris());
        }
        variants.push(configured);
    }

    let mut entries = Vec::new();
    for variant in &variants {
        let g = true_channel(variant, bs)?;
        for result in build_schemes(schemes, variant, bs, circle, params)? {
            let received_power = received_power_target(&g, &result)?;
            let map = exposure_map(&result, grid, bs);
            entries.push(SnapshotEntry {
                ris: !variant.ris.is_empty(),
                result,
                received_power,
                map,
            });
        }
    }
    Ok(entries)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotRow {
    pub ris: bool,
    pub scheme: Scheme,
    pub received_power_db: f64,
    pub violation_percentage: f64,
    pub transmit_power_db: f64,
    pub circle_max_gain: f64,
}

/// Received power, violation percentage and transmit power per scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotReport {
    pub rows: Vec<SnapshotRow>,
}

impl SnapshotReport {
    pub fn from_entries(entries: &[SnapshotEntry<'_>], threshold: f64) -> Result<Self> {
        let rows = entries
            .iter()
            .map(|e| {
                Ok(SnapshotRow {
                    ris: e.ris,
                    scheme: e.result.scheme(),
                    received_power_db: to_db(e.received_power),
                    violation_percentage: violation_percentage(&e.map, threshold)?,
                    transmit_power_db: to_db(e.result.transmit_power),
                    circle_max_gain: e.result.circle_max_gain,
                })
            })
            .collect::<Result<_>>()?;
        Ok(SnapshotReport { rows })
    }

    pub fn row(&self, ris: bool, scheme: Scheme) -> Option<&SnapshotRow> {
        self.rows
            .iter()
            .find(|r| r.ris == ris && r.scheme == scheme)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "ris,scheme,received_power_db,violation_percentage,transmit_power_db,circle_max_gain"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                if r.ris { "yes" } else { "no" },
                r.scheme,
                r.received_power_db,
                r.violation_percentage,
                r.transmit_power_db,
                r.circle_max_gain
            )?;
        }
        Ok(())
    }
}

impl fmt::Display for SnapshotReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<4} {:<10} {:>20} {:>14} {:>20}",
            "RIS", "scheme", "received power (dB)", "violation (%)", "transmit power (dB)"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<4} {:<10} {:>20.2} {:>14.3} {:>20.2}",
                if r.ris { "yes" } else { "no" },
                r.scheme.name(),
                r.received_power_db,
                r.violation_percentage,
                r.transmit_power_db
            )?;
        }
        Ok(())
    }
}

/// Convenience wrapper: [`snapshot`] followed by [`SnapshotReport::from_entries`].
pub fn snapshot_report(
    sample: &ScenarioSample,
    params: &ScenarioParams,
    grid: &ScanGrid,
    circle: &LimitCircle,
    bs: &ArrayLayout,
    include_no_ris: bool,
) -> Result<SnapshotReport> {
    let entries = snapshot(
        sample,
        params,
        grid,
        circle,
        bs,
        &Scheme::ALL,
        include_no_ris,
    )?;
    SnapshotReport::from_entries(&entries, params.threshold())
}

/// Point list CSV: `x,y,omega_db,outside_circle,overexposed`. Singular points
/// are written with `omega_db = NaN`.
pub fn write_exposure_csv<W: Write>(
    map: &ExposureMap<'_>,
    threshold: f64,
    mut w: W,
) -> io::Result<()> {
    writeln!(w, "x,y,omega_db,outside_circle,overexposed")?;
    for ((p, v), &outside) in map
        .grid
        .points
        .iter()
        .zip(&map.values)
        .zip(&map.grid.outside_circle_mask)
    {
        let db = v.map_or(f64::NAN, to_db);
        let over = v.is_some_and(|x| x > threshold);
        writeln!(
            w,
            "{},{},{},{},{}",
            p.x,
            p.y,
            db,
            u8::from(outside),
            u8::from(over)
        )?;
    }
    Ok(())
}

/// Over-exposure as a matrix: header `y\x,<x values>`, then one row per grid
/// row (ascending y) of `y,<0|1 per column>`.
pub fn write_mask_csv<W: Write>(map: &ExposureMap<'_>, threshold: f64, mut w: W) -> io::Result<()> {
    let side = map.grid.side;
    let mask = overexposed_mask(map, threshold);
    write!(w, "y\\x")?;
    for p in &map.grid.points[..side] {
        write!(w, ",{}", p.x)?;
    }
    writeln!(w)?;
    for (row, cells) in mask.chunks(side).enumerate() {
        write!(w, "{}", map.grid.points[row * side].y)?;
        for &c in cells {
            write!(w, ",{}", u8::from(c))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Binary PGM (`P5`) of the map in dB, one byte per point, with a two-line
/// header `P5` / `<width> <height> 255`. Levels map `[floor_db, ceil_db]`
/// linearly onto `0..=255`; the first image row is the largest y. Singular
/// points are black.
pub fn write_pgm<W: Write>(
    map: &ExposureMap<'_>,
    floor_db: f64,
    ceil_db: f64,
    mut w: W,
) -> io::Result<()> {
    let side = map.grid.side;
    write!(w, "P5\n{side} {side} 255\n")?;
    let span = (ceil_db - floor_db).max(f64::MIN_POSITIVE);
    let mut bytes = Vec::with_capacity(side * side);
    for row in map.values.chunks(side).rev() {
        bytes.extend(row.iter().map(|v| match v {
            Some(x) if *x > 0.0 => {
                (((to_db(*x) - floor_db) / span).clamp(0.0, 1.0) * 255.0).round() as u8
            }
            _ => 0,
        }));
    }
    w.write_all(&bytes)
}
