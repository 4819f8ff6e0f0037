//! Fixed-length resampling, per-cycle min-max standardization, and capacity
//! smoothing.
//!
//! Cycles arrive with irregular sampling rates and differing lengths, so each
//! one is linearly interpolated onto a uniform time grid of length `l` before
//! its three channels are independently mapped onto `[-1, 1]` using their own
//! extrema. The capacity series is smoothed with a centered moving mean of
//! window `2m + 1`; boundary cycles keep their raw values.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dataio::{CycleDataset, RawCycle};
use crate::error::{Error, Result};

/// Per-channel scale recorded during standardization, in original units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelScale {
    pub min: f64,
    pub max: f64,
    /// True when the channel was constant and normalized to all zeros.
    pub degenerate: bool,
}

/// Scales for the three profile channels of one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleScales {
    pub voltage: ChannelScale,
    pub current: ChannelScale,
    pub temperature: ChannelScale,
}

/// A cycle after downsampling and standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessedCycle {
    pub cycle_index: u32,
    pub v_norm: Vec<f64>,
    pub i_norm: Vec<f64>,
    pub t_norm: Vec<f64>,
    pub scale: CycleScales,
    /// Raw measured capacity in Ah.
    pub c_raw: f64,
    /// Moving-mean smoothed capacity in Ah.
    pub c_smooth: f64,
}

impl PreprocessedCycle {
    pub fn seq_len(&self) -> usize {
        self.v_norm.len()
    }

    /// Profile as an `(l, 3)` array with columns voltage, current, temperature.
    pub fn profile(&self) -> Array2<f64> {
        let l = self.seq_len();
        let mut out = Array2::zeros((l, 3));
        for t in 0..l {
            out[[t, 0]] = self.v_norm[t];
            out[[t, 1]] = self.i_norm[t];
            out[[t, 2]] = self.t_norm[t];
        }
        out
    }
}

/// Moving-mean smoothing window, `2 * half_window + 1` cycles wide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingConfig {
    pub half_window: usize,
}

impl SmoothingConfig {
    pub fn validate_for(&self, series_len: usize) -> Result<()> {
        if 2 * self.half_window + 1 > series_len {
            return Err(Error::InvalidArgument(format!(
                "smoothing window {} exceeds series length {series_len}",
                2 * self.half_window + 1
            )));
        }
        Ok(())
    }
}

/// Resamples a cycle to exactly `l` points on a uniform grid over
/// `[t_first, t_last]` by piecewise-linear interpolation.
pub fn downsample_cycle(cycle: &RawCycle, l: usize) -> Result<RawCycle> {
    if l < 2 {
        return Err(Error::InvalidArgument(format!(
            "target length {l} must be >= 2"
        )));
    }
    cycle.validate()?;
    let t0 = cycle.time_s[0];
    let t1 = *cycle.time_s.last().unwrap();
    let grid: Vec<f64> = (0..l)
        .map(|j| t0 + (t1 - t0) * j as f64 / (l - 1) as f64)
        .collect();
    Ok(RawCycle {
        cycle_index: cycle.cycle_index,
        voltage_v: interp_linear(&cycle.time_s, &cycle.voltage_v, &grid),
        current_a: interp_linear(&cycle.time_s, &cycle.current_a, &grid),
        temperature_c: interp_linear(&cycle.time_s, &cycle.temperature_c, &grid),
        time_s: grid,
        capacity_ah: cycle.capacity_ah,
    })
}

/// Piecewise-linear interpolation of `(xs, ys)` at sorted `targets`.
/// Targets are clamped to the knot range, which the caller guarantees anyway.
fn interp_linear(xs: &[f64], ys: &[f64], targets: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(targets.len());
    let mut seg = 0usize;
    for &t in targets {
        while seg + 2 < xs.len() && xs[seg + 1] < t {
            seg += 1;
        }
        let (x0, x1) = (xs[seg], xs[seg + 1]);
        let (y0, y1) = (ys[seg], ys[seg + 1]);
        let w = ((t - x0) / (x1 - x0)).clamp(0.0, 1.0);
        out.push(y0 + w * (y1 - y0));
    }
    out
}

/// Maps a sequence onto `[-1, 1]` using its own extrema:
/// `x~ = 2 (x - min) / (max - min) - 1`.
///
/// A constant sequence has no usable scale; it becomes all zeros with the
/// `degenerate` flag set, since near-constant current in CC phases is normal.
pub fn minmax_standardize(seq: &[f64]) -> Result<(Vec<f64>, ChannelScale)> {
    if seq.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot standardize an empty sequence".into(),
        ));
    }
    let min = seq.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = seq.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(min.is_finite() && max.is_finite()) {
        return Err(Error::InvalidArgument(
            "sequence contains non-finite values".into(),
        ));
    }
    if max == min {
        return Ok((
            vec![0.0; seq.len()],
            ChannelScale {
                min,
                max,
                degenerate: true,
            },
        ));
    }
    let range = max - min;
    let normalized = seq.iter().map(|&x| 2.0 * (x - min) / range - 1.0).collect();
    Ok((
        normalized,
        ChannelScale {
            min,
            max,
            degenerate: false,
        },
    ))
}

/// Inverse of [`minmax_standardize`] given the stored scale.
pub fn denormalize(norm: &[f64], scale: &ChannelScale) -> Vec<f64> {
    if scale.degenerate {
        return vec![scale.min; norm.len()];
    }
    norm.iter()
        .map(|&x| (x + 1.0) / 2.0 * (scale.max - scale.min) + scale.min)
        .collect()
}

/// Centered moving mean over a window of `2m + 1` cycles.
///
/// Interior cycles (`k` in `m+1 ..= K-m`, 1-based) average their window;
/// the first and last `m` cycles keep their raw values.
pub fn smooth_capacity(caps: &[f64], m: usize) -> Result<Vec<f64>> {
    let k = caps.len();
    SmoothingConfig { half_window: m }.validate_for(k)?;
    let window = (2 * m + 1) as f64;
    let mut out = caps.to_vec();
    for i in m..k - m {
        out[i] = caps[i - m..=i + m].iter().sum::<f64>() / window;
    }
    Ok(out)
}

/// True when the series never increases; the smoothed capacity usually
/// satisfies this but strong regeneration spikes can break it, so the
/// pipeline reports the flag instead of asserting it.
pub fn is_nonincreasing(series: &[f64]) -> bool {
    series.windows(2).all(|w| w[1] <= w[0])
}

/// Runs the full per-cycle pipeline over a dataset: downsample to `l`,
/// standardize each channel, and attach the smoothed capacity computed over
/// the dataset's whole capacity series. Cycle order is preserved.
pub fn preprocess_dataset(ds: &CycleDataset, l: usize, m: usize) -> Result<Vec<PreprocessedCycle>> {
    ds.validate()?;
    let caps = ds.capacities();
    let smooth = smooth_capacity(&caps, m)?;
    ds.cycles
        .iter()
        .zip(smooth)
        .map(|(raw, c_smooth)| {
            let down = downsample_cycle(raw, l)?;
            let (v_norm, voltage) = minmax_standardize(&down.voltage_v)?;
            let (i_norm, current) = minmax_standardize(&down.current_a)?;
            let (t_norm, temperature) = minmax_standardize(&down.temperature_c)?;
            Ok(PreprocessedCycle {
                cycle_index: raw.cycle_index,
                v_norm,
                i_norm,
                t_norm,
                scale: CycleScales {
                    voltage,
                    current,
                    temperature,
                },
                c_raw: raw.capacity_ah,
                c_smooth,
            })
        })
        .collect()
}

/// Sidecar record serialized alongside the normalized profile CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSidecar {
    pub cycle: u32,
    pub c_raw: f64,
    pub c_smooth: f64,
    pub scale: CycleScales,
}

/// Writes preprocessed cycles as `cycle,t_index,v_norm,i_norm,t_norm` rows
/// plus a JSON sidecar holding per-cycle scales and capacities.
pub fn write_preprocessed(
    cycles: &[PreprocessedCycle],
    csv_path: &Path,
    sidecar_path: &Path,
) -> Result<()> {
    let file = File::create(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(["cycle", "t_index", "v_norm", "i_norm", "t_norm"])
        .map_err(|e| Error::csv(csv_path, e))?;
    for c in cycles {
        for t in 0..c.seq_len() {
            w.write_record([
                c.cycle_index.to_string(),
                t.to_string(),
                c.v_norm[t].to_string(),
                c.i_norm[t].to_string(),
                c.t_norm[t].to_string(),
            ])
            .map_err(|e| Error::csv(csv_path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(csv_path, e))?;

    let sidecar: Vec<CycleSidecar> = cycles
        .iter()
        .map(|c| CycleSidecar {
            cycle: c.cycle_index,
            c_raw: c.c_raw,
            c_smooth: c.c_smooth,
            scale: c.scale,
        })
        .collect();
    let file = File::create(sidecar_path).map_err(|e| Error::io(sidecar_path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &sidecar)?;
    Ok(())
}

/// Reads back what [`write_preprocessed`] wrote.
pub fn load_preprocessed(csv_path: &Path, sidecar_path: &Path) -> Result<Vec<PreprocessedCycle>> {
    let file = File::open(sidecar_path).map_err(|e| Error::io(sidecar_path, e))?;
    let sidecar: Vec<CycleSidecar> = serde_json::from_reader(BufReader::new(file))?;

    let file = File::open(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let mut cycles: Vec<PreprocessedCycle> = sidecar
        .iter()
        .map(|s| PreprocessedCycle {
            cycle_index: s.cycle,
            v_norm: Vec::new(),
            i_norm: Vec::new(),
            t_norm: Vec::new(),
            scale: s.scale,
            c_raw: s.c_raw,
            c_smooth: s.c_smooth,
        })
        .collect();
    for record in reader.records() {
        let record = record.map_err(|e| Error::csv(csv_path, e))?;
        let cycle: u32 = record
            .get(0)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Config(format!("{}: bad cycle field", csv_path.display())))?;
        let parse = |i: usize| -> Result<f64> {
            record
                .get(i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Config(format!("{}: bad float field", csv_path.display())))
        };
        let target = cycles
            .iter_mut()
            .find(|c| c.cycle_index == cycle)
            .ok_or_else(|| Error::Join {
                cycle,
                reason: format!("present in {} but not its sidecar", csv_path.display()),
            })?;
        target.v_norm.push(parse(2)?);
        target.i_norm.push(parse(3)?);
        target.t_norm.push(parse(4)?);
    }
    for c in &cycles {
        if c.v_norm.is_empty() {
            return Err(Error::Join {
                cycle: c.cycle_index,
                reason: format!("in sidecar but has no rows in {}", csv_path.display()),
            });
        }
    }
    Ok(cycles)
}
