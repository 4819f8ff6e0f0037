//! Midpoint augmentation: synthesize one new cycle between every two
//! adjacent training cycles and merge the result into the training set.
//!
//! The conditioning capacity of each new cycle is the arithmetic mean of its
//! two neighbors' smoothed capacities, so every synthetic cycle interleaves
//! the real capacity ladder. Synthetic cycles live in normalized profile
//! space; for denormalized export their per-channel scales are linearly
//! interpolated from the two neighboring real cycles and flagged as such in
//! provenance.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::{ChannelScale, CycleScales, PreprocessedCycle};
use crate::rcgan::{param_hash, GanParams};

/// Where a synthetic cycle came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticProvenance {
    /// Hash of the generator/discriminator weights that produced it.
    pub checkpoint_id: String,
    pub seed: u64,
    /// Index of the request in the generation batch; under the midpoint
    /// policy this is the 1-based index of the left real neighbor.
    pub position: usize,
    /// Conditioning capacity fell outside the training range (+/- 10%).
    pub extrapolated: bool,
}

/// A generated cycle in normalized profile space.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCycle {
    /// Conditioning capacity in Ah; also the regression target downstream.
    pub cond_capacity: f64,
    pub v_norm: Vec<f64>,
    pub i_norm: Vec<f64>,
    pub t_norm: Vec<f64>,
    /// Interpolated original-unit scales, present only for midpoint cycles.
    pub scale: Option<CycleScales>,
    pub provenance: SyntheticProvenance,
}

impl SyntheticCycle {
    pub fn seq_len(&self) -> usize {
        self.v_norm.len()
    }

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

/// Averages neighboring capacities: `c'[k] = (c[k] + c[k+1]) / 2`,
/// `k = 1..K-1`.
pub fn midpoint_capacities(c_smooth: &[f64]) -> Result<Vec<f64>> {
    if c_smooth.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 capacities for midpoints, got {}",
            c_smooth.len()
        )));
    }
    Ok(c_smooth.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect())
}

/// Generates one cycle per requested capacity with fresh per-cycle noise.
/// Deterministic given the seed; never mutates the parameters.
pub fn generate_cycles(params: &GanParams, caps: &[f64], seed: u64) -> Result<Vec<SyntheticCycle>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (l, d) = (params.spec.seq_len, params.spec.noise_dim);
    let checkpoint_id = param_hash(params);
    caps.iter()
        .enumerate()
        .map(|(i, &cap)| {
            let noise = crate::rcgan::draw_noise_matrix(&mut rng, l, d);
            let profile = params.generator_forward(&noise, cap)?;
            Ok(SyntheticCycle {
                cond_capacity: cap,
                v_norm: profile.row(0).to_vec(),
                i_norm: profile.row(1).to_vec(),
                t_norm: profile.row(2).to_vec(),
                scale: None,
                provenance: SyntheticProvenance {
                    checkpoint_id: checkpoint_id.clone(),
                    seed,
                    position: i + 1,
                    extrapolated: params.cond.is_extrapolation(cap),
                },
            })
        })
        .collect()
}

fn interpolate_scale(a: &ChannelScale, b: &ChannelScale) -> ChannelScale {
    let min = (a.min + b.min) / 2.0;
    let max = (a.max + b.max) / 2.0;
    ChannelScale {
        min,
        max,
        degenerate: min == max,
    }
}

/// Runs the full midpoint policy over a training set: one synthetic cycle per
/// adjacent pair, conditioned on the midpoint of their smoothed capacities,
/// with original-unit scales interpolated from the two neighbors.
pub fn augment_midpoints(
    params: &GanParams,
    real: &[PreprocessedCycle],
    seed: u64,
) -> Result<Vec<SyntheticCycle>> {
    let c_smooth: Vec<f64> = real.iter().map(|c| c.c_smooth).collect();
    let caps = midpoint_capacities(&c_smooth)?;
    let mut cycles = generate_cycles(params, &caps, seed)?;
    for (i, cycle) in cycles.iter_mut().enumerate() {
        let (left, right) = (&real[i].scale, &real[i + 1].scale);
        cycle.scale = Some(CycleScales {
            voltage: interpolate_scale(&left.voltage, &right.voltage),
            current: interpolate_scale(&left.current, &right.current),
            temperature: interpolate_scale(&left.temperature, &right.temperature),
        });
    }
    Ok(cycles)
}

/// One element of an augmented training set.
#[derive(Debug, Clone, PartialEq)]
pub enum AugmentedCycle {
    Real(PreprocessedCycle),
    Synthetic(SyntheticCycle),
}

impl AugmentedCycle {
    pub fn is_synthetic(&self) -> bool {
        matches!(self, AugmentedCycle::Synthetic(_))
    }

    /// Capacity used for ordering: smoothed for real cycles, conditioning
    /// value for synthetic ones.
    pub fn order_capacity(&self) -> f64 {
        match self {
            AugmentedCycle::Real(c) => c.c_smooth,
            AugmentedCycle::Synthetic(c) => c.cond_capacity,
        }
    }

    /// Capacity used as the regression target: raw measured capacity for real
    /// cycles, the conditioning value for synthetic ones.
    pub fn target_capacity(&self) -> f64 {
        match self {
            AugmentedCycle::Real(c) => c.c_raw,
            AugmentedCycle::Synthetic(c) => c.cond_capacity,
        }
    }

    pub fn profile(&self) -> Array2<f64> {
        match self {
            AugmentedCycle::Real(c) => c.profile(),
            AugmentedCycle::Synthetic(c) => c.profile(),
        }
    }

    pub fn seq_len(&self) -> usize {
        match self {
            AugmentedCycle::Real(c) => c.seq_len(),
            AugmentedCycle::Synthetic(c) => c.seq_len(),
        }
    }
}

/// Union of real and synthetic cycles, ordered by descending capacity.
/// Real elements are carried over unmodified; an empty synthetic list is the
/// no-augmentation baseline.
pub fn merge(real: &[PreprocessedCycle], synth: &[SyntheticCycle]) -> Vec<AugmentedCycle> {
    let mut out: Vec<AugmentedCycle> = real
        .iter()
        .cloned()
        .map(AugmentedCycle::Real)
        .chain(synth.iter().cloned().map(AugmentedCycle::Synthetic))
        .collect();
    out.sort_by(|a, b| b.order_capacity().total_cmp(&a.order_capacity()));
    out
}

/// Sidecar entry for one element of a serialized augmented set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum AugmentedSidecar {
    Real {
        id: u32,
        cycle: u32,
        c_raw: f64,
        c_smooth: f64,
        scale: CycleScales,
    },
    Synthetic {
        id: u32,
        cond_capacity: f64,
        scale: Option<CycleScales>,
        provenance: SyntheticProvenance,
    },
}

/// Writes an augmented set with the preprocess CSV schema plus a `source`
/// column; ids are sequential in merged order.
pub fn write_augmented(set: &[AugmentedCycle], csv_path: &Path, sidecar_path: &Path) -> Result<()> {
    let file = File::create(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(["cycle", "t_index", "v_norm", "i_norm", "t_norm", "source"])
        .map_err(|e| Error::csv(csv_path, e))?;
    let mut sidecar = Vec::with_capacity(set.len());
    for (i, item) in set.iter().enumerate() {
        let id = i as u32 + 1;
        let (v, iv, t, source) = match item {
            AugmentedCycle::Real(c) => (&c.v_norm, &c.i_norm, &c.t_norm, "real"),
            AugmentedCycle::Synthetic(c) => (&c.v_norm, &c.i_norm, &c.t_norm, "synthetic"),
        };
        for j in 0..v.len() {
            w.write_record([
                id.to_string(),
                j.to_string(),
                v[j].to_string(),
                iv[j].to_string(),
                t[j].to_string(),
                source.to_string(),
            ])
            .map_err(|e| Error::csv(csv_path, e))?;
        }
        sidecar.push(match item {
            AugmentedCycle::Real(c) => AugmentedSidecar::Real {
                id,
                cycle: c.cycle_index,
                c_raw: c.c_raw,
                c_smooth: c.c_smooth,
                scale: c.scale,
            },
            AugmentedCycle::Synthetic(c) => AugmentedSidecar::Synthetic {
                id,
                cond_capacity: c.cond_capacity,
                scale: c.scale,
                provenance: c.provenance.clone(),
            },
        });
    }
    w.flush().map_err(|e| Error::io(csv_path, e))?;
    let file = File::create(sidecar_path).map_err(|e| Error::io(sidecar_path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &sidecar)?;
    Ok(())
}

/// Reads back what [`write_augmented`] wrote, in file order.
pub fn load_augmented(csv_path: &Path, sidecar_path: &Path) -> Result<Vec<AugmentedCycle>> {
    let file = File::open(sidecar_path).map_err(|e| Error::io(sidecar_path, e))?;
    let sidecar: Vec<AugmentedSidecar> = serde_json::from_reader(BufReader::new(file))?;

    let mut series: Vec<(u32, Vec<f64>, Vec<f64>, Vec<f64>)> = Vec::new();
    let file = File::open(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    for record in reader.records() {
        let record = record.map_err(|e| Error::csv(csv_path, e))?;
        let bad = || Error::Config(format!("{}: malformed augmented row", csv_path.display()));
        let id: u32 = record.get(0).and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let v: f64 = record.get(2).and_then(|x| x.parse().ok()).ok_or_else(bad)?;
        let i: f64 = record.get(3).and_then(|x| x.parse().ok()).ok_or_else(bad)?;
        let t: f64 = record.get(4).and_then(|x| x.parse().ok()).ok_or_else(bad)?;
        match series.last_mut() {
            Some(last) if last.0 == id => {
                last.1.push(v);
                last.2.push(i);
                last.3.push(t);
            }
            _ => series.push((id, vec![v], vec![i], vec![t])),
        }
    }

    sidecar
        .iter()
        .map(|entry| {
            let id = match entry {
                AugmentedSidecar::Real { id, .. } => *id,
                AugmentedSidecar::Synthetic { id, .. } => *id,
            };
            let row = series
                .iter()
                .find(|(rid, ..)| *rid == id)
                .ok_or_else(|| Error::Join {
                    cycle: id,
                    reason: format!("in sidecar but missing from {}", csv_path.display()),
                })?;
            Ok(match entry {
                AugmentedSidecar::Real {
                    cycle,
                    c_raw,
                    c_smooth,
                    scale,
                    ..
                } => AugmentedCycle::Real(PreprocessedCycle {
                    cycle_index: *cycle,
                    v_norm: row.1.clone(),
                    i_norm: row.2.clone(),
                    t_norm: row.3.clone(),
                    scale: *scale,
                    c_raw: *c_raw,
                    c_smooth: *c_smooth,
                }),
                AugmentedSidecar::Synthetic {
                    cond_capacity,
                    scale,
                    provenance,
                    ..
                } => AugmentedCycle::Synthetic(SyntheticCycle {
                    cond_capacity: *cond_capacity,
                    v_norm: row.1.clone(),
                    i_norm: row.2.clone(),
                    t_norm: row.3.clone(),
                    scale: *scale,
                    provenance: provenance.clone(),
                }),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rcgan::{CondScale, GanSpec};
    use rand::SeedableRng;

    fn small_params() -> GanParams {
        let spec = GanSpec {
            seq_len: 6,
            noise_dim: 2,
            g_hidden: 3,
            d_hidden: 3,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        GanParams::init(
            spec,
            CondScale {
                min_ah: 1.0,
                max_ah: 2.0,
            },
            &mut rng,
        )
    }

    fn real_cycles(caps: &[f64]) -> Vec<PreprocessedCycle> {
        caps.iter()
            .enumerate()
            .map(|(i, &c)| PreprocessedCycle {
                cycle_index: i as u32 + 1,
                v_norm: vec![-1.0, -0.5, 0.0, 0.4, 0.8, 1.0],
                i_norm: vec![1.0, 0.5, 0.0, -0.4, -0.8, -1.0],
                t_norm: vec![-1.0, 0.0, 1.0, 0.5, 0.0, -1.0],
                scale: CycleScales {
                    voltage: ChannelScale {
                        min: 3.0,
                        max: 4.2 - 0.01 * i as f64,
                        degenerate: false,
                    },
                    current: ChannelScale {
                        min: 0.1,
                        max: 1.5,
                        degenerate: false,
                    },
                    temperature: ChannelScale {
                        min: 24.0,
                        max: 31.0,
                        degenerate: false,
                    },
                },
                c_raw: c + 0.01,
                c_smooth: c,
            })
            .collect()
    }

    #[test]
    fn midpoint_examples() {
        assert_eq!(
            midpoint_capacities(&[2.0, 1.8, 1.6]).unwrap(),
            vec![1.9, 1.7]
        );
        let hundred: Vec<f64> = (0..100).map(|k| 2.0 - 0.001 * k as f64).collect();
        assert_eq!(midpoint_capacities(&hundred).unwrap().len(), 99);
        assert_eq!(
            midpoint_capacities(&[1.5, 1.5, 1.5]).unwrap(),
            vec![1.5, 1.5]
        );
        assert!(matches!(
            midpoint_capacities(&[1.0]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn generate_is_deterministic_with_contract_shapes() {
        let params = small_params();
        let caps: Vec<f64> = (0..9).map(|i| 1.9 - 0.1 * i as f64).collect();
        let a = generate_cycles(&params, &caps, 7).unwrap();
        let b = generate_cycles(&params, &caps, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 9);
        for c in &a {
            assert_eq!(c.seq_len(), 6);
            for ch in [&c.v_norm, &c.i_norm, &c.t_norm] {
                assert!(ch.iter().all(|&v| v > -1.0 && v < 1.0));
            }
            assert!(!c.provenance.extrapolated);
        }
        let different_seed = generate_cycles(&params, &caps, 8).unwrap();
        assert_ne!(a, different_seed);
    }

    #[test]
    fn distinct_capacities_with_identical_noise_give_distinct_cycles() {
        let params = small_params();
        let noise =
            ndarray::Array2::from_shape_fn((6, 2), |(i, j)| 0.3 * i as f64 - 0.2 * j as f64);
        let low = params.generator_forward(&noise, 1.1).unwrap();
        let high = params.generator_forward(&noise, 1.9).unwrap();
        let dist: f64 = (&low - &high).iter().map(|d| d * d).sum::<f64>().sqrt();
        assert!(dist > 0.0, "conditioning must reach the output");
    }

    #[test]
    fn extrapolation_is_flagged_not_rejected() {
        let params = small_params(); // fitted range [1, 2]
        let cycles = generate_cycles(&params, &[0.5, 1.95, 2.3], 1).unwrap();
        assert!(cycles[0].provenance.extrapolated);
        assert!(!cycles[1].provenance.extrapolated);
        assert!(cycles[2].provenance.extrapolated);
    }

    #[test]
    fn merge_sizes_and_baseline_identity() {
        let params = small_params();
        let real = real_cycles(&[2.0, 1.9, 1.8, 1.7]);
        let synth = augment_midpoints(&params, &real, 3).unwrap();
        assert_eq!(synth.len(), 3);
        let merged = merge(&real, &synth);
        assert_eq!(merged.len(), 7);

        // Baseline path: empty synthetic list passes the input through.
        let baseline = merge(&real, &[]);
        assert_eq!(baseline.len(), real.len());
        for (a, b) in baseline.iter().zip(&real) {
            match a {
                AugmentedCycle::Real(c) => assert_eq!(c, b),
                _ => panic!("baseline must contain only real cycles"),
            }
        }
    }

    #[test]
    fn merged_set_interleaves_and_preserves_real_bytes() {
        let params = small_params();
        let real = real_cycles(&[2.0, 1.9, 1.8, 1.7, 1.6]);
        let synth = augment_midpoints(&params, &real, 9).unwrap();
        let merged = merge(&real, &synth);
        assert_eq!(merged.len(), 2 * real.len() - 1);
        // Descending capacity with alternating real/synthetic for this
        // strictly decreasing input.
        for (i, item) in merged.iter().enumerate() {
            assert_eq!(item.is_synthetic(), i % 2 == 1, "position {i}");
            if i > 0 {
                assert!(item.order_capacity() <= merged[i - 1].order_capacity());
            }
        }
        // Real cycles are carried over untouched.
        for original in &real {
            assert!(merged
                .iter()
                .any(|m| matches!(m, AugmentedCycle::Real(c) if c == original)));
        }
    }

    #[test]
    fn midpoint_scales_average_the_neighbors() {
        let params = small_params();
        let real = real_cycles(&[2.0, 1.8]);
        let synth = augment_midpoints(&params, &real, 0).unwrap();
        let scale = synth[0].scale.expect("midpoint cycles carry scales");
        assert_eq!(
            scale.voltage.max,
            (real[0].scale.voltage.max + real[1].scale.voltage.max) / 2.0
        );
        assert_eq!(scale.voltage.min, 3.0);
        assert!(!scale.voltage.degenerate);
    }

    #[test]
    fn augmented_roundtrip_via_files() {
        let dir = tempfile::tempdir().unwrap();
        let params = small_params();
        let real = real_cycles(&[2.0, 1.9, 1.8]);
        let synth = augment_midpoints(&params, &real, 5).unwrap();
        let merged = merge(&real, &synth);
        let csv = dir.path().join("augmented.csv");
        let json = dir.path().join("augmented.json");
        write_augmented(&merged, &csv, &json).unwrap();
        let back = load_augmented(&csv, &json).unwrap();
        assert_eq!(back, merged);
    }
}
