//! Loading, validation, and synthesis of per-cycle battery datasets.
//!
//! The canonical on-disk format is a pair of CSV files: a samples file with
//! one row per measurement (`battery_id,cycle,time_s,voltage_v,current_a,
//! temperature_c`) and a capacity file with one row per cycle
//! (`battery_id,cycle,capacity_ah`). Rows need not be pre-sorted; the loader
//! orders them by `(cycle, time_s)` and validates strict time monotonicity
//! within each cycle.
//!
//! [`synth_surrogate`] produces a deterministic stand-in battery for
//! desk-scale testing: a CC-CV-like voltage/current shape and a sinusoidal
//! temperature bump, all of which drift systematically as capacity fades, plus
//! optional regeneration spikes in the capacity series.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One charging cycle's timestamped measurements plus its measured capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCycle {
    /// 1-based cycle index within the battery.
    pub cycle_index: u32,
    /// Seconds since the start of the cycle, strictly increasing.
    pub time_s: Vec<f64>,
    pub voltage_v: Vec<f64>,
    pub current_a: Vec<f64>,
    pub temperature_c: Vec<f64>,
    /// Measured capacity of this cycle in ampere-hours.
    pub capacity_ah: f64,
}

impl RawCycle {
    /// Number of samples in the cycle.
    pub fn len(&self) -> usize {
        self.time_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time_s.is_empty()
    }

    /// Checks the per-cycle invariants: at least two samples, equal series
    /// lengths, strictly increasing time, finite values, positive capacity.
    pub fn validate(&self) -> Result<()> {
        let n = self.time_s.len();
        let fail = |reason: String| Error::CycleValidation {
            cycle: self.cycle_index,
            reason,
        };
        if n < 2 {
            return Err(fail(format!("has {n} samples; at least 2 required")));
        }
        if self.voltage_v.len() != n || self.current_a.len() != n || self.temperature_c.len() != n {
            return Err(fail(format!(
                "series lengths differ: time={n}, voltage={}, current={}, temperature={}",
                self.voltage_v.len(),
                self.current_a.len(),
                self.temperature_c.len()
            )));
        }
        for w in self.time_s.windows(2) {
            if !(w[1] > w[0]) {
                return Err(fail(format!(
                    "time not strictly increasing ({} followed by {})",
                    w[0], w[1]
                )));
            }
        }
        let all = self
            .time_s
            .iter()
            .chain(&self.voltage_v)
            .chain(&self.current_a)
            .chain(&self.temperature_c);
        for v in all {
            if !v.is_finite() {
                return Err(fail("non-finite sample value".into()));
            }
        }
        if !(self.capacity_ah > 0.0) || !self.capacity_ah.is_finite() {
            return Err(fail(format!(
                "capacity must be positive and finite, got {}",
                self.capacity_ah
            )));
        }
        Ok(())
    }
}

/// Where a dataset's cycles came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Real,
    Surrogate,
    Augmented,
}

/// An ordered collection of cycles for one battery.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleDataset {
    pub battery_id: String,
    pub cycles: Vec<RawCycle>,
    pub provenance: Provenance,
}

impl CycleDataset {
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    /// Capacity series in cycle order.
    pub fn capacities(&self) -> Vec<f64> {
        self.cycles.iter().map(|c| c.capacity_ah).collect()
    }

    /// Validates every cycle plus the strictly-increasing, contiguous
    /// cycle-index invariant.
    pub fn validate(&self) -> Result<()> {
        if self.cycles.is_empty() {
            return Err(Error::InvalidArgument("dataset has no cycles".into()));
        }
        for (i, cycle) in self.cycles.iter().enumerate() {
            cycle.validate()?;
            let expected = self.cycles[0].cycle_index + i as u32;
            if cycle.cycle_index != expected {
                return Err(Error::CycleValidation {
                    cycle: cycle.cycle_index,
                    reason: format!("cycle indices not contiguous; expected {expected}"),
                });
            }
        }
        Ok(())
    }
}

/// Configuration for the deterministic surrogate battery.
///
/// Capacity fades linearly (`c^[k] = c0 * (1 - fade_rate * k)`) with optional
/// multiplicative regeneration spikes; the three profile channels all change
/// shape as the fade progresses so a conditional generator has something to
/// learn from the capacity value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurrogateConfig {
    pub n_cycles: usize,
    pub samples_per_cycle: usize,
    /// Initial capacity in Ah.
    pub c0: f64,
    /// Per-cycle fractional fade.
    pub fade_rate: f64,
    /// Probability of a regeneration spike per cycle.
    pub regen_prob: f64,
    /// Fractional height of a spike.
    pub regen_gain: f64,
    /// Std-dev of additive Gaussian measurement noise per channel.
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig {
            n_cycles: 60,
            samples_per_cycle: 200,
            c0: 2.0,
            fade_rate: 0.005,
            regen_prob: 0.1,
            regen_gain: 0.05,
            noise_std: 0.01,
            seed: 0,
        }
    }
}

impl SurrogateConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::Config(msg));
        if self.n_cycles == 0 {
            return err("n_cycles must be >= 1".into());
        }
        if self.samples_per_cycle < 2 {
            return err("samples_per_cycle must be >= 2".into());
        }
        if !(self.c0 > 0.0) {
            return err(format!("c0 must be positive, got {}", self.c0));
        }
        if !(0.0..=0.02).contains(&self.fade_rate) {
            return err(format!("fade_rate must lie in [0, 0.02], got {}", self.fade_rate));
        }
        if !(0.0..=1.0).contains(&self.regen_prob) {
            return err(format!("regen_prob must lie in [0, 1], got {}", self.regen_prob));
        }
        if self.regen_gain < 0.0 {
            return err(format!("regen_gain must be >= 0, got {}", self.regen_gain));
        }
        if self.noise_std < 0.0 {
            return err(format!("noise_std must be >= 0, got {}", self.noise_std));
        }
        // Keeps every cycle's capacity positive.
        if self.fade_rate * self.n_cycles as f64 >= 1.0 {
            return err(format!(
                "fade_rate * n_cycles = {} would drive capacity to zero",
                self.fade_rate * self.n_cycles as f64
            ));
        }
        Ok(())
    }
}

const CYCLES_HEADER: [&str; 6] = [
    "battery_id",
    "cycle",
    "time_s",
    "voltage_v",
    "current_a",
    "temperature_c",
];
const CAPACITY_HEADER: [&str; 3] = ["battery_id", "cycle", "capacity_ah"];

fn column_indices(path: &Path, headers: &csv::StringRecord, required: &[&str]) -> Result<Vec<usize>> {
    required
        .iter()
        .map(|col| {
            headers
                .iter()
                .position(|h| h == *col)
                .ok_or_else(|| Error::MissingColumn {
                    path: path.to_path_buf(),
                    column: (*col).to_string(),
                })
        })
        .collect()
}

fn parse_f64(path: &Path, field: &str, value: &str, line: u64) -> Result<f64> {
    value.trim().parse::<f64>().map_err(|_| {
        Error::Config(format!(
            "{}: line {line}: cannot parse {field} value `{value}`",
            path.display()
        ))
    })
}

fn parse_u32(path: &Path, field: &str, value: &str, line: u64) -> Result<u32> {
    value.trim().parse::<u32>().map_err(|_| {
        Error::Config(format!(
            "{}: line {line}: cannot parse {field} value `{value}`",
            path.display()
        ))
    })
}

/// Loads and validates a canonical dataset from its two CSV files.
///
/// Sample rows are grouped by cycle and sorted by time; every cycle must have
/// a matching capacity row and vice versa.
pub fn load_canonical(cycles_path: &Path, capacity_path: &Path) -> Result<CycleDataset> {
    // (cycle, time, v, i, t) tuples, unsorted.
    let mut rows: Vec<(u32, f64, f64, f64, f64)> = Vec::new();
    let mut battery_id: Option<String> = None;

    let file = File::open(cycles_path).map_err(|e| Error::io(cycles_path, e))?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let headers = reader
        .headers()
        .map_err(|e| Error::csv(cycles_path, e))?
        .clone();
    let idx = column_indices(cycles_path, &headers, &CYCLES_HEADER)?;
    for (row_no, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(cycles_path, e))?;
        let line = row_no as u64 + 2;
        let get = |i: usize| record.get(idx[i]).unwrap_or("");
        let cycle = parse_u32(cycles_path, "cycle", get(1), line)?;
        let id = get(0).to_string();
        match &battery_id {
            None => battery_id = Some(id),
            Some(existing) if *existing != id => {
                return Err(Error::CycleValidation {
                    cycle,
                    reason: format!("battery_id `{id}` differs from `{existing}`"),
                });
            }
            _ => {}
        }
        rows.push((
            cycle,
            parse_f64(cycles_path, "time_s", get(2), line)?,
            parse_f64(cycles_path, "voltage_v", get(3), line)?,
            parse_f64(cycles_path, "current_a", get(4), line)?,
            parse_f64(cycles_path, "temperature_c", get(5), line)?,
        ));
    }
    let battery_id = battery_id
        .ok_or_else(|| Error::Config(format!("{}: no sample rows", cycles_path.display())))?;

    let mut capacities: Vec<(u32, f64)> = Vec::new();
    let file = File::open(capacity_path).map_err(|e| Error::io(capacity_path, e))?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let headers = reader
        .headers()
        .map_err(|e| Error::csv(capacity_path, e))?
        .clone();
    let idx = column_indices(capacity_path, &headers, &CAPACITY_HEADER)?;
    for (row_no, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(capacity_path, e))?;
        let line = row_no as u64 + 2;
        let get = |i: usize| record.get(idx[i]).unwrap_or("");
        let cycle = parse_u32(capacity_path, "cycle", get(1), line)?;
        let id = get(0);
        if id != battery_id {
            return Err(Error::CycleValidation {
                cycle,
                reason: format!("battery_id `{id}` differs from `{battery_id}`"),
            });
        }
        capacities.push((cycle, parse_f64(capacity_path, "capacity_ah", get(2), line)?));
    }
    capacities.sort_by_key(|&(cycle, _)| cycle);

    rows.sort_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).expect("finite sort keys"));

    let mut cycles: Vec<RawCycle> = Vec::new();
    for (cycle_index, time, v, i, t) in rows {
        match cycles.last_mut() {
            Some(last) if last.cycle_index == cycle_index => {
                last.time_s.push(time);
                last.voltage_v.push(v);
                last.current_a.push(i);
                last.temperature_c.push(t);
            }
            _ => cycles.push(RawCycle {
                cycle_index,
                time_s: vec![time],
                voltage_v: vec![v],
                current_a: vec![i],
                temperature_c: vec![t],
                capacity_ah: f64::NAN,
            }),
        }
    }

    // Join capacities onto cycles, both directions checked.
    for cycle in &mut cycles {
        match capacities.binary_search_by_key(&cycle.cycle_index, |&(c, _)| c) {
            Ok(pos) => cycle.capacity_ah = capacities[pos].1,
            Err(_) => {
                return Err(Error::Join {
                    cycle: cycle.cycle_index,
                    reason: format!("has samples but no row in {}", capacity_path.display()),
                });
            }
        }
    }
    for &(cycle, _) in &capacities {
        if !cycles.iter().any(|c| c.cycle_index == cycle) {
            return Err(Error::Join {
                cycle,
                reason: format!("has a capacity row but no samples in {}", cycles_path.display()),
            });
        }
    }

    let ds = CycleDataset {
        battery_id,
        cycles,
        provenance: Provenance::Real,
    };
    ds.validate()?;
    Ok(ds)
}

/// Writes a dataset back out in the canonical two-file format.
pub fn write_canonical(ds: &CycleDataset, cycles_path: &Path, capacity_path: &Path) -> Result<()> {
    let file = File::create(cycles_path).map_err(|e| Error::io(cycles_path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(CYCLES_HEADER)
        .map_err(|e| Error::csv(cycles_path, e))?;
    for cycle in &ds.cycles {
        for j in 0..cycle.len() {
            w.write_record([
                ds.battery_id.as_str(),
                &cycle.cycle_index.to_string(),
                &cycle.time_s[j].to_string(),
                &cycle.voltage_v[j].to_string(),
                &cycle.current_a[j].to_string(),
                &cycle.temperature_c[j].to_string(),
            ])
            .map_err(|e| Error::csv(cycles_path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(cycles_path, e))?;

    let file = File::create(capacity_path).map_err(|e| Error::io(capacity_path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(CAPACITY_HEADER)
        .map_err(|e| Error::csv(capacity_path, e))?;
    for cycle in &ds.cycles {
        w.write_record([
            ds.battery_id.as_str(),
            &cycle.cycle_index.to_string(),
            &cycle.capacity_ah.to_string(),
        ])
        .map_err(|e| Error::csv(capacity_path, e))?;
    }
    w.flush().map_err(|e| Error::io(capacity_path, e))?;
    Ok(())
}

/// Splits off the first `k` cycles for training; the rest become the test set.
///
/// Both `k >= total` and `k == 0` are rejected so neither side is empty.
pub fn split_train_test(ds: &CycleDataset, k: usize) -> Result<(CycleDataset, CycleDataset)> {
    let total = ds.cycles.len();
    if k == 0 || k >= total {
        return Err(Error::InvalidArgument(format!(
            "split point K={k} must satisfy 1 <= K < {total}"
        )));
    }
    let train = CycleDataset {
        battery_id: ds.battery_id.clone(),
        cycles: ds.cycles[..k].to_vec(),
        provenance: ds.provenance,
    };
    let test = CycleDataset {
        battery_id: ds.battery_id.clone(),
        cycles: ds.cycles[k..].to_vec(),
        provenance: ds.provenance,
    };
    Ok((train, test))
}

const V_MIN: f64 = 3.0;
const V_MAX: f64 = 4.2;
const I0: f64 = 1.5;
const T0: f64 = 25.0;

/// Generates the deterministic surrogate battery described by `cfg`.
///
/// For cycle `k` (1-based) with fade factor `f(k) = 1 - fade_rate * k`:
/// capacity is `c0 * f(k)`, spiked by `(1 + regen_gain)` on cycles drawn
/// with probability `regen_prob`. Profiles over normalized time `u in [0,1]`:
/// a CC ramp to `V_MAX` completing at `u_cc = 0.6 * f(k)`, constant current
/// `I0` followed by exponential decay with scale 0.12, and a sinusoidal
/// temperature bump that grows as the battery fades. Gaussian noise of scale
/// `noise_std` is added to each channel independently.
pub fn synth_surrogate(cfg: &SurrogateConfig) -> Result<CycleDataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.samples_per_cycle;
    let mut cycles = Vec::with_capacity(cfg.n_cycles);
    for k in 1..=cfg.n_cycles {
        let fade = 1.0 - cfg.fade_rate * k as f64;
        let spiked = rng.random::<f64>() < cfg.regen_prob;
        let capacity_ah = cfg.c0 * fade * if spiked { 1.0 + cfg.regen_gain } else { 1.0 };

        let u_cc = 0.6 * fade;
        let mut time_s = Vec::with_capacity(n);
        let mut voltage_v = Vec::with_capacity(n);
        let mut current_a = Vec::with_capacity(n);
        let mut temperature_c = Vec::with_capacity(n);
        for j in 0..n {
            let u = j as f64 / (n - 1) as f64;
            time_s.push(u * 3600.0);
            let v = V_MIN + (V_MAX - V_MIN) * (u / u_cc).min(1.0);
            let i = if u <= u_cc {
                I0
            } else {
                I0 * (-(u - u_cc) / 0.12).exp()
            };
            let t = T0 + 6.0 * (std::f64::consts::PI * u).sin() * (1.0 + 0.5 * (1.0 - fade));
            let nv: f64 = rng.sample(StandardNormal);
            let ni: f64 = rng.sample(StandardNormal);
            let nt: f64 = rng.sample(StandardNormal);
            voltage_v.push(v + cfg.noise_std * nv);
            current_a.push(i + cfg.noise_std * ni);
            temperature_c.push(t + cfg.noise_std * nt);
        }
        cycles.push(RawCycle {
            cycle_index: k as u32,
            time_s,
            voltage_v,
            current_a,
            temperature_c,
            capacity_ah,
        });
    }
    Ok(CycleDataset {
        battery_id: "surrogate".to_string(),
        cycles,
        provenance: Provenance::Surrogate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn fixture_dataset() -> CycleDataset {
        CycleDataset {
            battery_id: "NB5".into(),
            cycles: vec![
                RawCycle {
                    cycle_index: 1,
                    time_s: vec![0.0, 1.0, 2.0, 3.0],
                    voltage_v: vec![3.0, 3.5, 3.9, 4.2],
                    current_a: vec![1.5, 1.5, 1.2, 0.4],
                    temperature_c: vec![25.0, 26.0, 27.0, 26.5],
                    capacity_ah: 1.8,
                },
                RawCycle {
                    cycle_index: 2,
                    time_s: vec![0.0, 1.5, 2.5, 4.0],
                    voltage_v: vec![3.1, 3.6, 4.0, 4.2],
                    current_a: vec![1.5, 1.4, 1.0, 0.3],
                    temperature_c: vec![25.2, 26.1, 27.3, 26.8],
                    capacity_ah: 1.7,
                },
            ],
            provenance: Provenance::Real,
        }
    }

    #[test]
    fn load_reads_back_written_fixture() {
        let dir = tempdir().unwrap();
        let cp = dir.path().join("cycles.csv");
        let kp = dir.path().join("capacity.csv");
        let ds = fixture_dataset();
        write_canonical(&ds, &cp, &kp).unwrap();
        let loaded = load_canonical(&cp, &kp).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded.cycles[0].len(), 4);
        assert_eq!(loaded.cycles[1].len(), 4);
        assert_eq!(loaded.cycles[0].capacity_ah, 1.8);
        assert_eq!(loaded.cycles[1].capacity_ah, 1.7);
        assert_eq!(loaded, ds);
    }

    #[test]
    fn load_sorts_unsorted_rows() {
        let dir = tempdir().unwrap();
        let cp = dir.path().join("cycles.csv");
        let kp = dir.path().join("capacity.csv");
        std::fs::write(
            &cp,
            "battery_id,cycle,time_s,voltage_v,current_a,temperature_c\n\
             b,2,1.0,3.5,1.0,25.0\n\
             b,1,1.0,3.5,1.0,25.0\n\
             b,1,0.0,3.0,1.0,25.0\n\
             b,2,0.0,3.0,1.0,25.0\n",
        )
        .unwrap();
        std::fs::write(&kp, "battery_id,cycle,capacity_ah\nb,1,1.5\nb,2,1.4\n").unwrap();
        let ds = load_canonical(&cp, &kp).unwrap();
        assert_eq!(ds.cycles[0].time_s, vec![0.0, 1.0]);
        assert_eq!(ds.cycles[1].time_s, vec![0.0, 1.0]);
    }

    #[test]
    fn duplicated_time_is_a_validation_error_naming_the_cycle() {
        let dir = tempdir().unwrap();
        let cp = dir.path().join("cycles.csv");
        let kp = dir.path().join("capacity.csv");
        std::fs::write(
            &cp,
            "battery_id,cycle,time_s,voltage_v,current_a,temperature_c\n\
             b,1,0.0,3.0,1.0,25.0\n\
             b,1,1.0,3.5,1.0,25.0\n\
             b,2,0.0,3.0,1.0,25.0\n\
             b,2,0.0,3.1,1.0,25.0\n",
        )
        .unwrap();
        std::fs::write(&kp, "battery_id,cycle,capacity_ah\nb,1,1.5\nb,2,1.4\n").unwrap();
        match load_canonical(&cp, &kp) {
            Err(Error::CycleValidation { cycle: 2, .. }) => {}
            other => panic!("expected validation error for cycle 2, got {other:?}"),
        }
    }

    #[test]
    fn missing_capacity_row_is_a_join_error() {
        let dir = tempdir().unwrap();
        let cp = dir.path().join("cycles.csv");
        let kp = dir.path().join("capacity.csv");
        std::fs::write(
            &cp,
            "battery_id,cycle,time_s,voltage_v,current_a,temperature_c\n\
             b,1,0.0,3.0,1.0,25.0\n\
             b,1,1.0,3.5,1.0,25.0\n\
             b,2,0.0,3.0,1.0,25.0\n\
             b,2,1.0,3.5,1.0,25.0\n\
             b,3,0.0,3.0,1.0,25.0\n\
             b,3,1.0,3.5,1.0,25.0\n",
        )
        .unwrap();
        std::fs::write(&kp, "battery_id,cycle,capacity_ah\nb,1,1.5\nb,2,1.4\n").unwrap();
        match load_canonical(&cp, &kp) {
            Err(Error::Join { cycle: 3, .. }) => {}
            other => panic!("expected join error for cycle 3, got {other:?}"),
        }
    }

    #[test]
    fn missing_column_is_a_schema_error_naming_the_column() {
        let dir = tempdir().unwrap();
        let cp = dir.path().join("cycles.csv");
        let kp = dir.path().join("capacity.csv");
        std::fs::write(
            &cp,
            "battery_id,cycle,time_s,voltage_v,current_a\n b,1,0.0,3.0,1.0\n",
        )
        .unwrap();
        std::fs::write(&kp, "battery_id,cycle,capacity_ah\nb,1,1.5\n").unwrap();
        match load_canonical(&cp, &kp) {
            Err(Error::MissingColumn { column, .. }) => assert_eq!(column, "temperature_c"),
            other => panic!("expected missing-column error, got {other:?}"),
        }
    }

    #[test]
    fn split_examples() {
        let ds = synth_surrogate(&SurrogateConfig {
            n_cycles: 150,
            samples_per_cycle: 4,
            fade_rate: 0.005,
            regen_prob: 0.0,
            noise_std: 0.0,
            ..Default::default()
        })
        .unwrap();
        let (train, test) = split_train_test(&ds, 100).unwrap();
        assert_eq!(train.len(), 100);
        assert_eq!(test.len(), 50);

        let two = CycleDataset {
            battery_id: ds.battery_id.clone(),
            cycles: ds.cycles[..2].to_vec(),
            provenance: ds.provenance,
        };
        let (a, b) = split_train_test(&two, 1).unwrap();
        assert_eq!((a.len(), b.len()), (1, 1));

        assert!(matches!(
            split_train_test(&two, 2),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            split_train_test(&two, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn split_preserves_cycle_multiset() {
        let ds = synth_surrogate(&SurrogateConfig {
            n_cycles: 23,
            samples_per_cycle: 5,
            ..Default::default()
        })
        .unwrap();
        let (train, test) = split_train_test(&ds, 9).unwrap();
        let mut rejoined = train.cycles.clone();
        rejoined.extend(test.cycles.clone());
        assert_eq!(rejoined, ds.cycles);
        for c in &train.cycles {
            assert!(!test.cycles.iter().any(|t| t.cycle_index == c.cycle_index));
        }
    }

    #[test]
    fn surrogate_with_fade_disabled_is_constant() {
        let cfg = SurrogateConfig {
            n_cycles: 10,
            samples_per_cycle: 16,
            fade_rate: 0.0,
            regen_prob: 0.0,
            noise_std: 0.0,
            ..Default::default()
        };
        let ds = synth_surrogate(&cfg).unwrap();
        for c in &ds.cycles {
            assert_eq!(c.capacity_ah, cfg.c0);
            assert_eq!(c.voltage_v, ds.cycles[0].voltage_v);
            assert_eq!(c.current_a, ds.cycles[0].current_a);
            assert_eq!(c.temperature_c, ds.cycles[0].temperature_c);
        }
    }

    #[test]
    fn surrogate_capacity_strictly_decreasing_without_regen() {
        let ds = synth_surrogate(&SurrogateConfig {
            n_cycles: 50,
            samples_per_cycle: 8,
            fade_rate: 0.01,
            regen_prob: 0.0,
            noise_std: 0.02,
            ..Default::default()
        })
        .unwrap();
        let caps = ds.capacities();
        for w in caps.windows(2) {
            assert!(w[1] < w[0], "capacity must fade monotonically");
        }
    }

    #[test]
    fn surrogate_capacity_increases_only_on_spiked_cycles() {
        let cfg = SurrogateConfig {
            n_cycles: 80,
            samples_per_cycle: 8,
            fade_rate: 0.002,
            regen_prob: 0.3,
            regen_gain: 0.05,
            noise_std: 0.0,
            seed: 7,
            ..Default::default()
        };
        let ds = synth_surrogate(&cfg).unwrap();
        let caps = ds.capacities();
        // Reconstruct the spike set: capacity is either c0*f(k) or
        // c0*f(k)*(1+gain), and the two are distinguishable exactly.
        let spiked: Vec<bool> = caps
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let base = cfg.c0 * (1.0 - cfg.fade_rate * (i + 1) as f64);
                let with_spike = base * (1.0 + cfg.regen_gain);
                if (c - base).abs() < 1e-12 {
                    false
                } else {
                    assert!((c - with_spike).abs() < 1e-12, "capacity off-model at {i}");
                    true
                }
            })
            .collect();
        assert!(spiked.iter().any(|&s| s), "seed should produce spikes");
        for k in 1..caps.len() {
            if caps[k] > caps[k - 1] {
                assert!(spiked[k], "increase at cycle {} without a spike", k + 1);
            }
        }
    }

    #[test]
    fn surrogate_is_deterministic() {
        let cfg = SurrogateConfig {
            n_cycles: 12,
            samples_per_cycle: 32,
            noise_std: 0.05,
            seed: 42,
            ..Default::default()
        };
        let a = synth_surrogate(&cfg).unwrap();
        let b = synth_surrogate(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn surrogate_rejects_fade_that_exhausts_capacity() {
        let cfg = SurrogateConfig {
            n_cycles: 100,
            fade_rate: 0.02,
            ..Default::default()
        };
        assert!(matches!(synth_surrogate(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn roundtrip_canonical_files_byte_identical() {
        let dir = tempdir().unwrap();
        let ds = synth_surrogate(&SurrogateConfig {
            n_cycles: 5,
            samples_per_cycle: 7,
            noise_std: 0.03,
            seed: 3,
            ..Default::default()
        })
        .unwrap();
        let cp1 = dir.path().join("c1.csv");
        let kp1 = dir.path().join("k1.csv");
        write_canonical(&ds, &cp1, &kp1).unwrap();
        let loaded = load_canonical(&cp1, &kp1).unwrap();
        let cp2 = dir.path().join("c2.csv");
        let kp2 = dir.path().join("k2.csv");
        write_canonical(&loaded, &cp2, &kp2).unwrap();
        assert_eq!(
            std::fs::read(&cp1).unwrap(),
            std::fs::read(&cp2).unwrap(),
            "cycles CSV must round-trip byte-identically"
        );
        assert_eq!(std::fs::read(&kp1).unwrap(), std::fs::read(&kp2).unwrap());
    }
}
