//! Class-balanced dataset assembly from independent episodes.
//!
//! Episodes are rejection-sampled: each one is simulated from a seed
//! derived from `(master seed, episode index)` and offered to the first
//! split that still needs its class, so parallel and serial generation
//! agree and no episode appears in two splits.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

use super::episode::run_episode;
use super::{
    make_features, EpisodeInit, SimConfig, SimError, N_CLASSES, STREAM_CALIBRATION,
    STREAM_EPISODE,
};
use crate::seed::derive_seed;

/// Episodes simulated per parallel batch.
const CHUNK: usize = 256;
/// Episode budget per requested sample before giving up on the quotas.
const BUDGET_FACTOR: usize = 64;
/// Calibration episodes for the automatic magnitude threshold.
const CALIBRATION_EPISODES: usize = 500;

/// One labeled sample: features, label, ground truth, and enough metadata
/// to re-simulate the episode it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub task_input: Vec<f64>,
    pub itm_features: Vec<f64>,
    pub class_label: usize,
    pub true_times: (f64, f64),
    pub episode_seed: u64,
    pub collided: bool,
}

/// Requested sizes for each split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub pretrain: usize,
    pub increment: usize,
    pub n_increments: usize,
    pub test: usize,
    pub validation: usize,
}

impl SplitCounts {
    pub fn total(&self) -> usize {
        self.pretrain + self.increment * self.n_increments + self.test + self.validation
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.pretrain == 0 || self.test == 0 || self.validation == 0 {
            return Err(SimError::BadConfig(
                "pretrain, test and validation counts must be positive".into(),
            ));
        }
        if self.n_increments > 0 && self.increment == 0 {
            return Err(SimError::BadConfig("increment count must be positive".into()));
        }
        Ok(())
    }
}

/// How to pick the near/far magnitude threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    Fixed(f64),
    /// Median final planar distance over a wind-free calibration run.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub pretrain: Vec<SampleRecord>,
    pub increments: Vec<Vec<SampleRecord>>,
    pub test: Vec<SampleRecord>,
    pub validation: Vec<SampleRecord>,
}

impl DatasetSplit {
    /// All splits with their names, in generation order.
    pub fn named_splits(&self) -> Vec<(String, &Vec<SampleRecord>)> {
        let mut out = vec![("pretrain".to_string(), &self.pretrain)];
        for (i, inc) in self.increments.iter().enumerate() {
            out.push((format!("increment_{i:02}"), inc));
        }
        out.push(("test".to_string(), &self.test));
        out.push(("validation".to_string(), &self.validation));
        out
    }
}

/// Provenance and tuning record written next to the CSV files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub config: SimConfig,
    pub counts: SplitCounts,
    pub magnitude_threshold: f64,
    pub threshold_mode: String,
    pub collision_rate: f64,
    pub episodes_simulated: usize,
    pub unsettled_episodes: usize,
}

/// Median final planar distance over a wind-free calibration run; used as
/// the automatic near/far threshold.
pub(crate) fn calibrate_threshold(config: &SimConfig) -> f64 {
    let mut calm = config.clone();
    calm.wind_magnitude = 0.0;
    let mut distances: Vec<f64> = (0..CALIBRATION_EPISODES)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(config.seed, STREAM_CALIBRATION, i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let init = EpisodeInit::sample(&calm, &mut rng);
            let ep = run_episode(&calm, &init, f64::INFINITY);
            let d = ep.distance_vector;
            (d[0] * d[0] + d[1] * d[1]).sqrt()
        })
        .collect();
    distances.sort_by(f64::total_cmp);
    let n = distances.len();
    if n % 2 == 1 {
        distances[n / 2]
    } else {
        0.5 * (distances[n / 2 - 1] + distances[n / 2])
    }
}

/// Per-class quota for a split of size `n`: balanced to within one sample.
fn quotas(n: usize) -> [usize; N_CLASSES] {
    let mut q = [n / N_CLASSES; N_CLASSES];
    for class in q.iter_mut().take(n % N_CLASSES) {
        *class += 1;
    }
    q
}

/// Generate a class-balanced dataset. Deterministic given the config seed;
/// the rayon fan-out does not affect the result because every episode has
/// its own derived seed and assignment happens in index order.
pub fn generate_dataset(
    config: &SimConfig,
    counts: &SplitCounts,
    threshold: Threshold,
) -> Result<(DatasetSplit, DatasetManifest), SimError> {
    config.validate()?;
    counts.validate()?;
    let magnitude_threshold = match threshold {
        Threshold::Fixed(v) if v.is_finite() && v > 0.0 => v,
        Threshold::Fixed(v) => {
            return Err(SimError::BadConfig(format!("threshold {v} must be positive")))
        }
        Threshold::Auto => calibrate_threshold(config),
    };

    let mut split_names = vec!["pretrain".to_string()];
    let mut split_quotas = vec![quotas(counts.pretrain)];
    for i in 0..counts.n_increments {
        split_names.push(format!("increment_{i:02}"));
        split_quotas.push(quotas(counts.increment));
    }
    split_names.push("test".to_string());
    split_quotas.push(quotas(counts.test));
    split_names.push("validation".to_string());
    split_quotas.push(quotas(counts.validation));
    let mut buckets: Vec<Vec<SampleRecord>> =
        split_names.iter().map(|_| Vec::new()).collect();

    let budget = BUDGET_FACTOR * counts.total();
    let mut simulated = 0usize;
    let mut unsettled = 0usize;
    let mut collisions = 0usize;
    let mut remaining = counts.total();
    let mut next_index = 0usize;
    while remaining > 0 && next_index < budget {
        let n = CHUNK.min(budget - next_index);
        let episodes: Vec<_> = (next_index..next_index + n)
            .into_par_iter()
            .map(|i| {
                let seed = derive_seed(config.seed, STREAM_EPISODE, i as u64);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let init = EpisodeInit::sample(config, &mut rng);
                (seed, run_episode(config, &init, magnitude_threshold))
            })
            .collect();
        next_index += n;
        for (seed, ep) in episodes {
            simulated += 1;
            if ep.collided {
                collisions += 1;
            }
            if !ep.settled {
                unsettled += 1;
                continue;
            }
            let class = ep.class_label;
            let Some(slot) = split_quotas.iter().position(|q| q[class] > 0) else {
                continue;
            };
            let (task_input, itm_features) = make_features(&ep)?;
            split_quotas[slot][class] -= 1;
            remaining -= 1;
            buckets[slot].push(SampleRecord {
                task_input,
                itm_features,
                class_label: class,
                true_times: ep.true_interaction_times,
                episode_seed: seed,
                collided: ep.collided,
            });
            if remaining == 0 {
                break;
            }
        }
    }

    if remaining > 0 {
        let mut missing = Vec::new();
        for (name, q) in split_names.iter().zip(&split_quotas) {
            for (class, &left) in q.iter().enumerate() {
                if left > 0 {
                    missing.push((name.clone(), class, left));
                }
            }
        }
        return Err(SimError::QuotaShortfall(missing));
    }

    let validation = buckets.pop().unwrap();
    let test = buckets.pop().unwrap();
    let pretrain = buckets.remove(0);
    let split = DatasetSplit { pretrain, increments: buckets, test, validation };
    let manifest = DatasetManifest {
        config: config.clone(),
        counts: *counts,
        magnitude_threshold,
        threshold_mode: match threshold {
            Threshold::Fixed(_) => "fixed".to_string(),
            Threshold::Auto => "auto".to_string(),
        },
        collision_rate: collisions as f64 / simulated as f64,
        episodes_simulated: simulated,
        unsettled_episodes: unsettled,
    };
    Ok((split, manifest))
}

/// CSV header: 6 task features, 18 ITM features, label, true times,
/// episode seed, collision flag.
fn csv_header() -> Vec<String> {
    let mut h: Vec<String> = (0..6).map(|i| format!("task_{i}")).collect();
    h.extend((0..18).map(|i| format!("itm_{i}")));
    h.extend(
        ["class_label", "true_time_1", "true_time_2", "episode_seed", "collided"]
            .map(String::from),
    );
    h
}

/// Serialize split rows to CSV bytes.
pub fn split_csv_bytes(rows: &[SampleRecord]) -> Result<Vec<u8>, SimError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(csv_header()).map_err(|e| SimError::Io(e.to_string()))?;
    for row in rows {
        let mut rec: Vec<String> = row.task_input.iter().map(|v| v.to_string()).collect();
        rec.extend(row.itm_features.iter().map(|v| v.to_string()));
        rec.push(row.class_label.to_string());
        rec.push(row.true_times.0.to_string());
        rec.push(row.true_times.1.to_string());
        rec.push(row.episode_seed.to_string());
        rec.push(row.collided.to_string());
        w.write_record(rec).map_err(|e| SimError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| SimError::Io(e.to_string()))
}

pub fn write_split_csv(path: &Path, rows: &[SampleRecord]) -> Result<(), SimError> {
    let bytes = split_csv_bytes(rows)?;
    std::fs::write(path, bytes).map_err(|e| SimError::Io(e.to_string()))
}

pub fn read_split_csv(path: &Path) -> Result<Vec<SampleRecord>, SimError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| SimError::Io(e.to_string()))?;
    let io = |e: String| SimError::Io(e);
    let mut out = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| io(e.to_string()))?;
        if record.len() != 29 {
            return Err(io(format!("expected 29 columns, found {}", record.len())));
        }
        let f = |i: usize| -> Result<f64, SimError> {
            record[i].parse().map_err(|_| io(format!("bad float {:?}", &record[i])))
        };
        let task_input = (0..6).map(f).collect::<Result<Vec<_>, _>>()?;
        let itm_features = (6..24).map(f).collect::<Result<Vec<_>, _>>()?;
        out.push(SampleRecord {
            task_input,
            itm_features,
            class_label: record[24]
                .parse()
                .map_err(|_| io(format!("bad label {:?}", &record[24])))?,
            true_times: (f(25)?, f(26)?),
            episode_seed: record[27]
                .parse()
                .map_err(|_| io(format!("bad seed {:?}", &record[27])))?,
            collided: record[28]
                .parse()
                .map_err(|_| io(format!("bad flag {:?}", &record[28])))?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_counts() -> SplitCounts {
        SplitCounts { pretrain: 8, increment: 8, n_increments: 2, test: 8, validation: 8 }
    }

    #[test]
    fn minimum_counts_give_one_sample_per_class() {
        let (split, manifest) =
            generate_dataset(&SimConfig::default(), &tiny_counts(), Threshold::Auto).unwrap();
        for (name, rows) in split.named_splits() {
            assert_eq!(rows.len(), 8, "{name}");
            let mut classes: Vec<usize> = rows.iter().map(|r| r.class_label).collect();
            classes.sort_unstable();
            assert_eq!(classes, (0..8).collect::<Vec<_>>(), "{name}");
        }
        assert!(manifest.magnitude_threshold > 0.0);
        assert_eq!(split.increments.len(), 2);
    }

    #[test]
    fn splits_share_no_episode() {
        let (split, _) =
            generate_dataset(&SimConfig::default(), &tiny_counts(), Threshold::Auto).unwrap();
        let mut seeds: Vec<u64> = split
            .named_splits()
            .iter()
            .flat_map(|(_, rows)| rows.iter().map(|r| r.episode_seed))
            .collect();
        let n = seeds.len();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), n);
    }

    #[test]
    fn generation_is_deterministic() {
        let config = SimConfig::default();
        let a = generate_dataset(&config, &tiny_counts(), Threshold::Auto).unwrap();
        let b = generate_dataset(&config, &tiny_counts(), Threshold::Auto).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn collision_rate_is_near_half() {
        let config = SimConfig::default();
        let threshold = calibrate_threshold(&config);
        let collisions: usize = (0..1000)
            .into_par_iter()
            .map(|i| {
                let seed = derive_seed(config.seed, STREAM_EPISODE, i as u64);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let init = EpisodeInit::sample(&config, &mut rng);
                usize::from(run_episode(&config, &init, threshold).collided)
            })
            .sum();
        let rate = collisions as f64 / 1000.0;
        assert!((0.3..=0.7).contains(&rate), "collision rate {rate}");
    }

    #[test]
    fn unreachable_quota_reports_shortfall() {
        // an enormous fixed threshold leaves the far classes empty
        let mut counts = tiny_counts();
        counts.n_increments = 0;
        let err = generate_dataset(&SimConfig::default(), &counts, Threshold::Fixed(1e9))
            .unwrap_err();
        match err {
            SimError::QuotaShortfall(missing) => {
                assert!(missing.iter().all(|(_, class, _)| class % 2 == 1));
                assert!(!missing.is_empty());
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let counts =
            SplitCounts { pretrain: 8, increment: 0, n_increments: 0, test: 8, validation: 8 };
        let (split, _) =
            generate_dataset(&SimConfig::default(), &counts, Threshold::Auto).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pretrain.csv");
        write_split_csv(&path, &split.pretrain).unwrap();
        let back = read_split_csv(&path).unwrap();
        assert_eq!(back, split.pretrain);
    }

    #[test]
    fn quota_helper_balances_within_one() {
        let q = quotas(11);
        assert_eq!(q.iter().sum::<usize>(), 11);
        assert_eq!(q.iter().max().unwrap() - q.iter().min().unwrap(), 1);
    }
}
