//! Event detection, interaction-time inference, cause-window sampling,
//! and self-labeled dataset assembly for the two-ball experiment.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{EffectEvent, NoiseSpec, PipelineError, Provenance, SelfLabeledExample, StreamSample};
use crate::causal::{CausalEdge, CausalGraph, CausalNode, SelfLabelingPlan, StateKind, TimeLaw};
use crate::learners::{train_regressor, Regressor, RegressorSpec};
use crate::sim::{
    simulate_episode, BallState, EpisodeRecord, SampleRecord, SimConfig, SimError,
};

pub const CAUSE_IDS: [&str; 2] = ["ball_1", "ball_2"];
pub const EFFECT_ID: &str = "impact_configuration";

/// Re-run an episode from the seed recorded in a dataset row; bit-identical
/// to the episode generated during dataset assembly.
pub fn resimulate_episode(
    config: &SimConfig,
    episode_seed: u64,
    magnitude_threshold: f64,
) -> Result<EpisodeRecord, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(episode_seed);
    simulate_episode(config, &mut rng, magnitude_threshold)
}

/// View a recorded ball stream as timestamped feature samples
/// `[position, velocity]`.
pub fn ball_stream(states: &[BallState], timestep: f64) -> Vec<StreamSample> {
    states
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let mut features = Vec::with_capacity(6);
            features.extend(s.position);
            features.extend(s.velocity);
            StreamSample { t: k as f64 * timestep, features }
        })
        .collect()
}

/// Rule-based effect state detector: fires exactly once, at settle
/// detection, with the categorized final displacement as the label and
/// the 18 interaction-time features as the event features. Unsettled
/// episodes produce no event.
pub fn detect_effect_events(
    episode: &EpisodeRecord,
    magnitude_threshold: f64,
) -> Vec<EffectEvent> {
    if !episode.settled {
        return Vec::new();
    }
    let Ok((_, itm_features)) = crate::sim::make_features(episode) else {
        return Vec::new();
    };
    vec![EffectEvent {
        t_detect: episode.settle_time,
        label: crate::sim::categorize_effect(episode.distance_vector, magnitude_threshold),
        effect_features: itm_features,
    }]
}

/// The lumped causal graph of the experiment: both balls are transient
/// causes of the settled impact configuration (a collider).
pub fn ball_plan_graph(laws: (TimeLaw, TimeLaw)) -> Result<CausalGraph, PipelineError> {
    let node = |id: &str, state_kind| CausalNode {
        id: id.to_string(),
        observable: true,
        state_kind,
    };
    let graph = CausalGraph::new(
        vec![
            node(CAUSE_IDS[0], StateKind::Transient),
            node(CAUSE_IDS[1], StateKind::Transient),
            node(EFFECT_ID, StateKind::Steady),
        ],
        vec![
            CausalEdge {
                cause: CAUSE_IDS[0].to_string(),
                effect: EFFECT_ID.to_string(),
                law: laws.0,
            },
            CausalEdge {
                cause: CAUSE_IDS[1].to_string(),
                effect: EFFECT_ID.to_string(),
                law: laws.1,
            },
        ],
    )?;
    Ok(graph)
}

/// Fit one interaction-time regressor per ball on source-domain samples
/// (features → that ball's true interaction time).
pub fn train_itms(
    spec: RegressorSpec,
    samples: &[SampleRecord],
) -> Result<BTreeMap<String, Regressor>, PipelineError> {
    let inputs: Vec<Vec<f64>> = samples.iter().map(|s| s.itm_features.clone()).collect();
    let mut itms = BTreeMap::new();
    for (i, cause) in CAUSE_IDS.iter().enumerate() {
        let targets: Vec<f64> = samples
            .iter()
            .map(|s| if i == 0 { s.true_times.0 } else { s.true_times.1 })
            .collect();
        itms.insert(cause.to_string(), train_regressor(spec, &inputs, &targets)?);
    }
    Ok(itms)
}

/// Predict the interaction time for every cause bound in the plan;
/// negative predictions are clamped to zero.
pub fn infer_times(
    event: &EffectEvent,
    plan: &SelfLabelingPlan,
    itms: &BTreeMap<String, Regressor>,
) -> Result<Vec<(String, f64)>, PipelineError> {
    let mut out = Vec::with_capacity(plan.itm_bindings.len());
    for binding in &plan.itm_bindings {
        let itm = itms
            .get(&binding.cause_id)
            .ok_or_else(|| PipelineError::MissingItm(binding.cause_id.clone()))?;
        let t = itm.predict(&event.effect_features)?;
        out.push((binding.cause_id.clone(), t.max(0.0)));
    }
    Ok(out)
}

/// The stream sample nearest to `t_detect − t_if`, ties toward the
/// earlier sample; the flag reports clamping to the stream extent.
pub fn sample_cause_window(
    stream: &[StreamSample],
    t_detect: f64,
    t_if: f64,
) -> (StreamSample, bool) {
    assert!(!stream.is_empty(), "cause stream must be nonempty");
    let target = t_detect - t_if;
    if target <= stream[0].t {
        return (stream[0].clone(), target < stream[0].t);
    }
    let last = stream.len() - 1;
    if target >= stream[last].t {
        return (stream[last].clone(), target > stream[last].t);
    }
    let hi = stream.partition_point(|s| s.t < target);
    let (lo_s, hi_s) = (&stream[hi - 1], &stream[hi]);
    // ties go to the earlier sample
    if target - lo_s.t <= hi_s.t - target {
        (lo_s.clone(), false)
    } else {
        (hi_s.clone(), false)
    }
}

/// `±ε` timing perturbation for one inferred time.
pub(crate) fn noisy_time(t_if: f64, noise: &NoiseSpec, rng: &mut ChaCha8Rng) -> f64 {
    let normal = Normal::new(noise.itm_error_mean, noise.itm_error_variance.sqrt())
        .expect("validated noise spec");
    let eps: f64 = normal.sample(rng);
    let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
    t_if + eps * sign
}

/// ESD label corruption: uniform redraw with probability `esd_fraction`.
pub(crate) fn noisy_label(
    label: usize,
    n_classes: usize,
    noise: &NoiseSpec,
    rng: &mut ChaCha8Rng,
) -> usize {
    if rng.gen_bool(noise.esd_fraction) {
        rng.gen_range(0..n_classes)
    } else {
        label
    }
}

/// Assemble self-labeled samples from episodes: detect the effect event,
/// infer (and perturb) per-cause times, sample the cause windows, and
/// rebuild the 6-element task input from the two sampled states the same
/// way `make_features` builds it from the true initial states.
pub fn build_selflabeled_dataset(
    episodes: &[EpisodeRecord],
    magnitude_threshold: f64,
    plan: &SelfLabelingPlan,
    itms: &BTreeMap<String, Regressor>,
    noise: &NoiseSpec,
    n_classes: usize,
) -> Result<Vec<SelfLabeledExample>, PipelineError> {
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let mut out = Vec::new();
    for (event_id, episode) in episodes.iter().enumerate() {
        for event in detect_effect_events(episode, magnitude_threshold) {
            let mut inferred = infer_times(&event, plan, itms)?;
            for (_, t) in &mut inferred {
                *t = noisy_time(*t, noise, &mut rng);
            }
            let streams: BTreeMap<&str, Vec<StreamSample>> = [
                (CAUSE_IDS[0], ball_stream(&episode.cause_stream_1, episode.timestep)),
                (CAUSE_IDS[1], ball_stream(&episode.cause_stream_2, episode.timestep)),
            ]
            .into_iter()
            .collect();
            let mut sampled = Vec::with_capacity(inferred.len());
            let mut timestamps = Vec::with_capacity(inferred.len());
            let mut clamped = false;
            for (cause, t_if) in &inferred {
                let stream = streams
                    .get(cause.as_str())
                    .ok_or_else(|| PipelineError::MissingItm(cause.clone()))?;
                let (s, was_clamped) = sample_cause_window(stream, event.t_detect, *t_if);
                clamped |= was_clamped;
                timestamps.push(s.t);
                sampled.push(s);
            }
            let p1 = &sampled[0].features[0..3];
            let p2 = &sampled[1].features[0..3];
            let d = [p2[0] - p1[0], p2[1] - p1[1], p2[2] - p1[2]];
            let input = vec![
                (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt(),
                (d[0] * d[0] + d[1] * d[1]).sqrt(),
                d[0],
                d[1],
                d[2],
                timestamps[1] - timestamps[0],
            ];
            let label = noisy_label(event.label, n_classes, noise, &mut rng);
            out.push(SelfLabeledExample {
                input,
                label,
                provenance: Provenance {
                    event_id,
                    inferred_times: inferred,
                    sampled_timestamps: timestamps,
                    clamped,
                },
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ds::adaptive_simpson;
    use crate::seed::stream_rng;
    use crate::sim::N_CLASSES;

    const THRESHOLD: f64 = 2.0;

    fn episodes(n: usize, config: &SimConfig) -> Vec<EpisodeRecord> {
        (0..n)
            .map(|i| {
                simulate_episode(config, &mut stream_rng(42, 0x11, i as u64), THRESHOLD).unwrap()
            })
            .collect()
    }

    fn oracle_itms(eps: &[EpisodeRecord]) -> BTreeMap<String, Regressor> {
        // k = 1 nearest neighbor on the exact training features returns the
        // stored target, i.e. a ground-truth oracle on its own episodes
        let inputs: Vec<Vec<f64>> = eps
            .iter()
            .map(|e| crate::sim::make_features(e).unwrap().1)
            .collect();
        let mut itms = BTreeMap::new();
        for (i, cause) in CAUSE_IDS.iter().enumerate() {
            let targets: Vec<f64> = eps
                .iter()
                .map(|e| {
                    if i == 0 {
                        e.true_interaction_times.0
                    } else {
                        e.true_interaction_times.1
                    }
                })
                .collect();
            itms.insert(
                cause.to_string(),
                train_regressor(RegressorSpec::Knn { k: 1 }, &inputs, &targets).unwrap(),
            );
        }
        itms
    }

    fn plan() -> SelfLabelingPlan {
        let law = TimeLaw::new(2.0, 1.0, 3.0).unwrap();
        ball_plan_graph((law, law))
            .unwrap()
            .build_labeling_plan(CAUSE_IDS[0], EFFECT_ID)
            .unwrap()
    }

    #[test]
    fn plan_binds_both_balls() {
        let p = plan();
        let mut causes: Vec<&str> =
            p.itm_bindings.iter().map(|b| b.cause_id.as_str()).collect();
        causes.sort_unstable();
        assert_eq!(causes, CAUSE_IDS);
        assert_eq!(p.target_pair.1, EFFECT_ID);
    }

    #[test]
    fn unsettled_episode_yields_no_event() {
        let mut config = SimConfig::default();
        config.max_duration = 0.5;
        let [ep] = <[_; 1]>::try_from(episodes(1, &config)).unwrap();
        assert!(!ep.settled);
        assert!(detect_effect_events(&ep, THRESHOLD).is_empty());
    }

    #[test]
    fn rule_esd_matches_ground_truth_labels() {
        for ep in episodes(100, &SimConfig::default()) {
            let events = detect_effect_events(&ep, THRESHOLD);
            assert_eq!(events.len(), 1);
            assert_eq!(events[0].label, ep.class_label);
            assert_eq!(events[0].effect_features.len(), 18);
            assert_eq!(events[0].t_detect, ep.settle_time);
        }
    }

    #[test]
    fn oracle_itm_recovers_true_times() {
        let eps = episodes(30, &SimConfig::default());
        let itms = oracle_itms(&eps);
        let plan = plan();
        for ep in &eps {
            let event = detect_effect_events(ep, THRESHOLD).remove(0);
            let times = infer_times(&event, &plan, &itms).unwrap();
            for (cause, t) in times {
                let truth = if cause == CAUSE_IDS[0] {
                    ep.true_interaction_times.0
                } else {
                    ep.true_interaction_times.1
                };
                assert!((t - truth).abs() < 1e-9, "{cause}: {t} vs {truth}");
            }
        }
    }

    #[test]
    fn zero_itm_samples_at_detection_time() {
        let eps = episodes(5, &SimConfig::default());
        let inputs: Vec<Vec<f64>> = eps
            .iter()
            .map(|e| crate::sim::make_features(e).unwrap().1)
            .collect();
        let zeros = vec![0.0; eps.len()];
        let mut itms = BTreeMap::new();
        for cause in CAUSE_IDS {
            itms.insert(
                cause.to_string(),
                train_regressor(RegressorSpec::Knn { k: 1 }, &inputs, &zeros).unwrap(),
            );
        }
        let examples = build_selflabeled_dataset(
            &eps,
            THRESHOLD,
            &plan(),
            &itms,
            &NoiseSpec::clean(0),
            N_CLASSES,
        )
        .unwrap();
        for (ex, ep) in examples.iter().zip(&eps) {
            // detection time lies past each truncated stream's end, so a
            // zero interaction time clamps to the final recorded sample
            let ends = [
                (ep.cause_stream_1.len() - 1) as f64 * ep.timestep,
                (ep.cause_stream_2.len() - 1) as f64 * ep.timestep,
            ];
            for (&ts, &end) in ex.provenance.sampled_timestamps.iter().zip(&ends) {
                assert!((ts - end).abs() < 1e-12, "sampled {ts}, stream end {end}");
            }
        }
    }

    #[test]
    fn missing_itm_is_reported() {
        let eps = episodes(3, &SimConfig::default());
        let mut itms = oracle_itms(&eps);
        itms.remove(CAUSE_IDS[1]);
        let event = detect_effect_events(&eps[0], THRESHOLD).remove(0);
        assert!(matches!(
            infer_times(&event, &plan(), &itms),
            Err(PipelineError::MissingItm(_))
        ));
    }

    #[test]
    fn window_sampling_examples() {
        let stream: Vec<StreamSample> =
            (0..10).map(|k| StreamSample { t: k as f64, features: vec![k as f64] }).collect();
        // t_if spanning back to the first sample
        let (s, clamped) = sample_cause_window(&stream, 9.0, 9.0);
        assert_eq!(s.t, 0.0);
        assert!(!clamped);
        // t_if = 0 → sample nearest the detection time
        let (s, _) = sample_cause_window(&stream, 8.7, 0.0);
        assert_eq!(s.t, 9.0);
        // exact midpoint ties toward the earlier sample
        let (s, _) = sample_cause_window(&stream, 4.5, 0.0);
        assert_eq!(s.t, 4.0);
        // out of range clamps with a flag
        let (s, clamped) = sample_cause_window(&stream, 5.0, 100.0);
        assert_eq!(s.t, 0.0);
        assert!(clamped);
        let (s, clamped) = sample_cause_window(&stream, 20.0, 0.0);
        assert_eq!(s.t, 9.0);
        assert!(clamped);
    }

    #[test]
    fn true_times_recover_initial_positions() {
        let config = SimConfig::default();
        for ep in episodes(100, &config) {
            let streams =
                [ball_stream(&ep.cause_stream_1, ep.timestep), ball_stream(&ep.cause_stream_2, ep.timestep)];
            let truths = [ep.true_interaction_times.0, ep.true_interaction_times.1];
            let inits = [ep.initial_positions.0, ep.initial_positions.1];
            for i in 0..2 {
                let (s, _) = sample_cause_window(&streams[i], ep.settle_time, truths[i]);
                for k in 0..3 {
                    let err = (s.features[k] - inits[i][k]).abs();
                    assert!(
                        err <= config.penalty_velocity * config.timestep + 1e-12,
                        "component {k} error {err}"
                    );
                }
            }
        }
    }

    #[test]
    fn clean_noise_reproduces_ground_truth() {
        let config = SimConfig::default();
        let eps = episodes(20, &config);
        let itms = oracle_itms(&eps);
        let build = || {
            build_selflabeled_dataset(
                &eps,
                THRESHOLD,
                &plan(),
                &itms,
                &NoiseSpec::clean(7),
                N_CLASSES,
            )
            .unwrap()
        };
        let examples = build();
        assert_eq!(examples, build()); // deterministic
        let dt = config.timestep;
        for (ex, ep) in examples.iter().zip(&eps) {
            assert_eq!(ex.label, ep.class_label);
            let (true_input, _) = crate::sim::make_features(ep).unwrap();
            // per ball: at most one timestep of penalty drift plus the
            // half-step rounding of the sampled timestamp; two balls and
            // the distance combinations stay within 4 drift-steps
            let tolerance = 4.0 * config.penalty_velocity * dt + 1e-9;
            for k in 0..5 {
                assert!(
                    (ex.input[k] - true_input[k]).abs() <= tolerance,
                    "feature {k}: {} vs {}",
                    ex.input[k],
                    true_input[k]
                );
            }
            // the drop interval is recovered to within one timestep
            assert!((ex.input[5] - true_input[5]).abs() <= dt + 1e-12);
        }
    }

    #[test]
    fn esd_noise_alteration_rate_matches_expectation() {
        let noise = NoiseSpec { esd_fraction: 0.5, ..NoiseSpec::clean(3) };
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        let n = 4000;
        let altered = (0..n)
            .filter(|_| noisy_label(3, N_CLASSES, &noise, &mut rng) != 3)
            .count();
        let rate = altered as f64 / n as f64;
        let expected = noise.esd_fraction * 7.0 / 8.0;
        assert!((rate - expected).abs() <= 0.03, "rate {rate} vs {expected}");
    }

    #[test]
    fn full_esd_noise_is_uniform() {
        // χ² goodness of fit against uniform over 8 classes, df = 7,
        // critical value 18.475 at p = 0.01
        let noise = NoiseSpec { esd_fraction: 1.0, ..NoiseSpec::clean(5) };
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        let n = 4000usize;
        let mut counts = [0usize; N_CLASSES];
        for _ in 0..n {
            counts[noisy_label(0, N_CLASSES, &noise, &mut rng)] += 1;
        }
        let expected = n as f64 / N_CLASSES as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 18.475, "chi2 = {chi2}");
    }

    #[test]
    fn itm_noise_matches_folded_normal_oracle() {
        let noise = NoiseSpec {
            itm_error_mean: 50.0,
            itm_error_variance: 25.0,
            ..NoiseSpec::clean(9)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        let n = 4000;
        let mean_abs: f64 = (0..n)
            .map(|_| (noisy_time(0.0, &noise, &mut rng)).abs())
            .sum::<f64>()
            / n as f64;
        // E|X| for X ~ N(μ, σ²) by direct quadrature of |x|·φ(x)
        let (mu, sigma) = (50.0, 5.0);
        let density = |x: f64| {
            let z = (x - mu) / sigma;
            x.abs() * (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
        };
        let oracle =
            adaptive_simpson(&density, mu - 10.0 * sigma, mu + 10.0 * sigma, 1e-10, 60).unwrap();
        assert!(
            (mean_abs - oracle).abs() / oracle <= 0.10,
            "sampled {mean_abs}, oracle {oracle}"
        );
    }
}
