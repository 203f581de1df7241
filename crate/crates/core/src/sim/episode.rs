//! Single-episode rigid-sphere dynamics.
//!
//! Integration is semi-implicit Euler (velocity first, then position),
//! which loses a small amount of mechanical energy every step and keeps
//! bounce sequences dissipative. Ground bounces reflect the vertical
//! velocity with the restitution factor; ball-ball contacts use the
//! equal-mass elastic impulse. There is no surface friction: "settling"
//! means the speed stays below `settle_speed` for `settle_steps`
//! consecutive steps, slow residual drift included.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    categorize_effect, SimConfig, SimError, DROP_INTERVAL_MAX, DROP_START_MAX, H1_RANGE,
    H2_RANGE, SPAWN_COLLIDE_PROB, SPAWN_COLLIDE_RANGE, SPAWN_MISS_RANGE, WIND_DURATION,
};

type V3 = [f64; 3];

/// Exponential decay rate (1/s) for horizontal speed while resting on the
/// surface.
const GROUND_DAMPING: f64 = 2.0;

fn add(a: V3, b: V3) -> V3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn scale(a: V3, s: f64) -> V3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: V3) -> f64 {
    dot(a, a).sqrt()
}

/// Kinematic state of one ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallState {
    pub position: V3,
    pub velocity: V3,
}

/// Joint post-settling summary sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectSnapshot {
    pub t: f64,
    pub ball_1: BallState,
    pub ball_2: BallState,
    /// Displacement ball 1 → ball 2.
    pub distance_vector: V3,
}

/// Everything recorded about one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    /// Per-ball state history, one entry per step starting at t = 0,
    /// truncated at that ball's settling step.
    pub cause_stream_1: Vec<BallState>,
    pub cause_stream_2: Vec<BallState>,
    /// Joint summary recorded after both balls settle.
    pub effect_stream: Vec<EffectSnapshot>,
    /// Stream sampling interval (the integration timestep).
    pub timestep: f64,
    pub drop_times: (f64, f64),
    pub settle_time: f64,
    /// False when the episode hit `max_duration` without settling.
    pub settled: bool,
    pub collided: bool,
    pub rebound_counts: (u32, u32),
    /// Positions at the moment of each ball's release.
    pub initial_positions: (V3, V3),
    pub final_states: (BallState, BallState),
    /// Displacement ball 1 final → ball 2 final.
    pub distance_vector: V3,
    pub class_label: usize,
    /// (settle_time − t₁, settle_time − t₂).
    pub true_interaction_times: (f64, f64),
}

impl EpisodeRecord {
    pub fn final_positions(&self) -> (V3, V3) {
        (self.final_states.0.position, self.final_states.1.position)
    }

    /// Cause-stream state at time `t` (nearest step, clamped to the
    /// recorded range).
    pub fn state_at(stream: &[BallState], timestep: f64, t: f64) -> BallState {
        let idx = (t / timestep).round().max(0.0) as usize;
        stream[idx.min(stream.len() - 1)]
    }
}

/// All random draws for one episode, fixed up front so the integration
/// itself is deterministic and wind-on/wind-off reruns stay aligned.
#[derive(Debug, Clone, Copy)]
pub(crate) struct EpisodeInit {
    pub ball1_xy: [f64; 2],
    /// Ball 2 planar offset from ball 1, polar form.
    pub offset_radius: f64,
    pub offset_angle: f64,
    pub heights: (f64, f64),
    pub drop_times: (f64, f64),
    /// Pre-drop drift directions (planar angles).
    pub penalty_angles: (f64, f64),
    /// Which ball the wind acts on (0 or 1).
    pub wind_ball: usize,
    pub wind_angle: f64,
    pub wind_start: f64,
}

impl EpisodeInit {
    pub(crate) fn sample(config: &SimConfig, rng: &mut ChaCha8Rng) -> Self {
        let e = config.spawn_region_half_extent;
        let ball1_xy = [rng.gen_range(-e..=e), rng.gen_range(-e..=e)];
        let offset_range = if rng.gen_bool(SPAWN_COLLIDE_PROB) {
            SPAWN_COLLIDE_RANGE
        } else {
            SPAWN_MISS_RANGE
        };
        let offset_radius = rng.gen_range(offset_range.0..=offset_range.1);
        let offset_angle = rng.gen_range(0.0..std::f64::consts::TAU);
        let heights = (
            rng.gen_range(H1_RANGE.0..=H1_RANGE.1),
            rng.gen_range(H2_RANGE.0..=H2_RANGE.1),
        );
        let t1 = rng.gen_range(0.0..=DROP_START_MAX);
        let t2 = t1 + rng.gen_range(0.0..=DROP_INTERVAL_MAX);
        let penalty_angles = (
            rng.gen_range(0.0..std::f64::consts::TAU),
            rng.gen_range(0.0..std::f64::consts::TAU),
        );
        let wind_ball = usize::from(rng.gen::<bool>());
        let wind_angle = rng.gen_range(0.0..std::f64::consts::TAU);
        let wind_start = rng.gen_range(config.wind_window.0..=config.wind_window.1);
        Self {
            ball1_xy,
            offset_radius,
            offset_angle,
            heights,
            drop_times: (t1, t2),
            penalty_angles,
            wind_ball,
            wind_angle,
            wind_start,
        }
    }
}

/// Equal-mass elastic impulse along the unit normal `n` (ball 1 → ball 2):
/// the normal velocity components swap, tangential components are kept.
pub(crate) fn elastic_impulse(v1: V3, v2: V3, n: V3) -> (V3, V3) {
    let rel = dot(sub(v2, v1), n);
    (add(v1, scale(n, rel)), sub(v2, scale(n, rel)))
}

/// Simulate one episode from a dedicated RNG stream. Deterministic:
/// identical `(config, rng state, magnitude_threshold)` reproduce the
/// record bit for bit.
pub fn simulate_episode(
    config: &SimConfig,
    rng: &mut ChaCha8Rng,
    magnitude_threshold: f64,
) -> Result<EpisodeRecord, SimError> {
    config.validate()?;
    let init = EpisodeInit::sample(config, rng);
    Ok(run_episode(config, &init, magnitude_threshold))
}

pub(crate) fn run_episode(
    config: &SimConfig,
    init: &EpisodeInit,
    magnitude_threshold: f64,
) -> EpisodeRecord {
    let dt = config.timestep;
    let r = config.ball_radius;
    let pen = config.penalty_velocity;

    let spawn = [
        [init.ball1_xy[0], init.ball1_xy[1], init.heights.0],
        [
            init.ball1_xy[0] + init.offset_radius * init.offset_angle.cos(),
            init.ball1_xy[1] + init.offset_radius * init.offset_angle.sin(),
            init.heights.1,
        ],
    ];
    let drift = [
        [pen * init.penalty_angles.0.cos(), pen * init.penalty_angles.0.sin(), 0.0],
        [pen * init.penalty_angles.1.cos(), pen * init.penalty_angles.1.sin(), 0.0],
    ];
    let wind = scale(
        [init.wind_angle.cos(), init.wind_angle.sin(), 0.0],
        config.wind_magnitude,
    );
    let drop = [init.drop_times.0, init.drop_times.1];

    let mut balls = [
        BallState { position: spawn[0], velocity: drift[0] },
        BallState { position: spawn[1], velocity: drift[1] },
    ];
    let mut streams = [vec![balls[0]], vec![balls[1]]];
    let mut released = [false; 2];
    let mut initial_positions = [spawn[0], spawn[1]];
    let mut rebounds = [0u32; 2];
    let mut collided = false;
    let mut slow_steps = [0usize; 2];
    // (settle step index, settle time) once a ball has stayed slow
    let mut settle: [Option<(usize, f64)>; 2] = [None, None];
    // Below this bounce speed a ball is clamped to rest on the surface
    // instead of entering an endless micro-bounce sequence.
    let rest_speed = 2.0 * config.gravity * dt;

    let max_steps = (config.max_duration / dt).ceil() as usize;
    let mut step = 0;
    while step < max_steps {
        step += 1;
        let t = step as f64 * dt;

        for i in 0..2 {
            // release at the first step boundary past the drop time, so the
            // stream sample at the drop moment is still the held state
            if !released[i] && t - dt >= drop[i] {
                released[i] = true;
                initial_positions[i] = balls[i].position;
            }
            if released[i] {
                let mut accel = [0.0, 0.0, -config.gravity];
                if i == init.wind_ball
                    && t >= init.wind_start
                    && t < init.wind_start + WIND_DURATION
                {
                    accel = add(accel, wind);
                }
                balls[i].velocity = add(balls[i].velocity, scale(accel, dt));
                balls[i].position = add(balls[i].position, scale(balls[i].velocity, dt));
                // bounce on the surface (only inside its extent)
                let p = balls[i].position;
                if p[2] < r
                    && balls[i].velocity[2] < 0.0
                    && p[0].abs() <= config.surface_half_extent
                    && p[1].abs() <= config.surface_half_extent
                {
                    balls[i].position[2] = r;
                    let vz = -config.restitution * balls[i].velocity[2];
                    if vz < rest_speed {
                        balls[i].velocity[2] = 0.0;
                    } else {
                        balls[i].velocity[2] = vz;
                        rebounds[i] += 1;
                    }
                }
                // grounded balls shed horizontal speed (contact damping);
                // without it a post-collision slide would never settle
                if balls[i].position[2] <= r && balls[i].velocity[2] == 0.0 {
                    let damp = (-GROUND_DAMPING * dt).exp();
                    balls[i].velocity[0] *= damp;
                    balls[i].velocity[1] *= damp;
                }
            } else {
                // held pre-drop: pure horizontal drift
                balls[i].position = add(balls[i].position, scale(drift[i], dt));
            }
        }

        if released[0] && released[1] {
            let gap = sub(balls[1].position, balls[0].position);
            let dist = norm(gap);
            if dist < 2.0 * r && dist > 0.0 {
                collided = true;
                let n = scale(gap, 1.0 / dist);
                if dot(sub(balls[1].velocity, balls[0].velocity), n) < 0.0 {
                    let (v1, v2) = elastic_impulse(balls[0].velocity, balls[1].velocity, n);
                    balls[0].velocity = v1;
                    balls[1].velocity = v2;
                }
                // resolve the overlap symmetrically
                let push = scale(n, 0.5 * (2.0 * r - dist));
                balls[0].position = sub(balls[0].position, push);
                balls[1].position = add(balls[1].position, push);
            }
        }

        streams[0].push(balls[0]);
        streams[1].push(balls[1]);

        for i in 0..2 {
            if !released[i] {
                continue;
            }
            if norm(balls[i].velocity) < config.settle_speed {
                slow_steps[i] += 1;
                if slow_steps[i] >= config.settle_steps && settle[i].is_none() {
                    settle[i] = Some((step, t));
                }
            } else {
                slow_steps[i] = 0;
                settle[i] = None; // e.g. knocked loose by a late collision
            }
        }
        if settle.iter().all(Option::is_some) {
            break;
        }
    }

    let settled = settle.iter().all(Option::is_some);
    let end_t = step as f64 * dt;
    let settle_time = if settled {
        settle[0].unwrap().1.max(settle[1].unwrap().1)
    } else {
        end_t
    };
    let final_states = (balls[0], balls[1]);
    let distance_vector = sub(balls[1].position, balls[0].position);
    let class_label = categorize_effect(distance_vector, magnitude_threshold);

    // truncate each cause stream at its own settling step
    for (i, stream) in streams.iter_mut().enumerate() {
        if let Some((idx, _)) = settle[i] {
            stream.truncate(idx + 1);
        }
    }

    // short post-settling tail as the effect stream
    let mut effect_stream = Vec::with_capacity(config.settle_steps);
    if settled {
        for k in 0..config.settle_steps {
            let t = end_t + (k + 1) as f64 * dt;
            for ball in &mut balls {
                if ball.position[2] > config.ball_radius {
                    ball.velocity[2] -= config.gravity * dt;
                }
                ball.position = add(ball.position, scale(ball.velocity, dt));
                if ball.position[2] < config.ball_radius {
                    ball.position[2] = config.ball_radius;
                    ball.velocity[2] = 0.0;
                }
            }
            effect_stream.push(EffectSnapshot {
                t,
                ball_1: balls[0],
                ball_2: balls[1],
                distance_vector: sub(balls[1].position, balls[0].position),
            });
        }
    }

    let [s1, s2] = streams;
    EpisodeRecord {
        cause_stream_1: s1,
        cause_stream_2: s2,
        effect_stream,
        timestep: dt,
        drop_times: init.drop_times,
        settle_time,
        settled,
        collided,
        rebound_counts: (rebounds[0], rebounds[1]),
        initial_positions: (initial_positions[0], initial_positions[1]),
        final_states,
        distance_vector,
        class_label,
        true_interaction_times: (settle_time - init.drop_times.0, settle_time - init.drop_times.1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream_rng;

    fn base_init() -> EpisodeInit {
        EpisodeInit {
            ball1_xy: [1.0, -2.0],
            offset_radius: 3.0,
            offset_angle: 0.7,
            heights: (10.0, 20.0),
            drop_times: (0.1, 0.3),
            penalty_angles: (0.5, 4.0),
            wind_ball: 1,
            wind_angle: 1.0,
            wind_start: 0.4,
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let config = SimConfig::default();
        let a = simulate_episode(&config, &mut stream_rng(7, 1, 0), 2.0).unwrap();
        let b = simulate_episode(&config, &mut stream_rng(7, 1, 0), 2.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn no_horizontal_forces_settle_at_spawn() {
        let mut config = SimConfig::default();
        config.penalty_velocity = 0.0;
        let mut init = base_init();
        init.heights = (10.0, 20.0);
        let ep = run_episode(&config, &init, 2.0);
        assert!(ep.settled);
        assert!(!ep.collided);
        let (p1, p2) = ep.final_positions();
        assert!((p1[0] - 1.0).abs() < 1e-9 && (p1[1] + 2.0).abs() < 1e-9);
        let expected2 = [1.0 + 3.0 * 0.7f64.cos(), -2.0 + 3.0 * 0.7f64.sin()];
        assert!((p2[0] - expected2[0]).abs() < 1e-9 && (p2[1] - expected2[1]).abs() < 1e-9);
    }

    #[test]
    fn concentric_spawn_collides() {
        let mut init = base_init();
        init.offset_radius = 0.5;
        let ep = run_episode(&SimConfig::default(), &init, 2.0);
        assert!(ep.collided);
    }

    #[test]
    fn wind_changes_the_outcome() {
        let config0 = SimConfig::default();
        let mut config1 = SimConfig::default();
        config1.wind_magnitude = 0.5;
        let a = simulate_episode(&config0, &mut stream_rng(3, 1, 5), 2.0).unwrap();
        let b = simulate_episode(&config1, &mut stream_rng(3, 1, 5), 2.0).unwrap();
        assert_ne!(a.distance_vector, b.distance_vector);
    }

    #[test]
    fn impulse_conserves_momentum_and_energy() {
        let mut rng = stream_rng(11, 2, 0);
        for _ in 0..50 {
            let v1: V3 = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            let v2: V3 = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            let raw: V3 = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let n = scale(raw, 1.0 / norm(raw));
            let (w1, w2) = elastic_impulse(v1, v2, n);
            for k in 0..3 {
                assert!((v1[k] + v2[k] - w1[k] - w2[k]).abs() < 1e-9);
            }
            let e_before = dot(v1, v1) + dot(v2, v2);
            let e_after = dot(w1, w1) + dot(w2, w2);
            assert!((e_before - e_after).abs() < 1e-9);
        }
    }

    #[test]
    fn mechanical_energy_is_nonincreasing_after_drop() {
        let config = SimConfig::default();
        let init = base_init(); // offset 3.0 > 2·radius, no collision
        let ep = run_episode(&config, &init, 2.0);
        assert!(!ep.collided);
        let dt = ep.timestep;
        for (stream, drop_t) in
            [(&ep.cause_stream_1, ep.drop_times.0), (&ep.cause_stream_2, ep.drop_times.1)]
        {
            let first = (drop_t / dt).ceil() as usize + 1;
            let energy = |s: &BallState| {
                0.5 * dot(s.velocity, s.velocity) + config.gravity * s.position[2]
            };
            let mut prev = energy(&stream[first]);
            for s in &stream[first + 1..] {
                let e = energy(s);
                assert!(e <= prev + 1e-9, "energy rose from {prev} to {e}");
                prev = e;
            }
        }
    }

    #[test]
    fn true_interaction_times_are_positive_and_bounded() {
        let config = SimConfig::default();
        for i in 0..10 {
            let ep = simulate_episode(&config, &mut stream_rng(5, 3, i), 2.0).unwrap();
            assert!(ep.settled);
            let (t1, t2) = ep.true_interaction_times;
            assert!(t1 > 0.0 && t2 > 0.0);
            assert!(t1 <= config.max_duration && t2 <= config.max_duration);
            assert!(ep.settle_time >= ep.drop_times.0.max(ep.drop_times.1));
        }
    }

    #[test]
    fn pre_drop_drift_is_linear_in_time() {
        let config = SimConfig::default();
        let init = base_init();
        let ep = run_episode(&config, &init, 2.0);
        let dt = ep.timestep;
        let steps_before_drop = (init.drop_times.0 / dt).floor() as usize;
        let a = ep.cause_stream_1[0].position;
        let b = ep.cause_stream_1[steps_before_drop].position;
        let drift = norm(sub(b, a));
        let expected = config.penalty_velocity * steps_before_drop as f64 * dt;
        assert!((drift - expected).abs() < 1e-12, "drift {drift} vs {expected}");
    }

    #[test]
    fn class_label_matches_distance_vector() {
        for i in 0..10 {
            let ep =
                simulate_episode(&SimConfig::default(), &mut stream_rng(9, 4, i), 2.0).unwrap();
            assert_eq!(ep.class_label, categorize_effect(ep.distance_vector, 2.0));
        }
    }

    #[test]
    fn state_at_recovers_initial_position_near_drop_time() {
        let config = SimConfig::default();
        let init = base_init();
        let ep = run_episode(&config, &init, 2.0);
        let s = EpisodeRecord::state_at(&ep.cause_stream_1, ep.timestep, ep.drop_times.0);
        let err = norm(sub(s.position, ep.initial_positions.0));
        assert!(err <= config.penalty_velocity * ep.timestep + 1e-12);
    }
}
