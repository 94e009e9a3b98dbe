//! Periodic uplink messages.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::scenario::{NodeKind, World};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MessageEvent {
    pub machine_id: u32,
    pub created_at: f64,
    pub payload_b: u32,
}

/// Events at `phase + k * period` inside `[0, duration)`.
pub fn schedule_with_phase(machine_id: u32, payload_b: u32, period_s: f64, phase_s: f64, duration_s: f64) -> Vec<MessageEvent> {
    let mut out = Vec::new();
    let mut k = 0u32;
    loop {
        let t = phase_s + k as f64 * period_s;
        if t >= duration_s {
            break;
        }
        out.push(MessageEvent { machine_id, created_at: t, payload_b });
        k += 1;
    }
    out
}

/// Per-machine schedule with a phase drawn uniformly in `[0, period)`.
pub fn schedule(machine_id: u32, payload_b: u32, period_s: f64, duration_s: f64, rng: &mut ChaCha8Rng) -> Vec<MessageEvent> {
    let phase = rng.random::<f64>() * period_s;
    schedule_with_phase(machine_id, payload_b, period_s, phase, duration_s)
}

/// Payload and period of a machine kind.
pub fn profile_for(cfg: &ScenarioConfig, kind: NodeKind) -> Option<(u32, f64)> {
    match kind {
        NodeKind::StationaryMachine => Some((cfg.stationary_payload_b, cfg.stationary_period_s)),
        NodeKind::WearableMachine => Some((cfg.wearable_payload_b, cfg.wearable_period_s)),
        _ => None,
    }
}

/// Schedules for every machine of the world, one inner vector per machine in
/// id order. Phases are drawn in id order from `rng`.
pub fn schedule_all(cfg: &ScenarioConfig, world: &World, rng: &mut ChaCha8Rng) -> Vec<Vec<MessageEvent>> {
    world
        .ids
        .machines()
        .map(|id| {
            let (payload, period) = profile_for(cfg, world.nodes[id as usize].kind).expect("machine kind");
            schedule(id, payload, period, cfg.sim_duration_s, rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};
    use crate::scenario::build_world;
    use rand::SeedableRng;

    #[test]
    fn stationary_600s_gives_120() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let ev = schedule(0, 10, 5.0, 600.0, &mut rng);
            assert_eq!(ev.len(), 120);
            assert!(ev.iter().all(|e| e.payload_b == 10 && e.created_at < 600.0));
            assert!(ev.windows(2).all(|w| w[1].created_at > w[0].created_at));
        }
    }

    #[test]
    fn wearable_59s_phase_zero_gives_one() {
        let ev = schedule_with_phase(7, 100, 60.0, 0.0, 59.0);
        assert_eq!(ev, vec![MessageEvent { machine_id: 7, created_at: 0.0, payload_b: 100 }]);
    }

    #[test]
    fn zero_duration_is_empty() {
        assert!(schedule_with_phase(0, 10, 5.0, 0.0, 0.0).is_empty());
    }

    #[test]
    fn default_offered_load_matches_closed_form() {
        let cfg = ScenarioConfig::default();
        let world = build_world(&cfg, &mut stream_rng(1, Stream::Placement)).unwrap();
        let all = schedule_all(&cfg, &world, &mut stream_rng(1, Stream::Traffic));
        let stationary: usize = all[..2000].iter().map(Vec::len).sum();
        let wearable: usize = all[2000..].iter().map(Vec::len).sum();
        assert_eq!(stationary, 2000 * 120);
        assert_eq!(wearable, 3000 * 10);
    }
}
