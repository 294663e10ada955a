use serde::{Deserialize, Serialize};

use super::episode::EpisodeRecord;
use crate::critic::{kappa_bounds_ok, CalfConfig};

/// Runtime audit of the ledger guarantees for one episode.
///
/// The `Option` fields are `None` for agents without ledger guarantees
/// (plain SARSA, the stabilizer, MPC).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub applicable: bool,
    pub success_count: usize,
    /// `max{(Q̂†₀ − ν̄)/ν̄, 0}`.
    pub bound: Option<f64>,
    pub bound_ok: Option<bool>,
    pub q_monotone: Option<bool>,
    /// Smallest ledger drop over successful updates.
    pub min_decay: Option<f64>,
    pub decay_ok: Option<bool>,
    pub kappa_violations: Option<usize>,
    pub reached: bool,
    pub steps_to_goal: Option<usize>,
}

impl StabilityReport {
    /// All applicable checks pass.
    pub fn passed(&self) -> bool {
        [self.bound_ok, self.q_monotone, self.decay_ok]
            .iter()
            .all(|f| f.unwrap_or(true))
            && self.kappa_violations.unwrap_or(0) == 0
    }
}

/// Tolerance on each ledger drop, for rounding in stored values.
pub const DECAY_SLACK: f64 = 1e-8;

pub fn check_stability_invariants(record: &EpisodeRecord, cfg: &CalfConfig) -> StabilityReport {
    let success_count = record
        .rows
        .iter()
        .filter(|r| r.verdict.is_success())
        .count();
    let mut report = StabilityReport {
        applicable: record.agent.has_ledger_guarantees(),
        success_count,
        bound: None,
        bound_ok: None,
        q_monotone: None,
        min_decay: None,
        decay_ok: None,
        kappa_violations: None,
        reached: record.reached,
        steps_to_goal: record.reached.then_some(record.steps),
    };
    if !report.applicable {
        return report;
    }

    let q0 = record.rows.iter().find_map(|r| r.q_dagger);
    let bound = q0.map_or(0.0, |q| ((q - cfg.nu_bar) / cfg.nu_bar).max(0.0));
    report.bound = Some(bound);
    report.bound_ok = Some(success_count as f64 <= bound);

    let mut monotone = true;
    let mut min_decay: Option<f64> = None;
    let mut violations = 0;
    let mut last: Option<f64> = None;
    for (i, row) in record.rows.iter().enumerate() {
        let Some(q) = row.q_dagger else {
            monotone = false;
            continue;
        };
        if let Some(p) = last {
            if q > p {
                monotone = false;
            }
            if row.verdict.is_success() {
                let d = p - q;
                min_decay = Some(min_decay.map_or(d, |m: f64| m.min(d)));
            }
        }
        let sets_ledger = i == 0 || row.verdict.is_success();
        if sets_ledger && !kappa_bounds_ok(cfg, &row.state, q) {
            violations += 1;
        }
        last = Some(q);
    }
    report.q_monotone = Some(monotone);
    report.min_decay = min_decay;
    report.decay_ok = Some(min_decay.is_none_or(|d| d >= cfg.nu_bar - DECAY_SLACK));
    report.kappa_violations = Some(violations);
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{AgentKind, Verdict};
    use crate::harness::config::ExperimentConfig;
    use crate::harness::episode::run_episode;

    fn calf_record() -> (EpisodeRecord, CalfConfig) {
        let c = ExperimentConfig {
            seeds: vec![0],
            episodes: 1,
            ..Default::default()
        };
        (run_episode(&mut c.build_agent(), &c, 0, 0), c.calf)
    }

    #[test]
    fn default_calf_episode_passes() {
        let (rec, cfg) = calf_record();
        let rep = check_stability_invariants(&rec, &cfg);
        assert!(rep.applicable && rep.passed(), "{rep:?}");
        assert!(rep.success_count > 0);
    }

    #[test]
    fn fabricated_increase_is_flagged() {
        let (mut rec, cfg) = calf_record();
        let k = rec.rows.len() / 2;
        rec.rows[k].q_dagger = rec.rows[k].q_dagger.map(|q| q + 1.0);
        let rep = check_stability_invariants(&rec, &cfg);
        assert_eq!(rep.q_monotone, Some(false));
        assert!(!rep.passed());
    }

    #[test]
    fn no_successes_is_trivially_bounded() {
        let (mut rec, cfg) = calf_record();
        let q0 = rec.rows[0].q_dagger;
        for r in rec.rows.iter_mut().skip(1) {
            r.verdict = Verdict::Fallback;
            r.q_dagger = q0;
        }
        let rep = check_stability_invariants(&rec, &cfg);
        assert_eq!(rep.success_count, 0);
        assert_eq!(rep.bound_ok, Some(true));
        assert!(rep.passed());
    }

    #[test]
    fn too_many_successes_break_the_bound() {
        let (mut rec, mut cfg) = calf_record();
        cfg.nu_bar = rec.rows[0].q_dagger.unwrap();
        let rep = check_stability_invariants(&rec, &cfg);
        assert_eq!(rep.bound, Some(0.0));
        assert_eq!(rep.bound_ok, Some(false));
        rec.agent = AgentKind::Sarsa;
        let rep = check_stability_invariants(&rec, &cfg);
        assert!(!rep.applicable && rep.bound.is_none() && rep.passed());
    }
}
