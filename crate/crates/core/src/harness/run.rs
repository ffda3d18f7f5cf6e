//! Running the learners against simulated buyers.

use std::time::Instant;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adversary::adversary_sequence;
use super::config::{ExperimentConfig, Setting};
use crate::discretization::{build_space, GridParams, SizeReport};
use crate::error::{PricingError, Result};
use crate::ftpl::{default_theta, FtplState};
use crate::offline::{brute_force_opt, ORACLE_MAX_N, ORACLE_MAX_TYPES};
use crate::payoff::PayoffTable;
use crate::ucb::{Arm, UcbState};
use crate::valuation::{measure_constants_all, MeasuredConstants};

/// Added to the run seed to seed the learner's generator.
pub const LEARNER_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;
/// Added to the run seed to pick the be-the-leader comparators.
pub const AUDIT_STREAM: u64 = 0xD1B5_4A32_D192_ED03;

/// Relative slack of the be-the-leader check.
const BTL_SLACK: f64 = 1e-9;

/// One market round as seen by the harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: u64,
    /// Position of the posted curve; -1 for the round-1 zero curve.
    pub curve_idx: i64,
    pub buyer_type: usize,
    pub amount: usize,
    pub payment: f64,
    /// The type when a purchase happened, `"none"` otherwise.
    #[serde(with = "feedback")]
    pub feedback: Option<usize>,
    pub cum_revenue: f64,
    pub cum_regret: f64,
}

mod feedback {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<usize>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(i) => s.serialize_str(&i.to_string()),
            None => s.serialize_str("none"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<usize>, D::Error> {
        let s = String::deserialize(d)?;
        if s == "none" {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(D::Error::custom)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Checkpoint {
    pub t: u64,
    pub cum_revenue: f64,
    pub cum_regret: f64,
}

/// What regret is measured against.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Benchmark {
    /// `opt_over_space` (stochastic) or `best_in_hindsight_over_space`.
    pub label: &'static str,
    /// Per-round expected revenue (stochastic) or total hindsight revenue.
    pub value: f64,
    pub curve_idx: usize,
}

/// Space optimum against the brute-force oracle under the true distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleGap {
    pub resolution: f64,
    pub oracle_revenue: f64,
    pub space_revenue: f64,
    pub gap: f64,
}

/// How often `|q_bar - q| > sqrt(ln T / T_count)` over (type, round) pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coverage {
    pub pairs: u64,
    pub violations: u64,
}

impl Coverage {
    pub fn rate(&self) -> f64 {
        if self.pairs == 0 {
            0.0
        } else {
            self.violations as f64 / self.pairs as f64
        }
    }
}

/// Runtime checks of the FTPL reward construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FtplAudit {
    pub rounds: u64,
    /// Rounds where the chosen curve's reward differs from the payment.
    pub feedback_mismatches: u64,
    /// (round, comparator) pairs where the reward is below the payment the
    /// true type would have made.
    pub upper_bound_violations: u64,
    pub comparators: usize,
    pub btl_checks: u64,
    pub btl_violations: u64,
    /// Largest `rhs - lhs` seen in the be-the-leader check.
    pub btl_max_deficit: f64,
    /// Curve groups scanned per selection.
    pub candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub setting: Setting,
    pub seed: u64,
    pub horizon: u64,
    pub config: ExperimentConfig,
    pub constants: MeasuredConstants,
    pub space: SizeReport,
    pub space_size: usize,
    pub benchmark: Benchmark,
    pub total_revenue: f64,
    pub final_regret: f64,
    pub checkpoints: Vec<Checkpoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleGap>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coverage: Option<Coverage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit: Option<FtplAudit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<RoundRecord>,
    pub summary: RunSummary,
}

/// Everything about a run that does not depend on the seed.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub horizon: u64,
    pub epsilon: f64,
    pub constants: MeasuredConstants,
    pub table: PayoffTable,
}

/// Builds the space and its payoff table for one horizon.
pub fn prepare(config: &ExperimentConfig, horizon: u64) -> Result<Prepared> {
    config
        .validate()
        .map_err(|(s, k, msg)| PricingError::Config(format!("{s}.{k}: {msg}")))?;
    let instance = config.market_instance()?;
    let measured = measure_constants_all(instance.valuations());
    let constants = MeasuredConstants {
        smoothness: instance.smoothness.unwrap_or(measured.smoothness),
        diminishing: instance.diminishing.unwrap_or(measured.diminishing),
    };
    let epsilon = config.epsilon_for(horizon);
    let params = GridParams::new(epsilon, instance.num_types(), instance.n_total())
        .with_smoothness(constants.smoothness)
        .with_diminishing(constants.diminishing);
    let mut space = build_space(&params, config.space.scheme)?.with_cap(config.space.cap);
    if config.space.prune {
        space = space.pruned_for(&instance)?;
    }
    let table = PayoffTable::build(&instance, &space)?;
    Ok(Prepared {
        config: config.clone(),
        horizon,
        epsilon,
        constants,
        table,
    })
}

/// Rounds at which the summary records regret: powers of two, `T/4`, `T/2`
/// and `T`.
pub fn checkpoints(horizon: u64) -> Vec<u64> {
    let mut out: Vec<u64> = (0..64).map(|k| 1u64 << k).take_while(|&p| p <= horizon).collect();
    out.extend([horizon / 4, horizon / 2, horizon].into_iter().filter(|&t| t > 0));
    out.sort_unstable();
    out.dedup();
    out
}

fn collect_checkpoints(records: &[RoundRecord], horizon: u64) -> Vec<Checkpoint> {
    checkpoints(horizon)
        .into_iter()
        .map(|t| {
            let r = &records[(t - 1) as usize];
            Checkpoint {
                t,
                cum_revenue: r.cum_revenue,
                cum_regret: r.cum_regret,
            }
        })
        .collect()
}

fn base_summary(prep: &Prepared, setting: Setting, seed: u64, benchmark: Benchmark) -> RunSummary {
    let mut config = prep.config.clone();
    config.run.horizon = prep.horizon;
    config.run.seeds = vec![seed];
    RunSummary {
        setting,
        seed,
        horizon: prep.horizon,
        config,
        constants: prep.constants,
        space: prep.table.space().size_report(),
        space_size: prep.table.num_curves(),
        benchmark,
        total_revenue: 0.0,
        final_regret: 0.0,
        checkpoints: Vec::new(),
        oracle: None,
        theta: None,
        coverage: None,
        audit: None,
        wall_clock_seconds: None,
    }
}

/// Stochastic buyers drawn i.i.d. from the configured distribution, priced by
/// the optimistic learner.
pub fn run_stochastic(config: &ExperimentConfig, seed: u64) -> Result<RunOutput> {
    run_stochastic_prepared(&prepare(config, config.run.horizon)?, seed)
}

pub fn run_stochastic_prepared(prep: &Prepared, seed: u64) -> Result<RunOutput> {
    let start = Instant::now();
    let q = prep.config.distribution()?;
    let table = &prep.table;
    let instance = table.instance();
    let (opt_idx, opt) = table.best_linear(q.weights());
    let mut summary = base_summary(
        prep,
        Setting::Stochastic,
        seed,
        Benchmark {
            label: "opt_over_space",
            value: opt,
            curve_idx: opt_idx,
        },
    );
    if prep.config.run.oracle_gap && instance.n_total() <= ORACLE_MAX_N && instance.num_types() <= ORACLE_MAX_TYPES {
        let resolution = prep.config.run.oracle_resolution;
        let oracle = brute_force_opt(instance, &q, resolution)?;
        summary.oracle = Some(OracleGap {
            resolution,
            oracle_revenue: oracle.revenue,
            space_revenue: opt,
            gap: oracle.revenue - opt,
        });
    }

    let horizon = prep.horizon;
    let m = instance.num_types();
    let n_total = instance.n_total();
    let sampler = WeightedIndex::new(q.weights())
        .map_err(|e| PricingError::InvalidDistribution(e.to_string()))?;
    let mut env = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(horizon as usize);
    let mut coverage = Coverage { pairs: 0, violations: 0 };
    let mut cum_revenue = 0.0;
    if horizon > 0 {
        let mut ucb = UcbState::new(table, horizon)?;
        for t in 1..=horizon {
            if t >= 2 {
                let q_bar = ucb.q_bar();
                for (i, &qi) in q.weights().iter().enumerate() {
                    coverage.pairs += 1;
                    if (q_bar[i] - qi).abs() > ucb.radius(i) {
                        coverage.violations += 1;
                    }
                }
            }
            let arm = ucb.next_arm()?;
            let i = sampler.sample(&mut env);
            let (curve_idx, amount, payment) = match arm {
                Arm::Zero => (-1, n_total, 0.0),
                Arm::Curve(c) => (c as i64, table.amount(c, i), table.payment(c, i)),
            };
            let revealed = (amount > 0).then_some(i);
            ucb.update(arm, revealed)?;
            cum_revenue += payment;
            records.push(RoundRecord {
                t,
                curve_idx,
                buyer_type: i,
                amount,
                payment,
                feedback: revealed,
                cum_revenue,
                cum_regret: t as f64 * opt - cum_revenue,
            });
        }
    }
    debug_assert_eq!(m, q.len());
    summary.total_revenue = cum_revenue;
    summary.final_regret = horizon as f64 * opt - cum_revenue;
    summary.checkpoints = collect_checkpoints(&records, horizon);
    summary.coverage = Some(coverage);
    if prep.config.run.record_wall_clock {
        summary.wall_clock_seconds = Some(start.elapsed().as_secs_f64());
    }
    Ok(RunOutput { records, summary })
}

/// An oblivious type sequence priced by follow-the-perturbed-leader.
pub fn run_adversarial(config: &ExperimentConfig, seed: u64) -> Result<RunOutput> {
    run_adversarial_prepared(&prepare(config, config.run.horizon)?, seed)
}

pub fn run_adversarial_prepared(prep: &Prepared, seed: u64) -> Result<RunOutput> {
    let start = Instant::now();
    let table = &prep.table;
    let m = table.num_types();
    let horizon = prep.horizon;
    // fixed before any learner state exists
    let sequence = adversary_sequence(prep.config.adversary()?, m, horizon, seed)?;

    let theta = match prep.config.run.theta {
        Some(t) => t,
        None => default_theta(table.num_curves(), m, horizon.max(1))?,
    };
    let mut learner_rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(LEARNER_STREAM));
    let mut ftpl = FtplState::new(table, theta, &mut learner_rng)?;
    let mut audit_rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(AUDIT_STREAM));
    let comparators: Vec<usize> = (0..prep.config.run.comparators)
        .map(|_| audit_rng.gen_range(0..table.num_curves()))
        .collect();
    let mut audit = FtplAudit {
        rounds: horizon,
        feedback_mismatches: 0,
        upper_bound_violations: 0,
        comparators: comparators.len(),
        btl_checks: 0,
        btl_violations: 0,
        btl_max_deficit: f64::NEG_INFINITY,
        candidates: ftpl.candidates(),
    };

    let mut chosen = ftpl.select_index();
    let first_theta = ftpl.perturbation(chosen);
    let mut leader_sum = 0.0;
    let mut counts = vec![0.0; m];
    let mut cum_revenue = 0.0;
    let mut records = Vec::with_capacity(sequence.len());
    for (k, &i) in sequence.iter().enumerate() {
        let t = k as u64 + 1;
        let amount = table.amount(chosen, i);
        let payment = table.payment(chosen, i);
        let revealed = (amount > 0).then_some(i);
        let reward = ftpl.update(chosen, revealed)?;
        if reward.value(table, chosen) != payment {
            audit.feedback_mismatches += 1;
        }
        for &p in &comparators {
            if reward.value(table, p) < table.payment(p, i) {
                audit.upper_bound_violations += 1;
            }
        }
        let next = ftpl.select_index();
        leader_sum += reward.value(table, next);
        let lhs = leader_sum + first_theta;
        for &p in &comparators {
            let rhs = ftpl.cumulative_reward(p) + ftpl.perturbation(p);
            let deficit = rhs - lhs;
            audit.btl_checks += 1;
            audit.btl_max_deficit = audit.btl_max_deficit.max(deficit);
            if deficit > BTL_SLACK * (1.0 + rhs.abs()) {
                audit.btl_violations += 1;
            }
        }

        counts[i] += 1.0;
        cum_revenue += payment;
        records.push(RoundRecord {
            t,
            curve_idx: chosen as i64,
            buyer_type: i,
            amount,
            payment,
            feedback: revealed,
            cum_revenue,
            cum_regret: table.max_linear_value(&counts) - cum_revenue,
        });
        chosen = next;
    }

    let (best_idx, best) = table.best_linear(&counts);
    let mut summary = base_summary(
        prep,
        Setting::Adversarial,
        seed,
        Benchmark {
            label: "best_in_hindsight_over_space",
            value: best,
            curve_idx: best_idx,
        },
    );
    summary.total_revenue = cum_revenue;
    summary.final_regret = best - cum_revenue;
    summary.checkpoints = collect_checkpoints(&records, horizon);
    summary.theta = Some(theta);
    if audit.btl_checks == 0 {
        audit.btl_max_deficit = 0.0;
    }
    summary.audit = Some(audit);
    if prep.config.run.record_wall_clock {
        summary.wall_clock_seconds = Some(start.elapsed().as_secs_f64());
    }
    Ok(RunOutput { records, summary })
}
