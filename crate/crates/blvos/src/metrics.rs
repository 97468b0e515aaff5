//! Error-metric characterization: ER, MED, MRED, NMED, signed error moments,
//! and the sensitivity of a metric to adjacent voltage steps.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::timesim::{SimMode, Simulator, TimedNetlist};

/// Absolute error distance between the exact and approximate products.
pub fn error_distance(exact: u64, approx: u64) -> u64 {
    exact.abs_diff(approx)
}

/// Error metrics of one configuration over one sample plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// Fraction of samples with a non-zero error distance.
    pub er: f64,
    /// Mean error distance.
    pub med: f64,
    /// Mean relative error distance over samples with a non-zero exact
    /// product.
    pub mred: f64,
    /// MED normalized by the maximum exact product (2^n − 1)².
    pub nmed: f64,
    pub mean_err: f64,
    pub var_err: f64,
    pub samples: u64,
    pub seed: u64,
    /// Samples skipped in MRED because their exact product is zero.
    pub excluded_zero_exact: u64,
    /// True when the whole input space was enumerated instead of sampled.
    pub exhaustive: bool,
    pub mode: SimMode,
}

/// How inputs are drawn: uniform pairs from a seeded generator, replaced by
/// exhaustive enumeration whenever the full space fits in the budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub count: u64,
    pub seed: u64,
    pub mode: SimMode,
}

impl SamplePlan {
    pub fn new(count: u64, seed: u64, mode: SimMode) -> Self {
        SamplePlan { count, seed, mode }
    }

    /// Default sample budget per operand width: 10,000 for 8-bit runs,
    /// 1,000,000 for wider ones.
    pub fn default_count(n: u32) -> u64 {
        if n <= 8 {
            10_000
        } else {
            1_000_000
        }
    }
}

enum Inputs {
    Exhaustive { n: u32 },
    Sampled(Vec<(u32, u32)>),
}

impl Inputs {
    fn len(&self) -> usize {
        match self {
            Inputs::Exhaustive { n } => 1usize << (2 * n),
            Inputs::Sampled(v) => v.len(),
        }
    }

    fn get(&self, i: usize) -> (u32, u32) {
        match self {
            Inputs::Exhaustive { n } => ((i >> n) as u32, (i & ((1 << n) - 1)) as u32),
            Inputs::Sampled(v) => v[i],
        }
    }
}

fn plan_inputs(n: u32, plan: &SamplePlan) -> (Inputs, bool) {
    let total = 1u128 << (2 * n);
    if total <= plan.count as u128 {
        (Inputs::Exhaustive { n }, true)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
        let mask = (1u32 << n) - 1;
        let pairs = (0..plan.count)
            .map(|_| (rng.gen::<u32>() & mask, rng.gen::<u32>() & mask))
            .collect();
        (Inputs::Sampled(pairs), false)
    }
}

/// Characterization output: the error report plus the total modeled toggle
/// energy of the evaluated trace (used for paired energy comparisons).
#[derive(Clone, Debug)]
pub struct Characterization {
    pub report: ErrorReport,
    pub energy: f64,
}

/// Run the sample plan against a configuration. RESET evaluations are
/// independent and distributed across workers; PAIRED streams are evaluated
/// in order. All reductions happen in sample-index order, so the result is
/// identical under any worker count.
pub fn characterize(tn: &Arc<TimedNetlist>, plan: &SamplePlan) -> Characterization {
    let (inputs, exhaustive) = plan_inputs(tn.n, plan);
    let evals = evaluate_inputs(tn, plan.mode, &inputs);
    reduce(tn.n, plan, exhaustive, &inputs, &evals)
}

/// As [`characterize`], also returning the raw per-sample log
/// (a, b, exact, approx).
pub fn characterize_logged(
    tn: &Arc<TimedNetlist>,
    plan: &SamplePlan,
) -> (Characterization, Vec<(u32, u32, u64, u64)>) {
    let (inputs, exhaustive) = plan_inputs(tn.n, plan);
    let evals = evaluate_inputs(tn, plan.mode, &inputs);
    let log = (0..inputs.len())
        .map(|i| {
            let (a, b) = inputs.get(i);
            (a, b, a as u64 * b as u64, evals[i].0)
        })
        .collect();
    (reduce(tn.n, plan, exhaustive, &inputs, &evals), log)
}

fn evaluate_inputs(tn: &Arc<TimedNetlist>, mode: SimMode, inputs: &Inputs) -> Vec<(u64, f64)> {
    match mode {
        SimMode::Reset => (0..inputs.len())
            .into_par_iter()
            .map_init(
                || Simulator::new(tn.clone()),
                |sim, i| {
                    let (a, b) = inputs.get(i);
                    let r = sim.run_reset((a as u64, b as u64));
                    (r.sampled, r.energy)
                },
            )
            .collect(),
        SimMode::Paired => {
            let mut sim = Simulator::new(tn.clone());
            (0..inputs.len())
                .map(|i| {
                    let (a, b) = inputs.get(i);
                    let r = sim.stream_next((a as u64, b as u64));
                    (r.sampled, r.energy)
                })
                .collect()
        }
    }
}

fn reduce(
    n: u32,
    plan: &SamplePlan,
    exhaustive: bool,
    inputs: &Inputs,
    evals: &[(u64, f64)],
) -> Characterization {
    let count = evals.len();
    let mut erroneous = 0u64;
    let mut ed_sum = 0.0f64;
    let mut mred_sum = 0.0f64;
    let mut nonzero_exact = 0u64;
    let mut signed_sum = 0.0f64;
    let mut energy = 0.0f64;
    for (i, &(approx, e)) in evals.iter().enumerate() {
        let (a, b) = inputs.get(i);
        let exact = a as u64 * b as u64;
        let ed = error_distance(exact, approx);
        if ed > 0 {
            erroneous += 1;
        }
        ed_sum += ed as f64;
        if exact > 0 {
            mred_sum += ed as f64 / exact as f64;
            nonzero_exact += 1;
        }
        signed_sum += approx as f64 - exact as f64;
        energy += e;
    }
    let samples = count as u64;
    let mean_err = signed_sum / count as f64;
    let mut var_sum = 0.0f64;
    for (i, &(approx, _)) in evals.iter().enumerate() {
        let (a, b) = inputs.get(i);
        let exact = a as u64 * b as u64;
        let d = (approx as f64 - exact as f64) - mean_err;
        var_sum += d * d;
    }
    let med = ed_sum / count as f64;
    let max_product = ((1u64 << n) - 1) as f64;
    let report = ErrorReport {
        er: erroneous as f64 / count as f64,
        med,
        mred: if nonzero_exact > 0 { mred_sum / nonzero_exact as f64 } else { 0.0 },
        nmed: med / (max_product * max_product),
        mean_err,
        var_err: var_sum / count as f64,
        samples,
        seed: plan.seed,
        excluded_zero_exact: samples - nonzero_exact,
        exhaustive,
        mode: plan.mode,
    };
    Characterization { report, energy }
}

/// Sensitivity of a metric to each adjacent voltage step:
/// `S = [Err(next lower level) − Err(level)] / [V(level) − V(next lower level)]`.
/// Levels must be given in strictly decreasing order alongside their metric
/// values.
pub fn sensitivity(levels: &[f64], values: &[f64]) -> Result<Vec<f64>, Error> {
    if levels.len() != values.len() {
        return Err(Error::LevelsMismatch(format!(
            "{} levels vs {} values",
            levels.len(),
            values.len()
        )));
    }
    if levels.len() < 2 {
        return Err(Error::LevelsMismatch("need at least two levels".into()));
    }
    for w in levels.windows(2) {
        if w[1] >= w[0] {
            return Err(Error::LevelsMismatch(
                "levels must be strictly decreasing".into(),
            ));
        }
    }
    Ok(levels
        .windows(2)
        .zip(values.windows(2))
        .map(|(lv, ev)| (ev[1] - ev[0]) / (lv[0] - lv[1]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_multiplier, BlockTag, DelayTable, MultiplierSpec, Structure};
    use crate::config::ModelConfig;
    use crate::volt::Vdd;

    fn gated_ll(n: u32, k: u32) -> Arc<TimedNetlist> {
        let mut spec = MultiplierSpec::new(n, k, Structure::Blvos0);
        spec.gated_blocks.insert(BlockTag::Ll);
        let net = build_multiplier(&spec, &DelayTable::default()).unwrap();
        Arc::new(
            TimedNetlist::new(&net, Structure::Blvos0, Vdd::Nominal, &ModelConfig::default())
                .unwrap(),
        )
    }

    #[test]
    fn error_distance_basics() {
        assert_eq!(error_distance(35055, 34912), 143);
        assert_eq!(error_distance(7, 7), 0);
        assert_eq!(error_distance(0, 9), 9);
    }

    #[test]
    fn accurate_config_has_zero_errors() {
        let net = build_multiplier(
            &MultiplierSpec::new(8, 4, Structure::Blvos0),
            &DelayTable::default(),
        )
        .unwrap();
        let tn = Arc::new(
            TimedNetlist::new(&net, Structure::Blvos0, Vdd::Nominal, &ModelConfig::default())
                .unwrap(),
        );
        for mode in [SimMode::Reset, SimMode::Paired] {
            let c = characterize(&tn, &SamplePlan::new(2000, 7, mode));
            assert_eq!(c.report.er, 0.0);
            assert_eq!(c.report.med, 0.0);
            assert_eq!(c.report.mred, 0.0);
            assert_eq!(c.report.nmed, 0.0);
        }
    }

    #[test]
    fn tiny_gated_case_matches_enumeration_oracle() {
        // Independent oracle: enumerate all 16 pairs of the 2-bit gated-LL
        // multiplier using plain arithmetic.
        let mut eds = Vec::new();
        let mut mred_terms = Vec::new();
        let mut excluded = 0u64;
        for a in 0..4u64 {
            for b in 0..4u64 {
                let exact = a * b;
                let approx = a * b - (a & 1) * (b & 1);
                let ed = exact.abs_diff(approx);
                eds.push(ed);
                if exact > 0 {
                    mred_terms.push(ed as f64 / exact as f64);
                } else {
                    excluded += 1;
                }
            }
        }
        let oracle_er = eds.iter().filter(|&&e| e > 0).count() as f64 / 16.0;
        let oracle_med = eds.iter().sum::<u64>() as f64 / 16.0;
        let oracle_mred = mred_terms.iter().sum::<f64>() / mred_terms.len() as f64;
        let oracle_nmed = oracle_med / 9.0;

        let tn = gated_ll(2, 1);
        let plan = SamplePlan::new(16, 1, SimMode::Reset);
        let c = characterize(&tn, &plan);
        assert!(c.report.exhaustive);
        assert_eq!(c.report.samples, 16);
        assert_eq!(c.report.excluded_zero_exact, excluded);
        assert_eq!(c.report.er, oracle_er);
        assert_eq!(c.report.med, oracle_med);
        assert_eq!(c.report.mred, oracle_mred);
        assert_eq!(c.report.nmed, oracle_nmed);
        // Frozen expected values.
        assert!((c.report.er - 0.25).abs() < 1e-12);
        assert!((c.report.med - 0.25).abs() < 1e-12);
        assert!((c.report.nmed - 0.25 / 9.0).abs() < 1e-12);
        assert!((c.report.mred - 16.0 / 81.0).abs() < 1e-12);
    }

    #[test]
    fn exhaustive_n4_matches_brute_force_bit_exact() {
        let tn = gated_ll(4, 2);
        let plan = SamplePlan::new(1 << 8, 99, SimMode::Reset);
        let c = characterize(&tn, &plan);
        // Brute force in the same enumeration order.
        let mut erroneous = 0u64;
        let mut ed_sum = 0.0f64;
        let mut mred_sum = 0.0f64;
        let mut nonzero = 0u64;
        for a in 0..16u64 {
            for b in 0..16u64 {
                let exact = a * b;
                let approx = a * b - (a & 3) * (b & 3);
                let ed = exact.abs_diff(approx) as f64;
                if ed > 0.0 {
                    erroneous += 1;
                }
                ed_sum += ed;
                if exact > 0 {
                    mred_sum += ed / exact as f64;
                    nonzero += 1;
                }
            }
        }
        assert_eq!(c.report.er, erroneous as f64 / 256.0);
        assert_eq!(c.report.med, ed_sum / 256.0);
        assert_eq!(c.report.mred, mred_sum / nonzero as f64);
        assert_eq!(c.report.nmed, (ed_sum / 256.0) / (15.0 * 15.0));
    }

    #[test]
    fn seeded_runs_reproduce() {
        let tn = gated_ll(8, 4);
        let plan = SamplePlan::new(500, 1234, SimMode::Reset);
        let a = characterize(&tn, &plan);
        let b = characterize(&tn, &plan);
        assert_eq!(a.report, b.report);
        assert_eq!(a.energy, b.energy);
    }

    #[test]
    fn variance_is_nonnegative_and_consistent() {
        let tn = gated_ll(8, 3);
        let c = characterize(&tn, &SamplePlan::new(1000, 5, SimMode::Reset));
        assert!(c.report.var_err >= 0.0);
        // mean² ≤ mean of squares
        let mean_sq = c.report.var_err + c.report.mean_err * c.report.mean_err;
        assert!(c.report.mean_err * c.report.mean_err <= mean_sq + 1e-9);
    }

    #[test]
    fn sensitivity_matches_hand_values() {
        // Adjacent pair (0.65, 0.55) with the documented metric values.
        let s = sensitivity(&[0.65, 0.55], &[0.002, 0.013]).unwrap();
        assert!((s[0] - 0.11).abs() < 1e-12);
        let s = sensitivity(&[0.75, 0.65], &[0.0, 0.004]).unwrap();
        assert!((s[0] - 0.04).abs() < 1e-12);
        let s = sensitivity(&[0.75, 0.65, 0.55, 0.45, 0.4], &[1.0; 5]).unwrap();
        assert!(s.iter().all(|&v| v == 0.0));
        assert!(sensitivity(&[0.75], &[0.0]).is_err());
        assert!(sensitivity(&[0.65, 0.75], &[0.0, 0.0]).is_err());
        assert!(sensitivity(&[0.75, 0.65], &[0.0]).is_err());
    }

    #[test]
    fn log_matches_report() {
        let tn = gated_ll(4, 1);
        let plan = SamplePlan::new(300, 3, SimMode::Paired);
        let (c, log) = characterize_logged(&tn, &plan);
        assert_eq!(log.len(), 256); // exhaustive replaces sampling
        let med = log
            .iter()
            .map(|&(_, _, exact, approx)| exact.abs_diff(approx) as f64)
            .sum::<f64>()
            / log.len() as f64;
        assert_eq!(med, c.report.med);
    }
}
