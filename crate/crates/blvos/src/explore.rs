//! Design-space enumeration, evaluation against a shared baseline trace,
//! Pareto-front extraction and constraint-driven selection.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{build_multiplier, MultiplierSpec, Structure};
use crate::config::ModelConfig;
use crate::error::Error;
use crate::metrics::{characterize, ErrorReport, SamplePlan};
use crate::timesim::TimedNetlist;
use crate::volt::Vdd;

/// One candidate configuration: a multiplier spec plus an operating point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub spec: MultiplierSpec,
    pub vdd: Vdd,
}

/// Cartesian candidate enumeration. The exact structure is only paired with
/// the nominal voltage; the overscaled ones with every requested level.
pub fn enumerate_space(
    n: u32,
    k_set: &[u32],
    structures: &[Structure],
    voltages: &[f64],
    models: &ModelConfig,
) -> Result<Vec<Candidate>, Error> {
    if k_set.is_empty() {
        return Err(Error::EmptyAxis("k set"));
    }
    if structures.is_empty() {
        return Err(Error::EmptyAxis("structures"));
    }
    if voltages.is_empty() {
        return Err(Error::EmptyAxis("voltages"));
    }
    for &k in k_set {
        MultiplierSpec::new(n, k, Structure::Blvos0).validate()?;
    }
    for &v in voltages {
        if !models.voltage.is_approx_level(v) {
            return Err(Error::UnknownLevel(v));
        }
    }
    let mut out = Vec::new();
    for &k in k_set {
        for &structure in structures {
            if structure == Structure::Blvos0 {
                out.push(Candidate {
                    spec: MultiplierSpec::new(n, k, structure),
                    vdd: Vdd::Nominal,
                });
            } else {
                for &v in voltages {
                    out.push(Candidate {
                        spec: MultiplierSpec::new(n, k, structure),
                        vdd: Vdd::Level(v),
                    });
                }
            }
        }
    }
    Ok(out)
}

/// An evaluated candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub spec: MultiplierSpec,
    pub vdd: Vdd,
    pub metrics: ErrorReport,
    /// Modeled toggle energy relative to the exact multiplier of the same
    /// (n, k) on the identical input trace.
    pub energy_rel: f64,
    pub shifters: u64,
}

/// Total toggle energy of the exact baseline of (n, k) over the plan's trace.
fn baseline_energy(
    n: u32,
    k: u32,
    plan: &SamplePlan,
    models: &ModelConfig,
) -> Result<f64, Error> {
    let spec = MultiplierSpec::new(n, k, Structure::Blvos0);
    let net = build_multiplier(&spec, &models.delay)?;
    let tn = Arc::new(TimedNetlist::new(&net, spec.structure, Vdd::Nominal, models)?);
    Ok(characterize(&tn, plan).energy)
}

/// Evaluate one candidate: build, assign domains, characterize, and form the
/// paired energy ratio against the exact baseline.
pub fn evaluate_point(
    candidate: &Candidate,
    plan: &SamplePlan,
    models: &ModelConfig,
) -> Result<DesignPoint, Error> {
    let baseline = baseline_energy(candidate.spec.n, candidate.spec.k, plan, models)?;
    evaluate_with_baseline(candidate, plan, models, baseline)
}

fn evaluate_with_baseline(
    candidate: &Candidate,
    plan: &SamplePlan,
    models: &ModelConfig,
    baseline: f64,
) -> Result<DesignPoint, Error> {
    if !(baseline > 0.0) {
        return Err(Error::Model(
            "baseline trace has zero toggle energy; enlarge the sample plan".into(),
        ));
    }
    let net = build_multiplier(&candidate.spec, &models.delay)?;
    let tn = Arc::new(TimedNetlist::new(
        &net,
        candidate.spec.structure,
        candidate.vdd,
        models,
    )?);
    let ch = characterize(&tn, plan);
    Ok(DesignPoint {
        spec: candidate.spec.clone(),
        vdd: candidate.vdd,
        metrics: ch.report,
        energy_rel: ch.energy / baseline,
        shifters: tn.num_shifters as u64,
    })
}

/// Evaluate a whole sweep. Baselines are computed once per distinct (n, k);
/// candidates are evaluated concurrently and assembled in candidate order.
pub fn evaluate_candidates(
    candidates: &[Candidate],
    plan: &SamplePlan,
    models: &ModelConfig,
) -> Result<Vec<DesignPoint>, Error> {
    let mut baselines: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    for c in candidates {
        let key = (c.spec.n, c.spec.k);
        if !baselines.contains_key(&key) {
            baselines.insert(key, baseline_energy(key.0, key.1, plan, models)?);
        }
    }
    candidates
        .par_iter()
        .map(|c| {
            let baseline = baselines[&(c.spec.n, c.spec.k)];
            evaluate_with_baseline(c, plan, models, baseline)
        })
        .collect()
}

/// Stable comparison key: energy, then error, then structure index.
fn stable_key(p: &DesignPoint) -> (f64, f64, usize) {
    (p.energy_rel, p.metrics.mred, p.spec.structure.index())
}

fn stable_cmp(a: &DesignPoint, b: &DesignPoint) -> std::cmp::Ordering {
    let (ea, ma, sa) = stable_key(a);
    let (eb, mb, sb) = stable_key(b);
    ea.total_cmp(&eb).then(ma.total_cmp(&mb)).then(sa.cmp(&sb))
}

/// Non-dominated subset under (energy_rel ↓, MRED ↓). Ties are kept; the
/// result is ordered by the stable key.
pub fn pareto_front(points: &[DesignPoint]) -> Vec<DesignPoint> {
    let dominates = |p: &DesignPoint, q: &DesignPoint| {
        p.energy_rel <= q.energy_rel
            && p.metrics.mred <= q.metrics.mred
            && (p.energy_rel < q.energy_rel || p.metrics.mred < q.metrics.mred)
    };
    let mut front: Vec<DesignPoint> = points
        .iter()
        .filter(|p| !points.iter().any(|q| dominates(q, p)))
        .cloned()
        .collect();
    front.sort_by(stable_cmp);
    front
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    MinEnergy,
    MinMred,
}

/// Hard quality/energy bounds plus the optimization objective.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub max_mred: Option<f64>,
    pub max_nmed: Option<f64>,
    pub max_med: Option<f64>,
    pub energy_budget_rel: Option<f64>,
    pub objective: Objective,
}

impl Constraint {
    pub fn satisfied_by(&self, p: &DesignPoint) -> bool {
        self.max_mred.map_or(true, |b| p.metrics.mred <= b)
            && self.max_nmed.map_or(true, |b| p.metrics.nmed <= b)
            && self.max_med.map_or(true, |b| p.metrics.med <= b)
            && self.energy_budget_rel.map_or(true, |b| p.energy_rel <= b)
    }
}

/// Result of constraint-driven selection. Infeasibility is a result, not an
/// error.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Selection {
    Chosen { point: DesignPoint },
    Infeasible,
}

/// Pick the objective optimum among the points satisfying every bound, with
/// ties broken by the Pareto-stable order.
pub fn select(points: &[DesignPoint], constraint: &Constraint) -> Selection {
    let mut feasible: Vec<&DesignPoint> =
        points.iter().filter(|p| constraint.satisfied_by(p)).collect();
    if feasible.is_empty() {
        return Selection::Infeasible;
    }
    feasible.sort_by(|a, b| stable_cmp(a, b));
    let best = match constraint.objective {
        Objective::MinEnergy => feasible
            .iter()
            .min_by(|a, b| {
                a.energy_rel
                    .total_cmp(&b.energy_rel)
                    .then_with(|| stable_cmp(a, b))
            })
            .unwrap(),
        Objective::MinMred => feasible
            .iter()
            .min_by(|a, b| {
                a.metrics
                    .mred
                    .total_cmp(&b.metrics.mred)
                    .then_with(|| stable_cmp(a, b))
            })
            .unwrap(),
    };
    Selection::Chosen { point: (*best).clone() }
}
