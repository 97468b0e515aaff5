//! Lifetime modeling: threshold drift under bias-temperature stress mapped to
//! delay degradation, and process-variation Monte Carlo at the gate-delay
//! level.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{MultiplierSpec, Netlist};
use crate::config::ModelConfig;
use crate::error::Error;
use crate::metrics::{characterize, ErrorReport, SamplePlan};
use crate::timesim::{TimedNetlist, TimedOptions};
use crate::volt::{Device, Vdd, VoltageModel};

pub const SECONDS_PER_YEAR: f64 = 365.0 * 24.0 * 3600.0;
/// The calibration anchors are ten-year drifts.
const ANCHOR_SECONDS: f64 = 10.0 * SECONDS_PER_YEAR;

/// Threshold-drift model constants. The per-device prefactors are fitted so
/// that the ten-year drift at the nominal voltage matches the anchors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgingParams {
    /// Activation term in kelvin.
    pub kappa: f64,
    /// Operating temperature in kelvin.
    pub theta: f64,
    /// Default stress horizon in seconds.
    pub t_stress: f64,
    /// Duty factor of the stress signal, in (0, 1].
    pub duty_f: f64,
    /// Time exponent.
    pub exp_t: f64,
    /// Oxide-field exponent; chosen so the drift is negligible at 0.4 V.
    pub exp_field: f64,
    /// Duty-factor exponent.
    pub exp_duty: f64,
    /// Inversion layer thickness in normalized units.
    pub t_inv: f64,
    /// Ten-year drift at the nominal voltage the prefactors are fitted to.
    pub anchor_nmos: f64,
    pub anchor_pmos: f64,
}

impl Default for AgingParams {
    fn default() -> Self {
        AgingParams {
            kappa: 5708.0,
            theta: 300.0,
            t_stress: ANCHOR_SECONDS,
            duty_f: 0.5,
            exp_t: 1.0 / 6.0,
            exp_field: 4.0,
            exp_duty: 0.3,
            t_inv: 1.0,
            anchor_nmos: 0.151,
            anchor_pmos: 0.190,
        }
    }
}

impl AgingParams {
    pub fn validate(&self) -> Result<(), Error> {
        if self.theta <= 0.0 {
            return Err(Error::Model("temperature must be positive".into()));
        }
        if !(self.duty_f > 0.0 && self.duty_f <= 1.0) {
            return Err(Error::Model("duty factor must be in (0, 1]".into()));
        }
        if self.t_stress < 0.0 {
            return Err(Error::NegativeTime(self.t_stress));
        }
        if self.t_inv <= 0.0 {
            return Err(Error::Model("inversion layer thickness must be positive".into()));
        }
        Ok(())
    }
}

/// Aging model with prefactors fitted to the ten-year anchors.
#[derive(Clone, Debug)]
pub struct BtiModel {
    params: AgingParams,
    voltage: VoltageModel,
    a_nmos: f64,
    a_pmos: f64,
}

impl BtiModel {
    pub fn fit(params: &AgingParams, voltage: &VoltageModel) -> Result<Self, Error> {
        params.validate()?;
        voltage.validate()?;
        let mut model = BtiModel {
            params: params.clone(),
            voltage: voltage.clone(),
            a_nmos: 1.0,
            a_pmos: 1.0,
        };
        let base_n = model.raw_drift(voltage.v_nominal, Device::Nmos, ANCHOR_SECONDS)?;
        let base_p = model.raw_drift(voltage.v_nominal, Device::Pmos, ANCHOR_SECONDS)?;
        model.a_nmos = params.anchor_nmos / base_n;
        model.a_pmos = params.anchor_pmos / base_p;
        Ok(model)
    }

    /// Drift with unit prefactor.
    fn raw_drift(&self, v: f64, device: Device, t_seconds: f64) -> Result<f64, Error> {
        let p = &self.params;
        let vth = self.voltage.vth_at(v, device)?;
        let field = (v - vth) / p.t_inv;
        Ok((-p.kappa / p.theta).exp()
            * t_seconds.powf(p.exp_t)
            * field.powf(p.exp_field)
            * p.duty_f.powf(p.exp_duty))
    }

    /// Threshold-voltage drift after `t_seconds` of stress at supply `v`.
    pub fn delta_vth(&self, v: f64, device: Device, t_seconds: f64) -> Result<f64, Error> {
        if t_seconds < 0.0 {
            return Err(Error::NegativeTime(t_seconds));
        }
        if t_seconds == 0.0 {
            return Ok(0.0);
        }
        let a = match device {
            Device::Nmos => self.a_nmos,
            Device::Pmos => self.a_pmos,
        };
        Ok(a * self.raw_drift(v, device, t_seconds)?)
    }

    /// Mean of the NMOS and PMOS drifts: gates mix both device types.
    pub fn delta_vth_mean(&self, v: f64, t_seconds: f64) -> Result<f64, Error> {
        Ok((self.delta_vth(v, Device::Nmos, t_seconds)?
            + self.delta_vth(v, Device::Pmos, t_seconds)?)
            / 2.0)
    }
}

/// Threshold-drift after stress for one device at one supply voltage.
pub fn delta_vth_bti(
    params: &AgingParams,
    voltage: &VoltageModel,
    v: f64,
    device: Device,
    t_seconds: f64,
) -> Result<f64, Error> {
    BtiModel::fit(params, voltage)?.delta_vth(v, device, t_seconds)
}

/// Which clock the aged analysis samples against.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgedClocking {
    /// The clock follows the aged accurate structure (its period grows by the
    /// nominal-voltage delay factor). Reproduces the published trends.
    Rescaled,
    /// The design-time clock is kept.
    DesignTime,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegionAging {
    pub region: String,
    pub voltage: f64,
    pub delta_vth_nmos: f64,
    pub delta_vth_pmos: f64,
    pub delta_vth_mean: f64,
    /// Aged delay relative to the fresh delay of the same region.
    pub delay_factor: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AgedDelayReport {
    pub years: f64,
    pub regions: Vec<RegionAging>,
    pub fresh_critical_path: f64,
    pub aged_critical_path: f64,
    /// Critical-path increase, aged vs fresh, as a fraction.
    pub increment: f64,
}

fn aged_options(
    bti: &BtiModel,
    models: &ModelConfig,
    v_approx: f64,
    accurate_mode: bool,
    seconds: f64,
    clocking: AgedClocking,
) -> Result<(TimedOptions, f64, f64), Error> {
    let v_nom = models.voltage.v_nominal;
    let v_eff = if accurate_mode { v_nom } else { v_approx };
    let dvth_approx = bti.delta_vth_mean(v_eff, seconds)?;
    let dvth_accurate = bti.delta_vth_mean(v_nom, seconds)?;
    let t_clk_factor = match clocking {
        AgedClocking::Rescaled => models.voltage.delay_scale(v_nom, dvth_accurate)?,
        AgedClocking::DesignTime => 1.0,
    };
    Ok((
        TimedOptions { dvth_approx, dvth_accurate, t_clk_factor },
        dvth_approx,
        dvth_accurate,
    ))
}

/// Delay degradation of one configuration after `years` of stress, with each
/// voltage region aged at its own operating point.
pub fn aged_delay_increment(
    netlist: &Netlist,
    spec: &MultiplierSpec,
    vdd: Vdd,
    models: &ModelConfig,
    years: f64,
) -> Result<AgedDelayReport, Error> {
    if years < 0.0 {
        return Err(Error::NegativeTime(years));
    }
    let seconds = years * SECONDS_PER_YEAR;
    let bti = BtiModel::fit(&models.aging, &models.voltage)?;
    let fresh = TimedNetlist::new(netlist, spec.structure, vdd, models)?;
    let (opts, _, _) = aged_options(
        &bti,
        models,
        fresh.v_approx,
        fresh.accurate_mode,
        seconds,
        AgedClocking::DesignTime,
    )?;
    let aged = TimedNetlist::with_options(netlist, spec.structure, vdd, models, &opts)?;

    let v_nom = models.voltage.v_nominal;
    let mut regions = Vec::new();
    for (name, v) in [("approx", fresh.v_approx), ("accurate", v_nom)] {
        let dn = bti.delta_vth(v, Device::Nmos, seconds)?;
        let dp = bti.delta_vth(v, Device::Pmos, seconds)?;
        let dm = (dn + dp) / 2.0;
        let factor = models.voltage.delay_scale(v, dm)? / models.voltage.delay_scale(v, 0.0)?;
        regions.push(RegionAging {
            region: name.to_string(),
            voltage: v,
            delta_vth_nmos: dn,
            delta_vth_pmos: dp,
            delta_vth_mean: dm,
            delay_factor: factor,
        });
    }

    let fresh_cp = fresh.critical_path();
    let aged_cp = aged.critical_path();
    Ok(AgedDelayReport {
        years,
        regions,
        fresh_critical_path: fresh_cp,
        aged_critical_path: aged_cp,
        increment: aged_cp / fresh_cp - 1.0,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AgedCharacterization {
    pub years: f64,
    pub clocking: AgedClocking,
    pub aged_t_clk: f64,
    pub fresh: ErrorReport,
    pub aged: ErrorReport,
    /// aged MRED − fresh MRED (negative when aging reduces the error under a
    /// rescaled clock).
    pub mred_drift: f64,
}

/// Re-run characterization with aged gate delays.
pub fn aged_characterize(
    netlist: &Netlist,
    spec: &MultiplierSpec,
    vdd: Vdd,
    models: &ModelConfig,
    years: f64,
    plan: &SamplePlan,
    clocking: AgedClocking,
) -> Result<AgedCharacterization, Error> {
    if years < 0.0 {
        return Err(Error::NegativeTime(years));
    }
    let seconds = years * SECONDS_PER_YEAR;
    let bti = BtiModel::fit(&models.aging, &models.voltage)?;
    let fresh_tn = Arc::new(TimedNetlist::new(netlist, spec.structure, vdd, models)?);
    let (opts, _, _) = aged_options(
        &bti,
        models,
        fresh_tn.v_approx,
        fresh_tn.accurate_mode,
        seconds,
        clocking,
    )?;
    let aged_tn = Arc::new(TimedNetlist::with_options(
        netlist,
        spec.structure,
        vdd,
        models,
        &opts,
    )?);
    let fresh = characterize(&fresh_tn, plan).report;
    let aged = characterize(&aged_tn, plan).report;
    let drift = aged.mred - fresh.mred;
    Ok(AgedCharacterization {
        years,
        clocking,
        aged_t_clk: aged_tn.t_clk,
        fresh,
        aged,
        mred_drift: drift,
    })
}

/// Process-variation plan: independent relative Gaussian dispersion on every
/// gate delay, floored to keep delays positive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PvPlan {
    /// Per-gate relative standard deviation (0.0333 puts 3σ at 10%).
    pub sigma_rel: f64,
    pub trials: u64,
    pub seed: u64,
    /// Lower bound on the multiplicative factor.
    pub floor: f64,
}

impl Default for PvPlan {
    fn default() -> Self {
        PvPlan { sigma_rel: 0.0333, trials: 5000, seed: 1, floor: 0.05 }
    }
}

impl PvPlan {
    pub fn validate(&self) -> Result<(), Error> {
        if self.sigma_rel < 0.0 {
            return Err(Error::Model("sigma must be non-negative".into()));
        }
        if self.trials == 0 {
            return Err(Error::Model("at least one trial required".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MetricSpread {
    pub nominal: f64,
    pub mean: f64,
    pub std: f64,
    /// mean ÷ std; null when the dispersion is zero.
    pub mean_over_std: Option<f64>,
}

fn spread(nominal: f64, samples: &[f64]) -> MetricSpread {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    MetricSpread {
        nominal,
        mean,
        std,
        mean_over_std: (std > 0.0).then(|| mean / std),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PvReport {
    pub sigma_rel: f64,
    pub trials: u64,
    pub seed: u64,
    pub med: MetricSpread,
    pub mred: MetricSpread,
    pub nmed: MetricSpread,
}

/// Per-trial metric log, for the optional CSV dump.
pub type PvTrialLog = Vec<(u64, f64, f64, f64)>;

/// Monte Carlo over gate-delay dispersion. Trials run in parallel; every
/// trial's factors derive from (seed, trial index), so the report does not
/// depend on scheduling.
pub fn pv_trials(
    tn: &Arc<TimedNetlist>,
    pv: &PvPlan,
    plan: &SamplePlan,
) -> Result<(PvReport, PvTrialLog), Error> {
    pv.validate()?;
    let nominal = characterize(tn, plan).report;
    let node_count = tn.node_count();
    let per_trial: Vec<(f64, f64, f64)> = (0..pv.trials)
        .into_par_iter()
        .map(|trial| {
            let mut varied = (**tn).clone();
            if pv.sigma_rel > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(pv.seed);
                rng.set_stream(trial);
                let gauss = Normal::new(0.0, pv.sigma_rel).expect("sigma validated");
                let factors: Vec<f64> = (0..node_count)
                    .map(|_| (1.0 + gauss.sample(&mut rng)).max(pv.floor))
                    .collect();
                varied.apply_delay_factors(&factors);
            }
            let report = characterize(&Arc::new(varied), plan).report;
            (report.med, report.mred, report.nmed)
        })
        .collect();
    let meds: Vec<f64> = per_trial.iter().map(|t| t.0).collect();
    let mreds: Vec<f64> = per_trial.iter().map(|t| t.1).collect();
    let nmeds: Vec<f64> = per_trial.iter().map(|t| t.2).collect();
    let log = per_trial
        .iter()
        .enumerate()
        .map(|(i, &(med, mred, nmed))| (i as u64, med, mred, nmed))
        .collect();
    Ok((
        PvReport {
            sigma_rel: pv.sigma_rel,
            trials: pv.trials,
            seed: pv.seed,
            med: spread(nominal.med, &meds),
            mred: spread(nominal.mred, &mreds),
            nmed: spread(nominal.nmed, &nmeds),
        },
        log,
    ))
}
