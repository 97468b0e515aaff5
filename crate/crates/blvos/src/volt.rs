//! Supply-voltage modeling: threshold interpolation, the alpha-power delay
//! law, voltage-domain assignment with level-shifter placement, and the
//! dynamic toggle-energy model.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::circuit::{
    region_gate_sets, GateKind, NetId, Netlist, OutputBit, Region, RegionSets, Structure,
};
use crate::error::Error;

/// Tolerance used when matching a requested voltage against configured levels.
const LEVEL_EPS: f64 = 1e-9;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Device {
    Nmos,
    Pmos,
}

/// Threshold-voltage anchor at one supply voltage. The PMOS threshold is
/// stored as a positive magnitude.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VthAnchor {
    pub vdd: f64,
    pub vth_nmos: f64,
    pub vth_pmos: f64,
}

/// Supply levels and the threshold/alpha parameters of the delay law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VoltageModel {
    pub v_nominal: f64,
    /// Strictly decreasing overscaled levels, all below nominal.
    pub approx_levels: Vec<f64>,
    pub vth_anchors: Vec<VthAnchor>,
    pub alpha: f64,
    /// Minimum `V - Vth` headroom before the delay law is rejected.
    pub margin_floor: f64,
}

impl Default for VoltageModel {
    fn default() -> Self {
        VoltageModel {
            v_nominal: 0.8,
            approx_levels: vec![0.75, 0.65, 0.55, 0.45, 0.4],
            vth_anchors: vec![
                VthAnchor { vdd: 0.4, vth_nmos: 0.205, vth_pmos: 0.181 },
                VthAnchor { vdd: 0.8, vth_nmos: 0.175, vth_pmos: 0.190 },
            ],
            alpha: 1.3,
            margin_floor: 0.05,
        }
    }
}

impl VoltageModel {
    pub fn validate(&self) -> Result<(), Error> {
        if self.approx_levels.is_empty() {
            return Err(Error::Model("at least one approximate level required".into()));
        }
        for w in self.approx_levels.windows(2) {
            if w[1] >= w[0] {
                return Err(Error::Model(
                    "approximate levels must be strictly decreasing".into(),
                ));
            }
        }
        if self.approx_levels[0] >= self.v_nominal {
            return Err(Error::Model(
                "every approximate level must be below the nominal voltage".into(),
            ));
        }
        if self.vth_anchors.len() < 2 {
            return Err(Error::Model("at least two threshold anchors required".into()));
        }
        for w in self.vth_anchors.windows(2) {
            if w[1].vdd <= w[0].vdd {
                return Err(Error::Model(
                    "threshold anchors must be ordered by increasing voltage".into(),
                ));
            }
        }
        for a in &self.vth_anchors {
            if a.vdd - a.vth_nmos <= 0.0 || a.vdd - a.vth_pmos <= 0.0 {
                return Err(Error::Model(format!(
                    "anchor at {} V leaves no headroom above threshold",
                    a.vdd
                )));
            }
        }
        if self.alpha <= 0.0 {
            return Err(Error::Model("alpha must be positive".into()));
        }
        Ok(())
    }

    pub fn is_approx_level(&self, v: f64) -> bool {
        self.approx_levels.iter().any(|&l| (l - v).abs() < LEVEL_EPS)
    }

    /// Threshold voltage magnitude at supply `v`, linearly interpolated
    /// between the anchors. Out-of-range voltages are rejected.
    pub fn vth_at(&self, v: f64, device: Device) -> Result<f64, Error> {
        let lo = self.vth_anchors.first().unwrap();
        let hi = self.vth_anchors.last().unwrap();
        if v < lo.vdd - LEVEL_EPS || v > hi.vdd + LEVEL_EPS {
            return Err(Error::VoltageRange { v, min: lo.vdd, max: hi.vdd });
        }
        let pick = |a: &VthAnchor| match device {
            Device::Nmos => a.vth_nmos,
            Device::Pmos => a.vth_pmos,
        };
        for w in self.vth_anchors.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if v <= b.vdd + LEVEL_EPS {
                let t = ((v - a.vdd) / (b.vdd - a.vdd)).clamp(0.0, 1.0);
                return Ok(pick(a) + t * (pick(b) - pick(a)));
            }
        }
        Ok(pick(hi))
    }

    /// Effective threshold at supply `v`: the mean of the NMOS and PMOS
    /// magnitudes, since gates mix both device types.
    pub fn vth_eff(&self, v: f64) -> Result<f64, Error> {
        Ok((self.vth_at(v, Device::Nmos)? + self.vth_at(v, Device::Pmos)?) / 2.0)
    }

    /// Alpha-power delay factor relative to the fresh nominal corner:
    /// `[v / (v - vth_eff(v) - delta_vth)^alpha]` normalized so that
    /// `delay_scale(v_nominal, 0) = 1`.
    pub fn delay_scale(&self, v: f64, delta_vth: f64) -> Result<f64, Error> {
        let term = |v: f64, dv: f64| -> Result<f64, Error> {
            let headroom = v - self.vth_eff(v)? - dv;
            if headroom <= self.margin_floor {
                return Err(Error::BelowThresholdMargin {
                    v,
                    headroom,
                    floor: self.margin_floor,
                });
            }
            Ok(v / headroom.powf(self.alpha))
        };
        Ok(term(v, delta_vth)? / term(self.v_nominal, 0.0)?)
    }
}

/// Requested operating point of the overscaled region.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub enum Vdd {
    /// Accurate operating mode: the selection switch box drives every region
    /// at the nominal voltage.
    Nominal,
    /// One of the configured approximate levels.
    Level(f64),
}

impl Vdd {
    pub fn label(&self) -> String {
        match self {
            Vdd::Nominal => "nominal".to_string(),
            Vdd::Level(v) => format!("{v}"),
        }
    }
}

impl std::fmt::Display for Vdd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

/// Voltage of each region plus the nets that need level shifters.
#[derive(Clone, Debug)]
pub struct DomainAssignment {
    pub approx_voltage: f64,
    pub accurate_voltage: f64,
    pub accurate_mode: bool,
    /// Nets leaving the overscaled region into the nominal one. Placement is
    /// structural: it does not depend on the runtime operating mode.
    pub shifter_nets: BTreeSet<NetId>,
    /// Whether the output registers sit on the nominal rail. True whenever
    /// any accurate logic exists; the all-overscaled structure keeps its
    /// registers on the approximate rail and needs no shifters.
    pub output_rail_nominal: bool,
}

/// Assign supply voltages per region and compute level-shifter placement.
pub fn assign_domains(
    net: &Netlist,
    structure: Structure,
    vdd: Vdd,
    model: &VoltageModel,
) -> Result<DomainAssignment, Error> {
    let regions = region_gate_sets(net, structure);
    assign_domains_with(net, &regions, vdd, model)
}

pub(crate) fn assign_domains_with(
    net: &Netlist,
    regions: &RegionSets,
    vdd: Vdd,
    model: &VoltageModel,
) -> Result<DomainAssignment, Error> {
    let (approx_voltage, accurate_mode) = match vdd {
        Vdd::Nominal => (model.v_nominal, true),
        Vdd::Level(v) => {
            if !model.is_approx_level(v) {
                return Err(Error::UnknownLevel(v));
            }
            (v, false)
        }
    };

    let output_rail_nominal = !regions.accurate.is_empty();
    let mut shifter_nets = BTreeSet::new();
    if !regions.approx.is_empty() {
        let consumers = net.consumer_map();
        let output_nets: BTreeSet<NetId> = net
            .primary_outputs
            .iter()
            .filter_map(|ob| match ob {
                OutputBit::Net(id) => Some(*id),
                OutputBit::Zero => None,
            })
            .collect();
        for &gate_id in &regions.approx {
            let out = net.gate(gate_id).output;
            let feeds_accurate = consumers[out.0 as usize]
                .iter()
                .any(|&g| regions.region_of(g) == Region::Accurate);
            let feeds_registers = output_rail_nominal && output_nets.contains(&out);
            if feeds_accurate || feeds_registers {
                shifter_nets.insert(out);
            }
        }
    }

    Ok(DomainAssignment {
        approx_voltage,
        accurate_voltage: model.v_nominal,
        accurate_mode,
        shifter_nets,
        output_rail_nominal,
    })
}

/// Level-shifter delay per source voltage, in the same time units as the
/// gate delay table. The defaults anchor the 0.55–0.75 V conversions at half
/// a nominal inverter and grow steeply toward 0.4 V.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShifterTable {
    pub delays: Vec<(f64, f64)>,
}

impl Default for ShifterTable {
    fn default() -> Self {
        ShifterTable {
            delays: vec![(0.75, 0.5), (0.65, 0.5), (0.55, 0.5), (0.45, 2.0), (0.4, 4.0)],
        }
    }
}

impl ShifterTable {
    /// Conversion delay from `v_from` up to the nominal rail.
    pub fn shifter_delay(&self, v_from: f64) -> Result<f64, Error> {
        self.delays
            .iter()
            .find(|(v, _)| (v - v_from).abs() < LEVEL_EPS)
            .map(|&(_, d)| d)
            .ok_or(Error::UnknownLevel(v_from))
    }

    pub fn validate(&self, model: &VoltageModel) -> Result<(), Error> {
        for &level in &model.approx_levels {
            let d = self.shifter_delay(level)?;
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::Model(format!(
                    "shifter delay at {level} V must be non-negative"
                )));
            }
        }
        Ok(())
    }
}

/// Effective switched capacitance per gate kind, dimensionless.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CapTable {
    pub inv: f64,
    pub buf: f64,
    pub and2: f64,
    pub nand2: f64,
    pub nor2: f64,
    pub or2: f64,
    pub xor2: f64,
    pub level_shifter: f64,
}

impl Default for CapTable {
    fn default() -> Self {
        CapTable {
            inv: 0.6,
            buf: 0.6,
            and2: 1.0,
            nand2: 1.0,
            nor2: 1.0,
            or2: 1.0,
            xor2: 1.6,
            level_shifter: 0.6,
        }
    }
}

impl CapTable {
    pub fn cap(&self, kind: GateKind) -> f64 {
        match kind {
            GateKind::Inv => self.inv,
            GateKind::Buf => self.buf,
            GateKind::And2 => self.and2,
            GateKind::Nand2 => self.nand2,
            GateKind::Nor2 => self.nor2,
            GateKind::Or2 => self.or2,
            GateKind::Xor2 => self.xor2,
            GateKind::LevelShifter => self.level_shifter,
        }
    }
}

/// Dynamic-energy model: each output toggle of a gate costs `cap · V²`;
/// level shifters cost a fixed per-event charge (one BUF-equivalent event at
/// the nominal rail under the defaults).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnergyModel {
    pub cap_per_kind: CapTable,
    pub shifter_energy_per_event: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        let caps = CapTable::default();
        let shifter = caps.buf * 0.8 * 0.8;
        EnergyModel {
            cap_per_kind: caps,
            shifter_energy_per_event: shifter,
        }
    }
}

impl EnergyModel {
    /// Energy of one output toggle of `kind` at supply `v`.
    pub fn toggle_energy(&self, kind: GateKind, v: f64) -> f64 {
        self.cap_per_kind.cap(kind) * v * v
    }

    pub fn validate(&self) -> Result<(), Error> {
        let c = &self.cap_per_kind;
        for (name, v) in [
            ("inv", c.inv),
            ("buf", c.buf),
            ("and2", c.and2),
            ("nand2", c.nand2),
            ("nor2", c.nor2),
            ("or2", c.or2),
            ("xor2", c.xor2),
            ("level_shifter", c.level_shifter),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Model(format!("capacitance for {name} must be > 0")));
            }
        }
        if !(self.shifter_energy_per_event >= 0.0) {
            return Err(Error::Model("shifter energy must be non-negative".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_multiplier, level_shifter_count, DelayTable, MultiplierSpec};

    fn model() -> VoltageModel {
        VoltageModel::default()
    }

    #[test]
    fn vth_interpolation_hits_anchors_and_midpoint() {
        let m = model();
        assert!((m.vth_at(0.8, Device::Nmos).unwrap() - 0.175).abs() < 1e-12);
        assert!((m.vth_at(0.4, Device::Nmos).unwrap() - 0.205).abs() < 1e-12);
        assert!((m.vth_at(0.6, Device::Nmos).unwrap() - 0.190).abs() < 1e-12);
        assert!((m.vth_at(0.8, Device::Pmos).unwrap() - 0.190).abs() < 1e-12);
        assert!((m.vth_at(0.4, Device::Pmos).unwrap() - 0.181).abs() < 1e-12);
        assert!(m.vth_at(0.3, Device::Nmos).is_err());
        assert!(m.vth_at(0.9, Device::Nmos).is_err());
    }

    #[test]
    fn delay_scale_is_normalized_and_matches_direct_arithmetic() {
        let m = model();
        assert!((m.delay_scale(0.8, 0.0).unwrap() - 1.0).abs() < 1e-15);

        // Independent recomputation of the delay law at 0.4 V.
        let vth_eff_04 = (0.205 + 0.181) / 2.0;
        let vth_eff_08 = (0.175 + 0.190) / 2.0;
        let expect = (0.4 / (0.4f64 - vth_eff_04).powf(1.3)) / (0.8 / (0.8f64 - vth_eff_08).powf(1.3));
        let got = m.delay_scale(0.4, 0.0).unwrap();
        assert!((got - expect).abs() < 1e-12);
        assert!((got - 2.0703158439).abs() < 1e-9, "got {got}");

        // Ten-year mean threshold drift at the nominal corner.
        let aged = m.delay_scale(0.8, 0.1705).unwrap();
        assert!((aged - 1.5220477255).abs() < 1e-9, "got {aged}");
    }

    #[test]
    fn delay_scale_monotone_in_v_and_dvth() {
        let m = model();
        let grid = [0.75, 0.65, 0.55, 0.45, 0.4];
        let mut prev = m.delay_scale(0.8, 0.0).unwrap();
        for &v in &grid {
            let s = m.delay_scale(v, 0.0).unwrap();
            assert!(s > prev, "delay scale must grow as voltage drops");
            prev = s;
        }
        let mut prev = m.delay_scale(0.55, 0.0).unwrap();
        for dv in [0.01, 0.05, 0.1, 0.2] {
            let s = m.delay_scale(0.55, dv).unwrap();
            assert!(s > prev);
            prev = s;
        }
    }

    #[test]
    fn delay_scale_rejects_below_margin() {
        let m = model();
        let err = m.delay_scale(0.4, 0.16).unwrap_err();
        assert!(matches!(err, Error::BelowThresholdMargin { .. }));
        assert!(err.to_string().contains("below threshold margin"));
    }

    #[test]
    fn toggle_energy_follows_cv2() {
        let e = EnergyModel::default();
        let hi = e.toggle_energy(GateKind::And2, 0.8);
        let lo = e.toggle_energy(GateKind::And2, 0.4);
        assert!((hi / lo - 4.0).abs() < 1e-12);
        assert_eq!(e.toggle_energy(GateKind::And2, 0.0), 0.0);
        let mut custom = EnergyModel::default();
        custom.cap_per_kind.xor2 = 1.0;
        assert!((custom.toggle_energy(GateKind::Xor2, 0.45) - 0.2025).abs() < 1e-12);
    }

    #[test]
    fn shifter_table_lookup_and_monotonicity() {
        let t = ShifterTable::default();
        assert_eq!(t.shifter_delay(0.75).unwrap(), 0.5);
        assert_eq!(t.shifter_delay(0.4).unwrap(), 4.0);
        assert!(t.shifter_delay(0.5).is_err());
        assert!(t.shifter_delay(0.4).unwrap() >= t.shifter_delay(0.45).unwrap());
        assert!(t.shifter_delay(0.45).unwrap() >= t.shifter_delay(0.55).unwrap());
    }

    #[test]
    fn domain_assignment_counts_match_formulas() {
        let m = model();
        let table = DelayTable::default();
        for (n, k) in [(8u32, 2u32), (8, 4), (8, 6), (16, 4), (16, 8), (16, 12), (12, 5)] {
            let net = build_multiplier(&MultiplierSpec::new(n, k, Structure::Blvos0), &table)
                .unwrap();
            for structure in [
                Structure::Blvos1,
                Structure::Blvos2,
                Structure::Blvos3,
                Structure::Blvos4,
            ] {
                let dom = assign_domains(&net, structure, Vdd::Level(0.55), &m).unwrap();
                let expect = level_shifter_count(structure, n, k).unwrap();
                assert_eq!(
                    dom.shifter_nets.len() as u64,
                    expect,
                    "n={n} k={k} {structure}"
                );
            }
            let dom0 = assign_domains(&net, Structure::Blvos0, Vdd::Nominal, &m).unwrap();
            assert!(dom0.shifter_nets.is_empty());
        }
    }

    #[test]
    fn accurate_mode_forces_nominal() {
        let m = model();
        let net = build_multiplier(
            &MultiplierSpec::new(8, 4, Structure::Blvos0),
            &DelayTable::default(),
        )
        .unwrap();
        let dom = assign_domains(&net, Structure::Blvos3, Vdd::Nominal, &m).unwrap();
        assert!(dom.accurate_mode);
        assert_eq!(dom.approx_voltage, 0.8);
        assert_eq!(dom.accurate_voltage, 0.8);
        // Placement is structural even in accurate mode.
        assert_eq!(dom.shifter_nets.len() as u64, 2 * 4 + 8 + 1);
    }

    #[test]
    fn unknown_level_rejected() {
        let m = model();
        let net = build_multiplier(
            &MultiplierSpec::new(8, 4, Structure::Blvos0),
            &DelayTable::default(),
        )
        .unwrap();
        assert!(matches!(
            assign_domains(&net, Structure::Blvos1, Vdd::Level(0.5), &m),
            Err(Error::UnknownLevel(_))
        ));
    }
}
