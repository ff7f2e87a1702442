//! Effective run configuration: defaults, TOML files and flags merged into
//! one value, which can be dumped back out and replayed.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use ionrotor_core::abfield::FieldSetup;
use ionrotor_core::consts::{angular, AMU, GAUSS};
use ionrotor_core::expsim;
use ionrotor_core::quantum::{self, DynamicsModel};
use ionrotor_core::rotor;
use ionrotor_core::TrapConfig;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[value(rename_all = "kebab-case")]
pub enum CommandName {
    Crystal,
    Modes,
    Rotor,
    RateScan,
    AbRate,
    Probability,
    TimeScan,
    AbScan,
    Refit,
    Thermo,
    Sideband,
    Flux,
    Lorentz,
}

impl CommandName {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandName::Crystal => "crystal",
            CommandName::Modes => "modes",
            CommandName::Rotor => "rotor",
            CommandName::RateScan => "rate-scan",
            CommandName::AbRate => "ab-rate",
            CommandName::Probability => "probability",
            CommandName::TimeScan => "time-scan",
            CommandName::AbScan => "ab-scan",
            CommandName::Refit => "refit",
            CommandName::Thermo => "thermo",
            CommandName::Sideband => "sideband",
            CommandName::Flux => "flux",
            CommandName::Lorentz => "lorentz",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub trap: TrapSection,
    pub field: FieldSection,
    pub model: ModelSection,
    pub crystal: CrystalSection,
    pub modes: ModesSection,
    pub rotor: RotorSection,
    pub rate_scan: RateScanSection,
    pub ab_rate: AbRateSection,
    pub probability: ProbabilitySection,
    pub time_scan: TimeScanSection,
    pub ab_scan: AbScanSection,
    pub refit: RefitSection,
    pub thermo: ThermoSection,
    pub sideband: SidebandSection,
    pub lorentz: LorentzSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub command: Option<CommandName>,
    pub format: Format,
    pub output: Option<PathBuf>,
    /// Where scan commands write their fit.
    pub fit_output: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { command: None, format: Format::Csv, output: None, fit_output: None, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrapSection {
    pub omega_x_mhz: f64,
    pub omega_y_mhz: f64,
    pub omega_z_mhz: f64,
    pub ion_mass_amu: f64,
}

impl Default for TrapSection {
    fn default() -> Self {
        TrapSection { omega_x_mhz: 1.523, omega_y_mhz: 1.961, omega_z_mhz: 1.119, ion_mass_amu: 40.0 }
    }
}

impl TrapSection {
    /// Angular frequencies from the MHz values; three ions.
    pub fn trap(&self) -> TrapConfig {
        TrapConfig {
            omega_x: angular(self.omega_x_mhz * 1e6),
            omega_y: angular(self.omega_y_mhz * 1e6),
            omega_z: angular(self.omega_z_mhz * 1e6),
            ion_mass: self.ion_mass_amu * AMU,
            ..TrapConfig::experimental()
        }
    }

    /// The trap with ωx set `delta_khz` above ωz.
    pub fn at_delta(&self, delta_khz: f64) -> TrapConfig {
        let t = self.trap();
        t.with_omega_x(t.omega_z + angular(delta_khz * 1e3))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSection {
    pub fixed_gauss: f64,
    /// Unit vector of the fixed field; normalised on use.
    pub fixed_direction: [f64; 3],
    pub coil_gauss: f64,
    pub rotor_normal: [f64; 3],
    pub loop_area_um2: f64,
    pub misalignment_deg: f64,
}

impl Default for FieldSection {
    fn default() -> Self {
        FieldSection {
            fixed_gauss: 3.4,
            fixed_direction: [0.5, -0.5, std::f64::consts::FRAC_1_SQRT_2],
            coil_gauss: 0.0,
            rotor_normal: [0.0, 1.0, 0.0],
            loop_area_um2: 37.0,
            misalignment_deg: 0.0,
        }
    }
}

impl FieldSection {
    pub fn setup(&self) -> Result<FieldSetup, CliError> {
        let d = self.fixed_direction;
        let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(CliError::Usage("field.fixed_direction must be a nonzero vector".into()));
        }
        let b = self.fixed_gauss * GAUSS / norm;
        let setup = FieldSetup {
            fixed_field: d.map(|c| c * b),
            tunable_field: [0.0; 3],
            rotor_normal: self.rotor_normal,
            loop_area: self.loop_area_um2 / 1e12,
            misalignment: self.misalignment_deg.to_radians(),
        }
        .with_tunable(self.coil_gauss * GAUSS);
        setup.validate()?;
        Ok(setup)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub p0: f64,
    pub nu_hz: f64,
    pub t2_ms: f64,
    pub v_hz: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let m = DynamicsModel::published();
        ModelSection { p0: m.p0, nu_hz: m.nu, t2_ms: m.t2 * 1e3, v_hz: m.v }
    }
}

impl ModelSection {
    pub fn model(&self) -> Result<DynamicsModel, CliError> {
        let m = DynamicsModel { p0: self.p0, nu: self.nu_hz, t2: self.t2_ms / 1e3, v: self.v_hz };
        m.validate()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrystalSection {
    /// List every distinct minimum instead of the lowest one.
    pub all_minima: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModesSection {
    pub omega_x_range_mhz: [f64; 2],
    pub steps: usize,
}

impl Default for ModesSection {
    fn default() -> Self {
        ModesSection { omega_x_range_mhz: [1.0, 2.0], steps: 51 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RotorSection {
    pub delta_khz: f64,
    pub samples: usize,
}

impl Default for RotorSection {
    fn default() -> Self {
        RotorSection { delta_khz: 1.75, samples: rotor::DEFAULT_SAMPLES }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateScanSection {
    pub delta_range_khz: [f64; 2],
    pub steps: usize,
    pub samples: usize,
    pub basis: usize,
}

impl Default for RateScanSection {
    fn default() -> Self {
        RateScanSection { delta_range_khz: [1.0, 3.0], steps: 21, samples: 128, basis: quantum::DEFAULT_BASIS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AbRateSection {
    pub delta_khz: f64,
    pub flux_range: [f64; 2],
    pub steps: usize,
    pub samples: usize,
    pub basis: usize,
}

impl Default for AbRateSection {
    fn default() -> Self {
        AbRateSection {
            delta_khz: 1.75,
            flux_range: [0.0, 1.0],
            steps: 21,
            samples: 128,
            basis: quantum::DEFAULT_BASIS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbabilitySection {
    pub flux: f64,
    pub tau_range_ms: [f64; 2],
    /// Flux axis of the golden-rule envelope.
    pub flux_range: [f64; 2],
    pub steps: usize,
    pub golden_rule: bool,
}

impl Default for ProbabilitySection {
    fn default() -> Self {
        ProbabilitySection {
            flux: 0.0,
            tau_range_ms: [0.0, 500.0],
            flux_range: [-1.0, 1.0],
            steps: 101,
            golden_rule: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeScanSection {
    pub flux: f64,
    pub tau_range_ms: [f64; 2],
    pub steps: usize,
    pub shots: u64,
}

impl Default for TimeScanSection {
    fn default() -> Self {
        TimeScanSection { flux: 0.0, tau_range_ms: [0.0, 500.0], steps: 51, shots: expsim::TIME_SCAN_SHOTS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AbScanSection {
    /// Coil settings, flux quanta.
    pub flux_range: [f64; 2],
    pub steps: usize,
    /// Flux from the fixed field, quanta.
    pub offset: f64,
    pub tau_ms: f64,
    pub shots: u64,
}

impl Default for AbScanSection {
    fn default() -> Self {
        AbScanSection {
            flux_range: [-1.0, 1.0],
            steps: 41,
            offset: expsim::FLUX_OFFSET,
            tau_ms: expsim::FLUX_SCAN_TAU * 1e3,
            shots: expsim::FLUX_SCAN_SHOTS,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefitSection {
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermoSection {
    pub start_khz: f64,
    pub end_khz: f64,
    pub duration_ms: f64,
    pub steps: usize,
    /// Starting temperature; ignored when `start_nbar` is set.
    pub start_temperature_uk: f64,
    pub start_nbar: Option<f64>,
    pub heating_down: f64,
    pub heating_up: f64,
    /// Also ramp back up to the start frequency.
    pub round_trip: bool,
    /// Ground-state population defining the usable temperature ceiling.
    pub p0_min: f64,
}

impl Default for ThermoSection {
    fn default() -> Self {
        ThermoSection {
            start_khz: 750.0,
            end_khz: 0.18,
            duration_ms: 100.0,
            steps: 201,
            start_temperature_uk: 10.0,
            start_nbar: None,
            heating_down: 0.0,
            heating_up: 0.0,
            round_trip: false,
            p0_min: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SidebandSection {
    pub red: f64,
    pub blue: f64,
    pub frequency_khz: f64,
}

impl Default for SidebandSection {
    fn default() -> Self {
        SidebandSection { red: 0.037, blue: 0.5, frequency_khz: 750.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LorentzSection {
    pub delta_khz: f64,
    pub field_gauss: f64,
    pub samples: usize,
    pub basis: usize,
}

impl Default for LorentzSection {
    fn default() -> Self {
        LorentzSection { delta_khz: 1.75, field_gauss: 5.0, samples: 128, basis: quantum::DEFAULT_BASIS }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {}", e.message())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks everything the active command will use, before any work.
    pub fn validate(&self) -> Result<(), CliError> {
        let Some(cmd) = self.run.command else {
            return Err(CliError::Usage("no command given".into()));
        };
        use CommandName::*;
        match cmd {
            Crystal => self.trap.trap().validate()?,
            Modes => {
                self.trap.trap().validate()?;
                range("modes.omega_x_range_mhz", self.modes.omega_x_range_mhz, Lower::Positive)?;
                steps("modes.steps", self.modes.steps, self.modes.omega_x_range_mhz)?;
            }
            Rotor => {
                delta("rotor.delta_khz", self.rotor.delta_khz)?;
                samples(self.rotor.samples)?;
            }
            RateScan => {
                let r = &self.rate_scan;
                range("rate_scan.delta_range_khz", r.delta_range_khz, Lower::Positive)?;
                steps("rate_scan.steps", r.steps, r.delta_range_khz)?;
                samples(r.samples)?;
                basis(r.basis)?;
            }
            AbRate => {
                let r = &self.ab_rate;
                delta("ab_rate.delta_khz", r.delta_khz)?;
                range("ab_rate.flux_range", r.flux_range, Lower::Any)?;
                steps("ab_rate.steps", r.steps, r.flux_range)?;
                samples(r.samples)?;
                basis(r.basis)?;
            }
            Probability => {
                let p = &self.probability;
                self.model.model()?;
                finite("probability.flux", p.flux)?;
                if p.golden_rule {
                    range("probability.flux_range", p.flux_range, Lower::Any)?;
                    steps("probability.steps", p.steps, p.flux_range)?;
                } else {
                    range("probability.tau_range_ms", p.tau_range_ms, Lower::NonNegative)?;
                    steps("probability.steps", p.steps, p.tau_range_ms)?;
                }
            }
            TimeScan => {
                let s = &self.time_scan;
                self.model.model()?;
                finite("time_scan.flux", s.flux)?;
                range("time_scan.tau_range_ms", s.tau_range_ms, Lower::NonNegative)?;
                steps("time_scan.steps", s.steps, s.tau_range_ms)?;
                shots(s.shots)?;
            }
            AbScan => {
                let s = &self.ab_scan;
                self.model.model()?;
                range("ab_scan.flux_range", s.flux_range, Lower::Any)?;
                steps("ab_scan.steps", s.steps, s.flux_range)?;
                finite("ab_scan.offset", s.offset)?;
                if !(s.tau_ms >= 0.0) || !s.tau_ms.is_finite() {
                    return Err(CliError::Usage("ab_scan.tau_ms must be non-negative".into()));
                }
                shots(s.shots)?;
            }
            Refit => {
                if self.refit.input.is_none() {
                    return Err(CliError::Usage("refit needs an input file".into()));
                }
            }
            Thermo => {
                let t = &self.thermo;
                for (name, v) in [("thermo.start_khz", t.start_khz), ("thermo.end_khz", t.end_khz), ("thermo.duration_ms", t.duration_ms)] {
                    positive(name, v)?;
                }
                if t.steps < 2 {
                    return Err(CliError::Usage("thermo.steps must be at least 2".into()));
                }
                match t.start_nbar {
                    Some(n) if !(n >= 0.0) || !n.is_finite() => {
                        return Err(CliError::Usage("thermo.start_nbar must be non-negative".into()))
                    }
                    Some(_) => {}
                    None => positive("thermo.start_temperature_uk", t.start_temperature_uk)?,
                }
                for (name, v) in [("thermo.heating_down", t.heating_down), ("thermo.heating_up", t.heating_up)] {
                    if !(v >= 0.0) || !v.is_finite() {
                        return Err(CliError::Usage(format!("{name} must be non-negative")));
                    }
                }
                if !(t.p0_min > 0.0 && t.p0_min < 1.0) {
                    return Err(CliError::Usage("thermo.p0_min must lie in (0, 1)".into()));
                }
            }
            Sideband => positive("sideband.frequency_khz", self.sideband.frequency_khz)?,
            Flux => {
                self.field.setup()?;
            }
            Lorentz => {
                let l = &self.lorentz;
                delta("lorentz.delta_khz", l.delta_khz)?;
                if !(l.field_gauss >= 0.0) || !l.field_gauss.is_finite() {
                    return Err(CliError::Usage("lorentz.field_gauss must be non-negative".into()));
                }
                samples(l.samples)?;
                basis(l.basis)?;
            }
        }
        Ok(())
    }
}

fn finite(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{name} must be finite")))
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{name} must be positive")))
    }
}

fn delta(name: &str, v: f64) -> Result<(), CliError> {
    positive(name, v)
}

#[derive(Clone, Copy)]
enum Lower {
    Any,
    NonNegative,
    Positive,
}

fn range(name: &str, r: [f64; 2], lower: Lower) -> Result<(), CliError> {
    let [lo, hi] = r;
    let ok_lower = match lower {
        Lower::Any => true,
        Lower::NonNegative => lo >= 0.0,
        Lower::Positive => lo > 0.0,
    };
    if !(lo.is_finite() && hi.is_finite() && lo <= hi && ok_lower) {
        return Err(CliError::Usage(format!("{name}: invalid range {lo}..{hi}")));
    }
    Ok(())
}

fn steps(name: &str, n: usize, r: [f64; 2]) -> Result<(), CliError> {
    if n == 0 || (n == 1 && r[0] != r[1]) {
        return Err(CliError::Usage(format!("{name} must be at least 2 for a non-degenerate range")));
    }
    Ok(())
}

fn samples(n: usize) -> Result<(), CliError> {
    if n < rotor::MIN_SAMPLES {
        return Err(CliError::Usage(format!("samples must be at least {}", rotor::MIN_SAMPLES)));
    }
    Ok(())
}

fn basis(n: usize) -> Result<(), CliError> {
    if n < quantum::MIN_BASIS || n % 2 == 0 {
        return Err(CliError::Usage(format!("basis must be odd and at least {}", quantum::MIN_BASIS)));
    }
    Ok(())
}

fn shots(n: u64) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Usage("shots must be at least 1".into()));
    }
    Ok(())
}
