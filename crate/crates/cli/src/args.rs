//! Command-line flags and how they override the configuration.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{CommandName, Format, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "ionrotor", version, about = "Three-ion tunnelling rotor: crystals, modes, rotor spectrum, flux scans")]
pub struct Cli {
    /// TOML file with settings; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    pub dump_config: bool,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Data file; standard output when absent.
    #[arg(long, short, global = true, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Fit file for scan commands.
    #[arg(long, global = true, value_name = "FILE")]
    pub fit_output: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for scans (default: all cores).
    #[arg(long, short, global = true)]
    pub jobs: Option<usize>,
    /// No progress messages on standard error.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(flatten)]
    pub trap: TrapArgs,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Args)]
pub struct TrapArgs {
    #[arg(long, global = true, value_name = "MHZ")]
    pub omega_x: Option<f64>,
    #[arg(long, global = true, value_name = "MHZ")]
    pub omega_y: Option<f64>,
    #[arg(long, global = true, value_name = "MHZ")]
    pub omega_z: Option<f64>,
    #[arg(long, global = true, value_name = "AMU")]
    pub ion_mass: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub p0: Option<f64>,
    /// Tunnelling frequency at zero flux.
    #[arg(long, value_name = "HZ")]
    pub nu: Option<f64>,
    #[arg(long, value_name = "MS")]
    pub t2: Option<f64>,
    /// Decay rate of the incoherent part.
    #[arg(long, value_name = "HZ")]
    pub v: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equilibrium ion positions.
    Crystal {
        /// List every distinct minimum.
        #[arg(long)]
        all_minima: bool,
    },
    /// Normal-mode frequencies over a sweep of ωx.
    Modes {
        #[arg(long, value_name = "LO,HI", value_parser = parse_range)]
        omega_x_range: Option<[f64; 2]>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Effective rotor potential U(Θ).
    Rotor {
        /// ωx − ωz
        #[arg(long, value_name = "KHZ")]
        delta: Option<f64>,
        /// Samples per π/3 period.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Tunnelling rate against ωx − ωz.
    RateScan {
        #[arg(long, value_name = "LO,HI", value_parser = parse_range)]
        delta_range: Option<[f64; 2]>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        basis: Option<usize>,
    },
    /// Tunnelling rate against flux from exact diagonalization.
    AbRate {
        #[arg(long, value_name = "KHZ")]
        delta: Option<f64>,
        #[arg(long, value_name = "LO,HI", value_parser = parse_range, allow_hyphen_values = true)]
        flux_range: Option<[f64; 2]>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        basis: Option<usize>,
    },
    /// Transition probability against waiting time, or the golden-rule
    /// envelope against flux.
    Probability {
        #[arg(long, allow_hyphen_values = true)]
        flux: Option<f64>,
        #[arg(long, value_name = "LO,HI", value_parser = parse_range)]
        tau_range: Option<[f64; 2]>,
        #[arg(long, value_name = "LO,HI", value_parser = parse_range, allow_hyphen_values = true)]
        flux_range: Option<[f64; 2]>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        golden_rule: bool,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Simulated waiting-time scan with fit.
    TimeScan {
        #[arg(long, allow_hyphen_values = true)]
        flux: Option<f64>,
        #[arg(long, value_name = "LO,HI", value_parser = parse_range)]
        tau_range: Option<[f64; 2]>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        shots: Option<u64>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Simulated flux scan with fit.
    AbScan {
        /// Coil settings in flux quanta.
        #[arg(long, value_name = "LO,HI", value_parser = parse_range, allow_hyphen_values = true)]
        flux_range: Option<[f64; 2]>,
        #[arg(long)]
        steps: Option<usize>,
        /// Flux from the fixed field, quanta.
        #[arg(long, allow_hyphen_values = true)]
        offset: Option<f64>,
        #[arg(long, value_name = "MS")]
        tau: Option<f64>,
        #[arg(long)]
        shots: Option<u64>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Fit a shot-series CSV written by time-scan or ab-scan.
    Refit {
        input: Option<PathBuf>,
    },
    /// Temperature through an adiabatic frequency ramp.
    Thermo {
        #[arg(long, value_name = "KHZ")]
        start: Option<f64>,
        #[arg(long, value_name = "KHZ")]
        end: Option<f64>,
        #[arg(long, value_name = "MS")]
        duration: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        /// Starting temperature.
        #[arg(long, value_name = "UK", conflicts_with = "nbar0")]
        t0: Option<f64>,
        /// Starting occupation instead of a temperature.
        #[arg(long)]
        nbar0: Option<f64>,
        /// Quanta gained on the way down.
        #[arg(long)]
        heating_down: Option<f64>,
        /// Quanta gained on the way back up.
        #[arg(long)]
        heating_up: Option<f64>,
        #[arg(long)]
        round_trip: bool,
        #[arg(long)]
        p0_min: Option<f64>,
    },
    /// Occupation and temperature from sideband excitations.
    Sideband {
        #[arg(long)]
        red: Option<f64>,
        #[arg(long)]
        blue: Option<f64>,
        #[arg(long, value_name = "KHZ")]
        frequency: Option<f64>,
    },
    /// Flux through the rotor loop.
    Flux {
        #[arg(long, value_name = "G", allow_hyphen_values = true)]
        fixed: Option<f64>,
        #[arg(long, value_name = "G", allow_hyphen_values = true)]
        coil: Option<f64>,
        #[arg(long, value_name = "UM2")]
        loop_area: Option<f64>,
        #[arg(long, value_name = "DEG", allow_hyphen_values = true)]
        misalignment: Option<f64>,
    },
    /// Lorentz-force estimates for the tunnelling rotor.
    Lorentz {
        #[arg(long, value_name = "KHZ")]
        delta: Option<f64>,
        #[arg(long, value_name = "G")]
        field: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        basis: Option<usize>,
    },
}

/// `lo,hi` or a single value meaning `lo = hi`.
fn parse_range(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|e| format!("`{p}`: {e}"));
    match parts.as_slice() {
        [one] => {
            let v = num(one)?;
            Ok([v, v])
        }
        [lo, hi] => Ok([num(lo)?, num(hi)?]),
        _ => Err("expected LO,HI".into()),
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl ModelArgs {
    fn apply(self, cfg: &mut RunConfig) {
        set(&mut cfg.model.p0, self.p0);
        set(&mut cfg.model.nu_hz, self.nu);
        set(&mut cfg.model.t2_ms, self.t2);
        set(&mut cfg.model.v_hz, self.v);
    }
}

impl Cli {
    /// Lays the flags over `cfg`.
    pub fn apply(self, cfg: &mut RunConfig) {
        set(&mut cfg.run.format, self.format);
        if self.output.is_some() {
            cfg.run.output = self.output;
        }
        if self.fit_output.is_some() {
            cfg.run.fit_output = self.fit_output;
        }
        set(&mut cfg.run.seed, self.seed);
        set(&mut cfg.trap.omega_x_mhz, self.trap.omega_x);
        set(&mut cfg.trap.omega_y_mhz, self.trap.omega_y);
        set(&mut cfg.trap.omega_z_mhz, self.trap.omega_z);
        set(&mut cfg.trap.ion_mass_amu, self.trap.ion_mass);

        let Some(cmd) = self.command else { return };
        cfg.run.command = Some(cmd.name());
        match cmd {
            Command::Crystal { all_minima } => cfg.crystal.all_minima |= all_minima,
            Command::Modes { omega_x_range, steps } => {
                set(&mut cfg.modes.omega_x_range_mhz, omega_x_range);
                set(&mut cfg.modes.steps, steps);
            }
            Command::Rotor { delta, samples } => {
                set(&mut cfg.rotor.delta_khz, delta);
                set(&mut cfg.rotor.samples, samples);
            }
            Command::RateScan { delta_range, steps, samples, basis } => {
                let s = &mut cfg.rate_scan;
                set(&mut s.delta_range_khz, delta_range);
                set(&mut s.steps, steps);
                set(&mut s.samples, samples);
                set(&mut s.basis, basis);
            }
            Command::AbRate { delta, flux_range, steps, samples, basis } => {
                let s = &mut cfg.ab_rate;
                set(&mut s.delta_khz, delta);
                set(&mut s.flux_range, flux_range);
                set(&mut s.steps, steps);
                set(&mut s.samples, samples);
                set(&mut s.basis, basis);
            }
            Command::Probability { flux, tau_range, flux_range, steps, golden_rule, model } => {
                let s = &mut cfg.probability;
                set(&mut s.flux, flux);
                set(&mut s.tau_range_ms, tau_range);
                set(&mut s.flux_range, flux_range);
                set(&mut s.steps, steps);
                s.golden_rule |= golden_rule;
                model.apply(cfg);
            }
            Command::TimeScan { flux, tau_range, steps, shots, model } => {
                let s = &mut cfg.time_scan;
                set(&mut s.flux, flux);
                set(&mut s.tau_range_ms, tau_range);
                set(&mut s.steps, steps);
                set(&mut s.shots, shots);
                model.apply(cfg);
            }
            Command::AbScan { flux_range, steps, offset, tau, shots, model } => {
                let s = &mut cfg.ab_scan;
                set(&mut s.flux_range, flux_range);
                set(&mut s.steps, steps);
                set(&mut s.offset, offset);
                set(&mut s.tau_ms, tau);
                set(&mut s.shots, shots);
                model.apply(cfg);
            }
            Command::Refit { input } => {
                if input.is_some() {
                    cfg.refit.input = input;
                }
            }
            Command::Thermo { start, end, duration, steps, t0, nbar0, heating_down, heating_up, round_trip, p0_min } => {
                let s = &mut cfg.thermo;
                set(&mut s.start_khz, start);
                set(&mut s.end_khz, end);
                set(&mut s.duration_ms, duration);
                set(&mut s.steps, steps);
                if let Some(t) = t0 {
                    s.start_temperature_uk = t;
                    s.start_nbar = None;
                }
                if nbar0.is_some() {
                    s.start_nbar = nbar0;
                }
                set(&mut s.heating_down, heating_down);
                set(&mut s.heating_up, heating_up);
                s.round_trip |= round_trip;
                set(&mut s.p0_min, p0_min);
            }
            Command::Sideband { red, blue, frequency } => {
                let s = &mut cfg.sideband;
                set(&mut s.red, red);
                set(&mut s.blue, blue);
                set(&mut s.frequency_khz, frequency);
            }
            Command::Flux { fixed, coil, loop_area, misalignment } => {
                let s = &mut cfg.field;
                set(&mut s.fixed_gauss, fixed);
                set(&mut s.coil_gauss, coil);
                set(&mut s.loop_area_um2, loop_area);
                set(&mut s.misalignment_deg, misalignment);
            }
            Command::Lorentz { delta, field, samples, basis } => {
                let s = &mut cfg.lorentz;
                set(&mut s.delta_khz, delta);
                set(&mut s.field_gauss, field);
                set(&mut s.samples, samples);
                set(&mut s.basis, basis);
            }
        }
    }
}

impl Command {
    pub fn name(&self) -> CommandName {
        match self {
            Command::Crystal { .. } => CommandName::Crystal,
            Command::Modes { .. } => CommandName::Modes,
            Command::Rotor { .. } => CommandName::Rotor,
            Command::RateScan { .. } => CommandName::RateScan,
            Command::AbRate { .. } => CommandName::AbRate,
            Command::Probability { .. } => CommandName::Probability,
            Command::TimeScan { .. } => CommandName::TimeScan,
            Command::AbScan { .. } => CommandName::AbScan,
            Command::Refit { .. } => CommandName::Refit,
            Command::Thermo { .. } => CommandName::Thermo,
            Command::Sideband { .. } => CommandName::Sideband,
            Command::Flux { .. } => CommandName::Flux,
            Command::Lorentz { .. } => CommandName::Lorentz,
        }
    }
}
