//! One function per subcommand. Each returns its data table and, for the
//! scan commands, a fit table.

mod field;
mod measurement;
mod spectrum;
mod structure;
mod thermal;

pub use measurement::{read_series, SeriesKind};

use crate::config::{CommandName, RunConfig};
use crate::error::CliError;
use crate::exec::{Pool, Progress};
use crate::output::Table;

#[derive(Debug)]
pub struct Outputs {
    pub data: Table,
    pub fit: Option<Table>,
}

impl From<Table> for Outputs {
    fn from(data: Table) -> Self {
        Outputs { data, fit: None }
    }
}

pub fn execute(cfg: &RunConfig, pool: &Pool, log: Progress) -> Result<Outputs, CliError> {
    let cmd = cfg.run.command.ok_or_else(|| CliError::Usage("no command given".into()))?;
    log.say(format!("{}: starting", cmd.as_str()));
    let out = match cmd {
        CommandName::Crystal => structure::crystal(cfg, log)?.into(),
        CommandName::Modes => structure::modes(cfg, pool, log)?.into(),
        CommandName::Rotor => structure::rotor(cfg, pool, log)?.into(),
        CommandName::RateScan => spectrum::rate_scan(cfg, pool, log)?.into(),
        CommandName::AbRate => spectrum::ab_rate(cfg, pool, log)?.into(),
        CommandName::Probability => spectrum::probability(cfg)?.into(),
        CommandName::Lorentz => spectrum::lorentz(cfg, pool, log)?.into(),
        CommandName::TimeScan => measurement::time_scan(cfg, log)?,
        CommandName::AbScan => measurement::ab_scan(cfg, log)?,
        CommandName::Refit => measurement::refit(cfg, log)?,
        CommandName::Thermo => thermal::thermo(cfg, log)?.into(),
        CommandName::Sideband => thermal::sideband(cfg)?.into(),
        CommandName::Flux => field::flux(cfg, log)?.into(),
    };
    log.say(format!("{}: done", cmd.as_str()));
    Ok(out)
}

/// Hz from an energy in J.
fn hz(energy: f64) -> f64 {
    energy / ionrotor_core::consts::PLANCK
}
