use ionrotor_core::abfield;
use ionrotor_core::consts::GAUSS;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::exec::Progress;
use crate::output::Table;

pub fn flux(cfg: &RunConfig, log: Progress) -> Result<Table, CliError> {
    let setup = cfg.field.setup()?;
    let r = abfield::flux(&setup)?;
    let step = abfield::tunable_field_per_quantum(&setup)?;
    log.say(format!("flux: {:.3} quanta through {} um^2", r.flux_quanta, cfg.field.loop_area_um2));
    let mut t = Table::new(
        "flux",
        &[
            ("b_perp", "G"),
            ("phi", "Wb"),
            ("flux_quanta", ""),
            ("flux_magnitude", ""),
            ("coil_per_quantum", "G"),
        ],
    );
    t.push(vec![
        (r.b_perp / GAUSS).into(),
        r.phi.into(),
        r.flux_quanta.into(),
        r.flux_quanta.abs().into(),
        (step / GAUSS).into(),
    ]);
    Ok(t)
}
