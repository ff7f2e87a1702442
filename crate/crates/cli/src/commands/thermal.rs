use ionrotor_core::consts::{angular, hertz};
use ionrotor_core::thermo::{self, RampProfile, RampStart, ThermalState};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::exec::Progress;
use crate::output::Table;

pub fn thermo(cfg: &RunConfig, log: Progress) -> Result<Table, CliError> {
    let s = &cfg.thermo;
    let (hi, lo) = (angular(s.start_khz * 1e3), angular(s.end_khz * 1e3));
    let duration = s.duration_ms / 1e3;
    let start = match s.start_nbar {
        Some(n) => RampStart::Nbar(n),
        None => RampStart::Temperature(s.start_temperature_uk / 1e6),
    };
    let legs: Vec<(&str, RampProfile)> = if s.round_trip {
        let (down, up) = thermo::round_trip(hi, lo, duration, s.steps, start, s.heating_down, s.heating_up)?;
        vec![("down", down), ("up", up)]
    } else {
        let (times, omegas) = thermo::exponential_schedule(hi, lo, duration, s.steps)?;
        vec![("down", thermo::adiabatic_ramp(&times, &omegas, start, s.heating_down)?)]
    };

    let mut t = Table::new(
        "thermo",
        &[
            ("leg", ""),
            ("t", "ms"),
            ("frequency", "kHz"),
            ("nbar", ""),
            ("temperature", "nK"),
            ("adiabaticity", ""),
        ],
    );
    for (leg, profile) in &legs {
        for p in &profile.points {
            t.push(vec![
                (*leg).into(),
                (p.t * 1e3).into(),
                (hertz(p.omega) / 1e3).into(),
                p.nbar.into(),
                (p.temperature * 1e9).into(),
                p.adiabaticity.into(),
            ]);
        }
        if profile.non_adiabatic {
            log.say(format!("thermo: warning: {leg} ramp exceeds adiabaticity {}", thermo::ADIABATICITY_LIMIT));
        }
    }
    let bottom = legs[0].1.last();
    let t_max = thermo::ground_state_threshold(lo, s.p0_min)?;
    log.say(format!(
        "thermo: {:.3} nK at {} kHz; ground population above {} needs T < {:.1} nK",
        bottom.temperature * 1e9,
        s.end_khz,
        s.p0_min,
        t_max * 1e9
    ));
    t.note("bottom_temperature_nk", bottom.temperature * 1e9);
    t.note("bottom_nbar", bottom.nbar);
    t.note("bottom_ground_population", 1.0 / (1.0 + bottom.nbar));
    t.note("threshold_temperature_nk", t_max * 1e9);
    if let Some((_, up)) = legs.get(1) {
        t.note("final_nbar", up.last().nbar);
    }
    t.note("non_adiabatic", legs.iter().any(|(_, p)| p.non_adiabatic));
    Ok(t)
}

pub fn sideband(cfg: &RunConfig) -> Result<Table, CliError> {
    let s = &cfg.sideband;
    let nbar = thermo::nbar_from_sidebands(s.red, s.blue)?;
    let state = ThermalState::from_nbar(angular(s.frequency_khz * 1e3), nbar)?;
    let mut t = Table::new(
        "sideband",
        &[
            ("red", ""),
            ("blue", ""),
            ("frequency", "kHz"),
            ("nbar", ""),
            ("temperature", "uK"),
            ("ground_population", ""),
        ],
    );
    t.push(vec![
        s.red.into(),
        s.blue.into(),
        s.frequency_khz.into(),
        nbar.into(),
        (state.temperature * 1e6).into(),
        state.ground_population.into(),
    ]);
    Ok(t)
}
