use std::collections::HashSet;

use serde_json::json;

use ionrotor_core::consts::{angular, hertz};
use ionrotor_core::crystal::{enumerate_minima, find_equilibrium};
use ionrotor_core::modes::sweep_confinement;
use ionrotor_core::rotor::rotor_potential;

use super::hz;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::exec::{Pool, Progress};
use crate::output::{Cell, Table};

pub fn crystal(cfg: &RunConfig, log: Progress) -> Result<Table, CliError> {
    let trap = cfg.trap.trap();
    let minima = if cfg.crystal.all_minima {
        enumerate_minima(&trap)?
    } else {
        vec![find_equilibrium(&trap, None)?]
    };
    log.say(format!("crystal: {} minimum(s)", minima.len()));
    let mut t = Table::new(
        "crystal",
        &[("minimum", ""), ("ion", ""), ("x", "um"), ("y", "um"), ("z", "um"), ("radius", "um"), ("energy", "J")],
    );
    let mut info = Vec::new();
    for (m, c) in minima.iter().enumerate() {
        let g = c.centroid();
        for (i, p) in c.positions.iter().enumerate() {
            let r = ((p[0] - g[0]).powi(2) + (p[1] - g[1]).powi(2) + (p[2] - g[2]).powi(2)).sqrt();
            t.push(vec![
                m.into(),
                i.into(),
                (p[0] * 1e6).into(),
                (p[1] * 1e6).into(),
                (p[2] * 1e6).into(),
                (r * 1e6).into(),
                c.energy.into(),
            ]);
        }
        info.push(json!({
            "energy_j": c.energy,
            "collinear": c.is_collinear(),
            "soft_rotation": c.soft_rotation,
            "gradient_norm": c.gradient_norm,
        }));
    }
    t.note("length_unit_um", trap.length_unit() * 1e6);
    t.note("minima", info);
    Ok(t)
}

pub fn modes(cfg: &RunConfig, pool: &Pool, log: Progress) -> Result<Table, CliError> {
    let trap = cfg.trap.trap();
    let [lo, hi] = cfg.modes.omega_x_range_mhz;
    let table = sweep_confinement(&trap, angular(lo * 1e6), angular(hi * 1e6), cfg.modes.steps, pool)?;
    log.say(format!("modes: {} points after refinement", table.points.len()));

    let mut seen = HashSet::new();
    let names: Vec<String> = table
        .tracks
        .iter()
        .enumerate()
        .map(|(k, tr)| if seen.insert(tr.name.clone()) { tr.name.clone() } else { format!("{}_{k}", tr.name) })
        .collect();
    let mut columns: Vec<(&str, &'static str)> = vec![("omega_x", "MHz"), ("stable", "")];
    columns.extend(names.iter().map(|n| (n.as_str(), "kHz")));
    let mut t = Table::new("modes", &columns);
    let freqs: Vec<Vec<f64>> = (0..table.tracks.len()).map(|k| table.track_frequencies(k)).collect();
    for (i, p) in table.points.iter().enumerate() {
        let mut row: Vec<Cell> = vec![(hertz(p.omega_x) / 1e6).into(), u64::from(p.spectrum.stability).into()];
        row.extend(freqs.iter().map(|f| Cell::from(hertz(f[i]) / 1e3)));
        t.push(row);
    }
    t.note("requested_steps", cfg.modes.steps);
    Ok(t)
}

pub fn rotor(cfg: &RunConfig, pool: &Pool, log: Progress) -> Result<Table, CliError> {
    let trap = cfg.trap.at_delta(cfg.rotor.delta_khz);
    let rp = rotor_potential(&trap, cfg.rotor.samples, pool)?;
    log.say(format!(
        "rotor: barrier {:.1} Hz, well {:.1} Hz, r0 {:.3} um",
        hz(rp.barrier),
        hertz(rp.well_frequency),
        rp.r0 * 1e6
    ));
    let mut t = Table::new("rotor", &[("theta", "rad"), ("u", "Hz")]);
    for (th, u) in rp.theta_grid.iter().zip(&rp.u) {
        t.push(vec![(*th).into(), hz(*u).into()]);
    }
    t.note("delta_khz", cfg.rotor.delta_khz);
    t.note("barrier_hz", hz(rp.barrier));
    t.note("well_frequency_hz", hertz(rp.well_frequency));
    t.note("r0_um", rp.r0 * 1e6);
    t.note("inertia_kg_m2", rp.inertia);
    t.note("fourier_hz", rp.fourier.iter().map(|c| hz(*c)).collect::<Vec<_>>());
    Ok(t)
}
