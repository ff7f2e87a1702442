use ionrotor_core::abfield::{lorentz_estimates, LorentzInputs};
use ionrotor_core::consts::{angular, hertz, GAUSS};
use ionrotor_core::exec::linspace;
use ionrotor_core::quantum::{self, band_levels, golden_rule_envelope, transition_probability};
use ionrotor_core::rotor::rotor_potential;
use ionrotor_core::{Executor, Result as CoreResult};

use super::hz;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::exec::{Pool, Progress};
use crate::output::Table;

pub fn rate_scan(cfg: &RunConfig, pool: &Pool, log: Progress) -> Result<Table, CliError> {
    let s = &cfg.rate_scan;
    let [lo, hi] = s.delta_range_khz;
    let deltas: Vec<f64> = linspace(lo, hi, s.steps).into_iter().map(|d| angular(d * 1e3)).collect();
    log.say(format!("rate-scan: {} points", deltas.len()));
    let points = quantum::rate_vs_confinement(&cfg.trap.trap(), &deltas, s.samples, s.basis, pool)?;
    let slopes = quantum::rate_slopes(&points);
    let mut t = Table::new(
        "rate-scan",
        &[
            ("delta", "kHz"),
            ("nu", "Hz"),
            ("slope", "Hz/Hz"),
            ("barrier", "Hz"),
            ("well_frequency", "Hz"),
            ("ground_level", "Hz"),
        ],
    );
    for (p, slope) in points.iter().zip(slopes) {
        t.push(vec![
            (hertz(p.delta) / 1e3).into(),
            p.nu.into(),
            slope.into(),
            hz(p.barrier).into(),
            hertz(p.well_frequency).into(),
            hz(p.ground_level).into(),
        ]);
    }
    Ok(t)
}

pub fn ab_rate(cfg: &RunConfig, pool: &Pool, log: Progress) -> Result<Table, CliError> {
    let s = &cfg.ab_rate;
    let rp = rotor_potential(&cfg.trap.at_delta(s.delta_khz), s.samples, pool)?;
    let fluxes = linspace(s.flux_range[0], s.flux_range[1], s.steps);
    log.say(format!("ab-rate: {} flux points", fluxes.len()));
    let sols = pool.map(&fluxes, |f| band_levels(&rp, f, s.basis)).into_iter().collect::<CoreResult<Vec<_>>>()?;
    let mut t = Table::new(
        "ab-rate",
        &[("flux", "quanta"), ("nu", "Hz"), ("tight_binding", "Hz"), ("e0", "Hz"), ("e1", "Hz")],
    );
    let mut edge = 0.0f64;
    for sol in &sols {
        let nu0 = 4.0 * sol.j_amp;
        edge = edge.max(sol.edge_weight);
        t.push(vec![
            sol.flux_quanta.into(),
            sol.nu.into(),
            (nu0 * (std::f64::consts::PI * sol.flux_quanta).cos().abs()).into(),
            hz(sol.levels[0]).into(),
            hz(sol.levels[1]).into(),
        ]);
    }
    if let Some(first) = sols.first() {
        t.note("nu0_hz", 4.0 * first.j_amp);
        t.note("j_amp_hz", first.j_amp);
    }
    t.note("barrier_hz", hz(rp.barrier));
    t.note("max_edge_weight", edge);
    Ok(t)
}

pub fn probability(cfg: &RunConfig) -> Result<Table, CliError> {
    let s = &cfg.probability;
    if s.golden_rule {
        let mut t = Table::new("probability", &[("flux", "quanta"), ("envelope", "")]);
        for f in linspace(s.flux_range[0], s.flux_range[1], s.steps) {
            t.push(vec![f.into(), golden_rule_envelope(f).into()]);
        }
        return Ok(t);
    }
    let model = cfg.model.model()?;
    let mut t = Table::new("probability", &[("tau", "ms"), ("probability", "")]);
    for tau in linspace(s.tau_range_ms[0], s.tau_range_ms[1], s.steps) {
        t.push(vec![tau.into(), transition_probability(s.flux, tau / 1e3, &model)?.into()]);
    }
    t.note("flux", s.flux);
    Ok(t)
}

pub fn lorentz(cfg: &RunConfig, pool: &Pool, log: Progress) -> Result<Table, CliError> {
    let s = &cfg.lorentz;
    let trap = cfg.trap.at_delta(s.delta_khz);
    let rp = rotor_potential(&trap, s.samples, pool)?;
    let sol = band_levels(&rp, 0.0, s.basis)?;
    let inp = LorentzInputs {
        barrier: rp.barrier,
        energy: sol.levels[0],
        mass: trap.n_ions as f64 * trap.ion_mass,
        field: s.field_gauss * GAUSS,
        rate: sol.nu,
        r0: rp.r0,
        omega_restoring: trap.omega_z,
    };
    let e = lorentz_estimates(&inp)?;
    log.say(format!("lorentz: F_mean {:.2e} N, F_max {:.2e} N", e.f_mean, e.f_max));
    let mut t = Table::new(
        "lorentz",
        &[
            ("field", "G"),
            ("barrier", "Hz"),
            ("level", "Hz"),
            ("rate", "Hz"),
            ("r0", "um"),
            ("v_max", "m/s"),
            ("f_max", "N"),
            ("v_mean", "m/s"),
            ("f_mean", "N"),
            ("radius_shift", "fm"),
        ],
    );
    t.push(vec![
        s.field_gauss.into(),
        hz(inp.barrier).into(),
        hz(inp.energy).into(),
        inp.rate.into(),
        (inp.r0 * 1e6).into(),
        e.v_max.into(),
        e.f_max.into(),
        e.v_mean.into(),
        e.f_mean.into(),
        (e.radius_shift * 1e15).into(),
    ]);
    Ok(t)
}
