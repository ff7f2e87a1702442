use std::fs;
use std::path::Path;

use serde_json::json;

use ionrotor_core::exec::linspace;
use ionrotor_core::expsim::{self, FitResult, ShotSeries};

use super::Outputs;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::exec::Progress;
use crate::output::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    /// Axis is the waiting time.
    Time,
    /// Axis is the coil setting in flux quanta.
    Flux,
}

impl SeriesKind {
    fn axis_column(self) -> (&'static str, &'static str) {
        match self {
            SeriesKind::Time => ("tau", "ms"),
            SeriesKind::Flux => ("flux", "quanta"),
        }
    }

    /// Axis value as written, from the internal one.
    fn written(self, x: f64) -> f64 {
        match self {
            SeriesKind::Time => x * 1e3,
            SeriesKind::Flux => x,
        }
    }

    fn read(self, x: f64) -> f64 {
        match self {
            SeriesKind::Time => x / 1e3,
            SeriesKind::Flux => x,
        }
    }
}

const SERIES_COLUMNS: [(&str, &str); 4] = [("successes", ""), ("shots", ""), ("probability", ""), ("sigma", "")];

fn series_table(command: &'static str, kind: SeriesKind, s: &ShotSeries) -> Table {
    let mut cols = vec![kind.axis_column()];
    cols.extend(SERIES_COLUMNS);
    let mut t = Table::new(command, &cols);
    for i in 0..s.len() {
        t.push(vec![
            kind.written(s.axis[i]).into(),
            s.successes[i].into(),
            s.shots.into(),
            s.probabilities[i].into(),
            s.errors[i].into(),
        ]);
    }
    t
}

/// Scale from the fit's SI value to the CLI unit, and that unit.
fn param_unit(kind: SeriesKind, name: &str) -> (f64, &'static str) {
    match (kind, name) {
        (SeriesKind::Time, "nu" | "v") => (1.0, "Hz"),
        (SeriesKind::Time, "t2") => (1e3, "ms"),
        (SeriesKind::Flux, "xi") => (1.0, "quanta"),
        (SeriesKind::Flux, "theta0") => (1.0, "rad"),
        _ => (1.0, ""),
    }
}

fn fit_table(command: &'static str, kind: SeriesKind, fit: &FitResult) -> Table {
    let mut t = Table::new(command, &[("parameter", ""), ("value", ""), ("std_error", ""), ("unit", "")]);
    for (k, name) in fit.names.iter().enumerate() {
        let (scale, unit) = param_unit(kind, name);
        t.push(vec![
            name.as_str().into(),
            (fit.values[k] * scale).into(),
            (fit.std_errors[k] * scale).into(),
            unit.into(),
        ]);
    }
    t.note("chi2", fit.rss);
    t.note("converged", fit.converged);
    t.note("iterations", fit.iterations);
    t.note("warnings", fit.warnings.clone());
    t.note("covariance_si", fit.covariance.clone());
    t
}

fn report(log: Progress, fit: &FitResult) {
    let parts: Vec<String> = fit
        .names
        .iter()
        .zip(fit.values.iter().zip(&fit.std_errors))
        .map(|(n, (v, e))| format!("{n} = {v:.4} ± {e:.4}"))
        .collect();
    log.say(format!("fit: {}", parts.join(", ")));
    for w in &fit.warnings {
        log.say(format!("fit: warning: {w}"));
    }
}

fn with_fit(command: &'static str, kind: SeriesKind, series: &ShotSeries, fit: &FitResult, log: Progress) -> Outputs {
    report(log, fit);
    let fit_t = fit_table(command, kind, fit);
    let mut data = series_table(command, kind, series);
    let params: serde_json::Map<String, serde_json::Value> = fit
        .names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let (scale, unit) = param_unit(kind, name);
            let entry = json!({ "value": fit.values[k] * scale, "std_error": fit.std_errors[k] * scale, "unit": unit });
            (name.clone(), entry)
        })
        .collect();
    data.note("fit", params);
    Outputs { data, fit: Some(fit_t) }
}

pub fn time_scan(cfg: &RunConfig, log: Progress) -> Result<Outputs, CliError> {
    let s = &cfg.time_scan;
    let model = cfg.model.model()?;
    let taus: Vec<f64> = linspace(s.tau_range_ms[0], s.tau_range_ms[1], s.steps).into_iter().map(|t| t / 1e3).collect();
    log.say(format!("time-scan: {} points x {} shots, seed {}", taus.len(), s.shots, cfg.run.seed));
    let series = expsim::simulate_time_scan(&model, s.flux, &taus, s.shots, cfg.run.seed)?;
    let fit = expsim::fit_time_scan(&series)?;
    Ok(with_fit("time-scan", SeriesKind::Time, &series, &fit, log))
}

pub fn ab_scan(cfg: &RunConfig, log: Progress) -> Result<Outputs, CliError> {
    let s = &cfg.ab_scan;
    let model = cfg.model.model()?;
    let settings = linspace(s.flux_range[0], s.flux_range[1], s.steps);
    log.say(format!("ab-scan: {} points x {} shots, seed {}", settings.len(), s.shots, cfg.run.seed));
    let series = expsim::simulate_flux_scan(&model, &settings, s.offset, s.tau_ms / 1e3, s.shots, cfg.run.seed)?;
    let fit = expsim::fit_flux_scan(&series)?;
    Ok(with_fit("ab-scan", SeriesKind::Flux, &series, &fit, log))
}

pub fn refit(cfg: &RunConfig, log: Progress) -> Result<Outputs, CliError> {
    let path = cfg.refit.input.as_deref().ok_or_else(|| CliError::Usage("refit needs an input file".into()))?;
    let (kind, series) = read_series(path)?;
    log.say(format!("refit: {} points from {}", series.len(), path.display()));
    let fit = match kind {
        SeriesKind::Time => expsim::fit_time_scan(&series)?,
        SeriesKind::Flux => expsim::fit_flux_scan(&series)?,
    };
    report(log, &fit);
    Ok(fit_table("refit", kind, &fit).into())
}

/// Reads a shot-series CSV as written by `time-scan` or `ab-scan`. The
/// axis column in the header decides the kind; probabilities and errors
/// are recomputed from the counts.
pub fn read_series(path: &Path) -> Result<(SeriesKind, ShotSeries), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let bad = |m: String| CliError::Usage(format!("{}: {m}", path.display()));
    let header = text.lines().next().unwrap_or_default();
    let first = header.trim_start_matches('#').split(',').next().unwrap_or_default().trim();
    let kind = [SeriesKind::Time, SeriesKind::Flux]
        .into_iter()
        .find(|k| {
            let (n, u) = k.axis_column();
            first == format!("{n} ({u})")
        })
        .ok_or_else(|| bad(format!("not a shot series (first column `{first}`)")))?;

    let mut rd = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).from_reader(text.as_bytes());
    let (mut axis, mut successes, mut shots) = (Vec::new(), Vec::new(), None);
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |k: usize| rec.get(k).ok_or_else(|| bad(format!("row {}: missing column {k}", line + 1)));
        let x: f64 = field(0)?.parse().map_err(|e| bad(format!("row {}: {e}", line + 1)))?;
        let k: u64 = field(1)?.parse().map_err(|e| bad(format!("row {}: {e}", line + 1)))?;
        let n: u64 = field(2)?.parse().map_err(|e| bad(format!("row {}: {e}", line + 1)))?;
        match shots {
            None => shots = Some(n),
            Some(m) if m != n => return Err(bad("shots per point differ between rows".into())),
            _ => {}
        }
        axis.push(kind.read(x));
        successes.push(k);
    }
    let shots = shots.ok_or_else(|| bad("no data rows".into()))?;
    Ok((kind, ShotSeries::from_counts(axis, successes, shots)?))
}
