//! End-to-end acceptance checks. Prints one line per criterion and exits
//! non-zero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use ionrotor_core::abfield::{self, FieldSetup, LorentzInputs};
use ionrotor_core::consts::{angular, hertz, GAUSS, PLANCK};
use ionrotor_core::crystal::{self, find_equilibrium};
use ionrotor_core::expsim::{self, FLUX_OFFSET, FLUX_SCAN_TAU};
use ionrotor_core::modes::{self, normal_modes, ModeLabel};
use ionrotor_core::quantum::{self, band_levels, DynamicsModel};
use ionrotor_core::rotor::rotor_potential;
use ionrotor_core::thermo::{self, RampStart};
use ionrotor_core::{linalg, Sequential, TrapConfig};

/// Operating point of the tunnelling regime, ωx − ωz (Hz).
const TUNNELLING_DELTA_HZ: f64 = 1.75e3;
const SAMPLES: usize = 128;
const BASIS: usize = 41;

struct Check {
    label: String,
    pass: bool,
}

#[derive(Default)]
struct Criterion {
    checks: Vec<Check>,
}

impl Criterion {
    fn check(&mut self, pass: bool, label: impl Into<String>) {
        self.checks.push(Check { label: label.into(), pass });
    }

    fn within_rel(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        let rel = (got - want).abs() / want.abs();
        self.check(rel <= tol, format!("{what} = {got:.6e} vs {want:.6e} (rel {rel:.2e}, tol {tol:.0e})"));
    }

    fn within_factor(&mut self, what: &str, got: f64, want: f64, factor: f64) {
        let ok = got > 0.0 && got >= want / factor && got <= want * factor;
        self.check(ok, format!("{what} = {got:.4e} vs {want:.4e} (factor {factor})"));
    }
}

fn tunnelling_trap() -> TrapConfig {
    TrapConfig::tunnelling(angular(TUNNELLING_DELTA_HZ))
}

fn c1() -> Criterion {
    let mut c = Criterion::default();
    let mut trap = TrapConfig::experimental();
    trap.omega_x = trap.omega_z;
    let eq = find_equilibrium(&trap, None).unwrap();
    let centre = eq.centroid();
    let radii: Vec<f64> = eq
        .positions
        .iter()
        .map(|p| ((p[0] - centre[0]).powi(2) + (p[1] - centre[1]).powi(2) + (p[2] - centre[2]).powi(2)).sqrt())
        .collect();
    let r = radii.iter().sum::<f64>() / 3.0;
    let analytic = trap.length_unit() / 3f64.powf(1.0 / 6.0);
    c.within_rel("circumradius vs l/3^(1/6)", r, analytic, 1e-9);
    let spread = radii.iter().map(|x| (x - r).abs()).fold(0.0, f64::max) / r;
    c.check(spread < 1e-9, format!("equilateral (radius spread {spread:.1e})"));
    c.within_rel("circumradius (m)", r, 3.42e-6, 0.01);
    c.within_rel("loop area pi r0^2 (m^2)", PI * r * r, 37e-12, 0.03);
    c
}

fn c2() -> Criterion {
    let mut c = Criterion::default();
    let trap = TrapConfig::experimental();
    let wc = modes::zigzag_critical_omega_x(&trap).unwrap();
    c.within_rel("zigzag critical wx vs sqrt(2.4) wz", wc, 2.4f64.sqrt() * trap.omega_z, 1e-3);
    c.within_rel("zigzag critical wx vs 2pi x 1.75 MHz", wc, angular(1.75e6), 0.02);
    let mut iso = trap;
    iso.omega_x = iso.omega_z;
    let s = normal_modes(&find_equilibrium(&iso, None).unwrap()).unwrap();
    let rot = s.frequency_of(ModeLabel::Rotational).unwrap().abs();
    c.check(rot < 1e-6 * iso.omega_z, format!("rotational mode at wx = wz: {:.2e} wz", rot / iso.omega_z));
    c
}

fn c3() -> Criterion {
    let mut c = Criterion::default();
    let trap = TrapConfig::experimental();
    let s = normal_modes(&find_equilibrium(&trap, None).unwrap()).unwrap();
    for (label, w) in [(ModeLabel::ComX, trap.omega_x), (ModeLabel::ComY, trap.omega_y), (ModeLabel::ComZ, trap.omega_z)] {
        let got = s.frequency_of(label).expect("com mode labelled");
        c.within_rel(&format!("{label} frequency"), got, w, 1e-9);
    }
    let rot = s.frequency_of(ModeLabel::Rotational).unwrap();
    c.within_rel("rotational mode at wx = 2pi x 1.523 MHz (Hz)", hertz(rot), 750e3, 0.05);
    c
}

fn c4() -> Criterion {
    let mut c = Criterion::default();
    let trap = tunnelling_trap();
    let rp = rotor_potential(&trap, SAMPLES, &Sequential).unwrap();
    c.within_rel("barrier / h (Hz)", rp.barrier / PLANCK, 250.0, 0.3);
    c.within_rel("well frequency (Hz)", hertz(rp.well_frequency), 180.0, 0.3);
    let s = normal_modes(&rp.equilibrium).unwrap();
    let rot = s.frequency_of(ModeLabel::Rotational).unwrap();
    c.within_rel("well frequency vs rotational normal mode", rp.well_frequency, rot, 0.02);
    c
}

fn c5() -> Criterion {
    let mut c = Criterion::default();
    let rp = rotor_potential(&tunnelling_trap(), SAMPLES, &Sequential).unwrap();
    let s = band_levels(&rp, 0.0, BASIS).unwrap();
    c.within_rel("ground level / h (Hz)", s.levels[0] / PLANCK, 90.0, 0.3);
    c.within_factor("nu at zero flux (Hz)", s.nu, 7.6, 2.0);
    let deltas: Vec<f64> = [1.9e3, 2.0e3, 2.1e3].iter().map(|&d| angular(d)).collect();
    let pts = quantum::rate_vs_confinement(&TrapConfig::experimental(), &deltas, SAMPLES, BASIS, &Sequential).unwrap();
    let slope = quantum::rate_slopes(&pts)[1];
    c.check(slope < 0.0, format!("slope near 2 kHz is negative ({slope:.4e} Hz/Hz)"));
    c.within_factor("|slope| near 2 kHz (Hz/Hz)", slope.abs(), 0.008, 2.0);
    c
}

fn c6() -> Criterion {
    let mut c = Criterion::default();
    let rp = rotor_potential(&tunnelling_trap(), SAMPLES, &Sequential).unwrap();
    let nu0 = band_levels(&rp, 0.0, BASIS).unwrap().nu;
    let mut worst = 0.0f64;
    let mut gauge = 0.0f64;
    for k in 0..40 {
        let f = k as f64 / 40.0;
        let a = band_levels(&rp, f, BASIS).unwrap();
        worst = worst.max((a.nu - nu0 * (PI * f).cos().abs()).abs() / nu0);
        let b = band_levels(&rp, f + 1.0, BASIS).unwrap();
        for (x, y) in a.levels.iter().zip(&b.levels) {
            gauge = gauge.max((x - y).abs() / x.abs());
        }
    }
    c.check(worst <= 0.05, format!("|nu - nu0 |cos(pi flux)|| <= {worst:.2e} nu0 over [0, 1)"));
    c.check(gauge <= 1e-9, format!("flux + 1 leaves the spectrum unchanged (rel {gauge:.1e})"));
    let mut env = 0.0f64;
    for k in 0..200 {
        let f = -2.0 + 0.02 * k as f64;
        env = env.max((quantum::golden_rule_envelope(f) - (PI * f).cos().powi(2)).abs());
    }
    c.check(env < 1e-14, format!("golden-rule envelope equals cos^2 (max dev {env:.1e})"));
    c
}

fn c7() -> Criterion {
    let mut c = Criterion::default();
    let hi = angular(750e3);
    let lo = angular(180.0);
    let t = thermo::temperature_from_nbar(hi, 0.08).unwrap();
    c.within_rel("T at nbar 0.08, 750 kHz (K)", t, 10e-6, 0.05);
    let (times, omegas) = thermo::exponential_schedule(hi, lo, 0.1, 400).unwrap();
    let ideal = thermo::adiabatic_ramp(&times, &omegas, RampStart::Temperature(10e-6), 0.0).unwrap();
    c.within_rel("ideal ramp final T from 10 uK (K)", ideal.last().temperature, 2.4e-9, 0.05);
    let n0 = ideal.points[0].nbar;
    let heated = thermo::adiabatic_ramp(&times, &omegas, RampStart::Nbar(n0), 4.0 - n0).unwrap();
    c.within_rel("heated ramp final T, nbar 4 (K)", heated.last().temperature, 40e-9, 0.05);
    let tmax = thermo::ground_state_threshold(lo, 0.1).unwrap();
    // 82 nK to two significant figures, below 90 nK
    c.check((81.5e-9..90e-9).contains(&tmax), format!("T_max for p0 > 0.1 = {:.2} nK, expected 82 to 90 nK", tmax * 1e9));
    let p0 = 1.0 / (1.0 + 4.0);
    c.within_rel("thermal p0 at nbar 4 vs amplitude 0.19", p0, 0.19, 0.10);
    c
}

fn c8() -> Criterion {
    let mut c = Criterion::default();
    let r = abfield::flux(&FieldSetup::experimental()).unwrap();
    let q = r.flux_quanta.abs();
    c.check((q - 1.52).abs() < 0.005, format!("|flux| = {q:.4} quanta, expected 1.52"));
    c.check((1.3..=1.7).contains(&q), "inside 1.5 +/- 0.2");
    c
}

fn c9() -> Criterion {
    let mut c = Criterion::default();
    let truth = DynamicsModel::published();
    let want = [truth.p0, truth.nu, truth.t2, truth.v];
    let taus: Vec<f64> = (0..51).map(|k| 0.01 * k as f64).collect();
    let settings: Vec<f64> = (0..41).map(|k| -1.0 + 0.05 * k as f64).collect();
    let seeds: Vec<u64> = (0..100).collect();

    let results: Vec<([bool; 4], f64, f64)> = std::thread::scope(|scope| {
        let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(8);
        let chunks: Vec<&[u64]> = seeds.chunks(seeds.len().div_ceil(workers)).collect();
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|chunk| {
                let (taus, settings) = (&taus, &settings);
                scope.spawn(move || {
                    chunk
                        .iter()
                        .map(|&seed| {
                            let s = expsim::simulate_time_scan(&truth, 0.0, taus, 400, seed).unwrap();
                            let f = expsim::fit_time_scan(&s).unwrap();
                            let hit = [0, 1, 2, 3].map(|k| (f.values[k] - want[k]).abs() <= 2.0 * f.std_errors[k]);
                            let s = expsim::simulate_flux_scan(&truth, settings, FLUX_OFFSET, FLUX_SCAN_TAU, 800, seed).unwrap();
                            let g = expsim::fit_flux_scan(&s).unwrap();
                            (hit, g.values[1], g.std_errors[1])
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
    });

    for (k, name) in expsim::TIME_PARAMS.iter().enumerate() {
        let n = results.iter().filter(|r| r.0[k]).count();
        c.check(n >= 90, format!("{name} within 2 sigma in {n}/100 seeds"));
    }
    let worst_se = results.iter().map(|r| r.2).fold(0.0, f64::max);
    c.check(worst_se <= 0.1, format!("xi standard error <= {worst_se:.3} in every seed"));
    let mean_xi = results.iter().map(|r| r.1).sum::<f64>() / results.len() as f64;
    c.check((mean_xi - 0.99).abs() <= 0.07, format!("mean fitted xi = {mean_xi:.4}, consistent with 0.99 +/- 0.07"));
    c
}

fn c10() -> Criterion {
    let mut c = Criterion::default();
    let trap = tunnelling_trap();
    let rp = rotor_potential(&trap, SAMPLES, &Sequential).unwrap();
    let s = band_levels(&rp, 0.0, BASIS).unwrap();
    let inp = LorentzInputs {
        barrier: rp.barrier,
        energy: s.levels[0],
        mass: 3.0 * trap.ion_mass,
        field: 5.0 * GAUSS,
        rate: s.nu,
        r0: rp.r0,
        omega_restoring: trap.omega_z,
    };
    let e = abfield::lorentz_estimates(&inp).unwrap();
    let order = |x: f64, p: f64| (x.log10() - p).abs();
    c.check(order(e.f_mean, -27.0) <= 0.5, format!("F_mean = {:.2e} N ~ 1e-27", e.f_mean));
    c.check(order(e.f_max, -26.0) <= 1.0, format!("F_max = {:.2e} N within one order of 1e-26", e.f_max));
    c.check((1e-16..1e-13).contains(&e.radius_shift), format!("radius shift = {:.2e} m (femtometre scale)", e.radius_shift));
    c
}

fn c11() -> Criterion {
    let mut c = Criterion::default();
    let trap = TrapConfig::experimental();
    let eq = find_equilibrium(&trap, None).unwrap();
    let h = modes::hessian(&eq).unwrap();
    let mut worst = 0.0f64;
    let step = 1e-6 * trap.length_unit();
    for i in 0..eq.positions.len() {
        for d in 0..3 {
            let mut p = eq.positions.clone();
            let mut m = eq.positions.clone();
            p[i][d] += step;
            m[i][d] -= step;
            let gp = crystal::potential_gradient(&p, &trap).unwrap();
            let gm = crystal::potential_gradient(&m, &trap).unwrap();
            for j in 0..eq.positions.len() {
                for e in 0..3 {
                    let fd = (gp[j][e] - gm[j][e]) / (2.0 * step);
                    worst = worst.max((fd - h[(3 * i + d, 3 * j + e)]).abs());
                }
            }
        }
    }
    let scale = h.frobenius_norm();
    c.check(worst / scale <= 1e-6, format!("analytic vs finite-difference Hessian (rel {:.1e})", worst / scale));

    let eig = linalg::symmetric_eigen(&h);
    let mut res = 0.0f64;
    for k in 0..h.rows() {
        let v = eig.vector(k);
        let hv = h.mul_vec(&v);
        let r: f64 = hv.iter().zip(&v).map(|(a, b)| (a - eig.values[k] * b).powi(2)).sum::<f64>().sqrt();
        res = res.max(r / scale);
    }
    let rp = rotor_potential(&tunnelling_trap(), SAMPLES, &Sequential).unwrap();
    let small = band_levels(&rp, 0.3, BASIS).unwrap();
    let large = band_levels(&rp, 0.3, 2 * BASIS + 1).unwrap();
    res = res.max(small.relative_residual).max(large.relative_residual);
    c.check(res <= 1e-9, format!("eigen-residuals <= {res:.1e}"));
    let change = (large.nu - small.nu).abs() / small.nu;
    c.check(change < 1e-3, format!("basis {BASIS} -> {} changes nu by {change:.1e}", 2 * BASIS + 1));

    let mut inside = true;
    let models = [
        DynamicsModel::published(),
        DynamicsModel { p0: 1.0, nu: 30.0, t2: 0.01, v: 0.0 },
        DynamicsModel { p0: 0.0, nu: 0.0, t2: 1e3, v: 100.0 },
    ];
    for m in &models {
        for k in 0..200 {
            for f in [0.0, 0.25, 0.5, 1.52] {
                let p = quantum::transition_probability(f, 0.005 * k as f64, m).unwrap();
                inside &= (0.0..=1.0).contains(&p);
            }
        }
    }
    c.check(inside, "transition probabilities within [0, 1]");
    c
}

type CriterionFn = fn() -> Criterion;

fn main() -> ExitCode {
    let criteria: [(&str, CriterionFn); 11] = [
        ("equilibrium geometry", c1),
        ("structural critical points", c2),
        ("mode values", c3),
        ("rotor potential", c4),
        ("tunnelling", c5),
        ("flux law", c6),
        ("thermometry", c7),
        ("flux geometry", c8),
        ("fit recovery", c9),
        ("Lorentz estimates", c10),
        ("numerical hygiene", c11),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let c = run();
        let pass = c.checks.iter().all(|k| k.pass);
        let failures: Vec<&str> = c.checks.iter().filter(|k| !k.pass).map(|k| k.label.as_str()).collect();
        println!(
            "criterion {:>2} {:<28} {}  ({:.1} s){}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            if pass { String::new() } else { format!(": {}", failures.join("; ")) }
        );
        for k in &c.checks {
            println!("    [{}] {}", if k.pass { "ok" } else { "!!" }, k.label);
        }
        if !pass {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
