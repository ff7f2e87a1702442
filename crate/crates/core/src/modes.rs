//! Normal modes of a crystal, their classification, and sweeps over the
//! radial confinement.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::crystal::{self, find_equilibrium, IonCrystal, TrapConfig, ZERO_MODE_TOL};
use crate::exec::{linspace, Executor};
use crate::linalg::{self, Matrix};
use crate::math;
use crate::minimize::{newton_minimize, NewtonOptions};
use crate::{Error, Result};

/// Overlap needed to call a mode a centre-of-mass mode.
pub const COM_OVERLAP: f64 = 0.99;
/// Overlap needed for the rotational and zigzag labels.
pub const PATTERN_OVERLAP: f64 = 0.9;
/// Relative frequency jump between sweep steps that triggers refinement.
pub const REFINE_JUMP: f64 = 0.2;
const MAX_REFINE_ROUNDS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ModeLabel {
    Rotational,
    Zigzag,
    ComX,
    ComY,
    ComZ,
    Other,
}

impl ModeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ModeLabel::Rotational => "rotational",
            ModeLabel::Zigzag => "zigzag",
            ModeLabel::ComX => "com_x",
            ModeLabel::ComY => "com_y",
            ModeLabel::ComZ => "com_z",
            ModeLabel::Other => "other",
        }
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The 3N normal modes of a crystal of identical ions.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModeSpectrum {
    /// Angular frequencies, rad/s, ascending. An unstable direction is
    /// reported as `-sqrt(|ω²|)`.
    pub frequencies: Vec<f64>,
    /// ω², rad²/s², ascending.
    pub eigenvalues: Vec<f64>,
    /// Unit displacement vectors `[x0, y0, z0, x1, ...]`, one per mode.
    pub vectors: Vec<Vec<f64>>,
    pub labels: Vec<ModeLabel>,
    /// No eigenvalue below `-(1e-6 ωz)²`.
    pub stability: bool,
}

impl ModeSpectrum {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn index_of(&self, label: ModeLabel) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    pub fn frequency_of(&self, label: ModeLabel) -> Option<f64> {
        self.index_of(label).map(|i| self.frequencies[i])
    }
}

fn require_converged(crystal: &IonCrystal) -> Result<()> {
    if !crystal.converged {
        return Err(Error::InvalidInput("crystal is not a converged equilibrium"));
    }
    Ok(())
}

/// Analytic Hessian of the potential energy at the crystal, J/m².
pub fn hessian(crystal: &IonCrystal) -> Result<Matrix> {
    require_converged(crystal)?;
    let trap = &crystal.trap;
    let mut h = crystal::scaled_hessian(trap, &crystal.scaled_coordinates())?;
    h.scale(trap.ion_mass * trap.omega_z * trap.omega_z);
    Ok(h)
}

/// Eigen-decomposition of the mass-scaled Hessian, labelled with
/// [`classify_modes`].
pub fn normal_modes(crystal: &IonCrystal) -> Result<ModeSpectrum> {
    require_converged(crystal)?;
    let trap = &crystal.trap;
    let h = crystal::scaled_hessian(trap, &crystal.scaled_coordinates())?;
    let eig = linalg::symmetric_eigen(&h);
    let wz2 = trap.omega_z * trap.omega_z;
    let mut stability = true;
    let frequencies = eig
        .values
        .iter()
        .map(|&lam| {
            if lam < -ZERO_MODE_TOL {
                stability = false;
                -math::sqrt(-lam) * trap.omega_z
            } else {
                math::sqrt(lam.max(0.0)) * trap.omega_z
            }
        })
        .collect();
    let n = h.rows();
    let spectrum = ModeSpectrum {
        frequencies,
        eigenvalues: eig.values.iter().map(|l| l * wz2).collect(),
        vectors: (0..n).map(|k| eig.vector(k)).collect(),
        labels: vec![ModeLabel::Other; n],
        stability,
    };
    Ok(classify_modes(spectrum, crystal))
}

/// Reference displacement patterns used for labelling, each unit length.
pub fn reference_patterns(crystal: &IonCrystal) -> Vec<(ModeLabel, Vec<f64>, f64)> {
    let n = crystal.n_ions();
    let mut out = Vec::new();
    for (d, label) in [ModeLabel::ComX, ModeLabel::ComY, ModeLabel::ComZ].into_iter().enumerate() {
        let mut v = vec![0.0; 3 * n];
        for i in 0..n {
            v[3 * i + d] = 1.0;
        }
        normalize(&mut v);
        out.push((label, v, COM_OVERLAP));
    }
    if n >= 2 {
        // rigid rotation about y through the centroid
        let c = crystal.centroid();
        let mut rot = vec![0.0; 3 * n];
        for (i, p) in crystal.positions.iter().enumerate() {
            rot[3 * i] = -(p[2] - c[2]);
            rot[3 * i + 2] = p[0] - c[0];
        }
        if normalize(&mut rot) {
            out.push((ModeLabel::Rotational, rot, PATTERN_OVERLAP));
        }
    }
    if n >= 3 {
        // alternating x displacement along z, uniform part removed
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| crystal.positions[a][2].total_cmp(&crystal.positions[b][2]));
        let mut zz = vec![0.0; 3 * n];
        for (k, &i) in order.iter().enumerate() {
            zz[3 * i] = if k % 2 == 0 { 1.0 } else { -1.0 };
        }
        let mean = (0..n).map(|i| zz[3 * i]).sum::<f64>() / n as f64;
        for i in 0..n {
            zz[3 * i] -= mean;
        }
        if normalize(&mut zz) {
            out.push((ModeLabel::Zigzag, zz, PATTERN_OVERLAP));
        }
    }
    out
}

fn normalize(v: &mut [f64]) -> bool {
    let n = linalg::norm(v);
    if n < 1e-12 {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= n);
    true
}

/// Labels modes by their overlap with centre-of-mass translations, the
/// rigid rotation about y, and the alternating transverse pattern. Each
/// label goes to the mode with the largest overlap if that overlap clears
/// its threshold; everything else is `Other`.
pub fn classify_modes(mut spectrum: ModeSpectrum, crystal: &IonCrystal) -> ModeSpectrum {
    let mut labels = vec![ModeLabel::Other; spectrum.len()];
    for (label, pattern, threshold) in reference_patterns(crystal) {
        let best = spectrum
            .vectors
            .iter()
            .enumerate()
            .filter(|(k, _)| labels[*k] == ModeLabel::Other)
            .map(|(k, v)| (k, linalg::dot(v, &pattern).abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((k, overlap)) = best {
            if overlap >= threshold {
                labels[k] = label;
            }
        }
    }
    spectrum.labels = labels;
    spectrum
}

/// One confinement value of a sweep.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepPoint {
    /// rad/s
    pub omega_x: f64,
    pub crystal: IonCrystal,
    pub spectrum: ModeSpectrum,
}

/// A mode followed across a sweep by eigenvector overlap.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModeTrack {
    /// Column name: the first non-`other` label the track carries, or
    /// `mode<k>`.
    pub name: alloc::string::String,
    /// Index into each point's spectrum.
    pub mode_index: Vec<usize>,
}

#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepTable {
    pub points: Vec<SweepPoint>,
    pub tracks: Vec<ModeTrack>,
}

impl SweepTable {
    /// Frequencies (rad/s) of `track` along the sweep.
    pub fn track_frequencies(&self, track: usize) -> Vec<f64> {
        let t = &self.tracks[track];
        self.points.iter().zip(&t.mode_index).map(|(p, &k)| p.spectrum.frequencies[k]).collect()
    }

    pub fn track_named(&self, name: &str) -> Option<usize> {
        self.tracks.iter().position(|t| t.name == name)
    }
}

/// Equilibrium and modes at a single ωx.
pub fn sweep_point(template: &TrapConfig, omega_x: f64) -> Result<SweepPoint> {
    let trap = template.with_omega_x(omega_x);
    let crystal = find_equilibrium(&trap, None)?;
    let spectrum = normal_modes(&crystal)?;
    Ok(SweepPoint { omega_x, crystal, spectrum })
}

/// Modes over `steps` values of ωx in `[lo, hi]` (rad/s).
///
/// Points are computed independently through `exec`. Where a tracked
/// frequency jumps by more than 20% between neighbours, midpoints are
/// inserted (at most four rounds). Modes are then followed from point to
/// point by eigenvector overlap rather than by sort order.
pub fn sweep_confinement<E: Executor>(
    template: &TrapConfig,
    lo: f64,
    hi: f64,
    steps: usize,
    exec: &E,
) -> Result<SweepTable> {
    template.validate()?;
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi >= lo) {
        return Err(Error::InvalidInput("omega_x range must satisfy 0 < lo <= hi"));
    }
    if steps < 2 && lo != hi {
        return Err(Error::InvalidInput("a sweep needs at least two steps"));
    }
    let xs = linspace(lo, hi, steps);
    let mut points = collect(exec.map(&xs, |w| sweep_point(template, w)))?;

    let min_gap = if steps > 1 { (hi - lo) / (steps - 1) as f64 / 16.0 } else { 0.0 };
    for _ in 0..MAX_REFINE_ROUNDS {
        let mids: Vec<f64> = points
            .windows(2)
            .filter(|w| w[1].omega_x - w[0].omega_x > 2.0 * min_gap && needs_refinement(&w[0], &w[1]))
            .map(|w| 0.5 * (w[0].omega_x + w[1].omega_x))
            .collect();
        if mids.is_empty() {
            break;
        }
        let extra = collect(exec.map(&mids, |w| sweep_point(template, w)))?;
        points.extend(extra);
        points.sort_by(|a, b| a.omega_x.total_cmp(&b.omega_x));
    }

    let tracks = track_modes(&points);
    Ok(SweepTable { points, tracks })
}

fn collect<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

fn needs_refinement(a: &SweepPoint, b: &SweepPoint) -> bool {
    let floor = 1e-3 * a.crystal.trap.omega_z;
    let matching = match_modes(a, b);
    matching.iter().enumerate().any(|(i, &j)| {
        let (fa, fb) = (a.spectrum.frequencies[i].abs(), b.spectrum.frequencies[j].abs());
        let top = fa.max(fb);
        top > floor && (fa - fb).abs() / top > REFINE_JUMP
    })
}

/// Ion permutation of `b` that best matches `a` position by position.
fn align_ions(a: &IonCrystal, b: &IonCrystal) -> Vec<usize> {
    let n = a.n_ions();
    let dist = |i: usize, j: usize| {
        let r = crystal::sub(a.positions[i], b.positions[j]);
        crystal::dot3(r, r)
    };
    if n <= 7 {
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = perm.clone();
        let mut best_cost = f64::INFINITY;
        permutations(&mut perm, 0, &mut |p| {
            let cost: f64 = p.iter().enumerate().map(|(i, &j)| dist(i, j)).sum();
            if cost < best_cost {
                best_cost = cost;
                best = p.to_vec();
            }
        });
        best
    } else {
        let mut used = vec![false; n];
        (0..n)
            .map(|i| {
                let j = (0..n)
                    .filter(|&j| !used[j])
                    .min_by(|&x, &y| dist(i, x).total_cmp(&dist(i, y)))
                    .unwrap();
                used[j] = true;
                j
            })
            .collect()
    }
}

fn permutations(p: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, visit);
        p.swap(k, i);
    }
}

/// For each mode of `a`, the mode of `b` it continues into (greedy by
/// descending overlap).
fn match_modes(a: &SweepPoint, b: &SweepPoint) -> Vec<usize> {
    let perm = align_ions(&a.crystal, &b.crystal);
    let n = a.spectrum.len();
    let permuted: Vec<Vec<f64>> = b
        .spectrum
        .vectors
        .iter()
        .map(|v| {
            let mut w = vec![0.0; v.len()];
            for (i, &j) in perm.iter().enumerate() {
                w[3 * i..3 * i + 3].copy_from_slice(&v[3 * j..3 * j + 3]);
            }
            w
        })
        .collect();
    let mut pairs = Vec::with_capacity(n * n);
    for i in 0..n {
        for (j, w) in permuted.iter().enumerate() {
            pairs.push((linalg::dot(&a.spectrum.vectors[i], w).abs(), i, j));
        }
    }
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut out = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for (_, i, j) in pairs {
        if out[i] == usize::MAX && !taken[j] {
            out[i] = j;
            taken[j] = true;
        }
    }
    out
}

/// Follows every mode of the first point through the sweep.
pub fn track_modes(points: &[SweepPoint]) -> Vec<ModeTrack> {
    let Some(first) = points.first() else {
        return Vec::new();
    };
    let n = first.spectrum.len();
    let mut index: Vec<Vec<usize>> = (0..n).map(|k| vec![k]).collect();
    for w in points.windows(2) {
        let m = match_modes(&w[0], &w[1]);
        for track in index.iter_mut() {
            let last = *track.last().unwrap();
            track.push(m[last]);
        }
    }
    let mut tracks: Vec<ModeTrack> = index
        .into_iter()
        .enumerate()
        .map(|(k, mode_index)| {
            let label = points
                .iter()
                .zip(&mode_index)
                .map(|(p, &i)| p.spectrum.labels[i])
                .find(|&l| l != ModeLabel::Other);
            let name = match label {
                Some(l) => alloc::string::String::from(l.as_str()),
                None => alloc::format!("mode{k}"),
            };
            ModeTrack { name, mode_index }
        })
        .collect();
    // keep column names unique
    for k in 0..tracks.len() {
        let dupes = tracks[..k].iter().filter(|t| t.name == tracks[k].name).count();
        if dupes > 0 {
            tracks[k].name = alloc::format!("{}_{}", tracks[k].name, dupes + 1);
        }
    }
    tracks
}

/// Collinear chain along z for the given trap, whether or not it is stable.
pub fn chain_equilibrium(trap: &TrapConfig) -> Result<IonCrystal> {
    trap.validate()?;
    let n = trap.n_ions;
    let start: Vec<f64> = (0..n).flat_map(|j| [0.0, 0.0, j as f64 - 0.5 * (n - 1) as f64]).collect();
    let obj = crystal::SizedPotential { inner: crystal::ScaledPotential::new(trap), n_ions: n };
    // transverse gradient is exactly zero on the axis, so Newton stays on it
    let opts = NewtonOptions { max_saddle_escapes: 0, ..Default::default() };
    let min = newton_minimize(&obj, &start, &opts)?;
    let l = trap.length_unit();
    Ok(IonCrystal {
        positions: min.x.chunks(3).map(|c| [c[0] * l, c[1] * l, c[2] * l]).collect(),
        energy: min.value * trap.energy_unit(),
        trap: *trap,
        converged: true,
        gradient_norm: min.gradient_norm * trap.force_unit(),
        soft_rotation: false,
    })
}

/// ωx (rad/s) below which the chain along z buckles into a zigzag, found
/// by bisection on the chain's lowest Hessian eigenvalue.
pub fn zigzag_critical_omega_x(template: &TrapConfig) -> Result<f64> {
    let lowest = |wx: f64| -> Result<f64> {
        let c = chain_equilibrium(&template.with_omega_x(wx))?;
        let h = crystal::scaled_hessian(&c.trap, &c.scaled_coordinates())?;
        // x block only; y is stiffer whenever ωy > ωx
        let n = c.n_ions();
        let xb = Matrix::from_fn(n, n, |i, j| h[(3 * i, 3 * j)]);
        Ok(linalg::symmetric_eigen(&xb).values[0])
    };
    let wz = template.omega_z;
    let (mut lo, mut hi) = (wz * (1.0 + 1e-9), wz * 4.0);
    if lowest(lo)? >= 0.0 || lowest(hi)? <= 0.0 {
        return Err(Error::InvalidInput("no zigzag transition in the bracket"));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if lowest(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
