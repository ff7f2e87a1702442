//! Equilibrium Coulomb crystals in an anisotropic harmonic pseudopotential.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::consts::{self, AMU, COULOMB, ELEMENTARY_CHARGE};
use crate::linalg::{self, Matrix};
use crate::math;
use crate::minimize::{newton_minimize, NewtonOptions, Objective};
use crate::{Error, Result};

/// Dimensionless gradient norm at which an equilibrium counts as converged.
pub const GRADIENT_TOL: f64 = 1e-12;
/// Dimensionless Hessian eigenvalue below which a direction is flat,
/// i.e. a mode frequency under `1e-6 ωz`.
pub const ZERO_MODE_TOL: f64 = 1e-12;
/// Relative tolerance used when deciding two minima are the same structure.
pub const DEDUP_REL_TOL: f64 = 1e-6;

/// Ion species and secular frequencies of the trap.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrapConfig {
    /// rad/s
    pub omega_x: f64,
    /// rad/s
    pub omega_y: f64,
    /// rad/s
    pub omega_z: f64,
    /// kg
    pub ion_mass: f64,
    /// C
    pub ion_charge: f64,
    pub n_ions: usize,
}

impl Default for TrapConfig {
    fn default() -> Self {
        Self::experimental()
    }
}

impl TrapConfig {
    /// Three ⁴⁰Ca⁺ ions at {ωx, ωy, ωz} = 2π × {1.523, 1.961, 1.119} MHz.
    pub fn experimental() -> Self {
        TrapConfig {
            omega_x: consts::angular(1.523e6),
            omega_y: consts::angular(1.961e6),
            omega_z: consts::angular(1.119e6),
            ion_mass: 40.0 * AMU,
            ion_charge: ELEMENTARY_CHARGE,
            n_ions: 3,
        }
    }

    /// The experimental trap with ωx set `delta` (rad/s) above ωz.
    pub fn tunnelling(delta: f64) -> Self {
        let t = Self::experimental();
        t.with_omega_x(t.omega_z + delta)
    }

    pub fn with_omega_x(mut self, omega_x: f64) -> Self {
        self.omega_x = omega_x;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !(positive(self.omega_x) && positive(self.omega_y) && positive(self.omega_z)) {
            return Err(Error::InvalidInput("trap frequencies must be positive and finite"));
        }
        if !positive(self.ion_mass) || !positive(self.ion_charge) {
            return Err(Error::InvalidInput("ion mass and charge must be positive"));
        }
        if self.n_ions == 0 {
            return Err(Error::InvalidInput("need at least one ion"));
        }
        Ok(())
    }

    /// ℓ = (q²/(4πε₀ m ωz²))^(1/3), m.
    pub fn length_unit(&self) -> f64 {
        let q = self.ion_charge;
        math::cbrt(COULOMB * q * q / (self.ion_mass * self.omega_z * self.omega_z))
    }

    /// m ωz² ℓ², J.
    pub fn energy_unit(&self) -> f64 {
        let l = self.length_unit();
        self.ion_mass * self.omega_z * self.omega_z * l * l
    }

    /// m ωz² ℓ, N. Scale of gradients.
    pub fn force_unit(&self) -> f64 {
        self.ion_mass * self.omega_z * self.omega_z * self.length_unit()
    }

    /// (ωx²/ωz², ωy²/ωz², 1)
    pub fn anisotropy(&self) -> [f64; 3] {
        let z2 = self.omega_z * self.omega_z;
        [self.omega_x * self.omega_x / z2, self.omega_y * self.omega_y / z2, 1.0]
    }

    pub fn omegas(&self) -> [f64; 3] {
        [self.omega_x, self.omega_y, self.omega_z]
    }
}

/// An equilibrium configuration of the trap's ions.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IonCrystal {
    /// Ion positions, m.
    pub positions: Vec<[f64; 3]>,
    /// Total potential energy, J.
    pub energy: f64,
    pub trap: TrapConfig,
    pub converged: bool,
    /// Norm of the potential gradient at `positions`, J/m.
    pub gradient_norm: f64,
    /// The minimum belongs to a continuous family (a zero-frequency
    /// rotation); this crystal is one representative of it.
    pub soft_rotation: bool,
}

impl IonCrystal {
    pub fn n_ions(&self) -> usize {
        self.positions.len()
    }

    /// Positions in units of ℓ, flattened `[x0, y0, z0, x1, ...]`.
    pub fn scaled_coordinates(&self) -> Vec<f64> {
        let l = self.trap.length_unit();
        self.positions.iter().flat_map(|p| p.iter().map(move |c| c / l)).collect()
    }

    pub fn centroid(&self) -> [f64; 3] {
        centroid(&self.positions)
    }

    /// All ions on one line (to 1e-6 ℓ).
    pub fn is_collinear(&self) -> bool {
        let l = self.trap.length_unit();
        if self.positions.len() < 3 {
            return true;
        }
        // collinear iff all ions lie on the line through the first two
        let p0 = self.positions[0];
        let p1 = self.positions[1];
        let d = sub(p1, p0);
        let dn = math::sqrt(dot3(d, d));
        self.positions.iter().skip(2).all(|p| {
            let c = cross(d, sub(*p, p0));
            math::sqrt(dot3(c, c)) / dn < 1e-6 * l
        })
    }

    /// Pairwise distances, ascending, m.
    pub fn sorted_distances(&self) -> Vec<f64> {
        let mut d = Vec::new();
        for i in 0..self.positions.len() {
            for j in (i + 1)..self.positions.len() {
                let r = sub(self.positions[i], self.positions[j]);
                d.push(math::sqrt(dot3(r, r)));
            }
        }
        d.sort_by(f64::total_cmp);
        d
    }

    /// Same structure up to a relabelling of ions.
    pub fn same_structure(&self, other: &IonCrystal, rel_tol: f64) -> bool {
        if self.positions.len() != other.positions.len() {
            return false;
        }
        let scale = self.trap.length_unit();
        let tol = rel_tol * scale;
        let (a, b) = (self.sorted_distances(), other.sorted_distances());
        if a.iter().zip(&b).any(|(x, y)| (x - y).abs() > tol) {
            return false;
        }
        let mut used = vec![false; other.positions.len()];
        for p in &self.positions {
            let hit = other.positions.iter().enumerate().find(|(j, q)| {
                let r = sub(*p, **q);
                !used[*j] && math::sqrt(dot3(r, r)) <= tol
            });
            match hit {
                Some((j, _)) => used[j] = true,
                None => return false,
            }
        }
        true
    }

    /// Congruent up to rotation and relabelling (pairwise distances only).
    pub fn same_shape(&self, other: &IonCrystal, rel_tol: f64) -> bool {
        let tol = rel_tol * self.trap.length_unit();
        let (a, b) = (self.sorted_distances(), other.sorted_distances());
        a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= tol)
    }

    /// Rotates every ion by `angle` about the y axis through the centroid
    /// (positive angle turns +x towards +z).
    pub fn rotated_about_y(&self, angle: f64) -> IonCrystal {
        let c = self.centroid();
        let (s, co) = (math::sin(angle), math::cos(angle));
        let positions = self
            .positions
            .iter()
            .map(|p| {
                let (dx, dz) = (p[0] - c[0], p[2] - c[2]);
                [c[0] + co * dx - s * dz, p[1], c[2] + s * dx + co * dz]
            })
            .collect();
        IonCrystal { positions, ..self.clone() }
    }
}

pub(crate) fn centroid(positions: &[[f64; 3]]) -> [f64; 3] {
    let n = positions.len() as f64;
    let mut c = [0.0; 3];
    for p in positions {
        for d in 0..3 {
            c[d] += p[d] / n;
        }
    }
    c
}

#[inline]
pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Total pseudopotential plus Coulomb energy, J.
///
/// `Σᵢ (m/2)(ωx²xᵢ² + ωy²yᵢ² + ωz²zᵢ²) + Σᵢ<ⱼ q²/(4πε₀ rᵢⱼ)`
pub fn potential_energy(positions: &[[f64; 3]], trap: &TrapConfig) -> Result<f64> {
    if positions.is_empty() {
        return Err(Error::InvalidInput("need at least one ion"));
    }
    let w = trap.omegas();
    let m = trap.ion_mass;
    let kq2 = COULOMB * trap.ion_charge * trap.ion_charge;
    let mut harmonic = 0.0;
    for p in positions {
        for d in 0..3 {
            harmonic += 0.5 * m * w[d] * w[d] * p[d] * p[d];
        }
    }
    let mut coulomb = 0.0;
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            let r = sub(positions[i], positions[j]);
            let d = math::sqrt(dot3(r, r));
            if d == 0.0 {
                return Err(Error::SingularConfiguration { ion_a: i, ion_b: j });
            }
            coulomb += kq2 / d;
        }
    }
    Ok(harmonic + coulomb)
}

/// Gradient of [`potential_energy`], J/m, one row per ion.
pub fn potential_gradient(positions: &[[f64; 3]], trap: &TrapConfig) -> Result<Vec<[f64; 3]>> {
    let l = trap.length_unit();
    let x: Vec<f64> = positions.iter().flat_map(|p| p.iter().map(|c| c / l)).collect();
    let field = ScaledPotential::new(trap);
    let mut g = vec![0.0; x.len()];
    field.gradient(&x, &mut g)?;
    let f = trap.force_unit();
    Ok(g.chunks(3).map(|c| [c[0] * f, c[1] * f, c[2] * f]).collect())
}

/// The trap potential in units of ℓ and m ωz² ℓ².
#[derive(Debug, Clone, Copy)]
pub struct ScaledPotential {
    pub aniso: [f64; 3],
}

impl ScaledPotential {
    pub fn new(trap: &TrapConfig) -> Self {
        ScaledPotential { aniso: trap.anisotropy() }
    }

    fn check_pairs(x: &[f64]) -> Result<()> {
        let n = x.len() / 3;
        for i in 0..n {
            for j in (i + 1)..n {
                let r = pair(x, i, j);
                if dot3(r, r) < 1e-24 {
                    return Err(Error::SingularConfiguration { ion_a: i, ion_b: j });
                }
            }
        }
        Ok(())
    }
}

#[inline]
fn pair(x: &[f64], i: usize, j: usize) -> [f64; 3] {
    [x[3 * i] - x[3 * j], x[3 * i + 1] - x[3 * j + 1], x[3 * i + 2] - x[3 * j + 2]]
}

impl ScaledPotential {
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        Self::check_pairs(x)?;
        let n = x.len() / 3;
        let mut e = 0.0;
        for i in 0..n {
            for d in 0..3 {
                e += 0.5 * self.aniso[d] * x[3 * i + d] * x[3 * i + d];
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let r = pair(x, i, j);
                e += 1.0 / math::sqrt(dot3(r, r));
            }
        }
        Ok(e)
    }

    pub fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        Self::check_pairs(x)?;
        let n = x.len() / 3;
        for i in 0..n {
            for d in 0..3 {
                out[3 * i + d] = self.aniso[d] * x[3 * i + d];
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let r = pair(x, i, j);
                let d2 = dot3(r, r);
                let inv3 = 1.0 / (d2 * math::sqrt(d2));
                for d in 0..3 {
                    out[3 * i + d] -= r[d] * inv3;
                    out[3 * j + d] += r[d] * inv3;
                }
            }
        }
        Ok(())
    }

    pub fn hessian(&self, x: &[f64], out: &mut Matrix) -> Result<()> {
        Self::check_pairs(x)?;
        let n = x.len() / 3;
        for v in 0..3 * n {
            for w in 0..3 * n {
                out[(v, w)] = 0.0;
            }
        }
        for i in 0..n {
            for d in 0..3 {
                out[(3 * i + d, 3 * i + d)] = self.aniso[d];
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let r = pair(x, i, j);
                let d2 = dot3(r, r);
                let d = math::sqrt(d2);
                let inv3 = 1.0 / (d2 * d);
                let inv5 = inv3 / d2;
                for a in 0..3 {
                    for b in 0..3 {
                        let blk = 3.0 * r[a] * r[b] * inv5 - if a == b { inv3 } else { 0.0 };
                        out[(3 * i + a, 3 * i + b)] += blk;
                        out[(3 * j + a, 3 * j + b)] += blk;
                        out[(3 * i + a, 3 * j + b)] -= blk;
                        out[(3 * j + a, 3 * i + b)] -= blk;
                    }
                }
            }
        }
        Ok(())
    }
}

/// [`ScaledPotential`] bound to an ion count.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SizedPotential {
    pub inner: ScaledPotential,
    pub n_ions: usize,
}

impl Objective for SizedPotential {
    fn dim(&self) -> usize {
        3 * self.n_ions
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        self.inner.value(x)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.inner.gradient(x, out)
    }
    fn hessian(&self, x: &[f64], out: &mut Matrix) -> Result<()> {
        self.inner.hessian(x, out)
    }
}

/// Dimensionless Hessian of the trap potential at `x` (units of ℓ).
pub fn scaled_hessian(trap: &TrapConfig, x: &[f64]) -> Result<Matrix> {
    let mut h = Matrix::zeros(x.len(), x.len());
    ScaledPotential::new(trap).hessian(x, &mut h)?;
    Ok(h)
}

fn minimize_from(trap: &TrapConfig, start: &[f64]) -> Result<IonCrystal> {
    let obj = SizedPotential { inner: ScaledPotential::new(trap), n_ions: trap.n_ions };
    let opts = NewtonOptions { gradient_tol: GRADIENT_TOL, ..Default::default() };
    let min = newton_minimize(&obj, start, &opts)?;
    if min.min_curvature < -ZERO_MODE_TOL {
        // saddle escapes exhausted
        return Err(Error::NotConverged { iterations: min.iterations, gradient_norm: min.gradient_norm });
    }
    let eig = linalg::symmetric_eigen(&scaled_hessian(trap, &min.x)?);
    let soft_rotation = eig.values.iter().any(|v| v.abs() < ZERO_MODE_TOL);
    let l = trap.length_unit();
    Ok(IonCrystal {
        positions: min.x.chunks(3).map(|c| [c[0] * l, c[1] * l, c[2] * l]).collect(),
        energy: min.value * trap.energy_unit(),
        trap: *trap,
        converged: true,
        gradient_norm: min.gradient_norm * trap.force_unit(),
        soft_rotation,
    })
}

/// Deterministic starting configurations (units of ℓ): a chain along z and
/// rings in each coordinate plane at several orientations, all slightly
/// perturbed so no start sits exactly on a symmetric saddle.
pub fn seed_configurations(n_ions: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x10_4207);
    let mut jitter = move || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 0.04 - 0.02;
    let n = n_ions;
    let mut seeds = Vec::new();
    if n == 1 {
        seeds.push(vec![jitter(), jitter(), jitter()]);
        return seeds;
    }
    // chain along z
    let mut chain = Vec::with_capacity(3 * n);
    for j in 0..n {
        chain.extend_from_slice(&[jitter(), jitter(), j as f64 - 0.5 * (n - 1) as f64]);
    }
    seeds.push(chain);
    // rings: (first in-plane axis, second in-plane axis, orientations)
    let radius = 0.8 * math::powf(n as f64, 0.5);
    for (a, b, count) in [(0usize, 2usize, 12usize), (0, 1, 4), (1, 2, 4)] {
        for k in 0..count {
            let phase = k as f64 * core::f64::consts::PI / count as f64;
            let mut ring = vec![0.0; 3 * n];
            for j in 0..n {
                let ang = phase + 2.0 * core::f64::consts::PI * j as f64 / n as f64;
                ring[3 * j + a] = radius * math::cos(ang) + jitter();
                ring[3 * j + b] = radius * math::sin(ang) + jitter();
                ring[3 * j + 3 - a - b] = jitter();
            }
            seeds.push(ring);
        }
    }
    seeds
}

/// Local minimum of the trap potential.
///
/// With a seed (m), descends from it and so returns the minimum whose basin
/// holds the seed. Without one, minimizes from every
/// [`seed_configurations`] start and returns the lowest-energy result.
pub fn find_equilibrium(trap: &TrapConfig, seed: Option<&[[f64; 3]]>) -> Result<IonCrystal> {
    trap.validate()?;
    if let Some(seed) = seed {
        if seed.len() != trap.n_ions {
            return Err(Error::InvalidInput("seed has the wrong number of ions"));
        }
        let l = trap.length_unit();
        let start: Vec<f64> = seed.iter().flat_map(|p| p.iter().map(move |c| c / l)).collect();
        return minimize_from(trap, &start);
    }
    let mut best: Option<IonCrystal> = None;
    let mut last_err = None;
    for start in seed_configurations(trap.n_ions) {
        match minimize_from(trap, &start) {
            Ok(c) => {
                let better = match &best {
                    None => true,
                    Some(b) => c.energy < b.energy - 1e-12 * b.energy.abs(),
                };
                if better {
                    best = Some(c);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(Error::InvalidInput("no seeds")))
}

/// All distinct local minima reachable from the deterministic seeds,
/// ascending in energy.
///
/// Minima are merged when they coincide after relabelling ions. A minimum
/// with a soft rotation is a continuous family; its members are merged by
/// shape alone and one representative is kept.
pub fn enumerate_minima(trap: &TrapConfig) -> Result<Vec<IonCrystal>> {
    trap.validate()?;
    let mut found: Vec<IonCrystal> = Vec::new();
    let mut last_err = None;
    for start in seed_configurations(trap.n_ions) {
        let c = match minimize_from(trap, &start) {
            Ok(c) => c,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let dup = found.iter().any(|f| {
            if f.soft_rotation || c.soft_rotation {
                f.same_shape(&c, DEDUP_REL_TOL)
            } else {
                f.same_structure(&c, DEDUP_REL_TOL)
            }
        });
        if !dup {
            found.push(c);
        }
    }
    if found.is_empty() {
        return Err(last_err.unwrap_or(Error::InvalidInput("no seeds")));
    }
    found.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(found)
}
