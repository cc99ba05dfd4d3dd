//! Multistatic response of a target probed by a dipole source swimming on a
//! circular orbit, with receptors on an arc of the fish's skin.
//!
//! The skin impedance is zero and the fish body does not scatter, so the
//! background is the free-space dipole potential
//! `U(x) = (1/2π) p·(x − x_s)/|x − x_s|² = (1/2π) Re(P/(ζ − a))`.
//! Expanded about the target center `z` with `w = ζ − z`, `d = a − z`:
//!
//! ```text
//! U = Σ_n Re(A_n w^n),           A_n = −P / (2π d^{n+1})
//! u − U ≈ Σ_m Re(b_m ∫ w^m ψ),   b_m = −1 / (2π m ξ^m),  ξ = receptor − z
//! ```
//!
//! so each measurement is the bilinear form `s_pᵀ Q g_{p,r}` of the source
//! harmonic coefficients, the CGPT blocks and the receiver coefficients.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cgpt_engine::{CgptMatrix, MAX_ORDER};
use crate::error::{csv_error, Error, Result};
use crate::geometry::{curve_diameter, Curve, Vec2};
use crate::reconstruction::build_acquisition;

/// Placement of the receptors relative to the source.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutMode {
    /// Receptors ride with the fish on an arc centered at the source angle.
    Attached,
    /// One fixed ring of receptors shared by every pose.
    Stationary,
}

/// Arc carrying the receptors: radius `R + radial_offset`, angular span
/// `[φ − half_angle, φ + half_angle]` about the source angle `φ`.
///
/// A half-angle of π closes the arc into a full ring.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReceptorLayout {
    pub half_angle: f64,
    pub radial_offset: f64,
    pub mode: LayoutMode,
}

impl Default for ReceptorLayout {
    fn default() -> Self {
        ReceptorLayout { half_angle: DEFAULT_HALF_ANGLE, radial_offset: 0.0, mode: LayoutMode::Attached }
    }
}

/// Default arc half-angle of the attached layout.
pub const DEFAULT_HALF_ANGLE: f64 = PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionConfig {
    pub n_positions: usize,
    pub n_receptors: usize,
    /// orbit radius as a multiple of the target diameter
    pub orbit_radius_factor: f64,
    pub orbit_center: [f64; 2],
    /// known target center about which CGPTs are expanded
    pub target_center: [f64; 2],
    /// dipole direction relative to the counter-clockwise orbit tangent
    pub dipole_angle: f64,
    pub receptor_layout: ReceptorLayout,
    pub sim_order: usize,
    pub seed: u64,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        AcquisitionConfig {
            n_positions: 500,
            n_receptors: 512,
            orbit_radius_factor: 1.5,
            orbit_center: [0.0, 0.0],
            target_center: [0.0, 0.0],
            dipole_angle: 0.0,
            receptor_layout: ReceptorLayout::default(),
            sim_order: 8,
            seed: 0,
        }
    }
}

impl AcquisitionConfig {
    /// Reduced acquisition for fast checks: 100 poses, 128 receptors.
    pub fn desk() -> Self {
        AcquisitionConfig { n_positions: 100, n_receptors: 128, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_positions == 0 || self.n_receptors == 0 {
            return Err(Error::InvalidConfig("n_positions and n_receptors must be at least 1".into()));
        }
        if !(self.orbit_radius_factor > 0.5 && self.orbit_radius_factor.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "orbit_radius_factor must exceed 0.5 (orbit outside the target), got {}",
                self.orbit_radius_factor
            )));
        }
        if self.sim_order == 0 || self.sim_order > MAX_ORDER {
            return Err(Error::InvalidOrder { order: self.sim_order, reason: "simulation order must lie in 1..=16" });
        }
        let l = &self.receptor_layout;
        if !(l.half_angle > 0.0 && l.half_angle <= PI) {
            return Err(Error::InvalidConfig(format!("receptor half_angle must lie in (0, π], got {}", l.half_angle)));
        }
        if !l.radial_offset.is_finite() {
            return Err(Error::InvalidConfig("receptor radial_offset must be finite".into()));
        }
        Ok(())
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(self.target_center[0], self.target_center[1])
    }
}

/// Extent of the target as seen by the acquisition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetFootprint {
    pub diameter: f64,
    /// radius of the smallest circle about the known center containing the target
    pub radius: f64,
}

impl TargetFootprint {
    pub fn of_curve(curve: &Curve, center: Vec2) -> Self {
        TargetFootprint { diameter: curve_diameter(curve), radius: curve.radius_about(center) }
    }
}

/// One position of the fish.
#[derive(Clone, Debug)]
pub struct FishPose {
    pub angle: f64,
    pub source: Vec2,
    pub dipole: Vec2,
    pub receptors: Vec<Vec2>,
}

/// Poses equispaced in orbit angle, starting at angle 0.
pub fn fish_poses(config: &AcquisitionConfig, target: &TargetFootprint) -> Result<Vec<FishPose>> {
    config.validate()?;
    let orbit = config.orbit_radius_factor * target.diameter;
    let center = Vec2::new(config.orbit_center[0], config.orbit_center[1]);
    let z = config.center();
    let layout = &config.receptor_layout;
    let ring = orbit + layout.radial_offset;
    if ring <= 0.0 {
        return Err(Error::InvalidConfig(format!("receptor radius {ring} is not positive")));
    }
    let nr = config.n_receptors;
    let full = (layout.half_angle - PI).abs() < 1e-15;
    let offsets: Vec<f64> = (0..nr)
        .map(|r| {
            if full {
                -PI + 2.0 * PI * r as f64 / nr as f64
            } else if nr == 1 {
                0.0
            } else {
                -layout.half_angle + 2.0 * layout.half_angle * r as f64 / (nr - 1) as f64
            }
        })
        .collect();
    let polar = |radius: f64, angle: f64| center + Vec2::new(angle.cos(), angle.sin()) * radius;
    let stationary: Vec<Vec2> = offsets.iter().map(|b| polar(ring, *b)).collect();
    let poses: Vec<FishPose> = (0..config.n_positions)
        .map(|p| {
            let angle = 2.0 * PI * p as f64 / config.n_positions as f64;
            let heading = angle + 0.5 * PI + config.dipole_angle;
            FishPose {
                angle,
                source: polar(orbit, angle),
                dipole: Vec2::new(heading.cos(), heading.sin()),
                receptors: match layout.mode {
                    LayoutMode::Attached => offsets.iter().map(|b| polar(ring, angle + b)).collect(),
                    LayoutMode::Stationary => stationary.clone(),
                },
            }
        })
        .collect();
    let closest = poses
        .iter()
        .flat_map(|p| std::iter::once(&p.source).chain(&p.receptors))
        .map(|x| (x - z).norm())
        .fold(f64::INFINITY, f64::min);
    if closest <= target.radius {
        return Err(Error::FishCollision(format!(
            "fish passes within {closest:.3} of the target center, inside its bounding radius {:.3}",
            target.radius
        )));
    }
    Ok(poses)
}

/// Complex coefficients `A_n = −P/(2π d^{n+1})`, `n = 1..=order`, of the
/// dipole potential expanded about `center`.
pub fn source_coefficients(source: Vec2, dipole: Vec2, center: Vec2, order: usize) -> Result<Vec<Complex64>> {
    let d = Complex64::new(source.x - center.x, source.y - center.y);
    if d.norm() < 1e-12 {
        return Err(Error::SourceAtCenter);
    }
    let p = Complex64::new(dipole.x, dipole.y);
    let inv = d.inv();
    let mut acc = -p / (2.0 * PI) * inv;
    Ok((1..=order)
        .map(|_| {
            acc *= inv;
            acc
        })
        .collect())
}

/// Complex receiver coefficients `b_m = −1/(2π m ξ^m)`, `m = 1..=order`.
pub fn receiver_coefficients(receptor: Vec2, center: Vec2, order: usize) -> Vec<Complex64> {
    let xi = Complex64::new(receptor.x - center.x, receptor.y - center.y);
    let inv = xi.inv();
    let mut pow = Complex64::new(1.0, 0.0);
    (1..=order)
        .map(|m| {
            pow *= inv;
            -pow / (2.0 * PI * m as f64)
        })
        .collect()
}

/// Interleaved real pairs `(Re c, −Im c)` so that `Re(c·w^n)` is
/// `c_re·Re(w^n) + c_im·Im(w^n)` in the returned basis.
pub fn real_pairs(c: &[Complex64]) -> Vec<f64> {
    c.iter().flat_map(|v| [v.re, -v.im]).collect()
}

/// Dipole potential at `x`.
pub fn dipole_potential(source: Vec2, dipole: Vec2, x: Vec2) -> f64 {
    let d = x - source;
    dipole.dot(&d) / (2.0 * PI * d.norm_squared())
}

/// Simulated measurements with the acquisition that produced them.
#[derive(Clone, Debug)]
pub struct MsrMatrix {
    /// `n_positions × n_receptors`
    pub values: DMatrix<f64>,
    pub config: AcquisitionConfig,
    pub noise_level: f64,
    pub footprint: TargetFootprint,
}

#[derive(Serialize, Deserialize)]
struct MsrSidecar {
    config: AcquisitionConfig,
    noise_level: f64,
    footprint: TargetFootprint,
    rows: usize,
    cols: usize,
}

impl MsrMatrix {
    /// Writes `path` as CSV (row = position, column = receptor) and a JSON
    /// sidecar next to it with the `.json` extension.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_error)?;
        for row in self.values.row_iter() {
            out.serialize(row.iter().collect::<Vec<_>>()).map_err(csv_error)?;
        }
        out.flush()?;
        let sidecar = MsrSidecar {
            config: self.config.clone(),
            noise_level: self.noise_level,
            footprint: self.footprint,
            rows: self.values.nrows(),
            cols: self.values.ncols(),
        };
        std::fs::write(path.with_extension("json"), serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let sidecar: MsrSidecar = serde_json::from_str(&std::fs::read_to_string(path.with_extension("json"))?)?;
        let mut reader = csv::ReaderBuilder::new().has_headers(false).from_path(path).map_err(csv_error)?;
        let mut data = Vec::with_capacity(sidecar.rows * sidecar.cols);
        for (i, row) in reader.deserialize::<Vec<f64>>().enumerate() {
            let row = row.map_err(csv_error)?;
            if row.len() != sidecar.cols {
                return Err(Error::DimensionMismatch(format!("MSR line {} has {} values, expected {}", i + 1, row.len(), sidecar.cols)));
            }
            data.extend(row);
        }
        if data.len() != sidecar.rows * sidecar.cols {
            return Err(Error::DimensionMismatch(format!("MSR has {} values, expected {}", data.len(), sidecar.rows * sidecar.cols)));
        }
        Ok(MsrMatrix {
            values: DMatrix::from_row_slice(sidecar.rows, sidecar.cols, &data),
            config: sidecar.config,
            noise_level: sidecar.noise_level,
            footprint: sidecar.footprint,
        })
    }
}

/// Noiseless MSR of a target with CGPTs `m` (about the origin, order at
/// least `sim_order`; higher orders are truncated).
pub fn synthesize_msr(m: &CgptMatrix, config: &AcquisitionConfig, target: &TargetFootprint) -> Result<MsrMatrix> {
    config.validate()?;
    let k = config.sim_order;
    if m.order < k {
        return Err(Error::InvalidOrder { order: m.order, reason: "CGPT order is below the simulation order" });
    }
    let op = build_acquisition(config, target, k)?;
    let values = op.apply(&m.truncate(k)?)?;
    Ok(MsrMatrix { values, config: config.clone(), noise_level: 0.0, footprint: *target })
}

/// Adds i.i.d. Gaussian noise of standard deviation
/// `σ0·‖MSR‖_F/sqrt(n_positions·n_receptors)` drawn from `rng`.
pub fn add_noise_with(msr: &MsrMatrix, sigma0: f64, rng: &mut impl Rng) -> MsrMatrix {
    assert!(sigma0 >= 0.0, "noise level must be non-negative");
    if sigma0 == 0.0 {
        return msr.clone();
    }
    let rms = msr.values.norm() / (msr.values.len() as f64).sqrt();
    let std = sigma0 * rms;
    let mut out = msr.clone();
    for v in out.values.iter_mut() {
        let e: f64 = StandardNormal.sample(rng);
        *v += std * e;
    }
    out.noise_level = sigma0;
    out
}

/// [`add_noise_with`] on a ChaCha stream seeded by `seed`.
pub fn add_noise(msr: &MsrMatrix, sigma0: f64, seed: u64) -> MsrMatrix {
    add_noise_with(msr, sigma0, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Independent RNG for one trial: the seed picks the key, the
/// `(target, noise level, trial)` triple picks the stream.
pub fn trial_rng(seed: u64, target_index: usize, sigma_index: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((target_index as u64) << 48) | ((sigma_index as u64) << 32) | trial as u64);
    rng
}
