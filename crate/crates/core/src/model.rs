//! Physical scene: array steering, target geometry, round-trip path gains,
//! target response matrices and Rician downlink channels.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{cscg_vector, rng_from_seed};

pub type CVector = DVector<Complex<f64>>;
pub type CMatrix = DMatrix<Complex<f64>>;

/// Distances below this are treated as coincident points.
const MIN_DISTANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for Position {
    fn from(p: [f64; 2]) -> Self {
        Self::new(p[0], p[1])
    }
}

/// Uniform linear array shared by every BS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    /// Element spacing over wavelength.
    pub spacing_ratio: f64,
}

impl ArrayConfig {
    pub fn new(n_tx: usize, n_rx: usize, spacing_ratio: f64) -> Result<Self, ModelError> {
        if n_tx == 0 || n_rx == 0 {
            return Err(ModelError::Domain("array needs at least one element".into()));
        }
        if !(spacing_ratio > 0.0 && spacing_ratio.is_finite()) {
            return Err(ModelError::Domain(format!("spacing ratio must be positive, got {spacing_ratio}")));
        }
        Ok(Self {
            n_tx,
            n_rx,
            spacing_ratio,
        })
    }

    /// Half-wavelength array with `n` transmit and `n` receive elements.
    pub fn half_wavelength(n: usize) -> Result<Self, ModelError> {
        Self::new(n, n, 0.5)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemLayout {
    pub bs_positions: Vec<Position>,
    pub cu_positions: Vec<Position>,
    pub array: ArrayConfig,
    /// Array normal of each BS, radians from the +x axis.
    pub boresights: Vec<f64>,
}

impl SystemLayout {
    /// Layout whose arrays all face the origin.
    pub fn new(bs_positions: Vec<Position>, cu_positions: Vec<Position>, array: ArrayConfig) -> Result<Self, ModelError> {
        let boresights = bs_positions.iter().map(boresight_toward_origin).collect();
        Self::with_boresights(bs_positions, cu_positions, array, boresights)
    }

    pub fn with_boresights(
        bs_positions: Vec<Position>,
        cu_positions: Vec<Position>,
        array: ArrayConfig,
        boresights: Vec<f64>,
    ) -> Result<Self, ModelError> {
        if bs_positions.is_empty() {
            return Err(ModelError::Domain("at least one BS is required".into()));
        }
        if bs_positions.len() != cu_positions.len() {
            return Err(ModelError::Dimension(format!(
                "{} BSs but {} CUs",
                bs_positions.len(),
                cu_positions.len()
            )));
        }
        if boresights.len() != bs_positions.len() {
            return Err(ModelError::Dimension("one boresight per BS is required".into()));
        }
        let finite = |p: &Position| p.x.is_finite() && p.y.is_finite();
        if !bs_positions.iter().chain(&cu_positions).all(finite) || !boresights.iter().all(|b| b.is_finite()) {
            return Err(ModelError::Domain("positions and boresights must be finite".into()));
        }
        Ok(Self {
            bs_positions,
            cu_positions,
            array,
            boresights,
        })
    }

    pub fn k(&self) -> usize {
        self.bs_positions.len()
    }

    /// Signed angle of `point` seen from BS `bs`, measured from its boresight.
    pub fn angle_from(&self, bs: usize, point: &Position) -> f64 {
        let p = self.bs_positions[bs];
        let (dx, dy) = (point.x - p.x, point.y - p.y);
        let (bx, by) = (self.boresights[bs].cos(), self.boresights[bs].sin());
        (bx * dy - by * dx).atan2(bx * dx + by * dy)
    }
}

/// Boresight pointing from `p` to the origin; +x for a BS at the origin.
pub fn boresight_toward_origin(p: &Position) -> f64 {
    if p.x == 0.0 && p.y == 0.0 {
        0.0
    } else {
        (-p.y).atan2(-p.x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingParams {
    /// Target reflection amplitude.
    pub rcs: f64,
    /// Reference path-loss power at `d_ref`.
    pub kappa_sq: f64,
    pub d_ref: f64,
    /// Post matched-filter noise power, watts.
    pub noise_power_d: f64,
}

impl SensingParams {
    pub fn new(rcs: f64, kappa_sq: f64, d_ref: f64, noise_power_d: f64) -> Result<Self, ModelError> {
        for (name, v) in [("rcs", rcs), ("kappa_sq", kappa_sq), ("d_ref", d_ref), ("noise_power_d", noise_power_d)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ModelError::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            rcs,
            kappa_sq,
            d_ref,
            noise_power_d,
        })
    }
}

/// Downlink channel statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommParams {
    /// CU receiver noise power, watts.
    pub noise_power: f64,
    /// Rician factor, linear.
    pub rician_factor: f64,
    pub pl_exponent: f64,
    /// Path-loss power gain at 1 m, linear.
    pub pl_ref_gain: f64,
}

impl CommParams {
    pub fn new(noise_power: f64, rician_factor: f64, pl_exponent: f64, pl_ref_gain: f64) -> Result<Self, ModelError> {
        if !(noise_power > 0.0 && noise_power.is_finite()) {
            return Err(ModelError::Domain("comm noise power must be positive".into()));
        }
        if !(rician_factor >= 0.0) {
            return Err(ModelError::Domain("rician factor must be nonnegative".into()));
        }
        if !(pl_ref_gain > 0.0 && pl_exponent.is_finite()) {
            return Err(ModelError::Domain("path-loss law must be positive and finite".into()));
        }
        Ok(Self {
            noise_power,
            rician_factor,
            pl_exponent,
            pl_ref_gain,
        })
    }
}

/// Sample locations with per-BS angles, distances and round-trip gains.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetGrid {
    pub points: Vec<Position>,
    /// `angles[m][k]`
    pub angles: Vec<Vec<f64>>,
    /// `distances[m][k]`
    pub distances: Vec<Vec<f64>>,
    /// `path_gains[m][(k, i)]`, BS `i` -> target -> BS `k`.
    pub path_gains: Vec<DMatrix<f64>>,
}

impl TargetGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `h_{k,i}` (BS `i` to CU `k`) stored as `channels[k][i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CommChannelSet {
    pub channels: Vec<Vec<CVector>>,
    pub noise_power_c: f64,
}

impl CommChannelSet {
    pub fn new(channels: Vec<Vec<CVector>>, noise_power_c: f64) -> Result<Self, ModelError> {
        let k = channels.len();
        if k == 0 || channels.iter().any(|row| row.len() != k) {
            return Err(ModelError::Dimension("channel array must be K x K".into()));
        }
        let n = channels[0][0].len();
        for row in &channels {
            for h in row {
                if h.len() != n {
                    return Err(ModelError::Dimension("channel vectors differ in length".into()));
                }
                if h.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                    return Err(ModelError::Domain("non-finite channel entry".into()));
                }
            }
        }
        if !(noise_power_c > 0.0 && noise_power_c.is_finite()) {
            return Err(ModelError::Domain("comm noise power must be positive".into()));
        }
        Ok(Self {
            channels,
            noise_power_c,
        })
    }

    pub fn k(&self) -> usize {
        self.channels.len()
    }

    pub fn n_tx(&self) -> usize {
        self.channels[0][0].len()
    }

    pub fn get(&self, cu: usize, bs: usize) -> &CVector {
        &self.channels[cu][bs]
    }
}

/// ULA response `[1, e^{j 2 pi r sin(theta)}, ..., e^{j 2 pi r (n-1) sin(theta)}]`.
pub fn steering_vector(theta: f64, n_elems: usize, spacing_ratio: f64) -> CVector {
    let phase = 2.0 * PI * spacing_ratio * theta.sin();
    CVector::from_fn(n_elems, |m, _| Complex::from_polar(1.0, phase * m as f64))
}

/// Per-BS angles and distances of `point`.
pub fn target_geometry(layout: &SystemLayout, point: &Position) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
    let mut angles = Vec::with_capacity(layout.k());
    let mut distances = Vec::with_capacity(layout.k());
    for (k, bs) in layout.bs_positions.iter().enumerate() {
        let d = bs.distance(point);
        if d < MIN_DISTANCE {
            return Err(ModelError::DegenerateGeometry(format!(
                "point ({}, {}) coincides with BS {k}",
                point.x, point.y
            )));
        }
        distances.push(d);
        angles.push(layout.angle_from(k, point));
    }
    Ok((angles, distances))
}

/// `kappa^2 d_ref^4 / (d_k^2 d_i^2)`.
pub fn path_gain(params: &SensingParams, d_k: f64, d_i: f64) -> Result<f64, ModelError> {
    if !(d_k > 0.0 && d_i > 0.0) {
        return Err(ModelError::Domain(format!("distances must be positive, got {d_k} and {d_i}")));
    }
    let r = params.d_ref * params.d_ref;
    // (d_k^2)(d_i^2) commutes exactly, keeping the gain bit-symmetric
    Ok(params.kappa_sq * (r * r) / ((d_k * d_k) * (d_i * d_i)))
}

/// Rank-one `sqrt(beta) zeta a_r a_t^T` (plain transpose).
pub fn target_response(
    params: &SensingParams,
    array: &ArrayConfig,
    beta: f64,
    a_r: &CVector,
    a_t: &CVector,
) -> Result<CMatrix, ModelError> {
    if a_r.len() != array.n_rx || a_t.len() != array.n_tx {
        return Err(ModelError::Dimension(format!(
            "steering lengths ({}, {}) do not match array ({}, {})",
            a_r.len(),
            a_t.len(),
            array.n_rx,
            array.n_tx
        )));
    }
    if !(beta > 0.0) {
        return Err(ModelError::Domain(format!("path gain must be positive, got {beta}")));
    }
    let amp = Complex::new(beta.sqrt() * params.rcs, 0.0);
    Ok(a_r * a_t.transpose() * amp)
}

/// Uniform `grid_dim x grid_dim` lattice over the square, corners included.
pub fn build_target_grid(
    layout: &SystemLayout,
    params: &SensingParams,
    area_center: Position,
    side: f64,
    grid_dim: usize,
) -> Result<TargetGrid, ModelError> {
    if !(side > 0.0 && side.is_finite()) {
        return Err(ModelError::Domain(format!("side must be positive, got {side}")));
    }
    if grid_dim == 0 {
        return Err(ModelError::Domain("grid_dim must be at least 1".into()));
    }
    let offset = |j: usize| {
        if grid_dim == 1 {
            0.0
        } else {
            side * (j as f64 / (grid_dim - 1) as f64 - 0.5)
        }
    };
    let k = layout.k();
    let mut grid = TargetGrid {
        points: Vec::with_capacity(grid_dim * grid_dim),
        angles: Vec::new(),
        distances: Vec::new(),
        path_gains: Vec::new(),
    };
    for row in 0..grid_dim {
        for col in 0..grid_dim {
            let p = Position::new(area_center.x + offset(col), area_center.y + offset(row));
            let (angles, distances) = target_geometry(layout, &p)?;
            let mut gains = DMatrix::zeros(k, k);
            for kk in 0..k {
                for ii in 0..k {
                    gains[(kk, ii)] = path_gain(params, distances[kk], distances[ii])?;
                }
            }
            grid.points.push(p);
            grid.angles.push(angles);
            grid.distances.push(distances);
            grid.path_gains.push(gains);
        }
    }
    Ok(grid)
}

/// Rician channels `sqrt(g) (sqrt(K/(1+K)) a_los + sqrt(1/(1+K)) g_nlos)`.
///
/// The LOS term is the transmit steering vector from BS `i` toward CU `k`;
/// `g = pl_ref_gain * d^-pl_exponent`. Draw order is CU-major, then BS,
/// then antenna, so the result is a pure function of the inputs and `seed`.
pub fn sample_comm_channels(layout: &SystemLayout, comm: &CommParams, seed: u64) -> Result<CommChannelSet, ModelError> {
    let k = layout.k();
    let n = layout.array.n_tx;
    let kr = comm.rician_factor;
    let (los_w, nlos_w) = if kr.is_infinite() {
        (1.0, 0.0)
    } else {
        ((kr / (1.0 + kr)).sqrt(), (1.0 / (1.0 + kr)).sqrt())
    };
    let mut rng = rng_from_seed(seed);
    let mut channels = Vec::with_capacity(k);
    for cu in 0..k {
        let cu_pos = layout.cu_positions[cu];
        let mut row = Vec::with_capacity(k);
        for bs in 0..k {
            let d = layout.bs_positions[bs].distance(&cu_pos);
            if d < MIN_DISTANCE {
                return Err(ModelError::DegenerateGeometry(format!("CU {cu} coincides with BS {bs}")));
            }
            let gain = comm.pl_ref_gain * d.powf(-comm.pl_exponent);
            let a_los = steering_vector(layout.angle_from(bs, &cu_pos), n, layout.array.spacing_ratio);
            let nlos = cscg_vector(&mut rng, n, 1.0);
            let h = (a_los * Complex::new(los_w, 0.0) + nlos * Complex::new(nlos_w, 0.0)) * Complex::new(gain.sqrt(), 0.0);
            row.push(h);
        }
        channels.push(row);
    }
    CommChannelSet::new(channels, comm.noise_power)
}
