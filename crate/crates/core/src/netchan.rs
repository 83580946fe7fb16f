//! Network geometry and per-round Rician channel realizations.
//!
//! Every link gain follows
//! `h = ρ^{-α/2} (sqrt(β/(1+β)) h_LoS + sqrt(1/(1+β)) h_NLoS)` with
//! `h_NLoS ~ CN(0, 1)` and a unit line-of-sight component. Gains are constant
//! within a transmission block and redrawn independently for every block.

use std::ops::Range;

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::{stream, stream_rng};
use crate::scalar::Scalar;

/// Home-link magnitudes below this are redrawn.
pub const MAGNITUDE_FLOOR: f64 = 1e-30;

/// A point in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point<T>) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Inputs of [`sample_topology`].
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryConfig<T> {
    pub bs_positions: Vec<Point<T>>,
    /// `K_m` for every cell.
    pub devices_per_cell: Vec<usize>,
    /// Devices are placed uniformly in the annulus `[radius_min, radius_max]`
    /// around their home BS.
    pub radius_min: T,
    pub radius_max: T,
}

impl<T: Scalar> GeometryConfig<T> {
    /// The four-cell layout with BSs at (0,0), (40,0), (20, 20√3), (20, −20√3),
    /// truncated to the first `cells` BSs.
    pub fn hexagonal_quad(cells: usize, devices_per_cell: usize) -> Self {
        let s = T::lit(20.0 * 3f64.sqrt());
        let all = [
            Point::new(T::zero(), T::zero()),
            Point::new(T::lit(40.0), T::zero()),
            Point::new(T::lit(20.0), s),
            Point::new(T::lit(20.0), -s),
        ];
        Self {
            bs_positions: all[..cells.min(4)].to_vec(),
            devices_per_cell: vec![devices_per_cell; cells.min(4)],
            radius_min: T::one(),
            radius_max: T::lit(20.0),
        }
    }
}

/// BS and device placement.
///
/// Devices are numbered contiguously per cell: cell `m` owns indices
/// `K_1 + ... + K_{m-1} .. K_1 + ... + K_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology<T> {
    pub bs_positions: Vec<Point<T>>,
    pub device_positions: Vec<Point<T>>,
    /// Home cell of every device.
    pub association: Vec<usize>,
    pub devices_per_cell: Vec<usize>,
    pub radius_range: (T, T),
}

impl<T: Scalar> Topology<T> {
    /// Builds a topology from explicit positions, validating the invariants.
    pub fn from_parts(
        bs_positions: Vec<Point<T>>,
        device_positions: Vec<Point<T>>,
        devices_per_cell: Vec<usize>,
        radius_range: (T, T),
    ) -> Result<Self> {
        if bs_positions.is_empty() {
            return Err(Error::InvalidTopology("at least one cell required".into()));
        }
        if devices_per_cell.len() != bs_positions.len() {
            return Err(Error::InvalidTopology(format!(
                "{} BSs but {} device counts",
                bs_positions.len(),
                devices_per_cell.len()
            )));
        }
        if devices_per_cell.iter().any(|&k| k == 0) {
            return Err(Error::InvalidTopology("every cell needs at least one device".into()));
        }
        let total: usize = devices_per_cell.iter().sum();
        if device_positions.len() != total {
            return Err(Error::InvalidTopology(format!(
                "{} device positions for {} devices",
                device_positions.len(),
                total
            )));
        }
        let association = devices_per_cell
            .iter()
            .enumerate()
            .flat_map(|(m, &k)| std::iter::repeat_n(m, k))
            .collect();
        Ok(Self {
            bs_positions,
            device_positions,
            association,
            devices_per_cell,
            radius_range,
        })
    }

    pub fn num_cells(&self) -> usize {
        self.bs_positions.len()
    }

    pub fn num_devices(&self) -> usize {
        self.device_positions.len()
    }

    /// Device indices of cell `m`.
    pub fn cell_devices(&self, m: usize) -> Range<usize> {
        let start: usize = self.devices_per_cell[..m].iter().sum();
        start..start + self.devices_per_cell[m]
    }

    /// Distance between BS `m` and device `k`.
    pub fn distance(&self, m: usize, k: usize) -> T {
        self.bs_positions[m].distance(&self.device_positions[k])
    }

    /// Keeps only the listed cells (in the given order), renumbering devices.
    pub fn restrict(&self, cells: &[usize]) -> Result<Self> {
        let mut devices = Vec::new();
        for &m in cells {
            devices.extend(self.cell_devices(m).map(|k| self.device_positions[k]));
        }
        Self::from_parts(
            cells.iter().map(|&m| self.bs_positions[m]).collect(),
            devices,
            cells.iter().map(|&m| self.devices_per_cell[m]).collect(),
            self.radius_range,
        )
    }
}

/// Draws a point uniformly (by area) in the annulus `[r_min, r_max]` around
/// `center`. The radius is drawn as the square root of a uniform variate on
/// `[r_min², r_max²]`. `r_min = 0` gives the full disk.
pub fn sample_annulus_point<T: Scalar, R: Rng + ?Sized>(
    center: Point<T>,
    r_min: T,
    r_max: T,
    rng: &mut R,
) -> Point<T> {
    let (lo, hi) = (r_min.as_f64().powi(2), r_max.as_f64().powi(2));
    let u: f64 = rng.random();
    let r = (lo + (hi - lo) * u).sqrt();
    let theta = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    Point::new(
        center.x + T::lit(r * theta.cos()),
        center.y + T::lit(r * theta.sin()),
    )
}

/// Places `K_m` devices uniformly in the annulus around each BS.
pub fn sample_topology<T: Scalar, R: Rng + ?Sized>(
    cfg: &GeometryConfig<T>,
    rng: &mut R,
) -> Result<Topology<T>> {
    let (r_min, r_max) = (cfg.radius_min, cfg.radius_max);
    if !(r_min > T::zero()) || r_min > r_max || !r_max.is_finite() {
        return Err(Error::InvalidRadiusRange {
            min: r_min.as_f64(),
            max: r_max.as_f64(),
        });
    }
    if cfg.bs_positions.len() != cfg.devices_per_cell.len() {
        return Err(Error::InvalidTopology(
            "bs_positions and devices_per_cell differ in length".into(),
        ));
    }
    let mut devices = Vec::new();
    for (bs, &k) in cfg.bs_positions.iter().zip(&cfg.devices_per_cell) {
        for _ in 0..k {
            devices.push(sample_annulus_point(*bs, r_min, r_max, rng));
        }
    }
    Topology::from_parts(
        cfg.bs_positions.clone(),
        devices,
        cfg.devices_per_cell.clone(),
        (r_min, r_max),
    )
}

/// Large-scale and Rician parameters of every link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams<T> {
    /// Pathloss exponent α.
    pub alpha: T,
    /// Rician factor β (linear).
    pub beta: T,
    /// Line-of-sight component, unit modulus.
    pub los: Complex<T>,
    /// Reuse the downlink gains for the uplink block of the same round.
    pub shared_blocks: bool,
}

impl<T: Scalar> ChannelParams<T> {
    pub fn new(alpha: T, beta: T) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            los: Complex::new(T::one(), T::zero()),
            shared_blocks: false,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds parameters from a Rician factor given in dB.
    pub fn from_db(alpha: T, beta_db: T) -> Result<Self> {
        Self::new(alpha, T::lit(10f64.powf(beta_db.as_f64() / 10.0)))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > T::zero()) || !self.alpha.is_finite() {
            return Err(Error::InvalidChannelParams(format!("alpha = {}", self.alpha)));
        }
        if !(self.beta >= T::zero()) || self.beta.is_nan() {
            return Err(Error::InvalidChannelParams(format!("beta = {}", self.beta)));
        }
        let m = self.los.norm();
        if (m - T::one()).abs() > T::lit(1e-6) {
            return Err(Error::InvalidChannelParams("|h_LoS| must be 1".into()));
        }
        Ok(())
    }

    /// Weights `(sqrt(β/(1+β)), sqrt(1/(1+β)))` of the LoS and NLoS parts.
    pub fn mixing_weights(&self) -> (T, T) {
        if self.beta.is_infinite() {
            return (T::one(), T::zero());
        }
        let one = T::one();
        (
            (self.beta / (one + self.beta)).sqrt(),
            (one / (one + self.beta)).sqrt(),
        )
    }
}

/// Draws one complex gain for a link of length `distance`.
pub fn sample_channel<T: Scalar, R: Rng + ?Sized>(
    distance: T,
    params: &ChannelParams<T>,
    rng: &mut R,
) -> Result<Complex<T>> {
    if !(distance > T::zero()) || !distance.is_finite() {
        return Err(Error::NonPositiveDistance(distance.as_f64()));
    }
    let scale = distance.powf(-params.alpha / T::lit(2.0));
    let (w_los, w_nlos) = params.mixing_weights();
    let half = std::f64::consts::FRAC_1_SQRT_2;
    loop {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        let nlos = Complex::new(T::lit(re * half), T::lit(im * half));
        let h = (params.los * w_los + nlos * w_nlos) * scale;
        if h.norm().as_f64() >= MAGNITUDE_FLOOR {
            return Ok(h);
        }
    }
}

/// Complex gains of every link for one training round.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet<T> {
    /// Home cell of every device.
    pub association: Vec<usize>,
    /// `dl[l][k]`: downlink gain from BS `l` to device `k`.
    pub dl: Vec<Vec<Complex<T>>>,
    /// `ul[k][m]`: uplink gain from device `k` to BS `m`.
    pub ul: Vec<Vec<Complex<T>>>,
}

impl<T: Scalar> ChannelSet<T> {
    pub fn num_cells(&self) -> usize {
        self.dl.len()
    }

    pub fn num_devices(&self) -> usize {
        self.association.len()
    }

    /// `h_k^dl`.
    pub fn dl_home(&self, k: usize) -> Complex<T> {
        self.dl[self.association[k]][k]
    }

    /// `h_{l,k}^dl`.
    pub fn dl_cross(&self, l: usize, k: usize) -> Complex<T> {
        self.dl[l][k]
    }

    /// `h_k^ul`.
    pub fn ul_home(&self, k: usize) -> Complex<T> {
        self.ul[k][self.association[k]]
    }

    /// `h_{k,m}^ul`.
    pub fn ul_cross(&self, k: usize, m: usize) -> Complex<T> {
        self.ul[k][m]
    }

    /// Devices of cell `m` (contiguous by construction).
    pub fn cell_devices(&self, m: usize) -> Vec<usize> {
        (0..self.num_devices())
            .filter(|&k| self.association[k] == m)
            .collect()
    }

    /// Counts of (home dl, cross dl, home ul, cross ul) entries.
    pub fn link_counts(&self) -> (usize, usize, usize, usize) {
        let k = self.num_devices();
        let m = self.num_cells();
        (k, k * (m - 1), k, k * (m - 1))
    }

    pub fn is_finite(&self) -> bool {
        self.dl
            .iter()
            .chain(self.ul.iter())
            .flatten()
            .all(|h| h.re.is_finite() && h.im.is_finite())
    }

    /// Restricts to the listed cells and their devices, in order.
    pub fn restrict(&self, cells: &[usize]) -> Self {
        let devices: Vec<usize> = cells.iter().flat_map(|&m| self.cell_devices(m)).collect();
        let association = devices
            .iter()
            .map(|&k| cells.iter().position(|&m| m == self.association[k]).unwrap())
            .collect();
        Self {
            association,
            dl: cells
                .iter()
                .map(|&l| devices.iter().map(|&k| self.dl[l][k]).collect())
                .collect(),
            ul: devices
                .iter()
                .map(|&k| cells.iter().map(|&m| self.ul[k][m]).collect())
                .collect(),
        }
    }
}

/// Draws every downlink and uplink gain of one round. Downlink gains are
/// drawn first (BS-major), then uplink gains (device-major).
pub fn realize_round<T: Scalar, R: Rng + ?Sized>(
    topology: &Topology<T>,
    params: &ChannelParams<T>,
    rng: &mut R,
) -> Result<ChannelSet<T>> {
    params.validate()?;
    let (m_cells, k_tot) = (topology.num_cells(), topology.num_devices());
    let mut dl = Vec::with_capacity(m_cells);
    for l in 0..m_cells {
        let row = (0..k_tot)
            .map(|k| sample_channel(topology.distance(l, k), params, rng))
            .collect::<Result<Vec<_>>>()?;
        dl.push(row);
    }
    let ul = if params.shared_blocks {
        (0..k_tot)
            .map(|k| (0..m_cells).map(|m| dl[m][k]).collect())
            .collect()
    } else {
        let mut ul = Vec::with_capacity(k_tot);
        for k in 0..k_tot {
            let row = (0..m_cells)
                .map(|m| sample_channel(topology.distance(m, k), params, rng))
                .collect::<Result<Vec<_>>>()?;
            ul.push(row);
        }
        ul
    };
    Ok(ChannelSet {
        association: topology.association.clone(),
        dl,
        ul,
    })
}

/// Channel realization of round `round` under `seed`, independent of any
/// other round.
pub fn realize_round_seeded<T: Scalar>(
    topology: &Topology<T>,
    params: &ChannelParams<T>,
    seed: u64,
    round: u64,
) -> Result<ChannelSet<T>> {
    let mut rng = stream_rng(seed, &[stream::CHANNEL, round]);
    realize_round(topology, params, &mut rng)
}
