//! Radiation-and-absorbing commuting model over a set of hot spots.
//!
//! Hot spots are identified by 1-based ids. The intervening mass `s_ij`
//! counts every hot spot (other than `i` and `j`) whose *center* lies within
//! the circle around `i`'s center that passes through `j`'s center,
//! boundary included.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, UdnError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HotSpot {
    pub id: usize,
    /// Center in km.
    pub center: [f64; 2],
    /// Coverage radius `l_i` in km.
    pub radius: f64,
    /// Attraction exponent `m_i`.
    pub attraction: f64,
}

impl HotSpot {
    fn dist2(&self, other: &HotSpot) -> f64 {
        let dx = self.center[0] - other.center[0];
        let dy = self.center[1] - other.center[1];
        dx * dx + dy * dy
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobilityConfig {
    /// Fraction of users moving per time slot.
    pub zeta: f64,
    pub hot_spots: Vec<HotSpot>,
}

impl MobilityConfig {
    pub fn new(zeta: f64, hot_spots: Vec<HotSpot>) -> Result<Self> {
        let cfg = MobilityConfig { zeta, hot_spots };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return Err(UdnError::input(format!(
                "zeta must lie in (0, 1), got {}",
                self.zeta
            )));
        }
        if self.hot_spots.is_empty() {
            return Err(UdnError::input("at least one hot spot is required"));
        }
        for (k, hs) in self.hot_spots.iter().enumerate() {
            if hs.id != k + 1 {
                return Err(UdnError::input(format!(
                    "hot spot ids must be contiguous from 1; position {} has id {}",
                    k + 1,
                    hs.id
                )));
            }
            if !(hs.radius > 0.0 && hs.radius.is_finite()) {
                return Err(UdnError::input(format!(
                    "hot spot {}: radius must be positive, got {}",
                    hs.id, hs.radius
                )));
            }
            if !(hs.attraction > 0.0 && hs.attraction.is_finite()) {
                return Err(UdnError::input(format!(
                    "hot spot {}: attraction must be positive, got {}",
                    hs.id, hs.attraction
                )));
            }
            if !hs.center.iter().all(|c| c.is_finite()) {
                return Err(UdnError::input(format!("hot spot {}: center is not finite", hs.id)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.hot_spots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hot_spots.is_empty()
    }

    fn spot(&self, id: usize) -> Result<&HotSpot> {
        if id == 0 || id > self.hot_spots.len() {
            return Err(UdnError::input(format!(
                "hot spot id {id} out of range 1..={}",
                self.hot_spots.len()
            )));
        }
        Ok(&self.hot_spots[id - 1])
    }

    fn pair(&self, i: usize, j: usize) -> Result<(&HotSpot, &HotSpot)> {
        let a = self.spot(i)?;
        let b = self.spot(j)?;
        if i == j {
            return Err(UdnError::input(format!("hot spot pair requires i != j, got {i} twice")));
        }
        Ok((a, b))
    }
}

/// Commuting probabilities `[R]_ij` and exit probabilities `d_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    pub r: DMatrix<f64>,
    pub d: Vec<f64>,
}

impl TransferMatrix {
    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Largest `|Σ_j R_ij + d_i - 1|` over rows.
    pub fn row_identity_error(&self) -> f64 {
        (0..self.len())
            .map(|i| (self.r.row(i).sum() + self.d[i] - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Perron root of `R` by power iteration (R is nonnegative).
    pub fn spectral_radius(&self) -> f64 {
        let n = self.len();
        if n == 0 {
            return 0.0;
        }
        let mut v = nalgebra::DVector::from_element(n, 1.0 / n as f64);
        let mut rho = 0.0;
        for _ in 0..2000 {
            // Shifted iteration (R + I) avoids stalling on periodic structure.
            let w = &self.r * &v + &v;
            let norm = w.iter().sum::<f64>();
            if norm <= 0.0 {
                return 0.0;
            }
            let next = norm - 1.0;
            v = w / norm;
            if (next - rho).abs() < 1e-13 {
                return next.max(0.0);
            }
            rho = next;
        }
        rho.max(0.0)
    }
}

/// Total attraction of hot spots (excluding `i` and `j`) whose centers lie
/// within distance `|c_i - c_j|` of `c_i`.
pub fn intervening_mass(i: usize, j: usize, cfg: &MobilityConfig) -> Result<f64> {
    let (hi, hj) = cfg.pair(i, j)?;
    let radius2 = hi.dist2(hj);
    Ok(cfg
        .hot_spots
        .iter()
        .filter(|k| k.id != i && k.id != j && hi.dist2(k) <= radius2)
        .map(|k| k.attraction)
        .sum())
}

fn radiation(mi: f64, mj: f64, s: f64) -> f64 {
    mi * mj / ((mi + s) * (mi + mj + s))
}

pub fn transition_probability(i: usize, j: usize, cfg: &MobilityConfig) -> Result<f64> {
    let s = intervening_mass(i, j, cfg)?;
    let (hi, hj) = cfg.pair(i, j)?;
    Ok(radiation(hi.attraction, hj.attraction, s))
}

pub fn build_transfer_matrix(cfg: &MobilityConfig) -> Result<TransferMatrix> {
    cfg.validate()?;
    let n = cfg.len();
    let mut r = DMatrix::zeros(n, n);
    for i in 1..=n {
        for j in 1..=n {
            if i != j {
                r[(i - 1, j - 1)] = transition_probability(i, j, cfg)?;
            }
        }
    }
    let mut d = Vec::with_capacity(n);
    for i in 0..n {
        let row = r.row(i).sum();
        let di = 1.0 - row;
        if di < -1e-12 {
            return Err(UdnError::ModelViolation(format!(
                "row {} of the transfer matrix sums to {row} > 1",
                i + 1
            )));
        }
        d.push(di.max(0.0));
    }
    Ok(TransferMatrix { r, d })
}

/// Expected number of users moving from `i` to `j` in one slot.
pub fn expected_flow(i: usize, j: usize, population: f64, cfg: &MobilityConfig) -> Result<f64> {
    if !(population >= 0.0) {
        return Err(UdnError::input(format!("population must be nonnegative, got {population}")));
    }
    Ok(cfg.zeta * population * transition_probability(i, j, cfg)?)
}

/// External arrivals per slot; identical for every hot spot.
pub fn external_arrival_rates(cfg: &MobilityConfig, tm: &TransferMatrix) -> Vec<f64> {
    let n = cfg.len();
    let total: f64 = cfg
        .hot_spots
        .iter()
        .zip(&tm.d)
        .map(|(hs, d)| hs.attraction * d)
        .sum();
    vec![cfg.zeta * total / n as f64; n]
}
