use crate::error::{Error, Result};

/// Frequency `omega(k)` of the clock field mode with momentum `k`.
#[derive(Debug, Clone, PartialEq)]
pub enum DispersionRelation {
    /// `omega = v_g k`.
    Linear { group_velocity: f64 },
    /// `omega = v_g k + k^2 / (2 M)`.
    Massive { group_velocity: f64, mass: f64 },
    Tabulated(DispersionTable),
}

impl DispersionRelation {
    pub fn linear(group_velocity: f64) -> Self {
        DispersionRelation::Linear { group_velocity }
    }

    pub fn massive(group_velocity: f64, mass: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidDispersion(format!("mass must be positive, got {mass}")));
        }
        Ok(DispersionRelation::Massive {
            group_velocity,
            mass,
        })
    }

    pub fn tabulated(momenta: Vec<f64>, frequencies: Vec<f64>) -> Result<Self> {
        DispersionTable::new(momenta, frequencies).map(DispersionRelation::Tabulated)
    }

    pub fn omega(&self, k: f64) -> f64 {
        match self {
            DispersionRelation::Linear { group_velocity } => group_velocity * k,
            DispersionRelation::Massive {
                group_velocity,
                mass,
            } => group_velocity * k + k * k / (2.0 * mass),
            DispersionRelation::Tabulated(t) => t.omega(k),
        }
    }

    /// Group velocity `d omega / dk`.
    pub fn derivative(&self, k: f64) -> f64 {
        match self {
            DispersionRelation::Linear { group_velocity } => *group_velocity,
            DispersionRelation::Massive {
                group_velocity,
                mass,
            } => group_velocity + k / mass,
            DispersionRelation::Tabulated(t) => t.derivative(k),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, DispersionRelation::Linear { .. })
    }

    /// Nominal group velocity at `k = 0`.
    pub fn reference_velocity(&self) -> f64 {
        self.derivative(0.0)
    }
}

/// Sampled dispersion relation.
///
/// Node slopes come from three-point differences (centered on uniform tables);
/// between nodes `omega` is the cubic Hermite interpolant through those slopes
/// and `derivative` is its exact derivative. Outside the table both are
/// extended linearly with the end slope.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionTable {
    momenta: Vec<f64>,
    frequencies: Vec<f64>,
    slopes: Vec<f64>,
}

impl DispersionTable {
    pub fn new(momenta: Vec<f64>, frequencies: Vec<f64>) -> Result<Self> {
        if momenta.len() != frequencies.len() {
            return Err(Error::InvalidDispersion(format!(
                "table has {} momenta but {} frequencies",
                momenta.len(),
                frequencies.len()
            )));
        }
        if momenta.len() < 3 {
            return Err(Error::InvalidDispersion("table needs at least 3 rows".into()));
        }
        if momenta.iter().chain(&frequencies).any(|v| !v.is_finite()) {
            return Err(Error::InvalidDispersion("table entries must be finite".into()));
        }
        if momenta.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidDispersion(
                "table momenta must be strictly increasing".into(),
            ));
        }
        let slopes = node_slopes(&momenta, &frequencies);
        Ok(Self {
            momenta,
            frequencies,
            slopes,
        })
    }

    /// Samples `f` on `n` uniform nodes over `[k_min, k_max]`.
    pub fn from_fn(f: impl Fn(f64) -> f64, k_min: f64, k_max: f64, n: usize) -> Result<Self> {
        if n < 3 || !(k_max > k_min) {
            return Err(Error::InvalidDispersion("bad sampling range".into()));
        }
        let h = (k_max - k_min) / (n - 1) as f64;
        let momenta: Vec<f64> = (0..n).map(|i| k_min + i as f64 * h).collect();
        let frequencies = momenta.iter().map(|&k| f(k)).collect();
        Self::new(momenta, frequencies)
    }

    pub fn momenta(&self) -> &[f64] {
        &self.momenta
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn range(&self) -> (f64, f64) {
        (self.momenta[0], *self.momenta.last().unwrap())
    }

    fn segment(&self, k: f64) -> usize {
        let idx = self.momenta.partition_point(|&m| m <= k);
        idx.clamp(1, self.momenta.len() - 1) - 1
    }

    pub fn omega(&self, k: f64) -> f64 {
        let (lo, hi) = self.range();
        let last = self.momenta.len() - 1;
        if k < lo {
            return self.frequencies[0] + self.slopes[0] * (k - lo);
        }
        if k > hi {
            return self.frequencies[last] + self.slopes[last] * (k - hi);
        }
        let i = self.segment(k);
        let h = self.momenta[i + 1] - self.momenta[i];
        let s = (k - self.momenta[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.frequencies[i]
            + h10 * h * self.slopes[i]
            + h01 * self.frequencies[i + 1]
            + h11 * h * self.slopes[i + 1]
    }

    pub fn derivative(&self, k: f64) -> f64 {
        let (lo, hi) = self.range();
        if k <= lo {
            return self.slopes[0];
        }
        if k >= hi {
            return *self.slopes.last().unwrap();
        }
        let i = self.segment(k);
        let h = self.momenta[i + 1] - self.momenta[i];
        let s = (k - self.momenta[i]) / h;
        let s2 = s * s;
        let d00 = (6.0 * s2 - 6.0 * s) / h;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = (-6.0 * s2 + 6.0 * s) / h;
        let d11 = 3.0 * s2 - 2.0 * s;
        d00 * self.frequencies[i]
            + d10 * self.slopes[i]
            + d01 * self.frequencies[i + 1]
            + d11 * self.slopes[i + 1]
    }
}

fn node_slopes(k: &[f64], w: &[f64]) -> Vec<f64> {
    let n = k.len();
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        let hm = k[i] - k[i - 1];
        let hp = k[i + 1] - k[i];
        out[i] = (hm * hm * w[i + 1] - hp * hp * w[i - 1] + (hp * hp - hm * hm) * w[i])
            / (hm * hp * (hm + hp));
    }
    // second-order one-sided ends
    out[0] = three_point_end(k[0], k[1], k[2], w[0], w[1], w[2]);
    out[n - 1] = three_point_end(k[n - 1], k[n - 2], k[n - 3], w[n - 1], w[n - 2], w[n - 3]);
    out
}

/// Derivative at `x0` of the parabola through three points.
fn three_point_end(x0: f64, x1: f64, x2: f64, y0: f64, y1: f64, y2: f64) -> f64 {
    y0 * (2.0 * x0 - x1 - x2) / ((x0 - x1) * (x0 - x2))
        + y1 * (x0 - x2) / ((x1 - x0) * (x1 - x2))
        + y2 * (x0 - x1) / ((x2 - x0) * (x2 - x1))
}
