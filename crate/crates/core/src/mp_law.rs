//! The finite-(m, n) Marchenko-Pastur law for `S = X*X / n`.
//!
//! All integrals go through the substitution `x = a + (b - a) sin²θ`, under
//! which `μ(x) dx = g(θ) dθ` with
//!
//! ```text
//! g(θ) = (b - a) cos²θ · [(b - a) sin²θ / x(θ)] / π
//! ```
//!
//! Both square-root edge factors are absorbed by the Jacobian, and for
//! `m = n` the bracket is identically one, so the hard-edge `1/x` blow-up
//! disappears as well. `g` is smooth on `[0, π/2]`; for `m/n` close to one
//! it is steep near `θ = 0`, which the adaptive panel refinement absorbs.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::quadrature::{gauss_legendre_16, integrate_adaptive};

/// Absolute tolerance for CDF integrals in angle space.
const CDF_TOLERANCE: f64 = 1e-13;
/// Below this density Newton steps on the CDF are not trusted.
const NEWTON_DENSITY_FLOOR: f64 = 1e-8;
const MAX_QUANTILE_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpLaw {
    m: usize,
    n: usize,
    lower: f64,
    upper: f64,
}

impl MpLaw {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if n == 0 || m < n {
            return Err(Error::InvalidDimensions { m, n });
        }
        let r = (m as f64 / n as f64).sqrt();
        Ok(Self {
            m,
            n,
            lower: (1.0 - r) * (1.0 - r),
            upper: (1.0 + r) * (1.0 + r),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `m / n`.
    pub fn ratio(&self) -> f64 {
        self.m as f64 / self.n as f64
    }

    /// `a = (1 - sqrt(m/n))²`
    pub fn lower_edge(&self) -> f64 {
        self.lower
    }

    /// `b = (1 + sqrt(m/n))²`
    pub fn upper_edge(&self) -> f64 {
        self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn mean(&self) -> f64 {
        self.ratio()
    }

    pub fn variance(&self) -> f64 {
        self.ratio()
    }

    /// Density `√((x-a)(b-x)) / (2πx)` on `(a, b]`, zero elsewhere.
    ///
    /// At the hard edge (`m = n`) the density is unbounded as `x → 0⁺` but
    /// finite at every `x > 0`; `x = 0` itself returns zero.
    pub fn density(&self, x: f64) -> Result<f64> {
        ensure_finite("x", x)?;
        if x <= self.lower || x >= self.upper || x <= 0.0 {
            return Ok(0.0);
        }
        Ok(((x - self.lower) * (self.upper - x)).sqrt() / (2.0 * PI * x))
    }

    /// Distribution function `μ_t = ∫_{-∞}^t μ(x) dx`.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        ensure_finite("t", t)?;
        if t <= self.lower {
            return Ok(0.0);
        }
        if t >= self.upper {
            return Ok(1.0);
        }
        Ok(self.cdf_at_angle(self.angle_of(t)))
    }

    /// Generalized inverse of the distribution function.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        ensure_finite("p", p)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange {
                what: "p",
                value: p,
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(self.point_at(self.quantile_angle(p)))
    }

    /// The n classical locations `γ_j = G⁻¹(j/n)`, j = 1..n.
    pub fn classical_locations(&self) -> ClassicalLocations {
        let n = self.n as f64;
        let angles: Vec<f64> = (1..=self.n)
            .map(|j| self.quantile_angle(j as f64 / n))
            .collect();
        ClassicalLocations::from_angles(*self, angles)
    }

    /// Explicit lower bounds on the distance from `γ_j` to both edges:
    ///
    /// * `b - γ_j ≥ (3π γ_j (1 - j/n) / √(b-a))^{2/3}`
    /// * `√(γ_j - a) ≥ π (j/n) / √(b-a)`
    pub fn edge_distance_bounds(&self, j: usize) -> Result<EdgeDistanceBounds> {
        self.check_index(j)?;
        let frac = j as f64 / self.n as f64;
        let gamma = self.quantile(frac)?;
        Ok(self.edge_bounds_at(j, gamma))
    }

    pub(crate) fn edge_bounds_at(&self, j: usize, gamma: f64) -> EdgeDistanceBounds {
        let frac = j as f64 / self.n as f64;
        let root_width = self.width().sqrt();
        let right = (3.0 * PI * gamma * (1.0 - frac) / root_width).powf(2.0 / 3.0);
        let left_root = PI * frac / root_width;
        EdgeDistanceBounds {
            index: j,
            gamma,
            right_gap_lower_bound: right,
            left_root_lower_bound: left_root,
            lower_edge: self.lower,
            upper_edge: self.upper,
        }
    }

    /// Upper bound on the spacing `γ_j - γ_{j-1}` (with `γ_0 = a`).
    ///
    /// The bound has the form `c / (n^{2/3} min(j, n+1-j)^{1/3})`, with the
    /// constant taken from whichever half of the spectrum the spacing lies
    /// in (see [`GapConstants`]). A spacing straddling the median is split
    /// at the median and both halves are bounded separately.
    pub fn gap_bound(&self, j: usize) -> Result<f64> {
        self.check_index(j)?;
        let consts = self.gap_constants();
        let n = self.n as f64;
        let jf = j as f64;
        let scale = n.powf(2.0 / 3.0);
        let bound = if 2 * (j - 1) >= self.n {
            consts.right / (scale * (n + 1.0 - jf).cbrt())
        } else if 2 * j <= self.n {
            consts.left / (scale * jf.cbrt())
        } else {
            (consts.left + consts.right) / (scale * (0.5 * n).cbrt())
        };
        Ok(bound)
    }

    /// Constants of the spacing bound, assembled from explicit inequalities.
    ///
    /// With `w = b - a` and `D = (3π³/8)^{2/3} / w` (a lower bound on
    /// `b - G⁻¹(1/2)`):
    ///
    /// * right half: `c = 6 b w / (3π³/4)^{1/3}`
    /// * left half, `a > 0`: `c = 3π b (√w / (3π a))^{1/3} / √D`
    /// * left half, `a = 0`: `c = 2^{-1/3} π² / D`
    pub fn gap_constants(&self) -> GapConstants {
        let a = self.lower;
        let b = self.upper;
        let w = self.width();
        let d_mid = (3.0 * PI.powi(3) / 8.0).powf(2.0 / 3.0) / w;
        let right = 6.0 * b * w / (3.0 * PI.powi(3) / 4.0).cbrt();
        let left = if a > 0.0 {
            3.0 * PI * b * (w.sqrt() / (3.0 * PI * a)).cbrt() / d_mid.sqrt()
        } else {
            PI * PI / (2f64.cbrt() * d_mid)
        };
        GapConstants { left, right }
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.n {
            return Err(Error::IndexOutOfRange {
                index: j,
                n: self.n,
            });
        }
        Ok(())
    }

    // ---- angle-space machinery ----

    pub(crate) fn angle_of(&self, x: f64) -> f64 {
        let lo = (x - self.lower).max(0.0).sqrt();
        let hi = (self.upper - x).max(0.0).sqrt();
        lo.atan2(hi)
    }

    pub(crate) fn point_at(&self, theta: f64) -> f64 {
        if theta >= FRAC_PI_2 {
            return self.upper;
        }
        let s = theta.sin();
        self.lower + self.width() * s * s
    }

    /// `dμ_t/dθ`.
    pub(crate) fn mass_rate(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        let w = self.width();
        let ws2 = w * s * s;
        let bracket = if self.lower == 0.0 {
            1.0
        } else {
            ws2 / (self.lower + ws2)
        };
        w * c * c * bracket / PI
    }

    pub(crate) fn cdf_at_angle(&self, theta: f64) -> f64 {
        if theta <= 0.0 {
            return 0.0;
        }
        if theta >= FRAC_PI_2 {
            return 1.0;
        }
        let rate = |th: f64| self.mass_rate(th);
        let value = if theta <= FRAC_PI_4 {
            integrate_adaptive(rate, 0.0, theta, CDF_TOLERANCE)
        } else {
            1.0 - integrate_adaptive(rate, theta, FRAC_PI_2, CDF_TOLERANCE)
        };
        value.clamp(0.0, 1.0)
    }

    /// Angle `θ` with `μ_{x(θ)} = p`: Newton on the CDF where the density is
    /// usable, bisection otherwise. The bracket is kept throughout so the
    /// iteration cannot escape.
    pub(crate) fn quantile_angle(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return FRAC_PI_2;
        }
        let (mut lo, mut hi) = (0.0, FRAC_PI_2);
        let mut theta = FRAC_PI_2 * p;
        for _ in 0..MAX_QUANTILE_ITERATIONS {
            let residual = self.cdf_at_angle(theta) - p;
            if residual == 0.0 {
                return theta;
            }
            if residual < 0.0 {
                lo = theta;
            } else {
                hi = theta;
            }
            if hi - lo <= 4.0 * f64::EPSILON * hi.max(f64::MIN_POSITIVE) {
                break;
            }
            let rate = self.mass_rate(theta);
            let next = if rate > NEWTON_DENSITY_FLOOR {
                theta - residual / rate
            } else {
                f64::NAN
            };
            let next = if next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            };
            if (next - theta).abs() <= 2.0 * f64::EPSILON * theta.abs() {
                theta = next;
                break;
            }
            theta = next;
        }
        theta
    }

    /// `∫_{x(θ0)}^{x(θ1)} h(x) μ(x) dx`.
    pub(crate) fn integrate_mass<H: Fn(f64) -> f64>(&self, theta0: f64, theta1: f64, h: H) -> f64 {
        let integrand = |th: f64| h(self.point_at(th)) * self.mass_rate(th);
        let coarse = gauss_legendre_16().integrate(theta0, theta1, integrand);
        let tol = 1e-11 * coarse.abs() + 1e-300;
        integrate_adaptive(integrand, theta0, theta1, tol)
    }
}

/// Sorted classical locations together with their angles in the
/// substitution variable (used to integrate between consecutive locations).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalLocations {
    law: MpLaw,
    gammas: Vec<f64>,
    angles: Vec<f64>,
}

impl ClassicalLocations {
    pub(crate) fn from_angles(law: MpLaw, angles: Vec<f64>) -> Self {
        let gammas = angles.iter().map(|&th| law.point_at(th)).collect();
        Self {
            law,
            gammas,
            angles,
        }
    }

    pub fn law(&self) -> &MpLaw {
        &self.law
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.gammas
    }

    /// `γ_j`, 1-based; `γ_0` is the lower edge.
    pub fn gamma(&self, j: usize) -> f64 {
        if j == 0 {
            self.law.lower
        } else {
            self.gammas[j - 1]
        }
    }

    /// Angle of `γ_j`, 1-based; `θ_0 = 0`.
    pub(crate) fn angle(&self, j: usize) -> f64 {
        if j == 0 {
            0.0
        } else {
            self.angles[j - 1]
        }
    }

    /// Rows `(j, γ_j)`.
    pub fn rows(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.gammas.iter().enumerate().map(|(i, &g)| (i + 1, g))
    }
}

/// Process-wide cache of classical locations keyed by `(m, n)`.
pub fn cached_classical_locations(law: &MpLaw) -> Arc<ClassicalLocations> {
    type Cache = Mutex<HashMap<(usize, usize), Arc<ClassicalLocations>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(hit) = cache.lock().unwrap().get(&(law.m, law.n)) {
        return Arc::clone(hit);
    }
    let locations = Arc::new(law.classical_locations());
    cache
        .lock()
        .unwrap()
        .entry((law.m, law.n))
        .or_insert(locations)
        .clone()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeDistanceBounds {
    pub index: usize,
    pub gamma: f64,
    /// Lower bound on `b - γ_j`.
    pub right_gap_lower_bound: f64,
    /// Lower bound on `√(γ_j - a)`.
    pub left_root_lower_bound: f64,
    pub lower_edge: f64,
    pub upper_edge: f64,
}

impl EdgeDistanceBounds {
    pub fn right_holds(&self, tol: f64) -> bool {
        self.upper_edge - self.gamma + tol >= self.right_gap_lower_bound
    }

    pub fn left_holds(&self, tol: f64) -> bool {
        self.gamma - self.lower_edge + tol >= self.left_root_lower_bound.powi(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapConstants {
    pub left: f64,
    pub right: f64,
}

impl GapConstants {
    /// A single constant valid for every index.
    pub fn uniform(&self) -> f64 {
        2f64.cbrt() * (self.left + self.right)
    }
}
