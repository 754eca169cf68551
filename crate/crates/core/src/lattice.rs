//! Integer lattice modes, the Fourier–Euler interaction coefficient and the
//! decomposition of `Z²\{0}` into classes `{k̂ + n·p : n ∈ Z}`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("mode (0, 0) is not an admissible wavenumber")]
    ZeroMode,
    #[error("empty chain range [{n_min}, {n_max}]")]
    EmptyRange { n_min: i64, n_max: i64 },
    #[error("chain member k̂ + {n}·p is the origin")]
    HitsOrigin { n: i64 },
    #[error("index {n} outside chain range [{n_min}, {n_max}]")]
    OutOfRange { n: i64, n_min: i64, n_max: i64 },
}

/// A nonzero lattice point `k = (k1, k2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "(i64, i64)", into = "(i64, i64)")]
pub struct Mode {
    k1: i64,
    k2: i64,
}

impl Mode {
    pub fn new(k1: i64, k2: i64) -> Result<Self, LatticeError> {
        if k1 == 0 && k2 == 0 {
            return Err(LatticeError::ZeroMode);
        }
        Ok(Self { k1, k2 })
    }

    pub fn k1(self) -> i64 {
        self.k1
    }

    pub fn k2(self) -> i64 {
        self.k2
    }

    /// `|k|²`, always ≥ 1.
    pub fn norm_sq(self) -> i64 {
        self.k1 * self.k1 + self.k2 * self.k2
    }

    pub fn dot(self, other: Mode) -> i64 {
        self.k1 * other.k1 + self.k2 * other.k2
    }

    /// `det [self other] = self.k1·other.k2 − self.k2·other.k1`.
    pub fn cross(self, other: Mode) -> i64 {
        self.k1 * other.k2 - self.k2 * other.k1
    }

    /// `self + n·step`, or an error if that lands on the origin.
    pub fn shifted(self, step: Mode, n: i64) -> Result<Mode, LatticeError> {
        Mode::new(self.k1 + n * step.k1, self.k2 + n * step.k2)
            .map_err(|_| LatticeError::HitsOrigin { n })
    }
}

impl TryFrom<(i64, i64)> for Mode {
    type Error = LatticeError;

    fn try_from((k1, k2): (i64, i64)) -> Result<Self, Self::Error> {
        Mode::new(k1, k2)
    }
}

impl From<Mode> for (i64, i64) {
    fn from(m: Mode) -> Self {
        (m.k1, m.k2)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.k1, self.k2)
    }
}

/// Interaction coefficient `A(p, q) = ½ (|q|⁻² − |p|⁻²) (p1·q2 − p2·q1)`.
pub fn coeff_a(p: Mode, q: Mode) -> f64 {
    let bracket = 1.0 / q.norm_sq() as f64 - 1.0 / p.norm_sq() as f64;
    0.5 * bracket * p.cross(q) as f64
}

/// Returns the `n` for which `k̂ + n·p = 0`, if any.
fn origin_index(khat: Mode, p: Mode) -> Option<i64> {
    if khat.cross(p) != 0 {
        return None;
    }
    // k̂ ∥ p: solve k̂ = −n·p componentwise.
    let (num, den) = if p.k1 != 0 { (-khat.k1, p.k1) } else { (-khat.k2, p.k2) };
    (num % den == 0).then(|| num / den)
}

/// The members `k̂ + n·p`, `n ∈ [n_min, n_max]`, of a class together with
/// their tabulated coupling coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassChain {
    khat: Mode,
    p: Mode,
    n_min: i64,
    n_max: i64,
    det: i64,
    rho: Vec<i64>,
    a: Vec<f64>,
    a_pair: Vec<f64>,
}

/// Tabulates the class chain of `khat` along `p` over `[n_min, n_max]`.
pub fn build_chain(khat: Mode, p: Mode, n_min: i64, n_max: i64) -> Result<ClassChain, LatticeError> {
    if n_min >= n_max {
        return Err(LatticeError::EmptyRange { n_min, n_max });
    }
    if let Some(n) = origin_index(khat, p) {
        if (n_min..=n_max).contains(&n) {
            return Err(LatticeError::HitsOrigin { n });
        }
    }
    let members: Vec<Mode> = (n_min..=n_max)
        .map(|n| khat.shifted(p, n))
        .collect::<Result<_, _>>()?;
    let rho = members.iter().map(|m| m.norm_sq()).collect();
    let a = members.iter().map(|&m| coeff_a(p, m)).collect();
    let a_pair = members.windows(2).map(|w| coeff_a(w[0], w[1])).collect();
    Ok(ClassChain {
        khat,
        p,
        n_min,
        n_max,
        det: p.cross(khat),
        rho,
        a,
        a_pair,
    })
}

impl ClassChain {
    pub fn khat(&self) -> Mode {
        self.khat
    }

    pub fn p(&self) -> Mode {
        self.p
    }

    pub fn n_min(&self) -> i64 {
        self.n_min
    }

    pub fn n_max(&self) -> i64 {
        self.n_max
    }

    /// `D = p1·k̂2 − p2·k̂1`, shared by every member of the class.
    pub fn det(&self) -> i64 {
        self.det
    }

    pub fn contains(&self, n: i64) -> bool {
        (self.n_min..=self.n_max).contains(&n)
    }

    fn slot(&self, n: i64) -> Result<usize, LatticeError> {
        if self.contains(n) {
            Ok((n - self.n_min) as usize)
        } else {
            Err(LatticeError::OutOfRange {
                n,
                n_min: self.n_min,
                n_max: self.n_max,
            })
        }
    }

    pub fn member(&self, n: i64) -> Result<Mode, LatticeError> {
        self.slot(n)?;
        self.khat.shifted(self.p, n)
    }

    /// `ρ_n = |k̂ + n·p|²`.
    pub fn rho(&self, n: i64) -> Result<i64, LatticeError> {
        Ok(self.rho[self.slot(n)?])
    }

    /// `A_n = A(p, k̂ + n·p)`.
    pub fn a(&self, n: i64) -> Result<f64, LatticeError> {
        Ok(self.a[self.slot(n)?])
    }

    /// `A_{n,n+1} = A(k̂ + n·p, k̂ + (n+1)·p)`; requires `n + 1 ≤ n_max`.
    pub fn a_pair(&self, n: i64) -> Result<f64, LatticeError> {
        self.slot(n + 1)?;
        Ok(self.a_pair[self.slot(n)?])
    }

    /// `A_n` for in-range `n`, zero outside (truncation convention).
    pub fn a_or_zero(&self, n: i64) -> f64 {
        self.slot(n).map(|i| self.a[i]).unwrap_or(0.0)
    }

    pub fn rho_values(&self) -> &[i64] {
        &self.rho
    }

    pub fn a_values(&self) -> &[f64] {
        &self.a
    }

    pub fn a_pair_values(&self) -> &[f64] {
        &self.a_pair
    }

    /// Chain index with the smallest `ρ_n` in range (first one on ties).
    pub fn argmin_rho(&self) -> i64 {
        let (i, _) = self
            .rho
            .iter()
            .enumerate()
            .min_by_key(|&(_, r)| *r)
            .expect("chain is never empty");
        self.n_min + i as i64
    }

    /// Asymptotic value `A_∞ = −D / (2|p|²)` approached as `|n| → ∞`.
    pub fn a_infinity(&self) -> f64 {
        -(self.det as f64) / (2.0 * self.p.norm_sq() as f64)
    }

    /// `A(p, k̂ + n·p)` for any `n`, not only the tabulated range.
    pub fn a_at(&self, n: i64) -> Result<f64, LatticeError> {
        Ok(coeff_a(self.p, self.khat.shifted(self.p, n)?))
    }
}

/// All `n` with `|k̂ + n·p|² ≤ |p|²`, in increasing order.
pub fn disk_intersection(khat: Mode, p: Mode) -> Vec<i64> {
    let pp = p.norm_sq() as i128;
    let kp = khat.dot(p) as i128;
    let kk = khat.norm_sq() as i128;
    // |k̂ + n p|² − |p|² = pp·n² + 2·kp·n + (kk − pp)
    let disc = kp * kp - pp * (kk - pp);
    if disc < 0 {
        return Vec::new();
    }
    let root = (disc as f64).sqrt();
    let lo = ((-(kp as f64) - root) / pp as f64).floor() as i64 - 1;
    let hi = ((-(kp as f64) + root) / pp as f64).ceil() as i64 + 1;
    (lo..=hi)
        .filter(|&n| {
            let n = n as i128;
            let excess = pp * n * n + 2 * kp * n + kk - pp;
            excess <= 0 && !(kk + 2 * kp * n + pp * n * n == 0)
        })
        .collect()
}

/// Canonical representative of the class of `khat` along `p`: the member of
/// smallest `|k|²`, ties broken lexicographically on `(k1, k2)`.
pub fn canonical_representative(khat: Mode, p: Mode) -> Result<Mode, LatticeError> {
    if let Some(n) = origin_index(khat, p) {
        return Err(LatticeError::HitsOrigin { n });
    }
    let pp = p.norm_sq() as f64;
    let centre = (-(khat.dot(p) as f64) / pp).round() as i64;
    (centre - 1..=centre + 1)
        .map(|n| khat.shifted(p, n))
        .collect::<Result<Vec<_>, _>>()
        .map(|ms| {
            ms.into_iter()
                .min_by_key(|m| (m.norm_sq(), m.k1, m.k2))
                .expect("three candidates")
        })
}

/// The line-model default: `k̂ = (−3, −2)`, `p = (1, 1)`.
pub fn default_pair() -> (Mode, Mode) {
    (Mode { k1: -3, k2: -2 }, Mode { k1: 1, k2: 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(k1: i64, k2: i64) -> Mode {
        Mode::new(k1, k2).unwrap()
    }

    #[test]
    fn coeff_examples() {
        assert!((coeff_a(m(1, 1), m(-3, -2)) + 11.0 / 52.0).abs() < 1e-15);
        assert_eq!(coeff_a(m(1, 1), m(2, 2)), 0.0);
        assert_eq!(coeff_a(m(1, 0), m(0, 1)), 0.0);
        assert!((coeff_a(m(-3, -2), m(1, 1)) + 11.0 / 52.0).abs() < 1e-15);
    }

    #[test]
    fn zero_mode_rejected() {
        assert_eq!(Mode::new(0, 0), Err(LatticeError::ZeroMode));
        assert!(serde_json::from_str::<Mode>("[0,0]").is_err());
    }

    #[test]
    fn reference_chain_values() {
        let (khat, p) = default_pair();
        let c = build_chain(khat, p, 0, 5).unwrap();
        assert_eq!(c.rho_values(), &[13, 5, 1, 1, 5, 13]);
        assert_eq!(c.det(), 1);
        let expect = [-11.0 / 52.0, -3.0 / 20.0, 0.25, 0.25, -3.0 / 20.0, -11.0 / 52.0];
        for (got, want) in c.a_values().iter().zip(expect) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
        let short = build_chain(khat, p, 2, 3).unwrap();
        assert_eq!(short.a_pair(2).unwrap(), 0.0);
        assert_eq!(coeff_a(m(-1, 0), m(0, 1)), 0.0);
    }

    #[test]
    fn chain_through_origin() {
        let err = build_chain(m(-1, 0), m(1, 0), -3, 4).unwrap_err();
        assert_eq!(err, LatticeError::HitsOrigin { n: 1 });
        assert!(build_chain(m(-1, 0), m(1, 0), 2, 6).is_ok());
        assert!(build_chain(m(-3, -2), m(1, 1), 3, 3).is_err());
        assert!(canonical_representative(m(2, 0), m(1, 0)).is_err());
    }

    #[test]
    fn range_access() {
        let (khat, p) = default_pair();
        let c = build_chain(khat, p, 0, 5).unwrap();
        assert!(c.a(6).is_err());
        assert!(c.a_pair(5).is_err());
        assert_eq!(c.a_or_zero(-1), 0.0);
        assert_eq!(c.member(2).unwrap(), m(-1, 0));
        assert_eq!(c.argmin_rho(), 2);
        assert_eq!(c.a_infinity(), -0.25);
    }

    #[test]
    fn disk_examples() {
        assert_eq!(disk_intersection(m(-3, -2), m(1, 1)), vec![2, 3]);
        assert!(disk_intersection(m(2, -1), m(1, 1)).is_empty());
        assert!(!disk_intersection(m(-3, -2), m(100, 100)).is_empty());
        // boundary mode |k| = |p| counts
        assert_eq!(disk_intersection(m(1, -1), m(1, 1)), vec![0]);
        // chain through the origin never reports n with k̂ + n·p = 0
        assert_eq!(disk_intersection(m(-2, 0), m(1, 0)), vec![1, 3]);
    }

    #[test]
    fn representative() {
        assert_eq!(canonical_representative(m(-3, -2), m(1, 1)).unwrap(), m(-1, 0));
        assert_eq!(canonical_representative(m(2, -1), m(1, 1)).unwrap(), m(1, -2));
    }
}
