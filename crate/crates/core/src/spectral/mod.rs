//! Spectrum of the linearized Euler operator restricted to one class.
//!
//! On the class `{k̂ + n·p}` the linearization at `ω_p = Γ` is the
//! bi-infinite tridiagonal operator
//!
//! ```text
//! (L c)_n = Γ·A_{n−1}·c_{n−1} − Γ·A_{n+1}·c_{n+1}
//! ```
//!
//! Its continuous spectrum is the segment `[−2i|b|, 2i|b|]`. Point
//! eigenvalues off that segment are located two ways: as zeros of a
//! continued-fraction dispersion function ([`find_point_spectrum_cf`]) and
//! as the off-axis eigenvalues of a finite truncation
//! ([`truncated_point_spectrum`]).

mod contour;
mod dispersion;
mod matrix;

use std::cmp::Ordering;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{coeff_a, ClassChain, LatticeError, Mode};

pub use contour::{
    count_zeros, find_point_spectrum_cf, find_point_spectrum_cf_with, quadrant_boxes,
    quadrant_zero_counts, CfOptions, SearchBox,
};
pub use dispersion::{
    chain_pieces, dispersion, dispersion_converged, piece_function, tail_roots, ChainPiece,
    DEFAULT_TAIL_START, SEGMENT_TOL,
};
pub use matrix::{
    assemble_range, assemble_truncated, truncated_eigenvalues, truncated_point_spectrum,
    DEFAULT_TRUNCATION,
};

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("gamma must be finite and non-negative, got {0}")]
    BadGamma(f64),
    #[error("class of {khat} along {p} passes through the origin")]
    BrokenClass { khat: Mode, p: Mode },
    #[error("truncation {got} too small, need at least {min}")]
    TruncationTooSmall { got: usize, min: usize },
    #[error("eigen-solver failed to converge on a {0}×{0} matrix")]
    EigenSolver(usize),
    #[error("λ = {lambda} lies within {tol:e} of the continuous segment")]
    OnSegment { lambda: Complex64, tol: f64 },
    #[error("tail roots degenerate at λ = {lambda} (moduli {small}, {large})")]
    TailRoots { lambda: Complex64, small: f64, large: f64 },
    #[error("near-zero divisor in recursion at chain index {index}")]
    NearSingular { index: i64 },
    #[error("chain decouples at index {index} (A = 0); evaluate the pieces separately")]
    Decoupled { index: i64 },
    #[error("search box {0:?} touches the imaginary axis")]
    BoxOnAxis(SearchBox),
    #[error("argument-principle count not integral after {attempts} box perturbations (last {last})")]
    ContourFailed { attempts: usize, last: Complex64 },
    #[error("Newton iteration did not converge from {start} (last residual {residual:e})")]
    Newton { start: Complex64, residual: f64 },
}

pub type Result<T, E = SpectralError> = std::result::Result<T, E>;

/// The invariant subsystem of one class at the fixed point `ω_p = Γ`.
///
/// Coefficients `A_n` are evaluated on demand for any `n`, so the
/// subsystem stands for the whole bi-infinite chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSubsystem {
    khat: Mode,
    p: Mode,
    gamma: f64,
}

impl LinearSubsystem {
    pub fn new(khat: Mode, p: Mode, gamma: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma < 0.0 {
            return Err(SpectralError::BadGamma(gamma));
        }
        if p.cross(khat) == 0 {
            // k̂ ∥ p: the line through k̂ along p may contain the origin
            let hits = (-1000..=1000).any(|n| khat.shifted(p, n).is_err());
            if hits {
                return Err(SpectralError::BrokenClass { khat, p });
            }
        }
        Ok(Self { khat, p, gamma })
    }

    pub fn from_chain(chain: &ClassChain, gamma: f64) -> Result<Self> {
        Self::new(chain.khat(), chain.p(), gamma)
    }

    pub fn khat(&self) -> Mode {
        self.khat
    }

    pub fn p(&self) -> Mode {
        self.p
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn det(&self) -> i64 {
        self.p.cross(self.khat)
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.khat, self.p, gamma)
    }

    /// `A_n = A(p, k̂ + n·p)`.
    pub fn a(&self, n: i64) -> f64 {
        let k1 = self.khat.k1() + n * self.p.k1();
        let k2 = self.khat.k2() + n * self.p.k2();
        match Mode::new(k1, k2) {
            Ok(q) => coeff_a(self.p, q),
            // unreachable for validated subsystems
            Err(_) => 0.0,
        }
    }

    /// `Γ·A_∞`, the coupling approached far out along the chain.
    pub fn tail_coupling(&self) -> f64 {
        -self.gamma * self.det() as f64 / (2.0 * self.p.norm_sq() as f64)
    }

    /// Chain index of smallest `|k̂ + n·p|²` (first one on ties).
    pub fn centre_index(&self) -> i64 {
        let pp = self.p.norm_sq() as f64;
        let c = (-(self.khat.dot(self.p) as f64) / pp).round() as i64;
        (c - 1..=c + 1)
            .min_by_key(|&n| {
                let k1 = self.khat.k1() + n * self.p.k1();
                let k2 = self.khat.k2() + n * self.p.k2();
                (k1 * k1 + k2 * k2, n)
            })
            .expect("non-empty")
    }

    /// Half-width `2|b|` of the continuous segment on the imaginary axis.
    pub fn segment_halfwidth(&self) -> f64 {
        2.0 * continuous_bound(self).abs()
    }

    /// Distance from `λ` to the closed segment `[−2i|b|, 2i|b|]`.
    pub fn distance_to_segment(&self, lambda: Complex64) -> f64 {
        let h = self.segment_halfwidth();
        let dy = (lambda.im.abs() - h).max(0.0);
        lambda.re.hypot(dy)
    }
}

/// `b = −½·|Γ|·|p|⁻²·D`; the continuous spectrum is `[−2i|b|, 2i|b|]`.
pub fn continuous_bound(sys: &LinearSubsystem) -> f64 {
    -0.5 * sys.gamma.abs() * sys.det() as f64 / sys.p.norm_sq() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenType {
    RealPair,
    ImaginaryPair,
    Quadruple,
    Zero,
}

impl fmt::Display for EigenType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EigenType::RealPair => "real_pair",
            EigenType::ImaginaryPair => "imaginary_pair",
            EigenType::Quadruple => "quadruple",
            EigenType::Zero => "zero",
        };
        f.write_str(s)
    }
}

/// Type of a point eigenvalue; parts below `tol` count as zero.
pub fn classify(lambda: Complex64, tol: f64) -> EigenType {
    match (lambda.re.abs() > tol, lambda.im.abs() > tol) {
        (true, true) => EigenType::Quadruple,
        (true, false) => EigenType::RealPair,
        (false, true) => EigenType::ImaginaryPair,
        (false, false) => EigenType::Zero,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Cf,
    Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEigenvalue {
    pub value: Complex64,
    pub kind: EigenType,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub b: f64,
    pub segment_halfwidth: f64,
    pub eigenvalues: Vec<PointEigenvalue>,
    pub method: Method,
    /// Matrix truncation `N` or tail start `M`.
    pub truncation: usize,
}

#[derive(Serialize, Deserialize)]
struct EigenJson {
    re: f64,
    im: f64,
    #[serde(rename = "type")]
    kind: EigenType,
}

#[derive(Serialize, Deserialize)]
struct ReportJson {
    b: f64,
    segment_halfwidth: f64,
    eigenvalues: Vec<EigenJson>,
    method: Method,
    #[serde(rename = "N_or_M")]
    n_or_m: usize,
}

impl SpectrumReport {
    pub fn to_json(&self) -> serde_json::Value {
        let json = ReportJson {
            b: self.b,
            segment_halfwidth: self.segment_halfwidth,
            eigenvalues: self
                .eigenvalues
                .iter()
                .map(|e| EigenJson {
                    re: e.value.re,
                    im: e.value.im,
                    kind: e.kind,
                })
                .collect(),
            method: self.method,
            n_or_m: self.truncation,
        };
        serde_json::to_value(json).expect("report is always serializable")
    }

    pub fn from_json(value: &serde_json::Value) -> serde_json::Result<Self> {
        let json: ReportJson = serde_json::from_value(value.clone())?;
        Ok(Self {
            b: json.b,
            segment_halfwidth: json.segment_halfwidth,
            eigenvalues: json
                .eigenvalues
                .into_iter()
                .map(|e| PointEigenvalue {
                    value: Complex64::new(e.re, e.im),
                    kind: e.kind,
                })
                .collect(),
            method: json.method,
            truncation: json.n_or_m,
        })
    }

    pub fn values(&self) -> Vec<Complex64> {
        self.eigenvalues.iter().map(|e| e.value).collect()
    }

    /// The eigenvalue with `Re > 0`, `Im ≥ 0` and largest real part.
    pub fn leading(&self) -> Option<Complex64> {
        self.values()
            .into_iter()
            .filter(|z| z.re > 0.0 && z.im >= 0.0)
            .max_by(|a, b| a.re.total_cmp(&b.re))
    }
}

fn quadrant_order(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Closes `values` under `λ ↦ −λ` and `λ ↦ λ̄`, merging points closer than
/// `tol`, and tags each with its type. Output is sorted by `(Re, Im)`.
pub fn symmetry_complete(values: &[Complex64], tol: f64) -> Vec<PointEigenvalue> {
    let mut reps: Vec<Complex64> = Vec::new();
    for z in values {
        let mut r = Complex64::new(z.re.abs(), z.im.abs());
        if r.re <= tol {
            r.re = 0.0;
        }
        if r.im <= tol {
            r.im = 0.0;
        }
        if !reps.iter().any(|q| (q - r).norm() <= tol) {
            reps.push(r);
        }
    }
    let mut out: Vec<Complex64> = Vec::new();
    for r in reps {
        for z in [r, r.conj(), -r, -r.conj()] {
            if !out.iter().any(|q| (q - z).norm() <= tol) {
                out.push(z);
            }
        }
    }
    out.sort_by(quadrant_order);
    out.into_iter()
        .map(|value| PointEigenvalue {
            value,
            kind: classify(value, tol),
        })
        .collect()
}

/// Whether two point sets agree as sets to within `tol`.
pub fn same_point_set(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    let covered = |x: &[Complex64], y: &[Complex64]| {
        x.iter().all(|u| y.iter().any(|v| (u - v).norm() <= tol))
    };
    covered(a, b) && covered(b, a)
}

/// Whether a point set equals its reflections through both axes.
pub fn is_axis_symmetric(values: &[Complex64], tol: f64) -> bool {
    let neg: Vec<_> = values.iter().map(|z| -z).collect();
    let conj: Vec<_> = values.iter().map(|z| z.conj()).collect();
    same_point_set(values, &neg, tol) && same_point_set(values, &conj, tol)
}
