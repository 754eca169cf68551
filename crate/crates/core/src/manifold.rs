//! Local stable and unstable manifolds of `ω*` in the line model, grown as
//! families of trajectories seeded on a small circle in the hyperbolic
//! eigenplanes of the linearization.

use std::f64::consts::PI;

use faer::prelude::*;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{deviation_field_into, integrate, DynamicsError, ModelParams, Trajectory};
use crate::spectral::{assemble_range, LinearSubsystem, SpectralError};

#[derive(Debug, Error)]
pub enum ManifoldError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("no hyperbolic directions: no eigenvalue with |Re λ| > {threshold}")]
    NoHyperbolic { threshold: f64 },
    #[error("expected one hyperbolic quadruple, found {0} unstable eigenvalues in the upper half-plane")]
    Ambiguous(usize),
    #[error("split covers chain indices [{split_lo}, {split_hi}], model has [{model_lo}, {model_hi}]")]
    RangeMismatch {
        split_lo: i64,
        split_hi: i64,
        model_lo: i64,
        model_hi: i64,
    },
    #[error("trajectory {seed} blew up at t = {time}")]
    BlowUp { seed: usize, time: f64 },
    #[error("fit window rejected: {0}")]
    BadWindow(String),
}

pub type Result<T, E = ManifoldError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Unstable,
    Stable,
}

/// Spectral splitting of the tangent space at `ω*`.
///
/// Vectors use the flat line-model layout `[ω_p, ω_lo, …, ω_hi]`; the
/// `ω_p` component of every hyperbolic vector is zero.
#[derive(Debug, Clone)]
pub struct TangentSplit {
    pub lo: i64,
    pub hi: i64,
    pub lambda_u: Complex64,
    pub unstable_basis: Vec<Vec<f64>>,
    pub stable_basis: Vec<Vec<f64>>,
    pub center_basis: Vec<Vec<f64>>,
    /// Every eigenvalue of the truncation.
    pub eigenvalues: Vec<Complex64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Modified Gram–Schmidt; vectors whose remainder falls below `drop_tol`
/// of their original norm are dropped.
fn orthonormalize(vectors: impl IntoIterator<Item = Vec<f64>>, basis: &mut Vec<Vec<f64>>, drop_tol: f64) {
    for mut v in vectors {
        let original = norm(&v);
        if original == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in basis.iter() {
                let c = dot(&v, q);
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let n = norm(&v);
        if n > drop_tol * original {
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        }
    }
}

/// Tangent splitting on chain indices `[lo, hi]`, bordered by the `ω_p`
/// direction.
pub fn tangent_split_range(sys: &LinearSubsystem, lo: i64, hi: i64, re_threshold: f64) -> Result<TangentSplit> {
    let m = assemble_range(sys, lo, hi);
    let dim = m.nrows();
    let eig = m.eigen().map_err(|_| SpectralError::EigenSolver(dim))?;
    let values: Vec<Complex64> = (0..dim).map(|i| eig.S()[i]).collect();
    let vector = |i: usize| -> Vec<Complex64> { (0..dim).map(|r| eig.U()[(r, i)]).collect() };

    let pick = |want_re_positive: bool| -> Vec<usize> {
        (0..dim)
            .filter(|&i| {
                let z = values[i];
                z.re.abs() > re_threshold && (z.re > 0.0) == want_re_positive && z.im >= 0.0
            })
            .collect()
    };
    let (unstable, stable) = (pick(true), pick(false));
    if unstable.is_empty() {
        return Err(ManifoldError::NoHyperbolic {
            threshold: re_threshold,
        });
    }
    if unstable.len() > 1 || stable.len() != 1 {
        return Err(ManifoldError::Ambiguous(unstable.len()));
    }
    let embed = |v: Vec<f64>| -> Vec<f64> { std::iter::once(0.0).chain(v).collect() };
    let real_forms = |i: usize| -> Vec<Vec<f64>> {
        let v = vector(i);
        let re = embed(v.iter().map(|z| z.re).collect());
        if values[i].im.abs() <= re_threshold * 1e-6 {
            vec![re]
        } else {
            vec![re, embed(v.iter().map(|z| z.im).collect())]
        }
    };

    let mut unstable_basis = Vec::new();
    orthonormalize(real_forms(unstable[0]), &mut unstable_basis, 1e-10);
    let mut stable_basis = Vec::new();
    orthonormalize(real_forms(stable[0]), &mut stable_basis, 1e-10);

    let mut p_dir = vec![0.0; dim + 1];
    p_dir[0] = 1.0;
    let mut center_basis = Vec::new();
    let centre_vectors = (0..dim)
        .filter(|&i| values[i].re.abs() <= re_threshold && values[i].im >= 0.0)
        .flat_map(real_forms);
    orthonormalize(std::iter::once(p_dir).chain(centre_vectors), &mut center_basis, 1e-8);

    Ok(TangentSplit {
        lo,
        hi,
        lambda_u: values[unstable[0]],
        unstable_basis,
        stable_basis,
        center_basis,
        eigenvalues: values,
    })
}

/// Tangent splitting of the `N`-truncation on `[−N, N]`.
pub fn tangent_split(sys: &LinearSubsystem, n: usize, re_threshold: f64) -> Result<TangentSplit> {
    let n = n as i64;
    tangent_split_range(sys, -n, n, re_threshold)
}

/// Tangent splitting matching a line model's state range.
pub fn tangent_split_for(params: &ModelParams, re_threshold: f64) -> Result<TangentSplit> {
    let sys = params.linear_subsystem()?;
    tangent_split_range(&sys, params.n_min(), params.n_max(), re_threshold)
}

impl TangentSplit {
    /// `L v` for a flat-layout vector, `L` the linearization on `[lo, hi]`.
    pub fn apply_linear(&self, sys: &LinearSubsystem, v: &[f64]) -> Vec<f64> {
        let g = sys.gamma();
        let modes = (self.hi - self.lo + 1) as usize;
        let mut out = vec![0.0; modes + 1];
        for i in 0..modes {
            let n = self.lo + i as i64;
            let left = if i > 0 { sys.a(n - 1) * v[i] } else { 0.0 };
            let right = if i + 1 < modes { sys.a(n + 1) * v[i + 2] } else { 0.0 };
            out[i + 1] = g * (left - right);
        }
        out
    }

    /// Component of `v` orthogonal to the span of `basis`.
    pub fn reject(basis: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
        let mut r = v.to_vec();
        for q in basis {
            let c = dot(&r, q);
            r.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
        }
        r
    }
}

/// One seeded trajectory family. For the stable direction the field is
/// integrated backward: sample `i` is `u(−times[i])`.
#[derive(Debug, Clone)]
pub struct ManifoldFamily {
    pub direction: Direction,
    pub delta: f64,
    pub thetas: Vec<f64>,
    pub trajectories: Vec<Trajectory>,
}

/// Settings for [`grow_manifold`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthSettings {
    pub delta: f64,
    pub samples: usize,
    pub t_end: f64,
    pub dt: f64,
    /// Sampling stride in steps.
    pub stride: usize,
    pub direction: Direction,
}

/// Seeds `u(0) = δ (cos θ_j e₁ + sin θ_j e₂)` on the chosen eigenplane and
/// integrates the deviation field (backward for the stable plane) to
/// `t_end`. Trajectories are in deviation coordinates, ordered by `θ_j`.
pub fn grow_manifold(split: &TangentSplit, params: &ModelParams, settings: &GrowthSettings) -> Result<ManifoldFamily> {
    if (split.lo, split.hi) != (params.n_min(), params.n_max()) {
        return Err(ManifoldError::RangeMismatch {
            split_lo: split.lo,
            split_hi: split.hi,
            model_lo: params.n_min(),
            model_hi: params.n_max(),
        });
    }
    if settings.samples == 0 {
        return Err(DynamicsError::BadSetup("samples must be ≥ 1".into()).into());
    }
    let basis = match settings.direction {
        Direction::Unstable => &split.unstable_basis,
        Direction::Stable => &split.stable_basis,
    };
    let sign = match settings.direction {
        Direction::Unstable => 1.0,
        Direction::Stable => -1.0,
    };
    let steps = (settings.t_end / settings.dt).round() as usize;
    let thetas: Vec<f64> = (0..settings.samples)
        .map(|j| 2.0 * PI * j as f64 / settings.samples as f64)
        .collect();
    let field = |_t: f64, u: &[f64], out: &mut [f64]| {
        deviation_field_into(params, u, out);
        if sign < 0.0 {
            out.iter_mut().for_each(|x| *x = -*x);
        }
    };
    let trajectories = thetas
        .par_iter()
        .enumerate()
        .map(|(j, &theta)| {
            let (c, s) = (theta.cos(), theta.sin());
            let seed: Vec<f64> = (0..params.dim())
                .map(|i| {
                    let e2 = basis.get(1).map(|b| b[i]).unwrap_or(0.0);
                    settings.delta * (c * basis[0][i] + s * e2)
                })
                .collect();
            integrate(&field, &seed, 0.0, settings.dt, steps.max(1), settings.stride).map_err(|e| match e {
                DynamicsError::NonFinite { t, .. } => ManifoldError::BlowUp { seed: j, time: t },
                other => other.into(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ManifoldFamily {
        direction: settings.direction,
        delta: settings.delta,
        thetas,
        trajectories,
    })
}

/// Fitted exponential rate and oscillation frequency of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub rate: f64,
    /// `None` when no coordinate crosses zero twice in the window.
    pub frequency: Option<f64>,
}

/// Mean angular frequency from zero-crossing spacing, pooled over all
/// coordinates that cross zero at least twice. Crossing times are found
/// by linear interpolation.
fn crossing_frequency(traj: &Trajectory) -> Option<f64> {
    let dim = traj.states.first()?.len();
    let peak = traj
        .states
        .iter()
        .flat_map(|s| s.iter().map(|x| x.abs()))
        .fold(0.0, f64::max);
    let (mut spans, mut gaps) = (0.0, 0usize);
    for i in 0..dim {
        let amp = traj.states.iter().map(|s| s[i].abs()).fold(0.0, f64::max);
        if amp < 1e-6 * peak {
            continue;
        }
        let mut crossings = Vec::new();
        for k in 1..traj.len() {
            let (y0, y1) = (traj.states[k - 1][i], traj.states[k][i]);
            if y0 != 0.0 && y0.signum() != y1.signum() {
                let (t0, t1) = (traj.times[k - 1], traj.times[k]);
                crossings.push(t0 + (t1 - t0) * y0 / (y0 - y1));
            }
        }
        if crossings.len() >= 2 {
            spans += crossings[crossings.len() - 1] - crossings[0];
            gaps += crossings.len() - 1;
        }
    }
    (gaps > 0).then(|| PI * gaps as f64 / spans)
}

const HARMONICS: usize = 3;

/// Least-squares fit of `log ‖u(t)‖`.
///
/// In the linear regime `‖u‖² = e^{2at}·P(t)` with `P` periodic of period
/// `π/b`, so the fit regresses `log ‖u‖` on `1, t` and the first harmonics
/// of `2b`, with `b` from zero-crossing spacing. Every sample must satisfy
/// `‖u‖ ≤ linear_bound`.
pub fn growth_rate(traj: &Trajectory, linear_bound: f64) -> Result<GrowthFit> {
    if traj.len() < 4 + 2 * HARMONICS {
        return Err(ManifoldError::BadWindow(format!("{} samples is too short", traj.len())));
    }
    let norms: Vec<f64> = traj.states.iter().map(|s| norm(s)).collect();
    if let Some(k) = norms.iter().position(|&n| n > linear_bound || n == 0.0 || !n.is_finite()) {
        return Err(ManifoldError::BadWindow(format!(
            "‖u‖ = {:e} at t = {} outside (0, {linear_bound:e}]",
            norms[k], traj.times[k]
        )));
    }
    let frequency = crossing_frequency(traj);
    let t0 = traj.times[0];
    let span = traj.times[traj.len() - 1] - t0;
    let harmonics = match frequency {
        Some(b) if span * b >= PI => HARMONICS,
        _ => 0,
    };
    let cols = 2 + 2 * harmonics;
    let rows = traj.len();
    let design = Mat::<f64>::from_fn(rows, cols, |r, c| {
        let t = traj.times[r] - t0;
        match c {
            0 => 1.0,
            1 => t,
            _ => {
                let k = ((c - 2) / 2 + 1) as f64;
                let w = 2.0 * k * frequency.unwrap_or(0.0) * t;
                if c % 2 == 0 { w.cos() } else { w.sin() }
            }
        }
    });
    let rhs = Mat::<f64>::from_fn(rows, 1, |r, _| norms[r].ln());
    let coef = design.qr().solve_lstsq(&rhs);
    Ok(GrowthFit {
        rate: coef[(1, 0)],
        frequency,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{default_pair, Mode};

    fn reference(gamma: f64) -> LinearSubsystem {
        let (k, p) = default_pair();
        LinearSubsystem::new(k, p, gamma).unwrap()
    }

    #[test]
    fn reference_split_dimensions() {
        let split = tangent_split(&reference(2.0), 100, 0.1).unwrap();
        assert_eq!(split.unstable_basis.len(), 2);
        assert_eq!(split.stable_basis.len(), 2);
        assert!((split.lambda_u.re - 0.24822).abs() < 1e-5);
        assert!((split.lambda_u.im - 0.35172).abs() < 1e-5);
        let all: Vec<&Vec<f64>> = split.unstable_basis.iter().chain(&split.stable_basis).collect();
        for (i, a) in split.unstable_basis.iter().enumerate() {
            for (j, b) in split.unstable_basis.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(a, b) - want).abs() < 1e-12);
            }
        }
        assert!(all.iter().all(|v| v[0] == 0.0));
    }

    #[test]
    fn empty_disk_has_no_hyperbolic_directions() {
        let sys = LinearSubsystem::new(Mode::new(2, -1).unwrap(), Mode::new(1, 1).unwrap(), 2.0)
            .unwrap();
        assert!(matches!(
            tangent_split(&sys, 100, 0.1),
            Err(ManifoldError::NoHyperbolic { .. })
        ));
    }

    #[test]
    fn zero_delta_stays_at_fixed_point() {
        let (k, p) = default_pair();
        let params = ModelParams::line_model(k, p, 10, 2.0).unwrap();
        let split = tangent_split_for(&params, 0.1).unwrap();
        let fam = grow_manifold(
            &split,
            &params,
            &GrowthSettings {
                delta: 0.0,
                samples: 3,
                t_end: 1.0,
                dt: 0.01,
                stride: 10,
                direction: Direction::Unstable,
            },
        )
        .unwrap();
        assert_eq!(fam.trajectories.len(), 3);
        assert!(fam.trajectories.iter().all(|t| t.states.iter().flatten().all(|&x| x == 0.0)));
    }

    #[test]
    fn split_range_must_match_model() {
        let (k, p) = default_pair();
        let params = ModelParams::line_model(k, p, 10, 2.0).unwrap();
        let split = tangent_split(&reference(2.0), 20, 0.1).unwrap();
        let s = GrowthSettings {
            delta: 1e-6,
            samples: 1,
            t_end: 1.0,
            dt: 0.01,
            stride: 1,
            direction: Direction::Unstable,
        };
        assert!(matches!(grow_manifold(&split, &params, &s), Err(ManifoldError::RangeMismatch { .. })));
    }

    #[test]
    fn exact_exponential_fit() {
        let times: Vec<f64> = (0..200).map(|i| i as f64 * 0.1).collect();
        let traj = Trajectory {
            states: times.iter().map(|t| vec![(0.1 * t).exp() * 1e-6]).collect(),
            times,
        };
        let fit = growth_rate(&traj, 1.0).unwrap();
        assert!((fit.rate - 0.1).abs() < 1e-6, "{}", fit.rate);
        assert_eq!(fit.frequency, None);
    }

    #[test]
    fn modulated_growth_fit() {
        let (a, b) = (0.2, 0.7);
        let times: Vec<f64> = (0..3000).map(|i| i as f64 * 0.01).collect();
        let traj = Trajectory {
            states: times
                .iter()
                .map(|&t| {
                    let e = 1e-9 * (a * t).exp();
                    vec![e * (b * t).cos(), e * 0.3 * (b * t + 0.4).sin()]
                })
                .collect(),
            times,
        };
        let fit = growth_rate(&traj, 1.0).unwrap();
        assert!((fit.rate - a).abs() < 1e-3 * a, "{}", fit.rate);
        assert!((fit.frequency.unwrap() - b).abs() < 1e-4, "{:?}", fit.frequency);
    }

    #[test]
    fn fit_rejects_nonlinear_window() {
        let times: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let traj = Trajectory {
            states: times.iter().map(|t| vec![(0.1 * t).exp()]).collect(),
            times,
        };
        assert!(matches!(growth_rate(&traj, 1e-3), Err(ManifoldError::BadWindow(_))));
    }
}
