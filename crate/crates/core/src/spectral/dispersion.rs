//! Continued-fraction dispersion functions for the class operator.
//!
//! For `λ` off the continuous segment the eigen-recurrence
//! `λ c_n = Γ A_{n−1} c_{n−1} − Γ A_{n+1} c_{n+1}` has, on each side, a
//! one-dimensional family of solutions decaying like `r∞^{|n|}`, where `r∞`
//! is the small root of the constant-coefficient tail equation. `λ` is a
//! point eigenvalue exactly when the left- and right-decaying solutions
//! match.
//!
//! [`dispersion`] is the ratio (continued-fraction) form of that matching
//! condition. It is meromorphic: it has poles where a half-chain has an
//! eigenvalue of its own. [`piece_function`] is the corresponding Casoratian
//! built from unnormalized solutions, which is analytic off the segment and
//! has the same zeros; zero counting uses it.

use num_complex::Complex64;

use super::{LinearSubsystem, Result, SpectralError};

/// Default tail start `M`.
pub const DEFAULT_TAIL_START: i64 = 200;

/// Minimum distance from the continuous segment, relative to `max(1, 2|b|)`.
pub const SEGMENT_TOL: f64 = 1e-8;

const SINGULAR_TOL: f64 = 1e-14;
const MAX_TAIL_START: i64 = 200 * 64;
const TAIL_CHANGE_TOL: f64 = 1e-13;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Roots `(small, large)` of `κ r² + λ r − κ = 0`, `κ = Γ·A_∞`.
///
/// Their moduli multiply to one; off the segment exactly one lies strictly
/// inside the unit circle, otherwise an error is returned.
pub fn tail_roots(sys: &LinearSubsystem, lambda: Complex64) -> Result<(Complex64, Complex64)> {
    let kappa = sys.tail_coupling();
    if kappa == 0.0 {
        return Err(SpectralError::TailRoots {
            lambda,
            small: 0.0,
            large: f64::INFINITY,
        });
    }
    let root = (lambda * lambda + c(4.0 * kappa * kappa)).sqrt();
    let sign = if (lambda.conj() * root).re >= 0.0 { 1.0 } else { -1.0 };
    let q = -(lambda + root * sign) * 0.5;
    let (r1, r2) = (q / kappa, c(-kappa) / q);
    let (small, large) = if r1.norm() <= r2.norm() { (r1, r2) } else { (r2, r1) };
    let (ms, ml) = (small.norm(), large.norm());
    debug_assert!((ms * ml - 1.0).abs() < 1e-9, "tail root moduli {ms} · {ml} ≠ 1");
    if ms >= 1.0 - 1e-12 || (ms * ml - 1.0).abs() > 1e-9 {
        return Err(SpectralError::TailRoots {
            lambda,
            small: ms,
            large: ml,
        });
    }
    Ok((small, large))
}

fn check_off_segment(sys: &LinearSubsystem, lambda: Complex64) -> Result<()> {
    let tol = SEGMENT_TOL * sys.segment_halfwidth().max(1.0);
    if sys.distance_to_segment(lambda) < tol {
        return Err(SpectralError::OnSegment { lambda, tol });
    }
    Ok(())
}

/// Indices where `A_n = 0`, i.e. `|k̂ + n·p| = |p|`. For `D ≠ 0` there is at
/// most one: two members on that circle would be a chord of length `|p|`
/// or `2|p|`, forcing a 60° lattice rotation or `k̂ ∥ p`.
fn zero_coupling_indices(sys: &LinearSubsystem) -> Vec<i64> {
    let (k, p) = (sys.khat(), sys.p());
    let pp = p.norm_sq() as i128;
    let kp = k.dot(p) as i128;
    let kk = k.norm_sq() as i128;
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
            pp * n * n + 2 * kp * n + kk - pp == 0
        })
        .collect()
}

/// A maximal run of the chain with no vanishing coupling. Decoupled pieces
/// have independent spectra.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainPiece {
    /// The whole bi-infinite chain; matching at `n0`.
    Whole { n0: i64 },
    /// `n ≤ hi`, with `A_{hi+1} = 0`.
    Left { hi: i64 },
    /// `n ≥ lo`, with `A_{lo−1} = 0`.
    Right { lo: i64 },
}

/// Splits the class at every vanishing coupling. A zero operator (`Γ = 0`
/// or `D = 0`) has no pieces.
pub fn chain_pieces(sys: &LinearSubsystem) -> Vec<ChainPiece> {
    if sys.tail_coupling() == 0.0 {
        return Vec::new();
    }
    match zero_coupling_indices(sys).as_slice() {
        [] => vec![ChainPiece::Whole {
            n0: sys.centre_index(),
        }],
        [z] => vec![ChainPiece::Left { hi: z - 1 }, ChainPiece::Right { lo: z + 1 }],
        more => unreachable!("chain with D ≠ 0 has vanishing couplings at {more:?}"),
    }
}

/// Ratio-form dispersion function
/// `F(λ) = λ − Γ A_{n0−1} s_{n0} + Γ A_{n0+1} r_{n0}` with
/// `r_n = c_{n+1}/c_n` recursed down from `r_M = r∞` and
/// `s_n = c_{n−1}/c_n` recursed up from `s_{−M} = −r∞`.
pub fn dispersion(sys: &LinearSubsystem, lambda: Complex64, m: i64, n0: i64) -> Result<Complex64> {
    check_off_segment(sys, lambda)?;
    if sys.tail_coupling() == 0.0 {
        return Ok(lambda);
    }
    let m = m.max(n0.abs() + 2);
    if let Some(&index) = zero_coupling_indices(sys)
        .iter()
        .find(|&&z| (-m - 1..=m + 1).contains(&z))
    {
        return Err(SpectralError::Decoupled { index });
    }
    let (r_inf, _) = tail_roots(sys, lambda)?;
    let g = sys.gamma();
    let scale = lambda.norm() + g * sys.a(n0).abs().max(sys.tail_coupling().abs() / g);
    let guard = |den: Complex64, index: i64| {
        if den.norm() < SINGULAR_TOL * scale {
            Err(SpectralError::NearSingular { index })
        } else {
            Ok(den)
        }
    };

    let mut r = r_inf;
    for n in (n0 + 1..=m).rev() {
        let den = guard(lambda + c(g * sys.a(n + 1)) * r, n)?;
        r = c(g * sys.a(n - 1)) / den;
    }
    let mut s = -r_inf;
    for n in -m..n0 {
        let den = guard(c(g * sys.a(n - 1)) * s - lambda, n)?;
        s = c(g * sys.a(n + 1)) / den;
    }
    Ok(lambda - c(g * sys.a(n0 - 1)) * s + c(g * sys.a(n0 + 1)) * r)
}

/// [`dispersion`] with the tail start doubled from [`DEFAULT_TAIL_START`]
/// until successive values differ by less than `1e-13`. Returns the value
/// and the tail start used.
pub fn dispersion_converged(
    sys: &LinearSubsystem,
    lambda: Complex64,
    n0: i64,
) -> Result<(Complex64, i64)> {
    let mut m = DEFAULT_TAIL_START;
    let mut prev = dispersion(sys, lambda, m, n0)?;
    while m < MAX_TAIL_START {
        let next = dispersion(sys, lambda, 2 * m, n0)?;
        m *= 2;
        if (next - prev).norm() < TAIL_CHANGE_TOL {
            return Ok((next, m));
        }
        prev = next;
    }
    Ok((prev, m))
}

/// Right-decaying solution, returned as `(c_stop, c_{stop+1})` up to an
/// analytic nonvanishing factor.
fn right_solution(sys: &LinearSubsystem, lambda: Complex64, r_inf: Complex64, m: i64, stop: i64)
    -> (Complex64, Complex64) {
    let g = sys.gamma();
    let (mut cn, mut cn1) = (c(1.0), r_inf);
    for n in (stop + 1..=m).rev() {
        let prev = (lambda * cn + c(g * sys.a(n + 1)) * cn1) / (g * sys.a(n - 1));
        cn1 = cn * r_inf;
        cn = prev * r_inf;
    }
    (cn, cn1)
}

/// Left-decaying solution, returned as `(c_{stop−1}, c_stop)` up to an
/// analytic nonvanishing factor.
fn left_solution(sys: &LinearSubsystem, lambda: Complex64, s_inf: Complex64, m: i64, stop: i64)
    -> (Complex64, Complex64) {
    let g = sys.gamma();
    let (mut cp, mut cn) = (s_inf, c(1.0));
    for n in -m..stop {
        let next = (c(g * sys.a(n - 1)) * cp - lambda * cn) / (g * sys.a(n + 1));
        cp = cn * s_inf;
        cn = next * s_inf;
    }
    (cp, cn)
}

/// Analytic characteristic function of one chain piece: its zeros off the
/// segment are exactly the piece's point eigenvalues, and it has no poles
/// there.
pub fn piece_function(
    sys: &LinearSubsystem,
    piece: ChainPiece,
    lambda: Complex64,
    m: i64,
) -> Result<Complex64> {
    check_off_segment(sys, lambda)?;
    let g = sys.gamma();
    let tails = || tail_roots(sys, lambda).map(|(r, _)| r);
    match piece {
        ChainPiece::Whole { n0 } => {
            let r_inf = tails()?;
            let m = m.max(n0.abs() + 2);
            let (l0, l1) = left_solution(sys, lambda, -r_inf, m, n0 + 1);
            let (r0, r1) = right_solution(sys, lambda, r_inf, m, n0);
            Ok(l0 * r1 - l1 * r0)
        }
        ChainPiece::Left { hi } => {
            let r_inf = tails()?;
            let m = m.max(hi.abs() + 2);
            let (lm, lh) = left_solution(sys, lambda, -r_inf, m, hi);
            Ok(lambda * lh - c(g * sys.a(hi - 1)) * lm)
        }
        ChainPiece::Right { lo } => {
            let r_inf = tails()?;
            let m = m.max(lo.abs() + 2);
            let (rl, rl1) = right_solution(sys, lambda, r_inf, m, lo);
            Ok(lambda * rl + c(g * sys.a(lo + 1)) * rl1)
        }
    }
}
