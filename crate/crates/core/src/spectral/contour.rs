//! Argument-principle zero search for the dispersion functions.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::dispersion::{chain_pieces, dispersion, piece_function, ChainPiece, DEFAULT_TAIL_START};
use super::{continuous_bound, symmetry_complete, LinearSubsystem, Method, Result, SpectralError,
    SpectrumReport};

/// Closed axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl SearchBox {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Self {
        Self {
            re_min,
            re_max,
            im_min,
            im_max,
        }
    }

    /// `[−r, r] × [−r, r]`.
    pub fn square(r: f64) -> Self {
        Self::new(-r, r, -r, r)
    }

    fn is_empty(&self) -> bool {
        !(self.re_min < self.re_max && self.im_min < self.im_max)
    }

    fn touches_imaginary_axis(&self) -> bool {
        self.re_min <= 0.0 && self.re_max >= 0.0
    }

    fn size(&self) -> f64 {
        (self.re_max - self.re_min).max(self.im_max - self.im_min)
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }

    fn quarters(&self) -> [SearchBox; 4] {
        let xm = 0.5 * (self.re_min + self.re_max);
        let ym = 0.5 * (self.im_min + self.im_max);
        [
            Self::new(self.re_min, xm, self.im_min, ym),
            Self::new(xm, self.re_max, self.im_min, ym),
            Self::new(xm, self.re_max, ym, self.im_max),
            Self::new(self.re_min, xm, ym, self.im_max),
        ]
    }

    /// Moves every edge by `eta`: outward, except an edge facing the
    /// imaginary axis, which moves away from it.
    fn nudged(&self, eta: f64) -> Self {
        let mut b = Self::new(
            self.re_min - eta,
            self.re_max + eta,
            self.im_min - eta,
            self.im_max + eta,
        );
        if self.re_min > 0.0 {
            b.re_min = self.re_min + eta;
        }
        if self.re_max < 0.0 {
            b.re_max = self.re_max - eta;
        }
        b
    }

    fn contains(&self, z: Complex64, slack: f64) -> bool {
        z.re >= self.re_min - slack
            && z.re <= self.re_max + slack
            && z.im >= self.im_min - slack
            && z.im <= self.im_max + slack
    }
}

/// Tunables for [`find_point_spectrum_cf_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfOptions {
    /// Initial tail start `M`; doubled while the located roots move.
    pub tail_start: i64,
    /// Gap kept between the boxes and the imaginary axis, relative to the
    /// segment half-width `2|b|`.
    pub axis_margin: f64,
    pub max_depth: usize,
    /// Required `|F|` (or scaled Casoratian) at a polished root.
    pub residual_tol: f64,
}

impl Default for CfOptions {
    fn default() -> Self {
        Self {
            tail_start: DEFAULT_TAIL_START,
            axis_margin: 0.02,
            max_depth: 12,
            residual_tol: 1e-13,
        }
    }
}

// 7-point Gauss–Legendre on [−1, 1].
const GL_NODES: [f64; 7] = [
    -0.949_107_912_342_758_5,
    -0.741_531_185_599_394_4,
    -0.405_845_151_377_397_2,
    0.0,
    0.405_845_151_377_397_2,
    0.741_531_185_599_394_4,
    0.949_107_912_342_758_5,
];
const GL_WEIGHTS: [f64; 7] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
    0.381_830_050_505_118_9,
    0.279_705_391_489_276_7,
    0.129_484_966_168_869_7,
];
const QUAD_TOL: f64 = 1e-9;
const QUAD_MAX_DEPTH: usize = 40;
const INTEGRAL_SLACK: f64 = 0.05;
const MAX_PERTURB: usize = 6;
const NEWTON_MAX_ITERS: usize = 60;

fn log_derivative<F>(f: &F, z: Complex64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let h = 1e-6 * z.norm().max(1.0);
    let fz = f(z)?;
    let df = (f(z + h)? - f(z - h)?) / (2.0 * h);
    Ok(df / fz)
}

/// `(∫ f'/f dz, ∫ z f'/f dz)` along the segment `a → b`.
fn edge_integrals<F>(f: &F, a: Complex64, b: Complex64) -> Result<(Complex64, Complex64)>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let panel = |a: Complex64, b: Complex64| -> Result<(Complex64, Complex64)> {
        let (mid, half) = ((a + b) * 0.5, (b - a) * 0.5);
        let mut acc = (Complex64::default(), Complex64::default());
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            let z = mid + half * *x;
            let g = log_derivative(f, z)? * half * w;
            acc.0 += g;
            acc.1 += g * z;
        }
        Ok(acc)
    };
    fn refine<P>(panel: &P, a: Complex64, b: Complex64, whole: (Complex64, Complex64), depth: usize)
        -> Result<(Complex64, Complex64)>
    where
        P: Fn(Complex64, Complex64) -> Result<(Complex64, Complex64)>,
    {
        let m = (a + b) * 0.5;
        let left = panel(a, m)?;
        let right = panel(m, b)?;
        let split = (left.0 + right.0, left.1 + right.1);
        if (split.0 - whole.0).norm() < QUAD_TOL || depth >= QUAD_MAX_DEPTH {
            return Ok(split);
        }
        let l = refine(panel, a, m, left, depth + 1)?;
        let r = refine(panel, m, b, right, depth + 1)?;
        Ok((l.0 + r.0, l.1 + r.1))
    }
    let whole = panel(a, b)?;
    refine(&panel, a, b, whole, 0)
}

/// Number of zeros of the analytic `f` inside `bx` and their sum, by the
/// argument principle `N = (2πi)⁻¹ ∮ f'/f dz` with `f'` by central
/// differences. Fails with [`SpectralError::ContourFailed`] if the
/// integral is not close to a non-negative integer (a zero on or near the
/// contour).
pub fn count_zeros<F>(f: &F, bx: SearchBox) -> Result<(usize, Complex64)>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let c = bx.corners();
    let mut total = (Complex64::default(), Complex64::default());
    for i in 0..4 {
        let (a, b) = edge_integrals(f, c[i], c[(i + 1) % 4])?;
        total.0 += a;
        total.1 += b;
    }
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let w = total.0 / two_pi_i;
    let n = w.re.round();
    if n < 0.0 || (w.re - n).abs() > INTEGRAL_SLACK || w.im.abs() > INTEGRAL_SLACK {
        return Err(SpectralError::ContourFailed {
            attempts: 0,
            last: w,
        });
    }
    Ok((n as usize, total.1 / two_pi_i))
}

/// [`count_zeros`], nudging the box edges on failure.
fn count_with_retry<F>(f: &F, bx: SearchBox) -> Result<(usize, Complex64, SearchBox)>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let mut last = Complex64::default();
    for attempt in 0..=MAX_PERTURB {
        let trial = if attempt == 0 {
            bx
        } else {
            bx.nudged(1e-3 * attempt as f64 * bx.size())
        };
        match count_zeros(f, trial) {
            Ok((n, moment)) => return Ok((n, moment, trial)),
            Err(SpectralError::ContourFailed { last: w, .. }) => last = w,
            Err(SpectralError::OnSegment { .. }) | Err(SpectralError::TailRoots { .. }) => {
                return Err(SpectralError::BoxOnAxis(bx))
            }
            Err(e) => return Err(e),
        }
    }
    Err(SpectralError::ContourFailed {
        attempts: MAX_PERTURB,
        last,
    })
}

/// The parts of `search` in the four open quadrants, pulled back from the
/// imaginary axis by `margin`. Order: I, II, III, IV (empty parts skipped).
pub fn quadrant_boxes(search: SearchBox, margin: f64) -> Vec<SearchBox> {
    let right = (search.re_min.max(margin), search.re_max);
    let left = (search.re_min, search.re_max.min(-margin));
    let upper = (search.im_min.max(0.0), search.im_max);
    let lower = (search.im_min, search.im_max.min(0.0));
    [(right, upper), (left, upper), (left, lower), (right, lower)]
        .into_iter()
        .map(|((x0, x1), (y0, y1))| SearchBox::new(x0, x1, y0, y1))
        .filter(|b| !b.is_empty())
        .collect()
}

fn axis_margin(sys: &LinearSubsystem, opts: &CfOptions) -> f64 {
    (opts.axis_margin * sys.segment_halfwidth()).max(1e-6)
}

/// Zero counts of the characteristic function(s) in the four quadrant boxes
/// of `search` (quadrants I–IV; a missing quadrant counts 0).
pub fn quadrant_zero_counts(
    sys: &LinearSubsystem,
    search: SearchBox,
    opts: &CfOptions,
) -> Result<[usize; 4]> {
    let margin = axis_margin(sys, opts);
    let mut counts = [0usize; 4];
    let quadrant_of = |b: &SearchBox| match (b.re_min > 0.0, b.im_min >= 0.0) {
        (true, true) => 0,
        (false, true) => 1,
        (false, false) => 2,
        (true, false) => 3,
    };
    for bx in quadrant_boxes(search, margin) {
        for piece in chain_pieces(sys) {
            let f = |z| piece_function(sys, piece, z, opts.tail_start);
            counts[quadrant_of(&bx)] += count_with_retry(&f, bx)?.0;
        }
    }
    Ok(counts)
}

fn newton<F>(f: &F, start: Complex64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let mut z = start;
    let mut residual = f(z)?.norm();
    for _ in 0..NEWTON_MAX_ITERS {
        let h = 1e-7 * z.norm().max(1.0);
        let fz = f(z)?;
        let df = (f(z + h)? - f(z - h)?) / (2.0 * h);
        let step = fz / df;
        z -= step;
        residual = fz.norm();
        if !z.re.is_finite() || !z.im.is_finite() {
            break;
        }
        if step.norm() <= 4.0 * f64::EPSILON * z.norm().max(1.0) {
            return Ok(z);
        }
    }
    Err(SpectralError::Newton { start, residual })
}

/// Residual used to accept a polished root: `|F|` for the whole chain,
/// the Casoratian normalized by its size at a nearby point otherwise.
fn acceptance_residual(sys: &LinearSubsystem, piece: ChainPiece, z: Complex64, m: i64) -> Result<f64> {
    match piece {
        ChainPiece::Whole { n0 } => dispersion(sys, z, m, n0)
            .map(|f| f.norm())
            .or_else(|_| {
                // F has a pole here; fall back to the analytic form
                piece_residual(sys, piece, z, m)
            }),
        _ => piece_residual(sys, piece, z, m),
    }
}

fn piece_residual(sys: &LinearSubsystem, piece: ChainPiece, z: Complex64, m: i64) -> Result<f64> {
    let probe = z + 1e-2 * z.norm().max(1e-3);
    let reference = piece_function(sys, piece, probe, m)?.norm();
    Ok(piece_function(sys, piece, z, m)?.norm() / reference.max(f64::MIN_POSITIVE))
}

/// Polishes a root of one piece, doubling the tail start until the root
/// stops moving.
fn polish(sys: &LinearSubsystem, piece: ChainPiece, guess: Complex64, opts: &CfOptions)
    -> Result<(Complex64, i64)> {
    let mut m = opts.tail_start;
    let f = |m: i64| move |z| piece_function(sys, piece, z, m);
    let mut z = newton(&f(m), guess)?;
    for _ in 0..6 {
        let z2 = newton(&f(2 * m), z)?;
        m *= 2;
        let moved = (z2 - z).norm();
        z = z2;
        if moved < 1e-13 * z.norm().max(1.0) {
            break;
        }
    }
    let residual = acceptance_residual(sys, piece, z, m)?;
    if residual > opts.residual_tol {
        return Err(SpectralError::Newton {
            start: guess,
            residual,
        });
    }
    Ok((z, m))
}

fn search_piece(
    sys: &LinearSubsystem,
    piece: ChainPiece,
    bx: SearchBox,
    opts: &CfOptions,
    depth: usize,
    out: &mut Vec<(Complex64, i64)>,
) -> Result<()> {
    let f = |z| piece_function(sys, piece, z, opts.tail_start);
    let (count, moment, bx) = count_with_retry(&f, bx)?;
    match count {
        0 => Ok(()),
        1 => {
            let (z, m) = polish(sys, piece, moment, opts)?;
            debug_assert!(bx.contains(z, 1e-6 * bx.size()), "{z} escaped {bx:?}");
            out.push((z, m));
            Ok(())
        }
        _ if depth < opts.max_depth => bx
            .quarters()
            .into_iter()
            .try_for_each(|q| search_piece(sys, piece, q, opts, depth + 1, out)),
        // clustered or multiple root
        k => {
            out.push(polish(sys, piece, moment / k as f64, opts)?);
            Ok(())
        }
    }
}

/// Point spectrum inside `search` from the continued-fraction dispersion,
/// with default [`CfOptions`] except for the tail start `m`.
pub fn find_point_spectrum_cf(sys: &LinearSubsystem, search: SearchBox, m: i64) -> Result<SpectrumReport> {
    let opts = CfOptions {
        tail_start: m,
        ..CfOptions::default()
    };
    find_point_spectrum_cf_with(sys, search, &opts)
}

/// Splits `search` into off-axis quadrant boxes, isolates zeros by
/// recursive subdivision, polishes each by Newton iteration and
/// symmetry-completes the result.
pub fn find_point_spectrum_cf_with(
    sys: &LinearSubsystem,
    search: SearchBox,
    opts: &CfOptions,
) -> Result<SpectrumReport> {
    let margin = axis_margin(sys, opts);
    let mut roots = Vec::new();
    for bx in quadrant_boxes(search, margin) {
        if bx.touches_imaginary_axis() {
            return Err(SpectralError::BoxOnAxis(bx));
        }
        for piece in chain_pieces(sys) {
            search_piece(sys, piece, bx, opts, 0, &mut roots)?;
        }
    }
    let tail = roots.iter().map(|&(_, m)| m).max().unwrap_or(opts.tail_start);
    let values: Vec<Complex64> = roots.into_iter().map(|(z, _)| z).collect();
    Ok(SpectrumReport {
        b: continuous_bound(sys),
        segment_halfwidth: sys.segment_halfwidth(),
        eigenvalues: symmetry_complete(&values, 1e-9 * sys.gamma().max(1.0)),
        method: Method::Cf,
        truncation: tail as usize,
    })
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::lattice::{default_pair, Mode};
    use crate::spectral::EigenType;

    fn reference(gamma: f64) -> LinearSubsystem {
        let (k, p) = default_pair();
        LinearSubsystem::new(k, p, gamma).unwrap()
    }

    #[test]
    fn counts_polynomial_zeros() {
        let f = |z: Complex64| -> Result<Complex64> {
            Ok((z - Complex64::new(0.3, 0.4)) * (z - Complex64::new(0.7, 0.2)) * (z + 2.0))
        };
        let (n, sum) = count_zeros(&f, SearchBox::new(0.1, 1.0, 0.1, 1.0)).unwrap();
        assert_eq!(n, 2);
        assert!((sum - Complex64::new(1.0, 0.6)).norm() < 1e-8);
        let (n, _) = count_zeros(&f, SearchBox::new(-3.0, -1.0, -1.0, 1.0)).unwrap();
        assert_eq!(n, 1);
    }

    #[test]
    fn zero_on_contour_is_nudged() {
        let f = |z: Complex64| -> Result<Complex64> { Ok(z - Complex64::new(0.5, 0.0)) };
        let bx = SearchBox::new(0.1, 1.0, 0.0, 1.0);
        assert!(count_zeros(&f, bx).is_err());
        let (n, _, _) = count_with_retry(&f, bx).unwrap();
        assert_eq!(n, 1);
    }

    #[test]
    fn quadrants_avoid_axis() {
        let qs = quadrant_boxes(SearchBox::square(1.0), 0.02);
        assert_eq!(qs.len(), 4);
        assert!(qs.iter().all(|b| !b.touches_imaginary_axis()));
        assert_eq!(qs[0], SearchBox::new(0.02, 1.0, 0.0, 1.0));
        assert_eq!(quadrant_boxes(SearchBox::new(0.5, 1.0, 0.1, 0.2), 0.02).len(), 1);
    }

    #[test]
    fn reference_class_quadruple() {
        let r = find_point_spectrum_cf(&reference(2.0), SearchBox::square(1.0), 200).unwrap();
        assert_eq!(r.eigenvalues.len(), 4);
        assert!(r.eigenvalues.iter().all(|e| e.kind == EigenType::Quadruple));
        let lead = r.leading().unwrap();
        assert!((lead - Complex64::new(0.248_223_018_041_106_71, 0.351_720_764_585_447_51)).norm() < 1e-13);
        let counts = quadrant_zero_counts(&reference(2.0), SearchBox::square(1.0), &CfOptions::default())
            .unwrap();
        assert_eq!(counts, [1, 1, 1, 1]);
    }

    #[test]
    fn empty_disk_class_has_no_zeros() {
        let sys = LinearSubsystem::new(Mode::new(2, -1).unwrap(), Mode::new(1, 1).unwrap(), 2.0)
            .unwrap();
        let counts = quadrant_zero_counts(&sys, SearchBox::square(1.0), &CfOptions::default())
            .unwrap();
        assert_eq!(counts, [0; 4]);
        let r = find_point_spectrum_cf(&sys, SearchBox::square(1.0), 200).unwrap();
        assert!(r.eigenvalues.is_empty());
    }

    #[test]
    fn zero_operator_has_empty_report() {
        let r = find_point_spectrum_cf(&reference(0.0), SearchBox::square(1.0), 200).unwrap();
        assert!(r.eigenvalues.is_empty());
        assert_eq!(r.segment_halfwidth, 0.0);
    }
}
