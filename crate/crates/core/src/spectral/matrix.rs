use faer::Mat;
use num_complex::Complex64;

use super::{continuous_bound, symmetry_complete, LinearSubsystem, Method, Result, SpectralError,
    SpectrumReport};

pub const DEFAULT_TRUNCATION: usize = 100;

const MIN_REPORT_TRUNCATION: usize = 10;

/// Truncation of the class operator to indices `n ∈ [lo, hi]`; row/column
/// `i` holds chain index `lo + i`. Couplings to indices outside the range
/// are dropped.
pub fn assemble_range(sys: &LinearSubsystem, lo: i64, hi: i64) -> Mat<f64> {
    let dim = (hi - lo + 1).max(0) as usize;
    let g = sys.gamma();
    Mat::from_fn(dim, dim, |i, j| {
        let n = lo + i as i64;
        let m = lo + j as i64;
        if m == n - 1 {
            g * sys.a(n - 1)
        } else if m == n + 1 {
            -g * sys.a(n + 1)
        } else {
            0.0
        }
    })
}

/// The `(2N+1)×(2N+1)` truncation on `n ∈ [−N, N]`.
pub fn assemble_truncated(sys: &LinearSubsystem, n: usize) -> Result<Mat<f64>> {
    if n < 1 {
        return Err(SpectralError::TruncationTooSmall { got: n, min: 1 });
    }
    let n = n as i64;
    Ok(assemble_range(sys, -n, n))
}

pub(crate) fn eigenvalues_of(m: &Mat<f64>) -> Result<Vec<Complex64>> {
    m.eigenvalues()
        .map_err(|_| SpectralError::EigenSolver(m.nrows()))
}

/// All eigenvalues of [`assemble_truncated`], unordered.
///
/// The solve runs on the `Γ = 1` matrix and the result is scaled by `Γ`,
/// so the spectrum is exactly linear in `Γ`.
pub fn truncated_eigenvalues(sys: &LinearSubsystem, n: usize) -> Result<Vec<Complex64>> {
    let g = sys.gamma();
    let unit = assemble_truncated(&sys.with_gamma(1.0)?, n)?;
    Ok(eigenvalues_of(&unit)?.into_iter().map(|z| z * g).collect())
}

/// Off-axis eigenvalues of the `N`-truncation.
///
/// Eigenvalues with `|Re λ| ≤ re_threshold` approximate the continuous
/// segment and are discarded; the survivors are symmetry-completed.
pub fn truncated_point_spectrum(
    sys: &LinearSubsystem,
    n: usize,
    re_threshold: f64,
) -> Result<SpectrumReport> {
    if n < MIN_REPORT_TRUNCATION {
        return Err(SpectralError::TruncationTooSmall {
            got: n,
            min: MIN_REPORT_TRUNCATION,
        });
    }
    let survivors: Vec<Complex64> = truncated_eigenvalues(sys, n)?
        .into_iter()
        .filter(|z| z.re.abs() > re_threshold)
        .collect();
    let tol = 1e-9 * sys.gamma().max(1.0);
    Ok(SpectrumReport {
        b: continuous_bound(sys),
        segment_halfwidth: sys.segment_halfwidth(),
        eigenvalues: symmetry_complete(&survivors, tol),
        method: Method::Matrix,
        truncation: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_chain, default_pair, Mode};

    fn reference(gamma: f64) -> LinearSubsystem {
        let (k, p) = default_pair();
        LinearSubsystem::new(k, p, gamma).unwrap()
    }

    #[test]
    fn small_assembly_matches_chain_table() {
        let (k, p) = default_pair();
        let chain = build_chain(k, p, -2, 2).unwrap();
        let m = assemble_truncated(&reference(1.0), 1).unwrap();
        let a = |n| chain.a(n).unwrap();
        #[rustfmt::skip]
        let want = [
            [0.0,    -a(0), 0.0],
            [a(-1),  0.0,   -a(1)],
            [0.0,    a(0),  0.0],
        ];
        for (i, row) in want.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                assert_eq!(m[(i, j)], x);
            }
        }
        assert_eq!((0..3).map(|i| m[(i, i)]).sum::<f64>(), 0.0);
    }

    #[test]
    fn assembly_linear_in_gamma() {
        let m1 = assemble_truncated(&reference(1.0), 12).unwrap();
        let m2 = assemble_truncated(&reference(2.0), 12).unwrap();
        assert_eq!(m2, &m1 * faer::Scale(2.0));
    }

    #[test]
    fn truncation_guard() {
        assert!(assemble_truncated(&reference(1.0), 0).is_err());
        assert!(matches!(
            truncated_point_spectrum(&reference(1.0), 5, 0.05),
            Err(SpectralError::TruncationTooSmall { got: 5, min: 10 })
        ));
    }

    #[test]
    fn zero_gamma_gives_zero_spectrum() {
        let ev = truncated_eigenvalues(&reference(0.0), 20).unwrap();
        assert_eq!(ev.len(), 41);
        assert!(ev.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn reference_quadruple_from_matrix() {
        let r = truncated_point_spectrum(&reference(2.0), 100, 0.1).unwrap();
        assert_eq!(r.eigenvalues.len(), 4);
        let lead = r.leading().unwrap();
        assert!((lead.re - 0.24822).abs() < 1e-5, "{lead}");
        assert!((lead.im - 0.35172).abs() < 1e-5, "{lead}");
    }

    #[test]
    fn empty_disk_class_has_no_point_spectrum() {
        let sys = LinearSubsystem::new(Mode::new(2, -1).unwrap(), Mode::new(1, 1).unwrap(), 2.0)
            .unwrap();
        let r = truncated_point_spectrum(&sys, 100, 0.1).unwrap();
        assert!(r.eigenvalues.is_empty(), "{:?}", r.eigenvalues);
    }
}
