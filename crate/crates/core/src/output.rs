//! File formats: trajectory CSV and atomic writes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::dynamics::{invariants_flat, sobolev_norm_flat, ModelParams, Trajectory};

/// Header `t,omega_p,omega_<n_min>,…,omega_<n_max>,E,Z,Hs`.
pub fn trajectory_header(params: &ModelParams) -> String {
    let mut h = String::from("t,omega_p");
    for n in params.n_min()..=params.n_max() {
        write!(h, ",omega_{n}").unwrap();
    }
    h.push_str(",E,Z,Hs");
    h
}

/// One CSV row; every number carries 17 significant digits.
pub fn trajectory_row(params: &ModelParams, t: f64, state: &[f64], sobolev_order: u32) -> String {
    let (e, z) = invariants_flat(params, state);
    let hs = sobolev_norm_flat(params, state, sobolev_order);
    let mut row = format!("{t:.16e}");
    for x in state.iter().chain([e, z, hs].iter()) {
        write!(row, ",{x:.16e}").unwrap();
    }
    row
}

/// Full CSV document. `offset` is added to every state (e.g. `ω*` for
/// trajectories stored in deviation coordinates) and `time_sign` flips the
/// time column.
pub fn trajectory_csv(
    params: &ModelParams,
    traj: &Trajectory,
    sobolev_order: u32,
    offset: Option<&[f64]>,
    time_sign: f64,
) -> String {
    let mut out = trajectory_header(params);
    out.push('\n');
    let mut buf = vec![0.0; params.dim()];
    for (t, s) in traj.times.iter().zip(&traj.states) {
        buf.copy_from_slice(s);
        if let Some(off) = offset {
            buf.iter_mut().zip(off).for_each(|(x, o)| *x += o);
        }
        out.push_str(&trajectory_row(params, time_sign * t, &buf, sobolev_order));
        out.push('\n');
    }
    out
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, &target)?;
    Ok(target)
}
