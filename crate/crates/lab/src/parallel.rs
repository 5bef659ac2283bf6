//! Multistart minimization on a rayon pool.

use anyhow::{bail, Context, Result};
use griffith_core::discrete_energy::{BoundaryCondition, EnergyModel};
use griffith_core::lattice::TriangleMesh;
use griffith_core::material::MaterialParams;
use griffith_core::solver::{finish, minimize_from, prepare_starts, SolveConfig, SolveResult};
use rayon::prelude::*;

/// Environment variable holding the worker count.
pub const THREADS_VAR: &str = "FRACTURE_THREADS";

pub fn threads_from(value: Option<&str>) -> Result<Option<usize>> {
    let Some(v) = value else { return Ok(None) };
    let n: usize = v.trim().parse().with_context(|| format!("{THREADS_VAR}=`{v}` is not a positive integer"))?;
    if n == 0 {
        bail!("{THREADS_VAR} must be at least 1");
    }
    Ok(Some(n))
}

pub fn pool() -> Result<rayon::ThreadPool> {
    let env = std::env::var(THREADS_VAR).ok();
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads_from(env.as_deref())? {
        b = b.num_threads(n);
    }
    Ok(b.build()?)
}

/// Same result as the sequential `minimize`: starts run independently and
/// the winner is picked by `(energy, start index)`.
pub fn minimize_parallel(
    mesh: &TriangleMesh,
    bc: &BoundaryCondition,
    material: &MaterialParams,
    config: &SolveConfig,
) -> griffith_core::Result<SolveResult> {
    config.validate()?;
    let model = EnergyModel::with_domain(mesh, material, config.mode, config.domain)?;
    let (starts, skipped) = prepare_starts(mesh, material, config);
    let results = starts
        .into_par_iter()
        .map(|(i, tag, v)| minimize_from(&model, bc, v, config, i, tag))
        .collect::<griffith_core::Result<Vec<_>>>()?;
    finish(&model, results, skipped)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_variable_parsing() {
        assert_eq!(threads_from(None).unwrap(), None);
        assert_eq!(threads_from(Some(" 3 ")).unwrap(), Some(3));
        assert!(threads_from(Some("0")).is_err());
        assert!(threads_from(Some("x")).is_err());
    }
}
