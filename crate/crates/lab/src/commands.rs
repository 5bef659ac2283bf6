//! Experiment drivers behind the subcommands.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use griffith_core::continuum::{
    a_crit, build_u_cr, build_u_el, centered_crack_p, minimizing_branch, min_energy, Branch, CleavageProblem,
    ContinuumDisplacement,
};
use griffith_core::crack_extraction::{extract_cracks, CrackSet};
use griffith_core::discrete_energy::{energy_rescaled, BoundaryCondition, Displacement, EnergyMode};
use griffith_core::lattice::{build_mesh, Domain, LatticeSpec, MarginShape, TriangleMesh};
use griffith_core::material::{MagnetizationModel, MaterialParams, PairPotential, PenaltyChi};
use griffith_core::solver::{
    cleavage_starts, convergence_study_with, gaps_monotone, log_log_slope, magnet_demo,
    nonequicoercivity_demo, recovery_sequence, summarize_crack, Initializer, SolveConfig, StudyConfig,
};

use crate::config::RunConfig;
use crate::io::{self, fmt};
use crate::parallel::{minimize_parallel, pool};

/// Files written by one command; removed again if the command fails.
#[derive(Debug)]
pub struct Outputs {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    manifest: Vec<(String, String)>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Outputs { dir: dir.to_path_buf(), files: Vec::new(), manifest: Vec::new() })
    }

    pub fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        self.files.push(path.clone());
        io::write_table_file(&path, header, rows)?;
        Ok(path)
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.manifest.push((key.to_string(), value.to_string()));
    }

    fn write_manifest(&mut self, command: &str, cfg: Option<&RunConfig>) -> Result<()> {
        let path = self.dir.join("manifest.txt");
        self.files.push(path.clone());
        let mut text = String::new();
        text.push_str(&format!("command = {command}\n"));
        text.push_str(&format!("version = {}\n", env!("CARGO_PKG_VERSION")));
        if let Some(cfg) = cfg {
            for (k, v) in cfg.effective() {
                text.push_str(&format!("config.{k} = {v}\n"));
            }
        }
        for (k, v) in &self.manifest {
            text.push_str(&format!("{k} = {v}\n"));
        }
        for f in &self.files[..self.files.len() - 1] {
            if let Some(name) = f.file_name() {
                text.push_str(&format!("output = {}\n", name.to_string_lossy()));
            }
        }
        std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
    }

    fn remove_all(&self) {
        for f in &self.files {
            let _ = std::fs::remove_file(f);
        }
    }
}

/// Run `body` and write the manifest; on any failure remove what was written.
pub fn run_command(
    command: &str,
    dir: &Path,
    cfg: Option<&RunConfig>,
    body: impl FnOnce(&mut Outputs) -> Result<()>,
) -> Result<Vec<PathBuf>> {
    let mut out = Outputs::new(dir)?;
    let res = body(&mut out).and_then(|_| out.write_manifest(command, cfg));
    match res {
        Ok(()) => Ok(out.files),
        Err(e) => {
            out.remove_all();
            Err(e)
        }
    }
}

pub fn output_dir(cfg: &RunConfig, override_dir: Option<&Path>) -> Result<PathBuf> {
    Ok(match override_dir {
        Some(d) => d.to_path_buf(),
        None => PathBuf::from(cfg.get::<String>("output.dir")?),
    })
}

pub fn lattice_spec(cfg: &RunConfig) -> Result<LatticeSpec> {
    let margin = match cfg.get::<String>("lattice.margin")?.as_str() {
        "cleavage" => MarginShape::Cleavage,
        "uniform" => MarginShape::Uniform,
        other => return Err(cfg.invalid("lattice.margin", format!("expected cleavage or uniform, got `{other}`")).into()),
    };
    let spec = LatticeSpec {
        phi: cfg.float("lattice.phi")?,
        eps: cfg.float("lattice.eps")?,
        l: cfg.float("lattice.l")?,
        eta: cfg.float("lattice.eta")?,
        margin,
    };
    spec.validate().map_err(|e| anyhow!("lattice: {e}"))?;
    Ok(spec)
}

pub fn energy_domain(cfg: &RunConfig) -> Result<Domain> {
    match cfg.get::<String>("lattice.energy_domain")?.as_str() {
        "omega" => Ok(Domain::Omega),
        "extended" => Ok(Domain::Extended),
        other => Err(cfg.invalid("lattice.energy_domain", format!("expected omega or extended, got `{other}`")).into()),
    }
}

pub fn material(cfg: &RunConfig) -> Result<MaterialParams> {
    let beta = cfg.float("material.beta")?;
    let potential = match cfg.get::<String>("material.potential")?.as_str() {
        "exp-well" => {
            let alpha = cfg.float("material.alpha")?;
            PairPotential::exp_well(alpha, beta).map_err(|e| cfg.invalid("material.alpha", e.to_string()))?
        }
        "shifted-lj" => {
            let p = PairPotential::shifted_lj(beta).map_err(|e| cfg.invalid("material.beta", e.to_string()))?;
            if let Some(alpha) = cfg.float_opt("material.alpha")? {
                if (alpha - p.alpha).abs() > 1e-12 * p.alpha {
                    return Err(cfg
                        .invalid("material.alpha", format!("shifted-lj fixes alpha = 72 beta = {}", p.alpha))
                        .into());
                }
            }
            p
        }
        other => {
            return Err(cfg.invalid("material.potential", format!("expected exp-well or shifted-lj, got `{other}`")).into())
        }
    };
    let chi = PenaltyChi {
        c_chi: cfg.float("material.chi_c")?,
        delta_det: cfg.float("material.chi_delta")?,
        cutoff_norm: cfg.float("material.chi_cutoff")?,
        width: cfg.float("material.chi_width")?,
    };
    chi.validate().map_err(|e| cfg.invalid("material.chi_c", e.to_string()))?;
    let magnet = MagnetizationModel::new(cfg.float("material.kappa")?, cfg.float("material.T")?)
        .map_err(|e| cfg.invalid("material.T", e.to_string()))?;
    let band = cfg.float("material.smooth_fk")?;
    if band < 0.0 {
        return Err(cfg.invalid("material.smooth_fk", "must be non-negative").into());
    }
    Ok(MaterialParams { potential, chi, magnet, smooth_fk_band: (band > 0.0).then_some(band) })
}

/// The uniaxial problem; `a` is `problem.a` if given, else `a_factor·a_crit`.
pub fn problem(cfg: &RunConfig, spec: &LatticeSpec, mat: &MaterialParams) -> Result<CleavageProblem> {
    let mut p = CleavageProblem { alpha: mat.alpha(), beta: mat.beta(), l: spec.l, phi: spec.phi, a: 0.0 };
    p.a = match cfg.float_opt("problem.a")? {
        Some(a) => a,
        None => cfg.float("problem.a_factor")? * a_crit(&p)?,
    };
    p.validate()?;
    Ok(p)
}

pub fn energy_mode(cfg: &RunConfig) -> Result<EnergyMode> {
    let s = cfg.get::<String>("solve.mode")?;
    EnergyMode::parse(&s)
        .ok_or_else(|| cfg.invalid("solve.mode", format!("expected plain, chi, F, F+chi or total-magnetic, got `{s}`")).into())
}

pub fn solve_config(cfg: &RunConfig) -> Result<SolveConfig> {
    let c = SolveConfig {
        max_iters: cfg.get("solve.max_iters")?,
        grad_tol: cfg.float("solve.grad_tol")?,
        armijo_c: cfg.float("solve.armijo_c")?,
        shrink: cfg.float("solve.shrink")?,
        lbfgs_memory: cfg.get("solve.lbfgs_memory")?,
        seed: cfg.get("solve.seed")?,
        multistart: vec![Initializer::Zero],
        mode: energy_mode(cfg)?,
        domain: energy_domain(cfg)?,
    };
    c.validate().map_err(|e| anyhow!("solve: {e}"))?;
    Ok(c)
}

fn eps_list(cfg: &RunConfig) -> Result<Vec<f64>> {
    let v = cfg.float_list("solve.eps_list")?;
    if v.is_empty() || v.iter().any(|e| !(*e > 0.0)) || v.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(cfg.invalid("solve.eps_list", "need positive, strictly decreasing values").into());
    }
    Ok(v)
}

fn crack_p(cfg: &RunConfig, prob: &CleavageProblem) -> Result<f64> {
    Ok(match cfg.float_opt("problem.p")? {
        Some(p) => p,
        None => centered_crack_p(prob)?,
    })
}

fn note_crack(out: &mut Outputs, crack: &CrackSet, beta: f64, mesh: &TriangleMesh) {
    let s = summarize_crack(crack, beta, mesh);
    out.note("crack.segments", crack.segments.len());
    out.note("crack.n_broken", s.n_broken);
    out.note("crack.n_broken_times_eps", fmt(s.n_broken as f64 * mesh.eps()));
    out.note("crack.length", fmt(crack.total_length()));
    out.note("crack.energy_estimate", fmt(s.energy_estimate));
    out.note("crack.mean_normal_angle_deg", fmt(s.angle_deg));
}

pub fn cmd_gamma_scan(steps: usize, path: &Path, alpha: f64, beta: f64, l: f64) -> Result<Vec<PathBuf>> {
    let rows = io::gamma_rows(steps, alpha, beta, l)?;
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    io::write_table_file(path, io::GAMMA_HEADER, &rows).inspect_err(|_| {
        let _ = std::fs::remove_file(path);
    })?;
    Ok(vec![path.to_path_buf()])
}

pub fn cmd_cleavage(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    run_command("cleavage", dir, Some(cfg), |out| {
        let spec = lattice_spec(cfg)?;
        let mat = material(cfg)?;
        let prob = problem(cfg, &spec, &mat)?;
        let mode = energy_mode(cfg)?;
        let eps = eps_list(cfg)?;
        let study = StudyConfig {
            eta: spec.eta,
            margin: spec.margin,
            minimize: cfg.get("solve.minimize")?,
            solve: solve_config(cfg)?,
            n_p: cfg.get("solve.p_grid")?,
            p: cfg.float_opt("problem.p")?,
        };
        out.note("a_crit", fmt(a_crit(&prob)?));
        out.note("a", fmt(prob.a));
        out.note("target", fmt(min_energy(&prob)?));
        out.note(
            "branch",
            match minimizing_branch(&prob) {
                Ok(Branch::Elastic) => "elastic",
                Ok(Branch::Crack) => "crack",
                Err(_) => "tie",
            },
        );
        let rows = pool()?.install(|| convergence_study_with(&prob, &mat, &eps, mode, &study, &minimize_parallel))?;
        for r in &rows {
            out.note(&format!("source.{}", fmt(r.eps)), &r.source);
        }
        out.table("convergence.csv", io::CONVERGENCE_HEADER, &io::convergence_rows(&rows))?;
        let slack: f64 = cfg.float("solve.gap_slack")?;
        if !gaps_monotone(&rows, slack) {
            let gaps: Vec<String> = rows.iter().map(|r| format!("{:.3e}", r.gap)).collect();
            bail!("relative gaps do not decrease monotonically: {}", gaps.join(", "));
        }
        Ok(())
    })
}

fn cleavage_bc_and_mesh(cfg: &RunConfig) -> Result<(LatticeSpec, MaterialParams, CleavageProblem, TriangleMesh)> {
    let spec = lattice_spec(cfg)?;
    let mat = material(cfg)?;
    let prob = problem(cfg, &spec, &mat)?;
    let mesh = build_mesh(&spec)?;
    Ok((spec, mat, prob, mesh))
}

pub fn cmd_minimize(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    run_command("minimize", dir, Some(cfg), |out| {
        let (spec, mat, prob, mesh) = cleavage_bc_and_mesh(cfg)?;
        let bc = BoundaryCondition::cleavage(prob.a, spec.l);
        let mut solve = solve_config(cfg)?;
        solve.multistart = cleavage_starts(prob.a, spec.l, cfg.get("solve.p_grid")?);
        let amp = cfg.float("solve.perturb")?;
        if amp > 0.0 {
            solve.multistart.push(Initializer::Perturbed { a: prob.a, amplitude: amp });
        }
        let r = pool()?.install(|| minimize_parallel(&mesh, &bc, &mat, &solve))?;
        let d = &r.diagnostics;
        out.note("a", fmt(prob.a));
        out.note("a_crit", fmt(a_crit(&prob)?));
        out.note("target", fmt(min_energy(&prob)?));
        out.note("energy", fmt(r.energy.total));
        out.note("best_start", d.best_start);
        out.note("iterations", d.iterations);
        out.note("grad_norm", fmt(d.grad_norm));
        out.note("converged", d.converged);
        for (i, (tag, e)) in d.starts.iter().enumerate() {
            out.note(&format!("start.{i}"), format!("{tag} {}", fmt(*e)));
        }
        for (tag, why) in &d.skipped {
            out.note("skipped", format!("{tag}: {why}"));
        }
        let crack = extract_cracks(&r.u, &mesh, 0)?;
        note_crack(out, &crack, mat.beta(), &mesh);
        out.table("displacement.csv", io::DISPLACEMENT_HEADER, &io::displacement_rows(&r.u, &mesh))?;
        out.table("energy.csv", io::ENERGY_HEADER, &[io::energy_row(solve.mode, &r.energy)])?;
        out.table("crack.csv", io::CRACK_HEADER, &io::crack_rows(&crack))?;
        Ok(())
    })
}

fn all_mode_rows(u: &Displacement, mesh: &TriangleMesh, mat: &MaterialParams) -> Result<Vec<Vec<String>>> {
    [EnergyMode::Plain, EnergyMode::Chi, EnergyMode::Field, EnergyMode::FieldChi, EnergyMode::Magnetic]
        .into_iter()
        .map(|m| Ok(io::energy_row(m, &energy_rescaled(u, mesh, mat, m)?)))
        .collect()
}

pub fn cmd_recovery(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    run_command("recovery", dir, Some(cfg), |out| {
        let (_, mat, prob, mesh) = cleavage_bc_and_mesh(cfg)?;
        let (s, t) = (cfg.float("problem.s")?, cfg.float("problem.t")?);
        let u: ContinuumDisplacement = match cfg.get::<String>("problem.branch")?.as_str() {
            "el" => build_u_el(&prob, s),
            "cr" => build_u_cr(&prob, crack_p(cfg, &prob)?, s, t).map_err(|e| cfg.invalid("problem.p", e.to_string()))?,
            other => return Err(cfg.invalid("problem.branch", format!("expected el or cr, got `{other}`")).into()),
        };
        let d = recovery_sequence(&u, &mesh);
        let limit = griffith_core::solver::limit_energy(&u, &prob)?;
        out.note("limit_energy", fmt(limit));
        out.note("a", fmt(prob.a));
        let crack = extract_cracks(&d, &mesh, 0)?;
        note_crack(out, &crack, mat.beta(), &mesh);
        out.table("displacement.csv", io::DISPLACEMENT_HEADER, &io::displacement_rows(&d, &mesh))?;
        out.table("energy.csv", io::ENERGY_HEADER, &all_mode_rows(&d, &mesh, &mat)?)?;
        out.table("crack.csv", io::CRACK_HEADER, &io::crack_rows(&crack))?;
        Ok(())
    })
}

pub fn cmd_crack_extract(cfg: &RunConfig, input: &Path, dir: &Path) -> Result<Vec<PathBuf>> {
    run_command("crack-extract", dir, Some(cfg), |out| {
        let spec = lattice_spec(cfg)?;
        let beta = cfg.float("material.beta")?;
        let mesh = build_mesh(&spec)?;
        let f = std::fs::File::open(input).with_context(|| format!("cannot open {}", input.display()))?;
        let vals = io::read_displacement(f).with_context(|| format!("reading {}", input.display()))?;
        let u = io::displacement_on_mesh(&vals, &mesh)?;
        let crack = extract_cracks(&u, &mesh, 0)?;
        out.note("input", input.display());
        note_crack(out, &crack, beta, &mesh);
        out.table("crack.csv", io::CRACK_HEADER, &io::crack_rows(&crack))?;
        Ok(())
    })
}

pub fn cmd_magnet_demo(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    run_command("magnet-demo", dir, Some(cfg), |out| {
        let spec = lattice_spec(cfg)?;
        let mat = material(cfg)?;
        let prob = problem(cfg, &spec, &mat)?;
        let w = cfg.float("magnet.w")?;
        let study = StudyConfig { eta: spec.eta, margin: spec.margin, ..StudyConfig::default() };
        let rows = magnet_demo(&prob, &mat, &eps_list(cfg)?, w, &study)?;
        let worst = rows.iter().map(|r| r.residual_plus).fold(0.0, f64::max);
        out.note("max_residual_plus", fmt(worst));
        out.note("max_residual_minus", fmt(rows.iter().map(|r| r.residual_minus).fold(0.0, f64::max)));
        out.note("rotation_excess_target", fmt(0.5 * mat.magnet.kappa * w * w * spec.l));
        out.table("magnet.csv", io::MAGNET_HEADER, &io::magnet_rows(&rows))?;
        if worst > 1e-12 {
            bail!("field energy and renormalized magnetic energy disagree: relative residual {worst:.3e}");
        }
        Ok(())
    })
}

pub fn cmd_noneq_demo(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    run_command("noneq-demo", dir, Some(cfg), |out| {
        let spec = lattice_spec(cfg)?;
        let mat = material(cfg)?;
        let p = cfg.float_opt("noneq.p")?.unwrap_or(0.25 * spec.l);
        let q = cfg.float_opt("noneq.q")?.unwrap_or(0.75 * spec.l);
        let angle = cfg.float("noneq.angle")?;
        let eps = eps_list(cfg)?;
        let rows = nonequicoercivity_demo(&mat, &spec, &eps, p, q, angle)?;
        let xs: Vec<f64> = rows.iter().map(|r| r.eps).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.grad_l1).collect();
        if rows.len() >= 2 && ys.iter().all(|y| *y > 0.0) {
            out.note("slope", fmt(log_log_slope(&xs, &ys)));
        }
        let emax = rows.iter().map(|r| r.energy).fold(f64::MIN, f64::max);
        let emin = rows.iter().map(|r| r.energy).fold(f64::MAX, f64::min);
        out.note("energy_ratio", fmt(emax / emin));
        out.table("noneq.csv", io::NONEQ_HEADER, &io::noneq_rows(&rows))?;
        Ok(())
    })
}

pub fn cmd_mesh(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    run_command("mesh", dir, Some(cfg), |out| {
        let mesh = build_mesh(&lattice_spec(cfg)?)?;
        out.note("points", mesh.num_points());
        out.note("triangles", mesh.triangles.len());
        out.note("inside_triangles", mesh.num_inside_triangles());
        out.note("omega_eps_area", fmt(mesh.omega_eps_area()));
        out.table("mesh.csv", io::MESH_HEADER, &io::mesh_rows(&mesh))?;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failed_command_leaves_no_files() {
        let tmp = tempfile::tempdir().unwrap();
        let r = run_command("x", tmp.path(), None, |out| {
            out.table("a.csv", &["k"], &[vec!["1".into()]])?;
            bail!("boom")
        });
        assert!(r.is_err());
        assert_eq!(std::fs::read_dir(tmp.path()).unwrap().count(), 0);
    }

    #[test]
    fn shifted_lj_rejects_inconsistent_alpha() {
        let cfg = RunConfig::parse("material.potential = shifted-lj\nmaterial.beta = 1\nmaterial.alpha = 2\n").unwrap();
        let e = material(&cfg).unwrap_err().to_string();
        assert!(e.contains("material.alpha") && e.contains("line 3"), "{e}");
        let cfg = RunConfig::parse("material.potential = shifted-lj\nmaterial.beta = 1\n").unwrap();
        assert_eq!(material(&cfg).unwrap().alpha(), 72.0);
    }

    #[test]
    fn problem_defaults_to_factor_of_critical_load() {
        let cfg = RunConfig::parse("material.alpha = 1\nmaterial.beta = 1\n").unwrap();
        let spec = lattice_spec(&cfg).unwrap();
        let p = problem(&cfg, &spec, &material(&cfg).unwrap()).unwrap();
        assert!((p.a - 3.0).abs() < 1e-12);
    }
}
