//! CSV tables. Floats are written with 17 significant digits so that
//! reading a table back reproduces every value exactly.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use griffith_core::continuum::CleavageProblem;
use griffith_core::crack_extraction::CrackSet;
use griffith_core::discrete_energy::{Displacement, EnergyBreakdown, EnergyMode};
use griffith_core::lattice::{gamma_of, TriangleMesh};
use griffith_core::solver::{ConvergenceRow, MagnetRow, NoneqRow};
use griffith_core::Vec2;

pub const DISPLACEMENT_HEADER: &[&str] = &["index", "x", "y", "u1", "u2"];
pub const ENERGY_HEADER: &[&str] = &["mode", "bulk", "boundary", "penalty", "field", "total"];
pub const CRACK_HEADER: &[&str] = &["seg_id", "x0", "y0", "x1", "y1", "nu_x", "nu_y", "jump1", "jump2"];
pub const CONVERGENCE_HEADER: &[&str] =
    &["eps", "mode", "energy", "target", "gap", "n_broken", "crack_energy_est", "crack_angle_deg"];
pub const GAMMA_HEADER: &[&str] = &["phi", "gamma", "vgamma_x", "vgamma_y", "unique", "a_crit"];
pub const MAGNET_HEADER: &[&str] =
    &["eps", "config", "f_eps", "e_chi", "e_tot", "shift", "residual_minus", "residual_plus", "f_limit"];
pub const NONEQ_HEADER: &[&str] = &["eps", "energy", "grad_l1"];
pub const MESH_HEADER: &[&str] = &["index", "x", "y", "in_omega", "dirichlet"];

pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_table<W: Write>(w: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    out.write_record(header)?;
    for r in rows {
        out.write_record(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_table_file(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let f = std::fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    write_table(std::io::BufWriter::new(f), header, rows).with_context(|| format!("writing {}", path.display()))
}

/// Rows of a table whose header must equal `header`.
pub fn read_table<R: Read>(r: R, header: &[&str]) -> Result<Vec<Vec<String>>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let found: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if found != header {
        bail!("unexpected header {:?}, expected {:?}", found.join(","), header.join(","));
    }
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.with_context(|| format!("row {}", i + 1))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(rows)
}

fn num(s: &str, what: &str, row: usize) -> Result<f64> {
    s.trim().parse::<f64>().with_context(|| format!("row {row}: bad {what} `{s}`"))
}

pub fn displacement_rows(u: &Displacement, mesh: &TriangleMesh) -> Vec<Vec<String>> {
    mesh.points
        .iter()
        .zip(&u.values)
        .enumerate()
        .map(|(i, (x, v))| vec![i.to_string(), fmt(x.x), fmt(x.y), fmt(v.x), fmt(v.y)])
        .collect()
}

/// `(x, u)` per point, in index order.
pub type PointValues = Vec<(Vec2, Vec2)>;

pub fn read_displacement<R: Read>(r: R) -> Result<PointValues> {
    let rows = read_table(r, DISPLACEMENT_HEADER)?;
    let mut out = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let idx: usize = row[0].parse().with_context(|| format!("row {}: bad index", i + 1))?;
        if idx != i {
            bail!("row {}: index {idx} out of order", i + 1);
        }
        let x = Vec2::new(num(&row[1], "x", i + 1)?, num(&row[2], "y", i + 1)?);
        let u = Vec2::new(num(&row[3], "u1", i + 1)?, num(&row[4], "u2", i + 1)?);
        if !(x.is_finite() && u.is_finite()) {
            bail!("row {}: non-finite entry", i + 1);
        }
        out.push((x, u));
    }
    Ok(out)
}

/// Attach values read from a file to a mesh, checking that the points agree.
pub fn displacement_on_mesh(values: &PointValues, mesh: &TriangleMesh) -> Result<Displacement> {
    if values.len() != mesh.num_points() {
        bail!("file has {} points, the configured mesh has {}", values.len(), mesh.num_points());
    }
    let tol = 1e-9 * mesh.eps();
    for (i, ((x, _), p)) in values.iter().zip(&mesh.points).enumerate() {
        if (*x - *p).norm() > tol {
            bail!("point {i} at ({}, {}) does not match the mesh point ({}, {})", x.x, x.y, p.x, p.y);
        }
    }
    Ok(Displacement::new(mesh, values.iter().map(|(_, u)| *u).collect())?)
}

pub fn energy_row(mode: EnergyMode, e: &EnergyBreakdown) -> Vec<String> {
    vec![mode.name().to_string(), fmt(e.bulk), fmt(e.boundary), fmt(e.penalty), fmt(e.field), fmt(e.total)]
}

pub fn crack_rows(c: &CrackSet) -> Vec<Vec<String>> {
    c.segments
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let [a, b] = s.endpoints;
            vec![
                i.to_string(),
                fmt(a.x),
                fmt(a.y),
                fmt(b.x),
                fmt(b.y),
                fmt(s.normal.x),
                fmt(s.normal.y),
                fmt(s.jump.x),
                fmt(s.jump.y),
            ]
        })
        .collect()
}

pub fn convergence_rows(rows: &[ConvergenceRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                fmt(r.eps),
                r.mode.name().to_string(),
                fmt(r.energy),
                fmt(r.target),
                fmt(r.gap),
                r.n_broken.to_string(),
                fmt(r.crack_energy_est),
                fmt(r.crack_angle_deg),
            ]
        })
        .collect()
}

/// `n` values of φ from 0 up to just below π/3.
pub fn phi_grid(n: usize) -> Vec<f64> {
    let top = std::f64::consts::FRAC_PI_3 * (1.0 - 1e-9);
    (0..n).map(|k| top * k as f64 / (n - 1) as f64).collect()
}

pub fn gamma_rows(n: usize, alpha: f64, beta: f64, l: f64) -> Result<Vec<Vec<String>>> {
    if n < 2 {
        bail!("--phi-steps must be at least 2, got {n}");
    }
    phi_grid(n)
        .into_iter()
        .map(|phi| {
            let cd = gamma_of(phi)?;
            let p = CleavageProblem { alpha, beta, l, phi, a: 0.0 };
            let ac = griffith_core::continuum::a_crit(&p)?;
            Ok(vec![fmt(phi), fmt(cd.gamma), fmt(cd.v_gamma.x), fmt(cd.v_gamma.y), cd.unique.to_string(), fmt(ac)])
        })
        .collect()
}

pub fn magnet_rows(rows: &[MagnetRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                fmt(r.eps),
                r.config.to_string(),
                fmt(r.f_eps),
                fmt(r.e_chi),
                fmt(r.e_tot),
                fmt(r.shift),
                fmt(r.residual_minus),
                fmt(r.residual_plus),
                fmt(r.f_limit),
            ]
        })
        .collect()
}

pub fn noneq_rows(rows: &[NoneqRow]) -> Vec<Vec<String>> {
    rows.iter().map(|r| vec![fmt(r.eps), fmt(r.energy), fmt(r.grad_l1)]).collect()
}

pub fn mesh_rows(mesh: &TriangleMesh) -> Vec<Vec<String>> {
    mesh.points
        .iter()
        .enumerate()
        .map(|(i, x)| {
            vec![
                i.to_string(),
                fmt(x.x),
                fmt(x.y),
                mesh.in_omega[i].to_string(),
                mesh.dirichlet_mask[i].to_string(),
            ]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use griffith_core::lattice::{build_mesh, LatticeSpec};

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 123456.789, f64::MIN_POSITIVE] {
            assert_eq!(fmt(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn header_mismatch_is_rejected() {
        let text = "index,x,y,u1\n0,0,0,0\n";
        assert!(read_table(text.as_bytes(), DISPLACEMENT_HEADER).is_err());
    }

    #[test]
    fn displacement_must_match_mesh() {
        let mesh = build_mesh(&LatticeSpec::cleavage(0.0, 0.25, 1.0, 0.05)).unwrap();
        let u = Displacement::zeros(&mesh);
        let mut buf = Vec::new();
        write_table(&mut buf, DISPLACEMENT_HEADER, &displacement_rows(&u, &mesh)).unwrap();
        let vals = read_displacement(buf.as_slice()).unwrap();
        assert!(displacement_on_mesh(&vals, &mesh).is_ok());
        let other = build_mesh(&LatticeSpec::cleavage(0.1, 0.25, 1.0, 0.05)).unwrap();
        assert!(displacement_on_mesh(&vals, &other).is_err());
    }

    #[test]
    fn gamma_scan_endpoints() {
        let rows = gamma_rows(2, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0][4], "false");
        assert_eq!(rows[1][4], "true");
        assert!(gamma_rows(1, 1.0, 1.0, 1.0).is_err());
    }
}
