//! Broken cells, the modified interpolation `y′` and the crack it carries.

use alloc::format;
use alloc::vec::Vec;

use crate::discrete_energy::{interpolate_gradients, CellGradient, Displacement};
use crate::lattice::{orient_normal, LatticeVectors, TriangleMesh};
use crate::material::PairPotential;
use crate::math::{Mat2, Vec2};
use crate::{Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Frobenius threshold `R` above which a cell counts as broken.
pub const BROKEN_THRESHOLD: f64 = 7.0;

/// A spring counts as broken once stretched by this factor.
pub const SPRING_BREAK: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrokenTriangleClass {
    pub triangle: usize,
    pub frobenius_norm: f64,
    /// Number of springs with `|F v| ≥ 2`.
    pub m: usize,
    pub broken_springs: [bool; 3],
}

impl BrokenTriangleClass {
    /// The unbroken spring of an `m = 2` cell.
    pub fn intact(&self) -> Option<usize> {
        if self.m == 2 {
            self.broken_springs.iter().position(|b| !b)
        } else {
            None
        }
    }
}

/// Classify the cells of `C_ε` with `|(ỹ)_Δ| > R`.
pub fn classify_broken(mesh: &TriangleMesh, cells: &[CellGradient]) -> Result<Vec<BrokenTriangleClass>> {
    let vecs = mesh.vectors.all();
    let mut out = Vec::new();
    for (id, (t, c)) in mesh.triangles.iter().zip(cells).enumerate() {
        if !t.inside {
            continue;
        }
        let n = c.f.norm();
        if n <= BROKEN_THRESHOLD {
            continue;
        }
        let broken = vecs.map(|v| (c.f * v).norm() >= SPRING_BREAK);
        let m = broken.iter().filter(|&&b| b).count();
        if m < 2 {
            // Σ|Fv|⁴ ≥ (3/8)|F|⁴ rules this out
            return Err(Error::Internal(format!(
                "cell {id} has |F| = {n} but only {m} springs stretched beyond 2"
            )));
        }
        out.push(BrokenTriangleClass { triangle: id, frobenius_norm: n, m, broken_springs: broken });
    }
    Ok(out)
}

/// Both sides of `Σ_v ⟨v, Hv⟩² = (3/8)(2 tr(H²) + (tr H)²)` for symmetric `H`.
pub fn trace_identity(h: &Mat2, vecs: &LatticeVectors) -> (f64, f64) {
    let lhs = vecs
        .all()
        .iter()
        .map(|&v| {
            let q = v.dot(*h * v);
            q * q
        })
        .sum::<f64>();
    let tr = h.trace();
    let rhs = 0.375 * (2.0 * (*h * *h).trace() + tr * tr);
    (lhs, rhs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModifiedKind {
    Intact,
    /// Two broken springs; the index is the intact one.
    TwoBroken(usize),
    ThreeBroken,
}

/// `(y′)_Δ` on one broken cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModifiedCell {
    pub triangle: usize,
    pub kind: ModifiedKind,
    pub f_prime: Mat2,
}

/// Unit `a` with `|a - c| = 1`, on the branch given by `sign`.
fn circle_intersection(c: Vec2, sign: f64) -> Vec2 {
    let n = c.norm();
    let h = libm::sqrt((1.0 - 0.25 * n * n).max(0.0));
    let dir = c.scale(1.0 / n);
    c.scale(0.5) + dir.perp().scale(sign * h)
}

/// Gradient of `y′` on an `m = 2` cell with intact spring `i` and `F v_i = w`.
fn two_broken_gradient(i: usize, w: Vec2, vecs: &LatticeVectors) -> Result<Mat2> {
    let vinv = vecs
        .basis()
        .inverse()
        .ok_or_else(|| Error::Internal("singular lattice basis".into()))?;
    let images = |a: Vec2| -> Mat2 {
        // columns: images of v1 and v2
        match i {
            0 => Mat2::from_cols(w, a),
            1 => Mat2::from_cols(a, w),
            _ => Mat2::from_cols(a, a + w),
        }
    };
    let c = if i == 2 { -w } else { w };
    if c.norm() > 1e-14 {
        let f_plus = images(circle_intersection(c, 1.0)) * vinv;
        let f_minus = images(circle_intersection(c, -1.0)) * vinv;
        return Ok(if f_plus.det() >= f_minus.det() { f_plus } else { f_minus });
    }
    // w = 0: every unit a works and det = 0; take the one nearest Id
    let r1 = Vec2::new(vinv.m[0][0], vinv.m[0][1]);
    let r2 = Vec2::new(vinv.m[1][0], vinv.m[1][1]);
    let s = match i {
        0 => r2,
        1 => r1,
        _ => r1 + r2,
    };
    Ok(images(s.normalized()) * vinv)
}

/// `(y′)_Δ` on every broken cell, in the order of `classes`.
pub fn build_modified(
    mesh: &TriangleMesh,
    cells: &[CellGradient],
    classes: &[BrokenTriangleClass],
) -> Result<Vec<ModifiedCell>> {
    classes
        .iter()
        .map(|cl| {
            let f = cells[cl.triangle].f;
            match cl.intact() {
                Some(i) => {
                    let w = f * mesh.vectors.get(i);
                    Ok(ModifiedCell {
                        triangle: cl.triangle,
                        kind: ModifiedKind::TwoBroken(i),
                        f_prime: two_broken_gradient(i, w, &mesh.vectors)?,
                    })
                }
                None => Ok(ModifiedCell {
                    triangle: cl.triangle,
                    kind: ModifiedKind::ThreeBroken,
                    f_prime: Mat2::IDENTITY,
                }),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrackSegment {
    pub endpoints: [Vec2; 2],
    pub normal: Vec2,
    /// `[u′] = u′⁺ - u′⁻` with `ν` pointing to the `+` side.
    pub jump: Vec2,
    pub triangle: usize,
    /// `i` for the segment `h_i`, parallel to `v_i`.
    pub h_index: usize,
}

impl CrackSegment {
    pub fn length(&self) -> f64 {
        (self.endpoints[1] - self.endpoints[0]).norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrackSet {
    pub segments: Vec<CrackSegment>,
    /// `#C̄_ε`.
    pub total_count: usize,
    pub count_m3: usize,
    /// The `V_i` convention on `m = 3` cells.
    pub variant: usize,
}

impl CrackSet {
    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length()).sum()
    }

    /// Length-weighted mean normal direction, averaged modulo sign.
    pub fn mean_normal(&self) -> Option<Vec2> {
        let (mut c, mut s) = (0.0, 0.0);
        for seg in &self.segments {
            let th = libm::atan2(seg.normal.y, seg.normal.x);
            let len = seg.length();
            c += len * libm::cos(2.0 * th);
            s += len * libm::sin(2.0 * th);
        }
        if c == 0.0 && s == 0.0 {
            return None;
        }
        let th = 0.5 * libm::atan2(s, c);
        Some(orient_normal(Vec2::new(libm::cos(th), libm::sin(th))))
    }
}

fn side_midpoint(mesh: &TriangleMesh, side: (usize, usize)) -> Vec2 {
    (mesh.points[side.0] + mesh.points[side.1]).scale(0.5)
}

/// The vertex shared by the sides in directions `j` and `k`, i.e. opposite `v_i`.
fn corner_opposite(sides: &[(usize, usize); 3], i: usize) -> usize {
    let (a, b) = sides[i];
    let (c, d) = sides[(i + 1) % 3];
    [c, d].into_iter().find(|&p| p != a && p != b).unwrap_or(c)
}

/// Segment `h_i` of a cell with its oriented normal.
fn h_segment(mesh: &TriangleMesh, tri: usize, i: usize) -> ([Vec2; 2], Vec2) {
    let t = &mesh.triangles[tri];
    let sides = mesh.sides(t);
    let ends = [side_midpoint(mesh, sides[(i + 1) % 3]), side_midpoint(mesh, sides[(i + 2) % 3])];
    let normal = orient_normal(mesh.vectors.get(i).perp());
    (ends, normal)
}

/// Jump segments of `y′` with their openings `[u′]`.
pub fn jump_vectors(
    mesh: &TriangleMesh,
    cells: &[CellGradient],
    modified: &[ModifiedCell],
    variant: usize,
) -> Result<Vec<CrackSegment>> {
    if variant > 2 {
        return Err(Error::Domain(format!("variant {variant} is not one of 0, 1, 2")));
    }
    let se = libm::sqrt(mesh.eps());
    let mut out = Vec::new();
    for mc in modified {
        let t = &mesh.triangles[mc.triangle];
        let sides = mesh.sides(t);
        let f = cells[mc.triangle].f;
        let mut push = |i: usize, jump_y: Vec2, p_minus_q: Vec2| {
            let (ends, normal) = h_segment(mesh, mc.triangle, i);
            // the corner side is `+` when it lies along ν
            let sign = if normal.dot(p_minus_q) > 0.0 { 1.0 } else { -1.0 };
            out.push(CrackSegment {
                endpoints: ends,
                normal,
                jump: jump_y.scale(sign / se),
                triangle: mc.triangle,
                h_index: i,
            });
        };
        match mc.kind {
            ModifiedKind::Intact => {}
            ModifiedKind::TwoBroken(i) => {
                let p = corner_opposite(&sides, i);
                let q = sides[i].0;
                let d = mesh.points[p] - mesh.points[q];
                push(i, (f - mc.f_prime) * d, d);
            }
            ModifiedKind::ThreeBroken => {
                let ci = corner_opposite(&sides, variant);
                for j in (0..3).filter(|&j| j != variant) {
                    let cj = corner_opposite(&sides, j);
                    let d = mesh.points[cj] - mesh.points[ci];
                    push(j, (f - Mat2::IDENTITY) * d, d);
                }
            }
        }
    }
    Ok(out)
}

/// Classification, `y′` and its jump set in one pass.
pub fn extract_cracks(u: &Displacement, mesh: &TriangleMesh, variant: usize) -> Result<CrackSet> {
    let cells = interpolate_gradients(u, mesh)?;
    let classes = classify_broken(mesh, &cells)?;
    let modified = build_modified(mesh, &cells, &classes)?;
    let segments = jump_vectors(mesh, &cells, &modified, variant)?;
    Ok(CrackSet {
        segments,
        total_count: classes.len(),
        count_m3: classes.iter().filter(|c| c.m == 3).count(),
        variant,
    })
}

/// `Σ_segments |h| Σ_v (2β/√3)|v·ν|`.
pub fn crack_energy_estimate(crack: &CrackSet, beta: f64, vecs: &LatticeVectors) -> f64 {
    crack
        .segments
        .iter()
        .map(|s| s.length() * surface_density(s.normal, beta, vecs))
        .sum()
}

/// `Σ_v (2β/√3)|v·ν|`.
pub fn surface_density(nu: Vec2, beta: f64, vecs: &LatticeVectors) -> f64 {
    2.0 * beta / SQRT3 * vecs.all().iter().map(|v| libm::fabs(v.dot(nu))).sum::<f64>()
}

/// Upper bound `ℰ_ε / (ε inf{W(r) : r ≥ 2})` on the number of broken cells.
pub fn broken_count_bound(energy: f64, eps: f64, pot: &PairPotential) -> f64 {
    energy / (eps * pot.inf_beyond(SPRING_BREAK))
}

/// Number of nearest-neighbour bonds in direction `dir` crossed by the
/// segment `a→b`. Errors if the segment passes within `1e-12` of a lattice
/// point.
pub fn spring_crossing_count(a: Vec2, b: Vec2, mesh: &TriangleMesh, dir: usize) -> Result<usize> {
    let d = b - a;
    let len = d.norm();
    if len == 0.0 {
        return Ok(0);
    }
    let t_hat = d.scale(1.0 / len);
    let nu = t_hat.perp();
    let tol = 1e-12;
    let along = |p: Vec2| t_hat.dot(p - a);
    for &p in &mesh.points {
        let s = nu.dot(p - a);
        if libm::fabs(s) <= tol {
            let t = along(p);
            if t >= -tol && t <= len + tol {
                return Err(Error::LatticeAlignment);
            }
        }
    }
    let mut count = 0;
    for e in mesh.edges.iter().filter(|e| e.dir == dir) {
        let p = mesh.points[e.ends[0]];
        let q = mesh.points[e.ends[1]];
        let sp = nu.dot(p - a);
        let sq = nu.dot(q - a);
        if (sp > 0.0) == (sq > 0.0) {
            continue;
        }
        let x = p + (q - p).scale(sp / (sp - sq));
        let t = along(x);
        if (0.0..=len).contains(&t) {
            count += 1;
        }
    }
    Ok(count)
}
