//! The rotated triangular lattice `εL`, its triangulation of the slab and
//! the cleavage direction.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_3, PI};

use crate::math::{Mat2, Vec2};
use crate::{Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Relative tolerance (in units of `eps`) for membership of lattice points
/// in closed rectangles.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// The three nearest-neighbour directions `v1`, `v2` and `v3 = v2 - v1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeVectors {
    pub v1: Vec2,
    pub v2: Vec2,
    pub v3: Vec2,
}

impl LatticeVectors {
    pub fn all(&self) -> [Vec2; 3] {
        [self.v1, self.v2, self.v3]
    }

    pub fn get(&self, i: usize) -> Vec2 {
        self.all()[i]
    }

    /// The matrix `[v1 v2]` mapping integer coordinates to lattice points.
    pub fn basis(&self) -> Mat2 {
        Mat2::from_cols(self.v1, self.v2)
    }
}

fn check_phi(phi: f64) -> Result<()> {
    if !(0.0..FRAC_PI_3).contains(&phi) {
        return Err(Error::Domain(format!("phi = {phi} is outside [0, pi/3)")));
    }
    Ok(())
}

/// Lattice vectors of the lattice rotated by `phi`.
pub fn lattice_vectors(phi: f64) -> Result<LatticeVectors> {
    check_phi(phi)?;
    let rot = Mat2::rotation(phi);
    let v1 = rot * Vec2::E1;
    let v2 = rot * Vec2::new(0.5, 0.5 * SQRT3);
    Ok(LatticeVectors { v1, v2, v3: v2 - v1 })
}

/// The maximal vertical component `γ` of a lattice vector and the
/// direction `v_γ` attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CleavageData {
    pub gamma: f64,
    pub v_gamma: Vec2,
    /// Index of `v_γ` in `[v1, v2, v3]`.
    pub index: usize,
    pub unique: bool,
}

impl CleavageData {
    /// Unit normal to cleavage lines, oriented towards `+e1`.
    pub fn normal(&self) -> Vec2 {
        orient_normal(self.v_gamma.perp())
    }
}

pub fn gamma_of(phi: f64) -> Result<CleavageData> {
    let vecs = lattice_vectors(phi)?;
    let mut index = 0;
    let mut gamma = f64::NEG_INFINITY;
    for (i, v) in vecs.all().iter().enumerate() {
        let c = libm::fabs(v.y);
        if c > gamma {
            gamma = c;
            index = i;
        }
    }
    let mut v_gamma = vecs.get(index);
    if v_gamma.y < 0.0 {
        v_gamma = -v_gamma;
    }
    Ok(CleavageData { gamma, v_gamma, index, unique: phi != 0.0 })
}

/// Orientation convention for normals: non-negative first component, ties
/// broken towards `+e2`.
pub fn orient_normal(n: Vec2) -> Vec2 {
    let n = n.normalized();
    if n.x > 1e-14 || (libm::fabs(n.x) <= 1e-14 && n.y >= 0.0) {
        n
    } else {
        -n
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    /// Closed membership with absolute tolerance `tol`.
    pub fn contains(&self, p: Vec2, tol: f64) -> bool {
        p.x >= self.x0 - tol && p.x <= self.x1 + tol && p.y >= self.y0 - tol && p.y <= self.y1 + tol
    }
}

/// How the Dirichlet extension `Ω̃` surrounds `Ω = (0,l)×(0,1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginShape {
    /// `(-η, l+η) × (0,1)`: Dirichlet data on the two vertical sides only.
    Cleavage,
    /// `(-η, l+η) × (-η, 1+η)`.
    Uniform,
}

/// Which triangles and nearest-neighbour pairs an energy is summed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Pairs with both ends in `εL ∩ Ω` and the cells `C_ε`.
    Omega,
    /// Pairs with both ends in `εL ∩ Ω̃` and the cells `C̃_ε`.
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    pub phi: f64,
    pub eps: f64,
    pub l: f64,
    pub eta: f64,
    pub margin: MarginShape,
}

impl LatticeSpec {
    pub fn cleavage(phi: f64, eps: f64, l: f64, eta: f64) -> Self {
        LatticeSpec { phi, eps, l, eta, margin: MarginShape::Cleavage }
    }

    pub fn validate(&self) -> Result<()> {
        check_phi(self.phi)?;
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Domain(format!("eps = {} must be positive", self.eps)));
        }
        if !(self.l >= 1.0 / SQRT3) || !self.l.is_finite() {
            return Err(Error::Domain(format!("l = {} must be at least 1/sqrt(3)", self.l)));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Domain(format!("eta = {} must be positive", self.eta)));
        }
        Ok(())
    }

    pub fn omega(&self) -> Rect {
        Rect { x0: 0.0, x1: self.l, y0: 0.0, y1: 1.0 }
    }

    pub fn extended(&self) -> Rect {
        match self.margin {
            MarginShape::Cleavage => Rect { x0: -self.eta, x1: self.l + self.eta, y0: 0.0, y1: 1.0 },
            MarginShape::Uniform => Rect {
                x0: -self.eta,
                x1: self.l + self.eta,
                y0: -self.eta,
                y1: 1.0 + self.eta,
            },
        }
    }

    /// Distance from `p` to `Ω̃ ∖ Ω` (zero outside `Ω`).
    pub fn dist_to_margin(&self, p: Vec2) -> f64 {
        let tol = MEMBERSHIP_TOL * self.eps;
        if !self.omega().contains(p, tol) {
            return 0.0;
        }
        let horizontal = p.x.min(self.l - p.x).max(0.0);
        match self.margin {
            MarginShape::Cleavage => horizontal,
            MarginShape::Uniform => horizontal.min(p.y.min(1.0 - p.y).max(0.0)),
        }
    }
}

/// A mesh cell: three point indices in counter-clockwise order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triangle {
    pub vertices: [usize; 3],
    pub up: bool,
    /// Whether the cell lies in `Ω` (belongs to `C_ε`); all cells belong to `C̃_ε`.
    pub inside: bool,
}

impl Triangle {
    pub fn in_domain(&self, domain: Domain) -> bool {
        match domain {
            Domain::Omega => self.inside,
            Domain::Extended => true,
        }
    }
}

/// A nearest-neighbour pair `ends[1] - ends[0] = eps * v[dir]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub ends: [usize; 2],
    pub dir: usize,
    /// Both ends in `Ω`.
    pub inside: bool,
    /// Number of cells of `C_ε` having this pair as a side.
    pub incidence_omega: u8,
    /// Number of cells of `C̃_ε` having this pair as a side.
    pub incidence_extended: u8,
}

impl Edge {
    pub fn in_domain(&self, domain: Domain) -> bool {
        match domain {
            Domain::Omega => self.inside,
            Domain::Extended => true,
        }
    }

    pub fn incidence(&self, domain: Domain) -> u8 {
        match domain {
            Domain::Omega => self.incidence_omega,
            Domain::Extended => self.incidence_extended,
        }
    }
}

/// Lattice points of `εL ∩ Ω̃`, the cells `C̃_ε ⊃ C_ε` and all
/// nearest-neighbour pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub spec: LatticeSpec,
    pub vectors: LatticeVectors,
    pub points: Vec<Vec2>,
    /// Integer lattice coordinates `(λ1, λ2)` of each point.
    pub coords: Vec<(i64, i64)>,
    pub in_omega: Vec<bool>,
    pub dirichlet_mask: Vec<bool>,
    pub triangles: Vec<Triangle>,
    pub edges: Vec<Edge>,
}

pub const TRIANGLE_AREA_FACTOR: f64 = SQRT3 / 4.0;

impl TriangleMesh {
    pub fn eps(&self) -> f64 {
        self.spec.eps
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn triangle_area(&self) -> f64 {
        TRIANGLE_AREA_FACTOR * self.spec.eps * self.spec.eps
    }

    /// `|Ω_ε|`, the area covered by `C_ε`.
    pub fn omega_eps_area(&self) -> f64 {
        self.triangles.iter().filter(|t| t.inside).count() as f64 * self.triangle_area()
    }

    pub fn num_inside_triangles(&self) -> usize {
        self.triangles.iter().filter(|t| t.inside).count()
    }

    /// Vertex positions of a cell.
    pub fn corners(&self, t: &Triangle) -> [Vec2; 3] {
        t.vertices.map(|i| self.points[i])
    }

    /// For each of `v1, v2, v3`, the ordered vertex pair `(a, b)` of the
    /// cell side with `x_b - x_a = eps * v`.
    pub fn sides(&self, t: &Triangle) -> [(usize, usize); 3] {
        let [a, b, c] = t.vertices;
        if t.up {
            // a = (λ1,λ2), b = (λ1+1,λ2), c = (λ1,λ2+1)
            [(a, b), (a, c), (b, c)]
        } else {
            // a = (λ1+1,λ2), b = (λ1+1,λ2+1), c = (λ1,λ2+1)
            [(c, b), (a, b), (a, c)]
        }
    }

    /// Geometric centre of a cell.
    pub fn centroid(&self, t: &Triangle) -> Vec2 {
        let [p, q, r] = self.corners(t);
        (p + q + r).scale(1.0 / 3.0)
    }
}

/// Enumerate the lattice points, cells and nearest-neighbour pairs of a slab.
pub fn build_mesh(spec: &LatticeSpec) -> Result<TriangleMesh> {
    spec.validate()?;
    let vectors = lattice_vectors(spec.phi)?;
    let eps = spec.eps;
    let tol = MEMBERSHIP_TOL * eps;
    let ext = spec.extended();
    let omega = spec.omega();

    let inv = vectors
        .basis()
        .inverse()
        .ok_or_else(|| Error::Internal("singular lattice basis".into()))?;
    let corners = [
        Vec2::new(ext.x0, ext.y0),
        Vec2::new(ext.x1, ext.y0),
        Vec2::new(ext.x0, ext.y1),
        Vec2::new(ext.x1, ext.y1),
    ];
    let mut lo = (i64::MAX, i64::MAX);
    let mut hi = (i64::MIN, i64::MIN);
    for c in corners {
        let lam = inv * c.scale(1.0 / eps);
        lo.0 = lo.0.min(libm::floor(lam.x) as i64 - 1);
        lo.1 = lo.1.min(libm::floor(lam.y) as i64 - 1);
        hi.0 = hi.0.max(libm::ceil(lam.x) as i64 + 1);
        hi.1 = hi.1.max(libm::ceil(lam.y) as i64 + 1);
    }
    let width = (hi.0 - lo.0 + 1) as usize;
    let height = (hi.1 - lo.1 + 1) as usize;
    let mut index = vec![usize::MAX; width * height];
    let slot = |l1: i64, l2: i64| -> Option<usize> {
        if l1 < lo.0 || l1 > hi.0 || l2 < lo.1 || l2 > hi.1 {
            None
        } else {
            Some((l2 - lo.1) as usize * width + (l1 - lo.0) as usize)
        }
    };

    let mut points = Vec::new();
    let mut coords = Vec::new();
    let mut in_omega = Vec::new();
    let mut dirichlet_mask = Vec::new();
    for l2 in lo.1..=hi.1 {
        for l1 in lo.0..=hi.0 {
            let p = (vectors.v1.scale(l1 as f64) + vectors.v2.scale(l2 as f64)).scale(eps);
            if !ext.contains(p, tol) {
                continue;
            }
            index[slot(l1, l2).unwrap()] = points.len();
            points.push(p);
            coords.push((l1, l2));
            in_omega.push(omega.contains(p, tol));
            dirichlet_mask.push(spec.dist_to_margin(p) <= eps + tol);
        }
    }
    let lookup = |l1: i64, l2: i64| -> Option<usize> {
        slot(l1, l2).map(|s| index[s]).filter(|&i| i != usize::MAX)
    };

    let mut edges = Vec::new();
    let mut edge_of = vec![usize::MAX; points.len() * 3];
    for (i, &(l1, l2)) in coords.iter().enumerate() {
        let nbrs = [(l1 + 1, l2), (l1, l2 + 1), (l1 - 1, l2 + 1)];
        for (dir, (m1, m2)) in nbrs.into_iter().enumerate() {
            if let Some(j) = lookup(m1, m2) {
                edge_of[i * 3 + dir] = edges.len();
                edges.push(Edge {
                    ends: [i, j],
                    dir,
                    inside: in_omega[i] && in_omega[j],
                    incidence_omega: 0,
                    incidence_extended: 0,
                });
            }
        }
    }

    let mut triangles = Vec::new();
    for &(l1, l2) in coords.iter() {
        let up = [lookup(l1, l2), lookup(l1 + 1, l2), lookup(l1, l2 + 1)];
        let down = [lookup(l1 + 1, l2), lookup(l1 + 1, l2 + 1), lookup(l1, l2 + 1)];
        for (verts, is_up) in [(up, true), (down, false)] {
            if let [Some(a), Some(b), Some(c)] = verts {
                let inside = in_omega[a] && in_omega[b] && in_omega[c];
                let t = Triangle { vertices: [a, b, c], up: is_up, inside };
                let side_edges = if is_up {
                    [edge_of[a * 3], edge_of[a * 3 + 1], edge_of[b * 3 + 2]]
                } else {
                    [edge_of[a * 3 + 1], edge_of[c * 3], edge_of[a * 3 + 2]]
                };
                for e in side_edges {
                    if e == usize::MAX {
                        return Err(Error::Internal("cell side missing from edge list".into()));
                    }
                    edges[e].incidence_extended += 1;
                    if inside {
                        edges[e].incidence_omega += 1;
                    }
                }
                triangles.push(t);
            }
        }
    }

    if !triangles.iter().any(|t| t.inside) {
        return Err(Error::EmptyMesh);
    }

    Ok(TriangleMesh { spec: *spec, vectors, points, coords, in_omega, dirichlet_mask, triangles, edges })
}

/// Weight of each nearest-neighbour pair in the boundary term, per ordered
/// pair as in the pair-sum form of the energy: `0` for sides of two cells,
/// `1/4` for sides of one cell, `1/2` for pairs that are sides of no cell.
/// Pairs outside `domain` get weight `0` and do not enter the energy.
pub fn classify_edges(mesh: &TriangleMesh, domain: Domain) -> Vec<f64> {
    mesh.edges
        .iter()
        .map(|e| {
            if !e.in_domain(domain) {
                return 0.0;
            }
            match e.incidence(domain) {
                2 => 0.0,
                1 => 0.25,
                _ => 0.5,
            }
        })
        .collect()
}

/// Normalize an angle to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut a = libm::fmod(a, 2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}
