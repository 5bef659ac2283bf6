//! The limiting Griffith functional on piecewise affine displacements with
//! polyline cracks, and the closed-form cleavage problem.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::crack_extraction::surface_density;
use crate::geometry::{area, clip_half_plane, contains_point, point_segment_distance};
use crate::lattice::{gamma_of, lattice_vectors, orient_normal, CleavageData, LatticeVectors};
use crate::material::{quadratic_form_q, quadratic_form_qhat};
use crate::math::{Mat2, Vec2};
use crate::{Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// A polygonal region carrying the affine map `x ↦ A x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub polygon: Vec<Vec2>,
    pub a: Mat2,
    pub b: Vec2,
}

impl Piece {
    pub fn constant(polygon: Vec<Vec2>, value: Vec2) -> Self {
        Piece { polygon, a: Mat2::ZERO, b: value }
    }

    pub fn eval(&self, x: Vec2) -> Vec2 {
        self.a * x + self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrackLine {
    pub p: Vec2,
    pub q: Vec2,
    pub normal: Vec2,
}

impl CrackLine {
    pub fn new(p: Vec2, q: Vec2) -> Self {
        CrackLine { p, q, normal: orient_normal((q - p).perp()) }
    }

    pub fn length(&self) -> f64 {
        (self.q - self.p).norm()
    }
}

/// Candidate limit displacement on `Ω = (0,l)×(0,1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumDisplacement {
    pub pieces: Vec<Piece>,
    pub crack: Vec<CrackLine>,
    pub l: f64,
}

fn rectangle(l: f64) -> Vec<Vec2> {
    vec![Vec2::new(0.0, 0.0), Vec2::new(l, 0.0), Vec2::new(l, 1.0), Vec2::new(0.0, 1.0)]
}

fn polygon_boundary_distance(poly: &[Vec2], x: Vec2) -> f64 {
    (0..poly.len())
        .map(|i| point_segment_distance(x, poly[i], poly[(i + 1) % poly.len()]))
        .fold(f64::INFINITY, f64::min)
}

impl ContinuumDisplacement {
    /// The pieces must cover `Ω` without overlap: their areas add up to `l`
    /// and every point of a sample grid lies in exactly one piece.
    pub fn validate(&self) -> Result<()> {
        let total: f64 = self.pieces.iter().map(|p| area(&p.polygon)).sum();
        if (total - self.l).abs() > 1e-9 * self.l {
            return Err(Error::Geometry(format!("pieces cover area {total}, expected {}", self.l)));
        }
        let n = 37;
        for i in 0..n {
            for j in 0..n {
                // irrational offsets keep samples off polygon edges
                let x = Vec2::new(
                    self.l * (i as f64 + 0.381_966) / n as f64,
                    (j as f64 + 0.236_068) / n as f64,
                );
                let hits = self.pieces.iter().filter(|p| contains_point(&p.polygon, x)).count();
                if hits != 1 {
                    return Err(Error::Geometry(format!(
                        "point ({}, {}) lies in {hits} pieces",
                        x.x, x.y
                    )));
                }
            }
        }
        for c in &self.crack {
            if !c.normal.is_finite() || (c.normal.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::Geometry("crack segment without a unit normal".into()));
            }
        }
        Ok(())
    }

    /// Index of the piece used to evaluate at `x`: the one containing the
    /// nearest point of `Ω`, falling back to the nearest piece.
    pub fn piece_at(&self, x: Vec2) -> usize {
        let inset = 1e-12;
        let y = Vec2::new(x.x.clamp(inset, self.l - inset), x.y.clamp(inset, 1.0 - inset));
        if let Some(i) = self.pieces.iter().position(|p| contains_point(&p.polygon, y)) {
            return i;
        }
        let mut best = (f64::INFINITY, 0);
        for (i, p) in self.pieces.iter().enumerate() {
            let d = polygon_boundary_distance(&p.polygon, y);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    /// `u(x)`, extending each piece affinely across `∂Ω`.
    pub fn eval(&self, x: Vec2) -> Vec2 {
        self.pieces[self.piece_at(x)].eval(x)
    }

    /// Distance from `x` to the crack polyline.
    pub fn crack_distance(&self, x: Vec2) -> f64 {
        self.crack
            .iter()
            .map(|c| point_segment_distance(x, c.p, c.q))
            .fold(f64::INFINITY, f64::min)
    }

    /// Shift every piece and the crack by `d`, with `u_new(x) = u(x - d)`.
    pub fn translated(&self, d: Vec2) -> Self {
        ContinuumDisplacement {
            pieces: self
                .pieces
                .iter()
                .map(|p| Piece {
                    polygon: p.polygon.iter().map(|&v| v + d).collect(),
                    a: p.a,
                    b: p.b - p.a * d,
                })
                .collect(),
            crack: self
                .crack
                .iter()
                .map(|c| CrackLine { p: c.p + d, q: c.q + d, normal: c.normal })
                .collect(),
            l: self.l,
        }
    }
}

/// Uniaxial extension of the slab `(0,l)×(0,1)` by the strain `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CleavageProblem {
    pub alpha: f64,
    pub beta: f64,
    pub l: f64,
    pub phi: f64,
    pub a: f64,
}

impl CleavageProblem {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::Domain("alpha and beta must be positive".into()));
        }
        if !(self.l >= 1.0 / SQRT3) {
            return Err(Error::Domain(format!("l = {} must be at least 1/sqrt(3)", self.l)));
        }
        if !(self.a >= 0.0 && self.a.is_finite()) {
            return Err(Error::Domain(format!("a = {} must be non-negative", self.a)));
        }
        lattice_vectors(self.phi).map(|_| ())
    }

    pub fn cleavage(&self) -> Result<CleavageData> {
        gamma_of(self.phi)
    }

    pub fn vectors(&self) -> Result<LatticeVectors> {
        lattice_vectors(self.phi)
    }

    pub fn with_a(&self, a: f64) -> Self {
        CleavageProblem { a, ..*self }
    }

    pub fn elastic_energy(&self) -> f64 {
        self.alpha * self.l * self.a * self.a / SQRT3
    }

    pub fn crack_energy(&self) -> Result<f64> {
        Ok(2.0 * self.beta / self.cleavage()?.gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitEnergy {
    pub bulk: f64,
    pub surface: f64,
    pub total: f64,
}

/// `ℰ(u) = (4/√3)∫_Ω ½Q(e(u)) + ∫_{J_u} Σ_v (2β/√3)|v·ν|`.
pub fn energy_limit(u: &ContinuumDisplacement, alpha: f64, beta: f64, vecs: &LatticeVectors) -> Result<LimitEnergy> {
    u.validate()?;
    let bulk: f64 = u
        .pieces
        .iter()
        .map(|p| area(&p.polygon) * (2.0 / SQRT3) * quadratic_form_q(&p.a, alpha))
        .sum();
    let surface: f64 = u.crack.iter().map(|c| c.length() * surface_density(c.normal, beta, vecs)).sum();
    Ok(LimitEnergy { bulk, surface, total: bulk + surface })
}

/// `ℱ(u) = ℰ(u) - (κ/2)∫_Ω Q̂(∇u)`.
pub fn energy_f_limit(u: &ContinuumDisplacement, problem: &CleavageProblem, kappa: f64) -> Result<f64> {
    let e = energy_limit(u, problem.alpha, problem.beta, &problem.vectors()?)?;
    let field: f64 = u.pieces.iter().map(|p| area(&p.polygon) * quadratic_form_qhat(&p.a)).sum();
    Ok(e.total - 0.5 * kappa * field)
}

/// `sqrt(2√3β/(αγl))`.
pub fn a_crit(problem: &CleavageProblem) -> Result<f64> {
    let gamma = problem.cleavage()?.gamma;
    Ok(libm::sqrt(2.0 * SQRT3 * problem.beta / (problem.alpha * gamma * problem.l)))
}

/// `min{αla²/√3, 2β/γ}`.
pub fn min_energy(problem: &CleavageProblem) -> Result<f64> {
    Ok(problem.elastic_energy().min(problem.crack_energy()?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Elastic,
    Crack,
}

/// The branch of the unique minimizer; refuses at the critical load.
pub fn minimizing_branch(problem: &CleavageProblem) -> Result<Branch> {
    let ac = a_crit(problem)?;
    if (problem.a - ac).abs() <= 1e-12 * ac {
        return Err(Error::Precondition("the minimizer is not unique at a = a_crit".into()));
    }
    Ok(if problem.a < ac { Branch::Elastic } else { Branch::Crack })
}

/// `(0, s) + diag(a, -a/3) x`.
pub fn build_u_el(problem: &CleavageProblem, s: f64) -> ContinuumDisplacement {
    ContinuumDisplacement {
        pieces: vec![Piece { polygon: rectangle(problem.l), a: Mat2::diag(problem.a, -problem.a / 3.0), b: Vec2::new(0.0, s) }],
        crack: Vec::new(),
        l: problem.l,
    }
}

/// Two constant pieces `(0,s)` and `(al,t)` split by the line through
/// `(p,0)` in direction `dir`, which must leave through the top side.
pub fn build_straight_crack(problem: &CleavageProblem, p: f64, dir: Vec2, s: f64, t: f64) -> Result<ContinuumDisplacement> {
    let l = problem.l;
    if dir.y.abs() < 1e-15 {
        return Err(Error::Precondition("horizontal crack lines do not cut the slab".into()));
    }
    let top = p + dir.x / dir.y;
    let tol = 1e-12 * l;
    if !(p >= -tol && p <= l + tol && top >= -tol && top <= l + tol) {
        return Err(Error::Precondition(format!(
            "crack line from ({p}, 0) leaves the slab through a vertical side (top crossing at {top})"
        )));
    }
    let bottom = Vec2::new(p, 0.0);
    let crack = CrackLine::new(bottom, Vec2::new(top, 1.0));
    let n = crack.normal;
    let c = n.dot(bottom);
    let rect = rectangle(l);
    let left = clip_half_plane(&rect, n, c);
    let right = clip_half_plane(&rect, -n, -c);
    Ok(ContinuumDisplacement {
        pieces: vec![
            Piece::constant(left, Vec2::new(0.0, s)),
            Piece::constant(right, Vec2::new(problem.a * l, t)),
        ],
        crack: vec![crack],
        l,
    })
}

/// Bottom point `p` of the cleavage crack whose midpoint sits at `x1 = l/2`.
pub fn centered_crack_p(problem: &CleavageProblem) -> Result<f64> {
    let v = problem.cleavage()?.v_gamma;
    Ok(0.5 * (problem.l - v.x / v.y))
}

/// The cleavage crack along `v_γ` through `(p,0)`.
pub fn build_u_cr(problem: &CleavageProblem, p: f64, s: f64, t: f64) -> Result<ContinuumDisplacement> {
    let cd = problem.cleavage()?;
    build_straight_crack(problem, p, cd.v_gamma, s, t)
}

/// Crack along the graph `x1 = h(x2)` of a piecewise linear `h` given by
/// knots `(x2, h)` from `x2 = 0` to `x2 = 1`; only for the unrotated lattice.
pub fn build_u_cr_symmetric(problem: &CleavageProblem, knots: &[(f64, f64)], s: f64, t: f64) -> Result<ContinuumDisplacement> {
    if problem.phi != 0.0 {
        return Err(Error::Precondition("graph cracks need phi = 0".into()));
    }
    let l = problem.l;
    if knots.len() < 2 || knots[0].0 != 0.0 || knots[knots.len() - 1].0 != 1.0 {
        return Err(Error::Precondition("knots must run from x2 = 0 to x2 = 1".into()));
    }
    let max_slope = 1.0 / SQRT3;
    for w in knots.windows(2) {
        let (y0, h0) = w[0];
        let (y1, h1) = w[1];
        if !(y1 > y0) {
            return Err(Error::Precondition("knot heights must increase".into()));
        }
        let slope = (h1 - h0) / (y1 - y0);
        if slope.abs() > max_slope * (1.0 + 1e-12) {
            return Err(Error::Precondition(format!("slope {slope} exceeds 1/sqrt(3)")));
        }
    }
    if knots.iter().any(|&(_, h)| !(0.0..=l).contains(&h)) {
        return Err(Error::Precondition("h must take values in [0, l]".into()));
    }
    let graph: Vec<Vec2> = knots.iter().map(|&(y, h)| Vec2::new(h, y)).collect();
    let mut left = vec![Vec2::new(0.0, 0.0)];
    left.extend(graph.iter().copied());
    left.push(Vec2::new(0.0, 1.0));
    let mut right = vec![Vec2::new(l, 0.0), Vec2::new(l, 1.0)];
    right.extend(graph.iter().rev().copied());
    let crack = graph.windows(2).map(|w| CrackLine::new(w[0], w[1])).collect();
    Ok(ContinuumDisplacement {
        pieces: vec![
            Piece::constant(left, Vec2::new(0.0, s)),
            Piece::constant(right, Vec2::new(problem.a * l, t)),
        ],
        crack,
        l,
    })
}

/// `P(γ, ν)`, the surplus in the anisotropic density bound.
pub fn p_gamma(cd: &CleavageData, nu: Vec2) -> f64 {
    if !cd.unique {
        (SQRT3 * nu.y.abs() - nu.x.abs()).max(0.0)
    } else {
        let g = cd.gamma;
        (1.0 - SQRT3 * libm::sqrt((1.0 - g * g).max(0.0)) / g) * cd.v_gamma.dot(nu).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceBound {
    /// `Σ_v |v·ν|`.
    pub lhs: f64,
    /// `(√3/γ)|e1·ν| + P(γ,ν)`.
    pub rhs: f64,
    pub p: f64,
}

pub fn surface_density_bound(phi: f64, nu: Vec2) -> Result<SurfaceBound> {
    if (nu.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::Domain("nu must be a unit vector".into()));
    }
    let cd = gamma_of(phi)?;
    let vecs = lattice_vectors(phi)?;
    let lhs = vecs.all().iter().map(|v| v.dot(nu).abs()).sum();
    let p = p_gamma(&cd, nu);
    Ok(SurfaceBound { lhs, rhs: SQRT3 / cd.gamma * nu.x.abs() + p, p })
}

/// Right-hand side of the slicing estimate:
/// `Σ (α/√3)|P| a11² + (2β/γ) ∫ #S^{x2} dx2 + Σ |J| (2β/√3) P(γ,ν)`.
pub fn slicing_lower_bound(u: &ContinuumDisplacement, problem: &CleavageProblem) -> Result<f64> {
    u.validate()?;
    let cd = problem.cleavage()?;
    let bulk: f64 = u
        .pieces
        .iter()
        .map(|p| area(&p.polygon) * problem.alpha / SQRT3 * p.a.m[0][0] * p.a.m[0][0])
        .sum();
    let slices: f64 = u.crack.iter().map(|c| (c.q.y - c.p.y).abs()).sum();
    let extra: f64 = u
        .crack
        .iter()
        .map(|c| c.length() * 2.0 * problem.beta / SQRT3 * p_gamma(&cd, c.normal))
        .sum();
    Ok(bulk + 2.0 * problem.beta / cd.gamma * slices + extra)
}

/// Energies of straight cracks through `(p,0)` at the given angles to `e1`;
/// angles whose line misses the top side are skipped.
pub fn straight_crack_scan(problem: &CleavageProblem, p: f64, angles: &[f64]) -> Result<Vec<(f64, f64)>> {
    let vecs = problem.vectors()?;
    let mut out = Vec::new();
    for &th in angles {
        let dir = Vec2::new(libm::cos(th), libm::sin(th));
        if let Ok(u) = build_straight_crack(problem, p, dir, 0.0, 0.0) {
            out.push((th, energy_limit(&u, problem.alpha, problem.beta, &vecs)?.total));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_problem(a: f64) -> CleavageProblem {
        CleavageProblem { alpha: 1.0, beta: 1.0, l: 1.0, phi: 0.0, a }
    }

    #[test]
    fn zero_displacement_has_zero_energy() {
        let p = unit_problem(0.0);
        let u = build_u_el(&p, 0.0);
        let e = energy_limit(&u, 1.0, 1.0, &p.vectors().unwrap()).unwrap();
        assert_eq!(e.total, 0.0);
    }

    #[test]
    fn elastic_candidate_energy() {
        let p = CleavageProblem { alpha: 1.3, beta: 0.7, l: 1.8, phi: 0.3, a: 0.9 };
        let u = build_u_el(&p, 0.4);
        let e = energy_limit(&u, p.alpha, p.beta, &p.vectors().unwrap()).unwrap();
        let exact = p.alpha * p.l * p.a * p.a / SQRT3;
        assert!((e.total - exact).abs() <= 1e-12 * exact);
        assert_eq!(u.pieces[0].a.m[0][0], p.a);
        assert!((quadratic_form_q(&u.pieces[0].a, p.alpha) - p.alpha * p.a * p.a / 2.0).abs() < 1e-15);
    }

    #[test]
    fn crack_candidate_energy_and_length() {
        let p = CleavageProblem { alpha: 1.0, beta: 1.2, l: 2.0, phi: 0.3, a: 3.0 };
        let cd = p.cleavage().unwrap();
        let u = build_u_cr(&p, 0.7, 0.0, 0.5).unwrap();
        let e = energy_limit(&u, p.alpha, p.beta, &p.vectors().unwrap()).unwrap();
        assert_eq!(e.bulk, 0.0);
        assert!((e.total - 2.0 * p.beta / cd.gamma).abs() <= 1e-12 * e.total);
        assert!((u.crack[0].length() - 1.0 / cd.gamma).abs() < 1e-12);
    }

    #[test]
    fn crack_through_vertical_side_is_rejected() {
        let p = CleavageProblem { alpha: 1.0, beta: 1.0, l: 1.0, phi: 0.3, a: 1.0 };
        assert!(matches!(build_u_cr(&p, 0.95, 0.0, 0.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn critical_load_examples() {
        let p = unit_problem(1.0);
        assert!((a_crit(&p).unwrap() - 2.0).abs() < 1e-12);
        assert!((min_energy(&p).unwrap() - 1.0 / SQRT3).abs() < 1e-15);
        assert_eq!(min_energy(&unit_problem(0.0)).unwrap(), 0.0);
        assert!((min_energy(&unit_problem(1e3)).unwrap() - 4.0 / SQRT3).abs() < 1e-12);
        let doubled = CleavageProblem { l: 2.0, ..p };
        assert!((a_crit(&doubled).unwrap() * core::f64::consts::SQRT_2 - 2.0).abs() < 1e-12);
        assert!(minimizing_branch(&unit_problem(2.0)).is_err());
        assert_eq!(minimizing_branch(&unit_problem(1.98)).unwrap(), Branch::Elastic);
        assert_eq!(minimizing_branch(&unit_problem(2.02)).unwrap(), Branch::Crack);
    }

    #[test]
    fn symmetric_graph_cracks_cost_the_same() {
        let p = CleavageProblem { alpha: 1.0, beta: 0.8, l: 1.5, phi: 0.0, a: 3.0 };
        let s = 1.0 / SQRT3;
        let knots = [(0.0, 0.6), (0.25, 0.6 + 0.25 * s), (0.5, 0.6), (0.75, 0.6 + 0.25 * s), (1.0, 0.6)];
        let u = build_u_cr_symmetric(&p, &knots, 0.0, 0.0).unwrap();
        let e = energy_limit(&u, p.alpha, p.beta, &p.vectors().unwrap()).unwrap();
        assert!((e.total - 4.0 * p.beta / SQRT3).abs() < 1e-12);
        let straight = build_u_cr_symmetric(&p, &[(0.0, 0.3), (1.0, 0.3)], 0.0, 0.0).unwrap();
        let e = energy_limit(&straight, p.alpha, p.beta, &p.vectors().unwrap()).unwrap();
        assert!((e.total - 4.0 * p.beta / SQRT3).abs() < 1e-12);
        assert!(build_u_cr_symmetric(&p, &[(0.0, 0.3), (0.5, 0.8), (1.0, 0.8)], 0.0, 0.0).is_err());
    }

    #[test]
    fn overlapping_pieces_are_rejected() {
        let p = unit_problem(1.0);
        let mut u = build_u_el(&p, 0.0);
        u.pieces.push(u.pieces[0].clone());
        assert!(matches!(energy_limit(&u, 1.0, 1.0, &p.vectors().unwrap()), Err(Error::Geometry(_))));
    }

    #[test]
    fn field_limit_examples() {
        let p = CleavageProblem { alpha: 1.0, beta: 1.0, l: 1.3, phi: 0.2, a: 0.5 };
        let u = build_u_el(&p, 0.0);
        let e = energy_limit(&u, 1.0, 1.0, &p.vectors().unwrap()).unwrap().total;
        assert!((energy_f_limit(&u, &p, 0.9).unwrap() - e).abs() < 1e-15);
        let w = ContinuumDisplacement {
            pieces: vec![Piece { polygon: rectangle(p.l), a: Mat2::new(0.0, 1.0, -1.0, 0.0), b: Vec2::ZERO }],
            crack: Vec::new(),
            l: p.l,
        };
        let ew = energy_limit(&w, 1.0, 1.0, &p.vectors().unwrap()).unwrap().total;
        assert!((energy_f_limit(&w, &p, 0.9).unwrap() - ew - 0.45 * p.l).abs() < 1e-12);
        assert_eq!(energy_f_limit(&w, &p, 0.0).unwrap(), ew);
    }

    #[test]
    fn density_bound_examples() {
        let b = surface_density_bound(0.0, Vec2::E1).unwrap();
        assert!((b.lhs - 2.0).abs() < 1e-15 && (b.rhs - 2.0).abs() < 1e-15);
        let b = surface_density_bound(0.0, Vec2::E2).unwrap();
        assert!((b.lhs - SQRT3).abs() < 1e-15 && (b.rhs - SQRT3).abs() < 1e-15);
    }

    #[test]
    fn slicing_bound_is_tight_on_minimizers() {
        let p = CleavageProblem { alpha: 1.0, beta: 1.0, l: 2.0, phi: 0.3, a: 1.2 };
        let vecs = p.vectors().unwrap();
        let el = build_u_el(&p, 0.0);
        let cr = build_u_cr(&p, 0.5, 0.0, 0.0).unwrap();
        for u in [el, cr] {
            let b = slicing_lower_bound(&u, &p).unwrap();
            let e = energy_limit(&u, p.alpha, p.beta, &vecs).unwrap().total;
            assert!((b - e).abs() <= 1e-12 * e);
        }
    }

    #[test]
    fn two_parallel_cracks_double_the_slice_count() {
        let p = CleavageProblem { alpha: 1.0, beta: 1.0, l: 2.0, phi: 0.3, a: 1.2 };
        let cd = p.cleavage().unwrap();
        let d = cd.v_gamma;
        let top = |x: f64| x + d.x / d.y;
        let n = orient_normal(d.perp());
        let rect = rectangle(p.l);
        let (p1, p2) = (0.3, 1.0);
        let c1 = n.dot(Vec2::new(p1, 0.0));
        let c2 = n.dot(Vec2::new(p2, 0.0));
        let left = clip_half_plane(&rect, n, c1);
        let mid = clip_half_plane(&clip_half_plane(&rect, -n, -c1), n, c2);
        let right = clip_half_plane(&rect, -n, -c2);
        let u = ContinuumDisplacement {
            pieces: vec![
                Piece::constant(left, Vec2::ZERO),
                Piece::constant(mid, Vec2::new(1.0, 0.0)),
                Piece::constant(right, Vec2::new(2.0, 0.0)),
            ],
            crack: vec![
                CrackLine::new(Vec2::new(p1, 0.0), Vec2::new(top(p1), 1.0)),
                CrackLine::new(Vec2::new(p2, 0.0), Vec2::new(top(p2), 1.0)),
            ],
            l: p.l,
        };
        let b = slicing_lower_bound(&u, &p).unwrap();
        assert!(b >= 4.0 * p.beta / cd.gamma - 1e-12);
        assert!(b <= energy_limit(&u, p.alpha, p.beta, &p.vectors().unwrap()).unwrap().total + 1e-12);
    }

    #[test]
    fn cleavage_direction_is_the_strict_minimum_among_straight_cracks() {
        let p = CleavageProblem { alpha: 1.0, beta: 1.0, l: 2.0, phi: 0.3, a: 3.0 };
        let cd = p.cleavage().unwrap();
        let th0 = libm::atan2(cd.v_gamma.y, cd.v_gamma.x);
        let angles: Vec<f64> = (-40..=40).map(|k| th0 + k as f64 * 0.01).collect();
        let scan = straight_crack_scan(&p, 0.5, &angles).unwrap();
        let best = scan.iter().cloned().fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        assert!((best.0 - th0).abs() < 1e-9);
        for &(th, e) in &scan {
            if (th - th0).abs() > 1e-6 {
                assert!(e > best.1);
            }
        }
    }

    proptest! {
        #[test]
        fn density_inequality(phi in 0.0f64..1.0471, th in -3.2f64..3.2) {
            let b = surface_density_bound(phi, Vec2::new(libm::cos(th), libm::sin(th))).unwrap();
            prop_assert!(b.lhs - b.rhs >= -1e-12);
        }

        #[test]
        fn branch_energies_cross_at_critical_load(
            alpha in 0.2f64..3.0, beta in 0.2f64..3.0, l in 0.6f64..3.0, phi in 0.0f64..1.04,
        ) {
            let p = CleavageProblem { alpha, beta, l, phi, a: 0.0 };
            let ac = a_crit(&p).unwrap();
            let at = p.with_a(ac);
            let (e, c) = (at.elastic_energy(), at.crack_energy().unwrap());
            prop_assert!((e - c).abs() <= 1e-12 * c);
            prop_assert!(p.with_a(0.99 * ac).elastic_energy() < c);
            prop_assert!(p.with_a(1.01 * ac).elastic_energy() > c);
        }

        #[test]
        fn slicing_bound_below_energy(p0 in 0.05f64..1.0, slope in -0.55f64..0.55, a in 0.0f64..3.0) {
            let prob = CleavageProblem { alpha: 1.0, beta: 1.0, l: 2.0, phi: 0.3, a };
            let dir = Vec2::new(slope, 1.0);
            let u = build_straight_crack(&prob, p0, dir, 0.0, 0.0);
            prop_assume!(u.is_ok());
            let u = u.unwrap();
            let b = slicing_lower_bound(&u, &prob).unwrap();
            let e = energy_limit(&u, 1.0, 1.0, &prob.vectors().unwrap()).unwrap().total;
            prop_assert!(b <= e + 1e-12);
        }
    }
}
