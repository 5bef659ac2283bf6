//! Discrete energies of a displacement on the lattice and their gradients.
//!
//! Displacements `u` live in the rescaled frame `y = x + √ε u`. Spring
//! stretches are evaluated as `|v + Δu/√ε| - 1` without forming `y`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::lattice::{classify_edges, Domain, LatticeSpec, TriangleMesh, TRIANGLE_AREA_FACTOR};
use crate::material::{f_kappa, f_kappa_smoothed, mhat1_gradient, mhat_extended, MaterialParams, PairPotential};
use crate::math::{stretch_minus_one, tree_sum, Mat2, Vec2};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Displacement {
    pub spec: LatticeSpec,
    pub values: Vec<Vec2>,
}

impl Displacement {
    pub fn new(mesh: &TriangleMesh, values: Vec<Vec2>) -> Result<Self> {
        if values.len() != mesh.num_points() {
            return Err(Error::Domain(format!(
                "{} displacement values for {} lattice points",
                values.len(),
                mesh.num_points()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite displacement at point {i}")));
        }
        Ok(Displacement { spec: mesh.spec, values })
    }

    pub fn zeros(mesh: &TriangleMesh) -> Self {
        Displacement { spec: mesh.spec, values: vec![Vec2::ZERO; mesh.num_points()] }
    }

    pub fn from_fn(mesh: &TriangleMesh, f: impl Fn(Vec2) -> Vec2) -> Self {
        Displacement { spec: mesh.spec, values: mesh.points.iter().map(|&p| f(p)).collect() }
    }

    /// Deformed positions `x + √ε u(x)`.
    pub fn deformation(&self, mesh: &TriangleMesh) -> Vec<Vec2> {
        let se = libm::sqrt(mesh.eps());
        mesh.points.iter().zip(&self.values).map(|(&x, &u)| x + u.scale(se)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryData {
    /// `g1 = 0` near `x1 = 0` and `g1 = a l` near `x1 = l`, linear in the
    /// middle third.
    Cleavage { a: f64, l: f64 },
    Affine { g: Mat2, b: Vec2 },
    /// One prescribed value per lattice point.
    Values(Vec<Vec2>),
}

/// Dirichlet data `g` on the layer `dist(x, Ω̃ ∖ Ω) ≤ ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCondition {
    pub data: BoundaryData,
    /// Which displacement components are prescribed.
    pub components: [bool; 2],
    pub lipschitz_bound: f64,
}

impl BoundaryCondition {
    /// Uniaxial extension: only the first component is prescribed.
    pub fn cleavage(a: f64, l: f64) -> Self {
        BoundaryCondition {
            data: BoundaryData::Cleavage { a, l },
            components: [true, false],
            lipschitz_bound: 3.0 * libm::fabs(a) * (1.0 + 1e-12),
        }
    }

    pub fn affine(g: Mat2, b: Vec2) -> Self {
        BoundaryCondition {
            data: BoundaryData::Affine { g, b },
            components: [true, true],
            lipschitz_bound: g.norm() * (1.0 + 1e-12),
        }
    }

    pub fn zero() -> Self {
        Self::affine(Mat2::ZERO, Vec2::ZERO)
    }

    pub fn eval(&self, p: Vec2, index: usize) -> Vec2 {
        match &self.data {
            BoundaryData::Cleavage { a, l } => {
                let z = ((p.x - l / 3.0) / (l / 3.0)).clamp(0.0, 1.0);
                Vec2::new(a * l * z, 0.0)
            }
            BoundaryData::Affine { g, b } => *g * p + *b,
            BoundaryData::Values(v) => v[index],
        }
    }

    /// Largest difference quotient of `g` over nearest-neighbour pairs;
    /// errors if it exceeds `lipschitz_bound`.
    pub fn check_lipschitz(&self, mesh: &TriangleMesh) -> Result<f64> {
        if let BoundaryData::Values(v) = &self.data {
            if v.len() != mesh.num_points() {
                return Err(Error::Domain("boundary values do not match the mesh".into()));
            }
        }
        let mut lip: f64 = 0.0;
        for e in &mesh.edges {
            let [i, j] = e.ends;
            let d = self.eval(mesh.points[j], j) - self.eval(mesh.points[i], i);
            lip = lip.max(d.norm() / mesh.eps());
        }
        if lip > self.lipschitz_bound {
            return Err(Error::Domain(format!(
                "boundary data has slope {lip}, above the bound {}",
                self.lipschitz_bound
            )));
        }
        Ok(lip)
    }

    /// Per-degree-of-freedom mask, `true` where the value is free.
    pub fn free_mask(&self, mesh: &TriangleMesh) -> Vec<[bool; 2]> {
        mesh.dirichlet_mask
            .iter()
            .map(|&d| [!(d && self.components[0]), !(d && self.components[1])])
            .collect()
    }
}

/// Overwrite prescribed components on Dirichlet points.
pub fn apply_bc(u: &Displacement, bc: &BoundaryCondition, mesh: &TriangleMesh) -> Displacement {
    let mut out = u.clone();
    apply_bc_in_place(&mut out.values, bc, mesh);
    out
}

pub fn apply_bc_in_place(values: &mut [Vec2], bc: &BoundaryCondition, mesh: &TriangleMesh) {
    for (i, v) in values.iter_mut().enumerate() {
        if !mesh.dirichlet_mask[i] {
            continue;
        }
        let g = bc.eval(mesh.points[i], i);
        if bc.components[0] {
            v.x = g.x;
        }
        if bc.components[1] {
            v.y = g.y;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBreakdown {
    pub bulk: f64,
    pub boundary: f64,
    pub penalty: f64,
    pub field: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(bulk: f64, boundary: f64, penalty: f64, field: f64) -> Self {
        EnergyBreakdown { bulk, boundary, penalty, field, total: bulk + boundary + penalty + field }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyMode {
    /// `ℰ_ε = ε E_ε`.
    Plain,
    /// `ℰ^χ_ε`, adding `ε Σ χ`.
    Chi,
    /// `ℱ_ε = ℰ_ε + (1/ε)∫_{Ω_ε} f_κ`.
    Field,
    /// `ℰ^χ_ε + (1/ε)∫_{Ω_ε} f_κ`.
    FieldChi,
    /// `ℰ^tot_ε = ℰ^χ_ε - (1/ε)∫_{Ω_ε} κ e1·m̂`.
    Magnetic,
}

impl EnergyMode {
    pub fn name(&self) -> &'static str {
        match self {
            EnergyMode::Plain => "plain",
            EnergyMode::Chi => "chi",
            EnergyMode::Field => "F",
            EnergyMode::FieldChi => "F+chi",
            EnergyMode::Magnetic => "total-magnetic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "plain" => EnergyMode::Plain,
            "chi" => EnergyMode::Chi,
            "F" => EnergyMode::Field,
            "F+chi" => EnergyMode::FieldChi,
            "total-magnetic" => EnergyMode::Magnetic,
            _ => return None,
        })
    }

    fn has_chi(&self) -> bool {
        matches!(self, EnergyMode::Chi | EnergyMode::FieldChi | EnergyMode::Magnetic)
    }
}

/// Per-cell affine interpolation: `f = Id + √ε g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGradient {
    pub f: Mat2,
    pub g: Mat2,
}

fn edge_matrix_inverse(mesh: &TriangleMesh, verts: [usize; 3]) -> Result<Mat2> {
    let [a, b, c] = verts.map(|i| mesh.points[i]);
    Mat2::from_cols(b - a, c - a)
        .inverse()
        .ok_or_else(|| Error::Internal("degenerate triangle".into()))
}

fn cell_g(u: &[Vec2], verts: [usize; 3], xinv: &Mat2) -> Mat2 {
    let [a, b, c] = verts;
    Mat2::from_cols(u[b] - u[a], u[c] - u[a]) * *xinv
}

/// `(ỹ)_Δ` and `(ũ)_Δ` on every cell, in mesh order.
pub fn interpolate_gradients(u: &Displacement, mesh: &TriangleMesh) -> Result<Vec<CellGradient>> {
    if u.values.len() != mesh.num_points() {
        return Err(Error::Domain("displacement does not match the mesh".into()));
    }
    let se = libm::sqrt(mesh.eps());
    mesh.triangles
        .iter()
        .map(|t| {
            let xinv = edge_matrix_inverse(mesh, t.vertices)?;
            let g = cell_g(&u.values, t.vertices, &xinv);
            Ok(CellGradient { f: Mat2::IDENTITY + g.scale(se), g })
        })
        .collect()
}

/// Unscaled energy `E_ε(y)` of a deformation given by point positions, in
/// both the triangle-plus-boundary form and the plain pair-sum form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSumCheck {
    pub breakdown: EnergyBreakdown,
    pub pair_sum: f64,
}

pub fn energy_e(y: &[Vec2], mesh: &TriangleMesh, pot: &PairPotential, domain: Domain) -> PairSumCheck {
    let eps = mesh.eps();
    let spring = |a: usize, b: usize| pot.value((y[b] - y[a]).norm() / eps);
    let bulk: Vec<f64> = mesh
        .triangles
        .iter()
        .filter(|t| t.in_domain(domain))
        .map(|t| 0.5 * mesh.sides(t).iter().map(|&(a, b)| spring(a, b)).sum::<f64>())
        .collect();
    let weights = classify_edges(mesh, domain);
    let boundary: Vec<f64> = mesh
        .edges
        .iter()
        .zip(&weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(e, &w)| 2.0 * w * spring(e.ends[0], e.ends[1]))
        .collect();
    let pairs: Vec<f64> = mesh
        .edges
        .iter()
        .filter(|e| e.in_domain(domain))
        .map(|e| spring(e.ends[0], e.ends[1]))
        .collect();
    PairSumCheck {
        breakdown: EnergyBreakdown::new(tree_sum(&bulk), tree_sum(&boundary), 0.0, 0.0),
        pair_sum: tree_sum(&pairs),
    }
}

/// The rescaled discrete energies on one mesh.
#[derive(Debug, Clone)]
pub struct EnergyModel<'a> {
    pub mesh: &'a TriangleMesh,
    pub material: &'a MaterialParams,
    pub mode: EnergyMode,
    pub domain: Domain,
    /// Include the `¼`/`½`-weighted pair term; off gives the bulk-only value.
    pub include_boundary: bool,
    xinv: Vec<Mat2>,
    weights: Vec<f64>,
}

impl<'a> EnergyModel<'a> {
    pub fn new(mesh: &'a TriangleMesh, material: &'a MaterialParams, mode: EnergyMode) -> Result<Self> {
        Self::with_domain(mesh, material, mode, Domain::Omega)
    }

    pub fn with_domain(
        mesh: &'a TriangleMesh,
        material: &'a MaterialParams,
        mode: EnergyMode,
        domain: Domain,
    ) -> Result<Self> {
        let xinv = mesh
            .triangles
            .iter()
            .map(|t| edge_matrix_inverse(mesh, t.vertices))
            .collect::<Result<Vec<_>>>()?;
        Ok(EnergyModel {
            mesh,
            material,
            mode,
            domain,
            include_boundary: true,
            xinv,
            weights: classify_edges(mesh, domain),
        })
    }

    fn check_len(&self, u: &[Vec2]) -> Result<()> {
        if u.len() != self.mesh.num_points() {
            return Err(Error::Domain("displacement does not match the mesh".into()));
        }
        Ok(())
    }

    /// The reported energy, with the sharp cutoff in `f_κ`.
    pub fn energy(&self, u: &[Vec2]) -> EnergyBreakdown {
        self.evaluate(u, false)
    }

    /// The energy the solver minimizes: `f_κ` uses the smoothed cutoff when
    /// a band is configured.
    pub fn objective(&self, u: &[Vec2]) -> f64 {
        self.evaluate(u, true).total
    }

    fn evaluate(&self, u: &[Vec2], smooth: bool) -> EnergyBreakdown {
        let mesh = self.mesh;
        let eps = mesh.eps();
        let se = libm::sqrt(eps);
        let vecs = mesh.vectors.all();
        let pot = &self.material.potential;
        let spring = |a: usize, b: usize, dir: usize| {
            pot.value_stretch(stretch_minus_one(vecs[dir], (u[b] - u[a]).scale(1.0 / se)))
        };

        let mut bulk = Vec::with_capacity(mesh.triangles.len());
        let mut penalty = Vec::new();
        let mut field = Vec::new();
        let area_scale = TRIANGLE_AREA_FACTOR * eps;
        let band = if smooth { self.material.smooth_fk_band } else { None };
        for (t, xinv) in mesh.triangles.iter().zip(&self.xinv) {
            let in_dom = t.in_domain(self.domain);
            if in_dom {
                let sides = mesh.sides(t);
                bulk.push(0.5 * (0..3).map(|k| spring(sides[k].0, sides[k].1, k)).sum::<f64>());
            }
            let needs_f = (in_dom && self.mode.has_chi()) || (t.inside && self.mode != EnergyMode::Plain && self.mode != EnergyMode::Chi);
            if !needs_f {
                continue;
            }
            let f = Mat2::IDENTITY + cell_g(u, t.vertices, xinv).scale(se);
            if in_dom && self.mode.has_chi() {
                penalty.push(self.material.chi.value(&f));
            }
            if t.inside {
                match self.mode {
                    EnergyMode::Field | EnergyMode::FieldChi => field.push(match band {
                        Some(b) => f_kappa_smoothed(&f, &self.material.magnet, b).0,
                        None => f_kappa(&f, &self.material.magnet),
                    }),
                    EnergyMode::Magnetic => field.push(-self.material.magnet.kappa * mhat_extended(&f).x),
                    _ => {}
                }
            }
        }
        let boundary = if self.include_boundary {
            let terms: Vec<f64> = mesh
                .edges
                .iter()
                .zip(&self.weights)
                .filter(|(_, &w)| w > 0.0)
                .map(|(e, &w)| 2.0 * w * spring(e.ends[0], e.ends[1], e.dir))
                .collect();
            tree_sum(&terms)
        } else {
            0.0
        };
        EnergyBreakdown::new(
            eps * tree_sum(&bulk),
            eps * boundary,
            eps * tree_sum(&penalty),
            area_scale * tree_sum(&field),
        )
    }

    /// Gradient of [`Self::objective`] with respect to every point value.
    pub fn gradient(&self, u: &[Vec2]) -> Result<Vec<Vec2>> {
        Ok(self.value_and_gradient(u)?.1)
    }

    pub fn value_and_gradient(&self, u: &[Vec2]) -> Result<(f64, Vec<Vec2>)> {
        self.check_len(u)?;
        let pot = &self.material.potential;
        if !pot.is_differentiable() {
            return Err(Error::Config("the tabulated potential cannot be used with gradients".into()));
        }
        let with_field = matches!(self.mode, EnergyMode::Field | EnergyMode::FieldChi);
        let band = self.material.smooth_fk_band;
        if with_field && band.is_none() {
            return Err(Error::Config("gradients of f_kappa need a smoothing band".into()));
        }
        let mesh = self.mesh;
        let eps = mesh.eps();
        let se = libm::sqrt(eps);
        let vecs = mesh.vectors.all();
        let mut grad = vec![Vec2::ZERO; u.len()];

        // springs: d/dΔu [ε c W(|v + Δu/√ε|)] = √ε c W'(r) w/r
        let add_spring = |grad: &mut [Vec2], a: usize, b: usize, dir: usize, c: f64| -> f64 {
            let d = (u[b] - u[a]).scale(1.0 / se);
            let s = stretch_minus_one(vecs[dir], d);
            let w = vecs[dir] + d;
            let r = 1.0 + s;
            let dw = pot.derivative_stretch(s).unwrap_or(0.0);
            if r > 0.0 {
                let g = w.scale(se * c * dw / r);
                grad[b] += g;
                grad[a] -= g;
            }
            c * pot.value_stretch(s)
        };

        let mut bulk = Vec::with_capacity(mesh.triangles.len());
        let mut cell = Vec::new();
        let area_scale = TRIANGLE_AREA_FACTOR * eps;
        for (t, xinv) in mesh.triangles.iter().zip(&self.xinv) {
            let in_dom = t.in_domain(self.domain);
            if in_dom {
                let sides = mesh.sides(t);
                let mut e = 0.0;
                for (k, &(a, b)) in sides.iter().enumerate() {
                    e += add_spring(&mut grad, a, b, k, 0.5);
                }
                bulk.push(e);
            }
            let chi_here = in_dom && self.mode.has_chi();
            let field_here = t.inside && (with_field || self.mode == EnergyMode::Magnetic);
            if !chi_here && !field_here {
                continue;
            }
            let f = Mat2::IDENTITY + cell_g(u, t.vertices, xinv).scale(se);
            let mut value = 0.0;
            let mut dfe = Mat2::ZERO;
            if chi_here {
                value += eps * self.material.chi.value(&f);
                dfe += self.material.chi.gradient(&f).scale(eps);
            }
            if field_here {
                if with_field {
                    let (v, d) = f_kappa_smoothed(&f, &self.material.magnet, band.unwrap_or(0.1));
                    value += area_scale * v;
                    dfe += d.scale(area_scale);
                } else {
                    let k = self.material.magnet.kappa;
                    value -= area_scale * k * mhat_extended(&f).x;
                    dfe += mhat1_gradient(&f).scale(-area_scale * k);
                }
            }
            cell.push(value);
            // dE/dD = √ε (dE/dF) X⁻ᵀ, D = [u_b - u_a, u_c - u_a]
            let dd = dfe.scale(se) * xinv.transpose();
            let [a, b, c] = t.vertices;
            let cb = dd.col(0);
            let cc = dd.col(1);
            grad[b] += cb;
            grad[c] += cc;
            grad[a] -= cb + cc;
        }
        let mut boundary = Vec::new();
        if self.include_boundary {
            for (e, &w) in mesh.edges.iter().zip(&self.weights) {
                if w > 0.0 {
                    boundary.push(add_spring(&mut grad, e.ends[0], e.ends[1], e.dir, 2.0 * w));
                }
            }
        }
        let total = eps * (tree_sum(&bulk) + tree_sum(&boundary)) + tree_sum(&cell);
        Ok((total, grad))
    }
}

/// `ℰ_ε` and its relatives for a displacement, summed over `C_ε`.
pub fn energy_rescaled(
    u: &Displacement,
    mesh: &TriangleMesh,
    material: &MaterialParams,
    mode: EnergyMode,
) -> Result<EnergyBreakdown> {
    let model = EnergyModel::new(mesh, material, mode)?;
    model.check_len(&u.values)?;
    Ok(model.energy(&u.values))
}

pub fn gradient(u: &Displacement, mesh: &TriangleMesh, material: &MaterialParams, mode: EnergyMode) -> Result<Vec<Vec2>> {
    EnergyModel::new(mesh, material, mode)?.gradient(&u.values)
}

/// Zero the gradient on prescribed degrees of freedom.
pub fn project_gradient(grad: &mut [Vec2], free: &[[bool; 2]]) {
    for (g, f) in grad.iter_mut().zip(free) {
        if !f[0] {
            g.x = 0.0;
        }
        if !f[1] {
            g.y = 0.0;
        }
    }
}

/// `∫_{Ω_ε} |∇ũ|`, the L¹ norm of the interpolated displacement gradient.
pub fn gradient_l1_norm(u: &Displacement, mesh: &TriangleMesh) -> Result<f64> {
    let cells = interpolate_gradients(u, mesh)?;
    let terms: Vec<f64> = mesh
        .triangles
        .iter()
        .zip(&cells)
        .filter(|(t, _)| t.inside)
        .map(|(_, c)| c.g.norm())
        .collect();
    Ok(mesh.triangle_area() * tree_sum(&terms))
}

/// The field-energy renormalization on one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Renormalization {
    /// `ℰ^χ_ε + (1/ε)∫ f_κ`.
    pub f_eps: f64,
    /// `ℰ^χ_ε + ℰ^mag_ε`.
    pub e_tot: f64,
    /// `(κ/ε)|Ω_ε|`.
    pub shift: f64,
    /// Largest `|(ỹ)_Δ|` over `C_ε`.
    pub max_norm: f64,
}

impl Renormalization {
    /// `ℰ^tot_ε` and the shift cancel to leave `ℱ_ε`, so residuals are
    /// measured against the largest of the three terms.
    fn scale(&self) -> f64 {
        self.f_eps.abs().max(self.e_tot.abs()).max(self.shift.abs()).max(1e-300)
    }

    /// Relative residual of `ℱ_ε = ℰ^tot_ε - (κ/ε)|Ω_ε|`.
    pub fn residual_minus(&self) -> f64 {
        libm::fabs(self.f_eps - (self.e_tot - self.shift)) / self.scale()
    }

    /// Relative residual of `ℱ_ε = ℰ^tot_ε + (κ/ε)|Ω_ε|`.
    pub fn residual_plus(&self) -> f64 {
        libm::fabs(self.f_eps - (self.e_tot + self.shift)) / self.scale()
    }
}

pub fn renormalization(u: &Displacement, mesh: &TriangleMesh, material: &MaterialParams) -> Result<Renormalization> {
    let f_eps = energy_rescaled(u, mesh, material, EnergyMode::FieldChi)?.total;
    let e_tot = energy_rescaled(u, mesh, material, EnergyMode::Magnetic)?.total;
    let shift = material.magnet.kappa / mesh.eps() * mesh.omega_eps_area();
    let cells = interpolate_gradients(u, mesh)?;
    let max_norm = mesh
        .triangles
        .iter()
        .zip(&cells)
        .filter(|(t, _)| t.inside)
        .map(|(_, c)| c.f.norm())
        .fold(0.0, f64::max);
    Ok(Renormalization { f_eps, e_tot, shift, max_norm })
}
