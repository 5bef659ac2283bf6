//! Pair potentials, the cell energy, the orientation penalty `χ`, the
//! magnetization `m̂` with its field energy `f_κ`, and the linearized forms.

use alloc::format;
use alloc::vec::Vec;

use crate::lattice::LatticeVectors;
use crate::math::{smoothstep, smoothstep_derivative, stretch_minus_one, Mat2, Vec2};
use crate::{Error, Result};

const SQRT2: f64 = core::f64::consts::SQRT_2;

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialFamily {
    /// `β(1 - exp(-α(r-1)²/(2β)))`.
    ExpWell,
    /// `β(r⁻¹² - 2r⁻⁶ + 1)`; forces `α = 72β`.
    ShiftedLennardJones,
    /// Piecewise linear through `(r, W)` knots; equal to `β` past the last one.
    Tabulated(Vec<(f64, f64)>),
}

/// A nearest-neighbour potential `W` with `W''(1) = alpha` and `W(∞) = beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairPotential {
    pub family: PotentialFamily,
    pub alpha: f64,
    pub beta: f64,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {v} must be positive and finite")))
    }
}

impl PairPotential {
    pub fn exp_well(alpha: f64, beta: f64) -> Result<Self> {
        check_positive("alpha", alpha)?;
        check_positive("beta", beta)?;
        Ok(PairPotential { family: PotentialFamily::ExpWell, alpha, beta })
    }

    pub fn shifted_lj(beta: f64) -> Result<Self> {
        check_positive("beta", beta)?;
        Ok(PairPotential { family: PotentialFamily::ShiftedLennardJones, alpha: 72.0 * beta, beta })
    }

    /// Knots must be strictly increasing in `r`, with non-negative values
    /// vanishing only at `r = 1`, which must itself be a knot.
    pub fn tabulated(knots: Vec<(f64, f64)>, alpha: f64, beta: f64) -> Result<Self> {
        check_positive("alpha", alpha)?;
        check_positive("beta", beta)?;
        if knots.len() < 2 {
            return Err(Error::Domain("a tabulated potential needs at least two knots".into()));
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::Domain("tabulated knots must be strictly increasing".into()));
            }
        }
        let mut has_rest = false;
        for &(r, v) in &knots {
            if !(r >= 0.0 && r.is_finite() && v.is_finite() && v >= 0.0) {
                return Err(Error::Domain(format!("invalid tabulated knot ({r}, {v})")));
            }
            if r == 1.0 {
                if v != 0.0 {
                    return Err(Error::Domain("tabulated W(1) must be 0".into()));
                }
                has_rest = true;
            } else if v == 0.0 {
                return Err(Error::Domain(format!("tabulated W vanishes at r = {r}")));
            }
        }
        if !has_rest {
            return Err(Error::Domain("tabulated knots must include r = 1".into()));
        }
        Ok(PairPotential { family: PotentialFamily::Tabulated(knots), alpha, beta })
    }

    pub fn is_differentiable(&self) -> bool {
        !matches!(self.family, PotentialFamily::Tabulated(_))
    }

    pub fn value(&self, r: f64) -> f64 {
        self.value_stretch(r - 1.0)
    }

    /// `W(1 + s)`, accurate for tiny `s`.
    pub fn value_stretch(&self, s: f64) -> f64 {
        match &self.family {
            PotentialFamily::ExpWell => -self.beta * libm::expm1(-self.alpha * s * s / (2.0 * self.beta)),
            PotentialFamily::ShiftedLennardJones => {
                // β(1 - r⁻⁶)², with 1 - r⁻⁶ = -expm1(-6 ln r)
                let g = -libm::expm1(-6.0 * libm::log1p(s));
                self.beta * g * g
            }
            PotentialFamily::Tabulated(knots) => tabulated_value(knots, self.beta, 1.0 + s),
        }
    }

    /// `W'(1 + s)`; `None` for non-differentiable families.
    pub fn derivative_stretch(&self, s: f64) -> Option<f64> {
        match &self.family {
            PotentialFamily::ExpWell => {
                Some(self.alpha * s * libm::exp(-self.alpha * s * s / (2.0 * self.beta)))
            }
            PotentialFamily::ShiftedLennardJones => {
                let r = 1.0 + s;
                let g = -libm::expm1(-6.0 * libm::log1p(s));
                Some(12.0 * self.beta * g * libm::pow(r, -7.0))
            }
            PotentialFamily::Tabulated(_) => None,
        }
    }

    /// `inf{W(r) : r ≥ r0}`.
    pub fn inf_beyond(&self, r0: f64) -> f64 {
        match &self.family {
            // both built-ins increase on [1, ∞)
            PotentialFamily::ExpWell | PotentialFamily::ShiftedLennardJones => {
                if r0 >= 1.0 {
                    self.value(r0)
                } else {
                    0.0
                }
            }
            PotentialFamily::Tabulated(knots) => {
                let mut m = self.beta.min(tabulated_value(knots, self.beta, r0));
                for &(r, v) in knots {
                    if r >= r0 {
                        m = m.min(v);
                    }
                }
                m
            }
        }
    }
}

fn tabulated_value(knots: &[(f64, f64)], beta: f64, r: f64) -> f64 {
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if r <= first.0 {
        return first.1;
    }
    if r >= last.0 {
        return beta;
    }
    let k = knots.partition_point(|&(x, _)| x <= r);
    let (r0, w0) = knots[k - 1];
    let (r1, w1) = knots[k];
    w0 + (w1 - w0) * (r - r0) / (r1 - r0)
}

/// `W_Δ(F) = ½ Σ_v W(|Fv|)`.
pub fn cell_energy(f: &Mat2, pot: &PairPotential, vecs: &LatticeVectors) -> f64 {
    0.5 * vecs.all().iter().map(|&v| pot.value((*f * v).norm())).sum::<f64>()
}

/// `W_Δ(Id + t G)` without forming `Id + t G`, so small `t` keeps full accuracy.
pub fn cell_energy_perturbed(g: &Mat2, t: f64, pot: &PairPotential, vecs: &LatticeVectors) -> f64 {
    0.5 * vecs
        .all()
        .iter()
        .map(|&v| pot.value_stretch(stretch_minus_one(v, (*g * v).scale(t))))
        .sum::<f64>()
}

/// `∂W_Δ/∂F`.
pub fn cell_energy_gradient(f: &Mat2, pot: &PairPotential, vecs: &LatticeVectors) -> Result<Mat2> {
    let mut d = Mat2::ZERO;
    for v in vecs.all() {
        let w = *f * v;
        let r = w.norm();
        let dw = pot
            .derivative_stretch(r - 1.0)
            .ok_or_else(|| Error::Config("tabulated potential has no gradient".into()))?;
        if r > 0.0 {
            d += w.outer(v).scale(0.5 * dw / r);
        }
    }
    Ok(d)
}

/// Linearized cell energy density, `½Q(G)` being the second-order term of
/// `W_Δ(Id + G)`.
pub fn quadratic_form_q(g: &Mat2, alpha: f64) -> f64 {
    let [[g11, g12], [g21, g22]] = g.m;
    let s = 0.5 * (g12 + g21);
    3.0 * alpha / 16.0 * (3.0 * g11 * g11 + 3.0 * g22 * g22 + 2.0 * g11 * g22 + 4.0 * s * s)
}

/// `min{Q(G) : g11 = r}` and a symmetric minimizer.
pub fn q_min_under_strain(r: f64, alpha: f64) -> (f64, Mat2) {
    (0.5 * alpha * r * r, Mat2::diag(r, -r / 3.0))
}

/// Curvature of `m̂₁` at the identity: `Q̂(G) = -((g21 - g12)/2)²`.
pub fn quadratic_form_qhat(g: &Mat2) -> f64 {
    let w = 0.5 * (g.m[1][0] - g.m[0][1]);
    -w * w
}

/// Angle of the nearest rotation, `None` when `F` is a multiple of a reflection
/// with zero rotational part.
pub fn nearest_rotation_angle(f: &Mat2) -> Option<f64> {
    let a = f.m[0][0] + f.m[1][1];
    let b = f.m[1][0] - f.m[0][1];
    if a == 0.0 && b == 0.0 {
        None
    } else {
        Some(libm::atan2(b, a))
    }
}

/// First column of the rotation factor in the polar decomposition `F = R U`.
pub fn mhat(f: &Mat2) -> Result<Vec2> {
    if !(f.det() > 0.0) {
        return Err(Error::Singular);
    }
    let theta = nearest_rotation_angle(f).ok_or(Error::Singular)?;
    let (s, c) = libm::sincos(theta);
    Ok(Vec2::new(c, s))
}

/// `m̂` extended to all matrices through the nearest rotation, with `e1` at
/// the degenerate point. Agrees with [`mhat`] wherever that is defined.
pub fn mhat_extended(f: &Mat2) -> Vec2 {
    match nearest_rotation_angle(f) {
        Some(theta) => {
            let (s, c) = libm::sincos(theta);
            Vec2::new(c, s)
        }
        None => Vec2::E1,
    }
}

/// `∂m̂₁/∂F` for the extended realization (zero at the degenerate point).
pub fn mhat1_gradient(f: &Mat2) -> Mat2 {
    let a = f.m[0][0] + f.m[1][1];
    let b = f.m[1][0] - f.m[0][1];
    let h2 = a * a + b * b;
    if h2 == 0.0 {
        return Mat2::ZERO;
    }
    let h3 = h2 * libm::sqrt(h2);
    // cos θ = a/h
    let da = b * b / h3;
    let db = -a * b / h3;
    Mat2::new(da, -db, db, da)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnetizationModel {
    pub kappa: f64,
    /// Frobenius cutoff `T` beyond which `f_κ` vanishes.
    pub t_cut: f64,
}

impl MagnetizationModel {
    pub fn new(kappa: f64, t_cut: f64) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::Domain(format!("kappa = {kappa} must be non-negative")));
        }
        if !(t_cut > SQRT2 && t_cut.is_finite()) {
            return Err(Error::Domain(format!("T = {t_cut} must exceed sqrt(2)")));
        }
        Ok(MagnetizationModel { kappa, t_cut })
    }
}

/// `κ(1 - e1·m̂(F))` for `|F| ≤ T`, zero otherwise.
pub fn f_kappa(f: &Mat2, model: &MagnetizationModel) -> f64 {
    if f.norm() > model.t_cut {
        return 0.0;
    }
    model.kappa * (1.0 - mhat_extended(f).x)
}

/// `f_κ` with the cutoff at `T` replaced by a smooth drop over `[T, T + band]`,
/// together with its gradient.
pub fn f_kappa_smoothed(f: &Mat2, model: &MagnetizationModel, band: f64) -> (f64, Mat2) {
    let n = f.norm();
    let z = (n - model.t_cut) / band;
    let cut = 1.0 - smoothstep(z);
    if cut == 0.0 {
        return (0.0, Mat2::ZERO);
    }
    let base = model.kappa * (1.0 - mhat_extended(f).x);
    let dbase = mhat1_gradient(f).scale(-model.kappa);
    let mut grad = dbase.scale(cut);
    let dcut = -smoothstep_derivative(z) / band;
    if dcut != 0.0 && n > 0.0 {
        grad += f.scale(base * dcut / n);
    }
    (base * cut, grad)
}

/// Penalty `χ(F) = c·s(-det F/δ)·(1 - s((|F| - (cutoff - width))/width))`
/// with `s` the quintic smoothstep. Frame indifferent; vanishes near `SO(2)`
/// and for `|F| ≥ cutoff`; equals `c` where `det F ≤ -δ` and `|F| ≤ cutoff - width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyChi {
    pub c_chi: f64,
    pub delta_det: f64,
    pub cutoff_norm: f64,
    pub width: f64,
}

impl Default for PenaltyChi {
    fn default() -> Self {
        PenaltyChi { c_chi: 1.0, delta_det: 0.1, cutoff_norm: 20.0, width: 1.0 }
    }
}

impl PenaltyChi {
    pub fn validate(&self) -> Result<()> {
        check_positive("chi_c", self.c_chi)?;
        check_positive("chi_delta", self.delta_det)?;
        check_positive("chi_width", self.width)?;
        if !(self.cutoff_norm > self.width + SQRT2) {
            return Err(Error::Domain(format!(
                "chi cutoff {} must exceed width + sqrt(2)",
                self.cutoff_norm
            )));
        }
        Ok(())
    }

    pub fn value(&self, f: &Mat2) -> f64 {
        let det_part = smoothstep(-f.det() / self.delta_det);
        if det_part == 0.0 {
            return 0.0;
        }
        let z = (f.norm() - (self.cutoff_norm - self.width)) / self.width;
        self.c_chi * det_part * (1.0 - smoothstep(z))
    }

    pub fn gradient(&self, f: &Mat2) -> Mat2 {
        let zd = -f.det() / self.delta_det;
        let det_part = smoothstep(zd);
        let ddet = smoothstep_derivative(zd);
        if det_part == 0.0 && ddet == 0.0 {
            return Mat2::ZERO;
        }
        let n = f.norm();
        let zn = (n - (self.cutoff_norm - self.width)) / self.width;
        let norm_part = 1.0 - smoothstep(zn);
        let dnorm = -smoothstep_derivative(zn) / self.width;
        // ∂det/∂F is the cofactor matrix
        let cof = Mat2::new(f.m[1][1], -f.m[1][0], -f.m[0][1], f.m[0][0]);
        let mut g = cof.scale(-ddet / self.delta_det * norm_part);
        if dnorm != 0.0 && n > 0.0 {
            g += f.scale(det_part * dnorm / n);
        }
        g.scale(self.c_chi)
    }
}

/// Frobenius distances from `F` to `SO(2)` and to `O(2) ∖ SO(2)`.
pub fn dist_to_o2(f: &Mat2) -> (f64, f64) {
    let (s1, s2) = f.singular_values();
    let same = libm::hypot(s1 - 1.0, s2 - 1.0);
    let flipped = libm::hypot(s1 - 1.0, s2 + 1.0);
    if f.det() >= 0.0 {
        (same, flipped)
    } else {
        (flipped, same)
    }
}

/// Everything the energies need to know about the material.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialParams {
    pub potential: PairPotential,
    pub chi: PenaltyChi,
    pub magnet: MagnetizationModel,
    /// Width of the smoothing band for `f_κ` in gradient evaluations; `None`
    /// disables gradients of field terms.
    pub smooth_fk_band: Option<f64>,
}

impl MaterialParams {
    pub fn new(potential: PairPotential) -> Self {
        MaterialParams {
            potential,
            chi: PenaltyChi::default(),
            magnet: MagnetizationModel { kappa: 0.0, t_cut: 3.0 },
            smooth_fk_band: Some(0.1),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.potential.alpha
    }

    pub fn beta(&self) -> f64 {
        self.potential.beta
    }
}

/// `W_Δ + χ`.
pub fn cell_energy_chi(f: &Mat2, pot: &PairPotential, chi: &PenaltyChi, vecs: &LatticeVectors) -> f64 {
    cell_energy(f, pot, vecs) + chi.value(f)
}
