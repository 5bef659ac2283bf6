//! Planar polygon and segment primitives.

use alloc::vec::Vec;

use crate::math::Vec2;

/// Signed shoelace area, positive for counter-clockwise vertex order.
pub fn signed_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        s += poly[i].cross(poly[(i + 1) % n]);
    }
    0.5 * s
}

pub fn area(poly: &[Vec2]) -> f64 {
    libm::fabs(signed_area(poly))
}

/// Keep the part of a convex polygon where `n·x ≤ c`.
pub fn clip_half_plane(poly: &[Vec2], n: Vec2, c: f64) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let len = poly.len();
    for i in 0..len {
        let p = poly[i];
        let q = poly[(i + 1) % len];
        let dp = n.dot(p) - c;
        let dq = n.dot(q) - c;
        if dp <= 0.0 {
            out.push(p);
        }
        if (dp < 0.0 && dq > 0.0) || (dp > 0.0 && dq < 0.0) {
            let t = dp / (dp - dq);
            out.push(p + (q - p).scale(t));
        }
    }
    out
}

/// Even-odd point-in-polygon test; points on edges may go either way.
pub fn contains_point(poly: &[Vec2], p: Vec2) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let a = poly[i];
        let b = poly[j];
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Parametric clipping of the segment `p→q` to the box `[x0,x1]×[y0,y1]`.
/// Returns the parameter interval `(t0, t1)` of the visible part.
pub fn clip_segment_to_box(p: Vec2, q: Vec2, x0: f64, x1: f64, y0: f64, y1: f64, tol: f64) -> Option<(f64, f64)> {
    let d = q - p;
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    let checks = [
        (-d.x, p.x - x0 + tol),
        (d.x, x1 - p.x + tol),
        (-d.y, p.y - y0 + tol),
        (d.y, y1 - p.y + tol),
    ];
    for (den, num) in checks {
        if den == 0.0 {
            if num < 0.0 {
                return None;
            }
        } else {
            let r = num / den;
            if den < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    if t0 <= t1 {
        Some((t0, t1))
    } else {
        None
    }
}

/// Strict crossing of segments `a→b` and `c→d`: interior points only, and
/// `None` if an endpoint of one lies (within `tol`) on the other's line.
pub fn segments_cross(a: Vec2, b: Vec2, c: Vec2, d: Vec2, tol: f64) -> Option<bool> {
    let r = b - a;
    let s = d - c;
    let o1 = r.cross(c - a);
    let o2 = r.cross(d - a);
    let o3 = s.cross(a - c);
    let o4 = s.cross(b - c);
    let scale_r = r.norm();
    let scale_s = s.norm();
    if libm::fabs(o1) <= tol * scale_r || libm::fabs(o2) <= tol * scale_r {
        // c or d on the line through a, b: ambiguous only if within the segment
        let on = |p: Vec2, o: f64| {
            libm::fabs(o) <= tol * scale_r && {
                let t = r.dot(p - a) / (scale_r * scale_r);
                (-tol..=1.0 + tol).contains(&t)
            }
        };
        if on(c, o1) || on(d, o2) {
            return None;
        }
    }
    if libm::fabs(o3) <= tol * scale_s || libm::fabs(o4) <= tol * scale_s {
        let on = |p: Vec2, o: f64| {
            libm::fabs(o) <= tol * scale_s && {
                let t = s.dot(p - c) / (scale_s * scale_s);
                (-tol..=1.0 + tol).contains(&t)
            }
        };
        if on(a, o3) || on(b, o4) {
            return None;
        }
    }
    Some((o1 > 0.0) != (o2 > 0.0) && (o3 > 0.0) != (o4 > 0.0))
}

/// Distance from `p` to the segment `a→b`.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let d = b - a;
    let l2 = d.norm_sq();
    if l2 == 0.0 {
        return (p - a).norm();
    }
    let t = (d.dot(p - a) / l2).clamp(0.0, 1.0);
    (p - (a + d.scale(t))).norm()
}
