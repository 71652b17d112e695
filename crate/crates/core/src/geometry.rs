//! Cartesian geometry: periodic expansion into a sphere, principal-axes
//! alignment and the Cartesian to spherical conversion.

use std::cmp::Ordering;
use std::f64::consts::PI;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::element::Element;
use crate::structure_io::{CrystalStructure, Lattice};

/// Default radius of the tiled sphere, in Å.
pub const DEFAULT_SPHERE_RADIUS: f64 = 60.0;

/// Third moments below this magnitude fall back to the extreme-atom sign rule.
const THIRD_MOMENT_EPS: f64 = 1e-8;

/// An atom in Cartesian space. `site` is the index of the unit-cell site it
/// is an image of.
#[derive(Debug, Clone, PartialEq)]
pub struct CartAtom {
    pub element: Element,
    pub site: usize,
    pub pos: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphericalAtom {
    pub element: Element,
    pub site: usize,
    pub r: f64,
    /// Polar angle in `[0, π]`.
    pub theta: f64,
    /// Azimuth in `[0, 2π)`.
    pub phi: f64,
}

pub fn frac_to_cart(lattice: &Lattice, frac: [f64; 3]) -> Vector3<f64> {
    lattice.to_cartesian(frac)
}

/// Tiles the unit cell and keeps every image within `radius` (inclusive) of
/// the cell centre. Positions are returned relative to the centre.
pub fn expand_to_sphere(s: &CrystalStructure, radius: f64) -> Vec<CartAtom> {
    let m = s.lattice.matrix();
    let center = m * Vector3::new(0.5, 0.5, 0.5);
    let heights = s.lattice.perpendicular_heights();
    let bound = heights.map(|h| (radius / h).ceil() as i64 + 1);

    let mut out = Vec::new();
    for (site_idx, site) in s.sites.iter().enumerate() {
        let frac = Vector3::from(site.frac).map(|x| x.rem_euclid(1.0));
        let base = m * frac - center;
        for n0 in -bound[0]..=bound[0] {
            for n1 in -bound[1]..=bound[1] {
                for n2 in -bound[2]..=bound[2] {
                    let pos = base + m * Vector3::new(n0 as f64, n1 as f64, n2 as f64);
                    if pos.norm() <= radius {
                        out.push(CartAtom { element: site.element, site: site_idx, pos });
                    }
                }
            }
        }
    }
    out
}

/// Mass-weighted inertia tensor about the origin.
pub fn inertia_tensor(atoms: &[CartAtom]) -> Matrix3<f64> {
    let mut t = Matrix3::zeros();
    for a in atoms {
        let m = a.element.mass();
        let r2 = a.pos.norm_squared();
        t += m * (Matrix3::identity() * r2 - a.pos * a.pos.transpose());
    }
    t
}

/// Rotation whose rows are the principal axes (ascending moments), with
/// each axis sign fixed deterministically and a right-handed third axis.
/// Returns `None` when the tensor vanishes (all atoms at the origin).
pub fn principal_frame(atoms: &[CartAtom]) -> Option<Matrix3<f64>> {
    let tensor = inertia_tensor(atoms);
    if tensor.trace().is_nan() || tensor.trace() <= 0.0 {
        return None;
    }
    let eig = SymmetricEigen::new(tensor);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let mut axes: Vec<Vector3<f64>> = order.iter().map(|&i| eig.eigenvectors.column(i).normalize()).collect();
    for axis in axes.iter_mut().take(2) {
        if axis_sign(atoms, axis) < 0.0 {
            *axis = -*axis;
        }
    }
    axes[2] = axes[0].cross(&axes[1]).normalize();
    Some(Matrix3::from_rows(&[axes[0].transpose(), axes[1].transpose(), axes[2].transpose()]))
}

/// +1 or -1: the orientation of `axis` that makes the mass-weighted third
/// moment non-negative, or failing that puts the extreme atom on the
/// positive side.
fn axis_sign(atoms: &[CartAtom], axis: &Vector3<f64>) -> f64 {
    let third: f64 = atoms.iter().map(|a| a.element.mass() * a.pos.dot(axis).powi(3)).sum();
    if third.abs() >= THIRD_MOMENT_EPS {
        return third.signum();
    }
    let extreme = atoms.iter().max_by(|a, b| {
        let (pa, pb) = (a.pos.dot(axis), b.pos.dot(axis));
        pa.abs()
            .total_cmp(&pb.abs())
            // reversed so that max_by keeps the smaller symbol / position
            .then_with(|| b.element.symbol().cmp(a.element.symbol()))
            .then_with(|| lex_cmp(&b.pos, &a.pos))
    });
    match extreme {
        Some(a) if a.pos.dot(axis) < 0.0 => -1.0,
        _ => 1.0,
    }
}

fn lex_cmp(a: &Vector3<f64>, b: &Vector3<f64>) -> Ordering {
    a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)).then(a.z.total_cmp(&b.z))
}

/// Rotates the atoms (about the origin) into their principal-axes frame.
pub fn inertia_align(atoms: &[CartAtom]) -> Vec<CartAtom> {
    match principal_frame(atoms) {
        Some(rot) => atoms.iter().map(|a| CartAtom { element: a.element, site: a.site, pos: rot * a.pos }).collect(),
        None => atoms.to_vec(),
    }
}

pub fn to_spherical(atom: &CartAtom) -> SphericalAtom {
    let p = atom.pos;
    let r = p.norm();
    let theta = if r > 0.0 { (p.z / r).clamp(-1.0, 1.0).acos() } else { 0.0 };
    let phi = if p.x == 0.0 && p.y == 0.0 {
        0.0
    } else {
        let phi = p.y.atan2(p.x);
        let wrapped = if phi < 0.0 { phi + 2.0 * PI } else { phi };
        // -0.0 and tiny negatives can round up to exactly 2π
        if wrapped >= 2.0 * PI {
            0.0
        } else {
            wrapped
        }
    };
    SphericalAtom { element: atom.element, site: atom.site, r, theta, phi }
}

pub fn cart_to_spherical(atoms: &[CartAtom]) -> Vec<SphericalAtom> {
    atoms.iter().map(to_spherical).collect()
}

pub fn spherical_to_cart(atom: &SphericalAtom) -> CartAtom {
    let (st, ct) = atom.theta.sin_cos();
    let (sp, cp) = atom.phi.sin_cos();
    CartAtom {
        element: atom.element,
        site: atom.site,
        pos: Vector3::new(atom.r * st * cp, atom.r * st * sp, atom.r * ct),
    }
}
