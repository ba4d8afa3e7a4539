//! Surface extraction and curvature diagnostics.
//!
//! A surface is read off a wave field through the Sym formula
//! `r = Pi(Psi^-1 Psi_lambda)`, with unit normal `n = Psi^-1 e3 Psi`.
//! Gaussian curvature is computed two independent ways: the dot-product
//! formula on delta derivatives, and the tetrahedron dihedral-angle formula
//! on grid cells. For asymptotic Chebyshev nets both give the constant
//! `-4 lambda^2`, exactly on finite time scales; their agreement is one of
//! the cross-validations this crate certifies.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laxpair::{CoefficientField, WaveField};
use crate::quatalg::CQuat;
use crate::timescale::{GridDomain, GridFunction, Norm};

/// Degeneracy threshold for the curvature denominator, relative to
/// `(|D1 r| |D2 r|)^2`. Nodes below it are flagged, not evaluated: the
/// vacuum seed degenerates to a curve and the cusp line of a soliton
/// surface can pass arbitrarily close to a grid node.
pub const COND_TOL: f64 = 1e-10;

/// Euclidean 3-vector, identified with the pure quaternion
/// `x e1 + y e2 + z e3`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn normalized(self) -> Result<Vec3> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::Degenerate("cannot normalize zero vector".into()));
        }
        Ok(self * (1.0 / n))
    }

    /// View as a pure quaternion.
    pub fn to_cquat(self) -> CQuat {
        CQuat::E1 * self.x + CQuat::E2 * self.y + CQuat::E3 * self.z
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Norm for Vec3 {
    fn norm(&self) -> f64 {
        Vec3::norm(*self)
    }
}

/// Immersion and unit normal over a grid domain.
#[derive(Debug, Clone)]
pub struct SurfaceNet {
    domain: Arc<GridDomain>,
    pub r: GridFunction<Vec3>,
    pub n: GridFunction<Vec3>,
    /// Spectral parameter the net was extracted at, when it came from a
    /// wave field.
    pub lambda: Option<f64>,
}

/// Forward delta derivatives of position and normal. `None` on trailing
/// boundaries (no successor in that direction).
#[derive(Debug, Clone)]
pub struct DeltaFrame {
    pub d1r: GridFunction<Option<Vec3>>,
    pub d2r: GridFunction<Option<Vec3>>,
    pub d1n: GridFunction<Option<Vec3>>,
    pub d2n: GridFunction<Option<Vec3>>,
}

/// First-fundamental-form data at one node.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FundamentalData {
    pub e: f64,
    pub g: f64,
    pub f: f64,
    /// Angle between the two tangent directions, radians.
    pub phi: f64,
    /// `-D1 r . D2 n`
    pub m12: f64,
    /// `-D2 r . D1 n`
    pub m21: f64,
}

/// Per-node curvature classification from the dot-product formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KNode {
    Value(f64),
    /// Denominator below `COND_TOL * (|D1 r| |D2 r|)^2`.
    Degenerate,
    /// Trailing boundary: some delta derivative undefined.
    Boundary,
}

/// Dihedral angles of one grid-cell tetrahedron.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TetrahedronAngles {
    /// Angle between the cell's two tangent planes across the direction-1 edge.
    pub theta1: f64,
    /// Angle across the direction-2 edge.
    pub theta2: f64,
    /// Angle between the two edge directions.
    pub phi: f64,
}

/// Curvature of one cell from the tetrahedron construction.
#[derive(Debug, Clone, Copy)]
pub struct TetCurvature {
    pub k: f64,
    pub angles: TetrahedronAngles,
}

/// Delta tangent plane at a node.
#[derive(Debug, Clone, Copy)]
pub struct TangentPlane {
    pub point: Vec3,
    pub normal: Vec3,
}

/// Aggregate asymptotic / weak-Chebyshev residuals.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NetResiduals {
    /// `max |D_j n . D_j r| / (|D_j n| |D_j r|)` per direction.
    pub asym: [f64; 2],
    /// Max relative deviation of `(D1 r)^2` from its per-row mean, and of
    /// `(D2 r)^2` from its per-column mean.
    pub cheb: [f64; 2],
}

/// Curvature summary over the non-degenerate nodes of a net.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KStats {
    pub expected: f64,
    pub max_abs_err: f64,
    pub max_rel_err: f64,
    pub valid_nodes: usize,
    pub degenerate_nodes: usize,
}

impl SurfaceNet {
    pub fn new(
        domain: Arc<GridDomain>,
        r: GridFunction<Vec3>,
        n: GridFunction<Vec3>,
        lambda: Option<f64>,
    ) -> Result<Self> {
        if r.domain().as_ref() != domain.as_ref() || n.domain().as_ref() != domain.as_ref() {
            return Err(Error::DomainMismatch(
                "surface fields live on different grids".into(),
            ));
        }
        Ok(Self {
            domain,
            r,
            n,
            lambda,
        })
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }
}

/// Tolerance for the imaginary residue allowed when reading a real vector
/// off products of wave-function values.
const SYM_REALITY_TOL: f64 = 1e-7;

fn pure_vec3(m: CQuat) -> Result<Vec3> {
    let c = m.coeffs();
    let scale = 1.0 + m.norm();
    let residue = c.iter().map(|v| v.im.abs()).fold(c[0].re.abs(), f64::max);
    if residue > SYM_REALITY_TOL * scale {
        return Err(Error::NotRealQuaternion {
            residue,
            tol: SYM_REALITY_TOL * scale,
        });
    }
    Ok(Vec3::new(c[1].re, c[2].re, c[3].re))
}

/// Extract the immersion `r = Pi(Psi^-1 Psi_lambda)` and unit normal
/// `n = Psi^-1 e3 Psi` from a wave field at a real spectral parameter.
///
/// The normal needs no normalization: conjugation by a nonzero real
/// quaternion preserves the norm of `e3`.
pub fn sym_surface(wf: &WaveField) -> Result<SurfaceNet> {
    if wf.lambda.im != 0.0 {
        return Err(Error::Lambda(format!(
            "sym_surface requires real lambda, got {}",
            wf.lambda
        )));
    }
    if wf.lambda.re == 0.0 {
        return Err(Error::Lambda("sym_surface requires lambda != 0".into()));
    }
    let domain = Arc::clone(wf.psi.domain());
    let (n1, n2) = (domain.n1(), domain.n2());
    let mut r_values = Vec::with_capacity(n1 * n2);
    let mut n_values = Vec::with_capacity(n1 * n2);
    for i in 0..n1 {
        for j in 0..n2 {
            let psi = wf.psi.get(i, j);
            let inv = psi
                .inverse()
                .map_err(|_| Error::Singular(format!("Psi singular at node ({i}, {j})")))?;
            let r = pure_vec3((inv * wf.psi_lambda.get(i, j)).im_project())?;
            let n = pure_vec3(inv * CQuat::E3 * psi)?;
            r_values.push(r);
            n_values.push(n);
        }
    }
    let r = GridFunction::from_values(Arc::clone(&domain), r_values)?;
    let n = GridFunction::from_values(Arc::clone(&domain), n_values)?;
    SurfaceNet::new(domain, r, n, Some(wf.lambda.re))
}

/// Forward delta derivatives of `r` and `n` over the whole grid.
pub fn delta_frame(s: &SurfaceNet) -> DeltaFrame {
    use crate::timescale::{delta_derivative, Direction};
    DeltaFrame {
        d1r: delta_derivative(&s.r, Direction::T1),
        d2r: delta_derivative(&s.r, Direction::T2),
        d1n: delta_derivative(&s.n, Direction::T1),
        d2n: delta_derivative(&s.n, Direction::T2),
    }
}

/// Residual of the closed-form tangents against the finite-difference frame:
/// `D1 r = Pi(sigma1(Psi)^-1 U_lambda Psi)` and the direction-2 analogue.
/// Both are exact identities; the residual measures accumulated rounding.
pub fn closed_form_frame_residual(
    s: &SurfaceNet,
    wf: &WaveField,
    cf: &CoefficientField,
) -> Result<f64> {
    let domain = s.domain();
    if wf.psi.domain().as_ref() != domain.as_ref() || cf.domain().as_ref() != domain.as_ref() {
        return Err(Error::DomainMismatch(
            "surface, wave field and coefficients must share a grid".into(),
        ));
    }
    let frame = delta_frame(s);
    let (n1, n2) = (domain.n1(), domain.n2());
    let mut worst: f64 = 0.0;
    for i in 0..n1 {
        for j in 0..n2 {
            if i + 1 < n1 {
                let sig = wf.psi.get(i + 1, j).inverse()?;
                let closed =
                    pure_vec3((sig * cf.assemble_u_lambda(i, j) * wf.psi.get(i, j)).im_project())?;
                let fd = frame.d1r.get(i, j).expect("successor exists");
                worst = worst.max((closed - fd).norm());
            }
            if j + 1 < n2 {
                let sig = wf.psi.get(i, j + 1).inverse()?;
                let vl = cf.assemble_v_lambda(i, j, wf.lambda)?;
                let closed = pure_vec3((sig * vl * wf.psi.get(i, j)).im_project())?;
                let fd = frame.d2r.get(i, j).expect("successor exists");
                worst = worst.max((closed - fd).norm());
            }
        }
    }
    Ok(worst)
}

/// Gaussian curvature by the dot-product formula
///
/// ```text
/// K = - (D1 n . D2 r)(D2 n . D1 r) / ((D1 r)^2 (D2 r)^2 - (D1 r . D2 r)^2)
/// ```
///
/// Nodes whose denominator falls below `COND_TOL * (|D1 r| |D2 r|)^2` are
/// flagged [`KNode::Degenerate`]; trailing-boundary nodes are
/// [`KNode::Boundary`].
pub fn gauss_curvature_dot(s: &SurfaceNet) -> GridFunction<KNode> {
    let frame = delta_frame(s);
    gauss_curvature_dot_with_frame(s, &frame)
}

pub fn gauss_curvature_dot_with_frame(s: &SurfaceNet, frame: &DeltaFrame) -> GridFunction<KNode> {
    GridFunction::from_fn(Arc::clone(s.domain()), |i, j| {
        let (d1r, d2r, d1n, d2n) = match (
            frame.d1r.get(i, j),
            frame.d2r.get(i, j),
            frame.d1n.get(i, j),
            frame.d2n.get(i, j),
        ) {
            (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
            _ => return KNode::Boundary,
        };
        let den = d1r.norm_sq() * d2r.norm_sq() - d1r.dot(d2r).powi(2);
        if den < COND_TOL * d1r.norm_sq() * d2r.norm_sq() {
            return KNode::Degenerate;
        }
        KNode::Value(-(d1n.dot(d2r) * d2n.dot(d1r)) / den)
    })
}

/// Compare curvature against an expected constant over non-degenerate nodes.
pub fn curvature_stats(k: &GridFunction<KNode>, expected: f64) -> KStats {
    let mut max_abs: f64 = 0.0;
    let mut valid = 0usize;
    let mut degenerate = 0usize;
    for node in k.values() {
        match node {
            KNode::Value(v) => {
                valid += 1;
                max_abs = max_abs.max((v - expected).abs());
            }
            KNode::Degenerate => degenerate += 1,
            KNode::Boundary => {}
        }
    }
    KStats {
        expected,
        max_abs_err: max_abs,
        max_rel_err: if expected != 0.0 {
            max_abs / expected.abs()
        } else {
            max_abs
        },
        valid_nodes: valid,
        degenerate_nodes: degenerate,
    }
}

/// First-fundamental data at an interior node, if defined.
pub fn fundamental_data(frame: &DeltaFrame, i: usize, j: usize) -> Option<FundamentalData> {
    let (d1r, d2r, d1n, d2n) = match (
        frame.d1r.get(i, j),
        frame.d2r.get(i, j),
        frame.d1n.get(i, j),
        frame.d2n.get(i, j),
    ) {
        (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
        _ => return None,
    };
    let e = d1r.norm_sq();
    let g = d2r.norm_sq();
    let f = d1r.dot(d2r);
    let denom = (e * g).sqrt();
    let phi = if denom > 0.0 {
        (f / denom).clamp(-1.0, 1.0).acos()
    } else {
        0.0
    };
    Some(FundamentalData {
        e,
        g,
        f,
        phi,
        m12: -d1r.dot(d2n),
        m21: -d2r.dot(d1n),
    })
}

/// Asymptotic and weak-Chebyshev residuals over the interior of the net.
///
/// The per-row mean of `(D1 r)^2` estimates the profile `E(t1)` (and the
/// per-column mean estimates `G(t2)`); the Chebyshev residual is the largest
/// relative deviation from those means.
pub fn net_residuals(s: &SurfaceNet) -> NetResiduals {
    let frame = delta_frame(s);
    net_residuals_with_frame(s, &frame)
}

pub fn net_residuals_with_frame(s: &SurfaceNet, frame: &DeltaFrame) -> NetResiduals {
    let d = s.domain();
    let (n1, n2) = (d.n1(), d.n2());
    let mut asym = [0.0f64; 2];
    for i in 0..n1 {
        for j in 0..n2 {
            if let (Some(dn), Some(dr)) = (frame.d1n.get(i, j), frame.d1r.get(i, j)) {
                let scale = dn.norm() * dr.norm();
                if scale > 0.0 {
                    asym[0] = asym[0].max(dn.dot(dr).abs() / scale);
                }
            }
            if let (Some(dn), Some(dr)) = (frame.d2n.get(i, j), frame.d2r.get(i, j)) {
                let scale = dn.norm() * dr.norm();
                if scale > 0.0 {
                    asym[1] = asym[1].max(dn.dot(dr).abs() / scale);
                }
            }
        }
    }

    let mut cheb = [0.0f64; 2];
    // (D1 r)^2 should depend on t1 only: spread across each row i.
    for i in 0..n1.saturating_sub(1) {
        let mut mean = 0.0;
        for j in 0..n2 {
            mean += frame.d1r.get(i, j).expect("i interior").norm_sq();
        }
        mean /= n2 as f64;
        if mean <= 0.0 {
            continue;
        }
        for j in 0..n2 {
            let e = frame.d1r.get(i, j).expect("i interior").norm_sq();
            cheb[0] = cheb[0].max((e - mean).abs() / mean);
        }
    }
    // (D2 r)^2 should depend on t2 only: spread across each column j.
    for j in 0..n2.saturating_sub(1) {
        let mut mean = 0.0;
        for i in 0..n1 {
            mean += frame.d2r.get(i, j).expect("j interior").norm_sq();
        }
        mean /= n1 as f64;
        if mean <= 0.0 {
            continue;
        }
        for i in 0..n1 {
            let g = frame.d2r.get(i, j).expect("j interior").norm_sq();
            cheb[1] = cheb[1].max((g - mean).abs() / mean);
        }
    }
    NetResiduals { asym, cheb }
}

/// Unsigned dihedral angle between planes with normals `na`, `nb` sharing
/// the edge direction `edge`, via `atan2` for stability near zero.
fn dihedral(na: Vec3, nb: Vec3, edge: Vec3) -> Result<f64> {
    let e = edge.normalized()?;
    let s = na.cross(nb).dot(e);
    let c = na.dot(nb);
    Ok(s.atan2(c).abs())
}

/// Curvature of the cell with corners `r(i,j)`, `r(i+1,j)`, `r(i,j+1)`,
/// `r(i+1,j+1)` from the tetrahedron dihedral angles:
///
/// ```text
/// K_tet = - sin(theta1) sin(theta2) / (eps1 eps2 |Delta1 r| |Delta2 r|)
/// ```
///
/// Returns `None` when the cell is degenerate (collinear corners).
pub fn gauss_curvature_tet(s: &SurfaceNet, cell: (usize, usize)) -> Result<Option<TetCurvature>> {
    let (i, j) = cell;
    let d = s.domain();
    if i + 1 >= d.n1() || j + 1 >= d.n2() {
        return Err(Error::IndexOutOfRange {
            index: i.max(j),
            len: d.n1().min(d.n2()),
        });
    }
    let eps1 = d.t1().graininess(i);
    let eps2 = d.t2().graininess(j);
    let a = s.r.get(i, j);
    let b = s.r.get(i + 1, j);
    let dd = s.r.get(i, j + 1);
    let c = s.r.get(i + 1, j + 1);
    let ab = b - a;
    let ad = dd - a;
    let ac = c - a;

    let scale = ab.norm() * ad.norm();
    if scale == 0.0 {
        return Ok(None);
    }
    let n_abc = ab.cross(ac);
    let n_abd = ab.cross(ad);
    let n_acd = ac.cross(ad);
    // collinear corners leave a face normal with no direction
    let face_tol = 1e-12;
    if n_abd.norm() < face_tol * scale
        || n_abc.norm() < face_tol * ab.norm() * ac.norm()
        || n_acd.norm() < face_tol * ac.norm() * ad.norm()
    {
        return Ok(None);
    }

    let theta1 = dihedral(n_abc, n_abd, ab)?;
    let theta2 = dihedral(n_abd, n_acd, ad)?;
    let phi = (ab.dot(ad) / scale).clamp(-1.0, 1.0).acos();
    let d1 = ab.norm() / eps1;
    let d2 = ad.norm() / eps2;
    let k = -(theta1.sin() * theta2.sin()) / (eps1 * eps2 * d1 * d2);
    Ok(Some(TetCurvature {
        k,
        angles: TetrahedronAngles {
            theta1,
            theta2,
            phi,
        },
    }))
}

/// Discrete-Chebyshev curvature estimate `K' = -sin^2(theta) / (eps^2 cos(theta))`.
///
/// Tends to the dihedral-angle curvature as `theta -> 0` with `sin(theta)/eps`
/// held fixed.
pub fn wunderlich_k(theta: f64, eps: f64) -> Result<f64> {
    if eps <= 0.0 || eps.is_nan() {
        return Err(Error::Construction(format!(
            "wunderlich_k: eps = {eps} <= 0"
        )));
    }
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&theta) {
        return Err(Error::Degenerate(format!(
            "wunderlich_k: theta = {theta} outside [0, pi/2)"
        )));
    }
    Ok(-(theta.sin().powi(2)) / (eps * eps * theta.cos()))
}

/// Delta tangent plane at a node: through `r`, spanned by `D1 r` and `D2 r`.
/// For a fully scattered node it contains `r^sigma1` and `r^sigma2` exactly
/// (the derivatives are chords).
pub fn tangent_plane(s: &SurfaceNet, node: (usize, usize)) -> Result<TangentPlane> {
    let (i, j) = node;
    let frame = delta_frame(s);
    let (d1r, d2r) = match (frame.d1r.get(i, j), frame.d2r.get(i, j)) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::Degenerate(format!(
                "tangent plane needs successors in both directions at ({i}, {j})"
            )))
        }
    };
    let cross = d1r.cross(d2r);
    if cross.norm() < 1e-12 * d1r.norm() * d2r.norm() {
        return Err(Error::Degenerate(format!(
            "tangent directions dependent at ({i}, {j})"
        )));
    }
    Ok(TangentPlane {
        point: s.r.get(i, j),
        normal: cross.normalized()?,
    })
}

/// Max deviation between the cross-product normal `D1 r x D2 r` and the
/// spectral normal stored in the net, up to a per-node sign.
///
/// The sign is constant on each component of the complement of the cusp
/// line (the cross product reverses orientation across a fold), so alignment
/// is per node. Nodes too close to the fold for the normalized cross product
/// to be trustworthy (`sin phi < 1e-4`) are skipped.
pub fn normal_consistency(s: &SurfaceNet) -> f64 {
    let frame = delta_frame(s);
    let d = s.domain();
    let mut worst: f64 = 0.0;
    for i in 0..d.n1() {
        for j in 0..d.n2() {
            let (d1r, d2r) = match (frame.d1r.get(i, j), frame.d2r.get(i, j)) {
                (Some(a), Some(b)) => (a, b),
                _ => continue,
            };
            let cross = d1r.cross(d2r);
            if cross.norm() <= 1e-4 * d1r.norm() * d2r.norm() {
                continue;
            }
            let cross_n = cross * (1.0 / cross.norm());
            let spectral = s.n.get(i, j);
            let aligned = (cross_n - spectral).norm().min((cross_n + spectral).norm());
            worst = worst.max(aligned);
        }
    }
    worst
}

/// Coplanarity residual of the shifted tangents at fully scattered nodes:
/// with zero asymptotic residual, `T1(Delta2 r)` lies in the plane spanned by
/// `Delta1 r` and `T1(Delta1 r)`.
pub fn shifted_tangent_coplanarity(s: &SurfaceNet) -> f64 {
    let frame = delta_frame(s);
    let d = s.domain();
    let mut worst: f64 = 0.0;
    for i in 0..d.n1() {
        for j in 0..d.n2() {
            let (d1r, t1d1r, t1d2r) = match (
                frame.d1r.get(i, j),
                if i + 1 < d.n1() {
                    frame.d1r.get(i + 1, j)
                } else {
                    None
                },
                if i + 1 < d.n1() {
                    frame.d2r.get(i + 1, j)
                } else {
                    None
                },
            ) {
                (Some(a), Some(b), Some(c)) => (a, b, c),
                _ => continue,
            };
            let plane_normal = d1r.cross(t1d1r);
            let scale = plane_normal.norm();
            if scale <= 1e-4 * d1r.norm() * t1d1r.norm() {
                continue;
            }
            worst = worst.max(plane_normal.dot(t1d2r).abs() / (scale * t1d2r.norm()));
        }
    }
    worst
}
