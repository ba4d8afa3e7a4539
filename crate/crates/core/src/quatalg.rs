//! Quaternion and complexified-quaternion algebra on 2x2 complex matrices.
//!
//! The basis convention is `e_j = -i * pauli_j`, so a real quaternion
//! `w + x e1 + y e2 + z e3` embeds as
//!
//! ```text
//! [ w - i z    -y - i x ]
//! [ y - i x     w + i z ]
//! ```
//!
//! [`CQuat`] is an arbitrary 2x2 complex matrix (a quaternion with complex
//! coefficients); [`Quat`] is the checked real subalgebra. The complexified
//! form is the primary representation because the Darboux step evaluates wave
//! functions at imaginary spectral parameters, which leaves the real algebra.

use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::timescale::Norm;

const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const C1: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Imaginary residue below which a complexified quaternion is accepted
/// as real.
pub const REALITY_TOL: f64 = 1e-10;

/// A real quaternion `w + x e1 + y e2 + z e3`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quat {
    pub const ONE: Quat = Quat {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };
    pub const ZERO: Quat = Quat {
        w: 0.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };
    pub const E1: Quat = Quat {
        w: 0.0,
        x: 1.0,
        y: 0.0,
        z: 0.0,
    };
    pub const E2: Quat = Quat {
        w: 0.0,
        x: 0.0,
        y: 1.0,
        z: 0.0,
    };
    pub const E3: Quat = Quat {
        w: 0.0,
        x: 0.0,
        y: 0.0,
        z: 1.0,
    };

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub const fn scalar(w: f64) -> Self {
        Self {
            w,
            x: 0.0,
            y: 0.0,
            z: 0.0,
        }
    }

    pub const fn pure(x: f64, y: f64, z: f64) -> Self {
        Self { w: 0.0, x, y, z }
    }

    pub fn conjugate(self) -> Self {
        Self {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    pub fn norm_sq(self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Euclidean scalar product; the basis `1, e1, e2, e3` is orthonormal.
    pub fn dot(self, other: Quat) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Imaginary-part projection: drop the scalar component.
    pub fn im_project(self) -> Self {
        Self { w: 0.0, ..self }
    }

    pub fn inverse(self) -> Result<Self> {
        let n2 = self.norm_sq();
        if n2 == 0.0 {
            return Err(Error::Singular("zero quaternion".into()));
        }
        Ok(self.conjugate() * (1.0 / n2))
    }

    pub fn is_unit(self, tol: f64) -> bool {
        (self.norm_sq() - 1.0).abs() <= tol
    }
}

impl Add for Quat {
    type Output = Quat;
    fn add(self, o: Quat) -> Quat {
        Quat::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Quat {
    type Output = Quat;
    fn sub(self, o: Quat) -> Quat {
        Quat::new(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Quat {
    type Output = Quat;
    fn neg(self) -> Quat {
        Quat::new(-self.w, -self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Quat {
    type Output = Quat;
    fn mul(self, s: f64) -> Quat {
        Quat::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }
}

impl Mul for Quat {
    type Output = Quat;
    /// Hamilton product under `e1 e2 = e3`, `e2 e3 = e1`, `e3 e1 = e2`.
    fn mul(self, o: Quat) -> Quat {
        Quat::new(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y + self.y * o.w + self.z * o.x - self.x * o.z,
            self.w * o.z + self.z * o.w + self.x * o.y - self.y * o.x,
        )
    }
}

impl Norm for Quat {
    fn norm(&self) -> f64 {
        Quat::norm(*self)
    }
}

/// Exponential of a pure quaternion: `cos|v| + sin|v| * v/|v|`.
///
/// The scalar part of `v` is ignored (callers pass pure arguments); the
/// `|v| = 0` limit returns 1.
pub fn exp_pure(v: Quat) -> Quat {
    debug_assert!(v.w.abs() < 1e-12, "exp_pure expects a pure quaternion");
    let n = (v.x * v.x + v.y * v.y + v.z * v.z).sqrt();
    if n == 0.0 {
        return Quat::ONE;
    }
    let s = n.sin() / n;
    Quat::new(n.cos(), v.x * s, v.y * s, v.z * s)
}

/// Threshold below which the geodesic derivative falls back to the chord
/// (removable singularity at arc length zero).
pub const GEODESIC_CHORD_FALLBACK: f64 = 1e-8;

/// Geodesic (great-circle) delta derivative of a unit-quaternion step.
///
/// For unit `phi`, `phi_sigma` with arc `delta = arccos<phi_sigma, phi>`:
///
/// ```text
/// D_geo phi = (phi_sigma - phi cos delta) * delta / (eps sin delta)
/// ```
///
/// Its magnitude is `delta/eps`, and projecting the chord derivative into the
/// algebra recovers it up to the arc factor:
/// `Pi((D phi) phi^-1) = (sin delta / delta) * (D_geo phi) phi^-1`.
/// Falls back to the chord when `delta` is tiny; errors near `delta = pi`
/// where the geodesic is not unique.
pub fn geodesic_delta(phi: Quat, phi_sigma: Quat, eps: f64) -> Result<Quat> {
    if eps <= 0.0 || eps.is_nan() {
        return Err(Error::Construction(format!(
            "geodesic_delta: eps = {eps} <= 0"
        )));
    }
    debug_assert!(phi.is_unit(1e-9) && phi_sigma.is_unit(1e-9));
    let cos_delta = phi_sigma.dot(phi).clamp(-1.0, 1.0);
    let delta = cos_delta.acos();
    if delta < GEODESIC_CHORD_FALLBACK {
        return Ok((phi_sigma - phi) * (1.0 / eps));
    }
    // pi - delta = |phi_sigma + phi| + O((pi - delta)^3); the sum form has no
    // cancellation, unlike acos near -1
    if (phi_sigma + phi).norm() < GEODESIC_CHORD_FALLBACK {
        return Err(Error::AntipodalGeodesic);
    }
    Ok((phi_sigma - phi * cos_delta) * (delta / (eps * delta.sin())))
}

/// A complexified quaternion: an arbitrary 2x2 complex matrix, stored
/// row-major `[m00, m01, m10, m11]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CQuat {
    pub m: [Complex64; 4],
}

impl CQuat {
    pub const ZERO: CQuat = CQuat {
        m: [C0, C0, C0, C0],
    };
    pub const ONE: CQuat = CQuat {
        m: [C1, C0, C0, C1],
    };
    /// `e1 = -i pauli_1`
    pub const E1: CQuat = CQuat {
        m: [
            C0,
            Complex64 { re: 0.0, im: -1.0 },
            Complex64 { re: 0.0, im: -1.0 },
            C0,
        ],
    };
    /// `e2 = -i pauli_2`
    pub const E2: CQuat = CQuat {
        m: [C0, Complex64 { re: -1.0, im: 0.0 }, C1, C0],
    };
    /// `e3 = -i pauli_3`
    pub const E3: CQuat = CQuat {
        m: [
            Complex64 { re: 0.0, im: -1.0 },
            C0,
            C0,
            Complex64 { re: 0.0, im: 1.0 },
        ],
    };

    pub fn from_matrix(m00: Complex64, m01: Complex64, m10: Complex64, m11: Complex64) -> Self {
        Self {
            m: [m00, m01, m10, m11],
        }
    }

    pub fn scalar(s: Complex64) -> Self {
        Self { m: [s, C0, C0, s] }
    }

    pub fn real_scalar(s: f64) -> Self {
        Self::scalar(Complex64::new(s, 0.0))
    }

    /// Build from coefficients `(w, x, y, z)` on the basis `(1, e1, e2, e3)`.
    pub fn from_coeffs(c: [Complex64; 4]) -> Self {
        let i = Complex64::i();
        let [w, x, y, z] = c;
        Self {
            m: [w - i * z, -y - i * x, y - i * x, w + i * z],
        }
    }

    /// Coefficients on the basis `(1, e1, e2, e3)`.
    pub fn coeffs(&self) -> [Complex64; 4] {
        let i = Complex64::i();
        let [m00, m01, m10, m11] = self.m;
        [
            (m00 + m11) * 0.5,
            i * (m01 + m10) * 0.5,
            (m10 - m01) * 0.5,
            i * (m00 - m11) * 0.5,
        ]
    }

    pub fn embed(q: Quat) -> Self {
        Self::from_coeffs([
            Complex64::new(q.w, 0.0),
            Complex64::new(q.x, 0.0),
            Complex64::new(q.y, 0.0),
            Complex64::new(q.z, 0.0),
        ])
    }

    /// Largest imaginary part among the basis coefficients.
    pub fn imag_residue(&self) -> f64 {
        self.coeffs().iter().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_real_quat(&self, tol: f64) -> bool {
        self.imag_residue() <= tol
    }

    /// Extract the real quaternion, checking the imaginary residue.
    pub fn to_quat(&self, tol: f64) -> Result<Quat> {
        let residue = self.imag_residue();
        if residue > tol {
            return Err(Error::NotRealQuaternion { residue, tol });
        }
        let c = self.coeffs();
        Ok(Quat::new(c[0].re, c[1].re, c[2].re, c[3].re))
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0] + self.m[3]
    }

    pub fn det(&self) -> Complex64 {
        self.m[0] * self.m[3] - self.m[1] * self.m[2]
    }

    /// Conjugate transpose. For real quaternions this is the quaternion
    /// conjugate: `dagger(e_j) = -e_j`.
    pub fn dagger(&self) -> Self {
        Self {
            m: [
                self.m[0].conj(),
                self.m[2].conj(),
                self.m[1].conj(),
                self.m[3].conj(),
            ],
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        let d = self.det();
        if d.norm_sqr() == 0.0 {
            return Err(Error::Singular("2x2 matrix with zero determinant".into()));
        }
        let inv = C1 / d;
        Ok(Self {
            m: [
                self.m[3] * inv,
                -self.m[1] * inv,
                -self.m[2] * inv,
                self.m[0] * inv,
            ],
        })
    }

    /// `<A, B> = Tr(A B^dagger) / 2`; complex in general, real and positive
    /// definite on real quaternions.
    pub fn scalar_product(&self, other: &CQuat) -> Complex64 {
        let mut acc = C0;
        for k in 0..4 {
            acc += self.m[k] * other.m[k].conj();
        }
        acc * 0.5
    }

    /// `sqrt(<A, A>)`; coincides with the quaternion norm on the real
    /// subalgebra (Frobenius norm over sqrt(2) in general).
    pub fn norm(&self) -> f64 {
        let mut acc = 0.0;
        for k in 0..4 {
            acc += self.m[k].norm_sqr();
        }
        (acc * 0.5).sqrt()
    }

    /// Spectral (operator) norm: largest singular value.
    pub fn op_norm(&self) -> f64 {
        // Eigenvalues of the 2x2 Hermitian A^dag A.
        let t: f64 = self.m.iter().map(|c| c.norm_sqr()).sum();
        let d = self.det().norm_sqr();
        let disc = (t * t * 0.25 - d).max(0.0);
        (t * 0.5 + disc.sqrt()).sqrt()
    }

    /// Imaginary-part projection: subtract the trace part, keeping the
    /// `e1, e2, e3` components. Linear and idempotent.
    pub fn im_project(&self) -> Self {
        let half_tr = self.trace() * 0.5;
        Self {
            m: [
                self.m[0] - half_tr,
                self.m[1],
                self.m[2],
                self.m[3] - half_tr,
            ],
        }
    }

    /// Matrix-vector action on a C^2 column vector.
    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.m[0] * v[0] + self.m[1] * v[1],
            self.m[2] * v[0] + self.m[3] * v[1],
        ]
    }
}

impl Add for CQuat {
    type Output = CQuat;
    fn add(self, o: CQuat) -> CQuat {
        CQuat {
            m: [
                self.m[0] + o.m[0],
                self.m[1] + o.m[1],
                self.m[2] + o.m[2],
                self.m[3] + o.m[3],
            ],
        }
    }
}

impl Sub for CQuat {
    type Output = CQuat;
    fn sub(self, o: CQuat) -> CQuat {
        CQuat {
            m: [
                self.m[0] - o.m[0],
                self.m[1] - o.m[1],
                self.m[2] - o.m[2],
                self.m[3] - o.m[3],
            ],
        }
    }
}

impl Neg for CQuat {
    type Output = CQuat;
    fn neg(self) -> CQuat {
        CQuat {
            m: [-self.m[0], -self.m[1], -self.m[2], -self.m[3]],
        }
    }
}

impl Mul for CQuat {
    type Output = CQuat;
    fn mul(self, o: CQuat) -> CQuat {
        CQuat {
            m: [
                self.m[0] * o.m[0] + self.m[1] * o.m[2],
                self.m[0] * o.m[1] + self.m[1] * o.m[3],
                self.m[2] * o.m[0] + self.m[3] * o.m[2],
                self.m[2] * o.m[1] + self.m[3] * o.m[3],
            ],
        }
    }
}

impl Mul<Complex64> for CQuat {
    type Output = CQuat;
    fn mul(self, s: Complex64) -> CQuat {
        CQuat {
            m: [self.m[0] * s, self.m[1] * s, self.m[2] * s, self.m[3] * s],
        }
    }
}

impl Mul<f64> for CQuat {
    type Output = CQuat;
    fn mul(self, s: f64) -> CQuat {
        CQuat {
            m: [self.m[0] * s, self.m[1] * s, self.m[2] * s, self.m[3] * s],
        }
    }
}

impl Norm for CQuat {
    fn norm(&self) -> f64 {
        CQuat::norm(self)
    }
}

/// `Quat` serializes as the coefficient array `[w, x, y, z]`.
impl serde::Serialize for Quat {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.w, self.x, self.y, self.z].serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for Quat {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [w, x, y, z] = <[f64; 4]>::deserialize(d)?;
        Ok(Quat::new(w, x, y, z))
    }
}

/// `CQuat` serializes as four `[re, im]` pairs: the complex coefficients on
/// the basis `(1, e1, e2, e3)`.
impl serde::Serialize for CQuat {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let c = self.coeffs();
        [
            [c[0].re, c[0].im],
            [c[1].re, c[1].im],
            [c[2].re, c[2].im],
            [c[3].re, c[3].im],
        ]
        .serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for CQuat {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs = <[[f64; 2]; 4]>::deserialize(d)?;
        Ok(CQuat::from_coeffs([
            Complex64::new(pairs[0][0], pairs[0][1]),
            Complex64::new(pairs[1][0], pairs[1][1]),
            Complex64::new(pairs[2][0], pairs[2][1]),
            Complex64::new(pairs[3][0], pairs[3][1]),
        ]))
    }
}
