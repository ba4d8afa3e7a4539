//! The quaternion-valued linear system, its compatibility condition, and
//! exact wave-function propagation.
//!
//! The system is
//!
//! ```text
//! D1 Psi = U Psi,   U = lambda (a e1 + b e2) + c e3 + h
//! D2 Psi = V Psi,   V = (1/lambda) (p e1 + q e2) + r e3 + s
//! ```
//!
//! with eight real coefficient functions on a grid domain. On a finite time
//! scale the delta derivative is a forward difference, so each equation reads
//! as an exact transfer: `Psi^sigma = (1 + eps U) Psi`. Propagation therefore
//! solves the system to machine precision; there is no integration error to
//! converge away. The derivative of the wave function with respect to the
//! spectral parameter is propagated alongside, using the analytic derivative
//! of the transfer matrix, never finite differences.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quatalg::CQuat;
use crate::timescale::{Direction, GridDomain, GridFunction};

/// The eight real grid functions of the linear system, sharing one domain.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    domain: Arc<GridDomain>,
    pub a: GridFunction<f64>,
    pub b: GridFunction<f64>,
    pub c: GridFunction<f64>,
    pub h: GridFunction<f64>,
    pub p: GridFunction<f64>,
    pub q: GridFunction<f64>,
    pub r: GridFunction<f64>,
    pub s: GridFunction<f64>,
}

/// Wave function and its analytic lambda-derivative over a grid, at one
/// value of the spectral parameter.
#[derive(Debug, Clone)]
pub struct WaveField {
    pub lambda: Complex64,
    pub psi: GridFunction<CQuat>,
    pub psi_lambda: GridFunction<CQuat>,
    pub init: CQuat,
}

/// Reduction-symmetry and path-independence residuals from [`verify_lax`].
#[derive(Debug, Clone, Copy)]
pub struct LaxReport {
    /// Max node-wise norm difference between row-major and column-major sweeps.
    pub path_independence: f64,
    /// Max deviation of `U(-lambda)` from `e3 U(lambda) e3^-1` (and V alike).
    pub red1: f64,
    /// Max deviation of `U^dag(conj lambda) U(lambda)` from its scalar value
    /// `lambda^2 (a^2+b^2) + c^2 + h^2` (and V alike).
    pub red2: f64,
}

impl CoefficientField {
    /// The constant seed `a = p = 1`, everything else zero. Both Lax matrices
    /// are then proportional to `e1`, so the compatibility condition holds
    /// exactly on every grid.
    pub fn vacuum(domain: Arc<GridDomain>) -> Self {
        let one = GridFunction::fill(Arc::clone(&domain), 1.0);
        let zero = GridFunction::fill(Arc::clone(&domain), 0.0);
        Self {
            a: one.clone(),
            b: zero.clone(),
            c: zero.clone(),
            h: zero.clone(),
            p: one,
            q: zero.clone(),
            r: zero.clone(),
            s: zero,
            domain,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        domain: Arc<GridDomain>,
        a: GridFunction<f64>,
        b: GridFunction<f64>,
        c: GridFunction<f64>,
        h: GridFunction<f64>,
        p: GridFunction<f64>,
        q: GridFunction<f64>,
        r: GridFunction<f64>,
        s: GridFunction<f64>,
    ) -> Result<Self> {
        for (name, g) in [
            ("a", &a),
            ("b", &b),
            ("c", &c),
            ("h", &h),
            ("p", &p),
            ("q", &q),
            ("r", &r),
            ("s", &s),
        ] {
            if g.domain().as_ref() != domain.as_ref() {
                return Err(Error::DomainMismatch(format!(
                    "coefficient {name} lives on a different grid"
                )));
            }
        }
        Ok(Self {
            domain,
            a,
            b,
            c,
            h,
            p,
            q,
            r,
            s,
        })
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    /// Does the field claim Chebyshev structure: `a^2 + b^2` a function of
    /// `t1` only and `p^2 + q^2` of `t2` only, within `tol`?
    pub fn is_chebyshev(&self, tol: f64) -> bool {
        let (n1, n2) = (self.domain.n1(), self.domain.n2());
        for i in 0..n1 {
            let e0 = self.a.get(i, 0).powi(2) + self.b.get(i, 0).powi(2);
            for j in 1..n2 {
                let e = self.a.get(i, j).powi(2) + self.b.get(i, j).powi(2);
                if (e - e0).abs() > tol {
                    return false;
                }
            }
        }
        for j in 0..n2 {
            let g0 = self.p.get(0, j).powi(2) + self.q.get(0, j).powi(2);
            for i in 1..n1 {
                let g = self.p.get(i, j).powi(2) + self.q.get(i, j).powi(2);
                if (g - g0).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// `U = lambda (a e1 + b e2) + c e3 + h` at a node.
    pub fn assemble_u(&self, i: usize, j: usize, lambda: Complex64) -> CQuat {
        let ab = CQuat::E1 * self.a.get(i, j) + CQuat::E2 * self.b.get(i, j);
        ab * lambda + CQuat::E3 * self.c.get(i, j) + CQuat::real_scalar(self.h.get(i, j))
    }

    /// `V = lambda^-1 (p e1 + q e2) + r e3 + s` at a node.
    pub fn assemble_v(&self, i: usize, j: usize, lambda: Complex64) -> Result<CQuat> {
        if lambda.norm_sqr() == 0.0 {
            return Err(Error::Lambda("V requires lambda != 0".into()));
        }
        let pq = CQuat::E1 * self.p.get(i, j) + CQuat::E2 * self.q.get(i, j);
        Ok(pq * lambda.inv() + CQuat::E3 * self.r.get(i, j) + CQuat::real_scalar(self.s.get(i, j)))
    }

    /// Analytic lambda-derivative of U: `a e1 + b e2`.
    pub fn assemble_u_lambda(&self, i: usize, j: usize) -> CQuat {
        CQuat::E1 * self.a.get(i, j) + CQuat::E2 * self.b.get(i, j)
    }

    /// Analytic lambda-derivative of V: `-lambda^-2 (p e1 + q e2)`.
    pub fn assemble_v_lambda(&self, i: usize, j: usize, lambda: Complex64) -> Result<CQuat> {
        if lambda.norm_sqr() == 0.0 {
            return Err(Error::Lambda("V_lambda requires lambda != 0".into()));
        }
        let pq = CQuat::E1 * self.p.get(i, j) + CQuat::E2 * self.q.get(i, j);
        Ok(pq * (-(lambda * lambda).inv()))
    }

    fn lax_matrix(&self, dir: Direction, i: usize, j: usize, lambda: Complex64) -> Result<CQuat> {
        match dir {
            Direction::T1 => Ok(self.assemble_u(i, j, lambda)),
            Direction::T2 => self.assemble_v(i, j, lambda),
        }
    }

    fn lax_matrix_lambda(
        &self,
        dir: Direction,
        i: usize,
        j: usize,
        lambda: Complex64,
    ) -> Result<CQuat> {
        match dir {
            Direction::T1 => Ok(self.assemble_u_lambda(i, j)),
            Direction::T2 => self.assemble_v_lambda(i, j, lambda),
        }
    }
}

/// One exact transfer step: advances `(psi, psi_lambda)` from a node to its
/// successor in `dir`.
fn step(
    cf: &CoefficientField,
    dir: Direction,
    i: usize,
    j: usize,
    lambda: Complex64,
    psi: CQuat,
    psi_lambda: CQuat,
) -> Result<(CQuat, CQuat)> {
    let eps = cf.domain.graininess(dir, i, j);
    let u = cf.lax_matrix(dir, i, j, lambda)?;
    let ul = cf.lax_matrix_lambda(dir, i, j, lambda)?;
    let transfer = CQuat::ONE + u * eps;
    if transfer.det().norm() < 1e-14 {
        return Err(Error::SingularTransfer {
            i,
            j,
            dir: match dir {
                Direction::T1 => 1,
                Direction::T2 => 2,
            },
        });
    }
    let next_psi = transfer * psi;
    let next_psi_lambda = ul * eps * psi + transfer * psi_lambda;
    Ok((next_psi, next_psi_lambda))
}

/// Propagate the wave function and its lambda-derivative over the whole grid.
///
/// Sweep order is row-major: first along `t1` at `j = 0`, then one `t2` step
/// per column. When the compatibility condition holds the order is irrelevant
/// up to rounding; [`verify_lax`] measures this rather than assuming it.
pub fn propagate(cf: &CoefficientField, lambda: Complex64, init: CQuat) -> Result<WaveField> {
    if lambda.norm_sqr() == 0.0 {
        return Err(Error::Lambda("propagate requires lambda != 0".into()));
    }
    let domain = Arc::clone(cf.domain());
    let (n1, n2) = (domain.n1(), domain.n2());
    let mut psi = GridFunction::fill(Arc::clone(&domain), CQuat::ZERO);
    let mut psi_lambda = GridFunction::fill(Arc::clone(&domain), CQuat::ZERO);
    psi.set(0, 0, init);
    for i in 0..n1 - 1 {
        let (np, nl) = step(
            cf,
            Direction::T1,
            i,
            0,
            lambda,
            psi.get(i, 0),
            psi_lambda.get(i, 0),
        )?;
        psi.set(i + 1, 0, np);
        psi_lambda.set(i + 1, 0, nl);
    }
    for j in 0..n2 - 1 {
        for i in 0..n1 {
            let (np, nl) = step(
                cf,
                Direction::T2,
                i,
                j,
                lambda,
                psi.get(i, j),
                psi_lambda.get(i, j),
            )?;
            psi.set(i, j + 1, np);
            psi_lambda.set(i, j + 1, nl);
        }
    }
    Ok(WaveField {
        lambda,
        psi,
        psi_lambda,
        init,
    })
}

/// Column-major sweep (first along `t2` at `i = 0`). Verification only; the
/// canonical order is [`propagate`].
pub fn propagate_column_major(
    cf: &CoefficientField,
    lambda: Complex64,
    init: CQuat,
) -> Result<WaveField> {
    if lambda.norm_sqr() == 0.0 {
        return Err(Error::Lambda("propagate requires lambda != 0".into()));
    }
    let domain = Arc::clone(cf.domain());
    let (n1, n2) = (domain.n1(), domain.n2());
    let mut psi = GridFunction::fill(Arc::clone(&domain), CQuat::ZERO);
    let mut psi_lambda = GridFunction::fill(Arc::clone(&domain), CQuat::ZERO);
    psi.set(0, 0, init);
    for j in 0..n2 - 1 {
        let (np, nl) = step(
            cf,
            Direction::T2,
            0,
            j,
            lambda,
            psi.get(0, j),
            psi_lambda.get(0, j),
        )?;
        psi.set(0, j + 1, np);
        psi_lambda.set(0, j + 1, nl);
    }
    for i in 0..n1 - 1 {
        for j in 0..n2 {
            let (np, nl) = step(
                cf,
                Direction::T1,
                i,
                j,
                lambda,
                psi.get(i, j),
                psi_lambda.get(i, j),
            )?;
            psi.set(i + 1, j, np);
            psi_lambda.set(i + 1, j, nl);
        }
    }
    Ok(WaveField {
        lambda,
        psi,
        psi_lambda,
        init,
    })
}

/// Left side of the compatibility condition
/// `D2 U - D1 V + sigma2(U) V - sigma1(V) U` at every node with successors in
/// both directions, plus the largest operator norm among the residuals.
pub fn compatibility_residual(
    cf: &CoefficientField,
    lambda: Complex64,
) -> Result<(GridFunction<Option<CQuat>>, f64)> {
    let domain = Arc::clone(cf.domain());
    let (n1, n2) = (domain.n1(), domain.n2());
    if n1 < 2 || n2 < 2 {
        return Err(Error::GridTooSmall {
            need1: 2,
            need2: 2,
            got1: n1,
            got2: n2,
        });
    }
    let mut worst: f64 = 0.0;
    let mut values = Vec::with_capacity(n1 * n2);
    for i in 0..n1 {
        for j in 0..n2 {
            if i + 1 >= n1 || j + 1 >= n2 {
                values.push(None);
                continue;
            }
            let e1 = domain.t1().graininess(i);
            let e2 = domain.t2().graininess(j);
            let u = cf.assemble_u(i, j, lambda);
            let u_s2 = cf.assemble_u(i, j + 1, lambda);
            let v = cf.assemble_v(i, j, lambda)?;
            let v_s1 = cf.assemble_v(i + 1, j, lambda)?;
            let res = (u_s2 - u) * (1.0 / e2) - (v_s1 - v) * (1.0 / e1) + u_s2 * v - v_s1 * u;
            worst = worst.max(res.op_norm());
            values.push(Some(res));
        }
    }
    let gf = GridFunction::from_values(domain, values)?;
    Ok((gf, worst))
}

/// Path-independence and reduction-group residuals at a real, nonzero
/// spectral parameter.
pub fn verify_lax(cf: &CoefficientField, lambda: f64) -> Result<LaxReport> {
    if lambda == 0.0 {
        return Err(Error::Lambda("verify_lax requires lambda != 0".into()));
    }
    let lam = Complex64::new(lambda, 0.0);
    let row = propagate(cf, lam, CQuat::ONE)?;
    let col = propagate_column_major(cf, lam, CQuat::ONE)?;
    let mut path: f64 = 0.0;
    for (a, b) in row.psi.values().iter().zip(col.psi.values()) {
        path = path.max((*a - *b).op_norm());
    }

    let e3_inv = CQuat::E3.inverse().expect("e3 is a unit");
    let (n1, n2) = (cf.domain.n1(), cf.domain.n2());
    let mut red1: f64 = 0.0;
    let mut red2: f64 = 0.0;
    for i in 0..n1 {
        for j in 0..n2 {
            let u_plus = cf.assemble_u(i, j, lam);
            let u_minus = cf.assemble_u(i, j, -lam);
            let v_plus = cf.assemble_v(i, j, lam)?;
            let v_minus = cf.assemble_v(i, j, -lam)?;
            red1 = red1.max((u_minus - CQuat::E3 * u_plus * e3_inv).op_norm());
            red1 = red1.max((v_minus - CQuat::E3 * v_plus * e3_inv).op_norm());

            let (a, b, c, h) = (
                cf.a.get(i, j),
                cf.b.get(i, j),
                cf.c.get(i, j),
                cf.h.get(i, j),
            );
            let (p, q, r, s) = (
                cf.p.get(i, j),
                cf.q.get(i, j),
                cf.r.get(i, j),
                cf.s.get(i, j),
            );
            let u_scalar = lambda * lambda * (a * a + b * b) + c * c + h * h;
            let v_scalar = (p * p + q * q) / (lambda * lambda) + r * r + s * s;
            red2 = red2.max((u_plus.dagger() * u_plus - CQuat::real_scalar(u_scalar)).op_norm());
            red2 = red2.max((v_plus.dagger() * v_plus - CQuat::real_scalar(v_scalar)).op_norm());
        }
    }
    Ok(LaxReport {
        path_independence: path,
        red1,
        red2,
    })
}

/// Compare the analytically propagated lambda-derivative against a central
/// finite difference in lambda. Returns the max absolute deviation relative
/// to the largest `|Psi_lambda|` over the grid.
pub fn psi_lambda_fd_residual(cf: &CoefficientField, lambda: f64, fd_step: f64) -> Result<f64> {
    let lam = Complex64::new(lambda, 0.0);
    let wf = propagate(cf, lam, CQuat::ONE)?;
    let plus = propagate(cf, Complex64::new(lambda + fd_step, 0.0), CQuat::ONE)?;
    let minus = propagate(cf, Complex64::new(lambda - fd_step, 0.0), CQuat::ONE)?;
    let mut scale: f64 = 0.0;
    for v in wf.psi_lambda.values() {
        scale = scale.max(v.op_norm());
    }
    if scale == 0.0 {
        return Ok(0.0);
    }
    let mut worst: f64 = 0.0;
    for ((pl, pp), pm) in wf
        .psi_lambda
        .values()
        .iter()
        .zip(plus.psi.values())
        .zip(minus.psi.values())
    {
        let fd = (*pp - *pm) * (0.5 / fd_step);
        worst = worst.max((*pl - fd).op_norm());
    }
    Ok(worst / scale)
}

impl WaveField {
    /// Diagnostic dump: wave values and their lambda-derivatives as
    /// coefficient arrays, row-major.
    pub fn to_json(&self) -> serde_json::Value {
        let d = self.psi.domain();
        let rows = |g: &GridFunction<CQuat>| -> Vec<Vec<CQuat>> {
            (0..d.n1())
                .map(|i| (0..d.n2()).map(|j| g.get(i, j)).collect())
                .collect()
        };
        serde_json::json!({
            "lambda": [self.lambda.re, self.lambda.im],
            "init": self.init,
            "psi": rows(&self.psi),
            "psi_lambda": rows(&self.psi_lambda),
        })
    }
}

/// Max residual of the forward-difference form of the linear system itself:
/// `|(Psi^sigma - Psi)/eps - U Psi|` over all transfers actually taken.
/// Zero up to rounding by construction; exposed so the exactness claim is a
/// measured quantity rather than an assumption.
pub fn lax_equation_residual(cf: &CoefficientField, wf: &WaveField) -> Result<f64> {
    let domain = cf.domain();
    if domain.as_ref() != wf.psi.domain().as_ref() {
        return Err(Error::DomainMismatch(
            "wave field domain differs from coefficient field".into(),
        ));
    }
    let (n1, n2) = (domain.n1(), domain.n2());
    let mut worst: f64 = 0.0;
    for i in 0..n1 {
        for j in 0..n2 {
            if i + 1 < n1 {
                let e = domain.t1().graininess(i);
                let lhs = (wf.psi.get(i + 1, j) - wf.psi.get(i, j)) * (1.0 / e);
                let rhs = cf.assemble_u(i, j, wf.lambda) * wf.psi.get(i, j);
                worst = worst.max((lhs - rhs).op_norm());
            }
            if j + 1 < n2 {
                let e = domain.t2().graininess(j);
                let lhs = (wf.psi.get(i, j + 1) - wf.psi.get(i, j)) * (1.0 / e);
                let rhs = cf.assemble_v(i, j, wf.lambda)? * wf.psi.get(i, j);
                worst = worst.max((lhs - rhs).op_norm());
            }
        }
    }
    Ok(worst)
}
