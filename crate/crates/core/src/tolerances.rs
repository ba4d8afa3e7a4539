//! Pinned verification thresholds.
//!
//! Every gate used by the verification pipeline and the acceptance suite is
//! defined here, once. The identities being checked are exact on finite time
//! scales, so each threshold is a rounding budget, not a convergence target.

/// Compatibility residual of the vacuum seed. Both Lax matrices are constant
/// multiples of `e1`; everything cancels exactly, leaving pure rounding.
pub const VACUUM_COMPATIBILITY: f64 = 1e-13;

/// Compatibility residual of Darboux-transformed fields. The projector is
/// built from exactly propagated wave values, so the residual is accumulated
/// rounding through a few hundred 2x2 products per node.
pub const TRANSFORMED_COMPATIBILITY: f64 = 1e-9;

/// Row-major vs column-major propagation difference. Compatibility makes the
/// transfers commute identically; order sensitivity is rounding only.
pub const PATH_INDEPENDENCE: f64 = 1e-10;

/// Reduction-group identities of the Lax matrices. Structural, node-local.
pub const REDUCTION: f64 = 1e-12;

/// Analytic lambda-derivative vs central finite difference (step 1e-5),
/// measured relative to the largest `|Psi_lambda|` over the grid. Dominated
/// by the O(h^2) truncation of the difference quotient.
pub const PSI_LAMBDA_FD: f64 = 1e-8;

/// Finite-difference step for the lambda-derivative cross-check.
pub const PSI_LAMBDA_FD_STEP: f64 = 1e-5;

/// Relative curvature error |K + 4 lambda^2| / (4 lambda^2) over
/// non-degenerate nodes of a spectrally generated net.
pub const CURVATURE_REL: f64 = 1e-8;

/// Asymptotic and weak-Chebyshev residual gate (the config may override).
pub const NET_RESIDUAL: f64 = 1e-9;

/// Dot-product vs tetrahedron curvature, relative, on well-conditioned cells
/// (the config may override).
pub const TET_CROSS: f64 = 1e-6;

/// Relative spread of the ratios sin(theta_j) / (eps_j |Delta_j r|) over a
/// surface; constant for asymptotic weak-Chebyshev nets.
pub const TORS_SPREAD: f64 = 1e-8;

/// Relative spread of the Backlund segment length kappa / (lambda^2 + kappa^2).
pub const SEGMENT_SPREAD: f64 = 1e-10;

/// Tangency |(r~ - r) . n| of the Backlund segment.
pub const SEGMENT_TANGENCY: f64 = 1e-10;

/// Residual of the four-equation projector system and of the dressed wave
/// field against the transformed Lax pair.
pub const DRESSING_RESIDUAL: f64 = 1e-9;

/// Randomized algebra identities (norm multiplicativity, dagger
/// anti-homomorphism, Leibniz rules, projector invariants).
pub const ALGEBRA: f64 = 1e-10;

/// Cross-product normal vs spectral normal after one global sign flip.
pub const NORMAL_CONSISTENCY: f64 = 1e-10;

/// Coordinate agreement after an OBJ write/read cycle (10 significant digits
/// are written).
pub const OBJ_ROUNDTRIP: f64 = 1e-8;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[allow(clippy::assertions_on_constants)]
    fn hierarchy_is_ordered() {
        assert!(VACUUM_COMPATIBILITY < PATH_INDEPENDENCE);
        assert!(PATH_INDEPENDENCE < TRANSFORMED_COMPATIBILITY);
        assert!(REDUCTION < NET_RESIDUAL);
        assert!(CURVATURE_REL < TET_CROSS);
        assert!(SEGMENT_SPREAD < CURVATURE_REL);
    }
}
