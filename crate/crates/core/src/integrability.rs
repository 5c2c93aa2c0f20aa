//! Integrability-by-symmetries diagnostics: time-component commuting
//! corrections, pairwise commutator residuals, independence rank of the
//! Noether integrals and the invariance/constancy checks.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::expr::{eval_jet, Expression};
use crate::geometry::{characteristic_field, FieldValue, PhasePoint, SystemSpec};
use crate::noether::{directional_derivative, lie_bracket, SymmetryCandidate};

/// Default relative singular-value threshold for the rank test.
pub const SV_TOL: f64 = 1e-8;
/// Default tolerance for commutator residuals.
pub const BRACKET_TOL: f64 = 1e-6;

/// `zeta - dt(zeta) * Z`; the result has dt-component exactly zero.
pub fn commuting_adjust(
    sys: &SystemSpec,
    zeta: &SymmetryCandidate,
    x: &PhasePoint,
) -> Result<FieldValue> {
    let v = zeta.eval(sys, x)?;
    let z = characteristic_field(sys, x)?;
    let mut out = v.sub(&z.scale(v.tau));
    out.tau = 0.0;
    Ok(out)
}

/// Max-norms of the pairwise commutators of the adjusted symmetries, plus a
/// row for the commutators with `Z`.
#[derive(Debug, Clone)]
pub struct CommutationReport {
    /// `pairwise[i][j] = max over points of ||[adj(zeta_i), adj(zeta_j)]||`,
    /// `i < r`, `j < m`.
    pub pairwise: Vec<Vec<f64>>,
    /// `with_z[i] = max over points of ||[Z, adj(zeta_i)]||`.
    pub with_z: Vec<f64>,
}

impl CommutationReport {
    pub fn max_residual(&self) -> f64 {
        let mut m: f64 = 0.0;
        for row in &self.pairwise {
            for v in row {
                m = m.max(*v);
            }
        }
        for v in &self.with_z {
            m = m.max(*v);
        }
        m
    }
}

pub fn commutation_report(
    sys: &SystemSpec,
    symmetries: &[SymmetryCandidate],
    r: usize,
    points: &[PhasePoint],
) -> Result<CommutationReport> {
    let m = symmetries.len();
    assert!(r <= m, "commuting subset size r={r} exceeds m={m}");
    let adjusted: Vec<SymmetryCandidate> =
        symmetries.iter().map(|z| z.clone().time_adjusted()).collect();
    let mut pairwise = vec![vec![0.0_f64; m]; r];
    let mut with_z = vec![0.0_f64; m];
    for x in points {
        for i in 0..r {
            for j in 0..m {
                let b = lie_bracket(sys, &adjusted[i], &adjusted[j], x)?;
                pairwise[i][j] = pairwise[i][j].max(b.max_norm());
            }
        }
        for (i, adj) in adjusted.iter().enumerate() {
            let b = lie_bracket(sys, &SymmetryCandidate::Characteristic, adj, x)?;
            with_z[i] = with_z[i].max(b.max_norm());
        }
    }
    Ok(CommutationReport { pairwise, with_z })
}

/// Rank of the gradient matrix of the integrals, per point and overall.
#[derive(Debug, Clone)]
pub struct RankReport {
    /// Minimum rank across the sample points.
    pub rank: usize,
    /// Per-point singular values (nonincreasing) and rank.
    pub detail: Vec<(PhasePoint, Vec<f64>, usize)>,
}

pub fn independence_rank(
    sys: &SystemSpec,
    integrals: &[Expression],
    points: &[PhasePoint],
    sv_tol: f64,
) -> Result<RankReport> {
    let m = integrals.len();
    let dim = 2 * sys.n + 1;
    let mut detail = Vec::with_capacity(points.len());
    let mut min_rank = usize::MAX;
    for x in points {
        let mut mat = DMatrix::zeros(m, dim);
        for (i, f) in integrals.iter().enumerate() {
            let jf = eval_jet(f, x, &sys.params, 1)?;
            for (j, g) in jf.grad().iter().enumerate() {
                mat[(i, j)] = *g;
            }
        }
        let mut sv: Vec<f64> = mat.singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let top = sv.first().copied().unwrap_or(0.0);
        let rank = if top == 0.0 { 0 } else { sv.iter().filter(|&&s| s > sv_tol * top).count() };
        min_rank = min_rank.min(rank);
        detail.push((x.clone(), sv, rank));
    }
    Ok(RankReport { rank: if min_rank == usize::MAX { 0 } else { min_rank }, detail })
}

/// Directional derivatives `zeta_i(J_j)` sampled over points.
#[derive(Debug, Clone)]
pub struct InvarianceReport {
    /// Per-entry mean over points.
    pub mean: Vec<Vec<f64>>,
    /// Per-entry sample standard deviation over points.
    pub stddev: Vec<Vec<f64>>,
    pub max_abs_mean: f64,
    pub max_stddev: f64,
}

pub fn invariance_matrix(
    sys: &SystemSpec,
    symmetries: &[SymmetryCandidate],
    integrals: &[Expression],
    points: &[PhasePoint],
) -> Result<InvarianceReport> {
    let r = symmetries.len();
    let m = integrals.len();
    let k = points.len() as f64;
    let mut sums = vec![vec![0.0_f64; m]; r];
    let mut sq = vec![vec![0.0_f64; m]; r];
    for x in points {
        for (i, zeta) in symmetries.iter().enumerate() {
            let v = zeta.eval(sys, x)?;
            for (j, f) in integrals.iter().enumerate() {
                let d = directional_derivative(sys, f, &v, x)?;
                sums[i][j] += d;
                sq[i][j] += d * d;
            }
        }
    }
    let mut mean = vec![vec![0.0_f64; m]; r];
    let mut stddev = vec![vec![0.0_f64; m]; r];
    let mut max_abs_mean: f64 = 0.0;
    let mut max_stddev: f64 = 0.0;
    for i in 0..r {
        for j in 0..m {
            let mu = sums[i][j] / k;
            let var = (sq[i][j] / k - mu * mu).max(0.0);
            mean[i][j] = mu;
            stddev[i][j] = var.sqrt();
            max_abs_mean = max_abs_mean.max(mu.abs());
            max_stddev = max_stddev.max(stddev[i][j]);
        }
    }
    Ok(InvarianceReport { mean, stddev, max_abs_mean, max_stddev })
}

/// Full integrability hypothesis check for a set of
/// integral-derived symmetries.
#[derive(Debug, Clone)]
pub struct IntegrabilityReport {
    pub m: usize,
    pub r: usize,
    pub commutators: CommutationReport,
    pub rank: RankReport,
    pub invariance: InvarianceReport,
    pub sample_points: Vec<PhasePoint>,
}

impl IntegrabilityReport {
    pub fn hypotheses_satisfied(&self, bracket_tol: f64, invariance_tol: f64) -> bool {
        self.commutators.max_residual() <= bracket_tol
            && self.rank.rank == self.m
            && self.invariance.max_abs_mean <= invariance_tol
    }
}

pub fn integrability_report(
    sys: &SystemSpec,
    integrals: &[Expression],
    r: usize,
    points: &[PhasePoint],
    sv_tol: f64,
) -> Result<IntegrabilityReport> {
    let symmetries: Vec<SymmetryCandidate> =
        integrals.iter().map(|f| SymmetryCandidate::derived(f.clone())).collect();
    let commutators = commutation_report(sys, &symmetries, r, points)?;
    let rank = independence_rank(sys, integrals, points, sv_tol)?;
    let invariance = invariance_matrix(sys, &symmetries, integrals, points)?;
    Ok(IntegrabilityReport {
        m: integrals.len(),
        r,
        commutators,
        rank,
        invariance,
        sample_points: points.to_vec(),
    })
}
