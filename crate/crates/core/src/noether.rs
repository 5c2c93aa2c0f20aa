//! Noether symmetries: the closed-form symmetry associated to a first
//! integral, symmetry-condition residuals, contact Hamiltonian fields,
//! weak-to-strong conversion and Lie brackets.

use crate::error::{Error, Result};
use crate::expr::{eval_jet, Expression, Jet2};
use crate::geometry::{
    characteristic_field, dpc_contract, elementary_action, BetaForm, FieldValue, PhasePoint,
    SystemSpec,
};
use crate::jet::Jet;

/// A symmetry vector field on the extended phase space, evaluable at any
/// admissible point both to a [`FieldValue`] and to first-order jets of its
/// components.
#[derive(Debug, Clone)]
pub enum SymmetryCandidate {
    /// Components given as explicit expressions over `(t, q, p)`.
    Explicit { tau: Expression, xi: Vec<Expression>, eta: Vec<Expression> },
    /// Derived from a first integral via the inverse Noether construction;
    /// component derivatives are assembled by chain rule from second
    /// derivatives of `H` and `F`.
    Derived { integral: Expression },
    /// The characteristic field `Z` itself.
    Characteristic,
    /// `base - dt(base) * Z` (time-component commuting correction).
    TimeAdjusted { base: Box<SymmetryCandidate> },
    /// `base + rho^-1 (beta(base) - f) * Z` (weak-to-strong conversion).
    WeakAdjusted { base: Box<SymmetryCandidate>, beta: BetaForm, gauge: Option<Expression> },
    /// Constant rescaling of another candidate.
    Scaled { base: Box<SymmetryCandidate>, factor: f64 },
}

/// First-order jets of the components of a vector field, in the coordinate
/// ordering `(tau, xi1..xin, eta1..etan)`.
#[derive(Debug, Clone)]
pub struct FieldJets {
    pub tau: Jet,
    pub xi: Vec<Jet>,
    pub eta: Vec<Jet>,
}

impl FieldJets {
    pub fn value(&self) -> FieldValue {
        FieldValue {
            tau: self.tau.value,
            xi: self.xi.iter().map(|j| j.value).collect(),
            eta: self.eta.iter().map(|j| j.value).collect(),
        }
    }

    fn components(&self) -> Vec<&Jet> {
        let mut out = Vec::with_capacity(2 * self.xi.len() + 1);
        out.push(&self.tau);
        out.extend(self.xi.iter());
        out.extend(self.eta.iter());
        out
    }

    fn map2(&self, rhs: &FieldJets, f: impl Fn(&Jet, &Jet) -> Jet) -> FieldJets {
        FieldJets {
            tau: f(&self.tau, &rhs.tau),
            xi: self.xi.iter().zip(&rhs.xi).map(|(a, b)| f(a, b)).collect(),
            eta: self.eta.iter().zip(&rhs.eta).map(|(a, b)| f(a, b)).collect(),
        }
    }

    fn scale_jet(&self, c: &Jet) -> FieldJets {
        FieldJets {
            tau: self.tau.mul(c),
            xi: self.xi.iter().map(|j| j.mul(c)).collect(),
            eta: self.eta.iter().map(|j| j.mul(c)).collect(),
        }
    }
}

/// First-order jet of a first partial `d expr / d x_k`, read off a
/// second-order jet: value from the gradient, gradient from the Hessian row.
fn partial_jet(j2: &Jet2, k: usize) -> Jet {
    let dim = j2.jet.dim;
    let mut grad = Vec::with_capacity(dim);
    for l in 0..dim {
        grad.push(j2.jet.hess_at(k, l));
    }
    Jet { dim, order: 1, value: j2.jet.grad[k], grad, hess: Vec::new() }
}

/// First-order jet of the expression value itself, read off a second-order jet.
fn value_jet(j2: &Jet2) -> Jet {
    Jet { dim: j2.jet.dim, order: 1, value: j2.jet.value, grad: j2.jet.grad.clone(), hess: Vec::new() }
}

struct HamiltonianJets {
    hq: Vec<Jet>,
    hp: Vec<Jet>,
    /// Elementary action `rho = sum p_i dH/dp_i - H`.
    rho: Jet,
    /// Coordinate jets for `p_i`.
    p: Vec<Jet>,
}

fn hamiltonian_jets(sys: &SystemSpec, x: &PhasePoint) -> Result<HamiltonianJets> {
    let n = sys.n;
    let dim = 2 * n + 1;
    let j2 = sys.hamiltonian_jet(x, 2)?;
    let h = value_jet(&j2);
    let hq: Vec<Jet> = (0..n).map(|i| partial_jet(&j2, 1 + i)).collect();
    let hp: Vec<Jet> = (0..n).map(|i| partial_jet(&j2, 1 + n + i)).collect();
    let p: Vec<Jet> = (0..n).map(|i| Jet::coordinate(dim, 1, 1 + n + i, x.p[i])).collect();
    let mut rho = h.neg();
    for i in 0..n {
        rho = rho.add(&p[i].mul(&hp[i]));
    }
    Ok(HamiltonianJets { hq, hp, rho, p })
}

fn characteristic_jets(hj: &HamiltonianJets, dim: usize) -> FieldJets {
    FieldJets {
        tau: Jet::constant(dim, 1, 1.0),
        xi: hj.hp.clone(),
        eta: hj.hq.iter().map(|j| j.neg()).collect(),
    }
}

impl SymmetryCandidate {
    pub fn derived(integral: Expression) -> SymmetryCandidate {
        SymmetryCandidate::Derived { integral }
    }

    pub fn time_adjusted(self) -> SymmetryCandidate {
        SymmetryCandidate::TimeAdjusted { base: Box::new(self) }
    }

    /// Evaluate the field at `x`.
    pub fn eval(&self, sys: &SystemSpec, x: &PhasePoint) -> Result<FieldValue> {
        match self {
            SymmetryCandidate::Explicit { tau, xi, eta } => {
                let tv = eval_jet(tau, x, &sys.params, 0)?.value();
                let xv: Result<Vec<f64>> =
                    xi.iter().map(|e| Ok(eval_jet(e, x, &sys.params, 0)?.value())).collect();
                let ev: Result<Vec<f64>> =
                    eta.iter().map(|e| Ok(eval_jet(e, x, &sys.params, 0)?.value())).collect();
                Ok(FieldValue { tau: tv, xi: xv?, eta: ev? })
            }
            SymmetryCandidate::Derived { integral } => {
                inverse_noether(sys, integral, x, crate::geometry::EPS_RHO)
            }
            SymmetryCandidate::Characteristic => characteristic_field(sys, x),
            _ => Ok(self.jets(sys, x)?.value()),
        }
    }

    /// First-order jets of the components at `x`. For derived candidates the
    /// derivatives come from the exact chain rule through second derivatives
    /// of `H` and the integral, not from differencing.
    pub fn jets(&self, sys: &SystemSpec, x: &PhasePoint) -> Result<FieldJets> {
        let n = sys.n;
        let dim = 2 * n + 1;
        match self {
            SymmetryCandidate::Explicit { tau, xi, eta } => {
                let jt = value_jet(&eval_jet(tau, x, &sys.params, 1)?);
                let jx: Result<Vec<Jet>> =
                    xi.iter().map(|e| Ok(value_jet(&eval_jet(e, x, &sys.params, 1)?))).collect();
                let je: Result<Vec<Jet>> =
                    eta.iter().map(|e| Ok(value_jet(&eval_jet(e, x, &sys.params, 1)?))).collect();
                Ok(FieldJets { tau: jt, xi: jx?, eta: je? })
            }
            SymmetryCandidate::Derived { integral } => {
                let hj = hamiltonian_jets(sys, x)?;
                if hj.rho.value.abs() <= crate::geometry::EPS_RHO {
                    return Err(Error::ContactDegenerate { rho: hj.rho.value });
                }
                let jf2 = eval_jet(integral, x, &sys.params, 2)?;
                let f = value_jet(&jf2);
                let fq: Vec<Jet> = (0..n).map(|i| partial_jet(&jf2, 1 + i)).collect();
                let fp: Vec<Jet> = (0..n).map(|i| partial_jet(&jf2, 1 + n + i)).collect();
                let mut s = Jet::constant(dim, 1, 0.0);
                for j in 0..n {
                    s = s.add(&fp[j].mul(&hj.p[j]));
                }
                let rinv = hj.rho.recip("rho")?;
                // tau = rho^-1 (F - sum_j dF/dp_j p_j)
                let tau = rinv.mul(&f.sub(&s));
                let mut xi = Vec::with_capacity(n);
                let mut eta = Vec::with_capacity(n);
                for i in 0..n {
                    xi.push(tau.mul(&hj.hp[i]).add(&fp[i]));
                    eta.push(tau.mul(&hj.hq[i]).neg().sub(&fq[i]));
                }
                Ok(FieldJets { tau, xi, eta })
            }
            SymmetryCandidate::Characteristic => {
                let hj = hamiltonian_jets(sys, x)?;
                Ok(characteristic_jets(&hj, dim))
            }
            SymmetryCandidate::TimeAdjusted { base } => {
                let zeta = base.jets(sys, x)?;
                let hj = hamiltonian_jets(sys, x)?;
                let z = characteristic_jets(&hj, dim);
                let corr = z.scale_jet(&zeta.tau);
                Ok(zeta.map2(&corr, |a, b| a.sub(b)))
            }
            SymmetryCandidate::WeakAdjusted { base, beta, gauge } => {
                let zeta = base.jets(sys, x)?;
                let hj = hamiltonian_jets(sys, x)?;
                let z = characteristic_jets(&hj, dim);
                // beta(zeta) as a jet: constant coefficients pair with the
                // component jets; an exact part dg pairs through second
                // derivatives of g.
                let mut bz = Jet::constant(dim, 1, 0.0);
                if let Some(c) = &beta.constant {
                    bz = bz.add(&zeta.tau.scale(c.a));
                    for i in 0..n {
                        bz = bz.add(&zeta.xi[i].scale(c.b[i]));
                        bz = bz.add(&zeta.eta[i].scale(c.c[i]));
                    }
                }
                if let Some(g) = &beta.exact {
                    let jg2 = eval_jet(g, x, &sys.params, 2)?;
                    for (k, comp) in zeta.components().into_iter().enumerate() {
                        bz = bz.add(&partial_jet(&jg2, k).mul(comp));
                    }
                }
                if let Some(fexpr) = gauge {
                    let jf = value_jet(&eval_jet(fexpr, x, &sys.params, 1)?);
                    bz = bz.sub(&jf);
                }
                if hj.rho.value.abs() <= crate::geometry::EPS_RHO {
                    return Err(Error::ContactDegenerate { rho: hj.rho.value });
                }
                let nu = hj.rho.recip("rho")?.mul(&bz);
                let corr = z.scale_jet(&nu);
                Ok(zeta.map2(&corr, |a, b| a.add(b)))
            }
            SymmetryCandidate::Scaled { base, factor } => {
                let j = base.jets(sys, x)?;
                let c = Jet::constant(dim, 1, *factor);
                Ok(j.scale_jet(&c))
            }
        }
    }
}

/// Default tolerance for AD-exact identities.
pub const TOL_IDENTITY: f64 = 1e-9;

/// The unique Noether symmetry with `i_zeta (p dq - H dt) = F` on the region
/// where the elementary action does not vanish.
pub fn inverse_noether(
    sys: &SystemSpec,
    integral: &Expression,
    x: &PhasePoint,
    eps_rho: f64,
) -> Result<FieldValue> {
    let rho = elementary_action(sys, x)?;
    if rho.abs() <= eps_rho {
        return Err(Error::ContactDegenerate { rho });
    }
    let jh = sys.hamiltonian_jet(x, 1)?;
    let jf = eval_jet(integral, x, &sys.params, 1)?;
    let n = sys.n;
    let mut s = 0.0;
    for j in 0..n {
        s += jf.dp(j) * x.p[j];
    }
    let tau = (jf.value() - s) / rho;
    let mut v = FieldValue::zero(n);
    v.tau = tau;
    for i in 0..n {
        v.xi[i] = tau * jh.dp(i) + jf.dp(i);
        v.eta[i] = -tau * jh.dq(i) - jf.dq(i);
    }
    Ok(v)
}

/// Residuals of the pointwise symmetry conditions.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    pub r3: f64,
    pub max_rel: f64,
}

/// Evaluate the three symmetry conditions at `x` and report residuals,
/// each normalized by `1 + (sum of magnitudes of its terms)`.
pub fn symmetry_residuals(
    sys: &SystemSpec,
    zeta: &SymmetryCandidate,
    x: &PhasePoint,
) -> Result<ResidualReport> {
    let n = sys.n;
    let jets = zeta.jets(sys, x)?;
    let jh = sys.hamiltonian_jet(x, 1)?;
    let h = jh.value();

    let iq = |j: usize| 1 + j;
    let ip = |j: usize| 1 + n + j;

    let mut r1 = Vec::with_capacity(n);
    let mut r2 = Vec::with_capacity(n);
    let mut max_rel: f64 = 0.0;

    for j in 0..n {
        // sum_i p_i dxi^i/dp_j - H dtau/dp_j
        let mut v = 0.0;
        let mut scale = 0.0;
        for i in 0..n {
            let term = x.p[i] * jets.xi[i].grad[ip(j)];
            v += term;
            scale += term.abs();
        }
        let ht = h * jets.tau.grad[ip(j)];
        v -= ht;
        scale += ht.abs();
        r1.push(v);
        max_rel = max_rel.max(v.abs() / (1.0 + scale));
    }

    for j in 0..n {
        // eta^j + sum_i p_i dxi^i/dq_j - H dtau/dq_j
        let mut v = jets.eta[j].value;
        let mut scale = v.abs();
        for i in 0..n {
            let term = x.p[i] * jets.xi[i].grad[iq(j)];
            v += term;
            scale += term.abs();
        }
        let ht = h * jets.tau.grad[iq(j)];
        v -= ht;
        scale += ht.abs();
        r2.push(v);
        max_rel = max_rel.max(v.abs() / (1.0 + scale));
    }

    // sum_i (p_i dxi^i/dt - eta^i dH/dp_i - xi^i dH/dq_i) - H dtau/dt - tau dH/dt
    let mut r3 = 0.0;
    let mut scale3 = 0.0;
    for i in 0..n {
        let a = x.p[i] * jets.xi[i].grad[0];
        let b = jets.eta[i].value * jh.dp(i);
        let c = jets.xi[i].value * jh.dq(i);
        r3 += a - b - c;
        scale3 += a.abs() + b.abs() + c.abs();
    }
    let d = h * jets.tau.grad[0];
    let e = jets.tau.value * jh.dt();
    r3 -= d + e;
    scale3 += d.abs() + e.abs();
    max_rel = max_rel.max(r3.abs() / (1.0 + scale3));

    Ok(ResidualReport { r1, r2, r3, max_rel })
}

/// Weak-symmetry data: the closed perturbation form and the gauge function.
#[derive(Debug, Clone, Default)]
pub struct WeakData {
    pub beta: BetaForm,
    pub gauge: Option<Expression>,
}

/// The conserved quantity `J = sum p_i xi^i - H tau + beta(zeta) - f`.
pub fn noether_integral(
    sys: &SystemSpec,
    zeta: &SymmetryCandidate,
    weak: Option<&WeakData>,
    x: &PhasePoint,
) -> Result<f64> {
    let v = zeta.eval(sys, x)?;
    let h = sys.hamiltonian_jet(x, 0)?.value();
    let mut j = -h * v.tau;
    for i in 0..sys.n {
        j += x.p[i] * v.xi[i];
    }
    if let Some(w) = weak {
        j += w.beta.apply(&v, x, &sys.params)?;
        if let Some(f) = &w.gauge {
            j -= eval_jet(f, x, &sys.params, 0)?.value();
        }
    }
    Ok(j)
}

/// The contact vector field `Y_f = f Z_rho + Y_hat` with `i_{Y_f} alpha = f`,
/// where `Y_hat` is the horizontal field with
/// `i_{Y_hat} d alpha = -(df - Z_rho(f) alpha)`.
pub fn contact_hamiltonian_field(
    sys: &SystemSpec,
    f: &Expression,
    x: &PhasePoint,
    eps_rho: f64,
) -> Result<FieldValue> {
    let rho = elementary_action(sys, x)?;
    if rho.abs() <= eps_rho {
        return Err(Error::ContactDegenerate { rho });
    }
    let jh = sys.hamiltonian_jet(x, 1)?;
    let jf = eval_jet(f, x, &sys.params, 1)?;
    let n = sys.n;

    // Z(f) along the unnormalized characteristic field.
    let mut zf = jf.dt();
    for i in 0..n {
        zf += jf.dq(i) * jh.dp(i) - jf.dp(i) * jh.dq(i);
    }
    let lambda = zf / rho;

    let mut a = 0.0;
    for j in 0..n {
        a -= jf.dp(j) * x.p[j];
    }
    a /= rho;

    let fz = jf.value() / rho;
    let mut v = FieldValue::zero(n);
    v.tau = fz + a;
    for i in 0..n {
        v.xi[i] = fz * jh.dp(i) + a * jh.dp(i) + jf.dp(i);
        v.eta[i] = -fz * jh.dq(i) - jf.dq(i) + lambda * x.p[i] - a * jh.dq(i);
    }
    Ok(v)
}

/// Convert a weak Noether symmetry into the strong one conserving the same
/// quantity: `zeta + rho^-1 (beta(zeta) - f) Z`.
pub fn weak_to_strong(
    sys: &SystemSpec,
    zeta: &SymmetryCandidate,
    beta: &BetaForm,
    gauge: Option<&Expression>,
    x: &PhasePoint,
    eps_rho: f64,
) -> Result<FieldValue> {
    let rho = elementary_action(sys, x)?;
    if rho.abs() <= eps_rho {
        return Err(Error::ContactDegenerate { rho });
    }
    let v = zeta.eval(sys, x)?;
    let mut nu = beta.apply(&v, x, &sys.params)?;
    if let Some(f) = gauge {
        nu -= eval_jet(f, x, &sys.params, 0)?.value();
    }
    let z = characteristic_field(sys, x)?;
    Ok(v.add(&z.scale(nu / rho)))
}

/// Commutator `[V, W] = DW . V - DV . W` in the coordinates `(t, q, p)`,
/// with Jacobians from the component jets.
pub fn lie_bracket(
    sys: &SystemSpec,
    v: &SymmetryCandidate,
    w: &SymmetryCandidate,
    x: &PhasePoint,
) -> Result<FieldValue> {
    let jv = v.jets(sys, x)?;
    let jw = w.jets(sys, x)?;
    let vval = jv.value().coords();
    let wval = jw.value().coords();
    let dim = vval.len();
    let vcomp = jv.components();
    let wcomp = jw.components();
    let mut out = vec![0.0; dim];
    for k in 0..dim {
        let mut s = 0.0;
        for l in 0..dim {
            s += wcomp[k].grad[l] * vval[l] - vcomp[k].grad[l] * wval[l];
        }
        out[k] = s;
    }
    Ok(FieldValue::from_coords(&out))
}

/// Max-norm of `i_v d alpha`; zero iff `v` lies in the characteristic line.
pub fn kernel_membership(sys: &SystemSpec, v: &FieldValue, x: &PhasePoint) -> Result<f64> {
    Ok(dpc_contract(sys, v, x)?.max_norm())
}

/// Directional derivative of an expression along a tangent vector.
pub fn directional_derivative(
    sys: &SystemSpec,
    f: &Expression,
    v: &FieldValue,
    x: &PhasePoint,
) -> Result<f64> {
    let jf = eval_jet(f, x, &sys.params, 1)?;
    let coords = v.coords();
    Ok(jf.grad().iter().zip(&coords).map(|(g, c)| g * c).sum())
}
