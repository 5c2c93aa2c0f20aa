//! Pointwise evaluation of the Poincaré–Cartan form `p dq - H dt`, its
//! exterior-derivative contractions, the characteristic field, the elementary
//! action and the Reeb normalization on the extended phase space.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::{eval_jet, Expression, Jet2};

/// A point `(t, q, p)` of the extended phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub t: f64,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(t: f64, q: Vec<f64>, p: Vec<f64>) -> PhasePoint {
        assert_eq!(q.len(), p.len(), "q and p must have equal length");
        PhasePoint { t, q, p }
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    /// Flattened coordinates in the ordering `(t, q1..qn, p1..pn)`.
    pub fn coords(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.n() + 1);
        out.push(self.t);
        out.extend_from_slice(&self.q);
        out.extend_from_slice(&self.p);
        out
    }

    pub fn from_coords(coords: &[f64]) -> Result<PhasePoint> {
        if coords.is_empty() || coords.len() % 2 == 0 {
            return Err(Error::DimensionMismatch { expected: coords.len() + 1, got: coords.len() });
        }
        let n = (coords.len() - 1) / 2;
        Ok(PhasePoint {
            t: coords[0],
            q: coords[1..1 + n].to_vec(),
            p: coords[1 + n..].to_vec(),
        })
    }

    pub(crate) fn coord_mut(&mut self, idx: usize) -> &mut f64 {
        let n = self.n();
        if idx == 0 {
            &mut self.t
        } else if idx <= n {
            &mut self.q[idx - 1]
        } else {
            &mut self.p[idx - 1 - n]
        }
    }

    /// Displace by `amount * v`.
    pub fn displaced(&self, v: &FieldValue, amount: f64) -> PhasePoint {
        let mut out = self.clone();
        out.t += amount * v.tau;
        for i in 0..self.n() {
            out.q[i] += amount * v.xi[i];
            out.p[i] += amount * v.eta[i];
        }
        out
    }
}

/// A tangent vector `tau d/dt + xi d/dq + eta d/dp` at a phase point.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldValue {
    pub tau: f64,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
}

impl FieldValue {
    pub fn zero(n: usize) -> FieldValue {
        FieldValue { tau: 0.0, xi: vec![0.0; n], eta: vec![0.0; n] }
    }

    pub fn n(&self) -> usize {
        self.xi.len()
    }

    pub fn coords(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.n() + 1);
        out.push(self.tau);
        out.extend_from_slice(&self.xi);
        out.extend_from_slice(&self.eta);
        out
    }

    pub fn from_coords(coords: &[f64]) -> FieldValue {
        let n = (coords.len() - 1) / 2;
        FieldValue {
            tau: coords[0],
            xi: coords[1..1 + n].to_vec(),
            eta: coords[1 + n..].to_vec(),
        }
    }

    pub fn scale(&self, c: f64) -> FieldValue {
        FieldValue {
            tau: c * self.tau,
            xi: self.xi.iter().map(|v| c * v).collect(),
            eta: self.eta.iter().map(|v| c * v).collect(),
        }
    }

    pub fn add(&self, rhs: &FieldValue) -> FieldValue {
        FieldValue {
            tau: self.tau + rhs.tau,
            xi: self.xi.iter().zip(&rhs.xi).map(|(a, b)| a + b).collect(),
            eta: self.eta.iter().zip(&rhs.eta).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, rhs: &FieldValue) -> FieldValue {
        self.add(&rhs.scale(-1.0))
    }

    pub fn max_norm(&self) -> f64 {
        self.coords().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Coefficients `a dt + sum b_i dq_i + sum c_i dp_i` of a one-form at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct OneFormValue {
    pub a: f64,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl OneFormValue {
    pub fn zero(n: usize) -> OneFormValue {
        OneFormValue { a: 0.0, b: vec![0.0; n], c: vec![0.0; n] }
    }

    /// Pairing with a tangent vector.
    pub fn apply(&self, v: &FieldValue) -> f64 {
        let mut s = self.a * v.tau;
        for i in 0..self.b.len() {
            s += self.b[i] * v.xi[i] + self.c[i] * v.eta[i];
        }
        s
    }

    pub fn add(&self, rhs: &OneFormValue) -> OneFormValue {
        OneFormValue {
            a: self.a + rhs.a,
            b: self.b.iter().zip(&rhs.b).map(|(a, b)| a + b).collect(),
            c: self.c.iter().zip(&rhs.c).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn max_norm(&self) -> f64 {
        let mut m = self.a.abs();
        for v in self.b.iter().chain(self.c.iter()) {
            m = m.max(v.abs());
        }
        m
    }
}

/// Perturbation `beta` of the Poincaré–Cartan form: a constant-coefficient
/// part plus an exact part `dg`. Both parts are closed by construction.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BetaForm {
    pub constant: Option<OneFormValue>,
    pub exact: Option<Expression>,
}

impl BetaForm {
    pub fn is_zero(&self) -> bool {
        self.constant.is_none() && self.exact.is_none()
    }

    /// Coefficients of `beta` at `x`.
    pub fn eval(&self, x: &PhasePoint, params: &BTreeMap<String, f64>) -> Result<OneFormValue> {
        let n = x.n();
        let mut out = OneFormValue::zero(n);
        if let Some(c) = &self.constant {
            out = out.add(c);
        }
        if let Some(g) = &self.exact {
            let jg = eval_jet(g, x, params, 1)?;
            let mut dg = OneFormValue::zero(n);
            dg.a = jg.dt();
            for i in 0..n {
                dg.b[i] = jg.dq(i);
                dg.c[i] = jg.dp(i);
            }
            out = out.add(&dg);
        }
        Ok(out)
    }

    pub fn apply(
        &self,
        v: &FieldValue,
        x: &PhasePoint,
        params: &BTreeMap<String, f64>,
    ) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        Ok(self.eval(x, params)?.apply(v))
    }
}

/// A Hamiltonian system on the extended phase space together with its named
/// first integrals, optional perturbation form and parameter values.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    pub n: usize,
    pub hamiltonian: Expression,
    pub integrals: BTreeMap<String, Expression>,
    pub beta: Option<BetaForm>,
    pub params: BTreeMap<String, f64>,
}

impl SystemSpec {
    pub fn integral(&self, name: &str) -> Result<&Expression> {
        self.integrals
            .get(name)
            .ok_or_else(|| Error::InvalidConfig(format!("no integral named `{name}`")))
    }

    pub fn hamiltonian_jet(&self, x: &PhasePoint, order: u8) -> Result<Jet2> {
        eval_jet(&self.hamiltonian, x, &self.params, order)
    }

    pub fn beta_form(&self) -> BetaForm {
        self.beta.clone().unwrap_or_default()
    }

    /// `beta(v)` at `x`; zero when no perturbation is configured.
    pub fn beta_apply(&self, v: &FieldValue, x: &PhasePoint) -> Result<f64> {
        match &self.beta {
            None => Ok(0.0),
            Some(b) => b.apply(v, x, &self.params),
        }
    }
}

/// Default threshold below which the elementary action is treated as
/// degenerate.
pub const EPS_RHO: f64 = 1e-9;

/// The section `Z = d/dt + dH/dp d/dq - dH/dq d/dp` of the characteristic
/// line bundle, normalized by `dt(Z) = 1`.
pub fn characteristic_field(sys: &SystemSpec, x: &PhasePoint) -> Result<FieldValue> {
    let jh = sys.hamiltonian_jet(x, 1)?;
    let n = sys.n;
    let mut v = FieldValue::zero(n);
    v.tau = 1.0;
    for i in 0..n {
        v.xi[i] = jh.dp(i);
        v.eta[i] = -jh.dq(i);
    }
    Ok(v)
}

/// The elementary action `rho = p dH/dp - H`.
pub fn elementary_action(sys: &SystemSpec, x: &PhasePoint) -> Result<f64> {
    let jh = sys.hamiltonian_jet(x, 1)?;
    let mut rho = -jh.value();
    for i in 0..sys.n {
        rho += x.p[i] * jh.dp(i);
    }
    Ok(rho)
}

/// `rho + beta(Z)`; reduces to `rho` when no perturbation is present.
pub fn perturbed_elementary_action(sys: &SystemSpec, x: &PhasePoint) -> Result<f64> {
    let rho = elementary_action(sys, x)?;
    match &sys.beta {
        None => Ok(rho),
        Some(b) => {
            let z = characteristic_field(sys, x)?;
            Ok(rho + b.apply(&z, x, &sys.params)?)
        }
    }
}

/// The Reeb normalization `Z / rho` (with the perturbed elementary action
/// when `beta` is configured).
pub fn reeb_field(sys: &SystemSpec, x: &PhasePoint, eps_rho: f64) -> Result<FieldValue> {
    let rho = perturbed_elementary_action(sys, x)?;
    if rho.abs() <= eps_rho {
        return Err(Error::ContactDegenerate { rho });
    }
    Ok(characteristic_field(sys, x)?.scale(1.0 / rho))
}

/// Contraction `i_v (p dq - H dt + beta)`.
pub fn pc_contract(sys: &SystemSpec, v: &FieldValue, x: &PhasePoint) -> Result<f64> {
    let h = sys.hamiltonian_jet(x, 0)?.value();
    let mut s = -h * v.tau;
    for i in 0..sys.n {
        s += x.p[i] * v.xi[i];
    }
    s += sys.beta_apply(v, x)?;
    Ok(s)
}

/// Contraction `i_v d(p dq - H dt)`, assembled from the closed-form identity
/// `i_v (dp ^ dq - dH ^ dt) = eta dq - xi dp + tau dH - dH(v) dt`.
pub fn dpc_contract(sys: &SystemSpec, v: &FieldValue, x: &PhasePoint) -> Result<OneFormValue> {
    let jh = sys.hamiltonian_jet(x, 1)?;
    let n = sys.n;
    let mut out = OneFormValue::zero(n);
    let mut a = 0.0;
    for i in 0..n {
        out.b[i] = v.eta[i] + v.tau * jh.dq(i);
        out.c[i] = -v.xi[i] + v.tau * jh.dp(i);
        a -= v.xi[i] * jh.dq(i) + v.eta[i] * jh.dp(i);
    }
    out.a = a;
    Ok(out)
}

/// Horizontality test: residual of `sum p_i xi^i = tau H` (with the `beta`
/// pairing folded in when present). `true` iff the residual is below
/// `tol * (1 + scale)`.
pub fn is_horizontal(
    sys: &SystemSpec,
    v: &FieldValue,
    x: &PhasePoint,
    tol: f64,
) -> Result<(bool, f64)> {
    let h = sys.hamiltonian_jet(x, 0)?.value();
    let mut pxi = 0.0;
    for i in 0..sys.n {
        pxi += x.p[i] * v.xi[i];
    }
    let residual = (pxi - h * v.tau + sys.beta_apply(v, x)?).abs();
    let scale = pxi.abs() + (h * v.tau).abs();
    Ok((residual <= tol * (1.0 + scale), residual))
}
