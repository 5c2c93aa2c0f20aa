//! Trajectory integration (classical fixed-step RK4), action evaluation
//! along discrete curves, conservation drift and the trajectory-permutation
//! and stationarity probes.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::{eval_jet, Expression};
use crate::geometry::{
    characteristic_field, is_horizontal, FieldValue, PhasePoint, SystemSpec,
};
use crate::noether::{kernel_membership, SymmetryCandidate};

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorTag {
    Characteristic,
    Symmetry,
    SymmetryImage,
}

/// A discretely sampled integral curve.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<PhasePoint>,
    pub step: f64,
    pub generator: GeneratorTag,
}

impl Trajectory {
    pub fn first(&self) -> &PhasePoint {
        &self.samples[0]
    }

    pub fn last(&self) -> &PhasePoint {
        self.samples.last().unwrap()
    }

    /// CSV export: header `t,q1..qn,p1..pn`, one row per sample, floats at
    /// 17 significant digits.
    pub fn to_csv(&self) -> String {
        let n = self.first().n();
        let mut out = String::from("t");
        for i in 1..=n {
            out.push_str(&format!(",q{i}"));
        }
        for i in 1..=n {
            out.push_str(&format!(",p{i}"));
        }
        out.push('\n');
        for s in &self.samples {
            let coords = s.coords();
            let row: Vec<String> = coords.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn rk4<F>(x0: &PhasePoint, steps: usize, h: f64, mut deriv: F) -> Result<Trajectory>
where
    F: FnMut(&PhasePoint) -> Result<FieldValue>,
{
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(x0.clone());
    let mut x = x0.clone();
    for k in 0..steps {
        let step_err = |e: Error| match e {
            Error::Domain { subtree, message } => Error::Domain {
                subtree,
                message: format!("{message} (at sample index {k})"),
            },
            other => other,
        };
        let k1 = deriv(&x).map_err(step_err)?;
        let k2 = deriv(&x.displaced(&k1, 0.5 * h)).map_err(step_err)?;
        let k3 = deriv(&x.displaced(&k2, 0.5 * h)).map_err(step_err)?;
        let k4 = deriv(&x.displaced(&k3, h)).map_err(step_err)?;
        let incr = k1.add(&k4).add(&k2.scale(2.0)).add(&k3.scale(2.0)).scale(h / 6.0);
        x = x.displaced(&incr, 1.0);
        samples.push(x.clone());
    }
    Ok(Trajectory { samples, step: h, generator: GeneratorTag::Characteristic })
}

fn step_count(duration: f64, step: f64) -> Result<usize> {
    if step <= 0.0 {
        return Err(Error::InvalidConfig("step must be positive".to_string()));
    }
    let k = duration / step;
    let rounded = k.round();
    if rounded < 1.0 || (k - rounded).abs() > 1e-9 * rounded.max(1.0) {
        return Err(Error::InvalidConfig(format!(
            "duration {duration} is not an integer multiple of step {step}"
        )));
    }
    Ok(rounded as usize)
}

/// Integrate the canonical equations `dt/ds = 1, dq/ds = dH/dp,
/// dp/ds = -dH/dq` from `x0` for `duration = k * step`.
pub fn integrate_characteristic(
    sys: &SystemSpec,
    x0: &PhasePoint,
    duration: f64,
    step: f64,
) -> Result<Trajectory> {
    let steps = step_count(duration, step)?;
    let mut traj = rk4(x0, steps, step, |x| characteristic_field(sys, x))?;
    // dt(Z) = 1, so t advances by exactly `step` per sample; pin it against
    // accumulated round-off.
    for (k, s) in traj.samples.iter_mut().enumerate() {
        s.t = x0.t + k as f64 * step;
    }
    traj.generator = GeneratorTag::Characteristic;
    Ok(traj)
}

/// Integrate the flow of a symmetry field from `x0` for parameter length `s`.
pub fn flow_symmetry(
    sys: &SystemSpec,
    zeta: &SymmetryCandidate,
    x0: &PhasePoint,
    s: f64,
    step: f64,
) -> Result<Trajectory> {
    let steps = step_count(s.abs().max(step), step)?;
    let h = if s < 0.0 { -step } else { step };
    let mut traj = rk4(x0, steps, h, |x| zeta.eval(sys, x))?;
    traj.generator = GeneratorTag::Symmetry;
    Ok(traj)
}

/// Maximum deviation of `F` from its value at the first sample.
pub fn conservation_drift(
    f: &Expression,
    traj: &Trajectory,
    params: &BTreeMap<String, f64>,
) -> Result<f64> {
    let f0 = eval_jet(f, traj.first(), params, 0)?.value();
    let mut drift: f64 = 0.0;
    for x in &traj.samples {
        let v = eval_jet(f, x, params, 0)?.value();
        drift = drift.max((v - f0).abs());
    }
    Ok(drift)
}

/// Composite trapezoidal evaluation of `int_gamma (p dq - H dt + beta)` over
/// the discrete samples.
pub fn action_integral(sys: &SystemSpec, traj: &Trajectory) -> Result<f64> {
    if traj.samples.len() < 2 {
        return Err(Error::InvalidConfig("trajectory needs at least 2 samples".to_string()));
    }
    let n = sys.n;
    let beta = sys.beta_form();
    let mut total = 0.0;
    for w in traj.samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let dt = b.t - a.t;
        let ha = sys.hamiltonian_jet(a, 0)?.value();
        let hb = sys.hamiltonian_jet(b, 0)?.value();
        let mut seg = -0.5 * (ha + hb) * dt;
        for i in 0..n {
            let dq = b.q[i] - a.q[i];
            seg += 0.5 * (a.p[i] + b.p[i]) * dq;
        }
        if !beta.is_zero() {
            let ba = beta.eval(a, &sys.params)?;
            let bb = beta.eval(b, &sys.params)?;
            let mut tangent = FieldValue::zero(n);
            tangent.tau = dt;
            for i in 0..n {
                tangent.xi[i] = b.q[i] - a.q[i];
                tangent.eta[i] = b.p[i] - a.p[i];
            }
            seg += 0.5 * (ba.apply(&tangent) + bb.apply(&tangent));
        }
        total += seg;
    }
    Ok(total)
}

/// Map every sample through the symmetry flow `g_s` and measure how far the
/// image curve is from being a reparametrized characteristic curve: the
/// maximum, over interior samples, of the kernel membership of the unit
/// centered-difference tangent.
pub fn permutation_check(
    sys: &SystemSpec,
    zeta: &SymmetryCandidate,
    traj: &Trajectory,
    s: f64,
) -> Result<f64> {
    let flow_step = (s.abs() / 16.0).max(1e-6);
    let mut image = Vec::with_capacity(traj.samples.len());
    for x in &traj.samples {
        let t = flow_symmetry(sys, zeta, x, s, flow_step)?;
        image.push(t.last().clone());
    }
    let mut worst: f64 = 0.0;
    for k in 1..image.len() - 1 {
        let prev = image[k - 1].coords();
        let next = image[k + 1].coords();
        let tangent: Vec<f64> = next
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - b) / (2.0 * traj.step))
            .collect();
        let mut v = FieldValue::from_coords(&tangent);
        let norm = v.max_norm();
        if norm == 0.0 {
            continue;
        }
        v = v.scale(1.0 / norm);
        worst = worst.max(kernel_membership(sys, &v, &image[k])?);
    }
    Ok(worst)
}

/// Perturb the discrete curve by `amplitude * profile` and recompute the
/// action for each amplitude. The profile must vanish or be horizontal at
/// both endpoints.
pub fn stationarity_probe(
    sys: &SystemSpec,
    traj: &Trajectory,
    profile: &[FieldValue],
    amplitudes: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if profile.len() != traj.samples.len() {
        return Err(Error::DimensionMismatch {
            expected: traj.samples.len(),
            got: profile.len(),
        });
    }
    for (label, idx) in [("start", 0usize), ("end", profile.len() - 1)] {
        let v = &profile[idx];
        let vanishes = v.max_norm() == 0.0;
        let (horizontal, _) = is_horizontal(sys, v, &traj.samples[idx], 1e-9)?;
        if !vanishes && !horizontal {
            return Err(Error::InvalidConfig(format!(
                "perturbation profile is neither vanishing nor horizontal at the {label} point"
            )));
        }
    }
    let mut out = Vec::with_capacity(amplitudes.len());
    for &amp in amplitudes {
        let perturbed = Trajectory {
            samples: traj
                .samples
                .iter()
                .zip(profile)
                .map(|(x, v)| x.displaced(v, amp))
                .collect(),
            step: traj.step,
            generator: traj.generator.clone(),
        };
        out.push((amp, action_integral(sys, &perturbed)?));
    }
    Ok(out)
}

/// Least-squares fit of `action = a0 + a1 s + a2 s^2` over the probe table;
/// returns `(slope a1, curvature a2)`.
pub fn fit_quadratic(pairs: &[(f64, f64)]) -> (f64, f64) {
    // normal equations for the 3-parameter polynomial fit
    let m = pairs.len() as f64;
    let (mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0);
    let (mut y0, mut y1, mut y2) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        s1 += x;
        s2 += x * x;
        s3 += x * x * x;
        s4 += x * x * x * x;
        y0 += y;
        y1 += x * y;
        y2 += x * x * y;
    }
    let a = nalgebra::Matrix3::new(m, s1, s2, s1, s2, s3, s2, s3, s4);
    let b = nalgebra::Vector3::new(y0, y1, y2);
    let sol = a.lu().solve(&b).expect("quadratic fit is well conditioned");
    (sol[1], sol[2])
}

/// Endpoint-vanishing bump `sin^2(pi k / (N-1))` applied to a direction.
pub fn bump_profile(len: usize, direction: &FieldValue) -> Vec<FieldValue> {
    (0..len)
        .map(|k| {
            let s = (std::f64::consts::PI * k as f64 / (len as f64 - 1.0)).sin();
            direction.scale(s * s)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::builtin;
    use std::collections::HashSet;

    #[test]
    fn free_particle_linear_flow() {
        let sys = builtin("free1d").unwrap().spec;
        let x0 = PhasePoint::new(0.0, vec![0.0], vec![2.0]);
        let traj = integrate_characteristic(&sys, &x0, 1.0, 1e-3).unwrap();
        let xf = traj.last();
        assert!((xf.t - 1.0).abs() < 1e-12);
        assert!((xf.q[0] - 2.0).abs() < 1e-12);
        assert!((xf.p[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn oscillator_full_period_return() {
        let sys = builtin("harmonic").unwrap().spec;
        let x0 = PhasePoint::new(0.0, vec![1.0], vec![0.0]);
        let period = 2.0 * std::f64::consts::PI;
        let steps = 6284;
        let traj = integrate_characteristic(&sys, &x0, period, period / steps as f64).unwrap();
        let xf = traj.last();
        assert!((xf.q[0] - 1.0).abs() < 1e-10, "q error {}", (xf.q[0] - 1.0).abs());
        assert!((xf.p[0]).abs() < 1e-10);
    }

    #[test]
    fn kepler_energy_preserved_short_arc() {
        let sys = builtin("kepler").unwrap().spec;
        let x0 = PhasePoint::new(0.0, vec![1.0, 0.0], vec![0.0, 1.0]);
        let traj = integrate_characteristic(&sys, &x0, 0.1, 1e-3).unwrap();
        let drift = conservation_drift(&sys.hamiltonian, &traj, &sys.params).unwrap();
        assert!(drift <= 1e-12, "H drift {drift}");
    }

    #[test]
    fn time_translation_flow_shifts_t() {
        let sys = builtin("harmonic").unwrap().spec;
        let one = crate::expr::parse_expression("1", 1, &HashSet::new()).unwrap();
        let zero = crate::expr::parse_expression("0", 1, &HashSet::new()).unwrap();
        let zeta = SymmetryCandidate::Explicit { tau: one, xi: vec![zero.clone()], eta: vec![zero] };
        let x0 = PhasePoint::new(0.25, vec![0.5], vec![0.75]);
        let traj = flow_symmetry(&sys, &zeta, &x0, 0.5, 1e-2).unwrap();
        let xf = traj.last();
        assert!((xf.t - 0.75).abs() < 1e-12);
        assert_eq!(xf.q, x0.q);
        assert_eq!(xf.p, x0.p);
    }

    #[test]
    fn coordinate_shift_flow() {
        let sys = builtin("free1d").unwrap().spec;
        let zero = crate::expr::parse_expression("0", 1, &HashSet::new()).unwrap();
        let one = crate::expr::parse_expression("1", 1, &HashSet::new()).unwrap();
        let zeta =
            SymmetryCandidate::Explicit { tau: zero.clone(), xi: vec![one], eta: vec![zero] };
        let x0 = PhasePoint::new(0.0, vec![0.3], vec![1.0]);
        let traj = flow_symmetry(&sys, &zeta, &x0, 1.0, 1e-2).unwrap();
        assert!((traj.last().q[0] - 1.3).abs() < 1e-12);
    }

    #[test]
    fn drift_of_nonintegral_grows_linearly() {
        let sys = builtin("free1d").unwrap().spec;
        let x0 = PhasePoint::new(0.0, vec![0.0], vec![2.0]);
        let traj = integrate_characteristic(&sys, &x0, 1.0, 1e-3).unwrap();
        let q1 = crate::expr::parse_expression("q1", 1, &HashSet::new()).unwrap();
        let drift = conservation_drift(&q1, &traj, &sys.params).unwrap();
        assert!((drift - 2.0).abs() < 1e-10);
    }

    #[test]
    fn free_particle_action_value() {
        let sys = builtin("free1d").unwrap().spec;
        let x0 = PhasePoint::new(0.0, vec![0.0], vec![2.0]);
        let traj = integrate_characteristic(&sys, &x0, 1.0, 1e-3).unwrap();
        // int p dq - H dt = p^2 T - (p^2/2) T = 2
        let a = action_integral(&sys, &traj).unwrap();
        assert!((a - 2.0).abs() < 1e-10, "action {a}");
    }

    #[test]
    fn exact_beta_shifts_action_by_boundary_difference() {
        let mut sys = builtin("free1d").unwrap().spec;
        let g = crate::expr::parse_expression("q1^2", 1, &HashSet::new()).unwrap();
        sys.beta = Some(crate::geometry::BetaForm { constant: None, exact: Some(g.clone()) });
        let x0 = PhasePoint::new(0.0, vec![0.0], vec![2.0]);
        let traj = integrate_characteristic(&sys, &x0, 1.0, 1e-3).unwrap();
        let a = action_integral(&sys, &traj).unwrap();
        let g_end = eval_jet(&g, traj.last(), &sys.params, 0).unwrap().value();
        let g_start = eval_jet(&g, traj.first(), &sys.params, 0).unwrap().value();
        // base action 2 plus g(end) - g(start), within quadrature error
        assert!((a - (2.0 + g_end - g_start)).abs() < 1e-5, "action {a}");
    }

    #[test]
    fn oscillator_action_over_period_vanishes() {
        let sys = builtin("harmonic").unwrap().spec;
        let x0 = PhasePoint::new(0.0, vec![1.0], vec![0.0]);
        let period = 2.0 * std::f64::consts::PI;
        let steps = 6284;
        let traj = integrate_characteristic(&sys, &x0, period, period / steps as f64).unwrap();
        let a = action_integral(&sys, &traj).unwrap();
        assert!(a.abs() < 1e-6, "action over period {a}");
    }

    #[test]
    fn fourth_order_convergence() {
        let sys = builtin("harmonic").unwrap().spec;
        let x0 = PhasePoint::new(0.0, vec![1.0], vec![0.0]);
        let exact = |t: f64| (t.cos(), -t.sin());
        let err = |h: f64| {
            let traj = integrate_characteristic(&sys, &x0, 1.0, h).unwrap();
            let xf = traj.last();
            let (q, p) = exact(1.0);
            ((xf.q[0] - q).powi(2) + (xf.p[0] - p).powi(2)).sqrt()
        };
        let e1 = err(1e-2);
        let e2 = err(5e-3);
        let e3 = err(2.5e-3);
        let r1 = e1 / e2;
        let r2 = e2 / e3;
        assert!(r1 > 8.0 && r1 < 32.0, "ratio {r1}");
        assert!(r2 > 8.0 && r2 < 32.0, "ratio {r2}");
    }

    #[test]
    fn determinism_bit_identical() {
        let sys = builtin("kepler").unwrap().spec;
        let x0 = PhasePoint::new(0.0, vec![1.0, 0.0], vec![0.0, 1.0]);
        let a = integrate_characteristic(&sys, &x0, 0.5, 1e-3).unwrap();
        let b = integrate_characteristic(&sys, &x0, 0.5, 1e-3).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn permutation_by_time_translation() {
        let sys = builtin("harmonic").unwrap().spec;
        let x0 = PhasePoint::new(0.0, vec![1.0], vec![0.0]);
        let traj = integrate_characteristic(&sys, &x0, 0.5, 1e-4).unwrap();
        let one = crate::expr::parse_expression("1", 1, &HashSet::new()).unwrap();
        let zero = crate::expr::parse_expression("0", 1, &HashSet::new()).unwrap();
        let zeta = SymmetryCandidate::Explicit { tau: one, xi: vec![zero.clone()], eta: vec![zero] };
        let worst = permutation_check(&sys, &zeta, &traj, 0.5).unwrap();
        assert!(worst <= 1e-8, "residual {worst}");
    }

    #[test]
    fn non_symmetry_fails_permutation() {
        let sys = builtin("harmonic").unwrap().spec;
        let x0 = PhasePoint::new(0.0, vec![1.0], vec![0.0]);
        let traj = integrate_characteristic(&sys, &x0, 0.5, 1e-3).unwrap();
        let zero = crate::expr::parse_expression("0", 1, &HashSet::new()).unwrap();
        let one = crate::expr::parse_expression("1", 1, &HashSet::new()).unwrap();
        let zeta =
            SymmetryCandidate::Explicit { tau: zero.clone(), xi: vec![one], eta: vec![zero] };
        let worst = permutation_check(&sys, &zeta, &traj, 0.1).unwrap();
        assert!(worst > 1e-2, "residual {worst}");
    }

    #[test]
    fn zero_amplitude_leaves_action_unchanged() {
        let sys = builtin("harmonic").unwrap().spec;
        let x0 = PhasePoint::new(0.0, vec![1.0], vec![0.0]);
        let traj = integrate_characteristic(&sys, &x0, 0.5, 1e-3).unwrap();
        let dir = FieldValue { tau: 0.0, xi: vec![1.0], eta: vec![0.5] };
        let profile = bump_profile(traj.samples.len(), &dir);
        let base = action_integral(&sys, &traj).unwrap();
        let probe = stationarity_probe(&sys, &traj, &profile, &[0.0]).unwrap();
        assert_eq!(probe[0].1, base);
    }

    #[test]
    fn non_endpoint_safe_profile_rejected() {
        let sys = builtin("harmonic").unwrap().spec;
        let x0 = PhasePoint::new(0.0, vec![1.0], vec![0.5]);
        let traj = integrate_characteristic(&sys, &x0, 0.5, 1e-3).unwrap();
        // constant non-horizontal profile: xi != 0 with p != 0 at endpoints
        let dir = FieldValue { tau: 0.0, xi: vec![1.0], eta: vec![0.0] };
        let profile = vec![dir; traj.samples.len()];
        assert!(matches!(
            stationarity_probe(&sys, &traj, &profile, &[0.1]),
            Err(Error::InvalidConfig(_))
        ));
    }
}
