//! Second-order truncated polynomial arithmetic (forward-mode AD).
//!
//! A [`Jet`] carries a value, a gradient of length `dim`, and a symmetric
//! Hessian of size `dim x dim`, truncated at the requested `order`. All
//! arithmetic propagates derivatives by the chain rule in a single forward
//! pass. The Hessian is assembled symmetrically entry by entry, so
//! `hess(i,j) == hess(j,i)` holds to exact equality.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub dim: usize,
    pub order: u8,
    pub value: f64,
    /// First partials; empty when `order < 1`.
    pub grad: Vec<f64>,
    /// Row-major symmetric matrix `dim * dim`; empty when `order < 2`.
    pub hess: Vec<f64>,
}

impl Jet {
    pub fn constant(dim: usize, order: u8, value: f64) -> Jet {
        Jet {
            dim,
            order,
            value,
            grad: if order >= 1 { vec![0.0; dim] } else { Vec::new() },
            hess: if order >= 2 { vec![0.0; dim * dim] } else { Vec::new() },
        }
    }

    /// Seed for the coordinate with index `idx` (gradient = e_idx).
    pub fn coordinate(dim: usize, order: u8, idx: usize, value: f64) -> Jet {
        let mut j = Jet::constant(dim, order, value);
        if order >= 1 {
            j.grad[idx] = 1.0;
        }
        j
    }

    #[inline]
    pub fn hess_at(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.dim + j]
    }

    fn like(&self) -> Jet {
        Jet::constant(self.dim, self.order, 0.0)
    }

    pub fn add(&self, rhs: &Jet) -> Jet {
        let mut out = self.like();
        out.value = self.value + rhs.value;
        if self.order >= 1 {
            for i in 0..self.dim {
                out.grad[i] = self.grad[i] + rhs.grad[i];
            }
        }
        if self.order >= 2 {
            for k in 0..self.dim * self.dim {
                out.hess[k] = self.hess[k] + rhs.hess[k];
            }
        }
        out
    }

    pub fn sub(&self, rhs: &Jet) -> Jet {
        let mut out = self.like();
        out.value = self.value - rhs.value;
        if self.order >= 1 {
            for i in 0..self.dim {
                out.grad[i] = self.grad[i] - rhs.grad[i];
            }
        }
        if self.order >= 2 {
            for k in 0..self.dim * self.dim {
                out.hess[k] = self.hess[k] - rhs.hess[k];
            }
        }
        out
    }

    pub fn neg(&self) -> Jet {
        let mut out = self.like();
        out.value = -self.value;
        if self.order >= 1 {
            for i in 0..self.dim {
                out.grad[i] = -self.grad[i];
            }
        }
        if self.order >= 2 {
            for k in 0..self.dim * self.dim {
                out.hess[k] = -self.hess[k];
            }
        }
        out
    }

    pub fn mul(&self, rhs: &Jet) -> Jet {
        let mut out = self.like();
        out.value = self.value * rhs.value;
        if self.order >= 1 {
            for i in 0..self.dim {
                out.grad[i] = self.grad[i] * rhs.value + self.value * rhs.grad[i];
            }
        }
        if self.order >= 2 {
            let d = self.dim;
            for i in 0..d {
                for j in i..d {
                    let h = self.hess_at(i, j) * rhs.value
                        + self.grad[i] * rhs.grad[j]
                        + self.grad[j] * rhs.grad[i]
                        + self.value * rhs.hess_at(i, j);
                    out.hess[i * d + j] = h;
                    out.hess[j * d + i] = h;
                }
            }
        }
        out
    }

    pub fn scale(&self, c: f64) -> Jet {
        let mut out = self.clone();
        out.value *= c;
        for g in &mut out.grad {
            *g *= c;
        }
        for h in &mut out.hess {
            *h *= c;
        }
        out
    }

    /// 1/self; errors on a zero value.
    pub fn recip(&self, context: &str) -> Result<Jet> {
        if self.value == 0.0 {
            return Err(Error::Domain {
                subtree: context.to_string(),
                message: "division by zero".to_string(),
            });
        }
        let v = self.value;
        let inv = 1.0 / v;
        self.chain(inv, -inv * inv, 2.0 * inv * inv * inv)
    }

    pub fn div(&self, rhs: &Jet, context: &str) -> Result<Jet> {
        Ok(self.mul(&rhs.recip(context)?))
    }

    /// Composition with a scalar function given its value and first two
    /// derivatives at `self.value`.
    pub fn chain(&self, f: f64, fp: f64, fpp: f64) -> Result<Jet> {
        let mut out = self.like();
        out.value = f;
        if self.order >= 1 {
            for i in 0..self.dim {
                out.grad[i] = fp * self.grad[i];
            }
        }
        if self.order >= 2 {
            let d = self.dim;
            for i in 0..d {
                for j in i..d {
                    let h = fp * self.hess_at(i, j) + fpp * self.grad[i] * self.grad[j];
                    out.hess[i * d + j] = h;
                    out.hess[j * d + i] = h;
                }
            }
        }
        Ok(out)
    }

    pub fn sin(&self) -> Result<Jet> {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Result<Jet> {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn tan(&self) -> Result<Jet> {
        let t = self.value.tan();
        let sec2 = 1.0 + t * t;
        self.chain(t, sec2, 2.0 * t * sec2)
    }

    pub fn exp(&self) -> Result<Jet> {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn log(&self, context: &str) -> Result<Jet> {
        if self.value <= 0.0 {
            return Err(Error::Domain {
                subtree: context.to_string(),
                message: format!("log of nonpositive value {}", self.value),
            });
        }
        let inv = 1.0 / self.value;
        self.chain(self.value.ln(), inv, -inv * inv)
    }

    pub fn sqrt(&self, context: &str) -> Result<Jet> {
        if self.value < 0.0 {
            return Err(Error::Domain {
                subtree: context.to_string(),
                message: format!("sqrt of negative value {}", self.value),
            });
        }
        if self.value == 0.0 && self.order >= 1 {
            return Err(Error::Domain {
                subtree: context.to_string(),
                message: "sqrt derivative singular at 0".to_string(),
            });
        }
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.value))
    }

    /// `self ^ rhs`. Integer constant exponents are handled for any base;
    /// otherwise the base must be positive.
    pub fn pow(&self, rhs: &Jet, context: &str) -> Result<Jet> {
        let exp_is_const = rhs.grad.iter().all(|&g| g == 0.0) && rhs.hess.iter().all(|&h| h == 0.0);
        if exp_is_const && rhs.value.fract() == 0.0 && rhs.value.abs() < 1e15 {
            let k = rhs.value;
            if self.value == 0.0 && k < 0.0 {
                return Err(Error::Domain {
                    subtree: context.to_string(),
                    message: "zero raised to a negative power".to_string(),
                });
            }
            let f = self.value.powf(k);
            let fp = if k == 0.0 { 0.0 } else { k * self.value.powf(k - 1.0) };
            let fpp = if k == 0.0 || k == 1.0 {
                0.0
            } else {
                k * (k - 1.0) * self.value.powf(k - 2.0)
            };
            return self.chain(f, fp, fpp);
        }
        if self.value <= 0.0 {
            return Err(Error::Domain {
                subtree: context.to_string(),
                message: format!(
                    "power with non-integer exponent requires positive base, got {}",
                    self.value
                ),
            });
        }
        // a^b = exp(b * log a)
        let ln = self.log(context)?;
        rhs.mul(&ln).exp()
    }
}
