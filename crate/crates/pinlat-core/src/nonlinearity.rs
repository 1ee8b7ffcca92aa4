//! Bistable nonlinearities f(u, a) and their validation.
//!
//! A family is *normal* when f has zeros at u = −1, a, +1 with
//! f′(±1, a) > 0, f′(a, a) < 0, and is strictly increasing in the detuning
//! parameter: ∂f/∂a > 0 between the stable zeros. The built-in cubic
//! f(u, a) = (u² − 1)(u − a) is the reference example; products γ(u)·f keep
//! all of these properties whenever γ > 0 on [−1, 1].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tolerances::VALIDATE_ROOT_TOL;

/// Errors from family construction and evaluation.
#[derive(Debug, Error, PartialEq)]
pub enum FamilyError {
    #[error("detuning a = {0} outside the open interval (-1, 1)")]
    DetuningOutOfRange(f64),
    #[error("non-finite input: u = {u}, a = {a}")]
    NonFinite { u: f64, a: f64 },
    #[error("gamma({u}) = {value} is not strictly positive on [-1, 1]")]
    GammaNotPositive { u: f64, value: f64 },
    #[error("custom family needs at least one coefficient")]
    EmptyCoefficients,
    #[error("validation grid needs at least 16 points per axis, got {0}")]
    GridTooCoarse(usize),
}

/// A bistable nonlinearity with analytic derivatives.
///
/// Serialized form matches the CLI configuration schema:
/// `{"kind":"cubic"}`, `{"kind":"perturbed","gamma":[1.0,0.0,0.1]}`
/// (coefficients in ascending degree), or `{"kind":"custom","coeffs":[[...]]}`
/// with `coeffs[i][j]` multiplying `u^i a^j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NormalFamily {
    /// f(u, a) = (u² − 1)(u − a)
    Cubic,
    /// γ(u) · (u² − 1)(u − a) with γ a polynomial, γ > 0 on [−1, 1]
    Perturbed { gamma: Vec<f64> },
    /// Bivariate polynomial Σ coeffs[i][j] u^i a^j; validation must confirm
    /// the bistable structure since nothing guarantees it analytically.
    Custom {
        coeffs: Vec<Vec<f64>>,
        #[serde(default)]
        label: String,
    },
}

impl Default for NormalFamily {
    fn default() -> Self {
        NormalFamily::Cubic
    }
}

fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn poly_deriv(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| i as f64 * c)
        .collect()
}

/// Product of two univariate polynomials (ascending coefficients).
fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

impl NormalFamily {
    /// Human-readable label for reports.
    pub fn label(&self) -> String {
        match self {
            NormalFamily::Cubic => "cubic".to_string(),
            NormalFamily::Perturbed { gamma } => format!("perturbed(gamma={gamma:?})"),
            NormalFamily::Custom { label, .. } if !label.is_empty() => label.clone(),
            NormalFamily::Custom { .. } => "custom".to_string(),
        }
    }

    /// Reject detunings outside the bistable range.
    pub fn check_detuning(a: f64) -> Result<(), FamilyError> {
        if !a.is_finite() {
            return Err(FamilyError::NonFinite { u: 0.0, a });
        }
        if a <= -1.0 || a >= 1.0 {
            return Err(FamilyError::DetuningOutOfRange(a));
        }
        Ok(())
    }

    fn checked(&self, u: f64, a: f64, value: f64) -> Result<f64, FamilyError> {
        if !u.is_finite() || !a.is_finite() {
            return Err(FamilyError::NonFinite { u, a });
        }
        Self::check_detuning(a)?;
        Ok(value)
    }

    /// f(u, a), rejecting non-finite inputs and out-of-range detuning.
    pub fn eval(&self, u: f64, a: f64) -> Result<f64, FamilyError> {
        self.checked(u, a, self.f(u, a))
    }

    /// ∂f/∂u with the same input checks as [`eval`](Self::eval).
    pub fn eval_du(&self, u: f64, a: f64) -> Result<f64, FamilyError> {
        self.checked(u, a, self.fu(u, a))
    }

    /// ∂²f/∂u² with the same input checks as [`eval`](Self::eval).
    pub fn eval_duu(&self, u: f64, a: f64) -> Result<f64, FamilyError> {
        self.checked(u, a, self.fuu(u, a))
    }

    /// ∂f/∂a with the same input checks as [`eval`](Self::eval).
    pub fn eval_da(&self, u: f64, a: f64) -> Result<f64, FamilyError> {
        self.checked(u, a, self.fa(u, a))
    }

    /// Unchecked f(u, a) for inner loops; callers validate `a` once upfront.
    #[inline]
    pub(crate) fn f(&self, u: f64, a: f64) -> f64 {
        match self {
            NormalFamily::Cubic => (u * u - 1.0) * (u - a),
            NormalFamily::Perturbed { gamma } => {
                poly_eval(gamma, u) * ((u * u - 1.0) * (u - a))
            }
            NormalFamily::Custom { coeffs, .. } => {
                let mut acc = 0.0;
                for row in coeffs.iter().rev() {
                    acc = acc * u + poly_eval(row, a);
                }
                acc
            }
        }
    }

    #[inline]
    pub(crate) fn fu(&self, u: f64, a: f64) -> f64 {
        match self {
            NormalFamily::Cubic => 3.0 * u * u - 2.0 * a * u - 1.0,
            NormalFamily::Perturbed { gamma } => {
                let g = poly_eval(gamma, u);
                let dg = poly_eval(&poly_deriv(gamma), u);
                let f0 = (u * u - 1.0) * (u - a);
                let f0u = 3.0 * u * u - 2.0 * a * u - 1.0;
                dg * f0 + g * f0u
            }
            NormalFamily::Custom { coeffs, .. } => {
                let mut out = 0.0;
                for (i, row) in coeffs.iter().enumerate().skip(1) {
                    out += i as f64 * u.powi(i as i32 - 1) * poly_eval(row, a);
                }
                out
            }
        }
    }

    #[inline]
    pub(crate) fn fuu(&self, u: f64, a: f64) -> f64 {
        match self {
            NormalFamily::Cubic => 6.0 * u - 2.0 * a,
            NormalFamily::Perturbed { gamma } => {
                let dg1 = poly_deriv(gamma);
                let g = poly_eval(gamma, u);
                let dg = poly_eval(&dg1, u);
                let ddg = poly_eval(&poly_deriv(&dg1), u);
                let f0 = (u * u - 1.0) * (u - a);
                let f0u = 3.0 * u * u - 2.0 * a * u - 1.0;
                let f0uu = 6.0 * u - 2.0 * a;
                ddg * f0 + 2.0 * dg * f0u + g * f0uu
            }
            NormalFamily::Custom { coeffs, .. } => {
                let mut out = 0.0;
                for (i, row) in coeffs.iter().enumerate().skip(2) {
                    out += (i * (i - 1)) as f64 * u.powi(i as i32 - 2) * poly_eval(row, a);
                }
                out
            }
        }
    }

    #[inline]
    pub(crate) fn fa(&self, u: f64, a: f64) -> f64 {
        match self {
            NormalFamily::Cubic => 1.0 - u * u,
            NormalFamily::Perturbed { gamma } => poly_eval(gamma, u) * (1.0 - u * u),
            NormalFamily::Custom { coeffs, .. } => {
                let mut out = 0.0;
                for (i, row) in coeffs.iter().enumerate() {
                    out += u.powi(i as i32) * poly_eval(&poly_deriv(row), a);
                }
                out
            }
        }
    }

    /// Largest |∂f/∂u| over u ∈ [−1.1, 1.1] at fixed `a` (sampled), used by
    /// the explicit integrators to bound stable time steps.
    pub fn max_abs_fu(&self, a: f64) -> f64 {
        let mut m = 0.0f64;
        for i in 0..=220 {
            let u = -1.1 + 0.01 * i as f64;
            m = m.max(self.fu(u, a).abs());
        }
        m
    }

    /// Multiply the family by a positive polynomial γ(u).
    ///
    /// γ must be strictly positive on [−1, 1], which keeps every sign
    /// condition of the family intact; the check samples a fine grid.
    pub fn perturb(&self, gamma_coeffs: &[f64]) -> Result<NormalFamily, FamilyError> {
        if gamma_coeffs.is_empty() {
            return Err(FamilyError::EmptyCoefficients);
        }
        for i in 0..=2000 {
            let u = -1.0 + 0.001 * i as f64;
            let g = poly_eval(gamma_coeffs, u);
            if g <= 0.0 {
                return Err(FamilyError::GammaNotPositive { u, value: g });
            }
        }
        Ok(match self {
            NormalFamily::Cubic => NormalFamily::Perturbed {
                gamma: gamma_coeffs.to_vec(),
            },
            NormalFamily::Perturbed { gamma } => NormalFamily::Perturbed {
                gamma: poly_mul(gamma, gamma_coeffs),
            },
            NormalFamily::Custom { coeffs, label } => {
                // multiply every u-power row: (γ·f)[i+k][j] += γ_k coeffs[i][j]
                let cols = coeffs.iter().map(Vec::len).max().unwrap_or(1);
                let mut out = vec![vec![0.0; cols]; coeffs.len() + gamma_coeffs.len() - 1];
                for (k, &gk) in gamma_coeffs.iter().enumerate() {
                    for (i, row) in coeffs.iter().enumerate() {
                        for (j, &c) in row.iter().enumerate() {
                            out[i + k][j] += gk * c;
                        }
                    }
                }
                NormalFamily::Custom {
                    coeffs: out,
                    label: format!("{label}*gamma"),
                }
            }
        })
    }

    /// Check the normal-family conditions on an `n_u × n_a` sample grid.
    pub fn validate(&self, n_u: usize, n_a: usize) -> Result<ValidationReport, FamilyError> {
        if n_u < 16 {
            return Err(FamilyError::GridTooCoarse(n_u));
        }
        if n_a < 16 {
            return Err(FamilyError::GridTooCoarse(n_a));
        }
        let mut violations = Vec::new();
        let a_grid: Vec<f64> = (0..n_a)
            .map(|j| -1.0 + 2.0 * (j as f64 + 1.0) / (n_a as f64 + 1.0))
            .collect();
        let u_grid: Vec<f64> = (0..n_u)
            .map(|i| -1.0 + 2.0 * (i as f64 + 1.0) / (n_u as f64 + 1.0))
            .collect();

        let analytic_roots = !matches!(self, NormalFamily::Custom { .. });
        for &a in &a_grid {
            if analytic_roots {
                for (name, u) in [("f(-1,a)=0", -1.0), ("f(1,a)=0", 1.0), ("f(a,a)=0", a)] {
                    let v = self.f(u, a);
                    if v.abs() > VALIDATE_ROOT_TOL {
                        violations.push(Violation::new(name, u, a, v));
                    }
                }
            } else {
                for (name, target) in [("root near -1", -1.0), ("root near 1", 1.0), ("root near a", a)]
                {
                    if !self.has_root_near(target, a) {
                        violations.push(Violation::new(name, target, a, self.f(target, a)));
                    }
                }
            }
            for (name, u, want_positive) in [
                ("f'(-1,a)>0", -1.0, true),
                ("f'(1,a)>0", 1.0, true),
                ("f'(a,a)<0", a, false),
            ] {
                let d = self.fu(u, a);
                if (want_positive && d <= 0.0) || (!want_positive && d >= 0.0) {
                    violations.push(Violation::new(name, u, a, d));
                }
            }
            for &u in &u_grid {
                let da = self.fa(u, a);
                if da <= 0.0 {
                    violations.push(Violation::new("df/da>0", u, a, da));
                }
            }
        }
        Ok(ValidationReport {
            valid: violations.is_empty(),
            grid: (n_u, n_a),
            violations,
        })
    }

    /// Scan for a sign change or near-zero of f(·, a) within 0.1 of `target`.
    fn has_root_near(&self, target: f64, a: f64) -> bool {
        let mut prev = self.f(target - 0.1, a);
        if prev.abs() < 1e-8 {
            return true;
        }
        for i in 1..=100 {
            let u = target - 0.1 + 0.002 * i as f64;
            let cur = self.f(u, a);
            if cur.abs() < 1e-8 || (prev < 0.0) != (cur < 0.0) {
                return true;
            }
            prev = cur;
        }
        false
    }
}

/// One violated validation condition with its witnessing sample point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Violation {
    pub condition: String,
    pub u: f64,
    pub a: f64,
    pub value: f64,
}

impl Violation {
    fn new(condition: &str, u: f64, a: f64, value: f64) -> Self {
        Self {
            condition: condition.to_string(),
            u,
            a,
            value,
        }
    }
}

/// Outcome of [`NormalFamily::validate`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    /// (n_u, n_a) sample counts used.
    pub grid: (usize, usize),
    pub violations: Vec<Violation>,
}
