//! Laplace transforms on `[0, ∞)` and the transform identities behind the
//! renewal and sub-diffusion derivations.
//!
//! Everything is checked in the `s` domain; there is no numerical inversion.

use std::f64::consts::E;

use statrs::function::gamma as sgamma;

use crate::error::{Error, Result};
use crate::quad::Quadrature;

/// Behaviour of a function for large `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailModel {
    /// `|f(t)| ≤ bound` for every `t ≥ 0`.
    Bounded(f64),
    /// `|f(t)| ≤ coef · t^exponent` for `t ≥ 1`.
    PowerLawBound { coef: f64, exponent: f64 },
    /// `f(t) = coef · t^exponent` exactly for `t ≥ start`.
    PowerLaw { coef: f64, exponent: f64, start: f64 },
    /// `|f(t)| ≤ coef · e^{rate t}`.
    Exponential { coef: f64, rate: f64 },
}

/// A function of time given by a closure, with enough side information to
/// truncate and split its integrals.
pub struct AnalyticFn<'a> {
    f: Box<dyn Fn(f64) -> f64 + Sync + 'a>,
    /// `f(t) ~ t^(-singularity)` as `t → 0`; zero when bounded.
    pub singularity: f64,
    /// Points where `f` or its derivative jumps.
    pub breakpoints: Vec<f64>,
    pub tail: TailModel,
}

impl<'a> AnalyticFn<'a> {
    pub fn new(f: impl Fn(f64) -> f64 + Sync + 'a, tail: TailModel) -> Self {
        AnalyticFn {
            f: Box::new(f),
            singularity: 0.0,
            breakpoints: Vec::new(),
            tail,
        }
    }

    pub fn with_singularity(mut self, exponent: f64) -> Self {
        self.singularity = exponent;
        self
    }

    pub fn with_breakpoints(mut self, points: &[f64]) -> Self {
        self.breakpoints = points.to_vec();
        self.breakpoints.sort_by(f64::total_cmp);
        self
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else {
            (self.f)(t)
        }
    }

    /// `t^(alpha-1)`, the model power-law decay.
    pub fn power(exponent: f64) -> AnalyticFn<'static> {
        AnalyticFn::new(move |t: f64| t.powf(exponent), TailModel::PowerLaw {
            coef: 1.0,
            exponent,
            start: 1.0,
        })
        .with_singularity((-exponent).max(0.0))
    }

    pub fn exp_decay(rate: f64) -> AnalyticFn<'static> {
        AnalyticFn::new(move |t: f64| (-rate * t).exp(), TailModel::Bounded(1.0))
    }

    /// Indicator of `[0, width]`.
    pub fn indicator(width: f64) -> AnalyticFn<'static> {
        AnalyticFn::new(
            move |t: f64| if t <= width { 1.0 } else { 0.0 },
            TailModel::Bounded(1.0),
        )
        .with_breakpoints(&[width])
    }

    pub fn zero() -> AnalyticFn<'static> {
        AnalyticFn::new(|_| 0.0, TailModel::Bounded(0.0))
    }

    fn sup_bound(&self) -> Result<f64> {
        match self.tail {
            TailModel::Bounded(b) => Ok(b),
            _ => Err(Error::Precondition(
                "identity checks need a globally bounded test function".into(),
            )),
        }
    }

    fn tail_bound(&self, s: f64, cut: f64) -> f64 {
        match self.tail {
            TailModel::Bounded(b) => b.abs() * (-s * cut).exp() / s,
            TailModel::PowerLawBound { coef, exponent }
            | TailModel::PowerLaw { coef, exponent, .. } => {
                let coef = coef.abs();
                if exponent <= 0.0 {
                    coef * cut.powf(exponent) * (-s * cut).exp() / s
                } else {
                    coef * upper_gamma(exponent + 1.0, s * cut) / s.powf(exponent + 1.0)
                }
            }
            TailModel::Exponential { coef, rate } => {
                coef.abs() * (-(s - rate) * cut).exp() / (s - rate)
            }
        }
    }
}

/// Samples `f(t_i)` on an increasing grid starting at `t_0 = 0`, linearly
/// interpolated, with an optional power-law extrapolation past the last node.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    times: Vec<f64>,
    values: Vec<f64>,
    tail_exponent: Option<f64>,
}

impl SampledFunction {
    pub fn new(times: Vec<f64>, values: Vec<f64>, tail_exponent: Option<f64>) -> Result<Self> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(Error::Input("need at least two samples of matching length".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::Input("sample grid must start at t = 0".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Input("sample grid must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("sample values must be finite".into()));
        }
        Ok(SampledFunction { times, values, tail_exponent })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// A nonnegative signal on `t ≥ 0` whose Laplace transform and power-weighted
/// integrals can be evaluated.
pub trait TimeSignal {
    /// `∫_0^∞ e^{-st} f(t) dt` within `tol`.
    fn laplace(&self, s: f64, tol: f64) -> Result<f64>;

    /// `∫_lower^∞ f(t) t^{-q} dt`, `+∞` when the integral diverges.
    fn power_weighted(&self, q: f64, lower: f64, tol: f64) -> Result<f64>;
}

/// `Γ(a, x)` for real `a` and `x > 0`.
pub(crate) fn upper_gamma(a: f64, x: f64) -> f64 {
    if a > 0.0 {
        return sgamma::gamma(a) * sgamma::gamma_ur(a, x);
    }
    if a == a.round() {
        let q = Quadrature::new(1e-300, 1e-12);
        let body = q
            .integrate(|t: f64| t.powf(a - 1.0) * (-t).exp(), x, x + 60.0)
            .map(|e| e.value)
            .unwrap_or(f64::NAN);
        return body;
    }
    // Γ(a, x) = (Γ(a+1, x) - x^a e^{-x}) / a
    (upper_gamma(a + 1.0, x) - x.powf(a) * (-x).exp()) / a
}

fn panel_edges(start: f64, end: f64, scale: f64, breaks: &[f64]) -> Vec<f64> {
    let mut edges = vec![start];
    let mut e = scale.max(1e-12);
    while e < end {
        if e > start {
            edges.push(e);
        }
        e *= 2.0;
    }
    edges.extend(breaks.iter().copied().filter(|&b| b > start && b < end));
    edges.push(end);
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    edges
}

impl TimeSignal for AnalyticFn<'_> {
    fn laplace(&self, s: f64, tol: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::domain(format!("transform variable must be positive, got {s}")));
        }
        if let TailModel::Exponential { rate, .. } = self.tail {
            if rate >= s {
                return Err(Error::Divergence(format!(
                    "growth rate {rate} is not dominated by e^(-st) at s = {s}"
                )));
            }
        }
        let mut cut = (1.0 / s).max(self.breakpoints.last().copied().unwrap_or(0.0)).max(1.0);
        while self.tail_bound(s, cut) > 0.1 * tol {
            cut *= 1.5;
            if cut > 1e12 {
                return Err(Error::Divergence("tail bound does not fall below tolerance".into()));
            }
        }
        let q = Quadrature::new(0.01 * tol, 0.01 * tol);
        let g = |t: f64| self.eval(t) * (-s * t).exp();
        let edges = panel_edges(0.0, cut, 0.25 / s, &self.breakpoints);
        let head = q.integrate_left_singular(&g, edges[0], edges[1], self.singularity)?;
        let body = q.integrate_with_breaks(&g, &edges[1..])?;
        Ok(head.value + body.value)
    }

    fn power_weighted(&self, q_exp: f64, lower: f64, tol: f64) -> Result<f64> {
        let (coef, exponent, start) = match self.tail {
            TailModel::PowerLaw { coef, exponent, start } => (coef, exponent, start),
            _ => {
                return Err(Error::Precondition(
                    "power-weighted integrals need an exact power-law tail".into(),
                ))
            }
        };
        let tail_power = exponent - q_exp;
        if tail_power >= -1.0 && coef != 0.0 {
            return Ok(f64::INFINITY);
        }
        let start = start.max(lower);
        let tail = if coef == 0.0 {
            0.0
        } else {
            coef * start.powf(tail_power + 1.0) / -(tail_power + 1.0)
        };
        if start <= lower {
            return Ok(tail);
        }
        let quad = Quadrature::new(0.01 * tol, 0.01 * tol);
        let g = |t: f64| self.eval(t) * t.powf(-q_exp);
        let edges = panel_edges(lower, start, if lower > 0.0 { 2.0 * lower } else { 1e-3 }, &self.breakpoints);
        let body = if lower == 0.0 {
            let sing = self.singularity + q_exp;
            if sing >= 1.0 {
                return Ok(f64::INFINITY);
            }
            let head = quad.integrate_left_singular(&g, edges[0], edges[1], sing)?;
            head.value + quad.integrate_with_breaks(&g, &edges[1..])?.value
        } else {
            quad.integrate_with_breaks(&g, &edges)?.value
        };
        Ok(body + tail)
    }
}

/// `(∫_0^h e^{-sτ} dτ, ∫_0^h τ e^{-sτ} dτ)`, stable for small `sh`.
fn exp_moments(s: f64, h: f64) -> (f64, f64) {
    let x = s * h;
    let e0 = h * if x < 1e-8 { 1.0 - 0.5 * x } else { -(-x).exp_m1() / x };
    let e1 = if x < 1e-3 {
        h * h * (0.5 - x / 3.0 + x * x / 8.0 - x * x * x / 30.0)
    } else {
        (-(-x).exp_m1() - x * (-x).exp()) / (s * s)
    };
    (e0, e1)
}

/// `∫_a^b t^p dt`.
fn power_integral(p: f64, a: f64, b: f64) -> f64 {
    if (p + 1.0).abs() < 1e-14 {
        (b / a).ln()
    } else {
        (b.powf(p + 1.0) - a.powf(p + 1.0)) / (p + 1.0)
    }
}

impl TimeSignal for SampledFunction {
    fn laplace(&self, s: f64, _tol: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::domain(format!("transform variable must be positive, got {s}")));
        }
        let mut total = 0.0;
        for i in 0..self.times.len() - 1 {
            let (t0, t1) = (self.times[i], self.times[i + 1]);
            let h = t1 - t0;
            let (e0, e1) = exp_moments(s, h);
            let slope = (self.values[i + 1] - self.values[i]) / h;
            total += (-s * t0).exp() * (self.values[i] * e0 + slope * e1);
        }
        if let Some(p) = self.tail_exponent {
            let tn = *self.times.last().unwrap();
            let fnv = *self.values.last().unwrap();
            if fnv != 0.0 {
                total += fnv * tn.powf(-p) * s.powf(-p - 1.0) * upper_gamma(p + 1.0, s * tn);
            }
        }
        Ok(total)
    }

    fn power_weighted(&self, q: f64, lower: f64, _tol: f64) -> Result<f64> {
        let mut total = 0.0;
        for i in 0..self.times.len() - 1 {
            let (t0, t1) = (self.times[i], self.times[i + 1]);
            if t1 <= lower {
                continue;
            }
            let slope = (self.values[i + 1] - self.values[i]) / (t1 - t0);
            let intercept = self.values[i] - slope * t0;
            let a = t0.max(lower);
            if a == 0.0 {
                // Integrable only if each term's power exceeds -1 or vanishes.
                if (intercept != 0.0 && q >= 1.0) || (slope != 0.0 && q >= 2.0) {
                    return Ok(f64::INFINITY);
                }
                let i0 = if intercept != 0.0 { t1.powf(1.0 - q) / (1.0 - q) } else { 0.0 };
                let i1 = if slope != 0.0 { t1.powf(2.0 - q) / (2.0 - q) } else { 0.0 };
                total += intercept * i0 + slope * i1;
            } else {
                total += intercept * power_integral(-q, a, t1) + slope * power_integral(1.0 - q, a, t1);
            }
        }
        if let Some(p) = self.tail_exponent {
            let tn = *self.times.last().unwrap();
            let fnv = *self.values.last().unwrap();
            if fnv != 0.0 {
                if p - q >= -1.0 {
                    return Ok(f64::INFINITY);
                }
                let from = tn.max(lower);
                total += fnv * tn.powf(-p) * from.powf(p - q + 1.0) / (q - p - 1.0);
            }
        }
        Ok(total)
    }
}

/// `∫_0^∞ e^{-st} f(t) dt` within `tol`.
pub fn laplace_transform(f: &dyn TimeSignal, s: f64, tol: f64) -> Result<f64> {
    f.laplace(s, tol)
}

/// `∫_0^∞ σ^{x-1} e^{-σ} dσ` for `0 < x ≤ 1` by quadrature, with the
/// singular head mapped to a bounded integrand.
pub(crate) fn gamma_by_quadrature(x: f64) -> Result<f64> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::domain(format!("argument must lie in (0, 1], got {x}")));
    }
    let q = Quadrature::new(1e-15, 2e-13);
    // σ = r^{1/x} on [0, 1]: ∫_0^1 σ^{x-1} e^{-σ} dσ = (1/x) ∫_0^1 e^{-r^{1/x}} dr
    let p = 1.0 / x;
    let head = q.integrate(|r: f64| p * (-r.powf(p)).exp(), 0.0, 1.0)?.value;
    let body = q
        .integrate_with_breaks(
            |t: f64| t.powf(x - 1.0) * (-t).exp(),
            &[1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 48.0],
        )?
        .value;
    // remainder ∫_48^∞ ≤ e^{-48}
    Ok(head + body)
}

/// `Γ(1 - α) = ∫_0^∞ σ^{-α} e^{-σ} dσ`, by quadrature.
pub fn gamma_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    gamma_by_quadrature(1.0 - alpha)
}

/// Both sides of a transform identity and their relative mismatch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

impl IdentityCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        let residual = if rhs == 0.0 {
            lhs.abs()
        } else {
            ((lhs - rhs) / rhs).abs()
        };
        IdentityCheck { lhs, rhs, residual }
    }
}

const TRANSFORM_TOL: f64 = 1e-10;

fn check_alpha_s(alpha: f64, s: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(s > 0.0) {
        return Err(Error::domain(format!("s must be positive, got {s}")));
    }
    Ok(())
}

/// `t ↦ ∫_0^t P(a) K(t - a) da` for a kernel that may be singular at 0.
fn memory_convolution<'a>(
    p: &'a AnalyticFn<'a>,
    kernel: impl Fn(f64) -> f64 + Sync + 'a,
    kernel_singularity: f64,
) -> impl Fn(f64) -> f64 + Sync + 'a {
    let q = Quadrature::new(1e-14, 1e-12);
    move |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        // integrate in r = t - a so the kernel singularity sits at r = 0
        let g = |r: f64| p.eval(t - r) * kernel(r);
        let mut edges = vec![0.0];
        let mut e = (1e-3f64).min(0.5 * t);
        while e < t {
            edges.push(e);
            e *= 4.0;
        }
        edges.extend(p.breakpoints.iter().map(|b| t - b).filter(|&r| r > 0.0 && r < t));
        edges.push(t);
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        let head = q.integrate_left_singular(&g, edges[0], edges[1], kernel_singularity);
        let body = q.integrate_with_breaks(&g, &edges[1..]);
        match (head, body) {
            (Ok(h), Ok(b)) => h.value + b.value,
            _ => f64::NAN,
        }
    }
}

/// Residual of `L_s[∂_t ∫_0^t P(a)(t-a)^{-α} da] = Γ(1-α) s^α L_s P`.
///
/// The left side is evaluated as `s · L_s[∫_0^t P(a)(t-a)^{-α} da]`.
pub fn verify_fund_laplace(p: &AnalyticFn, alpha: f64, s: f64) -> Result<IdentityCheck> {
    check_alpha_s(alpha, s)?;
    let sup = p.sup_bound()?;
    if sup == 0.0 {
        return Ok(IdentityCheck::new(0.0, 0.0));
    }
    let conv = memory_convolution(p, move |r: f64| r.powf(-alpha), alpha);
    let outer = AnalyticFn::new(conv, TailModel::PowerLawBound {
        coef: sup / (1.0 - alpha),
        exponent: 1.0 - alpha,
    })
    .with_breakpoints(&p.breakpoints);
    let lhs = s * outer.laplace(s, TRANSFORM_TOL)?;
    let rhs = gamma_alpha(alpha)? * s.powf(alpha) * p.laplace(s, TRANSFORM_TOL)?;
    if lhs.is_nan() {
        return Err(Error::Numerical("inner memory quadrature failed".into()));
    }
    Ok(IdentityCheck::new(lhs, rhs))
}

/// Residual of `L_s[∂_t ∫_0^t P(τ)(1+t-τ)^{-α} dτ] = s (L_s (1+a)^{-α}) L_s P`.
pub fn verify_fund_laplace2(p: &AnalyticFn, alpha: f64, s: f64) -> Result<IdentityCheck> {
    check_alpha_s(alpha, s)?;
    let sup = p.sup_bound()?;
    if sup == 0.0 {
        return Ok(IdentityCheck::new(0.0, 0.0));
    }
    let conv = memory_convolution(p, move |r: f64| (1.0 + r).powf(-alpha), 0.0);
    let outer = AnalyticFn::new(conv, TailModel::PowerLawBound {
        coef: 2.0 * sup / (1.0 - alpha),
        exponent: 1.0 - alpha,
    })
    .with_breakpoints(&p.breakpoints);
    let lhs = s * outer.laplace(s, TRANSFORM_TOL)?;
    let kernel = AnalyticFn::new(move |a: f64| (1.0 + a).powf(-alpha), TailModel::Bounded(1.0));
    let rhs = s * kernel.laplace(s, TRANSFORM_TOL)? * p.laplace(s, TRANSFORM_TOL)?;
    if lhs.is_nan() {
        return Err(Error::Numerical("inner memory quadrature failed".into()));
    }
    Ok(IdentityCheck::new(lhs, rhs))
}

/// Residual of `s L_s f = L_s f'` for `f(0) = 0`.
pub fn verify_transit_rule(f: &AnalyticFn, derivative: &AnalyticFn, s: f64) -> Result<IdentityCheck> {
    if f.eval(0.0).abs() > 0.0 {
        return Err(Error::Precondition("the derivative rule needs f(0) = 0".into()));
    }
    let lhs = s * f.laplace(s, TRANSFORM_TOL)?;
    let rhs = derivative.laplace(s, TRANSFORM_TOL)?;
    Ok(IdentityCheck::new(lhs, rhs))
}

/// `s^α L_s[t^{α-1}]` must equal `Γ(α)` for every `s`. Returns the check
/// against `Γ(α)` (computed by quadrature) with the worst residual over `s_values`.
pub fn verify_scaling_rule(alpha: f64, s_values: &[f64]) -> Result<IdentityCheck> {
    check_alpha_s(alpha, 1.0)?;
    let f = AnalyticFn::power(alpha - 1.0);
    let reference = gamma_by_quadrature(alpha)?;
    let mut worst = IdentityCheck::new(reference, reference);
    for &s in s_values {
        let scaled = f.laplace(s, TRANSFORM_TOL)? * s.powf(alpha);
        let c = IdentityCheck::new(scaled, reference);
        if c.residual >= worst.residual {
            worst = c;
        }
    }
    Ok(worst)
}

/// Geometric sample of `s ∈ [10⁻³, 1]` used as the surrogate for the
/// interval hypothesis on the transform.
pub fn transform_sample_points() -> Vec<f64> {
    (0..13).map(|i| 10f64.powf(-3.0 + 0.25 * i as f64)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaReport {
    /// `min s^α û(s)` over the sample points.
    pub transform_lower: f64,
    /// `max s^α û(s)` over the sample points.
    pub transform_upper: f64,
    /// `∫_0^∞ u t^{-α-ε} dt`.
    pub lower_lhs: f64,
    /// `∫_1^∞ u t^{-α-ε} dt`.
    pub upper_lhs: f64,
    /// `K̲₁ / ε` with `K̲₁ = K̲ / Γ(α + ε)`.
    pub lower_bound: f64,
    /// `K̄₁ / ε` with `K̄₁ = e (α + ε) K̄`.
    pub upper_bound: f64,
}

impl LemmaReport {
    pub fn lower_holds(&self) -> bool {
        self.lower_lhs >= self.lower_bound
    }

    pub fn upper_holds(&self) -> bool {
        self.upper_lhs <= self.upper_bound
    }
}

/// Checks the integral-sense decay bounds implied by `û(s) ≍ s^{-α}`.
pub fn lemma_integral_bounds(u: &dyn TimeSignal, alpha: f64, eps: f64) -> Result<LemmaReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(eps > 0.0 && eps < 1.0 - alpha) {
        return Err(Error::domain(format!("epsilon must lie in (0, 1 - alpha), got {eps}")));
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for s in transform_sample_points() {
        let r = u.laplace(s, 1e-9)? * s.powf(alpha);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    if !(lo > 0.0) || !hi.is_finite() {
        return Err(Error::Precondition(format!(
            "transform bounds K_lower s^-a <= u_hat <= K_upper s^-a fail on the sample set (min ratio {lo:e}, max ratio {hi:e})"
        )));
    }
    let q = alpha + eps;
    let lower_lhs = u.power_weighted(q, 0.0, 1e-9)?;
    let upper_lhs = u.power_weighted(q, 1.0, 1e-9)?;
    Ok(LemmaReport {
        transform_lower: lo,
        transform_upper: hi,
        lower_lhs,
        upper_lhs,
        lower_bound: lo / gamma_by_quadrature(q)? / eps,
        upper_bound: E * q * hi / eps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elementary_transforms() {
        let one = AnalyticFn::new(|_| 1.0, TailModel::Bounded(1.0));
        assert!((laplace_transform(&one, 2.0, 1e-12).unwrap() - 0.5).abs() < 1e-11);
        let inv_sqrt = AnalyticFn::power(-0.5);
        let v = laplace_transform(&inv_sqrt, 1.0, 1e-10).unwrap();
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-9);
        let e = AnalyticFn::exp_decay(1.0);
        assert!((laplace_transform(&e, 1.0, 1e-12).unwrap() - 0.5).abs() < 1e-11);
    }

    #[test]
    fn divergent_growth_is_rejected() {
        let g = AnalyticFn::new(|t: f64| (2.0 * t).exp(), TailModel::Exponential { coef: 1.0, rate: 2.0 });
        assert!(matches!(laplace_transform(&g, 1.0, 1e-8), Err(Error::Divergence(_))));
    }

    #[test]
    fn gamma_alpha_against_closed_forms() {
        let sqrt_pi = std::f64::consts::PI.sqrt();
        assert!((gamma_alpha(0.5).unwrap() - sqrt_pi).abs() < 1e-12);
        assert!((gamma_alpha(1e-8).unwrap() - 1.0).abs() < 1e-6);
        assert!((gamma_alpha(0.25).unwrap() - sgamma::gamma(0.75)).abs() < 1e-12);
        assert!(gamma_alpha(1.0).is_err());
        assert!(gamma_alpha(0.0).is_err());
    }

    #[test]
    fn sampled_transform_of_linear_ramp_is_exact() {
        // f(t) = t on [0, 2], zero beyond
        let f = SampledFunction::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0], None).unwrap();
        let s: f64 = 0.7;
        let exact = (1.0 - (-2.0 * s).exp() * (1.0 + 2.0 * s)) / (s * s);
        assert!((f.laplace(s, 0.0).unwrap() - exact).abs() < 1e-14);
    }

    #[test]
    fn sampled_grid_validation() {
        assert!(SampledFunction::new(vec![0.0, 0.0], vec![1.0, 1.0], None).is_err());
        assert!(SampledFunction::new(vec![0.5, 1.0], vec![1.0, 1.0], None).is_err());
        assert!(SampledFunction::new(vec![0.0, 1.0], vec![1.0, f64::NAN], None).is_err());
    }

    #[test]
    fn upper_gamma_recurrence() {
        let q = Quadrature::new(1e-300, 1e-13);
        for a in [-0.5, -1.5, 0.5, 2.5] {
            let x: f64 = 1.3;
            let exact = q
                .integrate(|t: f64| t.powf(a - 1.0) * (-t).exp(), x, x + 80.0)
                .unwrap()
                .value;
            assert!((upper_gamma(a, x) - exact).abs() < 1e-10 * exact.abs().max(1.0), "a={a}");
        }
    }

    #[test]
    fn memory_identity_examples() {
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let c = verify_fund_laplace(&AnalyticFn::exp_decay(1.0), 0.5, 1.0).unwrap();
        assert!(c.residual < 1e-6);
        assert!((c.rhs - sqrt_pi / 2.0).abs() < 1e-12);
        let c = verify_fund_laplace(&AnalyticFn::indicator(1.0), 0.5, 2.0).unwrap();
        assert!(c.residual < 1e-6);
        let rhs = sqrt_pi * 2f64.sqrt() * (1.0 - (-2f64).exp()) / 2.0;
        assert!((c.rhs - rhs).abs() < 1e-12);
        let z = verify_fund_laplace(&AnalyticFn::zero(), 0.5, 1.0).unwrap();
        assert_eq!(z.residual, 0.0);
    }

    #[test]
    fn shifted_memory_identity_examples() {
        let c = verify_fund_laplace2(&AnalyticFn::exp_decay(1.0), 0.5, 1.0).unwrap();
        assert!(c.residual < 1e-6);
        for alpha in [0.001, 0.999] {
            let c = verify_fund_laplace2(&AnalyticFn::exp_decay(1.0), alpha, 0.5).unwrap();
            assert!(c.residual < 1e-6, "alpha={alpha}: {c:?}");
        }
        assert_eq!(verify_fund_laplace2(&AnalyticFn::zero(), 0.5, 1.0).unwrap().residual, 0.0);
    }

    #[test]
    fn unbounded_test_function_is_rejected() {
        assert!(matches!(
            verify_fund_laplace(&AnalyticFn::power(-0.5), 0.5, 1.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn transit_and_scaling_rules() {
        let f = AnalyticFn::new(|t: f64| t * (-t).exp(), TailModel::Bounded(1.0));
        let df = AnalyticFn::new(|t: f64| (1.0 - t) * (-t).exp(), TailModel::Bounded(1.0));
        for s in [0.5, 1.0, 2.0] {
            assert!(verify_transit_rule(&f, &df, s).unwrap().residual < 1e-8);
        }
        for alpha in [0.25, 0.5, 0.75] {
            assert!(verify_scaling_rule(alpha, &[0.25, 1.0, 4.0]).unwrap().residual < 1e-6);
        }
    }

    #[test]
    fn lemma_bounds_for_pure_power_decay() {
        let alpha = 0.5;
        for (eps, expected) in [(0.1, 10.0), (0.01, 100.0)] {
            let r = lemma_integral_bounds(&AnalyticFn::power(alpha - 1.0), alpha, eps).unwrap();
            assert!((r.upper_lhs - expected).abs() < 1e-8 * expected);
            assert!(r.lower_lhs.is_infinite());
            assert!(r.upper_holds() && r.lower_holds());
        }
    }

    #[test]
    fn lemma_rejects_zero_signal() {
        assert!(matches!(
            lemma_integral_bounds(&AnalyticFn::zero(), 0.5, 0.1),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn sampled_power_tail_matches_analytic() {
        // f = 1 on [0, 1], t^{-1/2} beyond
        let times: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let f = SampledFunction::new(times.clone(), vec![1.0; times.len()], Some(-0.5)).unwrap();
        let g = AnalyticFn::new(|t: f64| t.max(1.0).powf(-0.5), TailModel::PowerLaw {
            coef: 1.0,
            exponent: -0.5,
            start: 1.0,
        })
        .with_breakpoints(&[1.0]);
        for s in [0.01, 0.3, 3.0] {
            let a = f.laplace(s, 1e-10).unwrap();
            let b = g.laplace(s, 1e-10).unwrap();
            assert!((a - b).abs() < 1e-9 * b, "s={s}: {a} vs {b}");
        }
        let a = f.power_weighted(0.7, 0.5, 1e-10).unwrap();
        let b = g.power_weighted(0.7, 0.5, 1e-10).unwrap();
        assert!((a - b).abs() < 1e-9 * b);
    }
}
