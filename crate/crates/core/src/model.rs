//! Model ingredients shared by every solver: escape-rate laws, jump kernels
//! and product-form initial data.

use std::f64::consts::{PI, SQRT_2};

use statrs::function::erf;

use crate::error::{Error, Result};
use crate::quad::Quadrature;

/// Escape-rate law `d(a)` of a trapped particle of age `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HazardModel {
    /// `d(a) = alpha / (1 + a)`, survival `(1 + a)^(-alpha)`.
    PowerLaw { alpha: f64 },
    /// `d(a) = d0`, survival `exp(-d0 a)`.
    Constant { d0: f64 },
}

fn check_age(a: f64) -> Result<()> {
    if a >= 0.0 && a.is_finite() || a == f64::INFINITY {
        Ok(())
    } else {
        Err(Error::domain(format!("age must be nonnegative, got {a}")))
    }
}

impl HazardModel {
    pub fn power_law(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::domain(format!("power-law exponent must be positive, got {alpha}")));
        }
        Ok(HazardModel::PowerLaw { alpha })
    }

    pub fn constant(d0: f64) -> Result<Self> {
        if !(d0 > 0.0 && d0.is_finite()) {
            return Err(Error::domain(format!("constant rate must be positive, got {d0}")));
        }
        Ok(HazardModel::Constant { d0 })
    }

    pub fn hazard(&self, a: f64) -> Result<f64> {
        check_age(a)?;
        Ok(self.hazard_unchecked(a))
    }

    pub(crate) fn hazard_unchecked(&self, a: f64) -> f64 {
        match *self {
            HazardModel::PowerLaw { alpha } => alpha / (1.0 + a),
            HazardModel::Constant { d0 } => d0,
        }
    }

    /// `D(a) = ∫_0^a d`.
    pub fn cumulative_hazard(&self, a: f64) -> Result<f64> {
        check_age(a)?;
        Ok(match *self {
            HazardModel::PowerLaw { alpha } => alpha * a.ln_1p(),
            HazardModel::Constant { d0 } => d0 * a,
        })
    }

    /// `exp(-D(a))`, in closed form.
    pub fn survival(&self, a: f64) -> Result<f64> {
        check_age(a)?;
        Ok(self.survival_unchecked(a))
    }

    pub(crate) fn survival_unchecked(&self, a: f64) -> f64 {
        match *self {
            HazardModel::PowerLaw { alpha } => (1.0 + a).powf(-alpha),
            HazardModel::Constant { d0 } => (-d0 * a).exp(),
        }
    }

    /// `∫_a^b exp(-D)`, closed form.
    pub(crate) fn survival_integral(&self, a: f64, b: f64) -> f64 {
        match *self {
            HazardModel::PowerLaw { alpha } => {
                if (alpha - 1.0).abs() < 1e-12 {
                    ((1.0 + b) / (1.0 + a)).ln()
                } else {
                    // (1+a)^{1-α} ((1+b)^{1-α}/(1+a)^{1-α} - 1) / (1-α), written to avoid cancellation
                    let e = 1.0 - alpha;
                    let ratio_ln = ((1.0 + b) / (1.0 + a)).ln() * e;
                    (1.0 + a).powf(e) * ratio_ln.exp_m1() / e
                }
            }
            HazardModel::Constant { d0 } => (-d0 * a).exp() * -(-d0 * (b - a)).exp_m1() / d0,
        }
    }

    /// Inverts the survival function: returns `a` with `survival(a) = u`.
    pub fn sample_waiting_time(&self, u: f64) -> Result<f64> {
        self.sample_total_age(0.0, u)
    }

    /// Age-conditional inversion: a particle of current age `age` leaves its
    /// trap at total age `a'` with `survival(a') / survival(age) = u`.
    pub fn sample_total_age(&self, age: f64, u: f64) -> Result<f64> {
        check_age(age)?;
        if !(u > 0.0 && u <= 1.0) {
            return Err(Error::domain(format!("uniform variate must lie in (0, 1], got {u}")));
        }
        Ok(match *self {
            HazardModel::PowerLaw { alpha } => (1.0 + age) * u.powf(-1.0 / alpha) - 1.0,
            HazardModel::Constant { d0 } => age - u.ln() / d0,
        })
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            HazardModel::PowerLaw { alpha } => Some(alpha),
            HazardModel::Constant { .. } => None,
        }
    }
}

/// Shape of the normalized displacement law `f(z)`, supported on `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelShape {
    /// `f(z) = 1 - |z|`.
    Triangular,
    /// Gaussian of standard deviation `sigma` truncated to `[-1, 1]`.
    TruncatedGaussian { sigma: f64 },
    /// No displacement. Not a valid diffusive kernel; used as the zero-jump control.
    Delta,
}

/// Scaled transition density `ω_ε(x, y) = f(|x - y| / ε) / ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpKernel {
    pub shape: KernelShape,
    pub epsilon: f64,
    pub dimension: usize,
}

impl JumpKernel {
    pub fn new(shape: KernelShape, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::domain(format!("kernel length scale must be positive, got {epsilon}")));
        }
        if let KernelShape::TruncatedGaussian { sigma } = shape {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::domain(format!("gaussian width must be positive, got {sigma}")));
            }
        }
        Ok(JumpKernel { shape, epsilon, dimension: 1 })
    }

    pub fn triangular(epsilon: f64) -> Result<Self> {
        Self::new(KernelShape::Triangular, epsilon)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.shape, epsilon)
    }

    /// Normalized displacement density `f(z)`; zero outside `[-1, 1]`.
    /// The delta shape has no density and returns 0.
    pub fn profile(&self, z: f64) -> f64 {
        if z.abs() > 1.0 {
            return 0.0;
        }
        match self.shape {
            KernelShape::Triangular => 1.0 - z.abs(),
            KernelShape::TruncatedGaussian { sigma } => {
                (-0.5 * (z / sigma).powi(2)).exp() / gaussian_norm(sigma)
            }
            KernelShape::Delta => 0.0,
        }
    }

    pub fn density(&self, x: f64, y: f64) -> f64 {
        self.profile((x - y).abs() / self.epsilon) / self.epsilon
    }

    /// `(1/ε²) ∫ (x - y)² ω_ε(x, y) dy`; the scalar `A` in one dimension.
    pub fn moment2(&self) -> f64 {
        match self.shape {
            KernelShape::Triangular => 1.0 / 6.0,
            KernelShape::TruncatedGaussian { sigma } => {
                let w = 0.5 / (sigma * sigma);
                let half_norm = 0.5 * gaussian_norm(sigma);
                sigma * sigma * (1.0 - (-w).exp() / half_norm)
            }
            KernelShape::Delta => 0.0,
        }
    }

    /// `(1/ε³) ∫ |x - y|³ ω_ε(x, y) dy`.
    pub fn moment3(&self) -> f64 {
        match self.shape {
            KernelShape::Triangular => 0.1,
            KernelShape::TruncatedGaussian { sigma } => {
                let w = 0.5 / (sigma * sigma);
                let s4 = sigma.powi(4);
                // 2 ∫_0^1 z³ e^{-z²/2σ²} dz = 4σ⁴ (1 - (1 + w) e^{-w})
                4.0 * s4 * (1.0 - (1.0 + w) * (-w).exp()) / gaussian_norm(sigma)
            }
            KernelShape::Delta => 0.0,
        }
    }

    /// `∫ (y - x) ω_ε(x, y) dy`, zero for every symmetric kernel.
    pub fn first_moment(&self) -> f64 {
        0.0
    }

    /// Fourier symbol of the normalized displacement, `∫ f(z) cos(ξ z) dz`.
    pub fn symbol(&self, xi: f64) -> f64 {
        match self.shape {
            KernelShape::Triangular => {
                if xi.abs() < 1e-4 {
                    let x2 = xi * xi;
                    1.0 - x2 / 12.0 + x2 * x2 / 360.0
                } else {
                    let s = (0.5 * xi).sin() / (0.5 * xi);
                    s * s
                }
            }
            KernelShape::TruncatedGaussian { .. } => {
                // one panel per half period of the cosine
                let panels = ((xi.abs() / std::f64::consts::PI).ceil() as usize).max(1);
                let edges: Vec<f64> = (0..=panels).map(|i| i as f64 / panels as f64).collect();
                let q = Quadrature::new(1e-14, 1e-12);
                q.integrate_with_breaks(|z| 2.0 * self.profile(z) * (xi * z).cos(), &edges)
                    .map(|e| e.value)
                    .unwrap_or(f64::NAN)
            }
            KernelShape::Delta => 1.0,
        }
    }

    /// Normalized displacement from two uniform variates in `[0, 1)`.
    pub fn sample_displacement(&self, u1: f64, u2: f64) -> f64 {
        match self.shape {
            KernelShape::Triangular => u1 - u2,
            KernelShape::TruncatedGaussian { sigma } => {
                let edge = erf::erf(1.0 / (sigma * SQRT_2));
                let p = (2.0 * u1 - 1.0) * edge;
                sigma * SQRT_2 * erf::erf_inv(p)
            }
            KernelShape::Delta => 0.0,
        }
    }

    pub fn sample_jump(&self, x: f64, u1: f64, u2: f64) -> f64 {
        x + self.epsilon * self.sample_displacement(u1, u2)
    }

    /// Cell-averaged transition weights on a uniform grid of spacing `dx`:
    /// `W_m = (1/dx) ∫_{cell 0} ∫_{cell m} ω_ε(x, y) dy dx`. Returned for
    /// offsets `m = -r..=r` as `(m, W_m)`.
    pub fn cell_weights(&self, dx: f64) -> Result<Vec<(i64, f64)>> {
        if let KernelShape::Delta = self.shape {
            return Ok(vec![(0, 1.0)]);
        }
        let eps = self.epsilon;
        let reach = (eps / dx).ceil() as i64 + 1;
        let q = Quadrature::new(1e-15, 1e-13);
        let mut out = Vec::with_capacity(2 * reach as usize + 1);
        for m in -reach..=reach {
            let c = m as f64 * dx;
            let lo = (c - dx).max(-eps);
            let hi = (c + dx).min(eps);
            if hi <= lo {
                continue;
            }
            let mut breaks = vec![lo];
            for p in [c, 0.0] {
                if p > lo && p < hi && !breaks.contains(&p) {
                    breaks.push(p);
                }
            }
            breaks.push(hi);
            breaks.sort_by(f64::total_cmp);
            let w = q.integrate_with_breaks(
                |z| self.density(0.0, z) * (1.0 - (z - c).abs() / dx).max(0.0),
                &breaks,
            )?;
            if w.value > 0.0 {
                out.push((m, w.value));
            }
        }
        let total: f64 = out.iter().map(|(_, w)| w).sum();
        for (_, w) in &mut out {
            *w /= total;
        }
        Ok(out)
    }
}

fn gaussian_norm(sigma: f64) -> f64 {
    sigma * (2.0 * PI).sqrt() * erf::erf(1.0 / (sigma * SQRT_2))
}

/// Spatial factor `ρ⁰(x)` of the initial data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpatialProfile {
    /// `1 + cos x` on the periodic domain `[0, 2π)`.
    Cosine,
    /// Constant `c` on `[0, 2π)`.
    Uniform(f64),
    /// Unit-mass Gaussian, for whole-line runs.
    Gaussian { center: f64, width: f64 },
}

/// Length of the periodic spatial domain.
pub const PERIOD: f64 = 2.0 * PI;

impl SpatialProfile {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            SpatialProfile::Cosine => 1.0 + x.cos(),
            SpatialProfile::Uniform(c) => c,
            SpatialProfile::Gaussian { center, width } => {
                (-0.5 * ((x - center) / width).powi(2)).exp() / (width * (2.0 * PI).sqrt())
            }
        }
    }

    /// Cell average over `[x0, x1]`.
    pub fn cell_average(&self, x0: f64, x1: f64) -> f64 {
        let h = x1 - x0;
        match *self {
            SpatialProfile::Cosine => 1.0 + (x1.sin() - x0.sin()) / h,
            SpatialProfile::Uniform(c) => c,
            SpatialProfile::Gaussian { center, width } => {
                let z = |x: f64| (x - center) / (width * SQRT_2);
                0.5 * (erf::erf(z(x1)) - erf::erf(z(x0))) / h
            }
        }
    }

    pub fn mass(&self) -> f64 {
        match *self {
            SpatialProfile::Cosine => PERIOD,
            SpatialProfile::Uniform(c) => c * PERIOD,
            SpatialProfile::Gaussian { .. } => 1.0,
        }
    }

    pub fn sup(&self) -> f64 {
        match *self {
            SpatialProfile::Cosine => 2.0,
            SpatialProfile::Uniform(c) => c,
            SpatialProfile::Gaussian { width, .. } => 1.0 / (width * (2.0 * PI).sqrt()),
        }
    }

    /// Draws a position distributed as `ρ⁰ / M`.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            SpatialProfile::Cosine => loop {
                let x = PERIOD * rng.random::<f64>();
                if 2.0 * rng.random::<f64>() < 1.0 + x.cos() {
                    return x;
                }
            },
            SpatialProfile::Uniform(_) => PERIOD * rng.random::<f64>(),
            SpatialProfile::Gaussian { center, width } => {
                let u: f64 = rng.random::<f64>();
                let v: f64 = rng.random::<f64>();
                let r = (-2.0 * (1.0 - u).ln()).sqrt();
                center + width * r * (2.0 * PI * v).cos()
            }
        }
    }
}

/// Age factor `g(a)` of the initial data, a probability density in age.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AgeProfile {
    /// `g(a) = rate e^{-rate a}`.
    Exponential { rate: f64 },
}

impl Default for AgeProfile {
    fn default() -> Self {
        AgeProfile::Exponential { rate: 1.0 }
    }
}

impl AgeProfile {
    pub fn density(&self, a: f64) -> f64 {
        match *self {
            AgeProfile::Exponential { rate } => rate * (-rate * a).exp(),
        }
    }

    /// `∫_{a0}^{a1} g`.
    pub fn mass_between(&self, a0: f64, a1: f64) -> f64 {
        match *self {
            AgeProfile::Exponential { rate } => {
                (-rate * a0).exp() * -(-rate * (a1 - a0)).exp_m1()
            }
        }
    }

    /// Age beyond which the remaining mass is below `tail`.
    pub fn support_cutoff(&self, tail: f64) -> f64 {
        match *self {
            AgeProfile::Exponential { rate } => -tail.ln() / rate,
        }
    }

    pub fn sample(&self, u: f64) -> f64 {
        match *self {
            AgeProfile::Exponential { rate } => -(1.0 - u).ln() / rate,
        }
    }

    /// `sup_a g(a) / survival(a)`; infinite when the ratio is unbounded.
    pub fn survival_bound(&self, model: &HazardModel) -> f64 {
        match (*self, *model) {
            (AgeProfile::Exponential { rate }, HazardModel::PowerLaw { alpha }) => {
                let peak = (alpha / rate - 1.0).max(0.0);
                rate * (-rate * peak).exp() * (1.0 + peak).powf(alpha)
            }
            (AgeProfile::Exponential { rate }, HazardModel::Constant { d0 }) => {
                if rate >= d0 {
                    rate
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

/// Product-form initial data `u⁰(a, x) = ρ⁰(x) g(a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialAgeData {
    pub spatial: SpatialProfile,
    pub age: AgeProfile,
}

impl InitialAgeData {
    pub fn new(spatial: SpatialProfile, age: AgeProfile) -> Self {
        InitialAgeData { spatial, age }
    }

    pub fn value(&self, a: f64, x: f64) -> f64 {
        self.spatial.value(x) * self.age.density(a)
    }

    pub fn total_mass(&self) -> f64 {
        self.spatial.mass()
    }

    /// Constant `C⁰` with `u⁰(a, x) ≤ C⁰ e^{-D(a)}`.
    pub fn comparison_constant(&self, model: &HazardModel) -> f64 {
        self.spatial.sup() * self.age.survival_bound(model)
    }

    /// Checks `∫ (1 + a)^α g(a) da < ∞` and a finite `C⁰`.
    pub fn validate(&self, model: &HazardModel) -> Result<()> {
        let c0 = self.comparison_constant(model);
        if !c0.is_finite() {
            return Err(Error::Input(
                "initial age profile is not bounded by a multiple of the survival function".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hazard_values() {
        let p = HazardModel::power_law(0.5).unwrap();
        assert_eq!(p.hazard(0.0).unwrap(), 0.5);
        assert_eq!(p.hazard(3.0).unwrap(), 0.125);
        let c = HazardModel::constant(2.0).unwrap();
        assert_eq!(c.hazard(17.0).unwrap(), 2.0);
        assert!(matches!(p.hazard(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn survival_values() {
        let p = HazardModel::power_law(0.5).unwrap();
        assert_eq!(p.survival(3.0).unwrap(), 0.5);
        let c = HazardModel::constant(1.0).unwrap();
        assert!((c.survival(2.0).unwrap() - (-2.0f64).exp()).abs() < 1e-16);
        assert_eq!(p.survival(0.0).unwrap(), 1.0);
        assert_eq!(c.survival(0.0).unwrap(), 1.0);
    }

    #[test]
    fn waiting_time_inversion() {
        let p = HazardModel::power_law(0.5).unwrap();
        assert!((p.sample_waiting_time(0.25).unwrap() - 15.0).abs() < 1e-12);
        let c = HazardModel::constant(1.0).unwrap();
        assert!((c.sample_waiting_time((-2.0f64).exp()).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(p.sample_waiting_time(1.0).unwrap(), 0.0);
        assert_eq!(c.sample_waiting_time(1.0).unwrap(), 0.0);
        assert!(p.sample_waiting_time(0.0).is_err());
        assert!(p.sample_waiting_time(1.5).is_err());
    }

    #[test]
    fn survival_integral_matches_quadrature() {
        let q = Quadrature::default();
        for m in [HazardModel::PowerLaw { alpha: 0.3 }, HazardModel::Constant { d0: 1.7 }] {
            let exact = q.integrate(|a| m.survival_unchecked(a), 0.4, 2.9).unwrap().value;
            assert!((m.survival_integral(0.4, 2.9) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn comparison_constant_for_default_profile() {
        let model = HazardModel::power_law(0.5).unwrap();
        let data = InitialAgeData::new(SpatialProfile::Cosine, AgeProfile::default());
        // e^{-a} (1+a)^{1/2} peaks at a = 0
        assert!((data.comparison_constant(&model) - 2.0).abs() < 1e-15);
        let fast = HazardModel::constant(2.0).unwrap();
        assert!(data.validate(&fast).is_err());
    }

    #[test]
    fn cell_weights_sum_to_one_and_are_symmetric() {
        let k = JumpKernel::triangular(0.1).unwrap();
        let w = k.cell_weights(0.0125).unwrap();
        let total: f64 = w.iter().map(|p| p.1).sum();
        assert!((total - 1.0).abs() < 1e-14);
        for &(m, wm) in &w {
            let mirror = w.iter().find(|p| p.0 == -m).unwrap().1;
            assert!((wm - mirror).abs() < 1e-14);
        }
    }
}
