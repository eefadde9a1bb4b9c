//! Flat `key = value` experiment files.
//!
//! One key per line, `#` starts a comment, lists are comma separated.
//! Absent keys take the defaults of [`ExperimentConfig::default`].

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::age::SymbolMode;
use crate::error::{Error, Result};
use crate::fracpde::{SubdiffusionParams, TimeScheme};
use crate::model::{AgeProfile, HazardModel, InitialAgeData, JumpKernel, KernelShape, SpatialProfile};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Case {
    SubDiffusion { alpha: f64 },
    NormalDiffusion { d0: f64 },
}

impl Case {
    pub fn model(&self) -> Result<HazardModel> {
        match *self {
            Case::SubDiffusion { alpha } => HazardModel::power_law(alpha),
            Case::NormalDiffusion { d0 } => HazardModel::constant(d0),
        }
    }

    /// Time-scaling exponent of the diffusive balance.
    pub fn natural_beta(&self) -> f64 {
        match *self {
            Case::SubDiffusion { alpha } => 2.0 / alpha,
            Case::NormalDiffusion { .. } => 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub case: Case,
    /// Strictly decreasing jump lengths.
    pub epsilons: Vec<f64>,
    /// Explicit time scaling; `None` uses [`Case::natural_beta`].
    pub beta: Option<f64>,
    pub da: f64,
    pub space_cells: usize,
    /// Time step of the macroscopic solvers.
    pub dt: f64,
    pub t_end: f64,
    /// Comparison and snapshot times.
    pub times: Vec<f64>,
    pub kernel: KernelShape,
    pub initial: SpatialProfile,
    pub age_rate: f64,
    pub moment_factor: f64,
    pub symbol: SymbolMode,
    pub scheme: TimeScheme,
    pub seed: u64,
    pub particles: usize,
    /// Histogram cells for particle densities; must divide `space_cells`.
    pub bins: usize,
    pub bootstrap: usize,
    pub msd_window: (f64, f64),
    /// Exponents swept by the identity battery.
    pub alphas: Vec<f64>,
    pub tolerance: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            case: Case::SubDiffusion { alpha: 0.5 },
            epsilons: vec![0.2, 0.1, 0.05],
            beta: None,
            da: 1.0,
            space_cells: 512,
            dt: 1e-3,
            t_end: 1.0,
            times: vec![1.0],
            kernel: KernelShape::Triangular,
            initial: SpatialProfile::Cosine,
            age_rate: 1.0,
            moment_factor: 0.5,
            symbol: SymbolMode::Exact,
            scheme: TimeScheme::CrankNicolson,
            seed: 1,
            particles: 100_000,
            bins: 32,
            bootstrap: 100,
            msd_window: (10.0, 1000.0),
            alphas: vec![0.25, 0.5, 0.75],
            tolerance: 1e-5,
        }
    }
}

fn bad(key: &str, value: &str) -> Error {
    Error::Config(format!("cannot parse `{key} = {value}`"))
}

fn number(key: &str, value: &str) -> Result<f64> {
    value.trim().parse::<f64>().map_err(|_| bad(key, value))
}

fn integer<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse::<T>().map_err(|_| bad(key, value))
}

fn list(key: &str, value: &str) -> Result<Vec<f64>> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| number(key, v)).collect()
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

fn parse_kernel(value: &str) -> Result<KernelShape> {
    let parts: Vec<&str> = value.split(':').map(str::trim).collect();
    match parts.as_slice() {
        ["triangular"] => Ok(KernelShape::Triangular),
        ["delta"] => Ok(KernelShape::Delta),
        ["gaussian", s] => Ok(KernelShape::TruncatedGaussian { sigma: number("kernel", s)? }),
        _ => Err(bad("kernel", value)),
    }
}

fn kernel_text(k: &KernelShape) -> String {
    match k {
        KernelShape::Triangular => "triangular".into(),
        KernelShape::Delta => "delta".into(),
        KernelShape::TruncatedGaussian { sigma } => format!("gaussian:{sigma}"),
    }
}

fn parse_profile(value: &str) -> Result<SpatialProfile> {
    let parts: Vec<&str> = value.split(':').map(str::trim).collect();
    match parts.as_slice() {
        ["cosine"] => Ok(SpatialProfile::Cosine),
        ["uniform", c] => Ok(SpatialProfile::Uniform(number("initial", c)?)),
        ["gaussian", c, w] => Ok(SpatialProfile::Gaussian {
            center: number("initial", c)?,
            width: number("initial", w)?,
        }),
        _ => Err(bad("initial", value)),
    }
}

fn profile_text(p: &SpatialProfile) -> String {
    match p {
        SpatialProfile::Cosine => "cosine".into(),
        SpatialProfile::Uniform(c) => format!("uniform:{c}"),
        SpatialProfile::Gaussian { center, width } => format!("gaussian:{center}:{width}"),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", line_no + 1)))?;
            let key = key.trim().to_string();
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("key `{key}` given twice")));
            }
        }
        let mut cfg = ExperimentConfig::default();
        let case = entries.remove("case");
        let alpha = entries.remove("alpha");
        let d0 = entries.remove("d0");
        cfg.case = match case.as_deref().unwrap_or("subdiffusion") {
            "subdiffusion" => Case::SubDiffusion {
                alpha: alpha.as_deref().map_or(Ok(0.5), |v| number("alpha", v))?,
            },
            "diffusion" => Case::NormalDiffusion {
                d0: d0.as_deref().map_or(Ok(1.0), |v| number("d0", v))?,
            },
            other => return Err(bad("case", other)),
        };
        for (key, value) in &entries {
            let (k, v) = (key.as_str(), value.as_str());
            match k {
                "epsilons" => cfg.epsilons = list(k, v)?,
                "beta" => cfg.beta = Some(number(k, v)?),
                "da" => cfg.da = number(k, v)?,
                "space_cells" => cfg.space_cells = integer(k, v)?,
                "dt" => cfg.dt = number(k, v)?,
                "t_end" => cfg.t_end = number(k, v)?,
                "times" => cfg.times = list(k, v)?,
                "kernel" => cfg.kernel = parse_kernel(v)?,
                "initial" => cfg.initial = parse_profile(v)?,
                "age_rate" => cfg.age_rate = number(k, v)?,
                "moment_factor" => cfg.moment_factor = number(k, v)?,
                "symbol" => {
                    cfg.symbol = match v {
                        "exact" => SymbolMode::Exact,
                        "cell-averaged" => SymbolMode::CellAveraged,
                        _ => return Err(bad(k, v)),
                    }
                }
                "scheme" => {
                    cfg.scheme = match v {
                        "crank-nicolson" => TimeScheme::CrankNicolson,
                        "implicit-euler" => TimeScheme::ImplicitEuler,
                        _ => return Err(bad(k, v)),
                    }
                }
                "seed" => cfg.seed = integer(k, v)?,
                "particles" => cfg.particles = integer(k, v)?,
                "bins" => cfg.bins = integer(k, v)?,
                "bootstrap" => cfg.bootstrap = integer(k, v)?,
                "msd_window" => match list(k, v)?.as_slice() {
                    [a, b] => cfg.msd_window = (*a, *b),
                    _ => return Err(bad(k, v)),
                },
                "alphas" => cfg.alphas = list(k, v)?,
                "tolerance" => cfg.tolerance = number(k, v)?,
                _ => return Err(Error::Config(format!("unknown key `{k}`"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every key, in a fixed order. Parsing the output gives back `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        match self.case {
            Case::SubDiffusion { alpha } => {
                put("case", "subdiffusion".into());
                put("alpha", alpha.to_string());
            }
            Case::NormalDiffusion { d0 } => {
                put("case", "diffusion".into());
                put("d0", d0.to_string());
            }
        }
        put("epsilons", join(&self.epsilons));
        if let Some(b) = self.beta {
            put("beta", b.to_string());
        }
        put("da", self.da.to_string());
        put("space_cells", self.space_cells.to_string());
        put("dt", self.dt.to_string());
        put("t_end", self.t_end.to_string());
        put("times", join(&self.times));
        put("kernel", kernel_text(&self.kernel));
        put("initial", profile_text(&self.initial));
        put("age_rate", self.age_rate.to_string());
        put("moment_factor", self.moment_factor.to_string());
        put(
            "symbol",
            match self.symbol {
                SymbolMode::Exact => "exact",
                SymbolMode::CellAveraged => "cell-averaged",
            }
            .into(),
        );
        put(
            "scheme",
            match self.scheme {
                TimeScheme::CrankNicolson => "crank-nicolson",
                TimeScheme::ImplicitEuler => "implicit-euler",
            }
            .into(),
        );
        put("seed", self.seed.to_string());
        put("particles", self.particles.to_string());
        put("bins", self.bins.to_string());
        put("bootstrap", self.bootstrap.to_string());
        put("msd_window", join(&[self.msd_window.0, self.msd_window.1]));
        put("alphas", join(&self.alphas));
        put("tolerance", self.tolerance.to_string());
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.case.model()?;
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::Config("epsilons must be a nonempty list of positive numbers".into()));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("epsilons must be strictly decreasing".into()));
        }
        if let Some(b) = self.beta {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::Config(format!("beta must be positive, got {b}")));
            }
        }
        for (name, v) in [("da", self.da), ("dt", self.dt), ("age_rate", self.age_rate), ("moment_factor", self.moment_factor)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.times.iter().any(|t| !(*t > 0.0 && *t <= self.t_end)) {
            return Err(Error::Config("comparison times must lie in (0, t_end]".into()));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("comparison times must be strictly increasing".into()));
        }
        if self.space_cells < 3 {
            return Err(Error::Config("space_cells must be at least 3".into()));
        }
        if self.bins == 0 || self.space_cells % self.bins != 0 {
            return Err(Error::Config("bins must divide space_cells".into()));
        }
        if !(self.msd_window.0 > 0.0 && self.msd_window.1 > self.msd_window.0) {
            return Err(Error::Config("msd_window must be an increasing pair of positive times".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        JumpKernel::new(self.kernel, self.epsilons[0])?;
        InitialAgeData::new(self.initial, self.age_profile()).validate(&self.case.model()?)
    }

    pub fn beta(&self) -> f64 {
        self.beta.unwrap_or_else(|| self.case.natural_beta())
    }

    /// The scaling check is enforced unless `beta` was set explicitly.
    pub fn enforce_scaling(&self) -> bool {
        self.beta.is_none()
    }

    pub fn age_profile(&self) -> AgeProfile {
        AgeProfile::Exponential { rate: self.age_rate }
    }

    pub fn initial_data(&self) -> InitialAgeData {
        InitialAgeData::new(self.initial, self.age_profile())
    }

    pub fn kernel(&self, epsilon: f64) -> Result<JumpKernel> {
        JumpKernel::new(self.kernel, epsilon)
    }

    /// Coefficients of the limit equation: `A` is the second kernel moment.
    pub fn limit_params(&self) -> Result<SubdiffusionParams> {
        let a_coef = self.kernel(self.epsilons[0])?.moment2();
        let alpha = match self.case {
            Case::SubDiffusion { alpha } => alpha,
            Case::NormalDiffusion { .. } => 0.5,
        };
        Ok(SubdiffusionParams { alpha, a_coef, moment_factor: self.moment_factor })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_defaults() {
        let cfg = ExperimentConfig::parse("# sweep\ncase = diffusion # normal\nd0 = 2\nage_rate = 2\nepsilons = 0.2, 0.1\n").unwrap();
        assert_eq!(cfg.case, Case::NormalDiffusion { d0: 2.0 });
        assert_eq!(cfg.epsilons, vec![0.2, 0.1]);
        assert_eq!(cfg.beta(), 2.0);
        assert_eq!(cfg.space_cells, 512);
    }

    #[test]
    fn round_trip() {
        let mut cfg = ExperimentConfig {
            kernel: KernelShape::TruncatedGaussian { sigma: 0.3 },
            initial: SpatialProfile::Gaussian { center: 3.0, width: 0.5 },
            beta: Some(3.5),
            ..Default::default()
        };
        cfg.alphas.clear();
        let back = ExperimentConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_input() {
        for text in ["epsilons = 0.1, 0.2", "colour = red", "da = fast", "da = 1\nda = 2", "bins = 7", "nonsense"] {
            assert!(matches!(ExperimentConfig::parse(text), Err(Error::Config(_))), "{text}");
        }
    }
}
