use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{time_grid, Contiguity, FixedEffectsDesign, ModelSpec, PanelData, SpatialWeights};
use crate::rng::replicate_rng;

/// Shape of the spatial coefficient curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RhoShape {
    /// `-0.6 sin^2(2 pi tau)`
    Rho1,
    /// `0.6 sin^2(2 pi tau)`
    Rho2,
    /// No spatial dependence.
    Zero,
}

impl RhoShape {
    pub fn eval(&self, tau: f64) -> f64 {
        let s = (2.0 * PI * tau).sin();
        match self {
            RhoShape::Rho1 => -0.6 * s * s,
            RhoShape::Rho2 => 0.6 * s * s,
            RhoShape::Zero => 0.0,
        }
    }
}

/// Error distributions, all with mean 0 and variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorLaw {
    /// `N(0, 1)`
    Normal,
    /// `U(-sqrt 3, sqrt 3)`
    Uniform,
    /// `chi^2(2)/2 - 1`
    ChiSq,
}

impl ErrorLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ErrorLaw::Normal => StandardNormal.sample(rng),
            ErrorLaw::Uniform => {
                let r3 = 3f64.sqrt();
                Uniform::new(-r3, r3).expect("valid range").sample(rng)
            }
            ErrorLaw::ChiSq => ChiSquared::new(2.0).expect("valid dof").sample(rng) / 2.0 - 1.0,
        }
    }
}

/// Alternative shape for the fourth coefficient, `5 + c g(tau)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Beta4Shape {
    /// `g = sin(2 pi tau)`
    #[default]
    Sin2Pi,
    /// `g = sin(pi tau)`
    SinPi,
}

macro_rules! parse_enum {
    ($ty:ty, $what:literal, { $($name:literal => $variant:expr),+ $(,)? }) => {
        impl std::str::FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($name => Ok($variant),)+
                    other => Err(Error::InvalidSpec(format!(concat!("unknown ", $what, " '{}'"), other))),
                }
            }
        }
        impl std::fmt::Display for $ty {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                let name = match self { $(v if *v == $variant => $name,)+ _ => unreachable!() };
                f.write_str(name)
            }
        }
    };
}

parse_enum!(RhoShape, "rho shape", { "rho1" => RhoShape::Rho1, "rho2" => RhoShape::Rho2, "zero" => RhoShape::Zero });
parse_enum!(ErrorLaw, "error law", { "normal" => ErrorLaw::Normal, "uniform" => ErrorLaw::Uniform, "chisq" => ErrorLaw::ChiSq });
parse_enum!(Beta4Shape, "beta4 shape", { "sin2pi" => Beta4Shape::Sin2Pi, "sinpi" => Beta4Shape::SinPi });

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpConfig {
    /// Lattice side; N = m^2.
    pub m: usize,
    pub t_len: usize,
    pub scheme: Contiguity,
    pub rho_shape: RhoShape,
    pub error_law: ErrorLaw,
    /// Deviation of the third and fourth coefficients from constancy.
    pub c: f64,
    pub beta4_shape: Beta4Shape,
    /// Multiplier on the errors; 0 gives noise-free data.
    pub noise_scale: f64,
    pub seed: u64,
}

impl DgpConfig {
    pub fn new(m: usize, t_len: usize, scheme: Contiguity, rho_shape: RhoShape, error_law: ErrorLaw) -> Self {
        Self {
            m,
            t_len,
            scheme,
            rho_shape,
            error_law,
            c: 0.0,
            beta4_shape: Beta4Shape::Sin2Pi,
            noise_scale: 1.0,
            seed: 0,
        }
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn n_locations(&self) -> usize {
        self.m * self.m
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::InvalidGrid { m: self.m });
        }
        if self.t_len < 2 {
            return Err(Error::DegenerateGrid { t_len: self.t_len });
        }
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidSpec(format!("deviation c must be >= 0, got {}", self.c)));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::InvalidSpec(format!("noise scale must be >= 0, got {}", self.noise_scale)));
        }
        Ok(())
    }

    /// Intercept and `x2` time-varying, `x3` and `x4` constant under the null.
    pub fn model_spec() -> ModelSpec {
        ModelSpec::new(4, vec![0, 1], vec![2, 3]).expect("fixed partition is valid")
    }

    /// True coefficient curves on the grid: T x 5 with columns
    /// `rho, beta1, beta2, beta3, beta4`.
    pub fn truth(&self) -> DMatrix<f64> {
        let tau = time_grid(self.t_len);
        DMatrix::from_fn(self.t_len, 5, |t, j| {
            let u = tau[t];
            match j {
                0 => self.rho_shape.eval(u),
                1 => 4.0 * u,
                2 => (u + 1.0).powi(2),
                3 => -5.0 + self.c * u.exp(),
                _ => {
                    let g = match self.beta4_shape {
                        Beta4Shape::Sin2Pi => (2.0 * PI * u).sin(),
                        Beta4Shape::SinPi => (PI * u).sin(),
                    };
                    5.0 + self.c * g
                }
            }
        })
    }
}

/// One simulated panel plus the truth used to score it.
#[derive(Debug, Clone)]
pub struct SimulatedPanel {
    pub data: PanelData,
    /// T x 5: `rho, beta1, beta2, beta3, beta4` on the grid.
    pub truth: DMatrix<f64>,
    /// The N - 1 drawn effects (location 1 carries minus their sum).
    pub alpha: DVector<f64>,
}

/// A configured generator; the row-standardized weights are built once.
#[derive(Debug, Clone)]
pub struct Dgp {
    cfg: DgpConfig,
    weights: SpatialWeights,
    truth: DMatrix<f64>,
}

impl Dgp {
    pub fn new(cfg: DgpConfig) -> Result<Self> {
        cfg.validate()?;
        let weights = SpatialWeights::lattice(cfg.m, cfg.scheme)?.row_standardize()?;
        let truth = cfg.truth();
        Ok(Self { cfg, weights, truth })
    }

    pub fn config(&self) -> &DgpConfig {
        &self.cfg
    }

    pub fn weights(&self) -> &SpatialWeights {
        &self.weights
    }

    pub fn truth(&self) -> &DMatrix<f64> {
        &self.truth
    }

    /// Replicate `index`; depends only on `(seed, index)`.
    pub fn generate(&self, index: usize) -> Result<SimulatedPanel> {
        let cfg = &self.cfg;
        let (n, t_len) = (cfg.n_locations(), cfg.t_len);
        let nt = n * t_len;
        let mut rng = replicate_rng(cfg.seed, index as u64);

        let mut x = DMatrix::zeros(nt, 4);
        x.column_mut(0).fill(1.0);
        for j in 1..4 {
            for k in 0..nt {
                x[(k, j)] = rng.sample(StandardNormal);
            }
        }
        let alpha = DVector::from_fn(n - 1, |_, _| rng.random::<f64>());
        let eps = DVector::from_fn(nt, |_, _| cfg.error_law.sample(&mut rng) * cfg.noise_scale);

        let fe = FixedEffectsDesign::new(n, t_len);
        let mut rhs = fe.apply(&alpha)? + eps;
        for k in 0..nt {
            let t = k / n;
            for j in 0..4 {
                rhs[k] += x[(k, j)] * self.truth[(t, j + 1)];
            }
        }
        let mut y = DVector::zeros(nt);
        for t in 0..t_len {
            let rho = self.truth[(t, 0)];
            let a = DMatrix::identity(n, n) - self.weights.values() * rho;
            let b = rhs.rows(t * n, n).into_owned();
            let sol = a.lu().solve(&b).ok_or(Error::DgpSingular { period: t })?;
            y.rows_mut(t * n, n).copy_from(&sol);
        }
        let names = ["intercept", "x2", "x3", "x4"].map(String::from).to_vec();
        let data = PanelData::new(y, x, n, t_len)?.with_names(names)?;
        Ok(SimulatedPanel {
            data,
            truth: self.truth.clone(),
            alpha,
        })
    }
}

/// Replicate `index` of the configured design.
pub fn generate(cfg: &DgpConfig, index: usize) -> Result<SimulatedPanel> {
    Dgp::new(cfg.clone())?.generate(index)
}
