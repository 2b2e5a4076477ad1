//! One-dimensional Markov models: drift, volatility and a Lévy-type jump
//! measure, plus the preset parameterizations used by the experiments.
//!
//! Generator convention:
//! `𝒢f(x) = μ(x) f'(x) + σ²(x)/2 f''(x) + ∫ (f(x+z) - f(x) - z f'(x) 1{|z|≤1}) ν(x,dz)`.
//! For log-price presets `μ` is the risk-neutral drift, so `E[e^{X_t}] = e^{X_0 + (r-d)t}`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad::{exp_integral_e1, integrate_any, Tolerance};

pub type StateFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type DensityFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Map from chain state to asset value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateTransform {
    Identity,
    Exp,
}

impl StateTransform {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            StateTransform::Identity => x,
            StateTransform::Exp => x.exp(),
        }
    }

    pub fn inverse(self, s: f64) -> f64 {
        match self {
            StateTransform::Identity => s,
            StateTransform::Exp => s.ln(),
        }
    }
}

/// Jump measure `ν(x, dz)`.
#[derive(Clone)]
pub enum JumpMeasure {
    /// Double-exponential jumps with intensity `lambda`: up-jumps with
    /// probability `p_up` and rate `rate_up`, down-jumps with rate `rate_down`.
    Kou {
        lambda: f64,
        p_up: f64,
        rate_up: f64,
        rate_down: f64,
    },
    /// Lévy density `c e^{-m z}/z` for `z > 0` and `c e^{g z}/|z|` for `z < 0`.
    VarianceGamma { c: f64, g: f64, m: f64 },
    /// State-dependent Lebesgue density `(x, z) -> ν(x, z)`.
    Custom(DensityFn),
}

impl fmt::Debug for JumpMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JumpMeasure::Kou {
                lambda,
                p_up,
                rate_up,
                rate_down,
            } => write!(
                f,
                "Kou {{ lambda: {lambda}, p_up: {p_up}, rate_up: {rate_up}, rate_down: {rate_down} }}"
            ),
            JumpMeasure::VarianceGamma { c, g, m } => {
                write!(f, "VarianceGamma {{ c: {c}, g: {g}, m: {m} }}")
            }
            JumpMeasure::Custom(_) => write!(f, "Custom(<density>)"),
        }
    }
}

/// `∫_lo^hi u^p e^{-r u} du` for `p ∈ {-1, 0, 1, 2}`, `0 ≤ lo ≤ hi ≤ ∞`.
fn exp_power_integral(p: i32, r: f64, lo: f64, hi: f64) -> f64 {
    if !(hi > lo) {
        return 0.0;
    }
    match p {
        -1 => {
            if lo <= 0.0 {
                return f64::INFINITY;
            }
            exp_integral_e1(r * lo) - exp_integral_e1(r * hi)
        }
        0 => {
            let el = (-r * lo).exp();
            if hi.is_infinite() {
                el / r
            } else {
                -el * (-r * (hi - lo)).exp_m1() / r
            }
        }
        1 | 2 => {
            let anti = |u: f64| -> f64 {
                if u.is_infinite() {
                    return 0.0;
                }
                let e = (-r * u).exp();
                if p == 1 {
                    -e * (u / r + 1.0 / (r * r))
                } else {
                    -e * (u * u / r + 2.0 * u / (r * r) + 2.0 / (r * r * r))
                }
            };
            anti(hi) - anti(lo)
        }
        _ => unreachable!("unsupported power"),
    }
}

impl JumpMeasure {
    /// Density at jump size `z` from state `x`.
    pub fn density(&self, x: f64, z: f64) -> f64 {
        match self {
            JumpMeasure::Kou {
                lambda,
                p_up,
                rate_up,
                rate_down,
            } => {
                if z > 0.0 {
                    lambda * p_up * rate_up * (-rate_up * z).exp()
                } else if z < 0.0 {
                    lambda * (1.0 - p_up) * rate_down * (rate_down * z).exp()
                } else {
                    0.0
                }
            }
            JumpMeasure::VarianceGamma { c, g, m } => {
                if z > 0.0 {
                    c * (-m * z).exp() / z
                } else if z < 0.0 {
                    c * (g * z).exp() / (-z)
                } else {
                    0.0
                }
            }
            JumpMeasure::Custom(d) => d(x, z),
        }
    }

    /// `∫_{(a,b]} z^k ν(x, dz)` for `k ∈ {0, 1, 2}`.
    pub fn moment(&self, x: f64, k: i32, a: f64, b: f64) -> Result<f64> {
        if !(b > a) {
            return Ok(0.0);
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        match self {
            JumpMeasure::Kou {
                lambda,
                p_up,
                rate_up,
                rate_down,
            } => {
                let mut s = 0.0;
                if b > 0.0 {
                    s += lambda * p_up * rate_up * exp_power_integral(k, *rate_up, a.max(0.0), b);
                }
                if a < 0.0 {
                    s +=
                        sign * lambda * (1.0 - p_up) * rate_down * exp_power_integral(k, *rate_down, (-b).max(0.0), -a);
                }
                Ok(s)
            }
            JumpMeasure::VarianceGamma { c, g, m } => {
                if k == 0 && a < 0.0 && b > 0.0 {
                    return Err(Error::domain(format!(
                        "jump mass over ({a}, {b}] straddles the origin of an infinite-activity measure"
                    )));
                }
                let mut s = 0.0;
                if b > 0.0 {
                    s += c * exp_power_integral(k - 1, *m, a.max(0.0), b);
                }
                if a < 0.0 {
                    s += sign * c * exp_power_integral(k - 1, *g, (-b).max(0.0), -a);
                }
                if s.is_nan() {
                    return Err(Error::numerical(format!(
                        "variance-gamma moment {k} over ({a}, {b}] is undefined"
                    )));
                }
                Ok(s)
            }
            JumpMeasure::Custom(d) => {
                let tol = Tolerance { abs: 1e-14, rel: 1e-12 };
                let f = |z: f64| z.powi(k) * d(x, z);
                let wrap = |e: Error| Error::numerical(format!("jump integral over ({a}, {b}] at x = {x}: {e}"));
                if a < 0.0 && b > 0.0 {
                    if k == 0 {
                        return Err(Error::domain(format!("jump mass over ({a}, {b}] straddles the origin")));
                    }
                    let l = integrate_any(f, a, 0.0, tol).map_err(wrap)?;
                    let r = integrate_any(f, 0.0, b, tol).map_err(wrap)?;
                    Ok(l + r)
                } else {
                    integrate_any(f, a, b, tol).map_err(wrap)
                }
            }
        }
    }

    /// `∫_{(a,b] ∩ [-1,1]} z^k ν(x, dz)`.
    pub fn small_moment(&self, x: f64, k: i32, a: f64, b: f64) -> Result<f64> {
        self.moment(x, k, a.max(-1.0), b.min(1.0))
    }

    /// Compensator drift `∫_{|z|≤1} z ν(x, dz)`.
    pub fn compensator(&self, x: f64) -> Result<f64> {
        self.small_moment(x, 1, f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Total mass outside `(-eps, eps)`.
    pub fn mass_outside(&self, x: f64, eps: f64) -> Result<f64> {
        Ok(self.moment(x, 0, f64::NEG_INFINITY, -eps)? + self.moment(x, 0, eps, f64::INFINITY)?)
    }
}

/// Drift, volatility and jump measure of a one-dimensional Markov model.
#[derive(Clone)]
pub struct ModelSpec {
    pub name: String,
    drift: StateFn,
    vol: StateFn,
    pub jumps: Option<JumpMeasure>,
    /// Jumps smaller than this are reported as part of the diffusion.
    pub jump_truncation_eps: f64,
    pub state_transform: StateTransform,
    /// Spread per unit time used to size default localization domains.
    pub scale: f64,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("jumps", &self.jumps)
            .field("jump_truncation_eps", &self.jump_truncation_eps)
            .field("state_transform", &self.state_transform)
            .field("scale", &self.scale)
            .finish()
    }
}

impl ModelSpec {
    pub fn new(
        name: impl Into<String>,
        drift: impl Fn(f64) -> f64 + Send + Sync + 'static,
        vol: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ModelSpec {
            name: name.into(),
            drift: Arc::new(drift),
            vol: Arc::new(vol),
            jumps: None,
            jump_truncation_eps: 1e-4,
            state_transform: StateTransform::Identity,
            scale: 1.0,
        }
    }

    pub fn with_jumps(mut self, jumps: JumpMeasure) -> Self {
        self.jumps = Some(jumps);
        self
    }

    pub fn with_transform(mut self, t: StateTransform) -> Self {
        self.state_transform = t;
        self
    }

    pub fn with_scale(mut self, s: f64) -> Self {
        self.scale = s;
        self
    }

    pub fn drift(&self, x: f64) -> f64 {
        (self.drift)(x)
    }

    pub fn vol(&self, x: f64) -> f64 {
        (self.vol)(x)
    }

    pub fn has_jumps(&self) -> bool {
        self.jumps.is_some()
    }

    /// `ν(x, (a, b])`, zero for diffusion models.
    pub fn jump_mass(&self, x: f64, a: f64, b: f64) -> Result<f64> {
        match &self.jumps {
            None => Ok(0.0),
            Some(j) => {
                if a < self.jump_truncation_eps && b > -self.jump_truncation_eps {
                    return Err(Error::domain(format!(
                        "interval ({a}, {b}] overlaps the small-jump region (-{eps}, {eps})",
                        eps = self.jump_truncation_eps
                    )));
                }
                j.moment(x, 0, a, b)
            }
        }
    }

    /// Mass of jumps larger than the truncation threshold.
    pub fn total_jump_mass(&self, x: f64) -> Result<f64> {
        match &self.jumps {
            None => Ok(0.0),
            Some(j) => j.mass_outside(x, self.jump_truncation_eps),
        }
    }

    /// Checks the declared invariants at sample states of `[l, r]`.
    pub fn validate_on(&self, l: f64, r: f64) -> Result<()> {
        let samples = 17;
        let diffusive = self.jumps.is_none();
        for k in 0..samples {
            let x = l + (r - l) * k as f64 / (samples - 1) as f64;
            let s = self.vol(x);
            let m = self.drift(x);
            if !m.is_finite() || !s.is_finite() || s < 0.0 {
                return Err(Error::config(
                    "model",
                    format!("drift/vol not finite or vol negative at x = {x}"),
                ));
            }
            if diffusive && !(s > 0.0) {
                return Err(Error::config(
                    "model.sigma",
                    format!("volatility must be positive on the domain, got {s} at x = {x}"),
                ));
            }
            if let Some(j) = &self.jumps {
                for z in [-2.0, -0.3, -0.01, 0.01, 0.3, 2.0] {
                    if !(j.density(x, z) >= 0.0) {
                        return Err(Error::config(
                            "model.jumps",
                            format!("negative jump density at x = {x}, z = {z}"),
                        ));
                    }
                }
                let second = j.small_moment(x, 2, -1.0, 1.0)?;
                let big = j.moment(x, 0, f64::NEG_INFINITY, -1.0)? + j.moment(x, 0, 1.0, f64::INFINITY)?;
                if !(second + big).is_finite() {
                    return Err(Error::config(
                        "model.jumps",
                        format!("∫(z²∧1)ν(x,dz) is not finite at x = {x}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Regime-switching model: one [`ModelSpec`] per regime and a rate matrix.
#[derive(Clone, Debug)]
pub struct RegimeModel {
    pub regimes: Vec<ModelSpec>,
    /// Row-major `m × m` generator of the regime chain.
    pub rates: Vec<Vec<f64>>,
}

impl RegimeModel {
    pub fn new(regimes: Vec<ModelSpec>, rates: Vec<Vec<f64>>) -> Result<Self> {
        let m = regimes.len();
        if m == 0 {
            return Err(Error::config("model.regimes", "at least one regime is required"));
        }
        if rates.len() != m || rates.iter().any(|r| r.len() != m) {
            return Err(Error::config(
                "model.regime_rates",
                format!("expected a {m}x{m} matrix"),
            ));
        }
        for (i, row) in rates.iter().enumerate() {
            let mut sum = 0.0;
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || (i != j && v < 0.0) {
                    return Err(Error::config(
                        "model.regime_rates",
                        format!("entry ({i},{j}) = {v} must be a finite nonnegative rate"),
                    ));
                }
                sum += v;
            }
            let scale = row.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            if sum.abs() > 1e-12 * scale {
                return Err(Error::config(
                    "model.regime_rates",
                    format!("row {i} sums to {sum}, expected 0"),
                ));
            }
        }
        Ok(RegimeModel { regimes, rates })
    }

    pub fn count(&self) -> usize {
        self.regimes.len()
    }

    pub fn scale(&self) -> f64 {
        self.regimes.iter().fold(0.0, |a, r| a.max(r.scale))
    }
}

/// A single model or a regime-switching family.
#[derive(Clone, Debug)]
pub enum Model {
    Single(ModelSpec),
    Regime(RegimeModel),
}

impl Model {
    pub fn single(self) -> Result<ModelSpec> {
        match self {
            Model::Single(m) => Ok(m),
            Model::Regime(_) => Err(Error::usage("expected a single-regime model")),
        }
    }

    pub fn regime(self) -> Result<RegimeModel> {
        match self {
            Model::Regime(m) => Ok(m),
            Model::Single(m) => RegimeModel::new(vec![m], vec![vec![0.0]]),
        }
    }

    pub fn scale(&self) -> f64 {
        match self {
            Model::Single(m) => m.scale,
            Model::Regime(r) => r.scale(),
        }
    }

    pub fn state_transform(&self) -> StateTransform {
        match self {
            Model::Single(m) => m.state_transform,
            Model::Regime(r) => r.regimes[0].state_transform,
        }
    }
}

/// Preset parameterizations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Bm,
    Bs,
    Kou,
    Vg,
    RsBs,
    Cir,
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "BM" => Ok(Preset::Bm),
            "BS" => Ok(Preset::Bs),
            "KOU" => Ok(Preset::Kou),
            "VG" => Ok(Preset::Vg),
            "RS_BS" | "RSBS" => Ok(Preset::RsBs),
            "CIR" => Ok(Preset::Cir),
            _ => Err(Error::config(
                "model.type",
                format!("unknown model `{s}` (expected BM, BS, KOU, VG, RS_BS or CIR)"),
            )),
        }
    }
}

pub type Params = BTreeMap<String, f64>;

fn get(params: &Params, key: &str) -> Result<f64> {
    let v = *params
        .get(key)
        .ok_or_else(|| Error::config(format!("model.{key}"), "missing parameter"))?;
    if !v.is_finite() {
        return Err(Error::config(format!("model.{key}"), "must be finite"));
    }
    Ok(v)
}

fn positive(params: &Params, key: &str) -> Result<f64> {
    let v = get(params, key)?;
    if !(v > 0.0) {
        return Err(Error::config(
            format!("model.{key}"),
            format!("must be positive, got {v}"),
        ));
    }
    Ok(v)
}

fn get_or(params: &Params, key: &str, default: f64) -> Result<f64> {
    if params.contains_key(key) {
        get(params, key)
    } else {
        Ok(default)
    }
}

/// Default parameters of the experiment presets (`r = 0.05`, `d = 0`).
pub fn default_params(preset: Preset) -> Params {
    let kv: &[(&str, f64)] = match preset {
        Preset::Bm => &[("mu", 0.0), ("sigma", 1.0)],
        Preset::Bs => &[("sigma", 0.3), ("r", 0.05), ("d", 0.0)],
        Preset::Kou => &[
            ("sigma", 0.3),
            ("lambda", 3.0),
            ("eta_plus", 0.1),
            ("eta_minus", 0.1),
            ("p_plus", 0.5),
            ("r", 0.05),
            ("d", 0.0),
        ],
        Preset::Vg => &[
            ("sigma", 0.1213),
            ("nu", 0.1686),
            ("theta", -0.1436),
            ("r", 0.05),
            ("d", 0.0),
        ],
        Preset::RsBs => &[
            ("sigma1", 0.3),
            ("sigma2", 0.5),
            ("lambda12", 0.75),
            ("lambda21", 0.25),
            ("r", 0.05),
            ("d", 0.0),
        ],
        Preset::Cir => &[("kappa", 0.5), ("theta", 0.05), ("sigma", 0.1)],
    };
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn bs_log(sigma: f64, r: f64, d: f64) -> ModelSpec {
    let mu = r - d - 0.5 * sigma * sigma;
    ModelSpec::new("BS", move |_| mu, move |_| sigma)
        .with_transform(StateTransform::Exp)
        .with_scale(sigma)
}

/// Builds a preset model.
///
/// `eta_plus` / `eta_minus` of the Kou preset are mean jump sizes (the jump
/// rates are their reciprocals).
pub fn build_preset(preset: Preset, params: &Params) -> Result<Model> {
    match preset {
        Preset::Bm => {
            let mu = get_or(params, "mu", 0.0)?;
            let sigma = if params.contains_key("sigma") {
                positive(params, "sigma")?
            } else {
                1.0
            };
            Ok(Model::Single(
                ModelSpec::new("BM", move |_| mu, move |_| sigma).with_scale(sigma),
            ))
        }
        Preset::Bs => {
            let sigma = positive(params, "sigma")?;
            let r = get(params, "r")?;
            let d = get_or(params, "d", 0.0)?;
            Ok(Model::Single(bs_log(sigma, r, d)))
        }
        Preset::Kou => {
            let sigma = positive(params, "sigma")?;
            let lambda = positive(params, "lambda")?;
            let eta_up = positive(params, "eta_plus")?;
            let eta_down = positive(params, "eta_minus")?;
            let p = get(params, "p_plus")?;
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config("model.p_plus", format!("must lie in [0, 1], got {p}")));
            }
            let r = get(params, "r")?;
            let d = get_or(params, "d", 0.0)?;
            let (rate_up, rate_down) = (1.0 / eta_up, 1.0 / eta_down);
            if !(rate_up > 1.0) {
                return Err(Error::config(
                    "model.eta_plus",
                    "mean up-jump must be below 1 for E[e^J] to exist",
                ));
            }
            let kappa = p * rate_up / (rate_up - 1.0) + (1.0 - p) * rate_down / (rate_down + 1.0) - 1.0;
            let jumps = JumpMeasure::Kou {
                lambda,
                p_up: p,
                rate_up,
                rate_down,
            };
            let mu = r - d - 0.5 * sigma * sigma - lambda * kappa + jumps.compensator(0.0)?;
            let jump_var = lambda * (p * 2.0 * eta_up * eta_up + (1.0 - p) * 2.0 * eta_down * eta_down);
            Ok(Model::Single(
                ModelSpec::new("KOU", move |_| mu, move |_| sigma)
                    .with_jumps(jumps)
                    .with_transform(StateTransform::Exp)
                    .with_scale((sigma * sigma + jump_var).sqrt()),
            ))
        }
        Preset::Vg => {
            let sigma = positive(params, "sigma")?;
            let nu = positive(params, "nu")?;
            let theta = get(params, "theta")?;
            let r = get(params, "r")?;
            let d = get_or(params, "d", 0.0)?;
            let arg = 1.0 - theta * nu - 0.5 * sigma * sigma * nu;
            if !(arg > 0.0) {
                return Err(Error::config(
                    "model.nu",
                    "1 - θν - σ²ν/2 must be positive for the martingale correction",
                ));
            }
            let root = (0.25 * theta * theta * nu * nu + 0.5 * sigma * sigma * nu).sqrt();
            let g = 1.0 / (root - 0.5 * theta * nu);
            let m = 1.0 / (root + 0.5 * theta * nu);
            let jumps = JumpMeasure::VarianceGamma { c: 1.0 / nu, g, m };
            let mu = r - d + arg.ln() / nu + jumps.compensator(0.0)?;
            let mut spec = ModelSpec::new("VG", move |_| mu, |_| 0.0)
                .with_jumps(jumps)
                .with_transform(StateTransform::Exp)
                .with_scale((sigma * sigma + theta * theta * nu).sqrt());
            spec.jump_truncation_eps = get_or(params, "eps", 1e-4)?;
            Ok(Model::Single(spec))
        }
        Preset::RsBs => {
            let s1 = positive(params, "sigma1")?;
            let s2 = positive(params, "sigma2")?;
            let l12 = positive(params, "lambda12")?;
            let l21 = positive(params, "lambda21")?;
            let r = get(params, "r")?;
            let d = get_or(params, "d", 0.0)?;
            Ok(Model::Regime(RegimeModel::new(
                vec![bs_log(s1, r, d), bs_log(s2, r, d)],
                vec![vec![-l12, l12], vec![l21, -l21]],
            )?))
        }
        Preset::Cir => {
            let kappa = positive(params, "kappa")?;
            let theta = positive(params, "theta")?;
            let sigma = positive(params, "sigma")?;
            Ok(Model::Single(
                ModelSpec::new("CIR", move |x| kappa * (theta - x), move |x| sigma * x.max(0.0).sqrt())
                    .with_scale(sigma * theta.sqrt()),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn preset(p: Preset) -> Model {
        build_preset(p, &default_params(p)).unwrap()
    }

    #[test]
    fn bm_preset() {
        let m = preset(Preset::Bm).single().unwrap();
        assert_eq!(m.drift(0.3), 0.0);
        assert_eq!(m.vol(-2.0), 1.0);
        assert!(!m.has_jumps());
        assert_eq!(m.jump_mass(0.0, 0.1, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn bs_preset_drift() {
        let m = preset(Preset::Bs).single().unwrap();
        assert!((m.drift(4.5) - 0.005).abs() < 1e-15);
        assert_eq!(m.vol(4.5), 0.3);
        assert_eq!(m.state_transform, StateTransform::Exp);
    }

    #[test]
    fn rs_preset_rates() {
        let r = preset(Preset::RsBs).regime().unwrap();
        assert_eq!(r.rates, vec![vec![-0.75, 0.75], vec![0.25, -0.25]]);
        assert_eq!(r.regimes[1].vol(0.0), 0.5);
    }

    #[test]
    fn kou_tail_mass_closed_form() {
        let m = preset(Preset::Kou).single().unwrap();
        let v = m.jump_mass(4.0, 0.1, f64::INFINITY).unwrap();
        let expect = 3.0 * 0.5 * (-0.1f64 / 0.1).exp();
        assert!((v - expect).abs() < 1e-14);
    }

    #[test]
    fn missing_and_bad_params_name_the_field() {
        let mut p = default_params(Preset::Kou);
        p.remove("lambda");
        match build_preset(Preset::Kou, &p) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "model.lambda"),
            other => panic!("unexpected {other:?}"),
        }
        let mut p = default_params(Preset::Bs);
        p.insert("sigma".into(), -0.1);
        match build_preset(Preset::Bs, &p) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "model.sigma"),
            other => panic!("unexpected {other:?}"),
        }
        assert!("heston".parse::<Preset>().is_err());
    }

    #[test]
    fn regime_rates_must_be_conservative() {
        let bs = bs_log(0.2, 0.0, 0.0);
        assert!(RegimeModel::new(vec![bs.clone(), bs], vec![vec![-1.0, 0.5], vec![0.2, -0.2]]).is_err());
    }

    #[test]
    fn exp_power_integrals() {
        // against direct quadrature
        for p in [-1, 0, 1, 2] {
            for &(lo, hi) in &[(0.05, 0.3), (0.2, f64::INFINITY), (1e-3, 2.0)] {
                let q = integrate_any(|u: f64| u.powi(p) * (-7.0 * u).exp(), lo, hi, Tolerance::default()).unwrap();
                let c = exp_power_integral(p, 7.0, lo, hi);
                assert!(
                    (q - c).abs() <= 1e-11 * q.abs().max(1e-12),
                    "p={p} [{lo},{hi}]: {q} vs {c}"
                );
            }
        }
    }
}
