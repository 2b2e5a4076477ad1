//! JSON run configuration.
//!
//! Every block is optional except `model`; omitted keys fall back to the
//! preset experiment defaults.

use std::collections::BTreeMap;
use std::path::Path;

use parisian_ctmc::model::{build_preset, default_params, Params};
use parisian_ctmc::pricing::{Horizon, Inversion, Payoff, DEFAULT_SMALL_Q};
use parisian_ctmc::setup::{Experiment, GridKind};
use parisian_ctmc::{DriftScheme, Model, Preset, RegimeModel, Side};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelBlock,
    #[serde(default)]
    pub grid: GridBlock,
    #[serde(default)]
    pub parisian: ParisianBlock,
    #[serde(default)]
    pub option: OptionBlock,
    #[serde(default)]
    pub inversion: InversionBlock,
    #[serde(default)]
    pub cdf: CdfBlock,
    #[serde(default)]
    pub ruin: RuinBlock,
    #[serde(default)]
    pub study: StudyBlock,
    #[serde(default)]
    pub mc: McBlock,
    #[serde(default)]
    pub minhit: MinHitBlock,
    #[serde(default)]
    pub multisided: MultiSidedBlock,
    pub threads: Option<usize>,
}

#[derive(Debug, Deserialize)]
pub struct ModelBlock {
    #[serde(rename = "type")]
    pub kind: String,
    /// Start regime of a regime-switching model.
    #[serde(default)]
    pub regime: usize,
    pub regimes: Option<Vec<RegimeEntry>>,
    pub regime_rates: Option<Vec<Vec<f64>>>,
    #[serde(flatten)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
pub struct RegimeEntry {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(flatten)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    #[serde(rename = "type")]
    pub kind: Option<String>,
    pub n: Option<usize>,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub n3: Option<usize>,
    pub l: Option<f64>,
    pub r: Option<f64>,
    pub width: Option<f64>,
    /// `central` or `upwind`.
    pub drift: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParisianBlock {
    pub side: Option<String>,
    #[serde(rename = "L")]
    pub level: Option<f64>,
    #[serde(rename = "D")]
    pub window: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionBlock {
    pub payoff: Option<String>,
    #[serde(rename = "K")]
    pub strike: Option<f64>,
    pub amount: Option<f64>,
    #[serde(rename = "T")]
    pub maturity: Option<f64>,
    pub r_f: Option<f64>,
    #[serde(rename = "S0")]
    pub spot: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InversionBlock {
    #[serde(rename = "A")]
    pub a: Option<f64>,
    pub k1: Option<usize>,
    pub k2: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Times {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CdfBlock {
    pub t: Option<Times>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum HorizonValue {
    Finite(f64),
    Named(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuinBlock {
    pub horizon: Option<HorizonValue>,
    pub small_q: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyBlock {
    pub ladder: Option<Vec<usize>>,
    pub extrapolation: Option<bool>,
    pub reference: Option<f64>,
    /// `price`, `cdf` or `ruin`.
    pub quantity: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McBlock {
    pub paths: Option<usize>,
    pub seed: Option<u64>,
    /// `price`, `cdf`, `ruin`, `bond`, `minhit` or `multisided`.
    pub target: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinHitBlock {
    #[serde(rename = "B")]
    pub cap: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiSidedBlock {
    /// Intervals in price units; `null` is an infinite end.
    #[serde(default)]
    pub sets: Vec<[Option<f64>; 2]>,
    #[serde(rename = "D")]
    pub window: Option<f64>,
    /// `cdf` or `price`.
    pub quantity: Option<String>,
}

pub const DEFAULT_N: usize = 211;
pub const DEFAULT_LADDER: [usize; 5] = [91, 121, 151, 181, 211];

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            CliError::Config {
                field: if field == "." { "<root>".into() } else { field },
                message: e.into_inner().to_string(),
            }
        })
    }

    pub fn preset(&self) -> CliResult<Preset> {
        Ok(self.model.kind.parse()?)
    }

    pub fn model(&self) -> CliResult<Model> {
        let preset = self.preset()?;
        match &self.model.regimes {
            Some(entries) => {
                if !self.model.params.is_empty() {
                    let key = self.model.params.keys().next().unwrap();
                    return Err(CliError::config(
                        format!("model.{key}"),
                        "per-regime parameters belong in model.regimes",
                    ));
                }
                let mut specs = Vec::with_capacity(entries.len());
                for (i, e) in entries.iter().enumerate() {
                    let p: Preset = e.kind.parse().map_err(|_| {
                        CliError::config(
                            format!("model.regimes[{i}].type"),
                            format!("unknown model `{}`", e.kind),
                        )
                    })?;
                    let params = overlay(p, &e.params, &format!("model.regimes[{i}]"))?;
                    let m = build_preset(p, &params).map_err(|e| prefix(e, i))?;
                    specs.push(m.single().map_err(|_| {
                        CliError::config(format!("model.regimes[{i}].type"), "regimes must be single models")
                    })?);
                }
                let rates = self
                    .model
                    .regime_rates
                    .clone()
                    .ok_or_else(|| CliError::config("model.regime_rates", "required with model.regimes"))?;
                Ok(Model::Regime(RegimeModel::new(specs, rates)?))
            }
            None => {
                if self.model.regime_rates.is_some() {
                    return Err(CliError::config("model.regime_rates", "requires model.regimes"));
                }
                let params = overlay(preset, &self.model.params, "model")?;
                Ok(build_preset(preset, &params)?)
            }
        }
    }

    fn params(&self) -> CliResult<Params> {
        match &self.model.regimes {
            Some(e) if !e.is_empty() => {
                let p: Preset = e[0].kind.parse()?;
                overlay(p, &e[0].params, "model.regimes[0]")
            }
            _ => overlay(self.preset()?, &self.model.params, "model"),
        }
    }

    /// Experiment for the price / cdf / ruin family.
    pub fn experiment(&self) -> CliResult<Experiment> {
        let preset = self.preset()?;
        let mut e = Experiment::with_params(preset, &self.params()?)?;
        e.model = self.model()?;
        e.regime = self.model.regime;
        if let Some(s) = &self.parisian.side {
            e.side = parse_side(s)?;
        }
        if let Some(l) = self.parisian.level {
            e.barrier = l;
        }
        if let Some(d) = self.parisian.window {
            e.window = d;
        }
        let o = &self.option;
        if let Some(s) = o.spot {
            e.spot = s;
        }
        if let Some(t) = o.maturity {
            e.maturity = t;
        }
        if let Some(r) = o.r_f {
            e.rate = r;
        }
        e.payoff = self.payoff(e.payoff)?;
        let g = &self.grid;
        if let Some(k) = &g.kind {
            e.grid = k.parse::<GridKind>()?;
        }
        if let Some(w) = g.width {
            e.width = w;
        }
        if let Some(d) = &g.drift {
            e.drift = parse_drift(d)?;
        }
        match (g.l, g.r) {
            (Some(l), Some(r)) => e.domain = Some((l, r)),
            (None, None) => {}
            (Some(_), None) => return Err(CliError::config("grid.r", "grid.l and grid.r must be given together")),
            (None, Some(_)) => return Err(CliError::config("grid.l", "grid.l and grid.r must be given together")),
        }
        e.blocks = self.blocks()?;
        e.inversion = self.inversion()?;
        Ok(e)
    }

    pub fn payoff(&self, default: Payoff) -> CliResult<Payoff> {
        let o = &self.option;
        let strike = |d: Option<f64>| {
            o.strike
                .or(d)
                .ok_or_else(|| CliError::config("option.K", "a strike is required for this payoff"))
        };
        Ok(match o.payoff.as_deref() {
            None => match (default, o.strike, o.amount) {
                (Payoff::Call { .. }, Some(k), _) => Payoff::Call { strike: k },
                (Payoff::Put { .. }, Some(k), _) => Payoff::Put { strike: k },
                (Payoff::Constant(_), _, Some(a)) => Payoff::Constant(a),
                (p, _, _) => p,
            },
            Some("call") => Payoff::Call {
                strike: strike(default.strike())?,
            },
            Some("put") => Payoff::Put {
                strike: strike(default.strike())?,
            },
            Some("constant") => Payoff::Constant(o.amount.unwrap_or(1.0)),
            Some(other) => {
                return Err(CliError::config(
                    "option.payoff",
                    format!("unknown payoff `{other}` (expected call, put or constant)"),
                ))
            }
        })
    }

    pub fn inversion(&self) -> CliResult<Inversion> {
        let d = Inversion::default();
        let i = &self.inversion;
        let inv = Inversion {
            a: i.a.unwrap_or(d.a),
            k1: i.k1.unwrap_or(d.k1),
            k2: i.k2.unwrap_or(d.k2),
        };
        if !(inv.a > 0.0 && inv.a.is_finite()) {
            return Err(CliError::config("inversion.A", "must be positive"));
        }
        if inv.k1 == 0 {
            return Err(CliError::config("inversion.k1", "must be at least 1"));
        }
        Ok(inv)
    }

    pub fn blocks(&self) -> CliResult<Option<[usize; 3]>> {
        let g = &self.grid;
        match (g.n1, g.n2, g.n3) {
            (None, None, None) => Ok(None),
            (Some(a), Some(b), Some(c)) => {
                if g.n.is_some() {
                    return Err(CliError::config(
                        "grid.n",
                        "give either grid.n or grid.n1..n3, not both",
                    ));
                }
                Ok(Some([a, b, c]))
            }
            _ => Err(CliError::config(
                "grid.n1",
                "grid.n1, grid.n2 and grid.n3 must be given together",
            )),
        }
    }

    /// Grid budget of a single run.
    pub fn n(&self) -> CliResult<usize> {
        let n = match self.blocks()? {
            Some([a, b, c]) => a + b + c,
            None => self.grid.n.unwrap_or(DEFAULT_N),
        };
        if n < 4 {
            return Err(CliError::config("grid.n", "at least 4 steps are required"));
        }
        Ok(n)
    }

    pub fn drift(&self) -> CliResult<DriftScheme> {
        match &self.grid.drift {
            Some(d) => parse_drift(d),
            None => Ok(DriftScheme::default()),
        }
    }

    pub fn times(&self) -> CliResult<Vec<f64>> {
        let t = match &self.cdf.t {
            None => return Err(CliError::config("cdf.t", "at least one time is required")),
            Some(Times::One(t)) => vec![*t],
            Some(Times::Many(v)) => v.clone(),
        };
        if t.is_empty() {
            return Err(CliError::config("cdf.t", "at least one time is required"));
        }
        for (i, &v) in t.iter().enumerate() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::config(
                    format!("cdf.t[{i}]"),
                    format!("must be positive, got {v}"),
                ));
            }
        }
        Ok(t)
    }

    pub fn horizon(&self) -> CliResult<Horizon> {
        let small_q = self.ruin.small_q.unwrap_or(DEFAULT_SMALL_Q);
        if !(small_q > 0.0) {
            return Err(CliError::config("ruin.small_q", "must be positive"));
        }
        match &self.ruin.horizon {
            None => Ok(Horizon::Infinite { small_q }),
            Some(HorizonValue::Named(s)) if s == "infinite" => Ok(Horizon::Infinite { small_q }),
            Some(HorizonValue::Named(s)) => Err(CliError::config(
                "ruin.horizon",
                format!("expected a positive number or \"infinite\", got `{s}`"),
            )),
            Some(HorizonValue::Finite(t)) if *t > 0.0 && t.is_finite() => Ok(Horizon::Finite(*t)),
            Some(HorizonValue::Finite(t)) => {
                Err(CliError::config("ruin.horizon", format!("must be positive, got {t}")))
            }
        }
    }

    pub fn ladder(&self) -> CliResult<Vec<usize>> {
        let l = self.study.ladder.clone().unwrap_or_else(|| DEFAULT_LADDER.to_vec());
        if l.is_empty() {
            return Err(CliError::config("study.ladder", "at least one level is required"));
        }
        if l.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::config("study.ladder", "levels must be strictly increasing"));
        }
        if self.blocks()?.is_some() {
            return Err(CliError::config(
                "grid.n1",
                "fixed block counts cannot be combined with a ladder",
            ));
        }
        Ok(l)
    }

    pub fn extrapolation(&self) -> bool {
        self.study.extrapolation.unwrap_or(true)
    }
}

fn prefix(e: parisian_ctmc::Error, i: usize) -> CliError {
    match e {
        parisian_ctmc::Error::Config { field, message } => CliError::Config {
            field: field.replacen("model", &format!("model.regimes[{i}]"), 1),
            message,
        },
        other => other.into(),
    }
}

/// Preset defaults overridden by the configured keys; unknown keys are errors.
fn overlay(preset: Preset, given: &BTreeMap<String, f64>, path: &str) -> CliResult<Params> {
    let mut params = default_params(preset);
    for (k, &v) in given {
        let known = params.contains_key(k) || matches!((preset, k.as_str()), (_, "r" | "d") | (Preset::Vg, "eps"));
        if !known {
            return Err(CliError::config(
                format!("{path}.{k}"),
                format!("not a parameter of the {preset:?} model"),
            ));
        }
        params.insert(k.clone(), v);
    }
    Ok(params)
}

pub fn parse_side(s: &str) -> CliResult<Side> {
    match s.to_ascii_lowercase().as_str() {
        "below" | "down" => Ok(Side::Below),
        "above" | "up" => Ok(Side::Above),
        _ => Err(CliError::config(
            "parisian.side",
            format!("unknown side `{s}` (expected below or above)"),
        )),
    }
}

fn parse_drift(s: &str) -> CliResult<DriftScheme> {
    match s.to_ascii_lowercase().as_str() {
        "central" => Ok(DriftScheme::Central),
        "upwind" => Ok(DriftScheme::CentralWithUpwindFallback),
        _ => Err(CliError::config(
            "grid.drift",
            format!("unknown scheme `{s}` (expected central or upwind)"),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_names_its_path() {
        let e = RunConfig::parse(r#"{"model": {"type": "BS"}, "grid": {"nn": 3}}"#).unwrap_err();
        match e {
            CliError::Config { field, .. } => assert_eq!(field, "grid.nn"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_model_parameter() {
        let c = RunConfig::parse(r#"{"model": {"type": "BS", "lambda": 3}}"#).unwrap();
        match c.model().unwrap_err() {
            CliError::Config { field, .. } => assert_eq!(field, "model.lambda"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn overlays_preset_defaults() {
        let c = RunConfig::parse(r#"{"model": {"type": "BS", "sigma": 0.2}, "option": {"K": 100}}"#).unwrap();
        let e = c.experiment().unwrap();
        assert_eq!(e.payoff, Payoff::Call { strike: 100.0 });
        assert_eq!(e.barrier, 90.0);
    }

    #[test]
    fn regime_list() {
        let c = RunConfig::parse(
            r#"{"model": {"type": "RS_BS", "regimes": [{"type": "BS", "sigma": 0.2}, {"type": "BS", "sigma": 0.4}],
                "regime_rates": [[-1, 1], [2, -2]]}}"#,
        )
        .unwrap();
        match c.model().unwrap() {
            Model::Regime(r) => assert_eq!(r.count(), 2),
            _ => panic!(),
        }
    }

    #[test]
    fn horizon_forms() {
        let c = RunConfig::parse(r#"{"model": {"type": "BM"}, "ruin": {"horizon": "infinite"}}"#).unwrap();
        assert!(matches!(c.horizon().unwrap(), Horizon::Infinite { .. }));
        let c = RunConfig::parse(r#"{"model": {"type": "BM"}, "ruin": {"horizon": 2.5}}"#).unwrap();
        assert_eq!(c.horizon().unwrap(), Horizon::Finite(2.5));
    }
}
