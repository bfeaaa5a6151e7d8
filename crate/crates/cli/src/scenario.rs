//! Scenario files and presets.
//!
//! A scenario file is UTF-8 text with one `key = value` pair per line. `#`
//! starts a comment; blank lines are ignored. Keys:
//!
//! | key | default |
//! |---|---|
//! | `p_err` | required |
//! | `b_min` | `b_max` if given, else 1 |
//! | `b_max` | `b_min` |
//! | `r_prag`, `r_comp` | 0 |
//! | `c0` | 1000 |
//! | `cp0` | 0 |
//! | `c_end` | `10 * c0` |
//! | `steps` | 9000 |
//! | `epochs` | 20 |
//! | `seed` | 0 |
//! | `checkpoint_every` | 100 |

use std::fmt::{self, Write as _};
use std::str::FromStr;

use kspace_core::montecarlo::McConfig;
use kspace_core::{KnowledgeState, ModelParams};
use serde::Serialize;

pub const KEYS: [&str; 12] = [
    "p_err",
    "b_min",
    "b_max",
    "r_prag",
    "r_comp",
    "c0",
    "cp0",
    "c_end",
    "steps",
    "epochs",
    "seed",
    "checkpoint_every",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScenarioError {
    Syntax { line: usize, message: String },
    Validation(String),
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::Syntax { line, message } => write!(f, "line {line}: {message}"),
            ScenarioError::Validation(message) => write!(f, "{message}"),
        }
    }
}

impl std::error::Error for ScenarioError {}

/// Fully resolved scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub p_err: f64,
    pub b_min: u32,
    pub b_max: u32,
    pub r_prag: f64,
    pub r_comp: f64,
    pub c0: u64,
    pub cp0: u64,
    pub c_end: f64,
    pub steps: u64,
    pub epochs: u32,
    pub seed: u64,
    pub checkpoint_every: u64,
}

impl Scenario {
    pub fn mc_config(&self) -> McConfig {
        McConfig {
            c0: self.c0,
            cp0: self.cp0,
            b_min: self.b_min,
            b_max: self.b_max,
            p_err: self.p_err,
            r_prag: self.r_prag,
            r_comp: self.r_comp,
            steps: self.steps,
            epochs: self.epochs,
            seed: self.seed,
            checkpoint_every: self.checkpoint_every,
        }
    }

    pub fn mean_base_count(&self) -> f64 {
        self.mc_config().mean_base_count()
    }

    /// Mean-field parameters with `B = (b_min + b_max) / 2`.
    pub fn model_params(&self) -> Result<ModelParams, ScenarioError> {
        self.mc_config()
            .mean_field_params()
            .map_err(|e| ScenarioError::Validation(e.to_string()))
    }

    pub fn initial_state(&self) -> KnowledgeState {
        KnowledgeState::new(self.c0 as f64, self.cp0 as f64).expect("validated scenario")
    }

    /// Scenario file text that parses back to `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let value = match key {
                "p_err" => self.p_err.to_string(),
                "b_min" => self.b_min.to_string(),
                "b_max" => self.b_max.to_string(),
                "r_prag" => self.r_prag.to_string(),
                "r_comp" => self.r_comp.to_string(),
                "c0" => self.c0.to_string(),
                "cp0" => self.cp0.to_string(),
                "c_end" => self.c_end.to_string(),
                "steps" => self.steps.to_string(),
                "epochs" => self.epochs.to_string(),
                "seed" => self.seed.to_string(),
                "checkpoint_every" => self.checkpoint_every.to_string(),
                _ => unreachable!(),
            };
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }
}

/// Parses a complete scenario file.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let mut draft = ScenarioDraft::default();
    draft.apply_text(text)?;
    draft.resolve()
}

/// Scenario under construction: a preset, then file contents, then
/// individual overrides, each replacing what came before.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioDraft {
    pub p_err: Option<f64>,
    pub b_min: Option<u32>,
    pub b_max: Option<u32>,
    pub r_prag: Option<f64>,
    pub r_comp: Option<f64>,
    pub c0: Option<u64>,
    pub cp0: Option<u64>,
    pub c_end: Option<f64>,
    pub steps: Option<u64>,
    pub epochs: Option<u32>,
    pub seed: Option<u64>,
    pub checkpoint_every: Option<u64>,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("invalid value {value:?} for {key}"))
}

impl ScenarioDraft {
    pub fn from_preset(preset: Preset) -> Self {
        let (p_err, b_min, b_max, r_prag, r_comp, cp0) = preset.values();
        Self {
            p_err: Some(p_err),
            b_min: Some(b_min),
            b_max: Some(b_max),
            r_prag: Some(r_prag),
            r_comp: Some(r_comp),
            c0: Some(1000),
            cp0: Some(cp0),
            ..Self::default()
        }
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "p_err" => self.p_err = Some(parse_value(key, value)?),
            "b_min" => self.b_min = Some(parse_value(key, value)?),
            "b_max" => self.b_max = Some(parse_value(key, value)?),
            "r_prag" => self.r_prag = Some(parse_value(key, value)?),
            "r_comp" => self.r_comp = Some(parse_value(key, value)?),
            "c0" => self.c0 = Some(parse_value(key, value)?),
            "cp0" => self.cp0 = Some(parse_value(key, value)?),
            "c_end" => self.c_end = Some(parse_value(key, value)?),
            "steps" => self.steps = Some(parse_value(key, value)?),
            "epochs" => self.epochs = Some(parse_value(key, value)?),
            "seed" => self.seed = Some(parse_value(key, value)?),
            "checkpoint_every" => self.checkpoint_every = Some(parse_value(key, value)?),
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ScenarioError> {
        let mut seen: Vec<String> = Vec::new();
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let syntax = |message: String| ScenarioError::Syntax { line, message };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| syntax(format!("expected `key = value`, got {content:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(syntax(format!("missing value for {key}")));
            }
            if seen.iter().any(|k| k == key) {
                return Err(syntax(format!("duplicate key {key:?}")));
            }
            self.set(key, value).map_err(syntax)?;
            seen.push(key.to_string());
        }
        Ok(())
    }

    pub fn resolve(&self) -> Result<Scenario, ScenarioError> {
        let invalid = |message: String| Err(ScenarioError::Validation(message));
        let Some(p_err) = self.p_err else {
            return invalid("p_err required".into());
        };
        if !(0.0..=1.0).contains(&p_err) {
            return invalid("p_err outside [0,1]".into());
        }
        let b_min = self.b_min.or(self.b_max).unwrap_or(1);
        let b_max = self.b_max.unwrap_or(b_min);
        if b_min < 1 {
            return invalid("b_min must be at least 1".into());
        }
        if b_min > b_max {
            return invalid(format!("b_min = {b_min} exceeds b_max = {b_max}"));
        }
        let r_prag = self.r_prag.unwrap_or(0.0);
        let r_comp = self.r_comp.unwrap_or(0.0);
        for (name, r) in [("r_prag", r_prag), ("r_comp", r_comp)] {
            if !(r >= 0.0 && r.is_finite()) {
                return invalid(format!("{name} must be a non-negative number"));
            }
        }
        let c0 = self.c0.unwrap_or(1000);
        if c0 < 1 {
            return invalid("c0 must be at least 1".into());
        }
        let cp0 = self.cp0.unwrap_or(0);
        if cp0 > c0 {
            return invalid(format!("cp0 = {cp0} exceeds c0 = {c0}"));
        }
        let c_end = self.c_end.unwrap_or(10.0 * c0 as f64);
        if !(c_end > c0 as f64 && c_end.is_finite()) {
            return invalid(format!("c_end = {c_end} must exceed c0 = {c0}"));
        }
        let steps = self.steps.unwrap_or(9000);
        let epochs = self.epochs.unwrap_or(20);
        let checkpoint_every = self.checkpoint_every.unwrap_or(100);
        for (name, v) in [
            ("steps", steps),
            ("epochs", u64::from(epochs)),
            ("checkpoint_every", checkpoint_every),
        ] {
            if v < 1 {
                return invalid(format!("{name} must be at least 1"));
            }
        }
        Ok(Scenario {
            p_err,
            b_min,
            b_max,
            r_prag,
            r_comp,
            c0,
            cp0,
            c_end,
            steps,
            epochs,
            seed: self.seed.unwrap_or(0),
            checkpoint_every,
        })
    }
}

/// The five reference scenarios, all starting from 1000 concepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
#[value(rename_all = "UPPER")]
pub enum Preset {
    A,
    B,
    C,
    D,
    E,
}

impl Preset {
    pub const ALL: [Preset; 5] = [Preset::A, Preset::B, Preset::C, Preset::D, Preset::E];

    /// `(p_err, b_min, b_max, r_prag, r_comp, cp0)`.
    pub fn values(self) -> (f64, u32, u32, f64, f64, u64) {
        match self {
            Preset::A => (0.05, 2, 20, 0.0, 0.0, 10),
            Preset::B => (0.1, 7, 7, 2.0, 2.0, 200),
            Preset::C => (0.1, 2, 12, 2.0, 2.0, 200),
            Preset::D => (0.1, 5, 5, 2.0, 2.0, 200),
            Preset::E => (0.1, 2, 8, 2.0, 2.0, 200),
        }
    }

    pub fn scenario(self) -> Scenario {
        ScenarioDraft::from_preset(self)
            .resolve()
            .expect("presets are valid")
    }
}
