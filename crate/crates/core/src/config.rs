//! Declarative experiment configuration: a flat key=value file format, the
//! `<axis>@<site>` operator mini-grammar, and validation against module
//! preconditions.

use std::collections::BTreeMap;
use std::path::Path;

use crate::dynamics::{EvolutionKind, EvolutionSpec};
use crate::error::{Error, Result};
use crate::hilbert::{Axis, PauliString};
use crate::otoc::ObservablePair;

/// Uniform time grid `start..=stop` with spacing `step` (inclusive of the
/// endpoint up to float dust).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl TimeGrid {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1.0 + 1e-9).floor() as usize;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid { start: 0.0, stop: 3.0, step: 0.02 }
    }
}

/// All parameters of one experiment; field names match the config keys.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    /// Chain length (qubits per leg).
    pub n: usize,
    /// Rung coupling of the parent Hamiltonian; infinite selects the
    /// rung-singlet limit (key value "inf").
    pub lambda: f64,
    /// Skip the fidelity optimization and use this inverse temperature.
    pub beta_override: Option<f64>,
    /// Overall coupling scale.
    pub j: f64,
    /// Perturbation operator, e.g. "Z@5"; "I" for none.
    pub w: String,
    /// Probe operator, e.g. "X@4"; must be nontrivial.
    pub v: String,
    pub times: TimeGrid,
    pub evolution: EvolutionSpec,
    /// Measurement shots; absent = expectation level.
    pub shots: Option<usize>,
    /// Readout bit-flip probability per qubit.
    pub readout_x: f64,
    pub seed: u64,
    /// Column selectors for the output; empty = all columns.
    pub outputs: Vec<String>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            n: 4,
            lambda: 1.0,
            beta_override: None,
            j: 1.0,
            w: "Z@3".into(),
            v: "X@2".into(),
            times: TimeGrid::default(),
            evolution: EvolutionSpec::ideal(),
            shots: None,
            readout_x: 0.0,
            seed: 0,
            outputs: Vec::new(),
        }
    }
}

/// Parses one operator in the `<axis>@<site>` grammar (1-based sites on
/// leg 1) into a 0-based Pauli string; "I" yields None.
pub fn parse_operator(text: &str, n: usize) -> Result<Option<PauliString>> {
    let text = text.trim();
    if text.eq_ignore_ascii_case("I") {
        return Ok(None);
    }
    let mut factors = Vec::new();
    for part in text.split(',') {
        let (axis_str, site_str) = part.trim().split_once('@').ok_or_else(|| {
            Error::InvalidSpec(format!("operator '{part}' is not of the form <axis>@<site>"))
        })?;
        let axis = match axis_str.trim() {
            "X" | "x" => Axis::X,
            "Y" | "y" => Axis::Y,
            "Z" | "z" => Axis::Z,
            other => {
                return Err(Error::InvalidSpec(format!(
                    "unknown axis '{other}' (expected X, Y, Z, or I)"
                )))
            }
        };
        let site: usize = site_str.trim().parse().map_err(|_| {
            Error::InvalidSpec(format!("bad site index '{site_str}' in operator '{part}'"))
        })?;
        if site == 0 || site > n {
            return Err(Error::InvalidSpec(format!(
                "site {site} out of range 1..={n} in operator '{part}'"
            )));
        }
        factors.push((site - 1, axis));
    }
    Ok(Some(PauliString::new(factors)?))
}

fn parse_kind(text: &str) -> Result<EvolutionKind> {
    Ok(match text {
        "ideal_direct" => EvolutionKind::IdealDirect,
        "ideal_via_r" => EvolutionKind::IdealViaR,
        "collective_dephasing" => EvolutionKind::CollectiveDephasing,
        "depolarization" => EvolutionKind::Depolarization,
        "local_dephasing" => EvolutionKind::LocalDephasing,
        "remnant_coupling" => EvolutionKind::RemnantCoupling,
        "asymmetric_legs" => EvolutionKind::AsymmetricLegs,
        other => {
            return Err(Error::InvalidSpec(format!(
                "evolution: unknown kind '{other}'"
            )))
        }
    })
}

fn kind_name(kind: EvolutionKind) -> &'static str {
    match kind {
        EvolutionKind::IdealDirect => "ideal_direct",
        EvolutionKind::IdealViaR => "ideal_via_r",
        EvolutionKind::CollectiveDephasing => "collective_dephasing",
        EvolutionKind::Depolarization => "depolarization",
        EvolutionKind::LocalDephasing => "local_dephasing",
        EvolutionKind::RemnantCoupling => "remnant_coupling",
        EvolutionKind::AsymmetricLegs => "asymmetric_legs",
    }
}

impl ExperimentSpec {
    /// Parses the flat key=value format. Lines are `key = value`; `#`
    /// starts a comment; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidSpec(format!("line {}: expected key = value", lineno + 1))
            })?;
            if map
                .insert(key.trim().to_string(), value.trim().to_string())
                .is_some()
            {
                return Err(Error::InvalidSpec(format!(
                    "line {}: duplicate key '{}'",
                    lineno + 1,
                    key.trim()
                )));
            }
        }
        Self::from_map(&map)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let mut spec = ExperimentSpec::default();
        for (key, value) in map {
            spec.set(key, value)?;
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Applies one key=value assignment (also used for CLI overrides and
    /// sweep axes).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::InvalidSpec(format!("{key}: invalid {what} '{value}'"));
        match key {
            "n" => self.n = value.parse().map_err(|_| bad("integer"))?,
            "lambda" => {
                self.lambda = if value.eq_ignore_ascii_case("inf") {
                    f64::INFINITY
                } else {
                    value.parse().map_err(|_| bad("number"))?
                }
            }
            "beta_override" => {
                self.beta_override = if value.eq_ignore_ascii_case("none") {
                    None
                } else if value.eq_ignore_ascii_case("inf") {
                    Some(f64::INFINITY)
                } else {
                    Some(value.parse().map_err(|_| bad("number"))?)
                }
            }
            "J" | "j" => self.j = value.parse().map_err(|_| bad("number"))?,
            "W" | "w" => self.w = value.to_string(),
            "V" | "v" => self.v = value.to_string(),
            "times.start" => self.times.start = value.parse().map_err(|_| bad("number"))?,
            "times.stop" => self.times.stop = value.parse().map_err(|_| bad("number"))?,
            "times.step" => self.times.step = value.parse().map_err(|_| bad("number"))?,
            "evolution" => self.evolution.kind = parse_kind(value)?,
            "gamma" => self.evolution.gamma = value.parse().map_err(|_| bad("number"))?,
            "epsilon" => self.evolution.epsilon = value.parse().map_err(|_| bad("number"))?,
            "trajectories" => {
                self.evolution.trajectories = value.parse().map_err(|_| bad("integer"))?
            }
            "shots" => {
                self.shots = if value.eq_ignore_ascii_case("none") {
                    None
                } else {
                    Some(value.parse().map_err(|_| bad("integer"))?)
                }
            }
            "readout_x" => self.readout_x = value.parse().map_err(|_| bad("number"))?,
            "seed" => self.seed = value.parse().map_err(|_| bad("integer"))?,
            "outputs" => {
                self.outputs = value
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect()
            }
            other => return Err(Error::InvalidSpec(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidSpec("n: need at least 2 sites".into()));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::InvalidSpec("lambda: must be positive".into()));
        }
        if !(self.j > 0.0) || !self.j.is_finite() {
            return Err(Error::InvalidSpec("J: must be positive and finite".into()));
        }
        if let Some(beta) = self.beta_override {
            if beta < 0.0 || beta.is_nan() {
                return Err(Error::InvalidSpec("beta_override: must be >= 0".into()));
            }
        }
        if !(self.times.step > 0.0) {
            return Err(Error::InvalidSpec("times.step: must be > 0".into()));
        }
        if self.times.stop < self.times.start || self.times.start < 0.0 {
            return Err(Error::InvalidSpec(
                "times: need 0 <= start <= stop".into(),
            ));
        }
        if !(0.0..=0.5).contains(&self.readout_x) {
            return Err(Error::InvalidSpec("readout_x: must be in [0, 0.5]".into()));
        }
        if self.shots == Some(0) {
            return Err(Error::InvalidSpec("shots: must be >= 1".into()));
        }
        self.evolution.validate()?;
        self.observable_pair()?;
        let known = [
            "t", "O_g", "N_g", "O_corr", "O_th", "O_g_norm", "O_th_norm", "sigma_corr",
        ];
        for col in &self.outputs {
            if !known.contains(&col.as_str()) {
                return Err(Error::InvalidSpec(format!(
                    "outputs: unknown column '{col}'"
                )));
            }
        }
        Ok(())
    }

    /// Builds the W/V pair from the operator spec strings.
    pub fn observable_pair(&self) -> Result<ObservablePair> {
        let w = parse_operator(&self.w, self.n)?;
        let v = parse_operator(&self.v, self.n)?
            .ok_or_else(|| Error::InvalidSpec("V: must not be the identity".into()))?;
        ObservablePair::new(self.n, w, v)
    }

    /// Canonical one-key-per-line rendering; basis of the spec hash and of
    /// the determinism contract.
    pub fn canonical_string(&self) -> String {
        let fmt = |x: f64| {
            if x.is_infinite() {
                "inf".to_string()
            } else {
                format!("{x:?}")
            }
        };
        let mut s = String::new();
        s.push_str(&format!("n = {}\n", self.n));
        s.push_str(&format!("lambda = {}\n", fmt(self.lambda)));
        s.push_str(&format!(
            "beta_override = {}\n",
            self.beta_override.map_or("none".into(), fmt)
        ));
        s.push_str(&format!("J = {}\n", fmt(self.j)));
        s.push_str(&format!("W = {}\n", self.w));
        s.push_str(&format!("V = {}\n", self.v));
        s.push_str(&format!("times.start = {}\n", fmt(self.times.start)));
        s.push_str(&format!("times.stop = {}\n", fmt(self.times.stop)));
        s.push_str(&format!("times.step = {}\n", fmt(self.times.step)));
        s.push_str(&format!("evolution = {}\n", kind_name(self.evolution.kind)));
        s.push_str(&format!("gamma = {}\n", fmt(self.evolution.gamma)));
        s.push_str(&format!("epsilon = {}\n", fmt(self.evolution.epsilon)));
        s.push_str(&format!("trajectories = {}\n", self.evolution.trajectories));
        s.push_str(&format!(
            "shots = {}\n",
            self.shots.map_or("none".into(), |v| v.to_string())
        ));
        s.push_str(&format!("readout_x = {}\n", fmt(self.readout_x)));
        s.push_str(&format!("seed = {}\n", self.seed));
        s.push_str(&format!("outputs = {}\n", self.outputs.join(",")));
        s
    }

    /// FNV-1a hash of the canonical rendering; stable across runs and
    /// toolchains.
    pub fn hash(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in self.canonical_string().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}
