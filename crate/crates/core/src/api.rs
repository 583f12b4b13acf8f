//! Embeddable session API: import, configure, preprocess, export.

use std::time::Duration;

use thiserror::Error;

use crate::formula::{compute_stats, FormulaStats, Pcnf};
use crate::pipeline::{run_pipeline, Config, Counters, PreprocessOutcome, Technique};
use crate::qdimacs::{parse_qdimacs, write_qdimacs, ParseError};
use crate::redundancy::CheckMode;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ApiError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("no formula imported")]
    NoFormula,
    #[error("unknown option `{0}`")]
    UnknownOption(String),
    #[error("invalid value `{value}` for option `{option}`")]
    InvalidValue { option: String, value: String },
}

/// Options accepted by [`Session::configure`].
pub const OPTIONS: &[&str] = &[
    "qbce",
    "qat",
    "qrate",
    "ble",
    "qratu",
    "mode",
    "seed",
    "soft-time-limit",
    "max-rounds",
    "scheduling",
];

pub enum Source<'a> {
    Text(&'a str),
    Formula(Pcnf),
}

impl<'a> From<&'a str> for Source<'a> {
    fn from(text: &'a str) -> Self {
        Source::Text(text)
    }
}

impl From<Pcnf> for Source<'_> {
    fn from(pcnf: Pcnf) -> Self {
        Source::Formula(pcnf)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Session {
    formula: Option<Pcnf>,
    config: Config,
    last_outcome: Option<PreprocessOutcome>,
    diagnostics: Vec<String>,
}

impl Session {
    pub fn new() -> Session {
        Session::default()
    }

    /// Replaces the current formula. On error the session is left as it was,
    /// apart from a diagnostics entry.
    pub fn import<'a>(&mut self, source: impl Into<Source<'a>>) -> Result<(), ApiError> {
        let pcnf = match source.into() {
            Source::Formula(pcnf) => pcnf,
            Source::Text(text) => match parse_qdimacs(text) {
                Ok(pcnf) => pcnf,
                Err(e) => {
                    self.diagnostics.push(format!("import failed: {e}"));
                    return Err(e.into());
                }
            },
        };
        if pcnf.tautologies_dropped() > 0 {
            self.diagnostics
                .push(format!("dropped {} tautological clauses", pcnf.tautologies_dropped()));
        }
        self.formula = Some(pcnf);
        self.last_outcome = None;
        Ok(())
    }

    pub fn configure(&mut self, option: &str, value: &str) -> Result<(), ApiError> {
        let invalid = || ApiError::InvalidValue {
            option: option.to_string(),
            value: value.to_string(),
        };
        let technique = match option {
            "qbce" => Some(Technique::Qbce),
            "qat" => Some(Technique::Qat),
            "qrate" => Some(Technique::QratE),
            "ble" => Some(Technique::Ble),
            "qratu" => Some(Technique::QratU),
            _ => None,
        };
        if let Some(t) = technique {
            let on = parse_switch(value).ok_or_else(invalid)?;
            self.config.set_enabled(t, on);
            return Ok(());
        }
        match option {
            "mode" => {
                self.config.mode = match value {
                    "qrat" | "classic" => CheckMode::QratClassic,
                    "qratplus" | "qrat+" | "plus" => CheckMode::QratPlus,
                    _ => return Err(invalid()),
                }
            }
            "seed" => {
                self.config.seed = match value {
                    "none" | "off" => None,
                    v => Some(v.parse().map_err(|_| invalid())?),
                }
            }
            "soft-time-limit" => {
                self.config.soft_time_limit = match value {
                    "none" | "off" => None,
                    v => {
                        let secs: f64 = v.parse().map_err(|_| invalid())?;
                        Some(Duration::try_from_secs_f64(secs).map_err(|_| invalid())?)
                    }
                }
            }
            "max-rounds" => {
                self.config.max_outer_rounds = match value {
                    "none" | "off" => None,
                    v => Some(v.parse().map_err(|_| invalid())?),
                }
            }
            "scheduling" => {
                self.config.witness_scheduling = match value {
                    "witness" => true,
                    "full" => false,
                    _ => return Err(invalid()),
                }
            }
            _ => return Err(ApiError::UnknownOption(option.to_string())),
        }
        Ok(())
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn set_config(&mut self, config: Config) {
        self.config = config;
    }

    /// Runs the pipeline; the result becomes the current formula.
    pub fn preprocess(&mut self) -> Result<&PreprocessOutcome, ApiError> {
        let pcnf = self.formula.as_ref().ok_or(ApiError::NoFormula)?;
        let outcome = run_pipeline(pcnf, &self.config);
        if outcome.counters.timed_out {
            self.diagnostics.push("soft time limit reached".to_string());
        }
        self.formula = Some(outcome.formula.clone());
        Ok(self.last_outcome.insert(outcome))
    }

    pub fn export(&self) -> Result<String, ApiError> {
        self.formula.as_ref().map(write_qdimacs).ok_or(ApiError::NoFormula)
    }

    pub fn stats(&self) -> Result<(FormulaStats, Counters), ApiError> {
        let pcnf = self.formula.as_ref().ok_or(ApiError::NoFormula)?;
        let counters = self.last_outcome.as_ref().map(|o| o.counters).unwrap_or_default();
        Ok((compute_stats(pcnf), counters))
    }

    pub fn formula(&self) -> Option<&Pcnf> {
        self.formula.as_ref()
    }

    pub fn last_outcome(&self) -> Option<&PreprocessOutcome> {
        self.last_outcome.as_ref()
    }

    pub fn diagnostics(&self) -> &[String] {
        &self.diagnostics
    }
}

fn parse_switch(value: &str) -> Option<bool> {
    match value {
        "on" | "true" | "1" | "yes" => Some(true),
        "off" | "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{Lit, Quant, Var};
    use crate::pipeline::Verdict;

    const XOR_PAIR: &str = "p cnf 2 2\na 1 0\ne 2 0\n1 2 0\n-1 -2 0\n";

    #[test]
    fn import_single_unit() {
        let mut s = Session::new();
        s.import("p cnf 1 1\ne 1 0\n1 0\n").unwrap();
        let f = s.formula().unwrap();
        assert_eq!(f.prefix().quant(Var::new(1)), Some(Quant::Exists));
        assert_eq!(f.clauses()[0].lits(), &[Lit::from_dimacs(1).unwrap()]);
    }

    #[test]
    fn failed_import_keeps_session() {
        let mut s = Session::new();
        s.import(XOR_PAIR).unwrap();
        let before = s.formula().cloned();
        assert!(matches!(s.import("p cnf 1 1\n1 x 0\n"), Err(ApiError::Parse(_))));
        assert_eq!(s.formula().cloned(), before);
        assert!(!s.diagnostics().is_empty());
    }

    #[test]
    fn reimport_replaces() {
        let mut s = Session::new();
        s.import(XOR_PAIR).unwrap();
        s.import("p cnf 1 2\ne 1 0\n1 0\n-1 0\n").unwrap();
        assert_eq!(s.export().unwrap(), "p cnf 1 2\ne 1 0\n1 0\n-1 0\n");
    }

    #[test]
    fn preprocess_requires_formula() {
        let mut s = Session::new();
        assert_eq!(s.preprocess().unwrap_err(), ApiError::NoFormula);
        assert_eq!(s.export().unwrap_err(), ApiError::NoFormula);
    }

    #[test]
    fn xor_pair_solves_and_empties_stats() {
        let mut s = Session::new();
        s.import(XOR_PAIR).unwrap();
        assert_eq!(s.preprocess().unwrap().verdict, Verdict::SolvedSat);
        let (stats, counters) = s.stats().unwrap();
        assert_eq!(stats, FormulaStats::default());
        assert!(counters.clauses_removed >= 2);
    }

    #[test]
    fn configure_options() {
        let mut s = Session::new();
        s.configure("qbce", "off").unwrap();
        assert!(!s.config().qbce);
        s.configure("mode", "qrat").unwrap();
        assert_eq!(s.config().mode, CheckMode::QratClassic);
        s.configure("seed", "42").unwrap();
        assert_eq!(s.config().seed, Some(42));
        s.configure("soft-time-limit", "1.5").unwrap();
        assert_eq!(s.config().soft_time_limit, Some(Duration::from_millis(1500)));
        s.configure("max-rounds", "3").unwrap();
        assert_eq!(s.config().max_outer_rounds, Some(3));
        assert!(matches!(s.configure("bogus", "on"), Err(ApiError::UnknownOption(_))));
        assert!(matches!(
            s.configure("qat", "maybe"),
            Err(ApiError::InvalidValue { .. })
        ));
        assert!(matches!(
            s.configure("soft-time-limit", "-1"),
            Err(ApiError::InvalidValue { .. })
        ));
    }

    #[test]
    fn disabled_everything_keeps_formula() {
        let mut s = Session::new();
        s.set_config(Config::none());
        s.import(XOR_PAIR).unwrap();
        let before = s.export().unwrap();
        assert_eq!(s.preprocess().unwrap().verdict, Verdict::Simplified);
        assert_eq!(s.export().unwrap(), before);
    }

    #[test]
    fn second_run_is_stable() {
        let mut s = Session::new();
        s.configure("qbce", "off").unwrap();
        s.configure("ble", "off").unwrap();
        s.import("p cnf 3 3\na 1 0\ne 2 3 0\n1 2 0\n-1 3 0\n-2 -3 0\n").unwrap();
        s.preprocess().unwrap();
        let once = s.export().unwrap();
        s.preprocess().unwrap();
        assert_eq!(s.export().unwrap(), once);
    }
}
