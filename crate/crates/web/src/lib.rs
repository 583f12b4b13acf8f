//! wasm-bindgen bindings for the browser demo in `www/`.
//!
//! Every export takes QDIMACS text and returns a JSON string; errors are
//! reported as `{"error": "..."}` rather than thrown.

use serde::Serialize;
use serde_json::{json, Map, Value};
use wasm_bindgen::prelude::*;

use qratpp_core::oracle::eval_qbf;
use qratpp_core::redundancy::Checker;
use qratpp_core::{compute_stats, parse_qdimacs, reduction_report, CheckMode, FormulaStats, Session, Verdict};

#[derive(Serialize)]
struct StatsJson {
    clauses: u64,
    qblocks: u64,
    existential_lits: u64,
    universal_lits: u64,
}

impl From<FormulaStats> for StatsJson {
    fn from(s: FormulaStats) -> Self {
        StatsJson {
            clauses: s.clauses,
            qblocks: s.qblocks,
            existential_lits: s.existential_lits,
            universal_lits: s.universal_lits,
        }
    }
}

fn error(msg: impl ToString) -> Value {
    json!({ "error": msg.to_string() })
}

fn option_value(v: &Value) -> String {
    match v {
        Value::Bool(true) => "on".into(),
        Value::Bool(false) => "off".into(),
        Value::Null => "none".into(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Runs the pipeline. `options` is a JSON object of session options, for
/// example `{"qbce": false, "mode": "qrat", "seed": 7}`.
pub fn preprocess_json(text: &str, options: &str) -> Value {
    let mut session = Session::new();
    if !options.trim().is_empty() {
        let opts: Map<String, Value> = match serde_json::from_str(options) {
            Ok(o) => o,
            Err(e) => return error(format!("options: {e}")),
        };
        for (name, value) in &opts {
            if name == "soft-time-limit" {
                return error("soft-time-limit is not available in the browser");
            }
            if let Err(e) = session.configure(name, &option_value(value)) {
                return error(e);
            }
        }
    }
    if let Err(e) = session.import(text) {
        return error(e);
    }
    let before = compute_stats(session.formula().unwrap());
    let outcome = match session.preprocess() {
        Ok(o) => o.clone(),
        Err(e) => return error(e),
    };
    let after = compute_stats(&outcome.formula);
    let report = reduction_report(&before, &after);
    let verdict = match outcome.verdict {
        Verdict::SolvedSat => "SAT",
        Verdict::SolvedUnsat => "UNSAT",
        Verdict::Simplified => "simplified",
    };
    json!({
        "verdict": verdict,
        "output": session.export().unwrap(),
        "before": StatsJson::from(before),
        "after": StatsJson::from(after),
        "reduction": report.to_string(),
        "counters": {
            "checks": outcome.counters.checks_performed,
            "clauses_removed": outcome.counters.clauses_removed,
            "universal_literals_removed": outcome.counters.universal_literals_removed,
            "rounds": outcome.counters.rounds,
            "timed_out": outcome.counters.timed_out,
        },
    })
}

/// Per clause and literal, whether the redundancy check holds in QRAT and
/// QRAT+ mode, without removing anything.
pub fn compare_modes_json(text: &str) -> Value {
    let pcnf = match parse_qdimacs(text) {
        Ok(p) => p,
        Err(e) => return error(e),
    };
    let mut checker: Checker = Checker::new(&pcnf);
    let mut rows = Vec::new();
    let (mut classic_total, mut plus_total) = (0, 0);
    for clause in pcnf.live_clauses() {
        let c = clause.id();
        let mut lits = Vec::new();
        for &l in clause.lits() {
            let classic = checker.check_qrat(c, l, CheckMode::QratClassic).holds();
            let plus = checker.check_qrat(c, l, CheckMode::QratPlus).holds();
            classic_total += classic as u32;
            plus_total += plus as u32;
            lits.push(json!({
                "lit": l.to_dimacs(),
                "universal": pcnf.prefix().is_universal(l.var()),
                "qrat": classic,
                "qrat_plus": plus,
            }));
        }
        let qat_classic = checker.check_qat_clause(c, CheckMode::QratClassic);
        let qat_plus = checker.check_qat_clause(c, CheckMode::QratPlus);
        classic_total += qat_classic as u32;
        plus_total += qat_plus as u32;
        rows.push(json!({
            "clause": clause.lits().iter().map(|l| l.to_dimacs()).collect::<Vec<_>>(),
            "qat": qat_classic,
            "qat_plus": qat_plus,
            "literals": lits,
        }));
    }
    json!({ "clauses": rows, "qrat_holds": classic_total, "qrat_plus_holds": plus_total })
}

/// Truth value by full expansion; small formulas only.
pub fn evaluate_json(text: &str) -> Value {
    let pcnf = match parse_qdimacs(text) {
        Ok(p) => p,
        Err(e) => return error(e),
    };
    match eval_qbf(&pcnf) {
        Ok(value) => json!({ "value": value }),
        Err(e) => error(e),
    }
}

#[wasm_bindgen]
pub fn preprocess(text: &str, options: &str) -> String {
    preprocess_json(text, options).to_string()
}

#[wasm_bindgen(js_name = compareModes)]
pub fn compare_modes(text: &str) -> String {
    compare_modes_json(text).to_string()
}

#[wasm_bindgen]
pub fn evaluate(text: &str) -> String {
    evaluate_json(text).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    const XOR_PAIR: &str = "p cnf 2 2\na 1 0\ne 2 0\n1 2 0\n-1 -2 0\n";
    const OUTER_UNIVERSAL: &str = "p cnf 3 2\ne 1 2 0\na 3 0\n1 2 0\n2 3 0\n";

    #[test]
    fn preprocess_reports_verdict() {
        let v = preprocess_json(XOR_PAIR, "");
        assert_eq!(v["verdict"], "SAT");
        assert_eq!(v["after"]["clauses"], 0);
        assert_eq!(v["before"]["clauses"], 2);
    }

    #[test]
    fn options_are_applied() {
        let v = preprocess_json(
            XOR_PAIR,
            r#"{"qbce": false, "ble": false, "qat": false, "qrate": false, "qratu": false}"#,
        );
        assert_eq!(v["verdict"], "simplified");
        assert_eq!(v["counters"]["checks"], 0);
        let v = preprocess_json(XOR_PAIR, r#"{"seed": 3, "mode": "qrat", "max-rounds": null}"#);
        assert_eq!(v["verdict"], "SAT");
        assert!(preprocess_json(XOR_PAIR, r#"{"colour": true}"#)["error"].is_string());
        assert!(preprocess_json(XOR_PAIR, "[1]")["error"].is_string());
        assert!(preprocess_json(XOR_PAIR, r#"{"soft-time-limit": 1}"#)["error"].is_string());
    }

    #[test]
    fn parse_errors_are_json() {
        let v: Value = serde_json::from_str(&preprocess("p cnf 1 1\n2 0\n", "")).unwrap();
        assert!(v["error"].as_str().unwrap().contains("line 2"));
    }

    #[test]
    fn compare_shows_separation() {
        let v = compare_modes_json(OUTER_UNIVERSAL);
        let first = &v["clauses"][0];
        assert_eq!(first["clause"], json!([1, 2]));
        assert_eq!(first["qat"], false);
        assert_eq!(first["qat_plus"], true);
        assert!(v["qrat_plus_holds"].as_u64() > v["qrat_holds"].as_u64());
    }

    #[test]
    fn evaluate_small_formulas() {
        assert_eq!(evaluate_json(XOR_PAIR)["value"], true);
        assert_eq!(
            evaluate_json("p cnf 2 2\ne 1 0\na 2 0\n2 1 0\n-2 -1 0\n")["value"],
            false
        );
    }
}
