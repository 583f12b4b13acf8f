//! Brute-force QBF evaluation and differential test harnesses.
//!
//! Everything here is meant for small formulas: evaluation expands every
//! variable, so instances are capped at [`MAX_EVAL_VARS`] variables.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::formula::{Block, ClauseId, Lit, Pcnf, Quant, Var};
use crate::pipeline::{run_pipeline, Config, Technique, Verdict};
use crate::propagation::{propagate_naive, AbstractionIndex, Propagator, UnitMode};
use crate::redundancy::{CheckMode, Checker, NaiveEngine};

pub const MAX_EVAL_VARS: usize = 24;
pub const MAX_CORPUS_VARS: u32 = 12;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("{0} variables exceed the evaluation limit of {MAX_EVAL_VARS}")]
    TooManyVars(usize),
}

/// Truth value of a closed PCNF by recursive expansion in prefix order.
pub fn eval_qbf(pcnf: &Pcnf) -> Result<bool, OracleError> {
    let used = pcnf.occurring_vars();
    let order: Vec<(Var, Quant)> = pcnf
        .prefix()
        .blocks()
        .iter()
        .flat_map(|b| b.vars.iter().map(move |&v| (v, b.quant)))
        .filter(|(v, _)| used[v.index()])
        .collect();
    if order.len() > MAX_EVAL_VARS {
        return Err(OracleError::TooManyVars(order.len()));
    }
    let clauses: Vec<Vec<Lit>> = pcnf.live_clauses().map(|c| c.lits().to_vec()).collect();
    Ok(expand(&order, &clauses))
}

fn expand(order: &[(Var, Quant)], clauses: &[Vec<Lit>]) -> bool {
    if clauses.is_empty() {
        return true;
    }
    if clauses.iter().any(|c| c.is_empty()) {
        return false;
    }
    let Some((&(var, quant), rest)) = order.split_first() else {
        unreachable!("clause over an unbound variable");
    };
    let branch = |value: Lit| expand(rest, &cofactor(clauses, value));
    match quant {
        Quant::Exists => branch(var.positive()) || branch(var.negative()),
        Quant::Forall => branch(var.positive()) && branch(var.negative()),
    }
}

fn cofactor(clauses: &[Vec<Lit>], value: Lit) -> Vec<Vec<Lit>> {
    clauses
        .iter()
        .filter(|c| !c.contains(&value))
        .map(|c| c.iter().copied().filter(|&l| l != !value).collect())
        .collect()
}

/// Shape of a random corpus.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CorpusSpec {
    pub max_vars: u32,
    pub max_blocks: u32,
    pub max_clauses: u32,
    pub max_clause_len: u32,
    pub count: usize,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            max_vars: 8,
            max_blocks: 3,
            max_clauses: 16,
            max_clause_len: 4,
            count: 10_000,
            seed: 1,
        }
    }
}

/// One random PCNF. Clauses never contain two literals of one variable, so
/// no tautology is generated.
pub fn random_pcnf(rng: &mut impl Rng, spec: &CorpusSpec) -> Pcnf {
    let max_vars = spec.max_vars.clamp(1, MAX_CORPUS_VARS);
    let num_vars = rng.gen_range(1..=max_vars);
    let num_blocks = rng.gen_range(1..=spec.max_blocks.max(1));
    let first = if rng.gen_bool(0.5) {
        Quant::Exists
    } else {
        Quant::Forall
    };
    let mut blocks: Vec<Block> = (0..num_blocks)
        .map(|i| {
            let quant = match (first, i % 2) {
                (q, 0) => q,
                (Quant::Exists, _) => Quant::Forall,
                (Quant::Forall, _) => Quant::Exists,
            };
            Block::new(quant, Vec::new())
        })
        .collect();
    for id in 1..=num_vars {
        let b = rng.gen_range(0..num_blocks as usize);
        blocks[b].vars.push(Var::new(id));
    }
    let num_clauses = rng.gen_range(1..=spec.max_clauses.max(1));
    let all_vars: Vec<u32> = (1..=num_vars).collect();
    let clauses = (0..num_clauses)
        .map(|_| {
            let len = rng.gen_range(1..=spec.max_clause_len.clamp(1, num_vars)) as usize;
            all_vars
                .choose_multiple(rng, len)
                .map(|&v| Var::new(v).positive())
                .map(|l| if rng.gen_bool(0.5) { !l } else { l })
                .collect()
        })
        .collect();
    Pcnf::new(blocks, clauses).expect("generated prefix binds each variable once")
}

/// Deterministic corpus for `spec`.
pub fn corpus(spec: &CorpusSpec) -> impl Iterator<Item = Pcnf> {
    let spec = *spec;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.count).map(move |_| random_pcnf(&mut rng, &spec))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub instance: usize,
    pub expected: bool,
    pub verdict: Verdict,
    /// Truth value of the simplified formula, when one was returned.
    pub simplified_value: Option<bool>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "violation instance={} expected={} verdict={:?} simplified={:?}",
            self.instance, self.expected, self.verdict, self.simplified_value
        )
    }
}

/// Whether an outcome agrees with the truth value of its input.
pub fn outcome_matches(input_value: bool, verdict: Verdict, output: &Pcnf) -> (bool, Option<bool>) {
    match verdict {
        Verdict::SolvedSat => (input_value, None),
        Verdict::SolvedUnsat => (!input_value, None),
        Verdict::Simplified => {
            let value = eval_qbf(output).expect("output is no larger than input");
            (value == input_value, Some(value))
        }
    }
}

/// Runs the pipeline over the corpus and reports every instance whose
/// outcome disagrees with brute-force evaluation of the input.
pub fn check_truth_preserving(spec: &CorpusSpec, config: &Config) -> Vec<Violation> {
    corpus(spec)
        .enumerate()
        .filter_map(|(instance, pcnf)| {
            let expected = eval_qbf(&pcnf).expect("corpus respects the variable cap");
            let out = run_pipeline(&pcnf, config);
            let (ok, simplified_value) = outcome_matches(expected, out.verdict, &out.formula);
            (!ok).then_some(Violation {
                instance,
                expected,
                verdict: out.verdict,
                simplified_value,
            })
        })
        .collect()
}

/// Enabled checks that still succeed on `pcnf`, found by a scheduling-free
/// sweep over every live clause with the full-scan propagator. Empty for a
/// saturated formula.
pub fn saturation_violations(pcnf: &Pcnf, config: &Config) -> Vec<String> {
    let mut checker: Checker<NaiveEngine> = Checker::new(pcnf);
    let mode = config.mode;
    let prefix = pcnf.prefix().clone();
    let mut found = Vec::new();
    let ids: Vec<ClauseId> = checker.db().live_ids().collect();
    for c in ids {
        let lits = checker.db().lits(c).to_vec();
        if config.qat && checker.check_qat_clause(c, mode) {
            found.push(format!("qat removes {c}"));
        }
        for &l in &lits {
            let existential = prefix.is_existential(l.var());
            if existential && config.qbce && checker.qbce_blocked(c, l).holds() {
                found.push(format!("qbce removes {c} on {l}"));
            }
            if existential && config.qrate && checker.check_qrat(c, l, mode).holds() {
                found.push(format!("qrate removes {c} on {l}"));
            }
            if !existential && config.ble && checker.ble_blocked(c, l).holds() {
                found.push(format!("ble removes {l} from {c}"));
            }
            if !existential && config.qratu && checker.check_qrat(c, l, mode).holds() {
                found.push(format!("qratu removes {l} from {c}"));
            }
        }
    }
    found
}

/// Counters from [`differential_checks`]. Every `*_violations` field is
/// expected to be zero.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DifferentialReport {
    pub instances: usize,
    pub checks: u64,
    /// Classic QRAT holds but QRAT+ does not.
    pub mode_violations: u64,
    /// QRAT+ holds but classic QRAT does not.
    pub separations: u64,
    pub qbce_holds: u64,
    pub qbce_violations: u64,
    pub ble_holds: u64,
    pub ble_violations: u64,
    /// Watched and full-scan engines disagree on a check.
    pub engine_mismatches: u64,
    pub details: Vec<String>,
}

impl DifferentialReport {
    pub fn violations(&self) -> u64 {
        self.mode_violations + self.qbce_violations + self.ble_violations + self.engine_mismatches
    }
}

/// Runs every (clause, literal) check of every corpus instance in both
/// modes and cross-checks the restriction and strength relations, plus
/// clause-level QAT in both modes.
pub fn differential_checks(spec: &CorpusSpec) -> DifferentialReport {
    let mut report = DifferentialReport::default();
    for (instance, pcnf) in corpus(spec).enumerate() {
        report.instances += 1;
        let mut watched: Checker = Checker::new(&pcnf);
        let mut naive: Checker<NaiveEngine> = Checker::new(&pcnf);
        let ids: Vec<ClauseId> = watched.db().live_ids().collect();
        for c in ids {
            let qat_plus = watched.check_qat_clause(c, CheckMode::QratPlus);
            let qat_classic = watched.check_qat_clause(c, CheckMode::QratClassic);
            report.checks += 1;
            if qat_classic && !qat_plus {
                report.mode_violations += 1;
                report
                    .details
                    .push(format!("instance {instance}: qat classic without plus on {c}"));
            }
            if qat_plus && !qat_classic {
                report.separations += 1;
            }
            if qat_plus != naive.check_qat_clause(c, CheckMode::QratPlus)
                || qat_classic != naive.check_qat_clause(c, CheckMode::QratClassic)
            {
                report.engine_mismatches += 1;
                report
                    .details
                    .push(format!("instance {instance}: engines disagree on qat of {c}"));
            }
            for l in watched.db().lits(c).to_vec() {
                report.checks += 1;
                let plus = watched.check_qrat(c, l, CheckMode::QratPlus);
                let classic = watched.check_qrat(c, l, CheckMode::QratClassic);
                if classic.holds() && !plus.holds() {
                    report.mode_violations += 1;
                    report
                        .details
                        .push(format!("instance {instance}: classic without plus on {c} {l}"));
                }
                if plus.holds() && !classic.holds() {
                    report.separations += 1;
                }
                if plus != naive.check_qrat(c, l, CheckMode::QratPlus)
                    || classic != naive.check_qrat(c, l, CheckMode::QratClassic)
                {
                    report.engine_mismatches += 1;
                    report
                        .details
                        .push(format!("instance {instance}: engines disagree on {c} {l}"));
                }
                if pcnf.prefix().is_existential(l.var()) {
                    if watched.qbce_blocked(c, l).holds() {
                        report.qbce_holds += 1;
                        if !plus.holds() {
                            report.qbce_violations += 1;
                            report
                                .details
                                .push(format!("instance {instance}: blocked {c} {l} fails qrat+"));
                        }
                    }
                } else if watched.ble_blocked(c, l).holds() {
                    report.ble_holds += 1;
                    if !plus.holds() {
                        report.ble_violations += 1;
                        report
                            .details
                            .push(format!("instance {instance}: blocked literal {c} {l} fails qrat+"));
                    }
                }
            }
        }
    }
    report
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PropagationReport {
    pub episodes: u64,
    /// Episodes run with universal reduction; the rest use plain propagation.
    pub with_reduction: u64,
    pub conflicts: u64,
    pub mismatches: u64,
    pub invariant_failures: u64,
    pub details: Vec<String>,
}

/// Random propagation episodes on long-lived watched engines, compared with
/// the full-scan propagator. Between episodes clauses are removed and
/// universal literals deleted so that watch maintenance is exercised.
pub fn propagation_episodes(spec: &CorpusSpec, episodes_per_instance: usize) -> PropagationReport {
    let mut report = PropagationReport::default();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5eed);
    for (instance, pcnf) in corpus(spec).enumerate() {
        let prefix = pcnf.prefix().clone();
        let mut clauses: Vec<Vec<Lit>> = pcnf.clauses().iter().map(|c| c.lits().to_vec()).collect();
        let mut live = vec![true; clauses.len()];
        let mut engine = Propagator::with_clauses(&prefix, clauses.iter().map(|c| c.as_slice()));
        let vars: Vec<Var> = prefix.vars().collect();
        for episode in 0..episodes_per_instance {
            let n_assume = rng.gen_range(0..=vars.len().min(4));
            let assumptions: Vec<Lit> = vars
                .choose_multiple(&mut rng, n_assume)
                .map(|v| Lit::new(*v, rng.gen_bool(0.5)))
                .collect();
            let index = AbstractionIndex(rng.gen_range(0..=prefix.num_blocks()));
            let mode = if rng.gen_bool(0.5) {
                UnitMode::WithReduction
            } else {
                UnitMode::Plain
            };
            let exclude = (!clauses.is_empty() && rng.gen_bool(0.3)).then(|| rng.gen_range(0..clauses.len()));

            let view = clauses
                .iter()
                .enumerate()
                .filter(|&(i, _)| live[i] && Some(i) != exclude)
                .map(|(_, c)| c.as_slice());
            let expected = propagate_naive(&prefix, view, &assumptions, index, mode);
            let got = engine.propagate(&assumptions, index, mode, exclude);
            report.episodes += 1;
            if mode == UnitMode::WithReduction {
                report.with_reduction += 1;
            }
            if expected.is_conflict() {
                report.conflicts += 1;
            }
            if normalized(&expected) != normalized(&got) {
                report.mismatches += 1;
                report.details.push(format!(
                    "instance {instance} episode {episode}: naive {expected:?} watched {got:?}"
                ));
            }
            if let Err(e) = engine.check_watch_invariant() {
                report.invariant_failures += 1;
                report
                    .details
                    .push(format!("instance {instance} episode {episode}: {e}"));
            }

            // mutate between episodes
            if rng.gen_bool(0.15) {
                let alive: Vec<usize> = (0..clauses.len()).filter(|&i| live[i]).collect();
                if let Some(&i) = alive.choose(&mut rng) {
                    live[i] = false;
                    engine.remove_clause(i);
                }
            }
            if rng.gen_bool(0.15) {
                let candidates: Vec<(usize, Lit)> = (0..clauses.len())
                    .filter(|&i| live[i])
                    .flat_map(|i| clauses[i].iter().map(move |&l| (i, l)))
                    .filter(|(_, l)| prefix.is_universal(l.var()))
                    .collect();
                if let Some(&(i, l)) = candidates.choose(&mut rng) {
                    clauses[i].retain(|&k| k != l);
                    engine.remove_literal(i, l);
                }
            }
        }
    }
    report
}

fn normalized(outcome: &crate::propagation::PropagationOutcome) -> Option<Vec<Lit>> {
    match outcome {
        crate::propagation::PropagationOutcome::Conflict => None,
        crate::propagation::PropagationOutcome::Stable(trail) => {
            let mut t = trail.clone();
            t.sort();
            Some(t)
        }
    }
}

/// Convenience for harnesses: run a single technique alone.
pub fn single_technique_configs() -> Vec<(Technique, Config)> {
    Technique::ALL.iter().map(|&t| (t, Config::only(t))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qdimacs::parse_qdimacs;

    fn eval(text: &str) -> bool {
        eval_qbf(&parse_qdimacs(text).unwrap()).unwrap()
    }

    #[test]
    fn hand_expanded_examples() {
        assert!(eval("p cnf 2 2\na 1 0\ne 2 0\n1 2 0\n-1 -2 0\n"));
        assert!(!eval("p cnf 2 2\ne 1 0\na 2 0\n2 1 0\n-2 -1 0\n"));
        assert!(eval("p cnf 0 0\n"));
        assert!(!eval("p cnf 1 1\n0\n"));
        // quantifier order matters: exists y forall x. (x|y)(-x|-y) is false
        assert!(!eval("p cnf 2 2\ne 2 0\na 1 0\n1 2 0\n-1 -2 0\n"));
    }

    #[test]
    fn too_many_variables_rejected() {
        let clause: Vec<String> = (1..=25).map(|v| v.to_string()).collect();
        let text = format!("p cnf 25 1\n{} 0\n", clause.join(" "));
        assert_eq!(
            eval_qbf(&parse_qdimacs(&text).unwrap()),
            Err(OracleError::TooManyVars(25))
        );
    }

    /// Direct 2^n enumeration of the matrix, independent of `expand`.
    fn matrix_values(pcnf: &Pcnf) -> Vec<bool> {
        let vars: Vec<Var> = pcnf.prefix().vars().collect();
        (0..1u32 << vars.len())
            .map(|mask| {
                pcnf.live_clauses().all(|c| {
                    c.lits().iter().any(|l| {
                        let i = vars.iter().position(|&v| v == l.var()).unwrap();
                        (mask >> i & 1 == 1) != l.is_negated()
                    })
                })
            })
            .collect()
    }

    #[test]
    fn single_block_matches_enumeration() {
        let spec = CorpusSpec {
            max_vars: 6,
            max_blocks: 1,
            max_clauses: 8,
            count: 300,
            seed: 11,
            ..CorpusSpec::default()
        };
        for pcnf in corpus(&spec) {
            let values = matrix_values(&pcnf);
            let expected = match pcnf.prefix().blocks()[0].quant {
                Quant::Exists => values.iter().any(|&b| b),
                Quant::Forall => values.iter().all(|&b| b),
            };
            assert_eq!(eval_qbf(&pcnf).unwrap(), expected);
        }
    }

    #[test]
    fn corpus_is_deterministic() {
        let spec = CorpusSpec {
            count: 50,
            seed: 3,
            ..CorpusSpec::default()
        };
        let a: Vec<Pcnf> = corpus(&spec).collect();
        let b: Vec<Pcnf> = corpus(&spec).collect();
        assert_eq!(a, b);
        assert!(a.iter().all(|f| f.tautologies_dropped() == 0));
    }

    #[test]
    fn small_truth_preservation_run() {
        let spec = CorpusSpec {
            count: 300,
            seed: 5,
            ..CorpusSpec::default()
        };
        assert_eq!(check_truth_preserving(&spec, &Config::default()), vec![]);
        let two = CorpusSpec {
            max_clauses: 2,
            count: 300,
            seed: 6,
            ..CorpusSpec::default()
        };
        assert_eq!(check_truth_preserving(&two, &Config::default()), vec![]);
    }

    #[test]
    fn small_differential_run() {
        let spec = CorpusSpec {
            count: 200,
            seed: 8,
            ..CorpusSpec::default()
        };
        let report = differential_checks(&spec);
        assert_eq!(report.violations(), 0, "{:?}", report.details);
        let report = propagation_episodes(&spec, 20);
        assert_eq!(report.mismatches, 0, "{:?}", report.details);
        assert_eq!(report.invariant_failures, 0, "{:?}", report.details);
    }
}
