//! The preprocessing loop.
//!
//! Each outer round runs QBCE, QAT, QRATE+, BLE and QRATU+ in that order
//! and the loop repeats until a round changes nothing. Clause elimination
//! marks clauses dead as it goes and compacts occurrence lists at the end of
//! a sweep; literal elimination shortens clauses immediately.
//!
//! Checks are scheduled per technique. A failed check is repeated only after
//! an event that can make it succeed: the removal or shortening of a clause
//! that blocked it (its witness), a change to the clause itself, or, for the
//! propagation-based techniques, the shortening of any clause. Every skipped
//! check would fail, so the result equals that of re-checking everything.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::{Duration, Instant};

use crate::formula::{ClauseId, Lit, Pcnf};
use crate::propagation::Propagator;
use crate::redundancy::{CheckMode, CheckResult, Checker, ClauseDb, QbcpEngine};
use crate::shuffle::{round_seed, shuffle_order};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Technique {
    Qbce,
    Qat,
    QratE,
    Ble,
    QratU,
}

impl Technique {
    /// Order of application inside an outer round.
    pub const ALL: [Technique; 5] = [
        Technique::Qbce,
        Technique::Qat,
        Technique::QratE,
        Technique::Ble,
        Technique::QratU,
    ];

    fn slot(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Technique::Qbce => "qbce",
            Technique::Qat => "qat",
            Technique::QratE => "qrate",
            Technique::Ble => "ble",
            Technique::QratU => "qratu",
        }
    }

    pub fn eliminates_literals(self) -> bool {
        matches!(self, Technique::Ble | Technique::QratU)
    }

    pub fn uses_propagation(self) -> bool {
        matches!(self, Technique::Qat | Technique::QratE | Technique::QratU)
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub qbce: bool,
    pub qat: bool,
    pub qrate: bool,
    pub ble: bool,
    pub qratu: bool,
    pub mode: CheckMode,
    /// Shuffle the clause order of every outer round; `None` keeps input order.
    pub seed: Option<u64>,
    pub soft_time_limit: Option<Duration>,
    pub max_outer_rounds: Option<u32>,
    /// Skip checks that cannot succeed. Turning this off re-checks every
    /// clause in every sweep.
    pub witness_scheduling: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            qbce: true,
            qat: true,
            qrate: true,
            ble: true,
            qratu: true,
            mode: CheckMode::QratPlus,
            seed: None,
            soft_time_limit: None,
            max_outer_rounds: None,
            witness_scheduling: true,
        }
    }
}

impl Config {
    /// All techniques disabled.
    pub fn none() -> Config {
        Config {
            qbce: false,
            qat: false,
            qrate: false,
            ble: false,
            qratu: false,
            ..Config::default()
        }
    }

    pub fn only(technique: Technique) -> Config {
        let mut config = Config::none();
        config.set_enabled(technique, true);
        config
    }

    pub fn enabled(&self, technique: Technique) -> bool {
        match technique {
            Technique::Qbce => self.qbce,
            Technique::Qat => self.qat,
            Technique::QratE => self.qrate,
            Technique::Ble => self.ble,
            Technique::QratU => self.qratu,
        }
    }

    pub fn set_enabled(&mut self, technique: Technique, on: bool) {
        match technique {
            Technique::Qbce => self.qbce = on,
            Technique::Qat => self.qat = on,
            Technique::QratE => self.qrate = on,
            Technique::Ble => self.ble = on,
            Technique::QratU => self.qratu = on,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct Counters {
    /// Individual (technique, clause) checks.
    pub checks_performed: u64,
    pub clauses_removed: u64,
    pub universal_literals_removed: u64,
    pub rounds: u32,
    pub timed_out: bool,
}

impl fmt::Display for Counters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "checks={} removed_clauses={} removed_ulits={} rounds={} timed_out={}",
            self.checks_performed, self.clauses_removed, self.universal_literals_removed, self.rounds, self.timed_out
        )
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Verdict {
    SolvedSat,
    SolvedUnsat,
    Simplified,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PreprocessOutcome {
    pub verdict: Verdict,
    /// The remaining formula: empty for `SolvedSat`, the single empty clause
    /// for `SolvedUnsat`.
    pub formula: Pcnf,
    pub counters: Counters,
}

/// `SolvedSat` for an empty matrix, `SolvedUnsat` if an empty clause is live.
pub fn detect_solved(pcnf: &Pcnf) -> Option<Verdict> {
    if pcnf.has_empty_clause() {
        Some(Verdict::SolvedUnsat)
    } else if pcnf.num_live() == 0 {
        Some(Verdict::SolvedSat)
    } else {
        None
    }
}

/// Witness bookkeeping: which clauses made which checks fail.
#[derive(Clone, Debug, Default)]
pub struct WitnessIndex {
    pending: BTreeMap<ClauseId, BTreeSet<ClauseId>>,
}

impl WitnessIndex {
    pub fn register(&mut self, witness: ClauseId, blocked: ClauseId) {
        self.pending.entry(witness).or_default().insert(blocked);
    }

    pub fn is_witness(&self, id: ClauseId) -> bool {
        self.pending.contains_key(&id)
    }

    pub fn forget(&mut self, id: ClauseId) {
        self.pending.remove(&id);
    }

    /// Clauses to re-check after `removed` was marked dead: for a witness,
    /// every live clause in its resolution neighborhoods.
    pub fn on_clause_removed(&mut self, db: &ClauseDb, removed: ClauseId) -> BTreeSet<ClauseId> {
        let mut out = self.pending.remove(&removed).unwrap_or_default();
        if !out.is_empty() {
            for &l in db.lits(removed) {
                out.extend(db.resolution_neighborhood(l));
            }
        }
        out.retain(|&id| db.is_live(id));
        out
    }
}

pub fn run_pipeline(pcnf: &Pcnf, config: &Config) -> PreprocessOutcome {
    Pipeline::<Propagator>::new(pcnf, config.clone()).run()
}

pub struct Pipeline<E: QbcpEngine = Propagator> {
    checker: Checker<E>,
    config: Config,
    witnesses: WitnessIndex,
    dirty: [Vec<bool>; 5],
    order: Vec<ClauseId>,
    counters: Counters,
    deadline: Option<Instant>,
    unsat: bool,
}

impl<E: QbcpEngine> Pipeline<E> {
    pub fn new(pcnf: &Pcnf, config: Config) -> Pipeline<E> {
        let checker = Checker::<E>::new(pcnf);
        let n = checker.db().len();
        let order = checker.db().live_ids().collect();
        let deadline = config.soft_time_limit.map(|d| Instant::now() + d);
        let unsat = checker.db().has_empty_clause();
        Pipeline {
            checker,
            config,
            witnesses: WitnessIndex::default(),
            dirty: std::array::from_fn(|_| vec![true; n]),
            order,
            counters: Counters::default(),
            deadline,
            unsat,
        }
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn checker(&self) -> &Checker<E> {
        &self.checker
    }

    pub fn formula(&self) -> Pcnf {
        self.checker.db().to_pcnf()
    }

    fn finished(&self) -> bool {
        self.unsat || self.counters.timed_out || self.checker.db().num_live() == 0
    }

    pub fn run(mut self) -> PreprocessOutcome {
        while !self.finished() {
            if let Some(max) = self.config.max_outer_rounds {
                if self.counters.rounds >= max {
                    break;
                }
            }
            self.counters.rounds += 1;
            self.order = self.checker.db().live_ids().collect();
            if let Some(seed) = self.config.seed {
                shuffle_order(&mut self.order, Some(round_seed(seed, self.counters.rounds)));
            }
            let mut changed = false;
            for technique in Technique::ALL {
                if !self.config.enabled(technique) {
                    continue;
                }
                changed |= if technique.eliminates_literals() {
                    self.pass_literal_elimination(technique)
                } else {
                    self.pass_clause_elimination(technique)
                };
                if self.finished() {
                    break;
                }
            }
            if !changed {
                break;
            }
        }
        self.checker.compact();
        let verdict = if self.unsat {
            Verdict::SolvedUnsat
        } else if self.checker.db().num_live() == 0 {
            Verdict::SolvedSat
        } else {
            Verdict::Simplified
        };
        let formula = match verdict {
            Verdict::SolvedUnsat => Pcnf::from_parts(self.checker.prefix().clone(), vec![Vec::new()]),
            _ => self.formula(),
        };
        PreprocessOutcome {
            verdict,
            formula,
            counters: self.counters,
        }
    }

    fn out_of_time(&mut self) -> bool {
        if let Some(deadline) = self.deadline {
            if Instant::now() >= deadline {
                self.counters.timed_out = true;
            }
        }
        self.counters.timed_out
    }

    /// Next clause of the current sweep that is due for `technique`.
    fn due(&self, technique: Technique, c: ClauseId) -> bool {
        self.checker.db().is_live(c) && (!self.config.witness_scheduling || self.dirty[technique.slot()][c.index()])
    }

    /// One QBCE / QAT / QRATE+ pass. QBCE repeats its sweep until nothing
    /// changes. Returns whether any clause was removed.
    pub fn pass_clause_elimination(&mut self, technique: Technique) -> bool {
        debug_assert!(!technique.eliminates_literals());
        let mut any = false;
        loop {
            let changed = self.sweep_clauses(technique);
            any |= changed;
            if !changed || technique != Technique::Qbce || self.finished() {
                return any;
            }
        }
    }

    fn sweep_clauses(&mut self, technique: Technique) -> bool {
        let mut changed = false;
        for k in 0..self.order.len() {
            let c = self.order[k];
            if !self.due(technique, c) {
                continue;
            }
            if self.out_of_time() {
                break;
            }
            self.dirty[technique.slot()][c.index()] = false;
            self.counters.checks_performed += 1;
            if self.clause_redundant(technique, c) {
                self.remove_clause(c);
                changed = true;
            }
        }
        let db = self.checker.db();
        self.order.retain(|&c| db.is_live(c));
        self.checker.compact();
        changed
    }

    fn clause_redundant(&mut self, technique: Technique, c: ClauseId) -> bool {
        let mode = self.config.mode;
        if technique == Technique::Qat {
            return self.checker.check_qat_clause(c, mode);
        }
        let prefix = self.checker.prefix();
        let existential: Vec<Lit> = self
            .checker
            .db()
            .lits(c)
            .iter()
            .copied()
            .filter(|l| prefix.is_existential(l.var()))
            .collect();
        for l in existential {
            let result = match technique {
                Technique::Qbce => self.checker.qbce_blocked(c, l),
                _ => self.checker.check_qrat(c, l, mode),
            };
            match result {
                CheckResult::Holds => return true,
                CheckResult::Fails(witness) => self.witnesses.register(witness, c),
            }
        }
        false
    }

    fn remove_clause(&mut self, c: ClauseId) {
        self.checker.remove_clause(c);
        self.counters.clauses_removed += 1;
        for id in self.witnesses.on_clause_removed(self.checker.db(), c) {
            self.mark_dirty(id);
        }
    }

    fn mark_dirty(&mut self, c: ClauseId) {
        for flags in &mut self.dirty {
            flags[c.index()] = true;
        }
    }

    /// One BLE / QRATU+ pass. BLE repeats its sweep until nothing changes.
    /// Returns whether any literal was removed.
    pub fn pass_literal_elimination(&mut self, technique: Technique) -> bool {
        debug_assert!(technique.eliminates_literals());
        let mut any = false;
        loop {
            let changed = self.sweep_literals(technique);
            any |= changed;
            if !changed || technique != Technique::Ble || self.finished() {
                return any;
            }
        }
    }

    fn sweep_literals(&mut self, technique: Technique) -> bool {
        let mode = self.config.mode;
        let mut changed = false;
        for k in 0..self.order.len() {
            let c = self.order[k];
            if !self.due(technique, c) {
                continue;
            }
            if self.out_of_time() {
                break;
            }
            self.dirty[technique.slot()][c.index()] = false;
            self.counters.checks_performed += 1;
            let prefix = self.checker.prefix();
            let universal: Vec<Lit> = self
                .checker
                .db()
                .lits(c)
                .iter()
                .copied()
                .filter(|l| prefix.is_universal(l.var()))
                .collect();
            for u in universal {
                let result = match technique {
                    Technique::Ble => self.checker.ble_blocked(c, u),
                    _ => self.checker.check_qrat(c, u, mode),
                };
                match result {
                    CheckResult::Holds => {
                        self.remove_literal(c, u);
                        changed = true;
                        if self.checker.db().lits(c).is_empty() {
                            self.unsat = true;
                            return true;
                        }
                    }
                    CheckResult::Fails(witness) => self.witnesses.register(witness, c),
                }
            }
        }
        changed
    }

    fn remove_literal(&mut self, c: ClauseId, u: Lit) {
        // Clauses that see `c` as a resolution partner, taken before the
        // literal disappears.
        let mut affected: Vec<ClauseId> = Vec::new();
        for &l in self.checker.db().lits(c) {
            affected.extend(self.checker.db().resolution_neighborhood(l));
        }
        self.checker.remove_literal(c, u);
        self.counters.universal_literals_removed += 1;
        self.witnesses.forget(c);
        self.mark_dirty(c);
        for id in affected {
            self.mark_dirty(id);
        }
        // A shorter clause strengthens propagation for every other check.
        for technique in Technique::ALL {
            if technique.uses_propagation() {
                self.dirty[technique.slot()].fill(true);
            }
        }
    }
}
