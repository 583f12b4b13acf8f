//! Redundancy checks for a single clause or literal: outer resolvents,
//! QAT, QRAT/QRAT+ and their syntactic restrictions QBCE and BLE.

use crate::formula::{ClauseId, Lit, Pcnf, Prefix};
use crate::propagation::{propagate_naive, AbstractionIndex, Propagator, UnitMode};

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum OuterResolvent {
    Tautology,
    Lits(Vec<Lit>),
}

/// Which abstraction the QAT test of an outer resolvent runs on.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum CheckMode {
    /// Abstraction up to the deepest level of the tested literals, with
    /// universal reduction.
    #[default]
    QratPlus,
    /// Full abstraction, propositional unit propagation.
    QratClassic,
}

impl CheckMode {
    pub fn abstraction(self, prefix: &Prefix, lits: &[Lit]) -> (AbstractionIndex, UnitMode) {
        match self {
            CheckMode::QratPlus => (AbstractionIndex::max_level(prefix, lits), UnitMode::WithReduction),
            CheckMode::QratClassic => (AbstractionIndex::full(prefix), UnitMode::Plain),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CheckResult {
    Holds,
    /// The first neighbor whose outer resolvent failed.
    Fails(ClauseId),
}

impl CheckResult {
    pub fn holds(self) -> bool {
        self == CheckResult::Holds
    }
}

/// Literals of `d` other than the complement of `l` whose level does not
/// exceed the level of `l`.
pub fn outer_clause(prefix: &Prefix, d: &[Lit], l: Lit) -> Vec<Lit> {
    let level = prefix.level(l.var());
    d.iter()
        .copied()
        .filter(|&k| k != !l && prefix.level(k.var()) <= level)
        .collect()
}

/// Outer resolvent of `c` and `d` on `l`: `c` (without `l` when `l` is
/// universal) joined with the outer clause of `d`.
pub fn outer_resolvent(prefix: &Prefix, c: &[Lit], d: &[Lit], l: Lit) -> OuterResolvent {
    let universal = prefix.is_universal(l.var());
    let mut lits: Vec<Lit> = c.iter().copied().filter(|&k| !(universal && k == l)).collect();
    for k in outer_clause(prefix, d, l) {
        if lits.contains(&!k) {
            return OuterResolvent::Tautology;
        }
        if !lits.contains(&k) {
            lits.push(k);
        }
    }
    lits.sort_unstable_by_key(|&k| prefix.lit_key(k));
    OuterResolvent::Lits(lits)
}

/// Clause store with per-literal occurrence lists. Ids are positions in the
/// source formula; removed clauses stay addressable but are no longer live.
#[derive(Clone, Debug)]
pub struct ClauseDb {
    prefix: Prefix,
    clauses: Vec<Vec<Lit>>,
    live: Vec<bool>,
    occs: Vec<Vec<ClauseId>>,
    num_live: usize,
}

impl ClauseDb {
    pub fn new(pcnf: &Pcnf) -> ClauseDb {
        let prefix = pcnf.prefix().clone();
        let mut occs = vec![Vec::new(); 2 * prefix.max_var() as usize + 2];
        let mut clauses = Vec::with_capacity(pcnf.clauses().len());
        let mut live = Vec::with_capacity(pcnf.clauses().len());
        for c in pcnf.clauses() {
            if c.is_live() {
                for l in c.lits() {
                    occs[l.code()].push(c.id());
                }
            }
            clauses.push(c.lits().to_vec());
            live.push(c.is_live());
        }
        let num_live = live.iter().filter(|&&b| b).count();
        ClauseDb {
            prefix,
            clauses,
            live,
            occs,
            num_live,
        }
    }

    pub fn prefix(&self) -> &Prefix {
        &self.prefix
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn num_live(&self) -> usize {
        self.num_live
    }

    pub fn lits(&self, id: ClauseId) -> &[Lit] {
        &self.clauses[id.index()]
    }

    pub fn is_live(&self, id: ClauseId) -> bool {
        self.live[id.index()]
    }

    pub fn live_ids(&self) -> impl Iterator<Item = ClauseId> + '_ {
        (0..self.clauses.len() as u32)
            .map(ClauseId)
            .filter(|&id| self.is_live(id))
    }

    pub fn live_clauses(&self) -> impl Iterator<Item = (ClauseId, &[Lit])> + Clone + '_ {
        self.clauses
            .iter()
            .enumerate()
            .filter(|(i, _)| self.live[*i])
            .map(|(i, c)| (ClauseId(i as u32), c.as_slice()))
    }

    /// Live clauses containing `lit`, ascending by id.
    pub fn occurrences(&self, lit: Lit) -> impl Iterator<Item = ClauseId> + '_ {
        self.occs[lit.code()].iter().copied().filter(|&id| self.is_live(id))
    }

    /// Live clauses containing the complement of `l`, ascending by id.
    pub fn resolution_neighborhood(&self, l: Lit) -> Vec<ClauseId> {
        self.occurrences(!l).collect()
    }

    pub fn has_empty_clause(&self) -> bool {
        self.live_clauses().any(|(_, c)| c.is_empty())
    }

    /// Marks a clause dead. Occurrence lists keep the id until [`ClauseDb::compact`].
    pub fn kill(&mut self, id: ClauseId) {
        if std::mem::replace(&mut self.live[id.index()], false) {
            self.num_live -= 1;
        }
    }

    pub fn remove_literal(&mut self, id: ClauseId, lit: Lit) {
        self.clauses[id.index()].retain(|&l| l != lit);
        self.occs[lit.code()].retain(|&c| c != id);
    }

    /// Drops dead clause ids from the occurrence lists.
    pub fn compact(&mut self) {
        let live = &self.live;
        for list in &mut self.occs {
            list.retain(|id| live[id.index()]);
        }
    }

    /// Live clauses, in id order, as a fresh formula over the same prefix.
    pub fn to_pcnf(&self) -> Pcnf {
        Pcnf::from_parts(
            self.prefix.clone(),
            self.live_clauses().map(|(_, c)| c.to_vec()).collect(),
        )
    }
}

/// A QBCP back end the checks can run on.
pub trait QbcpEngine {
    fn build(db: &ClauseDb) -> Self;

    /// Whether propagating `assumptions` over the live clauses other than
    /// `exclude` derives the empty clause.
    fn conflicts(
        &mut self,
        db: &ClauseDb,
        assumptions: &[Lit],
        index: AbstractionIndex,
        mode: UnitMode,
        exclude: Option<ClauseId>,
    ) -> bool;

    fn clause_removed(&mut self, id: ClauseId);

    fn literal_removed(&mut self, id: ClauseId, lit: Lit);
}

impl QbcpEngine for Propagator {
    fn build(db: &ClauseDb) -> Propagator {
        let mut engine = Propagator::with_clauses(db.prefix(), db.clauses.iter().map(|c| c.as_slice()));
        for (i, &live) in db.live.iter().enumerate() {
            if !live {
                engine.remove_clause(i);
            }
        }
        engine
    }

    fn conflicts(
        &mut self,
        _db: &ClauseDb,
        assumptions: &[Lit],
        index: AbstractionIndex,
        mode: UnitMode,
        exclude: Option<ClauseId>,
    ) -> bool {
        Propagator::conflicts(self, assumptions, index, mode, exclude.map(ClauseId::index))
    }

    fn clause_removed(&mut self, id: ClauseId) {
        self.remove_clause(id.index());
    }

    fn literal_removed(&mut self, id: ClauseId, lit: Lit) {
        self.remove_literal(id.index(), lit);
    }
}

/// Full-scan propagation straight off the clause store.
#[derive(Clone, Copy, Debug, Default)]
pub struct NaiveEngine;

impl QbcpEngine for NaiveEngine {
    fn build(_db: &ClauseDb) -> NaiveEngine {
        NaiveEngine
    }

    fn conflicts(
        &mut self,
        db: &ClauseDb,
        assumptions: &[Lit],
        index: AbstractionIndex,
        mode: UnitMode,
        exclude: Option<ClauseId>,
    ) -> bool {
        let view = db.live_clauses().filter(|&(id, _)| Some(id) != exclude).map(|(_, c)| c);
        propagate_naive(db.prefix(), view, assumptions, index, mode).is_conflict()
    }

    fn clause_removed(&mut self, _id: ClauseId) {}

    fn literal_removed(&mut self, _id: ClauseId, _lit: Lit) {}
}

/// Runs redundancy checks against a mutable formula.
pub struct Checker<E: QbcpEngine = Propagator> {
    db: ClauseDb,
    engine: E,
}

impl<E: QbcpEngine> Checker<E> {
    pub fn new(pcnf: &Pcnf) -> Checker<E> {
        let db = ClauseDb::new(pcnf);
        let engine = E::build(&db);
        Checker { db, engine }
    }

    pub fn db(&self) -> &ClauseDb {
        &self.db
    }

    pub fn engine(&self) -> &E {
        &self.engine
    }

    pub fn prefix(&self) -> &Prefix {
        self.db.prefix()
    }

    pub fn resolution_neighborhood(&self, l: Lit) -> Vec<ClauseId> {
        self.db.resolution_neighborhood(l)
    }

    /// QAT test of an outer resolvent against the live clauses other than `exclude`.
    pub fn check_or_qat(&mut self, orv: &OuterResolvent, exclude: Option<ClauseId>, mode: CheckMode) -> bool {
        let lits = match orv {
            OuterResolvent::Tautology => return true,
            OuterResolvent::Lits(lits) => lits,
        };
        let (index, unit_mode) = mode.abstraction(self.db.prefix(), lits);
        let assumptions: Vec<Lit> = lits.iter().map(|&l| !l).collect();
        self.engine.conflicts(&self.db, &assumptions, index, unit_mode, exclude)
    }

    /// QAT test of the clause itself.
    pub fn check_qat_clause(&mut self, c: ClauseId, mode: CheckMode) -> bool {
        let orv = OuterResolvent::Lits(self.db.lits(c).to_vec());
        self.check_or_qat(&orv, Some(c), mode)
    }

    /// QRAT (classic mode) or QRAT+ test of clause `c` on literal `l`.
    pub fn check_qrat(&mut self, c: ClauseId, l: Lit, mode: CheckMode) -> CheckResult {
        debug_assert!(self.db.lits(c).contains(&l));
        for d in self.db.resolution_neighborhood(l) {
            let orv = outer_resolvent(self.db.prefix(), self.db.lits(c), self.db.lits(d), l);
            if !self.check_or_qat(&orv, Some(c), mode) {
                return CheckResult::Fails(d);
            }
        }
        CheckResult::Holds
    }

    /// Every outer resolvent on `l` is a tautology.
    fn blocked(&self, c: ClauseId, l: Lit) -> CheckResult {
        for d in self.db.occurrences(!l) {
            let orv = outer_resolvent(self.db.prefix(), self.db.lits(c), self.db.lits(d), l);
            if orv != OuterResolvent::Tautology {
                return CheckResult::Fails(d);
            }
        }
        CheckResult::Holds
    }

    /// Blocked-clause test on an existential literal.
    pub fn qbce_blocked(&self, c: ClauseId, l: Lit) -> CheckResult {
        debug_assert!(self.db.prefix().is_existential(l.var()));
        self.blocked(c, l)
    }

    /// Blocked-literal test on a universal literal.
    pub fn ble_blocked(&self, c: ClauseId, l: Lit) -> CheckResult {
        debug_assert!(self.db.prefix().is_universal(l.var()));
        self.blocked(c, l)
    }

    pub fn remove_clause(&mut self, c: ClauseId) {
        self.db.kill(c);
        self.engine.clause_removed(c);
    }

    pub fn remove_literal(&mut self, c: ClauseId, l: Lit) {
        self.db.remove_literal(c, l);
        self.engine.literal_removed(c, l);
    }

    pub fn compact(&mut self) {
        self.db.compact();
    }
}
