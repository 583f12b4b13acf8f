//! QBF unit propagation with universal reduction (QBCP) over an implicit
//! prefix abstraction.
//!
//! Under abstraction index `i` every variable at nesting level `<= i` is
//! treated as existential. Propagation assigns the assumptions, deletes
//! falsified literals from each clause, optionally deletes universally
//! reducible literals from what remains, forces the last remaining
//! existential literal, and reports a conflict on an empty remainder.
//!
//! [`Propagator`] is the watched-literal engine used by the redundancy
//! checks. [`propagate_naive`] implements the same closure by repeated full
//! scans and serves as its reference.

use crate::formula::{Lit, Prefix, Var};

/// Number of outermost quantifier blocks treated as existential.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct AbstractionIndex(pub u32);

impl AbstractionIndex {
    /// Every block existential.
    pub fn full(prefix: &Prefix) -> AbstractionIndex {
        AbstractionIndex(prefix.num_blocks())
    }

    /// Largest nesting level among `lits`, 0 when empty.
    pub fn max_level(prefix: &Prefix, lits: &[Lit]) -> AbstractionIndex {
        AbstractionIndex(lits.iter().map(|l| prefix.level(l.var())).max().unwrap_or(0))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum UnitMode {
    /// Unit propagation plus universal reduction.
    WithReduction,
    /// Propositional unit propagation.
    Plain,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum PropagationOutcome {
    Conflict,
    /// The assumptions plus every forced literal, in assignment order.
    Stable(Vec<Lit>),
}

impl PropagationOutcome {
    pub fn is_conflict(&self) -> bool {
        matches!(self, PropagationOutcome::Conflict)
    }
}

pub fn is_existential_under(prefix: &Prefix, var: Var, index: AbstractionIndex) -> bool {
    prefix.is_existential(var) || prefix.level(var) <= index.0
}

/// Whether `lit` can be removed from `lits` by universal reduction: it is
/// universal under `index` and no literal of `lits` that is existential
/// under `index` sits at a deeper level.
pub fn universal_reducible(prefix: &Prefix, lit: Lit, lits: &[Lit], index: AbstractionIndex) -> bool {
    if is_existential_under(prefix, lit.var(), index) {
        return false;
    }
    let level = prefix.level(lit.var());
    !lits
        .iter()
        .any(|k| is_existential_under(prefix, k.var(), index) && prefix.level(k.var()) > level)
}

/// Reference propagator: repeated scans over all clauses in the given order
/// until nothing changes. Assumptions must not contain a complementary pair.
pub fn propagate_naive<'a>(
    prefix: &Prefix,
    clauses: impl IntoIterator<Item = &'a [Lit]> + Clone,
    assumptions: &[Lit],
    index: AbstractionIndex,
    mode: UnitMode,
) -> PropagationOutcome {
    let mut assigned: Vec<Lit> = Vec::new();
    for &a in assumptions {
        debug_assert!(!assigned.contains(&!a), "complementary assumptions");
        if !assigned.contains(&a) {
            assigned.push(a);
        }
    }
    loop {
        let mut changed = false;
        for clause in clauses.clone() {
            if clause.iter().any(|l| assigned.contains(l)) {
                continue;
            }
            let mut remainder: Vec<Lit> = clause.iter().copied().filter(|l| !assigned.contains(&!*l)).collect();
            if mode == UnitMode::WithReduction {
                let snapshot = remainder.clone();
                remainder.retain(|&l| !universal_reducible(prefix, l, &snapshot, index));
            }
            match remainder.as_slice() {
                [] => return PropagationOutcome::Conflict,
                [unit] if is_existential_under(prefix, unit.var(), index) => {
                    assigned.push(*unit);
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            return PropagationOutcome::Stable(assigned);
        }
    }
}

const UNASSIGNED: u8 = 0;
const TRUE: u8 = 1;
const FALSE: u8 = 2;

enum ClauseState {
    Satisfied,
    Conflict,
    Unit(Lit),
    Open,
}

struct EngineClause {
    // Watched literals live at positions 0 and 1.
    lits: Vec<Lit>,
    active: bool,
    watched: bool,
    dirty: bool,
}

/// Two-watched-literal QBCP engine.
///
/// Clauses with at least two literals that are existential in the input
/// prefix watch two such literals. During an episode a watch may move to any
/// literal that is existential under the current abstraction; when the
/// episode ends those watches are moved back to input-existential literals.
/// Clauses with fewer than two input-existential literals live on a scan
/// list that is re-evaluated whenever the watch queue drains.
pub struct Propagator {
    levels: Vec<u32>,
    input_existential: Vec<bool>,
    clauses: Vec<EngineClause>,
    watches: Vec<Vec<u32>>,
    scan: Vec<u32>,
    values: Vec<u8>,
    trail: Vec<Lit>,
    dirty: Vec<u32>,
    index: u32,
}

impl Propagator {
    pub fn new(prefix: &Prefix) -> Propagator {
        let max_var = prefix.max_var() as usize;
        let mut levels = vec![0; max_var + 1];
        let mut input_existential = vec![false; max_var + 1];
        for v in prefix.vars() {
            levels[v.index()] = prefix.level(v);
            input_existential[v.index()] = prefix.is_existential(v);
        }
        Propagator {
            levels,
            input_existential,
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * max_var + 2],
            scan: Vec::new(),
            values: vec![UNASSIGNED; max_var + 1],
            trail: Vec::new(),
            dirty: Vec::new(),
            index: 0,
        }
    }

    /// Builds an engine over `clauses`; slot numbers follow iteration order.
    pub fn with_clauses<'a>(prefix: &Prefix, clauses: impl IntoIterator<Item = &'a [Lit]>) -> Propagator {
        let mut engine = Propagator::new(prefix);
        for c in clauses {
            engine.add_clause(c);
        }
        engine
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    /// Adds a clause and returns its slot. All literal variables must be bound.
    pub fn add_clause(&mut self, lits: &[Lit]) -> usize {
        let slot = self.clauses.len();
        let mut lits = lits.to_vec();
        // move input-existential literals to the front, keep relative order
        lits.sort_by_key(|l| !self.input_existential[l.var().index()]);
        let watched = lits.len() >= 2 && lits[..2].iter().all(|l| self.input_existential[l.var().index()]);
        if watched {
            self.watches[lits[0].code()].push(slot as u32);
            self.watches[lits[1].code()].push(slot as u32);
        } else {
            self.scan.push(slot as u32);
        }
        self.clauses.push(EngineClause {
            lits,
            active: true,
            watched,
            dirty: false,
        });
        slot
    }

    /// Excludes a clause from all future episodes.
    pub fn remove_clause(&mut self, slot: usize) {
        let clause = &mut self.clauses[slot];
        if !clause.active {
            return;
        }
        clause.active = false;
        if clause.watched {
            let (a, b) = (clause.lits[0], clause.lits[1]);
            self.unwatch(a, slot);
            self.unwatch(b, slot);
        } else {
            self.scan.retain(|&s| s as usize != slot);
        }
    }

    /// Deletes a universal literal from a clause. Input-existential literals
    /// are never removed, so the watch category of the clause is unchanged.
    pub fn remove_literal(&mut self, slot: usize, lit: Lit) {
        debug_assert!(!self.input_existential[lit.var().index()]);
        let clause = &mut self.clauses[slot];
        if let Some(pos) = clause.lits.iter().position(|&l| l == lit) {
            debug_assert!(!clause.watched || pos >= 2);
            clause.lits.remove(pos);
        }
    }

    fn unwatch(&mut self, lit: Lit, slot: usize) {
        let list = &mut self.watches[lit.code()];
        if let Some(pos) = list.iter().position(|&s| s as usize == slot) {
            list.swap_remove(pos);
        }
    }

    fn value(&self, lit: Lit) -> u8 {
        match self.values[lit.var().index()] {
            UNASSIGNED => UNASSIGNED,
            v if (v == TRUE) != lit.is_negated() => TRUE,
            _ => FALSE,
        }
    }

    fn existential_now(&self, lit: Lit) -> bool {
        let v = lit.var().index();
        self.input_existential[v] || self.levels[v] <= self.index
    }

    fn assign(&mut self, lit: Lit) {
        self.values[lit.var().index()] = if lit.is_negated() { FALSE } else { TRUE };
        self.trail.push(lit);
    }

    fn evaluate(&self, lits: &[Lit], mode: UnitMode) -> ClauseState {
        let mut exist_count = 0;
        let mut candidate = None;
        let mut max_exist_level = 0;
        let mut univ_count = 0;
        let mut min_univ_level = u32::MAX;
        for &l in lits {
            match self.value(l) {
                TRUE => return ClauseState::Satisfied,
                FALSE => {}
                _ => {
                    let level = self.levels[l.var().index()];
                    if self.existential_now(l) {
                        exist_count += 1;
                        candidate = Some(l);
                        max_exist_level = max_exist_level.max(level);
                    } else {
                        univ_count += 1;
                        min_univ_level = min_univ_level.min(level);
                    }
                }
            }
        }
        let universals_remain = match mode {
            UnitMode::Plain => univ_count > 0,
            UnitMode::WithReduction => exist_count > 0 && min_univ_level < max_exist_level,
        };
        match (exist_count, universals_remain) {
            (0, false) => ClauseState::Conflict,
            (1, false) => ClauseState::Unit(candidate.expect("one existential")),
            _ => ClauseState::Open,
        }
    }

    /// Runs one episode and returns its outcome; the engine is reset
    /// afterwards. `exclude` names a slot that takes no part in propagation.
    pub fn propagate(
        &mut self,
        assumptions: &[Lit],
        index: AbstractionIndex,
        mode: UnitMode,
        exclude: Option<usize>,
    ) -> PropagationOutcome {
        let conflict = self.run(assumptions, index, mode, exclude);
        let outcome = if conflict {
            PropagationOutcome::Conflict
        } else {
            PropagationOutcome::Stable(self.trail.clone())
        };
        self.retract();
        outcome
    }

    /// Like [`Propagator::propagate`] but only reports whether a conflict
    /// was derived.
    pub fn conflicts(
        &mut self,
        assumptions: &[Lit],
        index: AbstractionIndex,
        mode: UnitMode,
        exclude: Option<usize>,
    ) -> bool {
        let conflict = self.run(assumptions, index, mode, exclude);
        self.retract();
        conflict
    }

    fn run(&mut self, assumptions: &[Lit], index: AbstractionIndex, mode: UnitMode, exclude: Option<usize>) -> bool {
        debug_assert!(self.trail.is_empty());
        self.index = index.0;
        let exclude = exclude.map(|s| s as u32);
        for &a in assumptions {
            match self.value(a) {
                UNASSIGNED => self.assign(a),
                FALSE => return true,
                _ => {}
            }
        }
        let mut head = 0;
        loop {
            while head < self.trail.len() {
                let falsified = !self.trail[head];
                head += 1;
                if self.visit_watchers(falsified, mode, exclude) {
                    return true;
                }
            }
            let mut forced = false;
            for k in 0..self.scan.len() {
                let slot = self.scan[k];
                if Some(slot) == exclude {
                    continue;
                }
                match self.evaluate(&self.clauses[slot as usize].lits, mode) {
                    ClauseState::Conflict => return true,
                    ClauseState::Unit(l) => {
                        self.assign(l);
                        forced = true;
                    }
                    _ => {}
                }
            }
            if !forced && head == self.trail.len() {
                return false;
            }
        }
    }

    fn visit_watchers(&mut self, falsified: Lit, mode: UnitMode, exclude: Option<u32>) -> bool {
        let mut list = std::mem::take(&mut self.watches[falsified.code()]);
        let mut keep = 0;
        let mut conflict = false;
        let mut i = 0;
        while i < list.len() {
            let slot = list[i];
            i += 1;
            let ci = slot as usize;
            if !self.clauses[ci].active {
                continue;
            }
            if Some(slot) == exclude || conflict {
                list[keep] = slot;
                keep += 1;
                continue;
            }
            {
                let lits = &mut self.clauses[ci].lits;
                if lits[0] == falsified {
                    lits.swap(0, 1);
                }
                debug_assert_eq!(lits[1], falsified);
            }
            let other = self.clauses[ci].lits[0];
            if self.value(other) == TRUE {
                list[keep] = slot;
                keep += 1;
                continue;
            }
            let replacement = (2..self.clauses[ci].lits.len()).find(|&k| {
                let l = self.clauses[ci].lits[k];
                self.value(l) != FALSE && self.existential_now(l)
            });
            if let Some(k) = replacement {
                let clause = &mut self.clauses[ci];
                clause.lits.swap(1, k);
                let new_watch = clause.lits[1];
                if !self.input_existential[new_watch.var().index()] && !clause.dirty {
                    clause.dirty = true;
                    self.dirty.push(slot);
                }
                self.watches[new_watch.code()].push(slot);
                continue;
            }
            list[keep] = slot;
            keep += 1;
            match self.evaluate(&self.clauses[ci].lits, mode) {
                ClauseState::Conflict => conflict = true,
                ClauseState::Unit(l) => {
                    debug_assert_eq!(l, other);
                    self.assign(l);
                }
                _ => {}
            }
        }
        list.truncate(keep);
        // Anything pushed onto this list while it was taken comes from
        // clauses whose other watch equals `falsified`, which cannot happen.
        debug_assert!(self.watches[falsified.code()].is_empty());
        self.watches[falsified.code()] = list;
        conflict
    }

    fn retract(&mut self) {
        for &l in &self.trail {
            self.values[l.var().index()] = UNASSIGNED;
        }
        self.trail.clear();
        for slot in std::mem::take(&mut self.dirty) {
            let ci = slot as usize;
            self.clauses[ci].dirty = false;
            if !self.clauses[ci].active {
                continue;
            }
            let (a, b) = (self.clauses[ci].lits[0], self.clauses[ci].lits[1]);
            if self.input_existential[a.var().index()] && self.input_existential[b.var().index()] {
                continue;
            }
            self.unwatch(a, ci);
            self.unwatch(b, ci);
            let existential = &self.input_existential;
            let lits = &mut self.clauses[ci].lits;
            let mut filled = 0;
            for k in 0..lits.len() {
                if filled == 2 {
                    break;
                }
                if existential[lits[k].var().index()] {
                    lits.swap(filled, k);
                    filled += 1;
                }
            }
            debug_assert_eq!(filled, 2);
            let (a, b) = (lits[0], lits[1]);
            self.watches[a.code()].push(slot);
            self.watches[b.code()].push(slot);
        }
    }

    /// Checks the resting-state invariants: nothing assigned, and every
    /// active watched clause watches two input-existential literals and is
    /// registered in exactly those two watch lists.
    pub fn check_watch_invariant(&self) -> Result<(), String> {
        if !self.trail.is_empty() || self.values.iter().any(|&v| v != UNASSIGNED) {
            return Err("assignment not retracted".into());
        }
        for (ci, clause) in self.clauses.iter().enumerate() {
            if !clause.active || !clause.watched {
                continue;
            }
            for &w in &clause.lits[..2] {
                if !self.input_existential[w.var().index()] {
                    return Err(format!("clause slot {ci} watches non-existential literal {w}"));
                }
                let count = self.watches[w.code()].iter().filter(|&&s| s as usize == ci).count();
                if count != 1 {
                    return Err(format!("clause slot {ci} registered {count} times for {w}"));
                }
            }
        }
        Ok(())
    }
}

/// One-shot watched propagation over `clauses`.
pub fn propagate<'a>(
    prefix: &Prefix,
    clauses: impl IntoIterator<Item = &'a [Lit]>,
    assumptions: &[Lit],
    index: AbstractionIndex,
    mode: UnitMode,
) -> PropagationOutcome {
    Propagator::with_clauses(prefix, clauses).propagate(assumptions, index, mode, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{Block, Quant};

    fn lit(x: i64) -> Lit {
        Lit::from_dimacs(x).unwrap()
    }

    fn prefix(blocks: &[(Quant, &[u32])]) -> Prefix {
        Prefix::new(
            blocks
                .iter()
                .map(|(q, vs)| Block::new(*q, vs.iter().map(|&v| Var::new(v)).collect()))
                .collect(),
        )
        .unwrap()
    }

    fn cls(cs: &[&[i64]]) -> Vec<Vec<Lit>> {
        cs.iter().map(|c| c.iter().map(|&x| lit(x)).collect()).collect()
    }

    fn sorted(outcome: PropagationOutcome) -> Option<Vec<Lit>> {
        match outcome {
            PropagationOutcome::Conflict => None,
            PropagationOutcome::Stable(mut t) => {
                t.sort();
                Some(t)
            }
        }
    }

    fn set(xs: &[i64]) -> Option<Vec<Lit>> {
        let mut v: Vec<Lit> = xs.iter().map(|&x| lit(x)).collect();
        v.sort();
        Some(v)
    }

    #[test]
    fn existential_under_index() {
        // forall x(1); forall u(2) at level 2 after exists; exists b(3) at level 3
        let p = prefix(&[
            (Quant::Forall, &[1]),
            (Quant::Exists, &[4]),
            (Quant::Forall, &[2]),
            (Quant::Exists, &[3]),
        ]);
        assert!(is_existential_under(&p, Var::new(1), AbstractionIndex(1)));
        assert!(!is_existential_under(&p, Var::new(2), AbstractionIndex(1)));
        assert!(is_existential_under(&p, Var::new(3), AbstractionIndex(1)));
    }

    #[test]
    fn reducibility() {
        // exists y(1) forall x(2): x reducible in (y | x)
        let p = prefix(&[(Quant::Exists, &[1]), (Quant::Forall, &[2])]);
        assert!(universal_reducible(&p, lit(2), &[lit(1), lit(2)], AbstractionIndex(0)));
        assert!(!universal_reducible(&p, lit(1), &[lit(1), lit(2)], AbstractionIndex(0)));
        // forall x(1) exists y(2): x not reducible in (x | y)
        let p = prefix(&[(Quant::Forall, &[1]), (Quant::Exists, &[2])]);
        assert!(!universal_reducible(&p, lit(1), &[lit(1), lit(2)], AbstractionIndex(0)));
        // exists a,b forall u: remainder of (b | u) with b false is (u)
        let p = prefix(&[(Quant::Exists, &[1, 2]), (Quant::Forall, &[3])]);
        assert!(universal_reducible(&p, lit(3), &[lit(3)], AbstractionIndex(1)));
        assert!(!universal_reducible(&p, lit(3), &[lit(3)], AbstractionIndex(2)));
    }

    #[test]
    fn reduction_turns_remainder_into_conflict() {
        let p = prefix(&[(Quant::Exists, &[1, 2]), (Quant::Forall, &[3])]);
        let cs = cls(&[&[2, 3]]);
        let view = || cs.iter().map(|c| c.as_slice());
        let assumptions = [lit(-1), lit(-2)];
        let full = AbstractionIndex::full(&p);
        for outcome in [
            propagate(&p, view(), &assumptions, AbstractionIndex(1), UnitMode::WithReduction),
            propagate_naive(&p, view(), &assumptions, AbstractionIndex(1), UnitMode::WithReduction),
        ] {
            assert_eq!(outcome, PropagationOutcome::Conflict);
        }
        for outcome in [
            propagate(&p, view(), &assumptions, full, UnitMode::Plain),
            propagate_naive(&p, view(), &assumptions, full, UnitMode::Plain),
        ] {
            assert_eq!(sorted(outcome), set(&[-1, -2, 3]));
        }
    }

    #[test]
    fn no_clauses_is_stable() {
        let p = prefix(&[(Quant::Exists, &[1])]);
        let none: Vec<&[Lit]> = Vec::new();
        for i in 0..=1 {
            let out = propagate(
                &p,
                none.clone(),
                &[lit(-1)],
                AbstractionIndex(i),
                UnitMode::WithReduction,
            );
            assert_eq!(out, PropagationOutcome::Stable(vec![lit(-1)]));
            let out = propagate_naive(
                &p,
                none.clone(),
                &[lit(-1)],
                AbstractionIndex(i),
                UnitMode::WithReduction,
            );
            assert_eq!(out, PropagationOutcome::Stable(vec![lit(-1)]));
        }
    }

    #[test]
    fn empty_clause_conflicts() {
        let p = prefix(&[(Quant::Exists, &[1])]);
        let cs: Vec<Vec<Lit>> = vec![vec![]];
        let view = || cs.iter().map(|c| c.as_slice());
        assert!(propagate_naive(&p, view(), &[], AbstractionIndex(0), UnitMode::Plain).is_conflict());
        assert!(propagate(&p, view(), &[], AbstractionIndex(0), UnitMode::Plain).is_conflict());
    }

    #[test]
    fn chain_through_watched_clauses() {
        // exists 1 2 3 4: (-1 | 2), (-2 | 3), (-3 | -1 | 4), (-4 | -1)
        let p = prefix(&[(Quant::Exists, &[1, 2, 3, 4])]);
        let cs = cls(&[&[-1, 2], &[-2, 3], &[-3, -1, 4], &[-4, -1]]);
        let mut engine = Propagator::with_clauses(&p, cs.iter().map(|c| c.as_slice()));
        let full = AbstractionIndex::full(&p);
        assert!(engine.conflicts(&[lit(1)], full, UnitMode::Plain, None));
        engine.check_watch_invariant().unwrap();
        // without the last clause the chain is stable
        let out = engine.propagate(&[lit(1)], full, UnitMode::Plain, Some(3));
        assert_eq!(sorted(out), Some(vec![lit(1), lit(2), lit(3), lit(4)]));
        engine.check_watch_invariant().unwrap();
    }

    #[test]
    fn watchers_restored_after_abstraction() {
        // forall 1, exists 2 3: (1 | 2 | 3); under i=1 the watch may move to 1
        let p = prefix(&[(Quant::Forall, &[1]), (Quant::Exists, &[2, 3])]);
        let cs = cls(&[&[1, 2, 3]]);
        let mut engine = Propagator::with_clauses(&p, cs.iter().map(|c| c.as_slice()));
        let out = engine.propagate(&[lit(-2)], AbstractionIndex(1), UnitMode::WithReduction, None);
        assert_eq!(sorted(out), Some(vec![lit(-2)]));
        engine.check_watch_invariant().unwrap();
        let out = engine.propagate(&[lit(-2), lit(-1)], AbstractionIndex(1), UnitMode::WithReduction, None);
        assert_eq!(sorted(out), set(&[-2, -1, 3]));
        engine.check_watch_invariant().unwrap();
    }

    #[test]
    fn removed_clauses_take_no_part() {
        let p = prefix(&[(Quant::Exists, &[1, 2])]);
        let cs = cls(&[&[-1], &[1, 2]]);
        let mut engine = Propagator::with_clauses(&p, cs.iter().map(|c| c.as_slice()));
        let full = AbstractionIndex::full(&p);
        assert!(engine.conflicts(&[lit(1)], full, UnitMode::Plain, None));
        engine.remove_clause(0);
        assert!(!engine.conflicts(&[lit(1)], full, UnitMode::Plain, None));
        assert!(engine.conflicts(&[lit(-2), lit(-1)], full, UnitMode::Plain, None));
        engine.check_watch_invariant().unwrap();
    }
}
