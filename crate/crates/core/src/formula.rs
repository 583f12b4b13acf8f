//! PCNF data model: variables, literals, quantifier prefix and clause matrix.

use std::fmt;
use std::ops::Not;

use thiserror::Error;

/// A propositional variable, identified by its external (QDIMACS) number.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Var(u32);

impl Var {
    /// Panics if `id` is zero or does not fit the literal encoding.
    pub fn new(id: u32) -> Var {
        assert!(id > 0 && id < (1 << 30), "variable id out of range: {id}");
        Var(id)
    }

    pub fn id(self) -> u32 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn positive(self) -> Lit {
        Lit::new(self, false)
    }

    pub fn negative(self) -> Lit {
        Lit::new(self, true)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A signed variable reference, packed as `var << 1 | negated`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: Var, negated: bool) -> Lit {
        Lit(var.0 << 1 | negated as u32)
    }

    /// Builds a literal from a signed DIMACS integer; `None` for 0.
    pub fn from_dimacs(value: i64) -> Option<Lit> {
        if value == 0 || value.unsigned_abs() >= (1 << 30) {
            return None;
        }
        Some(Lit::new(Var(value.unsigned_abs() as u32), value < 0))
    }

    pub fn to_dimacs(self) -> i64 {
        let v = self.var().0 as i64;
        if self.is_negated() {
            -v
        } else {
            v
        }
    }

    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    /// Dense index suitable for per-literal tables.
    pub fn code(self) -> usize {
        self.0 as usize
    }
}

impl Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Quant {
    Exists,
    Forall,
}

impl Quant {
    pub fn symbol(self) -> char {
        match self {
            Quant::Exists => 'e',
            Quant::Forall => 'a',
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Block {
    pub quant: Quant,
    pub vars: Vec<Var>,
}

impl Block {
    pub fn new(quant: Quant, vars: Vec<Var>) -> Block {
        Block { quant, vars }
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("variable {0} is bound in more than one quantifier block")]
    Rebound(Var),
}

/// Normalized quantifier prefix. Blocks are non-empty, adjacent blocks
/// alternate, and variables inside a block are sorted by id.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Prefix {
    blocks: Vec<Block>,
    // Indexed by variable id; 0 means unbound.
    levels: Vec<u32>,
}

impl Prefix {
    pub fn new(blocks: Vec<Block>) -> Result<Prefix, FormulaError> {
        let mut merged: Vec<Block> = Vec::with_capacity(blocks.len());
        for block in blocks {
            if block.vars.is_empty() {
                continue;
            }
            match merged.last_mut() {
                Some(last) if last.quant == block.quant => last.vars.extend(block.vars),
                _ => merged.push(block),
            }
        }
        let max_var = merged
            .iter()
            .flat_map(|b| b.vars.iter())
            .map(|v| v.index())
            .max()
            .unwrap_or(0);
        let mut levels = vec![0u32; max_var + 1];
        for (i, block) in merged.iter_mut().enumerate() {
            block.vars.sort_unstable();
            for w in block.vars.windows(2) {
                if w[0] == w[1] {
                    return Err(FormulaError::Rebound(w[0]));
                }
            }
            for &v in &block.vars {
                if levels[v.index()] != 0 {
                    return Err(FormulaError::Rebound(v));
                }
                levels[v.index()] = i as u32 + 1;
            }
        }
        Ok(Prefix { blocks: merged, levels })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> u32 {
        self.blocks.len() as u32
    }

    /// Nesting level of `var` (1-based), or 0 when unbound.
    pub fn level(&self, var: Var) -> u32 {
        self.levels.get(var.index()).copied().unwrap_or(0)
    }

    pub fn quant(&self, var: Var) -> Option<Quant> {
        match self.level(var) {
            0 => None,
            l => Some(self.blocks[l as usize - 1].quant),
        }
    }

    pub fn is_bound(&self, var: Var) -> bool {
        self.level(var) != 0
    }

    pub fn is_existential(&self, var: Var) -> bool {
        self.quant(var) == Some(Quant::Exists)
    }

    pub fn is_universal(&self, var: Var) -> bool {
        self.quant(var) == Some(Quant::Forall)
    }

    /// Largest bound variable id (0 for the empty prefix).
    pub fn max_var(&self) -> u32 {
        self.blocks
            .iter()
            .flat_map(|b| b.vars.iter())
            .map(|v| v.id())
            .max()
            .unwrap_or(0)
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.blocks.iter().flat_map(|b| b.vars.iter().copied())
    }

    /// Prefix with every variable rejected by `keep` removed, then renormalized.
    pub fn restricted(&self, keep: impl Fn(Var) -> bool) -> Prefix {
        let blocks = self
            .blocks
            .iter()
            .map(|b| Block::new(b.quant, b.vars.iter().copied().filter(|&v| keep(v)).collect()))
            .collect();
        Prefix::new(blocks).expect("restriction of a valid prefix is valid")
    }

    /// Canonical literal order inside clauses: (level, variable, sign).
    pub fn lit_key(&self, lit: Lit) -> (u32, u32, bool) {
        (self.level(lit.var()), lit.var().id(), lit.is_negated())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ClauseId(pub u32);

impl ClauseId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ClauseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Clause {
    id: ClauseId,
    lits: Vec<Lit>,
    live: bool,
}

impl Clause {
    pub fn id(&self) -> ClauseId {
        self.id
    }

    pub fn lits(&self) -> &[Lit] {
        &self.lits
    }

    pub fn is_live(&self) -> bool {
        self.live
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }
}

/// Sorts `lits` canonically and removes duplicates. Returns `false` if the
/// clause contains a complementary pair.
pub fn normalize_clause(prefix: &Prefix, lits: &mut Vec<Lit>) -> bool {
    lits.sort_unstable_by_key(|&l| prefix.lit_key(l));
    lits.dedup();
    lits.windows(2).all(|w| w[0].var() != w[1].var())
}

/// A quantified Boolean formula in prenex CNF.
///
/// Clause ids are positions in the clause vector. Every variable occurring in
/// a clause is bound by the prefix; free variables are moved into an
/// outermost existential block when the formula is built.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Pcnf {
    prefix: Prefix,
    clauses: Vec<Clause>,
    tautologies_dropped: usize,
}

impl Pcnf {
    /// Builds and normalizes a formula: free variables are bound existentially
    /// at the outermost level, duplicate literals merged, tautologies dropped.
    pub fn new(blocks: Vec<Block>, clauses: Vec<Vec<Lit>>) -> Result<Pcnf, FormulaError> {
        let bound = Prefix::new(blocks.clone())?;
        let mut free: Vec<Var> = clauses
            .iter()
            .flatten()
            .map(|l| l.var())
            .filter(|&v| !bound.is_bound(v))
            .collect();
        free.sort_unstable();
        free.dedup();
        let prefix = if free.is_empty() {
            bound
        } else {
            let mut all = Vec::with_capacity(blocks.len() + 1);
            all.push(Block::new(Quant::Exists, free));
            all.extend(blocks);
            Prefix::new(all)?
        };

        let mut kept = Vec::with_capacity(clauses.len());
        let mut tautologies_dropped = 0;
        for mut lits in clauses {
            if normalize_clause(&prefix, &mut lits) {
                kept.push(Clause {
                    id: ClauseId(kept.len() as u32),
                    lits,
                    live: true,
                });
            } else {
                tautologies_dropped += 1;
            }
        }
        Ok(Pcnf {
            prefix,
            clauses: kept,
            tautologies_dropped,
        })
    }

    pub fn prefix(&self) -> &Prefix {
        &self.prefix
    }

    /// All clauses, including dead ones.
    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn live_clauses(&self) -> impl Iterator<Item = &Clause> + '_ {
        self.clauses.iter().filter(|c| c.live)
    }

    pub fn clause(&self, id: ClauseId) -> &Clause {
        &self.clauses[id.index()]
    }

    pub fn num_live(&self) -> usize {
        self.live_clauses().count()
    }

    pub fn tautologies_dropped(&self) -> usize {
        self.tautologies_dropped
    }

    pub fn kill(&mut self, id: ClauseId) {
        self.clauses[id.index()].live = false;
    }

    pub fn has_empty_clause(&self) -> bool {
        self.live_clauses().any(|c| c.is_empty())
    }

    /// Whether `var` occurs in some live clause.
    pub fn occurring_vars(&self) -> Vec<bool> {
        let mut used = vec![false; self.prefix.max_var() as usize + 1];
        for c in self.live_clauses() {
            for l in c.lits() {
                used[l.var().index()] = true;
            }
        }
        used
    }

    /// Prefix restricted to variables that occur in live clauses.
    pub fn used_prefix(&self) -> Prefix {
        let used = self.occurring_vars();
        self.prefix.restricted(|v| used[v.index()])
    }

    /// Canonical form: dead clauses dropped, ids renumbered, unused variables
    /// removed from the prefix, literals re-sorted for the new levels.
    pub fn compacted(&self) -> Pcnf {
        let prefix = self.used_prefix();
        let clauses = self
            .live_clauses()
            .enumerate()
            .map(|(i, c)| {
                let mut lits = c.lits.clone();
                normalize_clause(&prefix, &mut lits);
                Clause {
                    id: ClauseId(i as u32),
                    lits,
                    live: true,
                }
            })
            .collect();
        Pcnf {
            prefix,
            clauses,
            tautologies_dropped: 0,
        }
    }

    /// Rebuilds a formula from an existing prefix and already-normalized
    /// clause bodies.
    pub(crate) fn from_parts(prefix: Prefix, clauses: Vec<Vec<Lit>>) -> Pcnf {
        let clauses = clauses
            .into_iter()
            .enumerate()
            .map(|(i, lits)| Clause {
                id: ClauseId(i as u32),
                lits,
                live: true,
            })
            .collect();
        Pcnf {
            prefix,
            clauses,
            tautologies_dropped: 0,
        }
    }
}

/// Size metrics: clauses, quantifier blocks, existential and universal
/// literal occurrences.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct FormulaStats {
    pub clauses: u64,
    pub qblocks: u64,
    pub existential_lits: u64,
    pub universal_lits: u64,
}

impl FormulaStats {
    pub fn literals(&self) -> u64 {
        self.existential_lits + self.universal_lits
    }
}

impl fmt::Display for FormulaStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "clauses={} qblocks={} elits={} ulits={}",
            self.clauses, self.qblocks, self.existential_lits, self.universal_lits
        )
    }
}

/// Counts over live clauses; blocks are counted after dropping variables
/// that no longer occur.
pub fn compute_stats(pcnf: &Pcnf) -> FormulaStats {
    let mut stats = FormulaStats {
        qblocks: pcnf.used_prefix().num_blocks() as u64,
        ..FormulaStats::default()
    };
    for c in pcnf.live_clauses() {
        stats.clauses += 1;
        for l in c.lits() {
            if pcnf.prefix().is_universal(l.var()) {
                stats.universal_lits += 1;
            } else {
                stats.existential_lits += 1;
            }
        }
    }
    stats
}

/// Remaining size relative to the original, in whole percent.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ReductionReport {
    pub clauses: u64,
    pub qblocks: u64,
    pub existential_lits: u64,
    pub universal_lits: u64,
}

impl fmt::Display for ReductionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "#cl={}% #qb={}% #el={}% #ul={}%",
            self.clauses, self.qblocks, self.existential_lits, self.universal_lits
        )
    }
}

fn percent(before: u64, after: u64) -> u64 {
    if before == 0 {
        return 100;
    }
    // half-up rounding of after * 100 / before
    (after * 200 + before) / (2 * before)
}

pub fn reduction_report(before: &FormulaStats, after: &FormulaStats) -> ReductionReport {
    ReductionReport {
        clauses: percent(before.clauses, after.clauses),
        qblocks: percent(before.qblocks, after.qblocks),
        existential_lits: percent(before.existential_lits, after.existential_lits),
        universal_lits: percent(before.universal_lits, after.universal_lits),
    }
}
