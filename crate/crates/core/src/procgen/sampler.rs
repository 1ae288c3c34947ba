//! Asset sampling along linear spans: random, round-robin and pattern-driven.
//!
//! All strategies fill greedily from left to right against a length budget.
//! The pattern sampler reserves the minimum width of every mandatory element
//! still to come, so a greedy `*` never starves a later `+` or bare set.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::pattern::AssetPattern;
use super::ProcgenError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetMember {
    pub asset_id: String,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetSet {
    pub name: String,
    pub members: Vec<AssetMember>,
}

impl AssetSet {
    pub fn new(name: &str, members: &[(&str, f64)]) -> Self {
        Self {
            name: name.to_string(),
            members: members
                .iter()
                .map(|(id, w)| AssetMember {
                    asset_id: id.to_string(),
                    width: *w,
                })
                .collect(),
        }
    }

    pub fn check(&self) -> Result<(), ProcgenError> {
        if self.members.is_empty() {
            return Err(ProcgenError::InvalidSet(format!(
                "set {} is empty",
                self.name
            )));
        }
        if let Some(m) = self
            .members
            .iter()
            .find(|m| !(m.width > 0.0 && m.width.is_finite()))
        {
            return Err(ProcgenError::InvalidSet(format!(
                "set {}: asset {} has width {}",
                self.name, m.asset_id, m.width
            )));
        }
        Ok(())
    }

    fn min_width(&self) -> f64 {
        self.members
            .iter()
            .map(|m| m.width)
            .fold(f64::INFINITY, f64::min)
    }
}

pub type AssetSets = BTreeMap<String, AssetSet>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub asset_id: String,
    pub set: String,
    /// Offset of the asset's start along the span (m).
    pub start: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum SamplingStrategy {
    Random { set: String },
    RoundRobin { set: String },
    Regex { pattern: String },
}

struct Sampler<'a> {
    sets: &'a AssetSets,
    rng: ChaCha8Rng,
    out: Vec<Placement>,
    cursor: f64,
}

fn lookup<'a>(sets: &'a AssetSets, name: &str) -> Result<&'a AssetSet, ProcgenError> {
    sets.get(name)
        .ok_or_else(|| ProcgenError::UnknownSet(name.to_string()))
}

fn min_width(p: &AssetPattern, sets: &AssetSets) -> Result<f64, ProcgenError> {
    Ok(match p {
        AssetPattern::Set(n) => lookup(sets, n)?.min_width(),
        AssetPattern::Star(_) | AssetPattern::Optional(_) => 0.0,
        AssetPattern::Plus(x) => min_width(x, sets)?,
        AssetPattern::Concatenation(xs) => {
            let mut sum = 0.0;
            for x in xs {
                sum += min_width(x, sets)?;
            }
            sum
        }
        AssetPattern::Alternation(xs) => {
            let mut m = f64::INFINITY;
            for x in xs {
                m = m.min(min_width(x, sets)?);
            }
            m
        }
    })
}

impl Sampler<'_> {
    fn fits(&self, width: f64, limit: f64) -> bool {
        self.cursor + width <= limit
    }

    fn place(&mut self, set: &AssetSet, member: usize) {
        let m = &set.members[member];
        self.out.push(Placement {
            asset_id: m.asset_id.clone(),
            set: set.name.clone(),
            start: self.cursor,
            width: m.width,
        });
        self.cursor += m.width;
    }

    fn snapshot(&self) -> (usize, f64) {
        (self.out.len(), self.cursor)
    }

    fn restore(&mut self, snap: (usize, f64)) {
        self.out.truncate(snap.0);
        self.cursor = snap.1;
    }

    fn sample(&mut self, p: &AssetPattern, limit: f64) -> Result<(), ProcgenError> {
        match p {
            AssetPattern::Set(name) => {
                let set = lookup(self.sets, name)?;
                let eligible: Vec<usize> = (0..set.members.len())
                    .filter(|&i| self.fits(set.members[i].width, limit))
                    .collect();
                let &pick = eligible.choose(&mut self.rng).ok_or_else(|| {
                    ProcgenError::BudgetExhausted {
                        element: name.clone(),
                        remaining: limit - self.cursor,
                    }
                })?;
                self.place(set, pick);
                Ok(())
            }
            AssetPattern::Star(x) => self.fill(x, limit),
            AssetPattern::Plus(x) => {
                self.sample(x, limit)?;
                self.fill(x, limit)
            }
            AssetPattern::Optional(x) => {
                if self.fits(min_width(x, self.sets)?, limit) && self.rng.gen_bool(0.5) {
                    let snap = self.snapshot();
                    if self.sample(x, limit).is_err() {
                        self.restore(snap);
                    }
                }
                Ok(())
            }
            AssetPattern::Alternation(xs) => {
                let mut eligible = Vec::new();
                for x in xs {
                    if self.fits(min_width(x, self.sets)?, limit) {
                        eligible.push(x);
                    }
                }
                let &branch = eligible.choose(&mut self.rng).ok_or_else(|| {
                    ProcgenError::BudgetExhausted {
                        element: p.to_string(),
                        remaining: limit - self.cursor,
                    }
                })?;
                self.sample(branch, limit)
            }
            AssetPattern::Concatenation(xs) => {
                let mins = xs
                    .iter()
                    .map(|x| min_width(x, self.sets))
                    .collect::<Result<Vec<_>, _>>()?;
                for (i, x) in xs.iter().enumerate() {
                    let reserve: f64 = mins[i + 1..].iter().sum();
                    self.sample(x, limit - reserve)?;
                }
                Ok(())
            }
        }
    }

    /// Repeats `x` while it still fits and makes progress.
    fn fill(&mut self, x: &AssetPattern, limit: f64) -> Result<(), ProcgenError> {
        let min = min_width(x, self.sets)?;
        loop {
            if !self.fits(min, limit) {
                return Ok(());
            }
            let snap = self.snapshot();
            match self.sample(x, limit) {
                Ok(()) if self.out.len() > snap.0 => continue,
                Ok(()) => return Ok(()),
                Err(ProcgenError::BudgetExhausted { .. }) => {
                    self.restore(snap);
                    return Ok(());
                }
                Err(e) => return Err(e),
            }
        }
    }
}

fn check_inputs(pattern: &AssetPattern, sets: &AssetSets, budget: f64) -> Result<(), ProcgenError> {
    if !(budget >= 0.0) {
        return Err(ProcgenError::InvalidBudget(budget));
    }
    for name in pattern.set_names() {
        lookup(sets, &name)?.check()?;
    }
    Ok(())
}

/// Samples a sequence accepted by `pattern` whose widths sum to at most
/// `budget`. Deterministic for a fixed seed.
pub fn sample_assets(
    pattern: &AssetPattern,
    sets: &AssetSets,
    budget: f64,
    seed: u64,
) -> Result<Vec<Placement>, ProcgenError> {
    check_inputs(pattern, sets, budget)?;
    let mut s = Sampler {
        sets,
        rng: ChaCha8Rng::seed_from_u64(seed),
        out: Vec::new(),
        cursor: 0.0,
    };
    s.sample(pattern, budget)?;
    Ok(s.out)
}

/// Uniform member choice among those that still fit, until none fits.
pub fn sample_random(
    set: &AssetSet,
    budget: f64,
    seed: u64,
) -> Result<Vec<Placement>, ProcgenError> {
    let mut sets = AssetSets::new();
    sets.insert(set.name.clone(), set.clone());
    sample_assets(
        &AssetPattern::Star(Box::new(AssetPattern::set(&set.name))),
        &sets,
        budget,
        seed,
    )
}

/// Members in cyclic index order until the next one does not fit.
pub fn sample_round_robin(set: &AssetSet, budget: f64) -> Result<Vec<Placement>, ProcgenError> {
    set.check()?;
    if !(budget >= 0.0) {
        return Err(ProcgenError::InvalidBudget(budget));
    }
    let mut out = Vec::new();
    let mut cursor = 0.0;
    for i in 0.. {
        let m = &set.members[i % set.members.len()];
        if cursor + m.width > budget {
            break;
        }
        out.push(Placement {
            asset_id: m.asset_id.clone(),
            set: set.name.clone(),
            start: cursor,
            width: m.width,
        });
        cursor += m.width;
    }
    Ok(out)
}

pub fn sample_with(
    strategy: &SamplingStrategy,
    sets: &AssetSets,
    budget: f64,
    seed: u64,
) -> Result<Vec<Placement>, ProcgenError> {
    match strategy {
        SamplingStrategy::Random { set } => sample_random(lookup(sets, set)?, budget, seed),
        SamplingStrategy::RoundRobin { set } => sample_round_robin(lookup(sets, set)?, budget),
        SamplingStrategy::Regex { pattern } => {
            sample_assets(&super::parse_pattern(pattern)?, sets, budget, seed)
        }
    }
}
