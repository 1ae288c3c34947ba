//! Random asset patterns and an independent matcher built on `regex`.

use rand::Rng;
use taf_twin::procgen::{AssetPattern, AssetSet, AssetSets};

pub const SET_NAMES: [&str; 3] = ["A", "B", "C"];

pub fn sets() -> AssetSets {
    [
        AssetSet::new("A", &[("a1", 3.0), ("a2", 1.2)]),
        AssetSet::new("B", &[("b1", 0.8)]),
        AssetSet::new("C", &[("c1", 2.5), ("c2", 4.0), ("c3", 0.5)]),
    ]
    .into_iter()
    .map(|s| (s.name.clone(), s))
    .collect()
}

/// Pattern of at most `depth` nested operators over [`SET_NAMES`].
pub fn random_pattern(rng: &mut impl Rng, depth: u32) -> AssetPattern {
    let leaf = |rng: &mut dyn rand::RngCore| {
        AssetPattern::set(SET_NAMES[rng.gen_range(0..SET_NAMES.len())])
    };
    if depth == 0 || rng.gen_bool(0.3) {
        return leaf(rng);
    }
    let inner = |rng: &mut _| Box::new(random_pattern(rng, depth - 1));
    match rng.gen_range(0..5) {
        0 => AssetPattern::Star(inner(rng)),
        1 => AssetPattern::Plus(inner(rng)),
        2 => AssetPattern::Optional(inner(rng)),
        3 => AssetPattern::Alternation((0..rng.gen_range(2..4)).map(|_| *inner(rng)).collect()),
        _ => AssetPattern::Concatenation((0..rng.gen_range(2..4)).map(|_| *inner(rng)).collect()),
    }
}

/// Translation to a `regex` crate expression over set names.
pub fn to_regex(p: &AssetPattern) -> String {
    match p {
        AssetPattern::Set(n) => regex::escape(n),
        AssetPattern::Star(x) => format!("(?:{})*", to_regex(x)),
        AssetPattern::Plus(x) => format!("(?:{})+", to_regex(x)),
        AssetPattern::Optional(x) => format!("(?:{})?", to_regex(x)),
        AssetPattern::Alternation(xs) => format!(
            "(?:{})",
            xs.iter().map(to_regex).collect::<Vec<_>>().join("|")
        ),
        AssetPattern::Concatenation(xs) => {
            xs.iter().map(|x| format!("(?:{})", to_regex(x))).collect()
        }
    }
}

pub fn matcher(p: &AssetPattern) -> regex::Regex {
    regex::Regex::new(&format!("^{}$", to_regex(p))).expect("translated pattern is a valid regex")
}
