//! Hand-scored conflict resolution: possibilities are conjoined, values are
//! summed, and the admissible category with the largest value wins.

use std::fmt;

use crate::category::{Category, PerCategory};
use crate::rules::Rule;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoreTriple {
    pub possibility: PerCategory<bool>,
    pub value: PerCategory<u32>,
}

impl Default for ScoreTriple {
    fn default() -> Self {
        ScoreTriple {
            possibility: PerCategory([true; 3]),
            value: PerCategory([0; 3]),
        }
    }
}

impl fmt::Display for ScoreTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for c in Category::ALL {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(
                f,
                "{} ({}, {})",
                c,
                u8::from(self.possibility[c]),
                self.value[c]
            )?;
        }
        Ok(())
    }
}

pub fn aggregate<'a, I>(fired: I) -> ScoreTriple
where
    I: IntoIterator<Item = &'a Rule>,
{
    let mut score = ScoreTriple::default();
    for rule in fired {
        for c in Category::ALL {
            let o = rule.outcomes[c];
            score.possibility[c] &= o.possible;
            score.value[c] += u32::from(o.value);
        }
    }
    score
}

/// Returns the decided category and whether the indefinite default was used.
pub fn decide_manual(score: &ScoreTriple, any_fired: bool) -> (Category, bool) {
    if !any_fired {
        return (Category::Indefinite, true);
    }
    match Category::argmax_by(&score.value, |c| score.possibility[c]) {
        Some(c) => (c, false),
        None => (Category::Indefinite, true),
    }
}
