//! The label space: the three referential properties plus the gold-only
//! "other" marker.

use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

/// Referential property of a noun phrase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Indefinite,
    Definite,
    Generic,
}

impl Category {
    /// Column order used everywhere a triple is laid out.
    pub const ALL: [Category; 3] = [Category::Indefinite, Category::Definite, Category::Generic];

    /// Preference order for breaking exact ties (descending corpus frequency).
    pub const TIE_BREAK: [Category; 3] =
        [Category::Definite, Category::Indefinite, Category::Generic];

    pub fn index(self) -> usize {
        match self {
            Category::Indefinite => 0,
            Category::Definite => 1,
            Category::Generic => 2,
        }
    }

    /// Short code used in every file format (`indef`, `def`, `gen`).
    pub fn code(self) -> &'static str {
        match self {
            Category::Indefinite => "indef",
            Category::Definite => "def",
            Category::Generic => "gen",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Indefinite => "indefinite",
            Category::Definite => "definite",
            Category::Generic => "generic",
        }
    }

    /// Picks the category with the largest score among those accepted by
    /// `admissible`, breaking ties by [`Category::TIE_BREAK`].
    pub fn argmax_by<T, F>(scores: &PerCategory<T>, mut admissible: F) -> Option<Category>
    where
        T: PartialOrd,
        F: FnMut(Category) -> bool,
    {
        let mut best: Option<Category> = None;
        for c in Category::TIE_BREAK {
            if !admissible(c) {
                continue;
            }
            match best {
                Some(b) if !(scores[c] > scores[b]) => {}
                _ => best = Some(c),
            }
        }
        best
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown category `{0}`")]
pub struct UnknownCategory(pub String);

impl FromStr for Category {
    type Err = UnknownCategory;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "indef" | "indefinite" => Ok(Category::Indefinite),
            "def" | "definite" => Ok(Category::Definite),
            "gen" | "generic" => Ok(Category::Generic),
            other => Err(UnknownCategory(other.to_string())),
        }
    }
}

/// A gold annotation: a real category, or the "ambiguous" marker that never
/// appears as a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GoldLabel {
    Category(Category),
    Other,
}

impl GoldLabel {
    pub fn code(self) -> &'static str {
        match self {
            GoldLabel::Category(c) => c.code(),
            GoldLabel::Other => "other",
        }
    }

    pub fn category(self) -> Option<Category> {
        match self {
            GoldLabel::Category(c) => Some(c),
            GoldLabel::Other => None,
        }
    }
}

impl From<Category> for GoldLabel {
    fn from(c: Category) -> Self {
        GoldLabel::Category(c)
    }
}

impl FromStr for GoldLabel {
    type Err = UnknownCategory;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "other" => Ok(GoldLabel::Other),
            _ => s.parse().map(GoldLabel::Category),
        }
    }
}

impl fmt::Display for GoldLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GoldLabel::Category(c) => c.fmt(f),
            GoldLabel::Other => f.write_str("other"),
        }
    }
}

/// One value per category, indexable by [`Category`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct PerCategory<T>(pub [T; 3]);

impl<T> PerCategory<T> {
    pub fn new(indefinite: T, definite: T, generic: T) -> Self {
        PerCategory([indefinite, definite, generic])
    }

    pub fn from_fn<F: FnMut(Category) -> T>(mut f: F) -> Self {
        PerCategory([
            f(Category::Indefinite),
            f(Category::Definite),
            f(Category::Generic),
        ])
    }

    pub fn map<U, F: FnMut(&T) -> U>(&self, mut f: F) -> PerCategory<U> {
        PerCategory([f(&self.0[0]), f(&self.0[1]), f(&self.0[2])])
    }

    pub fn iter(&self) -> impl Iterator<Item = (Category, &T)> {
        Category::ALL.into_iter().zip(self.0.iter())
    }
}

impl<T> Index<Category> for PerCategory<T> {
    type Output = T;

    fn index(&self, c: Category) -> &T {
        &self.0[c.index()]
    }
}

impl<T> IndexMut<Category> for PerCategory<T> {
    fn index_mut(&mut self, c: Category) -> &mut T {
        &mut self.0[c.index()]
    }
}
