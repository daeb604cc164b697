//! Downstream uses of a referential property: English article choice and the
//! coreference-candidate filter.

use std::fmt;

use crate::category::Category;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Article {
    /// "a/an"
    Indefinite,
    /// "the"
    Definite,
    None,
}

impl Article {
    pub fn code(self) -> &'static str {
        match self {
            Article::Indefinite => "a",
            Article::Definite => "the",
            Article::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArticleSuggestion {
    choices: Vec<Article>,
}

impl ArticleSuggestion {
    pub fn choices(&self) -> &[Article] {
        &self.choices
    }

    pub fn is_ambiguous(&self) -> bool {
        self.choices.len() > 1
    }
}

impl fmt::Display for ArticleSuggestion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let codes: Vec<&str> = self.choices.iter().map(|a| a.code()).collect();
        f.write_str(&codes.join("|"))
    }
}

/// Generic noun phrases admit every realization, so the suggestion is left
/// ambiguous for them.
pub fn suggest_article(category: Category, plural: bool) -> ArticleSuggestion {
    let choices = match (category, plural) {
        (Category::Indefinite, false) => vec![Article::Indefinite],
        (Category::Indefinite, true) => vec![Article::None],
        (Category::Definite, _) => vec![Article::Definite],
        (Category::Generic, _) => vec![Article::Indefinite, Article::Definite, Article::None],
    };
    ArticleSuggestion { choices }
}

/// Only a definite noun phrase can refer back to an earlier one.
pub fn can_corefer(category: Category) -> bool {
    category == Category::Definite
}
