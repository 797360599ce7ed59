use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Output classes of the classifier.
///
/// Variants are declared in alphabetical order so the derived `Ord` doubles as
/// the documented tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Career,
    Financial,
    Human,
    Other,
    Shopping,
    Social,
    Travel,
}

impl Category {
    /// The six modeled categories; `Other` is the residual and has no model.
    pub const MODELED: [Category; 6] = [
        Category::Career,
        Category::Financial,
        Category::Human,
        Category::Shopping,
        Category::Social,
        Category::Travel,
    ];

    pub const ALL: [Category; 7] = [
        Category::Career,
        Category::Financial,
        Category::Human,
        Category::Other,
        Category::Shopping,
        Category::Social,
        Category::Travel,
    ];

    pub const MACHINE_SUBCATEGORIES: [Category; 5] = [
        Category::Career,
        Category::Financial,
        Category::Shopping,
        Category::Social,
        Category::Travel,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Career => "career",
            Category::Financial => "financial",
            Category::Human => "human",
            Category::Other => "other",
            Category::Shopping => "shopping",
            Category::Social => "social",
            Category::Travel => "travel",
        }
    }

    pub fn is_machine(self) -> bool {
        self != Category::Human
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "career" => Ok(Category::Career),
            "financial" | "finance" => Ok(Category::Financial),
            "human" => Ok(Category::Human),
            "other" => Ok(Category::Other),
            "shopping" => Ok(Category::Shopping),
            "social" => Ok(Category::Social),
            "travel" => Ok(Category::Travel),
            other => Err(Error::config(format!("unknown category {other:?}"))),
        }
    }
}

/// Training label: a category, or the coarse `machine` label produced by
/// human/machine heuristics before a subcategory is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Category(Category),
    Machine,
}

impl Label {
    pub const HUMAN: Label = Label::Category(Category::Human);

    pub fn category(self) -> Option<Category> {
        match self {
            Label::Category(c) => Some(c),
            Label::Machine => None,
        }
    }

    /// Target for the binary model of `c`: positive on a match, negative
    /// otherwise, except that a coarse machine label says nothing about
    /// machine subcategories and is left out of their models.
    pub fn target_for(self, c: Category) -> Option<bool> {
        match self {
            Label::Category(own) => Some(own == c),
            Label::Machine if c == Category::Human => Some(false),
            Label::Machine => None,
        }
    }

    pub fn is_human(self) -> bool {
        self == Label::HUMAN
    }

    /// True for `machine` and for every machine subcategory.
    pub fn is_machine(self) -> bool {
        !self.is_human()
    }
}

impl From<Category> for Label {
    fn from(c: Category) -> Self {
        Label::Category(c)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Category(c) => c.fmt(f),
            Label::Machine => f.write_str("machine"),
        }
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case("machine") {
            Ok(Label::Machine)
        } else {
            s.parse().map(Label::Category)
        }
    }
}
