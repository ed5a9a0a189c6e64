//! Safety properties: boolean C-subset expressions over kernel variables.

use crate::error::Result;
use crate::minic;

/// A property to verify, e.g. `queue[head].size > 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Property {
    pub raw_text: String,
    /// Variables named by the expression; filled in by the slicer.
    pub variables: Vec<String>,
}

impl Property {
    pub fn new(raw_text: impl Into<String>) -> Self {
        Property {
            raw_text: raw_text.into(),
            variables: Vec::new(),
        }
    }

    /// All identifiers the expression reads, in source order, deduplicated.
    /// Fails if the text does not parse as a C-subset boolean expression.
    pub fn identifiers(&self) -> Result<Vec<String>> {
        let raw = minic::expression_identifiers(&self.raw_text, "<property>")?;
        let mut seen = std::collections::BTreeSet::new();
        Ok(raw.into_iter().filter(|i| seen.insert(i.clone())).collect())
    }
}
