//! Meaningful names for Name-mode workbooks.

use std::collections::BTreeSet;

use crate::formula::looks_like_address;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NameRole {
    Input,
    Range,
    Function,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("label {label:?} leaves nothing to name after stripping")]
pub struct EmptyAfterStrip {
    pub label: String,
}

/// `"Add Unappropriated profits from last year"` as an input becomes
/// `UnappropriatedProfitsFromLastYearIn`.
pub fn derive_name(label: &str, role: NameRole) -> Result<String, EmptyAfterStrip> {
    let mut text = label.trim();
    text = text.strip_suffix(" *").unwrap_or(text).trim_end();
    for prefix in ["Add ", "Less "] {
        if let Some(rest) = text.strip_prefix(prefix) {
            text = rest;
            break;
        }
    }
    let mut name = String::new();
    for word in text.split_whitespace() {
        let mut chars = word.chars().filter(|c| c.is_ascii_alphanumeric());
        if let Some(first) = chars.next() {
            name.push(first.to_ascii_uppercase());
            name.extend(chars);
        }
    }
    if name.is_empty() {
        return Err(EmptyAfterStrip {
            label: label.to_string(),
        });
    }
    if matches!(role, NameRole::Input | NameRole::Range) {
        name.push_str("In");
    }
    Ok(name)
}

/// Hands out unique names, appending `2`, `3`, ... on collision. Names
/// that would read as cell addresses or keywords get a trailing `_`, and a
/// leading digit gets a `_` prefix.
#[derive(Debug, Default)]
pub struct NameAllocator {
    used: BTreeSet<String>,
}

impl NameAllocator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn allocate(&mut self, base: &str) -> String {
        let base = sanitize(base);
        let mut name = base.clone();
        let mut n = 2;
        while self.used.contains(&name.to_ascii_uppercase()) {
            name = sanitize(&format!("{base}{n}"));
            n += 1;
        }
        self.used.insert(name.to_ascii_uppercase());
        name
    }
}

/// Makes `name` usable as a formula identifier.
pub fn sanitize(name: &str) -> String {
    let mut out = String::new();
    if name.starts_with(|c: char| c.is_ascii_digit()) || name.is_empty() {
        out.push('_');
    }
    out.push_str(name);
    if looks_like_address(&out) || crate::model::is_keyword(&out) {
        out.push('_');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(derive_name("Sales", NameRole::Input).unwrap(), "SalesIn");
        assert_eq!(
            derive_name("Less Total appropriations *", NameRole::Function).unwrap(),
            "TotalAppropriations"
        );
        assert_eq!(
            derive_name("Add Unappropriated profits from last year", NameRole::Input).unwrap(),
            "UnappropriatedProfitsFromLastYearIn"
        );
        assert_eq!(
            derive_name("Expenses", NameRole::Range).unwrap(),
            "ExpensesIn"
        );
        assert_eq!(
            derive_name("Profit (loss), net", NameRole::Function).unwrap(),
            "ProfitLossNet"
        );
    }

    #[test]
    fn empty_after_strip() {
        assert!(derive_name("Add (*) *", NameRole::Function).is_err());
        assert!(derive_name("--", NameRole::Input).is_err());
    }

    #[test]
    fn collisions_and_addresses() {
        let mut a = NameAllocator::new();
        assert_eq!(a.allocate("Sales"), "Sales");
        assert_eq!(a.allocate("Sales"), "Sales2");
        assert_eq!(a.allocate("Sales"), "Sales3");
        assert_eq!(a.allocate("Q1"), "Q1_");
        assert_eq!(a.allocate("2024Total"), "_2024Total");
        assert_eq!(a.allocate("Sum"), "Sum_");
        assert_eq!(a.allocate("SALES"), "SALES4");
    }
}
