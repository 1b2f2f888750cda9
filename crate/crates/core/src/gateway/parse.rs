//! Parsers that turn free-form completion text into relation lists and
//! relation-index sets. Pure functions.

use std::collections::BTreeSet;

use super::GatewayError;

/// Extracts enumerated "N. Name: Description" items, tolerating "-"/"*"
/// bullets and bold markers. Lines without a bullet continue the previous
/// item's description. Order is preserved.
pub fn parse_relation_list(text: &str) -> Result<Vec<(String, String)>, GatewayError> {
    let mut items: Vec<(String, String)> = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        match strip_item_prefix(trimmed) {
            Some(body) => {
                if let Some((name, description)) = split_item(body) {
                    items.push((name, description));
                } else if let Some(last) = items.last_mut() {
                    append_continuation(&mut last.1, trimmed);
                }
            }
            None => {
                if let Some(last) = items.last_mut() {
                    append_continuation(&mut last.1, trimmed);
                }
            }
        }
    }
    if items.is_empty() {
        return Err(GatewayError::Parse {
            message: "no enumerated relation items found".into(),
            raw: text.to_string(),
        });
    }
    Ok(items)
}

/// Returns the item body when the line starts with an enumeration marker.
fn strip_item_prefix(line: &str) -> Option<&str> {
    if let Some(rest) = line.strip_prefix(['-', '*', '•']) {
        // "**Name**: ..." is a bold marker, not a bullet
        let rest = rest.strip_prefix('*').unwrap_or(rest);
        return Some(rest.trim_start());
    }
    let digits = line.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits > 0 {
        let rest = &line[digits..];
        if let Some(rest) = rest.strip_prefix(['.', ')']) {
            return Some(rest.trim_start());
        }
    }
    None
}

fn split_item(body: &str) -> Option<(String, String)> {
    let (name, description) = body.split_once(':')?;
    let name = name.trim_matches(|c: char| c == '*' || c == '_' || c.is_whitespace());
    if name.is_empty() {
        return None;
    }
    let description = description
        .trim_matches(|c: char| c == '*' || c.is_whitespace())
        .to_string();
    Some((name.to_string(), description))
}

fn append_continuation(description: &mut String, line: &str) {
    if !description.is_empty() {
        description.push(' ');
    }
    description.push_str(line.trim_matches(|c: char| c == '*' || c.is_whitespace()));
}

/// Extracts the relation indices named in a decomposer answer, matching
/// 1-based numbers in `[1, R]` and case-insensitive relation names. The
/// result is a nonempty subset of `[0, R)`.
pub fn parse_decomposition(
    text: &str,
    relation_names: &[String],
) -> Result<BTreeSet<usize>, GatewayError> {
    assert!(!relation_names.is_empty(), "R must be >= 1");
    let num_relations = relation_names.len();
    let mut set = BTreeSet::new();

    let lowered = text.to_lowercase();
    for (idx, name) in relation_names.iter().enumerate() {
        if lowered.contains(&name.to_lowercase()) {
            set.insert(idx);
        }
    }
    for token in text.split(|c: char| !c.is_ascii_digit()) {
        if token.is_empty() {
            continue;
        }
        if let Ok(value) = token.parse::<usize>() {
            if (1..=num_relations).contains(&value) {
                set.insert(value - 1);
            }
        }
    }

    if set.is_empty() {
        return Err(GatewayError::Parse {
            message: "no relation indices or names recognized".into(),
            raw: text.to_string(),
        });
    }
    Ok(set)
}
