//! Prompt templates with named placeholders, shipped as versioned text
//! assets so renderings can be pinned by golden tests.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::GatewayError;

const GENERATOR_TEMPLATE: &str = include_str!("../../assets/prompts/generator.txt");
const DISCRIMINATOR_TEMPLATE: &str = include_str!("../../assets/prompts/discriminator.txt");
const DECOMPOSER_TEMPLATE: &str = include_str!("../../assets/prompts/decomposer.txt");

/// The three backend roles of the decomposition pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Generator,
    Discriminator,
    Decomposer,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Role::Generator => "generator",
            Role::Discriminator => "discriminator",
            Role::Decomposer => "decomposer",
        };
        f.write_str(s)
    }
}

/// A template whose `{name}` slots are filled by `render`.
#[derive(Debug, Clone)]
pub struct PromptTemplate {
    role: Role,
    text: &'static str,
}

impl PromptTemplate {
    /// The built-in template for a role.
    pub fn builtin(role: Role) -> Self {
        let text = match role {
            Role::Generator => GENERATOR_TEMPLATE,
            Role::Discriminator => DISCRIMINATOR_TEMPLATE,
            Role::Decomposer => DECOMPOSER_TEMPLATE,
        };
        Self { role, text }
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn text(&self) -> &str {
        self.text
    }
}

/// Substitutes every `{placeholder}` in the template. Fails with the
/// placeholder name when a binding is missing. Bound values are inserted
/// verbatim and never rescanned.
pub fn render_prompt(
    template: &PromptTemplate,
    bindings: &[(&str, &str)],
) -> Result<String, GatewayError> {
    let text = template.text;
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = after.find('}').ok_or_else(|| GatewayError::Template {
            placeholder: after.chars().take(24).collect(),
        })?;
        let name = &after[..close];
        let value = bindings
            .iter()
            .find(|(k, _)| *k == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| GatewayError::Template {
                placeholder: name.to_string(),
            })?;
        out.push_str(value);
        rest = &after[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Node texts are bound into single-line prompt slots; raw newlines would
/// break the delimiters the oracle backend relies on.
pub fn sanitize_node_text(text: &str) -> String {
    text.replace(['\n', '\r'], " ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decomposer_contains_both_texts() {
        let template = PromptTemplate::builtin(Role::Decomposer);
        let rendered = render_prompt(
            &template,
            &[
                ("relation_list", "1. R1: first"),
                ("node1_text", "a"),
                ("node2_text", "b"),
            ],
        )
        .unwrap();
        assert!(rendered.contains("Node 1: a, Node 2: b"));
        assert!(rendered.contains("1. R1: first"));
        assert!(!rendered.contains('{'));
    }

    #[test]
    fn missing_binding_names_placeholder() {
        let template = PromptTemplate::builtin(Role::Generator);
        let err = render_prompt(&template, &[]).unwrap_err();
        match err {
            GatewayError::Template { placeholder } => {
                assert_eq!(placeholder, "graph_description")
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn sanitize_strips_newlines() {
        assert_eq!(sanitize_node_text("a\nb\r\nc"), "a b  c");
    }
}
