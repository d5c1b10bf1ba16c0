//! Interaction semantics: which body parts engage an object, and with which
//! phrase of the description.
//!
//! Extraction goes through a language model ([`extract_with_retry`]) with a
//! strict line grammar, canonicalization of part names and a bounded retry
//! budget, or through the deterministic keyword extractor
//! ([`fallback_rule_extractor`]) when no model is available.

mod client;
mod fallback;
mod prompt;
mod retry;
mod validate;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use client::{ChatConfig, HttpChatClient, LlmClient, ScriptedClient, ScriptedReply};
pub use fallback::fallback_rule_extractor;
pub use prompt::{build_prompt, QUESTION_MARKER};
pub use retry::{extract_with_retry, load_transcripts, save_transcripts, Extraction, LlmTranscript, Verdict, MAX_ATTEMPTS};
pub use validate::{canonicalize_part, parse_and_validate, Rejection, Validated};

use crate::motion::BodyPart;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InteractionPair {
    pub part: BodyPart,
    /// Verbatim substring of the source sentence.
    pub phrase: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionSpec {
    pairs: Vec<InteractionPair>,
    residual_text: String,
}

impl InteractionSpec {
    /// The "no interaction" spec; the whole sentence is residual text.
    pub fn none(sentence: &str) -> Self {
        Self {
            pairs: Vec::new(),
            residual_text: normalize_whitespace(sentence),
        }
    }

    /// Builds a spec and derives the residual text from `sentence`.
    pub fn new(sentence: &str, pairs: Vec<InteractionPair>) -> Self {
        let mut unique: Vec<InteractionPair> = Vec::with_capacity(pairs.len());
        for p in pairs {
            if !unique.contains(&p) {
                unique.push(p);
            }
        }
        let residual_text = split_residual(sentence, &unique);
        Self {
            pairs: unique,
            residual_text,
        }
    }

    pub fn is_none(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[InteractionPair] {
        &self.pairs
    }

    pub fn residual_text(&self) -> &str {
        &self.residual_text
    }

    pub fn parts(&self) -> BTreeSet<BodyPart> {
        self.pairs.iter().map(|p| p.part).collect()
    }

    /// Distinct phrases joined with `"; "`, the text encoded as the
    /// interaction instruction condition.
    pub fn instruction_text(&self) -> String {
        let mut seen: Vec<&str> = Vec::new();
        for p in &self.pairs {
            if !seen.contains(&p.phrase.as_str()) {
                seen.push(&p.phrase);
            }
        }
        seen.join("; ")
    }

    /// Renders the spec in the response grammar (`part: phrase` lines or `none`).
    pub fn to_response(&self) -> String {
        if self.is_none() {
            return "none".to_string();
        }
        self.pairs
            .iter()
            .map(|p| format!("{}: {}", p.part, p.phrase))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

pub(crate) fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// The sentence with every extracted phrase removed (first occurrence each),
/// whitespace collapsed.
pub fn split_residual(sentence: &str, pairs: &[InteractionPair]) -> String {
    let mut rest = sentence.to_string();
    for p in pairs {
        if p.phrase.is_empty() {
            continue;
        }
        if let Some(at) = rest.find(&p.phrase) {
            rest.replace_range(at..at + p.phrase.len(), " ");
        }
    }
    normalize_whitespace(&rest)
}
