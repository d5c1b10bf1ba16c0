//! Deterministic keyword extractor used when no language model is available.
//!
//! The sentence is cut into clauses at punctuation and connectives ("and",
//! "while", "then", ...). A clause yields a pair when it contains an
//! interaction verb; the phrase runs from the verb to the end of the clause.
//! Limb verbs need an explicit sided mention ("left hand", "both feet") in the
//! same clause; torso and pelvis verbs do not.

use super::validate::canonicalize_part;
use super::{InteractionPair, InteractionSpec};
use crate::motion::BodyPart;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VerbKind {
    Hand,
    Foot,
    Torso,
    Pelvis,
}

const VERBS: &[(VerbKind, &[&str])] = &[
    (VerbKind::Hand, &["wave", "waves", "waving", "waved"]),
    (VerbKind::Hand, &["wipe", "wipes", "wiping", "wiped"]),
    (VerbKind::Hand, &["throw", "throws", "throwing", "threw"]),
    (VerbKind::Hand, &["pick", "picks", "picking", "picked"]),
    (VerbKind::Hand, &["grab", "grabs", "grabbing", "grabbed"]),
    (VerbKind::Hand, &["hold", "holds", "holding", "held"]),
    (VerbKind::Hand, &["lift", "lifts", "lifting", "lifted"]),
    (VerbKind::Hand, &["carry", "carries", "carrying", "carried"]),
    (VerbKind::Hand, &["punch", "punches", "punching", "punched"]),
    (VerbKind::Hand, &["push", "pushes", "pushing", "pushed"]),
    (VerbKind::Hand, &["pull", "pulls", "pulling", "pulled"]),
    (VerbKind::Hand, &["touch", "touches", "touching", "touched"]),
    (VerbKind::Hand, &["clean", "cleans", "cleaning", "cleaned"]),
    (VerbKind::Hand, &["raise", "raises", "raising", "raised"]),
    (VerbKind::Hand, &["swing", "swings", "swinging", "swung"]),
    (VerbKind::Hand, &["shake", "shakes", "shaking", "shook"]),
    (VerbKind::Hand, &["drink", "drinks", "drinking", "drank"]),
    (VerbKind::Hand, &["pour", "pours", "pouring", "poured"]),
    (VerbKind::Hand, &["catch", "catches", "catching", "caught"]),
    (VerbKind::Hand, &["reach", "reaches", "reaching", "reached"]),
    (VerbKind::Hand, &["open", "opens", "opening", "opened"]),
    (VerbKind::Hand, &["close", "closes", "closing", "closed"]),
    (VerbKind::Hand, &["scratch", "scratches", "scratching", "scratched"]),
    (VerbKind::Hand, &["stir", "stirs", "stirring", "stirred"]),
    (VerbKind::Hand, &["brush", "brushes", "brushing", "brushed"]),
    (VerbKind::Hand, &["write", "writes", "writing", "wrote"]),
    (VerbKind::Hand, &["hit", "hits", "hitting"]),
    (VerbKind::Foot, &["kick", "kicks", "kicking", "kicked"]),
    (VerbKind::Foot, &["stomp", "stomps", "stomping", "stomped"]),
    (VerbKind::Foot, &["step", "steps", "stepping", "stepped"]),
    (VerbKind::Foot, &["tap", "taps", "tapping", "tapped"]),
    (VerbKind::Torso, &["bend", "bends", "bending", "bent"]),
    (VerbKind::Torso, &["bow", "bows", "bowing", "bowed"]),
    (VerbKind::Torso, &["lean", "leans", "leaning", "leaned"]),
    (VerbKind::Torso, &["twist", "twists", "twisting", "twisted"]),
    (VerbKind::Pelvis, &["sit", "sits", "sitting", "sat"]),
];

const CONNECTIVES: &[&str] = &["and", "while", "then", "as", "before", "after", "but"];

fn verb_kind(word: &str) -> Option<VerbKind> {
    VERBS
        .iter()
        .find(|(_, forms)| forms.contains(&word))
        .map(|&(k, _)| k)
}

/// Lowercased alphabetic tokens with their byte spans.
fn tokens(text: &str) -> Vec<(usize, usize, String)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_ascii_alphabetic() || c == '\'', start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i, text[s..i].to_ascii_lowercase()));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, text.len(), text[s..].to_ascii_lowercase()));
    }
    out
}

/// Byte spans of clauses.
fn clauses(sentence: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut seg_start = 0;
    let bytes = sentence.as_bytes();
    for i in 0..=bytes.len() {
        let at_end = i == bytes.len();
        if at_end || matches!(bytes[i], b',' | b';' | b'.' | b'!' | b'?' | b':') {
            if seg_start < i {
                let seg = &sentence[seg_start..i];
                let mut cur = seg_start;
                for (s, e, w) in tokens(seg) {
                    if CONNECTIVES.contains(&w.as_str()) {
                        spans.push((cur, seg_start + s));
                        cur = seg_start + e;
                    }
                }
                spans.push((cur, i));
            }
            seg_start = i + 1;
        }
    }
    spans
        .into_iter()
        .filter(|&(s, e)| !sentence[s..e].trim().is_empty())
        .collect()
}

/// First "left/right/both <body word>" mention within two tokens.
fn sided_mention(words: &[(usize, usize, String)]) -> Option<Vec<BodyPart>> {
    for (i, (_, _, w)) in words.iter().enumerate() {
        if !matches!(w.as_str(), "left" | "right" | "both") {
            continue;
        }
        for (_, _, noun) in words.iter().skip(i + 1).take(2) {
            if let Ok((parts, _)) = canonicalize_part(&format!("{w} {noun}")) {
                if parts.iter().all(|p| p.side().is_some()) {
                    return Some(parts);
                }
            }
        }
    }
    None
}

pub fn fallback_rule_extractor(sentence: &str) -> InteractionSpec {
    let mut pairs = Vec::new();
    for (start, end) in clauses(sentence) {
        let clause = &sentence[start..end];
        let words = tokens(clause);
        let Some((verb_at, kind)) = words
            .iter()
            .find_map(|(s, _, w)| verb_kind(w).map(|k| (*s, k)))
        else {
            continue;
        };
        let parts = match (sided_mention(&words), kind) {
            (Some(parts), _) => parts,
            (None, VerbKind::Torso) => vec![BodyPart::Torso],
            (None, VerbKind::Pelvis) => vec![BodyPart::Pelvis],
            (None, VerbKind::Hand | VerbKind::Foot) => continue,
        };
        let phrase = clause[verb_at..]
            .trim_end_matches(|c: char| c.is_whitespace() || c.is_ascii_punctuation())
            .to_string();
        for part in parts {
            pairs.push(InteractionPair {
                part,
                phrase: phrase.clone(),
            });
        }
    }
    if pairs.is_empty() {
        InteractionSpec::none(sentence)
    } else {
        InteractionSpec::new(sentence, pairs)
    }
}
