//! Format checking and content amendment of model responses.
//!
//! Grammar: the bare token `none`, or one `part: phrase` line per
//! interacting part (blank lines and a leading `- ` bullet are tolerated).
//! Part names outside the six choices are mapped through a joint-level
//! vocabulary; limbs must carry an explicit side.

use std::fmt;

use super::{InteractionPair, InteractionSpec};
use crate::motion::{BodyPart, Side};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rejection {
    /// The response does not follow the line grammar.
    Format(String),
    /// Well-formed, but a part cannot be mapped or a phrase is not in the sentence.
    Content(String),
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::Format(m) => write!(f, "format: {m}"),
            Rejection::Content(m) => write!(f, "content: {m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Validated {
    pub spec: InteractionSpec,
    /// At least one part name was mapped onto a canonical choice.
    pub amended: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Region {
    Arm,
    Leg,
    Torso,
    Pelvis,
}

// Longest entries first so "upper arm" wins over "arm".
const VOCABULARY: &[(&str, Region)] = &[
    ("upper body", Region::Torso),
    ("lower back", Region::Torso),
    ("upper arm", Region::Arm),
    ("collarbone", Region::Arm),
    ("clavicle", Region::Arm),
    ("shoulder", Region::Arm),
    ("forearm", Region::Arm),
    ("fingers", Region::Arm),
    ("finger", Region::Arm),
    ("elbow", Region::Arm),
    ("wrist", Region::Arm),
    ("thumb", Region::Arm),
    ("hands", Region::Arm),
    ("hand", Region::Arm),
    ("palm", Region::Arm),
    ("fist", Region::Arm),
    ("arms", Region::Arm),
    ("arm", Region::Arm),
    ("thigh", Region::Leg),
    ("ankle", Region::Leg),
    ("knee", Region::Leg),
    ("shin", Region::Leg),
    ("calf", Region::Leg),
    ("heel", Region::Leg),
    ("toes", Region::Leg),
    ("toe", Region::Leg),
    ("foot", Region::Leg),
    ("feet", Region::Leg),
    ("legs", Region::Leg),
    ("leg", Region::Leg),
    ("hip", Region::Leg),
    ("abdomen", Region::Torso),
    ("stomach", Region::Torso),
    ("spine", Region::Torso),
    ("chest", Region::Torso),
    ("torso", Region::Torso),
    ("trunk", Region::Torso),
    ("belly", Region::Torso),
    ("back", Region::Torso),
    ("neck", Region::Torso),
    ("head", Region::Torso),
    ("buttocks", Region::Pelvis),
    ("pelvis", Region::Pelvis),
    ("waist", Region::Pelvis),
    ("butt", Region::Pelvis),
];

/// Maps a free-form part name onto canonical parts.
///
/// Returns `Ok((parts, amended))`; `amended` is false when the name already
/// was one of the six choices. A sided region without `left`, `right` or
/// `both` is rejected rather than guessed.
pub fn canonicalize_part(raw: &str) -> Result<(Vec<BodyPart>, bool), String> {
    let norm = raw
        .trim()
        .to_ascii_lowercase()
        .replace(['_', '-'], " ")
        .trim_matches(|c: char| c == '"' || c == '\'' || c == '*' || c == '`')
        .to_string();
    let norm = norm.split_whitespace().collect::<Vec<_>>().join(" ");
    if let Ok(part) = norm.parse::<BodyPart>() {
        return Ok((vec![part], false));
    }
    let words: Vec<&str> = norm.split(' ').collect();
    let has = |w: &str| words.contains(&w);
    let sides: Vec<Side> = match (has("left") || has("l"), has("right") || has("r"), has("both")) {
        (true, true, _) | (_, _, true) => vec![Side::Left, Side::Right],
        (true, false, false) => vec![Side::Left],
        (false, true, false) => vec![Side::Right],
        (false, false, false) => vec![],
    };
    let padded = format!(" {norm} ");
    let region = VOCABULARY
        .iter()
        .find(|(word, _)| padded.contains(&format!(" {word} ")))
        .map(|&(_, r)| r)
        .ok_or_else(|| format!("cannot map body part {raw:?}"))?;
    let parts = match region {
        Region::Torso => vec![BodyPart::Torso],
        Region::Pelvis => vec![BodyPart::Pelvis],
        Region::Arm | Region::Leg if sides.is_empty() => {
            return Err(format!("body part {raw:?} needs a left/right side"));
        }
        Region::Arm => sides.into_iter().map(BodyPart::arm).collect(),
        Region::Leg => sides.into_iter().map(BodyPart::leg).collect(),
    };
    Ok((parts, true))
}

/// Finds `phrase` in `sentence` on word boundaries (ASCII case-insensitive)
/// and returns the sentence's own spelling of it.
fn locate_phrase<'s>(sentence: &'s str, phrase: &str) -> Option<&'s str> {
    if phrase.is_empty() {
        return None;
    }
    let hay = sentence.to_ascii_lowercase();
    let needle = phrase.to_ascii_lowercase();
    let is_word = |c: Option<char>| c.is_some_and(|c| c.is_alphanumeric());
    let bounded = |at: usize| {
        let end = at + needle.len();
        !(is_word(hay[..at].chars().next_back()) && is_word(needle.chars().next()))
            && !(is_word(hay[end..].chars().next()) && is_word(needle.chars().next_back()))
    };
    // Prefer an exact-case match, then any case.
    let exact = sentence.match_indices(phrase).map(|(at, _)| at).find(|&at| bounded(at));
    exact
        .or_else(|| hay.match_indices(&needle).map(|(at, _)| at).find(|&at| bounded(at)))
        .map(|at| &sentence[at..at + needle.len()])
}

fn is_none_token(s: &str) -> bool {
    let t = s
        .trim()
        .trim_matches(|c: char| c == '\'' || c == '"' || c == '.' || c == '`')
        .trim();
    t.eq_ignore_ascii_case("none")
}

pub fn parse_and_validate(response: &str, sentence: &str) -> Result<Validated, Rejection> {
    let lines: Vec<&str> = response
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    if lines.is_empty() {
        return Err(Rejection::Format("empty response".into()));
    }
    if lines.len() == 1 && is_none_token(lines[0]) {
        return Ok(Validated {
            spec: InteractionSpec::none(sentence),
            amended: false,
        });
    }

    let mut pairs = Vec::new();
    let mut amended = false;
    for line in lines {
        let line = line.strip_prefix("- ").unwrap_or(line);
        if is_none_token(line) {
            return Err(Rejection::Format("'none' mixed with part lines".into()));
        }
        let (part, phrase) = line
            .split_once(':')
            .ok_or_else(|| Rejection::Format(format!("line without ':' separator: {line:?}")))?;
        if part.trim().is_empty() {
            return Err(Rejection::Format(format!("missing body part in {line:?}")));
        }
        let phrase = phrase
            .trim()
            .trim_matches(|c: char| c == '"' || c == '\'' || c == '`')
            .trim();
        if phrase.is_empty() {
            return Err(Rejection::Format(format!("missing phrase in {line:?}")));
        }
        let (parts, mapped) = canonicalize_part(part).map_err(Rejection::Content)?;
        amended |= mapped;
        let found = locate_phrase(sentence, phrase)
            .or_else(|| phrase.strip_suffix('.').and_then(|p| locate_phrase(sentence, p.trim_end())))
            .ok_or_else(|| Rejection::Content(format!("phrase {phrase:?} is not in the sentence")))?;
        for part in parts {
            pairs.push(InteractionPair {
                part,
                phrase: found.to_string(),
            });
        }
    }
    Ok(Validated {
        spec: InteractionSpec::new(sentence, pairs),
        amended,
    })
}
