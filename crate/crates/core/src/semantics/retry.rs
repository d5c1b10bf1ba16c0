use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::client::LlmClient;
use super::prompt::build_prompt;
use super::validate::{parse_and_validate, Rejection};
use super::InteractionSpec;
use crate::error::{Error, Result};

/// Attempts per sentence before falling back to the 'none' spec.
pub const MAX_ATTEMPTS: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Accepted,
    /// Accepted after mapping part names onto the canonical choices.
    ContentAmended,
    FormatRejected,
    ContentRejected,
    TransportFailed,
}

impl Verdict {
    pub fn is_accepted(self) -> bool {
        matches!(self, Verdict::Accepted | Verdict::ContentAmended)
    }
}

/// One request/response exchange. Also the record type of fixture files
/// (one JSON object per line).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmTranscript {
    pub sentence: String,
    pub attempt: u8,
    pub prompt: String,
    /// Raw completion, or the transport error message.
    pub response: String,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extraction {
    pub spec: InteractionSpec,
    pub transcripts: Vec<LlmTranscript>,
}

/// Queries `client` up to three times; the first response passing
/// validation wins, otherwise the sentence is treated as non-interactive.
pub fn extract_with_retry(sentence: &str, client: &dyn LlmClient) -> Extraction {
    let mut transcripts = Vec::new();
    if sentence.trim().is_empty() {
        return Extraction {
            spec: InteractionSpec::none(sentence),
            transcripts,
        };
    }
    let prompt = build_prompt(sentence);
    for attempt in 1..=MAX_ATTEMPTS {
        let (response, verdict, detail, spec) = match client.complete(&prompt) {
            Err(Error::Transport(msg)) => (msg, Verdict::TransportFailed, None, None),
            Err(e) => (e.to_string(), Verdict::TransportFailed, None, None),
            Ok(text) => match parse_and_validate(&text, sentence) {
                Ok(v) => {
                    let verdict = if v.amended {
                        Verdict::ContentAmended
                    } else {
                        Verdict::Accepted
                    };
                    (text, verdict, None, Some(v.spec))
                }
                Err(r @ Rejection::Format(_)) => (text, Verdict::FormatRejected, Some(r.to_string()), None),
                Err(r @ Rejection::Content(_)) => (text, Verdict::ContentRejected, Some(r.to_string()), None),
            },
        };
        transcripts.push(LlmTranscript {
            sentence: sentence.to_string(),
            attempt,
            prompt: prompt.clone(),
            response,
            verdict,
            detail,
        });
        if let Some(spec) = spec {
            return Extraction { spec, transcripts };
        }
    }
    Extraction {
        spec: InteractionSpec::none(sentence),
        transcripts,
    }
}

pub fn save_transcripts(path: &Path, transcripts: &[LlmTranscript]) -> Result<()> {
    let mut out = String::new();
    for t in transcripts {
        out.push_str(&serde_json::to_string(t).expect("transcript serializes"));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_transcripts(path: &Path) -> Result<Vec<LlmTranscript>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let t: LlmTranscript =
                serde_json::from_str(l).map_err(|e| Error::data(path, format!("line {}: {e}", i + 1)))?;
            if !(1..=MAX_ATTEMPTS).contains(&t.attempt) {
                return Err(Error::data(path, format!("line {}: attempt {} out of range", i + 1, t.attempt)));
            }
            Ok(t)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::BodyPart;
    use crate::semantics::ScriptedClient;

    #[test]
    fn accepts_first_valid_response() {
        let client = ScriptedClient::always("right leg: kicks a ball");
        let ex = extract_with_retry("a person kicks a ball", &client);
        assert_eq!(ex.transcripts.len(), 1);
        assert_eq!(ex.spec.pairs()[0].part, BodyPart::RightLeg);
        assert_eq!(client.calls(), 1);
    }

    #[test]
    fn garbage_three_times_gives_none() {
        let client = ScriptedClient::always("I think it's the leg?");
        let ex = extract_with_retry("a person kicks a ball", &client);
        assert!(ex.spec.is_none());
        assert_eq!(ex.transcripts.len(), 3);
        assert_eq!(client.calls(), 3);
        assert!(ex.transcripts.iter().all(|t| t.verdict == Verdict::FormatRejected));
    }

    #[test]
    fn two_failures_then_none() {
        let client = ScriptedClient::new([
            Err("timeout".to_string()),
            Ok("wrist: kicks".to_string()),
            Ok("none".to_string()),
        ]);
        let ex = extract_with_retry("a person kicks a ball", &client);
        assert!(ex.spec.is_none());
        let verdicts: Vec<Verdict> = ex.transcripts.iter().map(|t| t.verdict).collect();
        assert_eq!(
            verdicts,
            vec![Verdict::TransportFailed, Verdict::ContentRejected, Verdict::Accepted]
        );
        assert_eq!(ex.transcripts[2].attempt, 3);
    }

    #[test]
    fn transcripts_round_trip() {
        let client = ScriptedClient::new([Ok("nope".to_string()), Ok("left arm: waves".to_string())]);
        let ex = extract_with_retry("a person waves", &client);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        save_transcripts(&path, &ex.transcripts).unwrap();
        assert_eq!(load_transcripts(&path).unwrap(), ex.transcripts);
    }
}
