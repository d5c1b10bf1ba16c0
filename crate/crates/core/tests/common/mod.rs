#![allow(dead_code)]

use std::path::Path;

use partmotion::motion::BodyPart;
use partmotion::semantics::{extract_with_retry, ScriptedClient, ScriptedReply};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Reply {
    Text(String),
    Error { error: String },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Expect {
    None(String),
    Pairs(Vec<(String, String)>),
}

#[derive(Debug, Deserialize)]
pub struct Case {
    pub name: String,
    pub sentence: String,
    pub responses: Vec<Reply>,
    pub expect: Expect,
    pub attempts: usize,
}

impl Case {
    pub fn expects_none(&self) -> bool {
        matches!(&self.expect, Expect::None(s) if s == "none")
    }
}

pub fn load_cases() -> Vec<Case> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/semantics_cases.jsonl");
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

/// Runs one case through the retry loop; returns a description of the
/// first mismatch.
pub fn check_case(case: &Case) -> Result<(), String> {
    let replies: Vec<ScriptedReply> = case
        .responses
        .iter()
        .map(|r| match r {
            Reply::Text(t) => Ok(t.clone()),
            Reply::Error { error } => Err(error.clone()),
        })
        .collect();
    let client = ScriptedClient::new(replies);
    let ex = extract_with_retry(&case.sentence, &client);
    if ex.transcripts.len() != case.attempts || client.calls() != case.attempts {
        return Err(format!("{}: {} attempts, expected {}", case.name, ex.transcripts.len(), case.attempts));
    }
    match &case.expect {
        Expect::None(_) => {
            if !ex.spec.is_none() {
                return Err(format!("{}: expected none, got {:?}", case.name, ex.spec));
            }
        }
        Expect::Pairs(pairs) => {
            let got: Vec<(String, String)> =
                ex.spec.pairs().iter().map(|p| (p.part.name().to_string(), p.phrase.clone())).collect();
            if &got != pairs {
                return Err(format!("{}: got {got:?}, expected {pairs:?}", case.name));
            }
            for (part, _) in pairs {
                part.parse::<BodyPart>().map_err(|_| format!("{}: bad expected part {part}", case.name))?;
            }
        }
    }
    Ok(())
}
