//! Language model clients: an HTTP chat-completion client and a scripted
//! client that replays recorded responses.

use std::collections::{HashMap, VecDeque};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::prompt::QUESTION_MARKER;
use super::retry::{LlmTranscript, Verdict};
use crate::error::{Error, Result};

pub trait LlmClient {
    /// Sends one prompt and returns the raw completion text.
    fn complete(&self, prompt: &str) -> Result<String>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_timeout() -> u64 {
    60
}

impl Default for ChatConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-3.5-turbo".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            timeout_secs: default_timeout(),
        }
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatReply,
}

#[derive(Deserialize)]
struct ChatReply {
    content: Option<String>,
}

pub struct HttpChatClient {
    config: ChatConfig,
    api_key: String,
    agent: ureq::Agent,
}

impl HttpChatClient {
    /// Reads the API key from the configured environment variable.
    pub fn from_env(config: ChatConfig) -> Result<Self> {
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| Error::Config(format!("environment variable {} is not set", config.api_key_env)))?;
        Self::with_key(config, api_key)
    }

    pub fn with_key(config: ChatConfig, api_key: String) -> Result<Self> {
        if config.endpoint.trim().is_empty() || config.model.trim().is_empty() {
            return Err(Error::Config("endpoint and model must be set".into()));
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .into();
        Ok(Self {
            config,
            api_key,
            agent,
        })
    }
}

impl LlmClient for HttpChatClient {
    fn complete(&self, prompt: &str) -> Result<String> {
        let body = ChatRequest {
            model: &self.config.model,
            messages: [ChatMessage {
                role: "user",
                content: prompt,
            }],
            temperature: 0.0,
        };
        let mut resp = self
            .agent
            .post(&self.config.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| Error::Transport(e.to_string()))?;
        let parsed: ChatResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| Error::Transport(format!("unreadable response body: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| Error::Transport("response has no message content".into()))
    }
}

/// A scripted reply: completion text, or a simulated transport failure.
pub type ScriptedReply = std::result::Result<String, String>;

/// Replays canned replies. Replies are looked up by the question sentence at
/// the end of the prompt, falling back to a shared queue.
#[derive(Debug, Default)]
pub struct ScriptedClient {
    by_sentence: Mutex<HashMap<String, VecDeque<ScriptedReply>>>,
    shared: Mutex<VecDeque<ScriptedReply>>,
    calls: Mutex<usize>,
}

impl ScriptedClient {
    pub fn new<I: IntoIterator<Item = ScriptedReply>>(replies: I) -> Self {
        Self {
            shared: Mutex::new(replies.into_iter().collect()),
            ..Self::default()
        }
    }

    pub fn always(reply: &str) -> Self {
        Self::new(std::iter::repeat_n(Ok(reply.to_string()), 16))
    }

    pub fn add_for_sentence(&self, sentence: &str, replies: impl IntoIterator<Item = ScriptedReply>) {
        self.by_sentence
            .lock()
            .unwrap()
            .entry(sentence.trim().to_string())
            .or_default()
            .extend(replies);
    }

    /// Replays recorded exchanges per sentence in attempt order; failed
    /// transports replay as transport errors.
    pub fn from_transcripts(transcripts: &[LlmTranscript]) -> Self {
        let client = Self::default();
        let mut sorted: Vec<&LlmTranscript> = transcripts.iter().collect();
        sorted.sort_by_key(|t| t.attempt);
        for t in sorted {
            let reply = if t.verdict == Verdict::TransportFailed { Err(t.response.clone()) } else { Ok(t.response.clone()) };
            client.add_for_sentence(&t.sentence, [reply]);
        }
        client
    }

    pub fn calls(&self) -> usize {
        *self.calls.lock().unwrap()
    }
}

impl LlmClient for ScriptedClient {
    fn complete(&self, prompt: &str) -> Result<String> {
        *self.calls.lock().unwrap() += 1;
        let sentence = prompt
            .rsplit_once(QUESTION_MARKER)
            .map(|(_, s)| s.trim().to_string())
            .unwrap_or_default();
        let keyed = self
            .by_sentence
            .lock()
            .unwrap()
            .get_mut(&sentence)
            .and_then(VecDeque::pop_front);
        let reply = keyed.or_else(|| self.shared.lock().unwrap().pop_front());
        match reply {
            Some(Ok(text)) => Ok(text),
            Some(Err(msg)) => Err(Error::Transport(msg)),
            None => Err(Error::Transport("script exhausted".into())),
        }
    }
}
