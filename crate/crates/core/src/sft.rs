//! Session splitting and chat-format export for supervised fine-tuning.
//!
//! A dialogue `u1 r1 u2 r2 ...` yields one session per supporter utterance:
//! session `t` carries the history `u1 r1 ... ut` and the target `rt`. A
//! trailing help-seeker line has no target and produces nothing. Sessions are
//! exported untruncated; fitting them into a context window is left to the
//! trainer.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{read_jsonl, write_jsonl, CorpusError};
use crate::dialogue::{Dialogue, DialogueError, Role, Utterance};

#[derive(Debug, Error)]
pub enum SftError {
    #[error("system prompt is empty")]
    EmptySystemPrompt,
    #[error("dialogue `{0}` has no complete turn")]
    NoTurns(String),
    #[error("dialogue `{id}` is invalid: {source}")]
    InvalidDialogue {
        id: String,
        #[source]
        source: DialogueError,
    },
    #[error("record {index}: {reason}")]
    InvalidRecord { index: usize, reason: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingSession {
    pub dialogue_id: String,
    /// 1-based position of the target among the dialogue's supporter lines.
    pub session_index: usize,
    pub history: Vec<Utterance>,
    pub target: String,
    pub system_prompt: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChatRole {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: ChatRole,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatRecord {
    pub messages: Vec<ChatMessage>,
}

impl ChatRecord {
    /// System first, then user/assistant strictly alternating, ending with
    /// the assistant.
    pub fn validate(&self) -> Result<(), String> {
        let (first, rest) = self.messages.split_first().ok_or("record has no messages")?;
        if first.role != ChatRole::System {
            return Err("first message must be the system prompt".into());
        }
        if first.content.trim().is_empty() {
            return Err("system prompt is empty".into());
        }
        if rest.is_empty() {
            return Err("record has no dialogue messages".into());
        }
        for (i, m) in rest.iter().enumerate() {
            let want = if i % 2 == 0 { ChatRole::User } else { ChatRole::Assistant };
            if m.role != want {
                return Err(format!("message {} should be {want:?}, found {:?}", i + 1, m.role));
            }
        }
        if rest.len() % 2 != 0 {
            return Err("last message must be from the assistant".into());
        }
        Ok(())
    }
}

pub fn split_sessions(d: &Dialogue, system_prompt: &str) -> Result<Vec<TrainingSession>, SftError> {
    d.validate().map_err(|source| SftError::InvalidDialogue {
        id: d.id.clone(),
        source,
    })?;
    let mut sessions = Vec::new();
    for (i, u) in d.utterances.iter().enumerate() {
        if u.role != Role::Supporter {
            continue;
        }
        let history = d.utterances[..i].to_vec();
        assert!(
            history.last().is_some_and(|h| h.role == Role::HelpSeeker),
            "validated dialogue puts a help-seeker line before every supporter line"
        );
        sessions.push(TrainingSession {
            dialogue_id: d.id.clone(),
            session_index: sessions.len() + 1,
            history,
            target: u.text.clone(),
            system_prompt: system_prompt.to_string(),
        });
    }
    if sessions.is_empty() {
        return Err(SftError::NoTurns(d.id.clone()));
    }
    Ok(sessions)
}

pub fn to_chat_record(s: &TrainingSession) -> Result<ChatRecord, SftError> {
    if s.system_prompt.trim().is_empty() {
        return Err(SftError::EmptySystemPrompt);
    }
    let mut messages = Vec::with_capacity(s.history.len() + 2);
    messages.push(ChatMessage {
        role: ChatRole::System,
        content: s.system_prompt.clone(),
    });
    messages.extend(s.history.iter().map(|u| ChatMessage {
        role: match u.role {
            Role::HelpSeeker => ChatRole::User,
            Role::Supporter => ChatRole::Assistant,
        },
        content: u.text.clone(),
    }));
    messages.push(ChatMessage {
        role: ChatRole::Assistant,
        content: s.target.clone(),
    });
    Ok(ChatRecord { messages })
}

/// All records for `dialogues`, ordered by (dialogue id, session index).
/// Dialogues sharing an id keep their input order.
pub fn build_records(dialogues: &[Dialogue], system_prompt: &str) -> Result<Vec<ChatRecord>, SftError> {
    if system_prompt.trim().is_empty() {
        return Err(SftError::EmptySystemPrompt);
    }
    let mut order: Vec<&Dialogue> = dialogues.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));
    let per_dialogue: Vec<Vec<ChatRecord>> = order
        .par_iter()
        .map(|d| {
            split_sessions(d, system_prompt)?
                .iter()
                .map(to_chat_record)
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    Ok(per_dialogue.into_iter().flatten().collect())
}

/// Writes one chat record per line and returns the record count.
pub fn export_sft(dialogues: &[Dialogue], system_prompt: &str, path: &Path) -> Result<usize, SftError> {
    let records = build_records(dialogues, system_prompt)?;
    write_jsonl(&records, path)?;
    Ok(records.len())
}

pub fn import_sft(path: &Path) -> Result<Vec<ChatRecord>, SftError> {
    read_jsonl::<ChatRecord>(path)?
        .into_iter()
        .map(|(line, r)| {
            r.validate().map_err(|reason| SftError::InvalidRecord { index: line, reason })?;
            Ok(r)
        })
        .collect()
}
