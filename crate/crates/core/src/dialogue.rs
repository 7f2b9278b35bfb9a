//! Structured dialogues: parsing raw generations, the format and turn
//! filters, and corpus-level statistics.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    HelpSeeker,
    Supporter,
}

impl Role {
    pub fn other(self) -> Role {
        match self {
            Role::HelpSeeker => Role::Supporter,
            Role::Supporter => Role::HelpSeeker,
        }
    }
}

/// How a dialogue came to exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "standard")]
    Standard,
    #[serde(rename = "standardT")]
    StandardT,
    #[serde(rename = "smile")]
    Smile,
    /// A single-turn seed QA viewed as a one-turn dialogue.
    #[serde(rename = "seed")]
    Seed,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Standard => "standard",
            Method::StandardT => "standardT",
            Method::Smile => "smile",
            Method::Seed => "seed",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(Method::Standard),
            "standardT" | "standardt" => Ok(Method::StandardT),
            "smile" => Ok(Method::Smile),
            "seed" => Ok(Method::Seed),
            other => Err(format!("unknown generation method `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Utterance {
    pub role: Role,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UtteranceError {
    #[error("utterance text is empty")]
    Empty,
    #[error("utterance text contains a line break")]
    LineBreak,
    #[error("utterance text has leading or trailing whitespace")]
    Untrimmed,
}

impl Utterance {
    pub fn new(role: Role, text: impl Into<String>) -> Result<Self, UtteranceError> {
        let u = Utterance {
            role,
            text: text.into(),
        };
        u.validate()?;
        Ok(u)
    }

    pub fn help_seeker(text: impl Into<String>) -> Result<Self, UtteranceError> {
        Self::new(Role::HelpSeeker, text)
    }

    pub fn supporter(text: impl Into<String>) -> Result<Self, UtteranceError> {
        Self::new(Role::Supporter, text)
    }

    pub fn validate(&self) -> Result<(), UtteranceError> {
        if self.text.trim().is_empty() {
            return Err(UtteranceError::Empty);
        }
        if self.text.contains(['\n', '\r']) {
            return Err(UtteranceError::LineBreak);
        }
        if self.text.trim() != self.text {
            return Err(UtteranceError::Untrimmed);
        }
        Ok(())
    }

    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }
}

/// An ordered, role-alternating conversation with provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dialogue {
    pub id: String,
    pub method: Method,
    #[serde(default)]
    pub seed_qa_id: Option<String>,
    /// Topic injected into the generation prompt, when there was one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<String>,
    pub utterances: Vec<Utterance>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DialogueError {
    #[error("dialogue has no utterances")]
    Empty,
    #[error("dialogue must open with the help-seeker")]
    NoLeadingHelpSeeker,
    #[error("utterance {index} breaks role alternation")]
    BrokenAlternation { index: usize },
    #[error("utterance {index}: {source}")]
    Utterance {
        index: usize,
        #[source]
        source: UtteranceError,
    },
}

impl Dialogue {
    pub fn new(
        id: impl Into<String>,
        method: Method,
        utterances: Vec<Utterance>,
    ) -> Result<Self, DialogueError> {
        let d = Dialogue {
            id: id.into(),
            method,
            seed_qa_id: None,
            topic: None,
            utterances,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn with_seed_qa(mut self, qa_id: impl Into<String>) -> Self {
        self.seed_qa_id = Some(qa_id.into());
        self
    }

    pub fn with_topic(mut self, topic: impl Into<String>) -> Self {
        self.topic = Some(topic.into());
        self
    }

    pub fn validate(&self) -> Result<(), DialogueError> {
        validate_utterances(&self.utterances)
    }

    pub fn turns(&self) -> usize {
        count_turns(self)
    }
}

fn validate_utterances(utterances: &[Utterance]) -> Result<(), DialogueError> {
    let first = utterances.first().ok_or(DialogueError::Empty)?;
    if first.role != Role::HelpSeeker {
        return Err(DialogueError::NoLeadingHelpSeeker);
    }
    for (index, u) in utterances.iter().enumerate() {
        u.validate()
            .map_err(|source| DialogueError::Utterance { index, source })?;
        if index > 0 && utterances[index - 1].role == u.role {
            return Err(DialogueError::BrokenAlternation { index });
        }
    }
    Ok(())
}

/// Role marker names; each is accepted followed by a full-width or ASCII colon.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkerConfig {
    pub help_seeker: String,
    pub supporter: String,
}

impl Default for MarkerConfig {
    fn default() -> Self {
        Self {
            help_seeker: "求助者".to_string(),
            supporter: "支持者".to_string(),
        }
    }
}

const COLONS: [char; 2] = ['：', ':'];

impl MarkerConfig {
    pub fn name(&self, role: Role) -> &str {
        match role {
            Role::HelpSeeker => &self.help_seeker,
            Role::Supporter => &self.supporter,
        }
    }

    /// Splits a leading `<name><colon>` marker off a line.
    pub fn strip<'a>(&self, line: &'a str) -> Option<(Role, &'a str)> {
        for role in [Role::HelpSeeker, Role::Supporter] {
            if let Some(rest) = line.strip_prefix(self.name(role)) {
                if let Some(c) = rest.chars().next() {
                    if COLONS.contains(&c) {
                        return Some((role, &rest[c.len_utf8()..]));
                    }
                }
            }
        }
        None
    }

    pub fn starts_with_marker(&self, text: &str) -> bool {
        self.strip(text).is_some()
    }

    /// Canonical rendering of one utterance line (full-width colon).
    pub fn render_line(&self, u: &Utterance) -> String {
        format!("{}：{}", self.name(u.role), u.text)
    }
}

/// Non-blank lines of a raw generation, with stray carriage returns folded
/// into spaces and surrounding whitespace removed.
fn content_lines(raw: &str) -> impl Iterator<Item = (usize, String)> + '_ {
    raw.split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l.replace('\r', " ").trim().to_string()))
        .filter(|(_, l)| !l.is_empty())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("raw generation is empty")]
    Empty,
    #[error("line {line}: first utterance does not start with the help-seeker marker")]
    NoLeadingRole { line: usize },
    #[error("line {line}: no role marker")]
    MissingMarker { line: usize },
    #[error("line {line}: utterance is empty after its role marker")]
    EmptyUtterance { line: usize },
    #[error("line {line}: utterance text starts with another role marker")]
    NestedMarker { line: usize },
}

/// Parses newline-separated, marker-prefixed lines into utterances.
///
/// Consecutive lines of the same role are merged with a single space.
pub fn parse_dialogue(raw: &str, markers: &MarkerConfig) -> Result<Vec<Utterance>, ParseError> {
    let mut out: Vec<Utterance> = Vec::new();
    for (line_no, line) in content_lines(raw) {
        let (role, rest) = markers
            .strip(&line)
            .ok_or(ParseError::MissingMarker { line: line_no })?;
        let text = rest.trim();
        if text.is_empty() {
            return Err(ParseError::EmptyUtterance { line: line_no });
        }
        if markers.starts_with_marker(text) {
            return Err(ParseError::NestedMarker { line: line_no });
        }
        if out.is_empty() && role != Role::HelpSeeker {
            return Err(ParseError::NoLeadingRole { line: line_no });
        }
        match out.last_mut() {
            Some(prev) if prev.role == role => {
                prev.text.push(' ');
                prev.text.push_str(text);
            }
            _ => out.push(Utterance {
                role,
                text: text.to_string(),
            }),
        }
    }
    if out.is_empty() {
        return Err(ParseError::Empty);
    }
    Ok(out)
}

/// Canonical raw form: one marker-prefixed line per utterance.
pub fn render_dialogue(utterances: &[Utterance], markers: &MarkerConfig) -> String {
    utterances
        .iter()
        .map(|u| markers.render_line(u))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Stable rejection vocabulary used in verdicts, logs and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    NoLeadingRole,
    MissingSeparator,
    BadUtterancePrefix,
    EnglishTail,
    TooFewTurns,
}

impl RejectReason {
    pub fn code(self) -> &'static str {
        match self {
            RejectReason::NoLeadingRole => "no_leading_role",
            RejectReason::MissingSeparator => "missing_separator",
            RejectReason::BadUtterancePrefix => "bad_utterance_prefix",
            RejectReason::EnglishTail => "english_tail",
            RejectReason::TooFewTurns => "too_few_turns",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub accepted: bool,
    pub reasons: BTreeSet<RejectReason>,
}

impl FilterVerdict {
    pub fn from_reasons(reasons: BTreeSet<RejectReason>) -> Self {
        Self {
            accepted: reasons.is_empty(),
            reasons,
        }
    }

    pub fn accept() -> Self {
        Self::from_reasons(BTreeSet::new())
    }

    pub fn merge(mut self, other: FilterVerdict) -> Self {
        self.reasons.extend(other.reasons);
        Self::from_reasons(self.reasons)
    }
}

/// Evaluates the four format rules independently and reports every violation.
pub fn check_format(raw: &str, markers: &MarkerConfig) -> FilterVerdict {
    let lines: Vec<(usize, String)> = content_lines(raw).collect();
    let mut reasons = BTreeSet::new();

    match lines.first() {
        Some((_, first)) if matches!(markers.strip(first), Some((Role::HelpSeeker, _))) => {}
        _ => {
            reasons.insert(RejectReason::NoLeadingRole);
        }
    }

    if !raw.trim().contains('\n') {
        reasons.insert(RejectReason::MissingSeparator);
    }

    let bad_prefix = lines.iter().any(|(_, line)| match markers.strip(line) {
        None => true,
        Some((_, rest)) => {
            let text = rest.trim();
            text.is_empty() || markers.starts_with_marker(text)
        }
    });
    if bad_prefix {
        reasons.insert(RejectReason::BadUtterancePrefix);
    }

    if let Some((_, last)) = lines.last() {
        let content = markers.strip(last).map_or(last.as_str(), |(_, rest)| rest);
        if contains_english_sentence(content) {
            reasons.insert(RejectReason::EnglishTail);
        }
    }

    FilterVerdict::from_reasons(reasons)
}

/// Minimum run of Latin-only words that counts as a sentence.
pub const ENGLISH_MIN_WORDS: usize = 3;

/// True when the text holds at least [`ENGLISH_MIN_WORDS`] consecutive
/// whitespace-separated Latin-letter words, the last of which closes with
/// sentence punctuation. Isolated acronyms and short fragments do not count.
pub fn contains_english_sentence(text: &str) -> bool {
    let mut run = 0usize;
    for token in text.split_whitespace() {
        match classify_token(token) {
            TokenKind::Word => run += 1,
            TokenKind::ClausePause => run += 1,
            TokenKind::SentenceEnd => {
                if run + 1 >= ENGLISH_MIN_WORDS {
                    return true;
                }
                run = 0;
            }
            TokenKind::Other => run = 0,
        }
    }
    false
}

enum TokenKind {
    Word,
    ClausePause,
    SentenceEnd,
    Other,
}

fn classify_token(token: &str) -> TokenKind {
    let trimmed = token.trim_end_matches(['.', '!', '?', '。', '！', '？']);
    let sentence_end = trimmed.len() != token.len();
    let (core, pause) = if sentence_end {
        (trimmed, false)
    } else {
        let t = token.trim_end_matches([',', ';', ':', '，', '；']);
        (t, t.len() != token.len())
    };
    if !is_latin_word(core) {
        return TokenKind::Other;
    }
    if sentence_end {
        TokenKind::SentenceEnd
    } else if pause {
        TokenKind::ClausePause
    } else {
        TokenKind::Word
    }
}

/// ASCII letters, optionally joined by internal apostrophes or hyphens.
fn is_latin_word(s: &str) -> bool {
    !s.is_empty()
        && s.split(['\'', '’', '-'])
            .all(|part| !part.is_empty() && part.chars().all(|c| c.is_ascii_alphabetic()))
}

/// Complete (help-seeker, supporter) pairs; a trailing seeker is not a turn.
pub fn count_turns(d: &Dialogue) -> usize {
    d.utterances
        .windows(2)
        .filter(|w| w[0].role == Role::HelpSeeker && w[1].role == Role::Supporter)
        .count()
}

pub const DEFAULT_MIN_TURNS: usize = 5;

pub fn filter_dialogue(d: &Dialogue, min_turns: usize) -> FilterVerdict {
    let mut reasons = BTreeSet::new();
    if count_turns(d) < min_turns {
        reasons.insert(RejectReason::TooFewTurns);
    }
    FilterVerdict::from_reasons(reasons)
}

/// Format check, parse, then turn check: the acceptance rule for generations.
pub fn accept_generation(
    raw: &str,
    markers: &MarkerConfig,
    min_turns: usize,
) -> Result<Vec<Utterance>, FilterVerdict> {
    let verdict = check_format(raw, markers);
    if !verdict.accepted {
        return Err(verdict);
    }
    let utterances = parse_dialogue(raw, markers).map_err(|_| {
        FilterVerdict::from_reasons([RejectReason::BadUtterancePrefix].into_iter().collect())
    })?;
    let probe = Dialogue {
        id: String::new(),
        method: Method::Seed,
        seed_qa_id: None,
        topic: None,
        utterances,
    };
    let verdict = filter_dialogue(&probe, min_turns);
    if verdict.accepted {
        Ok(probe.utterances)
    } else {
        Err(verdict)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoleBreakdown<T> {
    pub total: T,
    pub help_seeker: T,
    pub supporter: T,
}

/// Corpus statistics in the layout of a dataset card.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStatistics {
    pub dialogues: usize,
    pub utterances: RoleBreakdown<usize>,
    pub turns_per_dialogue: f64,
    pub utterances_per_dialogue: RoleBreakdown<f64>,
    /// Mean utterance length in characters.
    pub avg_utterance_length: RoleBreakdown<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("corpus statistics need at least one dialogue")]
pub struct EmptyCorpus;

pub fn corpus_statistics(dialogues: &[Dialogue]) -> Result<CorpusStatistics, EmptyCorpus> {
    if dialogues.is_empty() {
        return Err(EmptyCorpus);
    }
    let mut count = RoleBreakdown { total: 0usize, help_seeker: 0, supporter: 0 };
    let mut chars = RoleBreakdown { total: 0usize, help_seeker: 0, supporter: 0 };
    let mut turns = 0usize;
    for d in dialogues {
        turns += count_turns(d);
        for u in &d.utterances {
            let len = u.char_len();
            count.total += 1;
            chars.total += len;
            match u.role {
                Role::HelpSeeker => {
                    count.help_seeker += 1;
                    chars.help_seeker += len;
                }
                Role::Supporter => {
                    count.supporter += 1;
                    chars.supporter += len;
                }
            }
        }
    }
    let n = dialogues.len() as f64;
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    Ok(CorpusStatistics {
        dialogues: dialogues.len(),
        utterances: count,
        turns_per_dialogue: turns as f64 / n,
        utterances_per_dialogue: RoleBreakdown {
            total: count.total as f64 / n,
            help_seeker: count.help_seeker as f64 / n,
            supporter: count.supporter as f64 / n,
        },
        avg_utterance_length: RoleBreakdown {
            total: ratio(chars.total, count.total),
            help_seeker: ratio(chars.help_seeker, count.help_seeker),
            supporter: ratio(chars.supporter, count.supporter),
        },
    })
}

impl fmt::Display for CorpusStatistics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<28}{:>12}{:>14}{:>12}", "Category", "Total", "Help-seeker", "Supporter")?;
        writeln!(f, "{:<28}{:>12}{:>14}{:>12}", "# Dialogues", self.dialogues, "-", "-")?;
        writeln!(
            f,
            "{:<28}{:>12}{:>14}{:>12}",
            "# Utterances",
            self.utterances.total,
            self.utterances.help_seeker,
            self.utterances.supporter
        )?;
        writeln!(f, "{:<28}{:>12.1}{:>14}{:>12}", "Turns per dialogue", self.turns_per_dialogue, "-", "-")?;
        let u = &self.utterances_per_dialogue;
        writeln!(
            f,
            "{:<28}{:>12.1}{:>14.1}{:>12.1}",
            "Utterances per dialogue", u.total, u.help_seeker, u.supporter
        )?;
        let l = &self.avg_utterance_length;
        write!(
            f,
            "{:<28}{:>12.1}{:>14.1}{:>12.1}",
            "Avg. length per utterance", l.total, l.help_seeker, l.supporter
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m() -> MarkerConfig {
        MarkerConfig::default()
    }

    fn raw_turns(n: usize) -> String {
        let mut lines = Vec::new();
        for i in 0..n {
            lines.push(format!("求助者：我最近压力很大{i}"));
            lines.push(format!("支持者：我理解你的感受{i}"));
        }
        lines.join("\n")
    }

    fn alternating(len: usize) -> Dialogue {
        let utterances = (0..len)
            .map(|i| {
                let role = if i % 2 == 0 { Role::HelpSeeker } else { Role::Supporter };
                Utterance::new(role, format!("u{i}")).unwrap()
            })
            .collect();
        Dialogue::new("d", Method::Smile, utterances).unwrap()
    }

    #[test]
    fn parses_ten_lines_into_five_turns() {
        let utts = parse_dialogue(&raw_turns(5), &m()).unwrap();
        assert_eq!(utts.len(), 10);
        let d = Dialogue::new("x", Method::Smile, utts).unwrap();
        assert_eq!(count_turns(&d), 5);
    }

    #[test]
    fn leading_supporter_is_rejected() {
        let raw = "支持者：你好\n求助者：你好";
        assert_eq!(parse_dialogue(raw, &m()), Err(ParseError::NoLeadingRole { line: 1 }));
        assert!(check_format(raw, &m()).reasons.contains(&RejectReason::NoLeadingRole));
    }

    #[test]
    fn consecutive_same_role_lines_merge() {
        let raw = "求助者：我睡不着\n支持者：听起来很辛苦\n支持者：能说说吗\n求助者：好的";
        let utts = parse_dialogue(raw, &m()).unwrap();
        assert_eq!(utts.len(), 3);
        assert_eq!(utts[1].text, "听起来很辛苦 能说说吗");
        assert!(validate_utterances(&utts).is_ok());
    }

    #[test]
    fn both_colon_widths_are_markers() {
        let raw = "求助者:你好\n支持者：你好呀";
        let utts = parse_dialogue(raw, &m()).unwrap();
        assert_eq!(utts[0].text, "你好");
        assert_eq!(utts[1].role, Role::Supporter);
    }

    #[test]
    fn line_without_marker_fails() {
        let raw = "求助者：你好\n随便说点什么";
        assert_eq!(parse_dialogue(raw, &m()), Err(ParseError::MissingMarker { line: 2 }));
    }

    #[test]
    fn crlf_line_endings() {
        let raw = "求助者：你好\r\n支持者：你好呀\r\n";
        let utts = parse_dialogue(raw, &m()).unwrap();
        assert_eq!(utts[1].text, "你好呀");
        assert!(check_format(raw, &m()).accepted);
    }

    #[test]
    fn valid_raw_is_accepted() {
        let v = check_format(&raw_turns(5), &m());
        assert!(v.accepted);
        assert!(v.reasons.is_empty());
    }

    #[test]
    fn english_last_line_is_rejected() {
        let raw = format!("{}\n支持者：Thank you for coming today.", raw_turns(4));
        let v = check_format(&raw, &m());
        assert!(!v.accepted);
        assert_eq!(v.reasons.iter().copied().collect::<Vec<_>>(), vec![RejectReason::EnglishTail]);
    }

    #[test]
    fn single_line_lacks_separator() {
        let v = check_format("求助者：你好支持者：你好", &m());
        assert!(v.reasons.contains(&RejectReason::MissingSeparator));
    }

    #[test]
    fn english_detector_thresholds() {
        assert!(contains_english_sentence("Thank you for coming today."));
        assert!(contains_english_sentence("好的 I am fine!"));
        assert!(contains_english_sentence("Well, that sounds hard."));
        assert!(contains_english_sentence("I'm doing well."));
        assert!(!contains_english_sentence("我们可以试试 CBT 疗法。"));
        assert!(!contains_english_sentence("Thank you."));
        assert!(!contains_english_sentence("Thank you for coming"));
        assert!(!contains_english_sentence("谢谢你 OK OK"));
        assert!(!contains_english_sentence(""));
    }

    #[test]
    fn turn_counting() {
        assert_eq!(count_turns(&alternating(10)), 5);
        assert_eq!(count_turns(&alternating(11)), 5);
        assert_eq!(count_turns(&alternating(2)), 1);
        assert_eq!(count_turns(&alternating(1)), 0);
    }

    #[test]
    fn turn_filter_threshold() {
        assert!(filter_dialogue(&alternating(10), 5).accepted);
        let v = filter_dialogue(&alternating(8), 5);
        assert_eq!(v.reasons.iter().copied().collect::<Vec<_>>(), vec![RejectReason::TooFewTurns]);
        assert!(filter_dialogue(&alternating(8), 4).accepted);
    }

    #[test]
    fn accept_generation_combines_rules() {
        assert!(accept_generation(&raw_turns(5), &m(), 5).is_ok());
        let err = accept_generation(&raw_turns(4), &m(), 5).unwrap_err();
        assert!(err.reasons.contains(&RejectReason::TooFewTurns));
        let err = accept_generation("not a dialogue", &m(), 5).unwrap_err();
        assert!(err.reasons.contains(&RejectReason::BadUtterancePrefix));
    }

    #[test]
    fn statistics_uniform_fixture() {
        let utts = (0..10)
            .map(|i| {
                let role = if i % 2 == 0 { Role::HelpSeeker } else { Role::Supporter };
                Utterance::new(role, "一二三四五六七八九十").unwrap()
            })
            .collect();
        let d = Dialogue::new("a", Method::Smile, utts).unwrap();
        let s = corpus_statistics(&[d]).unwrap();
        assert_eq!(s.turns_per_dialogue, 5.0);
        assert_eq!(s.utterances_per_dialogue.total, 10.0);
        assert_eq!(s.avg_utterance_length.total, 10.0);
        assert_eq!(s.avg_utterance_length.help_seeker, 10.0);
    }

    #[test]
    fn statistics_mean_turns() {
        let s = corpus_statistics(&[alternating(10), alternating(14)]).unwrap();
        assert_eq!(s.turns_per_dialogue, 6.0);
        assert!(corpus_statistics(&[]).is_err());
    }

    #[test]
    fn statistics_hand_computed_three_dialogues() {
        let mk = |id: &str, texts: &[&str]| {
            let utts = texts
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    let role = if i % 2 == 0 { Role::HelpSeeker } else { Role::Supporter };
                    Utterance::new(role, *t).unwrap()
                })
                .collect();
            Dialogue::new(id, Method::Smile, utts).unwrap()
        };
        // seeker lengths: 2,4 | 1 | 3,3,1 ; supporter lengths: 3,5 | 2 | 6,2
        let corpus = [
            mk("a", &["ab", "abc", "abcd", "abcde"]),
            mk("b", &["a", "ab"]),
            mk("c", &["abc", "abcdef", "abc", "ab", "a"]),
        ];
        let s = corpus_statistics(&corpus).unwrap();
        assert_eq!(s.dialogues, 3);
        assert_eq!(s.utterances.total, 11);
        assert_eq!(s.utterances.help_seeker, 6);
        assert_eq!(s.utterances.supporter, 5);
        assert!((s.turns_per_dialogue - 5.0 / 3.0).abs() < 1e-12);
        assert!((s.utterances_per_dialogue.total - 11.0 / 3.0).abs() < 1e-12);
        assert!((s.utterances_per_dialogue.help_seeker - 2.0).abs() < 1e-12);
        assert!((s.avg_utterance_length.total - 32.0 / 11.0).abs() < 1e-12);
        assert!((s.avg_utterance_length.help_seeker - 14.0 / 6.0).abs() < 1e-12);
        assert!((s.avg_utterance_length.supporter - 18.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn dialogue_validation() {
        let bad = Dialogue {
            id: "x".into(),
            method: Method::Smile,
            seed_qa_id: None,
            topic: None,
            utterances: vec![
                Utterance { role: Role::HelpSeeker, text: "hi".into() },
                Utterance { role: Role::Supporter, text: "".into() },
            ],
        };
        assert!(matches!(bad.validate(), Err(DialogueError::Utterance { index: 1, .. })));
    }
}
