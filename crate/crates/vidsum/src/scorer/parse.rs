//! Parsing integer scores out of model answers.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ScoreParseError {
    /// No integer follows a "score" token; carries the raw answer so the
    /// caller can log or retry.
    #[error("no parsable score in answer {answer:?}")]
    NoScore { answer: String },
    #[error("score {value} outside 0..=10 in answer {answer:?}")]
    OutOfRange { value: i64, answer: String },
}

/// Extract the first integer following the token "score" (case-insensitive,
/// surrounding punctuation and whitespace allowed).
pub fn parse_score(answer: &str) -> Result<u8, ScoreParseError> {
    let no_score = || ScoreParseError::NoScore {
        answer: answer.to_string(),
    };

    let lower = answer.to_lowercase();
    let bytes = lower.as_bytes();
    let mut search = 0usize;
    let token_at = loop {
        let at = lower[search..].find("score").map(|i| search + i).ok_or_else(no_score)?;
        // word boundary on both sides ("scores" or "underscore" don't count)
        let before_ok = at == 0 || !bytes[at - 1].is_ascii_alphanumeric();
        let after = at + "score".len();
        let after_ok = after >= bytes.len() || !bytes[after].is_ascii_alphanumeric();
        if before_ok && after_ok {
            break at;
        }
        search = at + 1;
    };

    let tail = &answer[token_at + "score".len()..];
    let mut chars = tail.char_indices().peekable();
    let mut start = None;
    while let Some((i, c)) = chars.next() {
        if c.is_ascii_digit() {
            start = Some(i);
            break;
        }
        if c == '-' && matches!(chars.peek(), Some((_, d)) if d.is_ascii_digit()) {
            start = Some(i);
            break;
        }
    }
    let start = start.ok_or_else(no_score)?;
    let digits: String = tail[start..]
        .chars()
        .take_while(|c| c.is_ascii_digit() || *c == '-')
        .collect();
    let value: i64 = digits.parse().map_err(|_| no_score())?;
    if !(0..=10).contains(&value) {
        return Err(ScoreParseError::OutOfRange {
            value,
            answer: answer.to_string(),
        });
    }
    Ok(value as u8)
}

/// The canonical answer format the prompt requests.
pub fn format_score(value: u8) -> String {
    format!("score: {value}")
}
