//! In-context prompt templates and window prompt rendering.
//!
//! A template has three sections delimited by line markers: one
//! `[INSTRUCTION]`, three `[EXAMPLE]` blocks each followed by `[ANSWER]`,
//! and one `[QUERY]` with `{n}`, `{c}` and `{captions}` placeholders. The
//! instruction and examples are fixed data: the default template ships with
//! the crate and any section can be swapped by pointing at another file.

use super::WindowSpec;
use crate::caption::CaptionSequence;
use std::ops::Range;
use std::path::Path;
use std::sync::OnceLock;
use thiserror::Error;

const DEFAULT_TEMPLATE: &str = include_str!("../../templates/scoring_prompt.txt");
const EXPECTED_EXAMPLES: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum TemplateError {
    #[error("missing marker {0}")]
    MissingMarker(&'static str),
    #[error("expected {EXPECTED_EXAMPLES} examples, found {0}")]
    WrongExampleCount(usize),
    #[error("example {0} has no [ANSWER] section")]
    UnansweredExample(usize),
    #[error("query section missing placeholder {0}")]
    MissingPlaceholder(&'static str),
    #[error("captions do not cover the window: have {have}, need {need}")]
    CaptionCoverage { have: usize, need: usize },
    #[error("cannot read template: {0}")]
    Io(String),
}

/// A parsed scoring prompt template.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplate {
    instruction: String,
    examples: Vec<(String, String)>,
    query: String,
}

/// A fully rendered window prompt. `query_span` is the byte range of the
/// query section inside `text`; the prefix before it (instruction plus
/// examples) is byte-identical across all windows.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowPrompt {
    pub text: String,
    pub query_span: Range<usize>,
    pub window: WindowSpec,
}

impl WindowPrompt {
    pub fn query_text(&self) -> &str {
        &self.text[self.query_span.clone()]
    }
}

impl PromptTemplate {
    /// The template shipped with the crate.
    pub fn builtin() -> &'static PromptTemplate {
        static BUILTIN: OnceLock<PromptTemplate> = OnceLock::new();
        BUILTIN.get_or_init(|| {
            PromptTemplate::parse(DEFAULT_TEMPLATE).expect("builtin template parses")
        })
    }

    pub fn from_file(path: &Path) -> Result<PromptTemplate, TemplateError> {
        let text = std::fs::read_to_string(path).map_err(|e| TemplateError::Io(e.to_string()))?;
        PromptTemplate::parse(&text)
    }

    pub fn parse(text: &str) -> Result<PromptTemplate, TemplateError> {
        #[derive(PartialEq)]
        enum Section {
            None,
            Instruction,
            Example,
            Answer,
            Query,
        }
        let mut instruction: Option<String> = None;
        let mut examples: Vec<(String, String)> = Vec::new();
        let mut query: Option<String> = None;
        let mut state = Section::None;
        let mut buffer = String::new();

        let mut flush = |state: &Section, buffer: &mut String| -> Result<(), TemplateError> {
            let content = buffer.trim_end().to_string();
            buffer.clear();
            match state {
                Section::None => {}
                Section::Instruction => instruction = Some(content),
                Section::Example => examples.push((content, String::new())),
                Section::Answer => {
                    let index = examples.len();
                    let slot = examples
                        .last_mut()
                        .ok_or(TemplateError::UnansweredExample(index))?;
                    slot.1 = content;
                }
                Section::Query => query = Some(content),
            }
            Ok(())
        };

        for line in text.lines() {
            let next = match line.trim_end() {
                "[INSTRUCTION]" => Some(Section::Instruction),
                "[EXAMPLE]" => Some(Section::Example),
                "[ANSWER]" => Some(Section::Answer),
                "[QUERY]" => Some(Section::Query),
                _ => None,
            };
            match next {
                Some(section) => {
                    flush(&state, &mut buffer)?;
                    state = section;
                }
                None => {
                    buffer.push_str(line);
                    buffer.push('\n');
                }
            }
        }
        flush(&state, &mut buffer)?;

        let instruction = instruction.ok_or(TemplateError::MissingMarker("[INSTRUCTION]"))?;
        let query = query.ok_or(TemplateError::MissingMarker("[QUERY]"))?;
        if examples.len() != EXPECTED_EXAMPLES {
            return Err(TemplateError::WrongExampleCount(examples.len()));
        }
        if let Some(i) = examples.iter().position(|(_, a)| a.is_empty()) {
            return Err(TemplateError::UnansweredExample(i + 1));
        }
        for placeholder in ["{n}", "{c}", "{captions}"] {
            if !query.contains(placeholder) {
                return Err(TemplateError::MissingPlaceholder(match placeholder {
                    "{n}" => "{n}",
                    "{c}" => "{c}",
                    _ => "{captions}",
                }));
            }
        }
        Ok(PromptTemplate {
            instruction,
            examples,
            query,
        })
    }

    /// The fixed instruction-plus-examples prefix shared by every window.
    fn prefix(&self) -> String {
        let mut s = String::new();
        s.push_str(&self.instruction);
        s.push_str("\n\n");
        for (question, answer) in &self.examples {
            s.push_str(question);
            s.push_str("\nAnswer: ");
            s.push_str(answer);
            s.push_str("\n\n");
        }
        s
    }

    /// Render the prompt for one window over the video's captions.
    pub fn render(
        &self,
        captions: &CaptionSequence,
        window: &WindowSpec,
    ) -> Result<WindowPrompt, TemplateError> {
        if captions.len() <= window.hi {
            return Err(TemplateError::CaptionCoverage {
                have: captions.len(),
                need: window.hi + 1,
            });
        }
        let mut lines = String::new();
        for (i, frame) in (window.lo..=window.hi).enumerate() {
            if i > 0 {
                lines.push('\n');
            }
            lines.push_str(&format!("#{}: {}", i + 1, captions.get(frame)));
        }
        let query = self
            .query
            .replace("{n}", &window.len().to_string())
            .replace("{c}", &window.center_position.to_string())
            .replace("{captions}", &lines);

        let mut text = self.prefix();
        let query_start = text.len();
        text.push_str(&query);
        Ok(WindowPrompt {
            query_span: query_start..text.len(),
            text,
            window: window.clone(),
        })
    }
}
