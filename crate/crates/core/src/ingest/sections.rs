//! Case brief section segmentation and heading canonicalisation.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Shipped heading rule file (`<pattern> TAB <canonical>` per line).
pub const DEFAULT_SECTION_RULES: &str = include_str!("section_rules.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CanonicalSection {
    Facts,
    Issue,
    Conclusion,
    ProceduralHistory,
    Reasoning,
    Rule,
    Unknown,
}

impl CanonicalSection {
    /// The label sentences from this section carry as `source_label`.
    pub fn label(self) -> &'static str {
        match self {
            CanonicalSection::Facts => "Facts",
            CanonicalSection::Issue => "Issue",
            CanonicalSection::Conclusion => "Conclusion",
            CanonicalSection::ProceduralHistory => "Procedural History",
            CanonicalSection::Reasoning => "Reasoning",
            CanonicalSection::Rule => "Rule",
            CanonicalSection::Unknown => "Unknown",
        }
    }
}

impl fmt::Display for CanonicalSection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for CanonicalSection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let squashed: String = s.chars().filter(|c| c.is_alphanumeric()).collect();
        match squashed.to_lowercase().as_str() {
            "facts" => Ok(CanonicalSection::Facts),
            "issue" => Ok(CanonicalSection::Issue),
            "conclusion" => Ok(CanonicalSection::Conclusion),
            "proceduralhistory" => Ok(CanonicalSection::ProceduralHistory),
            "reasoning" => Ok(CanonicalSection::Reasoning),
            "rule" => Ok(CanonicalSection::Rule),
            _ => Err(format!("unknown canonical section `{s}`")),
        }
    }
}

#[derive(Debug, Error)]
pub enum RuleFileError {
    #[error("section rules line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("section rules contain no rules")]
    Empty,
}

/// Ordered heading patterns; the first match decides the canonical type.
#[derive(Debug, Clone)]
pub struct SectionRules {
    rules: Vec<(Regex, CanonicalSection)>,
}

impl SectionRules {
    pub fn parse(text: &str) -> Result<Self, RuleFileError> {
        let mut rules = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let Some((pattern, canonical)) = line.split_once('\t') else {
                return Err(RuleFileError::Line {
                    line: line_no,
                    message: "expected `<pattern>\\t<canonical>`".into(),
                });
            };
            let canonical: CanonicalSection = canonical
                .parse()
                .map_err(|message| RuleFileError::Line { line: line_no, message })?;
            let regex = Regex::new(pattern.trim()).map_err(|e| RuleFileError::Line {
                line: line_no,
                message: e.to_string(),
            })?;
            rules.push((regex, canonical));
        }
        if rules.is_empty() {
            return Err(RuleFileError::Empty);
        }
        Ok(SectionRules { rules })
    }

    pub fn canonicalize(&self, raw: &str) -> CanonicalSection {
        let normalized = normalize_heading(raw);
        self.rules
            .iter()
            .find(|(re, _)| re.is_match(&normalized))
            .map_or(CanonicalSection::Unknown, |&(_, c)| c)
    }

    /// Splits a brief into headed sections in document order. Text before
    /// the first heading is not part of any section.
    pub fn segment(&self, text: &str) -> Vec<BriefSection> {
        let mut headings: Vec<(Range<usize>, String, CanonicalSection)> = Vec::new();
        let mut offset = 0;
        for line in text.split_inclusive('\n') {
            if let Some((span, raw)) = heading_in_line(line) {
                let canonical = self.canonicalize(&raw);
                let accepted = match span.kind {
                    HeadingKind::Colon => true,
                    HeadingKind::Inline | HeadingKind::Bare => canonical != CanonicalSection::Unknown,
                };
                if accepted {
                    headings.push((offset + span.range.start..offset + span.range.end, raw, canonical));
                }
            }
            offset += line.len();
        }

        let mut sections = Vec::with_capacity(headings.len());
        for (i, (heading_span, raw, canonical)) in headings.iter().enumerate() {
            let region_end = headings.get(i + 1).map_or(text.len(), |(next, _, _)| next.start);
            let region = &text[heading_span.end..region_end];
            let lead = region.len() - region.trim_start().len();
            let body_start = heading_span.end + lead;
            let body_end = (body_start + region.trim().len()).max(body_start);
            sections.push(BriefSection {
                raw_heading: raw.clone(),
                canonical: *canonical,
                body: text[body_start..body_end].to_string(),
                heading_span: heading_span.clone(),
                body_span: body_start..body_end,
            });
        }
        sections
    }
}

impl Default for SectionRules {
    fn default() -> Self {
        SectionRules::parse(DEFAULT_SECTION_RULES).expect("shipped section rules parse")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BriefSection {
    pub raw_heading: String,
    pub canonical: CanonicalSection,
    pub body: String,
    /// Byte span of the heading (including its colon) in the input.
    pub heading_span: Range<usize>,
    /// Byte span of the trimmed body in the input.
    pub body_span: Range<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum HeadingKind {
    /// `Heading:` alone on its line.
    Colon,
    /// `Heading: body text` on one line.
    Inline,
    /// Title-case line without a colon.
    Bare,
}

struct HeadingSpan {
    range: Range<usize>,
    kind: HeadingKind,
}

const MINOR_WORDS: &[&str] = &[
    "of", "the", "and", "or", "for", "in", "on", "to", "a", "an", "by", "at", "v", "vs", "&",
];
const MAX_HEADING_WORDS: usize = 6;

fn is_heading_text(s: &str) -> bool {
    let words: Vec<&str> = s.split_whitespace().collect();
    if words.is_empty() || words.len() > MAX_HEADING_WORDS {
        return false;
    }
    if !words[0].chars().next().is_some_and(char::is_uppercase) {
        return false;
    }
    words.iter().all(|w| {
        let w = w.trim_matches(|c: char| !c.is_alphanumeric());
        w.is_empty()
            || w.chars().next().is_some_and(|c| c.is_uppercase() || c.is_ascii_digit())
            || MINOR_WORDS.contains(&w.to_lowercase().as_str())
    }) && !s.contains(['.', '?', '!', ';'])
}

/// Markup decorations tolerated around a heading.
fn is_decoration(c: char) -> bool {
    matches!(c, '#' | '*' | '_' | '=')
}

fn heading_in_line(line: &str) -> Option<(HeadingSpan, String)> {
    let content = line.trim_end_matches(['\n', '\r']);
    let lead = content.len() - content.trim_start().len();
    let trimmed = content.trim();
    if trimmed.is_empty() {
        return None;
    }
    let start = lead;
    let core = trimmed.trim_start_matches(is_decoration);
    let core_offset = start + (trimmed.len() - core.len());

    if let Some(colon) = core.find(':') {
        let name = core[..colon].trim_end_matches(is_decoration).trim();
        let after = core[colon + 1..].trim_start_matches(is_decoration);
        if is_heading_text(name) {
            let end = core_offset + colon + 1 + (core[colon + 1..].len() - after.len());
            let kind = if after.trim().is_empty() {
                HeadingKind::Colon
            } else {
                HeadingKind::Inline
            };
            let end = if kind == HeadingKind::Colon {
                start + trimmed.len()
            } else {
                end
            };
            return Some((
                HeadingSpan {
                    range: start..end,
                    kind,
                },
                name.to_string(),
            ));
        }
        return None;
    }

    let name = core.trim_end_matches(is_decoration).trim();
    if is_heading_text(name) {
        return Some((
            HeadingSpan {
                range: start..start + trimmed.len(),
                kind: HeadingKind::Bare,
            },
            name.to_string(),
        ));
    }
    None
}

/// Lowercase, punctuation to spaces, collapsed whitespace.
pub fn normalize_heading(raw: &str) -> String {
    let mapped: String = raw.chars().map(|c| if c.is_alphanumeric() { c } else { ' ' }).collect();
    mapped.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

fn default_rules() -> &'static SectionRules {
    static RULES: OnceLock<SectionRules> = OnceLock::new();
    RULES.get_or_init(SectionRules::default)
}

pub fn canonicalize_heading(raw: &str) -> CanonicalSection {
    default_rules().canonicalize(raw)
}

pub fn segment_brief_sections(text: &str) -> Vec<BriefSection> {
    default_rules().segment(text)
}
