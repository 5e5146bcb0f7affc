use serde::{Deserialize, Serialize};

use super::GenError;

const SEPARATOR: &str = " | ";

/// Content, identity and style fields of a personalised prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptFields {
    pub content: String,
    pub identity: String,
    pub style: String,
}

/// Builds prompt fields from a received caption and receiver preferences.
pub fn personalize_prompt(caption: &str, identity: &str, style: &str) -> Result<PromptFields, GenError> {
    if caption.is_empty() {
        return Err(GenError::EmptyCaption);
    }
    Ok(PromptFields { content: caption.to_string(), identity: identity.to_string(), style: style.to_string() })
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if c == '\\' || c == '|' {
            out.push('\\');
        }
        out.push(c);
    }
    out
}

impl PromptFields {
    /// Fields joined by `" | "` with trailing empty fields dropped. Literal
    /// `|` and `\` are backslash-escaped.
    pub fn serialize(&self) -> String {
        let mut parts = vec![escape(&self.content), escape(&self.identity), escape(&self.style)];
        while parts.len() > 1 && parts.last().is_some_and(|p| p.is_empty()) {
            parts.pop();
        }
        parts.join(SEPARATOR)
    }

    /// Inverse of [`PromptFields::serialize`].
    pub fn parse(s: &str) -> Result<Self, GenError> {
        let mut fields = vec![String::new()];
        let mut chars = s.chars().peekable();
        while let Some(c) = chars.next() {
            match c {
                '\\' => match chars.next() {
                    Some(e @ ('\\' | '|')) => fields.last_mut().expect("non-empty").push(e),
                    _ => return Err(GenError::MalformedPrompt("dangling escape".into())),
                },
                '|' => {
                    let cur = fields.last_mut().expect("non-empty");
                    if cur.pop() != Some(' ') || chars.next() != Some(' ') {
                        return Err(GenError::MalformedPrompt("separator must be \" | \"".into()));
                    }
                    fields.push(String::new());
                }
                c => fields.last_mut().expect("non-empty").push(c),
            }
        }
        if fields.len() > 3 {
            return Err(GenError::MalformedPrompt(format!("{} fields", fields.len())));
        }
        fields.resize(3, String::new());
        let [content, identity, style]: [String; 3] = fields.try_into().expect("three fields");
        personalize_prompt(&content, &identity, &style)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_fields_are_elided() {
        let p = personalize_prompt("a woman drives a car", "", "").unwrap();
        assert_eq!(p.serialize(), "a woman drives a car");
    }

    #[test]
    fn suffixes_in_order() {
        let p = personalize_prompt("a woman drives a car", "anonymized face", "oil painting").unwrap();
        assert_eq!(p.serialize(), "a woman drives a car | anonymized face | oil painting");
        let q = personalize_prompt("x", "", "sketch").unwrap();
        assert_eq!(q.serialize(), "x |  | sketch");
        assert_eq!(PromptFields::parse(&q.serialize()).unwrap(), q);
    }

    #[test]
    fn empty_caption_rejected() {
        assert!(matches!(personalize_prompt("", "a", "b"), Err(GenError::EmptyCaption)));
    }

    #[test]
    fn escapes() {
        let p = personalize_prompt("a|b \\ c", "| ", " |").unwrap();
        assert_eq!(PromptFields::parse(&p.serialize()).unwrap(), p);
        assert!(PromptFields::parse("a|b").is_err());
        assert!(PromptFields::parse("a\\").is_err());
    }

    proptest! {
        #[test]
        fn round_trip(c in "\\PC{1,40}", i in "\\PC{0,20}", s in "\\PC{0,20}") {
            let p = personalize_prompt(&c, &i, &s).unwrap();
            prop_assert_eq!(PromptFields::parse(&p.serialize()).unwrap(), p);
        }
    }
}
