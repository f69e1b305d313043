use regex::Regex;
use std::sync::LazyLock;

use crate::snippet::parse;

static FENCE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)```[A-Za-z0-9_+-]*[ \t]*\r?\n(.*?)```").unwrap());

/// Pulls code out of a model response: the first fenced block when there is
/// one, otherwise the longest run of lines that parses and starts with a
/// definition.
pub fn extract_code(raw: &str) -> Option<String> {
    if let Some(c) = FENCE.captures(raw) {
        let body = c[1].trim_end_matches(['\n', '\r', ' ', '\t']);
        return (!body.trim().is_empty()).then(|| body.to_string());
    }
    let lines: Vec<&str> = raw.lines().collect();
    let mut best: Option<String> = None;
    for start in 0..lines.len() {
        let head = lines[start].trim_start();
        if !["def ", "class ", "@", "from ", "import "].iter().any(|p| head.starts_with(p)) {
            continue;
        }
        let indent = lines[start].len() - head.len();
        for end in (start + 1..=lines.len()).rev() {
            if best.as_ref().is_some_and(|b| b.lines().count() >= end - start) {
                break;
            }
            let region: Vec<&str> = lines[start..end]
                .iter()
                .map(|l| if l.len() >= indent && l[..indent].trim().is_empty() { &l[indent..] } else { l.trim_start() })
                .collect();
            let text = region.join("\n").trim_end().to_string();
            if let Ok(module) = parse(&text) {
                let defines = module
                    .iter()
                    .any(|s| matches!(s, crate::snippet::ast::Stmt::FunctionDef(_) | crate::snippet::ast::Stmt::ClassDef { .. }));
                if defines {
                    best = Some(text);
                    break;
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fenced_block() {
        let raw = "Here is the method:\n```python\ndef m(self):\n    return True\n```\nIt returns True.";
        assert_eq!(extract_code(raw).unwrap(), "def m(self):\n    return True");
    }

    #[test]
    fn bare_code() {
        let raw = "def m(self) -> bool:\n    return self.x > 1\n";
        assert_eq!(extract_code(raw).unwrap(), raw.trim_end());
    }

    #[test]
    fn first_of_two_blocks() {
        let raw = "```python\ndef a(self):\n    return 1\n```\nor\n```\ndef b(self):\n    return 2\n```";
        assert_eq!(extract_code(raw).unwrap(), "def a(self):\n    return 1");
    }

    #[test]
    fn prose_around_unfenced_code() {
        let raw = "Sure! Consider this:\n\n    def m(self):\n        return self.x\n\nThat should work.";
        assert_eq!(extract_code(raw).unwrap(), "def m(self):\n    return self.x");
    }

    #[test]
    fn nothing_to_extract() {
        assert_eq!(extract_code("I cannot help with that."), None);
        assert_eq!(extract_code("```\n\n```"), None);
    }
}
