use std::fmt;

use serde::{Deserialize, Serialize};

/// A concrete attribute value as it appears in an instance assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Bool(bool),
    Int(i64),
    Real(f64),
    Str(String),
}

impl AttrValue {
    pub fn str(s: impl Into<String>) -> Self {
        AttrValue::Str(s.into())
    }

    /// Renders the value as a Python literal.
    pub fn python_literal(&self) -> String {
        match self {
            AttrValue::Bool(true) => "True".into(),
            AttrValue::Bool(false) => "False".into(),
            AttrValue::Int(i) => i.to_string(),
            AttrValue::Real(r) => python_float(*r),
            AttrValue::Str(s) => python_str(s),
        }
    }

    /// Key used when values index outcome maps: strings verbatim, everything
    /// else as its Python literal.
    pub fn key(&self) -> String {
        match self {
            AttrValue::Str(s) => s.clone(),
            other => other.python_literal(),
        }
    }
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

pub(crate) fn python_float(r: f64) -> String {
    if r.is_finite() && r.fract() == 0.0 && r.abs() < 1e16 {
        format!("{r:.1}")
    } else {
        format!("{r}")
    }
}

pub(crate) fn python_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals() {
        assert_eq!(AttrValue::str("it's").python_literal(), "'it\\'s'");
        assert_eq!(AttrValue::Real(2.0).python_literal(), "2.0");
        assert_eq!(AttrValue::Real(3.25).python_literal(), "3.25");
        assert_eq!(AttrValue::Bool(false).python_literal(), "False");
        assert_eq!(AttrValue::str("male").key(), "male");
        assert_eq!(AttrValue::Int(7).key(), "7");
    }

    #[test]
    fn untagged_json_prefers_narrowest_type() {
        let v: Vec<AttrValue> = serde_json::from_str(r#"[true, 3, 2.5, 2.0, "x"]"#).unwrap();
        assert_eq!(v, vec![AttrValue::Bool(true), AttrValue::Int(3), AttrValue::Real(2.5), AttrValue::Real(2.0), AttrValue::str("x")]);
    }
}
