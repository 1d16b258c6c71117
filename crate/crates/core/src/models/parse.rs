//! Line-oriented model files.
//!
//! ```text
//! model hard_squares
//! alphabet 2
//! placement vertex
//! symmetry C4
//! mode forbid
//! 1 1 / 0 0      # top row a b, bottom row c d
//! ```
//!
//! Bond models list `north west east south` in the same `a b / c d` slots.

use super::{ModelSpec, Placement, Symmetry, MAX_ALPHABET};
use crate::error::{Error, Result};

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses and validates a model file.
pub fn parse_model_file(text: &str) -> Result<ModelSpec> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let mut header = |key: &str| -> Result<(usize, String)> {
        let (no, line) = lines
            .next()
            .ok_or_else(|| parse_error(0, format!("missing `{key}` line")))?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(parse_error(
                no,
                format!("expected `{key} <value>`, found `{line}`"),
            ));
        }
        let value = parts
            .next()
            .ok_or_else(|| parse_error(no, format!("`{key}` needs a value")))?;
        if parts.next().is_some() {
            return Err(parse_error(
                no,
                format!("trailing text after `{key} {value}`"),
            ));
        }
        Ok((no, value.to_string()))
    };

    let (_, name) = header("model")?;
    let (q_line, q_text) = header("alphabet")?;
    let q: usize = q_text.parse().map_err(|_| {
        parse_error(
            q_line,
            format!("alphabet size `{q_text}` is not an integer"),
        )
    })?;
    if !(1..=MAX_ALPHABET).contains(&q) {
        return Err(parse_error(
            q_line,
            format!("alphabet size {q} outside 1..={MAX_ALPHABET}"),
        ));
    }
    let (p_line, p_text) = header("placement")?;
    let placement = match p_text.as_str() {
        "vertex" => Placement::Vertex,
        "face" => Placement::Face,
        "bond" => Placement::Bond,
        other => return Err(parse_error(p_line, format!("unknown placement `{other}`"))),
    };
    let (s_line, s_text) = header("symmetry")?;
    let symmetry = match s_text.as_str() {
        "C4" | "c4" => Symmetry::C4,
        "C2" | "c2" => Symmetry::C2,
        other => return Err(parse_error(s_line, format!("unknown symmetry `{other}`"))),
    };
    let (m_line, m_text) = header("mode")?;
    let forbid = match m_text.as_str() {
        "forbid" => true,
        "allow" => false,
        other => return Err(parse_error(m_line, format!("unknown mode `{other}`"))),
    };

    let default = u8::from(forbid);
    let mut weights = vec![default; q.pow(4)];
    let mut seen = vec![None::<usize>; q.pow(4)];
    for (no, line) in lines {
        let (top, bottom) = line
            .split_once('/')
            .ok_or_else(|| parse_error(no, format!("expected `a b / c d`, found `{line}`")))?;
        let mut states = Vec::with_capacity(4);
        for half in [top, bottom] {
            let items: Vec<&str> = half.split_whitespace().collect();
            if items.len() != 2 {
                return Err(parse_error(
                    no,
                    format!("expected two states on each side of `/` in `{line}`"),
                ));
            }
            for item in items {
                let s: usize = item
                    .parse()
                    .map_err(|_| parse_error(no, format!("state `{item}` is not an integer")))?;
                if s >= q {
                    return Err(parse_error(no, format!("state {s} outside 0..{q}")));
                }
                states.push(s);
            }
        }
        let idx = ((states[0] * q + states[1]) * q + states[2]) * q + states[3];
        if let Some(first) = seen[idx] {
            return Err(parse_error(
                no,
                format!("cell `{line}` already listed on line {first}"),
            ));
        }
        seen[idx] = Some(no);
        weights[idx] = 1 - default;
    }
    ModelSpec::new(name, q, placement, symmetry, weights)
}
