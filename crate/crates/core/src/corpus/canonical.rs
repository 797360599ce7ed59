use std::collections::HashMap;

use crate::error::{Error, Result};

/// Marker substituted for variable tokens in an address name part.
pub const WILDCARD: &str = ".*";

const DELIMITERS: [char; 4] = ['.', '+', '_', '-'];

/// A sender address and the pattern it belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CanonicalSender {
    pub raw: String,
    pub canonical: String,
    pub name_part: String,
    pub domain_part: String,
}

impl CanonicalSender {
    /// True when at least one token of the name part was wildcarded.
    pub fn is_wildcarded(&self) -> bool {
        self.name_part.contains(WILDCARD)
    }
}

/// Maps an address to its canonical pattern by replacing variable name-part
/// tokens (ids, hashes, tracking numbers) with [`WILDCARD`].
pub fn canonicalize_sender(address: &str) -> Result<CanonicalSender> {
    let raw = address.trim().to_lowercase();
    let (name, domain) = raw
        .rsplit_once('@')
        .ok_or_else(|| Error::InvalidAddress(address.to_string()))?;
    let name_part = canonical_name(name);
    Ok(CanonicalSender {
        canonical: format!("{name_part}@{domain}"),
        domain_part: domain.to_string(),
        name_part,
        raw,
    })
}

/// Canonical address string only; the hot path of the online classifier.
pub fn canonical_address(address: &str) -> Result<String> {
    canonicalize_sender(address).map(|c| c.canonical)
}

fn canonical_name(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    let mut token = String::new();
    let mut rest = name;
    let flush = |token: &mut String, out: &mut String| {
        if !token.is_empty() {
            if is_variable_token(token) {
                push_wildcard(out);
            } else {
                out.push_str(token);
            }
            token.clear();
        }
    };
    while let Some(ch) = rest.chars().next() {
        if rest.starts_with(WILDCARD) {
            flush(&mut token, &mut out);
            push_wildcard(&mut out);
            rest = &rest[WILDCARD.len()..];
            continue;
        }
        if DELIMITERS.contains(&ch) {
            flush(&mut token, &mut out);
            out.push(ch);
        } else {
            token.push(ch);
        }
        rest = &rest[ch.len_utf8()..];
    }
    flush(&mut token, &mut out);
    out
}

// Adjacent wildcards collapse so that the output is a fixpoint.
fn push_wildcard(out: &mut String) {
    if !out.ends_with(WILDCARD) {
        out.push_str(WILDCARD);
    }
}

/// Splits a name part on delimiters, keeping the wildcard marker as one token.
pub fn name_tokens(name_part: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for piece in name_part.split(WILDCARD) {
        out.extend(piece.split(&DELIMITERS[..]).filter(|t| !t.is_empty()));
    }
    out
}

/// Decides whether a name-part token is a variable string.
///
/// A token is variable when any of these hold:
/// * it is all digits and at least 4 long;
/// * it is at least 8 long with a digit fraction of at least 0.3;
/// * it is at least 8 long and alternates between letters and digits at
///   least three times (`5tsdfocfyf66c`);
/// * its per-character Shannon entropy is at least 3.5 bits.
pub fn is_variable_token(token: &str) -> bool {
    let chars: Vec<char> = token.chars().collect();
    let len = chars.len();
    if len == 0 {
        return false;
    }
    let digits = chars.iter().filter(|c| c.is_ascii_digit()).count();
    if digits == len && len >= 4 {
        return true;
    }
    if len >= 8 && digits as f64 / len as f64 >= 0.3 {
        return true;
    }
    if len >= 8 {
        let transitions = chars
            .windows(2)
            .filter(|w| w[0].is_ascii_digit() != w[1].is_ascii_digit())
            .count();
        if transitions >= 3 {
            return true;
        }
    }
    shannon_entropy(&chars) >= 3.5
}

fn shannon_entropy(chars: &[char]) -> f64 {
    let mut counts: HashMap<char, usize> = HashMap::new();
    for &c in chars {
        *counts.entry(c).or_default() += 1;
    }
    let n = chars.len() as f64;
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}
