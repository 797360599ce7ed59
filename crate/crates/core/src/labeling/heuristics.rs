use std::collections::BTreeSet;

use regex::Regex;

use crate::aggregation::{ratio, SenderAggregate};
use crate::category::Label;
use crate::corpus::canonical::{name_tokens, CanonicalSender};
use crate::error::{Error, Result};

/// Name lists consulted by the human/machine rules.
#[derive(Debug, Clone)]
pub struct NameLists {
    pub first_names: BTreeSet<String>,
    pub reserved_words: BTreeSet<String>,
}

impl Default for NameLists {
    fn default() -> Self {
        NameLists {
            first_names: crate::resources::first_names(),
            reserved_words: crate::resources::reserved_words(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HeuristicConfig {
    /// Machine when at least this fraction of bodies mention "unsubscribe".
    pub unsubscribe_fraction: f64,
    /// Machine when the spam-vote ratio exceeds this.
    pub spam_ratio: f64,
    /// Name-part patterns marking a human; a `first` capture group must hold a
    /// known first name.
    pub human_patterns: Vec<Regex>,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            unsubscribe_fraction: 0.5,
            spam_ratio: 0.2,
            human_patterns: vec![Regex::new(r"^(?P<first>[a-z]+)[._](?P<last>[a-z]+)$").expect("valid pattern")],
        }
    }
}

impl HeuristicConfig {
    pub fn with_patterns(patterns: &[String]) -> Result<Self> {
        let human_patterns = patterns
            .iter()
            .map(|p| Regex::new(p).map_err(|e| Error::config(format!("bad name pattern {p:?}: {e}"))))
            .collect::<Result<_>>()?;
        Ok(HeuristicConfig { human_patterns, ..HeuristicConfig::default() })
    }
}

fn has_reserved_word(name_part: &str, reserved: &BTreeSet<String>) -> bool {
    if reserved.contains(name_part) {
        return true;
    }
    if name_part.split(['.', '+', '_']).any(|p| reserved.contains(p)) {
        return true;
    }
    name_tokens(name_part).into_iter().any(|t| reserved.contains(t))
}

/// Human/machine rules. Machine rules win over human rules; `None` when no
/// rule fires.
pub fn heuristic_human_machine(
    agg: &SenderAggregate,
    sender: &CanonicalSender,
    lists: &NameLists,
    cfg: &HeuristicConfig,
) -> Option<Label> {
    let name = sender.name_part.as_str();
    let machine = has_reserved_word(name, &lists.reserved_words)
        || (agg.message_count > 0 && ratio(agg.unsubscribe_messages, agg.message_count) >= cfg.unsubscribe_fraction)
        || ratio(agg.actions.spam_vote, agg.message_count) > cfg.spam_ratio;
    if machine {
        return Some(Label::Machine);
    }
    let human = cfg.human_patterns.iter().any(|re| match re.captures(name) {
        Some(caps) => caps
            .name("first")
            .is_none_or(|m| lists.first_names.contains(m.as_str())),
        None => false,
    });
    human.then_some(Label::HUMAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::canonical::canonicalize_sender;

    fn check(address: &str, agg: &SenderAggregate) -> Option<Label> {
        let c = canonicalize_sender(address).unwrap();
        heuristic_human_machine(agg, &c, &NameLists::default(), &HeuristicConfig::default())
    }

    fn quiet(n: u64) -> SenderAggregate {
        let mut a = SenderAggregate::new("x");
        a.message_count = n;
        a
    }

    #[test]
    fn reserved_words_mark_machines() {
        assert_eq!(check("mailer-daemon@foo.com", &quiet(3)), Some(Label::Machine));
        assert_eq!(check("no-reply@foo.com", &quiet(3)), Some(Label::Machine));
        assert_eq!(check("alerts.noreply@foo.com", &quiet(3)), Some(Label::Machine));
    }

    #[test]
    fn first_last_marks_humans() {
        assert_eq!(check("jane.doe@gmail.com", &quiet(3)), Some(Label::HUMAN));
        assert_eq!(check("zzyzx.doe@gmail.com", &quiet(3)), None);
    }

    #[test]
    fn abstains_without_rules() {
        assert_eq!(check("info@shop.com", &quiet(3)), None);
    }

    #[test]
    fn unsubscribe_and_spam_rules() {
        let mut a = quiet(10);
        a.unsubscribe_messages = 5;
        assert_eq!(check("jane.doe@gmail.com", &a), Some(Label::Machine));
        let mut b = quiet(10);
        b.actions.spam_vote = 3;
        assert_eq!(check("info@shop.com", &b), Some(Label::Machine));
    }
}
