//! Manufacturer intention from structured evidence.
//!
//! Direct intention comes from what the manufacturer says, indirect intention
//! from what the software actually does. One affirming item establishes its
//! channel; denials never cancel an affirmation, and if either channel is
//! established, intention is established.

use serde::{Deserialize, Serialize};

use crate::case::AssessmentCase;
use crate::evidence::{EvidenceChannel, EvidenceItem, Polarity};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntentionFinding {
    pub channel: EvidenceChannel,
    pub established: bool,
    /// Affirming items of this channel, sorted by id.
    pub supporting: Vec<String>,
    /// Denying items of this channel, sorted by id.
    pub contradicting: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrevailingChannel {
    Direct,
    Indirect,
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntentionResolution {
    pub established: bool,
    pub prevailing_channel: Option<PrevailingChannel>,
    pub direct: IntentionFinding,
    pub indirect: IntentionFinding,
}

impl IntentionResolution {
    pub fn summary(&self) -> String {
        match self.prevailing_channel {
            None => "intention: not established".to_owned(),
            Some(PrevailingChannel::Direct) => "intention: established (direct)".to_owned(),
            Some(PrevailingChannel::Indirect) => "intention: established (indirect)".to_owned(),
            Some(PrevailingChannel::Both) => {
                "intention: established (direct and indirect)".to_owned()
            }
        }
    }
}

/// Findings for one channel. Items of the other channel are ignored.
pub fn assess_channel<'a>(
    channel: EvidenceChannel,
    evidence: impl IntoIterator<Item = &'a EvidenceItem>,
) -> IntentionFinding {
    let mut supporting = Vec::new();
    let mut contradicting = Vec::new();
    for item in evidence.into_iter().filter(|e| e.channel == channel) {
        match item.polarity {
            Polarity::Affirms => supporting.push(item.id.clone()),
            Polarity::Denies => contradicting.push(item.id.clone()),
            Polarity::Neutral => {}
        }
    }
    supporting.sort();
    supporting.dedup();
    contradicting.sort();
    contradicting.dedup();
    IntentionFinding {
        channel,
        established: !supporting.is_empty(),
        supporting,
        contradicting,
    }
}

/// Combine the two channels: the affirming channel prevails.
///
/// `direct` and `indirect` must be findings for their respective channels.
pub fn resolve_intention(
    direct: IntentionFinding,
    indirect: IntentionFinding,
) -> IntentionResolution {
    debug_assert_eq!(direct.channel, EvidenceChannel::Direct);
    debug_assert_eq!(indirect.channel, EvidenceChannel::Indirect);
    let prevailing_channel = match (direct.established, indirect.established) {
        (true, true) => Some(PrevailingChannel::Both),
        (true, false) => Some(PrevailingChannel::Direct),
        (false, true) => Some(PrevailingChannel::Indirect),
        (false, false) => None,
    };
    IntentionResolution {
        established: prevailing_channel.is_some(),
        prevailing_channel,
        direct,
        indirect,
    }
}

/// Resolve intention over all of a case's evidence.
pub fn resolve_case(case: &AssessmentCase) -> IntentionResolution {
    resolve_intention(
        assess_channel(EvidenceChannel::Direct, &case.evidence),
        assess_channel(EvidenceChannel::Indirect, &case.evidence),
    )
}

/// The `derived(intention)` computation: whether intention is established
/// from the case's evidence alone. Explicit answers on the node are applied
/// by the evaluator as overrides, not here.
pub fn derived_intention(case: &AssessmentCase) -> bool {
    resolve_case(case).established
}
