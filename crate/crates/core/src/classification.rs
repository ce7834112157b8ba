//! Risk classification of device software: Annex VIII Rule 11 and the
//! "drives or influences" rule of section 3.3.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Device risk class, ordered `I < IIa < IIb < III`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RiskClass {
    I,
    #[serde(rename = "IIa")]
    IIa,
    #[serde(rename = "IIb")]
    IIb,
    #[serde(rename = "III")]
    III,
}

impl RiskClass {
    pub const ALL: [RiskClass; 4] = [RiskClass::I, RiskClass::IIa, RiskClass::IIb, RiskClass::III];

    pub fn as_str(self) -> &'static str {
        match self {
            RiskClass::I => "I",
            RiskClass::IIa => "IIa",
            RiskClass::IIb => "IIb",
            RiskClass::III => "III",
        }
    }
}

impl fmt::Display for RiskClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RiskClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        RiskClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown risk class `{s}` (expected I, IIa, IIb or III)"))
    }
}

pub fn max_class(a: RiskClass, b: RiskClass) -> RiskClass {
    a.max(b)
}

/// Facts about the software relevant to Rule 11.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassificationProfile {
    /// Provides information used to take decisions with diagnostic or
    /// therapeutic purposes.
    pub informs_diagnosis_or_therapy: bool,
    pub can_cause_death_or_irreversible: bool,
    pub can_cause_serious_deterioration: bool,
    pub monitors_physiological_processes: bool,
    /// Variations in monitored parameters could result in immediate danger.
    pub can_cause_immediate_harm: bool,
    pub drives_or_influences_device: bool,
}

impl ClassificationProfile {
    pub const FLAGS: [&'static str; 6] = [
        "informs_diagnosis_or_therapy",
        "can_cause_death_or_irreversible",
        "can_cause_serious_deterioration",
        "monitors_physiological_processes",
        "can_cause_immediate_harm",
        "drives_or_influences_device",
    ];

    /// Profile from flag bits in [`Self::FLAGS`] order (bit 0 = first flag).
    pub fn from_bits(bits: u8) -> Self {
        let b = |i: u8| bits & (1 << i) != 0;
        ClassificationProfile {
            informs_diagnosis_or_therapy: b(0),
            can_cause_death_or_irreversible: b(1),
            can_cause_serious_deterioration: b(2),
            monitors_physiological_processes: b(3),
            can_cause_immediate_harm: b(4),
            drives_or_influences_device: b(5),
        }
    }

    pub fn bits(&self) -> u8 {
        [
            self.informs_diagnosis_or_therapy,
            self.can_cause_death_or_irreversible,
            self.can_cause_serious_deterioration,
            self.monitors_physiological_processes,
            self.can_cause_immediate_harm,
            self.drives_or_influences_device,
        ]
        .iter()
        .enumerate()
        .fold(0, |acc, (i, &f)| acc | ((f as u8) << i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassRule {
    Default,
    DiagnosisOrTherapy,
    SeriousDeterioration,
    DeathOrIrreversible,
    Monitoring,
    ImmediateHarm,
    DrivesDevice,
}

impl ClassRule {
    pub fn citation(self) -> &'static str {
        match self {
            ClassRule::Default => "MDR Annex VIII, Rule 11, last subparagraph (all other software)",
            ClassRule::DiagnosisOrTherapy => "MDR Annex VIII, Rule 11, first subparagraph",
            ClassRule::SeriousDeterioration => {
                "MDR Annex VIII, Rule 11, first subparagraph, second indent"
            }
            ClassRule::DeathOrIrreversible => {
                "MDR Annex VIII, Rule 11, first subparagraph, first indent"
            }
            ClassRule::Monitoring => "MDR Annex VIII, Rule 11, second subparagraph",
            ClassRule::ImmediateHarm => "MDR Annex VIII, Rule 11, second subparagraph, exception",
            ClassRule::DrivesDevice => "MDR Annex VIII, section 3.3",
        }
    }
}

/// One rule considered during classification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassStep {
    pub rule: ClassRule,
    pub class: RiskClass,
    /// False when a severity flag was set but the pathway it escalates
    /// (diagnosis/therapy or monitoring) was not.
    pub applied: bool,
    pub citation: String,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassTrace {
    pub steps: Vec<ClassStep>,
    pub intrinsic: RiskClass,
    pub result: RiskClass,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifyError {
    #[error("software drives or influences a device but no linked device class was given")]
    MissingLinkedClass,
}

/// Classify device software.
///
/// The intrinsic class is the maximum over the triggered rules: class I by
/// default; IIa for software informing diagnosis or therapy, escalated to IIb
/// on possible serious deterioration and to III on possible death or
/// irreversible deterioration; IIa for monitoring of physiological processes,
/// escalated to IIb where variations could cause immediate harm. Software
/// that drives or influences a device takes at least that device's class.
pub fn classify(
    profile: &ClassificationProfile,
    linked_device_class: Option<RiskClass>,
) -> Result<(RiskClass, ClassTrace), ClassifyError> {
    let mut steps = Vec::new();
    let mut step = |rule: ClassRule, class: RiskClass, applied: bool, note: &str| {
        steps.push(ClassStep {
            rule,
            class,
            applied,
            citation: rule.citation().to_owned(),
            note: note.to_owned(),
        });
    };

    step(
        ClassRule::Default,
        RiskClass::I,
        true,
        "software that is a device starts in class I",
    );

    let p = profile;
    if p.informs_diagnosis_or_therapy {
        step(
            ClassRule::DiagnosisOrTherapy,
            RiskClass::IIa,
            true,
            "provides information used for diagnostic or therapeutic decisions",
        );
    }
    if p.can_cause_serious_deterioration {
        step(
            ClassRule::SeriousDeterioration,
            RiskClass::IIb,
            p.informs_diagnosis_or_therapy,
            if p.informs_diagnosis_or_therapy {
                "decisions may cause serious deterioration of health"
            } else {
                "not applied: escalates only the diagnosis/therapy pathway"
            },
        );
    }
    if p.can_cause_death_or_irreversible {
        step(
            ClassRule::DeathOrIrreversible,
            RiskClass::III,
            p.informs_diagnosis_or_therapy,
            if p.informs_diagnosis_or_therapy {
                "decisions may cause death or irreversible deterioration"
            } else {
                "not applied: escalates only the diagnosis/therapy pathway"
            },
        );
    }
    if p.monitors_physiological_processes {
        step(
            ClassRule::Monitoring,
            RiskClass::IIa,
            true,
            "monitors physiological processes",
        );
    }
    if p.can_cause_immediate_harm {
        step(
            ClassRule::ImmediateHarm,
            RiskClass::IIb,
            p.monitors_physiological_processes,
            if p.monitors_physiological_processes {
                "monitored variations could result in immediate danger"
            } else {
                "not applied: escalates only the monitoring pathway"
            },
        );
    }

    let intrinsic = steps
        .iter()
        .filter(|s| s.applied)
        .map(|s| s.class)
        .fold(RiskClass::I, max_class);

    let mut result = intrinsic;
    if p.drives_or_influences_device {
        let linked = linked_device_class.ok_or(ClassifyError::MissingLinkedClass)?;
        steps.push(ClassStep {
            rule: ClassRule::DrivesDevice,
            class: linked,
            applied: true,
            citation: ClassRule::DrivesDevice.citation().to_owned(),
            note: format!("drives or influences a class {linked} device"),
        });
        result = max_class(intrinsic, linked);
    }

    Ok((
        result,
        ClassTrace {
            steps,
            intrinsic,
            result,
        },
    ))
}
