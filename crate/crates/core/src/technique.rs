use std::fmt;
use std::str::FromStr;

/// The fourteen propaganda techniques, in canonical order.
///
/// The discriminant is the canonical index. Score files and softmax rows
/// use this order for their columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Technique {
    LoadedLanguage = 0,
    NameCallingLabeling = 1,
    Repetition = 2,
    FlagWaving = 3,
    ExaggerationMinimisation = 4,
    Doubt = 5,
    Slogans = 6,
    AppealToFearPrejudice = 7,
    CausalOversimplification = 8,
    AppealToAuthority = 9,
    BlackAndWhiteFallacy = 10,
    WhataboutismStrawMenRedHerring = 11,
    ThoughtTerminatingCliches = 12,
    BandwagonReductioAdHitlerum = 13,
}

pub const NUM_TECHNIQUES: usize = 14;

impl Technique {
    pub const ALL: [Technique; NUM_TECHNIQUES] = [
        Technique::LoadedLanguage,
        Technique::NameCallingLabeling,
        Technique::Repetition,
        Technique::FlagWaving,
        Technique::ExaggerationMinimisation,
        Technique::Doubt,
        Technique::Slogans,
        Technique::AppealToFearPrejudice,
        Technique::CausalOversimplification,
        Technique::AppealToAuthority,
        Technique::BlackAndWhiteFallacy,
        Technique::WhataboutismStrawMenRedHerring,
        Technique::ThoughtTerminatingCliches,
        Technique::BandwagonReductioAdHitlerum,
    ];

    /// The rare techniques that get a dedicated level-1 ensemble.
    pub const MINORITY: [Technique; 5] = [
        Technique::AppealToAuthority,
        Technique::BlackAndWhiteFallacy,
        Technique::WhataboutismStrawMenRedHerring,
        Technique::ThoughtTerminatingCliches,
        Technique::BandwagonReductioAdHitlerum,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Technique> {
        Self::ALL.get(index).copied()
    }

    pub fn is_minority(self) -> bool {
        Self::MINORITY.contains(&self)
    }

    /// Label string used in label, prediction and model files.
    pub fn wire_name(self) -> &'static str {
        match self {
            Technique::LoadedLanguage => "Loaded_Language",
            Technique::NameCallingLabeling => "Name_Calling,Labeling",
            Technique::Repetition => "Repetition",
            Technique::FlagWaving => "Flag-Waving",
            Technique::ExaggerationMinimisation => "Exaggeration,Minimisation",
            Technique::Doubt => "Doubt",
            Technique::Slogans => "Slogans",
            Technique::AppealToFearPrejudice => "Appeal_to_fear-prejudice",
            Technique::CausalOversimplification => "Causal_Oversimplification",
            Technique::AppealToAuthority => "Appeal_to_Authority",
            Technique::BlackAndWhiteFallacy => "Black-and-White_Fallacy",
            Technique::WhataboutismStrawMenRedHerring => "Whataboutism,Straw_Men,Red_Herring",
            Technique::ThoughtTerminatingCliches => "Thought-terminating_Cliches",
            Technique::BandwagonReductioAdHitlerum => "Bandwagon,Reductio_ad_hitlerum",
        }
    }

    /// Human-readable name for report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Technique::LoadedLanguage => "Loaded Language",
            Technique::NameCallingLabeling => "Name Calling, Labeling",
            Technique::Repetition => "Repetition",
            Technique::FlagWaving => "Flag Waving",
            Technique::ExaggerationMinimisation => "Exaggeration, Minimisation",
            Technique::Doubt => "Doubt",
            Technique::Slogans => "Slogans",
            Technique::AppealToFearPrejudice => "Appeal to fear-prejudice",
            Technique::CausalOversimplification => "Causal Oversimplification",
            Technique::AppealToAuthority => "Appeal to Authority",
            Technique::BlackAndWhiteFallacy => "Black & White Fallacy",
            Technique::WhataboutismStrawMenRedHerring => "Whataboutism, StrawMen, RedHerring",
            Technique::ThoughtTerminatingCliches => "Thought-terminating-Cliches",
            Technique::BandwagonReductioAdHitlerum => "Bandwagon,Reductio-Hitlerum",
        }
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.wire_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownTechnique(pub String);

impl fmt::Display for UnknownTechnique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown technique {:?}", self.0)
    }
}

impl std::error::Error for UnknownTechnique {}

impl FromStr for Technique {
    type Err = UnknownTechnique;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Technique::ALL
            .iter()
            .copied()
            .find(|t| t.wire_name() == s)
            .ok_or_else(|| UnknownTechnique(s.to_string()))
    }
}
