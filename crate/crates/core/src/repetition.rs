//! Stage three: a fragment counts as repeated when its longest common
//! subsequence with some stretch of the context covers at least `tau`
//! percent of it, where `tau = 100 - m * l` drops with fragment length `l`.

use std::fmt;
use std::str::FromStr;

use crate::corpus::{Instance, Span};
use crate::error::{Error, Result};
use crate::text::normalize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowMode {
    /// Match against the whole context with the fragment itself removed.
    WholeContext,
    /// Sliding windows of `ceil(window_factor * l)` characters, advancing by
    /// `ceil(stride_factor * l)`.
    Windowed { window_factor: f64, stride_factor: f64 },
}

impl WindowMode {
    pub const DEFAULT_WINDOWED: WindowMode = WindowMode::Windowed {
        window_factor: 2.0,
        stride_factor: 0.5,
    };
}

impl FromStr for WindowMode {
    type Err = String;

    /// `whole` or `windowed`; the latter takes default factors.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "whole" => Ok(WindowMode::WholeContext),
            "windowed" => Ok(WindowMode::DEFAULT_WINDOWED),
            _ => Err(format!("window mode {s:?} is not `whole` or `windowed`")),
        }
    }
}

impl fmt::Display for WindowMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WindowMode::WholeContext => f.write_str("whole"),
            WindowMode::Windowed { .. } => f.write_str("windowed"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepetitionConfig {
    pub slope_m: f64,
    pub tau_min: f64,
    pub window_mode: WindowMode,
    pub normalize: bool,
}

impl Default for RepetitionConfig {
    fn default() -> Self {
        RepetitionConfig {
            slope_m: 0.2,
            tau_min: 50.0,
            window_mode: WindowMode::DEFAULT_WINDOWED,
            normalize: true,
        }
    }
}

impl RepetitionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.slope_m >= 0.0 && self.slope_m.is_finite()) {
            return Err(Error::Config(format!("slope {} must be >= 0", self.slope_m)));
        }
        if !(0.0..=100.0).contains(&self.tau_min) {
            return Err(Error::Config(format!("tau-min {} outside [0,100]", self.tau_min)));
        }
        if let WindowMode::Windowed {
            window_factor,
            stride_factor,
        } = self.window_mode
        {
            if !(window_factor >= 1.0 && window_factor.is_finite()) {
                return Err(Error::Config(format!("window factor {window_factor} must be >= 1")));
            }
            if !(stride_factor > 0.0 && stride_factor <= 1.0) {
                return Err(Error::Config(format!("stride factor {stride_factor} outside (0,1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchReport {
    pub fired: bool,
    pub best_percent: f64,
    pub tau: f64,
    /// Context range of the best window (first one on ties).
    pub best_window: Span,
    /// Set when the fragment normalized to nothing and the detector abstained.
    pub empty_fragment: bool,
}

impl MatchReport {
    pub fn abstain() -> Self {
        MatchReport {
            fired: false,
            best_percent: 0.0,
            tau: 100.0,
            best_window: Span::new(0, 0),
            empty_fragment: false,
        }
    }
}

/// Required percent match for a fragment of `l` characters:
/// `100 - m * l`, clamped to `[tau_min, 100]`.
pub fn threshold_for_length(m: f64, l: usize, tau_min: f64) -> f64 {
    (100.0 - m * l as f64).clamp(tau_min, 100.0)
}

/// Length of the longest common subsequence, using one row of
/// `min(|a|, |b|) + 1` cells.
pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return 0;
    }
    let mut row = vec![0usize; short.len() + 1];
    for x in long {
        let mut diag = 0;
        for (j, y) in short.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[short.len()]
}

pub fn lcs_length_str(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    lcs_length(&a, &b)
}

/// `100 * lcs / |fragment|`, optionally after normalizing both strings.
pub fn percent_match(fragment: &str, window: &str, normalize_text: bool) -> Result<f64> {
    let (f, w) = if normalize_text {
        (normalize(fragment), normalize(window))
    } else {
        (fragment.to_string(), window.to_string())
    };
    let f: Vec<char> = f.chars().collect();
    if f.is_empty() {
        return Err(Error::Contract("percent match of an empty fragment".into()));
    }
    let w: Vec<char> = w.chars().collect();
    Ok(percent_of(&f, &w))
}

fn percent_of(fragment: &[char], window: &[char]) -> f64 {
    100.0 * lcs_length(fragment, window) as f64 / fragment.len() as f64
}

/// Windows over `context` (in context character offsets) with the characters
/// of `masked` removed from their text.
pub fn enumerate_windows(context: &[char], fragment_len: usize, masked: Span, mode: WindowMode) -> Vec<(Span, String)> {
    let text_of = |range: Span| -> String {
        (range.start..range.end)
            .filter(|i| !masked.contains(*i))
            .map(|i| context[i])
            .collect()
    };
    let len = context.len();
    let (window_factor, stride_factor) = match mode {
        WindowMode::WholeContext => {
            let all = Span::new(0, len);
            return vec![(all, text_of(all))];
        }
        WindowMode::Windowed {
            window_factor,
            stride_factor,
        } => (window_factor, stride_factor),
    };
    let width = ((window_factor * fragment_len as f64).ceil() as usize).max(1);
    let stride = ((stride_factor * fragment_len as f64).ceil() as usize).max(1);
    let mut windows = Vec::new();
    let mut start = 0;
    loop {
        let range = Span::new(start, (start + width).min(len));
        windows.push((range, text_of(range)));
        if range.end >= len {
            break;
        }
        start += stride;
    }
    windows
}

/// Runs the detector on the instance's context, with the instance's own
/// span masked out.
pub fn detect_repetition(instance: &Instance, config: &RepetitionConfig) -> MatchReport {
    let fragment = if config.normalize {
        normalize(&instance.fragment)
    } else {
        instance.fragment.clone()
    };
    let fragment: Vec<char> = fragment.chars().collect();
    if fragment.is_empty() {
        return MatchReport {
            empty_fragment: true,
            ..MatchReport::abstain()
        };
    }
    let tau = threshold_for_length(config.slope_m, fragment.len(), config.tau_min);
    let context: Vec<char> = instance.context.chars().collect();
    let raw_len = instance.fragment.chars().count();
    let mut best = (f64::NEG_INFINITY, Span::new(0, 0));
    for (range, text) in enumerate_windows(&context, raw_len, instance.masked, config.window_mode) {
        let window: Vec<char> = if config.normalize {
            normalize(&text).chars().collect()
        } else {
            text.chars().collect()
        };
        let percent = percent_of(&fragment, &window);
        if percent > best.0 {
            best = (percent, range);
        }
    }
    MatchReport {
        fired: best.0 >= tau,
        best_percent: best.0,
        tau,
        best_window: best.1,
        empty_fragment: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive oracle: the longest subsequence of the shorter string that
    /// is also a subsequence of the longer one.
    fn lcs_oracle(a: &str, b: &str) -> usize {
        let (short, long): (Vec<char>, Vec<char>) = if a.len() <= b.len() {
            (a.chars().collect(), b.chars().collect())
        } else {
            (b.chars().collect(), a.chars().collect())
        };
        let is_subseq = |s: &[char]| {
            let mut it = long.iter();
            s.iter().all(|c| it.any(|x| x == c))
        };
        let mut best = 0;
        for mask in 0u32..(1 << short.len()) {
            let pick: Vec<char> = (0..short.len())
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| short[i])
                .collect();
            if pick.len() > best && is_subseq(&pick) {
                best = pick.len();
            }
        }
        best
    }

    fn instance(context: &str, masked: Span) -> Instance {
        let chars: Vec<char> = context.chars().collect();
        Instance {
            article_id: 1,
            span: masked,
            fragment: chars[masked.start..masked.end].iter().collect(),
            context: context.into(),
            masked,
            gold: None,
        }
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(threshold_for_length(0.2, 100, 50.0), 80.0);
        assert_eq!(threshold_for_length(0.2, 0, 50.0), 100.0);
        assert_eq!(threshold_for_length(0.2, 600, 50.0), 50.0);
        assert!((threshold_for_length(0.2, 4, 50.0) - 99.2).abs() < 1e-12);
    }

    #[test]
    fn lcs_examples() {
        assert_eq!(lcs_length_str("", "anything"), 0);
        assert_eq!(lcs_length_str("abc", "abc"), 3);
        assert_eq!(lcs_length_str("ABCBDAB", "BDCABA"), 4);
        assert_eq!(lcs_oracle("ABCBDAB", "BDCABA"), 4);
    }

    #[test]
    fn percent_examples() {
        assert_eq!(percent_match("abc", "axbxc", true).unwrap(), 100.0);
        assert_eq!(percent_match("abcd", "abxx", true).unwrap(), 50.0);
        assert_eq!(percent_match("abcd", "", true).unwrap(), 0.0);
        assert!(percent_match("", "abc", true).is_err());
        assert!(percent_match("  ", "abc", true).is_err());
        assert_eq!(percent_match("ABC", "abc", false).unwrap(), 0.0);
    }

    #[test]
    fn sliding_windows() {
        let ctx: Vec<char> = "0123456789".chars().collect();
        let w = enumerate_windows(&ctx, 4, Span::new(0, 0), WindowMode::DEFAULT_WINDOWED);
        let ranges: Vec<Span> = w.iter().map(|(s, _)| *s).collect();
        assert_eq!(ranges, vec![Span::new(0, 8), Span::new(2, 10)]);

        let ctx: Vec<char> = "abcdefghijklmnopqrst".chars().collect();
        let w = enumerate_windows(&ctx, 4, Span::new(0, 0), WindowMode::DEFAULT_WINDOWED);
        let starts: Vec<usize> = w.iter().map(|(s, _)| s.start).collect();
        assert_eq!(starts, vec![0, 2, 4, 6, 8, 10, 12]);
        assert!(w.iter().all(|(s, t)| s.len() == 8 && t.chars().count() == 8));
    }

    #[test]
    fn short_context_is_one_window() {
        let ctx: Vec<char> = "hello".chars().collect();
        let w = enumerate_windows(&ctx, 4, Span::new(1, 3), WindowMode::DEFAULT_WINDOWED);
        assert_eq!(w, vec![(Span::new(0, 5), "hlo".to_string())]);
    }

    #[test]
    fn fully_masked_whole_context_is_empty() {
        let ctx: Vec<char> = "abcdef".chars().collect();
        let w = enumerate_windows(&ctx, 6, Span::new(0, 6), WindowMode::WholeContext);
        assert_eq!(w, vec![(Span::new(0, 6), String::new())]);
    }

    #[test]
    fn detects_spread_out_repeat() {
        // Fragment "abcd" at 0..4, "axbxcxd" later.
        let report = detect_repetition(
            &instance("abcd zz axbxcxd", Span::new(0, 4)),
            &RepetitionConfig::default(),
        );
        assert!((report.tau - 99.2).abs() < 1e-12);
        assert_eq!(report.best_percent, 100.0);
        assert!(report.fired);
    }

    #[test]
    fn partial_repeat_stays_below_tau() {
        let report = detect_repetition(&instance("abcd abcx", Span::new(0, 4)), &RepetitionConfig::default());
        assert_eq!(report.best_percent, 75.0);
        assert!(!report.fired);
    }

    #[test]
    fn own_span_is_masked() {
        let report = detect_repetition(
            &instance("xyz abcd xyz", Span::new(4, 8)),
            &RepetitionConfig {
                window_mode: WindowMode::WholeContext,
                ..Default::default()
            },
        );
        assert!(!report.fired);
        assert_eq!(report.best_percent, 0.0);
    }

    #[test]
    fn blank_fragment_abstains_with_flag() {
        let report = detect_repetition(&instance("a   b", Span::new(1, 4)), &RepetitionConfig::default());
        assert!(report.empty_fragment);
        assert!(!report.fired);
        assert_eq!(report.best_percent, 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(RepetitionConfig::default().validate().is_ok());
        let bad = |mode| {
            RepetitionConfig {
                window_mode: mode,
                ..Default::default()
            }
            .validate()
        };
        assert!(bad(WindowMode::Windowed {
            window_factor: 0.5,
            stride_factor: 0.5
        })
        .is_err());
        assert!(bad(WindowMode::Windowed {
            window_factor: 2.0,
            stride_factor: 0.0
        })
        .is_err());
        assert!(bad(WindowMode::Windowed {
            window_factor: 2.0,
            stride_factor: 1.5
        })
        .is_err());
        assert!(RepetitionConfig {
            slope_m: -0.1,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(RepetitionConfig {
            tau_min: 101.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    proptest! {
        #[test]
        fn lcs_matches_oracle(a in "[abc]{0,12}", b in "[abc]{0,12}") {
            prop_assert_eq!(lcs_length_str(&a, &b), lcs_oracle(&a, &b));
        }

        #[test]
        fn lcs_properties(a in "[a-d]{0,30}", b in "[a-d]{0,30}", c in "[a-d]") {
            let l = lcs_length_str(&a, &b);
            prop_assert_eq!(l, lcs_length_str(&b, &a));
            prop_assert!(l <= a.len().min(b.len()));
            prop_assert_eq!(lcs_length_str(&a, &a), a.len());
            let (ac, bc) = (a.clone() + &c, b.clone() + &c);
            prop_assert!(lcs_length_str(&ac, &b) >= l);
            prop_assert!(lcs_length_str(&a, &bc) >= l);
        }

        #[test]
        fn threshold_is_monotone(l in 0usize..500, m in 0.0f64..2.0, dl in 0usize..50, dm in 0.0f64..1.0) {
            let t = threshold_for_length(m, l, 50.0);
            prop_assert!((50.0..=100.0).contains(&t));
            prop_assert!(threshold_for_length(m, l + dl, 50.0) <= t);
            prop_assert!(threshold_for_length(m + dm, l, 50.0) <= t);
        }

        #[test]
        fn verbatim_repeat_scores_full(
            prefix in "[a-z ]{0,40}",
            fragment in "[a-z]{1}[a-z ]{0,20}[a-z]{1}",
            middle in "[a-z ]{0,40}",
            suffix in "[a-z ]{0,40}",
            m in 0.0f64..1.0,
        ) {
            let context = format!("{prefix}{fragment}{middle}{fragment}{suffix}");
            let start = prefix.chars().count();
            let span = Span::new(start, start + fragment.chars().count());
            let cfg = RepetitionConfig { slope_m: m, ..Default::default() };
            let report = detect_repetition(&instance(&context, span), &cfg);
            prop_assert_eq!(report.best_percent, 100.0);
            prop_assert!(report.fired);
        }
    }
}
