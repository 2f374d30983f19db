//! Article and label ingestion, instance construction and prediction output.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::technique::Technique;
use crate::text::sentence_spans;

/// Half-open range of Unicode character offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, offset: usize) -> bool {
        self.start <= offset && offset < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Article {
    pub id: u64,
    pub text: String,
}

/// `<article_id>:<start>:<end>`, the join key between instances and
/// embedding or score rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InstanceKey {
    pub article_id: u64,
    pub span: Span,
}

impl fmt::Display for InstanceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.article_id, self.span.start, self.span.end)
    }
}

impl FromStr for InstanceKey {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("instance key {s:?} is not <article_id>:<start>:<end>"));
        }
        let num = |p: &str| {
            p.parse::<u64>()
                .map_err(|_| format!("instance key {s:?} has non-numeric field {p:?}"))
        };
        Ok(InstanceKey {
            article_id: num(parts[0])?,
            span: Span::new(num(parts[1])? as usize, num(parts[2])? as usize),
        })
    }
}

/// One line of a label or prediction file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Label {
    pub article_id: u64,
    pub technique: Technique,
    pub span: Span,
}

impl Label {
    pub fn key(&self) -> InstanceKey {
        InstanceKey {
            article_id: self.article_id,
            span: self.span,
        }
    }
}

/// How much of the article accompanies a fragment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContextPolicy {
    WholeArticle,
    /// The sentences touched by the span plus `k` sentences either side.
    SentenceWindow(usize),
}

impl FromStr for ContextPolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "article" {
            return Ok(ContextPolicy::WholeArticle);
        }
        match s.strip_prefix("window:").map(str::parse::<usize>) {
            Some(Ok(k)) => Ok(ContextPolicy::SentenceWindow(k)),
            _ => Err(format!("context policy {s:?} is not `article` or `window:K`")),
        }
    }
}

impl fmt::Display for ContextPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContextPolicy::WholeArticle => f.write_str("article"),
            ContextPolicy::SentenceWindow(k) => write!(f, "window:{k}"),
        }
    }
}

/// A labeled (or to-be-classified) fragment with its context.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub article_id: u64,
    pub span: Span,
    pub fragment: String,
    pub context: String,
    /// Where the fragment sits inside `context`, in context character offsets.
    pub masked: Span,
    pub gold: Option<Technique>,
}

impl Instance {
    pub fn key(&self) -> InstanceKey {
        InstanceKey {
            article_id: self.article_id,
            span: self.span,
        }
    }
}

fn article_id_from_filename(name: &str) -> Option<Result<u64>> {
    let stem = name.strip_prefix("article")?.strip_suffix(".txt")?;
    Some(
        stem.parse::<u64>()
            .map_err(|_| Error::Filename(format!("{name}: article ID {stem:?} is not numeric"))),
    )
}

/// Reads every `article<ID>.txt` in `dir`, sorted by id. Other files are
/// ignored.
pub fn load_articles(dir: impl AsRef<Path>) -> Result<Vec<Article>> {
    let dir = dir.as_ref();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut articles = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        let Some(id) = article_id_from_filename(name) else {
            continue;
        };
        let id = id?;
        let path = entry.path();
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        articles.push(Article { id, text });
    }
    articles.sort_by_key(|a| a.id);
    if let Some(w) = articles.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(Error::Filename(format!(
            "article id {} appears in more than one file",
            w[0].id
        )));
    }
    Ok(articles)
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<Label>> {
    let path = path.as_ref();
    let data = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&data, path)
}

/// Parses the four-column label format. `origin` is only used in errors.
pub fn parse_labels(data: &str, origin: &Path) -> Result<Vec<Label>> {
    let mut labels = Vec::new();
    for (i, line) in data.lines().enumerate() {
        let lineno = i + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(Error::format(
                origin,
                lineno,
                format!("expected 4 tab-separated columns, found {}", cols.len()),
            ));
        }
        let article_id = cols[0]
            .parse::<u64>()
            .map_err(|_| Error::format(origin, lineno, format!("bad article id {:?}", cols[0])))?;
        let technique = cols[1]
            .parse::<Technique>()
            .map_err(|e| Error::format(origin, lineno, e.to_string()))?;
        let offset = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::format(origin, lineno, format!("bad offset {s:?}")))
        };
        let (start, end) = (offset(cols[2])?, offset(cols[3])?);
        if start >= end {
            return Err(Error::EmptySpan {
                path: origin.to_path_buf(),
                line: lineno,
                start,
                end,
            });
        }
        labels.push(Label {
            article_id,
            technique,
            span: Span::new(start, end),
        });
    }
    Ok(labels)
}

/// A span to classify, with its gold technique when known.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpanRecord {
    pub key: InstanceKey,
    pub gold: Option<Technique>,
}

impl From<&Label> for SpanRecord {
    fn from(l: &Label) -> Self {
        SpanRecord {
            key: l.key(),
            gold: Some(l.technique),
        }
    }
}

/// Like [`parse_labels`], but a technique column of `?` marks an
/// unlabeled span to be classified.
pub fn parse_spans(data: &str, origin: &Path) -> Result<Vec<SpanRecord>> {
    let mut out = Vec::new();
    for (i, line) in data.lines().enumerate() {
        let mut cols: Vec<&str> = line.strip_suffix('\r').unwrap_or(line).split('\t').collect();
        let unlabeled = cols.len() == 4 && cols[1] == "?";
        if unlabeled {
            cols[1] = Technique::LoadedLanguage.wire_name();
        }
        let parsed = parse_labels(&cols.join("\t"), origin).map_err(|e| match e {
            Error::Format { path, msg, .. } => Error::Format { path, line: i + 1, msg },
            Error::EmptySpan { path, start, end, .. } => Error::EmptySpan {
                path,
                line: i + 1,
                start,
                end,
            },
            other => other,
        })?;
        out.extend(parsed.iter().map(|l| SpanRecord {
            key: l.key(),
            gold: if unlabeled { None } else { Some(l.technique) },
        }));
    }
    Ok(out)
}

pub fn load_spans(path: impl AsRef<Path>) -> Result<Vec<SpanRecord>> {
    let path = path.as_ref();
    let data = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_spans(&data, path)
}

pub fn format_labels(labels: &[Label]) -> String {
    let mut out = String::new();
    for l in labels {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            l.article_id, l.technique, l.span.start, l.span.end
        ));
    }
    out
}

/// Writes predictions in the label format, so `load_labels` reads them back.
pub fn write_predictions(path: impl AsRef<Path>, predictions: &[Label]) -> Result<()> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(format_labels(predictions).as_bytes())
        .map_err(|e| Error::io(path, e))
}

fn context_range(chars: &[char], span: Span, policy: ContextPolicy) -> Span {
    let k = match policy {
        ContextPolicy::WholeArticle => return Span::new(0, chars.len()),
        ContextPolicy::SentenceWindow(k) => k,
    };
    let sentences = sentence_spans(chars);
    if sentences.is_empty() {
        return span;
    }
    // First sentence ending after the span starts, last one starting before it ends.
    let first = sentences
        .iter()
        .position(|s| s.end > span.start)
        .unwrap_or(sentences.len() - 1);
    let last = sentences
        .iter()
        .rposition(|s| s.start < span.end)
        .unwrap_or(0)
        .max(first);
    let lo = first.saturating_sub(k);
    let hi = (last + k).min(sentences.len() - 1);
    Span::new(sentences[lo].start.min(span.start), sentences[hi].end.max(span.end))
}

/// One instance per label, in label order.
pub fn build_instances(articles: &[Article], labels: &[Label], policy: ContextPolicy) -> Result<Vec<Instance>> {
    let records: Vec<SpanRecord> = labels.iter().map(SpanRecord::from).collect();
    build_span_instances(articles, &records, policy)
}

/// [`build_instances`] for records whose gold may be unknown.
pub fn build_span_instances(
    articles: &[Article],
    labels: &[SpanRecord],
    policy: ContextPolicy,
) -> Result<Vec<Instance>> {
    let by_id: HashMap<u64, &Article> = articles.iter().map(|a| (a.id, a)).collect();
    let mut chars_cache: HashMap<u64, Vec<char>> = HashMap::new();
    let mut instances = Vec::with_capacity(labels.len());
    for label in labels {
        let article_id = label.key.article_id;
        let article = by_id.get(&article_id).ok_or(Error::MissingArticle(article_id))?;
        let chars = chars_cache
            .entry(article.id)
            .or_insert_with(|| article.text.chars().collect());
        let span = label.key.span;
        if span.is_empty() || span.end > chars.len() {
            return Err(Error::Span {
                article_id: article.id,
                start: span.start,
                end: span.end,
                len: chars.len(),
            });
        }
        let ctx = context_range(chars, span, policy);
        instances.push(Instance {
            article_id: article.id,
            span,
            fragment: chars[span.start..span.end].iter().collect(),
            context: chars[ctx.start..ctx.end].iter().collect(),
            masked: Span::new(span.start - ctx.start, span.end - ctx.start),
            gold: label.gold,
        });
    }
    Ok(instances)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label(article_id: u64, technique: Technique, start: usize, end: usize) -> Label {
        Label {
            article_id,
            technique,
            span: Span::new(start, end),
        }
    }

    #[test]
    fn loads_articles_by_filename() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("article123.txt"), "Hello.").unwrap();
        fs::write(dir.path().join("notes.labels"), "ignored").unwrap();
        let articles = load_articles(dir.path()).unwrap();
        assert_eq!(
            articles,
            vec![Article {
                id: 123,
                text: "Hello.".into()
            }]
        );
    }

    #[test]
    fn empty_directory_has_no_articles() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_articles(dir.path()).unwrap().is_empty());
    }

    #[test]
    fn non_numeric_article_id_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("articleX.txt"), "x").unwrap();
        assert!(matches!(load_articles(dir.path()), Err(Error::Filename(_))));
    }

    #[test]
    fn missing_directory_is_io_error() {
        assert!(matches!(
            load_articles("/nonexistent/dir/for/test"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn parses_label_lines() {
        let labels = parse_labels("111\tRepetition\t10\t25\n", Path::new("x")).unwrap();
        assert_eq!(labels, vec![label(111, Technique::Repetition, 10, 25)]);
        assert!(parse_labels("", Path::new("x")).unwrap().is_empty());
    }

    #[test]
    fn unknown_technique_reports_line() {
        let err = parse_labels("1\tDoubt\t0\t3\n111\tNot_A_Technique\t0\t5\n", Path::new("x")).unwrap_err();
        match err {
            Error::Format { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_span_is_rejected() {
        let err = parse_labels("1\tDoubt\t5\t5\n", Path::new("x")).unwrap_err();
        assert!(matches!(err, Error::EmptySpan { line: 1, .. }));
    }

    #[test]
    fn unlabeled_spans() {
        let recs = parse_spans("5\t?\t1\t4\n6\tDoubt\t0\t2\n", Path::new("x")).unwrap();
        assert_eq!(recs[0].gold, None);
        assert_eq!(recs[0].key.to_string(), "5:1:4");
        assert_eq!(recs[1].gold, Some(Technique::Doubt));
        let err = parse_spans("5\t?\t1\t4\n6\tBogus\t0\t2\n", Path::new("x")).unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }));
    }

    #[test]
    fn writes_prediction_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pred.tsv");
        write_predictions(&path, &[label(111, Technique::Doubt, 10, 25)]).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "111\tDoubt\t10\t25\n");
        write_predictions(&path, &[]).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "");
    }

    #[test]
    fn prediction_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pred.tsv");
        let records = vec![
            label(1, Technique::NameCallingLabeling, 0, 4),
            label(7, Technique::WhataboutismStrawMenRedHerring, 12, 40),
            label(1, Technique::BandwagonReductioAdHitlerum, 0, 4),
        ];
        write_predictions(&path, &records).unwrap();
        assert_eq!(load_labels(&path).unwrap(), records);
    }

    #[test]
    fn whole_article_context() {
        let articles = [Article {
            id: 1,
            text: "AB CD EF".into(),
        }];
        let inst = build_instances(
            &articles,
            &[label(1, Technique::Slogans, 3, 5)],
            ContextPolicy::WholeArticle,
        )
        .unwrap();
        assert_eq!(inst[0].fragment, "CD");
        assert_eq!(inst[0].context, "AB CD EF");
        assert_eq!(inst[0].masked, Span::new(3, 5));
        assert_eq!(inst[0].gold, Some(Technique::Slogans));
    }

    #[test]
    fn out_of_bounds_span() {
        let articles = [Article {
            id: 1,
            text: "0123456789".into(),
        }];
        let err = build_instances(
            &articles,
            &[label(1, Technique::Doubt, 0, 999)],
            ContextPolicy::WholeArticle,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::Span {
                article_id: 1,
                start: 0,
                end: 999,
                len: 10
            }
        ));
    }

    #[test]
    fn missing_article() {
        let err = build_instances(&[], &[label(4, Technique::Doubt, 0, 1)], ContextPolicy::WholeArticle).unwrap_err();
        assert!(matches!(err, Error::MissingArticle(4)));
    }

    #[test]
    fn sentence_window_zero() {
        // "S1. S2. S3." with span on "S2" (offsets 4..6).
        let articles = [Article {
            id: 1,
            text: "S1. S2. S3.".into(),
        }];
        let inst = build_instances(
            &articles,
            &[label(1, Technique::Doubt, 4, 6)],
            ContextPolicy::SentenceWindow(0),
        )
        .unwrap();
        assert_eq!(inst[0].context, "S2.");
        assert_eq!(inst[0].masked, Span::new(0, 2));

        let inst = build_instances(
            &articles,
            &[label(1, Technique::Doubt, 4, 6)],
            ContextPolicy::SentenceWindow(1),
        )
        .unwrap();
        assert_eq!(inst[0].context, "S1. S2. S3.");
    }

    #[test]
    fn offsets_are_characters() {
        let articles = [Article {
            id: 2,
            text: "héllo wörld".into(),
        }];
        let inst = build_instances(
            &articles,
            &[label(2, Technique::Doubt, 6, 11)],
            ContextPolicy::WholeArticle,
        )
        .unwrap();
        assert_eq!(inst[0].fragment, "wörld");
    }

    #[test]
    fn context_policy_parsing() {
        assert_eq!("article".parse(), Ok(ContextPolicy::WholeArticle));
        assert_eq!("window:3".parse(), Ok(ContextPolicy::SentenceWindow(3)));
        assert!("window:x".parse::<ContextPolicy>().is_err());
        assert_eq!(ContextPolicy::SentenceWindow(1).to_string(), "window:1");
    }

    #[test]
    fn instance_key_round_trip() {
        let key: InstanceKey = "12:0:5".parse().unwrap();
        assert_eq!(key.article_id, 12);
        assert_eq!(key.span, Span::new(0, 5));
        assert_eq!(key.to_string(), "12:0:5");
        assert!("12:0".parse::<InstanceKey>().is_err());
        assert!("a:0:1".parse::<InstanceKey>().is_err());
    }
}
