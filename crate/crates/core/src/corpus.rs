//! Submission loading, filtering and per-community score percentiles.
//!
//! Input is line-delimited JSON using Pushshift submission field names
//! (`id`, `subreddit`, `title`, `selftext`, `created_utc`, `score`,
//! `upvote_ratio`). Unknown fields are ignored.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

/// One social-media post.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub id: String,
    #[serde(rename = "subreddit")]
    pub community: String,
    pub title: String,
    #[serde(rename = "selftext", default, deserialize_with = "null_as_empty")]
    pub body: String,
    #[serde(rename = "created_utc", deserialize_with = "epoch_seconds")]
    pub created_at: i64,
    pub score: i64,
    pub upvote_ratio: f64,
}

impl Submission {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if self.title.trim().is_empty() {
            return Err(format!("submission `{}` has an empty title", self.id));
        }
        if !(0.0..=1.0).contains(&self.upvote_ratio) {
            return Err(format!(
                "submission `{}` has upvote_ratio {} outside [0, 1]",
                self.id, self.upvote_ratio
            ));
        }
        Ok(())
    }

    pub fn mentions(&self, keyword_lower: &str) -> bool {
        keyword_lower.is_empty()
            || self.title.to_lowercase().contains(keyword_lower)
            || self.body.to_lowercase().contains(keyword_lower)
    }
}

fn null_as_empty<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<String, D::Error> {
    Ok(Option::<String>::deserialize(d)?.unwrap_or_default())
}

// Pushshift dumps carry `created_utc` as an integer, a float, or a numeric string
// depending on the era of the dump.
fn epoch_seconds<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<i64, D::Error> {
    use serde::de::Error as _;
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(i64),
        Float(f64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Int(v) => Ok(v),
        Raw::Float(v) if v.is_finite() => Ok(v.floor() as i64),
        Raw::Float(v) => Err(D::Error::custom(format!("non-finite timestamp {v}"))),
        Raw::Text(s) => {
            let s = s.trim();
            s.parse::<i64>()
                .or_else(|_| s.parse::<f64>().map(|v| v.floor() as i64))
                .map_err(|_| D::Error::custom(format!("unparseable timestamp `{s}`")))
        }
    }
}

/// The submissions of one community, in total order, with score percentiles.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    community: String,
    submissions: Vec<Submission>,
    percentiles: Vec<f64>,
    index: HashMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus, sorting by `(created_at, id)` and computing percentiles.
    pub fn new(community: impl Into<String>, mut submissions: Vec<Submission>) -> Result<Self> {
        if submissions.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        submissions.sort_by(|a, b| (a.created_at, &a.id).cmp(&(b.created_at, &b.id)));
        let mut index = HashMap::with_capacity(submissions.len());
        for (rank, s) in submissions.iter().enumerate() {
            if index.insert(s.id.clone(), rank).is_some() {
                return Err(Error::DuplicateId(s.id.clone()));
            }
        }
        let scores: Vec<i64> = submissions.iter().map(|s| s.score).collect();
        let percentiles = score_percentiles(&scores)?;
        Ok(Corpus {
            community: community.into(),
            submissions,
            percentiles,
            index,
        })
    }

    pub fn community(&self) -> &str {
        &self.community
    }

    pub fn submissions(&self) -> &[Submission] {
        &self.submissions
    }

    pub fn len(&self) -> usize {
        self.submissions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.submissions.is_empty()
    }

    /// Percentiles aligned with [`Corpus::submissions`].
    pub fn percentiles(&self) -> &[f64] {
        &self.percentiles
    }

    pub fn rank(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&Submission> {
        self.rank(id).map(|r| &self.submissions[r])
    }

    pub fn score_percentile(&self, id: &str) -> Option<f64> {
        self.rank(id).map(|r| self.percentiles[r])
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.submissions.iter().map(|s| s.id.as_str())
    }

    /// Writes the submissions as line-delimited records, in total order.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for s in &self.submissions {
            serde_json::to_writer(&mut out, s)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Tolerances applied while reading a submission stream.
#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    /// Largest tolerated fraction of malformed lines.
    pub max_malformed_fraction: f64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            max_malformed_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MalformedLine {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug)]
pub struct LoadReport {
    pub corpora: BTreeMap<String, Corpus>,
    pub malformed: Vec<MalformedLine>,
    pub records: usize,
}

impl LoadReport {
    /// Communities ordered by descending post count, then name.
    pub fn community_counts(&self) -> Vec<(&str, usize)> {
        let mut counts: Vec<_> = self
            .corpora
            .values()
            .map(|c| (c.community(), c.len()))
            .collect();
        counts.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        counts
    }
}

/// Reads line-delimited submissions and groups them into per-community corpora.
pub fn load_submissions<R: BufRead>(source: R, options: LoadOptions) -> Result<LoadReport> {
    let mut groups: BTreeMap<String, Vec<Submission>> = BTreeMap::new();
    let mut malformed = Vec::new();
    let mut records = 0usize;
    for (n, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records += 1;
        let parsed = serde_json::from_str::<Submission>(&line)
            .map_err(|e| e.to_string())
            .and_then(|s| s.validate().map(|_| s));
        match parsed {
            Ok(s) => groups.entry(s.community.clone()).or_default().push(s),
            Err(reason) => malformed.push(MalformedLine {
                line: n + 1,
                reason,
            }),
        }
    }
    if records == 0 {
        return Err(Error::EmptyCorpus);
    }
    if malformed.len() as f64 > options.max_malformed_fraction * records as f64 {
        return Err(Error::CorruptSource {
            malformed: malformed.len(),
            total: records,
        });
    }
    if groups.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let corpora = groups
        .into_iter()
        .map(|(community, subs)| Corpus::new(community.clone(), subs).map(|c| (community, c)))
        .collect::<Result<_>>()?;
    Ok(LoadReport {
        corpora,
        malformed,
        records,
    })
}

/// Keyword and time-window predicate.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Filter {
    /// Case-insensitive substring of title or body; empty matches everything.
    pub keyword: String,
    /// Inclusive `[start, end]` in epoch seconds.
    pub window: Option<(i64, i64)>,
}

impl Filter {
    pub fn matches(&self, s: &Submission) -> bool {
        let in_window = self
            .window
            .is_none_or(|(from, to)| (from..=to).contains(&s.created_at));
        in_window && s.mentions(&self.keyword.to_lowercase())
    }
}

/// Keeps submissions matching `filter`; percentiles are recomputed on the slice.
pub fn filter_corpus(corpus: &Corpus, filter: &Filter) -> Result<Corpus> {
    if let Some((start, end)) = filter.window {
        if start > end {
            return Err(Error::InvalidWindow { start, end });
        }
    }
    let kept: Vec<Submission> = corpus
        .submissions
        .iter()
        .filter(|s| filter.matches(s))
        .cloned()
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyFilteredCorpus);
    }
    Corpus::new(corpus.community.clone(), kept)
}

/// Hazen plotting positions `(mean_rank - 0.5) / n`, ties sharing their mean rank.
pub fn score_percentiles(scores: &[i64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| scores[i]);
    let mut out = vec![0.0; n];
    let mut lo = 0;
    while lo < n {
        let mut hi = lo;
        while hi + 1 < n && scores[order[hi + 1]] == scores[order[lo]] {
            hi += 1;
        }
        // 1-based ranks lo+1 ..= hi+1
        let mean_rank = (lo + hi + 2) as f64 / 2.0;
        for &i in &order[lo..=hi] {
            out[i] = (mean_rank - 0.5) / n as f64;
        }
        lo = hi + 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sub(id: &str, t: i64, score: i64) -> Submission {
        Submission {
            id: id.into(),
            community: "cuba".into(),
            title: format!("post {id}"),
            body: String::new(),
            created_at: t,
            score,
            upvote_ratio: 0.9,
        }
    }

    fn line(id: &str, sub: &str, t: i64) -> String {
        format!(
            r#"{{"id":"{id}","subreddit":"{sub}","title":"t {id}","selftext":"","created_utc":{t},"score":3,"upvote_ratio":0.8,"extra":[1,2]}}"#
        )
    }

    #[test]
    fn hazen_examples() {
        let p = score_percentiles(&[1, 5, 10]).unwrap();
        for (got, want) in p.iter().zip([1.0 / 6.0, 0.5, 5.0 / 6.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(score_percentiles(&[7, 7, 7]).unwrap(), vec![0.5; 3]);
        assert_eq!(
            score_percentiles(&[3, 1, 1, 10]).unwrap(),
            vec![0.625, 0.25, 0.25, 0.875]
        );
        assert!(matches!(score_percentiles(&[]), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn single_line_gives_midpoint() {
        let input = line("a", "cuba", 10);
        let report = load_submissions(input.as_bytes(), LoadOptions::default()).unwrap();
        let c = &report.corpora["cuba"];
        assert_eq!(c.len(), 1);
        assert_eq!(c.score_percentile("a"), Some(0.5));
    }

    #[test]
    fn duplicate_id_is_rejected() {
        let input = [line("a", "cuba", 1), line("a", "cuba", 2)].join("\n");
        let err = load_submissions(input.as_bytes(), LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::DuplicateId(ref id) if id == "a"));
        // the same id in two communities is fine
        let input = [line("a", "cuba", 1), line("a", "news", 2)].join("\n");
        assert!(load_submissions(input.as_bytes(), LoadOptions::default()).is_ok());
    }

    #[test]
    fn empty_and_corrupt_sources() {
        assert!(matches!(
            load_submissions("\n\n".as_bytes(), LoadOptions::default()),
            Err(Error::EmptyCorpus)
        ));
        let input = [line("a", "cuba", 1), "{oops".into(), "[]".into()].join("\n");
        assert!(matches!(
            load_submissions(input.as_bytes(), LoadOptions::default()),
            Err(Error::CorruptSource {
                malformed: 2,
                total: 3
            })
        ));
        let input = [line("a", "cuba", 1), line("b", "cuba", 2), "{oops".into()].join("\n");
        let report = load_submissions(input.as_bytes(), LoadOptions::default()).unwrap();
        assert_eq!(report.malformed.len(), 1);
        assert_eq!(report.malformed[0].line, 3);
    }

    #[test]
    fn pushshift_field_variants() {
        let input = r#"{"id":"x","subreddit":"cuba","title":"Hola","selftext":null,"created_utc":"1625875200.0","score":-4,"upvote_ratio":0.41}"#;
        let report = load_submissions(input.as_bytes(), LoadOptions::default()).unwrap();
        let s = report.corpora["cuba"].get("x").unwrap();
        assert_eq!(s.created_at, 1_625_875_200);
        assert_eq!(s.body, "");
        assert_eq!(s.score, -4);
    }

    #[test]
    fn invalid_records_count_as_malformed() {
        let bad_ratio = line("b", "cuba", 2).replace("0.8", "1.5");
        let blank_title = line("c", "cuba", 3).replace("\"t c\"", "\"  \"");
        let input = [
            line("a", "cuba", 1),
            bad_ratio,
            blank_title,
            line("d", "cuba", 4),
        ]
        .join("\n");
        let report = load_submissions(input.as_bytes(), LoadOptions::default()).unwrap();
        assert_eq!(report.malformed.len(), 2);
        assert_eq!(report.corpora["cuba"].len(), 2);
    }

    #[test]
    fn total_order_breaks_timestamp_ties_by_id() {
        let c = Corpus::new("cuba", vec![sub("b", 5, 1), sub("a", 5, 1), sub("c", 1, 1)]).unwrap();
        assert_eq!(c.ids().collect::<Vec<_>>(), ["c", "a", "b"]);
        assert_eq!(c.rank("b"), Some(2));
    }

    #[test]
    fn filter_examples() {
        let mut viva = sub("v", 100, 5);
        viva.title = "Viva Cuba libre!".into();
        let mut late = sub("late", 10_000, 5);
        late.title = "cuba later".into();
        let other = sub("o", 100, 5);
        let c = Corpus::new("cuba", vec![viva, late, other]).unwrap();
        let f = Filter {
            keyword: "cuba".into(),
            window: Some((0, 1000)),
        };
        let kept = filter_corpus(&c, &f).unwrap();
        assert_eq!(kept.ids().collect::<Vec<_>>(), ["v"]);
        assert_eq!(kept.score_percentile("v"), Some(0.5));

        let all = Filter {
            keyword: String::new(),
            window: Some((0, 1000)),
        };
        assert_eq!(filter_corpus(&c, &all).unwrap().len(), 2);

        let none = Filter {
            keyword: "venezuela".into(),
            window: None,
        };
        assert!(matches!(
            filter_corpus(&c, &none),
            Err(Error::EmptyFilteredCorpus)
        ));
        let inverted = Filter {
            keyword: String::new(),
            window: Some((5, 1)),
        };
        assert!(matches!(
            filter_corpus(&c, &inverted),
            Err(Error::InvalidWindow { .. })
        ));
    }

    #[test]
    fn body_matches_keyword() {
        let mut s = sub("b", 1, 1);
        s.body = "Protests in CUBA today".into();
        assert!(s.mentions("cuba"));
    }
}
