//! Text formats for word vectors, topics, candidates and visual vectors.
//!
//! - word vectors: `token v1 ... vd` per line, optional `vocab_size dim`
//!   header line.
//! - topics: `topic_id TAB term1 TAB ... TAB term10`.
//! - candidates: `topic_id TAB image_id TAB rating TAB caption`, rating `NA`
//!   when unrated.
//! - visual vectors: `image_id v1 ... vN` per line.
//!
//! All files are UTF-8 with LF line endings. Blank lines are ignored.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::warn;
use topic_image_core::dataset::{Dataset, DatasetOptions, ImageCandidate, Topic};
use topic_image_core::embeddings::{tokenize, EmbeddingTable};

use crate::error::{Error, Result};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn parse_floats<'a>(
    path: &Path,
    line: usize,
    fields: impl Iterator<Item = &'a str>,
) -> Result<Vec<f64>> {
    fields
        .map(|f| {
            f.parse::<f64>().map_err(|_| Error::Parse {
                path: path.into(),
                line,
                message: format!("'{f}' is not a number"),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EmbeddingLoadStats {
    pub header: bool,
    /// Lines whose token had already been loaded; the later line wins.
    pub duplicates: usize,
}

pub fn load_embeddings(path: &Path, expected_dimension: usize) -> Result<EmbeddingTable> {
    Ok(load_embeddings_with_stats(path, expected_dimension)?.0)
}

pub fn load_embeddings_with_stats(
    path: &Path,
    expected_dimension: usize,
) -> Result<(EmbeddingTable, EmbeddingLoadStats)> {
    let text = read(path)?;
    let mut table = EmbeddingTable::new(expected_dimension)?;
    let mut stats = EmbeddingLoadStats::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut fields = raw.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let rest: Vec<&str> = fields.collect();
        if line == 1 && rest.len() == 1 && token.parse::<usize>().is_ok() {
            if let Ok(dim) = rest[0].parse::<usize>() {
                if dim != expected_dimension {
                    return Err(Error::Parse {
                        path: path.into(),
                        line,
                        message: format!("header declares dimension {dim}, expected {expected_dimension}"),
                    });
                }
                stats.header = true;
                continue;
            }
        }
        let vector = parse_floats(path, line, rest.into_iter())?;
        if vector.len() != expected_dimension {
            return Err(Error::EmbeddingDimension {
                path: path.into(),
                line,
                token: token.into(),
                expected: expected_dimension,
                actual: vector.len(),
            });
        }
        if table.insert(token, vector)? {
            stats.duplicates += 1;
        }
    }
    if stats.duplicates > 0 {
        warn!("{}: {} duplicate tokens, later lines kept", path.display(), stats.duplicates);
    }
    Ok((table, stats))
}

pub fn load_topics(path: &Path) -> Result<Vec<Topic>> {
    let text = read(path)?;
    let mut topics = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let mut fields = raw.split('\t');
        let id = fields.next().unwrap_or_default().trim();
        let terms: Vec<String> = fields
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::to_lowercase)
            .collect();
        if id.is_empty() || terms.is_empty() {
            return Err(Error::Parse {
                path: path.into(),
                line: i + 1,
                message: "expected topic_id followed by tab-separated terms".into(),
            });
        }
        topics.push(Topic::new(id, terms));
    }
    Ok(topics)
}

/// One row of the candidates file.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateRow {
    pub line: usize,
    pub topic_id: String,
    pub image_id: String,
    pub rating: Option<f64>,
    pub caption: String,
}

pub fn load_candidate_rows(path: &Path) -> Result<Vec<CandidateRow>> {
    let text = read(path)?;
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let line = i + 1;
        let err = |message: String| Error::Parse {
            path: path.into(),
            line,
            message,
        };
        let mut fields = raw.splitn(4, '\t');
        let (Some(topic_id), Some(image_id), Some(rating)) = (fields.next(), fields.next(), fields.next())
        else {
            return Err(err("expected topic_id, image_id, rating and caption".into()));
        };
        let caption = fields.next().unwrap_or_default().to_string();
        let rating = match rating.trim() {
            "NA" => None,
            r => {
                let v: f64 = r.parse().map_err(|_| err(format!("bad rating '{r}'")))?;
                if !(0.0..=3.0).contains(&v) {
                    return Err(err(format!("rating {v} outside [0, 3]")));
                }
                Some(v)
            }
        };
        rows.push(CandidateRow {
            line,
            topic_id: topic_id.trim().into(),
            image_id: image_id.trim().into(),
            rating,
            caption,
        });
    }
    Ok(rows)
}

pub fn load_visuals(path: &Path, expected_dimension: usize) -> Result<HashMap<String, Vec<f64>>> {
    let text = read(path)?;
    let mut out = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let mut fields = raw.split_whitespace();
        let Some(id) = fields.next() else { continue };
        let v = parse_floats(path, i + 1, fields)?;
        if v.len() != expected_dimension {
            return Err(Error::Parse {
                path: path.into(),
                line: i + 1,
                message: format!(
                    "visual vector of image {id} has {} components, expected {expected_dimension}",
                    v.len()
                ),
            });
        }
        out.insert(id.to_string(), v);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct DatasetPaths<'a> {
    pub topics: &'a Path,
    pub candidates: &'a Path,
    pub visuals: &'a Path,
}

/// Loads and cross-links the three corpus files.
pub fn load_dataset(paths: &DatasetPaths<'_>, options: DatasetOptions) -> Result<Dataset> {
    let topics = load_topics(paths.topics)?;
    let rows = load_candidate_rows(paths.candidates)?;
    let visuals = load_visuals(paths.visuals, options.visual_dim)?;
    let index: BTreeMap<&str, usize> = topics
        .iter()
        .enumerate()
        .map(|(i, t)| (t.id.as_str(), i))
        .collect();
    let mut candidates: Vec<Vec<ImageCandidate>> = vec![Vec::new(); topics.len()];
    for row in rows {
        let Some(&t) = index.get(row.topic_id.as_str()) else {
            return Err(Error::Link(format!(
                "{}:{}: unknown topic id {}",
                paths.candidates.display(),
                row.line,
                row.topic_id
            )));
        };
        let Some(visual) = visuals.get(&row.image_id) else {
            return Err(Error::Link(format!(
                "{}:{}: image {} has no visual vector",
                paths.candidates.display(),
                row.line,
                row.image_id
            )));
        };
        candidates[t].push(ImageCandidate::new(
            row.image_id,
            tokenize(&row.caption),
            visual.clone(),
            row.rating,
        ));
    }
    Ok(Dataset::new(topics, candidates, options)?)
}

fn push_floats(out: &mut String, values: &[f64]) {
    for v in values {
        // `Display` for f64 prints the shortest string that parses back exactly.
        write!(out, " {v}").unwrap();
    }
}

pub fn write_embeddings(path: &Path, table: &EmbeddingTable) -> Result<()> {
    let mut out = String::new();
    for (token, v) in table.iter() {
        out.push_str(token);
        push_floats(&mut out, v);
        out.push('\n');
    }
    write(path, &out)
}

/// Writes the corpus in the three-file layout read by [`load_dataset`].
/// Captions are written as their space-joined tokens.
pub fn write_dataset(paths: &DatasetPaths<'_>, dataset: &Dataset) -> Result<()> {
    let mut topics = String::new();
    let mut cands = String::new();
    let mut visuals = String::new();
    let mut seen = std::collections::HashSet::new();
    for (t, topic) in dataset.topics().iter().enumerate() {
        topics.push_str(&topic.id);
        for term in &topic.terms {
            topics.push('\t');
            topics.push_str(term);
        }
        topics.push('\n');
        for c in dataset.candidates_at(t) {
            let rating = c.rating.map_or_else(|| "NA".to_string(), |r| r.to_string());
            writeln!(cands, "{}\t{}\t{}\t{}", topic.id, c.image_id, rating, c.caption_tokens.join(" ")).unwrap();
            if seen.insert(c.image_id.clone()) {
                visuals.push_str(&c.image_id);
                push_floats(&mut visuals, &c.visual);
                visuals.push('\n');
            }
        }
    }
    write(paths.topics, &topics)?;
    write(paths.candidates, &cands)?;
    write(paths.visuals, &visuals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::TempDir;

    fn file(dir: &TempDir, name: &str, contents: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, contents).unwrap();
        p
    }

    #[test]
    fn embeddings_examples() {
        let dir = TempDir::new().unwrap();
        let t = load_embeddings(&file(&dir, "a.txt", "cat 1.0 0.0\n"), 2).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.lookup("cat"), Some(&[1.0, 0.0][..]));

        let err = load_embeddings(&file(&dir, "b.txt", "cat 1.0\n"), 2).unwrap_err();
        assert!(matches!(err, Error::EmbeddingDimension { ref token, .. } if token == "cat"));
        assert!(err.is_validation());

        let t = load_embeddings(&file(&dir, "c.txt", ""), 2).unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn embeddings_header_duplicates_and_parse_errors() {
        let dir = TempDir::new().unwrap();
        let p = file(&dir, "h.txt", "2 2\nDog 0.5 0.25\n\ndog 1.5 -2e-3\n");
        let (t, stats) = load_embeddings_with_stats(&p, 2).unwrap();
        assert_eq!(stats, EmbeddingLoadStats { header: true, duplicates: 1 });
        assert_eq!(t.lookup("dog"), Some(&[1.5, -2e-3][..]));

        let err = load_embeddings(&file(&dir, "bad.txt", "a 1 2\nb 1 x\n"), 2).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = load_embeddings(&file(&dir, "hdr.txt", "5 3\n"), 2).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn embeddings_round_trip_bit_exact() {
        let dir = TempDir::new().unwrap();
        let mut t = EmbeddingTable::new(3).unwrap();
        t.insert("a", vec![0.1, 1.0 / 3.0, -7.25e-300]).unwrap();
        t.insert("b", vec![f64::MAX, f64::MIN_POSITIVE, 123456.789]).unwrap();
        let p = dir.path().join("e.txt");
        write_embeddings(&p, &t).unwrap();
        assert_eq!(load_embeddings(&p, 3).unwrap(), t);
    }

    fn corpus(dir: &TempDir, candidates: &str) -> Result<Dataset> {
        let topics = file(dir, "topics.tsv", "t1\tSurgery\tbody\n");
        let cands = file(dir, "cands.tsv", candidates);
        let visuals = file(dir, "vis.txt", "img1 0.5 0.5\nimg2 0.1 0.9\n");
        load_dataset(
            &DatasetPaths {
                topics: &topics,
                candidates: &cands,
                visuals: &visuals,
            },
            DatasetOptions::lenient(2),
        )
    }

    #[test]
    fn toy_corpus_loads() {
        let dir = TempDir::new().unwrap();
        let ds = corpus(&dir, "t1\timg1\t2.5\tA surgeon, at work.\nt1\timg2\tNA\t\n").unwrap();
        let topic = ds.topic("t1").unwrap();
        assert_eq!(topic.terms, vec!["surgery", "body"]);
        let c = ds.candidates_of("t1").unwrap();
        assert_eq!(c[0].caption_tokens, vec!["a", "surgeon", "at", "work"]);
        assert_eq!(c[0].rating, Some(2.5));
        assert_eq!(c[0].visual, vec![0.5, 0.5]);
        assert_eq!(c[1].rating, None);
        assert!(c[1].caption_tokens.is_empty());
        assert_eq!(ds.stats().distinct_images, 2);
    }

    #[test]
    fn toy_corpus_round_trips_through_writer() {
        let dir = TempDir::new().unwrap();
        let ds = corpus(&dir, "t1\timg1\t2.5\tsurgeon at work\nt1\timg2\tNA\tbody\n").unwrap();
        let out = TempDir::new().unwrap();
        let (t, c, v) = (out.path().join("t"), out.path().join("c"), out.path().join("v"));
        let paths = DatasetPaths { topics: &t, candidates: &c, visuals: &v };
        write_dataset(&paths, &ds).unwrap();
        assert_eq!(load_dataset(&paths, DatasetOptions::lenient(2)).unwrap(), ds);
    }

    #[test]
    fn missing_visual_is_a_link_error() {
        let dir = TempDir::new().unwrap();
        let err = corpus(&dir, "t1\timg9\t1\tx\n").unwrap_err();
        assert!(matches!(err, Error::Link(ref m) if m.contains("img9")));
        assert!(err.is_validation());
        let err = corpus(&dir, "t7\timg1\t1\tx\n").unwrap_err();
        assert!(matches!(err, Error::Link(ref m) if m.contains("t7")));
    }

    #[test]
    fn bad_rating_is_rejected() {
        let dir = TempDir::new().unwrap();
        let err = corpus(&dir, "t1\timg1\t3.5\tx\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = corpus(&dir, "t1\timg1\tgood\tx\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }
}
