//! Recursive search for tagged JPEGs.
//!
//! Every scan re-reads file headers; reading stops at the first SOS marker,
//! so the entropy-coded image data is never loaded. Symbolic links are not
//! followed.

use std::fs::File;
use std::io::{self, BufReader};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::jpeg::{ImageDescriptor, JpegHeader};
use crate::metadata::{ClinicalMetadata, Field};
use crate::tagging::{tag_state, TagState};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("search root {0} does not exist")]
    RootNotFound(PathBuf),
    #[error("search root {0} is not a directory")]
    NotADirectory(PathBuf),
    #[error("permission denied reading {0}")]
    PermissionDenied(PathBuf),
    #[error("date_range applies only to StudyDate, not {0}")]
    DateRangeField(Field),
    #[error("invalid date bound {0:?} (expected YYYYMMDD or YYYY-MM-DD)")]
    InvalidDate(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Matcher {
    Equals { value: String },
    Contains { value: String },
    /// Inclusive bounds in YYYYMMDD; either may be omitted.
    DateRange {
        #[serde(default)]
        from: Option<String>,
        #[serde(default)]
        to: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Predicate {
    pub field: Field,
    #[serde(flatten)]
    pub matcher: Matcher,
}

impl Predicate {
    pub fn equals(field: Field, value: impl Into<String>) -> Predicate {
        Predicate { field, matcher: Matcher::Equals { value: value.into() } }
    }

    pub fn contains(field: Field, value: impl Into<String>) -> Predicate {
        Predicate { field, matcher: Matcher::Contains { value: value.into() } }
    }

    pub fn date_range(from: Option<String>, to: Option<String>) -> Predicate {
        Predicate { field: Field::StudyDate, matcher: Matcher::DateRange { from, to } }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchQuery {
    #[serde(default)]
    pub predicates: Vec<Predicate>,
    #[serde(default)]
    pub case_sensitive: bool,
}

/// Normalizes `YYYY-MM-DD` to `YYYYMMDD` and checks the calendar date.
pub fn normalize_date(s: &str) -> Result<String, SearchError> {
    let compact: String = s.chars().filter(|c| *c != '-').collect();
    chrono::NaiveDate::parse_from_str(&compact, "%Y%m%d")
        .ok()
        .filter(|_| compact.len() == 8)
        .map(|_| compact)
        .ok_or_else(|| SearchError::InvalidDate(s.to_owned()))
}

impl SearchQuery {
    pub fn new(predicates: Vec<Predicate>) -> SearchQuery {
        SearchQuery { predicates, case_sensitive: false }
    }

    /// Checks field/matcher combinations and normalizes date bounds.
    pub fn validated(mut self) -> Result<SearchQuery, SearchError> {
        for p in &mut self.predicates {
            if let Matcher::DateRange { from, to } = &mut p.matcher {
                if p.field != Field::StudyDate {
                    return Err(SearchError::DateRangeField(p.field));
                }
                for bound in [from, to].into_iter().flatten() {
                    *bound = normalize_date(bound)?;
                }
            }
        }
        Ok(self)
    }

    pub fn matches(&self, m: &ClinicalMetadata) -> bool {
        self.predicates.iter().all(|p| self.matches_one(p, m))
    }

    fn matches_one(&self, p: &Predicate, m: &ClinicalMetadata) -> bool {
        let Some(actual) = m.get(p.field) else { return false };
        let fold = |s: &str| if self.case_sensitive { s.to_owned() } else { s.to_lowercase() };
        match &p.matcher {
            Matcher::Equals { value } => fold(actual) == fold(value),
            Matcher::Contains { value } => fold(actual).contains(&fold(value)),
            Matcher::DateRange { from, to } => {
                from.as_deref().map_or(true, |f| actual >= f) && to.as_deref().map_or(true, |t| actual <= t)
            }
        }
    }
}

/// Free-function form of [`SearchQuery::matches`].
pub fn matches(m: &ClinicalMetadata, q: &SearchQuery) -> bool {
    q.matches(m)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TagRecord {
    pub path: PathBuf,
    pub metadata: ClinicalMetadata,
    pub descriptor: ImageDescriptor,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ScanDiagnostics {
    /// Files with a .jpg/.jpeg extension.
    pub considered: usize,
    pub tagged: usize,
    pub untagged: usize,
    pub unparseable: usize,
    /// Per-file read or parse failures.
    pub errors: Vec<(PathBuf, String)>,
}

#[derive(Debug, Clone, Default)]
pub struct ScanOutcome {
    /// Matching records sorted by path.
    pub records: Vec<TagRecord>,
    pub diagnostics: ScanDiagnostics,
}

pub fn is_jpeg_path(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("jpg") || e.eq_ignore_ascii_case("jpeg"))
}

enum FileResult {
    Tagged(TagRecord),
    Untagged,
    Unparseable(String),
    Unreadable(String),
}

fn inspect(path: PathBuf) -> FileResult {
    let file = match File::open(&path) {
        Ok(f) => f,
        Err(e) => return FileResult::Unreadable(e.to_string()),
    };
    let header = match JpegHeader::read(BufReader::new(file)) {
        Ok(h) => h,
        Err(e) => return FileResult::Unparseable(e.to_string()),
    };
    let state = header.user_comment().map_err(|e| e.to_string()).and_then(|c| tag_state(c).map_err(|e| e.to_string()));
    match state {
        Ok(TagState::Tagged { metadata, .. }) => {
            FileResult::Tagged(TagRecord { path, metadata, descriptor: header.frame })
        }
        Ok(TagState::Untagged) => FileResult::Untagged,
        Err(e) => FileResult::Unparseable(e),
    }
}

fn check_root(root: &Path) -> Result<(), SearchError> {
    let meta = std::fs::metadata(root).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => SearchError::RootNotFound(root.to_owned()),
        io::ErrorKind::PermissionDenied => SearchError::PermissionDenied(root.to_owned()),
        _ => SearchError::Io(e),
    })?;
    if !meta.is_dir() {
        return Err(SearchError::NotADirectory(root.to_owned()));
    }
    std::fs::read_dir(root).map_err(|e| match e.kind() {
        io::ErrorKind::PermissionDenied => SearchError::PermissionDenied(root.to_owned()),
        _ => SearchError::Io(e),
    })?;
    Ok(())
}

/// Walks `root` recursively and returns the tagged JPEGs matching `q`.
pub fn scan(root: &Path, q: &SearchQuery) -> Result<ScanOutcome, SearchError> {
    check_root(root)?;
    let mut diagnostics = ScanDiagnostics::default();
    let mut paths = Vec::new();
    for entry in WalkDir::new(root).follow_links(false) {
        match entry {
            Ok(e) if e.file_type().is_file() && is_jpeg_path(e.path()) => paths.push(e.into_path()),
            Ok(_) => {}
            Err(e) => {
                let p = e.path().map(Path::to_path_buf).unwrap_or_else(|| root.to_owned());
                diagnostics.errors.push((p, e.to_string()));
            }
        }
    }
    diagnostics.considered = paths.len();

    let results: Vec<(PathBuf, FileResult)> =
        paths.into_par_iter().map(|p| (p.clone(), inspect(p))).collect();

    let mut records = Vec::new();
    for (path, r) in results {
        match r {
            FileResult::Tagged(rec) => {
                diagnostics.tagged += 1;
                if q.matches(&rec.metadata) {
                    records.push(rec);
                }
            }
            FileResult::Untagged => diagnostics.untagged += 1,
            FileResult::Unparseable(e) => {
                diagnostics.unparseable += 1;
                diagnostics.errors.push((path, e));
            }
            FileResult::Unreadable(e) => diagnostics.errors.push((path, e)),
        }
    }
    records.sort_by(|a, b| a.path.cmp(&b.path));
    diagnostics.errors.sort();
    Ok(ScanOutcome { records, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lichen() -> ClinicalMetadata {
        ClinicalMetadata { study_description: Some("Lichen Planus".into()), study_date: Some("20210301".into()), ..Default::default() }
    }

    #[test]
    fn contains_is_case_insensitive_by_default() {
        let q = SearchQuery::new(vec![Predicate::contains(Field::StudyDescription, "lichen")]);
        assert!(q.matches(&lichen()));
        let q = SearchQuery { case_sensitive: true, ..q };
        assert!(!q.matches(&lichen()));
    }

    #[test]
    fn empty_query_matches_everything() {
        assert!(matches(&ClinicalMetadata::default(), &SearchQuery::default()));
    }

    #[test]
    fn absent_field_never_matches() {
        let q = SearchQuery::new(vec![Predicate::equals(Field::PatientSex, "M")]);
        assert!(!q.matches(&lichen()));
    }

    #[test]
    fn date_ranges() {
        let q = |f: Option<&str>, t: Option<&str>| {
            SearchQuery::new(vec![Predicate::date_range(f.map(Into::into), t.map(Into::into))]).validated().unwrap()
        };
        assert!(q(Some("2021-03-01"), Some("20210301")).matches(&lichen()));
        assert!(q(None, Some("20210228")).matches(&lichen()) == false);
        assert!(q(Some("20210101"), None).matches(&lichen()));
        let bad = SearchQuery::new(vec![Predicate { field: Field::PatientId, matcher: Matcher::DateRange { from: None, to: None } }]);
        assert!(matches!(bad.validated(), Err(SearchError::DateRangeField(_))));
        let bad = SearchQuery::new(vec![Predicate::date_range(Some("2021-02-30".into()), None)]);
        assert!(matches!(bad.validated(), Err(SearchError::InvalidDate(_))));
    }

    #[test]
    fn query_json_shape() {
        let q: SearchQuery = serde_json::from_str(
            r#"{"predicates":[{"field":"diagnosis","op":"contains","value":"lichen"},{"field":"StudyDate","op":"date_range","from":"20200101"}]}"#,
        )
        .unwrap();
        assert_eq!(q.predicates[0], Predicate::contains(Field::StudyDescription, "lichen"));
        assert!(!q.case_sensitive);
        assert!(serde_json::from_str::<SearchQuery>(r#"{"predicates":[{"field":"Modality","op":"equals","value":"OT"}]}"#).is_err());
    }

    #[test]
    fn missing_root() {
        assert!(matches!(scan(Path::new("/nonexistent/dermtag"), &SearchQuery::default()), Err(SearchError::RootNotFound(_))));
    }

    #[test]
    fn extension_filter() {
        assert!(is_jpeg_path(Path::new("a/B.JPG")));
        assert!(is_jpeg_path(Path::new("x.jpeg")));
        assert!(!is_jpeg_path(Path::new("x.png")));
        assert!(!is_jpeg_path(Path::new("jpg")));
    }
}
