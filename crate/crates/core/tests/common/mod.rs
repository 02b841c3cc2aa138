//! Fixtures, generators and oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use dermtag::dicom::{convert_jpeg, JPEG_BASELINE_TRANSFER_SYNTAX, SECONDARY_CAPTURE_SOP_CLASS};
use dermtag::jpeg::{parse_jpeg, IfdEntry, IfdKind, JpegDocument};
use dermtag::metadata::{ClinicalMetadata, Field, MARKER_KEY};
use dermtag::search::{Predicate, SearchQuery};
use dermtag::uid::{is_valid_uid, UidContext};
use dicom_dictionary_std::tags;
use dicom_object::{open_file, DefaultDicomObject};
use num_bigint::BigUint;
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, TestRng, TestRunner};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn fixture(name: &str) -> Vec<u8> {
    std::fs::read(fixture_dir().join(name)).unwrap_or_else(|e| panic!("{}: {}", name, e))
}

/// Fixtures that parse and accept a payload.
pub const TAGGABLE: [&str; 7] = [
    "camera_be.jpg",
    "camera_le.jpg",
    "color_2x1.jpg",
    "gray_8x8.jpg",
    "progressive_16x16.jpg",
    "tagged_ascii.jpg",
    "unicode_comment.jpg",
];

/// Baseline fixtures usable as DICOM sources.
pub const BASELINE: [&str; 6] = [
    "camera_be.jpg",
    "camera_le.jpg",
    "color_2x1.jpg",
    "gray_8x8.jpg",
    "tagged_ascii.jpg",
    "unicode_comment.jpg",
];

/// Camera fixtures whose UserComment holds ordinary text.
pub const CAMERA_COMMENTED: [&str; 3] = ["camera_be.jpg", "camera_le.jpg", "unicode_comment.jpg"];

// ---- generators ----

/// Text allowed in LO values: anything but backslash and control characters.
fn lo_text() -> impl Strategy<Value = String> {
    prop_oneof![
        3 => r"[a-zA-Z0-9 ,.'()-]{1,64}",
        2 => r"[^\\\p{Cc}]{1,64}",
        1 => r"[äöüßéèçñÅØÆ漢字😀 ]{1,20}",
    ]
}

fn pn_component() -> impl Strategy<Value = String> {
    prop_oneof![r"[A-Za-z' -]{0,10}", r"[^\\\p{Cc}=^]{0,8}", r"[ÄÖÜäöü山田]{0,5}"]
}

fn pn_text() -> impl Strategy<Value = String> {
    let group = prop::collection::vec(pn_component(), 1..=5).prop_map(|c| c.join("^"));
    prop::collection::vec(group, 1..=3)
        .prop_map(|g| g.join("="))
        .prop_filter("non-empty", |s| !s.is_empty())
}

fn da_text() -> impl Strategy<Value = String> {
    // 1900-01-01 .. 2099-12-31
    (0i64..73_048).prop_map(|d| {
        let date = chrono::NaiveDate::from_ymd_opt(1900, 1, 1).unwrap() + chrono::Duration::days(d);
        date.format("%Y%m%d").to_string()
    })
}

fn tm_text() -> impl Strategy<Value = String> {
    (0u32..24, 0u32..60, 0u32..60, 0usize..4, 0u32..1_000_000, 1usize..=6).prop_map(|(h, m, s, shape, frac, fd)| {
        match shape {
            0 => format!("{:02}", h),
            1 => format!("{:02}{:02}", h, m),
            2 => format!("{:02}{:02}{:02}", h, m, s),
            _ => format!("{:02}{:02}{:02}.{}", h, m, s, &format!("{:06}", frac)[..fd]),
        }
    })
}

fn ui_text() -> impl Strategy<Value = String> {
    prop_oneof![
        any::<u128>().prop_map(|v| format!("2.25.{}", v)),
        prop::collection::vec(prop_oneof![Just(0u64), 1u64..1_000_000], 2..8)
            .prop_map(|c| c.iter().map(u64::to_string).collect::<Vec<_>>().join(".")),
    ]
}

fn extra_value() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        Just(Value::Null),
        any::<bool>().prop_map(Value::Bool),
        any::<i64>().prop_map(|n| Value::from(n)),
        r"(?s).{0,12}".prop_map(Value::String),
    ];
    leaf.prop_recursive(2, 8, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..3).prop_map(Value::Array),
            prop::collection::btree_map(r"[a-z]{1,4}", inner, 0..3)
                .prop_map(|m| Value::Object(m.into_iter().collect())),
        ]
    })
}

fn extra_key() -> impl Strategy<Value = String> {
    prop_oneof![r"x[A-Za-z0-9_]{0,10}", r"ext\.[a-zé]{1,6}", r"[a-z]{2,8}"]
        .prop_filter("reserved", |k| !is_reserved(k))
}

pub fn is_reserved(key: &str) -> bool {
    key == MARKER_KEY || key == "Deidentified" || Field::ALL.iter().any(|f| f.keyword() == key)
}

/// Valid metadata: each field present with probability 1/2, extras and the
/// deidentified flag included.
pub fn arb_metadata() -> impl Strategy<Value = ClinicalMetadata> {
    (
        (
            prop::option::of(lo_text()),
            prop::option::of(pn_text()),
            prop::option::of(prop::sample::select(vec!["M", "F", "O"])),
            prop::option::of(da_text()),
            prop::option::of(tm_text()),
        ),
        (
            prop::option::of(lo_text()),
            prop::option::of(ui_text()),
            prop::option::of(ui_text()),
            any::<bool>(),
            prop::collection::btree_map(extra_key(), extra_value(), 0..3),
            prop_oneof![4 => Just("1.0".to_owned()), 1 => (1u8..10, 0u8..20).prop_map(|(a, b)| format!("{}.{}", a, b))],
        ),
    )
        .prop_map(|((id, name, sex, date, time), (desc, study, series, deid, extras, version))| ClinicalMetadata {
            schema_version: version,
            patient_id: id,
            patient_name: name,
            patient_sex: sex.map(str::to_owned),
            study_date: date,
            study_time: time,
            study_description: desc,
            study_instance_uid: study,
            series_instance_uid: series,
            deidentified: deid,
            extras: extras.into_iter().collect::<BTreeMap<_, _>>(),
        })
}

/// `n` values from `strategy` with a fixed seed.
pub fn sample<S: Strategy>(strategy: S, n: usize, seed: u8) -> Vec<S::Value> {
    let mut runner = TestRunner::new_with_rng(Config::default(), TestRng::from_seed(Default::default(), &[seed; 32]));
    (0..n).map(|_| strategy.new_tree(&mut runner).expect("strategy").current()).collect()
}

// ---- preservation oracle ----

/// All EXIF entries except UserComment, as a sorted multiset, plus the
/// thumbnail bytes.
pub fn exif_fingerprint(doc: &JpegDocument) -> (Vec<(IfdKind, IfdEntry)>, Option<Vec<u8>>) {
    let Some(exif) = doc.exif().expect("exif parses") else { return (Vec::new(), None) };
    let mut entries: Vec<_> = exif
        .entries()
        .filter(|(kind, e)| !(*kind == IfdKind::Exif && e.tag == dermtag::jpeg::exif::TAG_USER_COMMENT))
        .map(|(k, e)| (k, e.clone()))
        .collect();
    entries.sort();
    (entries, exif.ifd1.as_ref().and_then(|t| t.thumbnail.clone()))
}

/// Segments other than the EXIF APP1, in order.
pub fn non_exif_segments(doc: &JpegDocument) -> Vec<(u8, Vec<u8>)> {
    doc.segments.iter().filter(|s| !s.is_exif()).map(|s| (s.marker, s.payload.clone())).collect()
}

/// Asserts everything but the UserComment survived from `before` to `after`.
pub fn assert_preserved(before: &[u8], after: &[u8]) {
    let a = parse_jpeg(before).unwrap();
    let b = parse_jpeg(after).unwrap();
    assert_eq!(a.scan_data, b.scan_data, "scan data changed");
    assert_eq!(a.frame, b.frame);
    assert_eq!(non_exif_segments(&a), non_exif_segments(&b), "non-EXIF segments changed");
    assert_eq!(exif_fingerprint(&a), exif_fingerprint(&b), "EXIF entries changed");
    if let (Some(x), Some(y)) = (a.exif().unwrap(), b.exif().unwrap()) {
        assert_eq!(x.byte_order, y.byte_order);
    }
}

/// True if `needle` occurs anywhere in `haystack`.
pub fn contains_bytes(haystack: &[u8], needle: &[u8]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

// ---- anonymization inputs ----

/// Metadata with a distinctive PatientID and PatientName.
pub fn identified() -> impl Strategy<Value = ClinicalMetadata> {
    (
        arb_metadata(),
        r"[G-Z]{2}[0-9]{4,10}",
        prop_oneof![r"[A-Z][a-z]{3,9}\^[A-Z][a-z]{3,9}", r"[ÄÖÜ][äöüß]{2,6}\^[A-Z][a-zé]{3,8}"],
    )
        .prop_map(|(mut m, id, name)| {
            m.patient_id = Some(id);
            m.patient_name = Some(name);
            m.deidentified = false;
            m
        })
}

/// Byte forms a string can take in a JPEG: raw UTF-8 and the escaped
/// payload form.
pub fn forms(s: &str) -> Vec<Vec<u8>> {
    let escaped = dermtag::metadata::canonical(&serde_json::Value::String(s.to_owned()));
    vec![s.as_bytes().to_vec(), escaped.trim_matches('"').as_bytes().to_vec()]
}

// ---- search corpus ----

pub const DIAGNOSES: [&str; 8] = [
    "psoriasis",
    "atopic eczema",
    "melanoma in situ",
    "basal cell carcinoma",
    "seborrheic keratosis",
    "rosacea",
    "acne vulgaris",
    "vitiligo",
];

/// Planted StudyDescription values containing "lichen" (any case).
pub const PLANTED: [&str; 2] = ["Lichen planus", "oral LICHEN planus, reticular"];

pub struct Corpus {
    pub dir: tempfile::TempDir,
    /// Every JPEG written, with the metadata it carries.
    pub files: Vec<(PathBuf, Option<ClinicalMetadata>)>,
    /// The files carrying a planted diagnosis.
    pub planted: Vec<PathBuf>,
}

impl Corpus {
    pub fn root(&self) -> &Path {
        self.dir.path()
    }

    pub fn tagged(&self) -> impl Iterator<Item = (&PathBuf, &ClinicalMetadata)> {
        self.files.iter().filter_map(|(p, m)| m.as_ref().map(|m| (p, m)))
    }
}

/// Builds `n` JPEGs spread over nested folders: roughly 3/4 tagged with
/// random metadata, the rest untagged (plain or camera EXIF), plus the two
/// planted "lichen" images and some non-JPEG noise.
pub fn build_corpus(n: usize, seed: u8) -> Corpus {
    assert!(n >= PLANTED.len());
    let dir = tempfile::tempdir().unwrap();
    let metas = sample(arb_metadata(), n, seed);
    let sources = TAGGABLE;
    let mut files = Vec::new();
    let mut planted = Vec::new();
    for (i, mut m) in metas.into_iter().enumerate() {
        let sub = match i % 5 {
            0 => PathBuf::new(),
            1 => PathBuf::from(format!("clinic{}", i % 3)),
            2 => PathBuf::from(format!("clinic{}/2021/visit{}", i % 3, i % 4)),
            3 => PathBuf::from(format!("archive/deep/er/still{}", i % 2)),
            _ => PathBuf::from(format!("clinic{}/2022", i % 3)),
        };
        let ext = ["jpg", "JPG", "jpeg"][i % 3];
        let folder = dir.path().join(&sub);
        std::fs::create_dir_all(&folder).unwrap();
        let path = folder.join(format!("img{:03}.{}", i, ext));
        let source = fixture(sources[i % sources.len()]);
        let metadata = if i < PLANTED.len() {
            m.study_description = Some(PLANTED[i].to_owned());
            planted.push(path.clone());
            Some(m)
        } else if i % 4 == 3 {
            None
        } else {
            m.study_description = Some(DIAGNOSES[i % DIAGNOSES.len()].to_owned());
            Some(m)
        };
        let bytes = match &metadata {
            Some(m) => dermtag::tagging::tag_jpeg(&source, m).unwrap(),
            None if sources[i % sources.len()] == "tagged_ascii.jpg" => fixture("camera_le.jpg"),
            None => source,
        };
        std::fs::write(&path, bytes).unwrap();
        files.push((path, metadata));
    }
    std::fs::write(dir.path().join("notes.txt"), "not an image").unwrap();
    std::fs::write(dir.path().join("clinic0/scan.png"), b"\x89PNG\r\n\x1a\n").unwrap();
    files.sort_by(|a, b| a.0.cmp(&b.0));
    planted.sort();
    Corpus { dir, files, planted }
}

// ---- DICOM oracle (dicom-rs) ----

pub fn read_back(bytes: &[u8]) -> DefaultDicomObject {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.dcm");
    std::fs::write(&path, bytes).unwrap();
    open_file(&path).expect("reference reader parses the file")
}

pub fn text(obj: &DefaultDicomObject, tag: dicom_object::Tag) -> String {
    obj.element(tag).unwrap().to_str().unwrap().into_owned()
}

/// DICOM pads text to even length with spaces and readers strip them, so
/// trailing spaces are not significant.
pub fn dicom_eq(expected: Option<&str>) -> String {
    expected.unwrap_or("").trim_end_matches(' ').to_owned()
}

/// Runs the full oracle comparison for one conversion.
pub fn check_conversion(jpeg: &[u8], m: &ClinicalMetadata) {
    let ctx = UidContext::seeded("2.25", 7).unwrap();
    let converted = convert_jpeg(jpeg, m, &ctx).unwrap();
    let bytes = &converted.bytes;
    assert!(bytes[..128].iter().all(|b| *b == 0));
    assert_eq!(&bytes[128..132], b"DICM");

    let obj = read_back(bytes);
    assert_eq!(obj.meta().transfer_syntax().trim_end_matches('\0'), JPEG_BASELINE_TRANSFER_SYNTAX);
    assert_eq!(obj.meta().media_storage_sop_class_uid().trim_end_matches('\0'), SECONDARY_CAPTURE_SOP_CLASS);
    assert_eq!(text(&obj, tags::SOP_CLASS_UID).trim_end_matches('\0'), SECONDARY_CAPTURE_SOP_CLASS);
    let sop = text(&obj, tags::SOP_INSTANCE_UID);
    let sop = sop.trim_end_matches('\0');
    assert_eq!(sop, converted.sop_instance_uid);
    assert!(is_valid_uid(sop));
    assert_eq!(obj.meta().media_storage_sop_instance_uid().trim_end_matches('\0'), sop);

    assert_eq!(text(&obj, tags::PATIENT_ID), dicom_eq(m.patient_id.as_deref()));
    assert_eq!(text(&obj, tags::PATIENT_NAME), dicom_eq(m.patient_name.as_deref()));
    assert_eq!(text(&obj, tags::PATIENT_SEX), dicom_eq(m.patient_sex.as_deref()));
    assert_eq!(text(&obj, tags::STUDY_DATE), dicom_eq(m.study_date.as_deref()));
    assert_eq!(text(&obj, tags::STUDY_TIME), dicom_eq(m.study_time.as_deref()));
    match m.study_description.as_deref() {
        Some(d) => assert_eq!(text(&obj, tags::STUDY_DESCRIPTION), dicom_eq(Some(d))),
        None => assert!(obj.element(tags::STUDY_DESCRIPTION).is_err()),
    }
    if let Some(uid) = &m.study_instance_uid {
        assert_eq!(text(&obj, tags::STUDY_INSTANCE_UID).trim_end_matches('\0'), uid);
    }
    if let Some(uid) = &m.series_instance_uid {
        assert_eq!(text(&obj, tags::SERIES_INSTANCE_UID).trim_end_matches('\0'), uid);
    }
    assert_eq!(text(&obj, tags::MODALITY), "OT");
    assert_eq!(text(&obj, tags::CONVERSION_TYPE), "WSD");

    let frame = dermtag::jpeg::parse_jpeg(jpeg).unwrap().frame;
    let rows: u16 = obj.element(tags::ROWS).unwrap().to_int().unwrap();
    let cols: u16 = obj.element(tags::COLUMNS).unwrap().to_int().unwrap();
    assert_eq!((rows, cols), (frame.rows, frame.columns));
    let spp: u16 = obj.element(tags::SAMPLES_PER_PIXEL).unwrap().to_int().unwrap();
    assert_eq!(spp, frame.components as u16);
    let photometric = text(&obj, tags::PHOTOMETRIC_INTERPRETATION);
    assert_eq!(photometric, if frame.components == 3 { "YBR_FULL_422" } else { "MONOCHROME2" });

    let pixel = obj.element(tags::PIXEL_DATA).unwrap();
    let fragments = pixel.value().fragments().expect("encapsulated pixel data");
    assert_eq!(fragments.len(), 1);
    let frag = &fragments[0];
    assert!(frag.len() == jpeg.len() || (frag.len() == jpeg.len() + 1 && frag[jpeg.len()] == 0));
    assert_eq!(&frag[..jpeg.len()], jpeg);
    assert!(pixel.value().offset_table().unwrap_or(&[]).is_empty());

    // Modality element, raw.
    let modality = [0x08, 0x00, 0x60, 0x00, 0x43, 0x53, 0x02, 0x00, 0x4F, 0x54];
    assert_eq!(bytes.windows(10).filter(|w| *w == modality).count(), 1);
}

// ---- keyed-MAC and UID oracles ----

/// HMAC-SHA256 built by hand from the hash (RFC 2104).
pub fn hmac_oracle(key: &[u8], msg: &[u8]) -> [u8; 32] {
    const BLOCK: usize = 64;
    let mut k = if key.len() > BLOCK { Sha256::digest(key).to_vec() } else { key.to_vec() };
    k.resize(BLOCK, 0);
    let ipad: Vec<u8> = k.iter().map(|b| b ^ 0x36).collect();
    let opad: Vec<u8> = k.iter().map(|b| b ^ 0x5c).collect();
    let inner = Sha256::new().chain_update(&ipad).chain_update(msg).finalize();
    Sha256::new().chain_update(&opad).chain_update(inner).finalize().into()
}

pub fn hex(b: &[u8]) -> String {
    b.iter().map(|x| format!("{:02x}", x)).collect()
}

/// Independent check of the UID grammar and the numeric suffix.
pub fn uid_oracle(uid: &str, root: &str) -> bool {
    let Some(suffix) = uid.strip_prefix(root).and_then(|s| s.strip_prefix('.')) else { return false };
    let Ok(n) = suffix.parse::<BigUint>() else { return false };
    let max = (BigUint::from(1u8) << 128u32) - 1u8;
    uid.len() <= 64
        && n <= max
        && n.to_string() == suffix
        && uid.split('.').all(|c| !c.is_empty() && c.chars().all(|d| d.is_ascii_digit()) && (c == "0" || !c.starts_with('0')))
}


/// Random query built from values present in the corpus, so that most
/// queries have some hits.
pub fn random_query(corpus: &Corpus, runner: &mut proptest::test_runner::TestRunner) -> SearchQuery {
    let tagged: Vec<&ClinicalMetadata> = corpus.tagged().map(|(_, m)| m).collect();
    let strategy = (
        prop::collection::vec((0..Field::ALL.len(), 0..tagged.len(), 0u8..3, 0usize..4, 1usize..6), 1..3),
        any::<bool>(),
        prop::option::of((0..tagged.len(), 0..tagged.len())),
    );
    let (preds, case_sensitive, range) = strategy.new_tree(runner).unwrap().current();
    let mut predicates = Vec::new();
    for (f, source, op, start, len) in preds {
        let field = Field::ALL[f];
        let value = tagged[source].get(field).unwrap_or("zzz-absent").to_owned();
        let chars: Vec<char> = value.chars().collect();
        predicates.push(match op {
            0 => Predicate::equals(field, value),
            1 => Predicate::equals(field, value.to_uppercase()),
            _ => {
                let s = start.min(chars.len());
                let e = (s + len).min(chars.len());
                Predicate::contains(field, chars[s..e].iter().collect::<String>())
            }
        });
    }
    if let Some((a, b)) = range {
        let d = |i: usize| tagged[i].study_date.clone();
        let (from, to) = match (d(a), d(b)) {
            (Some(x), Some(y)) if x > y => (Some(y), Some(x)),
            (x, y) => (x, y),
        };
        predicates.push(Predicate::date_range(from, to));
    }
    SearchQuery { predicates, case_sensitive }.validated().unwrap()
}

