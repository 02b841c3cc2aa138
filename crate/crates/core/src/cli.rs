//! The `dermtag` command line.
//!
//! Exit codes: 0 success, 1 operational error, 2 usage error, 3 when
//! `detect` finds a tagged image.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dicom::convert_jpeg;
use crate::jpeg::{parse_jpeg, JpegHeader};
use crate::metadata::{
    detect, split_date_time, AnonymizationPolicy, Anonymizer, ClinicalMetadata, DateHandling, Field, MetadataError,
};
use crate::search::{normalize_date, scan, Predicate, SearchQuery};
use crate::service::{check_bind, serve, ServiceConfig};
use crate::tagging::{read_tags, tag_jpeg, write_atomic, TagState};
use crate::uid::{OsEntropy, SeededEntropy, UidContext, UUID_ROOT};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_TAGGED: i32 = 3;

/// Environment variable holding the anonymization secret.
pub const SECRET_ENV: &str = "DERMTAG_SECRET";

#[derive(Debug, Parser)]
#[command(name = "dermtag", version, about = "Clinical metadata in JPEG EXIF UserComment")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Add or update metadata fields (FIELD=VALUE) in a JPEG.
    Tag(TagArgs),
    /// Print the metadata stored in a JPEG.
    Show(ShowArgs),
    /// Recursively find tagged JPEGs matching all given filters.
    Search(SearchArgs),
    /// Convert a tagged baseline JPEG to a DICOM Secondary Capture file.
    Convert(ConvertArgs),
    /// Remove or pseudonymize identifying fields.
    Anonymize(AnonymizeArgs),
    /// Report whether files carry metadata (exit 3 if any do).
    Detect(DetectArgs),
    /// Serve the HTTP API and UI for one directory.
    Serve(ServeArgs),
}

fn parse_assignment(s: &str) -> Result<(Field, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected FIELD=VALUE, got {:?}", s))?;
    let field = k.parse::<Field>().map_err(|e| e.to_string())?;
    Ok((field, v.to_owned()))
}

#[derive(Debug, Args)]
pub struct TagArgs {
    pub file: PathBuf,
    /// FIELD=VALUE pairs; field names are DICOM keywords (PatientID,
    /// StudyDescription, ...) or `diagnosis`.
    #[arg(value_parser = parse_assignment)]
    pub fields: Vec<(Field, String)>,
    /// ISO-8601 date or date-time, stored as StudyDate and StudyTime.
    #[arg(long)]
    pub date_time: Option<String>,
    /// Rewrite the input file instead of writing <name>.tagged.jpg.
    #[arg(long, conflicts_with = "output")]
    pub in_place: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct ShowArgs {
    pub file: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    pub root: PathBuf,
    /// FIELD=VALUE exact match (case-insensitive unless --case-sensitive).
    #[arg(long = "where", value_parser = parse_assignment)]
    pub where_: Vec<(Field, String)>,
    /// FIELD=TEXT substring match.
    #[arg(long, value_parser = parse_assignment)]
    pub contains: Vec<(Field, String)>,
    /// Earliest StudyDate (YYYYMMDD or YYYY-MM-DD), inclusive.
    #[arg(long)]
    pub from: Option<String>,
    /// Latest StudyDate, inclusive.
    #[arg(long)]
    pub to: Option<String>,
    #[arg(long)]
    pub case_sensitive: bool,
    /// Print matching records with their metadata as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct UidArgs {
    /// UID root for generated identifiers.
    #[arg(long, default_value = UUID_ROOT)]
    pub uid_root: String,
    /// Seed for reproducible UIDs (testing only).
    #[arg(long)]
    pub seed: Option<u64>,
}

impl UidArgs {
    fn context(&self) -> Result<UidContext, String> {
        let r = match self.seed {
            Some(seed) => UidContext::new(&self.uid_root, Box::new(SeededEntropy::new(seed))),
            None => UidContext::new(&self.uid_root, Box::new(OsEntropy)),
        };
        r.map_err(|e| e.to_string())
    }
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    pub file: PathBuf,
    /// Output path; defaults to <name>.dcm next to the input.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub uid: UidArgs,
    /// Convert images without metadata, leaving demographics empty.
    #[arg(long)]
    pub allow_untagged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Dates {
    Keep,
    Year,
    Drop,
}

#[derive(Debug, Args)]
pub struct AnonymizeArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// File whose contents are the pseudonymization key. Falls back to the
    /// DERMTAG_SECRET environment variable.
    #[arg(long)]
    pub secret_file: Option<PathBuf>,
    #[arg(long)]
    pub keep_name: bool,
    /// Remove PatientID instead of replacing it with a pseudonym.
    #[arg(long)]
    pub drop_id: bool,
    #[arg(long, value_enum, default_value = "keep")]
    pub dates: Dates,
    /// Keep unrecognized payload keys.
    #[arg(long)]
    pub keep_extras: bool,
    /// Rewrite inputs instead of writing <name>.anon.jpg.
    #[arg(long)]
    pub in_place: bool,
    #[command(flatten)]
    pub uid: UidArgs,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = ".")]
    pub root: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Permit binding a non-loopback address. The API has no authentication.
    #[arg(long)]
    pub allow_remote: bool,
    /// Built UI bundle to serve at /.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
    #[arg(long, default_value = UUID_ROOT)]
    pub uid_root: String,
}

/// An error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn op(message: impl std::fmt::Display) -> Failure {
        Failure { code: EXIT_FAILURE, message: message.to_string() }
    }

    fn usage(message: impl std::fmt::Display) -> Failure {
        Failure { code: EXIT_USAGE, message: message.to_string() }
    }

    fn at(path: &Path) -> impl Fn(String) -> Failure + '_ {
        move |m| Failure::op(format!("{}: {}", path.display(), m))
    }
}

type CliResult = Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(rendered.as_bytes()) } else { out.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

pub fn execute(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    match cmd {
        Command::Tag(a) => cmd_tag(a, out),
        Command::Show(a) => cmd_show(a, out),
        Command::Search(a) => cmd_search(a, out, err),
        Command::Convert(a) => cmd_convert(a, out),
        Command::Anonymize(a) => cmd_anonymize(a, out, err),
        Command::Detect(a) => cmd_detect(a, out),
        Command::Serve(a) => cmd_serve(a, err),
    }
}

fn io_fail(e: io::Error) -> Failure {
    Failure::op(e)
}

/// `dir/name.jpg` -> `dir/name.<suffix>`
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{}.{}", stem, suffix))
}

fn load(path: &Path) -> Result<(Vec<u8>, TagState), Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::at(path)(e.to_string()))?;
    let doc = parse_jpeg(&bytes).map_err(|e| Failure::at(path)(e.to_string()))?;
    let state = read_tags(&doc).map_err(|e| Failure::at(path)(describe(e)))?;
    Ok((bytes, state))
}

/// Error text with one line per validation issue.
fn describe(e: impl Into<crate::tagging::Error>) -> String {
    match e.into() {
        crate::tagging::Error::Metadata(MetadataError::InvalidMetadata(issues)) => {
            let mut s = String::from("invalid metadata");
            for i in issues {
                s.push_str(&format!("\n  {}", i));
            }
            s
        }
        other => other.to_string(),
    }
}

fn cmd_tag(a: TagArgs, out: &mut dyn Write) -> CliResult {
    if a.fields.is_empty() && a.date_time.is_none() {
        return Err(Failure::usage("nothing to tag: give FIELD=VALUE pairs or --date-time"));
    }
    let (bytes, state) = load(&a.file)?;
    let mut m = state.metadata().cloned().unwrap_or_default();
    if let Some(dt) = &a.date_time {
        let (date, time) = split_date_time(dt).map_err(Failure::usage)?;
        m.study_date = Some(date);
        m.study_time = time;
    }
    for (field, value) in a.fields {
        m.set(field, Some(value));
    }
    let tagged = tag_jpeg(&bytes, &m).map_err(|e| Failure::at(&a.file)(describe(e)))?;
    let target = match (a.in_place, a.output) {
        (true, _) => a.file.clone(),
        (false, Some(o)) => o,
        (false, None) => sibling(&a.file, "tagged.jpg"),
    };
    write_atomic(&target, &tagged).map_err(io_fail)?;
    writeln!(out, "{}", target.display()).map_err(io_fail)?;
    Ok(EXIT_OK)
}

pub fn render_text(m: &ClinicalMetadata) -> String {
    let mut s = format!("{:<18}{}\n", "dicoderma", m.schema_version);
    for (f, v) in m.fields() {
        s.push_str(&format!("{:<18}{}\n", f.keyword(), v));
    }
    if m.deidentified {
        s.push_str(&format!("{:<18}{}\n", "Deidentified", "true"));
    }
    for (k, v) in &m.extras {
        s.push_str(&format!("{:<18}{}\n", k, v));
    }
    s
}

fn cmd_show(a: ShowArgs, out: &mut dyn Write) -> CliResult {
    let (_, state) = load(&a.file)?;
    match state {
        TagState::Untagged => {
            writeln!(out, "untagged").map_err(io_fail)?;
            Ok(EXIT_FAILURE)
        }
        TagState::Tagged { metadata, payload } => {
            match a.format {
                Format::Json => writeln!(out, "{}", payload),
                Format::Text => write!(out, "{}", render_text(&metadata)),
            }
            .map_err(io_fail)?;
            Ok(EXIT_OK)
        }
    }
}

fn cmd_search(a: SearchArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let mut predicates: Vec<Predicate> = a.where_.into_iter().map(|(f, v)| Predicate::equals(f, v)).collect();
    predicates.extend(a.contains.into_iter().map(|(f, v)| Predicate::contains(f, v)));
    if a.from.is_some() || a.to.is_some() {
        let from = a.from.as_deref().map(normalize_date).transpose().map_err(Failure::usage)?;
        let to = a.to.as_deref().map(normalize_date).transpose().map_err(Failure::usage)?;
        predicates.push(Predicate::date_range(from, to));
    }
    let query = SearchQuery { predicates, case_sensitive: a.case_sensitive };
    let outcome = scan(&a.root, &query).map_err(Failure::op)?;
    for (path, e) in &outcome.diagnostics.errors {
        let _ = writeln!(err, "warning: {}: {}", path.display(), e);
    }
    if a.json {
        let text = serde_json::to_string_pretty(&outcome.records).map_err(Failure::op)?;
        writeln!(out, "{}", text).map_err(io_fail)?;
    } else {
        for r in &outcome.records {
            writeln!(out, "{}", r.path.display()).map_err(io_fail)?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_convert(a: ConvertArgs, out: &mut dyn Write) -> CliResult {
    let ctx = a.uid.context().map_err(Failure::usage)?;
    let (bytes, state) = load(&a.file)?;
    let metadata = match state {
        TagState::Tagged { metadata, .. } => metadata,
        TagState::Untagged if a.allow_untagged => ClinicalMetadata::default(),
        TagState::Untagged => {
            return Err(Failure::op(format!("{}: untagged (use --allow-untagged to convert anyway)", a.file.display())))
        }
    };
    let converted = convert_jpeg(&bytes, &metadata, &ctx).map_err(|e| Failure::at(&a.file)(e.to_string()))?;
    let target = a.out.unwrap_or_else(|| sibling(&a.file, "dcm"));
    write_atomic(&target, &converted.bytes).map_err(io_fail)?;
    writeln!(out, "{}", converted.sop_instance_uid).map_err(io_fail)?;
    Ok(EXIT_OK)
}

fn read_secret(a: &AnonymizeArgs) -> Result<Vec<u8>, Failure> {
    if let Some(p) = &a.secret_file {
        let mut s = fs::read(p).map_err(|e| Failure::op(format!("cannot read secret file {}: {}", p.display(), e)))?;
        while s.last().is_some_and(|b| *b == b'\n' || *b == b'\r') {
            s.pop();
        }
        return Ok(s);
    }
    Ok(std::env::var_os(SECRET_ENV).map(|v| v.to_string_lossy().into_owned().into_bytes()).unwrap_or_default())
}

fn cmd_anonymize(a: AnonymizeArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let policy = AnonymizationPolicy {
        drop_name: !a.keep_name,
        pseudonymize_id: !a.drop_id,
        date_handling: match a.dates {
            Dates::Keep => DateHandling::Keep,
            Dates::Year => DateHandling::YearOnly,
            Dates::Drop => DateHandling::Drop,
        },
        secret: read_secret(&a)?,
        keep_extras: a.keep_extras,
    };
    let ctx = a.uid.context().map_err(Failure::usage)?;
    let mut anonymizer = Anonymizer::new(policy, ctx).map_err(|_| {
        Failure::op(format!("no secret: use --secret-file or set {} (or pass --drop-id)", SECRET_ENV))
    })?;
    for file in &a.files {
        let (bytes, state) = load(file)?;
        let TagState::Tagged { metadata, .. } = state else {
            let _ = writeln!(err, "{}: untagged, skipped", file.display());
            continue;
        };
        let clean = anonymizer.anonymize(&metadata).map_err(|e| Failure::at(file)(describe(e)))?;
        let updated = tag_jpeg(&bytes, &clean).map_err(|e| Failure::at(file)(describe(e)))?;
        let target = if a.in_place { file.clone() } else { sibling(file, "anon.jpg") };
        let unchanged = target == *file && updated == bytes;
        if !unchanged {
            write_atomic(&target, &updated).map_err(io_fail)?;
        }
        writeln!(out, "{}", target.display()).map_err(io_fail)?;
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Tagged,
    Clean,
    Unreadable,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Tagged => "TAGGED",
            Verdict::Clean => "CLEAN",
            Verdict::Unreadable => "UNREADABLE",
        }
    }
}

/// Reads only the header segments of `path` and checks for a payload.
pub fn verdict(path: &Path) -> Verdict {
    let Ok(file) = fs::File::open(path) else { return Verdict::Unreadable };
    let comment = JpegHeader::read(io::BufReader::new(file)).and_then(|h| h.user_comment());
    match comment {
        Ok(c) if detect(c.as_deref()) => Verdict::Tagged,
        Ok(_) => Verdict::Clean,
        Err(_) => Verdict::Unreadable,
    }
}

/// Unreadable dominates tagged, which dominates clean.
pub fn detect_exit_code(verdicts: &[Verdict]) -> i32 {
    if verdicts.contains(&Verdict::Unreadable) {
        EXIT_FAILURE
    } else if verdicts.contains(&Verdict::Tagged) {
        EXIT_TAGGED
    } else {
        EXIT_OK
    }
}

fn cmd_detect(a: DetectArgs, out: &mut dyn Write) -> CliResult {
    let mut verdicts = Vec::with_capacity(a.paths.len());
    for p in &a.paths {
        let v = verdict(p);
        writeln!(out, "{}\t{}", p.display(), v.label()).map_err(io_fail)?;
        verdicts.push(v);
    }
    Ok(detect_exit_code(&verdicts))
}

fn cmd_serve(a: ServeArgs, err: &mut dyn Write) -> CliResult {
    check_bind(a.bind, a.allow_remote).map_err(Failure::usage)?;
    if !a.root.is_dir() {
        return Err(Failure::op(format!("{} is not a directory", a.root.display())));
    }
    let config = ServiceConfig { root: a.root, ui_dir: a.ui_dir, uid_root: a.uid_root };
    let runtime = tokio::runtime::Runtime::new().map_err(io_fail)?;
    runtime
        .block_on(serve(config, a.bind, |addr| {
            let _ = writeln!(err, "listening on http://{}", addr);
            let _ = err.flush();
        }))
        .map_err(|e| Failure::op(format!("cannot serve on {}: {}", a.bind, e)))?;
    Ok(EXIT_OK)
}
