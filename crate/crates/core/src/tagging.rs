//! File-level operations shared by the CLI and the service.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use crate::dicom::DicomError;
use crate::jpeg::{parse_jpeg, JpegDocument, JpegError};
use crate::metadata::{decode_metadata, detect, encode_metadata, ClinicalMetadata, MetadataError};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Jpeg(#[from] JpegError),
    #[error(transparent)]
    Metadata(#[from] MetadataError),
    #[error(transparent)]
    Dicom(#[from] DicomError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Whether an image carries a payload, and if so what it decodes to.
#[derive(Debug, Clone, PartialEq)]
pub enum TagState {
    Untagged,
    Tagged { metadata: ClinicalMetadata, payload: String },
}

impl TagState {
    pub fn metadata(&self) -> Option<&ClinicalMetadata> {
        match self {
            TagState::Tagged { metadata, .. } => Some(metadata),
            TagState::Untagged => None,
        }
    }

    pub fn is_tagged(&self) -> bool {
        matches!(self, TagState::Tagged { .. })
    }
}

/// Interprets a UserComment. Comments that are not payloads (camera text,
/// other JSON) count as untagged; a payload that fails validation is an
/// error.
pub fn tag_state(comment: Option<String>) -> Result<TagState, MetadataError> {
    match comment {
        Some(payload) if detect(Some(&payload)) => {
            let metadata = decode_metadata(&payload)?;
            Ok(TagState::Tagged { metadata, payload })
        }
        _ => Ok(TagState::Untagged),
    }
}

pub fn read_tags(doc: &JpegDocument) -> Result<TagState, Error> {
    Ok(tag_state(doc.read_user_comment()?)?)
}

/// Returns `jpeg` with `m` stored as the UserComment payload.
pub fn tag_jpeg(jpeg: &[u8], m: &ClinicalMetadata) -> Result<Vec<u8>, Error> {
    let payload = encode_metadata(m)?;
    Ok(parse_jpeg(jpeg)?.write_user_comment(&payload)?)
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::Builder::new().prefix(".dermtag-").tempfile_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    if let Ok(meta) = fs::metadata(path) {
        tmp.as_file().set_permissions(meta.permissions())?;
    }
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
