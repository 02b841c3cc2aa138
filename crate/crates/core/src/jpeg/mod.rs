//! JPEG container handling: segment parsing, the EXIF APP1 block and the
//! UserComment carrier.

pub mod exif;
pub mod segment;

use std::io::{Cursor, Read};

use thiserror::Error;

pub use exif::{ByteOrder, ExifBlock, IfdEntry, IfdKind, ThumbnailIfd};
pub use segment::{ImageDescriptor, Segment};

use segment::{APP0, APP1, MAX_PAYLOAD};

/// Identifier at the start of an EXIF APP1 payload.
pub const EXIF_HEADER: &[u8; 6] = b"Exif\0\0";

#[derive(Debug, Error)]
pub enum JpegError {
    #[error("not a JPEG file (missing SOI marker)")]
    NotAJpeg,
    #[error("truncated JPEG file")]
    TruncatedFile,
    #[error("no frame header before start of scan")]
    MissingFrameHeader,
    #[error("invalid marker at offset {offset}")]
    InvalidMarker { offset: u64 },
    #[error("unsupported frame: {0}")]
    UnsupportedFrame(String),
    #[error("malformed EXIF block: {0}")]
    MalformedExif(String),
    #[error("EXIF block of {0} bytes does not fit in one APP1 segment")]
    OversizeExif(usize),
    #[error("UserComment text must be ASCII")]
    NonAsciiComment,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A JPEG file split into header segments and the opaque scan data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JpegDocument {
    pub segments: Vec<Segment>,
    /// Everything from the first SOS marker (including any fill bytes in
    /// front of it) to the end of the file.
    pub scan_data: Vec<u8>,
    pub frame: ImageDescriptor,
}

/// Header-only view of a JPEG, read without loading the scan data.
#[derive(Debug, Clone)]
pub struct JpegHeader {
    pub segments: Vec<Segment>,
    pub frame: ImageDescriptor,
}

pub fn parse_jpeg(bytes: &[u8]) -> Result<JpegDocument, JpegError> {
    let mut cursor = Cursor::new(bytes);
    let header = segment::read_header(&mut cursor)?;
    let scan_start = cursor.position() as usize - 2 - header.sos_fill;
    let scan_data = bytes[scan_start..].to_vec();
    if !scan_data.windows(2).any(|w| w == [0xFF, segment::EOI]) {
        return Err(JpegError::TruncatedFile);
    }
    Ok(JpegDocument { segments: header.segments, scan_data, frame: header.frame })
}

impl JpegHeader {
    /// Reads segments up to the first SOS marker and stops there.
    pub fn read<R: Read>(reader: R) -> Result<JpegHeader, JpegError> {
        let h = segment::read_header(reader)?;
        Ok(JpegHeader { segments: h.segments, frame: h.frame })
    }

    pub fn user_comment(&self) -> Result<Option<String>, JpegError> {
        user_comment_of(&self.segments)
    }
}

fn exif_segment(segments: &[Segment]) -> Option<usize> {
    segments.iter().position(Segment::is_exif)
}

fn user_comment_of(segments: &[Segment]) -> Result<Option<String>, JpegError> {
    match exif_segment(segments) {
        None => Ok(None),
        Some(i) => Ok(ExifBlock::parse(&segments[i].payload[EXIF_HEADER.len()..])?.user_comment()),
    }
}

impl JpegDocument {
    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(
            2 + self.segments.iter().map(|s| s.payload.len() + 4).sum::<usize>() + self.scan_data.len(),
        );
        out.extend_from_slice(&[0xFF, segment::SOI]);
        for s in &self.segments {
            s.write_to(&mut out);
        }
        out.extend_from_slice(&self.scan_data);
        out
    }

    pub fn image_descriptor(&self) -> ImageDescriptor {
        self.frame
    }

    /// The decoded EXIF block, if the file has one.
    pub fn exif(&self) -> Result<Option<ExifBlock>, JpegError> {
        exif_segment(&self.segments)
            .map(|i| ExifBlock::parse(&self.segments[i].payload[EXIF_HEADER.len()..]))
            .transpose()
    }

    /// UserComment text with the character-code prefix removed.
    pub fn read_user_comment(&self) -> Result<Option<String>, JpegError> {
        user_comment_of(&self.segments)
    }

    /// Returns a new JPEG byte stream whose UserComment is `comment`.
    ///
    /// The EXIF block is decoded and fully rebuilt. When the file has no
    /// EXIF block a minimal one is inserted after SOI (after any APP0
    /// segments).
    pub fn write_user_comment(&self, comment: &str) -> Result<Vec<u8>, JpegError> {
        let mut doc = self.clone();
        doc.set_user_comment(comment)?;
        Ok(doc.serialize())
    }

    pub fn set_user_comment(&mut self, comment: &str) -> Result<(), JpegError> {
        let existing = exif_segment(&self.segments);
        let mut block = match existing {
            Some(i) => ExifBlock::parse(&self.segments[i].payload[EXIF_HEADER.len()..])?,
            None => ExifBlock::empty(),
        };
        block.set_user_comment(comment)?;
        let mut payload = EXIF_HEADER.to_vec();
        payload.extend_from_slice(&block.serialize());
        if payload.len() > MAX_PAYLOAD {
            return Err(JpegError::OversizeExif(payload.len()));
        }
        match existing {
            Some(i) => self.segments[i].payload = payload,
            None => {
                let at = self.segments.iter().take_while(|s| s.marker == APP0).count();
                self.segments.insert(at, Segment::new(APP1, payload));
            }
        }
        Ok(())
    }
}
