//! Marker-segment level JPEG model.
//!
//! Only the header is interpreted. Everything from the first SOS marker to
//! the end of the file is kept as one opaque block so that re-serializing an
//! untouched document reproduces the input exactly.

use std::io::{self, Read};

use super::JpegError;

pub const SOI: u8 = 0xD8;
pub const EOI: u8 = 0xD9;
pub const SOS: u8 = 0xDA;
pub const APP0: u8 = 0xE0;
pub const APP1: u8 = 0xE1;
pub const COM: u8 = 0xFE;

/// Largest payload a length-prefixed segment can carry.
pub const MAX_PAYLOAD: usize = 65533;

/// One marker segment between SOI and the first SOS.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub marker: u8,
    /// Payload without the 2-byte length field. Empty for standalone markers.
    pub payload: Vec<u8>,
    /// Number of 0xFF fill bytes that preceded the marker in the source.
    pub fill: usize,
}

impl Segment {
    pub fn new(marker: u8, payload: Vec<u8>) -> Segment {
        Segment { marker, payload, fill: 0 }
    }

    pub fn is_app(&self, n: u8) -> bool {
        self.marker == APP0 + n
    }

    pub fn is_exif(&self) -> bool {
        self.marker == APP1 && self.payload.starts_with(super::EXIF_HEADER)
    }

    pub(crate) fn write_to(&self, out: &mut Vec<u8>) {
        out.extend(std::iter::repeat(0xFF).take(self.fill));
        out.push(0xFF);
        out.push(self.marker);
        if !is_standalone(self.marker) {
            let len = (self.payload.len() + 2) as u16;
            out.extend_from_slice(&len.to_be_bytes());
            out.extend_from_slice(&self.payload);
        }
    }
}

/// Markers that carry no length field.
pub fn is_standalone(marker: u8) -> bool {
    matches!(marker, 0x01 | 0xD0..=0xD7 | SOI | EOI)
}

/// Start-of-frame markers. DHT (C4), JPG (C8) and DAC (CC) share the range
/// but are not frame headers.
pub fn is_sof(marker: u8) -> bool {
    matches!(marker, 0xC0..=0xC3 | 0xC5..=0xC7 | 0xC9..=0xCB | 0xCD..=0xCF)
}

/// Dimensions and coding process from the frame header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ImageDescriptor {
    pub rows: u16,
    pub columns: u16,
    pub components: u8,
    pub baseline: bool,
    pub bits_per_sample: u8,
}

impl ImageDescriptor {
    pub(crate) fn from_sof(marker: u8, payload: &[u8]) -> Result<ImageDescriptor, JpegError> {
        if payload.len() < 6 {
            return Err(JpegError::UnsupportedFrame("frame header too short".into()));
        }
        let bits_per_sample = payload[0];
        let rows = u16::from_be_bytes([payload[1], payload[2]]);
        let columns = u16::from_be_bytes([payload[3], payload[4]]);
        let components = payload[5];
        if rows == 0 || columns == 0 {
            return Err(JpegError::UnsupportedFrame(format!(
                "zero image dimension ({}x{})",
                columns, rows
            )));
        }
        if components != 1 && components != 3 {
            return Err(JpegError::UnsupportedFrame(format!(
                "{} components (only 1 or 3 supported)",
                components
            )));
        }
        Ok(ImageDescriptor {
            rows,
            columns,
            components,
            baseline: marker == 0xC0,
            bits_per_sample,
        })
    }
}

/// Result of reading the header part of a JPEG stream.
#[derive(Debug, Clone)]
pub(crate) struct Header {
    pub segments: Vec<Segment>,
    pub frame: ImageDescriptor,
    /// Fill bytes seen before the SOS marker.
    pub sos_fill: usize,
}

struct Counted<R> {
    inner: R,
    pos: u64,
}

impl<R: Read> Counted<R> {
    fn byte(&mut self) -> Result<u8, JpegError> {
        let mut b = [0u8; 1];
        self.exact(&mut b)?;
        Ok(b[0])
    }

    fn exact(&mut self, buf: &mut [u8]) -> Result<(), JpegError> {
        match self.inner.read_exact(buf) {
            Ok(()) => {
                self.pos += buf.len() as u64;
                Ok(())
            }
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => Err(JpegError::TruncatedFile),
            Err(e) => Err(JpegError::Io(e)),
        }
    }
}

/// Reads SOI and every segment up to and including the first SOS marker
/// (the SOS marker bytes themselves are consumed but not its payload).
pub(crate) fn read_header<R: Read>(reader: R) -> Result<Header, JpegError> {
    let mut r = Counted { inner: reader, pos: 0 };
    let mut soi = [0u8; 2];
    match r.exact(&mut soi) {
        Ok(()) if soi == [0xFF, SOI] => {}
        Ok(()) | Err(JpegError::TruncatedFile) => return Err(JpegError::NotAJpeg),
        Err(e) => return Err(e),
    }

    let mut segments = Vec::new();
    let mut frame = None;
    loop {
        let offset = r.pos;
        if r.byte()? != 0xFF {
            return Err(JpegError::InvalidMarker { offset });
        }
        let mut fill = 0;
        let mut marker = r.byte()?;
        while marker == 0xFF {
            fill += 1;
            marker = r.byte()?;
        }
        match marker {
            0x00 | SOI => return Err(JpegError::InvalidMarker { offset }),
            EOI => return Err(JpegError::MissingFrameHeader),
            SOS => {
                let frame = frame.ok_or(JpegError::MissingFrameHeader)?;
                return Ok(Header { segments, frame, sos_fill: fill });
            }
            m if is_standalone(m) => segments.push(Segment { marker: m, payload: Vec::new(), fill }),
            m => {
                let mut len = [0u8; 2];
                r.exact(&mut len)?;
                let len = u16::from_be_bytes(len) as usize;
                if len < 2 {
                    return Err(JpegError::InvalidMarker { offset });
                }
                let mut payload = vec![0u8; len - 2];
                r.exact(&mut payload)?;
                if is_sof(m) && frame.is_none() {
                    frame = Some(ImageDescriptor::from_sof(m, &payload)?);
                }
                segments.push(Segment { marker: m, payload, fill });
            }
        }
    }
}
