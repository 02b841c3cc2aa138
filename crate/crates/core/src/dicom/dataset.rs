use std::collections::BTreeMap;

use super::dictionary::{self, *};
use super::element::{write_header, DicomElement, Tag, Vr};
use super::DicomError;

/// JPEG Baseline (Process 1).
pub const JPEG_BASELINE_TRANSFER_SYNTAX: &str = "1.2.840.10008.1.2.4.50";

/// Data elements plus the group 0002 file meta information.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DicomDataset {
    elements: BTreeMap<Tag, DicomElement>,
    file_meta: BTreeMap<Tag, DicomElement>,
    pub transfer_syntax: String,
}

impl Default for DicomDataset {
    fn default() -> Self {
        DicomDataset {
            elements: BTreeMap::new(),
            file_meta: BTreeMap::new(),
            transfer_syntax: JPEG_BASELINE_TRANSFER_SYNTAX.to_owned(),
        }
    }
}

fn check_vr(e: &DicomElement) -> Result<(), DicomError> {
    if let Some((_, vr)) = dictionary::lookup(e.tag) {
        if vr != e.vr {
            return Err(DicomError::VrMismatch { tag: e.tag, expected: vr, found: e.vr });
        }
    }
    if !e.vr.has_long_length() && e.value.len() > u16::MAX as usize {
        return Err(DicomError::ValueTooLong { tag: e.tag, len: e.value.len() });
    }
    Ok(())
}

impl DicomDataset {
    /// Inserts or replaces a dataset element.
    pub fn put(&mut self, e: DicomElement) -> Result<(), DicomError> {
        if e.tag.group() == 0x0002 || e.tag == PIXEL_DATA {
            return Err(DicomError::MisplacedElement(e.tag));
        }
        check_vr(&e)?;
        self.elements.insert(e.tag, e);
        Ok(())
    }

    /// Inserts or replaces a file meta element. The group length is always
    /// computed on encode and cannot be set.
    pub fn put_meta(&mut self, e: DicomElement) -> Result<(), DicomError> {
        if e.tag.group() != 0x0002 || e.tag == FILE_META_GROUP_LENGTH {
            return Err(DicomError::MisplacedElement(e.tag));
        }
        check_vr(&e)?;
        self.file_meta.insert(e.tag, e);
        Ok(())
    }

    pub fn get(&self, tag: Tag) -> Option<&DicomElement> {
        self.elements.get(&tag).or_else(|| self.file_meta.get(&tag))
    }

    /// Dataset elements in ascending tag order.
    pub fn elements(&self) -> impl Iterator<Item = &DicomElement> {
        self.elements.values()
    }

    pub fn file_meta(&self) -> impl Iterator<Item = &DicomElement> {
        self.file_meta.values()
    }
}

/// Encodes a Part-10 file: preamble, `DICM`, file meta group, dataset and
/// the JPEG stream as a single encapsulated fragment.
pub fn encode_part10(ds: &DicomDataset, jpeg: &[u8]) -> Result<Vec<u8>, DicomError> {
    if jpeg.len() as u64 >= u32::MAX as u64 - 1 {
        return Err(DicomError::FragmentTooLarge(jpeg.len()));
    }
    let mut meta = Vec::new();
    for e in ds.file_meta.values() {
        e.write_to(&mut meta);
    }

    let mut out = Vec::with_capacity(132 + 12 + meta.len() + jpeg.len() + 1024);
    out.resize(128, 0);
    out.extend_from_slice(b"DICM");
    DicomElement::ul(FILE_META_GROUP_LENGTH, meta.len() as u32).write_to(&mut out);
    out.extend_from_slice(&meta);

    for e in ds.elements.values() {
        e.write_to(&mut out);
    }

    write_header(&mut out, PIXEL_DATA, Vr::OB, u32::MAX);
    write_item(&mut out, ITEM, &[]);
    let padded = jpeg.len() + jpeg.len() % 2;
    write_item_header(&mut out, ITEM, padded as u32);
    out.extend_from_slice(jpeg);
    if jpeg.len() % 2 == 1 {
        out.push(0);
    }
    write_item(&mut out, SEQUENCE_DELIMITATION_ITEM, &[]);
    Ok(out)
}

fn write_item_header(out: &mut Vec<u8>, tag: Tag, len: u32) {
    out.extend_from_slice(&tag.0.to_le_bytes());
    out.extend_from_slice(&tag.1.to_le_bytes());
    out.extend_from_slice(&len.to_le_bytes());
}

fn write_item(out: &mut Vec<u8>, tag: Tag, value: &[u8]) {
    write_item_header(out, tag, value.len() as u32);
    out.extend_from_slice(value);
}
