//! TIFF-structured EXIF block as carried in an APP1 segment.
//!
//! The block is decoded into per-directory entry lists. Entries that only
//! describe the layout (sub-directory pointers, thumbnail offset/length) are
//! dropped on read and synthesized again on write, so a rebuilt block always
//! has consistent offsets. MakerNote and other vendor blobs are kept as
//! opaque bytes; if they contain offsets relative to the TIFF header those
//! offsets are not rewritten and may dangle after a rebuild.

use std::collections::HashSet;

use super::JpegError;

pub const TAG_EXIF_IFD: u16 = 0x8769;
pub const TAG_GPS_IFD: u16 = 0x8825;
pub const TAG_INTEROP_IFD: u16 = 0xA005;
pub const TAG_THUMBNAIL_OFFSET: u16 = 0x0201;
pub const TAG_THUMBNAIL_LENGTH: u16 = 0x0202;
pub const TAG_USER_COMMENT: u16 = 0x9286;

pub const TYPE_LONG: u16 = 4;
pub const TYPE_UNDEFINED: u16 = 7;

const PREFIX_ASCII: &[u8; 8] = b"ASCII\0\0\0";
const PREFIX_UNICODE: &[u8; 8] = b"UNICODE\0";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ByteOrder {
    LittleEndian,
    BigEndian,
}

impl ByteOrder {
    fn u16(self, b: &[u8]) -> u16 {
        let b = [b[0], b[1]];
        match self {
            ByteOrder::LittleEndian => u16::from_le_bytes(b),
            ByteOrder::BigEndian => u16::from_be_bytes(b),
        }
    }

    fn u32(self, b: &[u8]) -> u32 {
        let b = [b[0], b[1], b[2], b[3]];
        match self {
            ByteOrder::LittleEndian => u32::from_le_bytes(b),
            ByteOrder::BigEndian => u32::from_be_bytes(b),
        }
    }

    fn put_u16(self, out: &mut Vec<u8>, v: u16) {
        match self {
            ByteOrder::LittleEndian => out.extend_from_slice(&v.to_le_bytes()),
            ByteOrder::BigEndian => out.extend_from_slice(&v.to_be_bytes()),
        }
    }

    fn u32_bytes(self, v: u32) -> [u8; 4] {
        match self {
            ByteOrder::LittleEndian => v.to_le_bytes(),
            ByteOrder::BigEndian => v.to_be_bytes(),
        }
    }
}

/// Size in bytes of one value of the given TIFF field type.
pub fn type_size(field_type: u16) -> Option<usize> {
    match field_type {
        1 | 2 | 6 | 7 => Some(1),
        3 | 8 => Some(2),
        4 | 9 | 11 | 13 => Some(4),
        5 | 10 | 12 => Some(8),
        _ => None,
    }
}

/// One 12-byte directory entry. `value` holds the raw value bytes in the
/// block's byte order. For field types of unknown size it holds the raw
/// 4-byte value/offset field instead.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IfdEntry {
    pub tag: u16,
    pub field_type: u16,
    pub count: u32,
    pub value: Vec<u8>,
}

impl IfdEntry {
    fn is_inline(&self) -> bool {
        self.value.len() <= 4
    }
}

/// Directory holding the thumbnail image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThumbnailIfd {
    pub entries: Vec<IfdEntry>,
    pub thumbnail: Option<Vec<u8>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IfdKind {
    Primary,
    Exif,
    Gps,
    Interop,
    Thumbnail,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExifBlock {
    pub byte_order: ByteOrder,
    pub ifd0: Vec<IfdEntry>,
    pub exif_ifd: Vec<IfdEntry>,
    pub gps_ifd: Vec<IfdEntry>,
    pub interop_ifd: Vec<IfdEntry>,
    pub ifd1: Option<ThumbnailIfd>,
}

fn malformed(msg: impl Into<String>) -> JpegError {
    JpegError::MalformedExif(msg.into())
}

struct Reader<'a> {
    data: &'a [u8],
    order: ByteOrder,
    visited: HashSet<u32>,
}

struct RawIfd {
    entries: Vec<IfdEntry>,
    next: u32,
}

impl<'a> Reader<'a> {
    fn slice(&self, offset: usize, len: usize) -> Result<&'a [u8], JpegError> {
        offset
            .checked_add(len)
            .filter(|&end| end <= self.data.len())
            .map(|end| &self.data[offset..end])
            .ok_or_else(|| malformed(format!("{} bytes at offset {} out of bounds", len, offset)))
    }

    fn ifd(&mut self, offset: u32) -> Result<RawIfd, JpegError> {
        if !self.visited.insert(offset) {
            return Err(malformed(format!("directory loop at offset {}", offset)));
        }
        let offset = offset as usize;
        let n = self.order.u16(self.slice(offset, 2)?) as usize;
        let table = self.slice(offset + 2, 12 * n + 4)?;
        let mut entries = Vec::with_capacity(n);
        for raw in table[..12 * n].chunks_exact(12) {
            let tag = self.order.u16(&raw[0..2]);
            let field_type = self.order.u16(&raw[2..4]);
            let count = self.order.u32(&raw[4..8]);
            let field = &raw[8..12];
            let value = match type_size(field_type) {
                None => field.to_vec(),
                Some(size) => {
                    let len = size
                        .checked_mul(count as usize)
                        .ok_or_else(|| malformed("value size overflow"))?;
                    if len <= 4 {
                        field[..len].to_vec()
                    } else {
                        self.slice(self.order.u32(field) as usize, len)?.to_vec()
                    }
                }
            };
            entries.push(IfdEntry { tag, field_type, count, value });
        }
        let next = self.order.u32(&table[12 * n..]);
        Ok(RawIfd { entries, next })
    }

    /// Removes a pointer entry from `entries` and returns its target.
    fn take_pointer(&self, entries: &mut Vec<IfdEntry>, tag: u16) -> Result<Option<u32>, JpegError> {
        let Some(pos) = entries.iter().position(|e| e.tag == tag) else {
            return Ok(None);
        };
        let e = entries.remove(pos);
        if e.count != 1 || e.value.len() != 4 {
            return Err(malformed(format!("pointer tag {:#06x} is not a single LONG", tag)));
        }
        Ok(Some(self.order.u32(&e.value)))
    }

    fn sub_ifd(&mut self, parent: &mut Vec<IfdEntry>, tag: u16) -> Result<Vec<IfdEntry>, JpegError> {
        match self.take_pointer(parent, tag)? {
            Some(offset) => Ok(self.ifd(offset)?.entries),
            None => Ok(Vec::new()),
        }
    }
}

impl ExifBlock {
    /// A block with no entries, using Intel byte order.
    pub fn empty() -> ExifBlock {
        ExifBlock {
            byte_order: ByteOrder::LittleEndian,
            ifd0: Vec::new(),
            exif_ifd: Vec::new(),
            gps_ifd: Vec::new(),
            interop_ifd: Vec::new(),
            ifd1: None,
        }
    }

    /// Decodes a TIFF structure (the APP1 payload after `Exif\0\0`).
    pub fn parse(data: &[u8]) -> Result<ExifBlock, JpegError> {
        if data.len() < 8 {
            return Err(malformed("TIFF header truncated"));
        }
        let order = match &data[0..2] {
            b"II" => ByteOrder::LittleEndian,
            b"MM" => ByteOrder::BigEndian,
            _ => return Err(malformed("bad byte-order mark")),
        };
        if order.u16(&data[2..4]) != 42 {
            return Err(malformed("TIFF magic number is not 42"));
        }
        let mut r = Reader { data, order, visited: HashSet::new() };
        let first = order.u32(&data[4..8]);

        let RawIfd { entries: mut ifd0, next } = r.ifd(first)?;
        let mut exif_ifd = r.sub_ifd(&mut ifd0, TAG_EXIF_IFD)?;
        let gps_ifd = r.sub_ifd(&mut ifd0, TAG_GPS_IFD)?;
        let interop_ifd = r.sub_ifd(&mut exif_ifd, TAG_INTEROP_IFD)?;

        let ifd1 = if next != 0 {
            let mut entries = r.ifd(next)?.entries;
            let offset = r.take_pointer(&mut entries, TAG_THUMBNAIL_OFFSET)?;
            let length = r.take_pointer(&mut entries, TAG_THUMBNAIL_LENGTH)?;
            let thumbnail = match (offset, length) {
                (Some(o), Some(l)) => Some(r.slice(o as usize, l as usize)?.to_vec()),
                (None, None) => None,
                _ => return Err(malformed("thumbnail offset without length or vice versa")),
            };
            Some(ThumbnailIfd { entries, thumbnail })
        } else {
            None
        };

        Ok(ExifBlock { byte_order: order, ifd0, exif_ifd, gps_ifd, interop_ifd, ifd1 })
    }

    /// All stored entries, tagged with the directory they live in.
    /// Layout entries (pointers, thumbnail offset/length) are not included.
    pub fn entries(&self) -> impl Iterator<Item = (IfdKind, &IfdEntry)> {
        let thumb: &[IfdEntry] = self.ifd1.as_ref().map(|t| t.entries.as_slice()).unwrap_or(&[]);
        self.ifd0
            .iter()
            .map(|e| (IfdKind::Primary, e))
            .chain(self.exif_ifd.iter().map(|e| (IfdKind::Exif, e)))
            .chain(self.gps_ifd.iter().map(|e| (IfdKind::Gps, e)))
            .chain(self.interop_ifd.iter().map(|e| (IfdKind::Interop, e)))
            .chain(thumb.iter().map(|e| (IfdKind::Thumbnail, e)))
    }

    /// Decoded UserComment, or `None` when absent or in a character code
    /// other than ASCII or UNICODE.
    pub fn user_comment(&self) -> Option<String> {
        let entry = self.exif_ifd.iter().find(|e| e.tag == TAG_USER_COMMENT)?;
        decode_user_comment(&entry.value, self.byte_order)
    }

    /// Replaces (or adds) the UserComment with ASCII character code.
    pub fn set_user_comment(&mut self, comment: &str) -> Result<(), JpegError> {
        if !comment.is_ascii() {
            return Err(JpegError::NonAsciiComment);
        }
        let mut value = PREFIX_ASCII.to_vec();
        value.extend_from_slice(comment.as_bytes());
        let count = u32::try_from(value.len()).map_err(|_| JpegError::OversizeExif(value.len()))?;
        self.exif_ifd.retain(|e| e.tag != TAG_USER_COMMENT);
        self.exif_ifd.push(IfdEntry {
            tag: TAG_USER_COMMENT,
            field_type: TYPE_UNDEFINED,
            count,
            value,
        });
        Ok(())
    }

    /// Encodes the block as a TIFF structure with freshly computed offsets.
    pub fn serialize(&self) -> Vec<u8> {
        let order = self.byte_order;
        let pointer = |tag| IfdEntry { tag, field_type: TYPE_LONG, count: 1, value: vec![0; 4] };

        let mut ifd0 = self.ifd0.clone();
        let mut exif = self.exif_ifd.clone();
        let gps = self.gps_ifd.clone();
        let interop = self.interop_ifd.clone();
        let mut thumb = self
            .ifd1
            .as_ref()
            .filter(|t| !t.entries.is_empty() || t.thumbnail.is_some())
            .map(|t| t.entries.clone());
        let thumb_bytes = self.ifd1.as_ref().and_then(|t| t.thumbnail.as_deref());

        if !interop.is_empty() {
            exif.push(pointer(TAG_INTEROP_IFD));
        }
        if !exif.is_empty() {
            ifd0.push(pointer(TAG_EXIF_IFD));
        }
        if !gps.is_empty() {
            ifd0.push(pointer(TAG_GPS_IFD));
        }
        if let (Some(entries), Some(bytes)) = (thumb.as_mut(), thumb_bytes) {
            entries.push(pointer(TAG_THUMBNAIL_OFFSET));
            let mut len = pointer(TAG_THUMBNAIL_LENGTH);
            len.value = order.u32_bytes(bytes.len() as u32).to_vec();
            entries.push(len);
        }

        // Layout: header, IFD0, Exif, GPS, Interop, IFD1, thumbnail.
        let mut offset = 8u32;
        // IFD0 is always present, even when empty.
        let ifd0_at = offset;
        offset += ifd_size(&ifd0);
        let mut place = |entries: &[IfdEntry]| {
            if entries.is_empty() {
                return 0;
            }
            let at = offset;
            offset += ifd_size(entries);
            at
        };
        let exif_at = place(&exif);
        let gps_at = place(&gps);
        let interop_at = place(&interop);
        let ifd1_at = thumb.as_deref().map(|t| place(t)).unwrap_or(0);
        let thumb_at = offset;

        let set = |entries: &mut Vec<IfdEntry>, tag: u16, v: u32| {
            if let Some(e) = entries.iter_mut().find(|e| e.tag == tag) {
                e.value = order.u32_bytes(v).to_vec();
            }
        };
        set(&mut ifd0, TAG_EXIF_IFD, exif_at);
        set(&mut ifd0, TAG_GPS_IFD, gps_at);
        set(&mut exif, TAG_INTEROP_IFD, interop_at);
        if let Some(t) = thumb.as_mut() {
            set(t, TAG_THUMBNAIL_OFFSET, thumb_at);
        }

        let mut out = Vec::with_capacity(thumb_at as usize + thumb_bytes.map_or(0, |t| t.len()));
        out.extend_from_slice(match order {
            ByteOrder::LittleEndian => b"II",
            ByteOrder::BigEndian => b"MM",
        });
        order.put_u16(&mut out, 42);
        out.extend_from_slice(&order.u32_bytes(ifd0_at));

        write_ifd(&mut out, order, &mut ifd0, ifd1_at);
        for mut entries in [exif, gps, interop] {
            if !entries.is_empty() {
                write_ifd(&mut out, order, &mut entries, 0);
            }
        }
        if let Some(t) = thumb.as_mut() {
            write_ifd(&mut out, order, t, 0);
        }
        debug_assert_eq!(out.len(), thumb_at as usize);
        if let Some(bytes) = thumb_bytes {
            out.extend_from_slice(bytes);
        }
        out
    }
}

fn padded(len: usize) -> u32 {
    (len + (len & 1)) as u32
}

fn ifd_size(entries: &[IfdEntry]) -> u32 {
    let data: u32 = entries.iter().filter(|e| !e.is_inline()).map(|e| padded(e.value.len())).sum();
    2 + 12 * entries.len() as u32 + 4 + data
}

/// Appends one directory (table followed by its out-of-line values) at the
/// current end of `out`. Entries are sorted by tag.
fn write_ifd(out: &mut Vec<u8>, order: ByteOrder, entries: &mut [IfdEntry], next: u32) {
    entries.sort_by_key(|e| e.tag);
    let start = out.len() as u32;
    let mut data_at = start + 2 + 12 * entries.len() as u32 + 4;
    order.put_u16(out, entries.len() as u16);
    for e in entries.iter() {
        order.put_u16(out, e.tag);
        order.put_u16(out, e.field_type);
        out.extend_from_slice(&order.u32_bytes(e.count));
        if e.is_inline() {
            let mut field = [0u8; 4];
            field[..e.value.len()].copy_from_slice(&e.value);
            out.extend_from_slice(&field);
        } else {
            out.extend_from_slice(&order.u32_bytes(data_at));
            data_at += padded(e.value.len());
        }
    }
    out.extend_from_slice(&order.u32_bytes(next));
    for e in entries.iter().filter(|e| !e.is_inline()) {
        out.extend_from_slice(&e.value);
        if e.value.len() % 2 == 1 {
            out.push(0);
        }
    }
}

fn decode_user_comment(raw: &[u8], order: ByteOrder) -> Option<String> {
    if raw.len() < 8 {
        return None;
    }
    let (prefix, body) = raw.split_at(8);
    if prefix == PREFIX_ASCII {
        let end = body.iter().rposition(|&b| b != 0).map_or(0, |p| p + 1);
        Some(String::from_utf8_lossy(&body[..end]).into_owned())
    } else if prefix == PREFIX_UNICODE {
        let mut units: Vec<u16> = body.chunks_exact(2).map(|c| order.u16(c)).collect();
        match units.first() {
            Some(0xFEFF) => {
                units.remove(0);
            }
            Some(0xFFFE) => {
                units.remove(0);
                units.iter_mut().for_each(|u| *u = u.swap_bytes());
            }
            _ => {}
        }
        while units.last() == Some(&0) {
            units.pop();
        }
        Some(String::from_utf16_lossy(&units))
    } else {
        None
    }
}
