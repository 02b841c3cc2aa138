use std::fmt;

/// (group, element) attribute tag. Orders by group, then element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tag(pub u16, pub u16);

impl Tag {
    pub fn group(self) -> u16 {
        self.0
    }

    pub fn element(self) -> u16 {
        self.1
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:04X},{:04X})", self.0, self.1)
    }
}

/// Value representations used by this writer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Vr {
    CS,
    DA,
    IS,
    LO,
    OB,
    OF,
    OW,
    PN,
    SH,
    SQ,
    TM,
    UI,
    UL,
    UN,
    US,
    UT,
}

impl Vr {
    pub fn code(self) -> [u8; 2] {
        let s = match self {
            Vr::CS => b"CS",
            Vr::DA => b"DA",
            Vr::IS => b"IS",
            Vr::LO => b"LO",
            Vr::OB => b"OB",
            Vr::OF => b"OF",
            Vr::OW => b"OW",
            Vr::PN => b"PN",
            Vr::SH => b"SH",
            Vr::SQ => b"SQ",
            Vr::TM => b"TM",
            Vr::UI => b"UI",
            Vr::UL => b"UL",
            Vr::UN => b"UN",
            Vr::US => b"US",
            Vr::UT => b"UT",
        };
        *s
    }

    /// VRs written with a reserved field and a 32-bit length in explicit
    /// VR encoding.
    pub fn has_long_length(self) -> bool {
        matches!(self, Vr::OB | Vr::OW | Vr::OF | Vr::SQ | Vr::UT | Vr::UN)
    }

    /// Byte used to pad odd-length values.
    pub fn pad_byte(self) -> u8 {
        match self {
            Vr::UI | Vr::OB | Vr::OW | Vr::OF | Vr::UN => 0,
            _ => b' ',
        }
    }
}

impl fmt::Display for Vr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(std::str::from_utf8(&self.code()).unwrap_or("??"))
    }
}

/// A data element with its value already padded to even length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DicomElement {
    pub tag: Tag,
    pub vr: Vr,
    pub value: Vec<u8>,
}

impl DicomElement {
    pub fn bytes(tag: Tag, vr: Vr, mut value: Vec<u8>) -> DicomElement {
        if value.len() % 2 == 1 {
            value.push(vr.pad_byte());
        }
        DicomElement { tag, vr, value }
    }

    pub fn text(tag: Tag, vr: Vr, s: &str) -> DicomElement {
        DicomElement::bytes(tag, vr, s.as_bytes().to_vec())
    }

    /// Zero-length element (a known-but-empty type 2 attribute).
    pub fn empty(tag: Tag, vr: Vr) -> DicomElement {
        DicomElement { tag, vr, value: Vec::new() }
    }

    pub fn us(tag: Tag, v: u16) -> DicomElement {
        DicomElement { tag, vr: Vr::US, value: v.to_le_bytes().to_vec() }
    }

    pub fn ul(tag: Tag, v: u32) -> DicomElement {
        DicomElement { tag, vr: Vr::UL, value: v.to_le_bytes().to_vec() }
    }

    /// Value as text with trailing padding removed.
    pub fn as_str(&self) -> Option<&str> {
        let s = std::str::from_utf8(&self.value).ok()?;
        Some(s.trim_end_matches(['\0', ' ']))
    }

    /// Explicit VR little endian encoding.
    pub fn write_to(&self, out: &mut Vec<u8>) {
        write_header(out, self.tag, self.vr, self.value.len() as u32);
        out.extend_from_slice(&self.value);
    }
}

pub(crate) fn write_header(out: &mut Vec<u8>, tag: Tag, vr: Vr, len: u32) {
    out.extend_from_slice(&tag.0.to_le_bytes());
    out.extend_from_slice(&tag.1.to_le_bytes());
    out.extend_from_slice(&vr.code());
    if vr.has_long_length() {
        out.extend_from_slice(&[0, 0]);
        out.extend_from_slice(&len.to_le_bytes());
    } else {
        out.extend_from_slice(&(len as u16).to_le_bytes());
    }
}
