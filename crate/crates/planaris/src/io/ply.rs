//! PLY reader and writer (ascii and binary little endian).

use std::io::{BufRead, Read, Write};

use super::FormatError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Self::I8 => "char",
            Self::U8 => "uchar",
            Self::I16 => "short",
            Self::U16 => "ushort",
            Self::I32 => "int",
            Self::U32 => "uint",
            Self::F32 => "float",
            Self::F64 => "double",
        }
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn is_integer(self) -> bool {
        !matches!(self, Self::F32 | Self::F64)
    }

    fn decode(self, b: &[u8]) -> f64 {
        match self {
            Self::I8 => b[0] as i8 as f64,
            Self::U8 => b[0] as f64,
            Self::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Self::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Self::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F64 => f64::from_le_bytes(b[..8].try_into().expect("8 bytes")),
        }
    }

    fn encode(self, v: f64, out: &mut Vec<u8>) {
        match self {
            Self::I8 => out.push(v as i8 as u8),
            Self::U8 => out.push(v as u8),
            Self::I16 => out.extend_from_slice(&(v as i16).to_le_bytes()),
            Self::U16 => out.extend_from_slice(&(v as u16).to_le_bytes()),
            Self::I32 => out.extend_from_slice(&(v as i32).to_le_bytes()),
            Self::U32 => out.extend_from_slice(&(v as u32).to_le_bytes()),
            Self::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
            Self::F64 => out.extend_from_slice(&v.to_le_bytes()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Property {
    Scalar { name: String, ty: ScalarType },
    List { name: String, count: ScalarType, item: ScalarType },
}

impl Property {
    pub fn name(&self) -> &str {
        match self {
            Property::Scalar { name, .. } | Property::List { name, .. } => name,
        }
    }
}

/// Element data, one column per property.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub name: String,
    pub count: usize,
    pub properties: Vec<Property>,
    /// Scalar columns, indexed like `properties` (empty for list properties).
    pub scalars: Vec<Vec<f64>>,
    /// List columns, indexed like `properties` (empty for scalar properties).
    pub lists: Vec<Vec<Vec<u32>>>,
}

impl Element {
    pub fn new(name: &str, count: usize) -> Self {
        Self {
            name: name.into(),
            count,
            properties: Vec::new(),
            scalars: Vec::new(),
            lists: Vec::new(),
        }
    }

    pub fn with_scalar(mut self, name: &str, ty: ScalarType, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.count);
        self.properties.push(Property::Scalar { name: name.into(), ty });
        self.scalars.push(values);
        self.lists.push(Vec::new());
        self
    }

    pub fn with_list(mut self, name: &str, count: ScalarType, item: ScalarType, values: Vec<Vec<u32>>) -> Self {
        debug_assert_eq!(values.len(), self.count);
        self.properties.push(Property::List { name: name.into(), count, item });
        self.scalars.push(Vec::new());
        self.lists.push(values);
        self
    }

    pub fn scalar(&self, name: &str) -> Option<&[f64]> {
        let k = self
            .properties
            .iter()
            .position(|p| matches!(p, Property::Scalar { name: n, .. } if n == name))?;
        Some(&self.scalars[k])
    }

    pub fn list(&self, names: &[&str]) -> Option<&[Vec<u32>]> {
        let k = self
            .properties
            .iter()
            .position(|p| matches!(p, Property::List { name, .. } if names.contains(&name.as_str())))?;
        Some(&self.lists[k])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlyData {
    pub format: PlyFormat,
    pub elements: Vec<Element>,
}

impl PlyData {
    pub fn element(&self, name: &str) -> Option<&Element> {
        self.elements.iter().find(|e| e.name == name)
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Parse { line, msg: msg.into() }
}

/// Reads a whole PLY stream.
pub fn read_ply(mut r: impl BufRead) -> Result<PlyData, FormatError> {
    let mut line_no = 0;
    let mut line = String::new();
    let next_line = |r: &mut dyn BufRead, line: &mut String, line_no: &mut usize| -> Result<bool, FormatError> {
        line.clear();
        let n = r.read_line(line)?;
        *line_no += 1;
        Ok(n > 0)
    };

    if !next_line(&mut r, &mut line, &mut line_no)? || line.trim_end() != "ply" {
        return Err(parse_err(1, "missing 'ply' magic"));
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        if !next_line(&mut r, &mut line, &mut line_no)? {
            return Err(parse_err(line_no, "header ended without 'end_header'"));
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            [] => {}
            ["end_header"] => break,
            ["comment", ..] | ["obj_info", ..] => {}
            ["format", f, "1.0"] => {
                format = Some(match *f {
                    "ascii" => PlyFormat::Ascii,
                    "binary_little_endian" => PlyFormat::BinaryLittleEndian,
                    other => return Err(parse_err(line_no, format!("unsupported format '{other}'"))),
                })
            }
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("bad element count '{count}'")))?;
                elements.push(Element::new(name, count));
            }
            ["property", "list", c, i, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(line_no, "property before any element"))?;
                let (Some(count), Some(item)) = (ScalarType::parse(c), ScalarType::parse(i)) else {
                    return Err(parse_err(line_no, format!("unknown list types '{c} {i}'")));
                };
                if !count.is_integer() {
                    return Err(parse_err(line_no, "list count type must be an integer"));
                }
                el.properties.push(Property::List { name: (*name).into(), count, item });
                el.scalars.push(Vec::new());
                el.lists.push(Vec::with_capacity(el.count.min(1 << 24)));
            }
            ["property", ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(line_no, "property before any element"))?;
                let ty = ScalarType::parse(ty).ok_or_else(|| parse_err(line_no, format!("unknown type '{ty}'")))?;
                el.properties.push(Property::Scalar { name: (*name).into(), ty });
                el.scalars.push(Vec::with_capacity(el.count.min(1 << 24)));
                el.lists.push(Vec::new());
            }
            _ => return Err(parse_err(line_no, format!("malformed header line '{}'", line.trim_end()))),
        }
    }
    let format = format.ok_or_else(|| parse_err(line_no, "header has no format line"))?;
    match format {
        PlyFormat::Ascii => read_ascii_body(r, &mut elements, line_no)?,
        PlyFormat::BinaryLittleEndian => read_binary_body(r, &mut elements)?,
    }
    Ok(PlyData { format, elements })
}

fn read_ascii_body(r: impl BufRead, elements: &mut [Element], header_lines: usize) -> Result<(), FormatError> {
    let mut lines = r.lines().enumerate().map(|(i, l)| (i + header_lines + 1, l));
    for el in elements.iter_mut() {
        for row in 0..el.count {
            let (no, text) = loop {
                match lines.next() {
                    None => {
                        return Err(parse_err(
                            header_lines,
                            format!("truncated: element '{}' has {} of {} rows", el.name, row, el.count),
                        ))
                    }
                    Some((no, l)) => {
                        let l = l?;
                        if !l.trim().is_empty() {
                            break (no, l);
                        }
                    }
                }
            };
            let mut toks = text.split_whitespace();
            let mut take = |what: &str| -> Result<f64, FormatError> {
                let t = toks
                    .next()
                    .ok_or_else(|| parse_err(no, format!("missing value for '{what}'")))?;
                t.parse::<f64>()
                    .map_err(|_| parse_err(no, format!("bad number '{t}' for '{what}'")))
            };
            for k in 0..el.properties.len() {
                match &el.properties[k] {
                    Property::Scalar { name, .. } => {
                        let v = take(name)?;
                        el.scalars[k].push(v);
                    }
                    Property::List { name, .. } => {
                        let n = take(name)?;
                        if !(n >= 0.0 && n.fract() == 0.0) {
                            return Err(parse_err(no, format!("bad list length {n}")));
                        }
                        let mut items = Vec::with_capacity(n as usize);
                        for _ in 0..n as usize {
                            let v = take(name)?;
                            if !(v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64) {
                                return Err(parse_err(no, format!("bad list item {v}")));
                            }
                            items.push(v as u32);
                        }
                        el.lists[k].push(items);
                    }
                }
            }
        }
    }
    Ok(())
}

fn read_binary_body(mut r: impl Read, elements: &mut [Element]) -> Result<(), FormatError> {
    let mut buf = [0u8; 8];
    for el in elements.iter_mut() {
        for row in 0..el.count {
            for k in 0..el.properties.len() {
                let mut read = |ty: ScalarType, buf: &mut [u8; 8]| -> Result<f64, FormatError> {
                    r.read_exact(&mut buf[..ty.size()]).map_err(|e| {
                        if e.kind() == std::io::ErrorKind::UnexpectedEof {
                            FormatError::Truncated(format!("element '{}' row {row}", el.name))
                        } else {
                            e.into()
                        }
                    })?;
                    Ok(ty.decode(&buf[..]))
                };
                match el.properties[k] {
                    Property::Scalar { ty, .. } => {
                        let v = read(ty, &mut buf)?;
                        el.scalars[k].push(v);
                    }
                    Property::List { count, item, .. } => {
                        let n = read(count, &mut buf)?;
                        if n < 0.0 {
                            return Err(FormatError::Invalid(format!("negative list length in '{}'", el.name)));
                        }
                        let mut items = Vec::with_capacity(n as usize);
                        for _ in 0..n as usize {
                            let v = read(item, &mut buf)?;
                            if v < 0.0 {
                                return Err(FormatError::Invalid(format!("negative list item in '{}'", el.name)));
                            }
                            items.push(v as u32);
                        }
                        el.lists[k].push(items);
                    }
                }
            }
        }
    }
    Ok(())
}

/// Writes `data`. Ascii floats use the shortest representation that reads
/// back to the same value.
pub fn write_ply(mut w: impl Write, data: &PlyData) -> Result<(), FormatError> {
    let fmt = match data.format {
        PlyFormat::Ascii => "ascii",
        PlyFormat::BinaryLittleEndian => "binary_little_endian",
    };
    let mut header = format!("ply\nformat {fmt} 1.0\n");
    for el in &data.elements {
        header.push_str(&format!("element {} {}\n", el.name, el.count));
        for p in &el.properties {
            match p {
                Property::Scalar { name, ty } => header.push_str(&format!("property {} {name}\n", ty.name())),
                Property::List { name, count, item } => {
                    header.push_str(&format!("property list {} {} {name}\n", count.name(), item.name()))
                }
            }
        }
    }
    header.push_str("end_header\n");
    w.write_all(header.as_bytes())?;
    let mut out: Vec<u8> = Vec::with_capacity(1 << 16);
    for el in &data.elements {
        for row in 0..el.count {
            for (k, p) in el.properties.iter().enumerate() {
                match (p, data.format) {
                    (Property::Scalar { ty, .. }, PlyFormat::BinaryLittleEndian) => ty.encode(el.scalars[k][row], &mut out),
                    (Property::List { count, item, .. }, PlyFormat::BinaryLittleEndian) => {
                        let items = &el.lists[k][row];
                        count.encode(items.len() as f64, &mut out);
                        for &v in items {
                            item.encode(v as f64, &mut out);
                        }
                    }
                    (Property::Scalar { ty, .. }, PlyFormat::Ascii) => {
                        if k > 0 {
                            out.push(b' ');
                        }
                        write_ascii_value(&mut out, *ty, el.scalars[k][row]);
                    }
                    (Property::List { .. }, PlyFormat::Ascii) => {
                        if k > 0 {
                            out.push(b' ');
                        }
                        let items = &el.lists[k][row];
                        write!(out, "{}", items.len())?;
                        for v in items {
                            write!(out, " {v}")?;
                        }
                    }
                }
            }
            if data.format == PlyFormat::Ascii {
                out.push(b'\n');
            }
            if out.len() >= 1 << 16 {
                w.write_all(&out)?;
                out.clear();
            }
        }
    }
    w.write_all(&out)?;
    w.flush()?;
    Ok(())
}

fn write_ascii_value(out: &mut Vec<u8>, ty: ScalarType, v: f64) {
    use std::io::Write as _;
    let _ = match ty {
        ScalarType::F32 => write!(out, "{}", v as f32),
        ScalarType::F64 => write!(out, "{v}"),
        _ => write!(out, "{}", v as i64),
    };
}
