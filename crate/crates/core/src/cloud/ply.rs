//! PLY reading and writing for vertex-only point clouds.
//!
//! Supported: `ascii 1.0` and `binary_little_endian 1.0`, vertex properties
//! `x`, `y`, `z` as float/double and optional `red`, `green`, `blue` as uchar.
//! Other scalar vertex properties are skipped. Elements other than `vertex`
//! are skipped when they precede it and ignored when they follow it.

use std::io::Write;
use std::path::Path;

use super::{Point3, PointCloud, Rgb};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScalarType {
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

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn read_le(self, bytes: &[u8]) -> f64 {
        match self {
            Self::I8 => f64::from(bytes[0] as i8),
            Self::U8 => f64::from(bytes[0]),
            Self::I16 => f64::from(i16::from_le_bytes([bytes[0], bytes[1]])),
            Self::U16 => f64::from(u16::from_le_bytes([bytes[0], bytes[1]])),
            Self::I32 => f64::from(i32::from_le_bytes(bytes[..4].try_into().unwrap())),
            Self::U32 => f64::from(u32::from_le_bytes(bytes[..4].try_into().unwrap())),
            Self::F32 => f64::from(f32::from_le_bytes(bytes[..4].try_into().unwrap())),
            Self::F64 => f64::from_le_bytes(bytes[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar {
        name: String,
        ty: ScalarType,
    },
    List {
        name: String,
        count: ScalarType,
        item: ScalarType,
    },
}

impl Property {
    fn name(&self) -> &str {
        match self {
            Property::Scalar { name, .. } | Property::List { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug)]
struct Header {
    format: PlyFormat,
    elements: Vec<Element>,
}

/// Column positions of the properties the cloud needs inside a vertex row.
struct VertexLayout {
    xyz: [usize; 3],
    rgb: Option<[usize; 3]>,
}

fn parse_header(text: &str) -> Result<Header> {
    let mut lines = text.lines().map(str::trim_end);
    if lines.next() != Some("ply") {
        return Err(Error::PlyHeader("missing `ply` magic line".into()));
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    for line in lines {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [] => {}
            ["comment", ..] | ["obj_info", ..] => {}
            ["format", kind, version] => {
                if *version != "1.0" {
                    return Err(Error::PlyHeader(format!("unsupported version {version}")));
                }
                format = Some(match *kind {
                    "ascii" => PlyFormat::Ascii,
                    "binary_little_endian" => PlyFormat::BinaryLittleEndian,
                    other => return Err(Error::PlyHeader(format!("unsupported format `{other}`"))),
                });
            }
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| Error::PlyHeader(format!("bad element count `{count}`")))?;
                elements.push(Element {
                    name: (*name).to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            ["property", "list", count, item, name] => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| Error::PlyHeader("property before any element".into()))?;
                let parse = |t: &str| {
                    ScalarType::parse(t).ok_or_else(|| Error::PlyProperty {
                        property: (*name).to_string(),
                        reason: format!("unknown type `{t}`"),
                    })
                };
                element.properties.push(Property::List {
                    name: (*name).to_string(),
                    count: parse(count)?,
                    item: parse(item)?,
                });
            }
            ["property", ty, name] => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| Error::PlyHeader("property before any element".into()))?;
                let ty = ScalarType::parse(ty).ok_or_else(|| Error::PlyProperty {
                    property: (*name).to_string(),
                    reason: format!("unknown type `{ty}`"),
                })?;
                element.properties.push(Property::Scalar {
                    name: (*name).to_string(),
                    ty,
                });
            }
            ["end_header"] => {
                let format =
                    format.ok_or_else(|| Error::PlyHeader("missing format line".into()))?;
                return Ok(Header { format, elements });
            }
            _ => return Err(Error::PlyHeader(format!("unrecognized line `{line}`"))),
        }
    }
    Err(Error::PlyHeader("missing end_header".into()))
}

fn vertex_layout(element: &Element) -> Result<VertexLayout> {
    let find = |wanted: &str, allowed: &[ScalarType], expect: &str| -> Result<Option<usize>> {
        match element
            .properties
            .iter()
            .enumerate()
            .find(|(_, p)| p.name() == wanted)
        {
            None => Ok(None),
            Some((_, Property::List { .. })) => Err(Error::PlyProperty {
                property: wanted.to_string(),
                reason: "list properties are not supported here".into(),
            }),
            Some((i, Property::Scalar { ty, .. })) if allowed.contains(ty) => Ok(Some(i)),
            Some((_, Property::Scalar { ty, .. })) => Err(Error::PlyProperty {
                property: wanted.to_string(),
                reason: format!("type {ty:?} not supported, expected {expect}"),
            }),
        }
    };
    let real = [ScalarType::F32, ScalarType::F64];
    let mut xyz = [0; 3];
    for (slot, name) in xyz.iter_mut().zip(["x", "y", "z"]) {
        *slot = find(name, &real, "float or double")?.ok_or_else(|| Error::PlyProperty {
            property: name.to_string(),
            reason: "missing from vertex element".into(),
        })?;
    }
    let colors = ["red", "green", "blue"].map(|name| find(name, &[ScalarType::U8], "uchar"));
    let [r, g, b] = colors;
    let rgb = match (r?, g?, b?) {
        (Some(r), Some(g), Some(b)) => Some([r, g, b]),
        (None, None, None) => None,
        _ => {
            return Err(Error::PlyProperty {
                property: "red/green/blue".into(),
                reason: "color properties must appear together".into(),
            })
        }
    };
    if let Some(p) = element
        .properties
        .iter()
        .find(|p| matches!(p, Property::List { .. }))
    {
        return Err(Error::PlyProperty {
            property: p.name().to_string(),
            reason: "list properties are not supported in the vertex element".into(),
        });
    }
    Ok(VertexLayout { xyz, rgb })
}

fn split_header(bytes: &[u8]) -> Result<(&str, &[u8])> {
    const MARKER: &[u8] = b"end_header";
    let pos = bytes
        .windows(MARKER.len())
        .position(|w| w == MARKER)
        .ok_or_else(|| Error::PlyHeader("missing end_header".into()))?;
    let mut end = pos + MARKER.len();
    if bytes.get(end) == Some(&b'\r') {
        end += 1;
    }
    if bytes.get(end) == Some(&b'\n') {
        end += 1;
    }
    let text = std::str::from_utf8(&bytes[..end])
        .map_err(|_| Error::PlyHeader("header is not valid text".into()))?;
    Ok((text, &bytes[end..]))
}

fn assemble(positions: Vec<Point3>, colors: Option<Vec<Rgb>>) -> Result<PointCloud> {
    if positions.is_empty() {
        return Err(Error::EmptyCloud);
    }
    PointCloud::new(positions, colors)
}

/// Parses a PLY file from memory.
pub fn read_ply(bytes: &[u8]) -> Result<PointCloud> {
    let (header_text, body) = split_header(bytes)?;
    let header = parse_header(header_text)?;
    let vertex_at = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| Error::PlyHeader("no vertex element".into()))?;
    let layout = vertex_layout(&header.elements[vertex_at])?;
    match header.format {
        PlyFormat::Ascii => read_ascii(&header, vertex_at, &layout, body),
        PlyFormat::BinaryLittleEndian => read_binary(&header, vertex_at, &layout, body),
    }
}

fn read_ascii(
    header: &Header,
    vertex_at: usize,
    layout: &VertexLayout,
    body: &[u8],
) -> Result<PointCloud> {
    let text = std::str::from_utf8(body)
        .map_err(|_| Error::PlyBody("ASCII body is not valid text".into()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());

    for element in &header.elements[..vertex_at] {
        for row in 0..element.count {
            lines.next().ok_or_else(|| {
                Error::PlyCount(format!(
                    "element `{}` declares {} rows, found {row}",
                    element.name, element.count
                ))
            })?;
        }
    }

    let vertex = &header.elements[vertex_at];
    let width = vertex.properties.len();
    let mut positions = Vec::with_capacity(vertex.count);
    let mut colors = layout.rgb.map(|_| Vec::with_capacity(vertex.count));
    for row in 0..vertex.count {
        let line = lines.next().ok_or_else(|| {
            Error::PlyCount(format!(
                "vertex element declares {} rows, found {row}",
                vertex.count
            ))
        })?;
        let values = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::PlyBody(format!("vertex row {row}: bad number `{t}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != width {
            return Err(Error::PlyCount(format!(
                "vertex row {row} has {} values, header declares {width}",
                values.len()
            )));
        }
        positions.push(layout.xyz.map(|c| values[c]));
        if let (Some(rgb), Some(colors)) = (layout.rgb, colors.as_mut()) {
            let color = rgb.map(|c| values[c]);
            if color
                .iter()
                .any(|v| v.fract() != 0.0 || !(0.0..=255.0).contains(v))
            {
                return Err(Error::PlyBody(format!(
                    "vertex row {row}: color {color:?} is not uchar"
                )));
            }
            colors.push(color);
        }
    }
    if vertex_at + 1 == header.elements.len() && lines.next().is_some() {
        return Err(Error::PlyCount(format!(
            "more vertex rows than the declared {}",
            vertex.count
        )));
    }
    assemble(positions, colors)
}

fn read_binary(
    header: &Header,
    vertex_at: usize,
    layout: &VertexLayout,
    body: &[u8],
) -> Result<PointCloud> {
    let truncated = |what: &str| Error::PlyCount(format!("body truncated while reading {what}"));
    let mut offset = 0usize;

    for element in &header.elements[..vertex_at] {
        for _ in 0..element.count {
            for property in &element.properties {
                match property {
                    Property::Scalar { ty, .. } => offset += ty.size(),
                    Property::List { count, item, .. } => {
                        let bytes = body
                            .get(offset..offset + count.size())
                            .ok_or_else(|| truncated(&element.name))?;
                        let n = count.read_le(bytes);
                        offset += count.size() + n as usize * item.size();
                    }
                }
            }
            if offset > body.len() {
                return Err(truncated(&element.name));
            }
        }
    }

    let vertex = &header.elements[vertex_at];
    let mut columns = Vec::with_capacity(vertex.properties.len());
    let mut stride = 0;
    for property in &vertex.properties {
        if let Property::Scalar { ty, .. } = property {
            columns.push((stride, *ty));
            stride += ty.size();
        }
    }
    let needed = stride * vertex.count;
    let data = body.get(offset..offset + needed).ok_or_else(|| {
        Error::PlyCount(format!(
            "vertex element declares {} rows of {stride} bytes, body holds {}",
            vertex.count,
            body.len().saturating_sub(offset) / stride.max(1)
        ))
    })?;
    let value = |row: &[u8], column: usize| {
        let (at, ty) = columns[column];
        ty.read_le(&row[at..])
    };
    let mut positions = Vec::with_capacity(vertex.count);
    let mut colors = layout.rgb.map(|_| Vec::with_capacity(vertex.count));
    for row in data.chunks_exact(stride) {
        positions.push(layout.xyz.map(|c| value(row, c)));
        if let (Some(rgb), Some(colors)) = (layout.rgb, colors.as_mut()) {
            colors.push(rgb.map(|c| value(row, c)));
        }
    }
    if vertex_at + 1 == header.elements.len() && offset + needed != body.len() {
        return Err(Error::PlyCount(format!(
            "{} trailing bytes after the declared {} vertices",
            body.len() - offset - needed,
            vertex.count
        )));
    }
    assemble(positions, colors)
}

pub fn load_ply(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_ply(&bytes)
}

fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Serializes a cloud. Positions are written as doubles; colors are rounded
/// to the nearest uchar.
pub fn write_ply(
    cloud: &PointCloud,
    format: PlyFormat,
    out: &mut impl Write,
) -> std::io::Result<()> {
    let format_name = match format {
        PlyFormat::Ascii => "ascii",
        PlyFormat::BinaryLittleEndian => "binary_little_endian",
    };
    writeln!(out, "ply")?;
    writeln!(out, "format {format_name} 1.0")?;
    writeln!(out, "element vertex {}", cloud.len())?;
    for axis in ["x", "y", "z"] {
        writeln!(out, "property double {axis}")?;
    }
    if cloud.has_colors() {
        for channel in ["red", "green", "blue"] {
            writeln!(out, "property uchar {channel}")?;
        }
    }
    writeln!(out, "end_header")?;

    let colors = cloud.colors();
    for (i, p) in cloud.positions().iter().enumerate() {
        let color = colors.map(|c| c[i].map(quantize));
        match format {
            PlyFormat::Ascii => {
                write!(out, "{} {} {}", p[0], p[1], p[2])?;
                if let Some([r, g, b]) = color {
                    write!(out, " {r} {g} {b}")?;
                }
                writeln!(out)?;
            }
            PlyFormat::BinaryLittleEndian => {
                for c in p {
                    out.write_all(&c.to_le_bytes())?;
                }
                if let Some(rgb) = color {
                    out.write_all(&rgb)?;
                }
            }
        }
    }
    Ok(())
}

pub fn save_ply(cloud: &PointCloud, path: impl AsRef<Path>, format: PlyFormat) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    write_ply(cloud, format, &mut out)
        .and_then(|()| out.flush())
        .map_err(|e| Error::io(path, e))
}
