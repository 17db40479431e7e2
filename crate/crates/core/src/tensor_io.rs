//! Checkpoint container reader and writer.
//!
//! Layout: an unsigned 64-bit little-endian header length `H`, then `H` bytes
//! of UTF-8 JSON mapping tensor name to
//! `{"data_offsets": [begin, end], "dtype": "F32"|"F64", "shape": [m, n]}`,
//! then the little-endian row-major payload. Offsets are relative to the
//! first payload byte and the regions tile the payload exactly.
//!
//! Everything here reads sequentially through buffered readers; nothing is
//! memory mapped. [`ContainerReader`] streams row blocks of one tensor at a
//! time for callers that cannot afford to materialize a whole checkpoint.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::de::{Deserializer, MapAccess, Visitor};
use serde::Deserialize;
use serde_json::Value;

/// Upper bound on the JSON header we are willing to allocate.
const MAX_HEADER_BYTES: u64 = 256 * 1024 * 1024;

/// Scalars decoded per read call when streaming a payload.
const DECODE_CHUNK: usize = 64 * 1024;

const METADATA_KEY: &str = "__metadata__";

#[derive(Debug, thiserror::Error)]
pub enum TensorIoError {
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("tensor `{name}` has unsupported dtype `{dtype}`")]
    UnsupportedDtype { name: String, dtype: String },
    #[error("tensor `{name}` holds a non-finite value at flat index {index}")]
    NonFiniteValue { name: String, index: usize },
    #[error("tensor name `{0}` declared more than once")]
    DuplicateName(String),
    #[error("invalid tensor: {0}")]
    InvalidTensor(String),
    #[error("tensor `{0}` not present in checkpoint")]
    UnknownTensor(String),
}

pub type Result<T, E = TensorIoError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Dtype::F32 => "F32",
            Dtype::F64 => "F64",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "F32" => Some(Dtype::F32),
            "F64" => Some(Dtype::F64),
            _ => None,
        }
    }
}

impl fmt::Display for Dtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Floating-point element types the container can hold.
pub trait Scalar: Copy + Send + Sync + PartialEq + fmt::Debug + 'static {
    const DTYPE: Dtype;
    fn from_le_slice(bytes: &[u8]) -> Self;
    fn extend_le(self, out: &mut Vec<u8>);
    fn to_f64(self) -> f64;
    fn finite(self) -> bool;
}

impl Scalar for f32 {
    const DTYPE: Dtype = Dtype::F32;
    #[inline]
    fn from_le_slice(bytes: &[u8]) -> Self {
        f32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]])
    }
    #[inline]
    fn extend_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn finite(self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f64 {
    const DTYPE: Dtype = Dtype::F64;
    #[inline]
    fn from_le_slice(bytes: &[u8]) -> Self {
        let mut b = [0u8; 8];
        b.copy_from_slice(&bytes[..8]);
        f64::from_le_bytes(b)
    }
    #[inline]
    fn extend_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn finite(self) -> bool {
        self.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl TensorData {
    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> Dtype {
        match self {
            TensorData::F32(_) => Dtype::F32,
            TensorData::F64(_) => Dtype::F64,
        }
    }

    fn first_non_finite(&self) -> Option<usize> {
        match self {
            TensorData::F32(v) => v.iter().position(|x| !x.is_finite()),
            TensorData::F64(v) => v.iter().position(|x| !x.is_finite()),
        }
    }
}

/// A named row-major matrix. Vectors are stored as a single row.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    name: String,
    rows: usize,
    cols: usize,
    data: TensorData,
}

impl Tensor {
    pub fn new(name: impl Into<String>, rows: usize, cols: usize, data: TensorData) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(TensorIoError::InvalidTensor("empty tensor name".into()));
        }
        if rows == 0 || cols == 0 {
            return Err(TensorIoError::InvalidTensor(format!(
                "`{name}` has degenerate shape [{rows}, {cols}]"
            )));
        }
        let expected = rows.checked_mul(cols).ok_or_else(|| {
            TensorIoError::InvalidTensor(format!("`{name}` shape overflows usize"))
        })?;
        if data.len() != expected {
            return Err(TensorIoError::InvalidTensor(format!(
                "`{name}` has {} values for shape [{rows}, {cols}]",
                data.len()
            )));
        }
        if let Some(index) = data.first_non_finite() {
            return Err(TensorIoError::NonFiniteValue { name, index });
        }
        Ok(Self { name, rows, cols, data })
    }

    pub fn from_f32(name: impl Into<String>, rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        Self::new(name, rows, cols, TensorData::F32(data))
    }

    pub fn from_f64(name: impl Into<String>, rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(name, rows, cols, TensorData::F64(data))
    }

    /// A 1-D tensor, normalized to shape `[1, n]`.
    pub fn vector_f32(name: impl Into<String>, data: Vec<f32>) -> Result<Self> {
        let n = data.len();
        Self::from_f32(name, 1, n, data)
    }

    pub fn vector_f64(name: impl Into<String>, data: Vec<f64>) -> Result<Self> {
        let n = data.len();
        Self::from_f64(name, 1, n, data)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> [usize; 2] {
        [self.rows, self.cols]
    }

    pub fn dtype(&self) -> Dtype {
        self.data.dtype()
    }

    pub fn data(&self) -> &TensorData {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn byte_len(&self) -> u64 {
        (self.len() * self.dtype().size()) as u64
    }

    /// Element `(row, col)` widened to `f64`.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        let i = row * self.cols + col;
        match &self.data {
            TensorData::F32(v) => v[i] as f64,
            TensorData::F64(v) => v[i],
        }
    }

    /// Copy of the payload widened to `f64`.
    pub fn to_f64_vec(&self) -> Vec<f64> {
        match &self.data {
            TensorData::F32(v) => v.iter().map(|&x| x as f64).collect(),
            TensorData::F64(v) => v.clone(),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        let name = name.into();
        assert!(!name.is_empty(), "tensor name must be nonempty");
        self.name = name;
        self
    }
}

/// A set of uniquely named tensors. Iteration is lexicographic by name.
#[derive(Debug, Clone, Default)]
pub struct Checkpoint {
    tensors: BTreeMap<String, Tensor>,
    source_path: Option<PathBuf>,
    byte_size: u64,
}

impl PartialEq for Checkpoint {
    /// Equality is over tensor contents only; provenance fields are ignored.
    fn eq(&self, other: &Self) -> bool {
        self.tensors == other.tensors
    }
}

impl Checkpoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_tensors(tensors: impl IntoIterator<Item = Tensor>) -> Result<Self> {
        let mut ckpt = Self::new();
        for t in tensors {
            ckpt.insert(t)?;
        }
        Ok(ckpt)
    }

    pub fn insert(&mut self, tensor: Tensor) -> Result<()> {
        if self.tensors.contains_key(tensor.name()) {
            return Err(TensorIoError::DuplicateName(tensor.name().to_owned()));
        }
        self.tensors.insert(tensor.name().to_owned(), tensor);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.get(name)
    }

    pub fn tensors(&self) -> impl ExactSizeIterator<Item = &Tensor> {
        self.tensors.values()
    }

    pub fn names(&self) -> impl ExactSizeIterator<Item = &str> {
        self.tensors.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn source_path(&self) -> Option<&Path> {
        self.source_path.as_deref()
    }

    /// Size of the file this checkpoint was loaded from, 0 if built in memory.
    pub fn byte_size(&self) -> u64 {
        self.byte_size
    }

    pub fn into_tensors(self) -> impl Iterator<Item = Tensor> {
        self.tensors.into_values()
    }
}

/// Header entry describing one payload region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorEntry {
    pub name: String,
    pub dtype: Dtype,
    pub rows: usize,
    pub cols: usize,
    /// Byte offsets relative to the start of the payload.
    pub begin: u64,
    pub end: u64,
}

impl TensorEntry {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn byte_len(&self) -> u64 {
        self.end - self.begin
    }
}

/// Parsed and validated container header.
#[derive(Debug, Clone)]
pub struct ContainerIndex {
    entries: Vec<TensorEntry>,
    payload_start: u64,
    file_len: u64,
}

impl ContainerIndex {
    /// Entries sorted by name.
    pub fn entries(&self) -> &[TensorEntry] {
        &self.entries
    }

    pub fn entry(&self, name: &str) -> Option<&TensorEntry> {
        self.entries
            .binary_search_by(|e| e.name.as_str().cmp(name))
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn payload_start(&self) -> u64 {
        self.payload_start
    }

    pub fn file_len(&self) -> u64 {
        self.file_len
    }

    /// Largest single tensor payload in bytes.
    pub fn largest_tensor_bytes(&self) -> u64 {
        self.entries.iter().map(TensorEntry::byte_len).max().unwrap_or(0)
    }
}

/// Header object as ordered `(key, value)` pairs so duplicate keys are visible.
struct RawHeader(Vec<(String, Value)>);

impl<'de> Deserialize<'de> for RawHeader {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct HeaderVisitor;
        impl<'de> Visitor<'de> for HeaderVisitor {
            type Value = RawHeader;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a JSON object of tensor descriptors")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<RawHeader, A::Error> {
                let mut pairs = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, Value>()? {
                    pairs.push((k, v));
                }
                Ok(RawHeader(pairs))
            }
        }
        deserializer.deserialize_map(HeaderVisitor)
    }
}

fn malformed(msg: impl Into<String>) -> TensorIoError {
    TensorIoError::MalformedHeader(msg.into())
}

fn parse_entry(name: &str, value: &Value) -> Result<TensorEntry> {
    let obj = value
        .as_object()
        .ok_or_else(|| malformed(format!("descriptor for `{name}` is not an object")))?;
    let dtype_str = obj
        .get("dtype")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed(format!("`{name}` lacks a string dtype")))?;
    let dtype = Dtype::parse(dtype_str).ok_or_else(|| TensorIoError::UnsupportedDtype {
        name: name.to_owned(),
        dtype: dtype_str.to_owned(),
    })?;
    let shape: Vec<u64> = obj
        .get("shape")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed(format!("`{name}` lacks a shape array")))?
        .iter()
        .map(|d| d.as_u64().ok_or_else(|| malformed(format!("`{name}` has a non-integer dimension"))))
        .collect::<Result<_>>()?;
    let (rows, cols) = match shape.as_slice() {
        [n] => (1, *n),
        [m, n] => (*m, *n),
        _ => {
            return Err(malformed(format!(
                "`{name}` has rank {} (only 1-D and 2-D tensors are supported)",
                shape.len()
            )))
        }
    };
    if rows == 0 || cols == 0 {
        return Err(malformed(format!("`{name}` has an empty dimension")));
    }
    let offsets = obj
        .get("data_offsets")
        .and_then(Value::as_array)
        .filter(|a| a.len() == 2)
        .ok_or_else(|| malformed(format!("`{name}` lacks a two-element data_offsets")))?;
    let begin = offsets[0]
        .as_u64()
        .ok_or_else(|| malformed(format!("`{name}` has a non-integer offset")))?;
    let end = offsets[1]
        .as_u64()
        .ok_or_else(|| malformed(format!("`{name}` has a non-integer offset")))?;
    if end < begin {
        return Err(malformed(format!("`{name}` has end offset before begin")));
    }
    let elems = rows
        .checked_mul(cols)
        .and_then(|e| e.checked_mul(dtype.size() as u64))
        .ok_or_else(|| malformed(format!("`{name}` shape overflows")))?;
    if end - begin != elems {
        return Err(malformed(format!(
            "`{name}` declares {} bytes but shape [{rows}, {cols}] of {dtype} needs {elems}",
            end - begin
        )));
    }
    let rows = usize::try_from(rows).map_err(|_| malformed("dimension exceeds address space"))?;
    let cols = usize::try_from(cols).map_err(|_| malformed("dimension exceeds address space"))?;
    Ok(TensorEntry { name: name.to_owned(), dtype, rows, cols, begin, end })
}

fn read_index_from<R: Read>(reader: &mut R, file_len: u64) -> Result<ContainerIndex> {
    if file_len < 8 {
        return Err(malformed("file shorter than the 8-byte length prefix"));
    }
    let mut len_buf = [0u8; 8];
    reader.read_exact(&mut len_buf)?;
    let header_len = u64::from_le_bytes(len_buf);
    if header_len > file_len - 8 {
        return Err(malformed(format!(
            "header length {header_len} exceeds file size {file_len}"
        )));
    }
    if header_len > MAX_HEADER_BYTES {
        return Err(malformed(format!("header length {header_len} is implausibly large")));
    }
    let mut header = vec![0u8; header_len as usize];
    reader.read_exact(&mut header)?;
    let text = std::str::from_utf8(&header).map_err(|e| malformed(format!("header is not UTF-8: {e}")))?;
    let RawHeader(pairs) =
        serde_json::from_str(text).map_err(|e| malformed(format!("header is not a JSON object: {e}")))?;

    let mut entries = Vec::with_capacity(pairs.len());
    let mut seen = std::collections::HashSet::new();
    for (name, value) in &pairs {
        if !seen.insert(name.as_str()) {
            return Err(TensorIoError::DuplicateName(name.clone()));
        }
        if name == METADATA_KEY {
            continue;
        }
        if name.is_empty() {
            return Err(malformed("empty tensor name"));
        }
        entries.push(parse_entry(name, value)?);
    }

    let payload_start = 8 + header_len;
    let payload_len = file_len - payload_start;
    let mut by_offset: Vec<&TensorEntry> = entries.iter().collect();
    by_offset.sort_by_key(|e| (e.begin, e.end));
    let mut cursor = 0u64;
    for e in by_offset {
        if e.begin < cursor {
            return Err(malformed(format!("region of `{}` overlaps its predecessor", e.name)));
        }
        if e.begin > cursor {
            return Err(malformed(format!("gap before region of `{}`", e.name)));
        }
        if e.end > payload_len {
            return Err(malformed(format!(
                "region of `{}` ends at {} past payload length {payload_len}",
                e.name, e.end
            )));
        }
        cursor = e.end;
    }
    if cursor != payload_len {
        return Err(malformed(format!(
            "declared regions cover {cursor} bytes but the payload holds {payload_len}"
        )));
    }

    entries.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(ContainerIndex { entries, payload_start, file_len })
}

/// Reads and validates only the header of a container.
pub fn read_index(path: impl AsRef<Path>) -> Result<ContainerIndex> {
    let file = File::open(path.as_ref())?;
    let file_len = file.metadata()?.len();
    let mut reader = BufReader::new(file);
    read_index_from(&mut reader, file_len)
}

/// Decodes `count` scalars from `reader`, appending to `out`.
fn decode_into<T: Scalar, R: Read>(
    reader: &mut R,
    count: usize,
    name: &str,
    first_index: usize,
    out: &mut Vec<T>,
    scratch: &mut Vec<u8>,
) -> Result<()> {
    let size = T::DTYPE.size();
    let mut remaining = count;
    let mut index = first_index;
    while remaining > 0 {
        let take = remaining.min(DECODE_CHUNK);
        scratch.resize(take * size, 0);
        reader.read_exact(scratch)?;
        for chunk in scratch.chunks_exact(size) {
            let v = T::from_le_slice(chunk);
            if !v.finite() {
                return Err(TensorIoError::NonFiniteValue { name: name.to_owned(), index });
            }
            out.push(v);
            index += 1;
        }
        remaining -= take;
    }
    Ok(())
}

/// Loads every tensor of a container into memory.
pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let file_len = file.metadata()?.len();
    let mut reader = BufReader::new(file);
    let index = read_index_from(&mut reader, file_len)?;

    // Regions tile the payload, so reading in offset order is one forward pass.
    let mut order: Vec<&TensorEntry> = index.entries.iter().collect();
    order.sort_by_key(|e| e.begin);

    let mut tensors = BTreeMap::new();
    let mut scratch = Vec::new();
    for entry in order {
        let data = match entry.dtype {
            Dtype::F32 => {
                let mut v = Vec::with_capacity(entry.len());
                decode_into::<f32, _>(&mut reader, entry.len(), &entry.name, 0, &mut v, &mut scratch)?;
                TensorData::F32(v)
            }
            Dtype::F64 => {
                let mut v = Vec::with_capacity(entry.len());
                decode_into::<f64, _>(&mut reader, entry.len(), &entry.name, 0, &mut v, &mut scratch)?;
                TensorData::F64(v)
            }
        };
        let tensor = Tensor::new(entry.name.clone(), entry.rows, entry.cols, data)?;
        tensors.insert(entry.name.clone(), tensor);
    }
    Ok(Checkpoint {
        tensors,
        source_path: Some(path.to_path_buf()),
        byte_size: file_len,
    })
}

/// Writes `ckpt` in the container layout. Output bytes depend only on the
/// checkpoint's tensors.
pub fn save_checkpoint(ckpt: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let layout: Vec<TensorLayout> = ckpt
        .tensors()
        .map(|t| TensorLayout::new(t.name(), t.dtype(), t.rows(), t.cols()))
        .collect();
    let mut writer = ContainerWriter::create(path, layout)?;
    for t in ckpt.tensors() {
        match t.data() {
            TensorData::F32(v) => writer.write_values(v)?,
            TensorData::F64(v) => writer.write_values(v)?,
        }
    }
    writer.finish()?;
    Ok(())
}

/// Declared name, dtype and shape of a tensor to be streamed into a container.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorLayout {
    pub name: String,
    pub dtype: Dtype,
    pub rows: usize,
    pub cols: usize,
}

impl TensorLayout {
    pub fn new(name: impl Into<String>, dtype: Dtype, rows: usize, cols: usize) -> Self {
        Self { name: name.into(), dtype, rows, cols }
    }
}

fn header_json(entries: &[TensorEntry]) -> String {
    // serde_json's default map is ordered, so keys come out sorted at every level.
    let mut root = serde_json::Map::new();
    for e in entries {
        let mut desc = serde_json::Map::new();
        desc.insert("data_offsets".into(), serde_json::json!([e.begin, e.end]));
        desc.insert("dtype".into(), Value::String(e.dtype.as_str().into()));
        desc.insert("shape".into(), serde_json::json!([e.rows, e.cols]));
        root.insert(e.name.clone(), Value::Object(desc));
    }
    Value::Object(root).to_string()
}

/// Streams tensor payloads into a container whose header is fixed up front.
///
/// Tensors are laid out in name order; values must be supplied in that order,
/// possibly across many `write_values` calls per tensor.
pub struct ContainerWriter {
    out: BufWriter<File>,
    entries: Vec<TensorEntry>,
    current: usize,
    written_in_current: usize,
    bytes: Vec<u8>,
}

impl ContainerWriter {
    pub fn create(path: impl AsRef<Path>, mut layout: Vec<TensorLayout>) -> Result<Self> {
        layout.sort_by(|a, b| a.name.cmp(&b.name));
        for pair in layout.windows(2) {
            if pair[0].name == pair[1].name {
                return Err(TensorIoError::DuplicateName(pair[0].name.clone()));
            }
        }
        let mut entries = Vec::with_capacity(layout.len());
        let mut offset = 0u64;
        for l in layout {
            if l.name.is_empty() || l.rows == 0 || l.cols == 0 {
                return Err(TensorIoError::InvalidTensor(format!(
                    "layout `{}` [{}, {}] is not a valid tensor",
                    l.name, l.rows, l.cols
                )));
            }
            let bytes = (l.rows * l.cols * l.dtype.size()) as u64;
            entries.push(TensorEntry {
                name: l.name,
                dtype: l.dtype,
                rows: l.rows,
                cols: l.cols,
                begin: offset,
                end: offset + bytes,
            });
            offset += bytes;
        }
        let header = header_json(&entries);
        let mut out = BufWriter::new(File::create(path.as_ref())?);
        out.write_all(&(header.len() as u64).to_le_bytes())?;
        out.write_all(header.as_bytes())?;
        let mut writer = Self { out, entries, current: 0, written_in_current: 0, bytes: Vec::new() };
        writer.skip_complete();
        Ok(writer)
    }

    fn skip_complete(&mut self) {
        while self.current < self.entries.len() && self.written_in_current == self.entries[self.current].len() {
            self.current += 1;
            self.written_in_current = 0;
        }
    }

    /// Appends values to the tensor currently being written, rolling over to
    /// the next tensor when one fills up.
    pub fn write_values<T: Scalar>(&mut self, mut values: &[T]) -> Result<()> {
        while !values.is_empty() {
            let entry = self.entries.get(self.current).ok_or_else(|| {
                TensorIoError::InvalidTensor("more values supplied than the layout declares".into())
            })?;
            if entry.dtype != T::DTYPE {
                return Err(TensorIoError::InvalidTensor(format!(
                    "`{}` is declared {} but {} values were supplied",
                    entry.name,
                    entry.dtype,
                    T::DTYPE
                )));
            }
            let room = entry.len() - self.written_in_current;
            let take = room.min(values.len());
            let (now, rest) = values.split_at(take);
            if let Some(pos) = now.iter().position(|v| !v.finite()) {
                return Err(TensorIoError::NonFiniteValue {
                    name: entry.name.clone(),
                    index: self.written_in_current + pos,
                });
            }
            self.bytes.clear();
            for v in now {
                v.extend_le(&mut self.bytes);
            }
            self.out.write_all(&self.bytes)?;
            self.written_in_current += take;
            values = rest;
            self.skip_complete();
        }
        Ok(())
    }

    /// Flushes the file; fails if any declared tensor is incomplete.
    pub fn finish(mut self) -> Result<()> {
        if let Some(entry) = self.entries.get(self.current) {
            return Err(TensorIoError::InvalidTensor(format!(
                "`{}` received {} of {} values",
                entry.name,
                self.written_in_current,
                entry.len()
            )));
        }
        self.out.flush()?;
        Ok(())
    }
}

/// Sequential reader handing out row blocks of individual tensors.
pub struct ContainerReader {
    reader: BufReader<File>,
    index: ContainerIndex,
    path: PathBuf,
    scratch: Vec<u8>,
}

impl ContainerReader {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path)?;
        let file_len = file.metadata()?.len();
        let mut reader = BufReader::with_capacity(1 << 20, file);
        let index = read_index_from(&mut reader, file_len)?;
        Ok(Self { reader, index, path, scratch: Vec::new() })
    }

    pub fn index(&self) -> &ContainerIndex {
        &self.index
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Positions the reader at the start of `name`'s payload.
    pub fn seek_tensor(&mut self, name: &str) -> Result<TensorEntry> {
        let entry = self
            .index
            .entry(name)
            .cloned()
            .ok_or_else(|| TensorIoError::UnknownTensor(name.to_owned()))?;
        self.reader.seek(SeekFrom::Start(self.index.payload_start + entry.begin))?;
        Ok(entry)
    }

    /// Reads the next `count` scalars of `entry` into `out` (cleared first).
    /// `first_index` is the flat index of the first scalar, for diagnostics.
    pub fn read_block<T: Scalar>(
        &mut self,
        entry: &TensorEntry,
        first_index: usize,
        count: usize,
        out: &mut Vec<T>,
    ) -> Result<()> {
        if entry.dtype != T::DTYPE {
            return Err(TensorIoError::InvalidTensor(format!(
                "`{}` is {} but was read as {}",
                entry.name,
                entry.dtype,
                T::DTYPE
            )));
        }
        if first_index + count > entry.len() {
            return Err(TensorIoError::InvalidTensor(format!(
                "read past the end of `{}`",
                entry.name
            )));
        }
        out.clear();
        decode_into(&mut self.reader, count, &entry.name, first_index, out, &mut self.scratch)
    }
}
