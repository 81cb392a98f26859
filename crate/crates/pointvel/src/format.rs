//! Little-endian binary tensor files.
//!
//! Layout of the 64-byte header:
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `b"CRLV"`                         |
//! | 4      | 4    | format version (u32)                    |
//! | 8      | 4    | dtype code (u32, see [`DType`])         |
//! | 12     | 4    | rank (u32, 0..=6)                       |
//! | 16     | 48   | six u64 dims; entries past `rank` are 0 |
//!
//! The payload follows immediately, row-major, every element little-endian.
//! Complex values are interleaved `(re, im)` f32 pairs.

use pointvel_core::Complex32;
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"CRLV";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 64;
pub const MAX_RANK: usize = 6;

const DIMS_OFFSET: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum DType {
    F32 = 1,
    F64 = 2,
    C32 = 3,
    U8 = 4,
    I32 = 5,
    U32 = 6,
}

impl DType {
    pub fn from_code(code: u32) -> Option<Self> {
        Some(match code {
            1 => Self::F32,
            2 => Self::F64,
            3 => Self::C32,
            4 => Self::U8,
            5 => Self::I32,
            6 => Self::U32,
            _ => return None,
        })
    }

    pub fn code(self) -> u32 {
        self as u32
    }

    pub fn size_bytes(self) -> usize {
        match self {
            Self::U8 => 1,
            Self::F32 | Self::I32 | Self::U32 => 4,
            Self::F64 | Self::C32 => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::F32 => "f32",
            Self::F64 => "f64",
            Self::C32 => "c32",
            Self::U8 => "u8",
            Self::I32 => "i32",
            Self::U32 => "u32",
        }
    }
}

/// Decoding failure, always tied to the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("at byte 0: bad magic {found:02x?}, expected \"CRLV\"")]
    BadMagic { found: Vec<u8> },
    #[error("at byte 4: unsupported format version {0}, expected {VERSION}")]
    Version(u32),
    #[error("at byte 8: unknown dtype code {0}")]
    UnknownDType(u32),
    #[error("at byte 12: rank {0} exceeds the maximum of {MAX_RANK}")]
    Rank(u32),
    #[error("at byte {offset}: dim {axis} is {value}, must be 0 beyond rank {rank}")]
    UnusedDim { offset: usize, axis: usize, rank: usize, value: u64 },
    #[error("at byte {offset}: dims {dims:?} overflow the addressable size")]
    Overflow { offset: usize, dims: Vec<u64> },
    #[error("at byte {offset}: truncated, expected {expected} bytes but file has {actual}")]
    Truncated { offset: usize, expected: u64, actual: u64 },
    #[error("at byte {offset}: {extra} trailing bytes after a payload of {expected} bytes")]
    Trailing { offset: usize, expected: u64, extra: u64 },
    #[error("at byte 8: dtype {found}, expected {expected}")]
    WrongDType { expected: &'static str, found: &'static str },
    #[error("at byte 12: shape {found:?} does not match expected {expected}")]
    WrongShape { expected: String, found: Vec<usize> },
    #[error("at byte {offset}: {reason}")]
    Value { offset: usize, reason: String },
}

/// Element storage of a [`Tensor`].
#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    F64(Vec<f64>),
    C32(Vec<Complex32>),
    U8(Vec<u8>),
    I32(Vec<i32>),
    U32(Vec<u32>),
}

impl TensorData {
    pub fn dtype(&self) -> DType {
        match self {
            Self::F32(_) => DType::F32,
            Self::F64(_) => DType::F64,
            Self::C32(_) => DType::C32,
            Self::U8(_) => DType::U8,
            Self::I32(_) => DType::I32,
            Self::U32(_) => DType::U32,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::F32(v) => v.len(),
            Self::F64(v) => v.len(),
            Self::C32(v) => v.len(),
            Self::U8(v) => v.len(),
            Self::I32(v) => v.len(),
            Self::U32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A dense row-major tensor with its shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: TensorData,
}

impl Tensor {
    /// Panics if the rank exceeds [`MAX_RANK`] or the element count does not
    /// match the shape; both are programming errors on the writing side.
    pub fn new(shape: Vec<usize>, data: TensorData) -> Self {
        assert!(shape.len() <= MAX_RANK, "rank {} exceeds {MAX_RANK}", shape.len());
        let n: usize = shape.iter().product();
        assert_eq!(n, data.len(), "shape {shape:?} does not match {} elements", data.len());
        Self { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &TensorData {
        &self.data
    }

    pub fn into_data(self) -> TensorData {
        self.data
    }

    pub fn dtype(&self) -> DType {
        self.data.dtype()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.data.len() * self.dtype().size_bytes());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.dtype().code().to_le_bytes());
        out.extend_from_slice(&(self.shape.len() as u32).to_le_bytes());
        for axis in 0..MAX_RANK {
            let d = self.shape.get(axis).copied().unwrap_or(0) as u64;
            out.extend_from_slice(&d.to_le_bytes());
        }
        debug_assert_eq!(out.len(), HEADER_LEN);
        match &self.data {
            TensorData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            TensorData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            TensorData::C32(v) => v.iter().for_each(|x| {
                out.extend_from_slice(&x.re.to_le_bytes());
                out.extend_from_slice(&x.im.to_le_bytes());
            }),
            TensorData::U8(v) => out.extend_from_slice(v),
            TensorData::I32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            TensorData::U32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, FormatError> {
        let actual = bytes.len() as u64;
        if bytes.len() < HEADER_LEN {
            if bytes.len() < 4 || bytes[..4] != MAGIC {
                return Err(FormatError::BadMagic { found: bytes[..bytes.len().min(4)].to_vec() });
            }
            return Err(FormatError::Truncated { offset: bytes.len(), expected: HEADER_LEN as u64, actual });
        }
        if bytes[..4] != MAGIC {
            return Err(FormatError::BadMagic { found: bytes[..4].to_vec() });
        }
        let version = read_u32(bytes, 4);
        if version != VERSION {
            return Err(FormatError::Version(version));
        }
        let code = read_u32(bytes, 8);
        let dtype = DType::from_code(code).ok_or(FormatError::UnknownDType(code))?;
        let rank_raw = read_u32(bytes, 12);
        if rank_raw as usize > MAX_RANK {
            return Err(FormatError::Rank(rank_raw));
        }
        let rank = rank_raw as usize;
        let dims: Vec<u64> = (0..MAX_RANK).map(|a| read_u64(bytes, DIMS_OFFSET + 8 * a)).collect();
        if let Some(axis) = (rank..MAX_RANK).find(|&a| dims[a] != 0) {
            return Err(FormatError::UnusedDim { offset: DIMS_OFFSET + 8 * axis, axis, rank, value: dims[axis] });
        }
        let overflow = || FormatError::Overflow { offset: DIMS_OFFSET, dims: dims[..rank].to_vec() };
        let count = dims[..rank].iter().try_fold(1u64, |acc, &d| acc.checked_mul(d)).ok_or_else(overflow)?;
        let payload = count.checked_mul(dtype.size_bytes() as u64).ok_or_else(overflow)?;
        let expected = payload.checked_add(HEADER_LEN as u64).ok_or_else(overflow)?;
        if actual < expected {
            return Err(FormatError::Truncated { offset: bytes.len(), expected, actual });
        }
        if actual > expected {
            return Err(FormatError::Trailing { offset: expected as usize, expected: payload, extra: actual - expected });
        }
        // The full payload is in memory, so every size below fits in usize.
        let shape: Vec<usize> = dims[..rank].iter().map(|&d| d as usize).collect();
        let body = &bytes[HEADER_LEN..];
        let data = match dtype {
            DType::F32 => TensorData::F32(body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect()),
            DType::F64 => TensorData::F64(body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect()),
            DType::C32 => TensorData::C32(
                body.chunks_exact(8)
                    .map(|c| {
                        Complex32::new(
                            f32::from_le_bytes(c[..4].try_into().unwrap()),
                            f32::from_le_bytes(c[4..].try_into().unwrap()),
                        )
                    })
                    .collect(),
            ),
            DType::U8 => TensorData::U8(body.to_vec()),
            DType::I32 => TensorData::I32(body.chunks_exact(4).map(|c| i32::from_le_bytes(c.try_into().unwrap())).collect()),
            DType::U32 => TensorData::U32(body.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect()),
        };
        Ok(Self { shape, data })
    }

    /// Checks the shape against `expected`, where `None` matches any length.
    pub fn expect_shape(&self, expected: &[Option<usize>]) -> Result<(), FormatError> {
        let ok = self.shape.len() == expected.len()
            && self.shape.iter().zip(expected).all(|(s, e)| e.is_none_or(|e| e == *s));
        if ok {
            return Ok(());
        }
        let pretty: Vec<String> = expected.iter().map(|e| e.map_or("*".to_string(), |e| e.to_string())).collect();
        Err(FormatError::WrongShape { expected: format!("[{}]", pretty.join(", ")), found: self.shape.clone() })
    }

    fn wrong_dtype(&self, expected: DType) -> FormatError {
        FormatError::WrongDType { expected: expected.name(), found: self.dtype().name() }
    }

    pub fn into_f64(self) -> Result<Vec<f64>, FormatError> {
        match self.data {
            TensorData::F64(v) => Ok(v),
            _ => Err(self.wrong_dtype(DType::F64)),
        }
    }

    pub fn into_c32(self) -> Result<Vec<Complex32>, FormatError> {
        match self.data {
            TensorData::C32(v) => Ok(v),
            _ => Err(self.wrong_dtype(DType::C32)),
        }
    }

    pub fn into_u8(self) -> Result<Vec<u8>, FormatError> {
        match self.data {
            TensorData::U8(v) => Ok(v),
            _ => Err(self.wrong_dtype(DType::U8)),
        }
    }

    pub fn into_u32(self) -> Result<Vec<u32>, FormatError> {
        match self.data {
            TensorData::U32(v) => Ok(v),
            _ => Err(self.wrong_dtype(DType::U32)),
        }
    }
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

fn read_u64(bytes: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap())
}
