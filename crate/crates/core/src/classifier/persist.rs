//! HDXM model files.
//!
//! All integers are little-endian.
//!
//! | offset | type  | field                       |
//! |-------:|-------|-----------------------------|
//! | 0      | [u8;4]| magic `HDXM`                |
//! | 4      | u32   | format version (1)          |
//! | 8      | u32   | dimension D                 |
//! | 12     | u64   | seed                        |
//! | 20     | u32   | number of classes           |
//! | 24     | u32   | image width                 |
//! | 28     | u32   | image height                |
//! | 32     | u32   | value levels                |
//! | 36     | i32[] | position memory, width·height rows of D |
//! |        | i32[] | value memory, value-levels rows of D    |
//! |        | i32[] | associative memory, classes rows of D   |

use std::fs;
use std::path::Path;
use std::sync::Arc;

use super::{AssociativeMemory, HdcClassifier};
use crate::error::{HdcError, Result};
use crate::hdc::{EncoderConfig, ItemMemory};
use crate::report::write_atomic;

pub const MODEL_MAGIC: &[u8; 4] = b"HDXM";
pub const MODEL_VERSION: u32 = 1;
const HEADER_LEN: usize = 36;

impl HdcClassifier {
    pub fn to_bytes(&self) -> Vec<u8> {
        let config = self.config();
        let mem = self.item_memory();
        let am = self.am();
        let body = mem.positions_raw().len() + mem.values_raw().len() + am.raw().len();
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * body);
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.extend_from_slice(&(config.dimension as u32).to_le_bytes());
        out.extend_from_slice(&config.seed.to_le_bytes());
        out.extend_from_slice(&(am.num_classes() as u32).to_le_bytes());
        out.extend_from_slice(&(config.image_width as u32).to_le_bytes());
        out.extend_from_slice(&(config.image_height as u32).to_le_bytes());
        out.extend_from_slice(&(config.value_levels as u32).to_le_bytes());
        for &c in mem.positions_raw().iter().chain(mem.values_raw()) {
            out.extend_from_slice(&i32::from(c).to_le_bytes());
        }
        for &c in am.raw() {
            out.extend_from_slice(&c.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut reader = Reader { bytes, offset: 0 };
        let magic = reader.take("magic", 4)?;
        if magic != MODEL_MAGIC {
            return Err(reader.error("magic", 0, format!("unexpected magic {magic:?}")));
        }
        let version = reader.u32("version")?;
        if version != MODEL_VERSION {
            return Err(reader.error("version", 4, format!("unsupported version {version}")));
        }
        let dimension = reader.u32("dimension")? as usize;
        let seed = reader.u64("seed")?;
        let num_classes = reader.u32("num_classes")? as usize;
        let width = reader.u32("image_width")? as usize;
        let height = reader.u32("image_height")? as usize;
        let value_levels = reader.u32("value_levels")? as usize;
        let config = EncoderConfig {
            dimension,
            image_width: width,
            image_height: height,
            value_levels,
            seed,
        };
        config.validate()?;
        if num_classes == 0 {
            return Err(reader.error("num_classes", 20, "must be positive".into()));
        }
        let positions = reader.bipolar("position_memory", width * height * dimension)?;
        let values = reader.bipolar("value_memory", value_levels * dimension)?;
        let am = reader.i32s("associative_memory", num_classes * dimension)?;
        if reader.offset != bytes.len() {
            return Err(reader.error(
                "trailer",
                reader.offset as u64,
                format!("{} unexpected trailing bytes", bytes.len() - reader.offset),
            ));
        }
        let item_memory = ItemMemory::from_tables(config, positions, values)?;
        HdcClassifier::from_parts(
            Arc::new(item_memory),
            AssociativeMemory::from_raw(num_classes, dimension, am),
        )
    }

    /// Writes the model via a temporary file and rename.
    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| HdcError::io(path, e))?;
        HdcClassifier::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    fn error(&self, field: &'static str, offset: u64, message: String) -> HdcError {
        HdcError::Format {
            field,
            offset,
            message,
        }
    }

    fn take(&mut self, field: &'static str, len: usize) -> Result<&'a [u8]> {
        let end = self.offset.checked_add(len).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let slice = &self.bytes[self.offset..end];
                self.offset = end;
                Ok(slice)
            }
            None => Err(self.error(
                field,
                self.offset as u64,
                format!(
                    "truncated: need {len} bytes, {} remain",
                    self.bytes.len() - self.offset
                ),
            )),
        }
    }

    fn u32(&mut self, field: &'static str) -> Result<u32> {
        let b = self.take(field, 4)?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn u64(&mut self, field: &'static str) -> Result<u64> {
        let b = self.take(field, 8)?;
        Ok(u64::from_le_bytes(b.try_into().unwrap()))
    }

    fn i32s(&mut self, field: &'static str, count: usize) -> Result<Vec<i32>> {
        let len = count
            .checked_mul(4)
            .ok_or_else(|| self.error(field, self.offset as u64, "size overflow".into()))?;
        let b = self.take(field, len)?;
        Ok(b.chunks_exact(4)
            .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn bipolar(&mut self, field: &'static str, count: usize) -> Result<Vec<i8>> {
        let start = self.offset;
        let raw = self.i32s(field, count)?;
        raw.iter()
            .enumerate()
            .map(|(i, &c)| match c {
                1 => Ok(1),
                -1 => Ok(-1),
                other => Err(self.error(
                    field,
                    (start + 4 * i) as u64,
                    format!("expected a bipolar component, found {other}"),
                )),
            })
            .collect()
    }
}
