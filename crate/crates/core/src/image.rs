use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::error::{HdcError, Result};
use crate::perturb::PerturbationKind;

pub const MNIST_SIDE: usize = 28;
pub const MNIST_PIXELS: usize = MNIST_SIDE * MNIST_SIDE;

/// Identifies an image by the dataset it came from and its index in the
/// source file. Perturbed images keep their parent's source and index and
/// record the perturbation kind in `variant`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ImageId {
    pub source: Arc<str>,
    pub index: u32,
    pub variant: Option<PerturbationKind>,
}

impl ImageId {
    pub fn new(source: impl Into<Arc<str>>, index: u32) -> Self {
        ImageId {
            source: source.into(),
            index,
            variant: None,
        }
    }

    pub fn with_variant(&self, kind: PerturbationKind) -> Self {
        ImageId {
            source: self.source.clone(),
            index: self.index,
            variant: Some(kind),
        }
    }

    /// The id of the unperturbed image this one was derived from.
    pub fn parent(&self) -> ImageId {
        ImageId {
            source: self.source.clone(),
            index: self.index,
            variant: None,
        }
    }
}

impl fmt::Display for ImageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.source, self.index)?;
        if let Some(kind) = self.variant {
            write!(f, "_{kind}")?;
        }
        Ok(())
    }
}

impl Serialize for ImageId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// A greyscale image, row-major, one byte per pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    pub id: ImageId,
    width: usize,
    height: usize,
    pixels: Vec<u8>,
    pub label: Option<u8>,
}

impl Image {
    pub fn new(
        id: ImageId,
        width: usize,
        height: usize,
        pixels: Vec<u8>,
        label: Option<u8>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(HdcError::domain("image geometry must be non-empty"));
        }
        crate::error::check_len(width * height, pixels.len())?;
        Ok(Image {
            id,
            width,
            height,
            pixels,
            label,
        })
    }

    /// A 28×28 image.
    pub fn mnist(id: ImageId, pixels: Vec<u8>, label: Option<u8>) -> Result<Self> {
        Image::new(id, MNIST_SIDE, MNIST_SIDE, pixels, label)
    }

    pub fn filled(id: ImageId, width: usize, height: usize, value: u8) -> Self {
        Image {
            id,
            width,
            height,
            pixels: vec![value; width * height],
            label: None,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    pub fn with_label(mut self, label: Option<u8>) -> Self {
        self.label = label;
        self
    }

    /// Same geometry, label and parent, new pixel data and id.
    pub(crate) fn derive(&self, id: ImageId, pixels: Vec<u8>) -> Image {
        debug_assert_eq!(pixels.len(), self.pixels.len());
        Image {
            id,
            width: self.width,
            height: self.height,
            pixels,
            label: self.label,
        }
    }
}
