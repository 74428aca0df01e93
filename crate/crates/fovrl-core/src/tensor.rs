//! Dense row-major tensors of `f64`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::fovea::Frame;

/// Errors from tensor and tape operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TensorError {
    /// Operand shapes do not satisfy the operation's contract.
    ShapeMismatch(String),
    /// A value-level contract was violated (non-finite data, bad index).
    InvalidValue(String),
    /// `backward` was asked to differentiate a non-scalar node.
    NonScalarLoss,
    /// A serialized parameter blob failed to decode.
    BadCheckpoint(String),
    /// Two parameters were registered under the same name.
    DuplicateName(String),
}

impl fmt::Display for TensorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TensorError::ShapeMismatch(msg) => write!(f, "shape mismatch: {msg}"),
            TensorError::InvalidValue(msg) => write!(f, "invalid value: {msg}"),
            TensorError::NonScalarLoss => write!(f, "backward requires a scalar loss node"),
            TensorError::BadCheckpoint(msg) => write!(f, "bad checkpoint: {msg}"),
            TensorError::DuplicateName(name) => write!(f, "duplicate parameter name: {name}"),
        }
    }
}

impl core::error::Error for TensorError {}

/// A dense tensor: shape plus row-major values.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor, checking element count and finiteness.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Tensor, TensorError> {
        let n: usize = shape.iter().product();
        if shape.iter().any(|&d| d == 0) {
            return Err(TensorError::ShapeMismatch(String::from(
                "zero-sized dimensions are not allowed",
            )));
        }
        if data.len() != n {
            return Err(TensorError::ShapeMismatch(format!(
                "shape {:?} wants {} values, got {}",
                shape,
                n,
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(TensorError::InvalidValue(String::from(
                "tensor values must be finite",
            )));
        }
        Ok(Tensor { shape, data })
    }

    /// Internal constructor for values produced by tape arithmetic.
    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<f64>) -> Tensor {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Tensor { shape, data }
    }

    pub fn zeros(shape: Vec<usize>) -> Tensor {
        let n = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn scalar(v: f64) -> Tensor {
        Tensor {
            shape: vec![1],
            data: vec![v],
        }
    }

    /// A `[1, height, width]` tensor holding a frame's intensities.
    pub fn from_frame(frame: &Frame) -> Tensor {
        Tensor {
            shape: vec![1, frame.height(), frame.width()],
            data: frame.data().to_vec(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// The single value of a scalar tensor.
    pub fn item(&self) -> Result<f64, TensorError> {
        if self.data.len() == 1 {
            Ok(self.data[0])
        } else {
            Err(TensorError::ShapeMismatch(format!(
                "item() on tensor of shape {:?}",
                self.shape
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_validates_count_and_finiteness() {
        assert!(Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0]).is_err());
        assert!(Tensor::new(vec![2], vec![1.0, f64::NAN]).is_err());
        assert!(Tensor::new(vec![0], vec![]).is_err());
        let t = Tensor::new(vec![2, 3], vec![0.0; 6]).unwrap();
        assert_eq!(t.len(), 6);
    }

    #[test]
    fn item_requires_scalar() {
        assert_eq!(Tensor::scalar(4.5).item().unwrap(), 4.5);
        assert!(Tensor::zeros(vec![2]).item().is_err());
    }
}
