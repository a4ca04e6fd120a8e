use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// An ordered sequence of `n` real `p × q` observation matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSeries {
    p: usize,
    q: usize,
    frames: Vec<Matrix>,
}

impl MatrixSeries {
    pub fn new(p: usize, q: usize, frames: Vec<Matrix>) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(Error::Validation(format!(
                "series dimensions must be positive, got {p}x{q}"
            )));
        }
        for (t, f) in frames.iter().enumerate() {
            if f.shape() != (p, q) {
                return Err(Error::Validation(format!(
                    "frame {t} is {:?}, expected ({p}, {q})",
                    f.shape()
                )));
            }
            if f.as_slice().iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!(
                    "frame {t} has non-finite entries"
                )));
            }
        }
        Ok(Self { p, q, frames })
    }

    /// Trusted constructor for frames built inside the crate.
    pub(crate) fn from_frames_unchecked(p: usize, q: usize, frames: Vec<Matrix>) -> Self {
        debug_assert!(frames.iter().all(|f| f.shape() == (p, q)));
        Self { p, q, frames }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.frames.len()
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn q(&self) -> usize {
        self.q
    }

    #[inline]
    pub fn frames(&self) -> &[Matrix] {
        &self.frames
    }

    pub fn frame(&self, t: usize) -> &Matrix {
        &self.frames[t]
    }

    /// The series of transposed frames (`q × p`).
    pub fn transposed(&self) -> MatrixSeries {
        MatrixSeries {
            p: self.q,
            q: self.p,
            frames: self.frames.iter().map(Matrix::transpose).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> MatrixSeries {
        MatrixSeries {
            p: self.p,
            q: self.q,
            frames: self.frames.iter().map(|f| f.scale(factor)).collect(),
        }
    }

    /// Subtracts the per-entry temporal mean from every frame.
    pub fn demeaned(&self) -> MatrixSeries {
        if self.frames.is_empty() {
            return self.clone();
        }
        let mut mean = vec![0.0; self.p * self.q];
        for f in &self.frames {
            for (m, v) in mean.iter_mut().zip(f.as_slice()) {
                *m += v;
            }
        }
        let n = self.frames.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        let frames = self
            .frames
            .iter()
            .map(|f| {
                let mut g = f.clone();
                for (x, m) in g.as_mut_slice().iter_mut().zip(&mean) {
                    *x -= m;
                }
                g
            })
            .collect();
        MatrixSeries {
            p: self.p,
            q: self.q,
            frames,
        }
    }

    /// Frames at the given time indices, in order.
    pub fn select(&self, indices: impl IntoIterator<Item = usize>) -> MatrixSeries {
        MatrixSeries {
            p: self.p,
            q: self.q,
            frames: indices
                .into_iter()
                .map(|t| self.frames[t].clone())
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_frame_shape() {
        let frames = vec![Matrix::zeros(2, 2), Matrix::zeros(2, 3)];
        assert!(MatrixSeries::new(2, 2, frames).is_err());
    }

    #[test]
    fn demean_constant_series_is_zero() {
        let f = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let s = MatrixSeries::new(2, 2, vec![f.clone(), f.clone(), f]).unwrap();
        for g in s.demeaned().frames() {
            assert!(g.as_slice().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn transpose_round_trip() {
        let f = Matrix::from_rows(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]);
        let s = MatrixSeries::new(2, 3, vec![f]).unwrap();
        let t = s.transposed();
        assert_eq!((t.p(), t.q()), (3, 2));
        assert_eq!(t.transposed(), s);
    }
}
