//! Sub-band geometry over the STFT bin axis.
//!
//! The F bins are split into `floor(F / w)` disjoint bands of exactly `w`
//! bins each, counted up from bin 0. Whatever is left over at the top of
//! the spectrum (the residual bins) is never enhanced: at inference those
//! columns are copied through from the noisy magnitude unchanged, and
//! training never samples them.

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::scalar::Scalar;

/// Fixed-width partition of `total_bins` into disjoint bands.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubbandPartition {
    total_bins: usize,
    band_width: usize,
    n_bands: usize,
}

impl SubbandPartition {
    pub fn new(total_bins: usize, band_width: usize) -> Result<Self> {
        if band_width == 0 || band_width > total_bins {
            return Err(Error::invalid(format!(
                "invalid band width {band_width} for {total_bins} bins"
            )));
        }
        Ok(SubbandPartition {
            total_bins,
            band_width,
            n_bands: total_bins / band_width,
        })
    }

    #[inline]
    pub fn total_bins(&self) -> usize {
        self.total_bins
    }

    #[inline]
    pub fn band_width(&self) -> usize {
        self.band_width
    }

    #[inline]
    pub fn n_bands(&self) -> usize {
        self.n_bands
    }

    /// Half-open bin range `[start, start + w)` of band `i`.
    pub fn band_range(&self, i: usize) -> Result<std::ops::Range<usize>> {
        if i >= self.n_bands {
            return Err(Error::invalid(format!(
                "band index {i} out of range (0..{})",
                self.n_bands
            )));
        }
        let start = i * self.band_width;
        Ok(start..start + self.band_width)
    }

    /// Bin indices above the last band, possibly empty.
    pub fn residual_bins(&self) -> std::ops::Range<usize> {
        self.n_bands * self.band_width..self.total_bins
    }
}

/// T×w magnitude slice of one band.
#[derive(Clone, Debug, PartialEq)]
pub struct SubbandSlice<T> {
    pub band_index: usize,
    pub values: Mat<T>,
}

/// Copies the columns of band `i` out of a T×F magnitude plane.
pub fn extract<T: Scalar>(
    magnitude: &Mat<T>,
    part: &SubbandPartition,
    i: usize,
) -> Result<SubbandSlice<T>> {
    if magnitude.cols() != part.total_bins() {
        return Err(Error::shape(format!(
            "magnitude has {} bins but partition expects {}",
            magnitude.cols(),
            part.total_bins()
        )));
    }
    let range = part.band_range(i)?;
    let values = Mat::from_fn(magnitude.rows(), part.band_width(), |t, f| {
        magnitude[(t, range.start + f)]
    });
    Ok(SubbandSlice {
        band_index: i,
        values,
    })
}

/// Rebuilds a full T×F plane from per-band slices.
///
/// Covered bins come from the slices; residual bins are copied bit-exact
/// from `noisy_magnitude`. Exactly one slice per band is required.
pub fn assemble<T: Scalar>(
    slices: &[SubbandSlice<T>],
    noisy_magnitude: &Mat<T>,
    part: &SubbandPartition,
) -> Result<Mat<T>> {
    if noisy_magnitude.cols() != part.total_bins() {
        return Err(Error::shape(format!(
            "noisy magnitude has {} bins but partition expects {}",
            noisy_magnitude.cols(),
            part.total_bins()
        )));
    }
    if slices.len() != part.n_bands() {
        return Err(Error::invalid(format!(
            "need {} slices, got {}",
            part.n_bands(),
            slices.len()
        )));
    }
    let mut seen = vec![false; part.n_bands()];
    let mut out = noisy_magnitude.clone();
    for slice in slices {
        let i = slice.band_index;
        if i >= part.n_bands() {
            return Err(Error::invalid(format!("band index {i} out of range")));
        }
        if seen[i] {
            return Err(Error::invalid(format!("duplicate slice for band {i}")));
        }
        seen[i] = true;
        if slice.values.rows() != noisy_magnitude.rows()
            || slice.values.cols() != part.band_width()
        {
            return Err(Error::shape(format!(
                "slice for band {i} is {}x{}, expected {}x{}",
                slice.values.rows(),
                slice.values.cols(),
                noisy_magnitude.rows(),
                part.band_width()
            )));
        }
        let range = part.band_range(i)?;
        for t in 0..out.rows() {
            out.row_mut(t)[range.clone()].copy_from_slice(slice.values.row(t));
        }
    }
    Ok(out)
}
