//! MSE and distillation losses with their gradients.

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::scalar::Scalar;

fn check_same_shape<T: Scalar>(a: &Mat<T>, b: &Mat<T>, what: &str) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::shape(format!(
            "{what}: {}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(())
}

/// Mean squared error over all elements, with the gradient w.r.t. `pred`:
/// `2 (pred - target) / (rows * cols)`.
pub fn mse_loss<T: Scalar>(pred: &Mat<T>, target: &Mat<T>) -> Result<(T, Mat<T>)> {
    check_same_shape(pred, target, "mse operands")?;
    mse_loss_masked(pred, target, pred.rows())
}

/// MSE restricted to the first `valid_rows` rows; padded rows contribute
/// neither loss nor gradient. With `valid_rows == rows` this is plain MSE.
pub fn mse_loss_masked<T: Scalar>(
    pred: &Mat<T>,
    target: &Mat<T>,
    valid_rows: usize,
) -> Result<(T, Mat<T>)> {
    check_same_shape(pred, target, "mse operands")?;
    if valid_rows == 0 || valid_rows > pred.rows() {
        return Err(Error::invalid(format!(
            "valid_rows {valid_rows} out of range for {} rows",
            pred.rows()
        )));
    }
    let count = T::of((valid_rows * pred.cols()) as f64);
    let two = T::of(2.0);

    let mut loss = T::zero();
    let mut grad = Mat::zeros(pred.rows(), pred.cols());
    for t in 0..valid_rows {
        let p = pred.row(t);
        let y = target.row(t);
        let g = grad.row_mut(t);
        for j in 0..p.len() {
            let d = p[j] - y[j];
            loss += d * d;
            g[j] = two * d / count;
        }
    }
    Ok((loss / count, grad))
}

/// Distillation loss `mse(student, clean) + alpha * mse(student, teacher)`
/// and its gradient w.r.t. the student output. No gradient flows to the
/// teacher; its weights stay fixed.
pub fn distill_loss<T: Scalar>(
    student: &Mat<T>,
    clean: &Mat<T>,
    teacher: &Mat<T>,
    alpha: T,
) -> Result<(T, Mat<T>)> {
    distill_loss_masked(student, clean, teacher, alpha, student.rows())
}

pub fn distill_loss_masked<T: Scalar>(
    student: &Mat<T>,
    clean: &Mat<T>,
    teacher: &Mat<T>,
    alpha: T,
    valid_rows: usize,
) -> Result<(T, Mat<T>)> {
    if alpha < T::zero() {
        return Err(Error::invalid("alpha must be nonnegative"));
    }
    let (task, mut grad) = mse_loss_masked(student, clean, valid_rows)?;
    let (guide, g2) = mse_loss_masked(student, teacher, valid_rows)?;
    for (a, b) in grad.data_mut().iter_mut().zip(g2.data()) {
        *a += alpha * *b;
    }
    Ok((task + alpha * guide, grad))
}
