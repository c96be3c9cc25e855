use crate::so3::Vec3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("series lengths differ ({reference} reference vs {actual} actual samples)")]
    LengthMismatch { reference: usize, actual: usize },
    #[error("cannot compute a metric over zero samples")]
    Empty,
    #[error("timestamps differ at sample {index}")]
    TimestampMismatch { index: usize },
}

/// Root-mean-square of the Euclidean position error.
pub fn rmse(reference: &[Vec3], actual: &[Vec3]) -> Result<f64, MetricError> {
    if reference.len() != actual.len() {
        return Err(MetricError::LengthMismatch { reference: reference.len(), actual: actual.len() });
    }
    if reference.is_empty() {
        return Err(MetricError::Empty);
    }
    let sum: f64 = reference.iter().zip(actual).map(|(r, p)| (r - p).norm_squared()).sum();
    Ok((sum / reference.len() as f64).sqrt())
}

/// [`rmse`] over timestamped series, which must share their time stamps.
pub fn rmse_timed(reference: &[(f64, Vec3)], actual: &[(f64, Vec3)]) -> Result<f64, MetricError> {
    if let Some(index) = reference.iter().zip(actual).position(|(r, a)| (r.0 - a.0).abs() > 1e-9) {
        return Err(MetricError::TimestampMismatch { index });
    }
    let r: Vec<Vec3> = reference.iter().map(|x| x.1).collect();
    let a: Vec<Vec3> = actual.iter().map(|x| x.1).collect();
    rmse(&r, &a)
}

/// Root-mean-square of a scalar error series.
pub fn rms(errors: &[f64]) -> Result<f64, MetricError> {
    if errors.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok((errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt())
}
