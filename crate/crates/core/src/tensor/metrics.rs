use crate::error::{Error, Result};

/// Fraction of positions where `y_true` and `y_pred` agree.
pub fn accuracy(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::InvalidArgument(format!(
            "label vectors differ in length ({} vs {})",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::InvalidArgument(
            "accuracy of empty label vectors".into(),
        ));
    }
    let hits = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / y_true.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(accuracy(&[0, 1, 1], &[0, 1, 1]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 1, 1], &[1, 0, 0]).unwrap(), 0.0);
        assert_eq!(accuracy(&[0, 1, 1, 0], &[0, 1, 0, 0]).unwrap(), 0.75);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            accuracy(&[0, 1], &[0]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(accuracy(&[], &[]).is_err());
    }
}
