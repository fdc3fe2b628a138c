use super::HarnessError;
use crate::vehicle_sim::{unified_signal, SimError};

/// Folds throttle and brake into one signal: `u = (T - B + 1) / 2`.
/// `u = 1` is full throttle, `u = 0` full braking.
pub fn unify_control(throttle: f64, brake: f64) -> Result<f64, HarnessError> {
    for (field, value) in [("throttle", throttle), ("brake", brake)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(SimError::CommandOutOfRange { field, value }.into());
        }
    }
    Ok(unified_signal(throttle, brake))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn endpoints() {
        assert_eq!(unify_control(1.0, 0.0).unwrap(), 1.0);
        assert_eq!(unify_control(0.0, 1.0).unwrap(), 0.0);
        assert_eq!(unify_control(0.0, 0.0).unwrap(), 0.5);
    }

    #[test]
    fn out_of_range_is_rejected() {
        assert!(unify_control(1.2, 0.0).is_err());
        assert!(unify_control(0.0, -0.1).is_err());
        assert!(unify_control(f64::NAN, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn stays_in_unit_interval(t in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let u = unify_control(t, b).unwrap();
            prop_assert!((0.0..=1.0).contains(&u));
        }
    }
}
