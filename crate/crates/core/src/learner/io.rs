//! Plain-text weight files.
//!
//! ```text
//! vehids-mlp 1 5,20,1 <seed>
//! <w1 row 0: 5 values>
//! ...
//! <w1 row 19>
//! <b1: 20 values>
//! <w2: 20 values>
//! <b2>
//! ```
//!
//! Values use the shortest decimal form that parses back to the same bits.

use std::fmt::Write as _;

use super::mlp::{MlpModel, HIDDEN_DIM, INPUT_DIM};
use super::LearnError;

const MAGIC: &str = "vehids-mlp";
const FORMAT_VERSION: u32 = 1;

fn dims() -> String {
    format!("{INPUT_DIM},{HIDDEN_DIM},1")
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

pub fn model_to_string(model: &MlpModel) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC} {FORMAT_VERSION} {} {}", dims(), model.seed);
    for row in &model.w1 {
        let _ = writeln!(s, "{}", join(row));
    }
    let _ = writeln!(s, "{}", join(&model.b1));
    let _ = writeln!(s, "{}", join(&model.w2));
    let _ = writeln!(s, "{}", model.b2);
    s
}

pub fn model_from_str(text: &str) -> Result<MlpModel, LearnError> {
    let bad = |msg: String| LearnError::Format(msg);
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty file".into()))?.split_whitespace().collect();
    if header.len() != 4 || header[0] != MAGIC {
        return Err(bad(format!("bad header {header:?}")));
    }
    if header[1] != FORMAT_VERSION.to_string() {
        return Err(bad(format!("unsupported format version {}", header[1])));
    }
    if header[2] != dims() {
        return Err(bad(format!("layer dims {} do not match {}", header[2], dims())));
    }
    let seed = header[3].parse::<u64>().map_err(|e| bad(format!("seed: {e}")))?;

    let mut row = |expect: usize, what: &str| -> Result<Vec<f64>, LearnError> {
        let line = lines.next().ok_or_else(|| bad(format!("missing {what}")))?;
        let values = line
            .split_whitespace()
            .map(|v| v.parse::<f64>().map_err(|e| bad(format!("{what}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() != expect {
            return Err(bad(format!("{what}: expected {expect} values, found {}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(bad(format!("{what}: non-finite weight")));
        }
        Ok(values)
    };

    let mut model = MlpModel::zeros();
    model.seed = seed;
    for j in 0..HIDDEN_DIM {
        model.w1[j].copy_from_slice(&row(INPUT_DIM, "w1")?);
    }
    model.b1.copy_from_slice(&row(HIDDEN_DIM, "b1")?);
    model.w2.copy_from_slice(&row(HIDDEN_DIM, "w2")?);
    model.b2 = row(1, "b2")?[0];
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn text_round_trip_is_bit_exact(seed in any::<u64>(), scale in 1e-6f64..1e6) {
            let mut m = MlpModel::init(seed);
            let mut flat = m.to_flat();
            flat.iter_mut().for_each(|w| *w *= scale);
            m.set_flat(&flat);
            let back = model_from_str(&model_to_string(&m)).unwrap();
            prop_assert_eq!(back.seed, m.seed);
            for (a, b) in back.to_flat().iter().zip(m.to_flat().iter()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn header_has_four_fields() {
        let text = model_to_string(&MlpModel::init(42));
        assert_eq!(text.lines().next().unwrap(), "vehids-mlp 1 5,20,1 42");
        assert_eq!(text.lines().count(), 1 + 20 + 3);
    }

    #[test]
    fn rejects_malformed_files() {
        let good = model_to_string(&MlpModel::init(1));
        assert!(model_from_str("").is_err());
        assert!(model_from_str(&good.replace("5,20,1", "5,10,1")).is_err());
        assert!(model_from_str(&good.replace("vehids-mlp 1", "vehids-mlp 9")).is_err());
        let truncated: String = good.lines().take(10).collect::<Vec<_>>().join("\n");
        assert!(model_from_str(&truncated).is_err());
    }
}
