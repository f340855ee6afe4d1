use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square count matrix, rows = actual class, columns = predicted class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn from_pairs(actual: &[usize], predicted: &[usize], k: usize) -> Self {
        let mut cm = ConfusionMatrix::new(k);
        for (a, p) in actual.iter().zip(predicted) {
            cm.add(*a, *p);
        }
        cm
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn add(&mut self, actual: usize, predicted: usize) {
        self.counts[actual][predicted] += 1;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.k()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        let t = self.total();
        if t == 0 {
            0.0
        } else {
            self.correct() as f64 / t as f64
        }
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        (0..self.k()).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kappa {
    pub value: f64,
    /// Chance agreement was 1, so kappa is undefined and reported as 0.
    pub degenerate: bool,
}

/// Cohen's kappa: (p_o − p_e) / (1 − p_e).
pub fn cohen_kappa(cm: &ConfusionMatrix) -> Result<Kappa> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::insufficient("kappa of an empty confusion matrix"));
    }
    let t = total as f64;
    let p_o = cm.correct() as f64 / t;
    let p_e: f64 = cm
        .row_totals()
        .iter()
        .zip(cm.col_totals())
        .map(|(r, c)| (*r as f64) * (c as f64))
        .sum::<f64>()
        / (t * t);
    if (1.0 - p_e).abs() < 1e-15 {
        return Ok(Kappa {
            value: 0.0,
            degenerate: true,
        });
    }
    Ok(Kappa {
        value: (p_o - p_e) / (1.0 - p_e),
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_kappa() {
        let cm = ConfusionMatrix {
            counts: vec![vec![2, 1], vec![1, 2]],
        };
        let k = cohen_kappa(&cm).unwrap();
        assert!((k.value - 1.0 / 3.0).abs() < 1e-15);
        assert!((cm.accuracy() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_and_degenerate() {
        let cm = ConfusionMatrix::from_pairs(&[0, 1, 2, 2], &[0, 1, 2, 2], 3);
        assert_eq!(cohen_kappa(&cm).unwrap().value, 1.0);
        let one = ConfusionMatrix::from_pairs(&[1, 1], &[1, 1], 3);
        let k = cohen_kappa(&one).unwrap();
        assert!(k.degenerate && k.value == 0.0);
        assert!(cohen_kappa(&ConfusionMatrix::new(3)).is_err());
    }
}
