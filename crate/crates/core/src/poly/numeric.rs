//! Double-precision evaluation of exact polynomials.

use super::{rational_to_f64, Polynomial};

/// A [`Polynomial`] with coefficients rounded to `f64`, for the numeric hot paths.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericPoly {
    nvars: usize,
    terms: Vec<(Vec<u32>, f64)>,
    max_exp: Vec<u32>,
}

impl NumericPoly {
    pub fn new(p: &Polynomial) -> Self {
        let nvars = p.nvars();
        let mut max_exp = vec![0; nvars];
        let terms: Vec<(Vec<u32>, f64)> = p
            .terms()
            .map(|(e, c)| {
                for (m, &k) in max_exp.iter_mut().zip(e) {
                    *m = (*m).max(k);
                }
                (e.clone(), rational_to_f64(c))
            })
            .collect();
        NumericPoly { nvars, terms, max_exp }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Evaluates using per-variable power tables, so each term costs `nvars` multiplications.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nvars);
        let powers = self.power_table(x);
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().enumerate().map(|(i, &k)| powers[i][k as usize]).product::<f64>())
            .sum()
    }

    /// Sum of absolute term values at `x`.
    pub fn abs_term_sum(&self, x: &[f64]) -> f64 {
        let powers = self.power_table(x);
        self.terms
            .iter()
            .map(|(e, c)| (c * e.iter().enumerate().map(|(i, &k)| powers[i][k as usize]).product::<f64>()).abs())
            .sum()
    }

    fn power_table(&self, x: &[f64]) -> Vec<Vec<f64>> {
        x.iter()
            .zip(&self.max_exp)
            .map(|(&xi, &m)| {
                let mut row = Vec::with_capacity(m as usize + 1);
                let mut acc = 1.0;
                row.push(acc);
                for _ in 0..m {
                    acc *= xi;
                    row.push(acc);
                }
                row
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse;

    #[test]
    fn agrees_with_exact_path() {
        let p = parse("3/2*x^3*y - y^2 + 7", &["x", "y"]).unwrap();
        let n = NumericPoly::new(&p);
        for &(a, b) in &[(0.5, -1.25), (2.0, 3.0), (-1.5, 0.0)] {
            assert!((n.eval(&[a, b]) - p.eval_f64(&[a, b])).abs() < 1e-12);
        }
        assert!(NumericPoly::new(&Polynomial::zero(2)).eval(&[1.0, 2.0]) == 0.0);
    }
}
