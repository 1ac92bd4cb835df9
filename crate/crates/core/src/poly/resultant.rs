//! Sylvester resultants via fraction-free (Bareiss) elimination.

use super::{exact_div, PolyError, Polynomial};

/// Sylvester matrix of `p` and `q` with respect to `var`. Rows are the shifted
/// coefficient vectors (highest power first) of `p` (`deg q` rows) then of `q` (`deg p` rows).
pub fn sylvester_matrix(p: &Polynomial, q: &Polynomial, var: usize) -> Result<Vec<Vec<Polynomial>>, PolyError> {
    if p.nvars() != q.nvars() {
        return Err(PolyError::NvarsMismatch { left: p.nvars(), right: q.nvars() });
    }
    if var >= p.nvars() {
        return Err(PolyError::VarOutOfRange { index: var, nvars: p.nvars() });
    }
    let m = p.degree_in(var).or_zero() as usize;
    let n = q.degree_in(var).or_zero() as usize;
    if m == 0 || n == 0 {
        return Err(PolyError::DegreeZero { var });
    }
    let size = m + n;
    let zero = Polynomial::zero(p.nvars());
    let mut rows = Vec::with_capacity(size);
    let pc: Vec<Polynomial> = p.to_univariate(var).into_iter().rev().collect();
    let qc: Vec<Polynomial> = q.to_univariate(var).into_iter().rev().collect();
    for shift in 0..n {
        let mut row = vec![zero.clone(); size];
        for (k, c) in pc.iter().enumerate() {
            row[shift + k] = c.clone();
        }
        rows.push(row);
    }
    for shift in 0..m {
        let mut row = vec![zero.clone(); size];
        for (k, c) in qc.iter().enumerate() {
            row[shift + k] = c.clone();
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Resultant of `p` and `q` with respect to `var`, as a polynomial in the same
/// variable space that no longer involves `var`.
pub fn resultant(p: &Polynomial, q: &Polynomial, var: usize) -> Result<Polynomial, PolyError> {
    let m = sylvester_matrix(p, q, var)?;
    Ok(bareiss_det(m))
}

/// Determinant by Bareiss fraction-free elimination with row pivoting.
pub(crate) fn bareiss_det(mut m: Vec<Vec<Polynomial>>) -> Polynomial {
    let size = m.len();
    let nv = m[0][0].nvars();
    let mut prev = Polynomial::one(nv);
    let mut negate = false;
    for k in 0..size.saturating_sub(1) {
        if m[k][k].is_zero() {
            // Prefer the sparsest usable pivot.
            let pivot = (k + 1..size).filter(|&i| !m[i][k].is_zero()).min_by_key(|&i| m[i][k].num_terms());
            match pivot {
                Some(i) => {
                    m.swap(k, i);
                    negate = !negate;
                }
                None => return Polynomial::zero(nv),
            }
        }
        for i in k + 1..size {
            for j in k + 1..size {
                let num = &(&m[k][k] * &m[i][j]) - &(&m[i][k] * &m[k][j]);
                m[i][j] = exact_div(&num, &prev).expect("Bareiss quotient is exact");
            }
            m[i][k] = Polynomial::zero(nv);
        }
        prev = m[k][k].clone();
    }
    let det = m[size - 1][size - 1].clone();
    if negate {
        -det
    } else {
        det
    }
}
