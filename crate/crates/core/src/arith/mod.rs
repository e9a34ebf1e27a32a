//! Exact rational arithmetic and the small amount of linear algebra the
//! rest of the crate needs: dense rational matrices, square solves,
//! determinants, an exact simplex method and cone membership.
//!
//! Nothing in here touches floating point.

mod simplex;

pub use simplex::{cone_member, simplex_solve, LpResult, LpStatus, Sense};

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;
pub type RatVector = Vec<Rational>;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_vec(values: &[i64]) -> RatVector {
    values.iter().map(|&v| rat(v)).collect()
}

/// Parses `"n"` or `"n/d"` into a normalized rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let text = text.trim();
    let parse_int = |s: &str| {
        s.trim()
            .parse::<BigInt>()
            .map_err(|_| Error::Parse(format!("not an integer: {s:?}")))
    };
    match text.split_once('/') {
        None => Ok(Rational::from_integer(parse_int(text)?)),
        Some((n, d)) => {
            let den = parse_int(d)?;
            if den.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {text:?}")));
            }
            Ok(Rational::new(parse_int(n)?, den))
        }
    }
}

/// `"n"` for integers, `"n/d"` otherwise.
pub fn format_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn max_abs(v: &[Rational]) -> Rational {
    v.iter().map(|x| x.abs()).max().unwrap_or_else(Rational::zero)
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

/// Dense row-major rational matrix.
#[derive(Clone, PartialEq, Eq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    /// Builds a matrix from rows; `cols` is needed so that a matrix with
    /// zero rows still knows its width.
    pub fn from_rows(rows: Vec<Vec<Rational>>, cols: usize) -> Result<Self> {
        let nrows = rows.len();
        let mut data = Vec::with_capacity(nrows * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::dim("matrix row", cols, row.len()));
            }
            data.extend(row);
        }
        Ok(RatMatrix {
            rows: nrows,
            cols,
            data,
        })
    }

    pub fn from_i64_rows(rows: &[Vec<i64>], cols: usize) -> Result<Self> {
        Self::from_rows(rows.iter().map(|r| rat_vec(r)).collect(), cols)
    }

    /// Matrix whose columns are the given integer vectors.
    pub fn from_i64_columns(columns: &[Vec<i64>], dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim, columns.len());
        for (j, col) in columns.iter().enumerate() {
            if col.len() != dim {
                return Err(Error::dim("matrix column", dim, col.len()));
            }
            for (i, &v) in col.iter().enumerate() {
                m[(i, j)] = rat(v);
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> RatVector {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn mul_vec(&self, x: &[Rational]) -> Result<RatVector> {
        if x.len() != self.cols {
            return Err(Error::dim("matrix-vector product", self.cols, x.len()));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }
}

impl std::ops::Index<(usize, usize)> for RatMatrix {
    type Output = Rational;

    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RatMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> = (0..self.rows)
            .map(|i| self.row(i).iter().map(format_rational).collect())
            .collect();
        f.debug_struct("RatMatrix")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("data", &rows)
            .finish()
    }
}

/// Exact determinant by Gaussian elimination over the rationals.
pub fn determinant(m: &RatMatrix) -> Result<Rational> {
    if m.rows != m.cols {
        return Err(Error::dim("determinant", m.rows, m.cols));
    }
    let n = m.rows;
    let mut a = m.clone();
    let mut det = Rational::one();
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| !a[(i, k)].is_zero()) else {
            return Ok(Rational::zero());
        };
        if p != k {
            swap_rows(&mut a, p, k);
            det = -det;
        }
        let pivot = a[(k, k)].clone();
        det *= &pivot;
        for i in k + 1..n {
            if a[(i, k)].is_zero() {
                continue;
            }
            let f = &a[(i, k)] / &pivot;
            for j in k..n {
                let delta = &f * &a[(k, j)];
                a[(i, j)] -= delta;
            }
        }
    }
    Ok(det)
}

/// Solves `B x = rhs` for square `B`. Returns `Ok(None)` when `B` is singular.
pub fn solve_square(b: &RatMatrix, rhs: &[Rational]) -> Result<Option<RatVector>> {
    if b.rows != b.cols {
        return Err(Error::dim("solve_square (columns)", b.rows, b.cols));
    }
    if rhs.len() != b.rows {
        return Err(Error::dim("solve_square (rhs)", b.rows, rhs.len()));
    }
    let n = b.rows;
    let mut a = b.clone();
    let mut x: RatVector = rhs.to_vec();
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| !a[(i, k)].is_zero()) else {
            return Ok(None);
        };
        if p != k {
            swap_rows(&mut a, p, k);
            x.swap(p, k);
        }
        let inv = a[(k, k)].recip();
        for j in k..n {
            a[(k, j)] *= &inv;
        }
        x[k] *= &inv;
        for i in 0..n {
            if i == k || a[(i, k)].is_zero() {
                continue;
            }
            let f = a[(i, k)].clone();
            for j in k..n {
                let delta = &f * &a[(k, j)];
                a[(i, j)] -= delta;
            }
            let delta = &f * &x[k];
            x[i] -= delta;
        }
    }
    Ok(Some(x))
}

/// Inverse of a square matrix, or `None` when singular.
pub fn inverse(m: &RatMatrix) -> Result<Option<RatMatrix>> {
    let n = m.rows;
    let mut inv = RatMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![Rational::zero(); n];
        e[j] = Rational::one();
        let Some(col) = solve_square(m, &e)? else {
            return Ok(None);
        };
        for (i, v) in col.into_iter().enumerate() {
            inv[(i, j)] = v;
        }
    }
    Ok(Some(inv))
}

/// Rank of a rational matrix.
pub fn rank(m: &RatMatrix) -> usize {
    let mut a = m.clone();
    let mut r = 0;
    for col in 0..a.cols {
        let Some(p) = (r..a.rows).find(|&i| !a[(i, col)].is_zero()) else {
            continue;
        };
        swap_rows(&mut a, p, r);
        let pivot = a[(r, col)].clone();
        for i in r + 1..a.rows {
            if a[(i, col)].is_zero() {
                continue;
            }
            let f = &a[(i, col)] / &pivot;
            for j in col..a.cols {
                let delta = &f * &a[(r, j)];
                a[(i, j)] -= delta;
            }
        }
        r += 1;
        if r == a.rows {
            break;
        }
    }
    r
}

fn swap_rows(a: &mut RatMatrix, p: usize, q: usize) {
    if p == q {
        return;
    }
    for j in 0..a.cols {
        a.data.swap(p * a.cols + j, q * a.cols + j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_square_examples() {
        let b = RatMatrix::from_i64_rows(&[vec![1, 2], vec![0, 1]], 2).unwrap();
        assert_eq!(solve_square(&b, &rat_vec(&[3, 1])).unwrap(), Some(rat_vec(&[1, 1])));

        let id = RatMatrix::identity(3);
        assert_eq!(
            solve_square(&id, &rat_vec(&[4, 5, 6])).unwrap(),
            Some(rat_vec(&[4, 5, 6]))
        );

        let sing = RatMatrix::from_i64_rows(&[vec![1, 1], vec![1, 1]], 2).unwrap();
        assert_eq!(solve_square(&sing, &rat_vec(&[1, 0])).unwrap(), None);
    }

    #[test]
    fn solve_square_rejects_bad_dimensions() {
        let b = RatMatrix::from_i64_rows(&[vec![1, 2, 3], vec![0, 1, 0]], 3).unwrap();
        assert!(matches!(
            solve_square(&b, &rat_vec(&[1, 1])),
            Err(Error::Dimension { .. })
        ));
        let sq = RatMatrix::identity(2);
        assert!(solve_square(&sq, &rat_vec(&[1])).is_err());
    }

    #[test]
    fn determinant_and_rank() {
        let m = RatMatrix::from_i64_rows(&[vec![2, 1], vec![1, 3]], 2).unwrap();
        assert_eq!(determinant(&m).unwrap(), rat(5));
        let s = RatMatrix::from_i64_rows(&[vec![1, 2], vec![2, 4]], 2).unwrap();
        assert_eq!(determinant(&s).unwrap(), rat(0));
        assert_eq!(rank(&s), 1);
        assert_eq!(rank(&RatMatrix::identity(4)), 4);
        assert_eq!(rank(&RatMatrix::zeros(2, 3)), 0);
    }

    #[test]
    fn rational_text_round_trip() {
        assert_eq!(parse_rational("6/4").unwrap(), ratio(3, 2));
        assert_eq!(parse_rational("-7").unwrap(), rat(-7));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("1.5").is_err());
        assert_eq!(format_rational(&ratio(-3, 6)), "-1/2");
        assert_eq!(format_rational(&rat(4)), "4");
    }
}
