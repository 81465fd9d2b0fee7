//! Matrix rank backends.
//!
//! Exact mode runs fraction-free (Bareiss) Gaussian elimination over the
//! integers after clearing row denominators; a modular-elimination fast path
//! certifies full-rank matrices without big-integer work (a nonzero minor
//! mod p is nonzero over the rationals, so the modular rank is a lower bound
//! that is conclusive when it hits `min(rows, cols)`).
//!
//! Numeric mode counts singular values above a relative tolerance.

use nalgebra::DMatrix;
use num::{BigInt, Integer, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::scalar::{Scalar, ScalarKind};
use crate::tensor::MatrixView;

/// Default relative tolerance for the numeric backend.
pub const DEFAULT_NUMERIC_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RankMode {
    Exact,
    Numeric { tolerance: f64 },
}

impl RankMode {
    pub fn numeric_default() -> Self {
        RankMode::Numeric {
            tolerance: DEFAULT_NUMERIC_TOLERANCE,
        }
    }
}

/// Rank of a matrix. Exact mode requires rational entries, numeric mode
/// requires floats; the wrong pairing is an error.
pub fn matrix_rank(m: &MatrixView, mode: RankMode) -> Result<usize> {
    match mode {
        RankMode::Exact => {
            let ints = integer_rows(m)?;
            Ok(integer_rank(ints))
        }
        RankMode::Numeric { tolerance } => {
            if m.kind() != ScalarKind::F64 {
                return Err(Error::Unsupported(
                    "numeric rank requires f64 entries".into(),
                ));
            }
            let values: Vec<f64> = m.data.iter().map(Scalar::to_f64).collect();
            let mat = DMatrix::from_row_slice(m.rows, m.cols, &values);
            let svs = mat.singular_values();
            let max = svs.iter().cloned().fold(0.0f64, f64::max);
            if max == 0.0 {
                return Ok(0);
            }
            Ok(svs.iter().filter(|&&s| s > tolerance * max).count())
        }
    }
}

/// Clear denominators row by row (rank-invariant scaling) to get integer rows.
fn integer_rows(m: &MatrixView) -> Result<Vec<Vec<BigInt>>> {
    let mut rows = Vec::with_capacity(m.rows);
    for i in 0..m.rows {
        let mut lcm = BigInt::one();
        for j in 0..m.cols {
            let r = m.at(i, j).as_rational()?;
            lcm = lcm.lcm(r.denom());
        }
        let mut row = Vec::with_capacity(m.cols);
        for j in 0..m.cols {
            let r = m.at(i, j).as_rational()?;
            row.push(r.numer() * (&lcm / r.denom()));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Divide each row and column by the gcd of its entries. Scaling rows or
/// columns by nonzero constants preserves rank and shrinks every minor.
fn strip_contents(rows: &mut [Vec<BigInt>]) {
    for row in rows.iter_mut() {
        let mut g = BigInt::zero();
        for x in row.iter() {
            g = g.gcd(x);
            if g.is_one() {
                break;
            }
        }
        if !g.is_zero() && !g.is_one() {
            for x in row.iter_mut() {
                *x = &*x / &g;
            }
        }
    }
    let ncols = rows.first().map_or(0, Vec::len);
    for j in 0..ncols {
        let mut g = BigInt::zero();
        for row in rows.iter() {
            g = g.gcd(&row[j]);
            if g.is_one() {
                break;
            }
        }
        if !g.is_zero() && !g.is_one() {
            for row in rows.iter_mut() {
                row[j] = &row[j] / &g;
            }
        }
    }
}

/// Make the leading nonzero entry of each row positive, drop zero rows, and
/// remove duplicate rows. Combined with content stripping this eliminates
/// every pair of proportional rows, none of which affect rank.
fn normalize_and_dedup_rows(rows: &mut Vec<Vec<BigInt>>) {
    for row in rows.iter_mut() {
        if let Some(first) = row.iter().find(|x| !x.is_zero()) {
            if first.is_negative() {
                for x in row.iter_mut() {
                    *x = -&*x;
                }
            }
        }
    }
    rows.retain(|row| row.iter().any(|x| !x.is_zero()));
    rows.sort_unstable();
    rows.dedup();
}

fn transpose(rows: Vec<Vec<BigInt>>) -> Vec<Vec<BigInt>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    let mut out = vec![Vec::with_capacity(nrows); ncols];
    for row in rows {
        for (j, x) in row.into_iter().enumerate() {
            out[j].push(x);
        }
    }
    out
}

/// Rank-preserving shrink: strip contents, then drop duplicate rows and
/// columns, repeating while the matrix keeps shrinking. The result may be
/// empty (rank 0) and is transposition-equivalent to the input.
fn reduce_matrix(mut rows: Vec<Vec<BigInt>>) -> Vec<Vec<BigInt>> {
    loop {
        let before = (rows.len(), rows.first().map_or(0, Vec::len));
        strip_contents(&mut rows);
        normalize_and_dedup_rows(&mut rows);
        if rows.is_empty() {
            return rows;
        }
        rows = transpose(rows);
        normalize_and_dedup_rows(&mut rows);
        if rows.is_empty() {
            return rows;
        }
        rows = transpose(rows);
        let after = (rows.len(), rows.first().map_or(0, Vec::len));
        if after == before {
            return rows;
        }
    }
}

// 61..64-bit primes for the certified full-rank shortcut
const PRIMES: [u64; 3] = [
    2_305_843_009_213_693_951,  // 2^61 - 1
    9_223_372_036_854_775_783,  // 2^63 - 25
    18_446_744_073_709_551_557, // 2^64 - 59
];

fn integer_rank(rows: Vec<Vec<BigInt>>) -> usize {
    if rows.is_empty() || rows[0].is_empty() {
        return 0;
    }
    let rows = reduce_matrix(rows);
    if rows.is_empty() {
        return 0;
    }
    let max_rank = rows.len().min(rows[0].len());
    for p in PRIMES {
        if modular_rank(&rows, p) == max_rank {
            return max_rank;
        }
    }
    bareiss_rank(rows)
}

/// Rank over GF(p); always a lower bound on the rational rank.
fn modular_rank(rows: &[Vec<BigInt>], p: u64) -> usize {
    let nrows = rows.len();
    let ncols = rows[0].len();
    let pb = BigInt::from(p);
    let mut m: Vec<Vec<u64>> = rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|x| {
                    let mut v = x % &pb;
                    if v.is_negative() {
                        v += &pb;
                    }
                    v.to_u64().expect("reduced value fits u64")
                })
                .collect()
        })
        .collect();

    let mulmod = |a: u64, b: u64| -> u64 { ((a as u128 * b as u128) % p as u128) as u64 };
    let powmod = |mut base: u64, mut exp: u64| -> u64 {
        let mut acc = 1u64;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = mulmod(acc, base);
            }
            base = mulmod(base, base);
            exp >>= 1;
        }
        acc
    };

    let mut rank = 0;
    let mut col = 0;
    while rank < nrows && col < ncols {
        let Some(pivot_row) = (rank..nrows).find(|&i| m[i][col] != 0) else {
            col += 1;
            continue;
        };
        m.swap(rank, pivot_row);
        let inv = powmod(m[rank][col], p - 2);
        for i in rank + 1..nrows {
            if m[i][col] == 0 {
                continue;
            }
            let factor = mulmod(m[i][col], inv);
            for j in col..ncols {
                let sub = mulmod(factor, m[rank][j]);
                m[i][j] = ((m[i][j] as u128 + p as u128 - sub as u128) % p as u128) as u64;
            }
        }
        rank += 1;
        col += 1;
    }
    rank
}

/// Pivots eliminated per elimination block before contents are stripped and
/// the division chain restarts; bounds intermediate minors to block-sized
/// ones.
const ELIMINATION_BLOCK: usize = 8;

/// Fraction-free elimination with full pivoting; the pivot with the fewest
/// bits is chosen to limit coefficient growth. Within a block, entries stay
/// integral (each step divides exactly by the previous pivot); between
/// blocks the remaining submatrix is extracted and its row/column contents
/// stripped, which preserves rank and resets coefficient growth.
fn bareiss_rank(mut m: Vec<Vec<BigInt>>) -> usize {
    let mut total = 0;
    loop {
        m = reduce_matrix(m);
        if m.is_empty() || m[0].is_empty() {
            return total;
        }
        let steps = bareiss_block(&mut m, ELIMINATION_BLOCK);
        total += steps;
        if steps < ELIMINATION_BLOCK {
            return total;
        }
        let nrows = m.len();
        let ncols = m[0].len();
        if steps >= nrows || steps >= ncols {
            return total;
        }
        m = m[steps..]
            .iter()
            .map(|row| row[steps..].to_vec())
            .collect();
    }
}

/// Run at most `limit` Bareiss pivot steps in place; returns the number of
/// pivots eliminated (less than `limit` only when no nonzero pivot remains).
fn bareiss_block(m: &mut [Vec<BigInt>], limit: usize) -> usize {
    let nrows = m.len();
    let ncols = m.first().map_or(0, Vec::len);
    let mut prev = BigInt::one();
    let mut rank = 0;
    while rank < limit && rank < nrows && rank < ncols {
        let mut pivot: Option<(usize, usize, u64)> = None;
        for i in rank..nrows {
            for j in rank..ncols {
                if !m[i][j].is_zero() {
                    let bits = m[i][j].bits();
                    if pivot.map_or(true, |(_, _, pb)| bits < pb) {
                        pivot = Some((i, j, bits));
                    }
                }
            }
        }
        let Some((pi, pj, _)) = pivot else {
            return rank;
        };
        m.swap(rank, pi);
        if pj != rank {
            for row in m.iter_mut() {
                row.swap(rank, pj);
            }
        }
        let (done, active) = m.split_at_mut(rank + 1);
        let pivot_row = &done[rank];
        let update_row = |row: &mut Vec<BigInt>| {
            if row[rank].is_zero() {
                // row already reduced in this column; still must rescale
                for j in rank + 1..ncols {
                    if !row[j].is_zero() {
                        let t = &pivot_row[rank] * &row[j];
                        row[j] = t / &prev;
                    }
                }
                return;
            }
            for j in rank + 1..ncols {
                let t = &pivot_row[rank] * &row[j] - &row[rank] * &pivot_row[j];
                row[j] = t / &prev;
            }
            row[rank] = BigInt::zero();
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            active.par_iter_mut().for_each(update_row);
        }
        #[cfg(not(feature = "parallel"))]
        {
            active.iter_mut().for_each(update_row);
        }
        prev = m[rank][rank].clone();
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn zero_and_identity() {
        let z = MatrixView::new(3, 3, vec![Scalar::from_int(0); 9]).unwrap();
        assert_eq!(matrix_rank(&z, RankMode::Exact).unwrap(), 0);
        let id = MatrixView::identity(4, ScalarKind::Rational);
        assert_eq!(matrix_rank(&id, RankMode::Exact).unwrap(), 4);
    }

    #[test]
    fn rank_one_example() {
        let m = MatrixView::from_rows_int(&[&[1, 2], &[2, 4]]).unwrap();
        assert_eq!(matrix_rank(&m, RankMode::Exact).unwrap(), 1);
    }

    #[test]
    fn rational_entries_are_cleared_per_row() {
        let m = MatrixView::new(
            2,
            2,
            vec![
                Scalar::rational(1, 2).unwrap(),
                Scalar::rational(1, 3).unwrap(),
                Scalar::rational(3, 2).unwrap(),
                Scalar::rational(1, 1).unwrap(),
            ],
        )
        .unwrap();
        // det = 1/2 - 1/2 = 0 -> rank 1
        assert_eq!(matrix_rank(&m, RankMode::Exact).unwrap(), 1);
    }

    #[test]
    fn exact_mode_rejects_floats() {
        let m = MatrixView::new(1, 1, vec![Scalar::F64(1.0)]).unwrap();
        assert!(matrix_rank(&m, RankMode::Exact).is_err());
        let r = MatrixView::from_rows_int(&[&[1]]).unwrap();
        assert!(matrix_rank(&r, RankMode::numeric_default()).is_err());
    }

    #[test]
    fn bareiss_agrees_with_modular_certificate() {
        // random low-rank products A = B*C with B (8x3), C (3x8): rank <= 3
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..10 {
            let b: Vec<Vec<i64>> = (0..8)
                .map(|_| (0..3).map(|_| rng.gen_range(-4..=4)).collect())
                .collect();
            let c: Vec<Vec<i64>> = (0..3)
                .map(|_| (0..8).map(|_| rng.gen_range(-4..=4)).collect())
                .collect();
            let mut rows = Vec::new();
            for i in 0..8 {
                let mut row = Vec::new();
                for j in 0..8 {
                    let mut acc = 0i64;
                    for k in 0..3 {
                        acc += b[i][k] * c[k][j];
                    }
                    row.push(BigInt::from(acc));
                }
                rows.push(row);
            }
            let exact = bareiss_rank(rows.clone());
            assert!(exact <= 3);
            for p in [2_305_843_009_213_693_951u64, 9_223_372_036_854_775_783] {
                assert!(modular_rank(&rows, p) <= exact);
            }
        }
    }

    #[test]
    fn numeric_matches_exact_on_random_integer_matrices() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for trial in 0..8 {
            let n = 4 + (trial % 4) * 4; // up to 16 here; the 32x32 case is a property test
            let vals: Vec<i64> = (0..n * n).map(|_| rng.gen_range(-9..=9)).collect();
            let exact_m = MatrixView::new(
                n,
                n,
                vals.iter().map(|&v| Scalar::from_int(v)).collect(),
            )
            .unwrap();
            let float_m =
                MatrixView::new(n, n, vals.iter().map(|&v| Scalar::F64(v as f64)).collect())
                    .unwrap();
            let re = matrix_rank(&exact_m, RankMode::Exact).unwrap();
            let rn = matrix_rank(&float_m, RankMode::Numeric { tolerance: 1e-9 }).unwrap();
            assert_eq!(re, rn);
        }
    }
}
