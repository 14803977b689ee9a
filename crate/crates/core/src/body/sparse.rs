use crate::error::{Error, Result};

/// Compressed sparse rows of nonnegative weights.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseRows {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    ncols: usize,
}

impl SparseRows {
    /// Builds from `(row, col, value)` triplets. Duplicates are summed, zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::InvalidArgument(format!(
                    "triplet ({r}, {c}) outside {nrows}x{ncols}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("triplet ({r}, {c}) is not finite")));
            }
            t.push((r, c, v));
        }
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut offsets = Vec::with_capacity(nrows + 1);
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        offsets.push(0);
        let mut k = 0;
        for r in 0..nrows {
            while k < t.len() && t[k].0 == r {
                let c = t[k].1;
                let mut v = 0.0;
                while k < t.len() && t[k].0 == r && t[k].1 == c {
                    v += t[k].2;
                    k += 1;
                }
                if v != 0.0 {
                    cols.push(c);
                    vals.push(v);
                }
            }
            offsets.push(cols.len());
        }
        Ok(SparseRows {
            offsets,
            cols,
            vals,
            ncols,
        })
    }

    pub fn from_dense(rows: &[Vec<f64>], ncols: usize) -> Result<Self> {
        let mut t = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(Error::dim("dense row length", ncols, row.len()));
            }
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    t.push((r, c, v));
                }
            }
        }
        Self::from_triplets(rows.len(), ncols, &t)
    }

    pub fn nrows(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.offsets[r], self.offsets[r + 1]);
        self.cols[s..e].iter().copied().zip(self.vals[s..e].iter().copied())
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.offsets[r + 1] - self.offsets[r]
    }

    pub fn row_sum(&self, r: usize) -> f64 {
        self.row(r).map(|(_, v)| v).sum()
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.nrows())
            .flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v)))
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.nrows())
            .map(|r| {
                let mut row = vec![0.0; self.ncols];
                for (c, v) in self.row(r) {
                    row[c] = v;
                }
                row
            })
            .collect()
    }

    /// Checks every row is nonnegative and sums to 1 within `tol`; returns the first offender.
    pub fn check_stochastic(&self, tol: f64) -> Result<(), (usize, String)> {
        for r in 0..self.nrows() {
            if let Some((c, v)) = self.row(r).find(|&(_, v)| v < 0.0) {
                return Err((r, format!("negative weight {v} at column {c}")));
            }
            let s = self.row_sum(r);
            if (s - 1.0).abs() > tol {
                return Err((r, format!("row sums to {s}")));
            }
        }
        Ok(())
    }
}
