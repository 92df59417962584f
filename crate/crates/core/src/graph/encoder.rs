//! Systematic encoding via GF(2) Gauss–Jordan elimination with column pivoting.

use super::{GraphError, ParityCheckMatrix};

#[derive(Debug, Clone)]
pub struct SystematicEncoder {
    n: usize,
    words: usize,
    /// Codeword positions carrying information bits, in information order.
    info_positions: Vec<usize>,
    /// Pivot column of each reduced row.
    parity_positions: Vec<usize>,
    /// Reduced rows restricted to information columns, packed as u64 words.
    parity_rows: Vec<Vec<u64>>,
}

impl SystematicEncoder {
    /// Reduces `h` to `[A | I]` form up to a column permutation.
    ///
    /// Rank-deficient matrices are accepted: the encoder then has
    /// `n - rank` information bits.
    pub fn new(h: &ParityCheckMatrix) -> Self {
        let n = h.n();
        let words = n.div_ceil(64);
        let mut rows: Vec<Vec<u64>> = h
            .rows()
            .iter()
            .map(|r| {
                let mut w = vec![0u64; words];
                for &j in r {
                    w[j / 64] |= 1 << (j % 64);
                }
                w
            })
            .collect();
        let mut pivots = Vec::new();
        let mut rank = 0;
        for col in 0..n {
            if rank == rows.len() {
                break;
            }
            let (word, bit) = (col / 64, 1u64 << (col % 64));
            let Some(p) = (rank..rows.len()).find(|&r| rows[r][word] & bit != 0) else {
                continue;
            };
            rows.swap(rank, p);
            let pivot_row = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row[word] & bit != 0 {
                    for (a, b) in row.iter_mut().zip(&pivot_row) {
                        *a ^= b;
                    }
                }
            }
            pivots.push(col);
            rank += 1;
        }
        rows.truncate(rank);
        if rank < h.m() {
            log::warn!(
                "parity-check matrix has rank {rank} < {} rows; encoder uses {} parity bits",
                h.m(),
                rank
            );
        }
        let mut is_pivot = vec![false; n];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let info_positions: Vec<usize> = (0..n).filter(|&j| !is_pivot[j]).collect();
        for row in rows.iter_mut() {
            for &p in &pivots {
                row[p / 64] &= !(1u64 << (p % 64));
            }
        }
        SystematicEncoder {
            n,
            words,
            info_positions,
            parity_positions: pivots,
            parity_rows: rows,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of information bits.
    pub fn k(&self) -> usize {
        self.info_positions.len()
    }

    /// GF(2) rank of the parity-check matrix.
    pub fn rank(&self) -> usize {
        self.parity_positions.len()
    }

    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>, GraphError> {
        if info.len() != self.k() {
            return Err(GraphError::LengthMismatch {
                expected: self.k(),
                got: info.len(),
            });
        }
        let mut codeword = vec![0u8; self.n];
        let mut packed = vec![0u64; self.words];
        for (&pos, &b) in self.info_positions.iter().zip(info) {
            let b = b & 1;
            codeword[pos] = b;
            packed[pos / 64] |= (b as u64) << (pos % 64);
        }
        for (row, &pos) in self.parity_rows.iter().zip(&self.parity_positions) {
            let ones: u32 = row
                .iter()
                .zip(&packed)
                .map(|(a, b)| (a & b).count_ones())
                .sum();
            codeword[pos] = (ones & 1) as u8;
        }
        Ok(codeword)
    }

    /// Reads the information bits back out of a codeword.
    pub fn extract_info(&self, codeword: &[u8]) -> Vec<u8> {
        self.info_positions.iter().map(|&p| codeword[p]).collect()
    }
}
