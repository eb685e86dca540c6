//! Exact integer Hadamard algebra.
//!
//! Everything downstream — encoding, decoding, grouping, partial decoding —
//! rests on the identities in this module, so they are kept in integer
//! arithmetic and asserted exactly. The mathematical API surface uses
//! 1-based indices to match the usual matrix notation.

use ndarray::Array2;
use thiserror::Error;

/// Largest supported rank. Desk-scale experiments never get close.
pub const MAX_RANK: usize = 1024;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HadamardError {
    #[error("invalid Hadamard rank {0}: must be a power of two in 1..={MAX_RANK}")]
    InvalidRank(usize),
    #[error("invalid grouping: {n_total} transmits cannot be split into {n_groups} groups of {group_size}")]
    InvalidGrouping {
        n_total: usize,
        n_groups: usize,
        group_size: usize,
    },
}

/// Square ±1 matrix of power-of-two rank built by the Sylvester recursion.
///
/// Invariants held by construction: every entry is +1 or −1, `H·Hᵀ = n·I`
/// exactly, and the Sylvester ordering is symmetric (`H = Hᵀ`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HadamardMatrix {
    rank: usize,
    entries: Array2<i32>,
}

impl HadamardMatrix {
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Entry at 1-based (row, col).
    pub fn entry(&self, row: usize, col: usize) -> i32 {
        self.entries[[row - 1, col - 1]]
    }

    pub fn entries(&self) -> &Array2<i32> {
        &self.entries
    }

    pub fn transpose(&self) -> HadamardMatrix {
        HadamardMatrix {
            rank: self.rank,
            entries: self.entries.t().to_owned(),
        }
    }
}

/// Sylvester construction: `H₂ = [[1,1],[1,−1]]`, doubling by `H₂ ⊗ H`.
///
/// `n` must be a power of two, `1 ≤ n ≤ 1024`.
pub fn sylvester(n: usize) -> Result<HadamardMatrix, HadamardError> {
    if n == 0 || !n.is_power_of_two() || n > MAX_RANK {
        return Err(HadamardError::InvalidRank(n));
    }
    let mut entries = Array2::<i32>::zeros((n, n));
    entries[[0, 0]] = 1;
    let mut m = 1;
    while m < n {
        // [[H, H], [H, -H]]
        for r in 0..m {
            for c in 0..m {
                let v = entries[[r, c]];
                entries[[r, c + m]] = v;
                entries[[r + m, c]] = v;
                entries[[r + m, c + m]] = -v;
            }
        }
        m *= 2;
    }
    Ok(HadamardMatrix { rank: n, entries })
}

/// Returns `(1/n, Hᵀ)` as `(denominator, matrix)` so that `(1/n)·Hᵀ·H = I`.
pub fn inverse_scale(h: &HadamardMatrix) -> (usize, HadamardMatrix) {
    (h.rank, h.transpose())
}

/// Splits a 1-based flat index into 1-based (group, within-group) indices
/// with `flat = within + group_size·(group − 1)`.
pub fn index_split(flat: usize, group_size: usize) -> (usize, usize) {
    debug_assert!(flat >= 1 && group_size >= 1);
    let group = (flat - 1) / group_size + 1;
    let within = (flat - 1) % group_size + 1;
    (group, within)
}

/// Kronecker-factored entry of the rank `S·Q` Sylvester matrix.
///
/// With `(l, v) = index_split(i, Q)` and `(s, q) = index_split(e, Q)` this
/// returns `h⁽ˢ⁾_{s,l}·h⁽Q⁾_{q,v}`, which equals `sylvester(S·Q)[i, e]`.
pub fn kron_entry(
    s_rank: usize,
    q_rank: usize,
    i: usize,
    e: usize,
) -> Result<i32, HadamardError> {
    let h_s = sylvester(s_rank)?;
    let h_q = sylvester(q_rank)?;
    let n = s_rank * q_rank;
    assert!(i >= 1 && i <= n && e >= 1 && e <= n, "index out of range");
    let (l, v) = index_split(i, q_rank);
    let (s, q) = index_split(e, q_rank);
    Ok(h_s.entry(s, l) * h_q.entry(q, v))
}

/// Sequential split of `n_total` transmit events into `n_groups` groups of
/// `group_size`; all three must be powers of two with
/// `n_total = n_groups·group_size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupingScheme {
    pub n_total: usize,
    pub n_groups: usize,
    pub group_size: usize,
}

impl GroupingScheme {
    pub fn new(n_total: usize, n_groups: usize) -> Result<Self, HadamardError> {
        if n_groups == 0 || n_total % n_groups != 0 {
            return Err(HadamardError::InvalidGrouping {
                n_total,
                n_groups,
                group_size: 0,
            });
        }
        let group_size = n_total / n_groups;
        let ok = [n_total, n_groups, group_size]
            .iter()
            .all(|&x| x >= 1 && x.is_power_of_two() && x <= MAX_RANK);
        if !ok {
            return Err(HadamardError::InvalidGrouping {
                n_total,
                n_groups,
                group_size,
            });
        }
        Ok(GroupingScheme {
            n_total,
            n_groups,
            group_size,
        })
    }

    /// 1-based flat event index for the `q`'th event of group `s`.
    pub fn flat_index(&self, group: usize, within: usize) -> usize {
        within + self.group_size * (group - 1)
    }
}
