//! Latent semantic indexing over Morton count vectors.
//!
//! Each structure is a "document" and each occupied Morton index a "term".
//! Terms live in a sorted dictionary, never on a dense `2^(4·bits)` axis,
//! so every stage costs time proportional to the number of non-zeros.

mod svd;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::descriptors::DescriptorVariant;
use crate::morton::SparseVector;

pub use svd::{truncated_svd_op, LinearOperator, SvdOptions, SvdResult};

/// Default cut-off on the normalized singular-value gradient.
pub const DEFAULT_K_THRESHOLD: f64 = -0.001;

/// Number of leading singular values inspected when `k` is chosen automatically.
pub const DEFAULT_K_SCAN: usize = 50;

pub const LSI_MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LsiError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("vector {index} has {found} bits, expected {expected}")]
    LengthMismatch { index: usize, expected: u32, found: u32 },
    #[error("k = {k} is outside 1..={max}")]
    KTooLarge { k: usize, max: usize },
    #[error("truncated SVD did not converge after {steps} Lanczos steps (relative residual {residual:e})")]
    ConvergenceFailure { steps: usize, residual: f64 },
    #[error("select_k needs at least two singular values")]
    TooFewValues,
}

/// Sparse terms × documents matrix, stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct CountsMatrix {
    bits: u32,
    terms: Vec<u64>,
    columns: Vec<Vec<(usize, f64)>>,
}

impl CountsMatrix {
    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn n_docs(&self) -> usize {
        self.columns.len()
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    /// Morton index of each row, ascending.
    pub fn terms(&self) -> &[u64] {
        &self.terms
    }

    pub fn row_of(&self, morton_index: u64) -> Option<usize> {
        self.terms.binary_search(&morton_index).ok()
    }

    /// Stored `(row, value)` pairs of document `j`, ascending by row.
    pub fn column(&self, j: usize) -> &[(usize, f64)] {
        &self.columns[j]
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.columns.iter().enumerate().flat_map(|(j, col)| col.iter().map(move |&(i, v)| (i, j, v)))
    }

    /// Number of documents in which each term occurs.
    pub fn doc_frequency(&self) -> Vec<usize> {
        let mut df = vec![0usize; self.n_terms()];
        for col in &self.columns {
            for &(i, v) in col {
                if v != 0.0 {
                    df[i] += 1;
                }
            }
        }
        df
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n_terms(), self.n_docs());
        for (i, j, v) in self.triplets() {
            d[(i, j)] = v;
        }
        d
    }
}

impl LinearOperator for CountsMatrix {
    fn nrows(&self) -> usize {
        self.n_terms()
    }

    fn ncols(&self) -> usize {
        self.n_docs()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_terms()];
        for (col, &xj) in self.columns.iter().zip(x) {
            for &(i, v) in col {
                y[i] += v * xj;
            }
        }
        y
    }

    fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        self.columns.iter().map(|col| col.iter().map(|&(i, v)| v * y[i]).sum()).collect()
    }

    fn frobenius_norm(&self) -> f64 {
        self.triplets().map(|(_, _, v)| v * v).sum::<f64>().sqrt()
    }
}

/// Assembles the counts matrix; rows are the union of occupied indices.
pub fn build_counts(vectors: &[SparseVector]) -> Result<CountsMatrix, LsiError> {
    let first = vectors.first().ok_or(LsiError::EmptyDataset)?;
    for (index, v) in vectors.iter().enumerate() {
        if v.bits != first.bits {
            return Err(LsiError::LengthMismatch { index, expected: first.bits, found: v.bits });
        }
    }
    let mut terms: Vec<u64> = vectors.iter().flat_map(|v| v.entries().iter().map(|&(i, _)| i)).collect();
    terms.sort_unstable();
    terms.dedup();

    let columns = vectors
        .iter()
        .map(|v| {
            v.entries()
                .iter()
                .map(|&(idx, count)| {
                    let row = terms.binary_search(&idx).expect("term collected above");
                    (row, f64::from(count))
                })
                .collect()
        })
        .collect();
    Ok(CountsMatrix { bits: first.bits, terms, columns })
}

/// `ln(D / D_i)` per term.
pub fn idf_weights(a: &CountsMatrix) -> Vec<f64> {
    let d = a.n_docs() as f64;
    a.doc_frequency().into_iter().map(|df| if df == 0 { 0.0 } else { (d / df as f64).ln() }).collect()
}

fn weight_column(col: &[(usize, f64)], total: f64, idf: &[f64]) -> Vec<(usize, f64)> {
    col.iter()
        .filter_map(|&(i, v)| {
            let w = v / total * idf[i];
            (w != 0.0).then_some((i, w))
        })
        .collect()
}

/// `A'_{ij} = A_{ij} / Σ_i A_{ij} · ln(D / D_i)`. Zero weights are dropped,
/// so the output never has more non-zeros than the input.
pub fn tfidf(a: &CountsMatrix) -> CountsMatrix {
    let idf = idf_weights(a);
    let columns = a
        .columns
        .iter()
        .map(|col| {
            let total: f64 = col.iter().map(|&(_, v)| v).sum();
            weight_column(col, total, &idf)
        })
        .collect();
    CountsMatrix { bits: a.bits, terms: a.terms.clone(), columns }
}

pub fn truncated_svd(a: &CountsMatrix, k: usize) -> Result<SvdResult, LsiError> {
    truncated_svd_op(a, k, &SvdOptions::default())
}

pub fn truncated_svd_with(a: &CountsMatrix, k: usize, opts: &SvdOptions) -> Result<SvdResult, LsiError> {
    truncated_svd_op(a, k, opts)
}

/// Forward-difference gradient of the σ₁-normalized spectrum.
pub fn normalized_gradient(s: &[f64]) -> Vec<f64> {
    let top = s.first().copied().unwrap_or(0.0);
    if top.is_nan() || top <= 0.0 {
        return vec![0.0; s.len().saturating_sub(1)];
    }
    s.windows(2).map(|w| w[1] / top - w[0] / top).collect()
}

/// Number of dimensions to keep: one more than the last (1-based) position
/// at which the normalized spectrum still drops by more than `threshold`
/// per step; 1 if it never does.
pub fn select_k(s: &[f64], threshold: f64) -> Result<usize, LsiError> {
    if s.len() < 2 {
        return Err(LsiError::TooFewValues);
    }
    let grad = normalized_gradient(s);
    Ok(grad.iter().rposition(|&g| g <= threshold).map_or(1, |i| i + 2))
}

/// Reduced representation `S·Vt` (k × n).
pub fn reduce(svd: &SvdResult) -> DMatrix<f64> {
    let mut out = svd.vt.clone();
    for (i, s) in svd.s.iter().enumerate() {
        out.row_mut(i).scale_mut(*s);
    }
    out
}

/// `Uᵀ v` for a TF-IDF weighted column expressed in training rows.
pub fn project_new(svd: &SvdResult, column: &[(usize, f64)]) -> Vec<f64> {
    (0..svd.k()).map(|c| column.iter().map(|&(row, w)| svd.u[(row, c)] * w).sum()).collect()
}

/// How the retained rank is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KChoice {
    Fixed(usize),
    /// Gradient rule over up to `scan` leading singular values.
    Auto {
        threshold: f64,
        scan: usize,
    },
}

/// Fitted LSI transform: term dictionary, IDF weights and the leading left
/// singular vectors. Serializes to JSON with `U` stored column by column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsiModel {
    pub format_version: u32,
    pub bits: u32,
    pub descriptor: DescriptorVariant,
    pub terms: Vec<u64>,
    pub idf: Vec<f64>,
    pub k: usize,
    pub singular_values: Vec<f64>,
    /// `k` columns of length `terms.len()`.
    pub u: Vec<Vec<f64>>,
}

/// Result of fitting: the model, the training features and the spectrum
/// that was inspected.
#[derive(Debug, Clone)]
pub struct LsiFit {
    pub model: LsiModel,
    /// `k × n_train`, equal to `S·Vt`.
    pub features: DMatrix<f64>,
    pub spectrum: Vec<f64>,
}

impl LsiModel {
    pub fn fit(
        vectors: &[SparseVector],
        descriptor: DescriptorVariant,
        choice: KChoice,
        opts: &SvdOptions,
    ) -> Result<LsiFit, LsiError> {
        let counts = build_counts(vectors)?;
        let idf = idf_weights(&counts);
        let weighted = tfidf(&counts);
        let kmax = weighted.n_terms().min(weighted.n_docs());

        let (svd, spectrum) = match choice {
            KChoice::Fixed(k) => {
                let svd = truncated_svd_op(&weighted, k, opts)?;
                let spectrum = svd.s.clone();
                (svd, spectrum)
            }
            KChoice::Auto { threshold, scan } => {
                let scan = scan.min(kmax);
                let full = truncated_svd_op(&weighted, scan, opts)?;
                let k = if scan >= 2 { select_k(&full.s, threshold)? } else { 1 };
                (full.truncate(k), full.s)
            }
        };

        let features = reduce(&svd);
        let model = LsiModel {
            format_version: LSI_MODEL_VERSION,
            bits: counts.bits,
            descriptor,
            terms: counts.terms.clone(),
            idf,
            k: svd.k(),
            singular_values: svd.s.clone(),
            u: (0..svd.k()).map(|c| svd.u.column(c).iter().copied().collect()).collect(),
        };
        Ok(LsiFit { model, features, spectrum })
    }

    /// TF-IDF weights of a new document in training rows. The term-frequency
    /// denominator is the document's full count; unseen terms are dropped.
    pub fn weight(&self, v: &SparseVector) -> Vec<(usize, f64)> {
        let total = v.total() as f64;
        if total == 0.0 {
            return Vec::new();
        }
        v.entries()
            .iter()
            .filter_map(|&(idx, count)| {
                let row = self.terms.binary_search(&idx).ok()?;
                let w = f64::from(count) / total * self.idf[row];
                (w != 0.0).then_some((row, w))
            })
            .collect()
    }

    /// Reduced features of a new document, `Uᵀ v'`.
    pub fn transform(&self, v: &SparseVector) -> Vec<f64> {
        let col = self.weight(v);
        self.u.iter().map(|u_c| col.iter().map(|&(row, w)| u_c[row] * w).sum()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sv(pairs: &[(u64, u32)]) -> SparseVector {
        SparseVector::from_pairs(4, pairs.iter().copied()).unwrap()
    }

    fn random_vectors(seed: u64, n: usize, bits: u32, max_idx: u64) -> Vec<SparseVector> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let nnz = rng.gen_range(1..12);
                SparseVector::from_pairs(bits, (0..nnz).map(|_| (rng.gen_range(0..max_idx), rng.gen_range(1..5))))
                    .unwrap()
            })
            .collect()
    }

    #[test]
    fn counts_examples() {
        let a = build_counts(&[sv(&[(5, 2)])]).unwrap();
        assert_eq!(a.to_dense(), DMatrix::from_row_slice(1, 1, &[2.0]));
        let a = build_counts(&[sv(&[(1, 1)]), sv(&[(2, 1)])]).unwrap();
        assert_eq!(a.to_dense(), DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]));
        assert_eq!(a.terms(), &[1, 2]);
    }

    #[test]
    fn counts_errors() {
        assert_eq!(build_counts(&[]), Err(LsiError::EmptyDataset));
        let mixed = [sv(&[(1, 1)]), SparseVector::from_pairs(5, [(1, 1)]).unwrap()];
        assert_eq!(build_counts(&mixed), Err(LsiError::LengthMismatch { index: 1, expected: 4, found: 5 }));
    }

    #[test]
    fn counts_match_dense_assembly() {
        let vs = random_vectors(4, 15, 4, 200);
        let a = build_counts(&vs).unwrap();
        // dense oracle: one row per possible index, then drop empty rows
        let mut dense = vec![vec![0.0; vs.len()]; 200];
        for (j, v) in vs.iter().enumerate() {
            for &(i, c) in v.entries() {
                dense[i as usize][j] += f64::from(c);
            }
        }
        let rows: Vec<(u64, Vec<f64>)> = dense
            .into_iter()
            .enumerate()
            .filter(|(_, r)| r.iter().any(|&x| x != 0.0))
            .map(|(i, r)| (i as u64, r))
            .collect();
        assert_eq!(a.n_terms(), rows.len());
        let d = a.to_dense();
        for (i, (idx, row)) in rows.iter().enumerate() {
            assert_eq!(a.terms()[i], *idx);
            for (j, &x) in row.iter().enumerate() {
                assert_eq!(d[(i, j)], x);
            }
        }
    }

    #[test]
    fn tfidf_two_by_two() {
        // terms x docs [[1,1],[2,0]]
        let a = build_counts(&[sv(&[(0, 1), (1, 2)]), sv(&[(0, 1)])]).unwrap();
        let w = tfidf(&a).to_dense();
        assert_eq!(w[(0, 0)], 0.0);
        assert_eq!(w[(0, 1)], 0.0);
        assert!((w[(1, 0)] - 2.0 / 3.0 * 2f64.ln()).abs() < 1e-12);
        assert!((w[(1, 0)] - 0.46210).abs() < 1e-5);
        assert_eq!(w[(1, 1)], 0.0);
    }

    #[test]
    fn tfidf_single_document_is_zero() {
        let a = build_counts(&[sv(&[(3, 4), (9, 1)])]).unwrap();
        let w = tfidf(&a);
        assert_eq!(w.nnz(), 0);
    }

    #[test]
    fn tfidf_never_adds_nonzeros() {
        let a = build_counts(&random_vectors(8, 30, 4, 40)).unwrap();
        let w = tfidf(&a);
        assert!(w.nnz() <= a.nnz());
        let df = a.doc_frequency();
        for (i, j, _) in w.triplets() {
            assert!(df[i] < a.n_docs(), "row {i} col {j} should be zero");
        }
    }

    #[test]
    fn svd_of_diagonal() {
        let a = build_counts(&[sv(&[(0, 3)]), sv(&[(1, 2)]), sv(&[(2, 1)])]).unwrap();
        let r = truncated_svd(&a, 3).unwrap();
        for (got, want) in r.s.iter().zip([3.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn svd_k_bounds() {
        let a = build_counts(&[sv(&[(0, 3), (4, 1)]), sv(&[(1, 2)])]).unwrap();
        assert_eq!(truncated_svd(&a, 3).unwrap_err(), LsiError::KTooLarge { k: 3, max: 2 });
        assert_eq!(truncated_svd(&a, 0).unwrap_err(), LsiError::KTooLarge { k: 0, max: 2 });
    }

    #[test]
    fn rank_one_reconstruction() {
        let u = [1u32, 2, 3];
        let v = [2u32, 1, 4, 1];
        let docs: Vec<SparseVector> = v
            .iter()
            .map(|&vj| sv(&u.iter().enumerate().map(|(i, &ui)| (i as u64, ui * vj)).collect::<Vec<_>>()))
            .collect();
        let a = build_counts(&docs).unwrap();
        let r = truncated_svd(&a, 1).unwrap();
        let recon = &r.u * DMatrix::from_diagonal_element(1, 1, r.s[0]) * &r.vt;
        assert!((recon - a.to_dense()).norm() < 1e-8);
    }

    #[test]
    fn select_k_examples() {
        assert_eq!(select_k(&[1.0, 0.4, 0.3995, 0.3990], DEFAULT_K_THRESHOLD), Ok(2));
        assert_eq!(select_k(&[1.0, 1.0, 1.0], DEFAULT_K_THRESHOLD), Ok(1));
        assert_eq!(select_k(&[1.0, 0.5, 0.1], DEFAULT_K_THRESHOLD), Ok(3));
        assert_eq!(select_k(&[1.0], DEFAULT_K_THRESHOLD), Err(LsiError::TooFewValues));
        assert_eq!(select_k(&[0.0, 0.0], DEFAULT_K_THRESHOLD), Ok(1));
    }

    #[test]
    fn reduce_example() {
        let svd = SvdResult {
            u: DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
            s: vec![2.0],
            vt: DMatrix::from_row_slice(1, 2, &[0.6, 0.8]),
        };
        let r = reduce(&svd);
        assert!((r[(0, 0)] - 1.2).abs() < 1e-15 && (r[(0, 1)] - 1.6).abs() < 1e-15);
    }

    #[test]
    fn projection_of_training_column_matches_reduced() {
        let vs = random_vectors(21, 25, 4, 60);
        let fit = LsiModel::fit(&vs, DescriptorVariant::m1(), KChoice::Fixed(6), &SvdOptions::default()).unwrap();
        for (j, v) in vs.iter().enumerate() {
            let p = fit.model.transform(v);
            for (c, x) in p.iter().enumerate() {
                assert!((x - fit.features[(c, j)]).abs() < 1e-8);
            }
        }
        assert!(fit.model.transform(&SparseVector::empty(4)).iter().all(|&x| x == 0.0));
        let unseen = sv(&[(65000, 3)]);
        assert!(fit.model.transform(&unseen).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn auto_k_agrees_with_select_k() {
        let vs = random_vectors(3, 40, 4, 80);
        let choice = KChoice::Auto { threshold: DEFAULT_K_THRESHOLD, scan: 20 };
        let fit = LsiModel::fit(&vs, DescriptorVariant::m1(), choice, &SvdOptions::default()).unwrap();
        assert_eq!(fit.spectrum.len(), 20);
        assert_eq!(fit.model.k, select_k(&fit.spectrum, DEFAULT_K_THRESHOLD).unwrap());
        assert_eq!(fit.features.nrows(), fit.model.k);
    }

    #[test]
    fn model_json_round_trip() {
        let vs = random_vectors(5, 12, 4, 30);
        let fit = LsiModel::fit(&vs, DescriptorVariant::m2(), KChoice::Fixed(3), &SvdOptions::default()).unwrap();
        let back = LsiModel::from_json(&fit.model.to_json()).unwrap();
        assert_eq!(back, fit.model);
    }
}
