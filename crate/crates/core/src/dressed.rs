//! Eigenbasis of H₀ and the frequency decomposition of operators in it.
//!
//! At zero flux bias H₀ is block diagonal in the parity sectors; each
//! sector is diagonalized separately so that eigenvectors carry an exact
//! parity and parity-odd operators have structurally zero matrix elements
//! between same-parity states.

use std::io::{self, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rabi::{
    build_static_hamiltonian, hermiticity_defect, max_abs, parity_eigenvalues, CMatrix,
    OperatorMatrix, SystemParams,
};

/// Energies closer than this (relative to the spectral scale) are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct DressedBasis {
    energies: Vec<f64>,
    vectors: CMatrix,
    parities: Option<Vec<f64>>,
    labels: Option<Vec<String>>,
}

impl DressedBasis {
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Columns are the eigenvectors in the bare qubit ⊗ Fock basis.
    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Parity of every eigenstate when the basis was built in parity sectors.
    pub fn parities(&self) -> Option<&[f64]> {
        self.parities.as_deref()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => i.to_string(),
        }
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        match &self.labels {
            Some(l) => l.iter().position(|s| s == label),
            None => label.parse::<usize>().ok().filter(|&i| i < self.dim()),
        }
        .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn set_labels(&mut self, labels: Vec<String>) {
        assert_eq!(labels.len(), self.dim());
        self.labels = Some(labels);
    }

    /// `V† X V` restricted to the lowest `n_levels` eigenstates.
    pub fn project(&self, op: &CMatrix, n_levels: usize) -> CMatrix {
        let n = n_levels.min(self.dim());
        let v = self.vectors.columns(0, n);
        v.adjoint() * op * v
    }

    pub fn to_dressed(&self, op: &OperatorMatrix) -> CMatrix {
        self.project(op.matrix(), self.dim())
    }

    /// Transition table among the lowest `n_levels` states.
    pub fn transitions(&self, n_levels: usize, omega_min: f64) -> TransitionTable {
        let n = n_levels.min(self.dim());
        let mut entries = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let omega = self.energies[j] - self.energies[i];
                if omega > omega_min {
                    entries.push(Transition { i, j, omega });
                }
            }
        }
        TransitionTable { entries }
    }

    /// Residual max|H V − V diag(E)|.
    pub fn residual(&self, h: &CMatrix) -> f64 {
        let mut scaled = self.vectors.clone();
        for (c, e) in self.energies.iter().enumerate() {
            scaled.column_mut(c).scale_mut(*e);
        }
        max_abs(&(h * &self.vectors - scaled))
    }

    /// max|V† V − I|.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        max_abs(&(self.vectors.adjoint() * &self.vectors - CMatrix::identity(n, n)))
    }
}

/// Diagonalize H₀ for the given parameters, using parity sectors at ε = 0.
pub fn diagonalize_params(params: &SystemParams) -> Result<DressedBasis> {
    let h = build_static_hamiltonian(params)?;
    if params.has_parity() {
        diagonalize_with_parity(&h, &parity_eigenvalues(params.n_fock))
    } else {
        diagonalize(&h)
    }
}

pub fn diagonalize(h: &OperatorMatrix) -> Result<DressedBasis> {
    check_hermitian(h.matrix())?;
    let (energies, vectors) = hermitian_eigen(h.matrix());
    let mut basis = DressedBasis {
        energies,
        vectors,
        parities: None,
        labels: None,
    };
    sort_basis(&mut basis);
    Ok(basis)
}

/// Diagonalize sector by sector for an operator that commutes with a
/// diagonal parity whose eigenvalues are given per bare basis state.
pub fn diagonalize_with_parity(h: &OperatorMatrix, parity: &[f64]) -> Result<DressedBasis> {
    check_hermitian(h.matrix())?;
    let dim = h.dim();
    if parity.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: parity.len(),
        });
    }
    let mut energies = Vec::with_capacity(dim);
    let mut vectors = CMatrix::zeros(dim, dim);
    let mut parities = Vec::with_capacity(dim);
    let mut col = 0;
    for sector in [1.0, -1.0] {
        let idx: Vec<usize> = (0..dim).filter(|&k| parity[k] == sector).collect();
        if idx.is_empty() {
            continue;
        }
        let block = CMatrix::from_fn(idx.len(), idx.len(), |r, c| h.matrix()[(idx[r], idx[c])]);
        let (e, v) = hermitian_eigen(&block);
        for (k, ek) in e.iter().enumerate() {
            for (r, &bare) in idx.iter().enumerate() {
                vectors[(bare, col)] = v[(r, k)];
            }
            energies.push(*ek);
            parities.push(sector);
            col += 1;
        }
    }
    let mut basis = DressedBasis {
        energies,
        vectors,
        parities: Some(parities),
        labels: None,
    };
    sort_basis(&mut basis);
    Ok(basis)
}

fn check_hermitian(m: &CMatrix) -> Result<()> {
    let defect = hermiticity_defect(m);
    if defect > 1e-12 * max_abs(m).max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian(defect));
    }
    Ok(())
}

fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = m.clone().symmetric_eigen();
    let mut vectors = eig.eigenvectors;
    for c in 0..vectors.ncols() {
        fix_phase(&mut vectors, c);
    }
    (eig.eigenvalues.iter().copied().collect(), vectors)
}

/// Makes the first largest-modulus component of column `c` real positive.
fn fix_phase(v: &mut CMatrix, c: usize) {
    let col = v.column(c);
    let max = col.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    let pivot = col
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-9))
        .unwrap_or(0);
    let z = col[pivot];
    if z.norm() > 0.0 {
        let phase = z.conj() / z.norm();
        scale_column(v, c, phase);
    }
}

fn scale_column(m: &mut CMatrix, c: usize, phase: Complex64) {
    m.column_mut(c).iter_mut().for_each(|z| *z *= phase);
}

fn sort_basis(basis: &mut DressedBasis) {
    let n = basis.dim();
    let scale = basis
        .energies
        .iter()
        .fold(1.0f64, |a, e| a.max(e.abs()));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        basis.energies[a]
            .partial_cmp(&basis.energies[b])
            .unwrap()
            .then(a.cmp(&b))
    });
    // degenerate clusters: +1 parity first, then original order
    let parity_of = |k: usize| basis.parities.as_ref().map_or(0.0, |p| p[k]);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n
            && basis.energies[order[end]] - basis.energies[order[start]] <= DEGENERACY_TOL * scale
        {
            end += 1;
        }
        order[start..end].sort_by(|&a, &b| {
            parity_of(b)
                .partial_cmp(&parity_of(a))
                .unwrap()
                .then(a.cmp(&b))
        });
        start = end;
    }
    permute(basis, &order);
}

fn permute(basis: &mut DressedBasis, order: &[usize]) {
    basis.energies = order.iter().map(|&k| basis.energies[k]).collect();
    basis.vectors = CMatrix::from_fn(basis.vectors.nrows(), order.len(), |r, c| {
        basis.vectors[(r, order[c])]
    });
    if let Some(p) = &basis.parities {
        basis.parities = Some(order.iter().map(|&k| p[k]).collect());
    }
    if let Some(l) = &basis.labels {
        basis.labels = Some(order.iter().map(|&k| l[k].clone()).collect());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    /// Strictly upper triangle (j > i): lowers the energy.
    Plus,
    /// Strictly lower triangle, the adjoint of `Plus` for Hermitian input.
    Minus,
    /// Diagonal.
    Zero,
}

/// Positive, negative or zero frequency part of an operator already
/// expressed in the dressed basis.
pub fn frequency_components(x: &CMatrix, which: Component) -> CMatrix {
    let n = x.nrows();
    CMatrix::from_fn(n, n, |i, j| {
        let keep = match which {
            Component::Plus => j > i,
            Component::Minus => i > j,
            Component::Zero => i == j,
        };
        if keep {
            x[(i, j)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub i: usize,
    pub j: usize,
    /// ω_ji = E_j − E_i > 0.
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransitionTable {
    pub entries: Vec<Transition>,
}

impl TransitionTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn find(&self, i: usize, j: usize) -> Option<&Transition> {
        self.entries.iter().find(|t| t.i == i && t.j == j)
    }

    /// CSV with columns `i,j,label_i,label_j,omega_ji`.
    pub fn write_csv<W: Write>(&self, basis: &DressedBasis, mut out: W) -> io::Result<()> {
        writeln!(out, "i,j,label_i,label_j,omega_ji")?;
        for t in &self.entries {
            writeln!(
                out,
                "{},{},{},{},{}",
                t.i,
                t.j,
                basis.label(t.i),
                basis.label(t.j),
                t.omega
            )?;
        }
        Ok(())
    }
}

/// The part of X⁺ oscillating at one transition frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionComponent {
    pub omega: f64,
    /// Nonzero entries `(i, j, X_ij)` with j > i.
    pub entries: Vec<(usize, usize, Complex64)>,
}

impl TransitionComponent {
    pub fn to_matrix(&self, dim: usize) -> CMatrix {
        let mut m = CMatrix::zeros(dim, dim);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }
}

/// Default tolerance for merging degenerate transition frequencies.
pub const MERGE_TOL: f64 = 1e-9;

/// Splits X⁺ by transition frequency. Transitions whose frequencies lie
/// within `omega_tol` of their neighbours are merged into one component.
pub fn per_transition_components(
    x_dressed: &CMatrix,
    table: &TransitionTable,
    omega_tol: f64,
) -> Vec<TransitionComponent> {
    let mut sorted: Vec<Transition> = table.entries.clone();
    sorted.sort_by(|a, b| {
        a.omega
            .partial_cmp(&b.omega)
            .unwrap()
            .then(a.i.cmp(&b.i))
            .then(a.j.cmp(&b.j))
    });
    let mut out: Vec<TransitionComponent> = Vec::new();
    let mut cluster: Vec<Transition> = Vec::new();
    let flush = |cluster: &mut Vec<Transition>, out: &mut Vec<TransitionComponent>| {
        if cluster.is_empty() {
            return;
        }
        let omega = cluster.iter().map(|t| t.omega).sum::<f64>() / cluster.len() as f64;
        let entries: Vec<_> = cluster
            .iter()
            .map(|t| (t.i, t.j, x_dressed[(t.i, t.j)]))
            .filter(|e| e.2.norm() > 0.0)
            .collect();
        if !entries.is_empty() {
            out.push(TransitionComponent { omega, entries });
        }
        cluster.clear();
    };
    for t in sorted {
        if let Some(last) = cluster.last() {
            if t.omega - last.omega > omega_tol {
                flush(&mut cluster, &mut out);
            }
        }
        cluster.push(t);
    }
    flush(&mut cluster, &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelScheme {
    /// `0, 1-, 1+, 2-, 2+, …` from the Jaynes–Cummings doublets.
    JaynesCummings,
    /// `0, 1, 2, …` by energy.
    Ordinal,
}

pub fn initial_labels(dim: usize, scheme: LabelScheme) -> Vec<String> {
    (0..dim)
        .map(|k| match scheme {
            LabelScheme::Ordinal => k.to_string(),
            LabelScheme::JaynesCummings => {
                if k == 0 {
                    "0".to_string()
                } else {
                    let n = k.div_ceil(2);
                    if k % 2 == 1 {
                        format!("{n}-")
                    } else {
                        format!("{n}+")
                    }
                }
            }
        })
        .collect()
}

/// A label whose continuation overlap fell below 0.5.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguousContinuation {
    pub point: usize,
    pub label: String,
    pub overlap: f64,
}

/// Assigns labels along an ordered sweep by maximal overlap with the
/// previous point. The first point gets `scheme` labels by energy order.
/// Degenerate levels are reordered to follow the previous point and every
/// eigenvector's phase is aligned with its predecessor, so signed matrix
/// elements are continuous along the sweep.
pub fn label_states(sweep: &mut [DressedBasis], scheme: LabelScheme) -> Vec<AmbiguousContinuation> {
    let mut flagged = Vec::new();
    if sweep.is_empty() {
        return flagged;
    }
    let dim = sweep[0].dim();
    sweep[0].labels = Some(initial_labels(dim, scheme));
    for p in 1..sweep.len() {
        let (head, tail) = sweep.split_at_mut(p);
        let prev = &head[p - 1];
        let next = &mut tail[0];
        assert_eq!(prev.dim(), next.dim(), "sweep bases must share a cutoff");
        let overlap = prev.vectors.adjoint() * &next.vectors;
        let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(dim * dim);
        for a in 0..dim {
            for b in 0..dim {
                pairs.push((overlap[(a, b)].norm_sqr(), a, b));
            }
        }
        pairs.sort_by(|x, y| {
            y.0.partial_cmp(&x.0)
                .unwrap()
                .then(x.1.cmp(&y.1))
                .then(x.2.cmp(&y.2))
        });
        let mut prev_of = vec![usize::MAX; dim];
        let mut used_prev = vec![false; dim];
        let mut assigned = 0;
        for (w, a, b) in pairs {
            if used_prev[a] || prev_of[b] != usize::MAX {
                continue;
            }
            used_prev[a] = true;
            prev_of[b] = a;
            if w < 0.5 {
                flagged.push(AmbiguousContinuation {
                    point: p,
                    label: prev.label(a),
                    overlap: w,
                });
            }
            assigned += 1;
            if assigned == dim {
                break;
            }
        }
        for (b, &a) in prev_of.iter().enumerate() {
            let z = overlap[(a, b)];
            if z.norm() > 0.0 {
                let phase = z.conj() / z.norm();
                scale_column(&mut next.vectors, b, phase);
            }
        }
        next.labels = Some(prev_of.iter().map(|&a| prev.label(a)).collect());
        // degenerate clusters follow the order of their predecessors
        let scale = next.energies.iter().fold(1.0f64, |m, e| m.max(e.abs()));
        let mut order: Vec<usize> = (0..dim).collect();
        let mut start = 0;
        while start < dim {
            let mut end = start + 1;
            while end < dim && next.energies[end] - next.energies[start] <= DEGENERACY_TOL * scale {
                end += 1;
            }
            order[start..end].sort_by_key(|&b| prev_of[b]);
            start = end;
        }
        permute(next, &order);
    }
    flagged
}
