//! Bounded history stacks with singular-value-maximizing replacement and
//! periodic purging.
//!
//! Both estimators feed on a fixed-size set of recorded data. Once a stack
//! is full, a new record only displaces an old one if doing so raises the
//! minimum eigenvalue of the stack's regressor Gram matrix by a relative
//! margin `psi`; the stack's excitation level is therefore non-decreasing.
//!
//! Because early records carry larger disturbance-estimation error, each
//! estimator keeps two stacks: the main stack drives updates while a
//! transient stack collects fresh records. When the transient stack is full
//! and a dwell time has elapsed since the last purge, it replaces the main
//! stack wholesale, flushing stale data.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};

use crate::error::Error;
use crate::window::WindowPoint;

/// Result of offering a record to a stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    /// Stack was below capacity; record appended.
    Appended,
    /// Record displaced the slot at this index.
    Replaced(usize),
    /// No slot replacement improved the minimum eigenvalue enough.
    Rejected,
}

impl InsertOutcome {
    pub fn accepted(&self) -> bool {
        !matches!(self, InsertOutcome::Rejected)
    }
}

/// Record used for drift-parameter estimation: one window quadruple.
#[derive(Debug, Clone)]
pub struct PeRecord {
    pub x_diff: DVector<f64>,
    pub f_int: DVector<f64>,
    pub s_int: DVector<f64>,
    pub d_hat_int: DVector<f64>,
    pub recorded_at: f64,
}

impl PeRecord {
    pub fn new(point: &WindowPoint, recorded_at: f64) -> Self {
        PeRecord {
            x_diff: point.x_diff.clone(),
            f_int: point.f_int.clone(),
            s_int: point.s_int.clone(),
            d_hat_int: point.d_hat_int.clone(),
            recorded_at,
        }
    }
}

/// Record used for reward-weight estimation: a state-control pair together
/// with the drift-parameter estimate in force when it was recorded.
#[derive(Debug, Clone)]
pub struct IrlRecord {
    pub x: DVector<f64>,
    pub u: DVector<f64>,
    pub theta_hat: DMatrix<f64>,
    pub recorded_at: f64,
}

/// Recording timestamp, used when dumping stack contents.
pub trait StackRecord {
    fn recorded_at(&self) -> f64;
}

impl StackRecord for PeRecord {
    fn recorded_at(&self) -> f64 {
        self.recorded_at
    }
}

impl StackRecord for IrlRecord {
    fn recorded_at(&self) -> f64 {
        self.recorded_at
    }
}

/// Smallest eigenvalue of `sum_i B_i^T B_i` over the given regressor row
/// blocks, clamped at zero (tiny negative values are eigensolver noise).
/// A record may contribute several rows at once; every block must share the
/// same column count.
pub fn lambda_min_blocks(blocks: &[DMatrix<f64>]) -> f64 {
    match blocks.first() {
        None => 0.0,
        Some(first) => {
            let p = first.ncols();
            let mut gram = DMatrix::zeros(p, p);
            for b in blocks {
                gram.gemm(1.0, &b.transpose(), b, 1.0);
            }
            lambda_min_symmetric(&gram)
        }
    }
}

/// Smallest eigenvalue of the Gram matrix of a record list under `regressor`.
pub fn lambda_min_gram<R, F>(records: &[R], regressor: F) -> f64
where
    F: Fn(&R) -> DMatrix<f64>,
{
    let blocks: Vec<DMatrix<f64>> = records.iter().map(|r| regressor(r)).collect();
    lambda_min_blocks(&blocks)
}

fn lambda_min_symmetric(gram: &DMatrix<f64>) -> f64 {
    let evals = gram.symmetric_eigenvalues();
    let (lo, hi) = evals
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &l| (lo.min(l), hi.max(l)));
    // Eigenvalues under the solver's noise level read as exact zeros, so a
    // rank-deficient Gram cannot flip insertion decisions on sign noise.
    if lo < 1e-12 * hi.max(1.0) {
        0.0
    } else {
        lo
    }
}

/// Insertion decision on regressor row blocks alone.
///
/// Below capacity the candidate is always appended. At capacity, the slot
/// whose replacement maximizes the new minimum Gram eigenvalue is found
/// (first index wins ties) and the swap happens only if that eigenvalue
/// exceeds `(1 + psi)` times the current one.
pub fn sv_max_decide(blocks: &[DMatrix<f64>], candidate: &DMatrix<f64>, capacity: usize, psi: f64) -> InsertOutcome {
    if blocks.len() < capacity {
        return InsertOutcome::Appended;
    }
    let p = candidate.ncols();
    let mut gram = DMatrix::zeros(p, p);
    for b in blocks {
        gram.gemm(1.0, &b.transpose(), b, 1.0);
    }
    let current = lambda_min_symmetric(&gram);
    let threshold = (1.0 + psi) * current;

    // With the candidate added on top of the full Gram, removing any slot can
    // only lower the minimum eigenvalue, so this is an upper bound on every
    // replacement. Most offers stop here with two small eigensolves.
    let mut with_candidate = gram.clone();
    with_candidate.gemm(1.0, &candidate.transpose(), candidate, 1.0);
    if lambda_min_symmetric(&with_candidate) <= threshold {
        return InsertOutcome::Rejected;
    }

    let mut best: Option<(usize, f64)> = None;
    for (j, block) in blocks.iter().enumerate() {
        let mut g = with_candidate.clone();
        g.gemm(-1.0, &block.transpose(), block, 1.0);
        let lam = lambda_min_symmetric(&g);
        if best.map_or(true, |(_, b)| lam > b) {
            best = Some((j, lam));
        }
    }
    match best {
        Some((j, lam)) if lam > threshold => InsertOutcome::Replaced(j),
        _ => InsertOutcome::Rejected,
    }
}

/// Offers a record to a bounded record list, mutating it on acceptance.
pub fn sv_max_insert<R, F>(
    records: &mut Vec<R>,
    capacity: usize,
    candidate: R,
    regressor: F,
    psi: f64,
) -> InsertOutcome
where
    F: Fn(&R) -> DMatrix<f64>,
{
    let blocks: Vec<DMatrix<f64>> = records.iter().map(|r| regressor(r)).collect();
    let cand_block = regressor(&candidate);
    let outcome = sv_max_decide(&blocks, &cand_block, capacity, psi);
    match outcome {
        InsertOutcome::Appended => records.push(candidate),
        InsertOutcome::Replaced(j) => records[j] = candidate,
        InsertOutcome::Rejected => {}
    }
    outcome
}

type Regressor<R> = Box<dyn Fn(&R) -> DMatrix<f64> + Send + Sync>;

/// Main/transient stack pair with dwell-limited purging.
pub struct DualStack<R> {
    capacity: usize,
    psi: f64,
    dwell: f64,
    last_purge_at: f64,
    purge_count: u64,
    main: Vec<R>,
    main_blocks: Vec<DMatrix<f64>>,
    transient: Vec<R>,
    transient_blocks: Vec<DMatrix<f64>>,
    regressor: Regressor<R>,
}

impl<R> DualStack<R> {
    /// `start_time` seeds the dwell clock, so the first purge cannot happen
    /// before `start_time + dwell`.
    pub fn new(
        capacity: usize,
        psi: f64,
        dwell: f64,
        start_time: f64,
        regressor: Regressor<R>,
    ) -> Result<Self, Error> {
        if capacity == 0 {
            return Err(Error::config("stack capacity must be at least 1"));
        }
        if !(psi >= 0.0) || !psi.is_finite() {
            return Err(Error::config("replacement margin psi must be finite and non-negative"));
        }
        if !(dwell >= 0.0) || !dwell.is_finite() {
            return Err(Error::config("dwell time must be finite and non-negative"));
        }
        Ok(DualStack {
            capacity,
            psi,
            dwell,
            last_purge_at: start_time,
            purge_count: 0,
            main: Vec::with_capacity(capacity),
            main_blocks: Vec::with_capacity(capacity),
            transient: Vec::with_capacity(capacity),
            transient_blocks: Vec::with_capacity(capacity),
            regressor,
        })
    }

    /// Offers a record to the transient stack.
    pub fn offer(&mut self, record: R) -> InsertOutcome {
        let block = (self.regressor)(&record);
        let outcome = sv_max_decide(&self.transient_blocks, &block, self.capacity, self.psi);
        match outcome {
            InsertOutcome::Appended => {
                self.transient.push(record);
                self.transient_blocks.push(block);
            }
            InsertOutcome::Replaced(j) => {
                self.transient[j] = record;
                self.transient_blocks[j] = block;
            }
            InsertOutcome::Rejected => {}
        }
        outcome
    }

    /// Promotes the transient stack to main if it is full and the dwell time
    /// has elapsed; returns whether the purge happened.
    pub fn try_purge(&mut self, now: f64) -> bool {
        if self.transient.len() < self.capacity || now - self.last_purge_at < self.dwell {
            return false;
        }
        self.main = std::mem::take(&mut self.transient);
        self.main_blocks = std::mem::take(&mut self.transient_blocks);
        self.transient.reserve(self.capacity);
        self.last_purge_at = now;
        self.purge_count += 1;
        true
    }

    pub fn main(&self) -> &[R] {
        &self.main
    }

    pub fn transient(&self) -> &[R] {
        &self.transient
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn purge_count(&self) -> u64 {
        self.purge_count
    }

    pub fn last_purge_at(&self) -> f64 {
        self.last_purge_at
    }

    pub fn lambda_min_main(&self) -> f64 {
        lambda_min_blocks(&self.main_blocks)
    }

    pub fn lambda_min_transient(&self) -> f64 {
        lambda_min_blocks(&self.transient_blocks)
    }
}

impl<R: StackRecord> DualStack<R> {
    /// Writes the main stack as CSV: recording time, then the record's
    /// regressor block flattened row-major.
    pub fn dump_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let width = self.main_blocks.first().map_or(0, |b| b.nrows() * b.ncols());
        write!(out, "recorded_at")?;
        for i in 0..width {
            write!(out, ",r{}", i + 1)?;
        }
        writeln!(out)?;
        for (rec, block) in self.main.iter().zip(&self.main_blocks) {
            write!(out, "{:.9e}", rec.recorded_at())?;
            for i in 0..block.nrows() {
                for j in 0..block.ncols() {
                    write!(out, ",{:.9e}", block[(i, j)])?;
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}
