//! 2x2 case/exposure tables, the Haldane-Anscombe correction, and the
//! plug-in sample estimates.
//!
//! Cells are stored as reals so the +1/2 correction is carried exactly.
//! The table layout is
//!
//! ```text
//!              exposed   unexposed
//!   cases        n11        n12
//!   controls     n21        n22
//! ```

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TableError {
    #[error("cell counts must be nonnegative (got {0})")]
    NegativeCount(f64),
    #[error("degenerate table: {0}")]
    Degenerate(String),
    #[error("table is already Haldane-corrected")]
    AlreadyCorrected,
    #[error("cell count is zero; apply the Haldane correction first")]
    ZeroCell,
}

/// A 2x2 case/exposure table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContingencyTable {
    n11: f64,
    n12: f64,
    n21: f64,
    n22: f64,
    corrected: bool,
}

/// Plug-in quantities extracted from a table: exposure probabilities among
/// cases and controls, the case fraction, the total count, and the
/// per-observation standard deviation of the log odds ratio estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleEstimates {
    pub p_hat: f64,
    pub q_hat: f64,
    pub w_hat: f64,
    pub n_total: f64,
    pub sigma_hat: f64,
}

impl ContingencyTable {
    /// Build an uncorrected table from raw counts. Each row (cases and
    /// controls) must be nonempty; degenerate rows are rejected rather than
    /// silently corrected.
    pub fn from_counts(n11: f64, n12: f64, n21: f64, n22: f64) -> Result<Self, TableError> {
        for &c in &[n11, n12, n21, n22] {
            if !(c >= 0.0) || !c.is_finite() {
                return Err(TableError::NegativeCount(c));
            }
        }
        if n11 + n12 <= 0.0 {
            return Err(TableError::Degenerate("no cases (n11 + n12 = 0)".into()));
        }
        if n21 + n22 <= 0.0 {
            return Err(TableError::Degenerate("no controls (n21 + n22 = 0)".into()));
        }
        Ok(Self {
            n11,
            n12,
            n21,
            n22,
            corrected: false,
        })
    }

    /// Apply the Haldane-Anscombe correction: add exactly 1/2 to every cell.
    /// Refuses to correct twice.
    pub fn haldane_correct(&self) -> Result<Self, TableError> {
        if self.corrected {
            return Err(TableError::AlreadyCorrected);
        }
        Ok(Self {
            n11: self.n11 + 0.5,
            n12: self.n12 + 0.5,
            n21: self.n21 + 0.5,
            n22: self.n22 + 0.5,
            corrected: true,
        })
    }

    pub fn n11(&self) -> f64 {
        self.n11
    }
    pub fn n12(&self) -> f64 {
        self.n12
    }
    pub fn n21(&self) -> f64 {
        self.n21
    }
    pub fn n22(&self) -> f64 {
        self.n22
    }
    pub fn corrected(&self) -> bool {
        self.corrected
    }

    pub fn n_cases(&self) -> f64 {
        self.n11 + self.n12
    }
    pub fn n_controls(&self) -> f64 {
        self.n21 + self.n22
    }
    pub fn n(&self) -> f64 {
        self.n_cases() + self.n_controls()
    }

    pub fn all_cells_positive(&self) -> bool {
        self.n11 > 0.0 && self.n12 > 0.0 && self.n21 > 0.0 && self.n22 > 0.0
    }

    /// Swap the case and control rows (flips the sign of the log odds ratio).
    pub fn swap_rows(&self) -> Self {
        Self {
            n11: self.n21,
            n12: self.n22,
            n21: self.n11,
            n22: self.n12,
            corrected: self.corrected,
        }
    }

    /// Swap the exposure columns (flips the sign of the log odds ratio).
    pub fn swap_columns(&self) -> Self {
        Self {
            n11: self.n12,
            n12: self.n11,
            n21: self.n22,
            n22: self.n21,
            corrected: self.corrected,
        }
    }

    /// Extract the plug-in sample estimates. Requires a corrected table or
    /// strictly positive cells.
    pub fn estimates(&self) -> Result<SampleEstimates, TableError> {
        if !self.corrected && !self.all_cells_positive() {
            return Err(TableError::ZeroCell);
        }
        let n_d = self.n_cases();
        let n_c = self.n_controls();
        if n_d <= 0.0 || n_c <= 0.0 {
            return Err(TableError::Degenerate("empty row".into()));
        }
        let n = n_d + n_c;
        let p_hat = self.n11 / n_d;
        let q_hat = self.n21 / n_c;
        let w_hat = n_d / n;
        if p_hat <= 0.0 || p_hat >= 1.0 || q_hat <= 0.0 || q_hat >= 1.0 {
            return Err(TableError::ZeroCell);
        }
        let sigma_sq = (1.0 / w_hat) / (p_hat * (1.0 - p_hat))
            + (1.0 / (1.0 - w_hat)) / (q_hat * (1.0 - q_hat));
        Ok(SampleEstimates {
            p_hat,
            q_hat,
            w_hat,
            n_total: n,
            sigma_hat: sigma_sq.sqrt(),
        })
    }

    /// Woolf standard error of the log odds ratio: sqrt(sum of 1/n_ij).
    pub fn woolf_se(&self) -> Result<f64, TableError> {
        if !self.all_cells_positive() {
            return Err(TableError::ZeroCell);
        }
        Ok((1.0 / self.n11 + 1.0 / self.n12 + 1.0 / self.n21 + 1.0 / self.n22).sqrt())
    }
}
