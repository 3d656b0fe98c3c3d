//! Outcome records shared by all verification routines.
//!
//! A failed identity is a report, not an error: it records the first order at
//! which the two sides disagree and the residual coefficient there.

use serde::{Deserialize, Serialize};

use crate::series::{CycRational, PowerSeries};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FirstFailure {
    pub order: usize,
    /// Exact residual coefficient (`lhs − rhs`) at `order`.
    pub residual: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityOutcome {
    pub label: String,
    /// Highest order compared.
    pub order: usize,
    pub first_failure: Option<FirstFailure>,
}

impl IdentityOutcome {
    pub fn passed(&self) -> bool {
        self.first_failure.is_none()
    }

    pub fn pass(label: impl Into<String>, order: usize) -> Self {
        Self {
            label: label.into(),
            order,
            first_failure: None,
        }
    }

    pub fn fail(label: impl Into<String>, order: usize, residual: String) -> Self {
        Self {
            label: label.into(),
            order,
            first_failure: Some(FirstFailure { order, residual }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub identities: Vec<IdentityOutcome>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            identities: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.identities.iter().all(IdentityOutcome::passed)
    }

    pub fn push(&mut self, outcome: IdentityOutcome) {
        self.identities.push(outcome);
    }

    pub fn extend(&mut self, other: CheckReport) {
        self.identities.extend(other.identities);
    }

    pub fn first_failure(&self) -> Option<(&str, &FirstFailure)> {
        self.identities
            .iter()
            .find_map(|i| i.first_failure.as_ref().map(|f| (i.label.as_str(), f)))
    }

    pub fn get(&self, label: &str) -> Option<&IdentityOutcome> {
        self.identities.iter().find(|i| i.label == label)
    }
}

/// Compares two series coefficientwise through `order` (capped at the
/// smaller of their orders).
pub fn compare_series(
    label: impl Into<String>,
    lhs: &PowerSeries,
    rhs: &PowerSeries,
    order: usize,
) -> IdentityOutcome {
    let label = label.into();
    let n = order.min(lhs.order()).min(rhs.order());
    for i in 0..=n {
        if lhs.coeff(i) != rhs.coeff(i) {
            let r = lhs.coeff(i) - rhs.coeff(i);
            return IdentityOutcome::fail(label, i, r.to_exact_string());
        }
    }
    IdentityOutcome::pass(label, n)
}

/// Checks that a residual series vanishes through `order`.
pub fn expect_zero(label: impl Into<String>, residual: &PowerSeries, order: usize) -> IdentityOutcome {
    let label = label.into();
    let n = order.min(residual.order());
    match (0..=n).find(|&i| !residual.coeff(i).is_zero()) {
        Some(i) => IdentityOutcome::fail(label, i, residual.coeff(i).to_exact_string()),
        None => IdentityOutcome::pass(label, n),
    }
}

pub fn compare_values(label: impl Into<String>, lhs: &CycRational, rhs: &CycRational) -> IdentityOutcome {
    if lhs == rhs {
        IdentityOutcome::pass(label, 0)
    } else {
        IdentityOutcome::fail(label, 0, (lhs - rhs).to_exact_string())
    }
}
