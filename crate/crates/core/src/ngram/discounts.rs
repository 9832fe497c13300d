use serde::{Deserialize, Serialize};

use crate::{Error, Result};

use super::NGramCounts;

/// The three count-dependent discounts for one order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discounts {
    pub d1: f64,
    pub d2: f64,
    pub d3plus: f64,
}

impl Discounts {
    /// Discount mass subtracted from a gram with the given count.
    pub fn apply(&self, count: u64) -> f64 {
        match count {
            0 => 0.0,
            1 => self.d1,
            2 => self.d2,
            _ => self.d3plus,
        }
    }
}

/// Substitute discounts for degenerate counts-of-counts (tiny corpora).
pub const FALLBACK_DISCOUNTS: Discounts = Discounts {
    d1: 0.5,
    d2: 1.0,
    d3plus: 1.5,
};

/// Per-order discounts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscountSet {
    per_order: Vec<Discounts>,
}

impl DiscountSet {
    pub fn new(per_order: Vec<Discounts>) -> DiscountSet {
        DiscountSet { per_order }
    }

    pub fn order(&self) -> usize {
        self.per_order.len()
    }

    pub fn for_order(&self, order: usize) -> &Discounts {
        &self.per_order[order - 1]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Discounts> {
        self.per_order.iter()
    }
}

/// Discounts from counts-of-counts, one order at a time:
///
/// ```text
/// Y   = n1 / (n1 + 2*n2)
/// D1  = 1 - 2*Y*n2/n1
/// D2  = 2 - 3*Y*n3/n2
/// D3+ = 3 - 4*Y*n4/n3
/// ```
///
/// Requires n1..n4 > 0 and 0 < Dr <= r. With `fallback` enabled, an order
/// that violates either condition gets (0.5, 1.0, 1.5) instead and a warning
/// is recorded; without it the violation is an error.
pub fn estimate_discounts(
    counts: &NGramCounts,
    fallback: bool,
) -> Result<(DiscountSet, Vec<String>)> {
    let mut per_order = Vec::with_capacity(counts.order());
    let mut warnings = Vec::new();
    for order in 1..=counts.order() {
        match discounts_from_coc(order, counts.counts_of_counts(order)) {
            Ok(d) => per_order.push(d),
            Err(e) if fallback => {
                warnings.push(format!("order {order}: {e}; using fallback discounts"));
                per_order.push(FALLBACK_DISCOUNTS);
            }
            Err(e) => return Err(e),
        }
    }
    Ok((DiscountSet { per_order }, warnings))
}

fn discounts_from_coc(order: usize, coc: [u64; 4]) -> Result<Discounts> {
    for (i, &n) in coc.iter().enumerate() {
        if n == 0 {
            return Err(Error::DegenerateCounts { order, r: i + 1 });
        }
    }
    let [n1, n2, n3, n4] = coc.map(|n| n as f64);
    let y = n1 / (n1 + 2.0 * n2);
    let d = Discounts {
        d1: 1.0 - 2.0 * y * n2 / n1,
        d2: 2.0 - 3.0 * y * n3 / n2,
        d3plus: 3.0 - 4.0 * y * n4 / n3,
    };
    for (r, value) in [(1, d.d1), (2, d.d2), (3, d.d3plus)] {
        if !(value > 0.0 && value <= r as f64) {
            return Err(Error::DiscountOutOfRange { order, r, value });
        }
    }
    Ok(d)
}
