//! Pearson chi-square test of homogeneity between two summed word-gram
//! vectors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::checked_gamma_ur;

use crate::textfeat::WordGramRow;

/// Per-gram totals over a window of rows.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GramVector(pub BTreeMap<String, u64>);

impl GramVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, gram: &str) -> u64 {
        self.0.get(gram).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.0.values().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add_row(&mut self, row: &WordGramRow) {
        for (g, c) in row.iter() {
            *self.0.entry(g.to_owned()).or_insert(0) += c as u64;
        }
    }

    pub fn sub_row(&mut self, row: &WordGramRow) {
        for (g, c) in row.iter() {
            if let Some(v) = self.0.get_mut(g) {
                *v = v.saturating_sub(c as u64);
                if *v == 0 {
                    self.0.remove(g);
                }
            }
        }
    }
}

/// Column-wise sum of a window of rows.
pub fn sum_wordgrams<'a>(rows: impl IntoIterator<Item = &'a WordGramRow>) -> GramVector {
    let mut v = GramVector::new();
    for row in rows {
        v.add_row(row);
    }
    v
}

/// Columns whose total is below this in both vectors are discarded.
pub const MIN_COLUMN_COUNT: u64 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chi2Outcome {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Surviving columns after the frequency filter.
    pub columns: usize,
}

impl Chi2Outcome {
    fn undefined(columns: usize) -> Self {
        Self { statistic: 0.0, dof: columns.saturating_sub(1), p_value: 1.0, columns }
    }
}

/// Upper tail of the chi-square distribution, `Q(dof/2, x/2)`.
pub fn chi2_sf(statistic: f64, dof: usize) -> f64 {
    if dof == 0 || statistic <= 0.0 {
        return 1.0;
    }
    checked_gamma_ur(dof as f64 / 2.0, statistic / 2.0).unwrap_or(0.0).clamp(0.0, 1.0)
}

/// Homogeneity test on a 2×V table given as `(row0, row1)` column pairs.
/// Fewer than two columns or an empty row yields `p = 1`.
pub fn chi2_table(columns: &[(f64, f64)]) -> Chi2Outcome {
    let v = columns.len();
    if v < 2 {
        return Chi2Outcome::undefined(v);
    }
    let r0: f64 = columns.iter().map(|c| c.0).sum();
    let r1: f64 = columns.iter().map(|c| c.1).sum();
    let n = r0 + r1;
    if r0 <= 0.0 || r1 <= 0.0 {
        return Chi2Outcome::undefined(v);
    }
    let mut stat = 0.0;
    for &(a, b) in columns {
        let col = a + b;
        let ea = r0 * col / n;
        let eb = r1 * col / n;
        stat += (a - ea) * (a - ea) / ea + (b - eb) * (b - eb) / eb;
    }
    let dof = v - 1;
    Chi2Outcome { statistic: stat, dof, p_value: chi2_sf(stat, dof), columns: v }
}

/// Aligns both vectors on the gram union (missing = 0), drops columns below
/// [`MIN_COLUMN_COUNT`] in both, and runs the test.
pub fn chi2_test(past: &GramVector, current: &GramVector) -> Chi2Outcome {
    let mut columns = Vec::with_capacity(past.len().max(current.len()));
    let mut a = past.0.iter().peekable();
    let mut b = current.0.iter().peekable();
    loop {
        let (x, y) = match (a.peek(), b.peek()) {
            (None, None) => break,
            (Some((ka, va)), Some((kb, vb))) => match ka.cmp(kb) {
                std::cmp::Ordering::Less => {
                    let v = **va;
                    a.next();
                    (v, 0)
                }
                std::cmp::Ordering::Greater => {
                    let v = **vb;
                    b.next();
                    (0, v)
                }
                std::cmp::Ordering::Equal => {
                    let (x, y) = (**va, **vb);
                    a.next();
                    b.next();
                    (x, y)
                }
            },
            (Some((_, va)), None) => {
                let v = **va;
                a.next();
                (v, 0)
            }
            (None, Some((_, vb))) => {
                let v = **vb;
                b.next();
                (0, v)
            }
        };
        if x >= MIN_COLUMN_COUNT || y >= MIN_COLUMN_COUNT {
            columns.push((x as f64, y as f64));
        }
    }
    let out = chi2_table(&columns);
    if out.columns < 2 {
        log::debug!("chi2: {} surviving columns, p defined as 1", out.columns);
    }
    out
}

pub fn chi2_pvalue(past: &GramVector, current: &GramVector) -> f64 {
    chi2_test(past, current).p_value
}
