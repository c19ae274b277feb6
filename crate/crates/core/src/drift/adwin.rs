//! ADWIN adaptive windowing over an exponential bucket histogram.
//!
//! Row `i` holds buckets of `2^i` elements, oldest first. Every `clock`
//! insertions (once the window exceeds the grace period) every split point
//! between buckets is tested; a significant difference between the older
//! and newer sub-window means drops the oldest bucket and repeats.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Bucket {
    total: f64,
    /// Sum of squared deviations from the bucket mean.
    m2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adwin {
    delta: f64,
    clock: u64,
    max_buckets: usize,
    min_window_length: usize,
    grace_period: usize,
    rows: Vec<VecDeque<Bucket>>,
    total: f64,
    m2: f64,
    width: usize,
    tick: u64,
    detections: u64,
}

impl Default for Adwin {
    fn default() -> Self {
        Self::new(0.002)
    }
}

impl Adwin {
    pub fn new(delta: f64) -> Self {
        Self {
            delta,
            clock: 32,
            max_buckets: 5,
            min_window_length: 5,
            grace_period: 10,
            rows: vec![VecDeque::new()],
            total: 0.0,
            m2: 0.0,
            width: 0,
            tick: 0,
            detections: 0,
        }
    }

    pub fn with_clock(mut self, clock: u64) -> Self {
        self.clock = clock.max(1);
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn estimation(&self) -> f64 {
        if self.width == 0 {
            0.0
        } else {
            self.total / self.width as f64
        }
    }

    pub fn variance(&self) -> f64 {
        if self.width == 0 {
            0.0
        } else {
            self.m2 / self.width as f64
        }
    }

    pub fn detections(&self) -> u64 {
        self.detections
    }

    /// Adds one value; returns true when the window was cut.
    pub fn update(&mut self, value: f64) -> bool {
        self.insert(value);
        let change = self.detect_change();
        if change {
            self.detections += 1;
        }
        change
    }

    fn insert(&mut self, value: f64) {
        if self.width > 0 {
            let mean = self.total / self.width as f64;
            let w = self.width as f64;
            self.m2 += w * (value - mean) * (value - mean) / (w + 1.0);
        }
        self.width += 1;
        self.total += value;
        self.rows[0].push_back(Bucket { total: value, m2: 0.0 });
        self.compress();
    }

    fn compress(&mut self) {
        let mut i = 0;
        while i < self.rows.len() && self.rows[i].len() > self.max_buckets {
            let size = (1u64 << i) as f64;
            let b1 = self.rows[i].pop_front().expect("row over capacity");
            let b2 = self.rows[i].pop_front().expect("row over capacity");
            let (mu1, mu2) = (b1.total / size, b2.total / size);
            let merged = Bucket {
                total: b1.total + b2.total,
                m2: b1.m2 + b2.m2 + size * size * (mu1 - mu2) * (mu1 - mu2) / (2.0 * size),
            };
            if self.rows.len() == i + 1 {
                self.rows.push(VecDeque::new());
            }
            self.rows[i + 1].push_back(merged);
            i += 1;
        }
    }

    /// Removes the oldest bucket; returns its element count.
    fn delete_oldest(&mut self) -> usize {
        while self.rows.len() > 1 && self.rows.last().is_some_and(VecDeque::is_empty) {
            self.rows.pop();
        }
        let last = self.rows.len() - 1;
        let Some(bucket) = self.rows[last].pop_front() else {
            return 0;
        };
        let n1 = 1usize << last;
        let rest = self.width - n1;
        if rest == 0 {
            self.total = 0.0;
            self.m2 = 0.0;
        } else {
            let u1 = bucket.total / n1 as f64;
            let u_rest = (self.total - bucket.total) / rest as f64;
            let between = n1 as f64 * rest as f64 / self.width as f64 * (u1 - u_rest) * (u1 - u_rest);
            self.m2 = (self.m2 - bucket.m2 - between).max(0.0);
            self.total -= bucket.total;
        }
        self.width = rest;
        while self.rows.len() > 1 && self.rows.last().is_some_and(VecDeque::is_empty) {
            self.rows.pop();
        }
        n1
    }

    fn cut(&self, n0: usize, n1: usize, mean_diff: f64) -> bool {
        let min = self.min_window_length as f64;
        let delta_prime = (2.0 * (self.width as f64).ln() / self.delta).ln();
        let m = 1.0 / (n0 as f64 - min + 1.0) + 1.0 / (n1 as f64 - min + 1.0);
        let epsilon = (2.0 * m * self.variance() * delta_prime).sqrt() + 2.0 / 3.0 * delta_prime * m;
        mean_diff.abs() > epsilon
    }

    fn detect_change(&mut self) -> bool {
        self.tick += 1;
        if self.tick % self.clock != 0 || self.width <= self.grace_period {
            return false;
        }
        let mut change = false;
        let mut reduce = true;
        while reduce {
            reduce = false;
            let (mut n0, mut n1) = (0usize, self.width);
            let (mut u0, mut u1) = (0.0f64, self.total);
            'scan: for i in (0..self.rows.len()).rev() {
                let size = 1usize << i;
                let row_len = self.rows[i].len();
                for k in 0..row_len {
                    let t = self.rows[i][k].total;
                    n0 += size;
                    n1 -= size;
                    u0 += t;
                    u1 -= t;
                    if i == 0 && k == row_len - 1 {
                        break 'scan;
                    }
                    if n0 >= self.min_window_length
                        && n1 >= self.min_window_length
                        && self.cut(n0, n1, u0 / n0 as f64 - u1 / n1 as f64)
                    {
                        reduce = true;
                        change = true;
                        if self.width > 0 {
                            self.delete_oldest();
                        }
                        break 'scan;
                    }
                }
            }
        }
        change
    }
}
