//! Dense joint probability tables over finite axes.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub labels: Vec<String>,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn size(&self) -> usize {
        self.labels.len()
    }
}

/// A joint pmf stored densely, mixed radix with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    pub axes: Vec<Axis>,
    pub probs: Vec<f64>,
}

impl JointTable {
    pub fn zeros(axes: Vec<Axis>) -> Self {
        let n = axes.iter().map(Axis::size).product();
        JointTable {
            axes,
            probs: vec![0.0; n],
        }
    }

    pub fn index(&self, cell: &[usize]) -> usize {
        let mut k = 0;
        for (ax, &v) in self.axes.iter().zip(cell) {
            k = k * ax.size() + v;
        }
        k
    }

    pub fn cell(&self, mut k: usize) -> Vec<usize> {
        let mut out = vec![0; self.axes.len()];
        for j in (0..self.axes.len()).rev() {
            let n = self.axes[j].size();
            out[j] = k % n;
            k /= n;
        }
        out
    }

    pub fn add(&mut self, cell: &[usize], p: f64) {
        let k = self.index(cell);
        self.probs[k] += p;
    }

    pub fn prob(&self, cell: &[usize]) -> f64 {
        self.probs[self.index(cell)]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn axis_index(&self, name: &str) -> Option<usize> {
        self.axes.iter().position(|a| a.name == name)
    }

    fn resolve(&self, names: &[&str]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.axis_index(n)
                    .ok_or_else(|| Error::UnknownVariable((*n).into()))
            })
            .collect()
    }

    /// Marginal table over the named axes, in the given order.
    pub fn marginal(&self, names: &[&str]) -> Result<JointTable> {
        let keep = self.resolve(names)?;
        let mut out = JointTable::zeros(keep.iter().map(|&i| self.axes[i].clone()).collect());
        let mut sub = vec![0; keep.len()];
        for (k, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let c = self.cell(k);
            for (s, &i) in sub.iter_mut().zip(&keep) {
                *s = c[i];
            }
            out.add(&sub, p);
        }
        Ok(out)
    }

    /// Probability of the event that each named axis takes the given value.
    pub fn event_prob(&self, event: &[(&str, usize)]) -> Result<f64> {
        let idx: Vec<(usize, usize)> = event
            .iter()
            .map(|(n, v)| {
                self.axis_index(n)
                    .map(|i| (i, *v))
                    .ok_or_else(|| Error::UnknownVariable((*n).into()))
            })
            .collect::<Result<_>>()?;
        Ok(self
            .probs
            .iter()
            .enumerate()
            .filter(|(k, _)| {
                let c = self.cell(*k);
                idx.iter().all(|&(i, v)| c[i] == v)
            })
            .map(|(_, p)| *p)
            .sum())
    }

    /// `P(event | given)`, or `None` when the conditioning event is empty.
    pub fn conditional(&self, event: &[(&str, usize)], given: &[(&str, usize)]) -> Result<Option<f64>> {
        let pg = self.event_prob(given)?;
        if pg <= 0.0 {
            return Ok(None);
        }
        let mut both: Vec<(&str, usize)> = given.to_vec();
        both.extend_from_slice(event);
        Ok(Some(self.event_prob(&both)? / pg))
    }

    /// `E(axis | given)` using each axis value's numeric payload.
    pub fn conditional_mean(&self, axis: &str, given: &[(&str, usize)]) -> Result<Option<f64>> {
        let ai = self
            .axis_index(axis)
            .ok_or_else(|| Error::UnknownVariable(axis.into()))?;
        let pg = self.event_prob(given)?;
        if pg <= 0.0 {
            return Ok(None);
        }
        let mut num = 0.0;
        for (v, x) in self.axes[ai].values.clone().into_iter().enumerate() {
            let mut ev: Vec<(&str, usize)> = given.to_vec();
            ev.push((axis, v));
            num += x * self.event_prob(&ev)?;
        }
        Ok(Some(num / pg))
    }

    pub fn mean(&self, axis: &str) -> Result<f64> {
        Ok(self.conditional_mean(axis, &[])?.unwrap_or(f64::NAN))
    }
}
