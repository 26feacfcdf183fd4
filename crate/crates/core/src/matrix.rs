//! Delay-free systems as integer linear algebra.
//!
//! One row per rule, one column per neuron. Row `r` of a rule `a^c -> a^b`
//! owned by neuron `i` holds `-c` at column `i` and `+b` at every column `j`
//! with a synapse `i -> j`. A step is `C' = C + s·M` for the 0/1 spiking
//! vector `s`.

use std::fmt;

use crate::error::{MatrixError, SimError};
use crate::model::SystemDescription;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionMatrix {
    /// `rows[r][j]`
    pub rows: Vec<Vec<i64>>,
    /// Row index to `(neuron index, rule index)`.
    pub row_index: Vec<(usize, usize)>,
    pub columns: Vec<String>,
}

impl TransitionMatrix {
    pub fn entry(&self, row: usize, col: usize) -> i64 {
        self.rows[row][col]
    }

    pub fn row_of(&self, neuron: usize, rule: usize) -> Option<usize> {
        self.row_index.iter().position(|&x| x == (neuron, rule))
    }

    pub fn row_label(&self, row: usize) -> String {
        let (n, r) = self.row_index[row];
        format!("{}:{}", self.columns[n], r)
    }
}

impl fmt::Display for TransitionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = (0..self.rows.len()).map(|r| self.row_label(r)).collect();
        let lw = labels.iter().map(String::len).max().unwrap_or(0);
        let cw = self
            .columns
            .iter()
            .map(|c| c.chars().count())
            .chain(self.rows.iter().flatten().map(|v| v.to_string().len()))
            .max()
            .unwrap_or(1);
        write!(f, "{:lw$}", "")?;
        for c in &self.columns {
            write!(f, " {c:>cw$}")?;
        }
        writeln!(f)?;
        for (label, row) in labels.iter().zip(&self.rows) {
            write!(f, "{label:lw$}")?;
            for v in row {
                write!(f, " {v:>cw$}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

pub fn build_transition_matrix(system: &SystemDescription) -> Result<TransitionMatrix, MatrixError> {
    let m = system.len();
    let mut rows = Vec::new();
    let mut row_index = Vec::new();
    for (i, n) in system.neurons.iter().enumerate() {
        for (r, rule) in n.rules.iter().enumerate() {
            if rule.delay > 0 {
                return Err(MatrixError::DelayedRule { neuron: n.id.clone(), rule: r, delay: rule.delay });
            }
            let mut row = vec![0i64; m];
            row[i] = -(rule.consumed as i64);
            for target in system.out_neighbors(&n.id) {
                let j = system.index_of(target).expect("synapse endpoints exist");
                row[j] += rule.produced as i64;
            }
            rows.push(row);
            row_index.push((i, r));
        }
    }
    Ok(TransitionMatrix { rows, row_index, columns: system.neurons.iter().map(|n| n.id.clone()).collect() })
}

/// The 0/1 spiking vector for `config`.
pub fn spiking_vector(
    config: &[u64],
    system: &SystemDescription,
    matrix: &TransitionMatrix,
) -> Result<Vec<u8>, MatrixError> {
    if config.len() != system.len() {
        return Err(MatrixError::ShapeMismatch { expected: system.len(), found: config.len() });
    }
    let mut s = vec![0u8; matrix.rows.len()];
    for (row, &(i, r)) in matrix.row_index.iter().enumerate() {
        let rule = &system.neurons[i].rules[r];
        let k = config[i];
        if k >= rule.consumed && rule.guard.matches(k) {
            s[row] = 1;
        }
    }
    for (i, n) in system.neurons.iter().enumerate() {
        let fired: Vec<usize> = matrix
            .row_index
            .iter()
            .enumerate()
            .filter(|(row, &(ni, _))| ni == i && s[*row] == 1)
            .map(|(_, &(_, r))| r)
            .collect();
        if fired.len() > 1 {
            return Err(SimError::Nondeterministic { neuron: n.id.clone(), rules: fired }.into());
        }
    }
    Ok(s)
}

/// `C' = C + s·M`
pub fn matrix_step(
    config: &[u64],
    system: &SystemDescription,
    matrix: &TransitionMatrix,
) -> Result<Vec<u64>, MatrixError> {
    let s = spiking_vector(config, system, matrix)?;
    Ok(apply(config, &s, matrix))
}

fn apply(config: &[u64], s: &[u8], matrix: &TransitionMatrix) -> Vec<u64> {
    let mut next: Vec<i64> = config.iter().map(|&v| v as i64).collect();
    for (row, &on) in s.iter().enumerate() {
        if on == 1 {
            for (j, v) in matrix.rows[row].iter().enumerate() {
                next[j] += v;
            }
        }
    }
    next.into_iter().map(|v| u64::try_from(v).expect("enabled rules never consume more than is stored")).collect()
}

/// Spike vectors from the initial configuration until no rule is enabled or
/// `horizon` steps have run. The first entry is the initial configuration.
pub fn matrix_run(system: &SystemDescription, horizon: u64) -> Result<Vec<Vec<u64>>, MatrixError> {
    if horizon == 0 {
        return Err(SimError::ZeroHorizon.into());
    }
    let matrix = build_transition_matrix(system)?;
    let mut c: Vec<u64> = system.neurons.iter().map(|n| n.initial_spikes).collect();
    let mut out = vec![c.clone()];
    for _ in 0..horizon {
        let s = spiking_vector(&c, system, &matrix)?;
        if s.iter().all(|&x| x == 0) {
            break;
        }
        c = apply(&c, &s, &matrix);
        out.push(c.clone());
    }
    Ok(out)
}
