use std::io::{Read, Write};

use nalgebra::DVector;

use super::AdmissibilitySystem;
use crate::error::{Error, Result};

/// Horizontal controls `G = (g_{m+1}..g_{m+k})` sampled at every node and
/// half-node of every characteristic.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlField {
    pub k: usize,
    pub lines: Vec<Vec<DVector<f64>>>,
}

/// Vertical components `F = (f_{m+k+1}..f_n)` sampled at the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct VerticalField {
    pub r: usize,
    pub lines: Vec<Vec<DVector<f64>>>,
}

impl ControlField {
    pub fn zeros(sys: &AdmissibilitySystem) -> Self {
        Self {
            k: sys.k,
            lines: vec![vec![DVector::zeros(sys.k); sys.fine_len()]; sys.lines.len()],
        }
    }

    /// Samples `g(x_1, line)` at every fine point.
    pub fn from_fn<F>(sys: &AdmissibilitySystem, g: F) -> Result<Self>
    where
        F: Fn(f64, usize) -> Result<DVector<f64>>,
    {
        let mut lines = Vec::with_capacity(sys.lines.len());
        for l in 0..sys.lines.len() {
            let mut line = Vec::with_capacity(sys.fine_len());
            for i in 0..sys.fine_len() {
                let v = g(sys.fine_x1(i), l)?;
                if v.len() != sys.k {
                    return Err(Error::DimensionMismatch {
                        expected: sys.k,
                        found: v.len(),
                    });
                }
                line.push(v);
            }
            lines.push(line);
        }
        Ok(Self { k: sys.k, lines })
    }

    /// Builds fine samples from node samples, filling half-nodes by cubic
    /// interpolation through the four nearest nodes.
    pub fn from_nodes(sys: &AdmissibilitySystem, nodes: Vec<Vec<DVector<f64>>>) -> Result<Self> {
        let n = sys.steps;
        if nodes.len() != sys.lines.len() || nodes.iter().any(|l| l.len() != n + 1) {
            return Err(Error::Invalid("control samples do not match the grid".into()));
        }
        let lines = nodes
            .into_iter()
            .map(|v| {
                let mut fine = Vec::with_capacity(2 * n + 1);
                for i in 0..n {
                    fine.push(v[i].clone());
                    let mid = if i == 0 {
                        (&v[0] * 5.0 + &v[1] * 15.0 - &v[2] * 5.0 + &v[3]) / 16.0
                    } else if i == n - 1 {
                        (&v[n] * 5.0 + &v[n - 1] * 15.0 - &v[n - 2] * 5.0 + &v[n - 3]) / 16.0
                    } else {
                        (-&v[i - 1] + &v[i] * 9.0 + &v[i + 1] * 9.0 - &v[i + 2]) / 16.0
                    };
                    fine.push(mid);
                }
                fine.push(v[n].clone());
                fine
            })
            .collect();
        Ok(Self { k: sys.k, lines })
    }

    pub fn node(&self, line: usize, i: usize) -> &DVector<f64> {
        &self.lines[line][2 * i]
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        Self {
            k: self.k,
            lines: self
                .lines
                .iter()
                .zip(&other.lines)
                .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u * a + v * b).collect())
                .collect(),
        }
    }

    /// Reads node samples from CSV with columns `i, j1.., g<idx>..`.
    pub fn read_csv<R: Read>(sys: &AdmissibilitySystem, reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let slice_dim = sys.slice_dim();
        let expected = csv_header(sys, 'g');
        let got: Vec<&str> = headers.iter().collect();
        if got != expected {
            return Err(Error::Csv(format!(
                "expected columns {expected:?}, found {got:?}"
            )));
        }
        let mut nodes: Vec<Vec<Option<DVector<f64>>>> =
            vec![vec![None; sys.steps + 1]; sys.lines.len()];
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let field = |c: usize| -> Result<&str> {
                rec.get(c)
                    .ok_or_else(|| Error::Csv(format!("row {}: missing column {c}", row + 2)))
            };
            let int = |c: usize| -> Result<usize> {
                field(c)?
                    .parse()
                    .map_err(|_| Error::Csv(format!("row {}: bad index", row + 2)))
            };
            let i = int(0)?;
            let idx = (0..slice_dim).map(|c| int(c + 1)).collect::<Result<Vec<_>>>()?;
            let l = sys
                .line_of_index(&idx)
                .ok_or_else(|| Error::Csv(format!("row {}: no line with index {idx:?}", row + 2)))?;
            if i > sys.steps {
                return Err(Error::Csv(format!("row {}: node {i} out of range", row + 2)));
            }
            let vals = (0..sys.k)
                .map(|c| {
                    field(1 + slice_dim + c)?
                        .parse::<f64>()
                        .map_err(|_| Error::Csv(format!("row {}: bad value", row + 2)))
                })
                .collect::<Result<Vec<_>>>()?;
            nodes[l][i] = Some(DVector::from_vec(vals));
        }
        let nodes = nodes
            .into_iter()
            .enumerate()
            .map(|(l, line)| {
                line.into_iter()
                    .enumerate()
                    .map(|(i, v)| {
                        v.ok_or_else(|| Error::Csv(format!("missing node {i} on line {l}")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_nodes(sys, nodes)
    }

    /// Writes node samples in the layout accepted by [`ControlField::read_csv`].
    pub fn write_csv<W: Write>(&self, sys: &AdmissibilitySystem, writer: W) -> Result<()> {
        let nodes: Vec<Vec<DVector<f64>>> = self
            .lines
            .iter()
            .map(|l| l.iter().step_by(2).cloned().collect())
            .collect();
        write_node_csv(sys, &nodes, 'g', writer)
    }
}

impl VerticalField {
    pub fn zeros(sys: &AdmissibilitySystem) -> Self {
        let r = sys.r;
        Self {
            r,
            lines: vec![vec![DVector::zeros(r); sys.steps + 1]; sys.lines.len()],
        }
    }

    /// Samples `f(x_1, line)` at every node.
    pub fn from_fn<F>(sys: &AdmissibilitySystem, f: F) -> Result<Self>
    where
        F: Fn(f64, usize) -> Result<DVector<f64>>,
    {
        let mut lines = Vec::with_capacity(sys.lines.len());
        for l in 0..sys.lines.len() {
            let line = (0..=sys.steps)
                .map(|i| f(sys.node_x1(i), l))
                .collect::<Result<Vec<_>>>()?;
            if line.iter().any(|v| v.len() != sys.r) {
                return Err(Error::DimensionMismatch {
                    expected: sys.r,
                    found: line[0].len(),
                });
            }
            lines.push(line);
        }
        Ok(Self { r: sys.r, lines })
    }

    /// Values at `x_1 = ε`, one per line.
    pub fn endpoint(&self) -> Vec<DVector<f64>> {
        self.lines
            .iter()
            .map(|l| l.last().cloned().unwrap_or_else(|| DVector::zeros(self.r)))
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.lines
            .iter()
            .flatten()
            .fold(0.0, |m, v| m.max(v.amax()))
    }

    pub fn write_csv<W: Write>(&self, sys: &AdmissibilitySystem, writer: W) -> Result<()> {
        write_node_csv(sys, &self.lines, 'f', writer)
    }
}

fn csv_header(sys: &AdmissibilitySystem, prefix: char) -> Vec<String> {
    let mut h = vec!["i".to_string()];
    h.extend((1..=sys.slice_dim()).map(|j| format!("j{j}")));
    let (first, count) = if prefix == 'g' {
        (sys.m + 1, sys.k)
    } else {
        (sys.m + sys.k + 1, sys.r)
    };
    h.extend((0..count).map(|c| format!("{prefix}{}", first + c)));
    h
}

fn write_node_csv<W: Write>(
    sys: &AdmissibilitySystem,
    nodes: &[Vec<DVector<f64>>],
    prefix: char,
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(csv_header(sys, prefix))?;
    for (l, line) in nodes.iter().enumerate() {
        for (i, v) in line.iter().enumerate() {
            let mut rec = vec![i.to_string()];
            rec.extend(sys.lines[l].index.iter().map(|j| j.to_string()));
            rec.extend(v.iter().map(|x| format!("{x:?}")));
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}
