use std::io::{Read, Write};

use super::GpError;

/// Training samples with `input_dim`-dimensional inputs and `output_dim`
/// scalar outputs per sample, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    input_dim: usize,
    output_dim: usize,
    inputs: Vec<f64>,
    outputs: Vec<f64>,
}

impl Dataset {
    pub fn new(input_dim: usize, output_dim: usize) -> Self {
        Self {
            input_dim,
            output_dim,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn len(&self) -> usize {
        self.inputs.len().checked_div(self.input_dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn push(&mut self, z: &[f64], y: &[f64]) -> Result<(), GpError> {
        if z.len() != self.input_dim {
            return Err(GpError::DimensionMismatch {
                expected: self.input_dim,
                got: z.len(),
            });
        }
        if y.len() != self.output_dim {
            return Err(GpError::DimensionMismatch {
                expected: self.output_dim,
                got: y.len(),
            });
        }
        if z.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(GpError::NonFinite);
        }
        self.inputs.extend_from_slice(z);
        self.outputs.extend_from_slice(y);
        Ok(())
    }

    pub fn input(&self, j: usize) -> &[f64] {
        &self.inputs[j * self.input_dim..(j + 1) * self.input_dim]
    }

    pub fn output(&self, j: usize) -> &[f64] {
        &self.outputs[j * self.output_dim..(j + 1) * self.output_dim]
    }

    pub fn inputs(&self) -> impl Iterator<Item = &[f64]> {
        self.inputs.chunks_exact(self.input_dim.max(1))
    }

    /// CSV with header `z_1..z_n,y_1..y_p`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), GpError> {
        let mut wtr = csv::Writer::from_writer(w);
        let header: Vec<String> = (1..=self.input_dim)
            .map(|i| format!("z_{i}"))
            .chain((1..=self.output_dim).map(|i| format!("y_{i}")))
            .collect();
        wtr.write_record(&header).map_err(csv_err)?;
        for j in 0..self.len() {
            let row: Vec<String> = self
                .input(j)
                .iter()
                .chain(self.output(j))
                .map(|v| format!("{v:?}"))
                .collect();
            wtr.write_record(&row).map_err(csv_err)?;
        }
        wtr.flush().map_err(|e| GpError::Csv(e.to_string()))
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, GpError> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers().map_err(csv_err)?.clone();
        let input_dim = header.iter().filter(|h| h.starts_with("z_")).count();
        let output_dim = header.iter().filter(|h| h.starts_with("y_")).count();
        if input_dim + output_dim != header.len() || input_dim == 0 {
            return Err(GpError::Csv(format!(
                "expected columns z_1..z_n,y_1..y_p, got {:?}",
                header.iter().collect::<Vec<_>>()
            )));
        }
        let mut ds = Dataset::new(input_dim, output_dim);
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| GpError::Csv(e.to_string()))?;
            ds.push(&vals[..input_dim], &vals[input_dim..])?;
        }
        Ok(ds)
    }
}

fn csv_err(e: csv::Error) -> GpError {
    GpError::Csv(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_preserves_values() {
        let mut ds = Dataset::new(2, 2);
        ds.push(&[0.1, 1.0 / 3.0], &[-0.25, 1e-17]).unwrap();
        ds.push(&[4.5, 2.0], &[0.0, 0.4]).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("z_1,z_2,y_1,y_2\n"));
        assert_eq!(Dataset::read_csv(&buf[..]).unwrap(), ds);
    }

    #[test]
    fn rejects_misaligned_and_non_finite() {
        let mut ds = Dataset::new(2, 1);
        assert!(ds.push(&[0.0], &[0.0]).is_err());
        assert!(ds.push(&[0.0, 0.0], &[0.0, 1.0]).is_err());
        assert!(matches!(ds.push(&[f64::NAN, 0.0], &[0.0]), Err(GpError::NonFinite)));
        assert!(ds.is_empty());
    }
}
