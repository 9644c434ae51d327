use std::io::{Read, Write};

use rand::Rng as _;

use super::EmpiricalMeasure;
use crate::error::{invalid_arg, Error, Result};
use crate::io::format_f64;
use crate::qmc_points::PointSet;
use crate::reduce::ordered_map;

/// Dense layer `y = x W + b` with `W` stored row-major as `inputs x outputs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Layer {
    pub fn new(inputs: usize, outputs: usize, w: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if inputs == 0 || outputs == 0 || w.len() != inputs * outputs || b.len() != outputs {
            return Err(invalid_arg(format!(
                "layer {inputs}x{outputs} got {} weights and {} biases",
                w.len(),
                b.len()
            )));
        }
        if w.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(invalid_arg("non-finite layer weight"));
        }
        Ok(Self { inputs, outputs, w, b })
    }

    fn apply(&self, x: &[f64], act: fn(f64) -> f64) -> Vec<f64> {
        let mut y = self.b.clone();
        for (xi, wrow) in x.iter().zip(self.w.chunks_exact(self.outputs)) {
            for (yj, wij) in y.iter_mut().zip(wrow) {
                *yj += xi * wij;
            }
        }
        y.iter_mut().for_each(|v| *v = act(*v));
        y
    }
}

/// Decoder weights: softplus on hidden layers, logistic on the output.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpWeights {
    layers: Vec<Layer>,
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl MlpWeights {
    pub const DEFAULT_SIZES: [usize; 4] = [2, 500, 500, 784];

    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(invalid_arg("network needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(invalid_arg(format!(
                    "layer widths do not chain: {} -> {}",
                    pair[0].outputs, pair[1].inputs
                )));
            }
        }
        Ok(Self { layers })
    }

    /// All-zero network with the given widths.
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        Self::build(sizes, |_, _| 0.0)
    }

    /// Uniform Glorot-style initialisation from a seed, zero biases.
    pub fn random(sizes: &[usize], seed: u64) -> Result<Self> {
        let mut rng = crate::seed::rng(seed);
        Self::build(sizes, |fan_in, fan_out| {
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            rng.gen_range(-a..a)
        })
    }

    fn build(sizes: &[usize], mut draw: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(invalid_arg("need at least input and output widths"));
        }
        let layers = sizes
            .windows(2)
            .map(|io| {
                let w = (0..io[0] * io[1]).map(|_| draw(io[0], io[1])).collect();
                Layer::new(io[0], io[1], w, vec![0.0; io[1]])
            })
            .collect::<Result<_>>()?;
        Self::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn forward(&self, u: &[f64]) -> Vec<f64> {
        let last = self.layers.len() - 1;
        let mut x = u.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            x = layer.apply(&x, if l == last { logistic } else { softplus });
        }
        x
    }

    /// Reads sections `W1,rows,cols` / `b1,1,len`, each followed by its
    /// rows of values.
    pub fn from_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(r);
        let mut records = rdr.records();
        let mut sections: Vec<(String, usize, usize, Vec<f64>)> = Vec::new();
        while let Some(head) = records.next() {
            let head = head?;
            if head.len() != 3 {
                return Err(Error::Parse(format!("expected section header, got {} fields", head.len())));
            }
            let name = head[0].to_string();
            let dims = |k: usize| {
                head[k]
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("section {name}: {e}")))
            };
            let (rows, cols) = (dims(1)?, dims(2)?);
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let rec = records
                    .next()
                    .ok_or_else(|| Error::Parse(format!("section {name} is truncated")))??;
                if rec.len() != cols {
                    return Err(Error::Parse(format!("section {name}: row has {} of {cols} values", rec.len())));
                }
                for f in rec.iter() {
                    data.push(f.parse::<f64>().map_err(|e| Error::Parse(format!("section {name}: {e}")))?);
                }
            }
            sections.push((name, rows, cols, data));
        }
        if sections.is_empty() || sections.len() % 2 != 0 {
            return Err(Error::Parse("weight file needs W and b sections in pairs".into()));
        }
        let mut layers = Vec::new();
        for (k, pair) in sections.chunks_exact(2).enumerate() {
            let (wn, wr, wc, w) = &pair[0];
            let (bn, br, bc, b) = &pair[1];
            if *wn != format!("W{}", k + 1) || *bn != format!("b{}", k + 1) || *br != 1 || bc != wc {
                return Err(Error::Parse(format!("unexpected sections {wn}/{bn} for layer {}", k + 1)));
            }
            layers.push(Layer::new(*wr, *wc, w.clone(), b.clone())?);
        }
        Self::new(layers)
    }

    pub fn to_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().flexible(true).from_writer(w);
        for (k, layer) in self.layers.iter().enumerate() {
            let id = k + 1;
            wtr.write_record([format!("W{id}"), layer.inputs.to_string(), layer.outputs.to_string()])?;
            for row in layer.w.chunks_exact(layer.outputs) {
                wtr.write_record(row.iter().map(|&v| format_f64(v)))?;
            }
            wtr.write_record([format!("b{id}"), "1".into(), layer.outputs.to_string()])?;
            wtr.write_record(layer.b.iter().map(|&v| format_f64(v)))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub fn mlp_generate(weights: &MlpWeights, ps: &PointSet) -> Result<EmpiricalMeasure> {
    if ps.s() != weights.input_dim() {
        return Err(invalid_arg(format!(
            "network takes {} inputs, point set has {}",
            weights.input_dim(),
            ps.s()
        )));
    }
    let rows = ordered_map(ps.n(), |i| weights.forward(ps.row(i)));
    Ok(EmpiricalMeasure::from_parts(rows.concat(), ps.n(), weights.output_dim()))
}
