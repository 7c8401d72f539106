//! `hmm-model-v1` text documents.

use std::path::Path;

use nalgebra::DMatrix;

use super::{Cov6, EmissionGaussian, HmmModel};
use crate::error::{Error, Result};
use crate::linalg::is_spd;
use crate::textdoc::{DocReader, DocWriter};
use crate::traj::Window6;

pub const HMM_SCHEMA: &str = "hmm-model-v1";

impl HmmModel {
    pub fn to_text(&self) -> String {
        let m = self.n_states();
        let mut w = DocWriter::new(HMM_SCHEMA);
        w.usizes("states", &[m]);
        w.usizes("agent_ids", &self.agent_ids);
        w.floats("initial", &self.initial);
        for i in 0..m {
            let row: Vec<f64> = self.trans.row(i).iter().copied().collect();
            w.floats("trans", &row);
        }
        for (i, e) in self.emissions.iter().enumerate() {
            w.usizes("state", &[i]);
            w.floats("mean", e.mean.as_slice());
            // row-major
            let cov: Vec<f64> = (0..6).flat_map(|r| (0..6).map(move |c| (r, c))).map(|(r, c)| e.cov[(r, c)]).collect();
            w.floats("cov", &cov);
        }
        w.finish()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = DocReader::new(text, HMM_SCHEMA)?;
        let m = r.usize1("states")?;
        if m == 0 {
            return Err(Error::schema("states", "must be at least 1"));
        }
        let agent_ids = r.usizes("agent_ids", "agent_ids", Some(m))?;
        let initial = r.floats("initial", "initial", Some(m))?;
        let mut trans = DMatrix::zeros(m, m);
        for i in 0..m {
            let row = r.floats("trans", &format!("trans[{i}]"), Some(m))?;
            for (j, v) in row.into_iter().enumerate() {
                trans[(i, j)] = v;
            }
        }
        let mut emissions = Vec::with_capacity(m);
        for i in 0..m {
            let idx = r.usize1("state")?;
            if idx != i {
                return Err(Error::schema(format!("state[{i}]"), format!("expected index {i}, found {idx}")));
            }
            let mean = Window6::from_column_slice(&r.floats("mean", &format!("state[{i}].mean"), Some(6))?);
            let v = r.floats("cov", &format!("state[{i}].cov"), Some(36))?;
            let cov = Cov6::from_row_slice(&v);
            if !is_spd(&cov) {
                return Err(Error::schema(format!("state[{i}].cov"), "not symmetric positive definite"));
            }
            emissions.push(EmissionGaussian { mean, cov });
        }
        r.finish()?;
        let model = HmmModel {
            initial,
            trans,
            emissions,
            agent_ids,
        };
        model.validate().map_err(|e| Error::schema("initial/trans", e.to_string()))?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}
