//! `mda-model-v1` text documents.

use std::path::Path;

use nalgebra::{Matrix2, Vector2};

use super::{AgentModel, MdaModel};
use crate::error::{Error, Result};
use crate::kalman::{BeliefParams, DynamicsParams};
use crate::textdoc::{DocReader, DocWriter};

pub const MDA_SCHEMA: &str = "mda-model-v1";

fn mat(m: &Matrix2<f64>) -> [f64; 4] {
    [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
}

impl MdaModel {
    /// Fails when an agent's transition is not a similarity transform, since
    /// the document stores only `(a, c)`.
    pub fn to_text(&self) -> Result<String> {
        let mut w = DocWriter::new(MDA_SCHEMA);
        w.usizes("agents", &[self.len()]);
        w.usizes("max_pad", &[self.max_pad]);
        for (m, agent) in self.agents.iter().enumerate() {
            let d = &agent.dynamics;
            let t = &d.transition;
            if t[(0, 0)] != t[(1, 1)] || t[(0, 1)] != -t[(1, 0)] {
                return Err(Error::schema(format!("agent[{m}].transition"), "not a similarity transform"));
            }
            let b = &agent.belief;
            w.usizes("agent", &[m]);
            w.floats("weight", &[agent.weight]);
            w.floats("a", &[t[(0, 0)]]);
            w.floats("c", &[t[(1, 0)]]);
            w.floats("offset", d.offset.as_slice());
            w.floats("process_cov", &mat(&d.process_cov));
            w.floats("obs_cov", &mat(&d.obs_cov));
            w.floats("start_mean", b.start_mean.as_slice());
            w.floats("start_cov", &mat(&b.start_cov));
            w.floats("end_mean", b.end_mean.as_slice());
            w.floats("end_cov", &mat(&b.end_cov));
        }
        let mut trace = vec![self.em_trace.len() as f64];
        trace.extend(&self.em_trace);
        w.floats("em_trace", &trace);
        Ok(w.finish())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = DocReader::new(text, MDA_SCHEMA)?;
        let n = r.usize1("agents")?;
        if n == 0 {
            return Err(Error::schema("agents", "must be at least 1"));
        }
        let max_pad = r.usize1("max_pad")?;
        let mut agents = Vec::with_capacity(n);
        for m in 0..n {
            let label = |f: &str| format!("agent[{m}].{f}");
            let idx = r.usize1("agent")?;
            if idx != m {
                return Err(Error::schema(label("index"), format!("expected {m}, found {idx}")));
            }
            let vec2 = |r: &mut DocReader, f: &str| -> Result<Vector2<f64>> {
                Ok(Vector2::from_column_slice(&r.floats(f, &label(f), Some(2))?))
            };
            let weight = r.floats("weight", &label("weight"), Some(1))?[0];
            if !(0.0..=1.0).contains(&weight) {
                return Err(Error::schema(label("weight"), "outside [0, 1]"));
            }
            let a = r.floats("a", &label("a"), Some(1))?[0];
            let c = r.floats("c", &label("c"), Some(1))?[0];
            let offset = vec2(&mut r, "offset")?;
            let cov = |r: &mut DocReader, f: &str| -> Result<Matrix2<f64>> {
                let v = r.floats(f, &label(f), Some(4))?;
                let m = Matrix2::new(v[0], v[1], v[2], v[3]);
                if !crate::linalg::is_spd(&m) {
                    return Err(Error::schema(label(f), "not symmetric positive definite"));
                }
                Ok(m)
            };
            let process_cov = cov(&mut r, "process_cov")?;
            let obs_cov = cov(&mut r, "obs_cov")?;
            let start_mean = Vector2::from_column_slice(&r.floats("start_mean", &label("start_mean"), Some(2))?);
            let start_cov = cov(&mut r, "start_cov")?;
            let end_mean = Vector2::from_column_slice(&r.floats("end_mean", &label("end_mean"), Some(2))?);
            let end_cov = cov(&mut r, "end_cov")?;
            agents.push(AgentModel {
                dynamics: DynamicsParams {
                    transition: DynamicsParams::similarity(a, c),
                    offset,
                    process_cov,
                    obs_cov,
                },
                belief: BeliefParams {
                    start_mean,
                    start_cov,
                    end_mean,
                    end_cov,
                },
                weight,
            });
        }
        let trace = r.floats("em_trace", "em_trace", None)?;
        if trace.is_empty() || trace[0] as usize != trace.len() - 1 {
            return Err(Error::schema("em_trace", "length prefix does not match"));
        }
        r.finish()?;
        let model = MdaModel {
            agents,
            max_pad,
            em_trace: trace[1..].to_vec(),
        };
        if (model.weight_sum() - 1.0).abs() > 1e-9 {
            return Err(Error::schema("weight", "mixture weights do not sum to 1"));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::agent;
    use super::*;

    #[test]
    fn text_round_trip_is_exact() {
        let mut b = agent(0.3);
        b.dynamics.transition = DynamicsParams::similarity(0.1 + 0.2, -1.0 / 7.0);
        b.belief.start_mean = Vector2::new(1.0 / 3.0, 1e-7);
        let m = MdaModel {
            agents: vec![agent(0.7), b],
            max_pad: 4,
            em_trace: vec![-10.5, -3.25],
        };
        let text = m.to_text().unwrap();
        assert!(text.starts_with("format mda-model-v1\n"));
        assert_eq!(MdaModel::from_text(&text).unwrap(), m);
    }

    #[test]
    fn errors_name_the_field() {
        let m = MdaModel {
            agents: vec![agent(1.0)],
            max_pad: 0,
            em_trace: vec![],
        };
        let text = m.to_text().unwrap().replace("obs_cov 2.5", "obs_cov -2.5");
        let err = MdaModel::from_text(&text).unwrap_err().to_string();
        assert!(err.contains("agent[0].obs_cov"), "{err}");
        let text = m.to_text().unwrap().replace("\nc ", "\ncc ");
        let err = MdaModel::from_text(&text).unwrap_err().to_string();
        assert!(err.contains("`c`"), "{err}");
    }

    #[test]
    fn general_transition_cannot_be_written() {
        let mut a = agent(1.0);
        a.dynamics.transition[(0, 1)] = 0.5;
        let m = MdaModel {
            agents: vec![a],
            max_pad: 0,
            em_trace: vec![],
        };
        assert!(m.to_text().is_err());
    }
}
