//! Model checkpoints.
//!
//! ```text
//! magic "SEVM" | version u32 | group count u32
//! per group: fan_in u32 | fan_out u32 | n_params u64
//! per group: n_params f64
//! JSON trailer (rest of file)
//! ```
//!
//! Integers and floats are little-endian. The trailer carries the layer
//! spec, input scaler, freeze flags, learning rate multipliers, the
//! training configuration and the session aggregator.

use serde::{Deserialize, Serialize};

use screeneval_core::model::{Aggregator, InputScaler, LayeredModel, ModelSpec, ParameterGroup, TrainConfig};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"SEVM";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AggregatorRecord {
    Mean,
    Learned { scaler: InputScaler, params: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trailer {
    pub spec: ModelSpec,
    pub scaler: InputScaler,
    pub frozen: Vec<bool>,
    pub lr_multipliers: Vec<f64>,
    pub train: TrainConfig,
    pub aggregator: AggregatorRecord,
    /// Input kind the model was trained on, `filterbank` or `text`.
    pub feature_kind: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: LayeredModel,
    pub aggregator: Aggregator,
    pub train: TrainConfig,
    pub feature_kind: String,
}

fn aggregator_record(a: &Aggregator) -> AggregatorRecord {
    match a {
        Aggregator::Mean => AggregatorRecord::Mean,
        Aggregator::Learned(m) => AggregatorRecord::Learned {
            scaler: m.scaler.clone(),
            params: m.groups[0].params.clone(),
        },
    }
}

fn aggregator_from(r: AggregatorRecord) -> Result<Aggregator, String> {
    match r {
        AggregatorRecord::Mean => Ok(Aggregator::Mean),
        AggregatorRecord::Learned { scaler, params } => {
            let mut m = LayeredModel::zeros(ModelSpec {
                input_dim: 4,
                hidden: vec![],
            })
            .map_err(|e| e.to_string())?;
            if params.len() != m.groups[0].params.len() || scaler.shift.len() != 4 || scaler.scale.len() != 4 {
                return Err("learned aggregator has the wrong shape".into());
            }
            m.groups[0].params = params;
            m.scaler = scaler;
            Ok(Aggregator::Learned(m))
        }
    }
}

pub fn encode(c: &Checkpoint) -> Vec<u8> {
    let m = &c.model;
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(m.groups.len() as u32).to_le_bytes());
    for g in &m.groups {
        out.extend_from_slice(&(g.fan_in as u32).to_le_bytes());
        out.extend_from_slice(&(g.fan_out as u32).to_le_bytes());
        out.extend_from_slice(&(g.params.len() as u64).to_le_bytes());
    }
    for g in &m.groups {
        for p in &g.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
    }
    let trailer = Trailer {
        spec: m.spec.clone(),
        scaler: m.scaler.clone(),
        frozen: m.frozen_flags(),
        lr_multipliers: m.groups.iter().map(|g| g.lr_multiplier).collect(),
        train: c.train.clone(),
        aggregator: aggregator_record(&c.aggregator),
        feature_kind: c.feature_kind.clone(),
    };
    out.extend_from_slice(serde_json::to_string(&trailer).expect("trailer serializes").as_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len()).ok_or("checkpoint is truncated")?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint, String> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != CHECKPOINT_MAGIC {
        return Err("not a model checkpoint".into());
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(format!("unsupported checkpoint version {version}"));
    }
    let n_groups = r.u32()? as usize;
    let mut shapes = Vec::new();
    for _ in 0..n_groups {
        let fan_in = r.u32()? as usize;
        let fan_out = r.u32()? as usize;
        let n = r.u64()? as usize;
        if fan_in.checked_add(1).and_then(|v| v.checked_mul(fan_out)) != Some(n) {
            return Err("group header is inconsistent".into());
        }
        shapes.push((fan_in, fan_out, n));
    }
    let mut groups = Vec::with_capacity(n_groups);
    for (fan_in, fan_out, n) in shapes {
        let raw = r.take(n.checked_mul(8).ok_or("group too large")?)?;
        let params = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        groups.push(ParameterGroup {
            params,
            frozen: false,
            lr_multiplier: 1.0,
            fan_in,
            fan_out,
        });
    }
    let trailer: Trailer = serde_json::from_slice(&bytes[r.pos..]).map_err(|e| format!("trailer: {e}"))?;
    if trailer.frozen.len() != n_groups || trailer.lr_multipliers.len() != n_groups {
        return Err("trailer does not match the group count".into());
    }
    for (g, (f, lr)) in groups.iter_mut().zip(trailer.frozen.iter().zip(&trailer.lr_multipliers)) {
        g.frozen = *f;
        g.lr_multiplier = *lr;
    }
    let model = LayeredModel {
        spec: trailer.spec,
        scaler: trailer.scaler,
        groups,
    };
    model.check_dims().map_err(|e| e.to_string())?;
    Ok(Checkpoint {
        model,
        aggregator: aggregator_from(trailer.aggregator)?,
        train: trailer.train,
        feature_kind: trailer.feature_kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let mut model = LayeredModel::new(
            ModelSpec {
                input_dim: 5,
                hidden: vec![4, 3],
            },
            3,
        )
        .unwrap();
        model.groups[0].frozen = true;
        model.groups[1].lr_multiplier = 0.5;
        model.scaler.shift[2] = 0.1 + 0.2;
        let mut agg = LayeredModel::zeros(ModelSpec {
            input_dim: 4,
            hidden: vec![],
        })
        .unwrap();
        agg.groups[0].params = vec![1.0 / 3.0, -2.5, 1e-300, 7.0, 0.125];
        Checkpoint {
            model,
            aggregator: Aggregator::Learned(agg),
            train: TrainConfig::default(),
            feature_kind: "filterbank".into(),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = sample();
        let bytes = encode(&c);
        assert_eq!(&bytes[..4], b"SEVM");
        assert_eq!(decode(&bytes).unwrap(), c);
        assert_eq!(encode(&decode(&bytes).unwrap()), bytes);
    }

    #[test]
    fn rejects_damage() {
        let bytes = encode(&sample());
        assert!(decode(&bytes[..20]).is_err());
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(decode(&wrong).is_err());
        let mut trailer_cut = bytes.clone();
        trailer_cut.truncate(bytes.len() - 3);
        assert!(decode(&trailer_cut).is_err());
    }
}
