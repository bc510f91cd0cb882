// SPDX-License-Identifier: Apache-2.0
//! Delay annotation sidecar.
//!
//! Each gate kind carries one row of per-pin delays per size level. Row 0 is
//! the fastest cell. Pins beyond the row length reuse its last entry.

use crate::error::NetlistError;
use crate::netlist::GateKind;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KindDelays {
    pub rows: Vec<Vec<f64>>,
}

/// Slew/load table giving a delay scale factor and an output slew.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LookupTable {
    pub slew: Vec<f64>,
    pub load: Vec<f64>,
    pub scale: Vec<Vec<f64>>,
    pub out_slew: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FfTiming {
    pub t_su: f64,
    pub t_h: f64,
    pub t_cq: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    #[serde(default)]
    pub size: Option<usize>,
    #[serde(default)]
    pub xi: Option<f64>,
    #[serde(default)]
    pub rows: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelayLibrary {
    /// Typical delay of the minimum buffer; unit for inserted delay.
    pub buffer_delay: f64,
    pub default_size: usize,
    /// Output slew of a launching flip-flop or primary input.
    pub launch_slew: f64,
    /// Input pin capacitance used as the load unit.
    pub pin_load: f64,
    pub flipflop: FfTiming,
    pub kinds: BTreeMap<String, KindDelays>,
    #[serde(default)]
    pub tables: BTreeMap<String, LookupTable>,
    #[serde(default)]
    pub overrides: BTreeMap<String, KindDelays>,
}

/// Typical per-pin delays of the bundled library at nominal size.
fn nominal(kind: GateKind) -> f64 {
    match kind {
        GateKind::Not => 0.70,
        GateKind::Buf => 1.00,
        GateKind::Nand => 0.85,
        GateKind::Nor => 0.95,
        GateKind::And => 1.00,
        GateKind::Or => 1.05,
        GateKind::Xor => 1.30,
        GateKind::Xnor => 1.35,
    }
}

impl Default for DelayLibrary {
    fn default() -> Self {
        let mut kinds = BTreeMap::new();
        let mut tables = BTreeMap::new();
        for k in GateKind::ALL {
            let base = nominal(k);
            let row = |f: f64| -> Vec<f64> {
                (0..4)
                    .map(|p| round4(base * f * (1.0 + 0.02 * p as f64)))
                    .collect()
            };
            kinds.insert(
                k.name().to_string(),
                KindDelays {
                    rows: vec![row(0.8), row(1.0), row(1.25)],
                },
            );
            tables.insert(
                k.name().to_string(),
                LookupTable {
                    slew: vec![0.1, 0.5],
                    load: vec![1.0, 5.0],
                    scale: vec![vec![0.965, 1.015], vec![0.985, 1.035]],
                    out_slew: vec![vec![0.18, 0.32], vec![0.22, 0.40]],
                },
            );
        }
        DelayLibrary {
            buffer_delay: 1.0,
            default_size: 1,
            launch_slew: 0.25,
            pin_load: 1.0,
            flipflop: FfTiming {
                t_su: 0.1,
                t_h: 0.05,
                t_cq: 0.1,
            },
            kinds,
            tables,
            overrides: BTreeMap::new(),
        }
    }
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

impl DelayLibrary {
    pub fn levels(&self, kind: GateKind) -> usize {
        self.kinds.get(kind.name()).map_or(1, |k| k.rows.len())
    }

    pub fn pin_delays(&self, id: &str, kind: GateKind, pins: usize, size: usize) -> Vec<f64> {
        let rows = self
            .overrides
            .get(id)
            .or_else(|| self.kinds.get(kind.name()))
            .map(|k| &k.rows);
        let Some(rows) = rows.filter(|r| !r.is_empty()) else {
            return vec![nominal(kind); pins];
        };
        let row = &rows[size.min(rows.len() - 1)];
        (0..pins).map(|p| row[p.min(row.len() - 1)]).collect()
    }

    pub fn parse(text: &str) -> Result<(DelayLibrary, BTreeMap<String, Instance>), NetlistError> {
        #[derive(Deserialize)]
        struct Doc {
            #[serde(flatten)]
            lib: DelayLibrary,
            #[serde(default)]
            instances: BTreeMap<String, Instance>,
        }
        let doc: Doc = toml::from_str(text).map_err(|e| NetlistError::Delays(e.to_string()))?;
        for (name, k) in &doc.lib.kinds {
            if GateKind::parse(name).is_none() {
                return Err(NetlistError::UnknownKind(name.clone()));
            }
            if k.rows.iter().flatten().any(|&d| d <= 0.0) {
                return Err(NetlistError::Delays(format!("non-positive delay for {name}")));
            }
        }
        Ok((doc.lib, doc.instances))
    }

    /// Serializes the library together with per-instance size and inserted
    /// delay annotations.
    pub fn to_document(&self, instances: &BTreeMap<String, Instance>) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            #[serde(flatten)]
            lib: &'a DelayLibrary,
            instances: &'a BTreeMap<String, Instance>,
        }
        toml::to_string(&Doc {
            lib: self,
            instances,
        })
        .expect("library serializes")
    }
}

impl LookupTable {
    /// Bilinear interpolation, clamping to the table range. The flag is set
    /// when clamping happened.
    pub fn eval(&self, slew: f64, load: f64) -> (f64, f64, bool) {
        let (i, fx, cx) = locate(&self.slew, slew);
        let (j, fy, cy) = locate(&self.load, load);
        let bil = |t: &Vec<Vec<f64>>| {
            let a = t[i][j] * (1.0 - fy) + t[i][(j + 1).min(t[i].len() - 1)] * fy;
            let i2 = (i + 1).min(t.len() - 1);
            let b = t[i2][j] * (1.0 - fy) + t[i2][(j + 1).min(t[i2].len() - 1)] * fy;
            a * (1.0 - fx) + b * fx
        };
        (bil(&self.scale), bil(&self.out_slew), cx || cy)
    }
}

fn locate(axis: &[f64], x: f64) -> (usize, f64, bool) {
    if axis.len() < 2 {
        return (0, 0.0, false);
    }
    if x <= axis[0] {
        return (0, 0.0, x < axis[0]);
    }
    let last = axis.len() - 1;
    if x >= axis[last] {
        return (last - 1, 1.0, x > axis[last]);
    }
    let i = axis.windows(2).position(|w| x <= w[1]).unwrap();
    (i, (x - axis[i]) / (axis[i + 1] - axis[i]), false)
}
