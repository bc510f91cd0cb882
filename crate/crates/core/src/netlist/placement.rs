// SPDX-License-Identifier: Apache-2.0

use crate::error::NetlistError;
use std::collections::BTreeMap;

/// Cell coordinates keyed by instance id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Placement {
    pub coords: BTreeMap<String, (f64, f64)>,
}

impl Placement {
    /// Reads `id,x,y` rows. A leading header row is skipped when its
    /// coordinates are not numeric.
    pub fn parse_csv(text: &str) -> Result<Placement, NetlistError> {
        let mut rd = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut coords = BTreeMap::new();
        for (i, rec) in rd.records().enumerate() {
            let bad = |msg: &str| NetlistError::Placement {
                line: i + 1,
                msg: msg.to_string(),
            };
            let rec = rec.map_err(|e| bad(&e.to_string()))?;
            if rec.len() != 3 {
                return Err(bad("expected id,x,y"));
            }
            let (x, y) = match (rec[1].parse::<f64>(), rec[2].parse::<f64>()) {
                (Ok(x), Ok(y)) => (x, y),
                _ if i == 0 => continue,
                _ => return Err(bad("non-numeric coordinate")),
            };
            coords.insert(rec[0].to_string(), (x, y));
        }
        Ok(Placement { coords })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,x,y\n");
        for (id, (x, y)) in &self.coords {
            out += &format!("{id},{x},{y}\n");
        }
        out
    }

    pub fn get(&self, id: &str) -> Option<(f64, f64)> {
        self.coords.get(id).copied()
    }
}
