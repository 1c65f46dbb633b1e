//! Joint tables as flat `{i, j, theta1, theta2, eta, alpha, p}` records.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use twophoton_core::detection::JointProbabilityTable;

use crate::format::sig9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRecord {
    pub i: u8,
    pub j: u8,
    pub theta1: f64,
    pub theta2: f64,
    pub eta: f64,
    pub alpha: f64,
    pub p: f64,
}

/// One record per cell, row-major from `(1, 1)`, values rounded to nine digits.
pub fn table_records(t: &JointProbabilityTable) -> Vec<TableRecord> {
    t.iter()
        .map(|(i, j, p)| TableRecord {
            i: i as u8,
            j: j as u8,
            theta1: sig9(t.theta1),
            theta2: sig9(t.theta2),
            eta: sig9(t.eta),
            alpha: sig9(t.alpha),
            p: sig9(p),
        })
        .collect()
}

pub fn write_table_csv<W: Write>(out: W, t: &JointProbabilityTable) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in table_records(t) {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table_csv<R: Read>(input: R) -> csv::Result<Vec<TableRecord>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use twophoton_core::detection::{apply_alpha_confusion, joint_table};

    #[test]
    fn csv_round_trip() {
        let t = apply_alpha_confusion(&joint_table(0.3, -1.1, 0.8).unwrap(), 0.25).unwrap();
        let mut buf = Vec::new();
        write_table_csv(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("i,j,theta1,theta2,eta,alpha,p\n1,1,0.3,-1.1,0.8,0.25,"));
        assert_eq!(text.lines().count(), 37);
        assert_eq!(read_table_csv(buf.as_slice()).unwrap(), table_records(&t));
    }

    #[test]
    fn json_round_trip() {
        let records = table_records(&joint_table(0.7, 0.2, 1.0).unwrap());
        let text = serde_json::to_string(&records).unwrap();
        assert_eq!(
            serde_json::from_str::<Vec<TableRecord>>(&text).unwrap(),
            records
        );
        assert!((records.iter().map(|r| r.p).sum::<f64>() - 1.0).abs() < 1e-8);
    }
}
