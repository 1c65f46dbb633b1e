//! Event export, one CSV row per event.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use twophoton_core::montecarlo::EventRecord;

use crate::format::sig9;

pub const EVENT_HEADER: &str = "index,setting,psi1,psi2,raw1,raw2,obs1,obs2,a,b";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRow {
    pub index: u64,
    pub setting: String,
    pub psi1: f64,
    pub psi2: f64,
    pub raw1: u8,
    pub raw2: u8,
    pub obs1: u8,
    pub obs2: u8,
    pub a: i8,
    pub b: i8,
}

impl From<&EventRecord> for EventRow {
    fn from(e: &EventRecord) -> Self {
        Self {
            index: e.index,
            setting: e.setting.label().to_owned(),
            psi1: sig9(e.psi1),
            psi2: sig9(e.psi2),
            raw1: e.raw.0.index() as u8,
            raw2: e.raw.1.index() as u8,
            obs1: e.observed.0.index() as u8,
            obs2: e.observed.1.index() as u8,
            a: e.a,
            b: e.b,
        }
    }
}

pub fn write_events_csv<W: Write>(out: W, events: &[EventRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in events {
        w.serialize(EventRow::from(e))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_events_csv<R: Read>(input: R) -> csv::Result<Vec<EventRow>> {
    csv::Reader::from_reader(input).deserialize().collect()
}
