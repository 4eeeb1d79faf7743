//! JSON state files.
//!
//! Accepted shapes (exactly one source per file):
//!
//! ```json
//! {"V": [[..4..], [..4..], [..4..], [..4..]]}
//! {"A": [[..2..], [..2..]], "B": [[..]], "C": [[..]]}
//! {"tmss": {"r": 1.0}}
//! ```
//!
//! An optional `"mean"` (four numbers) must be zero. Files are written in
//! the `"V"` form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{make_state, Block2, TwoModeState};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    #[serde(rename = "V")]
    v: Option<[[f64; 4]; 4]>,
    #[serde(rename = "A")]
    a: Option<[[f64; 2]; 2]>,
    #[serde(rename = "B")]
    b: Option<[[f64; 2]; 2]>,
    #[serde(rename = "C")]
    c: Option<[[f64; 2]; 2]>,
    tmss: Option<TmssSpec>,
    mean: Option<[f64; 4]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TmssSpec {
    r: f64,
}

#[derive(Serialize)]
struct WrittenState {
    #[serde(rename = "V")]
    v: [[f64; 4]; 4],
}

fn block(rows: [[f64; 2]; 2]) -> Block2 {
    Block2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1])
}

pub fn parse_state(json: &str) -> Result<TwoModeState> {
    let raw: RawState = serde_json::from_str(json).map_err(|e| Error::StateFile(e.to_string()))?;
    if let Some(mean) = raw.mean {
        if mean.iter().any(|&m| m != 0.0) {
            return Err(Error::NonZeroMean);
        }
    }
    let blocks = (raw.a, raw.b, raw.c);
    let has_blocks = blocks.0.is_some() || blocks.1.is_some() || blocks.2.is_some();
    let sources = usize::from(raw.v.is_some()) + usize::from(has_blocks) + usize::from(raw.tmss.is_some());
    if sources != 1 {
        return Err(Error::StateFile(
            "expected exactly one of \"V\", \"A\"/\"B\"/\"C\" or \"tmss\"".into(),
        ));
    }
    if let Some(v) = raw.v {
        return TwoModeState::from_rows(v);
    }
    if let Some(t) = raw.tmss {
        if !(t.r.is_finite() && t.r >= 0.0) {
            return Err(Error::StateFile(format!(
                "tmss.r must be finite and non-negative, got {}",
                t.r
            )));
        }
        return Ok(TwoModeState::tmss(t.r));
    }
    match blocks {
        (Some(a), Some(b), Some(c)) => make_state(&block(a), &block(b), &block(c)),
        _ => Err(Error::StateFile("\"A\", \"B\" and \"C\" must all be given".into())),
    }
}

pub fn read_state(path: &Path) -> Result<TwoModeState> {
    parse_state(&std::fs::read_to_string(path)?)
}

pub fn state_to_json(state: &TwoModeState) -> String {
    serde_json::to_string_pretty(&WrittenState { v: state.to_rows() }).expect("plain arrays always serialize")
}

pub fn write_state(path: &Path, state: &TwoModeState) -> Result<()> {
    std::fs::write(path, state_to_json(state) + "\n")?;
    Ok(())
}
