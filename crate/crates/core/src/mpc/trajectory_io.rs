//! Trajectory CSV: `k,px,py,vx,vy,ax,ay,eps,reward`.
//!
//! Row `k` carries state `x_k`, the input `u_k` applied from it, the slack
//! `ε_{k+1}` of the state that input leads to, and `r(x_k)`. The final row has
//! no input or slack; those cells are blank.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::reward::RewardField;
use crate::scalar::Real;

use super::State;

pub const TRAJECTORY_CSV_HEADER: [&str; 9] = ["k", "px", "py", "vx", "vy", "ax", "ay", "eps", "reward"];

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow<T> {
    pub k: usize,
    pub state: State<T>,
    pub input: Option<Vec2<T>>,
    pub eps: Option<T>,
    pub reward: T,
}

pub fn write_trajectory_csv<T: Real>(
    out: impl Write,
    states: &[State<T>],
    inputs: &[Vec2<T>],
    slacks: &[T],
    field: &RewardField<T>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_CSV_HEADER)?;
    for (k, x) in states.iter().enumerate() {
        let opt = |v: Option<T>| v.map_or(String::new(), |v| v.to_string());
        let u = inputs.get(k);
        w.write_record([
            k.to_string(),
            x.pos.x.to_string(),
            x.pos.y.to_string(),
            x.vel.x.to_string(),
            x.vel.y.to_string(),
            opt(u.map(|u| u.x)),
            opt(u.map(|u| u.y)),
            opt(slacks.get(k).copied()),
            field.eval_extended(x.pos).0.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory_csv<T: Real>(input: impl Read) -> Result<Vec<TrajectoryRow<T>>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(TRAJECTORY_CSV_HEADER) {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: format!("unexpected trajectory header `{}`", header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut rows = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = n + 2;
        let field = |c: usize| -> Result<Option<T>> {
            let s = rec.get(c).unwrap_or("");
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<T>().map(Some).map_err(|_| Error::Parse {
                line,
                column: c + 1,
                message: format!("malformed number `{s}`"),
            })
        };
        let req = |c: usize| -> Result<T> {
            field(c)?.ok_or(Error::Parse {
                line,
                column: c + 1,
                message: "missing value".into(),
            })
        };
        let k = rec.get(0).unwrap_or("").parse::<usize>().map_err(|_| Error::Parse {
            line,
            column: 1,
            message: "malformed step index".into(),
        })?;
        let input = match (field(5)?, field(6)?) {
            (Some(x), Some(y)) => Some(Vec2::new(x, y)),
            _ => None,
        };
        rows.push(TrajectoryRow {
            k,
            state: State::new(req(1)?, req(2)?, req(3)?, req(4)?),
            input,
            eps: field(7)?,
            reward: req(8)?,
        });
    }
    Ok(rows)
}
