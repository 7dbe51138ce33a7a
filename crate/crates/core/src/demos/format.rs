//! On-disk demonstration format.
//!
//! A demo file is a two-line ASCII header followed by packed
//! little-endian binary:
//!
//! ```text
//! DEXDEMO v1 <task> <obs_dim> <action_dim> <count> <config_hash>
//! meta expert=<label> seed=<seed> wide_init=<0|1> state_dim=<n> horizon=<n>
//! ```
//!
//! then, per trajectory: step count as u64, a success byte, the flat
//! initial state, the initial observation, and per step the action,
//! next observation, and reward, all f64. The header carries the
//! dynamics hash of the recording environment so a loader can refuse
//! demos from a different rig before any training touches them.

use std::fs;
use std::path::Path;

use crate::envsuite::EnvConfig;
use crate::error::{Error, Result};
use crate::numkit::DenseVec;
use crate::trajectory::Trajectory;

use super::{DemoMeta, DemoSet};

const MAGIC: &str = "DEXDEMO";
const VERSION: &str = "v1";

pub fn save_demos(set: &DemoSet, path: &Path) -> Result<()> {
    let m = &set.meta;
    let mut buf = format!(
        "{} {} {} {} {} {} {}\n",
        MAGIC,
        VERSION,
        m.task.as_str(),
        m.obs_dim,
        m.action_dim,
        set.trajectories.len(),
        m.config_hash
    )
    .into_bytes();
    buf.extend_from_slice(
        format!(
            "meta expert={} seed={} wide_init={} state_dim={} horizon={}\n",
            m.expert,
            m.seed,
            u8::from(m.wide_init),
            m.state_dim,
            m.horizon
        )
        .as_bytes(),
    );
    for traj in &set.trajectories {
        buf.extend_from_slice(&(traj.len() as u64).to_le_bytes());
        buf.push(u8::from(traj.success));
        for v in traj.init_state.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for v in traj.observations[0].iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for t in 0..traj.len() {
            for v in traj.actions[t].iter() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            for v in traj.observations[t + 1].iter() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            buf.extend_from_slice(&traj.rewards[t].to_le_bytes());
        }
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Load a demo file, optionally insisting it was recorded on an
/// environment with the same dynamics as `expected`.
pub fn load_demos(path: &Path, expected: Option<&EnvConfig>) -> Result<DemoSet> {
    let bytes = fs::read(path)?;
    let pstr = path.display().to_string();
    let truncated = |detail: &str| Error::DemoTruncated {
        path: pstr.clone(),
        detail: detail.to_string(),
    };

    let mut lines = bytes.splitn(3, |&b| b == b'\n');
    let header = lines.next().ok_or_else(|| truncated("empty file"))?;
    let meta_line = lines.next().ok_or_else(|| truncated("missing meta line"))?;
    let body = lines.next().ok_or_else(|| truncated("missing body"))?;

    let header = std::str::from_utf8(header)
        .map_err(|_| truncated("header is not ASCII"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.first() != Some(&MAGIC) {
        return Err(truncated("not a demo file"));
    }
    if fields.get(1) != Some(&VERSION) {
        return Err(Error::DemoVersion {
            path: pstr,
            found: fields.get(1).unwrap_or(&"").to_string(),
        });
    }
    if fields.len() != 7 {
        return Err(truncated("malformed header"));
    }
    let task = crate::envsuite::Task::parse(fields[2])
        .ok_or_else(|| truncated("unknown task in header"))?;
    let parse_dim = |s: &str, what: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| truncated(&format!("bad {what} in header")))
    };
    let obs_dim = parse_dim(fields[3], "observation dim")?;
    let action_dim = parse_dim(fields[4], "action dim")?;
    let count = parse_dim(fields[5], "count")?;
    let config_hash = fields[6].to_string();

    let meta_line = std::str::from_utf8(meta_line)
        .map_err(|_| truncated("meta line is not ASCII"))?;
    let mut expert = String::new();
    let mut seed = 0u64;
    let mut wide_init = false;
    let mut state_dim = 0usize;
    let mut horizon = 0usize;
    for pair in meta_line.split_whitespace().skip(1) {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| truncated("malformed meta line"))?;
        match key {
            "expert" => expert = value.to_string(),
            "seed" => seed = value.parse().map_err(|_| truncated("bad seed"))?,
            "wide_init" => wide_init = value == "1",
            "state_dim" => state_dim = value.parse().map_err(|_| truncated("bad state dim"))?,
            "horizon" => horizon = value.parse().map_err(|_| truncated("bad horizon"))?,
            _ => return Err(truncated(&format!("unknown meta key {key}"))),
        }
    }
    if state_dim == 0 || horizon == 0 {
        return Err(truncated("incomplete meta line"));
    }

    if let Some(cfg) = expected {
        let want = cfg.config_hash();
        if config_hash != want {
            return Err(Error::DemoConfigMismatch {
                file_hash: config_hash,
                want_hash: want,
            });
        }
    }

    let mut cursor = body;
    let mut take = |n: usize, what: &str| -> Result<&[u8]> {
        if cursor.len() < n {
            return Err(truncated(what));
        }
        let (head, tail) = cursor.split_at(n);
        cursor = tail;
        Ok(head)
    };
    let read_f64s = |raw: &[u8]| -> Vec<f64> {
        raw.chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect()
    };

    let mut trajectories = Vec::with_capacity(count);
    for i in 0..count {
        let steps = u64::from_le_bytes(
            take(8, &format!("trajectory {i} step count"))?
                .try_into()
                .unwrap(),
        ) as usize;
        if steps > horizon {
            return Err(truncated(&format!("trajectory {i} longer than horizon")));
        }
        let success = take(1, &format!("trajectory {i} success flag"))?[0] != 0;
        let init_state = read_f64s(take(8 * state_dim, &format!("trajectory {i} init state"))?);
        let first_obs = read_f64s(take(8 * obs_dim, &format!("trajectory {i} first observation"))?);
        let mut traj = Trajectory {
            init_state: DenseVec::from_vec(init_state),
            observations: Vec::with_capacity(steps + 1),
            actions: Vec::with_capacity(steps),
            rewards: Vec::with_capacity(steps),
            log_probs: vec![0.0; steps],
            success,
        };
        traj.observations.push(DenseVec::from_vec(first_obs));
        for t in 0..steps {
            let detail = format!("trajectory {i} step {t}");
            traj.actions
                .push(DenseVec::from_vec(read_f64s(take(8 * action_dim, &detail)?)));
            traj.observations
                .push(DenseVec::from_vec(read_f64s(take(8 * obs_dim, &detail)?)));
            traj.rewards.push(f64::from_le_bytes(
                take(8, &detail)?.try_into().unwrap(),
            ));
        }
        trajectories.push(traj);
    }
    if !cursor.is_empty() {
        return Err(truncated("trailing data"));
    }

    Ok(DemoSet {
        meta: DemoMeta {
            task,
            obs_dim,
            action_dim,
            state_dim,
            horizon,
            count,
            config_hash,
            expert,
            seed,
            wide_init,
        },
        trajectories,
    })
}
