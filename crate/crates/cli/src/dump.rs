//! Compact binary trajectory dump, schema-versioned. Little-endian
//! throughout; the exact per-slot event log is stored, so the trajectory is
//! reconstructed bit-for-bit (scheduling counts are re-derived and verified
//! on load).

use std::collections::HashMap;
use std::io::{Read, Write};

use byteorder::{ReadBytesExt, WriteBytesExt, LE};
use thiserror::Error;

use bpsim_core::engine::{GKey, ServiceRec, Snapshot, SystemTrajectory};

pub const DUMP_MAGIC: [u8; 4] = *b"BPTJ";
pub const DUMP_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a trajectory dump (bad magic)")]
    BadMagic,
    #[error("unsupported dump version {0} (this build reads version {DUMP_VERSION})")]
    Version(u32),
    #[error("dump is corrupt: {0}")]
    Corrupt(String),
    #[error("dump does not match the scenario: {0}")]
    Mismatch(String),
}

pub fn write_trajectory<W: Write>(mut w: W, traj: &SystemTrajectory) -> Result<(), DumpError> {
    w.write_all(&DUMP_MAGIC)?;
    w.write_u32::<LE>(DUMP_VERSION)?;
    w.write_u64::<LE>(traj.horizon)?;
    w.write_u32::<LE>(traj.entry_count as u32)?;
    w.write_u32::<LE>(traj.flow_count as u32)?;
    w.write_u32::<LE>(traj.queue_count as u32)?;

    for &q in &traj.initial_queues {
        w.write_u64::<LE>(q)?;
    }
    for &h in &traj.channel_states {
        w.write_u16::<LE>(h)?;
    }
    for &s in &traj.schedule_ids {
        w.write_u16::<LE>(s)?;
    }
    for &a in &traj.arrival_counts {
        w.write_u32::<LE>(a)?;
    }
    for &o in &traj.service_offsets {
        w.write_u32::<LE>(o)?;
    }
    for rec in &traj.services {
        w.write_u16::<LE>(rec.link)?;
        w.write_u16::<LE>(rec.flow)?;
        w.write_u32::<LE>(rec.offered)?;
        w.write_u32::<LE>(rec.served)?;
    }
    for &q in &traj.flow_totals {
        w.write_u64::<LE>(q)?;
    }

    w.write_u32::<LE>(traj.snapshots.len() as u32)?;
    for snap in &traj.snapshots {
        w.write_u64::<LE>(snap.slot)?;
        for vec in [&snap.arrivals, &snap.routed, &snap.departures, &snap.services, &snap.queues] {
            for &x in vec.iter() {
                w.write_u64::<LE>(x)?;
            }
        }
    }
    Ok(())
}

pub fn read_trajectory<R: Read>(mut r: R) -> Result<SystemTrajectory, DumpError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != DUMP_MAGIC {
        return Err(DumpError::BadMagic);
    }
    let version = r.read_u32::<LE>()?;
    if version != DUMP_VERSION {
        return Err(DumpError::Version(version));
    }
    let horizon = r.read_u64::<LE>()?;
    let entry_count = r.read_u32::<LE>()? as usize;
    let flow_count = r.read_u32::<LE>()? as usize;
    let queue_count = r.read_u32::<LE>()? as usize;
    let t = horizon as usize;
    if t > (1 << 34) || entry_count > (1 << 16) || flow_count > (1 << 16) || queue_count > (1 << 20) {
        return Err(DumpError::Corrupt("implausible dimensions".into()));
    }

    let read_u64s = |r: &mut R, n: usize| -> Result<Vec<u64>, DumpError> {
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            v.push(r.read_u64::<LE>()?);
        }
        Ok(v)
    };

    let initial_queues = read_u64s(&mut r, queue_count)?;
    let mut channel_states = Vec::with_capacity(t);
    for _ in 0..t {
        channel_states.push(r.read_u16::<LE>()?);
    }
    let mut schedule_ids = Vec::with_capacity(t);
    for _ in 0..t {
        schedule_ids.push(r.read_u16::<LE>()?);
    }
    let mut arrival_counts = Vec::with_capacity(t * entry_count);
    for _ in 0..t * entry_count {
        arrival_counts.push(r.read_u32::<LE>()?);
    }
    let mut service_offsets = Vec::with_capacity(t + 1);
    for _ in 0..=t {
        service_offsets.push(r.read_u32::<LE>()?);
    }
    let service_len = *service_offsets.last().unwrap() as usize;
    let mut services = Vec::with_capacity(service_len);
    for _ in 0..service_len {
        services.push(ServiceRec {
            link: r.read_u16::<LE>()?,
            flow: r.read_u16::<LE>()?,
            offered: r.read_u32::<LE>()?,
            served: r.read_u32::<LE>()?,
        });
    }
    let flow_totals = read_u64s(&mut r, (t + 1) * flow_count)?;

    let snapshot_count = r.read_u32::<LE>()? as usize;
    let mut snapshots = Vec::with_capacity(snapshot_count);
    for _ in 0..snapshot_count {
        let slot = r.read_u64::<LE>()?;
        let arrivals = read_u64s(&mut r, entry_count)?;
        let routed = read_u64s(&mut r, queue_count)?;
        let departures = read_u64s(&mut r, queue_count)?;
        let svc = read_u64s(&mut r, queue_count)?;
        let queues = read_u64s(&mut r, queue_count)?;
        snapshots.push(Snapshot { slot, arrivals, routed, departures, services: svc, queues });
    }

    // Scheduling counts re-derive from the event log.
    let mut g_counts: HashMap<GKey, u64> = HashMap::new();
    for slot in 0..t {
        let lo = service_offsets[slot] as usize;
        let hi = service_offsets[slot + 1] as usize;
        if hi < lo || hi > services.len() {
            return Err(DumpError::Corrupt("service offsets out of order".into()));
        }
        for rec in &services[lo..hi] {
            *g_counts
                .entry(GKey {
                    state: channel_states[slot],
                    schedule: schedule_ids[slot],
                    link: rec.link,
                    flow: rec.flow,
                })
                .or_insert(0) += 1;
        }
    }

    let traj = SystemTrajectory {
        horizon,
        initial_queues,
        channel_states,
        schedule_ids,
        arrival_counts,
        service_offsets,
        services,
        flow_totals,
        snapshots,
        g_counts,
        entry_count,
        flow_count,
        queue_count,
    };
    traj.validate_shape().map_err(|e| DumpError::Corrupt(e.to_string()))?;
    Ok(traj)
}

/// Dimension compatibility between a loaded dump and a compiled network.
pub fn check_compatibility(traj: &SystemTrajectory, net: &bpsim_core::topology::Network) -> Result<(), DumpError> {
    if traj.queue_count != net.queue_count()
        || traj.flow_count != net.flow_count()
        || traj.entry_count != net.spec().arrivals.entries.len()
    {
        return Err(DumpError::Mismatch(format!(
            "dump has {} queues / {} flows / {} arrival entries, scenario has {} / {} / {}",
            traj.queue_count,
            traj.flow_count,
            traj.entry_count,
            net.queue_count(),
            net.flow_count(),
            net.spec().arrivals.entries.len()
        )));
    }
    let states = net.spec().channel.state_count() as u16;
    if traj.channel_states.iter().any(|&h| h >= states) {
        return Err(DumpError::Mismatch("dump references channel states outside the scenario".into()));
    }
    Ok(())
}
