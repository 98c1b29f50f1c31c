//! CSV event logs: `user,item,timestamp[,rating]`, optional header.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::ids::EntityId;
use crate::seq_tensor::{Event, EventLog};

fn parse_error(path: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        msg: msg.into(),
    }
}

fn is_header(record: &csv::StringRecord) -> bool {
    record.get(2).is_some_and(|t| {
        let t = t.to_ascii_lowercase();
        t.contains("time") || t == "ts"
    })
}

/// Parses, sorts stably by timestamp and drops repeated
/// `(user, item, timestamp)` rows. Ratings are validated, then discarded.
/// Entity codes follow first appearance in the sorted log.
pub fn read_events(reader: impl Read, label: &str) -> Result<EventLog> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<(String, String, i64)> = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let line = k + 1;
        let record = record.map_err(|e| parse_error(label, line, e.to_string()))?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if line == 1 && is_header(&record) {
            continue;
        }
        if !(3..=4).contains(&record.len()) {
            return Err(parse_error(
                label,
                line,
                format!("expected 3 or 4 fields, found {}", record.len()),
            ));
        }
        let (user, item) = (&record[0], &record[1]);
        if user.is_empty() || item.is_empty() {
            return Err(parse_error(label, line, "empty user or item id"));
        }
        let ts: i64 = record[2]
            .parse()
            .map_err(|_| parse_error(label, line, format!("unparseable timestamp '{}'", &record[2])))?;
        if let Some(r) = record.get(3) {
            r.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_error(label, line, format!("unparseable rating '{r}'")))?;
        }
        rows.push((user.to_string(), item.to_string(), ts));
    }
    rows.sort_by_key(|r| r.2);
    let mut seen = HashSet::new();
    rows.retain(|r| seen.insert(r.clone()));
    Ok(encode(rows))
}

/// Assigns dense codes in order of first appearance.
fn encode(rows: Vec<(String, String, i64)>) -> EventLog {
    let mut log = EventLog::default();
    let mut users: HashMap<String, EntityId> = HashMap::new();
    let mut items: HashMap<String, EntityId> = HashMap::new();
    for (u, i, timestamp) in rows {
        let user = *users.entry(u.clone()).or_insert_with(|| {
            log.users.push(u);
            (log.users.len() - 1) as EntityId
        });
        let item = *items.entry(i.clone()).or_insert_with(|| {
            log.items.push(i);
            (log.items.len() - 1) as EntityId
        });
        log.events.push(Event { user, item, timestamp });
    }
    log
}

pub fn ingest(path: &Path) -> Result<EventLog> {
    read_events(File::open(path)?, &path.display().to_string())
}

/// Re-encodes the log's events so codes are dense and follow first
/// appearance; unused vocabulary entries are dropped.
pub fn compact(log: &EventLog) -> EventLog {
    encode(
        log.events
            .iter()
            .map(|e| (log.users[e.user as usize].clone(), log.items[e.item as usize].clone(), e.timestamp))
            .collect(),
    )
}

pub fn write_events(log: &EventLog, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["user", "item", "timestamp"])?;
    for e in &log.events {
        w.write_record([
            log.users[e.user as usize].as_str(),
            log.items[e.item as usize].as_str(),
            &e.timestamp.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_events(log: &EventLog, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_events(log, File::create(path)?)
}
