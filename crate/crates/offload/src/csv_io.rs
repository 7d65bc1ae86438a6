//! Task-set CSV with exact decimal millisecond columns.

use std::io::{Read, Write};

use offload_core::{Slot, SlotDuration, Task, TaskSet};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error(transparent)]
    Model(#[from] offload_core::Error),
}

#[derive(Debug, Serialize, Deserialize)]
struct TaskRow {
    task_id: u32,
    user_id: u32,
    arrival_ms: String,
    proc_ms: String,
    deadline_ms: String,
}

/// `slots` at `slot` resolution as a decimal number of milliseconds, without
/// trailing zeros. Exact for every slot count.
pub fn format_ms(slots: Slot, slot: SlotDuration) -> String {
    let us = slots as i128 * slot.as_micros() as i128;
    let sign = if us < 0 { "-" } else { "" };
    let (whole, frac) = (us.unsigned_abs() / 1000, us.unsigned_abs() % 1000);
    if frac == 0 {
        format!("{sign}{whole}")
    } else {
        let digits = format!("{frac:03}");
        format!("{sign}{whole}.{}", digits.trim_end_matches('0'))
    }
}

/// Parses a decimal millisecond value into whole slots; fails unless the value
/// is an exact multiple of the slot.
pub fn parse_ms(text: &str, slot: SlotDuration) -> Result<Slot, String> {
    let text = text.trim();
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    let digits_ok = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    if whole.is_empty() || !digits_ok(whole) || !digits_ok(frac) {
        return Err(format!("not a decimal number: {text:?}"));
    }
    let (us_digits, rest) = frac.split_at(frac.len().min(3));
    if rest.bytes().any(|b| b != b'0') {
        return Err(format!("{text} ms is finer than 1 us"));
    }
    let whole: i128 = whole.parse().map_err(|_| format!("out of range: {text}"))?;
    let frac_us: i128 = format!("{us_digits:0<3}").parse().expect("three digits");
    let mut us = whole.checked_mul(1000).and_then(|w| w.checked_add(frac_us)).ok_or(format!("out of range: {text}"))?;
    if negative {
        us = -us;
    }
    let step = slot.as_micros() as i128;
    if us % step != 0 {
        return Err(format!("{text} ms is not a multiple of the {} us slot", slot.as_micros()));
    }
    Slot::try_from(us / step).map_err(|_| format!("out of range: {text}"))
}

pub fn write_tasks<W: Write>(tasks: &TaskSet, out: W) -> Result<(), CsvError> {
    let slot = tasks.slot();
    let mut w = csv::Writer::from_writer(out);
    for t in tasks.tasks() {
        w.serialize(TaskRow {
            task_id: t.id,
            user_id: t.user_id,
            arrival_ms: format_ms(t.arrival, slot),
            proc_ms: format_ms(t.proc_time, slot),
            deadline_ms: format_ms(t.deadline, slot),
        })?;
    }
    if tasks.is_empty() {
        w.write_record(["task_id", "user_id", "arrival_ms", "proc_ms", "deadline_ms"])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn tasks_to_csv(tasks: &TaskSet) -> String {
    let mut buf = Vec::new();
    write_tasks(tasks, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

pub fn read_tasks<R: Read>(input: R, slot: SlotDuration) -> Result<TaskSet, CsvError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = r.headers()?.clone();
    let expected = ["task_id", "user_id", "arrival_ms", "proc_ms", "deadline_ms"];
    if headers.iter().ne(expected) {
        return Err(CsvError::Row { row: 1, message: format!("header must be {}", expected.join(",")) });
    }
    let mut tasks = Vec::new();
    for (i, row) in r.deserialize::<TaskRow>().enumerate() {
        let row_no = i + 2;
        let row = row?;
        let ms = |s: &str| parse_ms(s, slot).map_err(|message| CsvError::Row { row: row_no, message });
        tasks.push(Task {
            id: row.task_id,
            user_id: row.user_id,
            arrival: ms(&row.arrival_ms)?,
            proc_time: ms(&row.proc_ms)?,
            deadline: ms(&row.deadline_ms)?,
        });
    }
    Ok(TaskSet::new(tasks, slot)?)
}

/// SHA-256 of the canonical CSV form plus the slot length, hex encoded.
pub fn task_set_hash(tasks: &TaskSet) -> String {
    let mut h = Sha256::new();
    h.update(tasks.slot().as_micros().to_le_bytes());
    h.update(tasks_to_csv(tasks).as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Best-so-far objective per generation.
pub fn history_to_csv(history: &[f64]) -> String {
    let mut out = String::from("generation,best_objective\n");
    for (g, v) in history.iter().enumerate() {
        out.push_str(&format!("{g},{v}\n"));
    }
    out
}
