//! `[LEVEL] message` lines to standard error and to the run log file.

use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use log::{LevelFilter, Log, Metadata, Record};

struct RunLogger {
    level: LevelFilter,
    file: Mutex<Option<File>>,
}

static LOGGER: RunLogger = RunLogger {
    level: LevelFilter::Trace,
    file: Mutex::new(None),
};

impl Log for RunLogger {
    fn enabled(&self, metadata: &Metadata) -> bool {
        metadata.level() <= log::max_level()
    }

    fn log(&self, record: &Record) {
        if !self.enabled(record.metadata()) {
            return;
        }
        let line = format!("[{}] {}\n", record.level(), record.args());
        eprint!("{line}");
        if let Some(f) = self.file.lock().unwrap().as_mut() {
            let _ = f.write_all(line.as_bytes());
        }
    }

    fn flush(&self) {
        if let Some(f) = self.file.lock().unwrap().as_mut() {
            let _ = f.flush();
        }
    }
}

pub fn parse_level(s: &str) -> Option<LevelFilter> {
    match s.to_ascii_lowercase().as_str() {
        "off" => Some(LevelFilter::Off),
        "error" => Some(LevelFilter::Error),
        "warn" => Some(LevelFilter::Warn),
        "info" => Some(LevelFilter::Info),
        "debug" => Some(LevelFilter::Debug),
        "trace" => Some(LevelFilter::Trace),
        _ => None,
    }
}

/// Installs the logger once; later calls only change the level.
pub fn init(level: LevelFilter) {
    let _ = log::set_logger(&LOGGER);
    log::set_max_level(level.min(LOGGER.level));
}

/// Starts mirroring log lines into `path` (truncated).
pub fn attach_file(path: &Path) -> std::io::Result<()> {
    let file = File::create(path)?;
    *LOGGER.file.lock().unwrap() = Some(file);
    Ok(())
}

pub fn detach_file() {
    LOGGER.flush();
    *LOGGER.file.lock().unwrap() = None;
}
