use std::net::SocketAddr;
use std::path::PathBuf;

use sdgmap_core::TopN;

pub const DEFAULT_LISTEN: &str = "127.0.0.1:8080";
/// 32 MiB.
pub const DEFAULT_MAX_UPLOAD: usize = 32 << 20;

/// Settings shared by the CLI and the HTTP service.
#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub queries: PathBuf,
    pub listen: SocketAddr,
    pub top_n: TopN,
    pub max_upload: usize,
    pub workers: usize,
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Parses a byte count such as `1048576`, `512K`, `10MiB` or `1g`.
pub fn parse_size(s: &str) -> Result<usize, String> {
    let t = s.trim();
    let split = t.find(|c: char| !c.is_ascii_digit()).unwrap_or(t.len());
    let (digits, unit) = t.split_at(split);
    let n: usize = digits.parse().map_err(|_| format!("invalid size `{s}`"))?;
    let shift = match unit.trim().to_ascii_lowercase().as_str() {
        "" | "b" => 0,
        "k" | "kb" | "kib" => 10,
        "m" | "mb" | "mib" => 20,
        "g" | "gb" | "gib" => 30,
        _ => return Err(format!("invalid size unit in `{s}`")),
    };
    n.checked_mul(1 << shift)
        .ok_or_else(|| format!("size `{s}` is too large"))
}
