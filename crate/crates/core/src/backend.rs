//! General-purpose compressors used as the last pipeline stage and as baselines.

use std::fmt;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::str::FromStr;
use std::time::Instant;

use crate::error::{Error, FormatError, Result};

/// Built-in backends. Wire codes are part of the container format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BackendId {
    /// zlib-wrapped deflate at level 9.
    Deflate9,
    /// zstd at level 22, with a content checksum.
    Zstd22,
    /// xz container, LZMA2 preset 6.
    Lzma,
}

pub const EXTERNAL_WIRE_CODE: u8 = 0xFF;
pub const LZMA_PRESET: u32 = 6;
pub const ZSTD_LEVEL: i32 = 22;

pub const EXTERNAL_COMPRESS_ENV: &str = "FREQTOK_EXTERNAL_COMPRESS";
pub const EXTERNAL_DECOMPRESS_ENV: &str = "FREQTOK_EXTERNAL_DECOMPRESS";

impl BackendId {
    pub const ALL: [BackendId; 3] = [BackendId::Deflate9, BackendId::Zstd22, BackendId::Lzma];

    pub fn name(self) -> &'static str {
        match self {
            BackendId::Deflate9 => "deflate-9",
            BackendId::Zstd22 => "zstd-22",
            BackendId::Lzma => "lzma",
        }
    }

    pub fn wire_code(self) -> u8 {
        match self {
            BackendId::Deflate9 => 0x01,
            BackendId::Zstd22 => 0x02,
            BackendId::Lzma => 0x03,
        }
    }

    pub fn from_wire_code(code: u8) -> Result<Self> {
        BackendId::ALL
            .into_iter()
            .find(|b| b.wire_code() == code)
            .ok_or_else(|| FormatError::UnknownBackend(code).into())
    }

    pub fn compress(self, data: &[u8]) -> Result<Vec<u8>> {
        let res = match self {
            BackendId::Deflate9 => {
                let mut enc = flate2::write::ZlibEncoder::new(
                    Vec::with_capacity(data.len() / 3),
                    flate2::Compression::best(),
                );
                enc.write_all(data).and_then(|_| enc.finish())
            }
            BackendId::Zstd22 => zstd::stream::Encoder::new(Vec::new(), ZSTD_LEVEL).and_then(|mut enc| {
                enc.include_checksum(true)?;
                // Lets zstd size its window to the input instead of the level's 128 MiB.
                enc.set_pledged_src_size(Some(data.len() as u64))?;
                enc.write_all(data)?;
                enc.finish()
            }),
            BackendId::Lzma => {
                let mut enc =
                    xz2::write::XzEncoder::new(Vec::with_capacity(data.len() / 4), LZMA_PRESET);
                enc.write_all(data).and_then(|_| enc.finish())
            }
        };
        res.map_err(|e| self.error(e))
    }

    pub fn decompress(self, data: &[u8]) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(data.len() * 3);
        let res = match self {
            BackendId::Deflate9 => {
                let mut dec = flate2::bufread::ZlibDecoder::new(data);
                dec.read_to_end(&mut out).and_then(|_| trailing(dec.into_inner().len()))
            }
            BackendId::Zstd22 => zstd::stream::read::Decoder::with_buffer(data).and_then(|dec| {
                let mut dec = dec.single_frame();
                dec.read_to_end(&mut out)?;
                trailing(dec.finish().len())
            }),
            BackendId::Lzma => {
                let mut dec = xz2::bufread::XzDecoder::new(data);
                dec.read_to_end(&mut out).and_then(|_| trailing(dec.into_inner().len()))
            }
        };
        res.map_err(|e| self.error(e))?;
        Ok(out)
    }

    fn error(self, e: std::io::Error) -> Error {
        Error::Backend {
            backend: self.name().to_string(),
            message: e.to_string(),
        }
    }
}

fn trailing(left: usize) -> std::io::Result<()> {
    if left == 0 {
        Ok(())
    } else {
        Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("{left} trailing bytes after end of stream"),
        ))
    }
}

impl fmt::Display for BackendId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BackendId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "deflate-9" | "deflate" | "zlib-9" | "zlib" => Ok(BackendId::Deflate9),
            "zstd-22" | "zstd" => Ok(BackendId::Zstd22),
            "lzma" | "lzma-default" | "xz" => Ok(BackendId::Lzma),
            _ => Err(Error::UnsupportedBackend(s.to_string())),
        }
    }
}

/// A compressor run as a child process: raw bytes on stdin, result on stdout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalCommand {
    pub compress: Vec<String>,
    pub decompress: Vec<String>,
}

impl ExternalCommand {
    pub fn new(compress: &[&str], decompress: &[&str]) -> Result<Self> {
        let own = |argv: &[&str]| argv.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        ExternalCommand::from_argv(own(compress), own(decompress))
    }

    fn from_argv(compress: Vec<String>, decompress: Vec<String>) -> Result<Self> {
        if compress.is_empty() || decompress.is_empty() {
            return Err(Error::UnsupportedBackend(
                "external backend needs both a compress and a decompress command".into(),
            ));
        }
        Ok(ExternalCommand {
            compress,
            decompress,
        })
    }

    /// Reads the two command templates from the environment. Arguments are split on whitespace.
    pub fn from_env() -> Result<Self> {
        let read = |key: &str| {
            std::env::var(key)
                .map(|v| v.split_whitespace().map(str::to_string).collect::<Vec<_>>())
                .map_err(|_| Error::UnsupportedBackend(format!("external backend: {key} is not set")))
        };
        ExternalCommand::from_argv(read(EXTERNAL_COMPRESS_ENV)?, read(EXTERNAL_DECOMPRESS_ENV)?)
    }

    pub fn name(&self) -> String {
        format!("external:{}", self.compress[0])
    }

    pub fn compress(&self, data: &[u8]) -> Result<Vec<u8>> {
        self.run(&self.compress, data)
    }

    pub fn decompress(&self, data: &[u8]) -> Result<Vec<u8>> {
        self.run(&self.decompress, data)
    }

    fn run(&self, argv: &[String], data: &[u8]) -> Result<Vec<u8>> {
        let err = |message: String| Error::Backend {
            backend: self.name(),
            message,
        };
        let mut child = Command::new(&argv[0])
            .args(&argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| err(format!("cannot start {}: {e}", argv[0])))?;
        let mut stdin = child.stdin.take().expect("stdin is piped");
        let output = std::thread::scope(|s| {
            let writer = s.spawn(move || stdin.write_all(data));
            let output = child.wait_with_output();
            // A child that exits early closes its stdin; its exit status is the real error.
            let _ = writer.join();
            output
        })
        .map_err(|e| err(e.to_string()))?;
        if !output.status.success() {
            let stderr = String::from_utf8_lossy(&output.stderr);
            return Err(err(format!("{} exited with {}: {}", argv[0], output.status, stderr.trim())));
        }
        Ok(output.stdout)
    }
}

/// Either a built-in backend or an external command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Backend {
    Builtin(BackendId),
    External(ExternalCommand),
}

impl Backend {
    /// Parses a backend name; `external` reads its commands from the environment.
    pub fn parse(name: &str) -> Result<Self> {
        if name.eq_ignore_ascii_case("external") {
            return Ok(Backend::External(ExternalCommand::from_env()?));
        }
        name.parse().map(Backend::Builtin)
    }

    pub fn name(&self) -> String {
        match self {
            Backend::Builtin(id) => id.name().to_string(),
            Backend::External(cmd) => cmd.name(),
        }
    }

    pub fn wire_code(&self) -> u8 {
        match self {
            Backend::Builtin(id) => id.wire_code(),
            Backend::External(_) => EXTERNAL_WIRE_CODE,
        }
    }

    pub fn compress(&self, data: &[u8]) -> Result<Vec<u8>> {
        match self {
            Backend::Builtin(id) => id.compress(data),
            Backend::External(cmd) => cmd.compress(data),
        }
    }

    pub fn decompress(&self, data: &[u8]) -> Result<Vec<u8>> {
        match self {
            Backend::Builtin(id) => id.decompress(data),
            Backend::External(cmd) => cmd.decompress(data),
        }
    }
}

impl From<BackendId> for Backend {
    fn from(id: BackendId) -> Self {
        Backend::Builtin(id)
    }
}

pub fn compress(backend: BackendId, data: &[u8]) -> Result<Vec<u8>> {
    backend.compress(data)
}

pub fn decompress(backend: BackendId, data: &[u8]) -> Result<Vec<u8>> {
    backend.decompress(data)
}

/// Compresses once and returns the output with its wall-clock time in seconds.
pub fn timed_compress(backend: &Backend, data: &[u8]) -> Result<(Vec<u8>, f64)> {
    let start = Instant::now();
    let out = backend.compress(data)?;
    Ok((out, start.elapsed().as_secs_f64()))
}

/// Best (lowest) time over `runs` compressions; the output is the same every run.
pub fn timed_compress_best(backend: &Backend, data: &[u8], runs: usize) -> Result<(Vec<u8>, f64)> {
    let (out, mut best) = timed_compress(backend, data)?;
    for _ in 1..runs {
        best = best.min(timed_compress(backend, data)?.1);
    }
    Ok((out, best))
}
