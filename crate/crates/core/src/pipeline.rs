//! End-to-end compression: tokenize, rank tokens by frequency, varint-encode the
//! ranks and hand the stream to a backend. Decompression runs the same stages
//! backwards.

use std::borrow::Cow;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use crate::backend::{Backend, BackendId, ExternalCommand, EXTERNAL_WIRE_CODE};
use crate::bpe::{VocabId, Vocabulary};
use crate::container::{Container, VocabRef};
use crate::error::{Error, FormatError, Result, Stage, StageExt};
use crate::reorder;
use crate::varint;

/// How the vocabulary travels with a container.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VocabMode {
    #[default]
    Embedded,
    Shared,
}

impl VocabMode {
    pub fn name(self) -> &'static str {
        match self {
            VocabMode::Embedded => "embedded",
            VocabMode::Shared => "shared",
        }
    }
}

impl fmt::Display for VocabMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VocabMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "embedded" => Ok(VocabMode::Embedded),
            "shared" => Ok(VocabMode::Shared),
            _ => Err(Error::InvalidInput(format!("unknown vocabulary mode {s:?}"))),
        }
    }
}

/// Which preprocessing runs before the backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Backend on the original bytes.
    Raw,
    /// Token IDs as varints, no reordering.
    TokenizedOnly,
    /// Frequency-ranked token IDs as varints.
    Reordered,
    /// Word replacing transform baseline.
    Wrt,
}

impl Variant {
    pub const ABLATION: [Variant; 3] = [Variant::Raw, Variant::TokenizedOnly, Variant::Reordered];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Raw => "raw",
            Variant::TokenizedOnly => "tokenized-only",
            Variant::Reordered => "reordered",
            Variant::Wrt => "wrt",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Variant::Raw),
            "tokenized-only" | "tokenized" => Ok(Variant::TokenizedOnly),
            "reordered" | "ours" => Ok(Variant::Reordered),
            "wrt" => Ok(Variant::Wrt),
            _ => Err(Error::InvalidInput(format!("unknown variant {s:?}"))),
        }
    }
}

/// Wall-clock seconds per compression stage.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub tokenize: f64,
    /// Frequency count, permutation and remap.
    pub reorder: f64,
    pub varint: f64,
    /// Every backend call: payload and metadata blobs.
    pub backend: f64,
}

impl StageTimings {
    pub fn total(&self) -> f64 {
        self.tokenize + self.reorder + self.varint + self.backend
    }

    pub fn preprocessing(&self) -> f64 {
        self.tokenize + self.reorder + self.varint
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressionReport {
    pub variant: Variant,
    pub backend: String,
    pub mode: VocabMode,
    pub original_bytes: u64,
    pub token_count: u64,
    pub varint_bytes: u64,
    /// Compressed payload only.
    pub compressed_bytes: u64,
    /// Embedded vocabulary, mapping or dictionary blobs.
    pub metadata_bytes: u64,
    pub header_bytes: u64,
    pub timings: StageTimings,
    /// Tokens whose varint takes 1..=5 bytes.
    pub histogram: [u64; varint::MAX_BYTES],
}

impl CompressionReport {
    pub fn total_bytes(&self) -> u64 {
        self.compressed_bytes + self.metadata_bytes + self.header_bytes
    }

    /// Output size over input size in percent, metadata and header included.
    /// NaN for an empty input.
    pub fn ratio_percent(&self) -> f64 {
        if self.original_bytes == 0 {
            return f64::NAN;
        }
        100.0 * self.total_bytes() as f64 / self.original_bytes as f64
    }

    pub fn varint_fraction(&self) -> f64 {
        self.varint_bytes as f64 / self.original_bytes as f64
    }

    /// Checks the histogram against the token and byte counts. A WRT stream
    /// also carries literal frames, so its codes only bound the stream length.
    pub fn is_consistent(&self) -> bool {
        let tokens: u64 = self.histogram.iter().sum();
        let bytes: u64 = self.histogram.iter().zip(1..).map(|(c, k)| c * k).sum();
        let bytes_ok = match self.variant {
            Variant::Wrt => bytes <= self.varint_bytes,
            _ => bytes == self.varint_bytes,
        };
        tokens == self.token_count && bytes_ok
    }
}

fn timed<T>(slot: &mut f64, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    *slot += start.elapsed().as_secs_f64();
    out
}

fn vocab_ref(vocab: &Vocabulary, backend: &Backend, mode: VocabMode) -> Result<VocabRef> {
    Ok(match mode {
        VocabMode::Embedded => VocabRef::Embedded(backend.compress(&vocab.to_bytes())?),
        VocabMode::Shared => VocabRef::Shared(vocab.id()),
    })
}

fn encode(
    text: &[u8],
    vocab: &Vocabulary,
    backend: &Backend,
    mode: VocabMode,
    reorder_ids: bool,
) -> Result<(Container, CompressionReport)> {
    let mut t = StageTimings::default();
    let ids = timed(&mut t.tokenize, || vocab.tokenize(text));
    let (ids, perm) = if reorder_ids {
        timed(&mut t.reorder, || -> Result<_> {
            let freq = reorder::count_frequencies(&ids, vocab.len())?;
            let perm = reorder::build_permutation(&freq);
            Ok((reorder::remap(&ids, &perm)?, Some(perm)))
        })
        .stage(Stage::Reorder)?
    } else {
        (ids, None)
    };
    let stream = timed(&mut t.varint, || varint::encode_tokens(&ids));

    let (payload, mapping, vocab) = timed(&mut t.backend, || -> Result<_> {
        let payload = backend.compress(stream.as_bytes())?;
        let mapping = match &perm {
            Some(perm) => Some(backend.compress(&reorder::serialize_mapping(perm))?),
            None => None,
        };
        Ok((payload, mapping, vocab_ref(vocab, backend, mode)?))
    })
    .stage(Stage::Backend)?;

    let container = Container {
        backend_code: backend.wire_code(),
        original_size: text.len() as u64,
        token_count: ids.len() as u64,
        vocab,
        mapping,
        payload,
    };
    let report = CompressionReport {
        variant: if reorder_ids {
            Variant::Reordered
        } else {
            Variant::TokenizedOnly
        },
        backend: backend.name(),
        mode,
        original_bytes: text.len() as u64,
        token_count: ids.len() as u64,
        varint_bytes: stream.len() as u64,
        compressed_bytes: container.payload.len() as u64,
        metadata_bytes: container.metadata_len() as u64,
        header_bytes: container.header_len() as u64,
        timings: t,
        histogram: varint::length_histogram(&ids),
    };
    Ok((container, report))
}

/// Runs the full pipeline and returns the container with its report.
pub fn compress_text(
    text: &[u8],
    vocab: &Vocabulary,
    backend: &Backend,
    mode: VocabMode,
) -> Result<(Container, CompressionReport)> {
    encode(text, vocab, backend, mode, true)
}

/// Backend alone on the original bytes.
pub fn compress_raw(text: &[u8], backend: &Backend) -> Result<CompressionReport> {
    let mut t = StageTimings::default();
    let out = timed(&mut t.backend, || backend.compress(text)).stage(Stage::Backend)?;
    Ok(CompressionReport {
        variant: Variant::Raw,
        backend: backend.name(),
        mode: VocabMode::Shared,
        original_bytes: text.len() as u64,
        token_count: 0,
        varint_bytes: 0,
        compressed_bytes: out.len() as u64,
        metadata_bytes: 0,
        header_bytes: 0,
        timings: t,
        histogram: [0; varint::MAX_BYTES],
    })
}

/// One row of the ablation: raw, tokenized-only or reordered.
pub fn compress_variant(
    text: &[u8],
    vocab: &Vocabulary,
    backend: &Backend,
    variant: Variant,
    mode: VocabMode,
) -> Result<CompressionReport> {
    match variant {
        Variant::Raw => compress_raw(text, backend),
        Variant::TokenizedOnly => Ok(encode(text, vocab, backend, mode, false)?.1),
        Variant::Reordered => Ok(encode(text, vocab, backend, mode, true)?.1),
        Variant::Wrt => crate::wrt::wrt_ratio(text, backend),
    }
}

/// Supplies the vocabulary a shared-mode container refers to.
pub trait VocabResolver {
    fn resolve(&self, id: &VocabId) -> Result<Cow<'_, Vocabulary>>;
}

/// Resolves nothing: only embedded containers decode.
impl VocabResolver for () {
    fn resolve(&self, id: &VocabId) -> Result<Cow<'_, Vocabulary>> {
        Err(Error::Resolution(format!(
            "container needs shared vocabulary {id} but none was supplied"
        )))
    }
}

impl VocabResolver for Vocabulary {
    fn resolve(&self, id: &VocabId) -> Result<Cow<'_, Vocabulary>> {
        let own = self.id();
        if own == *id {
            Ok(Cow::Borrowed(self))
        } else {
            Err(Error::Resolution(format!(
                "container needs vocabulary {id}, supplied vocabulary is {own}"
            )))
        }
    }
}

impl VocabResolver for Vec<Vocabulary> {
    fn resolve(&self, id: &VocabId) -> Result<Cow<'_, Vocabulary>> {
        self.iter()
            .find(|v| v.id() == *id)
            .map(Cow::Borrowed)
            .ok_or_else(|| Error::Resolution(format!("no supplied vocabulary has id {id}")))
    }
}

/// Searches a directory for `.fotv` files.
#[derive(Debug, Clone)]
pub struct VocabDir(pub PathBuf);

impl VocabDir {
    pub fn new(path: impl AsRef<Path>) -> Self {
        VocabDir(path.as_ref().to_path_buf())
    }
}

impl VocabResolver for VocabDir {
    fn resolve(&self, id: &VocabId) -> Result<Cow<'_, Vocabulary>> {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&self.0)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "fotv"))
            .collect();
        paths.sort();
        for path in paths {
            // Unreadable or foreign files are skipped, not fatal.
            let Ok(vocab) = std::fs::read(&path)
                .map_err(Error::from)
                .and_then(|b| Vocabulary::from_bytes(&b))
            else {
                continue;
            };
            if vocab.id() == *id {
                return Ok(Cow::Owned(vocab));
            }
        }
        Err(Error::Resolution(format!(
            "no vocabulary with id {id} in {}",
            self.0.display()
        )))
    }
}

/// Wall-clock seconds per decompression stage.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DecompressionTimings {
    /// Payload and metadata backend calls, plus vocabulary and mapping parsing.
    pub backend: f64,
    pub varint: f64,
    pub unremap: f64,
    pub detokenize: f64,
}

impl DecompressionTimings {
    pub fn total(&self) -> f64 {
        self.backend + self.varint + self.unremap + self.detokenize
    }
}

/// The backend a container was written with. The external backend reads its
/// commands from the environment.
pub fn backend_for_code(code: u8) -> Result<Backend> {
    if code == EXTERNAL_WIRE_CODE {
        return Ok(Backend::External(ExternalCommand::from_env()?));
    }
    Ok(Backend::Builtin(BackendId::from_wire_code(code)?))
}

pub fn decompress_container(container: &Container, resolver: &dyn VocabResolver) -> Result<Vec<u8>> {
    let backend = backend_for_code(container.backend_code).stage(Stage::Backend)?;
    Ok(decompress_timed(container, resolver, &backend)?.0)
}

/// Parses and decompresses a container file.
pub fn decompress_bytes(bytes: &[u8], resolver: &dyn VocabResolver) -> Result<Vec<u8>> {
    let container = Container::from_bytes(bytes).stage(Stage::Container)?;
    decompress_container(&container, resolver)
}

/// Decompresses with an explicit backend, which must match the container's wire code.
pub fn decompress_timed(
    container: &Container,
    resolver: &dyn VocabResolver,
    backend: &Backend,
) -> Result<(Vec<u8>, DecompressionTimings)> {
    if backend.wire_code() != container.backend_code {
        return Err(Error::InvalidInput(format!(
            "container was written with backend code {:#04x}, {} has {:#04x}",
            container.backend_code,
            backend.name(),
            backend.wire_code()
        ))
        .at_stage(Stage::Backend));
    }
    let mut t = DecompressionTimings::default();
    let start = Instant::now();
    let stream = backend.decompress(&container.payload).stage(Stage::Backend)?;
    let vocab: Cow<'_, Vocabulary> = match &container.vocab {
        VocabRef::Embedded(blob) => {
            let bytes = backend.decompress(blob).stage(Stage::Backend)?;
            Cow::Owned(Vocabulary::from_bytes(&bytes).stage(Stage::Vocabulary)?)
        }
        VocabRef::Shared(id) => resolver.resolve(id).stage(Stage::Vocabulary)?,
    };
    let perm = match &container.mapping {
        Some(blob) => {
            let bytes = backend.decompress(blob).stage(Stage::Backend)?;
            let perm = reorder::deserialize_mapping(&bytes).stage(Stage::Mapping)?;
            check_len("mapping", perm.len() as u64, vocab.len() as u64).stage(Stage::Mapping)?;
            Some(perm)
        }
        None => None,
    };
    t.backend = start.elapsed().as_secs_f64();

    let ids = timed(&mut t.varint, || varint::decode_tokens(&stream)).stage(Stage::Varint)?;
    check_len("token count", container.token_count, ids.len() as u64).stage(Stage::Varint)?;
    let ids = match &perm {
        Some(perm) => {
            timed(&mut t.unremap, || reorder::unremap(&ids, perm)).stage(Stage::Mapping)?
        }
        None => ids,
    };
    let text = timed(&mut t.detokenize, || vocab.detokenize(&ids)).stage(Stage::Detokenize)?;
    check_len("original size", container.original_size, text.len() as u64)
        .stage(Stage::Detokenize)?;
    Ok((text, t))
}

fn check_len(what: &'static str, declared: u64, actual: u64) -> Result<()> {
    if declared != actual {
        return Err(FormatError::LengthMismatch {
            what,
            declared,
            actual,
        }
        .into());
    }
    Ok(())
}
