//! Page-level and word-level recognizer interfaces.
//!
//! Two backends exist: a scripted mock keyed on image fingerprints, and an
//! adapter that runs an external command per call with a timeout.

use std::collections::BTreeMap;
use std::io::Read;
use std::process::{Command, ExitStatus, Stdio};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hocr::{parse_hocr, HocrError, HocrPage};
use crate::imaging::RasterImage;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Error)]
pub enum RecognizerError {
    #[error("no scripted output for image {0}")]
    ScriptedMiss(String),
    #[error("{program} timed out after {seconds:.1}s")]
    Timeout { program: String, seconds: f64 },
    #[error("{program} failed ({status}): {stderr}")]
    ProcessFailed { program: String, status: String, stderr: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Hocr(#[from] HocrError),
    #[error("invalid recognizer spec: {0}")]
    InvalidSpec(String),
    #[error("{0} recognizer used for the wrong stage")]
    WrongKind(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecognizerKind {
    MachinePrinted,
    Handwritten,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Mock,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecognizerSpec {
    pub kind: RecognizerKind,
    pub backend: Backend,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argv_template: Option<Vec<String>>,
    /// Image fingerprint (see [`RasterImage::fingerprint`]) to output text:
    /// an hOCR document for page recognizers, a transcription for word ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mock_script: Option<BTreeMap<String, String>>,
}

impl RecognizerSpec {
    pub fn mock(kind: RecognizerKind, script: BTreeMap<String, String>) -> Self {
        Self { kind, backend: Backend::Mock, argv_template: None, mock_script: Some(script) }
    }

    pub fn external(kind: RecognizerKind, argv: Vec<String>) -> Self {
        Self { kind, backend: Backend::External, argv_template: Some(argv), mock_script: None }
    }

    pub fn validate(&self) -> Result<(), RecognizerError> {
        match self.backend {
            Backend::External => match &self.argv_template {
                Some(argv) if !argv.is_empty() => Ok(()),
                _ => Err(RecognizerError::InvalidSpec("external backend needs argv_template".into())),
            },
            Backend::Mock if self.mock_script.is_none() => {
                Err(RecognizerError::InvalidSpec("mock backend needs mock_script".into()))
            }
            Backend::Mock => Ok(()),
        }
    }
}

/// Recognizes a whole page, returning its hOCR words.
pub trait PageRecognizer: Send + Sync {
    fn recognize_page(&self, img: &RasterImage) -> Result<HocrPage, RecognizerError>;
}

/// Handwriting output for one cropped word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordOutput {
    /// First whitespace-delimited token of the raw output, or empty.
    pub text: String,
    pub raw: String,
}

impl WordOutput {
    pub fn from_raw(raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let text = raw.split_whitespace().next().unwrap_or("").to_string();
        Self { text, raw }
    }
}

/// Recognizes a single cropped word image.
pub trait WordRecognizer: Send + Sync {
    fn recognize_word(&self, word_img: &RasterImage) -> Result<WordOutput, RecognizerError>;
}

/// Fingerprint-scripted recognizer for tests and demos.
#[derive(Debug, Clone)]
pub struct MockRecognizer {
    script: BTreeMap<String, String>,
}

impl MockRecognizer {
    pub fn new(script: BTreeMap<String, String>) -> Self {
        Self { script }
    }

    fn lookup(&self, img: &RasterImage) -> Result<&str, RecognizerError> {
        let fp = img.fingerprint();
        self.script.get(&fp).map(String::as_str).ok_or(RecognizerError::ScriptedMiss(fp))
    }
}

impl PageRecognizer for MockRecognizer {
    fn recognize_page(&self, img: &RasterImage) -> Result<HocrPage, RecognizerError> {
        Ok(parse_hocr(self.lookup(img)?)?)
    }
}

impl WordRecognizer for MockRecognizer {
    fn recognize_word(&self, word_img: &RasterImage) -> Result<WordOutput, RecognizerError> {
        Ok(WordOutput::from_raw(self.lookup(word_img)?))
    }
}

/// Counting semaphore bounding simultaneous external processes.
#[derive(Debug)]
pub struct ProcessLimiter {
    permits: Mutex<usize>,
    freed: Condvar,
}

impl ProcessLimiter {
    pub fn new(max: usize) -> Arc<Self> {
        Arc::new(Self { permits: Mutex::new(max.max(1)), freed: Condvar::new() })
    }

    pub fn acquire(self: &Arc<Self>) -> ProcessPermit {
        let mut permits = self.permits.lock().unwrap_or_else(|p| p.into_inner());
        while *permits == 0 {
            permits = self.freed.wait(permits).unwrap_or_else(|p| p.into_inner());
        }
        *permits -= 1;
        ProcessPermit { limiter: Arc::clone(self) }
    }
}

pub struct ProcessPermit {
    limiter: Arc<ProcessLimiter>,
}

impl Drop for ProcessPermit {
    fn drop(&mut self) {
        let mut permits = self.limiter.permits.lock().unwrap_or_else(|p| p.into_inner());
        *permits += 1;
        self.limiter.freed.notify_one();
    }
}

pub struct ProcessOutput {
    pub status: ExitStatus,
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
}

/// Runs `cmd`, killing it if it outlives `timeout`.
pub fn run_with_timeout(mut cmd: Command, timeout: Duration) -> Result<ProcessOutput, RecognizerError> {
    let program = cmd.get_program().to_string_lossy().into_owned();
    let mut child = cmd.stdin(Stdio::null()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn()?;
    // drain pipes on threads so a chatty child cannot block on a full pipe
    let mut out_pipe = child.stdout.take().expect("piped");
    let mut err_pipe = child.stderr.take().expect("piped");
    let out_reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        out_pipe.read_to_end(&mut buf).map(|_| buf)
    });
    let err_reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        err_pipe.read_to_end(&mut buf).map(|_| buf)
    });
    let status = match wait_with_deadline(&mut child, timeout)? {
        Some(status) => status,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(RecognizerError::Timeout { program, seconds: timeout.as_secs_f64() });
        }
    };
    let stdout = out_reader.join().unwrap_or_else(|_| Ok(Vec::new()))?;
    let stderr = err_reader.join().unwrap_or_else(|_| Ok(Vec::new()))?;
    Ok(ProcessOutput { status, stdout, stderr })
}

#[cfg(not(target_arch = "wasm32"))]
fn wait_with_deadline(child: &mut std::process::Child, timeout: Duration) -> std::io::Result<Option<ExitStatus>> {
    use wait_timeout::ChildExt;
    child.wait_timeout(timeout)
}

// processes cannot be spawned here, so this is never reached
#[cfg(target_arch = "wasm32")]
fn wait_with_deadline(child: &mut std::process::Child, _timeout: Duration) -> std::io::Result<Option<ExitStatus>> {
    child.wait().map(Some)
}

/// Adapter for a recognizer run as an external command.
///
/// Page recognizers get `{in}` = PGM path and `{out}` = output basename and
/// must write `{out}.hocr`. Word recognizers get `{in}` and print the
/// transcription on stdout.
#[derive(Debug, Clone)]
pub struct ExternalRecognizer {
    argv: Vec<String>,
    timeout: Duration,
    limiter: Arc<ProcessLimiter>,
}

impl ExternalRecognizer {
    pub fn new(argv: Vec<String>, timeout: Duration, limiter: Arc<ProcessLimiter>) -> Self {
        Self { argv, timeout, limiter }
    }

    fn run(&self, img: &RasterImage) -> Result<(ProcessOutput, tempfile::TempDir), RecognizerError> {
        let dir = tempfile::tempdir()?;
        let input = dir.path().join("in.pgm");
        let out_base = dir.path().join("out");
        std::fs::write(&input, img.to_pgm())?;
        let subst = |s: &str| {
            s.replace("{in}", &input.to_string_lossy()).replace("{out}", &out_base.to_string_lossy())
        };
        let (program, args) = self.argv.split_first().ok_or_else(|| {
            RecognizerError::InvalidSpec("empty argv_template".into())
        })?;
        let mut cmd = Command::new(subst(program));
        cmd.args(args.iter().map(|a| subst(a)));
        let output = {
            let _permit = self.limiter.acquire();
            run_with_timeout(cmd, self.timeout)?
        };
        if !output.status.success() {
            return Err(RecognizerError::ProcessFailed {
                program: program.clone(),
                status: output.status.to_string(),
                stderr: String::from_utf8_lossy(&output.stderr).trim().to_string(),
            });
        }
        Ok((output, dir))
    }
}

impl PageRecognizer for ExternalRecognizer {
    fn recognize_page(&self, img: &RasterImage) -> Result<HocrPage, RecognizerError> {
        let (_, dir) = self.run(img)?;
        let hocr = std::fs::read_to_string(dir.path().join("out.hocr"))?;
        Ok(parse_hocr(&hocr)?)
    }
}

impl WordRecognizer for ExternalRecognizer {
    fn recognize_word(&self, word_img: &RasterImage) -> Result<WordOutput, RecognizerError> {
        let (output, _dir) = self.run(word_img)?;
        Ok(WordOutput::from_raw(String::from_utf8_lossy(&output.stdout).into_owned()))
    }
}

/// Instantiates the page recognizer described by `spec`.
pub fn page_recognizer(
    spec: &RecognizerSpec,
    timeout: Duration,
    limiter: Arc<ProcessLimiter>,
) -> Result<Arc<dyn PageRecognizer>, RecognizerError> {
    if spec.kind != RecognizerKind::MachinePrinted {
        return Err(RecognizerError::WrongKind("handwritten"));
    }
    build(spec, timeout, limiter).map(|r| match r {
        Built::Mock(m) => Arc::new(m) as Arc<dyn PageRecognizer>,
        Built::External(e) => Arc::new(e),
    })
}

/// Instantiates the word recognizer described by `spec`.
pub fn word_recognizer(
    spec: &RecognizerSpec,
    timeout: Duration,
    limiter: Arc<ProcessLimiter>,
) -> Result<Arc<dyn WordRecognizer>, RecognizerError> {
    if spec.kind != RecognizerKind::Handwritten {
        return Err(RecognizerError::WrongKind("machine-printed"));
    }
    build(spec, timeout, limiter).map(|r| match r {
        Built::Mock(m) => Arc::new(m) as Arc<dyn WordRecognizer>,
        Built::External(e) => Arc::new(e),
    })
}

enum Built {
    Mock(MockRecognizer),
    External(ExternalRecognizer),
}

fn build(spec: &RecognizerSpec, timeout: Duration, limiter: Arc<ProcessLimiter>) -> Result<Built, RecognizerError> {
    spec.validate()?;
    Ok(match spec.backend {
        Backend::Mock => Built::Mock(MockRecognizer::new(spec.mock_script.clone().unwrap_or_default())),
        Backend::External => Built::External(ExternalRecognizer::new(
            spec.argv_template.clone().unwrap_or_default(),
            timeout,
            limiter,
        )),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doc_model::{BBox, WordBox};
    use crate::hocr::render_hocr;

    fn page_with(words: &[&str]) -> String {
        let boxes: Vec<WordBox> = words
            .iter()
            .enumerate()
            .map(|(i, w)| WordBox {
                text: w.to_string(),
                bbox: BBox::new(i as u32 * 10, 0, i as u32 * 10 + 8, 8).unwrap(),
                line_index: 0,
                word_index: i,
                confidence: None,
            })
            .collect();
        render_hocr(&BBox::new(0, 0, 100, 100).unwrap(), &boxes)
    }

    #[test]
    fn mock_page_recognition() {
        let img = RasterImage::filled(4, 4, 200);
        let blank = RasterImage::filled(4, 4, 255);
        let mut script = BTreeMap::new();
        script.insert(img.fingerprint(), page_with(&["A", "move"]));
        script.insert(blank.fingerprint(), "<html><body></body></html>".to_string());
        let mock = MockRecognizer::new(script);
        assert_eq!(mock.recognize_page(&img).unwrap().words.len(), 2);
        assert_eq!(mock.recognize_page(&blank).unwrap().words.len(), 0);
        let other = RasterImage::filled(4, 5, 200);
        assert!(matches!(mock.recognize_page(&other), Err(RecognizerError::ScriptedMiss(_))));
    }

    #[test]
    fn mock_word_recognition() {
        let planted = RasterImage::filled(3, 2, 10);
        let noisy = RasterImage::filled(3, 2, 20);
        let white = RasterImage::filled(3, 2, 255);
        let script = BTreeMap::from([
            (planted.fingerprint(), "move".to_string()),
            (noisy.fingerprint(), "m0ve".to_string()),
            (white.fingerprint(), String::new()),
        ]);
        let mock = MockRecognizer::new(script);
        assert_eq!(mock.recognize_word(&planted).unwrap().text, "move");
        assert_eq!(mock.recognize_word(&noisy).unwrap().text, "m0ve");
        assert_eq!(mock.recognize_word(&white).unwrap().text, "");
    }

    #[test]
    fn word_output_takes_first_token() {
        let out = WordOutput::from_raw("  move along\n");
        assert_eq!(out.text, "move");
        assert_eq!(out.raw, "  move along\n");
    }

    #[test]
    fn fingerprint_is_stable() {
        let img = RasterImage::new(2, 1, vec![0, 255]).unwrap();
        assert_eq!(img.fingerprint(), format!("2x1:{:016x}", crate::imaging::fnv1a64(&[0, 255])));
        assert_eq!(crate::imaging::fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(crate::imaging::fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
    }

    #[test]
    fn spec_validation() {
        let bad = RecognizerSpec {
            kind: RecognizerKind::Handwritten,
            backend: Backend::External,
            argv_template: None,
            mock_script: None,
        };
        assert!(bad.validate().is_err());
        let mock = RecognizerSpec::mock(RecognizerKind::Handwritten, BTreeMap::new());
        assert!(page_recognizer(&mock, DEFAULT_TIMEOUT, ProcessLimiter::new(1)).is_err());
        assert!(word_recognizer(&mock, DEFAULT_TIMEOUT, ProcessLimiter::new(1)).is_ok());
    }

    #[cfg(unix)]
    #[test]
    fn external_word_reads_stdout() {
        let rec = ExternalRecognizer::new(
            vec!["sh".into(), "-c".into(), "test -s \"$0\" && echo 'move on'".into(), "{in}".into()],
            DEFAULT_TIMEOUT,
            ProcessLimiter::new(2),
        );
        let out = rec.recognize_word(&RasterImage::filled(2, 2, 0)).unwrap();
        assert_eq!(out.text, "move");
    }

    #[cfg(unix)]
    #[test]
    fn external_page_reads_hocr_file() {
        let hocr = page_with(&["A", "move"]).replace('\'', "\"");
        let script = format!("cat > \"$0.hocr\" <<'EOF'\n{hocr}\nEOF");
        let rec = ExternalRecognizer::new(
            vec!["sh".into(), "-c".into(), script, "{out}".into()],
            DEFAULT_TIMEOUT,
            ProcessLimiter::new(1),
        );
        let page = rec.recognize_page(&RasterImage::filled(2, 2, 0)).unwrap();
        assert_eq!(page.texts(), vec!["A", "move"]);
    }

    #[cfg(unix)]
    #[test]
    fn external_failure_and_timeout() {
        let fail = ExternalRecognizer::new(
            vec!["sh".into(), "-c".into(), "echo boom >&2; exit 3".into()],
            DEFAULT_TIMEOUT,
            ProcessLimiter::new(1),
        );
        let err = fail.recognize_word(&RasterImage::filled(1, 1, 0)).unwrap_err();
        assert!(matches!(&err, RecognizerError::ProcessFailed { stderr, .. } if stderr == "boom"), "{err}");

        let slow = ExternalRecognizer::new(
            vec!["sleep".into(), "5".into()],
            Duration::from_millis(200),
            ProcessLimiter::new(1),
        );
        let start = std::time::Instant::now();
        let err = slow.recognize_word(&RasterImage::filled(1, 1, 0)).unwrap_err();
        assert!(matches!(err, RecognizerError::Timeout { .. }));
        assert!(start.elapsed() < Duration::from_secs(3));
    }
}
