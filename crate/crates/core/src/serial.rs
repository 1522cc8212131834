//! One-way byte link between the deployment node and the actuator board.
//!
//! The wire carries raw bytes with no framing, checksum or acknowledgement.
//! The only command the actuator understands is [`DEPLOY_BYTE`].

use std::io::Write;

use thiserror::Error;

/// ASCII `'D'`: actuate the release.
pub const DEPLOY_BYTE: u8 = b'D';

#[derive(Debug, Error)]
pub enum LinkError {
    #[error("serial link is closed")]
    Closed,
    #[error("serial write failed: {0}")]
    Io(#[from] std::io::Error),
}

pub trait SerialLink {
    fn write_bytes(&mut self, bytes: &[u8]) -> Result<(), LinkError>;
}

/// In-memory link. Bytes written by the node wait in a buffer until the
/// receiving side takes them.
#[derive(Debug, Default, Clone)]
pub struct LoopbackLink {
    buffer: Vec<u8>,
    closed: bool,
    written: usize,
}

impl LoopbackLink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn close(&mut self) {
        self.closed = true;
    }

    pub fn reopen(&mut self) {
        self.closed = false;
    }

    pub fn is_open(&self) -> bool {
        !self.closed
    }

    /// Removes and returns everything written since the last call.
    pub fn take(&mut self) -> Vec<u8> {
        std::mem::take(&mut self.buffer)
    }

    /// Total bytes ever accepted.
    pub fn bytes_written(&self) -> usize {
        self.written
    }
}

impl SerialLink for LoopbackLink {
    fn write_bytes(&mut self, bytes: &[u8]) -> Result<(), LinkError> {
        if self.closed {
            return Err(LinkError::Closed);
        }
        self.buffer.extend_from_slice(bytes);
        self.written += bytes.len();
        Ok(())
    }
}

/// Adapts any [`Write`] sink (a tty device file, a socket) as a link.
#[derive(Debug)]
pub struct WriterLink<W: Write> {
    inner: W,
}

impl<W: Write> WriterLink<W> {
    pub fn new(inner: W) -> Self {
        WriterLink { inner }
    }

    pub fn into_inner(self) -> W {
        self.inner
    }
}

impl<W: Write> SerialLink for WriterLink<W> {
    fn write_bytes(&mut self, bytes: &[u8]) -> Result<(), LinkError> {
        self.inner.write_all(bytes)?;
        self.inner.flush()?;
        Ok(())
    }
}

/// Writes the single deploy byte.
pub fn send_deploy(link: &mut dyn SerialLink) -> Result<(), LinkError> {
    link.write_bytes(&[DEPLOY_BYTE])
}
