//! Frame transports: an in-process channel pair and TCP.

use std::io::{BufReader, BufWriter, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use crate::error::{ProtocolError, Result};
use crate::frame::Frame;

pub trait Transport: Send {
    fn send_bytes(&mut self, frame: &[u8]) -> Result<()>;
    fn recv_frame(&mut self, max_payload: u64) -> Result<Frame>;
}

impl<T: Transport + ?Sized> Transport for Box<T> {
    fn send_bytes(&mut self, frame: &[u8]) -> Result<()> {
        (**self).send_bytes(frame)
    }

    fn recv_frame(&mut self, max_payload: u64) -> Result<Frame> {
        (**self).recv_frame(max_payload)
    }
}

/// One end of an in-process connection. Encoded frames travel as byte
/// buffers so the wire format is exercised exactly as over TCP.
pub struct ChannelTransport {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
}

pub fn channel_pair() -> (ChannelTransport, ChannelTransport) {
    let (a_tx, b_rx) = channel();
    let (b_tx, a_rx) = channel();
    (ChannelTransport { tx: a_tx, rx: a_rx }, ChannelTransport { tx: b_tx, rx: b_rx })
}

impl Transport for ChannelTransport {
    fn send_bytes(&mut self, frame: &[u8]) -> Result<()> {
        self.tx.send(frame.to_vec()).map_err(|_| ProtocolError::Disconnected)
    }

    fn recv_frame(&mut self, max_payload: u64) -> Result<Frame> {
        let bytes = self.rx.recv().map_err(|_| ProtocolError::Disconnected)?;
        Frame::decode(&bytes, max_payload)
    }
}

pub struct TcpTransport {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
}

impl TcpTransport {
    pub fn new(stream: TcpStream) -> Result<Self> {
        stream.set_nodelay(true)?;
        Ok(TcpTransport {
            reader: BufReader::with_capacity(1 << 16, stream.try_clone()?),
            writer: BufWriter::with_capacity(1 << 16, stream),
        })
    }

    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self> {
        Self::new(TcpStream::connect(addr)?)
    }

    /// Keep trying to connect until `timeout` has passed, for peers that
    /// start at about the same time.
    pub fn connect_retry(addr: &str, timeout: Duration) -> Result<Self> {
        let start = Instant::now();
        loop {
            match TcpStream::connect(addr) {
                Ok(s) => return Self::new(s),
                Err(e) if start.elapsed() >= timeout => return Err(e.into()),
                Err(_) => std::thread::sleep(Duration::from_millis(100)),
            }
        }
    }

    /// Accept exactly one peer.
    pub fn accept(listener: &TcpListener) -> Result<Self> {
        let (stream, _) = listener.accept()?;
        Self::new(stream)
    }
}

impl Transport for TcpTransport {
    fn send_bytes(&mut self, frame: &[u8]) -> Result<()> {
        self.writer.write_all(frame)?;
        self.writer.flush()?;
        Ok(())
    }

    fn recv_frame(&mut self, max_payload: u64) -> Result<Frame> {
        Frame::read_from(&mut self.reader, max_payload)
    }
}

/// Raw bytes seen by one end, for audits.
#[derive(Clone, Debug, Default)]
pub struct Tap {
    pub sent: Arc<Mutex<Vec<u8>>>,
    pub received: Arc<Mutex<Vec<u8>>>,
}

impl Tap {
    pub fn received_bytes(&self) -> Vec<u8> {
        self.received.lock().expect("tap lock").clone()
    }

    pub fn sent_bytes(&self) -> Vec<u8> {
        self.sent.lock().expect("tap lock").clone()
    }
}

/// Copies every frame through a [`Tap`].
pub struct Tapped<T> {
    inner: T,
    tap: Tap,
}

impl<T: Transport> Tapped<T> {
    pub fn new(inner: T) -> (Self, Tap) {
        let tap = Tap::default();
        (Tapped { inner, tap: tap.clone() }, tap)
    }
}

impl<T: Transport> Transport for Tapped<T> {
    fn send_bytes(&mut self, frame: &[u8]) -> Result<()> {
        self.tap.sent.lock().expect("tap lock").extend_from_slice(frame);
        self.inner.send_bytes(frame)
    }

    fn recv_frame(&mut self, max_payload: u64) -> Result<Frame> {
        let f = self.inner.recv_frame(max_payload)?;
        let bytes = f.encode(u64::MAX)?;
        self.tap.received.lock().expect("tap lock").extend_from_slice(&bytes);
        Ok(f)
    }
}
