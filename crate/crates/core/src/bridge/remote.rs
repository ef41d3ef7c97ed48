use std::io::{BufRead, BufReader, Read, Write};
use std::net::{Shutdown, TcpStream, ToSocketAddrs};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::Duration;

use super::wire::{decode, encode, WireMessage};
use super::{BridgeError, EnvSpec, Environment, Result, StepOutcome, PROTOCOL_VERSION};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemoteOptions {
    /// Longest wait for any single response.
    pub timeout: Duration,
    /// Protocol version announced in `hello`.
    pub version: u32,
}

impl Default for RemoteOptions {
    fn default() -> Self {
        Self {
            timeout: Duration::from_secs(60),
            version: PROTOCOL_VERSION,
        }
    }
}

/// Client side of the protocol; behaves like a local environment.
pub struct RemoteEnv {
    writer: Box<dyn Write + Send>,
    lines: Receiver<std::io::Result<String>>,
    spec: EnvSpec,
    timeout: Duration,
    tcp: Option<TcpStream>,
    child: Option<Child>,
    broken: bool,
}

impl RemoteEnv {
    pub fn connect<A: ToSocketAddrs>(addr: A, opts: RemoteOptions) -> Result<Self> {
        let stream = TcpStream::connect(addr).map_err(|e| BridgeError::Connection(e.to_string()))?;
        let _ = stream.set_nodelay(true);
        let reader = stream.try_clone().map_err(|e| BridgeError::Connection(e.to_string()))?;
        let writer = stream.try_clone().map_err(|e| BridgeError::Connection(e.to_string()))?;
        Self::handshake(reader, writer, opts, Some(stream), None)
    }

    /// Starts `cmd` with piped stdin/stdout and talks to it.
    pub fn spawn(cmd: &mut Command, opts: RemoteOptions) -> Result<Self> {
        let mut child = cmd
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| BridgeError::Connection(format!("cannot start server: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        Self::handshake(stdout, stdin, opts, None, Some(child))
    }

    /// Uses an already-open byte stream pair.
    pub fn from_io<R, W>(reader: R, writer: W, opts: RemoteOptions) -> Result<Self>
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        Self::handshake(reader, writer, opts, None, None)
    }

    fn handshake<R, W>(
        reader: R,
        writer: W,
        opts: RemoteOptions,
        tcp: Option<TcpStream>,
        child: Option<Child>,
    ) -> Result<Self>
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(reader).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    return;
                }
            }
            let _ = tx.send(Err(std::io::ErrorKind::UnexpectedEof.into()));
        });
        let mut env = Self {
            writer: Box::new(writer),
            lines: rx,
            spec: EnvSpec {
                obs_dim: 0,
                n_actions: 0,
                max_decisions_per_episode: 0,
                protocol_version: opts.version,
                obs_shift: None,
                obs_scale: None,
            },
            timeout: opts.timeout,
            tcp,
            child,
            broken: false,
        };
        match env.request(&WireMessage::Hello { version: opts.version })? {
            WireMessage::Spec { spec } => {
                if spec.protocol_version != opts.version {
                    return Err(BridgeError::Connection(format!(
                        "server speaks version {}, client {}",
                        spec.protocol_version, opts.version
                    )));
                }
                spec.validate()?;
                env.spec = spec;
                Ok(env)
            }
            WireMessage::Error { code, message } => Err(BridgeError::Connection(format!("{code}: {message}"))),
            other => Err(BridgeError::Protocol(format!("expected spec, got {other:?}"))),
        }
    }

    fn request(&mut self, msg: &WireMessage) -> Result<WireMessage> {
        if self.broken {
            return Err(BridgeError::Connection("connection is no longer usable".into()));
        }
        let line = encode(msg)?;
        let sent = self
            .writer
            .write_all(line.as_bytes())
            .and_then(|_| self.writer.write_all(b"\n"))
            .and_then(|_| self.writer.flush());
        if let Err(e) = sent {
            self.broken = true;
            return Err(BridgeError::Connection(format!("send failed: {e}")));
        }
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => decode(&line),
            Ok(Err(e)) => {
                self.broken = true;
                Err(BridgeError::Connection(format!("server went away: {e}")))
            }
            Err(RecvTimeoutError::Timeout) => {
                // a late reply would desynchronize every later request
                self.broken = true;
                Err(BridgeError::Timeout(self.timeout))
            }
            Err(RecvTimeoutError::Disconnected) => {
                self.broken = true;
                Err(BridgeError::Connection("server went away".into()))
            }
        }
    }

    /// Says goodbye and releases the transport.
    pub fn close(&mut self) {
        if !self.broken {
            let _ = self.request(&WireMessage::Bye);
            self.broken = true;
        }
        if let Some(s) = self.tcp.take() {
            let _ = s.shutdown(Shutdown::Both);
        }
        if let Some(mut c) = self.child.take() {
            let _ = c.kill();
            let _ = c.wait();
        }
    }
}

impl Drop for RemoteEnv {
    fn drop(&mut self) {
        self.close();
    }
}

impl Environment for RemoteEnv {
    fn spec(&self) -> EnvSpec {
        self.spec.clone()
    }

    fn reset(&mut self) -> Result<Vec<f64>> {
        match self.request(&WireMessage::Reset)? {
            WireMessage::Obs { obs } => Ok(obs),
            WireMessage::Error { code, message } => Err(BridgeError::Env { code, message }),
            other => Err(BridgeError::Protocol(format!("expected obs, got {other:?}"))),
        }
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        match self.request(&WireMessage::Step { action })? {
            WireMessage::Result { obs, reward, done, info } => Ok(StepOutcome { obs, reward, done, info }),
            WireMessage::Error { code, message } => Err(BridgeError::Env { code, message }),
            other => Err(BridgeError::Protocol(format!("expected result, got {other:?}"))),
        }
    }
}
