use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;

use super::wire::{decode, encode, WireMessage};
use super::{BridgeError, Environment, Result, PROTOCOL_VERSION};

fn reply<W: Write>(w: &mut W, msg: &WireMessage) -> std::io::Result<()> {
    let line = match encode(msg) {
        Ok(line) => line,
        Err(e) => encode(&WireMessage::error("env_error", e.to_string())).expect("error message encodes"),
    };
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")?;
    w.flush()
}

fn classify_bad_line(line: &str, err: BridgeError) -> WireMessage {
    if let Ok(serde_json::Value::Object(map)) = serde_json::from_str::<serde_json::Value>(line) {
        if let Some(kind) = map.get("kind").and_then(|k| k.as_str()) {
            const KNOWN: [&str; 8] = ["hello", "spec", "reset", "obs", "step", "result", "error", "bye"];
            if !KNOWN.contains(&kind) {
                return WireMessage::error("unknown_kind", format!("unknown message kind {kind:?}"));
            }
        }
    }
    WireMessage::error("malformed", err.to_string())
}

/// Serves one client until `bye`, end of input, or a transport failure, then
/// resets the environment for the next client.
pub fn serve_session<E, R, W>(env: &mut E, reader: R, mut writer: W) -> Result<()>
where
    E: Environment + ?Sized,
    R: BufRead,
    W: Write,
{
    let mut greeted = false;
    let mut live = false;
    let mut done = false;
    for line in reader.lines() {
        let Ok(line) = line else { break };
        let response = match decode(&line) {
            Err(e) => classify_bad_line(&line, e),
            Ok(WireMessage::Hello { version }) => {
                if version != PROTOCOL_VERSION {
                    let msg = WireMessage::error(
                        "version_mismatch",
                        format!("server speaks version {PROTOCOL_VERSION}, client sent {version}"),
                    );
                    let _ = reply(&mut writer, &msg);
                    break;
                }
                greeted = true;
                WireMessage::Spec { spec: env.spec() }
            }
            Ok(_) if !greeted => WireMessage::error("no_handshake", "send hello first"),
            Ok(WireMessage::Reset) => match env.reset() {
                Ok(obs) => {
                    live = true;
                    done = false;
                    WireMessage::Obs { obs }
                }
                Err(e) => error_reply(e),
            },
            Ok(WireMessage::Step { action }) => {
                if !live {
                    WireMessage::error("not_reset", "reset before stepping")
                } else if done {
                    WireMessage::error("episode_done", "episode finished; reset to start another")
                } else {
                    match env.step(action) {
                        Ok(out) => {
                            done = out.done;
                            WireMessage::Result {
                                obs: out.obs,
                                reward: out.reward,
                                done: out.done,
                                info: out.info,
                            }
                        }
                        Err(e) => {
                            if !matches!(&e, BridgeError::Env { code, .. } if code == "bad_action") {
                                live = false;
                            }
                            error_reply(e)
                        }
                    }
                }
            }
            Ok(WireMessage::Bye) => {
                let _ = reply(&mut writer, &WireMessage::Bye);
                break;
            }
            Ok(other) => WireMessage::error("unexpected_kind", format!("servers do not accept {other:?}")),
        };
        if reply(&mut writer, &response).is_err() {
            break;
        }
    }
    // the next client starts from a fresh episode
    if let Err(e) = env.reset() {
        log::warn!("reset after session failed: {e}");
    }
    Ok(())
}

fn error_reply(e: BridgeError) -> WireMessage {
    match e {
        BridgeError::Env { code, message } => WireMessage::Error { code, message },
        other => WireMessage::error("env_error", other.to_string()),
    }
}

/// Accepts clients one at a time. Stops after `max_sessions` sessions when
/// given, otherwise serves until the listener fails.
pub fn serve_listener<E: Environment + ?Sized>(
    listener: TcpListener,
    env: &mut E,
    max_sessions: Option<usize>,
) -> Result<()> {
    let mut served = 0;
    while max_sessions.is_none_or(|m| served < m) {
        let (stream, peer) = listener
            .accept()
            .map_err(|e| BridgeError::Connection(format!("accept failed: {e}")))?;
        log::info!("session from {peer}");
        let _ = stream.set_nodelay(true);
        let reader = stream
            .try_clone()
            .map_err(|e| BridgeError::Connection(e.to_string()))?;
        serve_session(env, BufReader::new(reader), stream)?;
        served += 1;
    }
    Ok(())
}

/// Serves a single session over this process's stdin and stdout.
pub fn serve_stdio<E: Environment + ?Sized>(env: &mut E) -> Result<()> {
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    serve_session(env, stdin.lock(), stdout.lock())
}
