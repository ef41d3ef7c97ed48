use serde::{Deserialize, Serialize};

use super::{BridgeError, EnvSpec, Result, StepInfo};

/// One protocol line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WireMessage {
    Hello {
        version: u32,
    },
    Spec {
        spec: EnvSpec,
    },
    Reset,
    Obs {
        obs: Vec<f64>,
    },
    Step {
        action: usize,
    },
    Result {
        obs: Vec<f64>,
        reward: f64,
        done: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        info: Option<StepInfo>,
    },
    Error {
        code: String,
        message: String,
    },
    Bye,
}

impl WireMessage {
    pub fn error(code: &str, message: impl Into<String>) -> Self {
        WireMessage::Error {
            code: code.into(),
            message: message.into(),
        }
    }

    fn floats(&self) -> Box<dyn Iterator<Item = f64> + '_> {
        match self {
            WireMessage::Obs { obs } => Box::new(obs.iter().copied()),
            WireMessage::Result { obs, reward, info, .. } => Box::new(
                obs.iter()
                    .copied()
                    .chain(std::iter::once(*reward))
                    .chain(info.iter().flat_map(|i| [i.t_surf, i.v_jet, i.time])),
            ),
            WireMessage::Spec { spec } => Box::new(
                spec.obs_shift
                    .iter()
                    .flatten()
                    .chain(spec.obs_scale.iter().flatten())
                    .copied(),
            ),
            _ => Box::new(std::iter::empty()),
        }
    }
}

/// Serializes `msg` as one line without the trailing newline. Floats use the
/// shortest representation that parses back to the same value.
pub fn encode(msg: &WireMessage) -> Result<String> {
    if msg.floats().any(|v| !v.is_finite()) {
        return Err(BridgeError::Codec {
            offset: 0,
            message: "message carries a non-finite number".into(),
        });
    }
    serde_json::to_string(msg).map_err(|e| BridgeError::Codec {
        offset: 0,
        message: e.to_string(),
    })
}

/// Parses one line (a trailing newline is allowed).
pub fn decode(line: &str) -> Result<WireMessage> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    let line = line.strip_suffix('\r').unwrap_or(line);
    serde_json::from_str(line).map_err(|e| BridgeError::Codec {
        offset: byte_offset(line, e.line(), e.column()),
        message: e.to_string(),
    })
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let start: usize = text.split('\n').take(line.saturating_sub(1)).map(|l| l.len() + 1).sum();
    start + column.saturating_sub(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn result_roundtrip() {
        let m = WireMessage::Result {
            obs: vec![0.95],
            reward: 1.0,
            done: false,
            info: None,
        };
        let line = encode(&m).unwrap();
        assert_eq!(line, r#"{"kind":"result","obs":[0.95],"reward":1.0,"done":false}"#);
        assert_eq!(decode(&line).unwrap(), m);
    }

    #[test]
    fn simple_kinds() {
        for m in [
            WireMessage::Hello { version: 1 },
            WireMessage::Reset,
            WireMessage::Step { action: 3 },
            WireMessage::Bye,
            WireMessage::error("not_reset", "reset first"),
        ] {
            assert_eq!(decode(&encode(&m).unwrap()).unwrap(), m);
        }
        assert_eq!(decode("{\"kind\":\"reset\"}\n").unwrap(), WireMessage::Reset);
    }

    #[test]
    fn malformed_lines_report_offsets() {
        match decode("not json") {
            Err(BridgeError::Codec { offset, .. }) => assert_eq!(offset, 1),
            other => panic!("{other:?}"),
        }
        match decode(r#"{"kind":"step","action":-1}"#) {
            Err(BridgeError::Codec { message, .. }) => assert!(message.contains("invalid")),
            other => panic!("{other:?}"),
        }
        assert!(decode(r#"{"kind":"launch"}"#).is_err());
    }

    #[test]
    fn non_finite_numbers_are_refused() {
        let m = WireMessage::Obs { obs: vec![1.0, f64::NAN] };
        assert!(encode(&m).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn large_payloads_roundtrip_bit_exactly(
            obs in prop::collection::vec(
                prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO,
                10_000,
            ),
            reward in prop::num::f64::NORMAL,
        ) {
            let m = WireMessage::Result { obs, reward, done: true, info: None };
            let back = decode(&encode(&m).unwrap()).unwrap();
            match (&m, &back) {
                (WireMessage::Result { obs: a, reward: ra, .. }, WireMessage::Result { obs: b, reward: rb, .. }) => {
                    prop_assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
                    prop_assert_eq!(ra.to_bits(), rb.to_bits());
                }
                _ => prop_assert!(false),
            }
        }
    }
}
