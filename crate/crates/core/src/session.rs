//! Multi-round sessions: key bits, the public record, reconciliation, Bell
//! aggregation and transcripts.

use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{
    channel_registers, check_probability, intercept_resend, resend_branches, AttackKind,
    AttackPolicy,
};
use crate::bell::{bell_operator, verdict_for, BellSampler, SecurityThreshold, Verdict};
use crate::error::{Error, Result};
use crate::qcore::{seeded_rng, PureState, SimRng};
use crate::qubit::{self, PairValue};
use crate::qutrit;
use crate::types::{Protocol, ResidualId, Strategy, Switch};

const CHOICE_STREAM: u64 = 0;
const QUANTUM_STREAM: u64 = 1;
const PROBE_STREAM: u64 = 2;

fn stream(seed: u64, id: u64) -> SimRng {
    let mut rng = seeded_rng(seed);
    rng.set_stream(id);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum BellMode {
    /// Exact expectation on the residual of each round.
    Exact,
    /// Eigenbasis sampling with `shots` readings per round.
    Sampled { shots: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub protocol: Protocol,
    pub n_rounds: usize,
    pub chi: SecurityThreshold,
    pub attack: AttackPolicy,
    pub seed: u64,
    pub bell_mode: BellMode,
    /// Record what a single-leg computational-basis reading of the channel
    /// would show, without disturbing the round.
    #[serde(default)]
    pub probe_channel: bool,
}

impl SessionConfig {
    pub fn new(protocol: Protocol, n_rounds: usize, chi: f64, seed: u64) -> Result<Self> {
        let cfg = Self {
            protocol,
            n_rounds,
            chi: SecurityThreshold::new(chi)?,
            attack: AttackPolicy::none(),
            seed,
            bell_mode: BellMode::Exact,
            probe_channel: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_attack(mut self, attack: AttackPolicy) -> Result<Self> {
        self.attack = attack;
        self.validate()?;
        Ok(self)
    }

    pub fn with_bell_mode(mut self, mode: BellMode) -> Result<Self> {
        self.bell_mode = mode;
        self.validate()?;
        Ok(self)
    }

    pub fn with_probe(mut self, probe: bool) -> Self {
        self.probe_channel = probe;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rounds == 0 {
            return Err(Error::InvalidConfig("n_rounds must be at least 1".into()));
        }
        if let BellMode::Sampled { shots: 0 } = self.bell_mode {
            return Err(Error::InvalidConfig(
                "sampled Bell mode needs shots > 0".into(),
            ));
        }
        SecurityThreshold::new(self.chi.value())?;
        self.attack.validate(self.protocol)
    }
}

/// One line of the transcript.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundTranscript {
    pub round: usize,
    pub ka: u8,
    pub kb: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kr: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub o_pair: Option<PairValue>,
    pub residual: ResidualId,
    pub bell: f64,
    pub attacked: bool,
}

/// Outcome counts of the hypothetical channel reading on each leg.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LegHistograms {
    pub first: Vec<u64>,
    pub second: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    pub key_alice: Vec<u8>,
    pub key_bob: Vec<u8>,
    pub mean_bell: f64,
    pub verdict: Verdict,
    pub eve_known_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leg_histograms: Option<LegHistograms>,
}

impl SessionResult {
    pub fn keys_agree(&self) -> bool {
        self.key_alice == self.key_bob
    }

    pub fn key_error_rate(&self) -> f64 {
        let errors = self
            .key_alice
            .iter()
            .zip(&self.key_bob)
            .filter(|(a, b)| a != b)
            .count();
        errors as f64 / self.key_alice.len().max(1) as f64
    }
}

/// Pack key bits MSB-first into hex; a trailing partial nibble is zero-padded.
pub fn key_hex(bits: &[u8]) -> String {
    bits.chunks(4)
        .map(|nib| {
            let v = nib
                .iter()
                .chain(std::iter::repeat(&0))
                .take(4)
                .fold(0u8, |acc, &b| (acc << 1) | (b & 1));
            char::from_digit(v as u32, 16).expect("nibble")
        })
        .collect()
}

/// Bob keeps `k_b` when `k_s = k_r` and negates it otherwise.
pub fn reconcile(k_s: u8, k_r: u8, k_b: u8) -> u8 {
    if k_s == k_r {
        k_b
    } else {
        k_b ^ 1
    }
}

/// The `(k_a, k_b)` pairs compatible with a public `(k_s, k_r)`.
pub fn public_record_ambiguity(k_s: u8, k_r: u8) -> [(u8, u8); 2] {
    if k_s == k_r {
        [(0, 0), (1, 1)]
    } else {
        [(0, 1), (1, 0)]
    }
}

#[derive(Clone, Debug)]
pub struct SessionOutput {
    pub result: SessionResult,
    pub transcript: Vec<RoundTranscript>,
}

struct Round<'a> {
    cfg: &'a SessionConfig,
    legs: (Vec<&'static str>, Vec<&'static str>),
    channel: Vec<&'static str>,
    sampler: Option<[BellSampler; 3]>,
    choices: SimRng,
    quantum: SimRng,
    probe: SimRng,
    histograms: Option<LegHistograms>,
}

impl Round<'_> {
    /// A leg of the channel: Eve (if attacking), then noise, then the probe.
    fn leg(
        &mut self,
        state: PureState,
        which: usize,
        attack: bool,
        noise: bool,
    ) -> Result<PureState> {
        let mut s = state;
        if attack {
            let targets = if which == 0 {
                &self.legs.0
            } else {
                &self.legs.1
            };
            s = intercept_resend(&s, targets, &mut self.quantum)?.post_state;
        }
        if noise && which == 0 {
            s = intercept_resend(&s, &self.channel, &mut self.quantum)?.post_state;
        }
        if let Some(h) = self.histograms.as_mut() {
            let branches = resend_branches(&s, &self.channel)?;
            let probs: Vec<f64> = branches.iter().map(|b| b.0).collect();
            let k = crate::qcore::sample_index(&probs, &mut self.probe)?;
            let dims: Vec<usize> = self
                .channel
                .iter()
                .map(|r| s.layout().position(r).map(|i| s.layout().register_dim(i)))
                .collect::<Result<_>>()?;
            let idx = branches[k]
                .1
                .iter()
                .zip(&dims)
                .fold(0, |acc, (&d, &n)| acc * n + d);
            let bins = if which == 0 {
                &mut h.first
            } else {
                &mut h.second
            };
            bins[idx] += 1;
        }
        Ok(s)
    }

    fn bell(&mut self, residual: &PureState, id: ResidualId) -> Result<f64> {
        let op = bell_operator(self.cfg.protocol, id);
        let raw = match (self.cfg.bell_mode, &self.sampler) {
            (BellMode::Sampled { shots }, Some(s)) => {
                s[id.index()]
                    .estimate(residual, shots, &mut self.quantum)?
                    .0
            }
            _ => op.expectation(residual)?,
        };
        Ok(op.orientation() * raw)
    }

    fn play(&mut self, round: usize) -> Result<(RoundTranscript, u8, u8)> {
        let protocol = self.cfg.protocol;
        let k_a = Strategy::from_bit(self.choices.random::<u8>() & 1);
        let k_b = Strategy::from_bit(self.choices.random::<u8>() & 1);
        let k_s = Switch::from_bit(self.choices.random::<u8>() & 1);
        let attack = self.cfg.attack.kind != AttackKind::None
            && self.choices.random::<f64>() < self.cfg.attack.p;
        let noise = self.choices.random::<f64>() < self.cfg.attack.noise;

        match protocol {
            Protocol::Qutrit => {
                let s = qutrit::alice_hides(&qutrit::initial_state(), k_a)?;
                let s = self.leg(s, 0, attack, noise)?;
                let s = qutrit::bob_chooses(&s, k_b)?;
                let s = self.leg(s, 1, attack, noise)?;
                let s = qutrit::open_switch_encode(&s, k_s)?;
                let v = qutrit::measure_victory(&s, &mut self.quantum)?;
                let id = qutrit::residual_id(k_a, k_s, v.k_r);
                let bell = self.bell(&v.residual, id)?;
                let bob = reconcile(k_s.bit(), v.k_r, k_b.bit());
                let t = RoundTranscript {
                    round,
                    ka: k_a.bit(),
                    kb: k_b.bit(),
                    ks: Some(k_s.bit()),
                    kr: Some(v.k_r),
                    o_pair: None,
                    residual: id,
                    bell,
                    attacked: attack,
                };
                Ok((t, k_a.bit(), bob))
            }
            Protocol::Qubit => {
                let s = qubit::bob_strategy(&qubit::init_state(), k_b)?;
                let s = self.leg(s, 0, attack, noise)?;
                let s = qubit::alice_strategy(&s, k_a)?;
                let s = self.leg(s, 1, attack, noise)?;
                let s = qubit::bob_finish(&s)?;
                let m = qubit::measure_o(&s, &mut self.quantum)?;
                let bell = self.bell(&m.residual, m.residual_id)?;
                let t = RoundTranscript {
                    round,
                    ka: k_a.bit(),
                    kb: k_b.bit(),
                    ks: None,
                    kr: None,
                    o_pair: Some(m.o_pair),
                    residual: m.residual_id,
                    bell,
                    attacked: attack,
                };
                Ok((t, k_a.bit(), k_b.bit() ^ m.flip))
            }
        }
    }
}

/// Run a session, handing each round's transcript to `sink` in order.
pub fn run_session_with<F>(cfg: &SessionConfig, mut sink: F) -> Result<SessionResult>
where
    F: FnMut(&RoundTranscript) -> Result<()>,
{
    cfg.validate()?;
    check_probability("p", cfg.attack.p)?;
    let channel = channel_registers(cfg.protocol);
    let bins = match cfg.protocol {
        Protocol::Qutrit => 3,
        Protocol::Qubit => 4,
    };
    let sampler = match cfg.bell_mode {
        BellMode::Sampled { .. } => {
            Some(ResidualId::ALL.map(|id| BellSampler::new(bell_operator(cfg.protocol, id))))
        }
        BellMode::Exact => None,
    };
    let mut round = Round {
        cfg,
        legs: cfg.attack.legs(cfg.protocol),
        channel,
        sampler,
        choices: stream(cfg.seed, CHOICE_STREAM),
        quantum: stream(cfg.seed, QUANTUM_STREAM),
        probe: stream(cfg.seed, PROBE_STREAM),
        histograms: cfg.probe_channel.then(|| LegHistograms {
            first: vec![0; bins],
            second: vec![0; bins],
        }),
    };

    let mut key_alice = Vec::with_capacity(cfg.n_rounds);
    let mut key_bob = Vec::with_capacity(cfg.n_rounds);
    let mut bell_sum = 0.0;
    let mut known = 0usize;
    for i in 0..cfg.n_rounds {
        let (t, a, b) = round.play(i)?;
        key_alice.push(a);
        key_bob.push(b);
        bell_sum += t.bell;
        if t.attacked && cfg.attack.reveals_key() {
            known += 1;
        }
        sink(&t)?;
    }
    let mean_bell = bell_sum / cfg.n_rounds as f64;
    Ok(SessionResult {
        key_alice,
        key_bob,
        mean_bell,
        verdict: verdict_for(mean_bell, cfg.chi),
        eve_known_fraction: known as f64 / cfg.n_rounds as f64,
        leg_histograms: round.histograms,
    })
}

pub fn run_session(cfg: &SessionConfig) -> Result<SessionOutput> {
    let mut transcript = Vec::with_capacity(cfg.n_rounds);
    let result = run_session_with(cfg, |t| {
        transcript.push(t.clone());
        Ok(())
    })?;
    Ok(SessionOutput { result, transcript })
}

/// One JSON object per line.
pub fn write_transcript<W: Write>(mut w: W, rounds: &[RoundTranscript]) -> Result<()> {
    for r in rounds {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Inverse of [`write_transcript`]; blank lines are skipped.
pub fn read_transcript<R: BufRead>(r: R) -> Result<Vec<RoundTranscript>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let t = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(t);
    }
    Ok(out)
}

/// The summary document: configuration and result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub config: SessionConfig,
    pub result: SessionResult,
}

pub fn write_summary<W: Write>(w: W, summary: &SessionSummary) -> Result<()> {
    serde_json::to_writer_pretty(w, summary)?;
    Ok(())
}

pub fn read_summary<R: std::io::Read>(r: R) -> Result<SessionSummary> {
    Ok(serde_json::from_reader(r)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{qubit_max, qutrit_max};
    use crate::qcore::EPS;

    fn cfg(protocol: Protocol, n: usize) -> SessionConfig {
        SessionConfig::new(protocol, n, 2.5, 11).unwrap()
    }

    #[test]
    fn reconcile_examples() {
        assert_eq!(reconcile(1, 1, 0), 0);
        assert_eq!(reconcile(0, 1, 0), 1);
    }

    #[test]
    fn ambiguity_sets() {
        assert_eq!(public_record_ambiguity(0, 0), [(0, 0), (1, 1)]);
        assert_eq!(public_record_ambiguity(0, 1), [(0, 1), (1, 0)]);
        assert_eq!(public_record_ambiguity(1, 1), [(0, 0), (1, 1)]);
    }

    #[test]
    fn config_rejects_bad_values() {
        assert!(SessionConfig::new(Protocol::Qutrit, 0, 2.5, 0).is_err());
        assert!(SessionConfig::new(Protocol::Qutrit, 5, 2.0, 0).is_err());
        assert!(cfg(Protocol::Qutrit, 5)
            .with_bell_mode(BellMode::Sampled { shots: 0 })
            .is_err());
    }

    #[test]
    fn unattacked_sessions_agree() {
        for (protocol, max) in [
            (Protocol::Qutrit, qutrit_max()),
            (Protocol::Qubit, qubit_max()),
        ] {
            let out = run_session(&cfg(protocol, 200)).unwrap();
            assert!(out.result.keys_agree());
            assert!((out.result.mean_bell - max).abs() < EPS);
            assert_eq!(out.result.verdict, Verdict::Safe);
            assert_eq!(out.result.eve_known_fraction, 0.0);
        }
    }

    #[test]
    fn qutrit_full_attack_is_detected() {
        let attack = AttackPolicy::new(AttackKind::DoubleIr, 1.0, 0.0).unwrap();
        let c = cfg(Protocol::Qutrit, 300).with_attack(attack).unwrap();
        let out = run_session(&c).unwrap();
        assert!(out.result.mean_bell.abs() < EPS);
        assert_eq!(out.result.verdict, Verdict::Compromised);
        assert_eq!(out.result.eve_known_fraction, 1.0);
        assert!(out.result.keys_agree());
    }

    #[test]
    fn qubit_transcript_has_no_public_bits() {
        let out = run_session(&cfg(Protocol::Qubit, 20)).unwrap();
        for t in &out.transcript {
            assert!(t.ks.is_none() && t.kr.is_none() && t.o_pair.is_some());
        }
    }

    #[test]
    fn key_hex_packing() {
        assert_eq!(key_hex(&[1, 0, 1, 0, 1, 1, 1, 1]), "af");
        assert_eq!(key_hex(&[1]), "8");
        assert_eq!(key_hex(&[]), "");
    }

    #[test]
    fn transcript_parse_errors_name_the_line() {
        let text = "\n{\"round\":0,\"ka\":0,\"kb\":1,\"residual\":\"phi1\",\"bell\":1.0,\"attacked\":false}\nnot json\n";
        match read_transcript(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(read_transcript("".as_bytes()).unwrap().is_empty());
    }
}
