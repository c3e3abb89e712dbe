//! Per-operation FHE latencies and a projected encrypted-GD epoch cost.

use std::fmt::Write as _;
use std::time::Instant;

use fairgate_fhe::{keygen, refresh_apply, refresh_request, BackendKind, FheParams, PlainVector};
use fairgate_protocol::frame::{Frame, DEFAULT_MAX_PAYLOAD};
use fairgate_protocol::ProtocolMessage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct OpTiming {
    pub op: &'static str,
    pub iterations: usize,
    pub mean_ms: f64,
}

/// Linear GD epoch on the subsample profile: nine columns, 1024 rows.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochProjection {
    pub columns: usize,
    pub blocks: usize,
    pub muls: usize,
    pub rotations: usize,
    pub adds: usize,
    /// Refreshes per epoch, amortised over the refresh cadence.
    pub refreshes: f64,
    pub ms: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub preset: String,
    pub backend: BackendKind,
    pub ring_degree: usize,
    pub levels: usize,
    pub ops: Vec<OpTiming>,
    /// Multiplying a fresh ciphertext until no level is left.
    pub mul_chain_ms: f64,
    pub epoch: EpochProjection,
}

impl BenchReport {
    pub fn mean(&self, op: &str) -> Option<f64> {
        self.ops.iter().find(|t| t.op == op).map(|t| t.mean_ms)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "preset {} ({} backend, N = {}, {} levels)",
            self.preset, self.backend, self.ring_degree, self.levels
        );
        let _ = writeln!(s, "{:<18}  {:>6}  {:>10}", "operation", "iters", "mean ms");
        for t in &self.ops {
            let _ = writeln!(s, "{:<18}  {:>6}  {:>10.3}", t.op, t.iterations, t.mean_ms);
        }
        let _ = writeln!(s, "{:<18}  {:>6}  {:>10.3}", "mul chain to L=0", self.levels, self.mul_chain_ms);
        let e = &self.epoch;
        let _ = writeln!(
            s,
            "projected linear GD epoch ({} columns, {} block(s)): {} mul, {} rotate, {} add, {:.2} refresh = {:.1} ms",
            e.columns, e.blocks, e.muls, e.rotations, e.adds, e.refreshes, e.ms
        );
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("operation,iterations,mean_ms\n");
        for t in &self.ops {
            let _ = writeln!(s, "{},{},{}", t.op, t.iterations, t.mean_ms);
        }
        let _ = writeln!(s, "mul chain,{},{}", self.levels, self.mul_chain_ms);
        let _ = writeln!(s, "projected epoch,1,{}", self.epoch.ms);
        s
    }
}

fn wire(msg: ProtocolMessage) -> ProtocolMessage {
    let bytes = msg.to_frame(1).encode(DEFAULT_MAX_PAYLOAD).expect("frame fits");
    ProtocolMessage::from_frame(&Frame::decode(&bytes, DEFAULT_MAX_PAYLOAD).expect("frame decodes")).expect("message decodes")
}

fn time_ms<T>(iterations: usize, mut f: impl FnMut(usize) -> T) -> f64 {
    let t = Instant::now();
    for i in 0..iterations {
        std::hint::black_box(f(i));
    }
    t.elapsed().as_secs_f64() * 1e3 / iterations as f64
}

pub fn run_bench(preset: &str, backend: BackendKind, iterations: usize, seed: u64) -> Result<BenchReport> {
    let params = FheParams::preset(preset).map_err(|e| CliError::Usage(e.to_string()))?;
    if iterations == 0 {
        return Err(CliError::Usage("iterations must be at least 1".into()));
    }
    let keys = keygen(&params, backend)?;
    let slots = params.slot_count();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let vector = |rng: &mut ChaCha20Rng| {
        PlainVector::new((0..slots).map(|_| rng.random_range(-1.0..=1.0)).collect()).expect("fits the slots")
    };
    let a = keys.pk.encrypt(&vector(&mut rng), &mut rng)?;
    let b = keys.pk.encrypt(&vector(&mut rng), &mut rng)?;
    let m = vector(&mut rng);

    let mut ops = Vec::new();
    let mut push = |op, mean_ms| ops.push(OpTiming { op, iterations, mean_ms });
    push("encrypt", time_ms(iterations, |_| keys.pk.encrypt(&m, &mut rng)));
    push("add", time_ms(iterations, |_| keys.evk.add(&a, &b)));
    push("mul+rescale", time_ms(iterations, |_| keys.evk.mul(&a, &b)));
    push("rotate", time_ms(iterations, |i| keys.evk.rotate(&a, 1 + i as isize % 8)));
    let mut low = a.clone();
    while low.level() > 0 {
        low = keys.evk.mul(&low, &b)?;
    }
    let mut rrng = ChaCha20Rng::seed_from_u64(seed ^ 1);
    push(
        "refresh round-trip",
        time_ms(iterations, |_| {
            // both legs go through the wire format, as in a session
            let request = wire(ProtocolMessage::RefreshRequest(vec![refresh_request(&low)]));
            let ProtocolMessage::RefreshRequest(tokens) = request else { unreachable!() };
            let fresh = refresh_apply(&keys.sk, &keys.pk, &tokens[0], &mut rrng).expect("refresh");
            wire(ProtocolMessage::RefreshResponse(vec![fresh]))
        }),
    );

    let mul_chain_ms = {
        let reps = iterations.clamp(1, 5);
        time_ms(reps, |_| {
            let mut c = a.clone();
            while c.level() > 0 {
                c = keys.evk.mul(&c, &b).expect("level available");
            }
            c
        })
    };

    let mean = |op: &str| ops.iter().find(|t| t.op == op).map_or(0.0, |t| t.mean_ms);
    let epoch = project_epoch(slots, params.level_count, |op| mean(op));
    Ok(BenchReport {
        preset: preset.into(),
        backend,
        ring_degree: params.ring_degree,
        levels: params.level_count,
        ops,
        mul_chain_ms,
        epoch,
    })
}

/// Operation counts of one linear GD epoch (see the protocol learner):
/// prediction and gradient products per column and block, a log-depth
/// inner sum per column, and one refresh per coefficient every
/// `refresh_every / 2` epochs.
fn project_epoch(slots: usize, levels: usize, mean: impl Fn(&str) -> f64) -> EpochProjection {
    const COLUMNS: usize = 9;
    const ROWS: usize = 1024;
    let blocks = ROWS.div_ceil(slots);
    let log_slots = slots.trailing_zeros() as usize;
    let muls = 2 * COLUMNS * blocks;
    let rotations = COLUMNS * log_slots;
    let adds = 2 * COLUMNS * blocks + blocks + COLUMNS * log_slots + COLUMNS;
    let refresh_every = levels.saturating_sub(2).max(2);
    let refreshes = COLUMNS as f64 / (refresh_every / 2) as f64;
    let ms = muls as f64 * mean("mul+rescale")
        + rotations as f64 * mean("rotate")
        + adds as f64 * mean("add")
        + refreshes * mean("refresh round-trip");
    EpochProjection { columns: COLUMNS, blocks, muls, rotations, adds, refreshes, ms }
}
