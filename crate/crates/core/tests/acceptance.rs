//! Exit-gate checks. Each criterion prints one PASS/FAIL line; the process
//! fails if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use hopshare::analysis::{self, Scenario};
use hopshare::codec::{decode_hex, rot13, to_hex_digest};
use hopshare::gfshare::{share_byte, FieldElement, MODULUS};
use hopshare::hopping::{self, LfsrState, LFSR_PERIOD};
use hopshare::medium::{AdversaryMode, MediumState};
use hopshare::node::{self, receiver_assemble, NodeConfig, NodeError, NodeState, PipeData};
use hopshare::packet::{self, DataPacket, SyncPacket};
use hopshare::sim::run_session;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

struct Case {
    plain: Vec<u8>,
    n: usize,
    k: usize,
    pipes: PipeData,
}

/// The 1000 randomized end-to-end sessions shared by criteria 1 and 2.
fn round_trip_cases() -> Result<(Vec<Case>, Duration), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0001);
    let started = Instant::now();
    let mut cases = Vec::with_capacity(1000);
    for i in 0..1000 {
        let len = rng.gen_range(1..=500);
        let plain: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        let n = rng.gen_range(5..=10);
        let k = rng.gen_range(1..=n);
        let hop_seed = rng.gen_range(1..=LFSR_PERIOD);
        let share_seed: u64 = rng.gen();
        let mut tx = NodeState::new(NodeConfig::new(1, hop_seed, share_seed, n, k)).map_err(|e| e.to_string())?;
        let mut rx = NodeState::new(NodeConfig::new(2, hop_seed, 0, n, k)).map_err(|e| e.to_string())?;
        let mut medium = MediumState::lossless(hopping::CHANNEL_COUNT).map_err(|e| e.to_string())?;
        let out = run_session(&mut tx, &mut rx, &mut medium, &plain, 0, None).map_err(|e| e.to_string())?;
        ensure(out.verified(&plain), || format!("case {i}: {:?}", out.recovered.as_ref().err()))?;
        cases.push(Case { plain, n, k, pipes: rx.inbox().clone() });
    }
    Ok((cases, started.elapsed()))
}

fn ac1(cases: &Result<(Vec<Case>, Duration), String>) -> Check {
    let (cases, elapsed) = cases.as_ref().map_err(Clone::clone)?;
    ensure(cases.len() == 1000, || format!("only {} cases", cases.len()))?;
    ensure(elapsed.as_secs_f64() < 30.0, || format!("took {elapsed:?}"))?;
    Ok(format!("1000/1000 recovered in {:.2}s", elapsed.as_secs_f64()))
}

fn keep_only(pipes: &PipeData, keep: &[usize]) -> PipeData {
    let mut p = pipes.clone();
    (0..p.pipes.len()).filter(|i| !keep.contains(i)).for_each(|i| p.drop_pipe(i));
    p
}

fn ac2(cases: &Result<(Vec<Case>, Duration), String>) -> Check {
    let (cases, _) = cases.as_ref().map_err(Clone::clone)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0002);
    let mut checked = 0usize;
    for (i, c) in cases.iter().enumerate() {
        let (keep_k, keep_k1): (Vec<Vec<usize>>, Vec<Vec<usize>>) = if c.n <= 8 {
            (common::subsets(c.n, c.k), if c.k > 0 { common::subsets(c.n, c.k - 1) } else { vec![] })
        } else {
            // n = 9, 10: a random sample of subsets of each size
            let pick = |size: usize, rng: &mut ChaCha8Rng| {
                rand::seq::index::sample(rng, c.n, size).into_vec()
            };
            ((0..8).map(|_| pick(c.k, &mut rng)).collect(), (0..8).map(|_| pick(c.k - 1, &mut rng)).collect())
        };
        for keep in &keep_k {
            let got = receiver_assemble(&keep_only(&c.pipes, keep), c.k);
            ensure(got.as_ref() == Ok(&c.plain), || format!("case {i} keep {keep:?}: {:?}", got.as_ref().err()))?;
            checked += 1;
        }
        for keep in &keep_k1 {
            let got = receiver_assemble(&keep_only(&c.pipes, keep), c.k);
            ensure(
                matches!(got, Err(NodeError::InsufficientShares { .. })),
                || format!("case {i} keep {keep:?}: expected InsufficientShares, got {got:?}"),
            )?;
            checked += 1;
        }
    }
    Ok(format!("{checked} subset reconstructions behaved"))
}

fn ac3() -> Check {
    // For every share (x, y) of a k = 2 polynomial f(t) = s + a t over GF(257),
    // count the polynomials through it for each candidate secret s.
    let p = MODULUS as u32;
    for x in 1..p {
        for y in 0..p {
            let mut counts = vec![0u32; p as usize];
            for s in 0..p {
                for a in 0..p {
                    let fx = FieldElement::new(s).add(FieldElement::new(a).mul(FieldElement::new(x)));
                    if fx.value() as u32 == y {
                        counts[s as usize] += 1;
                    }
                }
            }
            ensure(counts.iter().all(|&c| c == 1), || format!("non-uniform at x={x} y={y}"))?;
        }
    }
    // The same through the byte-sharing routine for share x = 1.
    let mut counts = vec![[0u32; 256]; p as usize];
    for s in 0..=255u8 {
        for a in 0..p {
            let pts = share_byte(s, 2, 2, &[FieldElement::new(a)]).map_err(|e| e.to_string())?;
            counts[pts[0].y.value() as usize][s as usize] += 1;
        }
    }
    ensure(counts.iter().all(|row| row.iter().all(|&c| c == 1)), || "share_byte counts not uniform".into())?;
    Ok("every single share is consistent with exactly one polynomial per secret".into())
}

fn ac4() -> Check {
    let p2 = analysis::p2_capture(100_000, 10).map_err(|e| e.to_string())?;
    let expected = BigRational::new(BigInt::from(1), BigInt::from(10).pow(50));
    ensure(p2 == expected, || format!("P2 = {p2}"))?;
    let bits2 = analysis::security_bits(&p2).map_err(|e| e.to_string())?;
    ensure((bits2 - 166.096).abs() <= 0.001, || format!("bits_P2 = {bits2}"))?;
    let p1 = analysis::p1_capture(100_000).map_err(|e| e.to_string())?;
    ensure(p1 == BigRational::new(1.into(), 99_999.into()), || format!("P1 = {p1}"))?;
    let bits1 = analysis::security_bits(&p1).map_err(|e| e.to_string())?;
    ensure((bits1 - 16.61).abs() < 0.005, || format!("bits_P1 = {bits1}"))?;
    let row = analysis::report_row(100_000, 10).map_err(|e| e.to_string())?;
    let delta2 = row.delta_bits.ok_or("no P2 delta reported")?;
    let delta1 = row.delta_bits_p1.ok_or("no P1 delta reported")?;
    ensure(row.published_p2 == Some(160.0) && (delta2 - 6.1).abs() < 0.01, || format!("delta_P2 = {delta2}"))?;
    ensure(row.published_p1 == Some(18.0) && delta1 < -1.0, || format!("delta_P1 = {delta1}"))?;
    Ok(format!(
        "P2 = 1/10^50 ({bits2:.3} bits, claim 160, delta {delta2:+.3}); P1 = 1/99999 ({bits1:.3} bits, claim 18, delta {delta1:+.3})"
    ))
}

fn ac5() -> Check {
    for n in 0..=20u32 {
        let hist = common::subset_size_counts(n);
        for k in 0..=n {
            let w1 = analysis::ways_exact(n, k).map_err(|e| e.to_string())?;
            let w2 = analysis::ways_at_most(n, k).map_err(|e| e.to_string())?;
            let brute_w1 = hist[k as usize];
            let brute_w2: u128 = hist[1..=k as usize].iter().sum();
            let gap: u128 = if k >= 1 { hist[1..k as usize].iter().sum() } else { 0 };
            ensure(w1 == brute_w1 && w2 == brute_w2, || format!("n={n} k={k}: {w1},{w2} vs {brute_w1},{brute_w2}"))?;
            if k >= 1 {
                ensure(w2 >= w1 && w2 - w1 == gap, || format!("n={n} k={k}: gap mismatch"))?;
            }
        }
    }
    Ok("W2 - W1 = sum_{i<k} C(n,i) >= 0 for all n <= 20".into())
}

fn ac6() -> Check {
    let started = Instant::now();
    let sc = Scenario::new(16, 2, AdversaryMode::IndependentPerPacket { q: 0.25 }, 100_000, 0xACCE_0006);
    let st = analysis::monte_carlo(&sc).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let (with, without) = (st.rate_with_sharing(), st.rate_without_sharing());
    ensure((with - 0.0625).abs() <= 0.01, || format!("with-sharing rate {with}"))?;
    ensure((without - 0.4375).abs() <= 0.01, || format!("without-sharing rate {without}"))?;
    ensure(elapsed.as_secs_f64() < 60.0, || format!("took {elapsed:?}"))?;
    Ok(format!("with {with:.4} (0.0625), without {without:.4} (0.4375) in {:.2}s", elapsed.as_secs_f64()))
}

fn ac7() -> Check {
    let zero = packet::pack_data_fields(0, 0, &[0; 10]);
    let mut expect_zero = vec![0x80u8];
    expect_zero.extend([0u8; 15]);
    ensure(zero.to_vec() == expect_zero, || format!("all-zero-fields: {zero:02x?}"))?;
    let ones = packet::encode_data(&DataPacket::new(255, u32::MAX, &[0xff; 10]).map_err(|e| e.to_string())?);
    let expect_ones = common::bits_to_bytes(&format!("{}{}", "1".repeat(121), "0".repeat(7)));
    ensure(ones.to_vec() == expect_ones, || format!("all-ones: {ones:02x?}"))?;
    let golden = |name: &str| {
        let path = format!("{}/tests/golden/{name}.hex", env!("CARGO_MANIFEST_DIR"));
        std::fs::read_to_string(&path).map(|t| common::parse_hex(&t)).map_err(|e| format!("{path}: {e}"))
    };
    ensure(golden("data_all_zero_fields")? == zero.to_vec(), || "data_all_zero_fields.hex differs".into())?;
    ensure(golden("data_all_ones")? == ones.to_vec(), || "data_all_ones.hex differs".into())?;
    let one = packet::encode_data(&DataPacket::new(1, 0, &[0; 10]).map_err(|e| e.to_string())?);
    ensure(golden("data_countdown_one")? == one.to_vec(), || "data_countdown_one.hex differs".into())?;
    let s0 = packet::encode_sync(&SyncPacket { node_id: 0, clock_count: 0 });
    ensure(golden("sync_zero")? == s0.to_vec(), || "sync_zero.hex differs".into())?;
    let s1 = packet::encode_sync(&SyncPacket { node_id: 1, clock_count: 1 });
    ensure(golden("sync_one_one")? == s1.to_vec(), || "sync_one_one.hex differs".into())?;

    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0007);
    for _ in 0..10_000 {
        let p = DataPacket::new(rng.gen_range(1..=255), rng.gen(), &rng.gen::<[u8; 10]>()).map_err(|e| e.to_string())?;
        let raw = packet::encode_data(&p);
        ensure(packet::decode_data(&raw) == Ok(p), || format!("data round trip {p:?}"))?;
        let s = SyncPacket { node_id: rng.gen(), clock_count: rng.gen() };
        ensure(packet::decode_sync(&packet::encode_sync(&s)) == Ok(s), || format!("sync round trip {s:?}"))?;
    }
    Ok("golden layouts match; 10^4 data + 10^4 sync round trips".into())
}

fn ac8() -> Check {
    let mut s = LfsrState::new(1).map_err(|e| e.to_string())?;
    let mut period = 0u32;
    loop {
        period += 1;
        if s.step() == 1 || period > LFSR_PERIOD {
            break;
        }
    }
    ensure(period == LFSR_PERIOD, || format!("period {period}"))?;

    let mut reference = common::ReferenceLfsr::new(1);
    let mut lfsr = LfsrState::new(1).map_err(|e| e.to_string())?;
    for i in 0..100 {
        let (a, b) = (lfsr.step(), reference.next());
        ensure(a == b, || format!("output {i}: {a} vs reference {b}"))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0008);
    for _ in 0..1000 {
        let seed = rng.gen_range(1..=LFSR_PERIOD);
        let n = rng.gen_range(5..=10);
        let mut tx = NodeState::new(NodeConfig::new(1, seed, 1, n, 1)).map_err(|e| e.to_string())?;
        let mut rx = NodeState::new(NodeConfig::new(2, seed, 2, n, 1)).map_err(|e| e.to_string())?;
        let plan = tx.master_prepare(b"x").map_err(|e| e.to_string())?;
        rx.receiver_open().map_err(|e| e.to_string())?;
        ensure(rx.reading_pipes() == plan.schedule.channels(), || format!("seed {seed} schedules differ"))?;
    }
    Ok(format!("period {LFSR_PERIOD}; 100 outputs match reference; 1000 seeds replay"))
}

fn ac9() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0009);
    for round in 0..500 {
        let count = rng.gen_range(3..=50);
        let t_max = 1_000u64;
        let clocks: Vec<u64> = (0..count).map(|_| t_max + rng.gen_range(0..50)).collect();
        let mut nodes = clocks
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let mut cfg = NodeConfig::new(100 + i as u32, 1, 1, 5, 1);
                cfg.t_max = t_max;
                NodeState::new(cfg).map(|mut n| {
                    n.local_clock = c;
                    n
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let mut medium = MediumState::lossless(16).map_err(|e| e.to_string())?;
        let out = node::sync_round(&mut nodes, &mut medium, 0).map_err(|e| e.to_string())?;
        let max = *clocks.iter().max().unwrap();
        let first_max = clocks.iter().position(|&c| c == max).unwrap();
        for (i, o) in out.iter().enumerate() {
            ensure(nodes[i].local_clock == max && o.adopted_clock == max, || format!("round {round} node {i}"))?;
            let expected = if clocks[i] == max { 100 + i as u32 } else { 100 + first_max as u32 };
            ensure(o.source_device == expected, || {
                format!("round {round} node {i}: source {} expected {expected}", o.source_device)
            })?;
        }
    }
    Ok("500 rounds over 3..50 nodes converge to the max with correct sources".into())
}

fn ac10() -> Check {
    // often misquoted as "URYB", which drops a letter
    ensure(rot13("HELLO") == "URYYB", || format!("HELLO -> {}", rot13("HELLO")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0010);
    for _ in 0..10_000 {
        let len = rng.gen_range(0..64);
        let s: String = (0..len).map(|_| rng.gen::<char>()).collect();
        ensure(rot13(&rot13(&s)) == s, || format!("involution fails on {s:?}"))?;
        let ascii: String = (0..len).map(|_| rng.gen_range(0x20u8..0x7f) as char).collect();
        ensure(rot13(&rot13(&ascii)) == ascii, || format!("involution fails on {ascii:?}"))?;
        let bytes: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        let d = to_hex_digest(&bytes);
        ensure(decode_hex(d.as_str()).as_deref() == Ok(&bytes[..]), || format!("hex round trip {bytes:?}"))?;
    }
    Ok("HELLO -> URYYB; 10^4 involution and hex round trips".into())
}

fn main() -> ExitCode {
    let cases = round_trip_cases();
    let criteria: Vec<(&str, Box<dyn Fn() -> Check + '_>)> = vec![
        ("AC1 end-to-end round trip", Box::new(|| ac1(&cases))),
        ("AC2 threshold property", Box::new(|| ac2(&cases))),
        ("AC3 single-share secrecy", Box::new(ac3)),
        ("AC4 closed-form capture probabilities", Box::new(ac4)),
        ("AC5 subset-count inequality", Box::new(ac5)),
        ("AC6 Monte Carlo vs analytic", Box::new(ac6)),
        ("AC7 packet golden layouts", Box::new(ac7)),
        ("AC8 LFSR period and replay", Box::new(ac8)),
        ("AC9 sync round", Box::new(ac9)),
        ("AC10 ROT13 and hex", Box::new(ac10)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
