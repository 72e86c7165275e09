//! End-to-end acceptance checks, one line per criterion.
//!
//! Runs as a plain binary so every verdict is printed whether it passes or
//! not; the process exits non-zero if any criterion fails.

use std::collections::{BTreeSet, HashMap};
use std::time::{Duration, Instant};

use blockdna::analyze::capacity_density;
use blockdna::codec::{hamming, longest_homopolymer, SplitMix64};
use blockdna::ecc::{rs_decode_unit, rs_encode_unit, COLUMN_BYTES, N, UNIT_BYTES};
use blockdna::index_tree::{build_tree, TreeConfig, SYNC_BASE};
use blockdna::partition::payload_column;
use blockdna::pipeline::{
    decode_block, decode_partition, decode_with_candidates, read_cost_ratio, reduction_from_ratios,
    synthesis_cost_ratio, unwanted_ratio, DecodeConfig, Reference, RetrievalMetrics,
};
use blockdna::scenario::{reference_partition, reference_patch, reference_primers, sample_text, Partition, TARGET_BLOCK, TEXT_LEN};
use blockdna::updates::{apply_patch, deserialize_patch, resolve_chain, serialize_patch, UpdatePatch, VersionChain, MAX_INSERT};
use blockdna::wetlab::{
    mix_amplify_then_measure, mix_measure_then_amplify, pcr, read_sequences, sequence, two_stage_pcr, ChannelModel,
    MeasurementModel, PcrParams, Pool, Provenance, Read, TWO_STAGE_CYCLES,
};
use blockdna::{Base, DnaString};
use num_bigint::BigUint;

const ROUNDTRIP_BUDGET: Duration = Duration::from_secs(60);
const PRECISE_BUDGET: Duration = Duration::from_secs(120);
const BASELINE_ON_TARGET: f64 = 0.0034;
const BASELINE_BAND: f64 = 0.0005;
const BASELINE_READS: usize = 200_000;
const W_PRECISE: f64 = 1.08;
const W_PRECISE_BAND: f64 = 0.5;
const ON_TARGET: f64 = 0.48;
const ON_TARGET_BAND: f64 = 0.10;
const READOUT_READS: usize = 50_000;
const SUBSAMPLE_READS: usize = 225;
const SUBSAMPLE_SEED: u64 = 225;
const MAX_CANDIDATES: usize = 5;
const SPARSITY_RATIO: f64 = 1.9;
const MIX_MISMATCH: f64 = 50_000.0;
const MIX_EPSILON: f64 = 0.1;
const MIX_BOUNDS: (f64, f64) = (0.5, 2.0);
const TRIALS: usize = 100;
const PASS_RATE: f64 = 0.95;

const TREE_SEED: u64 = 0x1D7E_5EED;
const RAND_SEED: u64 = 0x5C4A_3B1E;

struct Verdict {
    ok: bool,
    notes: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Verdict { ok: true, notes: Vec::new() }
    }

    fn check(&mut self, passed: bool, what: impl Into<String>) {
        let what = what.into();
        if !passed {
            self.ok = false;
            self.notes.push(format!("FAILED {what}"));
        } else {
            self.notes.push(what);
        }
    }
}

/// The two-stage readout shared by the cost and precise-access criteria.
struct Precise {
    pool: Pool,
    elongated: DnaString,
    metrics: RetrievalMetrics,
    elapsed: Duration,
}

fn precise_readout(p: &Partition, reference: &Reference) -> Precise {
    let t = Instant::now();
    let el = p.elongated_primer(TARGET_BLOCK).unwrap();
    let params = PcrParams::default();
    let (c1, c2) = TWO_STAGE_CYCLES;
    let pool =
        two_stage_pcr(&p.pool(1.0), &p.manifest.primers, &el, &params.with_cycles(c1), &params.with_cycles(c2)).unwrap();
    let reads = read_sequences(&sequence(&pool, READOUT_READS, &ChannelModel::default()).unwrap());
    let metrics = RetrievalMetrics::compute(&reads, &p.manifest, &p.tree, TARGET_BLOCK, Some(reference), 2);
    Precise { pool, elongated: el, metrics, elapsed: t.elapsed() }
}

fn roundtrip() -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    let data = sample_text(TEXT_LEN, 13);
    let p = Partition::encode(data.clone(), reference_primers(), TREE_SEED, RAND_SEED).unwrap();
    // three noiseless copies of every strand, shuffled
    let mut reads: Vec<DnaString> = p.dna().into_iter().flat_map(|s| [s.clone(), s.clone(), s]).collect();
    SplitMix64::new(3).shuffle(&mut reads);
    let d = decode_partition(&reads, &p.manifest, &p.tree, &DecodeConfig::default());
    let decoded = d.file_bytes();
    let errors = match &decoded {
        Ok(bytes) if bytes.len() == data.len() => bytes.iter().zip(&data).filter(|(a, b)| a != b).count(),
        Ok(bytes) => bytes.len().abs_diff(data.len()).max(1),
        Err(_) => usize::MAX,
    };
    v.check(p.manifest.block_count == 587, format!("{} blocks", p.manifest.block_count));
    v.check(errors == 0, format!("{} byte errors over {} bytes", if errors == usize::MAX { "all".into() } else { errors.to_string() }, data.len()));
    let elapsed = t.elapsed();
    v.check(elapsed < ROUNDTRIP_BUDGET, format!("{:.1} s", elapsed.as_secs_f64()));
    v
}

fn strand_accounting(p: &Partition) -> Verdict {
    let mut v = Verdict::new();
    let fresh = Partition::encode(sample_text(TEXT_LEN, 13), reference_primers(), TREE_SEED, RAND_SEED).unwrap();
    v.check(fresh.strands.len() == 8805, format!("{} strands before updates", fresh.strands.len()));
    let added = p.strands.len() - fresh.strands.len();
    v.check(added == 45, format!("3 patches add {added}"));
    v.check(p.manifest.total_strands() == p.strands.len(), format!("manifest counts {}", p.manifest.total_strands()));
    let unique: BTreeSet<DnaString> = p.dna().into_iter().collect();
    v.check(unique.len() == p.strands.len(), format!("{} distinct sequences", unique.len()));
    v
}

fn capacity() -> Verdict {
    let mut v = Verdict::new();
    let full = capacity_density(110, 150, 20).unwrap();
    let expect = BigUint::from(1u8) << 217usize;
    v.check(full.capacity_bytes_exact() == Some(expect), "L=110 holds 2^217 bytes");
    v.check(full.density() == 1.0 / 150.0, format!("density {:.6} bits/base", full.density()));
    // oracle: 4^L addresses, 2 bits per remaining body base
    for l in [0usize, 10] {
        let p = capacity_density(l, 150, 20).unwrap();
        let bits = 4u128.pow(l as u32) * 2 * (110 - l as u128);
        v.check(p.capacity_bits == BigUint::from(bits), format!("L={l}: {} bits", p.capacity_bits));
        let density = (2 * (110 - l)) as f64 / 150.0;
        v.check((p.density() - density).abs() < 1e-12, format!("L={l}: {:.4} bits/base", p.density()));
    }
    v
}

fn cost_arithmetic(p: &Partition, reference: &Reference, precise: &Precise) -> Verdict {
    let mut v = Verdict::new();
    let w_b = unwanted_ratio(BASELINE_ON_TARGET);
    v.check(w_b.round() == 293.0, format!("w_b {w_b:.2}"));
    let r = reduction_from_ratios(w_b.round(), W_PRECISE);
    v.check(r.round() == 141.0, format!("reduction {r:.2}"));
    let s = synthesis_cost_ratio(8805, 15);
    v.check(s == 587.0, format!("synthesis ratio {s}"));
    let rc = read_cost_ratio(0.5, 8805, 30);
    v.check(rc.floor() == 146.0, format!("read ratio {rc:.2}"));

    let amplified = pcr(&p.pool(1.0), &p.manifest.primers.forward, &p.manifest.primers.reverse, &PcrParams::default()).unwrap();
    let reads = read_sequences(&sequence(&amplified, BASELINE_READS, &ChannelModel { seed: 7, ..ChannelModel::default() }).unwrap());
    let base = RetrievalMetrics::compute(&reads, &p.manifest, &p.tree, TARGET_BLOCK, Some(reference), 2);
    let f = base.on_target_fraction();
    v.check((f - BASELINE_ON_TARGET).abs() <= BASELINE_BAND, format!("baseline on-target {:.3}%", 100.0 * f));
    let w_p = precise.metrics.unwanted_ratio();
    v.check((w_p - W_PRECISE).abs() <= W_PRECISE_BAND, format!("simulated w_p {w_p:.3}"));
    v.notes.push(format!(
        "simulated reduction {:.1}",
        reduction_from_ratios(base.unwanted_ratio(), w_p)
    ));
    v
}

fn precise_access(p: &Partition, precise: &Precise) -> Verdict {
    let mut v = Verdict::new();
    let m = &precise.metrics;
    v.check(m.modal_block() == Some(TARGET_BLOCK), format!("modal block {:?}", m.modal_block()));
    let f = m.on_target_fraction();
    v.check((f - ON_TARGET).abs() <= ON_TARGET_BAND, format!("on-target {:.1}%", 100.0 * f));
    v.notes.push(format!("misprimed {:.1}%, background {:.1}%", 100.0 * m.misprime_fraction(), 100.0 * m.background_fraction()));

    let t = Instant::now();
    let cfg = DecodeConfig::default();
    let sub = |seed| read_sequences(&sequence(&precise.pool, SUBSAMPLE_READS, &ChannelModel { seed, ..ChannelModel::default() }).unwrap());
    let want = (p.block(TARGET_BLOCK).to_vec(), p.resolved(TARGET_BLOCK).unwrap());
    let exact = |reads: &[DnaString]| {
        decode_with_candidates(reads, &p.manifest, &p.tree, TARGET_BLOCK, MAX_CANDIDATES, &cfg)
            .is_ok_and(|d| (d.block.original.clone(), d.block.resolved.clone()) == want && d.block.patches == [reference_patch()])
    };
    v.check(exact(&sub(SUBSAMPLE_SEED)), format!("{SUBSAMPLE_READS}-read subsample decodes both versions"));
    let seeds = 1..=20u64;
    let (mut plain, mut cands) = (0, 0);
    for s in seeds.clone() {
        let reads = sub(SUBSAMPLE_SEED + s);
        plain += decode_block(&reads, &p.manifest, &p.tree, TARGET_BLOCK, &cfg).is_ok_and(|d| d.resolved == want.1) as usize;
        cands += exact(&reads) as usize;
    }
    v.notes.push(format!("over {} more subsamples: largest-cluster {plain}, candidates {cands}", seeds.count()));
    let elapsed = precise.elapsed + t.elapsed();
    v.check(elapsed < PRECISE_BUDGET, format!("{:.1} s", elapsed.as_secs_f64()));
    v
}

fn index_tree() -> Verdict {
    let mut v = Verdict::new();
    let mut worst_ratio = f64::INFINITY;
    let (mut sibling_bad, mut run_bad, mut gc_bad, mut min_dist) = (0, 0, 0, usize::MAX);
    for seed in 0..10u64 {
        let tree = build_tree(TreeConfig { depth: 5, seed }).unwrap();
        for node in tree.nodes() {
            for i in 0..4 {
                for j in i + 1..4 {
                    sibling_bad += (hamming(&node.grams[i], &node.grams[j]) != 2) as usize;
                }
            }
        }
        let leaves = tree.all_leaf_indexes();
        assert_eq!(leaves.len(), 1024);
        for idx in &leaves {
            let mut with_sync = vec![SYNC_BASE];
            with_sync.extend_from_slice(idx);
            run_bad += (longest_homopolymer(&with_sync) > 2) as usize;
            for end in (2..=idx.len()).step_by(2) {
                gc_bad += (2 * idx[..end].iter().filter(|b| matches!(b, Base::C | Base::G)).count() != end) as usize;
            }
        }
        let mut sum = 0u64;
        for (i, a) in leaves.iter().enumerate() {
            for b in &leaves[i + 1..] {
                let d = hamming(a, b);
                min_dist = min_dist.min(d);
                sum += d as u64;
            }
        }
        let pairs = (1024 * 1023 / 2) as f64;
        // dense 5-base addresses over all 4^5 words: 3/4 mismatch per position
        let dense_mean = 5.0 * 0.75 * 1024.0 / 1023.0;
        worst_ratio = worst_ratio.min(sum as f64 / pairs / dense_mean);
    }
    v.check(sibling_bad == 0, format!("{sibling_bad} sibling pairs off distance 2"));
    v.check(run_bad == 0, format!("{run_bad} indexes with runs over 2"));
    v.check(gc_bad == 0, format!("{gc_bad} unbalanced even prefixes"));
    v.check(min_dist >= 2, format!("min leaf distance {min_dist}"));
    v.check(worst_ratio >= SPARSITY_RATIO, format!("worst sparse/dense ratio {worst_ratio:.3}"));
    v
}

fn random_unit(rng: &mut SplitMix64) -> Vec<u8> {
    (0..UNIT_BYTES).map(|_| rng.next_u64() as u8).collect()
}

/// Overwrite `col` so that every one of its 48 symbols changes.
fn corrupt(col: &mut [u8; COLUMN_BYTES], rng: &mut SplitMix64) {
    for b in col.iter_mut() {
        let hi = 1 + rng.below(15) as u8;
        let lo = 1 + rng.below(15) as u8;
        *b ^= (hi << 4) | lo;
    }
}

fn ecc_bounds() -> Verdict {
    let mut v = Verdict::new();
    let mut rng = SplitMix64::new(0xECC);
    let data = random_unit(&mut rng);
    let unit = rs_encode_unit(&data).unwrap();
    let all: Vec<(usize, [u8; COLUMN_BYTES])> = unit.columns.iter().copied().enumerate().collect();
    let (mut patterns, mut ok) = (0, 0);
    for a in 0..N {
        for b in a + 1..N {
            for c in b + 1..N {
                for d in c + 1..N {
                    let erased: BTreeSet<usize> = [a, b, c, d].into();
                    let present: Vec<_> = all.iter().copied().filter(|(i, _)| !erased.contains(i)).collect();
                    patterns += 1;
                    ok += (rs_decode_unit(&present, &BTreeSet::new()).ok().as_deref() == Some(&data[..])) as usize;
                }
            }
        }
    }
    v.check(patterns == 1365 && ok == patterns, format!("{ok}/{patterns} erasure patterns"));

    let (mut twos, mut twos_ok) = (0, 0);
    for _ in 0..20 {
        let data = random_unit(&mut rng);
        let unit = rs_encode_unit(&data).unwrap();
        for a in 0..N {
            for b in a + 1..N {
                let mut cols = unit.columns.clone();
                corrupt(&mut cols[a], &mut rng);
                corrupt(&mut cols[b], &mut rng);
                let present: Vec<_> = cols.into_iter().enumerate().collect();
                twos += 1;
                twos_ok += (rs_decode_unit(&present, &BTreeSet::new()).ok().as_deref() == Some(&data[..])) as usize;
            }
        }
    }
    v.check(twos_ok == twos, format!("{twos_ok}/{twos} two-column corruptions"));

    let (mut threes, mut reported) = (0, 0);
    for a in 0..N {
        for b in a + 1..N {
            for c in b + 1..N {
                let mut cols = unit.columns.clone();
                for i in [a, b, c] {
                    corrupt(&mut cols[i], &mut rng);
                }
                let present: Vec<_> = cols.into_iter().enumerate().collect();
                threes += 1;
                reported += rs_decode_unit(&present, &BTreeSet::new()).is_err() as usize;
            }
        }
    }
    v.check(reported == threes, format!("{reported}/{threes} three-column corruptions reported"));
    v
}

fn update_semantics() -> Verdict {
    let mut v = Verdict::new();
    let howdy = UpdatePatch::new(1, 4, 1, *b"OWDY");
    let out = apply_patch(b"HELLOWORLD", &howdy).unwrap();
    v.check(out == b"HOWDYWORLD", format!("HELLOWORLD -> {}", String::from_utf8_lossy(&out)));

    let original = b"The quick brown fox jumps over the lazy dog".to_vec();
    let patches = vec![
        UpdatePatch::new(4, 6, 4, *b"slow "),
        UpdatePatch::new(0, 0, 38, *b" sleepy"),
        UpdatePatch::new(19, 5, 19, *b"ambles"),
    ];
    // by hand
    let mut manual = String::from_utf8(original.clone()).unwrap();
    manual.replace_range(4..10, "");
    manual.insert_str(4, "slow ");
    manual.insert_str(38, " sleepy");
    manual.replace_range(19..24, "");
    manual.insert_str(19, "ambles");
    let chained = resolve_chain(&VersionChain { original, patches }).unwrap();
    v.check(chained == manual.as_bytes(), format!("chain gives {:?}", String::from_utf8_lossy(&chained)));

    let mut rng = SplitMix64::new(0x9A7C);
    let mut round = 0;
    for _ in 0..1000 {
        let ins_len = rng.below(MAX_INSERT as u64 + 1) as usize;
        let p = UpdatePatch::new(
            rng.below(256) as u8,
            rng.below(256) as u8,
            rng.below(256) as u8,
            (0..ins_len).map(|_| rng.next_u64() as u8).collect::<Vec<u8>>(),
        );
        round += (deserialize_patch(&serialize_patch(&p).unwrap()).unwrap() == p) as usize;
    }
    v.check(round == 1000, format!("{round}/1000 serialize round trips"));
    v
}

fn mixing(p: &Partition) -> Verdict {
    let mut v = Verdict::new();
    let originals: Vec<DnaString> = p.strands.iter().filter(|s| s.version == 0).map(|s| s.to_dna()).collect();
    let updates: Vec<DnaString> = p.strands.iter().filter(|s| s.version > 0).map(|s| s.to_dna()).collect();
    assert_eq!(updates.len(), 45);
    let data = Pool::uniform(originals.iter().cloned(), 1.0);
    let update = Pool::uniform(updates.iter().cloned(), MIX_MISMATCH);
    let mean = |pool: &Pool, set: &[DnaString]| set.iter().map(|s| pool.get(s).unwrap().abundance).sum::<f64>() / set.len() as f64;
    let params = PcrParams::default();
    for name in ["measure-then-amplify", "amplify-then-measure"] {
        let mut inside = 0;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for trial in 0..TRIALS {
            let model = MeasurementModel { relative_error: MIX_EPSILON, seed: trial as u64 };
            let report = if name == "measure-then-amplify" {
                mix_measure_then_amplify(&data, &update, &p.manifest.primers, &model, &params)
            } else {
                mix_amplify_then_measure(&data, &update, &p.manifest.primers, &model, &params)
            }
            .unwrap();
            let ratio = mean(&report.pool, &updates) / mean(&report.pool, &originals);
            lo = lo.min(ratio);
            hi = hi.max(ratio);
            inside += (MIX_BOUNDS.0..=MIX_BOUNDS.1).contains(&ratio) as usize;
        }
        v.check(
            inside as f64 >= PASS_RATE * TRIALS as f64,
            format!("{name}: {inside}/{TRIALS} within bounds, ratios {lo:.3}..{hi:.3}"),
        );
    }
    v
}

fn misprime_structure(p: &Partition, precise: &Precise) -> Verdict {
    let mut v = Verdict::new();
    let el = &precise.elongated;
    let dna = p.dna();
    // everything after the elongated primer identifies the source strand
    let sources: HashMap<&[Base], usize> = dna.iter().enumerate().map(|(i, d)| (&d[el.len()..], i)).collect();
    let reads: Vec<Read> = sequence(&precise.pool, READOUT_READS, &ChannelModel::noiseless(11)).unwrap();
    let (mut misprimed, mut bad) = (0, 0);
    for r in &reads {
        let (seq, entry) = precise.pool.entry_at(r.origin).unwrap();
        if entry.provenance != Provenance::Misprimed {
            continue;
        }
        misprimed += 1;
        let prefix_ok = r.seq.starts_with(el) && r.seq == *seq;
        let tail = &r.seq[el.len()..];
        let payload = &tail[3..tail.len() - p.manifest.primers.reverse.len()];
        let source_ok = sources.get(tail).is_some_and(|&i| {
            let src = &p.strands[i];
            src.block_no != TARGET_BLOCK && payload_column(payload).unwrap() == payload_column(&src.payload).unwrap()
        });
        bad += !(prefix_ok && source_ok) as usize;
    }
    v.check(misprimed > 0 && bad == 0, format!("{misprimed} misprimed reads, {bad} without target prefix and foreign payload"));

    let cfg = DecodeConfig::default();
    let mut rng = SplitMix64::new(0x91A7);
    let (mut recovered, mut plain) = (0, 0);
    for trial in 0..TRIALS {
        let block = rng.below(p.manifest.block_count as u64) as usize;
        let mut donor = rng.below(p.manifest.block_count as u64 - 1) as usize;
        donor += (donor >= block) as usize;
        let conflicts = 1 + rng.below(3) as usize;
        let mut cols: Vec<u8> = (0..N as u8).collect();
        rng.shuffle(&mut cols);
        let target: Vec<_> = p.strands.iter().filter(|s| s.block_no == block).cloned().collect();
        let mut pool = Pool::uniform(target.iter().map(|s| s.to_dna()), 1.0);
        let prefix = p.elongated_primer(block).unwrap();
        for &c in &cols[..conflicts] {
            let src = p.strands.iter().find(|s| s.block_no == donor && s.version == 0 && s.column == c).unwrap().to_dna();
            let mut planted = prefix.clone();
            planted.extend_from_slice(&src[prefix.len()..]);
            pool.add(planted, 2.0, Provenance::Misprimed);
        }
        let n = 4 * target.len() + 8 * conflicts;
        let reads = read_sequences(&sequence(&pool, n, &ChannelModel { seed: trial as u64, ..ChannelModel::default() }).unwrap());
        let want = p.resolved(block).unwrap();
        recovered += decode_with_candidates(&reads, &p.manifest, &p.tree, block, MAX_CANDIDATES, &cfg)
            .is_ok_and(|d| d.block.resolved == want) as usize;
        plain += decode_block(&reads, &p.manifest, &p.tree, block, &cfg).is_ok_and(|d| d.resolved == want) as usize;
    }
    v.check(
        recovered as f64 >= PASS_RATE * TRIALS as f64,
        format!("planted conflicts recovered {recovered}/{TRIALS} (largest-cluster alone {plain})"),
    );
    v
}

fn main() {
    let started = Instant::now();
    let p = reference_partition().unwrap();
    let reference = Reference::from_strands(&p.strands, &p.manifest);
    let precise = precise_readout(&p, &reference);

    let results: Vec<(&str, Verdict)> = vec![
        ("roundtrip identity", roundtrip()),
        ("strand accounting", strand_accounting(&p)),
        ("capacity endpoints", capacity()),
        ("cost arithmetic", cost_arithmetic(&p, &reference, &precise)),
        ("precise access", precise_access(&p, &precise)),
        ("index tree invariants", index_tree()),
        ("ECC bounds", ecc_bounds()),
        ("update semantics", update_semantics()),
        ("mixing", mixing(&p)),
        ("misprime structure", misprime_structure(&p, &precise)),
    ];
    let mut failed = 0;
    for (i, (name, v)) in results.iter().enumerate() {
        println!("criterion {:>2} {:<22} {}  {}", i + 1, name, if v.ok { "PASS" } else { "FAIL" }, v.notes.join("; "));
        failed += !v.ok as usize;
    }
    println!("{} of {} criteria passed in {:.1} s", results.len() - failed, results.len(), started.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
