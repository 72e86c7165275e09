use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use blockdna::analyze::{capacity_csv, capacity_table};
use blockdna::index_tree::{elongate_primer, prefix_cover, IndexTree, SYNC_BASE};
use blockdna::partition::{build_strands, PartitionManifest, PrimerPair, StrandRecord};
use blockdna::pipeline::{address_histogram, decode_block, decode_partition, decode_with_candidates, BlockDecode, DecodeConfig};
use blockdna::scenario::{reference_primers, Partition};
use blockdna::updates::{load_patch_file, resolve_chain, serialize_patch, UpdatePatch, VersionChain};
use blockdna::wetlab::{
    mix_amplify_then_measure, mix_measure_then_amplify, multiplex_pcr, parse_reads, pcr, read_sequences, reads_to_fastq,
    sequence, two_stage_pcr, ChannelModel, MeasurementModel, MixReport, PcrParams, Pool, TWO_STAGE_CYCLES,
};
use blockdna::DnaString;

use crate::experiment;

/// Environment variable that relocates relative output paths.
pub const OUT_DIR_ENV: &str = "BLOCKDNA_OUT";

#[derive(Debug, Parser)]
#[command(name = "blockdna", version, about = "Block-addressable DNA storage, simulated end to end")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encode a file into a partition: writes manifest.toml and pool.tsv.
    Encode(EncodeArgs),
    /// Build the strands of new block versions from a patch file.
    Patch(PatchArgs),
    /// Amplify a pool with one primer pair.
    Pcr(PcrArgs),
    /// Amplify a pool with elongated primers for several blocks at once.
    Multiplex(MultiplexArgs),
    /// Main primers first, then the elongated primer of one block.
    TwoStage(TwoStageArgs),
    /// Sample reads from a pool through a noisy channel.
    Sequence(SequenceArgs),
    /// Mix an update pool into a data pool at equal per-oligo concentration.
    Mix(MixArgs),
    /// Decode one block, or the whole partition, from reads.
    Decode(DecodeArgs),
    /// Reads per (block, version) address as CSV.
    Stats(StatsArgs),
    /// Capacity and density of one partition for every index length, as CSV.
    Analyze(AnalyzeArgs),
    /// Run a whole experiment described by a TOML document.
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// File to store.
    pub input: PathBuf,
    /// Directory for manifest.toml and pool.tsv.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, requires = "reverse")]
    pub forward: Option<String>,
    #[arg(long, requires = "forward")]
    pub reverse: Option<String>,
    #[arg(long, value_parser = parse_seed, default_value = "0x1D7E5EED")]
    pub tree_seed: u64,
    #[arg(long, value_parser = parse_seed, default_value = "0x5C4A3B1E")]
    pub randomizer_seed: u64,
    /// Copies per strand after synthesis.
    #[arg(long, default_value_t = 1.0)]
    pub abundance: f64,
    /// Log-normal spread of synthesis yields; 0 gives a uniform pool.
    #[arg(long, default_value_t = 0.0)]
    pub bias: f64,
    #[arg(long, value_parser = parse_seed, default_value = "0")]
    pub synthesis_seed: u64,
}

#[derive(Debug, Args)]
pub struct PatchArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// TOML file of `[[patch]]` entries, applied in order.
    #[arg(long)]
    pub patches: PathBuf,
    /// The encoded file; when given, every patch is checked against it. A
    /// block that already has versions is checked against its original
    /// contents with only the new patches applied.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Update pool to write.
    #[arg(long, default_value = "update_pool.tsv")]
    pub out: PathBuf,
    /// Where the updated manifest goes; defaults to rewriting --manifest.
    #[arg(long)]
    pub manifest_out: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub abundance: f64,
    #[arg(long, default_value_t = 0.0)]
    pub bias: f64,
    #[arg(long, value_parser = parse_seed, default_value = "0")]
    pub synthesis_seed: u64,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct PcrOptions {
    #[arg(long)]
    pub efficiency: Option<f64>,
    /// Per-edit factor on the mispriming rate.
    #[arg(long)]
    pub misprime_decay: Option<f64>,
    /// Largest primer edit distance that still primes.
    #[arg(long)]
    pub max_edit_distance: Option<usize>,
}

impl PcrOptions {
    fn params(&self, cycles: u32) -> Result<PcrParams> {
        let d = PcrParams::default();
        let p = PcrParams {
            cycles,
            efficiency: self.efficiency.unwrap_or(d.efficiency),
            misprime_decay: self.misprime_decay.unwrap_or(d.misprime_decay),
            max_edit_distance: self.max_edit_distance.unwrap_or(d.max_edit_distance),
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Args)]
pub struct PcrArgs {
    #[arg(long)]
    pub pool: PathBuf,
    /// Use the partition's main primers.
    #[arg(long, required_unless_present = "forward")]
    pub manifest: Option<PathBuf>,
    #[arg(long, requires = "reverse", conflicts_with = "manifest")]
    pub forward: Option<String>,
    #[arg(long, requires = "forward")]
    pub reverse: Option<String>,
    #[arg(long, default_value_t = PcrParams::default().cycles)]
    pub cycles: u32,
    #[command(flatten)]
    pub pcr: PcrOptions,
    #[arg(long, default_value = "pcr_pool.tsv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MultiplexArgs {
    #[arg(long)]
    pub pool: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Blocks to retrieve, each with its fully elongated primer.
    #[arg(long, value_delimiter = ',')]
    pub block: Vec<usize>,
    /// Inclusive block range `FIRST-LAST`, covered by the fewest shared
    /// prefixes of the index tree.
    #[arg(long, value_parser = parse_range)]
    pub range: Option<(usize, usize)>,
    #[arg(long, default_value_t = PcrParams::default().cycles)]
    pub cycles: u32,
    #[command(flatten)]
    pub pcr: PcrOptions,
    #[arg(long, default_value = "multiplex_pool.tsv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TwoStageArgs {
    #[arg(long)]
    pub pool: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub block: usize,
    /// Tree levels in the elongated primer; defaults to the full index.
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long, default_value_t = TWO_STAGE_CYCLES.0)]
    pub stage1_cycles: u32,
    #[arg(long, default_value_t = TWO_STAGE_CYCLES.1)]
    pub stage2_cycles: u32,
    #[command(flatten)]
    pub pcr: PcrOptions,
    #[arg(long, default_value = "two_stage_pool.tsv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SequenceArgs {
    #[arg(long)]
    pub pool: PathBuf,
    #[arg(long)]
    pub reads: usize,
    #[arg(long, value_parser = parse_seed, default_value = "0")]
    pub seed: u64,
    #[arg(long)]
    pub p_sub: Option<f64>,
    #[arg(long)]
    pub p_ins: Option<f64>,
    #[arg(long)]
    pub p_del: Option<f64>,
    /// Share of reads reported as the reverse complement.
    #[arg(long)]
    pub p_reverse: Option<f64>,
    /// Reads file; `.fastq` selects FASTQ output.
    #[arg(long, default_value = "reads.txt")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MixProtocol {
    /// Dilute the update pool by measured concentration, then amplify.
    MeasureThenAmplify,
    /// Amplify both pools apart, then mix by measured concentration.
    AmplifyThenMeasure,
}

#[derive(Debug, Args)]
pub struct MixArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub update: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum, default_value_t = MixProtocol::MeasureThenAmplify)]
    pub protocol: MixProtocol,
    /// Uniform relative error of each concentration measurement.
    #[arg(long, default_value_t = MeasurementModel::default().relative_error)]
    pub relative_error: f64,
    #[arg(long, value_parser = parse_seed, default_value = "0")]
    pub seed: u64,
    #[arg(long, default_value_t = PcrParams::default().cycles)]
    pub cycles: u32,
    #[command(flatten)]
    pub pcr: PcrOptions,
    #[arg(long, default_value = "mixed_pool.tsv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    /// Trust the largest cluster at every address.
    LargestCluster,
    /// Try alternative reconstructions per address until one checks out.
    Candidates,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long)]
    pub reads: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Block to decode; without it the whole partition is decoded.
    #[arg(long)]
    pub block: Option<usize>,
    #[arg(long, value_enum, default_value_t = Strategy::Candidates)]
    pub strategy: Strategy,
    #[arg(long, default_value_t = 5)]
    pub max_candidates: usize,
    #[arg(long, default_value = "decoded")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub reads: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long, default_value_t = 150)]
    pub strand_len: usize,
    #[arg(long, default_value_t = 20)]
    pub primer_len: usize,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment document.
    #[arg(long)]
    pub config: PathBuf,
}

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Encode(a) => encode(a),
        Command::Patch(a) => patch(a),
        Command::Pcr(a) => run_pcr(a),
        Command::Multiplex(a) => multiplex(a),
        Command::TwoStage(a) => two_stage(a),
        Command::Sequence(a) => run_sequence(a),
        Command::Mix(a) => mix(a),
        Command::Decode(a) => decode(a),
        Command::Stats(a) => stats(a),
        Command::Analyze(a) => analyze(a),
        Command::Run(a) => experiment::run(&a.config),
    }
}

/// Decimal or `0x`-prefixed hex.
pub fn parse_seed(s: &str) -> Result<u64, String> {
    let s = s.trim().replace('_', "");
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    }
    .map_err(|e| format!("bad seed {s:?}: {e}"))
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once('-').ok_or_else(|| format!("range {s:?} is not FIRST-LAST"))?;
    let parse = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("range {s:?}: {e}"));
    Ok((parse(a)?, parse(b)?))
}

/// Relative paths land under `$BLOCKDNA_OUT` when it is set.
pub fn out_path(p: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if p.is_relative() => Path::new(&dir).join(p),
        _ => p.to_path_buf(),
    }
}

/// Resolve an output path and create its parent directory.
pub fn prepare_output(p: &Path) -> Result<PathBuf> {
    let p = out_path(p);
    if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating directory {}", parent.display()))?;
    }
    Ok(p)
}

pub fn write_output(p: &Path, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
    let p = prepare_output(p)?;
    std::fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))?;
    Ok(p)
}

pub fn load_manifest(p: &Path) -> Result<(PartitionManifest, IndexTree)> {
    let m = PartitionManifest::load(p).with_context(|| format!("manifest {}", p.display()))?;
    let tree = m.tree().with_context(|| format!("manifest {}: field tree", p.display()))?;
    Ok((m, tree))
}

pub fn load_pool(p: &Path) -> Result<Pool> {
    Pool::load(p).with_context(|| format!("pool file {}", p.display()))
}

pub fn load_reads(p: &Path) -> Result<Vec<DnaString>> {
    let text = std::fs::read_to_string(p).with_context(|| format!("reads file {}", p.display()))?;
    parse_reads(&text).with_context(|| format!("reads file {}", p.display()))
}

pub fn save_pool(p: &Path, pool: &Pool) -> Result<PathBuf> {
    write_output(p, pool.to_text())
}

pub fn save_reads(p: &Path, reads: &[DnaString]) -> Result<PathBuf> {
    let text = if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("fastq")) {
        reads_to_fastq(reads)
    } else {
        reads.iter().fold(String::with_capacity(reads.len() * 151), |mut s, r| {
            let _ = writeln!(s, "{r}");
            s
        })
    };
    write_output(p, text)
}

fn primer_pair(forward: Option<&str>, reverse: Option<&str>) -> Result<PrimerPair> {
    match (forward, reverse) {
        (Some(f), Some(r)) => PrimerPair::parse(f, r).context("primer pair"),
        _ => Ok(reference_primers()),
    }
}

fn encode(a: EncodeArgs) -> Result<()> {
    let data = std::fs::read(&a.input).with_context(|| format!("input file {}", a.input.display()))?;
    ensure!(!data.is_empty(), "input file {} is empty", a.input.display());
    let primers = primer_pair(a.forward.as_deref(), a.reverse.as_deref())?;
    let p = Partition::encode(data, primers, a.tree_seed, a.randomizer_seed)?;
    let pool = Pool::synthesize(p.dna(), a.abundance, a.bias, a.synthesis_seed);
    let manifest = write_output(&a.out.join("manifest.toml"), p.manifest.to_toml_string())?;
    let pool_path = save_pool(&a.out.join("pool.tsv"), &pool)?;
    println!(
        "{} blocks, {} strands -> {} and {}",
        p.manifest.block_count,
        pool.len(),
        manifest.display(),
        pool_path.display()
    );
    Ok(())
}

/// Strands for the next version of each patched block, in file order.
pub fn patch_strands(
    manifest: &mut PartitionManifest,
    tree: &IndexTree,
    patches: &[(usize, UpdatePatch)],
    data: Option<&[u8]>,
) -> Result<Vec<StrandRecord>> {
    let mut fresh: BTreeMap<usize, Vec<UpdatePatch>> = BTreeMap::new();
    let mut out = Vec::new();
    for (i, (block, p)) in patches.iter().enumerate() {
        let block = *block;
        ensure!(block < manifest.block_count, "patch {}: field block: {block} outside 0..{}", i + 1, manifest.block_count);
        let version = manifest.version_count(block);
        ensure!(
            (version as usize) < manifest.layout.version_slots,
            "patch {}: block {block} has no free version slot",
            i + 1
        );
        if let Some(data) = data {
            let start = block * blockdna::partition::BLOCK_BYTES;
            let original = data[start..(start + manifest.block_len(block)).min(data.len())].to_vec();
            let mut chain = fresh.get(&block).cloned().unwrap_or_default();
            chain.push(p.clone());
            resolve_chain(&VersionChain { original, patches: chain.clone() })
                .with_context(|| format!("patch {} on block {block}", i + 1))?;
            fresh.insert(block, chain);
        }
        let record = serialize_patch(p).with_context(|| format!("patch {}", i + 1))?;
        out.extend(build_strands(block, version, &record, manifest, tree)?);
        manifest.set_version_count(block, version + 1);
    }
    Ok(out)
}

fn patch(a: PatchArgs) -> Result<()> {
    let (mut manifest, tree) = load_manifest(&a.manifest)?;
    let specs = load_patch_file(&a.patches).with_context(|| format!("patch file {}", a.patches.display()))?;
    ensure!(!specs.is_empty(), "patch file {}: no [[patch]] entries", a.patches.display());
    let patches = specs
        .iter()
        .enumerate()
        .map(|(i, s)| Ok((s.block, s.to_patch().with_context(|| format!("patch file {}: entry {}", a.patches.display(), i + 1))?)))
        .collect::<Result<Vec<_>>>()?;
    let data = match &a.data {
        Some(p) => {
            let d = std::fs::read(p).with_context(|| format!("data file {}", p.display()))?;
            ensure!(d.len() == manifest.file_len, "data file {}: {} bytes, manifest expects {}", p.display(), d.len(), manifest.file_len);
            Some(d)
        }
        None => None,
    };
    let strands = patch_strands(&mut manifest, &tree, &patches, data.as_deref())?;
    let pool = Pool::synthesize(strands.iter().map(StrandRecord::to_dna), a.abundance, a.bias, a.synthesis_seed);
    let pool_path = save_pool(&a.out, &pool)?;
    let mpath = match &a.manifest_out {
        Some(p) => out_path(p),
        None => a.manifest.clone(),
    };
    let mpath = write_output(&mpath, manifest.to_toml_string())?;
    println!("{} update strands -> {}, manifest -> {}", pool.len(), pool_path.display(), mpath.display());
    Ok(())
}

fn run_pcr(a: PcrArgs) -> Result<()> {
    let pool = load_pool(&a.pool)?;
    let primers = match &a.manifest {
        Some(m) => load_manifest(m)?.0.primers,
        None => primer_pair(a.forward.as_deref(), a.reverse.as_deref())?,
    };
    let out = pcr(&pool, &primers.forward, &primers.reverse, &a.pcr.params(a.cycles)?)?;
    report_pool(&a.out, &out)
}

fn report_pool(path: &Path, pool: &Pool) -> Result<()> {
    let p = save_pool(path, pool)?;
    println!("{} strands, total {:.4e} -> {}", pool.len(), pool.total(), p.display());
    Ok(())
}

/// Forward primers reaching exactly the requested blocks.
pub fn multiplex_primers(
    manifest: &PartitionManifest,
    tree: &IndexTree,
    blocks: &[usize],
    range: Option<(usize, usize)>,
) -> Result<Vec<DnaString>> {
    let mut primers = Vec::new();
    for &b in blocks {
        ensure!(b < manifest.block_count, "block {b} outside 0..{}", manifest.block_count);
        primers.push(elongate_primer(&manifest.primers.forward, tree, b, tree.depth())?);
    }
    if let Some((first, last)) = range {
        ensure!(last < manifest.block_count, "range end {last} outside 0..{}", manifest.block_count);
        for node in prefix_cover(tree, first, last)? {
            let mut p = manifest.primers.forward.clone();
            p.push(SYNC_BASE);
            p.extend_from_slice(&tree.render(&node));
            primers.push(p);
        }
    }
    if primers.is_empty() {
        bail!("give at least one --block or a --range");
    }
    primers.sort();
    primers.dedup();
    Ok(primers)
}

fn multiplex(a: MultiplexArgs) -> Result<()> {
    let pool = load_pool(&a.pool)?;
    let (manifest, tree) = load_manifest(&a.manifest)?;
    let primers = multiplex_primers(&manifest, &tree, &a.block, a.range)?;
    let pairs: Vec<_> = primers.into_iter().map(|f| (f, manifest.primers.reverse.clone())).collect();
    println!("{} primer pairs", pairs.len());
    let out = multiplex_pcr(&pool, &pairs, &a.pcr.params(a.cycles)?)?;
    report_pool(&a.out, &out)
}

fn two_stage(a: TwoStageArgs) -> Result<()> {
    let pool = load_pool(&a.pool)?;
    let (manifest, tree) = load_manifest(&a.manifest)?;
    ensure!(a.block < manifest.block_count, "block {} outside 0..{}", a.block, manifest.block_count);
    let levels = a.levels.unwrap_or(tree.depth());
    let primer = elongate_primer(&manifest.primers.forward, &tree, a.block, levels)?;
    let out = two_stage_pcr(
        &pool,
        &manifest.primers,
        &primer,
        &a.pcr.params(a.stage1_cycles)?,
        &a.pcr.params(a.stage2_cycles)?,
    )?;
    report_pool(&a.out, &out)
}

fn run_sequence(a: SequenceArgs) -> Result<()> {
    let pool = load_pool(&a.pool)?;
    let d = ChannelModel::default();
    let channel = ChannelModel {
        p_sub: a.p_sub.unwrap_or(d.p_sub),
        p_ins: a.p_ins.unwrap_or(d.p_ins),
        p_del: a.p_del.unwrap_or(d.p_del),
        p_reverse: a.p_reverse.unwrap_or(d.p_reverse),
        seed: a.seed,
    };
    let reads = read_sequences(&sequence(&pool, a.reads, &channel)?);
    let p = save_reads(&a.out, &reads)?;
    println!("{} reads -> {}", reads.len(), p.display());
    Ok(())
}

pub fn mix_pools(
    data: &Pool,
    update: &Pool,
    primers: &PrimerPair,
    protocol: MixProtocol,
    model: &MeasurementModel,
    params: &PcrParams,
) -> Result<MixReport> {
    Ok(match protocol {
        MixProtocol::MeasureThenAmplify => mix_measure_then_amplify(data, update, primers, model, params)?,
        MixProtocol::AmplifyThenMeasure => mix_amplify_then_measure(data, update, primers, model, params)?,
    })
}

fn mix(a: MixArgs) -> Result<()> {
    let data = load_pool(&a.data)?;
    let update = load_pool(&a.update)?;
    let (manifest, _) = load_manifest(&a.manifest)?;
    let model = MeasurementModel { relative_error: a.relative_error, seed: a.seed };
    let r = mix_pools(&data, &update, &manifest.primers, a.protocol, &model, &a.pcr.params(a.cycles)?)?;
    println!("update pool scaled by {:.4e}", r.update_scale);
    report_pool(&a.out, &r.pool)
}

/// Decode report written next to the recovered bytes.
#[derive(Debug, Serialize)]
pub struct BlockReport {
    pub block: usize,
    pub versions: usize,
    pub clusters: usize,
    pub duplicates_discarded: usize,
    pub corrected_symbols: usize,
    pub erased_columns: usize,
    /// Assignments tried by the candidate decoder.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attempts: Option<usize>,
    pub resolved_len: usize,
    pub patches: Vec<PatchReport>,
}

#[derive(Debug, Serialize)]
pub struct PatchReport {
    pub del_start: u8,
    pub del_len: u8,
    pub ins_pos: u8,
    pub ins_len: usize,
    /// The insert, lossily decoded as UTF-8.
    pub ins_text: String,
}

impl BlockReport {
    pub fn new(d: &BlockDecode, attempts: Option<usize>) -> Self {
        BlockReport {
            block: d.block_no,
            versions: d.patches.len() + 1,
            clusters: d.clusters,
            duplicates_discarded: d.duplicates_discarded,
            corrected_symbols: d.corrected_symbols,
            erased_columns: d.erased_columns,
            attempts,
            resolved_len: d.resolved.len(),
            patches: d
                .patches
                .iter()
                .map(|p| PatchReport {
                    del_start: p.del_start,
                    del_len: p.del_len,
                    ins_pos: p.ins_pos,
                    ins_len: p.ins_len(),
                    ins_text: String::from_utf8_lossy(&p.ins_bytes).into_owned(),
                })
                .collect(),
        }
    }
}

/// Decode one block with the chosen strategy.
pub fn decode_one(
    reads: &[DnaString],
    manifest: &PartitionManifest,
    tree: &IndexTree,
    block: usize,
    strategy: Strategy,
    max_candidates: usize,
) -> Result<(BlockDecode, BlockReport)> {
    let config = DecodeConfig::default();
    let (d, attempts) = match strategy {
        Strategy::LargestCluster => (decode_block(reads, manifest, tree, block, &config)?, None),
        Strategy::Candidates => {
            let c = decode_with_candidates(reads, manifest, tree, block, max_candidates, &config)?;
            (c.block, Some(c.attempts))
        }
    };
    let report = BlockReport::new(&d, attempts);
    Ok((d, report))
}

/// Raw bytes of every version plus the resolved block and `report.toml`.
pub fn write_block(out: &Path, d: &BlockDecode, report: &BlockReport) -> Result<()> {
    let b = d.block_no;
    write_output(&out.join(format!("block_{b}_v0.bin")), &d.original)?;
    for (i, p) in d.patches.iter().enumerate() {
        write_output(&out.join(format!("block_{b}_v{}.bin", i + 1)), serialize_patch(p)?)?;
    }
    write_output(&out.join(format!("block_{b}_resolved.bin")), &d.resolved)?;
    write_output(&out.join("report.toml"), toml::to_string(report)?)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct PartitionReport {
    reads: usize,
    background: usize,
    blocks_decoded: usize,
    failed_blocks: Vec<usize>,
    errors: BTreeMap<String, String>,
}

fn decode(a: DecodeArgs) -> Result<()> {
    let reads = load_reads(&a.reads)?;
    if reads.is_empty() {
        bail!("no reads in {}", a.reads.display());
    }
    let (manifest, tree) = load_manifest(&a.manifest)?;
    match a.block {
        Some(block) => {
            ensure!(block < manifest.block_count, "block {block} outside 0..{}", manifest.block_count);
            let (d, report) = decode_one(&reads, &manifest, &tree, block, a.strategy, a.max_candidates)
                .with_context(|| format!("decoding block {block} from {}", a.reads.display()))?;
            write_block(&a.out, &d, &report)?;
            println!(
                "block {block}: {} versions, {} bytes -> {}",
                report.versions,
                report.resolved_len,
                out_path(&a.out).display()
            );
            Ok(())
        }
        None => {
            let pd = decode_partition(&reads, &manifest, &tree, &DecodeConfig::default());
            let mut report = PartitionReport {
                reads: reads.len(),
                background: pd.background,
                blocks_decoded: 0,
                failed_blocks: Vec::new(),
                errors: BTreeMap::new(),
            };
            for (i, b) in pd.blocks.iter().enumerate() {
                match b {
                    Ok(_) => report.blocks_decoded += 1,
                    Err(e) => {
                        report.failed_blocks.push(i);
                        report.errors.insert(i.to_string(), e.clone());
                    }
                }
            }
            write_output(&a.out.join("report.toml"), toml::to_string(&report)?)?;
            match pd.file_bytes() {
                Ok(bytes) => {
                    let p = write_output(&a.out.join("file.bin"), &bytes)?;
                    println!("{} blocks, {} bytes -> {}", report.blocks_decoded, bytes.len(), p.display());
                    Ok(())
                }
                Err(_) => bail!(
                    "{} of {} blocks failed to decode, first {}; see report.toml",
                    report.failed_blocks.len(),
                    manifest.block_count,
                    report.failed_blocks[0]
                ),
            }
        }
    }
}

/// `block,version,count` for every address present in the reads.
pub fn stats_csv(reads: &[DnaString], manifest: &PartitionManifest, tree: &IndexTree) -> String {
    let h = address_histogram(reads, manifest, tree, DecodeConfig::default().max_primer_edits);
    let mut s = String::from("block,version,count\n");
    for ((b, v), n) in h {
        let _ = writeln!(s, "{b},{v},{n}");
    }
    s
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            write_output(p, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn stats(a: StatsArgs) -> Result<()> {
    let reads = load_reads(&a.reads)?;
    let (manifest, tree) = load_manifest(&a.manifest)?;
    emit(a.out.as_deref(), &stats_csv(&reads, &manifest, &tree))
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    let table = capacity_table(a.strand_len, a.primer_len)?;
    emit(a.out.as_deref(), &capacity_csv(&table))
}
