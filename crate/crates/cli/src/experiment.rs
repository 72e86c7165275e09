//! One TOML document describing a whole experiment: encode, update, mix,
//! retrieve one block, sequence and decode. Every seed is named here, so a
//! rerun writes byte-identical artifacts.

use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use serde::{Deserialize, Serialize};

use blockdna::index_tree::elongate_primer;
use blockdna::partition::{PrimerPair, StrandRecord};
use blockdna::pipeline::{Reference, RetrievalMetrics};
use blockdna::scenario::{reference_primers, sample_text, Partition};
use blockdna::updates::load_patch_file;
use blockdna::wetlab::{read_sequences, sequence, two_stage_pcr, ChannelModel, MeasurementModel, PcrParams, Pool, TWO_STAGE_CYCLES};

use crate::commands::{decode_one, mix_pools, OUT_DIR_ENV, save_pool, save_reads, write_block, write_output, MixProtocol, Strategy};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Where every artifact goes; relative to the config file.
    pub output_dir: PathBuf,
    pub input: InputSection,
    #[serde(default)]
    pub partition: PartitionSection,
    #[serde(default)]
    pub synthesis: SynthesisSection,
    /// Patch file applied to the encoded data; relative to the config file.
    pub patches: Option<PathBuf>,
    #[serde(default)]
    pub mix: MixSection,
    pub retrieve: RetrieveSection,
    #[serde(default)]
    pub pcr: PcrParams,
    #[serde(default)]
    pub sequencing: SequencingSection,
    #[serde(default)]
    pub decode: DecodeSection,
}

/// Either a file to store or generated sample text.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    pub file: Option<PathBuf>,
    pub sample_len: Option<usize>,
    #[serde(default)]
    pub sample_seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionSection {
    pub forward: String,
    pub reverse: String,
    /// Decimal or `0x` hex.
    pub tree_seed: String,
    pub randomizer_seed: String,
}

impl Default for PartitionSection {
    fn default() -> Self {
        let p = reference_primers();
        PartitionSection {
            forward: p.forward.to_string(),
            reverse: p.reverse.to_string(),
            tree_seed: "0x1D7E5EED".into(),
            randomizer_seed: "0x5C4A3B1E".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisSection {
    pub abundance: f64,
    pub bias: f64,
    pub seed: u64,
    /// Copies per update strand relative to data strands before mixing.
    pub update_excess: f64,
}

impl Default for SynthesisSection {
    fn default() -> Self {
        SynthesisSection { abundance: 1.0, bias: 0.0, seed: 0, update_excess: 1.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixSection {
    pub protocol: MixProtocol,
    pub measurement: MeasurementModel,
    pub cycles: u32,
}

impl Default for MixSection {
    fn default() -> Self {
        MixSection {
            protocol: MixProtocol::MeasureThenAmplify,
            measurement: MeasurementModel::default(),
            cycles: PcrParams::default().cycles,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetrieveSection {
    pub block: usize,
    /// Tree levels in the elongated primer; the full index when absent.
    pub levels: Option<usize>,
    #[serde(default = "stage1")]
    pub stage1_cycles: u32,
    #[serde(default = "stage2")]
    pub stage2_cycles: u32,
}

fn stage1() -> u32 {
    TWO_STAGE_CYCLES.0
}

fn stage2() -> u32 {
    TWO_STAGE_CYCLES.1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequencingSection {
    pub reads: usize,
    pub channel: ChannelModel,
}

impl Default for SequencingSection {
    fn default() -> Self {
        SequencingSection { reads: 225, channel: ChannelModel::default() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeSection {
    pub max_candidates: usize,
    pub largest_cluster_only: bool,
}

impl Default for DecodeSection {
    fn default() -> Self {
        DecodeSection { max_candidates: 5, largest_cluster_only: false }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("experiment config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("experiment config {}", path.display()))
    }
}

/// Summary written as `experiment.toml` in the output directory.
#[derive(Debug, Serialize)]
struct ExperimentReport {
    blocks: usize,
    data_strands: usize,
    update_strands: usize,
    update_scale: f64,
    target_block: usize,
    reads: usize,
    on_target_fraction: f64,
    misprime_fraction: f64,
    decoded: bool,
    matches_expected: bool,
    error: Option<String>,
}

fn seed(text: &str, field: &str, cfg: &Path) -> Result<u64> {
    crate::commands::parse_seed(text).map_err(anyhow::Error::msg).with_context(|| format!("{}: field {field}", cfg.display()))
}

pub fn run(config_path: &Path) -> Result<()> {
    let cfg = ExperimentConfig::load(config_path)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let out = match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) => Path::new(&dir).join(&cfg.output_dir),
        None => base.join(&cfg.output_dir),
    };
    // absolute, so the per-file override does not apply a second time
    let out = std::path::absolute(&out).with_context(|| format!("output directory {}", out.display()))?;
    let at = |p: &Path| base.join(p);

    let data = match (&cfg.input.file, cfg.input.sample_len) {
        (Some(f), None) => std::fs::read(at(f)).with_context(|| format!("{}: field input.file", config_path.display()))?,
        (None, Some(n)) => sample_text(n, cfg.input.sample_seed),
        _ => anyhow::bail!("{}: field input: give exactly one of file and sample_len", config_path.display()),
    };
    ensure!(!data.is_empty(), "{}: field input: no data", config_path.display());
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let input_copy = write_output(&out.join("input.bin"), &data)?;

    let primers = PrimerPair::parse(&cfg.partition.forward, &cfg.partition.reverse)
        .with_context(|| format!("{}: field partition.forward/reverse", config_path.display()))?;
    let tree_seed = seed(&cfg.partition.tree_seed, "partition.tree_seed", config_path)?;
    let randomizer = seed(&cfg.partition.randomizer_seed, "partition.randomizer_seed", config_path)?;
    let mut partition = Partition::encode(data, primers, tree_seed, randomizer)?;
    let data_strands = partition.strands.len();
    let s = &cfg.synthesis;
    let data_pool = Pool::synthesize(partition.dna(), s.abundance, s.bias, s.seed);

    let mut update_dna = Vec::new();
    if let Some(p) = &cfg.patches {
        let specs = load_patch_file(&at(p)).with_context(|| format!("{}: field patches", config_path.display()))?;
        for (i, spec) in specs.iter().enumerate() {
            let patch = spec.to_patch().with_context(|| format!("patch file {}: entry {}", p.display(), i + 1))?;
            let new = partition
                .add_update(spec.block, patch)
                .with_context(|| format!("patch file {}: entry {} on block {}", p.display(), i + 1, spec.block))?;
            update_dna.extend(new.iter().map(StrandRecord::to_dna));
        }
    }
    let update_strands = update_dna.len();
    write_output(&out.join("manifest.toml"), partition.manifest.to_toml_string())?;
    save_pool(&out.join("pool.tsv"), &data_pool)?;

    let (mixed, update_scale) = if update_dna.is_empty() {
        (data_pool, 1.0)
    } else {
        let update_pool = Pool::synthesize(update_dna, s.abundance * s.update_excess, s.bias, s.seed ^ 0x55);
        save_pool(&out.join("update_pool.tsv"), &update_pool)?;
        let params = cfg.pcr.with_cycles(cfg.mix.cycles);
        let r = mix_pools(&data_pool, &update_pool, &partition.manifest.primers, cfg.mix.protocol, &cfg.mix.measurement, &params)?;
        save_pool(&out.join("mixed_pool.tsv"), &r.pool)?;
        (r.pool, r.update_scale)
    };

    let target = cfg.retrieve.block;
    ensure!(
        target < partition.manifest.block_count,
        "{}: field retrieve.block: {target} outside 0..{}",
        config_path.display(),
        partition.manifest.block_count
    );
    let levels = cfg.retrieve.levels.unwrap_or(partition.tree.depth());
    let primer = elongate_primer(&partition.manifest.primers.forward, &partition.tree, target, levels)
        .with_context(|| format!("{}: field retrieve.levels", config_path.display()))?;
    let retrieved = two_stage_pcr(
        &mixed,
        &partition.manifest.primers,
        &primer,
        &cfg.pcr.with_cycles(cfg.retrieve.stage1_cycles),
        &cfg.pcr.with_cycles(cfg.retrieve.stage2_cycles),
    )?;
    save_pool(&out.join("two_stage_pool.tsv"), &retrieved)?;

    let reads = read_sequences(&sequence(&retrieved, cfg.sequencing.reads, &cfg.sequencing.channel)?);
    save_reads(&out.join("reads.txt"), &reads)?;

    let reference = Reference::from_strands(&partition.strands, &partition.manifest);
    let metrics = RetrievalMetrics::compute(&reads, &partition.manifest, &partition.tree, target, Some(&reference), 2);
    let strategy = if cfg.decode.largest_cluster_only { Strategy::LargestCluster } else { Strategy::Candidates };
    let expected = partition.resolved(target)?;
    let decoded = decode_one(&reads, &partition.manifest, &partition.tree, target, strategy, cfg.decode.max_candidates);
    let mut report = ExperimentReport {
        blocks: partition.manifest.block_count,
        data_strands,
        update_strands,
        update_scale,
        target_block: target,
        reads: reads.len(),
        on_target_fraction: metrics.on_target_fraction(),
        misprime_fraction: metrics.misprime_fraction(),
        decoded: false,
        matches_expected: false,
        error: None,
    };
    let result = match decoded {
        Ok((d, block_report)) => {
            write_block(&out.join("decoded"), &d, &block_report)?;
            report.decoded = true;
            report.matches_expected = d.resolved == expected;
            Ok(())
        }
        Err(e) => {
            report.error = Some(format!("{e:#}"));
            Err(e)
        }
    };
    write_output(&out.join("experiment.toml"), toml::to_string(&report)?)?;
    result.with_context(|| format!("decoding block {target}"))?;
    ensure!(report.matches_expected, "decoded block {target} differs from the updated input");
    println!(
        "block {target} recovered from {} reads ({:.1}% on target); input {} -> {}",
        reads.len(),
        100.0 * report.on_target_fraction,
        input_copy.display(),
        out.display()
    );
    Ok(())
}
