//! Experiment execution: dataset -> (pretrain -> train) -> affinities ->
//! spectral clustering -> metrics, with all artifacts written to the output
//! directory.
//!
//! Every run is a pure function of (config, seed). Randomness flows from the
//! single seed through named substreams ("data", "init", "kmeans"), so e.g.
//! ablation cells see the identical dataset and initial weights and differ
//! only in the ablated factor. Output files are written atomically.

use std::fs;
use std::path::Path;

use crate::datasets::{generate_union_of_subspaces, load_dataset, normalize_columns, Dataset};
use crate::error::{Error, Result};
use crate::experiment::config::{AffinitySource, DatasetConfig, ExperimentConfig, Mode, Modules};
use crate::experiment::pgm::emit_heatmap;
use crate::experiment::results::{
    AblationCell, CurveData, ResultsFile, SourceEvaluation, SweepRow,
};
use crate::metrics::{acc, conn, nmi, sre, MetricReport};
use crate::model::checkpoint::atomic_write;
use crate::model::{
    load_checkpoint, pretrain, save_checkpoint, train, Autoencoder, CoeffMatrix, HyperParams,
    TrainOutput,
};
use crate::numerics::{Matrix, Rng};
use crate::spectral::{affinity_single, block_mass_ratio, spectral_cluster, Affinity};

pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const RESULTS_FILE: &str = "results.json";
pub const LOSS_CURVES_FILE: &str = "loss_curves.csv";
pub const GAMMA_SWEEP_FILE: &str = "gamma_sweep.csv";

/// Executes the configured experiment and writes all artifacts into
/// `config.out_dir`. Returns the same results that were written to
/// `results.json`.
pub fn run(config: &ExperimentConfig) -> Result<ResultsFile> {
    config.validate()?;
    fs::create_dir_all(&config.out_dir)
        .map_err(|e| Error::io(config.out_dir.display().to_string(), e))?;

    let root = Rng::new(config.seed);
    let dataset = load_data(config, &root)?;

    let results = match config.mode {
        Mode::Pretrain => run_pretrain(config, &dataset, &root)?,
        Mode::Train => run_train(config, &dataset, &root)?,
        Mode::Cluster => run_cluster(config, &dataset, &root)?,
        Mode::Ablate => run_ablate(config, &dataset, &root)?,
        Mode::SweepGamma => run_sweep(config, &dataset, &root)?,
    };

    write_artifacts(config, &results)?;
    if !results.metrics_finite() {
        return Err(Error::Numeric(
            "run produced non-finite metric values".into(),
        ));
    }
    Ok(results)
}

fn load_data(config: &ExperimentConfig, root: &Rng) -> Result<Dataset> {
    let ds = match &config.dataset {
        DatasetConfig::Synthetic { .. } => {
            let spec = config.dataset.synthetic_spec().expect("synthetic");
            generate_union_of_subspaces(&spec, &mut root.substream("data"))?
        }
        DatasetConfig::Files {
            data,
            labels,
            format,
            k,
        } => load_dataset(data, labels.as_deref(), *format, *k)?,
    };
    Ok(normalize_columns(&ds, config.normalize))
}

fn build_autoencoder(config: &ExperimentConfig, input_dim: usize, root: &Rng) -> Result<Autoencoder> {
    let ae_cfg = &config.autoencoder;
    if ae_cfg.identity {
        Ok(Autoencoder::identity())
    } else {
        let latent = ae_cfg
            .latent
            .ok_or_else(|| Error::Config("non-identity autoencoder requires latent".into()))?;
        Autoencoder::dense(
            input_dim,
            &ae_cfg.hidden,
            latent,
            ae_cfg.activation,
            &mut root.substream("init"),
        )
    }
}

/// Pretraining happens only when there are weights to pretrain.
fn maybe_pretrain(
    ae: Autoencoder,
    x: &Matrix,
    hp: &HyperParams,
) -> Result<(Autoencoder, Vec<f64>)> {
    if ae.is_identity() || hp.pretrain_epochs == 0 {
        Ok((ae, Vec::new()))
    } else {
        pretrain(ae, x, hp)
    }
}

/// Clusters one affinity source and evaluates it against ground truth when
/// labels exist.
fn evaluate_source(
    source: AffinitySource,
    c: &Matrix,
    theta: &Matrix,
    ds: &Dataset,
    root: &Rng,
) -> Result<(SourceEvaluation, Affinity)> {
    let coeff = match source {
        AffinitySource::C => c.clone(),
        AffinitySource::Theta => theta.clone(),
        AffinitySource::Fused => c.add(theta)?,
    };
    let w = affinity_single(&coeff)?;
    let (labels, _embedding) = spectral_cluster(&w, ds.k, &mut root.substream("kmeans"))?;
    let metrics = ds
        .labels
        .as_ref()
        .map(|truth| -> Result<MetricReport> {
            Ok(MetricReport {
                acc: acc(&labels, truth)?,
                nmi: nmi(&labels, truth)?,
                sre: sre(&coeff, truth)?,
                conn: conn(&w, truth)?,
                block_mass: block_mass_ratio(&w, truth)?,
            })
        })
        .transpose()?;
    Ok((
        SourceEvaluation {
            source,
            labels,
            metrics,
        },
        w,
    ))
}

/// Evaluates all three affinity sources and writes their heatmaps.
fn evaluate_all_sources(
    c: &Matrix,
    theta: &Matrix,
    ds: &Dataset,
    root: &Rng,
    out_dir: &Path,
) -> Result<Vec<SourceEvaluation>> {
    let mut evaluations = Vec::with_capacity(3);
    for source in AffinitySource::ALL {
        let (eval, w) = evaluate_source(source, c, theta, ds, root)?;
        emit_heatmap(&w, &out_dir.join(format!("affinity_{}.pgm", source.tag())))?;
        evaluations.push(eval);
    }
    Ok(evaluations)
}

fn curves_to_data(out: &TrainOutput) -> CurveData {
    CurveData {
        l1: out.curves.l1.clone(),
        l2: out.curves.l2.clone(),
        l3: out.curves.l3.clone(),
        total: out.curves.total.clone(),
    }
}

fn run_train(config: &ExperimentConfig, ds: &Dataset, root: &Rng) -> Result<ResultsFile> {
    let hp = config.effective_hyper();
    let ae = build_autoencoder(config, ds.dim(), root)?;
    let (ae, pretrain_curve) = maybe_pretrain(ae, &ds.data, &hp)?;
    let out = train(ae, &ds.data, &hp)?;

    save_checkpoint(
        &config.out_dir.join(CHECKPOINT_FILE),
        &out.ae,
        &out.c,
        &out.theta,
        &hp,
    )?;

    let mut results = ResultsFile::new(config.clone());
    results.pretrain_curve = pretrain_curve;
    results.loss_curves = curves_to_data(&out);
    results.evaluations =
        evaluate_all_sources(out.c.matrix(), out.theta.matrix(), ds, root, &config.out_dir)?;
    Ok(results)
}

fn run_pretrain(config: &ExperimentConfig, ds: &Dataset, root: &Rng) -> Result<ResultsFile> {
    let hp = config.effective_hyper();
    let ae = build_autoencoder(config, ds.dim(), root)?;
    let (ae, pretrain_curve) = maybe_pretrain(ae, &ds.data, &hp)?;

    let n = ds.len();
    save_checkpoint(
        &config.out_dir.join(CHECKPOINT_FILE),
        &ae,
        &CoeffMatrix::zeros(n),
        &CoeffMatrix::zeros(n),
        &hp,
    )?;

    let mut results = ResultsFile::new(config.clone());
    results.pretrain_curve = pretrain_curve;
    Ok(results)
}

fn run_cluster(config: &ExperimentConfig, ds: &Dataset, root: &Rng) -> Result<ResultsFile> {
    let path = config.checkpoint.as_ref().expect("validated");
    let ckpt = load_checkpoint(path)?;
    if ckpt.c.n() != ds.len() {
        return Err(Error::Config(format!(
            "checkpoint holds {} samples but the dataset has {}",
            ckpt.c.n(),
            ds.len()
        )));
    }
    let mut results = ResultsFile::new(config.clone());
    results.evaluations = evaluate_all_sources(
        ckpt.c.matrix(),
        ckpt.theta.matrix(),
        ds,
        root,
        &config.out_dir,
    )?;
    Ok(results)
}

fn run_ablate(config: &ExperimentConfig, ds: &Dataset, root: &Rng) -> Result<ResultsFile> {
    if ds.labels.is_none() {
        return Err(Error::Config(
            "ablate mode requires ground-truth labels".into(),
        ));
    }
    let mut base = config.hyper;
    base.seed = config.seed;

    let ae = build_autoencoder(config, ds.dim(), root)?;
    let (ae, pretrain_curve) = maybe_pretrain(ae, &ds.data, &base)?;

    let mut cells = Vec::with_capacity(9);
    let mut full_out: Option<TrainOutput> = None;
    for modules in Modules::ALL {
        let hp = modules.apply(base);
        let out = train(ae.clone(), &ds.data, &hp)?;
        for source in AffinitySource::ALL {
            let (eval, _) =
                evaluate_source(source, out.c.matrix(), out.theta.matrix(), ds, root)?;
            cells.push(AblationCell {
                modules,
                source,
                metrics: eval.metrics.expect("labels checked above"),
            });
        }
        if modules == Modules::L1L2L3 {
            full_out = Some(out);
        }
    }

    // Artifacts come from the full-module model.
    let out = full_out.expect("grid includes L1+L2+L3");
    save_checkpoint(
        &config.out_dir.join(CHECKPOINT_FILE),
        &out.ae,
        &out.c,
        &out.theta,
        &Modules::L1L2L3.apply(base),
    )?;
    let mut results = ResultsFile::new(config.clone());
    results.pretrain_curve = pretrain_curve;
    results.loss_curves = curves_to_data(&out);
    results.evaluations =
        evaluate_all_sources(out.c.matrix(), out.theta.matrix(), ds, root, &config.out_dir)?;
    results.ablation = Some(cells);
    Ok(results)
}

fn run_sweep(config: &ExperimentConfig, ds: &Dataset, root: &Rng) -> Result<ResultsFile> {
    if ds.labels.is_none() {
        return Err(Error::Config(
            "sweep-gamma mode requires ground-truth labels".into(),
        ));
    }
    let base = config.effective_hyper();

    let ae = build_autoencoder(config, ds.dim(), root)?;
    let (ae, pretrain_curve) = maybe_pretrain(ae, &ds.data, &base)?;

    let grid = config.gamma_grid();
    let mut rows = Vec::with_capacity(grid.len());
    let mut last_out: Option<TrainOutput> = None;
    for &gamma in &grid {
        let mut hp = base;
        hp.gamma = gamma;
        let out = train(ae.clone(), &ds.data, &hp)?;
        let (eval, _) = evaluate_source(
            config.affinity,
            out.c.matrix(),
            out.theta.matrix(),
            ds,
            root,
        )?;
        rows.push(SweepRow {
            gamma,
            metrics: eval.metrics.expect("labels checked above"),
        });
        last_out = Some(out);
    }

    let out = last_out.expect("grid validated nonempty");
    save_checkpoint(
        &config.out_dir.join(CHECKPOINT_FILE),
        &out.ae,
        &out.c,
        &out.theta,
        &base,
    )?;
    let mut results = ResultsFile::new(config.clone());
    results.pretrain_curve = pretrain_curve;
    results.loss_curves = curves_to_data(&out);
    results.evaluations =
        evaluate_all_sources(out.c.matrix(), out.theta.matrix(), ds, root, &config.out_dir)?;
    results.sweep = Some(rows);
    Ok(results)
}

fn write_artifacts(config: &ExperimentConfig, results: &ResultsFile) -> Result<()> {
    // loss_curves.csv: one row per epoch.
    let curves = &results.loss_curves;
    let mut csv = String::from("epoch,L1,L2,L3,total\n");
    for e in 0..curves.total.len() {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            e, curves.l1[e], curves.l2[e], curves.l3[e], curves.total[e]
        ));
    }
    atomic_write(&config.out_dir.join(LOSS_CURVES_FILE), csv.as_bytes())?;

    if let Some(rows) = &results.sweep {
        let mut csv = String::from("gamma,acc,nmi\n");
        for row in rows {
            csv.push_str(&format!(
                "{},{},{}\n",
                row.gamma, row.metrics.acc, row.metrics.nmi
            ));
        }
        atomic_write(&config.out_dir.join(GAMMA_SWEEP_FILE), csv.as_bytes())?;
    }

    let mut json = serde_json::to_vec_pretty(results)?;
    json.push(b'\n');
    atomic_write(&config.out_dir.join(RESULTS_FILE), &json)
}
