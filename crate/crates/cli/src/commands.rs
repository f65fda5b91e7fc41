use std::path::{Path, PathBuf};

use genscope_core::tensor_io::{encode_labels, encode_matrix};
use genscope_core::{
    epoch_sweep, generalization_index, load_bundle, pca_fit, pca_transform, rank_networks,
    representatives, synth_stack, DatasetBundle, GeneralizationReport, KMeansConfig, KnnRule,
    Manifest, ManifestLayer, Split,
};

use crate::error::CliError;
use crate::output::{csv_bytes, ensure_dir, fmt_sig, write_atomic};
use crate::svg;
use crate::EvalArgs;

fn kmeans_config(eval: &EvalArgs, class_count: usize) -> Result<(KMeansConfig, KnnRule), CliError> {
    let rule: KnnRule = eval.knn_rule.parse()?;
    let config = KMeansConfig {
        k: eval.k.unwrap_or(class_count),
        max_iters: eval.max_iters,
        n_restarts: eval.restarts,
        tol: eval.tol,
        seed: eval.seed,
    };
    if config.k < 2 {
        return Err(CliError::invalid("k", format!("must be at least 2, got {}", config.k)));
    }
    if config.max_iters == 0 {
        return Err(CliError::invalid("max-iters", "must be at least 1"));
    }
    if config.n_restarts == 0 {
        return Err(CliError::invalid("restarts", "must be at least 1"));
    }
    if !(config.tol.is_finite() && config.tol >= 0.0) {
        return Err(CliError::invalid("tol", "must be finite and >= 0"));
    }
    Ok((config, rule))
}

fn layers_csv(report: &GeneralizationReport) -> Result<Vec<u8>, CliError> {
    csv_bytes(
        &["layer_index", "layer_id", "nmi", "knn_purity"],
        report.layers.iter().map(|l| {
            vec![
                l.layer_index.to_string(),
                l.layer_id.clone(),
                fmt_sig(l.nmi),
                fmt_sig(l.knn_purity),
            ]
        }),
    )
}

pub fn evaluate(manifest: &Path, eval: &EvalArgs, out: &Path) -> Result<(), CliError> {
    let bundle = load_bundle(manifest)?;
    let (config, rule) = kmeans_config(eval, bundle.labels.class_count())?;
    ensure_dir(out)?;
    let report = generalization_index(&bundle, &config, rule)?;
    write_atomic(out, "report.json", report.to_json().as_bytes())?;
    write_atomic(out, "layers.csv", &layers_csv(&report)?)?;
    println!(
        "{} epoch {} ({}): g = {} at {}, g_knn = {} at {}",
        report.model,
        report.epoch,
        report.split,
        fmt_sig(report.g),
        report.g_layer,
        fmt_sig(report.g_knn),
        report.g_knn_layer
    );
    Ok(())
}

pub fn sweep(manifests: &[PathBuf], eval: &EvalArgs, out: &Path) -> Result<(), CliError> {
    let bundles = manifests
        .iter()
        .map(load_bundle)
        .collect::<Result<Vec<DatasetBundle>, _>>()?;
    let first = bundles
        .first()
        .ok_or_else(|| CliError::invalid("manifests", "need at least one manifest"))?;
    let (config, rule) = kmeans_config(eval, first.labels.class_count())?;
    ensure_dir(out)?;
    let reports = epoch_sweep(&bundles, &config, rule)?;

    let curves = csv_bytes(
        &["epoch", "g", "g_knn", "g_layer"],
        reports.iter().map(|r| {
            vec![
                r.epoch.to_string(),
                fmt_sig(r.g),
                fmt_sig(r.g_knn),
                r.g_layer.clone(),
            ]
        }),
    )?;
    let mut json = serde_json::to_string_pretty(&reports)
        .map_err(|e| CliError::Output(e.to_string()))?;
    json.push('\n');
    write_atomic(out, "sweep.json", json.as_bytes())?;
    write_atomic(out, "curves.csv", &curves)?;
    for r in &reports {
        println!("epoch {}: g = {} at {}", r.epoch, fmt_sig(r.g), r.g_layer);
    }
    Ok(())
}

pub fn project(
    manifest: &Path,
    layer: &str,
    dims: usize,
    svg_out: bool,
    reps: Option<usize>,
    out: &Path,
) -> Result<(), CliError> {
    if !(dims == 2 || dims == 3) {
        return Err(CliError::invalid("dims", format!("must be 2 or 3, got {dims}")));
    }
    if svg_out && dims != 2 {
        return Err(CliError::invalid("svg", "SVG requires p=2"));
    }
    if reps == Some(0) {
        return Err(CliError::invalid("representatives", "must be at least 1"));
    }
    let bundle = load_bundle(manifest)?;
    let data = bundle
        .stack
        .get(layer)
        .ok_or_else(|| genscope_core::Error::UnknownLayer(layer.to_string()))?;
    let model = pca_fit(data, dims)?;
    let projection = pca_transform(&model, data)?.for_layer(layer);
    ensure_dir(out)?;

    let originals = bundle.labels.to_original();
    let mut header = vec!["index".to_string(), "label".to_string()];
    header.extend((0..dims).map(|j| format!("coord_{j}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let coords = csv_bytes(
        &header_refs,
        projection.coords.iter_rows().enumerate().map(|(i, row)| {
            let mut rec = vec![i.to_string(), originals[i].to_string()];
            rec.extend(row.iter().map(|&v| fmt_sig(v)));
            rec
        }),
    )?;
    write_atomic(out, "coords.csv", &coords)?;

    if svg_out {
        let points: Vec<(f64, f64)> = projection
            .coords
            .iter_rows()
            .map(|r| (r[0], r[1]))
            .collect();
        let legend: Vec<String> = bundle
            .labels
            .original_labels()
            .iter()
            .map(|l| l.to_string())
            .collect();
        let doc = svg::scatter(&points, bundle.labels.labels(), &legend);
        write_atomic(out, "projection.svg", doc.as_bytes())?;
    }

    if let Some(count) = reps {
        let chosen = representatives(data, &bundle.labels, count)?;
        let rows = chosen.iter().enumerate().flat_map(|(class, idx)| {
            let label = bundle.labels.original_labels()[class];
            idx.iter()
                .enumerate()
                .map(move |(rank, &i)| vec![label.to_string(), rank.to_string(), i.to_string()])
        });
        write_atomic(
            out,
            "representatives.csv",
            &csv_bytes(&["label", "rank", "index"], rows)?,
        )?;
    }

    let explained: Vec<String> = model.eigenvalues.iter().map(|&v| fmt_sig(v)).collect();
    println!(
        "projected {} rows of {} onto {dims} components (eigenvalues {})",
        data.rows(),
        layer,
        explained.join(", ")
    );
    Ok(())
}

pub fn rank(paths: &[PathBuf], out: &Path) -> Result<(), CliError> {
    let reports = paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io {
                path: p.clone(),
                source: e,
            })?;
            GeneralizationReport::from_json(&text).map_err(CliError::from)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let ranked = rank_networks(&reports)?;
    ensure_dir(out)?;
    let csv = csv_bytes(
        &["rank", "model", "g", "g_layer", "g_knn"],
        ranked.iter().enumerate().map(|(i, e)| {
            vec![
                (i + 1).to_string(),
                e.model.clone(),
                fmt_sig(e.g),
                e.g_layer.clone(),
                fmt_sig(e.g_knn),
            ]
        }),
    )?;
    write_atomic(out, "ranking.csv", &csv)?;

    let width = ranked.iter().map(|e| e.model.len()).max().unwrap_or(5).max(5);
    println!("{:>4}  {:<width$}  {:>8}  {:<16}  {:>8}", "rank", "model", "g", "g_layer", "g_knn");
    for (i, e) in ranked.iter().enumerate() {
        println!(
            "{:>4}  {:<width$}  {:>8.4}  {:<16}  {:>8.4}",
            i + 1,
            e.model,
            e.g,
            e.g_layer,
            e.g_knn
        );
    }
    Ok(())
}

pub struct SynthArgs {
    pub classes: usize,
    pub per_class: usize,
    pub dims: usize,
    pub separations: Vec<f64>,
    pub seed: u64,
    pub model: String,
    pub epoch: u64,
    pub split: String,
}

pub fn synth(args: &SynthArgs, out: &Path) -> Result<(), CliError> {
    let split: Split = args.split.parse()?;
    if args.model.is_empty() {
        return Err(CliError::invalid("model", "must not be empty"));
    }
    let mut bundle = synth_stack(
        args.classes,
        args.per_class,
        args.dims,
        &args.separations,
        args.seed,
    )?;
    bundle.model = args.model.clone();
    bundle.epoch = args.epoch;
    bundle.split = split;

    ensure_dir(out)?;
    let mut layers = Vec::with_capacity(bundle.stack.len());
    for (i, (id, m)) in bundle.stack.layers().iter().enumerate() {
        let file = format!("layer_{i}.npy");
        write_atomic(out, &file, &encode_matrix(m))?;
        layers.push(ManifestLayer {
            id: id.clone(),
            path: file,
        });
    }
    write_atomic(out, "labels.npy", &encode_labels(&bundle.labels.to_original()))?;
    let manifest = Manifest {
        model: bundle.model.clone(),
        epoch: bundle.epoch,
        split: bundle.split,
        labels: "labels.npy".into(),
        layers,
    };
    let path = write_atomic(out, "manifest.json", manifest.to_json().as_bytes())?;
    println!("{}", path.display());
    Ok(())
}
