use std::f64::consts::PI;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use spectral_svar::graph::{d_separated, enumerate_treks, t_separation_min, GraphSpec, Trek};
use spectral_svar::identify::{
    discover_cpdag, dsep_oracle, identify_all, identify_sampled_with, replay, spectral_oracle, Cpdag,
    IdentificationCertificate, IdentifyError,
};
use spectral_svar::simulate::{
    empirical_ci_test, estimate_spectrum, simulate_series, SeriesSample, SimulateError, SpectrumEstimate,
    SpectrumEstimateFile,
};
use spectral_svar::svar::{generic_rank, observed_spectrum, spectrum, ParamsSpec, SpectrumBundle, SvarParams};
use spectral_svar::{ProcessGraph, RatMatrix, TimeSeriesGraph, VertexSet};

use crate::report::{CliError, Run, EXIT_ESTIMATION, EXIT_SINGULAR};
use crate::{Command, Query, Sets};

pub fn execute(cmd: &Command, run: &mut Run) -> Result<Value, CliError> {
    match cmd {
        Command::Validate { graph, params } => validate(run, graph, params.as_deref()),
        Command::Query { query, graph, sets, seed, trials } => query_cmd(run, *query, graph, sets, *seed, *trials),
        Command::Spectrum { graph, params, out } => spectrum_cmd(run, graph, params, out),
        Command::Identify { graph, params, spectrum, seed, retries, magnitude, out } => {
            identify_cmd(run, graph, params.as_deref(), spectrum.as_deref(), *seed, *retries, *magnitude, out.as_deref())
        }
        Command::Replay { graph, certificate, params, spectrum, out } => {
            replay_cmd(run, graph, certificate, params.as_deref(), spectrum.as_deref(), out.as_deref())
        }
        Command::Simulate { graph, params, length, burn_in, seed, out } => {
            simulate_cmd(run, graph, params, *length, *burn_in, *seed, out)
        }
        Command::Estimate { series, frequencies, segments, overlap, out } => {
            estimate_cmd(run, series, frequencies, *segments, *overlap, out)
        }
        Command::Discover { graph, params, spectrum, threshold, out } => {
            discover_cmd(run, graph.as_deref(), params.as_deref(), spectrum.as_deref(), *threshold, out.as_deref())
        }
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(bytes: &[u8], path: &Path) -> Result<T, CliError> {
    serde_json::from_slice(bytes).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::new(1, e))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn load_graph(run: &mut Run, path: &Path) -> Result<TimeSeriesGraph, CliError> {
    let bytes = run.read("graph", path)?;
    let spec: GraphSpec = parse_json(&bytes, path)?;
    TimeSeriesGraph::from_spec(&spec).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

fn load_params(run: &mut Run, tsg: &TimeSeriesGraph, path: &Path) -> Result<SvarParams, CliError> {
    let bytes = run.read("params", path)?;
    let spec: ParamsSpec = parse_json(&bytes, path)?;
    SvarParams::from_spec(tsg, &spec).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SpectrumFile {
    Bundle(SpectrumBundle),
    Matrix(RatMatrix),
}

/// A spectrum written by `spectrum`, or a bare labelled matrix.
fn load_spectrum(run: &mut Run, path: &Path) -> Result<RatMatrix, CliError> {
    let bytes = run.read("spectrum", path)?;
    match parse_json(&bytes, path)? {
        SpectrumFile::Bundle(b) => Ok(b.s),
        SpectrumFile::Matrix(m) => Ok(m),
    }
}

fn identify_error(e: IdentifyError) -> CliError {
    match e {
        IdentifyError::Singular(_) | IdentifyError::ZeroInstrument { .. } => CliError::new(EXIT_SINGULAR, e),
        IdentifyError::Graph(_)
        | IdentifyError::Svar(_)
        | IdentifyError::MissingLabel(_)
        | IdentifyError::MissingPrerequisite { .. }
        | IdentifyError::CriterionFails { .. }
        | IdentifyError::InvalidCertificate(_) => CliError::validation(e),
        e => CliError::new(1, e),
    }
}

fn simulate_error(e: SimulateError) -> CliError {
    match e {
        SimulateError::InvalidSegmentation(_)
        | SimulateError::InvalidFrequencies(_)
        | SimulateError::IllConditioned { .. }
        | SimulateError::BadSets => CliError::new(EXIT_ESTIMATION, e),
        SimulateError::Pole(_) => CliError::new(1, e),
        e => CliError::validation(e),
    }
}

fn set(g: &ProcessGraph, labels: &[String]) -> Result<VertexSet, CliError> {
    g.set_of(labels).map_err(CliError::validation)
}

fn validate(run: &mut Run, graph: &Path, params: Option<&Path>) -> Result<Value, CliError> {
    let tsg = load_graph(run, graph)?;
    if let Some(p) = params {
        load_params(run, &tsg, p)?;
    }
    let g = tsg.graph();
    Ok(json!({
        "valid": true,
        "observed": g.observed_labels(),
        "latent": g.labels_of(g.latent()),
        "edges": g.edges().len(),
        "order": tsg.order(),
        "acyclic": g.is_acyclic(),
        "observed_cyclic": g.observed_cyclic(),
    }))
}

/// `source <- ... <- top -> ... -> target`.
fn format_trek(g: &ProcessGraph, t: &Trek) -> String {
    let mut s: Vec<&str> = t.left.iter().rev().map(|&v| g.label(v)).collect();
    let mut out = s.join(" <- ");
    s = t.right.iter().skip(1).map(|&v| g.label(v)).collect();
    for l in s {
        out.push_str(" -> ");
        out.push_str(l);
    }
    out
}

fn query_cmd(
    run: &mut Run,
    query: Query,
    graph: &Path,
    sets: &Sets,
    seed: Option<u64>,
    trials: usize,
) -> Result<Value, CliError> {
    let tsg = load_graph(run, graph)?;
    let g = tsg.graph();
    let (x, y, z) = (set(g, &sets.x)?, set(g, &sets.y)?, set(g, &sets.z)?);
    match query {
        Query::Dsep => {
            let sep = d_separated(g, x, y, z).map_err(CliError::validation)?;
            Ok(json!({ "d_separated": sep }))
        }
        Query::Tsep => {
            let t = t_separation_min(g, x, y).map_err(CliError::validation)?;
            Ok(json!({ "size": t.size, "zx": g.labels_of(t.zx), "zy": g.labels_of(t.zy) }))
        }
        Query::Rank => {
            let seed = seed.ok_or_else(|| CliError::validation("query rank samples parameters and needs --seed"))?;
            let trials = trials.max(1);
            run.seeds.extend((0..trials as u64).map(|i| seed.wrapping_add(i)));
            let rank = generic_rank(&tsg, x, y, trials, seed).map_err(CliError::validation)?;
            let tsep = t_separation_min(g, x, y).map_err(CliError::validation)?.size;
            if rank != tsep {
                run.warn(format!("generic rank {rank} differs from the minimal t-separation size {tsep}"));
            }
            Ok(json!({ "generic_rank": rank, "t_separation": tsep, "trials": trials }))
        }
        Query::Treks => {
            let mut listing = Vec::new();
            for a in x.iter() {
                for b in y.iter() {
                    let treks = enumerate_treks(g, a, b).map_err(CliError::validation)?;
                    listing.push(json!({
                        "from": g.label(a),
                        "to": g.label(b),
                        "treks": treks.iter().map(|t| format_trek(g, t)).collect::<Vec<_>>(),
                    }));
                }
            }
            Ok(json!({ "treks": listing }))
        }
    }
}

fn spectrum_cmd(run: &mut Run, graph: &Path, params: &Path, out: &Path) -> Result<Value, CliError> {
    let tsg = load_graph(run, graph)?;
    let p = load_params(run, &tsg, params)?;
    let bundle = spectrum(&tsg, &p).map_err(CliError::validation)?;
    write_json(out, &bundle)?;
    let nonzero = bundle.s.entries().iter().flatten().filter(|r| !r.is_zero()).count();
    Ok(json!({ "observed": bundle.s.row_labels(), "nonzero_entries": nonzero }))
}

fn summarize(cert: &IdentificationCertificate) -> Value {
    json!({
        "solved": cert.links().keys().map(|(a, b)| format!("{a} -> {b}")).collect::<Vec<_>>(),
        "unresolved_edges": cert.unresolved_edges.iter().map(|(a, b)| format!("{a} -> {b}")).collect::<Vec<_>>(),
        "steps": cert.steps.iter().map(|s| json!({ "vertex": s.vertex, "method": s.method })).collect::<Vec<_>>(),
    })
}

fn singular_warning(run: &mut Run, e: &IdentifyError) {
    if let IdentifyError::Singular(v) = e {
        run.warn(format!("the identification system for {v} is singular"));
    }
}

#[allow(clippy::too_many_arguments)]
fn identify_cmd(
    run: &mut Run,
    graph: &Path,
    params: Option<&Path>,
    spectrum_file: Option<&Path>,
    seed: Option<u64>,
    retries: usize,
    magnitude: u32,
    out: Option<&Path>,
) -> Result<Value, CliError> {
    let tsg = load_graph(run, graph)?;
    let g = tsg.graph();
    let mut extra = json!({});
    let cert = if let Some(seed) = seed {
        let tried: Vec<u64> = (0..=retries as u64).map(|i| seed.wrapping_add(i)).collect();
        match identify_sampled_with(&tsg, seed, retries, magnitude) {
            Ok(r) => {
                for s in &r.rejected_seeds {
                    run.warn(format!("parameters from seed {s} gave a singular system; resampled"));
                }
                run.seeds = r.rejected_seeds.clone();
                run.seeds.push(r.seed);
                extra = json!({ "seed_used": r.seed });
                r.certificate
            }
            Err(e) => {
                run.seeds = tried.clone();
                singular_warning(run, &e);
                let err = identify_error(e);
                return Err(CliError::new(err.code, format!("{} after {} attempts", err.message, tried.len())));
            }
        }
    } else {
        let s = match (params, spectrum_file) {
            (Some(p), _) => {
                let p = load_params(run, &tsg, p)?;
                observed_spectrum(&tsg, &p).map_err(CliError::validation)?
            }
            (None, Some(f)) => load_spectrum(run, f)?,
            (None, None) => return Err(CliError::validation("one of --params, --spectrum or --seed is required")),
        };
        identify_all(g, &s).map_err(|e| {
            singular_warning(run, &e);
            identify_error(e)
        })?
    };
    if let Some(out) = out {
        write_json(out, &cert)?;
    }
    let mut summary = summarize(&cert);
    summary.as_object_mut().unwrap().extend(extra.as_object().unwrap().clone());
    Ok(summary)
}

fn replay_cmd(
    run: &mut Run,
    graph: &Path,
    certificate: &Path,
    params: Option<&Path>,
    spectrum_file: Option<&Path>,
    out: Option<&Path>,
) -> Result<Value, CliError> {
    let tsg = load_graph(run, graph)?;
    let bytes = run.read("certificate", certificate)?;
    let cert: IdentificationCertificate = parse_json(&bytes, certificate)?;
    let s = match (params, spectrum_file) {
        (Some(p), _) => {
            let p = load_params(run, &tsg, p)?;
            observed_spectrum(&tsg, &p).map_err(CliError::validation)?
        }
        (None, Some(f)) => load_spectrum(run, f)?,
        (None, None) => return Err(CliError::validation("one of --params or --spectrum is required")),
    };
    let fresh = replay(tsg.graph(), &cert, &s).map_err(|e| {
        singular_warning(run, &e);
        identify_error(e)
    })?;
    if let Some(out) = out {
        write_json(out, &fresh)?;
    }
    Ok(summarize(&fresh))
}

fn simulate_cmd(
    run: &mut Run,
    graph: &Path,
    params: &Path,
    length: usize,
    burn_in: usize,
    seed: u64,
    out: &Path,
) -> Result<Value, CliError> {
    let tsg = load_graph(run, graph)?;
    let p = load_params(run, &tsg, params)?;
    run.seeds.push(seed);
    if length == 0 {
        return Err(CliError::validation("--length must be positive"));
    }
    let series = simulate_series(&tsg, &p, length, burn_in, seed).map_err(simulate_error)?;
    series.write_csv(BufWriter::new(File::create(out)?)).map_err(simulate_error)?;
    Ok(json!({ "rows": series.len(), "columns": series.labels }))
}

fn parse_frequencies(text: &str) -> Result<Vec<f64>, CliError> {
    if let Ok(k) = text.trim().parse::<usize>() {
        if k == 0 {
            return Err(CliError::new(EXIT_ESTIMATION, "at least one frequency is required"));
        }
        return Ok((0..k).map(|j| PI * (j as f64 + 0.5) / k as f64).collect());
    }
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| CliError::validation(format!("frequency {t:?}: {e}"))))
        .collect()
}

fn estimate_cmd(
    run: &mut Run,
    series: &Path,
    frequencies: &str,
    segments: usize,
    overlap: f64,
    out: &Path,
) -> Result<Value, CliError> {
    let bytes = run.read("series", series)?;
    let sample = SeriesSample::read_csv(&bytes[..]).map_err(simulate_error)?;
    let freqs = parse_frequencies(frequencies)?;
    let est = estimate_spectrum(&sample, &freqs, segments, overlap).map_err(simulate_error)?;
    write_json(out, &est.to_file())?;
    Ok(json!({
        "labels": est.labels,
        "frequencies": est.frequencies.len(),
        "segment_length": est.segment_length,
        "segments": est.segments,
    }))
}

fn empirical_cpdag(run: &mut Run, est: &SpectrumEstimate, threshold: f64) -> Cpdag {
    let labels = est.labels.clone();
    let mut warnings = Vec::new();
    let cpdag = discover_cpdag(&labels, |x, y, z| {
        let names = |s: &[usize]| s.iter().map(|&i| labels[i].as_str()).collect::<Vec<_>>();
        match empirical_ci_test(est, &names(x), &names(y), &names(z), threshold) {
            Ok(v) => v,
            Err(e) => {
                // an unusable conditioning block cannot support independence
                warnings.push(format!("{e}; treated {:?} and {:?} given {:?} as dependent", names(x), names(y), names(z)));
                false
            }
        }
    });
    for w in warnings {
        run.warn(w);
    }
    cpdag
}

fn discover_cmd(
    run: &mut Run,
    graph: Option<&Path>,
    params: Option<&Path>,
    spectrum_file: Option<&Path>,
    threshold: f64,
    out: Option<&Path>,
) -> Result<Value, CliError> {
    let cpdag = match (graph, spectrum_file) {
        (_, Some(f)) => {
            if !(threshold > 0.0 && threshold <= 1.0) {
                return Err(CliError::new(EXIT_ESTIMATION, format!("threshold {threshold} is outside (0, 1]")));
            }
            let bytes = run.read("spectrum", f)?;
            let file: SpectrumEstimateFile = parse_json(&bytes, f)?;
            let est = SpectrumEstimate::from_file(file).map_err(simulate_error)?;
            empirical_cpdag(run, &est, threshold)
        }
        (Some(gp), None) => {
            let tsg = load_graph(run, gp)?;
            let g = tsg.graph();
            let labels = g.observed_labels().to_vec();
            match params {
                Some(p) => {
                    let p = load_params(run, &tsg, p)?;
                    let s = observed_spectrum(&tsg, &p).map_err(CliError::validation)?;
                    discover_cpdag(&labels, spectral_oracle(&s))
                }
                None => discover_cpdag(&labels, dsep_oracle(g)),
            }
        }
        (None, None) => return Err(CliError::validation("one of --graph or --spectrum is required")),
    };
    for c in &cpdag.conflicts {
        run.warn(format!("orientation conflict: {c}"));
    }
    if let Some(out) = out {
        write_json(out, &cpdag)?;
    }
    let (directed, undirected) = cpdag.edge_labels();
    Ok(json!({ "directed": directed, "undirected": undirected }))
}
