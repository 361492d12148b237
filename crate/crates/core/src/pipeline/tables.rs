use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::Composition;
use crate::cluster::{BenchmarkSelection, EigengapProfile, SigmaStatus};
use crate::embedding::Embedding2D;
use crate::error::{Error, Result};
use crate::performance::{PerformancePoint, N_PARAMS};

/// `person_id,stroke_index,cluster_id[,subcluster_id]`
pub fn write_assignments<W: Write>(
    points: &[PerformancePoint],
    assignments: &[usize],
    subclusters: Option<&[Option<usize>]>,
    writer: W,
) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["person_id", "stroke_index", "cluster_id"];
    if subclusters.is_some() {
        header.push("subcluster_id");
    }
    wtr.write_record(&header)?;
    for (i, (p, a)) in points.iter().zip(assignments).enumerate() {
        let mut rec = vec![p.person_id.clone(), p.stroke_index.to_string(), a.to_string()];
        if let Some(sub) = subclusters {
            rec.push(sub[i].map(|s| s.to_string()).unwrap_or_default());
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush()
}

/// `cluster_index,c1,...,c5,distance,benchmark`
pub fn write_centroid_table<W: Write>(
    centroids: &DMatrix<f64>,
    selection: &BenchmarkSelection,
    writer: W,
) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["cluster_index".to_string()];
    header.extend((1..=centroids.ncols()).map(|c| format!("c{c}")));
    header.push("distance".into());
    header.push("benchmark".into());
    wtr.write_record(&header)?;
    for (q, row) in centroids.row_iter().enumerate() {
        let mut rec = vec![q.to_string()];
        rec.extend(row.iter().map(f64::to_string));
        rec.push(selection.distances[q].to_string());
        rec.push(u8::from(q == selection.benchmark_index).to_string());
        wtr.write_record(&rec)?;
    }
    wtr.flush()
}

/// `person_id,cluster0,...,total`
pub fn write_composition<W: Write>(comp: &Composition, writer: W) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let k = comp.counts.first().map_or(0, Vec::len);
    let mut header = vec!["person_id".to_string()];
    header.extend((0..k).map(|q| format!("cluster{q}")));
    header.push("total".into());
    wtr.write_record(&header)?;
    for (person, row) in comp.people.iter().zip(&comp.counts) {
        let mut rec = vec![person.clone()];
        rec.extend(row.iter().map(usize::to_string));
        rec.push(row.iter().sum::<usize>().to_string());
        wtr.write_record(&rec)?;
    }
    wtr.flush()
}

fn status_name(s: &SigmaStatus) -> &'static str {
    match s {
        SigmaStatus::Voting => "voting",
        SigmaStatus::BelowResolution => "below_resolution",
        SigmaStatus::Degenerate { .. } => "degenerate",
    }
}

/// `sigma,status,gap1,...,gap<k_max>,winner`; degenerate rows leave gaps empty.
pub fn write_eigengaps<W: Write>(profile: &EigengapProfile, k_max: usize, writer: W) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["sigma".to_string(), "status".to_string()];
    header.extend((1..=k_max).map(|k| format!("gap{k}")));
    header.push("winner".into());
    wtr.write_record(&header)?;
    for e in &profile.entries {
        let mut rec = vec![e.sigma.to_string(), status_name(&e.status).to_string()];
        rec.extend((0..k_max).map(|i| e.gaps.get(i).map(f64::to_string).unwrap_or_default()));
        rec.push(e.winner.map(|w| w.to_string()).unwrap_or_default());
        wtr.write_record(&rec)?;
    }
    wtr.flush()
}

/// `person_id,stroke_index,cluster_id,tsne_x,tsne_y`
pub fn write_embedding<W: Write>(
    points: &[PerformancePoint],
    assignments: &[usize],
    embedding: &Embedding2D,
    writer: W,
) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["person_id", "stroke_index", "cluster_id", "tsne_x", "tsne_y"])?;
    for ((p, a), c) in points.iter().zip(assignments).zip(&embedding.coords) {
        wtr.write_record([
            p.person_id.clone(),
            p.stroke_index.to_string(),
            a.to_string(),
            c[0].to_string(),
            c[1].to_string(),
        ])?;
    }
    wtr.flush()
}

/// Reads rows in the `performance.csv` layout.
pub fn read_performance_points<R: Read>(reader: R, source: &Path) -> Result<Vec<PerformancePoint>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| Error::Parse {
            path: source.to_path_buf(),
            line,
            message: e.to_string(),
        })?;
        if rec.len() != 2 + N_PARAMS {
            return Err(Error::Parse {
                path: source.to_path_buf(),
                line,
                message: format!("expected {} fields, got {}", 2 + N_PARAMS, rec.len()),
            });
        }
        let field_err = |message: String| Error::Parse {
            path: source.to_path_buf(),
            line,
            message,
        };
        let stroke_index = rec[1].trim().parse().map_err(|e| field_err(format!("stroke_index: {e}")))?;
        let mut scores = [0.0f64; N_PARAMS];
        for (j, s) in scores.iter_mut().enumerate() {
            *s = rec[2 + j].trim().parse().map_err(|e| field_err(format!("s{}: {e}", j + 1)))?;
            if !s.is_finite() {
                return Err(field_err(format!("s{} is not finite", j + 1)));
            }
        }
        out.push(PerformancePoint {
            person_id: rec[0].to_string(),
            stroke_index,
            scores,
        });
    }
    Ok(out)
}
