//! Browser bindings for the surface pipeline.
//!
//! Three operations back the demo page: build a surface mesh (with its
//! verification report), export the same mesh as OBJ text, and inspect the
//! points of a time-scale spec. All three take the library's JSON config
//! forms, so the page and the CLI speak the same language.

use wasm_bindgen::prelude::*;

use ksurf::pipeline::{self, PipelineConfig, RunOptions};
use ksurf::surface::{gauss_curvature_dot, KNode};
use ksurf::timescale::{construct_timescale, TimeScaleSpec};

fn err_str(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn wasm_options() -> RunOptions {
    RunOptions {
        verify: true,
        export: false,
        rng_seed: 0,
        algebra_cases: 500,
        threads: 1,
    }
}

/// Mesh plus verification report for one pipeline run.
#[wasm_bindgen]
pub struct SurfaceMesh {
    n1: u32,
    n2: u32,
    positions: Vec<f64>,
    normals: Vec<f64>,
    quads: Vec<u32>,
    report_json: String,
    pass: bool,
}

#[wasm_bindgen]
impl SurfaceMesh {
    pub fn rows(&self) -> u32 {
        self.n1
    }

    pub fn cols(&self) -> u32 {
        self.n2
    }

    /// Node positions, row-major, xyz-interleaved.
    pub fn positions(&self) -> Vec<f64> {
        self.positions.clone()
    }

    /// Unit normals, same layout as positions.
    pub fn normals(&self) -> Vec<f64> {
        self.normals.clone()
    }

    /// Quad faces as 4 node indices each; degenerate cells omitted.
    pub fn quads(&self) -> Vec<u32> {
        self.quads.clone()
    }

    /// Full verification report (same schema the CLI writes).
    pub fn report_json(&self) -> String {
        self.report_json.clone()
    }

    pub fn pass(&self) -> bool {
        self.pass
    }
}

fn run_config(config_json: &str) -> Result<(PipelineConfig, pipeline::PipelineOutcome), String> {
    let mut config = PipelineConfig::from_json(config_json).map_err(err_str)?;
    config.outputs = Default::default(); // no filesystem in the browser
    let outcome = pipeline::run(&config, &wasm_options()).map_err(err_str)?;
    Ok((config, outcome))
}

fn last_surface(config: &PipelineConfig) -> Result<(ksurf::backlund::ChainResult, usize), String> {
    let t1 = construct_timescale(&config.timescale1).map_err(err_str)?;
    let t2 = construct_timescale(&config.timescale2).map_err(err_str)?;
    let domain = std::sync::Arc::new(ksurf::timescale::GridDomain::new(t1, t2));
    let cf = ksurf::laxpair::CoefficientField::vacuum(domain);
    let steps = config.darboux_params().map_err(err_str)?;
    let chain = ksurf::backlund::run_chain(&cf, &steps, config.lambda).map_err(err_str)?;
    let last = chain.surfaces.len() - 1;
    Ok((chain, last))
}

/// Run the pipeline for a config and return the final surface as a mesh,
/// along with the full verification report.
#[wasm_bindgen]
pub fn build_surface(config_json: &str) -> Result<SurfaceMesh, String> {
    let (config, outcome) = run_config(config_json)?;
    let (chain, last) = last_surface(&config)?;
    let surface = &chain.surfaces[last];
    let d = surface.domain();
    let (n1, n2) = (d.n1(), d.n2());

    let mut positions = Vec::with_capacity(n1 * n2 * 3);
    let mut normals = Vec::with_capacity(n1 * n2 * 3);
    for i in 0..n1 {
        for j in 0..n2 {
            let r = surface.r.get(i, j);
            let n = surface.n.get(i, j);
            positions.extend_from_slice(&[r.x, r.y, r.z]);
            normals.extend_from_slice(&[n.x, n.y, n.z]);
        }
    }
    let k = gauss_curvature_dot(surface);
    let mut quads = Vec::new();
    for i in 0..n1 - 1 {
        for j in 0..n2 - 1 {
            if matches!(k.get(i, j), KNode::Degenerate) {
                continue;
            }
            quads.extend_from_slice(&[
                (i * n2 + j) as u32,
                ((i + 1) * n2 + j) as u32,
                ((i + 1) * n2 + j + 1) as u32,
                (i * n2 + j + 1) as u32,
            ]);
        }
    }
    let report_json = serde_json::to_string(&outcome.report).map_err(err_str)?;
    Ok(SurfaceMesh {
        n1: n1 as u32,
        n2: n2 as u32,
        positions,
        normals,
        quads,
        report_json,
        pass: outcome.report.pass,
    })
}

/// Same surface as OBJ text, for download.
#[wasm_bindgen]
pub fn export_obj(config_json: &str) -> Result<String, String> {
    let config = PipelineConfig::from_json(config_json).map_err(err_str)?;
    let (chain, last) = last_surface(&config)?;
    let mut buf = Vec::new();
    ksurf::obj::export_obj(&chain.surfaces[last], &mut buf).map_err(err_str)?;
    String::from_utf8(buf).map_err(err_str)
}

/// Points of a time-scale spec, for the scale inspector strip.
#[wasm_bindgen]
pub fn timescale_points(spec_json: &str) -> Result<Vec<f64>, String> {
    let spec: TimeScaleSpec = serde_json::from_str(spec_json).map_err(err_str)?;
    let ts = construct_timescale(&spec).map_err(err_str)?;
    Ok(ts.points().to_vec())
}
