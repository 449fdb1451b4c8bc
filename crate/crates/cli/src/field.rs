use gazekit::config::Config;
use gazekit::gazefield::{self, field_for_grid};
use gazekit::geometry::make_grid;
use gazekit::numfmt::sig6;
use gazekit::{GazeBiasField, NormalizedBBox, TokenGrid};

use crate::{Failure, Format};

fn grid(cfg: &Config) -> Result<TokenGrid, Failure> {
    make_grid(cfg.grid_rows, cfg.grid_cols).map_err(|e| Failure::Invalid(e.to_string()))
}

fn json_row(values: &[f64]) -> String {
    let cells: Vec<String> = values.iter().map(|v| sig6(*v)).collect();
    format!("[{}]", cells.join(","))
}

fn field_json(f: &GazeBiasField) -> String {
    let boxes: Vec<String> = f.boxes().iter().map(|b| json_row(&b.to_array())).collect();
    let rows: Vec<String> = f.values().chunks(f.cols()).map(json_row).collect();
    format!(
        "{{\"rows\":{},\"cols\":{},\"alpha_s\":{},\"sigma\":{},\"boxes\":[{}],\"values\":[{}]}}\n",
        f.rows(),
        f.cols(),
        sig6(f.params().alpha_s()),
        sig6(f.params().sigma()),
        boxes.join(","),
        rows.join(",")
    )
}

pub fn biasfield(
    cfg: &Config,
    boxes: &[NormalizedBBox],
    format: Format,
) -> Result<Vec<u8>, Failure> {
    let field = field_for_grid(&grid(cfg)?, boxes, &cfg.gaze);
    Ok(match format {
        Format::Csv => field.to_csv().into_bytes(),
        Format::Pgm => field.to_pgm(),
        Format::Json => field_json(&field).into_bytes(),
    })
}

pub fn sweep(
    cfg: &Config,
    boxes: &[NormalizedBBox],
    alphas: &[f64],
    format: Format,
) -> Result<String, Failure> {
    if let Some(a) = alphas.iter().find(|a| a.is_nan() || **a < 0.0) {
        return Err(Failure::Invalid(format!(
            "alpha_s must be non-negative, got {a}"
        )));
    }
    let rows = gazefield::sweep(&grid(cfg)?, boxes, cfg.gaze.sigma(), alphas)
        .map_err(|e| Failure::Invalid(e.to_string()))?;
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str("alpha_s,min_bias_outside,mean_bias_outside,suppressed_fraction\n");
            for r in &rows {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    sig6(r.alpha_s),
                    sig6(r.min_bias_outside),
                    sig6(r.mean_bias_outside),
                    sig6(r.suppressed_fraction)
                ));
            }
        }
        Format::Json => {
            for r in &rows {
                out.push_str(&format!(
                    "{{\"alpha_s\":{},\"min_bias_outside\":{},\"mean_bias_outside\":{},\"suppressed_fraction\":{}}}\n",
                    sig6(r.alpha_s),
                    sig6(r.min_bias_outside),
                    sig6(r.mean_bias_outside),
                    sig6(r.suppressed_fraction)
                ));
            }
        }
        Format::Pgm => return Err(Failure::Invalid("sweep output is csv or json".into())),
    }
    Ok(out)
}
