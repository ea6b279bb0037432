//! Parameter checkpoints: versioned header plus flat weight array, and the
//! loss history CSV.

use super::{AggregatorConfig, AggregatorParams, HeadKind, PositionalEncoding};
use crate::dataset::DatasetError;
use crate::util::atomic_write;
use std::fmt::Write as _;
use std::path::Path;

pub const CHECKPOINT_VERSION: &str = "vidsum checkpoint v1";

/// Persist params plus the inference-relevant config fields.
pub fn save_checkpoint(
    path: &Path,
    params: &AggregatorParams,
    config: &AggregatorConfig,
) -> Result<(), DatasetError> {
    let mut s = String::new();
    let _ = writeln!(s, "{CHECKPOINT_VERSION}");
    let _ = writeln!(s, "d {}", params.hidden_width);
    let _ = writeln!(s, "m {}", config.projection_width);
    let _ = writeln!(s, "blocks {}", config.num_blocks);
    let _ = writeln!(s, "heads {}", config.num_heads);
    let _ = writeln!(s, "use_query {}", config.use_query);
    let _ = writeln!(s, "use_answer {}", config.use_answer);
    let _ = writeln!(
        s,
        "positional {}",
        match config.positional_encoding {
            PositionalEncoding::None => "none",
            PositionalEncoding::Sinusoidal => "sinusoidal",
        }
    );
    let _ = writeln!(
        s,
        "head {}",
        match config.head {
            HeadKind::Attention => "attention",
            HeadKind::MlpOnly => "mlp-only",
        }
    );
    let _ = writeln!(s, "pool_hidden {}", config.pool_hidden);
    s.push_str("---\n");
    for v in params.flatten() {
        let _ = writeln!(s, "{v}");
    }
    atomic_write(path, s.as_bytes()).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Load a checkpoint. The returned config carries the stored inference
/// fields; training fields keep their defaults.
pub fn load_checkpoint(path: &Path) -> Result<(AggregatorParams, AggregatorConfig), DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let schema_err = |line: usize, message: String| DatasetError::Schema {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();

    match lines.next() {
        Some((_, v)) if v == CHECKPOINT_VERSION => {}
        other => {
            return Err(DatasetError::Version {
                path: path.to_path_buf(),
                expected: CHECKPOINT_VERSION.into(),
                found: other.map(|(_, v)| v).unwrap_or("").into(),
            })
        }
    }

    let mut config = AggregatorConfig::default();
    let mut d: Option<usize> = None;
    for (no, line) in lines.by_ref() {
        if line == "---" {
            break;
        }
        let (key, value) = line
            .split_once(' ')
            .ok_or_else(|| schema_err(no + 1, format!("bad header line {line:?}")))?;
        let bad = |what: &str| schema_err(no + 1, format!("cannot parse {what} from {value:?}"));
        match key {
            "d" => d = Some(value.parse().map_err(|_| bad("hidden width"))?),
            "m" => config.projection_width = value.parse().map_err(|_| bad("projection width"))?,
            "blocks" => config.num_blocks = value.parse().map_err(|_| bad("block count"))?,
            "heads" => config.num_heads = value.parse().map_err(|_| bad("head count"))?,
            "use_query" => config.use_query = value.parse().map_err(|_| bad("flag"))?,
            "use_answer" => config.use_answer = value.parse().map_err(|_| bad("flag"))?,
            "positional" => {
                config.positional_encoding = match value {
                    "none" => PositionalEncoding::None,
                    "sinusoidal" => PositionalEncoding::Sinusoidal,
                    _ => return Err(bad("positional encoding")),
                }
            }
            "head" => {
                config.head = match value {
                    "attention" => HeadKind::Attention,
                    "mlp-only" => HeadKind::MlpOnly,
                    _ => return Err(bad("head kind")),
                }
            }
            "pool_hidden" => config.pool_hidden = value.parse().map_err(|_| bad("flag"))?,
            _ => return Err(schema_err(no + 1, format!("unknown header key {key:?}"))),
        }
    }
    let d = d.ok_or_else(|| schema_err(0, "missing 'd' header".into()))?;

    let mut params = AggregatorParams::init(&config, d).map_err(|e| DatasetError::Schema {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })?;
    let expected = params.param_count();
    let mut flat = Vec::with_capacity(expected);
    for (no, line) in lines {
        let v: f64 = line
            .trim()
            .parse()
            .map_err(|_| schema_err(no + 1, format!("bad weight {line:?}")))?;
        flat.push(v);
    }
    if flat.len() != expected {
        return Err(schema_err(
            0,
            format!("{} weights but shapes need {expected}", flat.len()),
        ));
    }
    params.load_flat(&flat);
    Ok((params, config))
}

/// Loss history as `epoch,mse` CSV.
pub fn save_loss_history(path: &Path, history: &[f64]) -> Result<(), DatasetError> {
    let mut s = String::from("epoch,mse\n");
    for (epoch, l) in history.iter().enumerate() {
        let _ = writeln!(s, "{epoch},{l}");
    }
    atomic_write(path, s.as_bytes()).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}
