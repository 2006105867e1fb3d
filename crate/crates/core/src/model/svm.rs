use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, SparseVector};

pub const MODEL_HEADER: &str = "# motivmine-linear-model v1";

/// Per-class loss multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub retention: f64,
    pub dropout: f64,
}

impl ClassWeights {
    pub const UNIFORM: ClassWeights = ClassWeights {
        retention: 1.0,
        dropout: 1.0,
    };

    pub fn get(&self, label: Label) -> f64 {
        match label {
            Label::Retention => self.retention,
            Label::Dropout => self.dropout,
        }
    }
}

/// Balanced weights `n / (2 n_c)`.
pub fn class_weights(labels: &[Label]) -> Result<ClassWeights> {
    let n_dropout = labels.iter().filter(|l| l.is_dropout()).count();
    let n_retention = labels.len() - n_dropout;
    if n_dropout == 0 {
        return Err(Error::SingleClass("Retention"));
    }
    if n_retention == 0 {
        return Err(Error::SingleClass("Dropout"));
    }
    let n = labels.len() as f64;
    Ok(ClassWeights {
        retention: n / (2.0 * n_retention as f64),
        dropout: n / (2.0 * n_dropout as f64),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub epochs: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            epochs: 1000,
            tol: 1e-4,
            seed: 0,
        }
    }
}

/// Per-epoch optimizer record.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    /// Primal objective of the returned (best so far) iterate after each epoch.
    pub primal: Vec<f64>,
    /// Dual objective after each epoch.
    pub dual: Vec<f64>,
    /// Largest projected-gradient magnitude seen during each epoch.
    pub max_violation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub column_names: Vec<String>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub class_weights: ClassWeights,
    pub seed: u64,
    /// Scores at or above this are classified as dropout.
    pub threshold: f64,
    pub epochs: usize,
    pub objective: f64,
    pub converged: bool,
}

impl LinearModel {
    pub fn score(&self, x: &SparseVector) -> Result<f64> {
        if x.dimension() != self.weights.len() {
            return Err(Error::Dimension {
                expected: self.weights.len(),
                got: x.dimension(),
            });
        }
        Ok(x.dot_dense(&self.weights) + self.bias)
    }

    /// Returns the label and the raw margin `w.x + b`.
    pub fn predict(&self, x: &SparseVector) -> Result<(Label, f64)> {
        let s = self.score(x)?;
        let label = if s >= self.threshold { Label::Dropout } else { Label::Retention };
        Ok((label, s))
    }

    pub fn predict_dense(&self, x: &[f64]) -> Result<(Label, f64)> {
        self.predict(&SparseVector::from_dense(x))
    }

    pub fn predict_all(&self, x: &FeatureMatrix) -> Result<Vec<(Label, f64)>> {
        x.rows.iter().map(|r| self.predict(r)).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{MODEL_HEADER}").unwrap();
        writeln!(out, "C={:?}", self.c).unwrap();
        writeln!(out, "seed={}", self.seed).unwrap();
        writeln!(out, "threshold={:?}", self.threshold).unwrap();
        writeln!(out, "labels=0:Retention,1:Dropout").unwrap();
        writeln!(out, "class_weight_retention={:?}", self.class_weights.retention).unwrap();
        writeln!(out, "class_weight_dropout={:?}", self.class_weights.dropout).unwrap();
        writeln!(out, "epochs={}", self.epochs).unwrap();
        writeln!(out, "objective={:?}", self.objective).unwrap();
        writeln!(out, "converged={}", self.converged).unwrap();
        writeln!(out, "columns={}", self.weights.len()).unwrap();
        for (name, w) in self.column_names.iter().zip(&self.weights) {
            writeln!(out, "{name}\t{w:?}").unwrap();
        }
        writeln!(out, "bias\t{:?}", self.bias).unwrap();
        out
    }

    pub fn from_text(text: &str) -> Result<LinearModel> {
        let mut lines = text.lines();
        if lines.next() != Some(MODEL_HEADER) {
            return Err(Error::Format("not a motivmine linear model (missing header)".into()));
        }
        let mut field = |name: &str| -> Result<String> {
            let line = lines.next().unwrap_or_default();
            line.strip_prefix(name)
                .and_then(|r| r.strip_prefix('='))
                .map(str::to_string)
                .ok_or_else(|| Error::Format(format!("expected `{name}=`, found `{line}`")))
        };
        fn num<T: std::str::FromStr>(name: &str, v: String) -> Result<T> {
            v.parse().map_err(|_| Error::Format(format!("bad value `{v}` for `{name}`")))
        }
        let c: f64 = num("C", field("C")?)?;
        let seed: u64 = num("seed", field("seed")?)?;
        let threshold: f64 = num("threshold", field("threshold")?)?;
        let labels = field("labels")?;
        if labels != "0:Retention,1:Dropout" {
            return Err(Error::Format(format!("unsupported label map `{labels}`")));
        }
        let retention: f64 = num("class_weight_retention", field("class_weight_retention")?)?;
        let dropout: f64 = num("class_weight_dropout", field("class_weight_dropout")?)?;
        let epochs: usize = num("epochs", field("epochs")?)?;
        let objective: f64 = num("objective", field("objective")?)?;
        let converged: bool = num("converged", field("converged")?)?;
        let n: usize = num("columns", field("columns")?)?;
        let mut column_names = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let pair = |line: Option<&str>| -> Result<(String, f64)> {
            let line = line.ok_or_else(|| Error::Format("truncated model file".into()))?;
            let (name, value) = line
                .rsplit_once('\t')
                .ok_or_else(|| Error::Format(format!("bad weight line `{line}`")))?;
            Ok((name.to_string(), num(name, value.to_string())?))
        };
        for _ in 0..n {
            let (name, w) = pair(lines.next())?;
            column_names.push(name);
            weights.push(w);
        }
        let (name, bias) = pair(lines.next())?;
        if name != "bias" {
            return Err(Error::Format(format!("expected bias line, found `{name}`")));
        }
        Ok(LinearModel {
            column_names,
            weights,
            bias,
            c,
            class_weights: ClassWeights { retention, dropout },
            seed,
            threshold,
            epochs,
            objective,
            converged,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<LinearModel> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// `1/2 (|w|^2 + b^2) + C sum_i cw(y_i) max(0, 1 - y_i (w.x_i + b))`.
///
/// The bias is trained as the weight of a constant unit feature, so it is
/// regularized along with `w`.
pub fn primal_objective(
    weights: &[f64],
    bias: f64,
    x: &FeatureMatrix,
    y: &[Label],
    class_weights: ClassWeights,
    c: f64,
) -> f64 {
    let reg = 0.5 * (weights.iter().map(|w| w * w).sum::<f64>() + bias * bias);
    let loss: f64 = x
        .rows
        .iter()
        .zip(y)
        .map(|(row, &label)| {
            let margin = label.sign() * (row.dot_dense(weights) + bias);
            class_weights.get(label) * (1.0 - margin).max(0.0)
        })
        .sum();
    reg + c * loss
}

/// Gradient of [`primal_objective`] at a point where no margin equals 1.
/// Returns `(d/dw, d/db)`.
pub fn primal_gradient(
    weights: &[f64],
    bias: f64,
    x: &FeatureMatrix,
    y: &[Label],
    class_weights: ClassWeights,
    c: f64,
) -> (Vec<f64>, f64) {
    let mut gw = weights.to_vec();
    let mut gb = bias;
    for (row, &label) in x.rows.iter().zip(y) {
        let s = label.sign();
        if s * (row.dot_dense(weights) + bias) < 1.0 {
            let coef = c * class_weights.get(label) * s;
            for &(j, v) in row.entries() {
                gw[j] -= coef * v;
            }
            gb -= coef;
        }
    }
    (gw, gb)
}

fn check_inputs(x: &FeatureMatrix, y: &[Label], c: f64) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: y.len(),
        });
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("C must be positive, got {c}")));
    }
    let mut bad = vec![false; x.width()];
    for row in &x.rows {
        if row.dimension() != x.width() {
            return Err(Error::Dimension {
                expected: x.width(),
                got: row.dimension(),
            });
        }
        for &(j, v) in row.entries() {
            if !v.is_finite() {
                bad[j] = true;
            }
        }
    }
    let columns: Vec<String> = bad
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(j, _)| x.column_names[j].clone())
        .collect();
    if !columns.is_empty() {
        return Err(Error::NonFinite { columns });
    }
    Ok(())
}

/// Dual coordinate descent for the L1-loss (hinge) SVM with per-example
/// upper bounds `C * cw(y_i)`.
pub fn train(
    x: &FeatureMatrix,
    y: &[Label],
    class_weights: ClassWeights,
    params: &SvmParams,
) -> Result<(LinearModel, TrainingTrace)> {
    check_inputs(x, y, params.c)?;
    if !y.iter().any(|l| l.is_dropout()) {
        return Err(Error::SingleClass("Retention"));
    }
    if y.iter().all(|l| l.is_dropout()) {
        return Err(Error::SingleClass("Dropout"));
    }

    let n = x.len();
    let d = x.width();
    let sign: Vec<f64> = y.iter().map(|l| l.sign()).collect();
    let upper: Vec<f64> = y.iter().map(|&l| params.c * class_weights.get(l)).collect();
    // Diagonal of the augmented Gram matrix (constant bias feature included).
    let q_diag: Vec<f64> = x.rows.iter().map(|r| r.norm_squared() + 1.0).collect();

    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut best_w = w.clone();
    let mut best_b = b;
    let mut best_obj = primal_objective(&w, b, x, y, class_weights, params.c);
    let mut trace = TrainingTrace::default();
    let mut converged = false;

    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        let mut max_violation: f64 = 0.0;
        for &i in &order {
            let row = &x.rows[i];
            let g = sign[i] * (row.dot_dense(&w) + b) - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] >= upper[i] {
                g.max(0.0)
            } else {
                g
            };
            max_violation = max_violation.max(pg.abs());
            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - g / q_diag[i]).clamp(0.0, upper[i]);
                let delta = (alpha[i] - old) * sign[i];
                for &(j, v) in row.entries() {
                    w[j] += delta * v;
                }
                b += delta;
            }
        }

        let obj = primal_objective(&w, b, x, y, class_weights, params.c);
        if obj < best_obj {
            best_obj = obj;
            best_w.clone_from(&w);
            best_b = b;
        }
        let norm_sq = w.iter().map(|v| v * v).sum::<f64>() + b * b;
        trace.dual.push(alpha.iter().sum::<f64>() - 0.5 * norm_sq);
        trace.primal.push(best_obj);
        trace.max_violation.push(max_violation);
        if max_violation < params.tol {
            converged = true;
            break;
        }
    }
    if !best_obj.is_finite() {
        return Err(Error::Numerical("SVM objective is not finite".into()));
    }

    let model = LinearModel {
        column_names: x.column_names.clone(),
        weights: best_w,
        bias: best_b,
        c: params.c,
        class_weights,
        seed: params.seed,
        threshold: 0.0,
        epochs: trace.primal.len(),
        objective: best_obj,
        converged,
    };
    Ok((model, trace))
}

/// Largest-magnitude coefficients; positive values point toward dropout.
/// Ties are broken by column name.
pub fn top_coefficients(model: &LinearModel, n: usize) -> Vec<(String, f64)> {
    let mut ranked: Vec<(String, f64)> = model
        .column_names
        .iter()
        .cloned()
        .zip(model.weights.iter().copied())
        .collect();
    ranked.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(n);
    ranked
}
