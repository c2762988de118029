use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cache::FeatureMatrix;
use super::kernel::KernelSpec;
use super::model::{project_dataset, train_matrix, SvmModel, TrainConfig};
use crate::error::{Error, Result};
use crate::qcore::PauliIndex;
use crate::sampling::LabeledDataset;

pub const DEFAULT_C_GRID: [f64; 4] = [0.1, 1.0, 10.0, 100.0];
pub const DEFAULT_GAMMA_GRID: [f64; 4] = [0.01, 1.0 / 63.0, 0.1, 1.0];

pub fn default_grid() -> Vec<(f64, f64)> {
    DEFAULT_C_GRID
        .iter()
        .flat_map(|&c| DEFAULT_GAMMA_GRID.iter().map(move |&g| (c, g)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub c: f64,
    pub gamma: f64,
    pub val_correct: usize,
    pub val_accuracy: f64,
}

#[derive(Clone, Debug)]
pub struct TuneResult {
    pub best_c: f64,
    pub best_gamma: f64,
    pub best_val_accuracy: f64,
    pub cells: Vec<GridCell>,
    /// Model trained at the winning cell, with its validation accuracy recorded.
    pub model: SvmModel,
}

/// Grid search by validation accuracy. Ties go to the smaller C, then the
/// smaller gamma. `template` supplies the kernel kind, degree and coef0;
/// `base` supplies the solver settings.
pub fn tune(
    train: &LabeledDataset,
    val: &LabeledDataset,
    grid: &[(f64, f64)],
    template: KernelSpec,
    base: &TrainConfig,
    active: &[PauliIndex],
    seed: u64,
) -> Result<TuneResult> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("hyperparameter grid is empty".into()));
    }
    let xt = project_dataset(train, active);
    let xv = project_dataset(val, active);
    tune_matrix(
        train.kind.as_str(),
        (&xt, &train.labels()),
        (&xv, &val.labels()),
        grid,
        template,
        base,
        active,
        seed,
    )
}

#[allow(clippy::too_many_arguments)]
pub fn tune_matrix(
    kind: &str,
    train: (&FeatureMatrix, &[u8]),
    val: (&FeatureMatrix, &[u8]),
    grid: &[(f64, f64)],
    template: KernelSpec,
    base: &TrainConfig,
    active: &[PauliIndex],
    seed: u64,
) -> Result<TuneResult> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("hyperparameter grid is empty".into()));
    }
    let threads = rayon::current_num_threads().clamp(1, grid.len());
    let outcomes: Vec<Result<(GridCell, SvmModel)>> = grid
        .par_iter()
        .map(|&(c, gamma)| {
            let cfg = TrainConfig {
                c,
                kernel: template.with_gamma(gamma)?,
                cache_bytes: base.cache_bytes / threads,
                ..*base
            };
            let model = train_matrix(kind, train.0, train.1, active, &cfg, seed)?;
            let scores = model.decision_values(val.0)?;
            let val_correct = scores
                .iter()
                .zip(val.1)
                .filter(|(&s, &l)| u8::from(s > 0.0) == l)
                .count();
            let val_accuracy = val_correct as f64 / val.1.len().max(1) as f64;
            Ok((
                GridCell {
                    c,
                    gamma,
                    val_correct,
                    val_accuracy,
                },
                model,
            ))
        })
        .collect();

    let mut cells = Vec::with_capacity(grid.len());
    let mut best: Option<(GridCell, SvmModel)> = None;
    for outcome in outcomes {
        let (cell, model) = outcome?;
        cells.push(cell.clone());
        let better = match &best {
            None => true,
            Some((b, _)) => {
                cell.val_correct > b.val_correct
                    || (cell.val_correct == b.val_correct
                        && (cell.c < b.c || (cell.c == b.c && cell.gamma < b.gamma)))
            }
        };
        if better {
            best = Some((cell, model));
        }
    }
    let (cell, mut model) = best.expect("grid is non-empty");
    model.meta.val_accuracy = Some(cell.val_accuracy);
    Ok(TuneResult {
        best_c: cell.c,
        best_gamma: cell.gamma,
        best_val_accuracy: cell.val_accuracy,
        cells,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(n: usize) -> Vec<PauliIndex> {
        (1..=n).map(|f| PauliIndex::new(f).unwrap()).collect()
    }

    fn blobs() -> (FeatureMatrix, Vec<u8>) {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let s = if i % 2 == 0 { -1.0 } else { 1.0 };
                vec![s + 0.1 * (i as f64).sin(), 0.1 * (i as f64 * 1.7).cos()]
            })
            .collect();
        let labels = (0..40).map(|i| (i % 2) as u8).collect();
        (FeatureMatrix::new(&rows), labels)
    }

    fn run(grid: &[(f64, f64)]) -> Result<TuneResult> {
        let (x, y) = blobs();
        let base = TrainConfig::new(1.0, KernelSpec::rbf(1.0).unwrap());
        tune_matrix("TEST", (&x, &y), (&x, &y), grid, KernelSpec::rbf(1.0).unwrap(), &base, &idx(2), 0)
    }

    #[test]
    fn single_cell() {
        let r = run(&[(10.0, 0.1)]).unwrap();
        assert_eq!((r.best_c, r.best_gamma), (10.0, 0.1));
        assert_eq!(r.model.meta.val_accuracy, Some(1.0));
    }

    #[test]
    fn ties_prefer_smaller_c() {
        // both cells separate the blobs perfectly
        let r = run(&[(10.0, 0.1), (1.0, 0.1)]).unwrap();
        assert_eq!(r.cells[0].val_correct, r.cells[1].val_correct);
        assert_eq!((r.best_c, r.best_gamma), (1.0, 0.1));
        let r = run(&[(1.0, 1.0), (1.0, 0.1)]).unwrap();
        assert_eq!(r.best_gamma, 0.1);
    }

    #[test]
    fn strict_winner() {
        // labels that only a narrow kernel can fit
        let rows: Vec<Vec<f64>> = (0..24).map(|i| vec![i as f64 * 0.1]).collect();
        let y: Vec<u8> = (0..24).map(|i| ((i / 3) % 2) as u8).collect();
        let x = FeatureMatrix::new(&rows);
        let base = TrainConfig::new(1.0, KernelSpec::rbf(1.0).unwrap());
        let r = tune_matrix(
            "TEST",
            (&x, &y),
            (&x, &y),
            &[(100.0, 0.01), (100.0, 100.0)],
            KernelSpec::rbf(1.0).unwrap(),
            &base,
            &idx(1),
            0,
        )
        .unwrap();
        assert!(r.cells[1].val_correct > r.cells[0].val_correct);
        assert_eq!(r.best_gamma, 100.0);
    }

    #[test]
    fn empty_grid() {
        assert!(matches!(run(&[]), Err(Error::InvalidArgument(_))));
    }
}
