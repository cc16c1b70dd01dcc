use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::dr::{covariance_blocks, fit_pca_prefixes, fit_prefixes, CovarianceBlocks, FitConfig, Method, ProjectionPair};
use crate::error::{Error, Result};
use crate::experiments::grid::{Axis, GridResult, Rc0Cell, Status, TrialRecord};
use crate::experiments::spec::{NoiseFloorSpec, SweepSpec};
use crate::experiments::ExperimentKind;
use crate::metrics::{rc, rc_prime, Rc0Cache, Rc0Key};
use crate::model::{generate_dataset_with, params_from_snr, sample_quenched, ModelParams, PairedDataset, Standardize};
use crate::rng::derive_seed;

/// Run `f` on a dedicated pool of `workers` threads (all cores for `None`).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(Error::invalid("worker count must be at least 1"));
        }
        b = b.num_threads(n);
    }
    let pool = b.build().map_err(|e| Error::Inconsistent(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Fit configurations that differ only in `k`, fitted once at the largest.
#[derive(Debug, Clone)]
pub(crate) struct FitGroup {
    pub cfg: FitConfig,
    pub ks: Vec<usize>,
}

pub(crate) fn group_methods(methods: &[FitConfig], k_override: Option<&[usize]>) -> Vec<FitGroup> {
    let mut groups: Vec<FitGroup> = Vec::new();
    for cfg in methods {
        let ks: Vec<usize> = match k_override {
            Some(ks) => ks.to_vec(),
            None => vec![cfg.k],
        };
        let same = |g: &FitGroup| {
            g.cfg.method == cfg.method
                && g.cfg.tol == cfg.tol
                && g.cfg.max_iter == cfg.max_iter
                && g.cfg.c_x == cfg.c_x
                && g.cfg.c_y == cfg.c_y
        };
        match groups.iter_mut().find(|g| same(g)) {
            Some(g) => g.ks.extend(ks),
            None => groups.push(FitGroup { cfg: cfg.clone(), ks }),
        }
    }
    for g in &mut groups {
        g.ks.sort_unstable();
        g.ks.dedup();
    }
    groups
}

fn collect_fit(method: Method, fitted: Result<Vec<ProjectionPair>>) -> Result<Option<Vec<ProjectionPair>>> {
    match fitted {
        Ok(pairs) => Ok(Some(pairs)),
        Err(e) if e.is_singular_covariance() => {
            log::debug!("{method} degenerate: {e}");
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Fit every group on one training pair; `None` marks a degenerate fit.
/// PCA works on the data directly, the rest share one set of blocks.
pub(crate) fn fit_groups(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    groups: &[FitGroup],
) -> Result<Vec<Option<Vec<ProjectionPair>>>> {
    let mut blocks: Option<CovarianceBlocks> = None;
    let mut out = Vec::with_capacity(groups.len());
    for g in groups {
        let fitted = if g.cfg.method == Method::Pca {
            fit_pca_prefixes(x, y, &g.ks)
        } else {
            if blocks.is_none() {
                blocks = Some(covariance_blocks(x, y)?);
            }
            fit_prefixes(blocks.as_ref().expect("blocks just computed"), &g.cfg, &g.ks)
        };
        out.push(collect_fit(g.cfg.method, fitted)?);
    }
    Ok(out)
}

/// [`fit_groups`] from precomputed blocks only.
pub(crate) fn fit_groups_blocks(blocks: &CovarianceBlocks, groups: &[FitGroup]) -> Result<Vec<Option<Vec<ProjectionPair>>>> {
    groups.iter().map(|g| collect_fit(g.cfg.method, fit_prefixes(blocks, &g.cfg, &g.ks))).collect()
}

/// Coordinates shared by every record of one trial.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TrialCoords {
    pub t: usize,
    pub n_x: usize,
    pub n_y: usize,
    pub m_self: usize,
    pub m_shared: usize,
    pub gamma_self: f64,
    pub gamma_shared: f64,
    pub trial: usize,
    pub proj_trial: usize,
}

/// Project the test pair with every fit and score it against the noise
/// floor at the test size.
pub(crate) fn evaluate_groups(
    fits: &[Option<Vec<ProjectionPair>>],
    groups: &[FitGroup],
    x_test: &DMatrix<f64>,
    y_test: &DMatrix<f64>,
    coords: TrialCoords,
    cache: &Rc0Cache,
    rc0_trials: usize,
) -> Result<Vec<TrialRecord>> {
    let mut out = Vec::new();
    for (g, fit) in groups.iter().zip(fits) {
        for (i, &k) in g.ks.iter().enumerate() {
            let key = Rc0Key { t: x_test.nrows(), k_x: k, k_y: k, m_shared: coords.m_shared, n_trials: rc0_trials };
            let (rc0, rc0_std) = cache.get(key)?;
            let score = match fit {
                None => None,
                Some(pairs) => {
                    let pair = &pairs[i];
                    let zx = pair.transform_x(x_test)?;
                    let zy = pair.transform_y(y_test)?;
                    match rc(&zx, &zy, coords.m_shared) {
                        Ok(v) => Some(v),
                        Err(Error::DegenerateColumn { which, column }) => {
                            log::warn!("{} k={k}: test projection {which}[{column}] is constant", g.cfg.method);
                            None
                        }
                        Err(e) => return Err(e),
                    }
                }
            };
            out.push(TrialRecord {
                method: g.cfg.method,
                t: coords.t,
                n_x: coords.n_x,
                n_y: coords.n_y,
                m_self: coords.m_self,
                m_shared: coords.m_shared,
                k,
                gamma_self: coords.gamma_self,
                gamma_shared: coords.gamma_shared,
                rc: score,
                rc0,
                rc_prime: score.map(|v| rc_prime(v, rc0)),
                trial: coords.trial,
                proj_trial: coords.proj_trial,
                status: if score.is_some() { Status::Ok } else { Status::Degenerate },
                rc0_std,
            });
        }
    }
    Ok(out)
}

fn rc0_cells(cache_keys: impl IntoIterator<Item = Rc0Key>, cache: &Rc0Cache) -> Result<Vec<Rc0Cell>> {
    let mut keys: Vec<Rc0Key> = cache_keys.into_iter().collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|k| {
            let (mean, std) = cache.get(k)?;
            Ok(Rc0Cell { t: k.t, k_x: k.k_x, k_y: k.k_y, m_shared: k.m_shared, n_trials: k.n_trials, mean, std })
        })
        .collect()
}

/// Train and test draws for one trial of one projection realization.
fn draw_pair(
    params: &ModelParams,
    t_test: usize,
    proj_seed: u64,
    train_seed: u64,
    test_seed: u64,
    center: bool,
) -> Result<(PairedDataset, PairedDataset)> {
    let proj = sample_quenched(params, proj_seed)?;
    let opts = Standardize { center };
    let train = generate_dataset_with(params, &proj, train_seed, opts)?;
    let test_params = ModelParams { t: t_test, ..params.clone() };
    let test = generate_dataset_with(&test_params, &proj, test_seed, opts)?;
    Ok((train, test))
}

fn seed_echo(spec_seed: u64) -> serde_json::Value {
    serde_json::json!({
        "master_seed": spec_seed,
        "quenched": "derive_seed(master, \"quenched\", [proj_trial, m_self])",
        "train": "derive_seed(master, \"train\", cell coordinates ++ [proj_trial, trial])",
        "test": "derive_seed(master, \"test\", cell coordinates ++ [proj_trial, trial])",
        "rc0": "derive_seed(master, \"rc0-cell\", [t_test, k_x, k_y, m_shared, n_trials])",
    })
}

/// RC′ over the `(γ_self, γ_shared)` grid for every `T` and method.
pub fn run_phase_diagram(spec: &SweepSpec) -> Result<GridResult> {
    spec.validate_phase_diagram()?;
    let groups = group_methods(&spec.methods, None);
    let cache = Rc0Cache::new(spec.master_seed);
    let base = &spec.base_params;

    let mut units = Vec::new();
    for &t in &spec.t_list {
        for &gs in &spec.gamma_self_grid {
            for &gh in &spec.gamma_shared_grid {
                for p in 0..spec.n_proj_trials {
                    for i in 0..spec.n_inner_trials {
                        units.push((t, gs, gh, p, i));
                    }
                }
            }
        }
    }

    let records: Vec<Vec<TrialRecord>> = units
        .par_iter()
        .map(|&(t, gs, gh, p, i)| -> Result<Vec<TrialRecord>> {
            let params = params_from_snr(&ModelParams { t, ..base.clone() }, gs, gh)?;
            let coords = [t as u64, gs.to_bits(), gh.to_bits(), p as u64, i as u64];
            let (train, test) = draw_pair(
                &params,
                spec.t_test_for(t),
                derive_seed(spec.master_seed, "quenched", &[p as u64, params.m_self_x as u64]),
                derive_seed(spec.master_seed, "train", &coords),
                derive_seed(spec.master_seed, "test", &coords),
                spec.center,
            )?;
            let fits = fit_groups(&train.x, &train.y, &groups)?;
            evaluate_groups(
                &fits,
                &groups,
                &test.x,
                &test.y,
                TrialCoords {
                    t,
                    n_x: base.n_x,
                    n_y: base.n_y,
                    m_self: base.m_self_x,
                    m_shared: base.m_shared,
                    gamma_self: gs,
                    gamma_shared: gh,
                    trial: i,
                    proj_trial: p,
                },
                &cache,
                spec.rc0_trials,
            )
        })
        .collect::<Result<_>>()?;

    let keys = spec.t_list.iter().flat_map(|&t| {
        groups.iter().flat_map(move |g| {
            g.ks.iter().map(move |&k| Rc0Key {
                t: spec.t_test_for(t),
                k_x: k,
                k_y: k,
                m_shared: base.m_shared,
                n_trials: spec.rc0_trials,
            })
        })
    });
    let rc0 = rc0_cells(keys, &cache)?;
    let axes = vec![
        Axis::new("gamma_self", spec.gamma_self_grid.iter().copied()),
        Axis::new("gamma_shared", spec.gamma_shared_grid.iter().copied()),
        Axis::new("t", spec.t_list.iter().map(|&t| t as f64)),
    ];
    let metadata = serde_json::json!({ "spec": spec, "seeds": seed_echo(spec.master_seed) });
    Ok(GridResult::from_parts(
        ExperimentKind::PhaseDiagram,
        axes,
        records.into_iter().flatten().collect(),
        rc0,
        metadata,
    ))
}

/// RC′ against the retained dimension `k` for every panel, `T` and method.
/// Each fit is extracted once at the largest `k` and truncated.
pub fn run_dimension_sweep(spec: &SweepSpec) -> Result<GridResult> {
    spec.validate_dim_sweep()?;
    let groups = group_methods(&spec.methods, Some(&spec.k_grid));
    let cache = Rc0Cache::new(spec.master_seed);
    let base = &spec.base_params;

    let mut units = Vec::new();
    for panel in &spec.panels {
        let (m_self, gamma_shared) = spec.panel_params(panel)?;
        for &t in &spec.t_list {
            for p in 0..spec.n_proj_trials {
                for i in 0..spec.n_inner_trials {
                    units.push((m_self, gamma_shared, t, p, i));
                }
            }
        }
    }

    let records: Vec<Vec<TrialRecord>> = units
        .par_iter()
        .map(|&(m_self, gh, t, p, i)| -> Result<Vec<TrialRecord>> {
            let shaped = ModelParams { t, m_self_x: m_self, m_self_y: m_self, ..base.clone() };
            let params = params_from_snr(&shaped, spec.gamma_self, gh)?;
            let coords = [t as u64, m_self as u64, spec.gamma_self.to_bits(), gh.to_bits(), p as u64, i as u64];
            let (train, test) = draw_pair(
                &params,
                spec.t_test_for(t),
                derive_seed(spec.master_seed, "quenched", &[p as u64, m_self as u64]),
                derive_seed(spec.master_seed, "train", &coords),
                derive_seed(spec.master_seed, "test", &coords),
                spec.center,
            )?;
            let fits = fit_groups(&train.x, &train.y, &groups)?;
            evaluate_groups(
                &fits,
                &groups,
                &test.x,
                &test.y,
                TrialCoords {
                    t,
                    n_x: base.n_x,
                    n_y: base.n_y,
                    m_self,
                    m_shared: base.m_shared,
                    gamma_self: spec.gamma_self,
                    gamma_shared: gh,
                    trial: i,
                    proj_trial: p,
                },
                &cache,
                spec.rc0_trials,
            )
        })
        .collect::<Result<_>>()?;

    let keys = spec.t_list.iter().flat_map(|&t| {
        spec.k_grid.iter().map(move |&k| Rc0Key {
            t: spec.t_test_for(t),
            k_x: k,
            k_y: k,
            m_shared: base.m_shared,
            n_trials: spec.rc0_trials,
        })
    });
    let rc0 = rc0_cells(keys, &cache)?;
    let axes = vec![
        Axis::new("k", spec.k_grid.iter().map(|&k| k as f64)),
        Axis::new("t", spec.t_list.iter().map(|&t| t as f64)),
        Axis::new("gamma_ratio", spec.panels.iter().map(|p| p.gamma_ratio)),
        Axis::new("m_ratio", spec.panels.iter().map(|p| p.m_ratio)),
    ];
    let metadata = serde_json::json!({ "spec": spec, "seeds": seed_echo(spec.master_seed) });
    Ok(GridResult::from_parts(
        ExperimentKind::DimSweep,
        axes,
        records.into_iter().flatten().collect(),
        rc0,
        metadata,
    ))
}

/// RC₀ mean and std for every `(T, k)` pair.
pub fn run_noise_floor_map(spec: &NoiseFloorSpec) -> Result<GridResult> {
    spec.validate()?;
    let cache = Rc0Cache::new(spec.master_seed);
    let keys: Vec<Rc0Key> = spec
        .t_list
        .iter()
        .flat_map(|&t| {
            spec.k_list.iter().map(move |&k| Rc0Key { t, k_x: k, k_y: k, m_shared: spec.m_shared, n_trials: spec.n_trials })
        })
        .collect();
    keys.par_iter().map(|&k| cache.get(k).map(|_| ())).collect::<Result<Vec<()>>>()?;
    let rc0 = rc0_cells(keys, &cache)?;
    let axes = vec![
        Axis::new("t", spec.t_list.iter().map(|&t| t as f64)),
        Axis::new("k", spec.k_list.iter().map(|&k| k as f64)),
    ];
    let metadata = serde_json::json!({ "spec": spec, "seeds": seed_echo(spec.master_seed) });
    Ok(GridResult::from_parts(ExperimentKind::NoiseFloor, axes, Vec::new(), rc0, metadata))
}
