//! Round checkpoints: every client's parameters and optimizer moments
//! plus the server state, as FVM1 matrices with a JSON meta file. A
//! checkpointed run resumed on the same inputs continues bit-identically.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataio::matrix_io::{load_matrix, save_matrix};
use crate::dataio::PresenceMask;
use crate::error::{Error, Result};
use crate::gnn::EncoderKind;
use crate::numerics::adam::AdamState;
use crate::numerics::matrix::Matrix;
use crate::server::GlobalState;

use super::{RunConfig, Simulation};

#[derive(Debug, Serialize, Deserialize)]
struct ClientMeta {
    view_id: usize,
    encoder: EncoderKind,
    param_count: usize,
    adam_step: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointMeta {
    round: usize,
    k: usize,
    seed: u64,
    perm: Vec<usize>,
    hard: Vec<usize>,
    clients: Vec<ClientMeta>,
}

pub fn save_checkpoint(sim: &Simulation, dir: &Path) -> Result<()> {
    let state = sim
        .global_state()
        .ok_or_else(|| Error::Protocol("nothing to checkpoint before round 1".into()))?;
    std::fs::create_dir_all(dir)?;

    let mut client_meta = Vec::new();
    for client in sim.clients() {
        let params = client.encoder.params();
        for (i, p) in params.iter().enumerate() {
            save_matrix(
                &dir.join(format!("client_{}_param_{i}.fvm", client.view_id)),
                p,
            )?;
        }
        save_matrix(
            &dir.join(format!("client_{}_centers.fvm", client.view_id)),
            &client.centers,
        )?;
        if let Some(adam) = client.optimizer_state() {
            let (first, second) = adam.moments();
            for (i, m) in first.iter().enumerate() {
                save_matrix(
                    &dir.join(format!("client_{}_adam_m_{i}.fvm", client.view_id)),
                    m,
                )?;
            }
            for (i, v) in second.iter().enumerate() {
                save_matrix(
                    &dir.join(format!("client_{}_adam_v_{i}.fvm", client.view_id)),
                    v,
                )?;
            }
        }
        client_meta.push(ClientMeta {
            view_id: client.view_id,
            encoder: client.encoder_kind(),
            param_count: params.len(),
            adam_step: client.optimizer_state().map(AdamState::step_count),
        });
    }

    save_matrix(&dir.join("global_features.fvm"), &state.features)?;
    save_matrix(&dir.join("global_centers.fvm"), &state.centers)?;
    save_matrix(&dir.join("global_soft.fvm"), &state.soft)?;
    save_matrix(&dir.join("global_pseudo.fvm"), &state.pseudo)?;

    let meta = CheckpointMeta {
        round: sim.completed_rounds(),
        k: sim.config().k,
        seed: sim.config().seed,
        perm: state.perm.clone(),
        hard: state.hard.clone(),
        clients: client_meta,
    };
    let mut text = serde_json::to_string_pretty(&meta)?;
    text.push('\n');
    std::fs::write(dir.join("meta.json"), text)?;
    Ok(())
}

/// Rebuilds the simulation from its original inputs, then overlays the
/// checkpointed round state. Trace and per-round reports restart from the
/// resumed round.
pub fn resume(
    dir: &Path,
    name: &str,
    views: &[Matrix],
    mask: &PresenceMask,
    labels: Option<&[usize]>,
    config: RunConfig,
) -> Result<Simulation> {
    let meta: CheckpointMeta =
        serde_json::from_str(&std::fs::read_to_string(dir.join("meta.json"))?)?;
    if meta.k != config.k || meta.seed != config.seed {
        return Err(Error::invalid(format!(
            "checkpoint was taken with k={}, seed={}; config has k={}, seed={}",
            meta.k, meta.seed, config.k, config.seed
        )));
    }
    let train_lr = config.train_lr;
    let mut sim = Simulation::new(name, views, mask, labels, config)?;
    if meta.clients.len() != sim.clients.len() {
        return Err(Error::invalid(
            "checkpoint client count differs from inputs",
        ));
    }

    for (client, cm) in sim.clients.iter_mut().zip(&meta.clients) {
        if client.view_id != cm.view_id || client.encoder_kind() != cm.encoder {
            return Err(Error::invalid(format!(
                "checkpoint view {} was {}, rebuilt as {}",
                cm.view_id,
                cm.encoder,
                client.encoder_kind()
            )));
        }
        for (i, p) in client.encoder.params_mut().into_iter().enumerate() {
            let loaded = load_matrix(&dir.join(format!("client_{}_param_{i}.fvm", cm.view_id)))?;
            if loaded.shape() != p.shape() {
                return Err(Error::shape(format!(
                    "checkpoint param {i} of view {} is {:?}, expected {:?}",
                    cm.view_id,
                    loaded.shape(),
                    p.shape()
                )));
            }
            *p = loaded;
        }
        client.centers = load_matrix(&dir.join(format!("client_{}_centers.fvm", cm.view_id)))?;
        match cm.adam_step {
            None => client.restore_optimizer(None),
            Some(step) => {
                let n = cm.param_count + 1; // encoder params + centers
                let mut first = Vec::with_capacity(n);
                let mut second = Vec::with_capacity(n);
                for i in 0..n {
                    first.push(load_matrix(
                        &dir.join(format!("client_{}_adam_m_{i}.fvm", cm.view_id)),
                    )?);
                    second.push(load_matrix(
                        &dir.join(format!("client_{}_adam_v_{i}.fvm", cm.view_id)),
                    )?);
                }
                client.restore_optimizer(Some(AdamState::restore(first, second, step, train_lr)));
            }
        }
    }

    sim.state = Some(GlobalState {
        features: load_matrix(&dir.join("global_features.fvm"))?,
        centers: load_matrix(&dir.join("global_centers.fvm"))?,
        soft: load_matrix(&dir.join("global_soft.fvm"))?,
        pseudo: load_matrix(&dir.join("global_pseudo.fvm"))?,
        perm: meta.perm,
        hard: meta.hard,
        round: meta.round,
    });
    sim.completed_rounds = meta.round;
    Ok(sim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::generate_synthetic;
    use crate::federation::EncoderPolicy;

    #[test]
    fn resume_continues_bit_identically() {
        let (views, labels) = generate_synthetic(48, 3, &[8, 6], 8.0, 21).unwrap();
        let mask = PresenceMask::generate(48, &[0.2, 0.1], 21).unwrap();
        let config = RunConfig {
            rounds: 4,
            local_epochs: 2,
            k: 3,
            pretrain_epochs: 6,
            knn_k: 4,
            hidden_dims: (8, 4),
            ..RunConfig::default()
        };

        // uninterrupted reference
        let mut direct =
            Simulation::new("ckpt", &views, &mask, Some(&labels), config.clone()).unwrap();
        direct.run_all().unwrap();
        let direct_labels = direct.final_prediction().unwrap();

        // checkpoint after round 2, resume, finish
        let mut first =
            Simulation::new("ckpt", &views, &mask, Some(&labels), config.clone()).unwrap();
        first.step_round().unwrap();
        first.step_round().unwrap();
        let dir = std::env::temp_dir().join(format!("fedmvc-ckpt-{}", std::process::id()));
        save_checkpoint(&first, &dir).unwrap();

        let mut resumed =
            resume(&dir, "ckpt", &views, &mask, Some(&labels), config.clone()).unwrap();
        assert_eq!(resumed.completed_rounds(), 2);
        resumed.run_all().unwrap();
        assert_eq!(resumed.final_prediction().unwrap(), direct_labels);

        // metric trajectories of rounds 3..4 agree exactly
        let direct_tail: Vec<_> = direct.round_reports()[2..]
            .iter()
            .map(|r| serde_json::to_string(&r.metrics).unwrap())
            .collect();
        let resumed_tail: Vec<_> = resumed
            .round_reports()
            .iter()
            .map(|r| serde_json::to_string(&r.metrics).unwrap())
            .collect();
        assert_eq!(direct_tail, resumed_tail);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn resume_rejects_mismatched_config() {
        let (views, _) = generate_synthetic(30, 3, &[6], 8.0, 5).unwrap();
        let mask = PresenceMask::generate(30, &[0.1], 5).unwrap();
        let config = RunConfig {
            rounds: 2,
            k: 3,
            pretrain_epochs: 2,
            knn_k: 3,
            hidden_dims: (6, 3),
            encoder_policy: EncoderPolicy::ForceGcn,
            ..RunConfig::default()
        };
        let mut sim = Simulation::new("x", &views, &mask, None, config.clone()).unwrap();
        sim.step_round().unwrap();
        let dir = std::env::temp_dir().join(format!("fedmvc-ckpt-bad-{}", std::process::id()));
        save_checkpoint(&sim, &dir).unwrap();

        let other = RunConfig { seed: 99, ..config };
        assert!(resume(&dir, "x", &views, &mask, None, other).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }
}
