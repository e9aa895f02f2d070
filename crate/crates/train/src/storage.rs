//! How one labelled position becomes training entries under each mode.

use slap_core::{augment_8, extend_planes_cc, slap, transform_policy, PlaneStack};
use slap_mcts::Mode;

use crate::error::TrainError;

/// Entries stored for one position per mode.
pub fn entries_per_sample(mode: Mode) -> usize {
    match mode {
        Mode::Slap => 1,
        Mode::Augment8 | Mode::SlapCc => 8,
    }
}

/// Expands `(planes, policy)` into the entries stored under `mode`:
/// eight D4 copies, one canonical copy, or eight copies with the centered
/// and position planes appended.
pub fn expand(
    planes: &PlaneStack,
    policy: &[f32],
    mode: Mode,
) -> Result<Vec<(PlaneStack, Vec<f32>)>, TrainError> {
    Ok(match mode {
        Mode::Augment8 => augment_8(planes, policy)?,
        Mode::Slap => {
            let s = slap(planes);
            let pi = transform_policy(policy, planes.size(), s.transform)?;
            vec![(s.canonical, pi)]
        }
        Mode::SlapCc => augment_8(planes, policy)?
            .into_iter()
            .map(|(p, pi)| Ok((extend_planes_cc(&p)?, pi)))
            .collect::<Result<_, TrainError>>()?,
    })
}

/// Network input for evaluation-only data: canonical under SLAP, extended
/// under SLAP-CC, raw otherwise. Policies follow the planes.
pub fn single_view(
    planes: &PlaneStack,
    policy: &[f32],
    mode: Mode,
) -> Result<(PlaneStack, Vec<f32>), TrainError> {
    Ok(match mode {
        Mode::Augment8 => (planes.clone(), policy.to_vec()),
        Mode::Slap => expand(planes, policy, mode)?.remove(0),
        Mode::SlapCc => (extend_planes_cc(planes)?, policy.to_vec()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use slap_core::{encode_planes, new_game, BoardConfig, D4Transform};

    #[test]
    fn entry_counts_and_channels() {
        let g = new_game(BoardConfig::default()).play_move(9).unwrap();
        let planes = encode_planes(&g);
        let mut pi = vec![0.0; 64];
        pi[10] = 1.0;
        for mode in [Mode::Augment8, Mode::Slap, Mode::SlapCc] {
            let e = expand(&planes, &pi, mode).unwrap();
            assert_eq!(e.len(), entries_per_sample(mode));
            assert!(e.iter().all(|(p, _)| p.channels() == mode.in_channels()));
        }
        let (canon, cpi) = &expand(&planes, &pi, Mode::Slap).unwrap()[0];
        assert_eq!(slap(canon).transform, D4Transform::IDENTITY);
        assert_eq!(cpi.iter().sum::<f32>(), 1.0);
    }
}
