//! Record file for synthetic samples, plus a JSON manifest.
//!
//! Layout, little-endian:
//!
//! ```text
//! magic   b"SLAPSYN\0"
//! version u32 (1)
//! size    u32       board side N
//! count   u64       number of records
//! record* board     ceil(N²/4) bytes, 2 bits per cell row-major
//!                   (0 empty, 1 black, 2 white), low bits first
//!         to_move   u8 (0 black, 1 white)
//!         value     f32
//!         pairs     u16, then that many (cell u16, probability f32)
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use slap_core::{BoardConfig, Cell, GameState, Player};

use crate::error::TrainError;
use crate::synth::{Dataset, SyntheticSample};

pub const MAGIC: &[u8; 8] = b"SLAPSYN\0";
pub const VERSION: u32 = 1;

pub const TRAIN_FILE: &str = "train.bin";
pub const VALIDATION_FILE: &str = "validation.bin";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn encode_records(samples: &[SyntheticSample], size: usize) -> Vec<u8> {
    let cells = size * size;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(size as u32).to_le_bytes());
    out.extend_from_slice(&(samples.len() as u64).to_le_bytes());
    for s in samples {
        let mut packed = vec![0u8; cells.div_ceil(4)];
        for (i, c) in s.state.cells().iter().enumerate() {
            let code = match c {
                Cell::Empty => 0u8,
                Cell::Stone(Player::Black) => 1,
                Cell::Stone(Player::White) => 2,
            };
            packed[i / 4] |= code << (2 * (i % 4));
        }
        out.extend_from_slice(&packed);
        out.push((s.state.to_move() == Player::White) as u8);
        out.extend_from_slice(&s.value.to_le_bytes());
        let pairs: Vec<(usize, f32)> = s
            .policy
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != 0.0)
            .map(|(i, &p)| (i, p))
            .collect();
        out.extend_from_slice(&(pairs.len() as u16).to_le_bytes());
        for (i, p) in pairs {
            out.extend_from_slice(&(i as u16).to_le_bytes());
            out.extend_from_slice(&p.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], TrainError> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(TrainError::Format(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, TrainError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, TrainError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, TrainError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32, TrainError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn decode_records(bytes: &[u8]) -> Result<(usize, Vec<SyntheticSample>), TrainError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(TrainError::Format("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(TrainError::Format(format!("unsupported version {version}")));
    }
    let size = r.u32()? as usize;
    let config = BoardConfig::new(size)?;
    let cells = config.cells();
    let count = r.u64()?;
    let mut samples = Vec::new();
    for _ in 0..count {
        let packed = r.take(cells.div_ceil(4))?;
        let board: Vec<Cell> = (0..cells)
            .map(|i| match (packed[i / 4] >> (2 * (i % 4))) & 3 {
                0 => Ok(Cell::Empty),
                1 => Ok(Cell::Stone(Player::Black)),
                2 => Ok(Cell::Stone(Player::White)),
                _ => Err(TrainError::Format("invalid cell code".into())),
            })
            .collect::<Result<_, _>>()?;
        let to_move = r.take(1)?[0];
        let state = GameState::from_cells(config, board, None)?;
        if (state.to_move() == Player::White) != (to_move == 1) {
            return Err(TrainError::Format("player to move disagrees with stones".into()));
        }
        let value = r.f32()?;
        let mut policy = vec![0.0; cells];
        for _ in 0..r.u16()? {
            let i = r.u16()? as usize;
            let p = r.f32()?;
            *policy
                .get_mut(i)
                .ok_or_else(|| TrainError::Format(format!("cell {i} outside the board")))? = p;
        }
        samples.push(SyntheticSample { state, policy, value });
    }
    if r.pos != bytes.len() {
        return Err(TrainError::Format("trailing bytes".into()));
    }
    Ok((size, samples))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub board_size: usize,
    pub seeds: Vec<u64>,
    pub split_seed: u64,
    pub about_to_win_per_set: usize,
    pub random_per_set: usize,
    pub total: usize,
    pub train: usize,
    pub validation: usize,
    pub train_file: String,
    pub validation_file: String,
}

/// Writes both splits and the manifest into `dir`.
pub fn write_dataset(dir: &Path, ds: &Dataset) -> Result<Manifest, TrainError> {
    fs::create_dir_all(dir)?;
    let lines = crate::synth::enumerate_win_lines(ds.board_size)?.len();
    let manifest = Manifest {
        format_version: VERSION,
        board_size: ds.board_size,
        seeds: ds.seeds.clone(),
        split_seed: ds.split_seed,
        about_to_win_per_set: lines * slap_core::WIN_LENGTH,
        random_per_set: crate::synth::RANDOM_PER_SET,
        total: ds.train.len() + ds.validation.len(),
        train: ds.train.len(),
        validation: ds.validation.len(),
        train_file: TRAIN_FILE.into(),
        validation_file: VALIDATION_FILE.into(),
    };
    fs::write(dir.join(TRAIN_FILE), encode_records(&ds.train, ds.board_size))?;
    fs::write(dir.join(VALIDATION_FILE), encode_records(&ds.validation, ds.board_size))?;
    let mut f = fs::File::create(dir.join(MANIFEST_FILE))?;
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    f.write_all(b"\n")?;
    Ok(manifest)
}

pub fn read_dataset(dir: &Path) -> Result<Dataset, TrainError> {
    let manifest: Manifest = serde_json::from_slice(&fs::read(dir.join(MANIFEST_FILE))?)?;
    let (size_t, train) = decode_records(&fs::read(dir.join(&manifest.train_file))?)?;
    let (size_v, validation) = decode_records(&fs::read(dir.join(&manifest.validation_file))?)?;
    if size_t != manifest.board_size || size_v != manifest.board_size {
        return Err(TrainError::Format("board size disagrees with manifest".into()));
    }
    if train.len() != manifest.train || validation.len() != manifest.validation {
        return Err(TrainError::Format("record count disagrees with manifest".into()));
    }
    Ok(Dataset {
        board_size: manifest.board_size,
        seeds: manifest.seeds,
        split_seed: manifest.split_seed,
        train,
        validation,
    })
}
