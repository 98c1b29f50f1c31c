//! Streaming wrappers that own a model state plus the interaction history
//! it was built from, and apply one chunk at a time.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::routing::{classify_chunk, ChunkGroups, GroupCounts};
use crate::baselines::{puresvd_retrain, tdrec_reinit, tdrec_retrain};
use crate::error::{Error, Result};
use crate::ids::EntityId;
use crate::linalg::{HooiOptions, SparseMatrix, SparseTensor3};
use crate::psirec::{AttachStrategy, Axis, SvdState};
use crate::ranking::top_n;
use crate::seq_tensor::{apply_attention, AttentionSpec, Event, Interactions};
use crate::tirec::TuckerState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Psirec,
    #[serde(alias = "svd")]
    Puresvd,
    Tirec,
    Tireca,
    Tdrec,
    #[serde(alias = "tdrec_reinit", alias = "tdrec-reinit")]
    Tdrecreinit,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Psirec,
        ModelKind::Puresvd,
        ModelKind::Tirec,
        ModelKind::Tireca,
        ModelKind::Tdrec,
        ModelKind::Tdrecreinit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Psirec => "psirec",
            ModelKind::Puresvd => "puresvd",
            ModelKind::Tirec => "tirec",
            ModelKind::Tireca => "tireca",
            ModelKind::Tdrec => "tdrec",
            ModelKind::Tdrecreinit => "tdrecreinit",
        }
    }

    pub fn is_tensor(self) -> bool {
        !matches!(self, ModelKind::Psirec | ModelKind::Puresvd)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace(['-', '_'], "");
        match key.as_str() {
            "svd" => Ok(ModelKind::Puresvd),
            _ => ModelKind::ALL
                .into_iter()
                .find(|k| k.name() == key)
                .ok_or_else(|| Error::Config(format!("unknown model kind '{s}'"))),
        }
    }
}

/// What happens to the block of new users that only touched new items.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityStrategy {
    /// Block-diagonal merge.
    Block,
    /// Placeholder rows, data absorbed by the integrator step.
    Attach,
}

/// How other new users and items enter the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VectorInit {
    /// Incremental SVD on the matrix, mode-vector addition on the tensor.
    Incremental,
    Zero,
    Gaussian,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpdateStrategy {
    pub new_entities: EntityStrategy,
    pub init: VectorInit,
    pub sigma: f64,
}

impl UpdateStrategy {
    pub const INCREMENTAL: UpdateStrategy = UpdateStrategy {
        new_entities: EntityStrategy::Block,
        init: VectorInit::Incremental,
        sigma: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        if self.init == VectorInit::Gaussian {
            AttachStrategy::Gaussian { sigma: self.sigma }.validate()?;
        }
        Ok(())
    }

    /// `None` selects the incremental algorithms.
    pub fn vector_attach(&self) -> Option<AttachStrategy> {
        match self.init {
            VectorInit::Incremental => None,
            VectorInit::Zero => Some(AttachStrategy::Zero),
            VectorInit::Gaussian => Some(AttachStrategy::Gaussian { sigma: self.sigma }),
        }
    }

    /// `None` selects the block merge.
    pub fn entity_attach(&self) -> Option<AttachStrategy> {
        match self.new_entities {
            EntityStrategy::Block => None,
            EntityStrategy::Attach => Some(self.vector_attach().unwrap_or(AttachStrategy::Zero)),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct UpdateInfo {
    pub groups: GroupCounts,
    /// HOOI sweeps spent by retrained tensor baselines.
    pub sweeps: Option<usize>,
}

/// Snapshot of a fitted model's factors.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelState {
    Matrix(SvdState),
    Tensor(TuckerState),
}

/// A recommender that can be fitted once and then fed chunks.
pub trait StreamingModel {
    fn fit(&mut self, events: &[Event]) -> Result<UpdateInfo>;
    fn update(&mut self, chunk: &[Event]) -> Result<UpdateInfo>;
    fn knows_user(&self, user: EntityId) -> bool;
    fn knows_item(&self, item: EntityId) -> bool;
    /// Top-`n` unseen items; `None` for users the model does not index.
    fn recommend(&self, user: EntityId, n: usize) -> Result<Option<Vec<EntityId>>>;
    fn snapshot(&self) -> Option<ModelState>;
}

fn step_seed(seed: u64, step: u64) -> u64 {
    seed.wrapping_add(step.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn not_fitted() -> Error {
    Error::InvalidParameter("model used before fit".into())
}

fn local_index(ids: &[EntityId]) -> HashMap<EntityId, usize> {
    ids.iter().enumerate().map(|(k, &id)| (id, k)).collect()
}

/// Binary cells for `events`, deduplicated, with row/column lookups.
fn binary_cells(
    events: &[Event],
    row: impl Fn(EntityId) -> usize,
    col: impl Fn(EntityId) -> usize,
) -> Vec<([usize; 2], f64)> {
    let mut seen = HashSet::new();
    events
        .iter()
        .filter(|e| seen.insert((e.user, e.item)))
        .map(|e| ([row(e.user), col(e.item)], 1.0))
        .collect()
}

pub struct MatrixModel {
    rank: usize,
    strategy: UpdateStrategy,
    retrain: bool,
    seed: u64,
    step: u64,
    state: Option<SvdState>,
    data: Interactions,
}

impl MatrixModel {
    /// Matrix model updated through the integrator routing.
    pub fn integrating(rank: usize, strategy: UpdateStrategy, seed: u64) -> Self {
        Self::new(rank, strategy, false, seed)
    }

    /// Matrix model refitted from scratch after every chunk.
    pub fn retraining(rank: usize, seed: u64) -> Self {
        Self::new(rank, UpdateStrategy::INCREMENTAL, true, seed)
    }

    fn new(rank: usize, strategy: UpdateStrategy, retrain: bool, seed: u64) -> Self {
        Self {
            rank,
            strategy,
            retrain,
            seed,
            step: 0,
            state: None,
            data: Interactions::new(),
        }
    }

    pub fn state(&self) -> Option<&SvdState> {
        self.state.as_ref()
    }

    pub fn data(&self) -> &Interactions {
        &self.data
    }

    /// Restores a fitted model from a saved state plus its history.
    pub fn restore(&mut self, state: SvdState, data: Interactions) -> Result<()> {
        if state.user_map != data.users || state.item_map != data.items {
            return Err(Error::InvalidParameter("state ids disagree with the history".into()));
        }
        self.state = Some(state);
        self.data = data;
        Ok(())
    }

    fn next_seed(&mut self) -> u64 {
        self.step += 1;
        step_seed(self.seed, self.step)
    }

    fn integrate(&mut self, chunk: &[Event]) -> Result<GroupCounts> {
        let seed = self.next_seed();
        let state = self.state.as_mut().ok_or_else(not_fitted)?;
        let g = classify_chunk(chunk, &state.user_map, &state.item_map);
        let mut absorbed: HashSet<(EntityId, EntityId)> = HashSet::new();

        if !g.block_users.is_empty() {
            match self.strategy.entity_attach() {
                None => {
                    let (lu, li) = (local_index(&g.block_users), local_index(&g.block_items));
                    let cells = binary_cells(&g.new_entity, |u| lu[&u], |i| li[&i]);
                    let delta = SparseMatrix::new([lu.len(), li.len()], cells)?;
                    state.add_block(&delta, &g.block_users, &g.block_items, seed)?;
                    absorbed.extend(g.new_entity.iter().map(|e| (e.user, e.item)));
                }
                Some(s) => {
                    state.attach_embeddings(&g.block_users, Axis::Users, s, seed)?;
                    state.attach_embeddings(&g.block_items, Axis::Items, s, seed ^ 1)?;
                }
            }
        }
        if !g.new_users.is_empty() {
            match self.strategy.vector_attach() {
                None => {
                    let lu = local_index(&g.new_users);
                    let items = &state.item_map;
                    let cells = binary_cells(&g.new_user, |u| lu[&u], |i| items.row(i).expect("known item"));
                    let delta = SparseMatrix::new([lu.len(), state.n_items()], cells)?;
                    state.add_rows_or_cols(&delta, Axis::Users, &g.new_users)?;
                    absorbed.extend(g.new_user.iter().map(|e| (e.user, e.item)));
                }
                Some(s) => state.attach_embeddings(&g.new_users, Axis::Users, s, seed ^ 2)?,
            }
        }
        if !g.new_items.is_empty() {
            match self.strategy.vector_attach() {
                None => {
                    let li = local_index(&g.new_items);
                    let users = &state.user_map;
                    let cells = binary_cells(&g.new_item, |u| users.row(u).expect("known user"), |i| li[&i]);
                    let delta = SparseMatrix::new([state.n_users(), li.len()], cells)?;
                    state.add_rows_or_cols(&delta, Axis::Items, &g.new_items)?;
                    absorbed.extend(g.new_item.iter().map(|e| (e.user, e.item)));
                }
                Some(s) => state.attach_embeddings(&g.new_items, Axis::Items, s, seed ^ 3)?,
            }
        }
        sync_maps(&mut self.data, &g);

        let data = &self.data;
        let rest: Vec<Event> = chunk
            .iter()
            .filter(|e| !absorbed.contains(&(e.user, e.item)))
            .filter(|e| {
                let u = data.users.row(e.user).expect("synced");
                let i = data.items.row(e.item).expect("synced");
                !data.history.contains(u, i)
            })
            .copied()
            .collect();
        if !rest.is_empty() {
            let cells = binary_cells(
                &rest,
                |u| data.users.row(u).expect("synced"),
                |i| data.items.row(i).expect("synced"),
            );
            let delta = SparseMatrix::new([state.n_users(), state.n_items()], cells)?;
            state.psi_update(&delta)?;
        }
        for e in chunk {
            self.data.record(e.user, e.item);
        }
        debug_assert_eq!(state.user_map, self.data.users);
        debug_assert_eq!(state.item_map, self.data.items);
        Ok(g.counts())
    }
}

/// Registers routed entities in the history maps in the order the model
/// appended them.
fn sync_maps(data: &mut Interactions, g: &ChunkGroups) {
    for &u in g.block_users.iter().chain(&g.new_users) {
        data.users.insert(u);
    }
    for &i in g.block_items.iter().chain(&g.new_items) {
        data.items.insert(i);
    }
}

impl StreamingModel for MatrixModel {
    fn fit(&mut self, events: &[Event]) -> Result<UpdateInfo> {
        self.data = Interactions::from_events(events);
        self.step = 0;
        self.state = Some(puresvd_retrain(&self.data, self.rank, step_seed(self.seed, 0))?);
        Ok(UpdateInfo::default())
    }

    fn update(&mut self, chunk: &[Event]) -> Result<UpdateInfo> {
        if self.state.is_none() {
            return Err(not_fitted());
        }
        if self.retrain {
            let g = classify_chunk(chunk, &self.data.users, &self.data.items);
            for e in chunk {
                self.data.record(e.user, e.item);
            }
            let seed = self.next_seed();
            self.state = Some(puresvd_retrain(&self.data, self.rank, seed)?);
            return Ok(UpdateInfo {
                groups: g.counts(),
                sweeps: None,
            });
        }
        Ok(UpdateInfo {
            groups: self.integrate(chunk)?,
            sweeps: None,
        })
    }

    fn knows_user(&self, user: EntityId) -> bool {
        self.state.as_ref().is_some_and(|s| s.user_map.contains(user))
    }

    fn knows_item(&self, item: EntityId) -> bool {
        self.state.as_ref().is_some_and(|s| s.item_map.contains(item))
    }

    fn recommend(&self, user: EntityId, n: usize) -> Result<Option<Vec<EntityId>>> {
        let state = self.state.as_ref().ok_or_else(not_fitted)?;
        let Some(row) = state.user_map.row(user) else {
            return Ok(None);
        };
        let seen = self.data.history.sequence(row);
        let scores = state.scores(seen);
        let list = top_n(&scores, n, seen);
        Ok(Some(list.into_iter().map(|i| state.item_map.id(i)).collect()))
    }

    fn snapshot(&self) -> Option<ModelState> {
        self.state.clone().map(ModelState::Matrix)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TensorMode {
    Integrate,
    Retrain,
    WarmRetrain,
}

pub struct TensorModel {
    ranks: [usize; 3],
    attention: AttentionSpec,
    strategy: UpdateStrategy,
    mode: TensorMode,
    hooi: HooiOptions,
    step: u64,
    state: Option<TuckerState>,
    data: Interactions,
}

impl TensorModel {
    pub fn new(
        ranks: [usize; 3],
        attention: AttentionSpec,
        strategy: UpdateStrategy,
        mode: TensorMode,
        hooi: HooiOptions,
    ) -> Self {
        Self {
            ranks,
            attention,
            strategy,
            mode,
            hooi,
            step: 0,
            state: None,
            data: Interactions::new(),
        }
    }

    pub fn state(&self) -> Option<&TuckerState> {
        self.state.as_ref()
    }

    pub fn data(&self) -> &Interactions {
        &self.data
    }

    pub fn restore(&mut self, state: TuckerState, data: Interactions) -> Result<()> {
        if state.user_map != data.users || state.item_map != data.items {
            return Err(Error::InvalidParameter("state ids disagree with the history".into()));
        }
        self.state = Some(state);
        self.data = data;
        Ok(())
    }

    fn opts(&mut self) -> HooiOptions {
        self.step += 1;
        HooiOptions {
            seed: step_seed(self.hooi.seed, self.step),
            ..self.hooi
        }
    }

    fn integrate(&mut self, chunk: &[Event]) -> Result<GroupCounts> {
        let opts = self.opts();
        let seed = opts.seed;
        let l = self.attention.window;
        let a = self.attention.matrix();
        let state = self.state.as_mut().ok_or_else(not_fitted)?;
        let g = classify_chunk(chunk, &state.user_map, &state.item_map);

        // windows after the chunk, as item ids
        let mut order: Vec<EntityId> = Vec::new();
        let mut seqs: HashMap<EntityId, Vec<EntityId>> = HashMap::new();
        let data = &self.data;
        for e in chunk {
            let seq = seqs.entry(e.user).or_insert_with(|| {
                order.push(e.user);
                data.items_of(e.user).iter().map(|&r| data.items.id(r)).collect()
            });
            if let Some(p) = seq.iter().rposition(|&x| x == e.item) {
                seq.remove(p);
            }
            seq.push(e.item);
        }
        let new_window = |u: EntityId| -> &[EntityId] {
            let s = &seqs[&u];
            &s[s.len().saturating_sub(l)..]
        };
        let old_window: HashMap<EntityId, Vec<EntityId>> = order
            .iter()
            .map(|&u| {
                let w = match data.users.row(u) {
                    Some(r) => data.history.window(r, l).iter().map(|&i| data.items.id(i)).collect(),
                    None => Vec::new(),
                };
                (u, w)
            })
            .collect();
        let cells = |w: &[EntityId]| -> Vec<(EntityId, usize)> {
            let off = l - w.len();
            w.iter().enumerate().map(|(p, &i)| (i, off + p)).collect()
        };

        let block_users: HashSet<EntityId> = g.block_users.iter().copied().collect();
        let new_users: HashSet<EntityId> = g.new_users.iter().copied().collect();
        let new_items: HashSet<EntityId> = g.new_items.iter().copied().collect();
        let block = self.strategy.entity_attach().is_none();
        let incremental = self.strategy.vector_attach().is_none();
        let absorbed = |u: EntityId, i: EntityId| {
            (block && block_users.contains(&u))
                || (incremental && new_users.contains(&u) && !new_items.contains(&i))
                || (incremental && new_items.contains(&i))
        };
        let weighted = |shape: [usize; 3], raw: Vec<([usize; 3], f64)>| -> Result<SparseTensor3> {
            apply_attention(&SparseTensor3::from_accumulated(shape, raw)?, &a)
        };

        if !g.block_users.is_empty() {
            match self.strategy.entity_attach() {
                None => {
                    let (lu, li) = (local_index(&g.block_users), local_index(&g.block_items));
                    let mut raw = Vec::new();
                    for &u in &g.block_users {
                        for (i, pos) in cells(new_window(u)) {
                            raw.push(([lu[&u], li[&i], pos], 1.0));
                        }
                    }
                    let delta = weighted([lu.len(), li.len(), l], raw)?;
                    state.add_block(&delta, &g.block_users, &g.block_items, opts)?;
                }
                Some(s) => {
                    state.attach_embeddings(&g.block_users, Axis::Users, s, seed)?;
                    state.attach_embeddings(&g.block_items, Axis::Items, s, seed ^ 1)?;
                }
            }
        }
        if !g.new_users.is_empty() {
            match self.strategy.vector_attach() {
                None => {
                    let lu = local_index(&g.new_users);
                    let mut raw = Vec::new();
                    for &u in &g.new_users {
                        for (i, pos) in cells(new_window(u)) {
                            if !new_items.contains(&i) {
                                let col = state.item_map.row(i).expect("known item");
                                raw.push(([lu[&u], col, pos], 1.0));
                            }
                        }
                    }
                    let delta = weighted([lu.len(), state.n_items(), l], raw)?;
                    state.add_mode_vectors(&delta, Axis::Users, &g.new_users)?;
                }
                Some(s) => state.attach_embeddings(&g.new_users, Axis::Users, s, seed ^ 2)?,
            }
        }
        if !g.new_items.is_empty() {
            match self.strategy.vector_attach() {
                None => {
                    let li = local_index(&g.new_items);
                    let mut raw = Vec::new();
                    for &u in &order {
                        for (i, pos) in cells(new_window(u)) {
                            if let Some(&c) = li.get(&i) {
                                let row = state.user_map.row(u).expect("known user");
                                raw.push(([row, c, pos], 1.0));
                            }
                        }
                    }
                    let delta = weighted([state.n_users(), li.len(), l], raw)?;
                    state.add_mode_vectors(&delta, Axis::Items, &g.new_items)?;
                }
                Some(s) => state.attach_embeddings(&g.new_items, Axis::Items, s, seed ^ 3)?,
            }
        }

        let mut raw = Vec::new();
        for &u in &order {
            let row = state.user_map.row(u).expect("known user");
            for (i, pos) in cells(&old_window[&u]) {
                if !absorbed(u, i) {
                    raw.push(([row, state.item_map.row(i).expect("known item"), pos], -1.0));
                }
            }
            for (i, pos) in cells(new_window(u)) {
                if !absorbed(u, i) {
                    raw.push(([row, state.item_map.row(i).expect("known item"), pos], 1.0));
                }
            }
        }
        let delta = weighted([state.n_users(), state.n_items(), l], raw)?;
        state.ti_update(&delta)?;

        sync_maps(&mut self.data, &g);
        for e in chunk {
            self.data.record(e.user, e.item);
        }
        debug_assert_eq!(state.user_map, self.data.users);
        debug_assert_eq!(state.item_map, self.data.items);
        Ok(g.counts())
    }
}

impl StreamingModel for TensorModel {
    fn fit(&mut self, events: &[Event]) -> Result<UpdateInfo> {
        self.data = Interactions::from_events(events);
        self.step = 0;
        let (state, report) = tdrec_retrain(&self.data, self.ranks, self.attention, self.hooi)?;
        self.state = Some(state);
        Ok(UpdateInfo {
            groups: GroupCounts::default(),
            sweeps: Some(report.sweeps),
        })
    }

    fn update(&mut self, chunk: &[Event]) -> Result<UpdateInfo> {
        if self.state.is_none() {
            return Err(not_fitted());
        }
        if self.mode == TensorMode::Integrate {
            return Ok(UpdateInfo {
                groups: self.integrate(chunk)?,
                sweeps: None,
            });
        }
        let g = classify_chunk(chunk, &self.data.users, &self.data.items);
        for e in chunk {
            self.data.record(e.user, e.item);
        }
        let opts = self.opts();
        let (state, report) = match self.mode {
            TensorMode::WarmRetrain => {
                let prev = self.state.as_ref().expect("checked above");
                tdrec_reinit(&self.data, self.ranks, self.attention, prev, opts)?
            }
            _ => tdrec_retrain(&self.data, self.ranks, self.attention, opts)?,
        };
        self.state = Some(state);
        Ok(UpdateInfo {
            groups: g.counts(),
            sweeps: Some(report.sweeps),
        })
    }

    fn knows_user(&self, user: EntityId) -> bool {
        self.state.as_ref().is_some_and(|s| s.user_map.contains(user))
    }

    fn knows_item(&self, item: EntityId) -> bool {
        self.state.as_ref().is_some_and(|s| s.item_map.contains(item))
    }

    fn recommend(&self, user: EntityId, n: usize) -> Result<Option<Vec<EntityId>>> {
        let state = self.state.as_ref().ok_or_else(not_fitted)?;
        let Some(row) = state.user_map.row(user) else {
            return Ok(None);
        };
        let window = self.data.history.window(row, self.attention.window);
        let scores = state.scores(window)?;
        let list = top_n(&scores, n, self.data.history.sequence(row));
        Ok(Some(list.into_iter().map(|i| state.item_map.id(i)).collect()))
    }

    fn snapshot(&self) -> Option<ModelState> {
        self.state.clone().map(ModelState::Tensor)
    }
}

/// Fitted once, never updated.
pub struct Frozen<M>(pub M);

impl<M: StreamingModel> StreamingModel for Frozen<M> {
    fn fit(&mut self, events: &[Event]) -> Result<UpdateInfo> {
        self.0.fit(events)
    }

    fn update(&mut self, _chunk: &[Event]) -> Result<UpdateInfo> {
        Ok(UpdateInfo::default())
    }

    fn knows_user(&self, user: EntityId) -> bool {
        self.0.knows_user(user)
    }

    fn knows_item(&self, item: EntityId) -> bool {
        self.0.knows_item(item)
    }

    fn recommend(&self, user: EntityId, n: usize) -> Result<Option<Vec<EntityId>>> {
        self.0.recommend(user, n)
    }

    fn snapshot(&self) -> Option<ModelState> {
        self.0.snapshot()
    }
}

/// Everything needed to build one model of any kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// Matrix rank.
    pub rank: usize,
    /// Tucker ranks (users, items, positions).
    pub ranks: [usize; 3],
    pub window: usize,
    pub power: f64,
    pub strategy: UpdateStrategy,
    pub hooi_max_iters: usize,
    pub hooi_tol: f64,
    pub seed: u64,
}

impl ModelConfig {
    /// Defaults for `kind`: incremental routing everywhere except TIRecA,
    /// which attaches zero rows for new users and items outside the block.
    pub fn new(kind: ModelKind, seed: u64) -> Self {
        let strategy = match kind {
            ModelKind::Tireca => UpdateStrategy {
                init: VectorInit::Zero,
                ..UpdateStrategy::INCREMENTAL
            },
            _ => UpdateStrategy::INCREMENTAL,
        };
        let hooi = HooiOptions::default();
        Self {
            kind,
            rank: 32,
            ranks: [32, 32, 5],
            window: 20,
            power: 1.0,
            strategy,
            hooi_max_iters: hooi.max_iters,
            hooi_tol: hooi.tol,
            seed,
        }
    }

    pub fn attention(&self) -> Result<AttentionSpec> {
        AttentionSpec::new(self.window, self.power)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind.is_tensor() {
            self.attention()?;
            if self.ranks.contains(&0) {
                return Err(Error::Config("tensor ranks must be >= 1".into()));
            }
            if self.ranks[2] > self.window {
                return Err(Error::Config(format!(
                    "position rank {} exceeds the window {}",
                    self.ranks[2], self.window
                )));
            }
            if self.hooi_max_iters == 0 || !(self.hooi_tol >= 0.0) {
                return Err(Error::Config("hooi_max_iters must be >= 1 and hooi_tol >= 0".into()));
            }
        } else if self.rank == 0 {
            return Err(Error::Config("rank must be >= 1".into()));
        }
        self.strategy.validate()
    }

    pub fn build(&self) -> Result<Box<dyn StreamingModel>> {
        self.validate()?;
        let hooi = HooiOptions {
            max_iters: self.hooi_max_iters,
            tol: self.hooi_tol,
            seed: self.seed,
        };
        let tensor = |mode| -> Result<Box<dyn StreamingModel>> {
            Ok(Box::new(TensorModel::new(self.ranks, self.attention()?, self.strategy, mode, hooi)))
        };
        match self.kind {
            ModelKind::Psirec => Ok(Box::new(MatrixModel::integrating(self.rank, self.strategy, self.seed))),
            ModelKind::Puresvd => Ok(Box::new(MatrixModel::retraining(self.rank, self.seed))),
            ModelKind::Tirec | ModelKind::Tireca => tensor(TensorMode::Integrate),
            ModelKind::Tdrec => tensor(TensorMode::Retrain),
            ModelKind::Tdrecreinit => tensor(TensorMode::WarmRetrain),
        }
    }

    /// Short label naming the kind and its update strategy.
    pub fn label(&self) -> String {
        match (self.kind, self.strategy.init) {
            (ModelKind::Psirec | ModelKind::Tirec | ModelKind::Tireca, VectorInit::Gaussian) => format!(
                "{}({};{})",
                self.kind,
                self.strategy.sigma,
                if self.strategy.new_entities == EntityStrategy::Block { "B" } else { "0" }
            ),
            _ => self.kind.to_string(),
        }
    }
}
