//! Agents, the two-region occupancy grid and neighborhood queries.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::params::{Geometry, SimParams};
use crate::scalar::Scalar;

pub type AgentId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ethnicity {
    Local,
    Migrant,
}

impl Ethnicity {
    pub const ALL: [Ethnicity; 2] = [Ethnicity::Local, Ethnicity::Migrant];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Ethnicity::Local => "local",
            Ethnicity::Migrant => "migrant",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Attitude {
    Liberal,
    Conservative,
}

impl Attitude {
    /// Liberal below zero, conservative at or above zero.
    #[inline]
    pub fn of<S: Scalar>(conservatism: S) -> Attitude {
        if conservatism < S::zero() {
            Attitude::Liberal
        } else {
            Attitude::Conservative
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Agent<S> {
    pub id: AgentId,
    pub ethnicity: Ethnicity,
    pub conservatism: S,
    /// Set when the initial draw fell outside the conservatism bounds; such
    /// agents keep their initial value for the whole run.
    pub frozen: bool,
    pub max_rejection: S,
    pub max_acceptance: S,
    /// Linear cell index, `y * width + x`.
    pub cell: usize,
    pub in_host: bool,
}

impl<S: Scalar> Agent<S> {
    #[inline]
    pub fn attitude(&self) -> Attitude {
        Attitude::of(self.conservatism)
    }

    #[inline]
    pub fn is_liberal(&self) -> bool {
        self.attitude() == Attitude::Liberal
    }
}

const NO_SLOT: usize = usize::MAX;

/// Occupancy grid split into a home half (left) and a host half (right).
///
/// The grid does not wrap. Free host cells are tracked in an indexable set so
/// that uniform sampling of a free cell is O(1).
#[derive(Clone, Debug)]
pub struct WorldGrid {
    width: usize,
    height: usize,
    host_x0: usize,
    occupancy: Vec<Option<AgentId>>,
    free_host: Vec<usize>,
    free_slot: Vec<usize>,
    /// Cell offsets within the neighbor radius, excluding the origin, in
    /// row-major order.
    offsets: Vec<(isize, isize)>,
}

impl WorldGrid {
    pub fn new(geometry: Geometry, radius: f64) -> Self {
        let Geometry { width, height } = geometry;
        let host_x0 = geometry.host_x0();
        let mut free_host = Vec::with_capacity(geometry.region_cells());
        let mut free_slot = vec![NO_SLOT; width * height];
        for y in 0..height {
            for x in host_x0..width {
                let cell = y * width + x;
                free_slot[cell] = free_host.len();
                free_host.push(cell);
            }
        }
        let r = radius.floor() as isize;
        let r2 = radius * radius;
        let mut offsets = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if (dx, dy) != (0, 0) && ((dx * dx + dy * dy) as f64) <= r2 {
                    offsets.push((dx, dy));
                }
            }
        }
        WorldGrid {
            width,
            height,
            host_x0,
            occupancy: vec![None; width * height],
            free_host,
            free_slot,
            offsets,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn host_x0(&self) -> usize {
        self.host_x0
    }

    #[inline]
    pub fn coords(&self, cell: usize) -> (usize, usize) {
        (cell % self.width, cell / self.width)
    }

    #[inline]
    pub fn cell_at(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn is_host_cell(&self, cell: usize) -> bool {
        cell % self.width >= self.host_x0
    }

    #[inline]
    pub fn occupant(&self, cell: usize) -> Option<AgentId> {
        self.occupancy[cell]
    }

    pub fn occupancy(&self) -> &[Option<AgentId>] {
        &self.occupancy
    }

    pub fn free_host_count(&self) -> usize {
        self.free_host.len()
    }

    /// Host cells within the neighbor radius of `cell`, excluding `cell`,
    /// clipped at the grid edges and at the home/host border.
    pub fn host_neighbor_cells(&self, cell: usize) -> impl Iterator<Item = usize> + '_ {
        let (x, y) = self.coords(cell);
        self.offsets.iter().filter_map(move |&(dx, dy)| {
            let nx = x as isize + dx;
            let ny = y as isize + dy;
            if nx < self.host_x0 as isize
                || nx >= self.width as isize
                || ny < 0
                || ny >= self.height as isize
            {
                None
            } else {
                Some(ny as usize * self.width + nx as usize)
            }
        })
    }

    pub fn random_free_host<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<usize> {
        if self.free_host.is_empty() {
            None
        } else {
            Some(self.free_host[rng.random_range(0..self.free_host.len())])
        }
    }

    pub(crate) fn occupy(&mut self, cell: usize, id: AgentId) {
        debug_assert!(
            self.occupancy[cell].is_none(),
            "cell {cell} already occupied"
        );
        self.occupancy[cell] = Some(id);
        let slot = self.free_slot[cell];
        if slot != NO_SLOT {
            let last = *self.free_host.last().expect("free set out of sync");
            self.free_host.swap_remove(slot);
            if last != cell {
                self.free_slot[last] = slot;
            }
            self.free_slot[cell] = NO_SLOT;
        }
    }

    pub(crate) fn vacate(&mut self, cell: usize) {
        debug_assert!(self.occupancy[cell].is_some(), "cell {cell} already empty");
        self.occupancy[cell] = None;
        if self.is_host_cell(cell) {
            self.free_slot[cell] = self.free_host.len();
            self.free_host.push(cell);
        }
    }
}

/// Neighborhood of a host agent with the counts used by the fitness rules.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborhoodView {
    pub focal: AgentId,
    pub members: Vec<AgentId>,
    /// Members with conservatism below zero.
    pub n_liberal: usize,
    /// Conservative members sharing the focal agent's ethnicity.
    pub n_conservative_same_ethnicity: usize,
}

impl NeighborhoodView {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Full simulation state.
#[derive(Clone, Debug)]
pub struct World<S> {
    pub(crate) grid: WorldGrid,
    pub(crate) agents: Vec<Agent<S>>,
    /// Migrants still in the home region, ascending id.
    pub(crate) waiting: Vec<AgentId>,
    pub(crate) tick: u32,
    pub(crate) bounds: (S, S),
}

impl<S: Scalar> World<S> {
    pub fn grid(&self) -> &WorldGrid {
        &self.grid
    }

    pub fn agents(&self) -> &[Agent<S>] {
        &self.agents
    }

    pub fn agent(&self, id: AgentId) -> &Agent<S> {
        &self.agents[id as usize]
    }

    pub fn tick(&self) -> u32 {
        self.tick
    }

    pub fn bounds(&self) -> (S, S) {
        self.bounds
    }

    pub fn waiting_migrants(&self) -> &[AgentId] {
        &self.waiting
    }

    pub fn host_agents(&self) -> impl Iterator<Item = &Agent<S>> + '_ {
        self.agents.iter().filter(|a| a.in_host)
    }

    /// Ids of the host agents around `cell`, in offset order.
    pub(crate) fn occupants_around(&self, cell: usize) -> impl Iterator<Item = AgentId> + '_ {
        self.grid
            .host_neighbor_cells(cell)
            .filter_map(|c| self.grid.occupant(c))
    }

    /// Returns `(N, n_liberal, n_conservative_same_ethnicity)` for `id`
    /// without allocating.
    pub(crate) fn neighborhood_counts(&self, id: AgentId) -> (usize, usize, usize) {
        let focal = &self.agents[id as usize];
        let mut n = 0;
        let mut liberal = 0;
        let mut same_conservative = 0;
        for other in self.occupants_around(focal.cell) {
            let other = &self.agents[other as usize];
            n += 1;
            if other.is_liberal() {
                liberal += 1;
            } else if other.ethnicity == focal.ethnicity {
                same_conservative += 1;
            }
        }
        (n, liberal, same_conservative)
    }

    /// Neighborhood of a host agent: every host agent within the neighbor
    /// radius of its cell, itself excluded.
    pub fn neighbors(&self, id: AgentId) -> Result<NeighborhoodView> {
        let focal = self
            .agents
            .get(id as usize)
            .ok_or_else(|| Error::Precondition(format!("no agent with id {id}")))?;
        if !focal.in_host {
            return Err(Error::Precondition(format!(
                "agent {id} is not in the host region"
            )));
        }
        let members: Vec<AgentId> = self.occupants_around(focal.cell).collect();
        let mut n_liberal = 0;
        let mut n_conservative_same_ethnicity = 0;
        for &m in &members {
            let other = &self.agents[m as usize];
            if other.is_liberal() {
                n_liberal += 1;
            } else if other.ethnicity == focal.ethnicity {
                n_conservative_same_ethnicity += 1;
            }
        }
        Ok(NeighborhoodView {
            focal: id,
            members,
            n_liberal,
            n_conservative_same_ethnicity,
        })
    }

    pub(crate) fn relocate(&mut self, id: AgentId, to: usize) {
        let from = self.agents[id as usize].cell;
        self.grid.vacate(from);
        self.grid.occupy(to, id);
        let agent = &mut self.agents[id as usize];
        agent.cell = to;
        agent.in_host = self.grid.is_host_cell(to);
    }

    /// Checks occupancy bijectivity and region containment.
    pub fn check_consistency(&self) -> Result<()> {
        let mut seen = 0;
        for (cell, occ) in self.grid.occupancy.iter().enumerate() {
            if let Some(id) = occ {
                seen += 1;
                let agent = self.agents.get(*id as usize).ok_or_else(|| {
                    Error::Precondition(format!("cell {cell} holds unknown agent {id}"))
                })?;
                if agent.cell != cell {
                    return Err(Error::Precondition(format!(
                        "agent {id} recorded at {} but found at {cell}",
                        agent.cell
                    )));
                }
            }
        }
        if seen != self.agents.len() {
            return Err(Error::Precondition(format!(
                "{} agents but {seen} occupied cells",
                self.agents.len()
            )));
        }
        for agent in &self.agents {
            if agent.in_host != self.grid.is_host_cell(agent.cell) {
                return Err(Error::Precondition(format!(
                    "agent {} host flag disagrees with its cell",
                    agent.id
                )));
            }
            if agent.ethnicity == Ethnicity::Local && !agent.in_host {
                return Err(Error::Precondition(format!(
                    "local agent {} outside the host region",
                    agent.id
                )));
            }
        }
        let free = self.grid.free_host.len();
        let host_agents = self.agents.iter().filter(|a| a.in_host).count();
        if free + host_agents != self.grid.width / 2 * self.grid.height {
            return Err(Error::Precondition("free host set out of sync".into()));
        }
        Ok(())
    }
}

/// Agent description for [`World::from_layout`].
#[derive(Clone, Debug, PartialEq)]
pub struct AgentSpec<S> {
    pub ethnicity: Ethnicity,
    pub conservatism: S,
    /// Grid coordinates; `None` puts the agent at home (migrants only).
    pub position: Option<(usize, usize)>,
}

impl<S: Scalar> World<S> {
    /// Hand-built world for experiments and tests. Ids follow `specs` order;
    /// agents without a position fill the home region row by row, and
    /// frozen flags follow the conservatism bounds as in [`init_world`].
    pub fn from_layout(params: &SimParams, specs: &[AgentSpec<S>]) -> Result<World<S>> {
        let geometry = params.validate()?;
        let mut grid = WorldGrid::new(geometry, params.neighbor_radius);
        let (lo, hi) = (
            S::lit(params.conservatism_bounds.0),
            S::lit(params.conservatism_bounds.1),
        );
        let mut agents = Vec::with_capacity(specs.len());
        let mut waiting = Vec::new();
        let mut next_home = 0;
        for (i, spec) in specs.iter().enumerate() {
            let id = i as AgentId;
            let cell = match spec.position {
                Some((x, y)) => {
                    if x >= geometry.width || y >= geometry.height {
                        return Err(Error::Config(format!(
                            "agent {id} placed off the grid at ({x}, {y})"
                        )));
                    }
                    grid.cell_at(x, y)
                }
                None => {
                    if spec.ethnicity == Ethnicity::Local {
                        return Err(Error::Config(format!(
                            "local agent {id} needs a host position"
                        )));
                    }
                    let slot = next_home;
                    next_home += 1;
                    if slot >= geometry.region_cells() {
                        return Err(Error::RegionCapacity {
                            region: "home",
                            population: slot + 1,
                            required: slot + 1,
                            available: geometry.region_cells(),
                        });
                    }
                    grid.cell_at(
                        slot % geometry.region_width(),
                        slot / geometry.region_width(),
                    )
                }
            };
            if grid.occupant(cell).is_some() {
                return Err(Error::Config(format!(
                    "agent {id} placed on an occupied cell"
                )));
            }
            let in_host = grid.is_host_cell(cell);
            if spec.ethnicity == Ethnicity::Local && !in_host {
                return Err(Error::Config(format!(
                    "local agent {id} placed in the home region"
                )));
            }
            if !in_host {
                waiting.push(id);
            }
            grid.occupy(cell, id);
            agents.push(Agent {
                id,
                ethnicity: spec.ethnicity,
                conservatism: spec.conservatism,
                frozen: spec.conservatism < lo || spec.conservatism > hi,
                max_rejection: S::zero(),
                max_acceptance: S::zero(),
                cell,
                in_host,
            });
        }
        Ok(World {
            grid,
            agents,
            waiting,
            tick: 0,
            bounds: (lo, hi),
        })
    }
}

/// Builds the initial world: conservatism draws, locals at random host cells,
/// migrants at random home cells.
pub fn init_world<S: Scalar, R: Rng + ?Sized>(params: &SimParams, rng: &mut R) -> Result<World<S>> {
    let geometry = params.validate()?;
    let mut grid = WorldGrid::new(geometry, params.neighbor_radius);
    let (lo, hi) = params.conservatism_bounds;

    let local_dist = Normal::new(params.conservatism_local, params.init_sd)
        .map_err(|e| Error::Config(format!("local conservatism distribution: {e}")))?;
    let migrant_dist = Normal::new(params.conservatism_migrant, params.init_sd)
        .map_err(|e| Error::Config(format!("migrant conservatism distribution: {e}")))?;

    let total = params.number_local + params.number_migrant;
    let mut agents = Vec::with_capacity(total);
    for i in 0..total {
        let (ethnicity, draw) = if i < params.number_local {
            (Ethnicity::Local, local_dist.sample(rng))
        } else {
            (Ethnicity::Migrant, migrant_dist.sample(rng))
        };
        let conservatism = S::lit(draw);
        let frozen = conservatism < S::lit(lo) || conservatism > S::lit(hi);
        agents.push(Agent {
            id: i as AgentId,
            ethnicity,
            conservatism,
            frozen,
            max_rejection: S::zero(),
            max_acceptance: S::zero(),
            cell: 0,
            in_host: false,
        });
    }

    for agent in agents.iter_mut().take(params.number_local) {
        let cell = grid.random_free_host(rng).ok_or(Error::RegionCapacity {
            region: "host",
            population: params.number_local,
            required: params.number_local,
            available: geometry.region_cells(),
        })?;
        grid.occupy(cell, agent.id);
        agent.cell = cell;
        agent.in_host = true;
    }

    let region_w = geometry.region_width();
    let home_cells = index::sample(rng, geometry.region_cells(), params.number_migrant);
    for (agent, slot) in agents[params.number_local..]
        .iter_mut()
        .zip(home_cells.iter())
    {
        let cell = grid.cell_at(slot % region_w, slot / region_w);
        grid.occupy(cell, agent.id);
        agent.cell = cell;
    }

    let waiting = (params.number_local..total).map(|i| i as AgentId).collect();
    Ok(World {
        grid,
        agents,
        waiting,
        tick: 0,
        bounds: (S::lit(lo), S::lit(hi)),
    })
}
