//! One simulation tick: intake, movement, interaction, memory, conservatism
//! update and acculturation classification.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Result;
use crate::metrics::{observe, TickObservables};
use crate::params::SimParams;
use crate::rng::{rng_from_seed, SimRng};
use crate::scalar::Scalar;
use crate::world::{init_world, Agent, AgentId, Attitude, NeighborhoodView, World};

/// Acculturation orientation derived from the links an agent receives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Integration,
    Assimilation,
    Separation,
    Marginalization,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [
        Outcome::Integration,
        Outcome::Assimilation,
        Outcome::Separation,
        Outcome::Marginalization,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Outcome::Integration => "integration",
            Outcome::Assimilation => "assimilation",
            Outcome::Separation => "separation",
            Outcome::Marginalization => "marginalization",
        }
    }

    /// Maps "receives an accepted ingroup link" and "receives an accepted
    /// outgroup link" to the four orientations.
    pub fn from_links(ingroup: bool, outgroup: bool) -> Outcome {
        match (ingroup, outgroup) {
            (true, true) => Outcome::Integration,
            (false, true) => Outcome::Assimilation,
            (true, false) => Outcome::Separation,
            (false, false) => Outcome::Marginalization,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InteractionEvent<S> {
    pub proposer: AgentId,
    pub receiver: AgentId,
    pub same_ethnicity: bool,
    pub accepted: bool,
    /// Strength of an intergroup experience, `|receiver conservatism|`
    /// clamped to [0, 1]. Zero for ingroup events.
    pub magnitude: S,
}

/// Moves waiting migrants into the host region. Returns the number of
/// entrants this tick.
///
/// Every waiting migrant draws once; entrants are then placed in id order.
/// An entrant that finds no free host cell stays home and tries again next
/// tick.
pub fn intake_step<S: Scalar, R: Rng + ?Sized>(
    world: &mut World<S>,
    params: &SimParams,
    rng: &mut R,
) -> usize {
    if world.waiting.is_empty() {
        return 0;
    }
    let p = params.intake_policy.entry_probability(params.speed_intake);
    let waiting = std::mem::take(&mut world.waiting);
    let entering: Vec<bool> = waiting.iter().map(|_| rng.random_bool(p)).collect();

    let mut entered = 0;
    let mut still_waiting = Vec::with_capacity(waiting.len());
    for (id, enters) in waiting.into_iter().zip(entering) {
        if !enters {
            still_waiting.push(id);
            continue;
        }
        match world.grid.random_free_host(rng) {
            Some(cell) => {
                world.relocate(id, cell);
                entered += 1;
            }
            None => still_waiting.push(id),
        }
    }
    world.waiting = still_waiting;
    entered
}

/// Schelling-style satisfaction with a neighborhood.
///
/// An agent alone is happy. Otherwise a liberal counts liberal neighbors of
/// either ethnicity, a conservative counts conservative co-ethnics, and the
/// fraction is compared inclusively against `threshold`.
pub fn happiness<S: Scalar>(view: &NeighborhoodView, focal: &Agent<S>, threshold: S) -> bool {
    is_happy(
        focal.attitude(),
        view.len(),
        view.n_liberal,
        view.n_conservative_same_ethnicity,
        threshold,
    )
}

#[inline]
fn is_happy<S: Scalar>(
    attitude: Attitude,
    n: usize,
    n_liberal: usize,
    n_conservative_same: usize,
    threshold: S,
) -> bool {
    if n == 0 {
        return true;
    }
    let similar = match attitude {
        Attitude::Liberal => n_liberal,
        Attitude::Conservative => n_conservative_same,
    };
    S::from_count(similar) / S::from_count(n) >= threshold
}

/// Asynchronous movement in a freshly shuffled order. Happy agents step to a
/// random free cell within the neighbor radius, unhappy agents jump to a
/// random free host cell; either stays put when nothing is free.
pub fn movement_step<S: Scalar, R: Rng + ?Sized>(world: &mut World<S>, threshold: S, rng: &mut R) {
    let mut order: Vec<AgentId> = world.host_agents().map(|a| a.id).collect();
    order.shuffle(rng);
    let mut nearby = Vec::with_capacity(8);
    for id in order {
        let (n, n_liberal, n_same) = world.neighborhood_counts(id);
        let agent = &world.agents[id as usize];
        let destination = if is_happy(agent.attitude(), n, n_liberal, n_same, threshold) {
            nearby.clear();
            nearby.extend(
                world
                    .grid
                    .host_neighbor_cells(agent.cell)
                    .filter(|&c| world.grid.occupant(c).is_none()),
            );
            if nearby.is_empty() {
                None
            } else {
                Some(nearby[rng.random_range(0..nearby.len())])
            }
        } else {
            world.grid.random_free_host(rng)
        };
        if let Some(cell) = destination {
            world.relocate(id, cell);
        }
    }
}

/// Every host agent proposes to every current neighbor. Ingroup proposals
/// are always accepted; intergroup proposals are accepted only by liberal
/// receivers. Attitudes are read from the state at the start of the phase.
pub fn propose_and_resolve<S: Scalar>(world: &World<S>) -> Vec<InteractionEvent<S>> {
    let mut events = Vec::new();
    for proposer in world.host_agents() {
        for receiver_id in world.occupants_around(proposer.cell) {
            let receiver = &world.agents[receiver_id as usize];
            let same_ethnicity = receiver.ethnicity == proposer.ethnicity;
            let (accepted, magnitude) = if same_ethnicity {
                (true, S::zero())
            } else {
                (
                    receiver.is_liberal(),
                    receiver.conservatism.abs().min(S::one()),
                )
            };
            events.push(InteractionEvent {
                proposer: proposer.id,
                receiver: receiver_id,
                same_ethnicity,
                accepted,
                magnitude,
            });
        }
    }
    events
}

/// Proposers of intergroup events remember the strongest rejection and the
/// strongest acceptance they have experienced.
pub fn record_experiences<S: Scalar>(agents: &mut [Agent<S>], events: &[InteractionEvent<S>]) {
    for ev in events.iter().filter(|e| !e.same_ethnicity) {
        let proposer = &mut agents[ev.proposer as usize];
        if ev.accepted {
            proposer.max_acceptance = proposer.max_acceptance.max(ev.magnitude);
        } else {
            proposer.max_rejection = proposer.max_rejection.max(ev.magnitude);
        }
    }
}

/// `c <- clamp(c + max_rejection - max_acceptance, lo, hi)`; frozen agents
/// keep their value.
pub fn update_conservatism<S: Scalar>(agent: &mut Agent<S>, bounds: (S, S)) {
    if agent.frozen {
        return;
    }
    let next = agent.conservatism + agent.max_rejection - agent.max_acceptance;
    agent.conservatism = next.max(bounds.0).min(bounds.1);
}

/// Orientation of one agent from this tick's events.
pub fn classify<S: Scalar>(agent: AgentId, events: &[InteractionEvent<S>]) -> Outcome {
    let mut ingroup = false;
    let mut outgroup = false;
    for ev in events.iter().filter(|e| e.receiver == agent && e.accepted) {
        if ev.same_ethnicity {
            ingroup = true;
        } else {
            outgroup = true;
        }
    }
    Outcome::from_links(ingroup, outgroup)
}

/// Orientation of every host agent, indexed by agent id; `None` for agents
/// still at home. One pass over the events.
pub fn classify_all<S: Scalar>(
    world: &World<S>,
    events: &[InteractionEvent<S>],
) -> Vec<Option<Outcome>> {
    let mut links = vec![(false, false); world.agents.len()];
    for ev in events.iter().filter(|e| e.accepted) {
        let entry = &mut links[ev.receiver as usize];
        if ev.same_ethnicity {
            entry.0 = true;
        } else {
            entry.1 = true;
        }
    }
    world
        .agents
        .iter()
        .zip(links)
        .map(|(a, (i, o))| a.in_host.then(|| Outcome::from_links(i, o)))
        .collect()
}

/// Advances the world by one tick and returns its observables.
pub fn tick<S: Scalar, R: Rng + ?Sized>(
    world: &mut World<S>,
    params: &SimParams,
    rng: &mut R,
) -> TickObservables<S> {
    world.tick += 1;
    intake_step(world, params, rng);
    movement_step(world, S::lit(params.happiness_threshold), rng);
    let events = propose_and_resolve(world);
    record_experiences(&mut world.agents, &events);
    let bounds = world.bounds;
    for agent in world.agents.iter_mut().filter(|a| a.in_host) {
        update_conservatism(agent, bounds);
    }
    let outcomes = classify_all(world, &events);
    observe(world, world.tick, &outcomes)
}

/// Observables of the current state without advancing it: links are
/// resolved at the current positions but no memory or attitude changes.
pub fn snapshot<S: Scalar>(world: &World<S>) -> TickObservables<S> {
    let events = propose_and_resolve(world);
    let outcomes = classify_all(world, &events);
    observe(world, world.tick, &outcomes)
}

/// A world together with its parameters and its random stream.
#[derive(Clone, Debug)]
pub struct Simulation<S> {
    params: SimParams,
    world: World<S>,
    rng: SimRng,
}

impl<S: Scalar> Simulation<S> {
    /// Initializes the world from `params.seed`.
    pub fn new(params: SimParams) -> Result<Self> {
        let mut rng = rng_from_seed(params.seed);
        let world = init_world(&params, &mut rng)?;
        Ok(Simulation { params, world, rng })
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn world(&self) -> &World<S> {
        &self.world
    }

    pub fn baseline(&self) -> TickObservables<S> {
        snapshot(&self.world)
    }

    pub fn step(&mut self) -> TickObservables<S> {
        tick(&mut self.world, &self.params, &mut self.rng)
    }

    /// Baseline followed by `params.ticks` ticks.
    pub fn run(mut self) -> Vec<TickObservables<S>> {
        let mut stream = Vec::with_capacity(self.params.ticks as usize + 1);
        stream.push(self.baseline());
        for _ in 0..self.params.ticks {
            stream.push(self.step());
        }
        stream
    }
}
