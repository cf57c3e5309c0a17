//! Per-tick observables of the host society.

use std::sync::OnceLock;

use crate::dynamics::Outcome;
use crate::scalar::Scalar;
use crate::world::{Attitude, Ethnicity, World};

/// Liberal/conservative by local/migrant subpopulation. Membership follows
/// the current sign of conservatism.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Substratum {
    LiberalLocals,
    ConservativeLocals,
    LiberalMigrants,
    ConservativeMigrants,
}

impl Substratum {
    pub const ALL: [Substratum; 4] = [
        Substratum::LiberalLocals,
        Substratum::ConservativeLocals,
        Substratum::LiberalMigrants,
        Substratum::ConservativeMigrants,
    ];

    pub fn of(ethnicity: Ethnicity, attitude: Attitude) -> Substratum {
        match (ethnicity, attitude) {
            (Ethnicity::Local, Attitude::Liberal) => Substratum::LiberalLocals,
            (Ethnicity::Local, Attitude::Conservative) => Substratum::ConservativeLocals,
            (Ethnicity::Migrant, Attitude::Liberal) => Substratum::LiberalMigrants,
            (Ethnicity::Migrant, Attitude::Conservative) => Substratum::ConservativeMigrants,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Substratum::LiberalLocals => "liberal_locals",
            Substratum::ConservativeLocals => "conservative_locals",
            Substratum::LiberalMigrants => "liberal_migrants",
            Substratum::ConservativeMigrants => "conservative_migrants",
        }
    }

    pub fn parse(name: &str) -> Option<Substratum> {
        Substratum::ALL.into_iter().find(|s| s.name() == name)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PopulationStats<S> {
    pub host_count: usize,
    pub mean_conservatism: S,
    pub fraction_liberal: S,
    pub fraction_conservative: S,
    /// Conservative agents that are not frozen, over `host_count`.
    pub fraction_conservative_unfrozen: S,
    /// Outcome fractions over the whole host population, in [`Outcome::ALL`]
    /// order.
    pub outcomes: [S; 4],
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubstratumStats<S> {
    pub count: usize,
    /// All zero when `count == 0`.
    pub outcomes: [S; 4],
}

impl<S> SubstratumStats<S> {
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TickObservables<S> {
    pub tick: u32,
    /// Indexed by [`Ethnicity::index`].
    pub populations: [PopulationStats<S>; 2],
    /// Indexed by [`Substratum::index`].
    pub substrata: [SubstratumStats<S>; 4],
}

const POPULATION_FIELDS: [&str; 5] = [
    "host_count",
    "mean_conservatism",
    "fraction_liberal",
    "fraction_conservative",
    "fraction_conservative_unfrozen",
];

/// Column names of [`TickObservables::to_row`], in order.
pub fn field_names() -> &'static [String] {
    static NAMES: OnceLock<Vec<String>> = OnceLock::new();
    NAMES.get_or_init(|| {
        let mut names = Vec::new();
        for pop in Ethnicity::ALL {
            for f in POPULATION_FIELDS {
                names.push(format!("{}_{f}", pop.name()));
            }
            for o in Outcome::ALL {
                names.push(format!("{}_{}", pop.name(), o.name()));
            }
        }
        for sub in Substratum::ALL {
            names.push(format!("{}_count", sub.name()));
            for o in Outcome::ALL {
                names.push(format!("{}_{}", sub.name(), o.name()));
            }
        }
        names
    })
}

/// Position of a named field in [`field_names`].
pub fn field_index(name: &str) -> Option<usize> {
    field_names().iter().position(|n| n == name)
}

impl<S: Scalar> TickObservables<S> {
    pub fn population(&self, ethnicity: Ethnicity) -> &PopulationStats<S> {
        &self.populations[ethnicity.index()]
    }

    pub fn substratum(&self, sub: Substratum) -> &SubstratumStats<S> {
        &self.substrata[sub.index()]
    }

    /// Flat numeric row aligned with [`field_names`].
    pub fn to_row(&self) -> Vec<S> {
        let mut row = Vec::with_capacity(field_names().len());
        for p in &self.populations {
            row.extend([
                S::from_count(p.host_count),
                p.mean_conservatism,
                p.fraction_liberal,
                p.fraction_conservative,
                p.fraction_conservative_unfrozen,
            ]);
            row.extend(p.outcomes);
        }
        for s in &self.substrata {
            row.push(S::from_count(s.count));
            row.extend(s.outcomes);
        }
        row
    }
}

/// Computes the observables of `world` given this tick's classification
/// (indexed by agent id, `None` for agents outside the host region).
///
/// Denominators count host-region agents only. Empty populations and
/// substrata report zeros.
pub fn observe<S: Scalar>(
    world: &World<S>,
    tick: u32,
    classifications: &[Option<Outcome>],
) -> TickObservables<S> {
    assert_eq!(
        classifications.len(),
        world.agents().len(),
        "one classification slot per agent"
    );
    let mut pop_count = [0usize; 2];
    let mut pop_sum = [S::zero(); 2];
    let mut pop_liberal = [0usize; 2];
    let mut pop_cons_unfrozen = [0usize; 2];
    let mut pop_outcomes = [[0usize; 4]; 2];
    let mut sub_count = [0usize; 4];
    let mut sub_outcomes = [[0usize; 4]; 4];

    for (agent, class) in world.agents().iter().zip(classifications) {
        if !agent.in_host {
            continue;
        }
        let outcome = class.expect("host agent without classification");
        let p = agent.ethnicity.index();
        let attitude = agent.attitude();
        pop_count[p] += 1;
        pop_sum[p] = pop_sum[p] + agent.conservatism;
        match attitude {
            Attitude::Liberal => pop_liberal[p] += 1,
            Attitude::Conservative if !agent.frozen => pop_cons_unfrozen[p] += 1,
            Attitude::Conservative => {}
        }
        pop_outcomes[p][outcome.index()] += 1;
        let s = Substratum::of(agent.ethnicity, attitude).index();
        sub_count[s] += 1;
        sub_outcomes[s][outcome.index()] += 1;
    }

    let ratio = |num: usize, den: usize| {
        if den == 0 {
            S::zero()
        } else {
            S::from_count(num) / S::from_count(den)
        }
    };
    let fractions = |counts: &[usize; 4], den: usize| counts.map(|c| ratio(c, den));

    let populations = [0, 1].map(|p| {
        let n = pop_count[p];
        PopulationStats {
            host_count: n,
            mean_conservatism: if n == 0 {
                S::zero()
            } else {
                pop_sum[p] / S::from_count(n)
            },
            fraction_liberal: ratio(pop_liberal[p], n),
            fraction_conservative: ratio(n - pop_liberal[p], n),
            fraction_conservative_unfrozen: ratio(pop_cons_unfrozen[p], n),
            outcomes: fractions(&pop_outcomes[p], n),
        }
    });
    let substrata = [0, 1, 2, 3].map(|s| SubstratumStats {
        count: sub_count[s],
        outcomes: fractions(&sub_outcomes[s], sub_count[s]),
    });
    TickObservables {
        tick,
        populations,
        substrata,
    }
}
