//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use migragent::dynamics::Outcome;
use migragent::world::{AgentSpec, Ethnicity, World};
use migragent::SimParams;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

pub const MASTER_SEED: u64 = 0x5eed_2024;

/// Host agents within Chebyshev distance 1, found by scanning every pair.
pub fn brute_neighbors(world: &World<f64>, id: u32) -> Vec<u32> {
    let grid = world.grid();
    let focal = world.agent(id);
    let (fx, fy) = grid.coords(focal.cell);
    let mut out: Vec<u32> = world
        .agents()
        .iter()
        .filter(|a| a.id != id && a.in_host)
        .filter(|a| {
            let (x, y) = grid.coords(a.cell);
            fx.abs_diff(x) <= 1 && fy.abs_diff(y) <= 1
        })
        .map(|a| a.id)
        .collect();
    out.sort_unstable();
    out
}

/// Happiness straight from the fitness fractions with threshold 1/2:
/// similar / N >= 1/2, evaluated in integers.
pub fn happiness_oracle(world: &World<f64>, id: u32) -> bool {
    let focal = world.agent(id);
    let others = brute_neighbors(world, id);
    if others.is_empty() {
        return true;
    }
    let similar = others
        .iter()
        .map(|&o| world.agent(o))
        .filter(|a| {
            if focal.conservatism < 0.0 {
                a.conservatism < 0.0
            } else {
                a.conservatism >= 0.0 && a.ethnicity == focal.ethnicity
            }
        })
        .count();
    2 * similar >= others.len()
}

/// Acculturation outcome from neighborhood composition alone: ingroup
/// proposals are always accepted, outgroup proposals only by liberals.
pub fn outcome_oracle(world: &World<f64>, id: u32) -> Outcome {
    let focal = world.agent(id);
    let others = brute_neighbors(world, id);
    let ingroup = others
        .iter()
        .any(|&o| world.agent(o).ethnicity == focal.ethnicity);
    let outgroup = focal.conservatism < 0.0
        && others
            .iter()
            .any(|&o| world.agent(o).ethnicity != focal.ethnicity);
    match (ingroup, outgroup) {
        (true, true) => Outcome::Integration,
        (false, true) => Outcome::Assimilation,
        (true, false) => Outcome::Separation,
        (false, false) => Outcome::Marginalization,
    }
}

/// Every neighbor type: (ethnicity, liberal?).
pub const KINDS: [(Ethnicity, bool); 4] = [
    (Ethnicity::Local, true),
    (Ethnicity::Local, false),
    (Ethnicity::Migrant, true),
    (Ethnicity::Migrant, false),
];

const LIBERAL_VALUES: [f64; 4] = [-0.6, -1e-9, -1.0, -1.4];
const CONSERVATIVE_VALUES: [f64; 4] = [0.0, 0.35, 1.0, 1.7];

pub fn kind_value(liberal: bool, variant: usize) -> f64 {
    if liberal {
        LIBERAL_VALUES[variant % 4]
    } else {
        CONSERVATIVE_VALUES[variant % 4]
    }
}

/// All multisets of `KINDS` with `k` elements, as index lists.
pub fn multisets(k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..KINDS.len() {
            cur.push(i);
            go(i, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, k, &mut Vec::new(), &mut out);
    out
}

/// A focal agent at the centre of a host block with `kinds` placed around
/// it in the eight Moore cells. Returns the world; the focal agent is id 0.
pub fn neighborhood_world(focal: (Ethnicity, bool), kinds: &[usize], variant: usize) -> World<f64> {
    let params = SimParams {
        number_local: 9,
        number_migrant: 9,
        grid_width: 20,
        grid_height: 10,
        auto_scale_grid: false,
        ..SimParams::default()
    };
    let (cx, cy) = (15, 5);
    let around = [
        (-1, -1),
        (0, -1),
        (1, -1),
        (-1, 0),
        (1, 0),
        (-1, 1),
        (0, 1),
        (1, 1),
    ];
    let mut specs = vec![AgentSpec {
        ethnicity: focal.0,
        conservatism: kind_value(focal.1, variant),
        position: Some((cx, cy)),
    }];
    for (slot, &k) in kinds.iter().enumerate() {
        let (eth, liberal) = KINDS[k];
        let (dx, dy) = around[(slot * 3 + variant) % 8];
        specs.push(AgentSpec {
            ethnicity: eth,
            conservatism: kind_value(liberal, variant + slot),
            position: Some(((cx as i32 + dx) as usize, (cy as i32 + dy) as usize)),
        });
    }
    World::from_layout(&params, &specs).expect("valid layout")
}

pub fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

/// Exact least squares via the normal equations X'X b = X'y over the
/// rationals. Returns (coefficients, residual sum of squares, R^2).
pub fn normal_equations_oracle(x: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64, f64) {
    let p = x[0].len();
    let xr: Vec<Vec<BigRational>> = x
        .iter()
        .map(|r| r.iter().map(|&v| rational(v)).collect())
        .collect();
    let yr: Vec<BigRational> = y.iter().map(|&v| rational(v)).collect();
    let mut a = vec![vec![BigRational::zero(); p + 1]; p];
    for (row, yv) in xr.iter().zip(&yr) {
        for i in 0..p {
            for j in 0..p {
                a[i][j] += &row[i] * &row[j];
            }
            a[i][p] += &row[i] * yv;
        }
    }
    for col in 0..p {
        let pivot = (col..p)
            .find(|&r| !a[r][col].is_zero())
            .expect("oracle design must be full rank");
        a.swap(col, pivot);
        let lead = a[col][col].clone();
        for v in a[col].iter_mut() {
            *v = &*v / &lead;
        }
        for r in 0..p {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot_row = a[col].clone();
                for (v, pv) in a[r].iter_mut().zip(pivot_row) {
                    *v -= &f * pv;
                }
            }
        }
    }
    let b: Vec<BigRational> = (0..p).map(|i| a[i][p].clone()).collect();
    let n = BigRational::from_integer(BigInt::from(y.len()));
    let mean = yr.iter().fold(BigRational::zero(), |s, v| s + v) / n;
    let mut sse = BigRational::zero();
    let mut sst = BigRational::zero();
    for (row, yv) in xr.iter().zip(&yr) {
        let fitted = row
            .iter()
            .zip(&b)
            .fold(BigRational::zero(), |s, (xv, bv)| s + xv * bv);
        let e = yv - fitted;
        sse += &e * &e;
        let d = yv - &mean;
        sst += &d * &d;
    }
    let r2 = if sst.is_zero() {
        BigRational::from_integer(1.into())
    } else {
        BigRational::from_integer(1.into()) - &sse / &sst
    };
    let to_f = |v: &BigRational| v.to_f64().expect("representable");
    (b.iter().map(to_f).collect(), to_f(&sse.abs()), to_f(&r2))
}

/// |a - b| <= tol * max(1, |b|).
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}
