//! Seeded generators for networks and price/load streams.
//!
//! Every parameter family draws from its own ChaCha8 stream keyed by the
//! seed, and streams are consumed slot by slot, so a longer horizon only
//! appends draws.

use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{argument, MospError, Result};
use crate::scalar::Scalar;

use super::network::{CloudNetwork, SlotParams};

const STREAM_LINK_CAPS: u64 = 0;
const STREAM_DC_CAPS: u64 = 1;
const STREAM_PRICES: u64 = 2;
const STREAM_LOADS: u64 = 3;

fn family_rng(seed: u64, family: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(family);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseTag {
    /// i.i.d. prices and loads.
    Case1,
    /// Daily sinusoid plus noise.
    Case2,
    /// Imported from a file.
    Custom,
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseTag::Case1 => "case1",
            CaseTag::Case2 => "case2",
            CaseTag::Custom => "custom",
        })
    }
}

impl FromStr for CaseTag {
    type Err = MospError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "case1" => Ok(CaseTag::Case1),
            "case2" => Ok(CaseTag::Case2),
            "custom" => Ok(CaseTag::Custom),
            other => Err(argument(format!("unknown case tag {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioStream<T> {
    pub mapping_nodes: usize,
    pub data_centers: usize,
    pub seed: u64,
    pub case: CaseTag,
    /// Slot `t` lives at index `t − 1`.
    pub slots: Vec<SlotParams<T>>,
}

impl<T: Scalar> ScenarioStream<T> {
    pub fn horizon(&self) -> usize {
        self.slots.len()
    }

    /// Slot `t` (1-based).
    pub fn slot(&self, t: usize) -> &SlotParams<T> {
        &self.slots[t - 1]
    }

    /// Componentwise maximum of the loads over the stream.
    pub fn max_loads(&self) -> Vec<T> {
        let mut m = vec![T::neg_infinity(); self.mapping_nodes];
        for s in &self.slots {
            for (mi, &b) in m.iter_mut().zip(&s.loads) {
                *mi = mi.max(b);
            }
        }
        m
    }

    pub fn max_price(&self) -> T {
        self.slots
            .iter()
            .flat_map(|s| s.prices.iter().copied())
            .fold(T::neg_infinity(), T::max)
    }

    /// First `horizon` slots.
    pub fn truncated(&self, horizon: usize) -> Self {
        Self {
            slots: self.slots[..horizon.min(self.slots.len())].to_vec(),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.slots.iter().enumerate() {
            if s.prices.len() != self.data_centers || s.loads.len() != self.mapping_nodes {
                return Err(argument(format!("slot {} has the wrong number of fields", i + 1)));
            }
            if s.prices.iter().any(|p| !(*p >= T::zero()) || !p.is_finite())
                || s.loads.iter().any(|b| !(*b >= T::zero()) || !b.is_finite())
            {
                return Err(argument(format!(
                    "slot {} has a negative or non-finite price or load",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

fn uniform(lo: f64, hi: f64) -> Uniform<f64> {
    Uniform::new_inclusive(lo, hi)
}

/// Caps `x̄ ~ U[10,100]`, capacities `ȳ ~ U[100,200]`, link costs `40/x̄`.
pub fn gen_network<T: Scalar>(j: usize, k: usize, seed: u64) -> Result<CloudNetwork<T>> {
    let mut caps_rng = family_rng(seed, STREAM_LINK_CAPS);
    let mut dc_rng = family_rng(seed, STREAM_DC_CAPS);
    let link = uniform(10.0, 100.0);
    let dc = uniform(100.0, 200.0);
    let caps: Vec<f64> = (0..j * k).map(|_| link.sample(&mut caps_rng)).collect();
    let costs: Vec<T> = caps.iter().map(|&c| T::of(40.0 / c)).collect();
    let dc_caps: Vec<T> = (0..k).map(|_| T::of(dc.sample(&mut dc_rng))).collect();
    CloudNetwork::new(j, k, caps.into_iter().map(T::of).collect(), costs, dc_caps)
}

fn gen_stream<T: Scalar>(
    j: usize,
    k: usize,
    horizon: usize,
    seed: u64,
    case: CaseTag,
    slot: impl Fn(usize, &mut ChaCha8Rng, &mut ChaCha8Rng) -> SlotParams<f64>,
) -> Result<ScenarioStream<T>> {
    if horizon == 0 || j == 0 || k == 0 {
        return Err(argument("J, K and T must be at least 1"));
    }
    let mut price_rng = family_rng(seed, STREAM_PRICES);
    let mut load_rng = family_rng(seed, STREAM_LOADS);
    let slots = (1..=horizon)
        .map(|t| {
            let s = slot(t, &mut price_rng, &mut load_rng);
            SlotParams {
                prices: s.prices.into_iter().map(T::of).collect(),
                loads: s.loads.into_iter().map(T::of).collect(),
            }
        })
        .collect();
    Ok(ScenarioStream {
        mapping_nodes: j,
        data_centers: k,
        seed,
        case,
        slots,
    })
}

/// `p ~ U[1,3]`, `b ~ U[50,150]`, i.i.d. across slots and nodes.
pub fn gen_case1<T: Scalar>(j: usize, k: usize, horizon: usize, seed: u64) -> Result<ScenarioStream<T>> {
    let p = uniform(1.0, 3.0);
    let b = uniform(50.0, 150.0);
    gen_stream(j, k, horizon, seed, CaseTag::Case1, |_, pr, lr| SlotParams {
        prices: (0..k).map(|_| p.sample(pr)).collect(),
        loads: (0..j).map(|_| b.sample(lr)).collect(),
    })
}

/// `p = sin(πt/12) + U[1,3]`, `b = 50 sin(πt/12) + U[99,101]` for `t = 1, 2, …`.
pub fn gen_case2<T: Scalar>(j: usize, k: usize, horizon: usize, seed: u64) -> Result<ScenarioStream<T>> {
    let p = uniform(1.0, 3.0);
    let b = uniform(99.0, 101.0);
    gen_stream(j, k, horizon, seed, CaseTag::Case2, |t, pr, lr| {
        let s = (std::f64::consts::PI * t as f64 / 12.0).sin();
        SlotParams {
            // sin(πt/12) + U[1,3] ≥ 0; the clamp only guards rounding at t ≡ 18 mod 24
            prices: (0..k).map(|_| (s + p.sample(pr)).max(0.0)).collect(),
            loads: (0..j).map(|_| 50.0 * s + b.sample(lr)).collect(),
        }
    })
}

/// Stream generator for a case tag. `Custom` has no generator.
pub fn gen_case<T: Scalar>(
    case: CaseTag,
    j: usize,
    k: usize,
    horizon: usize,
    seed: u64,
) -> Result<ScenarioStream<T>> {
    match case {
        CaseTag::Case1 => gen_case1(j, k, horizon, seed),
        CaseTag::Case2 => gen_case2(j, k, horizon, seed),
        CaseTag::Custom => Err(argument("custom scenarios are imported, not generated")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case1_ranges_and_determinism() {
        let s = gen_case1::<f64>(3, 4, 200, 7).unwrap();
        for slot in &s.slots {
            assert!(slot.prices.iter().all(|&p| (1.0..=3.0).contains(&p)));
            assert!(slot.loads.iter().all(|&b| (50.0..=150.0).contains(&b)));
        }
        assert_eq!(s, gen_case1(3, 4, 200, 7).unwrap());
        assert_ne!(s, gen_case1(3, 4, 200, 8).unwrap());
    }

    #[test]
    fn longer_horizon_only_appends() {
        let short = gen_case2::<f64>(2, 2, 50, 3).unwrap();
        let long = gen_case2::<f64>(2, 2, 120, 3).unwrap();
        assert_eq!(short.slots[..], long.slots[..50]);
    }

    #[test]
    fn case2_phase_examples() {
        let s = gen_case2::<f64>(4, 4, 48, 11).unwrap();
        let t6 = s.slot(6);
        assert!(t6.prices.iter().all(|&p| (2.0..=4.0).contains(&p)));
        assert!(t6.loads.iter().all(|&b| (149.0..=151.0).contains(&b)));
        assert!(s.slot(24).prices.iter().all(|&p| (1.0 - 1e-12..=3.0 + 1e-12).contains(&p)));
    }

    #[test]
    fn network_ranges() {
        let n = gen_network::<f64>(10, 10, 5).unwrap();
        assert_eq!(n.edges(), 110);
        assert_eq!(n.feasible_box().dim(), 110);
        assert!(n.link_costs().iter().all(|&c| (0.4..=4.0).contains(&c)));
        assert!(n.link_caps().iter().all(|&c| (10.0..=100.0).contains(&c)));
        assert!(n.dc_caps().iter().all(|&c| (100.0..=200.0).contains(&c)));
        assert_eq!(n, gen_network(10, 10, 5).unwrap());
    }

    #[test]
    fn case_tag_round_trip() {
        for c in [CaseTag::Case1, CaseTag::Case2, CaseTag::Custom] {
            assert_eq!(c.to_string().parse::<CaseTag>().unwrap(), c);
        }
        assert!("case3".parse::<CaseTag>().is_err());
    }
}
