//! Toom potentials built from addressing-scheme norms, and checks of the three Toom conditions.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::addressing::{compute_norms, AddressingScheme, Norms};
use crate::automaton::{dependence_ball, dependents_after, minimal_error_sets, AutomatonSpec};
use crate::error::{Error, Result};
use crate::tessellation::{class_of, Tessellation, VertexClass, VertexId};

const MAX_WITNESSES: usize = 16;

/// n = l+1 component functions over (vertex, time).
#[derive(Clone, Debug)]
pub struct ToomPotential {
    pub colors: u32,
    pub norms: Norms,
}

/// Potential from the norms of a shortest-path-invariant scheme.
pub fn build_potential(t: &Tessellation, scheme: &AddressingScheme) -> Result<ToomPotential> {
    Ok(ToomPotential {
        colors: scheme.colors,
        norms: compute_norms(t, scheme)?,
    })
}

impl ToomPotential {
    pub fn components(&self) -> usize {
        self.colors as usize + 1
    }

    /// L_j((a,t)) for j = 1..=l+1, returned as a vector indexed j-1.
    pub fn eval(&self, a: VertexId, t: i64) -> Vec<i64> {
        let l = self.colors as i64;
        let mut out: Vec<i64> = (0..self.colors).map(|k| -(l + 1) * self.norms.norm_k(a, k) as i64 - t).collect();
        out.push((l + 1) * self.norms.norm(a) as i64 + l * t);
        out
    }

    /// Bound on |L_j(b,t) - L_j(a,t+1)| claimed for kappa-step arcs: kappa (l+2).
    pub fn stated_bound(&self, kappa: u32) -> i64 {
        kappa as i64 * (self.colors as i64 + 2)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcWitness {
    pub a: VertexId,
    pub b: VertexId,
    /// Component index j in 1..=l+1.
    pub component: usize,
    pub difference: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetWitness {
    pub vertex: VertexId,
    pub class: VertexClass,
    pub error_set: Vec<VertexId>,
    pub component: usize,
    /// "i" for the generation-increase component, "ii" for a color component.
    pub hypothesis: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub vertices: Vec<VertexId>,
    pub composed_sets_enumerated: u64,
    pub agree: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToomReport {
    pub kappa: u32,
    pub colors: u32,
    pub region_size: usize,
    pub arcs_checked: usize,
    pub m_stated: i64,
    /// Largest |L_j(b,t) - L_j(a,t+1)| over the region's arcs.
    pub m_tight: i64,
    pub condition1: bool,
    pub condition1_witnesses: Vec<ArcWitness>,
    pub condition2: bool,
    pub condition2_witnesses: Vec<VertexId>,
    pub condition3: bool,
    pub condition3_witnesses: Vec<SetWitness>,
    pub crosscheck: Option<CrossCheck>,
    pub pass: bool,
}

/// Cells that fail component j for target a: b is bad iff L_j(b,t) - L_j(a,t+1) < 1.
fn bad_for(pot: &ToomPotential, a: VertexId, j: usize, b: VertexId) -> bool {
    let l = pot.colors as usize;
    if j == l {
        pot.norms.norm(b) < pot.norms.norm(a) + 1
    } else {
        pot.norms.norm_k(b, j as u32) > pot.norms.norm_k(a, j as u32)
    }
}

fn bad_count(spec: &AutomatonSpec, pot: &ToomPotential, a: VertexId, j: usize, c: VertexId) -> Vec<VertexId> {
    spec.guardians(c).iter().copied().filter(|&b| bad_for(pot, a, j, b)).collect()
}

/// Exact search for an error set of the kappa-fold speed-up lying entirely in the bad set of component j.
fn violating_set(spec: &AutomatonSpec, pot: &ToomPotential, a: VertexId, j: usize, kappa: u32) -> Option<Vec<VertexId>> {
    let thr = spec.threshold(a) as usize;
    match kappa {
        1 => {
            let bad = bad_count(spec, pot, a, j, a);
            (bad.len() >= thr).then(|| bad[..thr].to_vec())
        }
        2 => {
            let mut union = Vec::new();
            let mut found = 0;
            for &c in spec.guardians(a) {
                let bad = bad_count(spec, pot, a, j, c);
                let tc = spec.threshold(c) as usize;
                if bad.len() >= tc {
                    union.extend_from_slice(&bad[..tc]);
                    found += 1;
                    if found == thr {
                        union.sort_unstable();
                        union.dedup();
                        return Some(union);
                    }
                }
            }
            None
        }
        _ => None,
    }
}

/// Brute-force enumeration of every composed error set of `a` as bitmasks over its 2-ball.
/// Returns, per component, whether some composed set lies in the bad set, and the number of sets.
fn brute_force_kappa2(spec: &AutomatonSpec, pot: &ToomPotential, a: VertexId) -> Result<(Vec<bool>, u64)> {
    let t = spec.tessellation();
    let ball = dependence_ball(t, a, 2);
    if ball.len() > 64 {
        return Err(Error::NotApplicable(format!("2-ball of {a} has {} cells, more than 64", ball.len())));
    }
    let index = |v: VertexId| ball.iter().position(|&w| w == v).expect("in ball") as u32;
    let mask_of = |s: &[VertexId]| s.iter().fold(0u64, |m, &v| m | 1u64 << index(v));
    let comps = pot.components();
    let bad_masks: Vec<u64> = (0..comps)
        .map(|j| ball.iter().enumerate().filter(|(_, &b)| bad_for(pot, a, j, b)).fold(0u64, |m, (i, _)| m | 1u64 << i))
        .collect();
    let mut hit = vec![false; comps];
    let mut count = 0u64;
    for outer in minimal_error_sets(spec, a)? {
        let inner: Vec<Vec<u64>> = outer
            .iter()
            .map(|&c| minimal_error_sets(spec, c).map(|it| it.map(|s| mask_of(&s)).collect()))
            .collect::<Result<_>>()?;
        enumerate_unions(&inner, 0, 0, &bad_masks, &mut hit, &mut count);
    }
    Ok((hit, count))
}

fn enumerate_unions(inner: &[Vec<u64>], depth: usize, acc: u64, bad: &[u64], hit: &mut [bool], count: &mut u64) {
    if depth == inner.len() {
        *count += 1;
        for (j, bm) in bad.iter().enumerate() {
            hit[j] |= acc & !bm == 0;
        }
        return;
    }
    for &m in &inner[depth] {
        enumerate_unions(inner, depth + 1, acc | m, bad, hit, count);
    }
}

/// Check the arc bound, the zero-sum property and the bad-set condition on the unweakened automaton `spec` with the given speed-up.
/// `crosscheck_samples` > 0 validates the kappa=2 search by enumeration on that many sampled vertices.
pub fn verify_toom(
    spec: &AutomatonSpec,
    pot: &ToomPotential,
    kappa: u32,
    crosscheck_samples: usize,
    seed: u64,
) -> Result<ToomReport> {
    if !(1..=2).contains(&kappa) {
        return Err(Error::NotApplicable(format!("speed-up {kappa} not supported (1 or 2)")));
    }
    if spec.weakening.is_some() {
        return Err(Error::NotApplicable("Toom conditions are checked on the unweakened automaton".into()));
    }
    let t = spec.tessellation();
    let g = t.generations_built;
    if g <= kappa {
        return Err(Error::InsufficientMargin(format!("need more than {kappa} generations")));
    }
    let region: Vec<VertexId> = t.vertices.iter().filter(|v| v.generation + kappa <= g).map(|v| v.id).collect();
    let m_stated = pot.stated_bound(kappa);
    let comps = pot.components();

    let mut m_tight = 0i64;
    let mut arcs = 0usize;
    let mut w1 = Vec::new();
    let mut w2 = Vec::new();
    let mut w3 = Vec::new();
    let (mut c1, mut c2, mut c3) = (true, true, true);
    for &a in &region {
        let la = pot.eval(a, 1);
        if la.iter().sum::<i64>() != 0 || pot.eval(a, 0).iter().sum::<i64>() != 0 {
            c2 = false;
            if w2.len() < MAX_WITNESSES {
                w2.push(a);
            }
        }
        for b in dependents_after(spec, a, kappa) {
            arcs += 1;
            let lb = pot.eval(b, 0);
            for j in 0..comps {
                let d = lb[j] - la[j];
                m_tight = m_tight.max(d.abs());
                if d.abs() > m_stated {
                    c1 = false;
                    if w1.len() < MAX_WITNESSES {
                        w1.push(ArcWitness {
                            a,
                            b,
                            component: j + 1,
                            difference: d,
                        });
                    }
                }
            }
        }
        for j in 0..comps {
            if let Some(set) = violating_set(spec, pot, a, j, kappa) {
                c3 = false;
                if w3.len() < MAX_WITNESSES {
                    w3.push(SetWitness {
                        vertex: a,
                        class: class_of(t, a),
                        error_set: set,
                        component: j + 1,
                        hypothesis: if j == comps - 1 { "i" } else { "ii" }.into(),
                    });
                }
            }
        }
    }

    let crosscheck = if crosscheck_samples > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sample: Vec<VertexId> = region.choose_multiple(&mut rng, crosscheck_samples).copied().collect();
        if let Some(&two) = region.iter().find(|&&v| class_of(t, v) == VertexClass::TwoParent) {
            if !sample.contains(&two) {
                sample.push(two);
            }
        }
        sample.sort_unstable();
        let mut agree = true;
        let mut total = 0;
        for &a in &sample {
            let exact: Vec<bool> = match kappa {
                2 => {
                    let (hit, n) = brute_force_kappa2(spec, pot, a)?;
                    total += n;
                    hit
                }
                _ => {
                    let sets: Vec<Vec<VertexId>> = minimal_error_sets(spec, a)?.collect();
                    total += sets.len() as u64;
                    (0..comps).map(|j| sets.iter().any(|s| s.iter().all(|&b| bad_for(pot, a, j, b)))).collect()
                }
            };
            let fast: Vec<bool> = (0..comps).map(|j| violating_set(spec, pot, a, j, kappa).is_some()).collect();
            agree &= exact == fast;
        }
        Some(CrossCheck {
            vertices: sample,
            composed_sets_enumerated: total,
            agree,
        })
    } else {
        None
    };
    let pass = c1 && c2 && c3 && crosscheck.as_ref().is_none_or(|c| c.agree);
    Ok(ToomReport {
        kappa,
        colors: pot.colors,
        region_size: region.len(),
        arcs_checked: arcs,
        m_stated,
        m_tight,
        condition1: c1,
        condition1_witnesses: w1,
        condition2: c2,
        condition2_witnesses: w2,
        condition3: c3,
        condition3_witnesses: w3,
        crosscheck,
        pass,
    })
}
