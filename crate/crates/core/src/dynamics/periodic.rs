//! Periodic orbits of the induced map, found by bisection on monotone
//! branch compositions, with their flow periods (roof sums around the
//! cycle) and rational-approximation diagnostics of period ratios.
//!
//! Each branch of F is indexed by a return time sigma and is an increasing
//! expanding diffeomorphism from an interval of Y onto (almost all of) Y.
//! A length-k itinerary therefore has at most one periodic point, found by
//! a sign change of G(y) - y on the composition's domain. Flow-period
//! ratios close to rationals p/q with small q flag (near-)lattice behavior:
//! a constant roof makes every ratio exactly rational, while a generic
//! affine roof keeps them bounded away from low haunting denominators.

use std::collections::HashSet;

use super::{first_return, DynamicsError, IntermittentMapSpec, RoofSpec};

#[derive(Debug, Clone)]
pub struct PeriodicOrbit {
    /// canonical (lexicographically smallest) rotation of the return-time
    /// itinerary
    pub itinerary: Vec<u64>,
    pub y: f64,
    /// flow period: the roof summed over the full cycle through the base
    /// map (tau_k of the cycle)
    pub flow_period: f64,
    /// false when the itinerary is a power of a shorter cycle
    pub primitive: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct RatioDiagnostic {
    pub i: usize,
    pub j: usize,
    /// flow_period[j] / flow_period[i], j > i
    pub ratio: f64,
    /// best rational approximation p/q with q <= 100
    pub p: u64,
    pub q: u64,
    pub distance: f64,
}

/// Preimage ladder of the branch cut under the left branch: xi[0] = x*,
/// g(xi[j+1]) = xi[j]; a point entering at z in [xi[j], xi[j-1]) needs
/// exactly j more steps to leave the left side.
fn xi_ladder(map: &IntermittentMapSpec, len: usize) -> Vec<f64> {
    let mut xi = Vec::with_capacity(len + 1);
    xi.push(map.x_star());
    for j in 0..len {
        let target = xi[j];
        let (mut lo, mut hi) = (0.0, target);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if map.lift(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        xi.push(0.5 * (lo + hi));
    }
    xi
}

/// Inverse of the right branch on targets in [0, c1].
fn right_inv(map: &IntermittentMapSpec, target: f64) -> f64 {
    let (mut lo, mut hi) = (map.x_star(), 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if map.lift(mid) - 1.0 < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Domain [a, b) of the branch with return time sigma, or None if empty.
fn branch_domain(map: &IntermittentMapSpec, xi: &[f64], sigma: u64) -> Option<(f64, f64)> {
    let s = sigma as usize;
    let enter_lo = xi[s - 1];
    let enter_hi = if s >= 2 { xi[s - 2] } else { 1.0 };
    let c1 = map.c1();
    if enter_lo >= c1 {
        return None; // right-branch image never reaches this deep band
    }
    // inset the edges so endpoint rounding can't misclassify the branch
    let a = right_inv(map, enter_lo) + 1e-12;
    let b = right_inv(map, enter_hi.min(c1)) - 1e-12;
    if b <= a + 1e-13 {
        return None;
    }
    Some((a, b))
}

/// Apply the sigma-branch of F (g iterated sigma times); valid on its
/// domain, where the itinerary is automatic.
fn branch_apply(map: &IntermittentMapSpec, sigma: u64, y: f64) -> f64 {
    let mut x = y;
    for _ in 0..sigma {
        x = map.apply(x);
    }
    x
}

fn canonical_rotation(word: &[u64]) -> Vec<u64> {
    let k = word.len();
    let mut best = word.to_vec();
    for r in 1..k {
        let rot: Vec<u64> = (0..k).map(|i| word[(i + r) % k]).collect();
        if rot < best {
            best = rot;
        }
    }
    best
}

fn is_primitive(word: &[u64]) -> bool {
    let k = word.len();
    for d in 1..k {
        if k % d == 0 && (0..k).all(|i| word[i] == word[i % d]) {
            return false;
        }
    }
    true
}

fn best_rational(ratio: f64, q_cap: u64) -> (u64, u64, f64) {
    let mut best = (0u64, 1u64, f64::INFINITY);
    for q in 1..=q_cap {
        let p = (ratio * q as f64).round().max(0.0) as u64;
        let d = (ratio - p as f64 / q as f64).abs();
        if d < best.2 {
            best = (p, q, d);
        }
    }
    best
}

/// Enumerate periodic orbits of the induced map with itinerary length at
/// most `k_max` and flow period at most `q_max`, then compare all flow
/// period ratios against rationals with denominator up to 100.
pub fn periodic_orbit_periods(
    map: &IntermittentMapSpec,
    roof: &RoofSpec,
    k_max: usize,
    q_max: f64,
) -> Result<(Vec<PeriodicOrbit>, Vec<RatioDiagnostic>), DynamicsError> {
    roof.validate()?;
    if k_max == 0 || !(q_max > 1.0) {
        return Err(DynamicsError::Domain(
            "need k_max >= 1 and q_max > 1".into(),
        ));
    }
    let sigma_cap = (q_max / roof.min_value()).ceil() as u64 + 1;
    let xi = xi_ladder(map, sigma_cap as usize + 1);
    let mut domains: Vec<Option<(f64, f64)>> = vec![None];
    for s in 1..=sigma_cap {
        domains.push(branch_domain(map, &xi, s));
    }

    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut orbits: Vec<PeriodicOrbit> = Vec::new();

    // DFS over itineraries; `dom` is the set of y following the itinerary
    // so far, tracked as an interval (branches are monotone), and `img` is
    // its forward image.
    struct Frame {
        word: Vec<u64>,
        dom: (f64, f64),
        img: (f64, f64),
    }
    let mut stack: Vec<Frame> = Vec::new();
    for s in 1..=sigma_cap {
        if let Some(d) = domains[s as usize] {
            stack.push(Frame {
                word: vec![s],
                dom: d,
                img: (branch_apply(map, s, d.0), branch_apply(map, s, d.1)),
            });
        }
    }
    while let Some(frame) = stack.pop() {
        let sum_sigma: u64 = frame.word.iter().sum();
        // cheapest lower bound on the flow period so far
        if sum_sigma as f64 * roof.min_value() > q_max {
            continue;
        }
        // fixed point of this composition?
        let h_lo = frame.img.0 - frame.dom.0;
        let h_hi = frame.img.1 - frame.dom.1;
        if h_lo < 0.0 && h_hi > 0.0 {
            let canon = canonical_rotation(&frame.word);
            if !seen.contains(&canon) {
                let (mut lo, mut hi) = frame.dom;
                let g_of = |y: f64| {
                    let mut x = y;
                    for &s in &frame.word {
                        x = branch_apply(map, s, x);
                    }
                    x
                };
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if g_of(mid) - mid < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let y0 = 0.5 * (lo + hi);
                if (g_of(y0) - y0).abs() < 1e-10 {
                    // flow period: replay the cycle through first_return
                    let mut q = 0.0;
                    let mut y = y0;
                    let mut ok = true;
                    for &s in &frame.word {
                        match first_return(map, roof, y, 1 << 22) {
                            Ok(step) => {
                                debug_assert_eq!(step.sigma, s);
                                q += step.tau;
                                y = step.f_y;
                            }
                            Err(_) => {
                                ok = false;
                                break;
                            }
                        }
                    }
                    if ok && q <= q_max {
                        seen.insert(canon.clone());
                        orbits.push(PeriodicOrbit {
                            itinerary: canon.clone(),
                            y: y0,
                            flow_period: q,
                            primitive: is_primitive(&canon),
                        });
                    }
                }
            }
        }
        // extend the itinerary
        if frame.word.len() < k_max {
            for s in 1..=sigma_cap {
                let Some(d) = domains[s as usize] else {
                    continue;
                };
                // image cells that intersect the next branch's domain
                let cut_lo = frame.img.0.max(d.0);
                let cut_hi = frame.img.1.min(d.1);
                if cut_hi <= cut_lo + 1e-13 {
                    continue;
                }
                // pull the cut back through the composition so far
                let mut new_dom = frame.dom;
                if cut_lo > frame.img.0 {
                    new_dom.0 = pullback(map, &frame.word, frame.dom, cut_lo);
                }
                if cut_hi < frame.img.1 {
                    new_dom.1 = pullback(map, &frame.word, frame.dom, cut_hi);
                }
                if new_dom.1 <= new_dom.0 + 1e-13 {
                    continue;
                }
                let mut word = frame.word.clone();
                word.push(s);
                let img = (
                    branch_apply(map, s, cut_lo.max(d.0)),
                    branch_apply(map, s, cut_hi.min(d.1)),
                );
                stack.push(Frame {
                    word,
                    dom: new_dom,
                    img,
                });
            }
        }
    }

    orbits.sort_by(|a, b| a.flow_period.total_cmp(&b.flow_period));
    let mut ratios = Vec::new();
    for i in 0..orbits.len() {
        for j in (i + 1)..orbits.len() {
            let ratio = orbits[j].flow_period / orbits[i].flow_period;
            let (p, q, distance) = best_rational(ratio, 100);
            ratios.push(RatioDiagnostic {
                i,
                j,
                ratio,
                p,
                q,
                distance,
            });
        }
    }
    Ok((orbits, ratios))
}

/// Invert the whole composition on its domain interval for one cut point.
fn pullback(map: &IntermittentMapSpec, word: &[u64], dom: (f64, f64), target: f64) -> f64 {
    let g_of = |y: f64| {
        let mut x = y;
        for &s in word {
            x = branch_apply(map, s, x);
        }
        x
    };
    let (mut lo, mut hi) = dom;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g_of(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
