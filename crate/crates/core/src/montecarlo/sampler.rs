//! Exact uniform sampling of strings whose sector lies in a cone.
//!
//! The string is generated site by site as a walk on the sector tree. The
//! number of completions of a partial string that end inside the cone depends
//! only on where the current vertex sits relative to the cone apex `P`: at `P`
//! itself, `δ` steps below it inside the cone, or `δ` steps away on the other
//! side. Weighting every move by its completion count gives the uniform law.

use rand::Rng;

use crate::census::cone::Cone;
use crate::error::{invalid, Result};

/// Vertex position relative to the cone apex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pos {
    Apex,
    Inside(usize),
    Outside(usize),
}

#[derive(Debug, Clone)]
pub struct ConeSampler {
    n: u32,
    len: usize,
    apex: Vec<u8>,
    // completions[r][..]: apex, inside(1..=len), outside(1..=len)
    completions: Vec<Vec<f64>>,
}

impl ConeSampler {
    pub fn new(n: u32, len: usize, cone: &Cone) -> Result<Self> {
        let apex = cone.prefix.digits().to_vec();
        if cone.min_depth != apex.len() + 1 {
            return Err(invalid("sampler needs a cone of the form 'below the apex'"));
        }
        let p = apex.len();
        if p >= len {
            return Err(invalid(format!("cone C_{} is empty at L = {len}", p + 1)));
        }
        let nf = f64::from(n);
        let (k_in, k_out) = if p == 0 { (nf, 0.0) } else { (nf - 1.0, 1.0) };
        let width = 2 * len + 3;
        let idx_in = |d: usize| d;
        let idx_out = |d: usize| len + 1 + d;
        let mut completions = vec![vec![0.0; width]; len + 1];
        for d in 1..=len + 1 {
            completions[0][idx_in(d)] = 1.0;
        }
        for r in 1..=len {
            let (prev, cur) = completions.split_at_mut(r);
            let prev = &prev[r - 1];
            let cur = &mut cur[0];
            cur[0] = k_in * prev[idx_in(1)] + k_out * prev[idx_out(1)];
            for d in 1..=len {
                let toward_in = if d == 1 { prev[0] } else { prev[idx_in(d - 1)] };
                let toward_out = if d == 1 { prev[0] } else { prev[idx_out(d - 1)] };
                cur[idx_in(d)] = toward_in + (nf - 1.0) * prev[idx_in(d + 1)];
                cur[idx_out(d)] = toward_out + (nf - 1.0) * prev[idx_out(d + 1)];
            }
        }
        if !completions[len].iter().all(|x| x.is_finite()) {
            return Err(invalid("cone sampler weights overflow f64"));
        }
        Ok(Self {
            n,
            len,
            apex,
            completions,
        })
    }

    fn weight(&self, r: usize, pos: Pos) -> f64 {
        let row = &self.completions[r];
        match pos {
            Pos::Apex => row[0],
            Pos::Inside(d) if d <= self.len => row[d],
            Pos::Outside(d) if d <= self.len => row[self.len + 1 + d],
            _ => 0.0,
        }
    }

    fn position(&self, depth: usize, common: usize) -> Pos {
        let p = self.apex.len();
        if common == p {
            if depth == p {
                Pos::Apex
            } else {
                Pos::Inside(depth - p)
            }
        } else {
            Pos::Outside(depth - common + p - common)
        }
    }

    /// Number of strings in the cone, as a float.
    pub fn volume(&self) -> f64 {
        self.weight(self.len, self.position(0, 0))
    }

    /// One uniform string of the cone, as 0-based digits.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.len);
        let mut stack: Vec<u8> = Vec::with_capacity(self.len);
        let mut common = 0usize;
        let mut options = Vec::with_capacity(self.n as usize);
        for site in 0..self.len {
            let r = self.len - site - 1;
            options.clear();
            let mut total = 0.0;
            for b in 0..self.n as u8 {
                let (depth, c) = if stack.last() == Some(&b) {
                    (stack.len() - 1, common.min(stack.len() - 1))
                } else {
                    let extends = common == stack.len()
                        && stack.len() < self.apex.len()
                        && self.apex[stack.len()] == b;
                    (stack.len() + 1, common + usize::from(extends))
                };
                let w = self.weight(r, self.position(depth, c));
                total += w;
                options.push((b, c, w));
            }
            let mut u = rng.random::<f64>() * total;
            let mut pick = *options
                .iter()
                .rev()
                .find(|o| o.2 > 0.0)
                .expect("every prefix has a completion");
            for &o in &options {
                if u < o.2 {
                    pick = o;
                    break;
                }
                u -= o.2;
            }
            let (b, c, _) = pick;
            if stack.last() == Some(&b) {
                stack.pop();
            } else {
                stack.push(b);
            }
            common = c;
            out.push(b);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use num_traits::ToPrimitive;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::census::{cone_stats, SectorCensus};
    use crate::walks::{all_strings, reduce};

    #[test]
    fn volume_matches_census() {
        for (n, len, d) in [(3, 4, 2), (3, 8, 4), (4, 7, 3), (2, 9, 3), (3, 30, 2)] {
            let census = SectorCensus::new(n, len).unwrap();
            let cone = Cone::canonical(n, d).unwrap();
            let s = ConeSampler::new(n, len, &cone).unwrap();
            let want = cone_stats(&census, d).unwrap().volume.to_f64().unwrap();
            assert!((s.volume() - want).abs() <= 1e-12 * want, "{n} {len} {d}");
        }
    }

    #[test]
    fn samples_are_uniform_on_the_cone() {
        let (n, len) = (3, 4);
        let cone = Cone::canonical(n, 2).unwrap();
        let members: Vec<Vec<u8>> = all_strings(n, len)
            .filter(|s| cone.contains(&reduce(s)))
            .map(|s| s.digits().to_vec())
            .collect();
        assert_eq!(members.len(), 22);
        let s = ConeSampler::new(n, len, &cone).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 220_000;
        let mut counts: HashMap<Vec<u8>, u64> = HashMap::new();
        for _ in 0..draws {
            *counts.entry(s.sample(&mut rng)).or_default() += 1;
        }
        assert_eq!(counts.len(), members.len());
        let expected = draws as f64 / members.len() as f64;
        let chi2: f64 = members
            .iter()
            .map(|m| (counts[m] as f64 - expected).powi(2) / expected)
            .sum();
        // 21 degrees of freedom; 99.99th percentile is about 52
        assert!(chi2 < 52.0, "chi2 = {chi2}");
    }
}
