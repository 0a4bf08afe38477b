//! Convergence of string and Hamiltonian sequences.
//!
//! A family `m_n` of Weyl functions converges locally uniformly to `m` iff
//! the travel coordinates `sigma_n(x)` stay bounded on `[0, L)` along every
//! subsequence and `int w_n`, `int sigma_n` converge to `int w`,
//! `int sigma`; it diverges to infinity iff `sigma_n(x)` blows up for every
//! `x > 0`. Only a finite family is available here, so boundedness is
//! judged by the growth of `sigma_n(x)` over the family and convergence by
//! the decay of the measured differences. The report says which.

use crate::canonical::Hamiltonian;
use crate::coeffs::{DensityPiece, Length, Measure, StringSpec};
use crate::error::Result;
use crate::scalar::{Cx, Real};
use crate::weyl::weyl_m;

/// Indexed family of strings with an optional limit.
#[derive(Debug, Clone, PartialEq)]
pub struct StringSequence<T> {
    pub specs: Vec<StringSpec<T>>,
    pub limit: Option<StringSpec<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Converges,
    DivergesToInfinity,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Converges => "converges",
            Verdict::DivergesToInfinity => "diverges-to-infinity",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Thresholds of the finite surrogate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceOptions<T> {
    /// `sigma_n(x)` counts as unbounded when its largest value exceeds
    /// `growth * (1 + smallest value)` over the family.
    pub growth: T,
    /// Differences count as decaying when the last one is at most
    /// `decay` times the first one.
    pub decay: T,
    /// Differences below this count as zero.
    pub abs_tol: T,
}

impl<T: Real> Default for ConvergenceOptions<T> {
    fn default() -> Self {
        ConvergenceOptions {
            growth: T::lit(10.0),
            decay: T::lit(0.25),
            abs_tol: T::lit(1e-9),
        }
    }
}

pub const SURROGATE_NOTE: &str = "finite surrogate: boundedness over subsequences is judged by the growth of sigma_n(x) across the supplied family, convergence by the decay of the measured differences from the first to the last member";

#[derive(Debug, Clone, PartialEq)]
pub struct StringConvergenceReport<T> {
    pub xs: Vec<T>,
    /// `sigma_n(x)`, one row per member.
    pub sigma_table: Vec<Vec<T>>,
    /// Largest `sigma_n(x)` over the family, per `x`.
    pub sigma_max: Vec<T>,
    pub bounded: Vec<bool>,
    /// Largest grid point up to which `sigma_n` stays bounded (zero if none).
    pub bounded_sup: T,
    /// `|int_0^x w_n - int_0^x w|`, one row per member; empty without a limit.
    pub w_integral_table: Vec<Vec<T>>,
    /// `|int_0^x sigma_n - int_0^x sigma|`, one row per member.
    pub sigma_integral_table: Vec<Vec<T>>,
    /// Per member: the larger of the two sup-differences over `xs`.
    pub decay: Vec<T>,
    pub verdict: Verdict,
    /// Last entry of `decay`, or the growth factor of `sigma` when diverging.
    pub margin: T,
    pub note: &'static str,
}

fn decays<T: Real>(d: &[T], opts: &ConvergenceOptions<T>) -> bool {
    match (d.first(), d.last()) {
        (Some(&first), Some(&last)) => {
            last <= opts.abs_tol || (d.len() > 1 && last <= opts.decay * first)
        }
        _ => false,
    }
}

fn sup<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |s, x| s.max(*x))
}

/// Criterion route: travel-coordinate boundedness and convergence of the
/// primitives of `w` and `sigma` on the grid `xs`, using members `0..=n_max`.
pub fn string_convergence_check<T: Real>(
    seq: &StringSequence<T>,
    xs: &[T],
    n_max: usize,
) -> StringConvergenceReport<T> {
    string_convergence_check_with(seq, xs, n_max, ConvergenceOptions::default())
}

pub fn string_convergence_check_with<T: Real>(
    seq: &StringSequence<T>,
    xs: &[T],
    n_max: usize,
    opts: ConvergenceOptions<T>,
) -> StringConvergenceReport<T> {
    let members = &seq.specs[..seq.specs.len().min(n_max.saturating_add(1))];
    let min_len = members
        .iter()
        .map(|s| s.length().value())
        .fold(T::infinity(), |a, b| a.min(b));
    let limit_len = seq
        .limit
        .as_ref()
        .map_or(T::infinity(), |s| s.length().value());
    let inside = |x: T| x < min_len && x < limit_len;
    let sigma_at = |s: &StringSpec<T>, x: T| {
        if x < s.length().value() {
            s.travel().sigma(x)
        } else {
            T::infinity()
        }
    };
    let sigma_table: Vec<Vec<T>> = members
        .iter()
        .map(|s| xs.iter().map(|&x| sigma_at(s, x)).collect())
        .collect();
    let mut sigma_max = Vec::with_capacity(xs.len());
    let mut bounded = Vec::with_capacity(xs.len());
    let mut bounded_sup = T::zero();
    let mut worst_growth = T::one();
    for (j, &x) in xs.iter().enumerate() {
        let col: Vec<T> = sigma_table.iter().map(|r| r[j]).collect();
        let hi = sup(&col);
        let lo = col.iter().fold(T::infinity(), |a, b| a.min(*b));
        let ok = inside(x) && hi.is_finite() && hi <= opts.growth * (T::one() + lo);
        if x > T::zero() {
            worst_growth = worst_growth.max(hi / (T::one() + lo));
        }
        if ok && x > bounded_sup {
            bounded_sup = x;
        }
        sigma_max.push(hi);
        bounded.push(ok);
    }

    let mut w_integral_table = Vec::new();
    let mut sigma_integral_table = Vec::new();
    let mut decay = Vec::new();
    if let Some(lim) = &seq.limit {
        for s in members {
            let mut wr = Vec::with_capacity(xs.len());
            let mut sr = Vec::with_capacity(xs.len());
            for &x in xs {
                if inside(x) {
                    let dw =
                        (s.coefficients().w_integral(x) - lim.coefficients().w_integral(x)).abs();
                    let ds = (s.travel().sigma_integral(x) - lim.travel().sigma_integral(x)).abs();
                    wr.push(dw);
                    sr.push(ds);
                } else {
                    wr.push(T::nan());
                    sr.push(T::nan());
                }
            }
            decay.push(sup(&wr).max(sup(&sr)));
            w_integral_table.push(wr);
            sigma_integral_table.push(sr);
        }
    }

    let positive: Vec<usize> = (0..xs.len()).filter(|&j| xs[j] > T::zero()).collect();
    let all_bounded = !positive.is_empty() && positive.iter().all(|&j| bounded[j]);
    let none_bounded = !positive.is_empty() && positive.iter().all(|&j| !bounded[j]);
    let (verdict, margin) = if none_bounded {
        (Verdict::DivergesToInfinity, worst_growth)
    } else if seq.limit.is_some() && all_bounded && decays(&decay, &opts) {
        (Verdict::Converges, *decay.last().expect("non-empty family"))
    } else {
        (
            Verdict::Inconclusive,
            decay.last().copied().unwrap_or(worst_growth),
        )
    };
    StringConvergenceReport {
        xs: xs.to_vec(),
        sigma_table,
        sigma_max,
        bounded,
        bounded_sup,
        w_integral_table,
        sigma_integral_table,
        decay,
        verdict,
        margin,
        note: SURROGATE_NOTE,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MConvergenceReport<T> {
    pub grid: Vec<Cx<T>>,
    /// Per member: `sup_z |m_n(z) - m(z)|` with a limit, else `min_z |m_n(z)|`.
    pub values: Vec<T>,
    pub verdict: Verdict,
    pub margin: T,
}

/// Direct route: compares the Weyl functions themselves on a finite grid.
pub fn m_convergence_check<T: Real>(
    seq: &StringSequence<T>,
    grid: &[Cx<T>],
    n_max: usize,
    tol: T,
) -> Result<MConvergenceReport<T>> {
    let opts = ConvergenceOptions::<T>::default();
    let members = &seq.specs[..seq.specs.len().min(n_max.saturating_add(1))];
    let eval = |s: &StringSpec<T>| -> Result<Vec<Cx<T>>> {
        grid.iter().map(|&z| Ok(weyl_m(s, z, tol)?.m)).collect()
    };
    let mut values = Vec::with_capacity(members.len());
    let limit = seq.limit.as_ref().map(eval).transpose()?;
    for s in members {
        let ms = eval(s)?;
        let v = match &limit {
            Some(lm) => ms
                .iter()
                .zip(lm)
                .fold(T::zero(), |a, (p, q)| a.max((*p - *q).norm())),
            None => ms.iter().fold(T::infinity(), |a, p| a.min(p.norm())),
        };
        values.push(v);
    }
    let first = values.first().copied().unwrap_or(T::zero());
    let last = values.last().copied().unwrap_or(T::zero());
    let (verdict, margin) = if limit.is_some() && decays(&values, &opts) {
        (Verdict::Converges, last)
    } else if limit.is_none() && values.len() > 1 && last > opts.growth * (T::one() + first) {
        (Verdict::DivergesToInfinity, last / (T::one() + first))
    } else if limit.is_some() && values.len() > 1 {
        // the limit is not approached; check whether the family blows up instead
        let mut smallest = T::infinity();
        let mut smallest_first = T::infinity();
        for (k, s) in members.iter().enumerate() {
            let m = eval(s)?.iter().fold(T::infinity(), |a, p| a.min(p.norm()));
            if k == 0 {
                smallest_first = m;
            }
            smallest = m;
        }
        if smallest > opts.growth * (T::one() + smallest_first) {
            (
                Verdict::DivergesToInfinity,
                smallest / (T::one() + smallest_first),
            )
        } else {
            (Verdict::Inconclusive, last)
        }
    } else {
        (Verdict::Inconclusive, last)
    };
    Ok(MConvergenceReport {
        grid: grid.to_vec(),
        values,
        verdict,
        margin,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianConvergenceReport<T> {
    pub ss: Vec<T>,
    /// Entrywise largest `|int_0^s H_n - int_0^s H|` per member and `s`;
    /// empty without a limit.
    pub limit_table: Vec<Vec<T>>,
    /// Same against `int_0^s [[1, 0], [0, 0]] = diag(s, 0)`.
    pub infinity_table: Vec<Vec<T>>,
    pub limit_decay: Vec<T>,
    pub infinity_decay: Vec<T>,
    pub verdict: Verdict,
    pub margin: T,
}

/// Primitives of `H_n` against the limit and against `diag(s, 0)`.
pub fn hamiltonian_convergence_check<T: Real>(
    hs: &[Hamiltonian<T>],
    limit: Option<&Hamiltonian<T>>,
    ss: &[T],
) -> HamiltonianConvergenceReport<T> {
    let opts = ConvergenceOptions::<T>::default();
    let diff = |a: [T; 3], b: [T; 3]| (0..3).fold(T::zero(), |m, i| m.max((a[i] - b[i]).abs()));
    let mut limit_table = Vec::new();
    let mut infinity_table = Vec::with_capacity(hs.len());
    for h in hs {
        if let Some(lim) = limit {
            limit_table.push(
                ss.iter()
                    .map(|&s| diff(h.primitive(s), lim.primitive(s)))
                    .collect(),
            );
        }
        infinity_table.push(
            ss.iter()
                .map(|&s| diff(h.primitive(s), [s, T::zero(), T::zero()]))
                .collect::<Vec<T>>(),
        );
    }
    let limit_decay: Vec<T> = limit_table.iter().map(|r: &Vec<T>| sup(r)).collect();
    let infinity_decay: Vec<T> = infinity_table.iter().map(|r| sup(r)).collect();
    let (verdict, margin) = if limit.is_some() && decays(&limit_decay, &opts) {
        (
            Verdict::Converges,
            *limit_decay.last().expect("non-empty family"),
        )
    } else if decays(&infinity_decay, &opts) {
        (
            Verdict::DivergesToInfinity,
            *infinity_decay.last().expect("non-empty family"),
        )
    } else {
        (
            Verdict::Inconclusive,
            limit_decay.last().copied().unwrap_or(T::zero()),
        )
    };
    HamiltonianConvergenceReport {
        ss: ss.to_vec(),
        limit_table,
        infinity_table,
        limit_decay,
        infinity_decay,
        verdict,
        margin,
    }
}

/// Sum of possibly overlapping constant pieces as disjoint pieces.
pub fn merge_density<T: Real>(pieces: &[DensityPiece<T>]) -> Vec<DensityPiece<T>> {
    let mut cuts: Vec<T> = pieces.iter().flat_map(|p| [p.a, p.b]).collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite endpoints"));
    cuts.dedup();
    let mut out: Vec<DensityPiece<T>> = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let value = pieces
            .iter()
            .filter(|p| p.a <= a && b <= p.b)
            .fold(T::zero(), |s, p| s + p.value);
        if value == T::zero() {
            continue;
        }
        match out.last_mut() {
            Some(last) if last.b == a && last.value == value => last.b = b,
            _ => out.push(DensityPiece { a, b, value }),
        }
    }
    out
}

fn mollify_measure<T: Real>(m: &Measure<T>, n: usize, l: T) -> Measure<T> {
    let width = T::one() / T::from_usize(n.max(1)).expect("index");
    let mut pieces = m.density.clone();
    for a in &m.atoms {
        let b = (a.x + width).min(l);
        pieces.push(DensityPiece {
            a: a.x,
            b,
            value: a.mass / width,
        });
    }
    Measure {
        atoms: Vec::new(),
        density: merge_density(&pieces),
    }
}

/// Replaces every atom `(x, a)` by the density `a n` on `[x, x + 1/n)`,
/// clipped to `[0, L)`.
pub fn mollify_string<T: Real>(spec: &StringSpec<T>, n: usize) -> Result<StringSpec<T>> {
    let l = spec.length().value();
    StringSpec::from_parts(
        spec.length(),
        mollify_measure(spec.omega(), n, l),
        mollify_measure(spec.upsilon(), n, l),
    )
}

/// `L = 1` strings with `omega = n delta_0`, which diverge to infinity.
pub fn scaled_atom_family<T: Real>(ns: &[usize]) -> Result<StringSequence<T>> {
    let specs = ns
        .iter()
        .map(|&n| {
            StringSpec::from_parts(
                Length::Finite(T::one()),
                Measure::zero().with_atom(T::zero(), T::from_usize(n).expect("index")),
                Measure::zero(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StringSequence { specs, limit: None })
}
