//! Plain-text file formats.
//!
//! MDP files:
//!
//! ```text
//! MDP <|S|> <|A|> <H>
//! P0 <p_0> ... <p_{|S|-1}>
//! R <r_0> ... <r_{|S|-1}>
//! T <t> <s> <a> <s'> <prob>      one line per nonzero transition
//! ```
//!
//! An augmented MDP appends a `MAPS` section recording its id layout.
//! Trajectories are one per line, `s0 a0 s1 a1 ... sH aH`. Counts use
//! `K t s a count` lines and policies `PI t s a prob` lines. Reals are written
//! in scientific notation with 17 significant digits. Blank lines and lines
//! starting with `#` are ignored by every reader.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::dataset::{CountTensor, TrajectoryDataset};
use crate::error::{Error, Result};
use crate::estimator::EstimationResult;
use crate::mdp::{Dims, Dynamics, FiniteHorizonMdp, Kernel, Policy};
use crate::reduction::{AugmentedMaps, AugmentedMdp};
use crate::scalar::Scalar;

fn real<T: Scalar>(x: T) -> String {
    format!("{x:.16e}")
}

/// Meaningful lines with their 1-based line numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_num<N: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<N> {
    let tok = tok.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::parse(line, format!("bad {what} `{tok}`")))
}

fn check_end<'a>(mut toks: impl Iterator<Item = &'a str>, line: usize) -> Result<()> {
    match toks.next() {
        Some(extra) => Err(Error::parse(line, format!("unexpected token `{extra}`"))),
        None => Ok(()),
    }
}

pub fn write_mdp<T: Scalar>(mdp: &FiniteHorizonMdp<T>) -> String {
    let d = mdp.dims();
    let mut out = String::new();
    let _ = writeln!(out, "MDP {} {} {}", d.num_states, d.num_actions, d.horizon);
    let join = |xs: &[T]| xs.iter().map(|&x| real(x)).collect::<Vec<_>>().join(" ");
    let _ = writeln!(out, "P0 {}", join(mdp.initial_dist()));
    let _ = writeln!(out, "R {}", join(mdp.rewards()));
    for t in 0..d.horizon {
        let k = mdp.kernel(t);
        for s in 0..d.num_states {
            for a in 0..d.num_actions {
                for &(next, p) in k.row(s, a) {
                    if p != T::zero() {
                        let _ = writeln!(out, "T {t} {s} {a} {next} {}", real(p));
                    }
                }
            }
        }
    }
    out
}

/// Parses an MDP, ignoring any trailing `MAPS` section. Epochs with identical
/// kernels are stored as a single stationary kernel.
pub fn read_mdp<T: Scalar>(text: &str) -> Result<FiniteHorizonMdp<T>> {
    let mut it = lines(text);
    let (ln, header) = it.next().ok_or_else(|| Error::parse(0, "empty MDP file"))?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("MDP") {
        return Err(Error::parse(ln, "expected `MDP |S| |A| H` header"));
    }
    let n_s: usize = parse_num(toks.next(), ln, "|S|")?;
    let n_a: usize = parse_num(toks.next(), ln, "|A|")?;
    let h: usize = parse_num(toks.next(), ln, "H")?;
    check_end(toks, ln)?;
    if n_s == 0 || n_a == 0 {
        return Err(Error::parse(ln, "|S| and |A| must be positive"));
    }

    let mut p0: Option<Vec<T>> = None;
    let mut rewards: Option<Vec<T>> = None;
    let mut rows: Vec<Vec<Vec<(usize, T)>>> = vec![vec![Vec::new(); n_s * n_a]; h];

    for (ln, l) in it {
        let mut toks = l.split_whitespace();
        match toks.next() {
            Some("MAPS") => break,
            Some(tag @ ("P0" | "R")) => {
                let v = toks
                    .map(|t| parse_num(Some(t), ln, "real"))
                    .collect::<Result<Vec<T>>>()?;
                if v.len() != n_s {
                    return Err(Error::parse(ln, format!("{tag} needs {n_s} values, got {}", v.len())));
                }
                if tag == "P0" {
                    p0 = Some(v);
                } else {
                    rewards = Some(v);
                }
            }
            Some("T") => {
                let t: usize = parse_num(toks.next(), ln, "t")?;
                let s: usize = parse_num(toks.next(), ln, "s")?;
                let a: usize = parse_num(toks.next(), ln, "a")?;
                let next: usize = parse_num(toks.next(), ln, "s'")?;
                let p: T = parse_num(toks.next(), ln, "prob")?;
                check_end(toks, ln)?;
                if t >= h || s >= n_s || a >= n_a || next >= n_s {
                    return Err(Error::parse(ln, "transition index out of range"));
                }
                rows[t][s * n_a + a].push((next, p));
            }
            Some(other) => return Err(Error::parse(ln, format!("unknown record `{other}`"))),
            None => {}
        }
    }
    let p0 = p0.ok_or_else(|| Error::parse(0, "missing P0 line"))?;
    let rewards = rewards.ok_or_else(|| Error::parse(0, "missing R line"))?;

    let dynamics = if h == 0 {
        Dynamics::Stationary(Kernel::from_fn(n_s, n_a, |s, _| vec![(s, T::one())]))
    } else {
        let mut kernels = rows
            .into_iter()
            .map(|r| Kernel::from_rows(n_s, n_a, r))
            .collect::<Result<Vec<_>>>()?;
        if kernels.iter().all(|k| k == &kernels[0]) {
            Dynamics::Stationary(kernels.swap_remove(0))
        } else {
            Dynamics::TimeVarying(kernels)
        }
    };
    FiniteHorizonMdp::new(h, rewards, p0, dynamics)
}

/// MDP text followed by the `MAPS` section of an augmented MDP.
pub fn write_augmented<T: Scalar>(aug: &AugmentedMdp<T>) -> String {
    let m = aug.maps;
    let mut out = write_mdp(&aug.base);
    let _ = writeln!(out, "MAPS {} {} {}", m.num_states, m.num_actions, aug.horizon);
    let _ = writeln!(out, "PENALTY {}", real(aug.sink_penalty));
    let _ = writeln!(out, "SINK {}", m.sink());
    for s in 0..m.num_states {
        let _ = writeln!(out, "ORIG {s} {}", m.original(s));
    }
    for s in 0..m.num_states {
        for a in 0..m.num_actions {
            let _ = writeln!(out, "PAIR {s} {a} {}", m.pair(s, a));
        }
    }
    for a in 0..m.num_actions {
        let _ = writeln!(out, "MOVE {a} {}", m.move_action(a));
    }
    for s in 0..m.num_states {
        let _ = writeln!(out, "LAND {s} {}", m.land_action(s));
    }
    out
}

/// Reads an augmented MDP, checking that the recorded ids match the layout.
pub fn read_augmented<T: Scalar>(text: &str) -> Result<AugmentedMdp<T>> {
    let base = read_mdp::<T>(text)?;
    let mut it = lines(text).skip_while(|(_, l)| !l.starts_with("MAPS"));
    let (ln, header) = it.next().ok_or_else(|| Error::parse(0, "missing MAPS section"))?;
    let mut toks = header.split_whitespace().skip(1);
    let n_s: usize = parse_num(toks.next(), ln, "|S|")?;
    let n_a: usize = parse_num(toks.next(), ln, "|A|")?;
    let h: usize = parse_num(toks.next(), ln, "H")?;
    let maps = AugmentedMaps::new(n_s, n_a);
    if base.dims() != maps.aug_dims(h) {
        return Err(Error::parse(ln, "MAPS sizes disagree with the MDP header"));
    }
    let mut penalty = None;
    for (ln, l) in it {
        let toks: Vec<&str> = l.split_whitespace().collect();
        let nums = |range: std::ops::Range<usize>| -> Result<Vec<usize>> {
            range.map(|i| parse_num(toks.get(i).copied(), ln, "id")).collect()
        };
        let ok = match toks.first().copied() {
            Some("PENALTY") => {
                penalty = Some(parse_num::<T>(toks.get(1).copied(), ln, "penalty")?);
                true
            }
            Some("SINK") => nums(1..2)?[0] == maps.sink(),
            Some("ORIG") => {
                let v = nums(1..3)?;
                v[0] < n_s && v[1] == maps.original(v[0])
            }
            Some("PAIR") => {
                let v = nums(1..4)?;
                v[0] < n_s && v[1] < n_a && v[2] == maps.pair(v[0], v[1])
            }
            Some("MOVE") => {
                let v = nums(1..3)?;
                v[0] < n_a && v[1] == maps.move_action(v[0])
            }
            Some("LAND") => {
                let v = nums(1..3)?;
                v[0] < n_s && v[1] == maps.land_action(v[0])
            }
            _ => return Err(Error::parse(ln, "unknown MAPS record")),
        };
        if !ok {
            return Err(Error::parse(ln, "id does not match the augmented layout"));
        }
    }
    Ok(AugmentedMdp {
        base,
        maps,
        sink_penalty: penalty.ok_or_else(|| Error::parse(0, "missing PENALTY"))?,
        horizon: h,
    })
}

pub fn write_trajectories(dataset: &TrajectoryDataset) -> String {
    let mut out = String::new();
    for traj in dataset.trajectories() {
        let line: Vec<String> = traj.iter().map(|&(s, a)| format!("{s} {a}")).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

pub fn read_trajectories(text: &str, dims: Dims) -> Result<TrajectoryDataset> {
    let mut trajs = Vec::new();
    for (ln, l) in lines(text) {
        let ids = l
            .split_whitespace()
            .map(|t| parse_num(Some(t), ln, "id"))
            .collect::<Result<Vec<usize>>>()?;
        if ids.len() % 2 != 0 {
            return Err(Error::parse(ln, "odd number of ids"));
        }
        trajs.push(ids.chunks(2).map(|c| (c[0], c[1])).collect());
    }
    TrajectoryDataset::new(dims, trajs)
}

pub fn write_counts(counts: &CountTensor) -> String {
    let d = counts.dims();
    let mut out = String::new();
    for t in 0..d.epochs() {
        for s in 0..d.num_states {
            for (a, &k) in counts.row(t, s).iter().enumerate() {
                if k > 0 {
                    let _ = writeln!(out, "K {t} {s} {a} {k}");
                }
            }
        }
    }
    out
}

pub fn read_counts(text: &str, dims: Dims) -> Result<CountTensor> {
    let mut raw = vec![0u64; dims.epochs() * dims.num_states * dims.num_actions];
    for (ln, l) in lines(text) {
        let mut toks = l.split_whitespace();
        if toks.next() != Some("K") {
            return Err(Error::parse(ln, "expected `K t s a count`"));
        }
        let t: usize = parse_num(toks.next(), ln, "t")?;
        let s: usize = parse_num(toks.next(), ln, "s")?;
        let a: usize = parse_num(toks.next(), ln, "a")?;
        let k: u64 = parse_num(toks.next(), ln, "count")?;
        check_end(toks, ln)?;
        if t > dims.horizon || s >= dims.num_states || a >= dims.num_actions {
            return Err(Error::parse(ln, "count index out of range"));
        }
        raw[(t * dims.num_states + s) * dims.num_actions + a] += k;
    }
    CountTensor::from_counts(dims, raw)
}

pub fn write_policy<T: Scalar>(policy: &Policy<T>) -> String {
    let d = policy.dims();
    let mut out = String::new();
    for t in 0..d.epochs() {
        for s in 0..d.num_states {
            for (a, &p) in policy.row(t, s).iter().enumerate() {
                let _ = writeln!(out, "PI {t} {s} {a} {}", real(p));
            }
        }
    }
    out
}

/// Reads `PI` lines (other records are skipped, so a full report parses).
/// Missing entries are zero.
pub fn read_policy<T: Scalar>(text: &str, dims: Dims) -> Result<Policy<T>> {
    let mut probs = vec![T::zero(); dims.epochs() * dims.num_states * dims.num_actions];
    for (ln, l) in lines(text) {
        let mut toks = l.split_whitespace();
        if toks.next() != Some("PI") {
            continue;
        }
        let t: usize = parse_num(toks.next(), ln, "t")?;
        let s: usize = parse_num(toks.next(), ln, "s")?;
        let a: usize = parse_num(toks.next(), ln, "a")?;
        let p: T = parse_num(toks.next(), ln, "prob")?;
        check_end(toks, ln)?;
        if t > dims.horizon || s >= dims.num_states || a >= dims.num_actions {
            return Err(Error::parse(ln, "policy index out of range"));
        }
        probs[(t * dims.num_states + s) * dims.num_actions + a] = p;
    }
    let pi = Policy::from_vec(dims, probs)?;
    pi.validate()?;
    Ok(pi)
}

/// Summary lines, the objective trace as `OBJ i value`, then the policy.
pub fn write_report<T: Scalar>(result: &EstimationResult<T>, mut w: impl Write) -> Result<()> {
    writeln!(w, "# value-prior estimation report")?;
    writeln!(w, "# cycles {}", result.cycles_run)?;
    writeln!(w, "# inner_solves {}", result.inner_solves)?;
    writeln!(w, "# converged {}", result.converged)?;
    writeln!(w, "# initial_objective {}", real(result.initial_objective))?;
    writeln!(w, "# final_objective {}", real(result.final_objective()))?;
    writeln!(w, "# max_kkt_residual {}", real(result.max_kkt_residual))?;
    writeln!(w, "# stationarity_residual {}", real(result.kkt.stationarity))?;
    writeln!(w, "# dual_violation {}", real(result.kkt.dual_violation))?;
    writeln!(w, "# complementary_slackness {}", real(result.kkt.complementary_slackness))?;
    for (i, l) in result.objective_trace.iter().enumerate() {
        writeln!(w, "OBJ {i} {}", real(*l))?;
    }
    w.write_all(write_policy(&result.policy).as_bytes())?;
    Ok(())
}

pub fn read_file(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    Ok(std::fs::write(path, contents)?)
}
