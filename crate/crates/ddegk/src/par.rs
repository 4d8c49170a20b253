//! Data-parallel helpers with a sequential fallback.
//!
//! Every parallel path computes each output element with exactly the same
//! arithmetic as the serial path, so results are bit-identical across modes.
//! Without the `parallel` feature, [`Exec::Parallel`] silently runs serially.

/// Execution mode for node sweeps and parameter sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Serial,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Serial
        }
    }
}

impl std::str::FromStr for Exec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "serial" => Ok(Exec::Serial),
            "parallel" => Ok(Exec::Parallel),
            other => Err(format!("unknown execution mode '{other}'")),
        }
    }
}

impl std::fmt::Display for Exec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Exec::Serial => "serial",
            Exec::Parallel => "parallel",
        })
    }
}

/// `(0..n).map(f).collect()`, in parallel when requested.
pub fn map_range<T, F>(exec: Exec, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Calls `f(row, chunk)` for each `row_len`-sized chunk of `out`.
pub fn for_each_row<F>(exec: Exec, out: &mut [f64], row_len: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            out.par_chunks_mut(row_len)
                .enumerate()
                .for_each(|(k, row)| f(k, row));
        }
        _ => out
            .chunks_mut(row_len)
            .enumerate()
            .for_each(|(k, row)| f(k, row)),
    }
}
