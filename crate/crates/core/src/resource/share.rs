/// Per-gridlet MI shares over an interval on a time-shared resource.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShareAllocation {
    pub max_share: f64,
    pub min_share: f64,
    /// Number of gridlets that receive `max_share`; the rest get `min_share`.
    pub max_share_count: usize,
}

/// Splits `duration` worth of PE time among `n_exec` gridlets on `n_pes`
/// identical PEs.
///
/// Gridlets are spread as evenly as possible: every PE runs
/// `n_exec / n_pes` gridlets and `n_exec % n_pes` PEs run one extra.
/// Gridlets on the less crowded PEs get the larger share.
pub fn pe_share_allocation(
    duration: f64,
    n_exec: usize,
    n_pes: usize,
    mips_per_pe: f64,
) -> ShareAllocation {
    assert!(n_exec >= 1 && n_pes >= 1, "need at least one gridlet and one PE");
    let total_mi_per_pe = mips_per_pe * duration;
    if n_exec <= n_pes {
        return ShareAllocation {
            max_share: total_mi_per_pe,
            min_share: total_mi_per_pe,
            max_share_count: n_exec,
        };
    }
    let min_per_pe = n_exec / n_pes;
    let pes_with_extra = n_exec % n_pes;
    let max_share = total_mi_per_pe / min_per_pe as f64;
    ShareAllocation {
        max_share,
        // With an even split nobody is on a crowded PE.
        min_share: if pes_with_extra == 0 {
            max_share
        } else {
            total_mi_per_pe / (min_per_pe + 1) as f64
        },
        max_share_count: (n_pes - pes_with_extra) * min_per_pe,
    }
}

impl ShareAllocation {
    /// Share of the `i`-th gridlet in execution order.
    pub fn share_of(&self, i: usize) -> f64 {
        if i < self.max_share_count {
            self.max_share
        } else {
            self.min_share
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_on_two() {
        let s = pe_share_allocation(3.0, 3, 2, 1.0);
        assert_eq!(s.max_share, 3.0);
        assert_eq!(s.min_share, 1.5);
        assert_eq!(s.max_share_count, 1);
    }

    #[test]
    fn fewer_gridlets_than_pes() {
        let s = pe_share_allocation(4.0, 2, 2, 1.0);
        assert_eq!((s.max_share, s.min_share, s.max_share_count), (4.0, 4.0, 2));
    }

    #[test]
    fn even_split() {
        let s = pe_share_allocation(10.0, 4, 2, 1.0);
        assert_eq!((s.max_share, s.min_share, s.max_share_count), (5.0, 5.0, 4));
    }

    #[test]
    fn zero_duration() {
        let s = pe_share_allocation(0.0, 5, 2, 3.0);
        assert_eq!((s.max_share, s.min_share), (0.0, 0.0));
    }

    proptest! {
        /// Work conservation: total MI handed out is min(n_exec, n_pes) PEs' worth.
        #[test]
        fn shares_conserve_work(n_exec in 1usize..200, n_pes in 1usize..32,
                                mips in 1.0f64..1000.0, dur in 0.0f64..100.0) {
            let s = pe_share_allocation(dur, n_exec, n_pes, mips);
            let total: f64 = (0..n_exec).map(|i| s.share_of(i)).sum();
            let expected = n_exec.min(n_pes) as f64 * mips * dur;
            prop_assert!((total - expected).abs() <= 1e-9 * expected.max(1.0));
            prop_assert!(s.max_share >= s.min_share);
            prop_assert!(s.max_share_count <= n_exec);
        }
    }
}
