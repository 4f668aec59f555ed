/// Terminal outcome of an episode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Terminal {
    Success,
    Failure,
}

/// Refinement progress of one skeleton.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct SkeletonProgress {
    /// Number of leading actions already refined.
    pub refined: u32,
    /// Steps already spent on the frontier action without completing it.
    pub planned: u32,
    /// Execution time accumulated by the refined actions.
    pub exec_total: u32,
    /// The skeleton can no longer finish before the deadline.
    pub dead: bool,
}

impl SkeletonProgress {
    pub const DEAD: Self = Self { refined: 0, planned: 0, exec_total: 0, dead: true };
}

/// `(CT, l_k, PT_k, ET_k)` for every skeleton, plus a terminal marker.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MdpState {
    /// Decision steps consumed so far.
    pub time: u32,
    pub skeletons: Vec<SkeletonProgress>,
    pub terminal: Option<Terminal>,
}

impl MdpState {
    /// Fresh state for `k` skeletons, before any hopelessness checks.
    pub fn fresh(k: usize) -> Self {
        Self { time: 0, skeletons: vec![SkeletonProgress::default(); k], terminal: None }
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal.is_some()
    }

    /// Memoisation key: dead skeletons collapse to one marker.
    pub fn canonical(&self) -> Self {
        let mut s = self.clone();
        for p in &mut s.skeletons {
            if p.dead {
                *p = SkeletonProgress::DEAD;
            }
        }
        s
    }

    /// Stable 64-bit fingerprint (independent of the std hasher).
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        eat(self.time as u64);
        eat(match self.terminal {
            None => 0,
            Some(Terminal::Success) => 1,
            Some(Terminal::Failure) => 2,
        });
        for p in &self.skeletons {
            eat(p.refined as u64);
            eat(p.planned as u64);
            eat(p.exec_total as u64);
            eat(p.dead as u64);
        }
        h
    }
}
