//! One set-associative cache with true-LRU replacement.

use crate::memspec::MemoryModuleSpec;

#[derive(Debug, Clone)]
struct Line {
    tag: u64,
    dirty: bool,
    last_used: u64,
}

/// Cache array state; hit/miss policy lives in the hierarchy walker.
#[derive(Debug, Clone)]
pub struct CacheSim {
    line_size: u64,
    num_sets: u64,
    associativity: usize,
    sets: Vec<Vec<Line>>,
    tick: u64,
}

impl CacheSim {
    pub fn new(spec: &MemoryModuleSpec) -> Self {
        let geom = spec.geometry();
        let lines = spec.capacity_bytes / geom.line_size_bytes;
        let num_sets = lines / geom.associativity;
        debug_assert!(num_sets >= 1, "validated: capacity holds at least one set");
        CacheSim {
            line_size: geom.line_size_bytes,
            num_sets,
            associativity: geom.associativity as usize,
            sets: vec![Vec::new(); num_sets as usize],
            tick: 0,
        }
    }

    pub fn line_size(&self) -> u64 {
        self.line_size
    }

    fn locate(&self, addr: u64) -> (usize, u64) {
        let line_index = addr / self.line_size;
        ((line_index % self.num_sets) as usize, line_index / self.num_sets)
    }

    /// Probes for the line holding `addr`; a hit refreshes its LRU stamp.
    pub fn lookup(&mut self, addr: u64) -> bool {
        self.tick += 1;
        let (set, tag) = self.locate(addr);
        match self.sets[set].iter_mut().find(|l| l.tag == tag) {
            Some(line) => {
                line.last_used = self.tick;
                true
            }
            None => false,
        }
    }

    /// Marks the (present) line holding `addr` dirty.
    pub fn set_dirty(&mut self, addr: u64) {
        let (set, tag) = self.locate(addr);
        let line = self.sets[set]
            .iter_mut()
            .find(|l| l.tag == tag)
            .expect("set_dirty on a missing line");
        line.dirty = true;
    }

    /// Installs the line holding `addr`, evicting the least recently used
    /// line if the set is full. Returns the base address of an evicted
    /// dirty line, which the caller must write back.
    pub fn install(&mut self, addr: u64) -> Option<u64> {
        self.tick += 1;
        let (set, tag) = self.locate(addr);
        let fresh = Line {
            tag,
            dirty: false,
            last_used: self.tick,
        };
        let ways = &mut self.sets[set];
        debug_assert!(ways.iter().all(|l| l.tag != tag), "install over a present line");
        if ways.len() < self.associativity {
            ways.push(fresh);
            return None;
        }
        let victim_way = ways
            .iter()
            .enumerate()
            .min_by_key(|(_, l)| l.last_used)
            .map(|(i, _)| i)
            .expect("associativity >= 1");
        let victim = std::mem::replace(&mut ways[victim_way], fresh);
        victim
            .dirty
            .then(|| (victim.tag * self.num_sets + set as u64) * self.line_size)
    }
}
