//! Kernel rows computed on demand and kept under a byte budget with
//! least-recently-used eviction.

use super::kernel::KernelSpec;

/// Dense row-major sample matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == d), "ragged feature rows");
        Self {
            n: rows.len(),
            d,
            data: rows.concat(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_cols(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }
}

pub const DEFAULT_CACHE_BYTES: usize = 1 << 30;

pub struct KernelCache<'a> {
    spec: KernelSpec,
    x: &'a FeatureMatrix,
    rows: Vec<Option<Box<[f64]>>>,
    last_used: Vec<u64>,
    resident: Vec<usize>,
    capacity: usize,
    clock: u64,
    diag: Vec<f64>,
    pub(crate) misses: u64,
}

impl<'a> KernelCache<'a> {
    pub fn new(spec: KernelSpec, x: &'a FeatureMatrix, budget_bytes: usize) -> Self {
        let n = x.n_rows();
        let row_bytes = (n * std::mem::size_of::<f64>()).max(1);
        let capacity = (budget_bytes / row_bytes).clamp(2, n.max(2));
        let diag = (0..n)
            .map(|i| spec.eval_unchecked(x.row(i), x.row(i)))
            .collect();
        Self {
            spec,
            x,
            rows: vec![None; n],
            last_used: vec![0; n],
            resident: Vec::with_capacity(capacity),
            capacity,
            clock: 0,
            diag,
            misses: 0,
        }
    }

    #[inline]
    pub fn diag(&self, i: usize) -> f64 {
        self.diag[i]
    }

    fn ensure(&mut self, i: usize) {
        self.clock += 1;
        self.last_used[i] = self.clock;
        if self.rows[i].is_some() {
            return;
        }
        self.misses += 1;
        if self.resident.len() >= self.capacity {
            let (pos, &victim) = self
                .resident
                .iter()
                .enumerate()
                .filter(|(_, &r)| r != i)
                .min_by_key(|(_, &r)| self.last_used[r])
                .expect("capacity >= 2");
            self.rows[victim] = None;
            self.resident.swap_remove(pos);
        }
        let xi = self.x.row(i);
        let row: Box<[f64]> = (0..self.x.n_rows())
            .map(|t| self.spec.eval_unchecked(xi, self.x.row(t)))
            .collect();
        self.rows[i] = Some(row);
        self.resident.push(i);
    }

    pub fn row(&mut self, i: usize) -> &[f64] {
        self.ensure(i);
        self.rows[i].as_deref().expect("just ensured")
    }

    /// Rows `i` and `j` together; both stay resident for the borrow.
    pub fn row_pair(&mut self, i: usize, j: usize) -> (&[f64], &[f64]) {
        self.ensure(i);
        self.ensure(j);
        if self.rows[i].is_none() {
            // j's insertion evicted i; only possible at capacity 2 with i == victim
            self.ensure(i);
        }
        (
            self.rows[i].as_deref().expect("resident"),
            self.rows[j].as_deref().expect("resident"),
        )
    }
}
