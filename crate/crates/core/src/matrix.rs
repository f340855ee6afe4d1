/// Dense row-major matrix of f64 where NaN marks a missing value.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RowMatrix {
    n_cols: usize,
    values: Vec<f64>,
}

impl RowMatrix {
    pub fn new(n_cols: usize) -> Self {
        RowMatrix {
            n_cols,
            values: Vec::new(),
        }
    }

    pub fn from_values(n_cols: usize, values: Vec<f64>) -> Self {
        assert!(n_cols > 0 && values.len() % n_cols == 0, "ragged matrix");
        RowMatrix { n_cols, values }
    }

    pub fn from_rows<'a>(n_cols: usize, rows: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut m = RowMatrix::new(n_cols);
        for r in rows {
            m.push_row(r);
        }
        m
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.n_cols, "row width");
        self.values.extend_from_slice(row);
    }

    pub fn n_rows(&self) -> usize {
        if self.n_cols == 0 {
            0
        } else {
            self.values.len() / self.n_cols
        }
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_cols.max(1))
    }

    /// New matrix holding the given rows in the given order.
    pub fn select(&self, rows: &[usize]) -> RowMatrix {
        let mut m = RowMatrix::new(self.n_cols);
        m.values.reserve(rows.len() * self.n_cols);
        for &r in rows {
            m.values.extend_from_slice(self.row(r));
        }
        m
    }
}
