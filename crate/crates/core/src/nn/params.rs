use rand::Rng;

/// One named parameter array.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub fan_in: usize,
    pub values: Vec<f64>,
}

/// The learnable parameters of a network, in a fixed registration order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore {
    params: Vec<Param>,
}

pub type ParamId = usize;

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a zero-filled parameter and returns its id.
    pub fn register(&mut self, name: impl Into<String>, len: usize, fan_in: usize) -> ParamId {
        self.params.push(Param { name: name.into(), fan_in, values: vec![0.0; len] });
        self.params.len() - 1
    }

    /// Fan-in scaled uniform initialisation, U(−1/√fan_in, 1/√fan_in).
    pub fn init_uniform<R: Rng>(&mut self, rng: &mut R) {
        for p in &mut self.params {
            let bound = 1.0 / (p.fan_in.max(1) as f64).sqrt();
            for v in &mut p.values {
                *v = rng.random_range(-bound..bound);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &[f64] {
        &self.params[id].values
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Vec<f64> {
        &mut self.params[id].values
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param> {
        self.params.iter_mut()
    }

    pub fn by_name(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn total_len(&self) -> usize {
        self.params.iter().map(|p| p.values.len()).sum()
    }

    pub fn zeros_like(&self) -> Grads {
        Grads(self.params.iter().map(|p| vec![0.0; p.values.len()]).collect())
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.values.iter().all(|v| v.is_finite()))
    }
}

/// Gradient arrays, parallel to a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct Grads(pub Vec<Vec<f64>>);

impl Grads {
    pub fn get(&self, id: ParamId) -> &[f64] {
        &self.0[id]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut [f64] {
        &mut self.0[id]
    }

    pub fn add_assign(&mut self, other: &Grads) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for x in self.0.iter_mut().flatten() {
            *x *= s;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }
}
