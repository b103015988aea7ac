use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use rug::float::Constant;
use rug::Float;

static PI_CACHE: OnceLock<RwLock<HashMap<u32, Arc<Float>>>> = OnceLock::new();

/// pi rounded to nearest at `prec` bits, cached per precision.
pub fn pi(prec: u32) -> Arc<Float> {
    let cache = PI_CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(p) = cache.read().expect("pi cache poisoned").get(&prec) {
        return Arc::clone(p);
    }
    let mut guard = cache.write().expect("pi cache poisoned");
    Arc::clone(guard.entry(prec).or_insert_with(|| Arc::new(Float::with_val(prec, Constant::Pi))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cached_pi_is_shared_across_threads() {
        let handles: Vec<_> = (0..8).map(|_| std::thread::spawn(|| pi(333))).collect();
        let values: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        for v in &values {
            assert_eq!(**v, *values[0]);
            assert_eq!(v.prec(), 333);
        }
    }
}
