use std::sync::{Arc, RwLock};

/// Shared read access to a model that can be replaced atomically while
/// readers keep using the instance they already hold.
pub struct ModelHandle<T: ?Sized> {
    current: RwLock<Option<Arc<T>>>,
}

impl<T: ?Sized> Default for ModelHandle<T> {
    fn default() -> Self {
        Self {
            current: RwLock::new(None),
        }
    }
}

impl<T: ?Sized> ModelHandle<T> {
    pub fn new(model: Arc<T>) -> Self {
        Self {
            current: RwLock::new(Some(model)),
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn get(&self) -> Option<Arc<T>> {
        self.current
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .clone()
    }

    /// Installs `model` and returns the previous one.
    pub fn replace(&self, model: Arc<T>) -> Option<Arc<T>> {
        self.current
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .replace(model)
    }

    pub fn is_loaded(&self) -> bool {
        self.current
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn readers_keep_old_instance_across_swap() {
        let handle: ModelHandle<str> = ModelHandle::new(Arc::from("v1"));
        let held = handle.get().unwrap();
        let old = handle.replace(Arc::from("v2")).unwrap();
        assert_eq!(&*held, "v1");
        assert_eq!(&*old, "v1");
        assert_eq!(&*handle.get().unwrap(), "v2");
        assert!(!ModelHandle::<str>::empty().is_loaded());
    }

    #[test]
    fn concurrent_swaps_and_reads() {
        let handle = Arc::new(ModelHandle::new(Arc::new(0usize)));
        std::thread::scope(|s| {
            for i in 1..=4 {
                let h = handle.clone();
                s.spawn(move || {
                    for j in 0..200 {
                        h.replace(Arc::new(i * 1000 + j));
                        let v = *h.get().unwrap();
                        assert!(v == 0 || v >= 1000);
                    }
                });
            }
        });
        assert!(*handle.get().unwrap() >= 1000);
    }
}
