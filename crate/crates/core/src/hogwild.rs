use std::cell::UnsafeCell;
use std::sync::Arc;

/// Shared value for Hogwild-style parallel SGD.
///
/// Clones refer to the same value and each clone can be borrowed mutably
/// without mutual exclusion. Workers therefore write the shared parameter
/// matrices without locks; element-level races between workers are accepted.
/// Each SGD step touches only a handful of rows, so collisions are rare and
/// their effect on convergence is negligible.
///
/// With a single worker there is no sharing and updates are fully
/// deterministic.
pub struct Hogwild<T>(Arc<UnsafeCell<T>>);

impl<T> Hogwild<T> {
    pub fn new(value: T) -> Self {
        Hogwild(Arc::new(UnsafeCell::new(value)))
    }

    /// Mutable access to the shared value. Other clones may be writing at the
    /// same time.
    #[allow(clippy::mut_from_ref)]
    #[inline]
    pub fn get_mut(&mut self) -> &mut T {
        unsafe { &mut *self.0.get() }
    }

    #[inline]
    pub fn get(&self) -> &T {
        unsafe { &*self.0.get() }
    }

    /// Recovers the value once every other clone has been dropped.
    pub fn into_inner(self) -> Option<T> {
        Arc::try_unwrap(self.0).ok().map(UnsafeCell::into_inner)
    }
}

impl<T> Clone for Hogwild<T> {
    fn clone(&self) -> Self {
        Hogwild(Arc::clone(&self.0))
    }
}

unsafe impl<T: Send> Send for Hogwild<T> {}

unsafe impl<T: Send + Sync> Sync for Hogwild<T> {}
