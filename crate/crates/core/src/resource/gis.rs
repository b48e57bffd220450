use crate::kernel::EntityId;

/// Registry of resources known to the grid information service.
///
/// Listing order is registration order; re-registering is a no-op.
#[derive(Debug, Clone, Default)]
pub struct GisRegistry {
    resources: Vec<EntityId>,
}

impl GisRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, id: EntityId) {
        if !self.resources.contains(&id) {
            self.resources.push(id);
        }
    }

    /// Returns whether `id` was registered.
    pub fn deregister(&mut self, id: EntityId) -> bool {
        let before = self.resources.len();
        self.resources.retain(|&r| r != id);
        before != self.resources.len()
    }

    pub fn list(&self) -> Vec<EntityId> {
        self.resources.clone()
    }

    pub fn len(&self) -> usize {
        self.resources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resources.is_empty()
    }
}
