use std::collections::HashMap;

use super::{Node, NodeId};

#[derive(Debug, Clone, Copy)]
pub struct NodeInfo<'a> {
    pub node: &'a Node,
    pub parent: Option<NodeId>,
    /// Field of the parent holding this node.
    pub field: Option<&'a str>,
    /// 1-based position inside a list field; 0 for single fields and the root.
    pub index: usize,
    /// Position in the pre-order listing.
    pub order: usize,
    /// Number of nodes in the subtree, this node included.
    pub size: usize,
}

/// Parent links and pre-order positions for one tree.
#[derive(Debug, Clone)]
pub struct TreeIndex<'a> {
    preorder: Vec<NodeId>,
    info: HashMap<NodeId, NodeInfo<'a>>,
}

impl<'a> TreeIndex<'a> {
    pub fn new(root: &'a Node) -> Self {
        let mut idx = TreeIndex {
            preorder: Vec::new(),
            info: HashMap::new(),
        };
        idx.walk(root, None, None, 0);
        idx
    }

    fn walk(&mut self, n: &'a Node, parent: Option<NodeId>, field: Option<&'a str>, index: usize) -> usize {
        let order = self.preorder.len();
        self.preorder.push(n.id);
        let mut size = 1;
        for (fname, child) in &n.fields {
            let is_list = matches!(child, super::Child::List(_));
            for (i, c) in child.nodes().iter().enumerate() {
                let pos = if is_list { i + 1 } else { 0 };
                size += self.walk(c, Some(n.id), Some(fname.as_str()), pos);
            }
        }
        self.info.insert(
            n.id,
            NodeInfo {
                node: n,
                parent,
                field,
                index,
                order,
                size,
            },
        );
        size
    }

    pub fn get(&self, id: NodeId) -> Option<&NodeInfo<'a>> {
        self.info.get(&id)
    }

    pub fn node(&self, id: NodeId) -> Option<&'a Node> {
        self.info.get(&id).map(|i| i.node)
    }

    pub fn preorder(&self) -> &[NodeId] {
        &self.preorder
    }

    /// Strict descendants of `id` in pre-order.
    pub fn descendants(&self, id: NodeId) -> &[NodeId] {
        match self.info.get(&id) {
            Some(i) => &self.preorder[i.order + 1..i.order + i.size],
            None => &[],
        }
    }

    /// Whether `id` lies in the subtree rooted at `ancestor` (inclusive).
    pub fn in_subtree(&self, id: NodeId, ancestor: NodeId) -> bool {
        match (self.info.get(&id), self.info.get(&ancestor)) {
            (Some(a), Some(b)) => a.order >= b.order && a.order < b.order + b.size,
            _ => false,
        }
    }
}
