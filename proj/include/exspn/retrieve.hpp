#pragma once

#include <cstddef>

#include "exspn/csi_tree.hpp"
#include "exspn/spn.hpp"

namespace exspn {

// Rebuilds the SPN structure encoded by a CSI-tree. A node whose blocks are
// all singletons becomes a product of leaves; otherwise each singleton block
// becomes a leaf and each larger block a sum over the child nodes with that
// scope. Weights are uniform and leaves are UnitLeaf placeholders; the result
// is flagged structure_only. `ops`, when given, receives the number of
// elementary steps taken (linear in the tree size).
SpnGraph retrieve_spn(const CsiTree& tree, std::size_t* ops = nullptr);

// True iff both SPNs encode the same product-node scope decompositions,
// compared recursively with blocks in canonical order. Parameters are
// ignored.
bool csi_equivalent(const SpnGraph& a, const SpnGraph& b);

}  // namespace exspn
