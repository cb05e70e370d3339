#pragma once

#include "dgms/code_graph.hpp"

namespace dgms {

// Renumbers nodes into DFS pre-order (root becomes 0) and assigns
// source_order from the left-to-right terminal sequence.
AstTree canonicalize_ast(const AstTree& tree);

} // namespace dgms
