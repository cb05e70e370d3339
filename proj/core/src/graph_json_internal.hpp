#pragma once

#include "dgms/graph.hpp"
#include "json_util.hpp"

namespace dgms {

njson graph_to_njson(const LabeledMultigraph& g);
LabeledMultigraph graph_from_njson(const njson& j);

} // namespace dgms
