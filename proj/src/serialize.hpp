#pragma once

#include "model.hpp"
#include "skeleton.hpp"

namespace acae {

// Weight checkpoint: {J, L, catalog_hash, chirality, raw_enc, raw_dec}; raw
// matrices are dense arrays, or {w1..w5} block objects when chiral. Doubles
// round-trip bit-exactly through the shortest-representation JSON encoding.
void save_weights_json(const AcaeWeights& weights, const std::string& path);
AcaeWeights load_weights_json(const std::string& path);

// Format-list sidecar: {"schema": "acae-formats-v1", "formats": [...]} where
// each entry is the single-format document {name, joints: [...]}.
void save_catalog_meta(const JointCatalog& catalog, const std::string& path);
JointCatalog load_catalog_meta(const std::string& path);

}  // namespace acae
