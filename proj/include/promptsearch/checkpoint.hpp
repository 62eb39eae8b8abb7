#pragma once

#include "promptsearch/search.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace promptsearch {

/// Serializes a search result into the checkpoint document. Key order and
/// array order are fixed (nodes by state_id, edges grouped by parent in
/// insertion order), so equal results serialize to equal bytes.
nlohmann::ordered_json checkpoint_json(const SearchResult& result);

/// Writes checkpoint_json(result) to `path` (2-space indent, trailing
/// newline).
void save_checkpoint(const SearchResult& result, const std::string& path);

/// Parses and validates a checkpoint document back into a result: nodes,
/// edges, visit counts, trajectories, memory and config round-trip
/// field-for-field. Throws CheckpointError naming the offending node or
/// edge on dangling references, duplicate ids, depth mismatches, or a
/// malformed document.
SearchResult load_checkpoint(const std::string& path);

SearchResult checkpoint_from_json(const nlohmann::ordered_json& doc);

}  // namespace promptsearch
