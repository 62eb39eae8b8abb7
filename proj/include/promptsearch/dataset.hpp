#pragma once

#include "promptsearch/errors.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace promptsearch {

/// Two-class label: real news ("True" option) vs fabricated ("False").
enum class Label { real, fake };

const char* to_string(Label label);
Label label_from_string(std::string_view s);

struct LabeledSample {
    std::string id;
    std::string text;
    Label label = Label::real;
};

struct Provenance {
    std::string source_path;
    std::optional<double> fraction;      // set when the set is a sampled subset
    std::optional<std::uint64_t> seed;
};

struct Dataset {
    std::vector<LabeledSample> samples;
    Provenance provenance;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
};

/// Parses JSON Lines records {"id","text","label"} with label "real" or
/// "fake". Throws DatasetError naming the offending line on malformed input,
/// unknown labels, duplicate ids, or an empty file.
Dataset load_dataset(const std::string& path);

/// Draws max(1, floor(fraction*n)) samples uniformly without replacement
/// with a platform-stable seeded generator; the subset preserves dataset
/// order and records (fraction, seed) in its provenance. A given
/// (dataset, fraction, seed) always yields the same subset.
Dataset sample_validation(const Dataset& dataset, double fraction, std::uint64_t seed);

}  // namespace promptsearch
