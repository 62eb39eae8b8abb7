#include "promptsearch/dataset.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <unordered_set>

namespace promptsearch {

namespace {
using nlohmann::json;

// Unbiased bounded draw; avoids std::uniform_int_distribution, whose output
// differs across standard library implementations.
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / n * n;
    std::uint64_t value;
    do {
        value = rng();
    } while (value >= limit);
    return value % n;
}
}  // namespace

const char* to_string(Label label) { return label == Label::real ? "real" : "fake"; }

Label label_from_string(std::string_view s) {
    if (s == "real") return Label::real;
    if (s == "fake") return Label::fake;
    throw DatasetError("unknown label '" + std::string(s) + "'");
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DatasetError("cannot open dataset file: " + path);

    Dataset dataset;
    dataset.provenance.source_path = path;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json doc = json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (doc.is_discarded() || !doc.is_object())
            throw DatasetError("not a JSON object", line_no);
        if (!doc.contains("id") || !doc["id"].is_string())
            throw DatasetError("missing string field 'id'", line_no);
        if (!doc.contains("text") || !doc["text"].is_string())
            throw DatasetError("missing string field 'text'", line_no);
        if (!doc.contains("label") || !doc["label"].is_string())
            throw DatasetError("missing string field 'label'", line_no);

        LabeledSample sample;
        sample.id = doc["id"].get<std::string>();
        sample.text = doc["text"].get<std::string>();
        if (sample.text.empty()) throw DatasetError("empty 'text'", line_no);
        const std::string label = doc["label"].get<std::string>();
        if (label != "real" && label != "fake")
            throw DatasetError("unknown label '" + label + "'", line_no);
        sample.label = label_from_string(label);
        if (!seen_ids.insert(sample.id).second)
            throw DatasetError("duplicate id '" + sample.id + "'", line_no);
        dataset.samples.push_back(std::move(sample));
    }
    if (dataset.samples.empty()) throw DatasetError("dataset is empty: " + path);
    return dataset;
}

Dataset sample_validation(const Dataset& dataset, double fraction, std::uint64_t seed) {
    if (dataset.empty()) throw DatasetError("cannot sample from an empty dataset");
    if (!(fraction > 0.0) || fraction > 1.0)
        throw DatasetError("fraction must be in (0, 1]");

    const std::size_t n = dataset.size();
    const std::size_t m = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n))));

    // Partial Fisher-Yates over the index array, then sort the chosen
    // indices so the subset preserves dataset order.
    std::vector<std::size_t> indices(n);
    for (std::size_t i = 0; i < n; ++i) indices[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t j = i + static_cast<std::size_t>(bounded_draw(rng, n - i));
        std::swap(indices[i], indices[j]);
    }
    std::vector<std::size_t> chosen(indices.begin(), indices.begin() + static_cast<long>(m));
    std::sort(chosen.begin(), chosen.end());

    Dataset subset;
    subset.provenance = dataset.provenance;
    subset.provenance.fraction = fraction;
    subset.provenance.seed = seed;
    subset.samples.reserve(m);
    for (std::size_t idx : chosen) subset.samples.push_back(dataset.samples[idx]);
    return subset;
}

}  // namespace promptsearch
