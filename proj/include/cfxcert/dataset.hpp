#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cfxcert/matrix.hpp"

namespace cfxcert {

enum class FeatureKind { continuous, ordinal, discrete };

// One column of the raw CSV. Continuous columns occupy a single encoded
// feature scaled to [0,1]; an ordinal column with k levels becomes a
// monotone prefix of k 0/1 features (value i -> i leading ones); a discrete
// column becomes a one-hot block over its categories.
struct FeatureColumn {
    std::string name;
    FeatureKind kind = FeatureKind::continuous;
    std::size_t k = 0;
    std::vector<std::string> categories;
    double min = 0.0;
    double max = 0.0;
    bool has_range = false;

    std::size_t width() const {
        switch (kind) {
        case FeatureKind::continuous: return 1;
        case FeatureKind::ordinal: return k;
        case FeatureKind::discrete: return categories.size();
        }
        return 0;
    }
};

struct FeatureSpec {
    std::vector<FeatureColumn> columns;

    std::size_t encoded_width() const {
        std::size_t w = 0;
        for (const auto& c : columns)
            w += c.width();
        return w;
    }
    std::size_t offset_of(std::size_t column) const {
        std::size_t w = 0;
        for (std::size_t i = 0; i < column; ++i)
            w += columns[i].width();
        return w;
    }
    std::optional<std::size_t> find(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i].name == name)
                return i;
        return std::nullopt;
    }
};

struct Dataset {
    Matrix rows;
    std::vector<int> labels;
    FeatureSpec spec;

    std::size_t size() const { return labels.size(); }
    Vector row(std::size_t i) const {
        return Vector(rows.row(i), rows.row(i) + rows.cols());
    }
    std::size_t num_classes() const {
        int m = 0;
        for (int l : labels)
            m = std::max(m, l + 1);
        return static_cast<std::size_t>(m);
    }
};

FeatureSpec parse_feature_spec(const std::string& json_text);
FeatureSpec load_feature_spec(const std::string& path);
std::string feature_spec_to_json(const FeatureSpec& spec);

// CSV must have a header naming every spec column plus a "label" column.
// Rows containing missing/NaN cells are dropped. Continuous cells are
// min-max scaled (range taken from the spec when present, else from the
// data); a zero-range column scales to 0.
Dataset parse_dataset(const std::string& csv_text, const FeatureSpec& spec);
Dataset load_dataset(const std::string& csv_path, const std::string& spec_path);

// Seeded shuffle, then first round(fraction*n) rows vs the rest.
std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double fraction, std::uint64_t seed);

} // namespace cfxcert
