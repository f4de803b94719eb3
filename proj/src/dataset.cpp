#include "cfxcert/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cfxcert/common.hpp"
#include "cfxcert/log.hpp"
#include "cfxcert/rng.hpp"

namespace cfxcert {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(trim(cur));
    return out;
}

bool is_missing(const std::string& cell) {
    return cell.empty() || cell == "nan" || cell == "NaN" || cell == "NAN" || cell == "NA";
}

bool parse_number(const std::string& cell, double& out) {
    const char* b = cell.data();
    const char* e = b + cell.size();
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && p == e;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

FeatureSpec parse_feature_spec(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("feature spec is not valid JSON: ") + e.what());
    }
    if (!j.is_array())
        throw ParseError("feature spec must be a JSON array of column objects");

    FeatureSpec spec;
    for (const auto& col : j) {
        if (!col.is_object() || !col.contains("name") || !col.contains("kind"))
            throw ParseError("feature spec column needs \"name\" and \"kind\"");
        FeatureColumn c;
        c.name = col["name"].get<std::string>();
        std::string kind = col["kind"].get<std::string>();
        if (kind == "continuous") {
            c.kind = FeatureKind::continuous;
            if (col.contains("min") && col.contains("max")) {
                c.min = col["min"].get<double>();
                c.max = col["max"].get<double>();
                if (c.min > c.max)
                    throw ParseError("column " + c.name + ": min > max");
                c.has_range = true;
            }
        } else if (kind == "ordinal") {
            c.kind = FeatureKind::ordinal;
            if (!col.contains("k"))
                throw ParseError("ordinal column " + c.name + " needs \"k\"");
            long long k = col["k"].get<long long>();
            if (k <= 0)
                throw ParseError("ordinal column " + c.name + ": k must be positive");
            c.k = static_cast<std::size_t>(k);
        } else if (kind == "discrete") {
            c.kind = FeatureKind::discrete;
            if (!col.contains("categories"))
                throw ParseError("discrete column " + c.name + " needs \"categories\"");
            for (const auto& cat : col["categories"])
                c.categories.push_back(cat.get<std::string>());
            if (c.categories.empty())
                throw ParseError("discrete column " + c.name + ": empty category list");
        } else {
            throw ParseError("column " + c.name + ": unknown kind \"" + kind + "\"");
        }
        spec.columns.push_back(std::move(c));
    }
    if (spec.columns.empty())
        throw ParseError("feature spec has no columns");
    return spec;
}

FeatureSpec load_feature_spec(const std::string& path) {
    return parse_feature_spec(read_file(path));
}

std::string feature_spec_to_json(const FeatureSpec& spec) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : spec.columns) {
        nlohmann::json col;
        col["name"] = c.name;
        switch (c.kind) {
        case FeatureKind::continuous:
            col["kind"] = "continuous";
            if (c.has_range) {
                col["min"] = c.min;
                col["max"] = c.max;
            }
            break;
        case FeatureKind::ordinal:
            col["kind"] = "ordinal";
            col["k"] = c.k;
            break;
        case FeatureKind::discrete:
            col["kind"] = "discrete";
            col["categories"] = c.categories;
            break;
        }
        arr.push_back(col);
    }
    return arr.dump(2) + "\n";
}

Dataset parse_dataset(const std::string& csv_text, const FeatureSpec& spec) {
    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line))
        throw ParseError("empty CSV");
    auto header = split_csv_line(line);

    std::vector<std::size_t> col_of(spec.columns.size(), header.size());
    std::size_t label_col = header.size();
    for (std::size_t h = 0; h < header.size(); ++h) {
        if (header[h] == "label") {
            label_col = h;
            continue;
        }
        if (auto idx = spec.find(header[h]))
            col_of[*idx] = h;
        else
            log::warn("CSV column \"" + header[h] + "\" not in feature spec, ignored");
    }
    if (label_col == header.size())
        throw ParseError("CSV has no \"label\" column");
    for (std::size_t i = 0; i < spec.columns.size(); ++i)
        if (col_of[i] == header.size())
            throw ParseError("CSV is missing spec column \"" + spec.columns[i].name + "\"");

    // First pass: parse cells, drop rows with missing values.
    struct RawRow {
        std::vector<double> continuous; // per continuous column, raw scale
        std::vector<std::size_t> levels; // per ordinal column
        std::vector<std::size_t> cats;   // per discrete column
        int label = 0;
    };
    std::vector<RawRow> raw;
    std::size_t dropped = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty())
            continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " cells, got " +
                             std::to_string(cells.size()));
        bool missing = is_missing(cells[label_col]);
        for (std::size_t i = 0; i < spec.columns.size() && !missing; ++i)
            missing = is_missing(cells[col_of[i]]);
        if (missing) {
            ++dropped;
            continue;
        }

        RawRow r;
        double lab;
        if (!parse_number(cells[label_col], lab) || lab != std::floor(lab) || lab < 0)
            throw ParseError("line " + std::to_string(line_no) + ": bad label \"" +
                             cells[label_col] + "\"");
        r.label = static_cast<int>(lab);
        for (std::size_t i = 0; i < spec.columns.size(); ++i) {
            const auto& c = spec.columns[i];
            const std::string& cell = cells[col_of[i]];
            switch (c.kind) {
            case FeatureKind::continuous: {
                double v;
                if (!parse_number(cell, v))
                    throw ParseError("line " + std::to_string(line_no) + ": non-numeric value \"" +
                                     cell + "\" in continuous column " + c.name);
                r.continuous.push_back(v);
                break;
            }
            case FeatureKind::ordinal: {
                double v;
                if (!parse_number(cell, v) || v != std::floor(v) || v < 0 ||
                    v > static_cast<double>(c.k))
                    throw ParseError("line " + std::to_string(line_no) + ": ordinal column " +
                                     c.name + " expects an integer in [0," + std::to_string(c.k) +
                                     "], got \"" + cell + "\"");
                r.levels.push_back(static_cast<std::size_t>(v));
                break;
            }
            case FeatureKind::discrete: {
                auto it = std::find(c.categories.begin(), c.categories.end(), cell);
                if (it == c.categories.end())
                    throw ParseError("line " + std::to_string(line_no) + ": unknown category \"" +
                                     cell + "\" in column " + c.name);
                r.cats.push_back(static_cast<std::size_t>(it - c.categories.begin()));
                break;
            }
            }
        }
        raw.push_back(std::move(r));
    }
    if (dropped > 0)
        log::info("dropped " + std::to_string(dropped) + " rows with missing values");

    Dataset d;
    d.spec = spec;

    // Fill in ranges for continuous columns that did not specify one.
    {
        std::size_t ci = 0;
        for (auto& c : d.spec.columns) {
            if (c.kind != FeatureKind::continuous)
                continue;
            if (!c.has_range) {
                double lo = 0.0, hi = 0.0;
                bool first = true;
                for (const auto& r : raw) {
                    double v = r.continuous[ci];
                    lo = first ? v : std::min(lo, v);
                    hi = first ? v : std::max(hi, v);
                    first = false;
                }
                c.min = lo;
                c.max = hi;
                c.has_range = !first;
            }
            ++ci;
        }
    }

    d.rows = Matrix(raw.size(), spec.encoded_width());
    d.labels.reserve(raw.size());
    for (std::size_t ri = 0; ri < raw.size(); ++ri) {
        const auto& r = raw[ri];
        double* out = d.rows.row(ri);
        std::size_t o = 0, ci = 0, oi = 0, di = 0;
        for (const auto& c : d.spec.columns) {
            switch (c.kind) {
            case FeatureKind::continuous: {
                double v = r.continuous[ci++];
                double range = c.max - c.min;
                double scaled = range > 0 ? (v - c.min) / range : 0.0;
                out[o++] = std::clamp(scaled, 0.0, 1.0);
                break;
            }
            case FeatureKind::ordinal: {
                std::size_t lvl = r.levels[oi++];
                for (std::size_t b = 0; b < c.k; ++b)
                    out[o++] = b < lvl ? 1.0 : 0.0;
                break;
            }
            case FeatureKind::discrete: {
                std::size_t cat = r.cats[di++];
                for (std::size_t b = 0; b < c.categories.size(); ++b)
                    out[o++] = b == cat ? 1.0 : 0.0;
                break;
            }
            }
        }
        d.labels.push_back(r.label);
    }
    return d;
}

Dataset load_dataset(const std::string& csv_path, const std::string& spec_path) {
    return parse_dataset(read_file(csv_path), load_feature_spec(spec_path));
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double fraction, std::uint64_t seed) {
    if (fraction < 0.0 || fraction > 1.0)
        throw ConfigError("split fraction must be in [0,1]");
    std::vector<std::size_t> idx(d.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
        idx[i] = i;
    Rng rng(seed);
    rng.shuffle(idx);
    std::size_t n_first = static_cast<std::size_t>(std::lround(fraction * double(d.size())));

    auto take = [&](std::size_t begin, std::size_t end) {
        Dataset out;
        out.spec = d.spec;
        out.rows = Matrix(end - begin, d.rows.cols());
        out.labels.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i) {
            std::copy(d.rows.row(idx[i]), d.rows.row(idx[i]) + d.rows.cols(),
                      out.rows.row(i - begin));
            out.labels.push_back(d.labels[idx[i]]);
        }
        return out;
    };
    return {take(0, n_first), take(n_first, d.size())};
}

} // namespace cfxcert
