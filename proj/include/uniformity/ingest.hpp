#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "dataset.hpp"
#include "error.hpp"
#include "rng.hpp"

namespace uniformity {

/// One selectable unit: an instruction/input/output triple, a raw vector,
/// or both.
struct RawRecord {
    std::string id;
    std::optional<std::string> text;
    std::optional<std::vector<double>> vector;

    bool operator==(const RawRecord&) const = default;
};

namespace detail {

inline RawRecord parse_record(const nlohmann::json& j, std::size_t line_no) {
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (!j.is_object()) throw ParseError(where + "expected a JSON object");
    auto id = j.find("id");
    if (id == j.end() || !id->is_string()) throw ParseError(where + "missing string field 'id'");

    RawRecord rec;
    rec.id = id->get<std::string>();

    std::string text;
    for (const char* key : {"instruction", "input", "output"}) {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) continue;
        if (!it->is_string()) throw ParseError(where + "field '" + key + "' must be a string");
        if (!text.empty()) text += ' ';
        text += it->get<std::string>();
    }
    if (j.contains("instruction") || j.contains("input") || j.contains("output")) rec.text = std::move(text);

    if (auto v = j.find("vector"); v != j.end() && !v->is_null()) {
        if (!v->is_array()) throw ParseError(where + "field 'vector' must be an array");
        std::vector<double> vec;
        vec.reserve(v->size());
        for (const auto& x : *v) {
            if (!x.is_number()) throw ParseError(where + "field 'vector' must hold numbers");
            vec.push_back(x.get<double>());
        }
        if (vec.empty()) throw ParseError(where + "field 'vector' is empty");
        rec.vector = std::move(vec);
    }
    if (!rec.text && !rec.vector) throw ParseError(where + "record '" + rec.id + "' has neither text nor vector");
    return rec;
}

}  // namespace detail

/// Reads one record per non-blank line. Line numbers in errors are 1-based
/// and count blank lines.
inline std::vector<RawRecord> parse_jsonl(std::istream& in) {
    std::vector<RawRecord> out;
    std::unordered_set<std::string> ids;
    std::optional<std::size_t> dim;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        RawRecord rec = detail::parse_record(j, line_no);
        if (!ids.insert(rec.id).second)
            throw ValidationError("line " + std::to_string(line_no) + ": duplicate id '" + rec.id + "'");
        if (rec.vector) {
            if (dim && *dim != rec.vector->size())
                throw ValidationError("line " + std::to_string(line_no) + ": vector dimension mismatch (" +
                                      std::to_string(rec.vector->size()) + " vs " + std::to_string(*dim) + ")");
            dim = rec.vector->size();
        }
        out.push_back(std::move(rec));
    }
    return out;
}

inline std::vector<RawRecord> load_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return parse_jsonl(in);
}

namespace detail {

// Length of a UTF-8 whitespace sequence starting at s[i], or 0.
inline std::size_t whitespace_length(std::string_view s, std::size_t i) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (c == ' ' || (c >= 0x09 && c <= 0x0d)) return 1;
    auto at = [&](std::size_t k) { return i + k < s.size() ? static_cast<unsigned char>(s[i + k]) : 0u; };
    if (c == 0xc2 && (at(1) == 0x85 || at(1) == 0xa0)) return 2;
    if (c == 0xe1 && at(1) == 0x9a && at(2) == 0x80) return 3;  // U+1680
    if (c == 0xe2 && at(1) == 0x80) {
        const unsigned b = at(2);
        if ((b >= 0x80 && b <= 0x8a) || b == 0xa8 || b == 0xa9 || b == 0xaf) return 3;
    }
    if (c == 0xe2 && at(1) == 0x81 && at(2) == 0x9f) return 3;  // U+205F
    if (c == 0xe3 && at(1) == 0x80 && at(2) == 0x80) return 3;  // U+3000
    return 0;
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

/// Splits on Unicode whitespace and lowercases ASCII letters.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (std::size_t i = 0; i < text.size();) {
        if (std::size_t w = detail::whitespace_length(text, i)) {
            if (!cur.empty()) tokens.push_back(std::move(cur));
            cur.clear();
            i += w;
            continue;
        }
        const auto c = static_cast<unsigned char>(text[i]);
        cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
        ++i;
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

/// Deterministic pseudo-embedding of one token: `dim` standard normals
/// drawn from a stream seeded by hash(token) and `seed`.
inline std::vector<double> token_vector(std::string_view token, std::size_t dim, std::uint64_t seed) {
    Rng rng(splitmix64(detail::fnv1a(token) ^ splitmix64(seed)));
    std::vector<double> v(dim);
    for (double& x : v) x = rng.normal();
    return v;
}

/// Average token embedding per record. Records that carry a vector pass
/// through unchanged (their length must equal `dim`); text-only records get
/// the mean of their token vectors.
inline EmbeddedDataset embed_average(const std::vector<RawRecord>& records, std::size_t dim, std::uint64_t seed) {
    if (dim == 0) throw ValidationError("embedding dimension must be >= 1");
    EmbeddedDataset ds(dim);
    std::unordered_map<std::string, std::vector<double>> cache;
    std::vector<double> mean(dim);
    for (const auto& rec : records) {
        if (rec.vector) {
            ds.add(rec.id, *rec.vector);
            continue;
        }
        if (!rec.text) throw ValidationError("record '" + rec.id + "' has neither text nor vector");
        const auto tokens = tokenize(*rec.text);
        if (tokens.empty()) throw ValidationError("record '" + rec.id + "' has no tokens");
        std::fill(mean.begin(), mean.end(), 0.0);
        for (const auto& t : tokens) {
            auto it = cache.find(t);
            if (it == cache.end()) it = cache.emplace(t, token_vector(t, dim, seed)).first;
            for (std::size_t k = 0; k < dim; ++k) mean[k] += it->second[k];
        }
        for (double& x : mean) x /= static_cast<double>(tokens.size());
        ds.add(rec.id, mean);
    }
    return ds;
}

/// Dimension of the vectors carried by `records`, if any do.
inline std::optional<std::size_t> record_dimension(const std::vector<RawRecord>& records) {
    for (const auto& r : records)
        if (r.vector) return r.vector->size();
    return std::nullopt;
}

// Vector CSV: header `id,dim=<d>`, then one `id,c1,...,cd` row per point with
// hex-float components.

inline std::string hex_float(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", x);
    return buf;
}

inline void write_vectors(const EmbeddedDataset& ds, std::ostream& out) {
    out << "id,dim=" << ds.dim() << '\n';
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& id = ds.id(i);
        if (id.find_first_of(",\n\r") != std::string::npos)
            throw ValidationError("id '" + id + "' cannot be written to CSV (contains ',' or newline)");
        out << id;
        for (double x : ds.point(i)) out << ',' << hex_float(x);
        out << '\n';
    }
}

inline void write_vectors(const EmbeddedDataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_vectors(ds, out);
    if (!out) throw IoError("write failed for '" + path + "'");
}

inline double parse_real(const std::string& field, std::size_t line_no) {
    const char* begin = field.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw ParseError("line " + std::to_string(line_no) + ": bad number '" + field + "'");
    return v;
}

inline EmbeddedDataset read_vectors(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("line 1: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string prefix = "id,dim=";
    if (line.rfind(prefix, 0) != 0) throw ParseError("line 1: header must be 'id,dim=<d>'");
    std::size_t dim = 0;
    try {
        std::size_t used = 0;
        dim = std::stoul(line.substr(prefix.size()), &used);
        if (used != line.size() - prefix.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw ParseError("line 1: bad dimension in header");
    }
    EmbeddedDataset ds(dim);
    std::vector<double> v;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string id, field;
        std::getline(ss, id, ',');
        v.clear();
        while (std::getline(ss, field, ',')) v.push_back(parse_real(field, line_no));
        if (v.size() != dim)
            throw ValidationError("line " + std::to_string(line_no) + ": row has " + std::to_string(v.size()) +
                                  " components, header says " + std::to_string(dim));
        ds.add(id, v);
    }
    return ds;
}

inline EmbeddedDataset read_vectors(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    return read_vectors(in);
}

}  // namespace uniformity
