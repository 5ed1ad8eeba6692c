#include "powerlines/run_store.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace powerlines {

namespace {

const char* const kKnownColumns[] = {"run_id", "n_params",     "d_tokens",
                                     "batch_sequences", "seq_len", "eta_base",
                                     "eta_peak", "weight_decay", "val_loss", "width"};

bool is_known_column(const std::string& name) {
    for (const char* c : kKnownColumns)
        if (name == c) return true;
    return false;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& s, long line) {
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE)
        throw ParseError(line, "not a number: '" + s + "'");
    return v;
}

std::int64_t parse_int_field(const std::string& s, const std::string& col, long line) {
    double v = parse_double(s, line);
    double r = std::round(v);
    if (std::abs(v - r) > 1e-6 * std::max(1.0, std::abs(v)))
        throw ParseError(line, "column " + col + " must be integral, got '" + s + "'");
    return static_cast<std::int64_t>(r);
}

// Minimal RFC-4180 style split: quotes only matter when a field starts
// with one.
std::vector<std::string> split_csv_line(const std::string& line, long lineno) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == ',') {
            out.push_back(field);
            field.clear();
        } else {
            field += c;
        }
    }
    if (quoted) throw ParseError(lineno, "unterminated quote");
    out.push_back(field);
    return out;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        out += c;
    }
    out += '"';
    return out;
}

struct ColumnMap {
    std::map<std::string, std::size_t> index;
    std::vector<std::string> names;

    bool has(const std::string& name) const { return index.count(name) > 0; }
};

RunRecord record_from_fields(const ColumnMap& cols, const std::vector<std::string>& fields,
                             long lineno, std::int64_t proxy_width) {
    auto get = [&](const std::string& col) -> const std::string& {
        static const std::string empty;
        auto it = cols.index.find(col);
        if (it == cols.index.end() || it->second >= fields.size()) return empty;
        return fields[it->second];
    };

    RunRecord r;
    r.run_id = get("run_id");
    if (r.run_id.empty()) throw ParseError(lineno, "empty run_id");
    r.n_params = parse_int_field(get("n_params"), "n_params", lineno);
    r.d_tokens = parse_int_field(get("d_tokens"), "d_tokens", lineno);
    r.batch_sequences = parse_int_field(get("batch_sequences"), "batch_sequences", lineno);
    r.seq_len = parse_int_field(get("seq_len"), "seq_len", lineno);
    r.weight_decay = parse_double(get("weight_decay"), lineno);
    r.val_loss = parse_double(get("val_loss"), lineno);

    if (cols.has("eta_base") && !get("eta_base").empty())
        r.eta_base = parse_double(get("eta_base"), lineno);
    if (cols.has("width") && !get("width").empty())
        r.width = parse_int_field(get("width"), "width", lineno);

    if (cols.has("eta_peak") && !get("eta_peak").empty()) {
        r.eta_peak = parse_double(get("eta_peak"), lineno);
    } else if (r.eta_base && r.width) {
        r.eta_peak = *r.eta_base * static_cast<double>(proxy_width) /
                     static_cast<double>(*r.width);
    } else {
        throw ParseError(lineno, "record needs eta_peak or eta_base+width");
    }

    for (std::size_t i = 0; i < cols.names.size() && i < fields.size(); ++i) {
        if (!is_known_column(cols.names[i]) && !fields[i].empty())
            r.tags[cols.names[i]] = fields[i];
    }
    return r;
}

RunSet load_runs_csv(const std::filesystem::path& path, std::int64_t proxy_width) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw ParseError(1, "empty file (no header)");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    ColumnMap cols;
    cols.names = split_csv_line(line, 1);
    for (std::size_t i = 0; i < cols.names.size(); ++i) cols.index[cols.names[i]] = i;

    for (const char* required : {"run_id", "n_params", "d_tokens", "batch_sequences",
                                 "seq_len", "weight_decay", "val_loss"})
        if (!cols.has(required)) throw MissingColumn(required);
    if (!cols.has("eta_peak") && !(cols.has("eta_base") && cols.has("width")))
        throw MissingColumn("eta_peak (or eta_base+width)");

    RunSet rs;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv_line(line, lineno);
        if (fields.size() != cols.names.size())
            throw ParseError(lineno, "expected " + std::to_string(cols.names.size()) +
                                         " fields, got " + std::to_string(fields.size()));
        rs.records.push_back(record_from_fields(cols, fields, lineno, proxy_width));
    }
    validate_run_set(rs, proxy_width);
    return rs;
}

RunSet load_runs_jsonl(const std::filesystem::path& path, std::int64_t proxy_width) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());

    RunSet rs;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(lineno, e.what());
        }
        for (const char* required : {"run_id", "n_params", "d_tokens", "batch_sequences",
                                     "seq_len", "weight_decay", "val_loss"})
            if (!j.contains(required)) throw MissingColumn(required);

        RunRecord r;
        try {
            r.run_id = j.at("run_id").get<std::string>();
            r.n_params = j.at("n_params").get<std::int64_t>();
            r.d_tokens = j.at("d_tokens").get<std::int64_t>();
            r.batch_sequences = j.at("batch_sequences").get<std::int64_t>();
            r.seq_len = j.at("seq_len").get<std::int64_t>();
            r.weight_decay = j.at("weight_decay").get<double>();
            r.val_loss = j.at("val_loss").get<double>();
            if (j.contains("eta_base")) r.eta_base = j.at("eta_base").get<double>();
            if (j.contains("width")) r.width = j.at("width").get<std::int64_t>();
            if (j.contains("eta_peak")) {
                r.eta_peak = j.at("eta_peak").get<double>();
            } else if (r.eta_base && r.width) {
                r.eta_peak = *r.eta_base * static_cast<double>(proxy_width) /
                             static_cast<double>(*r.width);
            } else {
                throw MissingColumn("eta_peak (or eta_base+width)");
            }
            if (j.contains("tags"))
                r.tags = j.at("tags").get<std::map<std::string, std::string>>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(lineno, e.what());
        }
        rs.records.push_back(std::move(r));
    }
    validate_run_set(rs, proxy_width);
    return rs;
}

}  // namespace

void validate_record(const RunRecord& r, std::int64_t proxy_width) {
    auto fail = [&](const std::string& rule) { throw InvariantViolation(r.run_id, rule); };
    if (r.n_params <= 0) fail("n_params must be positive");
    if (r.d_tokens <= 0) fail("d_tokens must be positive");
    if (r.batch_sequences <= 0) fail("batch_sequences must be positive");
    if (r.seq_len <= 0) fail("seq_len must be positive");
    if (r.eta_peak <= 0) fail("eta_peak must be positive");
    if (r.eta_base && *r.eta_base <= 0) fail("eta_base must be positive");
    if (r.weight_decay < 0) fail("weight_decay must be non-negative");
    if (r.val_loss <= 0) fail("val_loss must be positive");
    if (r.width && *r.width <= 0) fail("width must be positive");
    if (r.batch_tokens() > r.d_tokens) fail("batch_tokens exceeds d_tokens");
    if (r.eta_base && r.width) {
        double expect = *r.eta_base * static_cast<double>(proxy_width) /
                        static_cast<double>(*r.width);
        if (std::abs(r.eta_peak - expect) > 1e-9 * std::abs(expect))
            fail("eta_peak inconsistent with eta_base * proxy_width / width");
    }
}

void validate_run_set(const RunSet& rs, std::int64_t proxy_width) {
    std::set<std::string> ids;
    for (const auto& r : rs.records) {
        validate_record(r, proxy_width);
        if (!ids.insert(r.run_id).second)
            throw InvariantViolation(r.run_id, "duplicate run_id");
    }
}

RunSet load_runs(const std::filesystem::path& path, RunFormat format,
                 std::int64_t proxy_width) {
    return format == RunFormat::Csv ? load_runs_csv(path, proxy_width)
                                    : load_runs_jsonl(path, proxy_width);
}

void write_runs(const RunSet& rs, const std::filesystem::path& path, RunFormat format) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");

    if (format == RunFormat::Jsonl) {
        for (const auto& r : rs.records) {
            nlohmann::json j;
            j["run_id"] = r.run_id;
            j["n_params"] = r.n_params;
            j["d_tokens"] = r.d_tokens;
            j["batch_sequences"] = r.batch_sequences;
            j["seq_len"] = r.seq_len;
            if (r.eta_base) j["eta_base"] = *r.eta_base;
            j["eta_peak"] = r.eta_peak;
            j["weight_decay"] = r.weight_decay;
            j["val_loss"] = r.val_loss;
            if (r.width) j["width"] = *r.width;
            if (!r.tags.empty()) j["tags"] = r.tags;
            out << j.dump() << '\n';
        }
        return;
    }

    // Union of tag keys becomes extra columns so nothing is dropped.
    std::set<std::string> tag_keys;
    for (const auto& r : rs.records)
        for (const auto& [k, v] : r.tags) tag_keys.insert(k);

    out << "run_id,n_params,d_tokens,batch_sequences,seq_len,eta_base,eta_peak,"
           "weight_decay,val_loss,width";
    for (const auto& k : tag_keys) out << ',' << csv_escape(k);
    out << '\n';

    for (const auto& r : rs.records) {
        out << csv_escape(r.run_id) << ',' << r.n_params << ',' << r.d_tokens << ','
            << r.batch_sequences << ',' << r.seq_len << ','
            << (r.eta_base ? fmt_double(*r.eta_base) : "") << ','
            << fmt_double(r.eta_peak) << ',' << fmt_double(r.weight_decay) << ','
            << fmt_double(r.val_loss) << ','
            << (r.width ? std::to_string(*r.width) : "");
        for (const auto& k : tag_keys) {
            auto it = r.tags.find(k);
            out << ',' << (it == r.tags.end() ? "" : csv_escape(it->second));
        }
        out << '\n';
    }
}

std::map<GroupKey, std::vector<RunRecord>> group_runs(const RunSet& rs,
                                                      const std::vector<RunField>& keys) {
    if (keys.empty()) throw DegenerateInput("group_runs needs at least one key");
    std::map<GroupKey, std::vector<RunRecord>> groups;
    for (const auto& r : rs.records) {
        GroupKey key;
        key.reserve(keys.size());
        for (RunField f : keys) {
            switch (f) {
                case RunField::NParams: key.push_back(r.n_params); break;
                case RunField::DTokens: key.push_back(r.d_tokens); break;
                case RunField::BatchSequences: key.push_back(r.batch_sequences); break;
            }
        }
        groups[key].push_back(r);
    }
    return groups;
}

}  // namespace powerlines
