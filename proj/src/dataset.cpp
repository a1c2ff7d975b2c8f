#include "fairsynth/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace fairsynth {

std::string AttributeSpec::label_for(int code) const {
    if (code >= 0 && static_cast<std::size_t>(code) < labels.size()) return labels[code];
    return std::to_string(code);
}

int Schema::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < attributes.size(); ++i)
        if (attributes[i].name == name) return static_cast<int>(i);
    return -1;
}

std::vector<Role> Schema::roles() const {
    std::vector<Role> r(attributes.size());
    for (std::size_t i = 0; i < attributes.size(); ++i) r[i] = attributes[i].role;
    return r;
}

std::vector<int> Schema::indices_with_role(Role r) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < attributes.size(); ++i)
        if (attributes[i].role == r) out.push_back(static_cast<int>(i));
    return out;
}

void Schema::validate(bool allow_empty_domains) const {
    std::unordered_set<std::string> seen;
    for (const auto& a : attributes) {
        if (a.name.empty()) throw ConfigError("attribute with empty name");
        if (!seen.insert(a.name).second)
            throw ConfigError("duplicate attribute name: " + a.name);
        if (a.domain_size < 1 && !allow_empty_domains)
            throw ConfigError("attribute '" + a.name + "' has empty domain");
    }
    if (saturated_declared) {
        for (const auto& a : attributes)
            if (a.role == Role::Unlabeled)
                throw ConfigError("run declared saturated but attribute '" + a.name +
                                  "' has no role");
    }
}

DiscreteTable::DiscreteTable(Schema schema, std::size_t n_rows)
    : schema_(std::move(schema)), cells_(n_rows * schema_.size(), 0), n_rows_(n_rows) {}

void DiscreteTable::append_row(const std::vector<int>& codes) {
    if (codes.size() != schema_.size())
        throw ConfigError("row arity mismatch: got " + std::to_string(codes.size()) +
                          ", schema has " + std::to_string(schema_.size()));
    for (std::size_t i = 0; i < codes.size(); ++i) {
        if (codes[i] < 0 || codes[i] >= schema_.attributes[i].domain_size)
            throw ConfigError("value out of domain for attribute " +
                              schema_.attributes[i].name);
    }
    cells_.insert(cells_.end(), codes.begin(), codes.end());
    ++n_rows_;
}

Role RoleConfig::role_of(const std::string& attr_name) const {
    auto in = [&](const std::vector<std::string>& v) {
        return std::find(v.begin(), v.end(), attr_name) != v.end();
    };
    if (in(protected_names)) return Role::Protected;
    if (in(admissible_names)) return Role::Admissible;
    if (in(outcome_names)) return Role::Outcome;
    return Role::Unlabeled;
}

void RoleConfig::validate_against(const Schema& schema) const {
    std::unordered_set<std::string> assigned;
    auto check = [&](const std::vector<std::string>& names, const char* which) {
        for (const auto& n : names) {
            if (schema.index_of(n) < 0)
                throw ConfigError(std::string("role config (") + which +
                                  ") names unknown attribute: " + n);
            if (!assigned.insert(n).second)
                throw ConfigError("attribute assigned to more than one role set: " + n);
        }
    };
    check(protected_names, "protected");
    check(admissible_names, "admissible");
    check(outcome_names, "outcome");
    if (saturated) {
        for (const auto& a : schema.attributes)
            if (!assigned.count(a.name))
                throw ConfigError("saturated run but attribute '" + a.name +
                                  "' is unlabeled");
    }
}

RoleConfig RoleConfig::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad role config JSON: ") + e.what());
    }
    RoleConfig cfg;
    auto read_list = [&](const char* key, std::vector<std::string>& out) {
        if (!j.contains(key)) return;
        if (!j[key].is_array()) throw ConfigError(std::string(key) + " must be an array");
        for (const auto& v : j[key]) out.push_back(v.get<std::string>());
    };
    read_list("protected", cfg.protected_names);
    read_list("admissible", cfg.admissible_names);
    read_list("outcome", cfg.outcome_names);
    if (j.contains("saturated")) cfg.saturated = j["saturated"].get<bool>();
    return cfg;
}

RoleConfig RoleConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open role config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

namespace {

// One RFC-4180 record; handles quoted fields, doubled quotes, CRLF, and
// newlines inside quotes. Returns false at clean EOF.
bool read_record(std::istream& in, std::vector<std::string>& fields,
                 const std::string& origin, std::size_t& line_no) {
    fields.clear();
    int c = in.get();
    if (c == EOF) return false;
    std::string field;
    bool in_quotes = false;
    bool at_field_start = true;
    auto flush = [&]() {
        fields.push_back(field);
        field.clear();
        at_field_start = true;
    };
    while (true) {
        if (c == EOF) {
            if (in_quotes)
                throw ConfigError(origin + ": unterminated quote at line " +
                                  std::to_string(line_no));
            flush();
            return true;
        }
        char ch = static_cast<char>(c);
        if (in_quotes) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    in_quotes = false;
                }
            } else {
                if (ch == '\n') ++line_no;
                field.push_back(ch);
            }
        } else if (ch == '"' && at_field_start) {
            in_quotes = true;
            at_field_start = false;
        } else if (ch == ',') {
            flush();
        } else if (ch == '\r') {
            if (in.peek() == '\n') in.get();
            ++line_no;
            flush();
            return true;
        } else if (ch == '\n') {
            ++line_no;
            flush();
            return true;
        } else {
            field.push_back(ch);
            at_field_start = false;
        }
        c = in.get();
    }
}

}  // namespace

DiscreteTable load_csv_stream(std::istream& in, const RoleConfig& roles,
                              const std::string& origin) {
    std::size_t line_no = 1;
    std::vector<std::string> header;
    if (!read_record(in, header, origin, line_no))
        throw ConfigError(origin + ": missing header row");

    Schema schema;
    for (auto& name : header) {
        AttributeSpec spec;
        spec.name = name;
        spec.role = roles.role_of(name);
        schema.attributes.push_back(std::move(spec));
    }
    schema.saturated_declared = roles.saturated;
    {
        std::unordered_set<std::string> seen;
        for (const auto& a : schema.attributes)
            if (!seen.insert(a.name).second)
                throw ConfigError(origin + ": duplicate header column " + a.name);
    }
    roles.validate_against(schema);

    std::vector<std::unordered_map<std::string, int>> code_of(schema.size());
    DiscreteTable table(schema, 0);
    std::vector<std::string> fields;
    std::vector<int> codes(schema.size());
    while (read_record(in, fields, origin, line_no)) {
        if (fields.size() == 1 && fields[0].empty()) continue;  // trailing blank line
        if (fields.size() != schema.size())
            throw ConfigError(origin + ": ragged row near line " + std::to_string(line_no) +
                              " (got " + std::to_string(fields.size()) + " fields, want " +
                              std::to_string(schema.size()) + ")");
        for (std::size_t i = 0; i < fields.size(); ++i) {
            auto& dict = code_of[i];
            auto it = dict.find(fields[i]);
            if (it == dict.end()) {
                int code = static_cast<int>(dict.size());
                dict.emplace(fields[i], code);
                auto& spec = table.schema().attributes[i];
                spec.labels.push_back(fields[i]);
                spec.domain_size = code + 1;
                codes[i] = code;
            } else {
                codes[i] = it->second;
            }
        }
        table.append_row(codes);
    }
    if (table.n_rows() == 0) table.set_empty_input_flag(true);
    table.schema().validate(/*allow_empty_domains=*/table.n_rows() == 0);
    return table;
}

DiscreteTable load_csv(const std::string& path, const RoleConfig& roles) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open CSV: " + path);
    return load_csv_stream(in, roles, path);
}

namespace {

void write_field(std::ostream& out, const std::string& s) {
    const bool needs_quote =
        s.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quote) {
        out << s;
        return;
    }
    out << '"';
    for (char c : s) {
        if (c == '"') out << "\"\"";
        else out << c;
    }
    out << '"';
}

}  // namespace

void write_csv_stream(const DiscreteTable& table, std::ostream& out) {
    const auto& attrs = table.schema().attributes;
    for (std::size_t i = 0; i < attrs.size(); ++i) {
        if (i) out << ',';
        write_field(out, attrs[i].name);
    }
    out << '\n';
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        for (std::size_t i = 0; i < attrs.size(); ++i) {
            if (i) out << ',';
            write_field(out, attrs[i].label_for(table.cell(r, i)));
        }
        out << '\n';
    }
}

void write_csv(const DiscreteTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    write_csv_stream(table, out);
}

DiscreteTable discretize_single_value(const DiscreteTable& table) {
    return table;  // each coded value is already its own bucket
}

}  // namespace fairsynth
