#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fairsynth/common.hpp"

namespace fairsynth {

struct AttributeSpec {
    std::string name;
    int domain_size = 0;
    Role role = Role::Unlabeled;
    // Decoded labels, indexed by cell code. Empty for synthetic schemas whose
    // values are plain integers 0..domain_size-1.
    std::vector<std::string> labels;

    std::string label_for(int code) const;
};

struct Schema {
    std::vector<AttributeSpec> attributes;
    bool saturated_declared = false;

    std::size_t size() const { return attributes.size(); }
    int index_of(const std::string& name) const;  // -1 if absent
    std::vector<Role> roles() const;
    std::vector<int> indices_with_role(Role r) const;
    void validate(bool allow_empty_domains = false) const;
};

// Integer-coded discrete table, row-major. Codes are assigned per attribute in
// first-appearance order, so loading the same file twice yields identical
// codes.
class DiscreteTable {
  public:
    DiscreteTable() = default;
    DiscreteTable(Schema schema, std::size_t n_rows);

    const Schema& schema() const { return schema_; }
    Schema& schema() { return schema_; }
    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_attrs() const { return schema_.size(); }

    int cell(std::size_t row, std::size_t attr) const {
        return cells_[row * schema_.size() + attr];
    }
    int& cell(std::size_t row, std::size_t attr) {
        return cells_[row * schema_.size() + attr];
    }

    void append_row(const std::vector<int>& codes);
    bool empty_input_flag() const { return empty_input_; }
    void set_empty_input_flag(bool v) { empty_input_ = v; }

  private:
    Schema schema_;
    std::vector<int> cells_;
    std::size_t n_rows_ = 0;
    bool empty_input_ = false;
};

struct RoleConfig {
    std::vector<std::string> protected_names;
    std::vector<std::string> admissible_names;
    std::vector<std::string> outcome_names;
    bool saturated = false;

    static RoleConfig from_json_file(const std::string& path);
    static RoleConfig from_json_text(const std::string& text);
    Role role_of(const std::string& attr_name) const;
    // Names here must exist in the header; disjointness is checked.
    void validate_against(const Schema& schema) const;
};

// RFC-4180 CSV: quoted fields, doubled quotes, CR/LF line ends. First row is
// the header. Every data row must have exactly the header's arity. Values are
// coded in first-appearance order; the empty string is an ordinary value and
// therefore missing cells become their own category.
DiscreteTable load_csv(const std::string& path, const RoleConfig& roles = {});
DiscreteTable load_csv_stream(std::istream& in, const RoleConfig& roles,
                              const std::string& origin);

void write_csv(const DiscreteTable& table, const std::string& path);
void write_csv_stream(const DiscreteTable& table, std::ostream& out);

// Single-value bucketing: every distinct coded value is already its own
// bucket, so this is the identity. Kept as a named pass so alternative
// bucketing strategies can slot in later.
DiscreteTable discretize_single_value(const DiscreteTable& table);

}  // namespace fairsynth
