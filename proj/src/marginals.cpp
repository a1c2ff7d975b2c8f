#include "fairsynth/marginals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <unordered_map>

namespace fairsynth {

double Marginal::total() const {
    return std::accumulate(values.begin(), values.end(), 0.0);
}

void Marginal::check_shape_matches(const Marginal& other) const {
    if (attrs != other.attrs || dims != other.dims || values.size() != other.values.size())
        throw ConfigError("marginal shape mismatch");
}

static void check_attr(const DiscreteTable& table, int i) {
    if (i < 0 || static_cast<std::size_t>(i) >= table.n_attrs())
        throw ConfigError("attribute index out of range: " + std::to_string(i));
}

Marginal one_way(const DiscreteTable& table, int i) {
    check_attr(table, i);
    Marginal m;
    m.attrs = {i};
    const int d = std::max(table.schema().attributes[i].domain_size, 0);
    m.dims = {d};
    m.values.assign(static_cast<std::size_t>(d), 0.0);
    for (std::size_t r = 0; r < table.n_rows(); ++r) m.values[table.cell(r, i)] += 1.0;
    return m;
}

Marginal two_way(const DiscreteTable& table, int i, int j) {
    check_attr(table, i);
    check_attr(table, j);
    if (i == j) throw ConfigError("two_way requires distinct attributes");
    Marginal m;
    m.attrs = {i, j};
    const int di = table.schema().attributes[i].domain_size;
    const int dj = table.schema().attributes[j].domain_size;
    m.dims = {di, dj};
    m.values.assign(static_cast<std::size_t>(di) * dj, 0.0);
    for (std::size_t r = 0; r < table.n_rows(); ++r)
        m.at2(table.cell(r, i), table.cell(r, j)) += 1.0;
    return m;
}

Marginal marginalize(const Marginal& joint, int keep) {
    if (joint.attrs.size() != 2) throw ConfigError("marginalize expects a 2-way marginal");
    if (keep != 0 && keep != 1) throw ConfigError("marginalize keep must be 0 or 1");
    Marginal m;
    m.attrs = {joint.attrs[keep]};
    m.dims = {joint.dims[keep]};
    m.kind = joint.kind;
    m.values.assign(static_cast<std::size_t>(joint.dims[keep]), 0.0);
    for (int a = 0; a < joint.dims[0]; ++a)
        for (int b = 0; b < joint.dims[1]; ++b)
            m.values[keep == 0 ? a : b] += joint.at2(a, b);
    return m;
}

double mutual_information(const Marginal& joint) {
    if (joint.attrs.size() != 2)
        throw ConfigError("mutual_information expects a 2-way marginal");
    const double n = joint.total();
    if (n <= 0.0) throw ConfigError("mutual_information on empty marginal");
    const Marginal mi = marginalize(joint, 0);
    const Marginal mj = marginalize(joint, 1);
    double bits = 0.0;
    for (int a = 0; a < joint.dims[0]; ++a) {
        if (mi.values[a] <= 0.0) continue;
        for (int b = 0; b < joint.dims[1]; ++b) {
            const double c = joint.at2(a, b);
            if (c <= 0.0) continue;
            const double p = c / n;
            const double pa = mi.values[a] / n;
            const double pb = mj.values[b] / n;
            bits += p * std::log2(p / (pa * pb));
        }
    }
    return std::max(bits, 0.0);
}

Marginal estimate_two_way_from_one_way(const Marginal& m_i, const Marginal& m_j,
                                       double n) {
    if (m_i.attrs.size() != 1 || m_j.attrs.size() != 1)
        throw ConfigError("estimate expects 1-way marginals");
    if (m_i.attrs[0] == m_j.attrs[0])
        throw ConfigError("estimate requires distinct attributes");
    if (n <= 0.0) throw ConfigError("estimate with n = 0");
    Marginal est;
    est.attrs = {m_i.attrs[0], m_j.attrs[0]};
    est.dims = {m_i.dims[0], m_j.dims[0]};
    est.values.assign(static_cast<std::size_t>(est.dims[0]) * est.dims[1], 0.0);
    for (int a = 0; a < est.dims[0]; ++a)
        for (int b = 0; b < est.dims[1]; ++b)
            est.at2(a, b) = m_i.values[a] * m_j.values[b] / n;
    return est;
}

double l1_score(const Marginal& real, const Marginal& estimate) {
    real.check_shape_matches(estimate);
    double s = 0.0;
    for (std::size_t k = 0; k < real.values.size(); ++k)
        s += std::fabs(real.values[k] - estimate.values[k]);
    return s;
}

double tvd(const Marginal& p, const Marginal& q) {
    if (p.values.size() != q.values.size()) throw ConfigError("tvd shape mismatch");
    const double sp = p.total();
    const double sq = q.total();
    if (sp <= 0.0 || sq <= 0.0) throw ConfigError("tvd on zero-sum marginal");
    double s = 0.0;
    for (std::size_t k = 0; k < p.values.size(); ++k)
        s += std::fabs(p.values[k] / sp - q.values[k] / sq);
    return 0.5 * s;
}

Marginal clip_renormalize(const Marginal& counts) {
    Marginal out = counts;
    out.kind = Marginal::Kind::Probabilities;
    double mass = 0.0;
    for (auto& v : out.values) {
        if (v < 0.0) v = 0.0;
        mass += v;
    }
    if (mass <= 0.0) {
        out.degenerate = true;
        const double u = out.values.empty() ? 0.0 : 1.0 / out.values.size();
        for (auto& v : out.values) v = u;
        return out;
    }
    for (auto& v : out.values) v /= mass;
    return out;
}

Marginal clip_rescale_counts(const Marginal& counts, double target_total) {
    Marginal out = counts;
    out.kind = Marginal::Kind::Counts;
    double mass = 0.0;
    for (auto& v : out.values) {
        if (v < 0.0) v = 0.0;
        mass += v;
    }
    if (mass <= 0.0) {
        out.degenerate = true;
        const double u = out.values.empty() ? 0.0 : target_total / out.values.size();
        for (auto& v : out.values) v = u;
        return out;
    }
    const double scale = target_total / mass;
    for (auto& v : out.values) v *= scale;
    return out;
}

double table_mutual_information(const DiscreteTable& table, int x, int y) {
    check_attr(table, x);
    check_attr(table, y);
    const double n = static_cast<double>(table.n_rows());
    if (n <= 0.0) throw ConfigError("table_mutual_information on empty table");
    std::unordered_map<std::uint64_t, double> joint;
    std::unordered_map<int, double> px, py;
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        const int a = table.cell(r, x);
        const int b = table.cell(r, y);
        joint[(static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b)] += 1.0;
        px[a] += 1.0;
        py[b] += 1.0;
    }
    double bits = 0.0;
    for (const auto& [key, c] : joint) {
        const int a = static_cast<int>(key >> 32);
        const int b = static_cast<int>(key & 0xffffffffu);
        const double p = c / n;
        bits += p * std::log2(c * n / (px[a] * py[b]));
    }
    return std::max(bits, 0.0);
}

double table_mutual_information_corrected(const DiscreteTable& table, int x, int y) {
    check_attr(table, x);
    check_attr(table, y);
    const double n = static_cast<double>(table.n_rows());
    if (n <= 0.0) throw ConfigError("table_mutual_information on empty table");
    std::unordered_map<std::uint64_t, double> joint;
    std::unordered_map<int, double> px, py;
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        const int a = table.cell(r, x);
        const int b = table.cell(r, y);
        joint[(static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b)] += 1.0;
        px[a] += 1.0;
        py[b] += 1.0;
    }
    double bits = 0.0;
    for (const auto& [key, c] : joint) {
        const int a = static_cast<int>(key >> 32);
        const int b = static_cast<int>(key & 0xffffffffu);
        bits += (c / n) * std::log2(c * n / (px[a] * py[b]));
    }
    const double correction = (static_cast<double>(joint.size()) - static_cast<double>(px.size()) -
                               static_cast<double>(py.size()) + 1.0) /
                              (2.0 * n * std::numbers::ln2);
    return std::max(bits - correction, 0.0);
}

double conditional_mutual_information(const DiscreteTable& table, int x, int y,
                                      std::span<const int> z,
                                      std::size_t min_cell_rows,
                                      double* excluded_mass) {
    check_attr(table, x);
    check_attr(table, y);
    for (int zi : z) check_attr(table, zi);
    if (table.n_rows() == 0) throw ConfigError("conditional MI on empty table");
    if (z.empty()) {
        if (excluded_mass) *excluded_mass = 0.0;
        return table_mutual_information(table, x, y);
    }
    // Group rows by the joint conditioning value.
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells;
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        std::uint64_t key = 1469598103934665603ull;
        for (int zi : z) {
            key ^= static_cast<std::uint64_t>(table.cell(r, zi)) + 0x9e3779b97f4a7c15ull;
            key *= 1099511628211ull;
        }
        cells[key].push_back(r);
    }
    double used = 0.0, excluded = 0.0, bits = 0.0;
    std::unordered_map<std::uint64_t, double> jc;
    std::unordered_map<int, double> pxc, pyc;
    for (const auto& [key, rows] : cells) {
        if (rows.size() < min_cell_rows) {
            excluded += static_cast<double>(rows.size());
            continue;
        }
        used += static_cast<double>(rows.size());
        jc.clear();
        pxc.clear();
        pyc.clear();
        const double nc = static_cast<double>(rows.size());
        for (std::size_t r : rows) {
            const int a = table.cell(r, x);
            const int b = table.cell(r, y);
            jc[(static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b)] += 1.0;
            pxc[a] += 1.0;
            pyc[b] += 1.0;
        }
        double cell_bits = 0.0;
        for (const auto& [k2, c] : jc) {
            const int a = static_cast<int>(k2 >> 32);
            const int b = static_cast<int>(k2 & 0xffffffffu);
            cell_bits += (c / nc) * std::log2(c * nc / (pxc[a] * pyc[b]));
        }
        bits += nc * std::max(cell_bits, 0.0);
    }
    const double n_total = used + excluded;
    if (excluded_mass) *excluded_mass = n_total > 0.0 ? excluded / n_total : 0.0;
    if (used <= 0.0) return 0.0;
    return bits / used;
}

}  // namespace fairsynth
