#pragma once

#include <span>
#include <vector>

#include "fairsynth/dataset.hpp"

namespace fairsynth {

// Flat 1- or 2-way marginal. For two attributes the layout is row-major with
// the first attribute outer, second inner.
struct Marginal {
    enum class Kind { Counts, Probabilities };

    std::vector<int> attrs;   // 1 or 2 attribute indices
    std::vector<int> dims;    // matching domain sizes
    std::vector<double> values;
    Kind kind = Kind::Counts;
    bool degenerate = false;  // all-zero Probabilities marginal

    std::size_t length() const { return values.size(); }
    double total() const;
    double& at2(int a, int b) { return values[static_cast<std::size_t>(a) * dims[1] + b]; }
    double at2(int a, int b) const {
        return values[static_cast<std::size_t>(a) * dims[1] + b];
    }
    void check_shape_matches(const Marginal& other) const;
};

Marginal one_way(const DiscreteTable& table, int i);
Marginal two_way(const DiscreteTable& table, int i, int j);

// Collapse a 2-way marginal onto one of its attributes (0 = first, 1 = second).
Marginal marginalize(const Marginal& joint, int keep);

// MI of a 2-way joint, in bits. 0·log(0/x) terms contribute 0.
double mutual_information(const Marginal& joint);

// Independence/max-entropy estimate from 1-way marginals: values m_i[a]·m_j[b]/n.
Marginal estimate_two_way_from_one_way(const Marginal& m_i, const Marginal& m_j,
                                       double n);

double l1_score(const Marginal& real, const Marginal& estimate);

// Total variation distance on normalized copies.
double tvd(const Marginal& p, const Marginal& q);

// Clip negatives to zero and normalize to a probability vector. A marginal with
// no positive mass becomes uniform and is flagged degenerate.
Marginal clip_renormalize(const Marginal& counts);

// Clip negatives and rescale so the vector sums to target_total, kind Counts.
Marginal clip_rescale_counts(const Marginal& counts, double target_total);

// Plug-in MI estimate between two table columns, in bits, via sparse pair
// counting (usable on domains too large for dense joints).
double table_mutual_information(const DiscreteTable& table, int x, int y);

// Plug-in estimate minus the Miller-Madow bias term
// (K_xy - K_x - K_y + 1) / (2 n ln 2) over occupied cells. The raw plug-in
// overshoots by roughly that much whenever the joint support is a
// non-trivial fraction of the row count; the corrected form is the one to
// compare against analytic values.
double table_mutual_information_corrected(const DiscreteTable& table, int x, int y);

// Plug-in conditional MI I(x; y | z) in bits. Conditioning cells with fewer
// than min_cell_rows rows are excluded and the remaining mass renormalized;
// *excluded_mass (if given) receives the excluded row fraction.
double conditional_mutual_information(const DiscreteTable& table, int x, int y,
                                      std::span<const int> z,
                                      std::size_t min_cell_rows = 25,
                                      double* excluded_mass = nullptr);

}  // namespace fairsynth
