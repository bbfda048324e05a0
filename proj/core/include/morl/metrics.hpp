#pragma once

#include <cstdint>
#include <vector>

#include "morl/types.hpp"

namespace morl {

/// Maximal (non-dominated) subset. Duplicates collapse to the first occurrence;
/// survivors keep their input order. Empty input yields empty output.
std::vector<VectorReturn> pareto_filter(const std::vector<VectorReturn>& points);

/// Non-dominated front with a pinned reference point. Construction filters the
/// input; points at or below the reference contribute zero volume but are kept.
class ParetoFront {
  public:
    ParetoFront(std::vector<VectorReturn> points, VectorReturn reference_point);

    const std::vector<VectorReturn>& points() const { return points_; }
    const VectorReturn& reference_point() const { return reference_; }
    std::size_t dimension() const { return reference_.size(); }

  private:
    std::vector<VectorReturn> points_;
    VectorReturn reference_;
};

/// Exact Lebesgue measure of the union of boxes [r0, p]. 2-D sweep or 3-D
/// slicing; higher dimensions throw UnsupportedError (use hypervolume_mc).
double hypervolume(const ParetoFront& front);

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Monte-Carlo hypervolume estimate for any dimension, with standard error.
McEstimate hypervolume_mc(const ParetoFront& front, std::size_t n_samples, std::uint64_t seed);

/// Mean squared gap between adjacent front coordinates, per Definition-2 ordering:
/// sort each objective descending, sum squared adjacent differences over all
/// objectives, divide by |P|-1. |P| <= 1 yields 0 by convention.
double sparsity(const ParetoFront& front);

/// Same formula applied to an unfiltered point list (logged for transparency).
double sparsity_raw(const std::vector<VectorReturn>& points);

/// Mean of scalarize(pref, return) over evaluation rows. Emits a warning flag
/// (returned via *grid_warning when non-null) if the preferences do not form an
/// equidistant 2-objective grid; the computation proceeds either way.
double expected_utility(const std::vector<std::pair<Preference, VectorReturn>>& evals,
                        bool* grid_warning = nullptr);

} // namespace morl
